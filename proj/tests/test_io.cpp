#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "irts/config.hpp"
#include "irts/dataset.hpp"
#include "irts/errors.hpp"
#include "irts/results.hpp"

using namespace irts;
using namespace irts::io;
namespace fs = std::filesystem;

namespace {

const fs::path kFixture = fs::path(IRTS_FIXTURE_DIR) / "two_second";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("irts_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(IRTS_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string message_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigParse& e) {
    return e.what();
  }
  return "";
}

const char* kMinimal =
    "duration = 2\nintero_rate = 100\ngps_rate = 10\nlandmark_rate = 15\n"
    "m_phi = 0\nm_r = 0\nm_beta1 = 0\nm_beta2 = 0\n"
    "sigma_phi = 0.1\nsigma_r = 0.1\nsigma_beta1 = 0.01\nsigma_beta2 = 0.01\n";

sim::CampaignResult small_campaign(int trials, int iterations) {
  sim::ScenarioConfig c = sim::ScenarioConfig::defaults();
  c.duration = 1.0;
  sim::CampaignOptions o;
  o.trials = trials;
  o.iterations = iterations;
  o.threads = 2;
  return sim::run_campaign(c, sim::InitialErrorSpec::low_error(), o);
}

}  // namespace

TEST(Config, LowErrorPreset) {
  const RunConfig cfg = parse_config(fs::path(IRTS_CONFIG_DIR) / "low_error.cfg");
  const auto expected = sim::InitialErrorSpec::low_error();
  EXPECT_LT((cfg.initial_error.mean - expected.mean).norm(), 1e-15);
  EXPECT_LT((cfg.initial_error.covariance - expected.covariance).norm(), 1e-15);
  EXPECT_EQ(cfg.scenario.duration, 20.0);
  EXPECT_EQ(cfg.scenario.intero_rate, 100.0);
  EXPECT_EQ(cfg.scenario.gps_rate, 10.0);
  EXPECT_EQ(cfg.scenario.landmark_rate, 15.0);
  EXPECT_EQ(cfg.scenario.noise.R_gps, Mat3(0.25 * Mat3::Identity()));
  EXPECT_EQ(cfg.campaign.trials, 50);
}

TEST(Config, HighErrorPreset) {
  const RunConfig cfg = parse_config(fs::path(IRTS_CONFIG_DIR) / "high_error.cfg");
  EXPECT_LT((cfg.initial_error.mean - sim::InitialErrorSpec::high_error().mean).norm(), 1e-15);
  EXPECT_EQ(cfg.campaign.iterations, 5);
  EXPECT_EQ(cfg.campaign.estimators.size(), 4u);
}

TEST(Config, EmptyFileListsMissingKeys) {
  const std::string msg = message_of("");
  for (const auto& key : required_keys()) EXPECT_NE(msg.find(key), std::string::npos) << key;
  EXPECT_NE(msg.find("missing required keys"), std::string::npos);
}

TEST(Config, NegativeRate) {
  std::string text = kMinimal;
  text.replace(text.find("intero_rate = 100"), 17, "intero_rate = -100");
  try {
    parse_config_text(text);
    FAIL() << "accepted a negative rate";
  } catch (const ConfigParse& e) {
    EXPECT_NE(std::string(e.what()).find("intero_rate must be > 0"), std::string::npos);
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.key(), "intero_rate");
  }
}

TEST(Config, UnknownAndRepeatedKeys) {
  const std::string unknown = message_of(std::string(kMinimal) + "gps_sigmaa = 1\n");
  EXPECT_NE(unknown.find("unknown key"), std::string::npos);
  EXPECT_NE(unknown.find(":13"), std::string::npos);
  EXPECT_NE(message_of(std::string(kMinimal) + "duration = 3\n").find("repeated key"),
            std::string::npos);
  EXPECT_NE(message_of(std::string(kMinimal) + "bias_vel0 = 1, 2\n").find("3 comma-separated"),
            std::string::npos);
}

TEST(Config, ScalarExpressions) {
  EXPECT_DOUBLE_EQ(*parse_scalar("pi/12"), std::numbers::pi / 12);
  EXPECT_DOUBLE_EQ(*parse_scalar("2*pi/3"), 2 * std::numbers::pi / 3);
  EXPECT_DOUBLE_EQ(*parse_scalar("-0.5"), -0.5);
  EXPECT_FALSE(parse_scalar("pie").has_value());
  EXPECT_FALSE(parse_scalar("1/0").has_value());
}

TEST(Dataset, FixtureRowCounts) {
  const Dataset d = ingest_dataset(kFixture);
  EXPECT_EQ(d.intero.size(), 201u);
  EXPECT_EQ(d.map.size(), 20);
  ASSERT_TRUE(d.truth.has_value());
  EXPECT_EQ(d.truth->states.size(), 201u);
  const auto gps = std::count_if(d.extero.begin(), d.extero.end(), [](const auto& m) {
    return m.kind == models::MeasurementKind::GpsLeftInvariant;
  });
  EXPECT_EQ(gps, 20);
  EXPECT_EQ(d.extero.size(), 20u + 600u);
  EXPECT_TRUE(d.warnings.empty());
}

TEST(Dataset, ShuffledRowsGiveIdenticalStreams) {
  const fs::path dir = scratch("shuffled");
  for (const auto& entry : fs::directory_iterator(kFixture)) {
    std::istringstream in(slurp(entry.path()));
    std::string header, line;
    std::getline(in, header);
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    std::shuffle(rows.begin(), rows.end(), std::mt19937_64(5));
    std::string out = header + "\r\n";  // CRLF is accepted too
    for (const auto& r : rows) out += r + "\n";
    write(dir / entry.path().filename(), out);
  }
  const Dataset a = ingest_dataset(kFixture);
  const Dataset b = ingest_dataset(dir);
  ASSERT_EQ(a.intero.size(), b.intero.size());
  for (std::size_t i = 0; i < a.intero.size(); ++i) {
    EXPECT_EQ(a.intero[i].t, b.intero[i].t);
    EXPECT_EQ(a.intero[i].u1, b.intero[i].u1);
    EXPECT_EQ(a.intero[i].u2, b.intero[i].u2);
  }
  EXPECT_EQ(a.extero, b.extero);
  EXPECT_EQ(a.map.positions, b.map.positions);
  EXPECT_EQ(a.truth->states, b.truth->states);
}

TEST(Dataset, MalformedRowNamesFileAndRow) {
  const fs::path dir = scratch("malformed");
  fs::copy(kFixture, dir, fs::copy_options::overwrite_existing | fs::copy_options::recursive);
  std::string gps = slurp(dir / "gps.csv");
  const auto third = gps.find('\n', gps.find('\n', gps.find('\n') + 1) + 1);  // end of row 3
  gps.insert(third, ",7");
  write(dir / "gps.csv", gps);
  try {
    ingest_dataset(dir);
    FAIL() << "accepted a malformed row";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.file(), "gps.csv");
    EXPECT_EQ(e.row(), 3u);
  }

  write(dir / "gps.csv", "t,y1,y2,y3\n");
  EXPECT_THROW(ingest_dataset(dir), SchemaError);
  write(dir / "gps.csv", std::string(kGpsHeader) + "\n0.1,1,abc,3\n");
  EXPECT_THROW(ingest_dataset(dir), SchemaError);
  fs::remove(dir / "intero.csv");
  EXPECT_THROW(ingest_dataset(dir), IoError);
}

TEST(Dataset, UnknownLandmarkAndDuplicateTimes) {
  const fs::path dir = scratch("ids");
  fs::copy(kFixture, dir, fs::copy_options::overwrite_existing | fs::copy_options::recursive);
  write(dir / "landmarks_obs.csv", std::string(kLandmarkObsHeader) + "\n0.1,20,1,2,3\n");
  EXPECT_THROW(ingest_dataset(dir), SchemaError);
  fs::copy(kFixture / "landmarks_obs.csv", dir / "landmarks_obs.csv",
           fs::copy_options::overwrite_existing);
  write(dir / "intero.csv", slurp(kFixture / "intero.csv") + "0,0,0,0,0,0,0\n");
  EXPECT_THROW(ingest_dataset(dir), SchemaError);
}

TEST(Dataset, GapWarning) {
  const fs::path dir = scratch("gap");
  std::string text = std::string(kInteroHeader) + "\n";
  for (int k = 0; k < 20; ++k) {
    const double t = k < 10 ? 0.01 * k : 0.01 * k + 1.0;
    text += format_double(t) + ",0,0,0,0,0,0\n";
  }
  write(dir / "intero.csv", text);
  const Dataset d = ingest_dataset(dir);
  ASSERT_EQ(d.warnings.size(), 1u);
  EXPECT_EQ(d.warnings[0].file, "intero.csv");
  EXPECT_NEAR(d.warnings[0].t_before, 0.09, 1e-12);
}

TEST(Dataset, RoundTripIsBitwise) {
  const Dataset a = ingest_dataset(kFixture);
  const fs::path dir = scratch("roundtrip");
  export_dataset(a, dir);
  for (const auto& entry : fs::directory_iterator(kFixture)) {
    if (entry.path().filename() == "truth.csv") continue;
    EXPECT_EQ(slurp(entry.path()), slurp(dir / entry.path().filename())) << entry.path();
  }
  const Dataset b = ingest_dataset(dir);
  EXPECT_EQ(a.intero, b.intero);
  EXPECT_EQ(a.extero, b.extero);
  EXPECT_EQ(a.map.positions, b.map.positions);
  // Truth attitude passes through a quaternion, which is not bit-preserving.
  ASSERT_EQ(a.truth->t, b.truth->t);
  for (std::size_t k = 0; k < a.truth->states.size(); ++k) {
    const GroupElement& x = a.truth->states[k];
    const GroupElement& y = b.truth->states[k];
    EXPECT_EQ(x.position(), y.position());
    EXPECT_EQ(x.bias_gyro(), y.bias_gyro());
    EXPECT_EQ(x.bias_vel(), y.bias_vel());
    EXPECT_LT((x.attitude() - y.attitude()).norm(), 1e-15);
  }
}

TEST(Dataset, QuaternionConversion) {
  const Mat3 C = lie::exp_so3(Vec3(0.3, -2.0, 1.0));
  const Eigen::Vector4d q = quaternion_of(C);
  EXPECT_GE(q[0], 0.0);
  EXPECT_LT((rotation_of(q) - C).norm(), 1e-14);
  EXPECT_THROW(rotation_of(Eigen::Vector4d(1.0, 0.01, 0, 0)), DataError);
}

TEST(Dataset, FormatRoundTrip) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) / (1 + i);
    ASSERT_EQ(std::stod(format_double(x)), x);
  }
}

TEST(Results, SingleTrialPercentilesEqualMean) {
  const auto result = small_campaign(1, 1);
  for (const auto& st : result.stats) {
    for (const auto& s : st.per_iteration[0]) {
      EXPECT_EQ(s.p025, s.mean);
      EXPECT_EQ(s.p975, s.mean);
    }
  }
}

TEST(Results, SummaryCardinalityAndDeterminism) {
  const auto result = small_campaign(3, 3);
  const auto manifest = make_manifest(result, "seed = 1\n", "inline");
  const fs::path a = scratch("results_a"), b = scratch("results_b");
  export_results(result, manifest, a);
  export_results(result, manifest, b);
  std::istringstream summary(slurp(a / "rmse_summary.csv"));
  std::string line;
  std::getline(summary, line);
  EXPECT_EQ(line, "estimator,state,iteration,mean,p2.5,p97.5");
  int rows = 0;
  while (std::getline(summary, line)) ++rows;
  EXPECT_EQ(rows, 2 * 4 * 3);
  for (const char* f : {"rmse_summary.csv", "filter_summary.csv", "per_trial.csv", "error_series.csv",
                        "manifest.txt"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const std::string m = slurp(a / "manifest.txt");
  EXPECT_NE(m.find("config_sha256: " + sha256_hex("seed = 1\n")), std::string::npos);
  EXPECT_NE(m.find("estimators: irts,mrts"), std::string::npos);
}

TEST(Results, DigestIgnoresLineEndings) {
  EXPECT_EQ(sha256_hex("a = 1\r\nb = 2\r\n"), sha256_hex("a = 1\nb = 2\n"));
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  write(dir / "bad.cfg", "duration = 2\n");
  EXPECT_EQ(run_cli("simulate --config " + (dir / "bad.cfg").string()), 2);
  EXPECT_EQ(run_cli("simulate --bogus-flag"), 2);
  EXPECT_EQ(run_cli("smooth " + dir.string() + " --out " + (dir / "o").string()), 3);
  EXPECT_EQ(run_cli("smooth " + kFixture.string() + " --iterations 1 --out " + (dir / "s").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "s" / "irts_states.csv"));
  EXPECT_TRUE(fs::exists(dir / "s" / "rmse.csv"));
}

TEST(Cli, FixtureIsReproducible) {
  const fs::path dir = scratch("fixture");
  ASSERT_EQ(run_cli("export-fixture --config " + (fs::path(IRTS_FIXTURE_DIR) / "two_second.cfg").string() +
                    " --out " + dir.string()),
            0);
  for (const auto& entry : fs::directory_iterator(kFixture)) {
    EXPECT_EQ(slurp(entry.path()), slurp(dir / entry.path().filename())) << entry.path();
  }
}

TEST(Cli, SimulateWritesResults) {
  const fs::path dir = scratch("simulate");
  write(dir / "run.cfg", std::string(kMinimal) + "trials = 2\n");
  ASSERT_EQ(run_cli("simulate --config " + (dir / "run.cfg").string() + " --estimators irts,ign --out " +
                    (dir / "out").string()),
            0);
  for (const char* f : {"rmse_summary.csv", "per_trial.csv", "manifest.txt", "timing.txt"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
}
