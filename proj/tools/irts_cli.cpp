// Command-line front end: campaigns, single-dataset smoothing, fixture export
// and the oracle suites.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "irts/batch_gn.hpp"
#include "irts/campaign.hpp"
#include "irts/config.hpp"
#include "irts/dataset.hpp"
#include "irts/errors.hpp"
#include "irts/results.hpp"
#include "irts/smoother.hpp"
#include "irts/verify.hpp"

namespace fs = std::filesystem;
using namespace irts;

namespace {

enum Exit { kOk = 0, kFailed = 1, kConfig = 2, kData = 3, kNumerical = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> iterations;
  std::optional<int> threads;
  std::string estimators;
  std::string out;
};

io::RunConfig load(const Common& c) {
  io::RunConfig cfg;
  if (!c.config.empty()) {
    cfg = io::parse_config(c.config);
  } else {
    cfg.initial_error = sim::InitialErrorSpec::low_error();
  }
  if (c.seed) cfg.scenario.seed = cfg.campaign.seed = *c.seed;
  if (c.trials) cfg.campaign.trials = *c.trials;
  if (c.iterations) cfg.campaign.iterations = *c.iterations;
  if (c.threads) cfg.campaign.threads = *c.threads;
  if (!c.estimators.empty()) cfg.campaign.estimators = sim::parse_estimators(c.estimators);
  cfg.campaign.validate();
  return cfg;
}

int simulate(const Common& c) {
  const io::RunConfig cfg = load(c);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = sim::run_campaign(cfg.scenario, cfg.initial_error, cfg.campaign);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path out = c.out.empty() ? fs::path("results") : fs::path(c.out);
  io::export_results(result, io::make_manifest(result, cfg.text, c.config.empty() ? "defaults" : c.config),
                     out);
  io::write_timing(out, seconds);

  std::printf("%-5s %-10s %5s %12s %12s %12s\n", "est", "state", "iter", "mean", "p2.5", "p97.5");
  for (const auto& st : result.stats) {
    for (int s = 0; s < 4; ++s) {
      for (std::size_t it = 0; it < st.per_iteration.size(); ++it) {
        const auto& v = st.per_iteration[it][static_cast<std::size_t>(s)];
        std::printf("%-5s %-10s %5zu %12.6g %12.6g %12.6g\n", sim::to_string(st.estimator),
                    sim::kStateNames[s], it + 1, v.mean, v.p025, v.p975);
      }
    }
    if (st.failures > 0) {
      std::printf("%s: %zu of %d trials failed\n", sim::to_string(st.estimator), st.failures,
                  cfg.campaign.trials);
    }
  }
  std::printf("wrote %s (%.1f s)\n", out.string().c_str(), seconds);
  return kOk;
}

int export_fixture(const Common& c) {
  const io::RunConfig cfg = load(c);
  const sim::Truth truth = sim::synthesize_truth(cfg.scenario);
  const sim::TrialData trial = sim::make_trial(cfg.scenario, truth, cfg.initial_error, cfg.campaign, 0);
  io::Dataset data;
  data.intero = trial.intero;
  data.extero = trial.extero;
  data.map = trial.map;
  data.truth = io::TruthSeries{truth.t, trial.truth};
  const fs::path out = c.out.empty() ? fs::path("fixture") : fs::path(c.out);
  io::export_dataset(data, out);
  std::printf("wrote %zu interoceptive samples and %zu measurements to %s\n", data.intero.size(),
              data.extero.size(), out.string().c_str());
  return kOk;
}

int smooth(const Common& c, const std::string& dataset) {
  const io::RunConfig cfg = load(c);
  const io::Dataset data = io::ingest_dataset(dataset);
  for (const auto& w : data.warnings) {
    std::fprintf(stderr, "warning: %s: gap from t=%.6f to t=%.6f (nominal period %.6f)\n",
                 w.file.c_str(), w.t_before, w.t_after, w.nominal);
  }
  std::vector<double> t;
  for (const auto& s : data.intero) t.push_back(s.t);
  std::optional<std::vector<lie::GroupElement>> truth;
  if (data.truth) {
    if (data.truth->t != t) throw LengthMismatch("truth.csv timestamps differ from intero.csv");
    truth = data.truth->states;
  }
  // Start from the first truth state offset by the configured error mean; without truth,
  // from the configured pose with zero biases.
  const lie::GroupElement origin =
      truth ? truth->front()
            : lie::GroupElement(lie::exp_so3(cfg.init_rotvec), cfg.init_position);
  const Vec12 offset = truth ? cfg.initial_error.mean : Vec12::Zero();

  const fs::path out = c.out.empty() ? fs::path("smoothed") : fs::path(c.out);
  fs::create_directories(out);
  std::ofstream rmse_out(out / "rmse.csv", std::ios::binary);
  rmse_out << "estimator,iteration,attitude,position,bias_gyro,bias_vel\n";

  const auto aligned = est::align_measurements(data.intero, data.extero);
  if (aligned.dropped > 0) {
    std::fprintf(stderr, "warning: %zu measurements fall between interoceptive samples and were dropped\n",
                 aligned.dropped);
  }
  for (sim::Estimator e : cfg.campaign.estimators) {
    const auto prior = sim::initial_belief(origin, offset, cfg.initial_error.covariance, sim::convention_of(e));
    std::vector<std::vector<lie::GroupElement>> iterates;
    if (sim::is_smoother(e)) {
      const auto flavor = e == sim::Estimator::IRTS ? est::SmootherFlavor::LIRTS : est::SmootherFlavor::MRTS;
      iterates = est::run_smoother(prior, data.intero, data.extero, data.map, cfg.scenario.noise, flavor,
                                   cfg.campaign.iterations)
                     .smoothed_per_iteration;
    } else {
      const auto flavor = e == sim::Estimator::IGN ? batch::GnFlavor::IGN : batch::GnFlavor::MGN;
      batch::BatchProblem problem{prior, data.intero, data.extero, data.map, cfg.scenario.noise};
      auto sol = batch::solve(problem, flavor, cfg.campaign.iterations);
      iterates.assign(sol.snapshots.begin() + 1, sol.snapshots.end());
    }
    io::write_states_csv(out / (std::string(sim::to_string(e)) + "_states.csv"),
                         {t, iterates.back()});
    if (truth) {
      for (std::size_t it = 0; it < iterates.size(); ++it) {
        const auto r = sim::rmse(iterates[it], *truth);
        rmse_out << sim::to_string(e) << ',' << it + 1;
        for (int s = 0; s < 4; ++s) rmse_out << ',' << io::format_double(r[s]);
        rmse_out << '\n';
        std::printf("%-5s iter %zu  attitude %.6g rad  position %.6g m  bias_gyro %.6g  bias_vel %.6g\n",
                    sim::to_string(e), it + 1, r.attitude, r.position, r.bias_gyro, r.bias_vel);
      }
    }
  }
  std::printf("wrote %s\n", out.string().c_str());
  return kOk;
}

int verify_all(const Common& c) {
  bool ok = true;
  for (const auto& r : verify::run_all(c.seed.value_or(1))) {
    std::printf("%s %-20s %s (%.2f s)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(),
                r.seconds);
    ok = ok && r.passed;
  }
  return ok ? kOk : kFailed;
}

void add_common(CLI::App* app, Common& c, bool campaign_flags) {
  app->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "random seed (overrides the config)");
  if (campaign_flags) {
    app->add_option("--trials", c.trials, "Monte-Carlo trials");
    app->add_option("--threads", c.threads, "worker threads (0 = all cores)");
  }
  app->add_option("--iterations", c.iterations, "smoother sweeps / Gauss-Newton steps");
  app->add_option("--estimators", c.estimators, "comma-separated subset of irts,mrts,ign,mgn");
  app->add_option("--out", c.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invariant and multiplicative RTS smoothers with batch Gauss-Newton baselines"};
  app.require_subcommand(1);

  Common sim_opts, smooth_opts, fixture_opts, verify_opts;
  std::string dataset;

  auto* sim_cmd = app.add_subcommand("simulate", "run a Monte-Carlo campaign");
  add_common(sim_cmd, sim_opts, true);
  auto* smooth_cmd = app.add_subcommand("smooth", "smooth an ingested dataset");
  add_common(smooth_cmd, smooth_opts, false);
  smooth_cmd->add_option("dataset", dataset, "dataset directory")->required()->check(CLI::ExistingDirectory);
  auto* fixture_cmd = app.add_subcommand("export-fixture", "write one simulated trial as CSV");
  add_common(fixture_cmd, fixture_opts, false);
  auto* verify_cmd = app.add_subcommand("verify", "run the oracle and property suites");
  verify_cmd->add_option("--seed", verify_opts.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*sim_cmd) return simulate(sim_opts);
    if (*smooth_cmd) return smooth(smooth_opts, dataset);
    if (*fixture_cmd) return export_fixture(fixture_opts);
    if (*verify_cmd) return verify_all(verify_opts);
  } catch (const ConfigParse& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kData;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kData;
  }
  return kOk;
}
