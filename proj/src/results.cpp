#include "irts/results.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "irts/dataset.hpp"
#include "irts/errors.hpp"

namespace irts::io {

namespace fs = std::filesystem;
using sim::Estimator;
using sim::kStateNames;

std::string sha256_hex(const std::string& text) {
  std::string normalized;
  normalized.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') continue;
    normalized += text[i];
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(normalized.data(), normalized.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return out.str();
}

RunManifest make_manifest(const sim::CampaignResult& result, const std::string& config_text,
                          const std::string& config_source) {
  RunManifest m;
  m.config_digest = sha256_hex(config_text);
  m.config_source = config_source;
  m.seed = result.options.seed;
  m.estimators = result.options.estimators;
  m.iterations = result.options.iterations;
  m.trials = result.options.trials;
  return m;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw IoError("error writing " + path.string());
}

void summary_fields(std::ostream& out, const sim::Summary& s) {
  out << format_double(s.mean) << ',' << format_double(s.p025) << ',' << format_double(s.p975);
}

}  // namespace

void export_results(const sim::CampaignResult& result, const RunManifest& manifest,
                    const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  {
    const auto path = out_dir / "rmse_summary.csv";
    auto out = open_out(path);
    out << "estimator,state,iteration,mean,p2.5,p97.5\n";
    for (const auto& st : result.stats) {
      for (int state = 0; state < 4; ++state) {
        for (std::size_t it = 0; it < st.per_iteration.size(); ++it) {
          out << sim::to_string(st.estimator) << ',' << kStateNames[state] << ',' << it + 1 << ',';
          summary_fields(out, st.per_iteration[it][static_cast<std::size_t>(state)]);
          out << '\n';
        }
      }
    }
    close(out, path);
  }
  {
    const auto path = out_dir / "filter_summary.csv";
    auto out = open_out(path);
    out << "estimator,state,mean,p2.5,p97.5\n";
    for (const auto& st : result.stats) {
      if (!st.filter) continue;
      for (int state = 0; state < 4; ++state) {
        out << sim::to_string(st.estimator) << ',' << kStateNames[state] << ',';
        summary_fields(out, (*st.filter)[static_cast<std::size_t>(state)]);
        out << '\n';
      }
    }
    close(out, path);
  }
  {
    const auto path = out_dir / "per_trial.csv";
    auto out = open_out(path);
    out << "trial,estimator,iteration,status,attitude,position,bias_gyro,bias_vel\n";
    for (const auto& tr : result.trials) {
      for (std::size_t s = 0; s < tr.runs.size(); ++s) {
        const auto& run = tr.runs[s];
        const char* name = sim::to_string(result.options.estimators[s]);
        if (!run.ok) {
          out << tr.trial << ',' << name << ",,failed,,,,\n";
          continue;
        }
        auto row = [&](std::size_t it, const sim::StateRmse& r) {
          out << tr.trial << ',' << name << ',' << it << ",ok";
          for (int state = 0; state < 4; ++state) out << ',' << format_double(r[state]);
          out << '\n';
        };
        if (run.filter) row(0, *run.filter);
        for (std::size_t it = 0; it < run.per_iteration.size(); ++it) row(it + 1, run.per_iteration[it]);
      }
    }
    close(out, path);
  }
  {
    const auto path = out_dir / "error_series.csv";
    auto out = open_out(path);
    out << "estimator,t,attitude,position,bias_gyro,bias_vel\n";
    for (std::size_t s = 0; s < result.options.estimators.size(); ++s) {
      std::vector<const sim::StateErrors*> ok;
      for (const auto& tr : result.trials) {
        if (tr.runs[s].ok) ok.push_back(&tr.runs[s].final_errors);
      }
      if (ok.empty()) continue;
      const char* name = sim::to_string(result.options.estimators[s]);
      for (std::size_t k = 0; k < result.times.size(); ++k) {
        double sum[4] = {0, 0, 0, 0};
        for (const auto* e : ok) {
          sum[0] += e->attitude[k];
          sum[1] += e->position[k];
          sum[2] += e->bias_gyro[k];
          sum[3] += e->bias_vel[k];
        }
        out << name << ',' << format_double(result.times[k]);
        for (double v : sum) out << ',' << format_double(v / static_cast<double>(ok.size()));
        out << '\n';
      }
    }
    close(out, path);
  }
  {
    const auto path = out_dir / "manifest.txt";
    auto out = open_out(path);
    out << "artifact_version: " << manifest.version << '\n';
    out << "config_source: " << manifest.config_source << '\n';
    out << "config_sha256: " << manifest.config_digest << '\n';
    out << "seed: " << manifest.seed << '\n';
    out << "estimators: ";
    for (std::size_t i = 0; i < manifest.estimators.size(); ++i) {
      out << (i ? "," : "") << sim::to_string(manifest.estimators[i]);
    }
    out << '\n';
    out << "iterations: " << manifest.iterations << '\n';
    out << "trials: " << manifest.trials << '\n';
    for (const auto& st : result.stats) {
      out << "failures_" << sim::to_string(st.estimator) << ": " << st.failures << '\n';
    }
    for (const auto& tr : result.trials) {
      for (std::size_t s = 0; s < tr.runs.size(); ++s) {
        if (tr.runs[s].ok) continue;
        out << "failure: trial " << tr.trial << ' ' << sim::to_string(result.options.estimators[s])
            << ": " << tr.runs[s].failure << '\n';
      }
    }
    close(out, path);
  }
}

void write_timing(const fs::path& out_dir, double seconds) {
  const auto path = out_dir / "timing.txt";
  auto out = open_out(path);
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  out << "wall_clock_seconds: " << format_double(seconds) << '\n';
  out << "finished_utc: " << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ") << '\n';
  close(out, path);
}

}  // namespace irts::io
