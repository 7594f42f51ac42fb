#pragma once

#include <filesystem>
#include <string>

#include "irts/campaign.hpp"

namespace irts::io {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Provenance written next to every result set.
struct RunManifest {
  std::string config_digest;  // SHA-256 of the config text, hex
  std::string config_source;  // path, or "defaults"
  std::uint64_t seed = 0;
  std::vector<sim::Estimator> estimators;
  int iterations = 0;
  int trials = 0;
  std::string version = kArtifactVersion;
};

/// Lower-case hex SHA-256. Line endings are normalized to '\n' first so the
/// digest does not depend on the platform the file was written on.
std::string sha256_hex(const std::string& text);

RunManifest make_manifest(const sim::CampaignResult& result, const std::string& config_text,
                          const std::string& config_source);

/// Files written into `out_dir`:
///   rmse_summary.csv   estimator,state,iteration,mean,p2.5,p97.5
///   filter_summary.csv estimator,state,mean,p2.5,p97.5 (forward filters)
///   per_trial.csv      trial,estimator,iteration,status,attitude,position,bias_gyro,bias_vel
///                      (iteration 0 is the forward filter of a smoother)
///   error_series.csv   estimator,t,attitude,position,bias_gyro,bias_vel
///                      (mean per-step error after the last iteration)
///   manifest.txt       key: value provenance, deterministic
/// All rows are in a fixed order. Throws IoError.
void export_results(const sim::CampaignResult& result, const RunManifest& manifest,
                    const std::filesystem::path& out_dir);

/// Wall-clock metadata, kept out of manifest.txt so the latter stays
/// reproducible.
void write_timing(const std::filesystem::path& out_dir, double seconds);

}  // namespace irts::io
