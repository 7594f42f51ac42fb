#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "irts/campaign.hpp"

namespace irts::io {

/// Everything a run needs, as read from a key = value file.
///
/// Syntax: one `key = value` per line, `#` starts a comment, blank lines are
/// ignored. Scalars accept products and quotients of numbers and `pi`
/// (e.g. `pi/12`, `2*pi/3`). Vectors are three comma-separated scalars.
/// Unknown and repeated keys are errors.
struct RunConfig {
  sim::ScenarioConfig scenario = sim::ScenarioConfig::defaults();
  sim::InitialErrorSpec initial_error;
  sim::CampaignOptions campaign;
  /// Initial pose for `smooth` when the dataset carries no truth.
  Vec3 init_rotvec = Vec3::Zero();
  Vec3 init_position = Vec3::Zero();
  /// Text the configuration was parsed from (digested into the manifest).
  std::string text;
};

/// Keys that must be present in every configuration file.
const std::vector<std::string>& required_keys();

/// Throws ConfigParse(line, key, reason).
RunConfig parse_config_text(const std::string& text);
/// Throws ConfigParse (line 0) if the file cannot be read.
RunConfig parse_config(const std::filesystem::path& path);

/// Evaluates a scalar expression such as `pi/12` or `-0.5`. Returns nullopt
/// on malformed input.
std::optional<double> parse_scalar(const std::string& text);

}  // namespace irts::io
