#include "irts/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "irts/errors.hpp"

namespace irts::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_factor(std::string f) {
  f = trim(f);
  double sign = 1.0;
  while (!f.empty() && (f.front() == '-' || f.front() == '+')) {
    if (f.front() == '-') sign = -sign;
    f = trim(f.substr(1));
  }
  if (f.empty()) return std::nullopt;
  if (f == "pi") return sign * std::numbers::pi;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) return std::nullopt;
  return sign * v;
}

template <typename Int>
std::optional<Int> parse_int(const std::string& text) {
  const std::string s = trim(text);
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct Parser {
  RunConfig cfg;
  // Initial error blocks, assembled once all keys are read.
  double m[4] = {0, 0, 0, 0};
  double s[4] = {0, 0, 0, 0};
  std::map<std::string, std::size_t> seen;  // key -> line

  using Setter = std::function<void(const std::string&)>;
  std::map<std::string, Setter> setters;

  [[noreturn]] static void bad(const std::string& reason) { throw std::invalid_argument(reason); }

  static double scalar(const std::string& v) {
    const auto x = parse_scalar(v);
    if (!x) bad("expected a number, got '" + trim(v) + "'");
    return *x;
  }
  static double non_negative(const std::string& v) {
    const double x = scalar(v);
    if (x < 0.0) bad("must be >= 0");
    return x;
  }
  static Vec3 vec3(const std::string& v) {
    std::stringstream ss(v);
    std::string item;
    Vec3 out;
    int i = 0;
    while (std::getline(ss, item, ',')) {
      if (i == 3) bad("expected 3 comma-separated values");
      out[i++] = scalar(item);
    }
    if (i != 3) bad("expected 3 comma-separated values");
    return out;
  }
  static bool boolean(const std::string& v) {
    const std::string t = trim(v);
    if (t == "true" || t == "1") return true;
    if (t == "false" || t == "0") return false;
    bad("expected true or false");
  }
  template <typename Int>
  static Int integer(const std::string& v) {
    const auto x = parse_int<Int>(v);
    if (!x) bad("expected an integer, got '" + trim(v) + "'");
    return *x;
  }

  Parser() {
    auto& sc = cfg.scenario;
    auto& tp = sc.profile;
    auto& n = sc.noise;
    setters = {
        {"duration", [&](auto& v) { sc.duration = scalar(v); }},
        {"intero_rate", [&](auto& v) { sc.intero_rate = scalar(v); }},
        {"gps_rate", [&](auto& v) { sc.gps_rate = scalar(v); }},
        {"landmark_rate", [&](auto& v) { sc.landmark_rate = scalar(v); }},
        {"landmark_count", [&](auto& v) { sc.landmark_count = integer<int>(v); }},
        {"landmark_extent", [&](auto& v) { sc.landmark_extent = non_negative(v); }},
        {"landmark_height", [&](auto& v) { sc.landmark_height = non_negative(v); }},
        {"seed", [&](auto& v) { sc.seed = cfg.campaign.seed = integer<std::uint64_t>(v); }},
        {"noiseless", [&](auto& v) { sc.noiseless = boolean(v); }},
        {"gyro_noise_density",
         [&](auto& v) { n.Q1 = std::pow(non_negative(v), 2) * Mat3::Identity(); }},
        {"vel_noise_density",
         [&](auto& v) { n.Q2 = std::pow(non_negative(v), 2) * Mat3::Identity(); }},
        {"sigma_bias_gyro",
         [&](auto& v) {
           sc.sigma_bias_gyro = non_negative(v);
           n.Q3 = std::pow(sc.sigma_bias_gyro, 2) * Mat3::Identity();
         }},
        {"sigma_bias_vel",
         [&](auto& v) {
           sc.sigma_bias_vel = non_negative(v);
           n.Q4 = std::pow(sc.sigma_bias_vel, 2) * Mat3::Identity();
         }},
        {"gps_sigma", [&](auto& v) { n.R_gps = std::pow(non_negative(v), 2) * Mat3::Identity(); }},
        {"landmark_sigma",
         [&](auto& v) { n.R_landmark = std::pow(non_negative(v), 2) * Mat3::Identity(); }},
        {"bias_gyro0", [&](auto& v) { sc.bias_gyro0 = vec3(v); }},
        {"bias_vel0", [&](auto& v) { sc.bias_vel0 = vec3(v); }},
        {"omega_offset", [&](auto& v) { tp.omega_offset = vec3(v); }},
        {"omega_amplitude", [&](auto& v) { tp.omega_amplitude = vec3(v); }},
        {"omega_freq", [&](auto& v) { tp.omega_freq = vec3(v); }},
        {"omega_phase", [&](auto& v) { tp.omega_phase = vec3(v); }},
        {"vel_offset", [&](auto& v) { tp.vel_offset = vec3(v); }},
        {"vel_amplitude", [&](auto& v) { tp.vel_amplitude = vec3(v); }},
        {"vel_freq", [&](auto& v) { tp.vel_freq = vec3(v); }},
        {"vel_phase", [&](auto& v) { tp.vel_phase = vec3(v); }},
        {"m_phi", [&](auto& v) { m[0] = scalar(v); }},
        {"m_r", [&](auto& v) { m[1] = scalar(v); }},
        {"m_beta1", [&](auto& v) { m[2] = scalar(v); }},
        {"m_beta2", [&](auto& v) { m[3] = scalar(v); }},
        {"sigma_phi", [&](auto& v) { s[0] = non_negative(v); }},
        {"sigma_r", [&](auto& v) { s[1] = non_negative(v); }},
        {"sigma_beta1", [&](auto& v) { s[2] = non_negative(v); }},
        {"sigma_beta2", [&](auto& v) { s[3] = non_negative(v); }},
        {"trials", [&](auto& v) { cfg.campaign.trials = integer<int>(v); }},
        {"iterations", [&](auto& v) { cfg.campaign.iterations = integer<int>(v); }},
        {"threads", [&](auto& v) { cfg.campaign.threads = integer<int>(v); }},
        {"estimators", [&](auto& v) { cfg.campaign.estimators = sim::parse_estimators(v); }},
        {"sample_initial_error",
         [&](auto& v) { cfg.campaign.sample_initial_error = boolean(v); }},
        {"init_rotvec", [&](auto& v) { cfg.init_rotvec = vec3(v); }},
        {"init_position", [&](auto& v) { cfg.init_position = vec3(v); }},
    };
  }

  std::size_t line_of(const std::string& key) const {
    const auto it = seen.find(key);
    return it == seen.end() ? 0 : it->second;
  }
};

// Strips the "config:<line> [key]: " prefix from a nested ConfigParse.
std::string reason_of(const ConfigParse& e) {
  std::string reason = e.what();
  const auto colon = reason.find(": ");
  return colon == std::string::npos ? reason : reason.substr(colon + 2);
}

}  // namespace

std::optional<double> parse_scalar(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  double value = 1.0;
  char op = '*';
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i < s.size() && s[i] != '*' && s[i] != '/') continue;
    const auto f = parse_factor(s.substr(start, i - start));
    if (!f) return std::nullopt;
    value = op == '*' ? value * *f : value / *f;
    if (i < s.size()) op = s[i];
    start = i + 1;
  }
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

const std::vector<std::string>& required_keys() {
  static const std::vector<std::string> keys = {
      "duration", "intero_rate", "gps_rate",  "landmark_rate", "m_phi",       "m_r",
      "m_beta1",  "m_beta2",     "sigma_phi", "sigma_r",       "sigma_beta1", "sigma_beta2"};
  return keys;
}

RunConfig parse_config_text(const std::string& text) {
  Parser p;
  p.cfg.text = text;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string body = trim(raw.substr(0, raw.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigParse(line, "", "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = p.setters.find(key);
    if (it == p.setters.end()) throw ConfigParse(line, key, "unknown key");
    if (p.seen.count(key)) {
      throw ConfigParse(line, key, "repeated key (first set on line " +
                                       std::to_string(p.seen[key]) + ")");
    }
    p.seen[key] = line;
    try {
      it->second(value);
    } catch (const ConfigParse& e) {
      throw ConfigParse(line, key, reason_of(e));
    } catch (const std::invalid_argument& e) {
      throw ConfigParse(line, key, e.what());
    }
  }

  std::string missing;
  for (const auto& key : required_keys()) {
    if (!p.seen.count(key)) missing += (missing.empty() ? "" : ", ") + key;
  }
  if (!missing.empty()) throw ConfigParse(0, "", "missing required keys: " + missing);

  RunConfig cfg = p.cfg;
  cfg.initial_error =
      sim::InitialErrorSpec::from_blocks(p.m[0], p.m[1], p.m[2], p.m[3], p.s[0], p.s[1], p.s[2], p.s[3]);
  try {
    cfg.scenario.validate();
    cfg.initial_error.validate();
    cfg.campaign.validate();
  } catch (const ConfigParse& e) {
    // Validation reports the key; attach the line it was set on.
    throw ConfigParse(p.line_of(e.key()), e.key(), reason_of(e));
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigParse(0, "", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace irts::io
