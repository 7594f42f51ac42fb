#include "irts/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "irts/errors.hpp"

namespace irts::sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec3 sinusoid(const Vec3& offset, const Vec3& amplitude, const Vec3& freq, const Vec3& phase,
              double t) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    out[i] = offset[i] + amplitude[i] * std::sin(kTwoPi * freq[i] * t + phase[i]);
  }
  return out;
}

Vec3 standard_normal3(std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  return {n01(rng), n01(rng), n01(rng)};
}

// Symmetric square root that tolerates singular (including zero) covariances.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cov + cov.transpose()));
  const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

// Geodesic angle of C_true^T C_hat, stable near 0 and pi.
double rotation_angle(const Mat3& C_true, const Mat3& C_hat) {
  const Mat3 D = C_true.transpose() * C_hat;
  const double s = 0.5 * lie::uncross(D - D.transpose()).norm();
  const double c = 0.5 * (D.trace() - 1.0);
  return std::atan2(s, c);
}

bool integral(double x) { return std::abs(x - std::round(x)) <= 1e-9 * std::max(1.0, std::abs(x)); }

}  // namespace

Vec3 TrajectoryProfile::omega(double t) const {
  return sinusoid(omega_offset, omega_amplitude, omega_freq, omega_phase, t);
}

Vec3 TrajectoryProfile::velocity(double t) const {
  return sinusoid(vel_offset, vel_amplitude, vel_freq, vel_phase, t);
}

std::size_t ScenarioConfig::steps() const {
  return static_cast<std::size_t>(std::llround(duration * intero_rate));
}

void ScenarioConfig::validate() const {
  if (!(duration > 0.0)) throw ConfigParse(0, "duration", "duration must be > 0");
  if (!(intero_rate > 0.0)) throw ConfigParse(0, "intero_rate", "intero_rate must be > 0");
  if (!(gps_rate >= 0.0)) throw ConfigParse(0, "gps_rate", "gps_rate must be >= 0");
  if (!(landmark_rate >= 0.0)) throw ConfigParse(0, "landmark_rate", "landmark_rate must be >= 0");
  if (!integral(duration * intero_rate)) {
    throw ConfigParse(0, "duration", "duration * intero_rate must be an integer step count");
  }
  if (gps_rate > intero_rate || landmark_rate > intero_rate) {
    throw ConfigParse(0, "gps_rate", "exteroceptive rates must not exceed intero_rate");
  }
  if (landmark_rate > 0.0 && map.positions.empty() && landmark_count <= 0) {
    throw ConfigParse(0, "landmark_count", "landmark observations need a non-empty map");
  }
  if (!(sigma_bias_gyro >= 0.0) || !(sigma_bias_vel >= 0.0)) {
    throw ConfigParse(0, "sigma_bias_gyro", "bias walk sigmas must be >= 0");
  }
  try {
    noise.validate();
  } catch (const DataError& e) {
    throw ConfigParse(0, "noise", e.what());
  }
}

ScenarioConfig ScenarioConfig::defaults() {
  ScenarioConfig c;
  c.noise.Q1 = std::pow(0.002, 2) * Mat3::Identity();
  c.noise.Q2 = std::pow(0.005, 2) * Mat3::Identity();
  c.noise.Q3 = std::pow(c.sigma_bias_gyro, 2) * Mat3::Identity();
  c.noise.Q4 = std::pow(c.sigma_bias_vel, 2) * Mat3::Identity();
  c.noise.R_gps = std::pow(0.5, 2) * Mat3::Identity();
  c.noise.R_landmark = std::pow(0.1, 2) * Mat3::Identity();
  return c;
}

LandmarkMap ScenarioConfig::landmark_map() const {
  if (!map.positions.empty()) return map;
  std::mt19937_64 rng(seed ^ 0x6c616e646d61726bULL);
  std::uniform_real_distribution<double> xy(-landmark_extent, landmark_extent);
  std::uniform_real_distribution<double> z(-landmark_height, landmark_height);
  LandmarkMap out;
  for (int i = 0; i < landmark_count; ++i) {
    const double x = xy(rng);
    const double y = xy(rng);
    out.positions.emplace_back(x, y, z(rng));
  }
  return out;
}

InitialErrorSpec InitialErrorSpec::from_blocks(double m_phi, double m_r, double m_beta1,
                                               double m_beta2, double s_phi, double s_r,
                                               double s_beta1, double s_beta2) {
  InitialErrorSpec spec;
  spec.mean << Vec3::Constant(m_phi), Vec3::Constant(m_r), Vec3::Constant(m_beta1),
      Vec3::Constant(m_beta2);
  Vec12 var;
  var << Vec3::Constant(s_phi * s_phi), Vec3::Constant(s_r * s_r), Vec3::Constant(s_beta1 * s_beta1),
      Vec3::Constant(s_beta2 * s_beta2);
  spec.covariance = var.asDiagonal();
  return spec;
}

InitialErrorSpec InitialErrorSpec::low_error() {
  using std::numbers::pi;
  return from_blocks(pi / 12, 0.1, 0.005, 0.005, pi / 36, 0.1, 0.005, 0.005);
}

InitialErrorSpec InitialErrorSpec::high_error() {
  using std::numbers::pi;
  return from_blocks(pi / 3, 1.0, 0.03, 0.03, pi / 36, 0.1, 0.005, 0.005);
}

void InitialErrorSpec::validate() const {
  if (!mean.allFinite() || !covariance.allFinite()) {
    throw ConfigParse(0, "initial_error", "initial error distribution has non-finite entries");
  }
  const Mat12 off = covariance - Mat12(covariance.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() > 0.0) {
    throw ConfigParse(0, "initial_error", "initial covariance must be diagonal");
  }
  if ((covariance.diagonal().array() < 0.0).any()) {
    throw ConfigParse(0, "initial_error", "initial covariance must be PSD");
  }
}

Truth synthesize_truth(const ScenarioConfig& config) {
  config.validate();
  const std::size_t n = config.steps();
  const double dt = 1.0 / config.intero_rate;
  Truth truth;
  truth.t.reserve(n + 1);
  truth.poses.reserve(n + 1);
  truth.omega.reserve(n + 1);
  truth.velocity.reserve(n + 1);

  // Integrated with the estimators' own discrete kinematics so that a
  // noise-free run reproduces the truth exactly.
  GroupElement X = config.initial_pose.with_biases(Vec3::Zero(), Vec3::Zero());
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    truth.t.push_back(t);
    truth.poses.push_back(X);
    truth.omega.push_back(config.profile.omega(t));
    truth.velocity.push_back(config.profile.velocity(t));
    X = models::propagate(X, {t, truth.omega.back(), truth.velocity.back()}, dt);
  }
  return truth;
}

CorruptedIntero corrupt_interoceptive(const Truth& truth, const ScenarioConfig& config,
                                      std::uint64_t seed) {
  const std::size_t n = truth.t.size();
  const double dt = n > 1 ? truth.t[1] - truth.t[0] : 1.0 / config.intero_rate;
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd S1 = sqrt_psd(config.noise.Q1 / dt);
  const Eigen::MatrixXd S2 = sqrt_psd(config.noise.Q2 / dt);
  const double walk1 = config.sigma_bias_gyro * std::sqrt(dt);
  const double walk2 = config.sigma_bias_vel * std::sqrt(dt);

  CorruptedIntero out;
  out.samples.reserve(n);
  out.bias_gyro.reserve(n);
  out.bias_vel.reserve(n);
  Vec3 b1 = config.bias_gyro0;
  Vec3 b2 = config.bias_vel0;
  for (std::size_t k = 0; k < n; ++k) {
    Vec3 w1 = Vec3::Zero();
    Vec3 w2 = Vec3::Zero();
    if (!config.noiseless) {
      w1 = S1 * standard_normal3(rng);
      w2 = S2 * standard_normal3(rng);
    }
    out.samples.push_back({truth.t[k], truth.omega[k] - b1 - w1, truth.velocity[k] - b2 - w2});
    out.bias_gyro.push_back(b1);
    out.bias_vel.push_back(b2);
    if (!config.noiseless) {
      b1 += walk1 * standard_normal3(rng);
      b2 += walk2 * standard_normal3(rng);
    }
  }
  return out;
}

std::vector<GroupElement> truth_states(const Truth& truth, const CorruptedIntero& intero) {
  if (truth.poses.size() != intero.bias_gyro.size()) {
    throw LengthMismatch("truth and bias series differ in length");
  }
  std::vector<GroupElement> out;
  out.reserve(truth.poses.size());
  for (std::size_t k = 0; k < truth.poses.size(); ++k) {
    out.push_back(truth.poses[k].with_biases(intero.bias_gyro[k], intero.bias_vel[k]));
  }
  return out;
}

MeasurementBatch generate_extero(std::span<const GroupElement> states,
                                 std::span<const double> times, const ScenarioConfig& config,
                                 std::uint64_t seed) {
  if (states.size() != times.size()) {
    throw LengthMismatch("states and times differ in length");
  }
  MeasurementBatch batch;
  if (states.empty()) return batch;
  const LandmarkMap map = config.landmark_map();
  if (config.landmark_rate > 0.0 && map.positions.empty()) {
    throw DataError("landmark observations need a non-empty map");
  }
  std::mt19937_64 rng(seed);
  const Mat3 Sg = sqrt_psd(config.noise.R_gps);
  const double t0 = times.front();
  const double t_end = times.back();

  // Each measurement is stamped with the interoceptive sample nearest to its
  // nominal time.
  auto index_of = [&](double t) {
    const auto k = static_cast<std::size_t>(std::llround((t - t0) * config.intero_rate));
    return std::min(k, states.size() - 1);
  };
  auto epochs = [&](double rate) {
    std::vector<std::size_t> ks;
    if (rate <= 0.0) return ks;
    const auto count = static_cast<std::size_t>(std::floor((t_end - t0) * rate + 1e-9));
    for (std::size_t j = 1; j <= count; ++j) ks.push_back(index_of(t0 + static_cast<double>(j) / rate));
    return ks;
  };

  for (std::size_t k : epochs(config.gps_rate)) {
    Vec3 v = Vec3::Zero();
    if (!config.noiseless) v = Sg * standard_normal3(rng);
    batch.push_back(ExteroMeasurement::gps(times[k], models::gps_predict(states[k]) + v));
  }
  for (std::size_t k : epochs(config.landmark_rate)) {
    for (int id = 0; id < map.size(); ++id) {
      Vec3 v = Vec3::Zero();
      if (!config.noiseless) v = sqrt_psd(config.noise.landmark_covariance(id)) * standard_normal3(rng);
      batch.push_back(ExteroMeasurement::landmark(
          times[k], id, models::landmark_predict(states[k], map, id) + v));
    }
  }
  std::stable_sort(batch.begin(), batch.end(),
                   [](const ExteroMeasurement& a, const ExteroMeasurement& b) { return a.t < b.t; });
  return batch;
}

Belief initial_belief(const GroupElement& truth0, const Vec12& error, const Mat12& covariance,
                      ErrorConvention convention) {
  return {models::perturb(convention, truth0, error), covariance, convention, 0.0};
}

Belief sample_initial_belief(const GroupElement& truth0, const InitialErrorSpec& spec,
                             ErrorConvention convention, std::mt19937_64& rng) {
  spec.validate();
  std::normal_distribution<double> n01;
  Vec12 z;
  for (int i = 0; i < 12; ++i) z[i] = n01(rng);
  const Vec12 err = spec.mean + spec.covariance.diagonal().cwiseSqrt().asDiagonal() * z;
  return initial_belief(truth0, err, spec.covariance, convention);
}

double StateRmse::operator[](int i) const {
  switch (i) {
    case 0: return attitude;
    case 1: return position;
    case 2: return bias_gyro;
    default: return bias_vel;
  }
}

StateErrors state_errors(std::span<const GroupElement> estimate,
                         std::span<const GroupElement> truth) {
  if (estimate.size() != truth.size()) {
    throw LengthMismatch("estimate has " + std::to_string(estimate.size()) + " states, truth has " +
                         std::to_string(truth.size()));
  }
  StateErrors e;
  const std::size_t n = truth.size();
  e.attitude.reserve(n);
  e.position.reserve(n);
  e.bias_gyro.reserve(n);
  e.bias_vel.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    e.attitude.push_back(rotation_angle(truth[k].attitude(), estimate[k].attitude()));
    e.position.push_back((estimate[k].position() - truth[k].position()).norm());
    e.bias_gyro.push_back((estimate[k].bias_gyro() - truth[k].bias_gyro()).norm());
    e.bias_vel.push_back((estimate[k].bias_vel() - truth[k].bias_vel()).norm());
  }
  return e;
}

StateRmse rmse(std::span<const GroupElement> estimate, std::span<const GroupElement> truth) {
  const StateErrors e = state_errors(estimate, truth);
  auto rms = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  return {rms(e.attitude), rms(e.position), rms(e.bias_gyro), rms(e.bias_vel)};
}

Vec3 draw(const Mat3& cov, std::mt19937_64& rng) {
  return sqrt_psd(cov) * standard_normal3(rng);
}

}  // namespace irts::sim
