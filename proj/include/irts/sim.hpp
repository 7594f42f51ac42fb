#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "irts/kalman.hpp"
#include "irts/models.hpp"

namespace irts::sim {

using est::Belief;
using lie::GroupElement;
using models::ErrorConvention;
using models::ExteroMeasurement;
using models::InteroceptiveSample;
using models::LandmarkMap;
using models::MeasurementBatch;
using models::NoiseSpec;

/// Body-frame angular and translational velocity profiles:
///   w(t) = omega_offset + omega_amplitude * sin(2 pi omega_freq t + omega_phase)
///   v(t) = vel_offset + vel_amplitude * sin(2 pi vel_freq t + vel_phase)
/// evaluated per axis.
struct TrajectoryProfile {
  Vec3 omega_offset = Vec3::Zero();
  Vec3 omega_amplitude = Vec3::Constant(0.3);
  Vec3 omega_freq{0.10, 0.13, 0.07};
  Vec3 omega_phase{0.0, 1.0, 2.0};
  Vec3 vel_offset{0.3, 0.0, 0.0};
  Vec3 vel_amplitude = Vec3::Constant(0.5);
  Vec3 vel_freq{0.05, 0.09, 0.12};
  Vec3 vel_phase{0.5, 0.0, 1.5};

  Vec3 omega(double t) const;
  Vec3 velocity(double t) const;
};

struct ScenarioConfig {
  double duration = 20.0;
  double intero_rate = 100.0;
  double gps_rate = 10.0;
  double landmark_rate = 15.0;

  /// Landmarks are drawn uniformly in [-extent, extent]^2 x [-height, height]
  /// from `seed` unless `map` is given explicitly.
  int landmark_count = 20;
  double landmark_extent = 10.0;
  double landmark_height = 3.0;
  LandmarkMap map;

  NoiseSpec noise;
  Vec3 bias_gyro0{0.05, 0.05, 0.05};
  Vec3 bias_vel0{0.04, -0.03, 0.06};
  double sigma_bias_gyro = 0.005;
  double sigma_bias_vel = 0.005;

  TrajectoryProfile profile;
  GroupElement initial_pose;
  std::uint64_t seed = 1;
  /// Sensors report exact values and biases stay at their initial values.
  /// The estimators still use `noise`.
  bool noiseless = false;

  /// Number of interoceptive steps N (samples are N + 1).
  std::size_t steps() const;
  /// Throws ConfigParse on invalid values.
  void validate() const;
  /// Default noise: gyro density 0.002 rad/s/sqrt(Hz), velocity density
  /// 0.005 m/s/sqrt(Hz), bias walks 0.005, GPS 0.5 m, landmarks 0.1 m.
  static ScenarioConfig defaults();
  /// Map from `map` or drawn from the seed.
  LandmarkMap landmark_map() const;
};

struct InitialErrorSpec {
  Vec12 mean = Vec12::Zero();
  Mat12 covariance = Mat12::Zero();

  static InitialErrorSpec from_blocks(double m_phi, double m_r, double m_beta1, double m_beta2,
                                      double s_phi, double s_r, double s_beta1, double s_beta2);
  static InitialErrorSpec low_error();
  static InitialErrorSpec high_error();
  void validate() const;
};

/// Noise-free pose trajectory at the interoceptive rate.
struct Truth {
  std::vector<double> t;
  std::vector<GroupElement> poses;  // zero bias blocks
  std::vector<Vec3> omega;          // body rates at each sample
  std::vector<Vec3> velocity;       // body-frame translational velocity
};

Truth synthesize_truth(const ScenarioConfig& config);

struct CorruptedIntero {
  std::vector<InteroceptiveSample> samples;
  std::vector<Vec3> bias_gyro;
  std::vector<Vec3> bias_vel;
};

/// u1 = w - b1 - w1, u2 = v - b2 - w2 with bias random walks. White noise
/// samples have covariance Q / dt so that Q is a continuous-time PSD.
CorruptedIntero corrupt_interoceptive(const Truth& truth, const ScenarioConfig& config,
                                      std::uint64_t seed);

/// Truth poses combined with the bias series.
std::vector<GroupElement> truth_states(const Truth& truth, const CorruptedIntero& intero);

/// GPS at gps_rate and every landmark at landmark_rate, from `states`.
MeasurementBatch generate_extero(std::span<const GroupElement> states,
                                 std::span<const double> times, const ScenarioConfig& config,
                                 std::uint64_t seed);

/// Draws an initial error from `spec` and applies it to `truth0` under the
/// requested convention. The belief covariance is `spec.covariance`.
Belief sample_initial_belief(const GroupElement& truth0, const InitialErrorSpec& spec,
                             ErrorConvention convention, std::mt19937_64& rng);
/// Applies a given error sample (the deterministic half of the above).
Belief initial_belief(const GroupElement& truth0, const Vec12& error, const Mat12& covariance,
                      ErrorConvention convention);

struct StateRmse {
  double attitude = 0.0;   // rad
  double position = 0.0;   // m
  double bias_gyro = 0.0;  // rad/s
  double bias_vel = 0.0;   // m/s

  double operator[](int i) const;
};

inline constexpr const char* kStateNames[4] = {"attitude", "position", "bias_gyro", "bias_vel"};

/// Per-step error magnitudes: geodesic attitude angle, Euclidean otherwise.
struct StateErrors {
  std::vector<double> attitude, position, bias_gyro, bias_vel;
};
StateErrors state_errors(std::span<const GroupElement> estimate, std::span<const GroupElement> truth);
/// Throws LengthMismatch.
StateRmse rmse(std::span<const GroupElement> estimate, std::span<const GroupElement> truth);

/// Draws a 3-vector with covariance `cov`.
Vec3 draw(const Mat3& cov, std::mt19937_64& rng);

}  // namespace irts::sim
