#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "irts/smoother.hpp"

namespace irts::est {

/// x_{k+1} = A x_k + b + L w,  w ~ N(0, Q)
struct LinearStep {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd L;
  Eigen::MatrixXd Q;
};

/// y = H x + M v,  v ~ N(0, R)
struct LinearMeasurement {
  Eigen::VectorXd y;
  Eigen::MatrixXd H;
  Eigen::MatrixXd M;
  Eigen::MatrixXd R;
};

/// Discrete-time linear-Gaussian system over k = 0..N with a Gaussian prior
/// on x_0.
struct LinearGaussianSystem {
  Eigen::VectorXd x0;
  Eigen::MatrixXd P0;
  std::vector<LinearStep> steps;                               // N entries
  std::vector<std::optional<LinearMeasurement>> measurements;  // N + 1 entries

  Eigen::Index dim() const { return x0.size(); }
  std::size_t horizon() const { return steps.size(); }
};

struct LinearRtsResult {
  std::vector<LinearBelief> forward_pred;
  std::vector<LinearBelief> forward_corr;
  std::vector<LinearBelief> smoothed;
};

/// Kalman filter followed by the RTS backward pass.
LinearRtsResult linear_rts(const LinearGaussianSystem& sys);

/// Random stable system with measurements at every step (for tests and the
/// calibration checks). Also returns a ground-truth state sequence drawn from
/// the model.
struct SampledLinearSystem {
  LinearGaussianSystem system;
  std::vector<Eigen::VectorXd> truth;
};
SampledLinearSystem random_linear_system(Eigen::Index dim, Eigen::Index meas_dim,
                                         std::size_t horizon, std::uint64_t seed);
/// Redraws the truth and measurements of `sys` from its own model.
SampledLinearSystem resample(const LinearGaussianSystem& sys, std::uint64_t seed);

}  // namespace irts::est
