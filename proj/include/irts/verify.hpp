#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "irts/linear_system.hpp"
#include "irts/models.hpp"

namespace irts::verify {

/// Outcome of one oracle suite. `worst` is the largest observed error in the
/// units of `tolerance`.
struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

// Independent reference implementations.

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
Eigen::MatrixXd expm_series(const Eigen::MatrixXd& A, int terms = 30);
/// Integral of exp(s phi^) over s in [0, 1] by Gauss-Legendre quadrature.
Mat3 left_jacobian_quadrature(const Vec3& phi, int nodes = 100);

/// Joint MAP estimate of a linear-Gaussian system from its dense information
/// matrix: per-step means and marginal covariances.
struct DenseMap {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
};
DenseMap dense_map(const est::LinearGaussianSystem& sys);

/// Central finite-difference Jacobian of f at zero.
Eigen::MatrixXd central_difference(const std::function<Eigen::VectorXd(const Vec12&)>& f,
                                   double h);

/// Finite-difference estimate of the continuous error-dynamics Jacobian,
/// obtained by differentiating one propagation step and Richardson
/// extrapolating over dt and 2 dt.
Mat12 process_jacobian_fd(models::ErrorConvention convention, const lie::GroupElement& X_hat,
                          const models::InteroceptiveSample& u, double dt, double h);

/// Finite-difference H of the innovation the filters form for `kind` under
/// `convention`, at the noise-free measurement of the truth X_hat (-) delta.
Eigen::MatrixXd measurement_jacobian_fd(models::ErrorConvention convention,
                                        models::MeasurementKind kind,
                                        const models::LandmarkMap& map, std::span<const int> ids,
                                        const lie::GroupElement& X_check, double h);

// Suites. Each is deterministic in its seed.

CheckResult check_lie_oracles(int cases, std::uint64_t seed);
CheckResult check_linear_equivalence(std::uint64_t seed);
CheckResult check_jacobians(int points, std::uint64_t seed);
CheckResult check_state_independence(std::uint64_t seed);
CheckResult check_ert(std::uint64_t seed);
CheckResult check_nees(int trials, std::uint64_t seed);

std::vector<CheckResult> run_all(std::uint64_t seed);

/// Random helpers shared with the tests.
lie::GroupElement random_element(std::mt19937_64& rng, double angle_scale = 1.0,
                                 double translation_scale = 1.0);
Eigen::MatrixXd random_spd(Eigen::Index dim, std::mt19937_64& rng);

}  // namespace irts::verify
