#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "irts/lie.hpp"
#include "irts/models.hpp"

namespace irts::est {

using lie::GroupElement;
using models::ErrorConvention;
using models::ExteroMeasurement;
using models::LandmarkMap;
using models::NoiseSpec;

/// State estimate on the group with a 12x12 covariance expressed in the
/// coordinates of `convention`.
struct Belief {
  GroupElement X;
  Mat12 P = Mat12::Identity();
  ErrorConvention convention = ErrorConvention::LeftInvariant;
  double t = 0.0;
};

/// Gaussian belief on a vector space.
struct LinearBelief {
  Eigen::VectorXd x;
  Eigen::MatrixXd P;
};

// Covariance kernels shared by all filters. Matrices are dense; dimensions
// are checked by Eigen in debug builds.

/// (P + P^T) / 2
Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& P);
/// Throws NonPsdCovariance if P + 1e-12 I has no Cholesky factor.
void require_psd(const Eigen::MatrixXd& P, const char* what);

/// A P A^T + L Q L^T, symmetrized.
Eigen::MatrixXd predict_covariance(const Eigen::MatrixXd& P, const Eigen::MatrixXd& A,
                                   const Eigen::MatrixXd& L, const Eigen::MatrixXd& Q);
/// P H^T (H P H^T + M R M^T)^-1 via a Cholesky solve. Throws
/// SingularInnovationCovariance.
Eigen::MatrixXd kalman_gain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& H,
                            const Eigen::MatrixXd& M, const Eigen::MatrixXd& R);
/// Joseph form (I - K H) P (I - K H)^T + K M R M^T K^T, symmetrized.
Eigen::MatrixXd joseph_covariance(const Eigen::MatrixXd& P, const Eigen::MatrixXd& K,
                                  const Eigen::MatrixXd& H, const Eigen::MatrixXd& M,
                                  const Eigen::MatrixXd& R);

/// Covariance prediction; the mean is supplied by the caller (propagated
/// through the nonlinear model).
Belief kf_predict(const Belief& belief, const Mat12& A_d, const Mat12& L_d, const Mat12& Q_d,
                  const GroupElement& X_pred, double t);
LinearBelief kf_predict(const LinearBelief& belief, const Eigen::MatrixXd& A_d,
                        const Eigen::MatrixXd& L_d, const Eigen::MatrixXd& Q_d,
                        const Eigen::VectorXd& x_pred);

Eigen::MatrixXd kf_gain(const Eigen::MatrixXd& P_check, const Eigen::MatrixXd& H,
                        const Eigen::MatrixXd& M, const Eigen::MatrixXd& R);

/// x + K z with the Joseph covariance update.
LinearBelief kf_correct_linear(const LinearBelief& belief, const Eigen::MatrixXd& K,
                               const Eigen::VectorXd& z, const Eigen::MatrixXd& H,
                               const Eigen::MatrixXd& M, const Eigen::MatrixXd& R);

/// Covariance conjugation between left- and right-invariant coordinates.
Mat12 left_to_right(const Mat12& P_left, const GroupElement& X);
Mat12 right_to_left(const Mat12& P_right, const GroupElement& X);

/// Invariant correction with all measurements of one kind taken at the same
/// instant (one GPS fix, or a stack of landmarks). The belief must be
/// left-invariant; landmark corrections are done in right-invariant form and
/// mapped back.
Belief iekf_correct(const Belief& belief, std::span<const ExteroMeasurement> meas,
                    const LandmarkMap& map, const NoiseSpec& noise);
Belief iekf_correct(const Belief& belief, const ExteroMeasurement& meas, const LandmarkMap& map,
                    const NoiseSpec& noise);

/// Multiplicative correction: attitude on SO(3), everything else additive.
Belief mekf_correct(const Belief& belief, std::span<const ExteroMeasurement> meas,
                    const LandmarkMap& map, const NoiseSpec& noise);
Belief mekf_correct(const Belief& belief, const ExteroMeasurement& meas, const LandmarkMap& map,
                    const NoiseSpec& noise);

/// Block-diagonal measurement covariance for a stack of measurements.
Eigen::MatrixXd stacked_covariance(std::span<const ExteroMeasurement> meas, const NoiseSpec& noise);

}  // namespace irts::est
