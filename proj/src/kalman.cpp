#include "irts/kalman.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "irts/errors.hpp"

namespace irts::est {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using models::MeasurementKind;

MatrixXd symmetrized(const MatrixXd& P) { return 0.5 * (P + P.transpose()); }

void require_psd(const MatrixXd& P, const char* what) {
  if (!P.allFinite()) {
    throw NonPsdCovariance(std::string(what) + " has non-finite entries");
  }
  const MatrixXd jittered = P + 1e-12 * MatrixXd::Identity(P.rows(), P.cols());
  Eigen::LLT<MatrixXd> llt(jittered);
  if (llt.info() != Eigen::Success) {
    throw NonPsdCovariance(std::string(what) + " is not positive semi-definite");
  }
}

MatrixXd predict_covariance(const MatrixXd& P, const MatrixXd& A, const MatrixXd& L,
                            const MatrixXd& Q) {
  return symmetrized(A * P * A.transpose() + L * Q * L.transpose());
}

MatrixXd kalman_gain(const MatrixXd& P, const MatrixXd& H, const MatrixXd& M, const MatrixXd& R) {
  const MatrixXd S = symmetrized(H * P * H.transpose() + M * R * M.transpose());
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    throw SingularInnovationCovariance("innovation covariance is not positive definite");
  }
  // K = P H^T S^-1  <=>  S K^T = H P
  return llt.solve(H * P).transpose();
}

MatrixXd joseph_covariance(const MatrixXd& P, const MatrixXd& K, const MatrixXd& H,
                           const MatrixXd& M, const MatrixXd& R) {
  const MatrixXd IKH = MatrixXd::Identity(P.rows(), P.cols()) - K * H;
  const MatrixXd KM = K * M;
  return symmetrized(IKH * P * IKH.transpose() + KM * R * KM.transpose());
}

Belief kf_predict(const Belief& belief, const Mat12& A_d, const Mat12& L_d, const Mat12& Q_d,
                  const GroupElement& X_pred, double t) {
  Belief out{X_pred, predict_covariance(belief.P, A_d, L_d, Q_d), belief.convention, t};
  require_psd(out.P, "predicted covariance");
  return out;
}

LinearBelief kf_predict(const LinearBelief& belief, const MatrixXd& A_d, const MatrixXd& L_d,
                        const MatrixXd& Q_d, const VectorXd& x_pred) {
  LinearBelief out{x_pred, predict_covariance(belief.P, A_d, L_d, Q_d)};
  require_psd(out.P, "predicted covariance");
  return out;
}

MatrixXd kf_gain(const MatrixXd& P_check, const MatrixXd& H, const MatrixXd& M,
                 const MatrixXd& R) {
  return kalman_gain(P_check, H, M, R);
}

LinearBelief kf_correct_linear(const LinearBelief& belief, const MatrixXd& K, const VectorXd& z,
                               const MatrixXd& H, const MatrixXd& M, const MatrixXd& R) {
  return {belief.x + K * z, joseph_covariance(belief.P, K, H, M, R)};
}

Mat12 left_to_right(const Mat12& P_left, const GroupElement& X) {
  const Mat12 Ad = lie::adjoint(X);
  return Ad * P_left * Ad.transpose();
}

Mat12 right_to_left(const Mat12& P_right, const GroupElement& X) {
  // Ad(X)^-1 = Ad(X^-1)
  const Mat12 Ad_inv = lie::adjoint(X.inverse());
  return Ad_inv * P_right * Ad_inv.transpose();
}

MatrixXd stacked_covariance(std::span<const ExteroMeasurement> meas, const NoiseSpec& noise) {
  const auto m = static_cast<Eigen::Index>(meas.size());
  MatrixXd R = MatrixXd::Zero(3 * m, 3 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& y = meas[static_cast<std::size_t>(i)];
    R.block<3, 3>(3 * i, 3 * i) = y.kind == MeasurementKind::GpsLeftInvariant
                                      ? noise.R_gps
                                      : noise.landmark_covariance(y.landmark_id.value_or(-1));
  }
  return R;
}

namespace {

MeasurementKind common_kind(std::span<const ExteroMeasurement> meas) {
  const MeasurementKind kind = meas.front().kind;
  for (const auto& y : meas) {
    if (y.kind != kind) {
      throw DataError("measurement stack mixes GPS and landmark observations");
    }
  }
  if (kind == MeasurementKind::GpsLeftInvariant && meas.size() != 1) {
    throw DataError("GPS fixes must be applied one at a time");
  }
  return kind;
}

std::vector<int> landmark_ids(std::span<const ExteroMeasurement> meas) {
  std::vector<int> ids;
  ids.reserve(meas.size());
  for (const auto& y : meas) ids.push_back(y.landmark_id.value_or(-1));
  return ids;
}

VectorXd stacked_innovation(ErrorConvention convention, std::span<const ExteroMeasurement> meas,
                            const GroupElement& X, const LandmarkMap& map) {
  VectorXd z(3 * static_cast<Eigen::Index>(meas.size()));
  for (std::size_t i = 0; i < meas.size(); ++i) {
    z.segment<3>(3 * static_cast<Eigen::Index>(i)) = models::innovation(convention, meas[i], X, map);
  }
  return z;
}

}  // namespace

Belief iekf_correct(const Belief& belief, std::span<const ExteroMeasurement> meas,
                    const LandmarkMap& map, const NoiseSpec& noise) {
  if (meas.empty()) return belief;
  if (belief.convention != ErrorConvention::LeftInvariant) {
    throw DataError("invariant correction expects a left-invariant belief");
  }
  const MeasurementKind kind = common_kind(meas);
  const std::vector<int> ids = landmark_ids(meas);
  const MatrixXd R = stacked_covariance(meas, noise);

  if (kind == MeasurementKind::GpsLeftInvariant) {
    const auto jac = models::invariant_measurement_jacobians(kind, map, ids, belief.X);
    const VectorXd z = stacked_innovation(ErrorConvention::LeftInvariant, meas, belief.X, map);
    const MatrixXd K = kalman_gain(belief.P, jac.H, jac.M, R);
    const Tangent dxi = K * z;
    Belief out{models::retract(ErrorConvention::LeftInvariant, belief.X, dxi),
               joseph_covariance(belief.P, K, jac.H, jac.M, R), belief.convention, belief.t};
    require_psd(out.P, "corrected covariance");
    return out;
  }

  // Right-invariant measurement: switch the covariance to right-invariant
  // coordinates around the correction.
  const Mat12 P_right = left_to_right(belief.P, belief.X);
  const auto jac = models::invariant_measurement_jacobians(kind, map, ids, belief.X);
  const VectorXd z = stacked_innovation(ErrorConvention::RightInvariant, meas, belief.X, map);
  const MatrixXd K = kalman_gain(P_right, jac.H, jac.M, R);
  const Tangent dxi = K * z;
  const GroupElement X_hat = models::retract(ErrorConvention::RightInvariant, belief.X, dxi);
  const Mat12 P_right_hat = joseph_covariance(P_right, K, jac.H, jac.M, R);
  Belief out{X_hat, symmetrized(right_to_left(P_right_hat, X_hat)), belief.convention, belief.t};
  require_psd(out.P, "corrected covariance");
  return out;
}

Belief iekf_correct(const Belief& belief, const ExteroMeasurement& meas, const LandmarkMap& map,
                    const NoiseSpec& noise) {
  return iekf_correct(belief, std::span<const ExteroMeasurement>(&meas, 1), map, noise);
}

Belief mekf_correct(const Belief& belief, std::span<const ExteroMeasurement> meas,
                    const LandmarkMap& map, const NoiseSpec& noise) {
  if (meas.empty()) return belief;
  if (belief.convention != ErrorConvention::Multiplicative) {
    throw DataError("multiplicative correction expects a multiplicative belief");
  }
  const MeasurementKind kind = common_kind(meas);
  const std::vector<int> ids = landmark_ids(meas);
  const MatrixXd R = stacked_covariance(meas, noise);
  const auto jac = models::multiplicative_measurement_jacobians(kind, map, ids, belief.X);
  const VectorXd z = stacked_innovation(ErrorConvention::Multiplicative, meas, belief.X, map);
  const MatrixXd K = kalman_gain(belief.P, jac.H, jac.M, R);
  const Tangent dchi = K * z;
  Belief out{models::retract(ErrorConvention::Multiplicative, belief.X, dchi),
             joseph_covariance(belief.P, K, jac.H, jac.M, R), belief.convention, belief.t};
  require_psd(out.P, "corrected covariance");
  return out;
}

Belief mekf_correct(const Belief& belief, const ExteroMeasurement& meas, const LandmarkMap& map,
                    const NoiseSpec& noise) {
  return mekf_correct(belief, std::span<const ExteroMeasurement>(&meas, 1), map, noise);
}

}  // namespace irts::est
