#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "irts/lie.hpp"

namespace irts::models {

using lie::GroupElement;

/// Rate-gyro and body-frame velocity readings at time t.
struct InteroceptiveSample {
  double t = 0.0;
  Vec3 u1 = Vec3::Zero();  // rad/s
  Vec3 u2 = Vec3::Zero();  // m/s

  bool operator==(const InteroceptiveSample&) const = default;
};

/// Continuous-time PSDs of the process noise and covariances of the
/// exteroceptive sensors.
struct NoiseSpec {
  Mat3 Q1 = Mat3::Zero();  // gyro white noise
  Mat3 Q2 = Mat3::Zero();  // velocity white noise
  Mat3 Q3 = Mat3::Zero();  // gyro bias walk
  Mat3 Q4 = Mat3::Zero();  // velocity bias walk
  Mat3 R_gps = Mat3::Identity();
  Mat3 R_landmark = Mat3::Identity();
  /// Optional per-landmark override of R_landmark, indexed by landmark id.
  std::vector<Mat3> R_landmark_per_id;

  Mat12 process_psd() const;
  const Mat3& landmark_covariance(int id) const;
  /// Throws DataError unless every matrix is symmetric and PSD.
  void validate() const;
};

enum class MeasurementKind { GpsLeftInvariant, LandmarkRightInvariant };

struct ExteroMeasurement {
  double t = 0.0;
  MeasurementKind kind = MeasurementKind::GpsLeftInvariant;
  Vec3 value = Vec3::Zero();
  std::optional<int> landmark_id;

  static ExteroMeasurement gps(double t, const Vec3& y) {
    return {t, MeasurementKind::GpsLeftInvariant, y, std::nullopt};
  }
  static ExteroMeasurement landmark(double t, int id, const Vec3& y) {
    return {t, MeasurementKind::LandmarkRightInvariant, y, id};
  }
  bool operator==(const ExteroMeasurement&) const = default;
};

using MeasurementBatch = std::vector<ExteroMeasurement>;

struct LandmarkMap {
  std::vector<Vec3> positions;

  /// Throws UnknownLandmark.
  const Vec3& at(int id) const;
  int size() const { return static_cast<int>(positions.size()); }
};

enum class ErrorConvention { LeftInvariant, RightInvariant, Multiplicative };

const char* to_string(ErrorConvention c);

/// Continuous-time error dynamics d(dxi)/dt = A dxi + L dw.
struct ProcessJacobians {
  Mat12 A;
  Mat12 L;
};

/// Linearized innovation dz = H dxi + M dv, for a stack of one GPS fix or
/// several landmark observations.
struct MeasurementJacobians {
  Eigen::MatrixXd H;
  Eigen::MatrixXd M;
  ErrorConvention convention;
};

/// Forward-Euler step of the noise-free kinematics.
GroupElement propagate(const GroupElement& X, const InteroceptiveSample& u, double dt);

ProcessJacobians invariant_process_jacobians(const InteroceptiveSample& u, const Vec3& beta_hat1,
                                             const Vec3& beta_hat2);
ProcessJacobians multiplicative_process_jacobians(const InteroceptiveSample& u, const Mat3& C_hat,
                                                  const Vec3& beta_hat1, const Vec3& beta_hat2);

/// First-order discretization: A_d = I + A dt, L_d = L, Q_d = Q_c dt.
struct DiscreteProcess {
  Mat12 A;
  Mat12 L;
  Mat12 Q;
};
DiscreteProcess discretize(const ProcessJacobians& jac, const Mat12& Qc, double dt);

Vec3 gps_predict(const GroupElement& X);
Vec3 landmark_predict(const GroupElement& X, const LandmarkMap& map, int id);
Vec3 predict(const ExteroMeasurement& meas, const GroupElement& X, const LandmarkMap& map);

/// Left-invariant Jacobians for GPS, right-invariant Jacobians for the
/// landmark stack `ids` (rows in the given order).
MeasurementJacobians invariant_measurement_jacobians(MeasurementKind kind, const LandmarkMap& map,
                                                     std::span<const int> ids,
                                                     const GroupElement& X_check);
MeasurementJacobians multiplicative_measurement_jacobians(MeasurementKind kind,
                                                          const LandmarkMap& map,
                                                          std::span<const int> ids,
                                                          const GroupElement& X_check);
/// Landmark Jacobians of the standard innovation y - y_check under the
/// left-invariant error (the batch invariant solver's landmark factor).
MeasurementJacobians left_error_landmark_jacobians(const LandmarkMap& map, std::span<const int> ids,
                                                   const GroupElement& X_check);

/// How the 3-vector innovation is formed from y - y_check.
enum class InnovationForm {
  Left,      // C^T (y - y_check)
  Right,     // C (y - y_check)
  Standard,  // y - y_check
};

Vec3 innovation(InnovationForm form, const Vec3& y, const Vec3& y_check, const GroupElement& X_check);
/// Innovation in the form that belongs to (convention, kind): left for GPS
/// and right for landmarks under the invariant conventions, standard under
/// the multiplicative one.
Vec3 innovation(ErrorConvention convention, const ExteroMeasurement& meas,
                const GroupElement& X_check, const LandmarkMap& map);
InnovationForm innovation_form(ErrorConvention convention, MeasurementKind kind);

/// Estimate-minus-truth error coordinates under each convention:
/// left log(X^-1 Xhat), right log(Xhat X^-1), multiplicative
/// (log(C^T Chat), rhat - r, betahat - beta).
Tangent state_error(ErrorConvention convention, const GroupElement& truth,
                    const GroupElement& estimate);
/// Inverse of state_error in its second argument: the estimate whose error
/// relative to `truth` is `err`.
GroupElement perturb(ErrorConvention convention, const GroupElement& truth, const Tangent& err);
/// The truth whose error relative to `estimate` would be `err`, i.e. the
/// correction estimate (-) err.
GroupElement retract(ErrorConvention convention, const GroupElement& estimate, const Tangent& err);

/// Continuous-time dynamics on the 9x9 embedding, F(X, u) = dX/dt.
using EmbeddedDynamics = std::function<Mat9(const Mat9& X, const Eigen::VectorXd& u)>;

/// Checks F(X1 X2) = X1 F(X2) + F(X1) X2 - X1 F(1) X2 on random draws.
bool is_group_affine(const EmbeddedDynamics& F, int input_dim, int trials, std::uint64_t seed = 1);

/// SE(3) kinematics with biases frozen at zero, u = (u1, u2).
Mat9 se3_kinematics(const Mat9& X, const Eigen::VectorXd& u);
/// Full model, dC = C (u1 + b1)^x, dr = C (u2 + b2), biases constant.
Mat9 se3_bias_kinematics(const Mat9& X, const Eigen::VectorXd& u);

}  // namespace irts::models
