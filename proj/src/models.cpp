#include "irts/models.hpp"

#include <random>

#include <Eigen/Cholesky>

#include "irts/errors.hpp"

namespace irts::models {

using lie::cross;

namespace {

void check_psd(const Mat3& m, const char* name) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw DataError(std::string(name) + " is not symmetric");
  }
  Eigen::LDLT<Mat3> ldlt(m);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() < -1e-12) {
    throw DataError(std::string(name) + " is not positive semi-definite");
  }
}

}  // namespace

Mat12 NoiseSpec::process_psd() const {
  Mat12 Q = Mat12::Zero();
  Q.block<3, 3>(blk::kPhi, blk::kPhi) = Q1;
  Q.block<3, 3>(blk::kRho, blk::kRho) = Q2;
  Q.block<3, 3>(blk::kBeta1, blk::kBeta1) = Q3;
  Q.block<3, 3>(blk::kBeta2, blk::kBeta2) = Q4;
  return Q;
}

const Mat3& NoiseSpec::landmark_covariance(int id) const {
  if (id >= 0 && id < static_cast<int>(R_landmark_per_id.size())) {
    return R_landmark_per_id[static_cast<std::size_t>(id)];
  }
  return R_landmark;
}

void NoiseSpec::validate() const {
  check_psd(Q1, "Q1");
  check_psd(Q2, "Q2");
  check_psd(Q3, "Q3");
  check_psd(Q4, "Q4");
  check_psd(R_gps, "R_gps");
  check_psd(R_landmark, "R_landmark");
  for (const auto& R : R_landmark_per_id) check_psd(R, "R_landmark[id]");
}

const Vec3& LandmarkMap::at(int id) const {
  if (id < 0 || id >= size()) {
    throw UnknownLandmark(id);
  }
  return positions[static_cast<std::size_t>(id)];
}

const char* to_string(ErrorConvention c) {
  switch (c) {
    case ErrorConvention::LeftInvariant:
      return "left-invariant";
    case ErrorConvention::RightInvariant:
      return "right-invariant";
    case ErrorConvention::Multiplicative:
      return "multiplicative";
  }
  return "?";
}

GroupElement propagate(const GroupElement& X, const InteroceptiveSample& u, double dt) {
  const Vec3 omega = u.u1 + X.bias_gyro();
  const Vec3 vel = u.u2 + X.bias_vel();
  const Mat3& C = X.attitude();
  return {lie::renormalized(C * lie::exp_so3(omega * dt)), X.position() + C * vel * dt,
          X.bias_gyro(), X.bias_vel()};
}

ProcessJacobians invariant_process_jacobians(const InteroceptiveSample& u, const Vec3& beta_hat1,
                                             const Vec3& beta_hat2) {
  const Mat3 omega_x = cross(u.u1 + beta_hat1);
  ProcessJacobians jac{Mat12::Zero(), -Mat12::Identity()};
  auto& A = jac.A;
  A.block<3, 3>(blk::kPhi, blk::kPhi) = -omega_x;
  A.block<3, 3>(blk::kPhi, blk::kBeta1) = Mat3::Identity();
  A.block<3, 3>(blk::kRho, blk::kPhi) = -cross(u.u2 + beta_hat2);
  A.block<3, 3>(blk::kRho, blk::kRho) = -omega_x;
  A.block<3, 3>(blk::kRho, blk::kBeta2) = Mat3::Identity();
  return jac;
}

ProcessJacobians multiplicative_process_jacobians(const InteroceptiveSample& u, const Mat3& C_hat,
                                                  const Vec3& beta_hat1, const Vec3& beta_hat2) {
  ProcessJacobians jac{Mat12::Zero(), -Mat12::Identity()};
  auto& A = jac.A;
  A.block<3, 3>(blk::kPhi, blk::kPhi) = -cross(u.u1 + beta_hat1);
  A.block<3, 3>(blk::kPhi, blk::kBeta1) = Mat3::Identity();
  A.block<3, 3>(blk::kRho, blk::kPhi) = -C_hat * cross(u.u2 + beta_hat2);
  A.block<3, 3>(blk::kRho, blk::kBeta2) = C_hat;
  jac.L.block<3, 3>(blk::kRho, blk::kRho) = -C_hat;
  return jac;
}

DiscreteProcess discretize(const ProcessJacobians& jac, const Mat12& Qc, double dt) {
  return {Mat12::Identity() + jac.A * dt, jac.L, Qc * dt};
}

Vec3 gps_predict(const GroupElement& X) { return X.position(); }

Vec3 landmark_predict(const GroupElement& X, const LandmarkMap& map, int id) {
  return X.attitude().transpose() * (map.at(id) - X.position());
}

Vec3 predict(const ExteroMeasurement& meas, const GroupElement& X, const LandmarkMap& map) {
  if (meas.kind == MeasurementKind::GpsLeftInvariant) return gps_predict(X);
  return landmark_predict(X, map, meas.landmark_id.value_or(-1));
}

MeasurementJacobians invariant_measurement_jacobians(MeasurementKind kind, const LandmarkMap& map,
                                                     std::span<const int> ids,
                                                     const GroupElement& X_check) {
  const Mat3& C = X_check.attitude();
  if (kind == MeasurementKind::GpsLeftInvariant) {
    MeasurementJacobians jac{Eigen::MatrixXd::Zero(3, 12), C.transpose(),
                             ErrorConvention::LeftInvariant};
    jac.H.block<3, 3>(0, blk::kRho) = -Mat3::Identity();
    return jac;
  }
  const auto m = static_cast<Eigen::Index>(ids.size());
  MeasurementJacobians jac{Eigen::MatrixXd::Zero(3 * m, 12), Eigen::MatrixXd::Zero(3 * m, 3 * m),
                           ErrorConvention::RightInvariant};
  for (Eigen::Index i = 0; i < m; ++i) {
    jac.H.block<3, 3>(3 * i, blk::kPhi) = -cross(map.at(ids[static_cast<std::size_t>(i)]));
    jac.H.block<3, 3>(3 * i, blk::kRho) = Mat3::Identity();
    jac.M.block<3, 3>(3 * i, 3 * i) = C;
  }
  return jac;
}

MeasurementJacobians multiplicative_measurement_jacobians(MeasurementKind kind,
                                                          const LandmarkMap& map,
                                                          std::span<const int> ids,
                                                          const GroupElement& X_check) {
  if (kind == MeasurementKind::GpsLeftInvariant) {
    MeasurementJacobians jac{Eigen::MatrixXd::Zero(3, 12), Eigen::MatrixXd::Identity(3, 3),
                             ErrorConvention::Multiplicative};
    jac.H.block<3, 3>(0, blk::kRho) = -Mat3::Identity();
    return jac;
  }
  const Mat3 Ct = X_check.attitude().transpose();
  const auto m = static_cast<Eigen::Index>(ids.size());
  MeasurementJacobians jac{Eigen::MatrixXd::Zero(3 * m, 12),
                           Eigen::MatrixXd::Identity(3 * m, 3 * m),
                           ErrorConvention::Multiplicative};
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vec3& p = map.at(ids[static_cast<std::size_t>(i)]);
    jac.H.block<3, 3>(3 * i, blk::kPhi) = -cross(Ct * (p - X_check.position()));
    jac.H.block<3, 3>(3 * i, blk::kRho) = Ct;
  }
  return jac;
}

MeasurementJacobians left_error_landmark_jacobians(const LandmarkMap& map, std::span<const int> ids,
                                                   const GroupElement& X_check) {
  const Mat3 Ct = X_check.attitude().transpose();
  const auto m = static_cast<Eigen::Index>(ids.size());
  MeasurementJacobians jac{Eigen::MatrixXd::Zero(3 * m, 12),
                           Eigen::MatrixXd::Identity(3 * m, 3 * m),
                           ErrorConvention::LeftInvariant};
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vec3& p = map.at(ids[static_cast<std::size_t>(i)]);
    jac.H.block<3, 3>(3 * i, blk::kPhi) = -cross(Ct * (p - X_check.position()));
    jac.H.block<3, 3>(3 * i, blk::kRho) = Mat3::Identity();
  }
  return jac;
}

Vec3 innovation(InnovationForm form, const Vec3& y, const Vec3& y_check,
                const GroupElement& X_check) {
  switch (form) {
    case InnovationForm::Left:
      return X_check.attitude().transpose() * (y - y_check);
    case InnovationForm::Right:
      return X_check.attitude() * (y - y_check);
    case InnovationForm::Standard:
      break;
  }
  return y - y_check;
}

InnovationForm innovation_form(ErrorConvention convention, MeasurementKind kind) {
  if (convention == ErrorConvention::Multiplicative) return InnovationForm::Standard;
  return kind == MeasurementKind::GpsLeftInvariant ? InnovationForm::Left : InnovationForm::Right;
}

Vec3 innovation(ErrorConvention convention, const ExteroMeasurement& meas,
                const GroupElement& X_check, const LandmarkMap& map) {
  return innovation(innovation_form(convention, meas.kind), meas.value, predict(meas, X_check, map),
                    X_check);
}

Tangent state_error(ErrorConvention convention, const GroupElement& truth,
                    const GroupElement& estimate) {
  switch (convention) {
    case ErrorConvention::LeftInvariant:
      return lie::log_g(lie::left_error(truth, estimate));
    case ErrorConvention::RightInvariant:
      return lie::log_g(lie::right_error(truth, estimate));
    case ErrorConvention::Multiplicative:
      break;
  }
  Tangent e;
  e.segment<3>(blk::kPhi) = lie::log_so3(truth.attitude().transpose() * estimate.attitude());
  e.segment<3>(blk::kRho) = estimate.position() - truth.position();
  e.segment<3>(blk::kBeta1) = estimate.bias_gyro() - truth.bias_gyro();
  e.segment<3>(blk::kBeta2) = estimate.bias_vel() - truth.bias_vel();
  return e;
}

GroupElement perturb(ErrorConvention convention, const GroupElement& truth, const Tangent& err) {
  switch (convention) {
    case ErrorConvention::LeftInvariant:
      return truth * lie::exp_g(err);
    case ErrorConvention::RightInvariant:
      return lie::exp_g(err) * truth;
    case ErrorConvention::Multiplicative:
      break;
  }
  return {lie::renormalized(truth.attitude() * lie::exp_so3(err.segment<3>(blk::kPhi))),
          truth.position() + err.segment<3>(blk::kRho),
          truth.bias_gyro() + err.segment<3>(blk::kBeta1),
          truth.bias_vel() + err.segment<3>(blk::kBeta2)};
}

GroupElement retract(ErrorConvention convention, const GroupElement& estimate, const Tangent& err) {
  switch (convention) {
    case ErrorConvention::LeftInvariant:
      return estimate * lie::exp_g(-err);
    case ErrorConvention::RightInvariant:
      return lie::exp_g(-err) * estimate;
    case ErrorConvention::Multiplicative:
      break;
  }
  return {lie::renormalized(estimate.attitude() * lie::exp_so3(-err.segment<3>(blk::kPhi))),
          estimate.position() - err.segment<3>(blk::kRho),
          estimate.bias_gyro() - err.segment<3>(blk::kBeta1),
          estimate.bias_vel() - err.segment<3>(blk::kBeta2)};
}

bool is_group_affine(const EmbeddedDynamics& F, int input_dim, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto random_element = [&] {
    Tangent xi;
    for (auto& v : xi) v = normal(rng);
    return lie::exp_g(xi).matrix();
  };
  const Mat9 I = Mat9::Identity();
  for (int trial = 0; trial < trials; ++trial) {
    const Mat9 X1 = random_element();
    const Mat9 X2 = random_element();
    Eigen::VectorXd u(input_dim);
    for (auto& v : u) v = normal(rng);
    const Mat9 lhs = F(X1 * X2, u);
    const Mat9 rhs = X1 * F(X2, u) + F(X1, u) * X2 - X1 * F(I, u) * X2;
    if ((lhs - rhs).norm() > 1e-9 * std::max(1.0, lhs.norm())) {
      return false;
    }
  }
  return true;
}

Mat9 se3_kinematics(const Mat9& X, const Eigen::VectorXd& u) {
  Tangent xi = Tangent::Zero();
  xi.segment<3>(blk::kPhi) = u.segment<3>(0);
  xi.segment<3>(blk::kRho) = u.segment<3>(3);
  return X * lie::wedge(xi);
}

Mat9 se3_bias_kinematics(const Mat9& X, const Eigen::VectorXd& u) {
  const GroupElement g = GroupElement::from_matrix(X);
  Tangent xi = Tangent::Zero();
  xi.segment<3>(blk::kPhi) = u.segment<3>(0) + g.bias_gyro();
  xi.segment<3>(blk::kRho) = u.segment<3>(3) + g.bias_vel();
  // Only the pose block moves; the bias block is constant.
  Mat9 dX = Mat9::Zero();
  dX.topLeftCorner<4, 4>() = X.topLeftCorner<4, 4>() * lie::wedge(xi).topLeftCorner<4, 4>();
  return dX;
}

}  // namespace irts::models
