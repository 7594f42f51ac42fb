#include "irts/lie.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "irts/errors.hpp"

namespace irts::lie {

Mat3 cross(const Vec3& w) {
  Mat3 W;
  W << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return W;
}

Vec3 uncross(const Mat3& W) { return {W(2, 1), W(0, 2), W(1, 0)}; }

Mat3 exp_so3(const Vec3& phi) {
  const double angle = phi.norm();
  const Mat3 W = cross(phi);
  if (angle < kSmallAngle) {
    return Mat3::Identity() + W + 0.5 * W * W;
  }
  const Vec3 a = phi / angle;
  const double c = std::cos(angle);
  return c * Mat3::Identity() + (1.0 - c) * a * a.transpose() + std::sin(angle) * cross(a);
}

Vec3 log_so3(const Mat3& C) {
  // sin(angle) * a = vee(C - C^T) / 2, cos(angle) = (tr C - 1) / 2
  const Vec3 s = 0.5 * uncross(C - C.transpose());
  const double cos_angle = 0.5 * (C.trace() - 1.0);
  const double sin_angle = s.norm();
  const double angle = std::atan2(sin_angle, cos_angle);
  if (angle < kSmallAngle) {
    return s;
  }
  if (M_PI - angle < kNearPi) {
    throw NearPiRotation(angle);
  }
  return (angle / sin_angle) * s;
}

Mat3 left_jacobian_so3(const Vec3& phi) {
  const double angle = phi.norm();
  if (angle < kSmallAngle) {
    return Mat3::Identity() + 0.5 * cross(phi);
  }
  const Vec3 a = phi / angle;
  const double sinc = std::sin(angle) / angle;
  return sinc * Mat3::Identity() + (1.0 - sinc) * a * a.transpose() +
         ((1.0 - std::cos(angle)) / angle) * cross(a);
}

Mat3 left_jacobian_inv_so3(const Vec3& phi) {
  const double angle = phi.norm();
  if (angle < kSmallAngle) {
    return Mat3::Identity() - 0.5 * cross(phi);
  }
  const Vec3 a = phi / angle;
  const double half = 0.5 * angle;
  const double hc = half / std::tan(half);
  return hc * Mat3::Identity() + (1.0 - hc) * a * a.transpose() - half * cross(a);
}

double orthogonality_defect(const Mat3& C) {
  return std::max((C.transpose() * C - Mat3::Identity()).norm(), std::abs(C.determinant() - 1.0));
}

Mat3 orthonormalize(const Mat3& C) {
  Eigen::JacobiSVD<Mat3> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) {
    U.col(2) *= -1.0;
  }
  return U * V.transpose();
}

Mat3 renormalized(const Mat3& C) {
  return orthogonality_defect(C) > kOrthoTolerance ? orthonormalize(C) : C;
}

GroupElement::GroupElement()
    : C_(Mat3::Identity()), r_(Vec3::Zero()), b1_(Vec3::Zero()), b2_(Vec3::Zero()) {}

GroupElement::GroupElement(Mat3 attitude, Vec3 position, Vec3 bias_gyro, Vec3 bias_vel)
    : C_(std::move(attitude)),
      r_(std::move(position)),
      b1_(std::move(bias_gyro)),
      b2_(std::move(bias_vel)) {}

GroupElement GroupElement::from_matrix(const Mat9& m) {
  return {m.block<3, 3>(0, 0), m.block<3, 1>(0, 3), m.block<3, 1>(4, 7), m.block<3, 1>(4, 8)};
}

Mat9 GroupElement::matrix() const {
  Mat9 m = Mat9::Identity();
  m.block<3, 3>(0, 0) = C_;
  m.block<3, 1>(0, 3) = r_;
  m.block<3, 1>(4, 7) = b1_;
  m.block<3, 1>(4, 8) = b2_;
  return m;
}

GroupElement GroupElement::inverse() const {
  const Mat3 Ct = C_.transpose();
  return {Ct, -Ct * r_, -b1_, -b2_};
}

GroupElement GroupElement::operator*(const GroupElement& other) const {
  return {renormalized(C_ * other.C_), C_ * other.r_ + r_, b1_ + other.b1_, b2_ + other.b2_};
}

AlgebraElement wedge(const Tangent& xi) {
  AlgebraElement Xi = AlgebraElement::Zero();
  Xi.block<3, 3>(0, 0) = cross(xi.segment<3>(blk::kPhi));
  Xi.block<3, 1>(0, 3) = xi.segment<3>(blk::kRho);
  Xi.block<3, 1>(4, 7) = xi.segment<3>(blk::kBeta1);
  Xi.block<3, 1>(4, 8) = xi.segment<3>(blk::kBeta2);
  return Xi;
}

Tangent vee(const AlgebraElement& Xi) {
  Tangent xi;
  xi.segment<3>(blk::kPhi) = uncross(Xi.block<3, 3>(0, 0));
  xi.segment<3>(blk::kRho) = Xi.block<3, 1>(0, 3);
  xi.segment<3>(blk::kBeta1) = Xi.block<3, 1>(4, 7);
  xi.segment<3>(blk::kBeta2) = Xi.block<3, 1>(4, 8);
  const double off_pattern = (Xi - wedge(xi)).cwiseAbs().maxCoeff();
  if (off_pattern > 1e-12) {
    throw MalformedAlgebraElement("matrix is not in the algebra (off-pattern entry " +
                                  std::to_string(off_pattern) + ")");
  }
  return xi;
}

GroupElement exp_g(const Tangent& xi) {
  const Vec3 phi = xi.segment<3>(blk::kPhi);
  return {exp_so3(phi), left_jacobian_so3(phi) * xi.segment<3>(blk::kRho),
          xi.segment<3>(blk::kBeta1), xi.segment<3>(blk::kBeta2)};
}

Tangent log_g(const GroupElement& X) {
  Tangent xi;
  const Vec3 phi = log_so3(X.attitude());
  xi.segment<3>(blk::kPhi) = phi;
  xi.segment<3>(blk::kRho) = left_jacobian_inv_so3(phi) * X.position();
  xi.segment<3>(blk::kBeta1) = X.bias_gyro();
  xi.segment<3>(blk::kBeta2) = X.bias_vel();
  return xi;
}

Mat12 adjoint(const GroupElement& X) {
  Mat12 Ad = Mat12::Identity();
  Ad.block<3, 3>(0, 0) = X.attitude();
  Ad.block<3, 3>(3, 3) = X.attitude();
  Ad.block<3, 3>(3, 0) = cross(X.position()) * X.attitude();
  return Ad;
}

GroupElement left_error(const GroupElement& X, const GroupElement& Xhat) {
  return X.inverse() * Xhat;
}

GroupElement right_error(const GroupElement& X, const GroupElement& Xhat) {
  return Xhat * X.inverse();
}

double distance(const GroupElement& X, const GroupElement& Y) {
  return (X.matrix() - Y.matrix()).norm();
}

}  // namespace irts::lie
