#pragma once

#include <Eigen/Core>

namespace irts {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

/// Coordinates of the Lie algebra, stored as (phi, rho, dbeta1, dbeta2).
using Tangent = Vec12;

/// 9x9 matrix with the sparsity pattern of the algebra.
using AlgebraElement = Mat9;

/// Offsets of the four 3-blocks inside a Tangent (and inside 12x12 covariances).
namespace blk {
inline constexpr int kPhi = 0;
inline constexpr int kRho = 3;
inline constexpr int kBeta1 = 6;
inline constexpr int kBeta2 = 9;
}  // namespace blk

namespace lie {

inline constexpr double kSmallAngle = 1e-6;
inline constexpr double kNearPi = 1e-6;
inline constexpr double kOrthoTolerance = 1e-9;

/// Skew-symmetric matrix such that cross(a) * b == a.cross(b).
Mat3 cross(const Vec3& w);
Vec3 uncross(const Mat3& W);

Mat3 exp_so3(const Vec3& phi);
/// Throws NearPiRotation when the angle is within kNearPi of pi.
Vec3 log_so3(const Mat3& C);
Mat3 left_jacobian_so3(const Vec3& phi);
Mat3 left_jacobian_inv_so3(const Vec3& phi);

/// max(|C^T C - I|_F, |det C - 1|)
double orthogonality_defect(const Mat3& C);
/// Nearest rotation in the Frobenius sense (polar decomposition).
Mat3 orthonormalize(const Mat3& C);
/// Orthonormalizes only if the defect exceeds kOrthoTolerance.
Mat3 renormalized(const Mat3& C);

/// Element of SE(3) extended by two additive bias blocks. Stored decomposed;
/// matrix() gives the 9x9 embedding
///
///   [ C  r  .  .  . ]
///   [ .  1  .  .  . ]
///   [ .  .  I  b1 b2]
///   [ .  .  .  1  . ]
///   [ .  .  .  .  1 ]
class GroupElement {
 public:
  GroupElement();
  GroupElement(Mat3 attitude, Vec3 position, Vec3 bias_gyro = Vec3::Zero(),
               Vec3 bias_vel = Vec3::Zero());

  static GroupElement identity() { return {}; }
  static GroupElement from_matrix(const Mat9& m);

  const Mat3& attitude() const { return C_; }
  const Vec3& position() const { return r_; }
  const Vec3& bias_gyro() const { return b1_; }
  const Vec3& bias_vel() const { return b2_; }

  GroupElement with_attitude(const Mat3& C) const { return {C, r_, b1_, b2_}; }
  GroupElement with_position(const Vec3& r) const { return {C_, r, b1_, b2_}; }
  GroupElement with_biases(const Vec3& b1, const Vec3& b2) const { return {C_, r_, b1, b2}; }

  Mat9 matrix() const;
  GroupElement inverse() const;
  GroupElement operator*(const GroupElement& other) const;

  bool operator==(const GroupElement& other) const = default;

 private:
  Mat3 C_;
  Vec3 r_;
  Vec3 b1_;
  Vec3 b2_;
};

AlgebraElement wedge(const Tangent& xi);
/// Throws MalformedAlgebraElement if entries outside the pattern exceed 1e-12.
Tangent vee(const AlgebraElement& Xi);

GroupElement exp_g(const Tangent& xi);
Tangent log_g(const GroupElement& X);
Mat12 adjoint(const GroupElement& X);

inline GroupElement compose(const GroupElement& X, const GroupElement& Y) { return X * Y; }
inline GroupElement inverse(const GroupElement& X) { return X.inverse(); }

/// X^{-1} Xhat
GroupElement left_error(const GroupElement& X, const GroupElement& Xhat);
/// Xhat X^{-1}
GroupElement right_error(const GroupElement& X, const GroupElement& Xhat);

/// Frobenius distance between 9x9 embeddings.
double distance(const GroupElement& X, const GroupElement& Y);

}  // namespace lie
}  // namespace irts
