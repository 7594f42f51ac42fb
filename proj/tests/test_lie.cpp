#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "irts/errors.hpp"
#include "irts/lie.hpp"
#include "irts/verify.hpp"

using namespace irts;
using namespace irts::lie;

namespace {

constexpr double kPi = std::numbers::pi;

Tangent random_tangent(std::mt19937_64& rng, double angle_max) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> angle(0.0, angle_max);
  Vec3 axis(n01(rng), n01(rng), n01(rng));
  Tangent xi;
  for (int i = 3; i < 12; ++i) xi[i] = n01(rng);
  xi.head<3>() = axis.normalized() * angle(rng);
  return xi;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Direct power series sum_k (phi^)^k / k!, no scaling.
Mat3 exp_power_series(const Vec3& phi, int terms) {
  const Mat3 W = cross(phi);
  Mat3 term = Mat3::Identity();
  Mat3 sum = term;
  for (int k = 1; k <= terms; ++k) {
    term = term * W / k;
    sum += term;
  }
  return sum;
}

}  // namespace

TEST(Wedge, ZeroIsZero) { EXPECT_EQ(wedge(Tangent::Zero()), Mat9::Zero()); }

TEST(Wedge, RotationAboutZ) {
  Tangent xi = Tangent::Zero();
  xi[2] = 1.0;
  Mat9 expected = Mat9::Zero();
  expected(0, 1) = -1.0;
  expected(1, 0) = 1.0;
  EXPECT_EQ(wedge(xi), expected);
}

TEST(Wedge, VeeRoundTripIsExact) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Tangent xi = random_tangent(rng, 3.0);
    ASSERT_EQ(vee(wedge(xi)), xi);
  }
}

TEST(Vee, ZeroMatrix) { EXPECT_EQ(vee(Mat9::Zero()), Tangent::Zero()); }

TEST(Vee, UnitCoordinates) {
  Tangent xi = Tangent::Zero();
  xi.segment<3>(0) = Vec3::UnitX();
  xi.segment<3>(3) = Vec3::UnitY();
  xi.segment<3>(6) = Vec3::UnitZ();
  EXPECT_EQ(vee(wedge(xi)), xi);
}

TEST(Vee, ReadsTranslationColumn) {
  Mat9 m = Mat9::Zero();
  m.block<3, 1>(0, 3) = Vec3(1, 2, 3);
  Tangent expected = Tangent::Zero();
  expected.segment<3>(3) = Vec3(1, 2, 3);
  EXPECT_EQ(vee(m), expected);
}

TEST(Vee, RejectsEntriesOutsidePattern) {
  Mat9 m = Mat9::Zero();
  m(3, 3) = 1e-6;
  EXPECT_THROW(vee(m), MalformedAlgebraElement);
  m = Mat9::Zero();
  m(0, 0) = 1e-6;  // not skew
  EXPECT_THROW(vee(m), MalformedAlgebraElement);
}

TEST(ExpSO3, ZeroIsIdentity) { EXPECT_EQ(exp_so3(Vec3::Zero()), Mat3::Identity()); }

TEST(ExpSO3, QuarterTurnAboutX) {
  const Mat3 C = exp_so3(Vec3(kPi / 2, 0, 0));
  EXPECT_LT((C * Vec3::UnitY() - Vec3::UnitZ()).norm(), 1e-15);
}

TEST(ExpSO3, MatchesPowerSeries) {
  // 40 terms: the 20-term series leaves a remainder near 5e-10 when |phi| is
  // close to pi.
  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 phi = random_tangent(rng, kPi - 1e-3).head<3>();
    ASSERT_LT(max_abs(exp_so3(phi) - exp_power_series(phi, 40)), 1e-12) << phi.transpose();
  }
}

TEST(ExpSO3, IsOrthonormal) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const Mat3 C = exp_so3(random_tangent(rng, 3.0).head<3>());
    ASSERT_LT(orthogonality_defect(C), 1e-12);
  }
}

TEST(LogSO3, IdentityIsZero) { EXPECT_EQ(log_so3(Mat3::Identity()), Vec3::Zero()); }

TEST(LogSO3, RoundTrip) {
  const Vec3 phi(0.1, -0.2, 0.3);
  EXPECT_LT((log_so3(exp_so3(phi)) - phi).norm(), 1e-10);
}

TEST(LogSO3, SmallAngleBranch) {
  const Vec3 phi(1e-9, 0, 0);
  const Vec3 got = log_so3(exp_so3(phi));
  EXPECT_TRUE(got.allFinite());
  EXPECT_NEAR(got.x(), 1e-9, 1e-18);
  EXPECT_EQ(got.y(), 0.0);
  EXPECT_EQ(got.z(), 0.0);
}

TEST(LogSO3, NearPiThrows) {
  EXPECT_THROW(log_so3(exp_so3(Vec3(kPi - 1e-8, 0, 0))), NearPiRotation);
  EXPECT_NO_THROW(log_so3(exp_so3(Vec3(kPi - 1e-3, 0, 0))));
}

TEST(LeftJacobian, ZeroIsIdentity) { EXPECT_EQ(left_jacobian_so3(Vec3::Zero()), Mat3::Identity()); }

TEST(LeftJacobian, QuarterTurnClosedForm) {
  const double phi = kPi / 2;
  const Vec3 a = Vec3::UnitX();
  const Mat3 expected = std::sin(phi) / phi * Mat3::Identity() +
                        (1.0 - std::sin(phi) / phi) * a * a.transpose() +
                        (1.0 - std::cos(phi)) / phi * cross(a);
  EXPECT_LT(max_abs(left_jacobian_so3(Vec3(phi, 0, 0)) - expected), 1e-15);
}

TEST(LeftJacobian, MatchesQuadrature) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 200; ++i) {
    const Vec3 phi = random_tangent(rng, 3.0).head<3>();
    ASSERT_LT(max_abs(left_jacobian_so3(phi) - verify::left_jacobian_quadrature(phi, 100)), 1e-8);
  }
}

TEST(LeftJacobian, InverseIsInverse) {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 200; ++i) {
    const Vec3 phi = random_tangent(rng, 3.0).head<3>();
    ASSERT_LT(max_abs(left_jacobian_so3(phi) * left_jacobian_inv_so3(phi) - Mat3::Identity()),
              1e-10);
  }
  const Vec3 tiny(1e-8, -2e-8, 0.5e-8);
  EXPECT_LT(max_abs(left_jacobian_inv_so3(tiny) * left_jacobian_so3(tiny) - Mat3::Identity()),
            1e-15);
}

TEST(ExpG, ZeroIsIdentity) { EXPECT_EQ(exp_g(Tangent::Zero()), GroupElement::identity()); }

TEST(ExpG, PureTranslation) {
  Tangent xi = Tangent::Zero();
  xi.segment<3>(3) = Vec3(1, 2, 3);
  const GroupElement X = exp_g(xi);
  EXPECT_EQ(X.attitude(), Mat3::Identity());
  EXPECT_EQ(X.position(), Vec3(1, 2, 3));
}

TEST(ExpG, MatchesMatrixExponential) {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 200; ++i) {
    const Tangent xi = random_tangent(rng, 3.0);
    ASSERT_LT(max_abs(exp_g(xi).matrix() - verify::expm_series(wedge(xi))), 1e-9);
  }
}

TEST(LogG, IdentityIsZero) { EXPECT_EQ(log_g(GroupElement::identity()), Tangent::Zero()); }

TEST(LogG, RoundTrip) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const Tangent xi = random_tangent(rng, 3.0);
    ASSERT_LT((log_g(exp_g(xi)) - xi).cwiseAbs().maxCoeff(), 1e-9) << xi.transpose();
  }
}

TEST(LogG, TranslationAndBias) {
  const GroupElement X(Mat3::Identity(), Vec3(5, 0, 0), Vec3::Constant(0.05));
  Tangent expected = Tangent::Zero();
  expected.segment<3>(3) = Vec3(5, 0, 0);
  expected.segment<3>(6) = Vec3::Constant(0.05);
  EXPECT_LT((log_g(X) - expected).norm(), 1e-15);
}

TEST(Adjoint, IdentityElement) { EXPECT_EQ(adjoint(GroupElement::identity()), Mat12::Identity()); }

TEST(Adjoint, PureTranslationBlocks) {
  const GroupElement X(Mat3::Identity(), Vec3(1, 0, 0));
  Mat12 expected = Mat12::Identity();
  expected.block<3, 3>(3, 0) = cross(Vec3(1, 0, 0));
  EXPECT_LT(max_abs(adjoint(X) - expected), 1e-15);
}

TEST(Adjoint, ConjugationAndHomomorphism) {
  std::mt19937_64 rng(18);
  for (int i = 0; i < 1000; ++i) {
    const GroupElement X = verify::random_element(rng);
    const GroupElement Y = verify::random_element(rng);
    const Tangent xi = random_tangent(rng, 3.0);
    const Mat9 lhs = wedge(adjoint(X) * xi);
    const Mat9 rhs = X.matrix() * wedge(xi) * X.inverse().matrix();
    ASSERT_LT(max_abs(lhs - rhs), 1e-10);
    ASSERT_LT(max_abs(adjoint(X * Y) - adjoint(X) * adjoint(Y)), 1e-10);
  }
}

TEST(Group, ComposeWithIdentityAndInverse) {
  std::mt19937_64 rng(19);
  const GroupElement X = verify::random_element(rng);
  EXPECT_EQ(compose(X, GroupElement::identity()), X);
  EXPECT_LT(distance(compose(X, inverse(X)), GroupElement::identity()), 1e-10);
}

TEST(Group, ComposeMatchesEmbeddingProduct) {
  std::mt19937_64 rng(20);
  for (int i = 0; i < 1000; ++i) {
    const GroupElement X = verify::random_element(rng);
    const GroupElement Y = verify::random_element(rng);
    const GroupElement Z = verify::random_element(rng);
    ASSERT_LT(max_abs((X * Y).matrix() - X.matrix() * Y.matrix()), 1e-12);
    ASSERT_LT(distance((X * Y) * Z, X * (Y * Z)), 1e-10);
    ASSERT_LT(distance(X.inverse() * X, GroupElement::identity()), 1e-10);
  }
}

TEST(Group, EmbeddingRoundTrip) {
  std::mt19937_64 rng(21);
  const GroupElement X = verify::random_element(rng);
  const Mat9 m = X.matrix();
  EXPECT_EQ(GroupElement::from_matrix(m), X);
  // Structural zeros of the embedding.
  EXPECT_TRUE((m.block<3, 5>(0, 4).isZero(0.0)));
  EXPECT_TRUE((m.block<5, 4>(4, 0).isZero(0.0)));
  const Eigen::Matrix<double, 2, 5> lower =
      (Eigen::Matrix<double, 2, 5>() << 0, 0, 0, 1, 0, 0, 0, 0, 0, 1).finished();
  EXPECT_TRUE((m.block<2, 5>(7, 4) == lower));
}

TEST(Errors, LeftAndRightTranslationInvariance) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 200; ++i) {
    const GroupElement X = verify::random_element(rng);
    const GroupElement Xhat = verify::random_element(rng);
    const GroupElement G = verify::random_element(rng);
    ASSERT_LT(distance(left_error(G * X, G * Xhat), left_error(X, Xhat)), 1e-10);
    ASSERT_LT(distance(right_error(X * G, Xhat * G), right_error(X, Xhat)), 1e-10);
  }
  const GroupElement X = verify::random_element(rng);
  EXPECT_LT(distance(left_error(X, X), GroupElement::identity()), 1e-15);
}

TEST(Rotation, OrthonormalizeRepairsDrift) {
  std::mt19937_64 rng(23);
  Mat3 C = exp_so3(random_tangent(rng, 2.0).head<3>());
  C(0, 1) += 1e-6;
  EXPECT_GT(orthogonality_defect(C), kOrthoTolerance);
  const Mat3 fixed = renormalized(C);
  EXPECT_LT(orthogonality_defect(fixed), 1e-12);
  EXPECT_LT(max_abs(fixed - C), 1e-5);
}

TEST(Oracles, LieSuitePasses) {
  const auto result = verify::check_lie_oracles(1000, 3);
  EXPECT_TRUE(result.passed) << result.detail;
  EXPECT_LT(result.seconds, 10.0);
}
