#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "irts/batch_gn.hpp"
#include "irts/errors.hpp"
#include "irts/verify.hpp"

using namespace irts;
using namespace irts::batch;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

LandmarkMap map3() { return LandmarkMap{{Vec3(3, 1, 1), Vec3(-2, 4, 0.5), Vec3(1, -3, -1)}}; }

NoiseSpec small_noise() {
  NoiseSpec n;
  n.Q1 = n.Q2 = 1e-6 * Mat3::Identity();
  n.Q3 = n.Q4 = 1e-8 * Mat3::Identity();
  n.R_gps = n.R_landmark = 1e-4 * Mat3::Identity();
  return n;
}

struct Scenario {
  std::vector<InteroceptiveSample> intero;
  std::vector<GroupElement> truth;
  MeasurementBatch extero;
};

Scenario noiseless_scenario(std::size_t steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const LandmarkMap map = map3();
  Scenario s;
  GroupElement X = verify::random_element(rng, 0.3, 1.0).with_biases(Vec3(0.01, 0, 0), Vec3(0, 0.02, 0));
  const double dt = 0.01;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = k * dt;
    s.intero.push_back({t, Vec3(0.2 * std::sin(t), 0.1, -0.1), Vec3(0.5, 0.1 * std::cos(t), 0.0)});
    s.truth.push_back(X);
    if (k % 10 == 0) s.extero.push_back(ExteroMeasurement::gps(t, X.position()));
    if (k % 7 == 0) {
      for (int id = 0; id < map.size(); ++id) {
        s.extero.push_back(ExteroMeasurement::landmark(t, id, models::landmark_predict(X, map, id)));
      }
    }
    X = models::propagate(X, s.intero.back(), dt);
  }
  return s;
}

BatchProblem problem_for(const Scenario& s, GnFlavor flavor, const GroupElement& prior) {
  return {Belief{prior, 1e-4 * Mat12::Identity(), convention_of(flavor)}, s.intero, s.extero, map3(),
          small_noise()};
}

}  // namespace

TEST(DeadReckon, ZeroInputsConstant) {
  std::vector<InteroceptiveSample> intero;
  for (int k = 0; k < 5; ++k) intero.push_back({0.1 * k, Vec3::Zero(), Vec3::Zero()});
  std::mt19937_64 rng(1);
  const GroupElement X = verify::random_element(rng).with_biases(Vec3::Zero(), Vec3::Zero());
  for (const auto& s : dead_reckon(X, intero)) EXPECT_EQ(s, X);
}

TEST(DeadReckon, ConstantVelocity) {
  std::vector<InteroceptiveSample> intero;
  for (int k = 0; k <= 10; ++k) intero.push_back({0.1 * k, Vec3::Zero(), Vec3(1, 0, 0)});
  const auto states = dead_reckon(GroupElement::identity(), intero);
  ASSERT_EQ(states.size(), 11u);
  EXPECT_LT((states.back().position() - Vec3(1, 0, 0)).norm(), 1e-12);
}

TEST(DeadReckon, EqualsFilterWithoutMeasurements) {
  const Scenario s = noiseless_scenario(80, 2);
  std::mt19937_64 rng(3);
  const GroupElement start = s.truth.front() * lie::exp_g(Tangent::Constant(0.02));
  const auto dr = dead_reckon(start, s.intero);
  for (auto flavor : {est::SmootherFlavor::LIRTS, est::SmootherFlavor::MRTS}) {
    const Belief init{start, 0.01 * Mat12::Identity(), est::convention_of(flavor)};
    const auto run = est::forward_pass(init, s.intero, est::align_measurements(s.intero, {}), map3(),
                                       small_noise(), flavor);
    for (std::size_t k = 0; k < dr.size(); ++k) {
      ASSERT_LT(lie::distance(run.forward_corr[k].X, dr[k]), 1e-12);
    }
  }
}

TEST(GnIterate, TruthIsFixedPoint) {
  const Scenario s = noiseless_scenario(60, 4);
  for (auto flavor : {GnFlavor::IGN, GnFlavor::MGN}) {
    const BatchProblem problem = problem_for(s, flavor, s.truth.front());
    const GnStep step = gn_iterate(problem, s.truth, flavor);
    EXPECT_LT(step.cost, 1e-18);
    for (std::size_t k = 0; k < s.truth.size(); ++k) {
      ASSERT_LT(lie::distance(step.next[k], s.truth[k]), 1e-10);
    }
  }
}

TEST(Solve, NoiselessPerfectPriorStaysOnTruth) {
  const Scenario s = noiseless_scenario(60, 5);
  for (auto flavor : {GnFlavor::IGN, GnFlavor::MGN}) {
    const auto sol = solve(problem_for(s, flavor, s.truth.front()), flavor, 3);
    ASSERT_EQ(sol.snapshots.size(), 4u);
    ASSERT_EQ(sol.costs.size(), 4u);
    for (const auto& snap : sol.snapshots) {
      for (std::size_t k = 0; k < snap.size(); ++k) ASSERT_LT(lie::distance(snap[k], s.truth[k]), 1e-9);
    }
  }
}

TEST(Solve, ConvergesFromPerturbedPrior) {
  const Scenario s = noiseless_scenario(100, 6);
  Tangent err = Tangent::Zero();
  err.head<6>() << 0.1, -0.05, 0.08, 0.3, -0.2, 0.1;
  for (auto flavor : {GnFlavor::IGN, GnFlavor::MGN}) {
    const GroupElement prior = models::perturb(convention_of(flavor), s.truth.front(), err);
    BatchProblem problem = problem_for(s, flavor, prior);
    problem.prior.P = 0.1 * Mat12::Identity();
    const auto sol = solve(problem, flavor, 6);
    double worst = 0.0;
    for (std::size_t k = 0; k < s.truth.size(); ++k) {
      worst = std::max(worst, lie::distance(sol.states[k], s.truth[k]));
    }
    EXPECT_LT(worst, 1e-3) << static_cast<int>(flavor);
    EXPECT_LT(sol.costs.back(), sol.costs.front());
  }
}

TEST(Solve, RejectsBadInput) {
  const Scenario s = noiseless_scenario(10, 7);
  EXPECT_THROW(solve(problem_for(s, GnFlavor::IGN, s.truth.front()), GnFlavor::IGN, 0), DataError);
  BatchProblem mismatched = problem_for(s, GnFlavor::IGN, s.truth.front());
  EXPECT_THROW(solve(mismatched, GnFlavor::MGN, 1), DataError);
  EXPECT_THROW(gn_iterate(mismatched, std::vector<GroupElement>(3), GnFlavor::IGN), LengthMismatch);
}

TEST(Linear, OneStepReachesMap) {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto sampled = est::random_linear_system(12, 6, 50, seed);
    const auto oracle = verify::dense_map(sampled.system);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    std::vector<VectorXd> start(51, VectorXd::Zero(12));
    for (auto& x : start) for (auto& v : x) v = 5.0 * n01(rng);
    const auto next = linear_gn_iterate(sampled.system, start);
    for (std::size_t k = 0; k < next.size(); ++k) {
      // The step is computed as start + increment, so roundoff scales with the start too.
      const double scale = std::max({1.0, oracle.means[k].norm(), start[k].norm()});
      ASSERT_LT((next[k] - oracle.means[k]).norm(), 1e-9 * scale);
    }
    // Gradient at the optimum, relative to the gradient at the start (the
    // information weights here reach 1e7, so an absolute bound is meaningless).
    auto gradient = [&](const std::vector<VectorXd>& x) {
      const auto eq = assemble(sampled.system, x);
      double g = 0.0;
      for (const auto& r : eq.system().rhs) {
        g = std::max(g, r.cwiseAbs().maxCoeff());
      }
      return g;
    };
    EXPECT_LT(gradient(next), 1e-12 * gradient(start));
    // Also equals the smoothed means of the linear RTS pass.
    const auto rts = est::linear_rts(sampled.system);
    for (std::size_t k = 0; k < next.size(); ++k) {
      ASSERT_LT((next[k] - rts.smoothed[k].x).norm(), 1e-9 * std::max(1.0, next[k].norm()));
    }
  }
}

TEST(BlockTridiagonalSolve, MatchesDenseSolve) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  for (std::size_t blocks : {1u, 2u, 17u, 50u}) {
    BlockTridiagonal sys(blocks, 4);
    for (std::size_t k = 0; k < blocks; ++k) {
      sys.diag[k] = verify::random_spd(4, rng) + 4.0 * MatrixXd::Identity(4, 4);
      for (auto& v : sys.rhs[k]) v = n01(rng);
      if (k + 1 < blocks) {
        for (Eigen::Index i = 0; i < 16; ++i) sys.upper[k].data()[i] = 0.5 * n01(rng);
      }
    }
    const auto x = solve_block_tridiagonal(sys);
    const VectorXd dense = sys.dense().ldlt().solve(sys.dense_rhs());
    VectorXd got(dense.size());
    for (std::size_t k = 0; k < blocks; ++k) got.segment(4 * static_cast<Eigen::Index>(k), 4) = x[k];
    ASSERT_LT((got - dense).norm() / dense.norm(), 1e-8);
  }
}

TEST(BlockTridiagonalSolve, SingularThrows) {
  BlockTridiagonal sys(3, 2);
  sys.diag[0] = MatrixXd::Identity(2, 2);
  sys.diag[1] = MatrixXd::Zero(2, 2);
  sys.diag[2] = MatrixXd::Identity(2, 2);
  EXPECT_THROW(solve_block_tridiagonal(sys), SingularNormalEquations);
}

TEST(NormalEquations, CostAndGradient) {
  NormalEquations eq(2, 2);
  const MatrixXd I = MatrixXd::Identity(2, 2);
  eq.add_unary(0, VectorXd::Constant(2, 1.0), I, 2.0 * I);
  eq.add_binary(0, VectorXd::Constant(2, -1.0), -I, I, I);
  EXPECT_DOUBLE_EQ(eq.cost(), 2.0 * 2.0 + 2.0);
  const auto delta = eq.solve();
  // Minimizer of 2|1 + d0|^2 + |-1 - d0 + d1|^2: d0 = -1, d1 = 0.
  EXPECT_LT((delta[0] - VectorXd::Constant(2, -1.0)).norm(), 1e-12);
  EXPECT_LT(delta[1].norm(), 1e-12);
}

TEST(Jacobians, InvariantFactorsIndependentOfPose) {
  std::mt19937_64 rng(9);
  const NoiseSpec noise = small_noise();
  const LandmarkMap map = map3();
  const InteroceptiveSample u{0.0, Vec3(0.1, -0.2, 0.3), Vec3(0.5, 0.0, 0.1)};
  const Vec3 b1(0.01, 0.02, 0.03), b2(0.04, -0.03, 0.06);
  const GroupElement a = verify::random_element(rng).with_biases(b1, b2);
  const GroupElement b = verify::random_element(rng).with_biases(b1, b2);
  const GroupElement next = verify::random_element(rng);

  const auto fa = process_factor(GnFlavor::IGN, a, next, u, 0.01, noise);
  const auto fb = process_factor(GnFlavor::IGN, b, next, u, 0.01, noise);
  EXPECT_EQ(fa.J_k, fb.J_k);
  EXPECT_EQ(fa.J_next, fb.J_next);

  const auto gps = ExteroMeasurement::gps(0.0, Vec3(1, 2, 3));
  EXPECT_EQ(measurement_factor(GnFlavor::IGN, std::span(&gps, 1), a, map, noise).J,
            measurement_factor(GnFlavor::IGN, std::span(&gps, 1), b, map, noise).J);

  // Landmarks under the left error do depend on the estimate.
  const auto lm = ExteroMeasurement::landmark(0.0, 0, Vec3(1, 0, 0));
  const MatrixXd ja = measurement_factor(GnFlavor::IGN, std::span(&lm, 1), a, map, noise).J;
  const MatrixXd jb = measurement_factor(GnFlavor::IGN, std::span(&lm, 1), b, map, noise).J;
  EXPECT_GT(max_abs(ja - jb), 1e-6);
}
