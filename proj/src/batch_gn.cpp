#include "irts/batch_gn.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "irts/errors.hpp"

namespace irts::batch {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using models::ErrorConvention;
using models::MeasurementKind;

models::ErrorConvention convention_of(GnFlavor flavor) {
  return flavor == GnFlavor::IGN ? ErrorConvention::LeftInvariant
                                 : ErrorConvention::Multiplicative;
}

namespace {

template <typename Matrix>
Matrix information(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw SingularNormalEquations("residual covariance is not positive definite");
  }
  return llt.solve(Matrix::Identity(cov.rows(), cov.cols()));
}

}  // namespace

ProcessFactor process_factor(GnFlavor flavor, const GroupElement& X_k, const GroupElement& X_next,
                             const InteroceptiveSample& u, double dt, const NoiseSpec& noise) {
  const auto conv = convention_of(flavor);
  const auto jac = flavor == GnFlavor::IGN
                       ? models::invariant_process_jacobians(u, X_k.bias_gyro(), X_k.bias_vel())
                       : models::multiplicative_process_jacobians(u, X_k.attitude(),
                                                                  X_k.bias_gyro(), X_k.bias_vel());
  const auto d = models::discretize(jac, noise.process_psd(), dt);
  // Error of the prediction f(X_k) relative to X_{k+1}; to first order it
  // moves by -A_d delta_k + delta_{k+1}.
  const GroupElement predicted = models::propagate(X_k, u, dt);
  const Mat12 cov = d.L * d.Q * d.L.transpose();
  return {models::state_error(conv, X_next, predicted), -d.A, Mat12::Identity(),
          information(Mat12(0.5 * (cov + cov.transpose())))};
}

MeasurementFactor measurement_factor(GnFlavor flavor, std::span<const ExteroMeasurement> meas,
                                     const GroupElement& X, const LandmarkMap& map,
                                     const NoiseSpec& noise) {
  const MeasurementKind kind = meas.front().kind;
  std::vector<int> ids;
  for (const auto& y : meas) {
    if (y.kind != kind) throw DataError("measurement stack mixes kinds");
    ids.push_back(y.landmark_id.value_or(-1));
  }
  models::MeasurementJacobians jac;
  models::InnovationForm form = models::InnovationForm::Standard;
  if (flavor == GnFlavor::IGN) {
    if (kind == MeasurementKind::GpsLeftInvariant) {
      jac = models::invariant_measurement_jacobians(kind, map, ids, X);
      form = models::InnovationForm::Left;
    } else {
      jac = models::left_error_landmark_jacobians(map, ids, X);
    }
  } else {
    jac = models::multiplicative_measurement_jacobians(kind, map, ids, X);
  }
  const auto m = static_cast<Eigen::Index>(meas.size());
  VectorXd z(3 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& y = meas[static_cast<std::size_t>(i)];
    z.segment<3>(3 * i) = models::innovation(form, y.value, models::predict(y, X, map), X);
  }
  const MatrixXd R = est::stacked_covariance(meas, noise);
  const MatrixXd cov = jac.M * R * jac.M.transpose();
  // z = H delta + M v for the true error delta, so z - H delta is the noise.
  return {z, -jac.H, information(MatrixXd(0.5 * (cov + cov.transpose())))};
}

std::vector<GroupElement> dead_reckon(const GroupElement& prior_state,
                                      std::span<const InteroceptiveSample> intero) {
  std::vector<GroupElement> states;
  states.reserve(intero.size());
  states.push_back(prior_state);
  for (std::size_t k = 1; k < intero.size(); ++k) {
    states.push_back(models::propagate(states.back(), intero[k - 1], intero[k].t - intero[k - 1].t));
  }
  return states;
}

NormalEquations assemble(const BatchProblem& problem, std::span<const GroupElement> current,
                         GnFlavor flavor) {
  const std::size_t n = problem.intero.size();
  if (current.size() != n) {
    throw LengthMismatch("batch iterate has " + std::to_string(current.size()) +
                         " states, problem has " + std::to_string(n));
  }
  const auto conv = convention_of(flavor);
  if (problem.prior.convention != conv) {
    throw DataError(std::string("prior is ") + models::to_string(problem.prior.convention) +
                    ", solver expects " + models::to_string(conv));
  }
  NormalEquations eq(n, 12);
  eq.add_unary(0, models::state_error(conv, current[0], problem.prior.X), Mat12::Identity(),
               information(problem.prior.P));
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto f = process_factor(flavor, current[k], current[k + 1], problem.intero[k],
                                  problem.intero[k + 1].t - problem.intero[k].t, problem.noise);
    eq.add_binary(k, f.a, f.J_k, f.J_next, f.W);
  }
  const auto aligned = est::align_measurements(problem.intero, problem.extero);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& step = aligned.steps[k];
    for (const auto& gps : step.gps) {
      const auto f = measurement_factor(flavor, std::span(&gps, 1), current[k], problem.map,
                                        problem.noise);
      eq.add_unary(k, f.a, f.J, f.W);
    }
    if (!step.landmarks.empty()) {
      const auto f = measurement_factor(flavor, step.landmarks, current[k], problem.map,
                                        problem.noise);
      eq.add_unary(k, f.a, f.J, f.W);
    }
  }
  return eq;
}

GnStep gn_iterate(const BatchProblem& problem, std::span<const GroupElement> current,
                  GnFlavor flavor) {
  const NormalEquations eq = assemble(problem, current, flavor);
  const auto delta = eq.solve();
  const auto conv = convention_of(flavor);
  GnStep step{{}, eq.cost()};
  step.next.reserve(current.size());
  for (std::size_t k = 0; k < current.size(); ++k) {
    step.next.push_back(models::retract(conv, current[k], delta[k]));
  }
  return step;
}

double batch_cost(const BatchProblem& problem, std::span<const GroupElement> current,
                  GnFlavor flavor) {
  return assemble(problem, current, flavor).cost();
}

BatchSolution solve(const BatchProblem& problem, GnFlavor flavor, int iterations) {
  if (iterations < 1) throw DataError("Gauss-Newton needs at least one iteration");
  BatchSolution sol;
  sol.snapshots.push_back(dead_reckon(problem.prior.X, problem.intero));
  for (int it = 0; it < iterations; ++it) {
    auto step = gn_iterate(problem, sol.snapshots.back(), flavor);
    sol.costs.push_back(step.cost);
    sol.snapshots.push_back(std::move(step.next));
  }
  sol.costs.push_back(batch_cost(problem, sol.snapshots.back(), flavor));
  sol.states = sol.snapshots.back();
  return sol;
}

NormalEquations assemble(const est::LinearGaussianSystem& sys, std::span<const VectorXd> current) {
  const std::size_t n = sys.horizon() + 1;
  if (current.size() != n) throw LengthMismatch("linear iterate length does not match horizon");
  NormalEquations eq(n, sys.dim());
  // delta is estimate minus truth, so the truth hypothesis is x - delta.
  eq.add_unary(0, sys.x0 - current[0], MatrixXd::Identity(sys.dim(), sys.dim()),
               information(sys.P0));
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto& s = sys.steps[k];
    eq.add_binary(k, s.A * current[k] + s.b - current[k + 1], -s.A,
                  MatrixXd::Identity(sys.dim(), sys.dim()),
                  information(MatrixXd(s.L * s.Q * s.L.transpose())));
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& m = sys.measurements[k];
    if (!m) continue;
    eq.add_unary(k, m->y - m->H * current[k], m->H,
                 information(MatrixXd(m->M * m->R * m->M.transpose())));
  }
  return eq;
}

std::vector<VectorXd> linear_gn_iterate(const est::LinearGaussianSystem& sys,
                                        std::span<const VectorXd> current) {
  const auto delta = assemble(sys, current).solve();
  std::vector<VectorXd> next;
  next.reserve(current.size());
  for (std::size_t k = 0; k < current.size(); ++k) next.push_back(current[k] - delta[k]);
  return next;
}

}  // namespace irts::batch
