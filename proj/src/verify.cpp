#include "irts/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <boost/math/distributions/chi_squared.hpp>

#include "irts/batch_gn.hpp"
#include "irts/errors.hpp"
#include "irts/kalman.hpp"
#include "irts/sim.hpp"
#include "irts/smoother.hpp"

namespace irts::verify {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using lie::GroupElement;
using models::ErrorConvention;
using models::MeasurementKind;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vec3 normal3(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n01;
  return scale * Vec3(n01(rng), n01(rng), n01(rng));
}

// Rotation vector with a uniformly random direction and norm in [0, max_angle].
Vec3 rotation_vector(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> angle(0.0, max_angle);
  Vec3 axis = normal3(rng);
  while (axis.norm() < 1e-3) axis = normal3(rng);
  return angle(rng) * axis.normalized();
}

Tangent random_tangent(std::mt19937_64& rng, double max_angle) {
  Tangent xi;
  xi << rotation_vector(rng, max_angle), normal3(rng), normal3(rng, 0.1), normal3(rng, 0.1);
  return xi;
}

// Relative error with a unit floor on the reference magnitude.
double rel(const MatrixXd& a, const MatrixXd& ref) {
  return (a - ref).norm() / std::max(1.0, ref.norm());
}

// Tracks the worst ratio error / tolerance over named sub-checks.
struct Tally {
  double worst = 0.0;
  std::ostringstream detail;
  std::vector<std::pair<std::string, double>> items;

  void add(const std::string& name, double err, double tol) {
    for (auto& [n, w] : items) {
      if (n == name) {
        w = std::max(w, err / tol);
        worst = std::max(worst, err / tol);
        return;
      }
    }
    items.emplace_back(name, err / tol);
    worst = std::max(worst, err / tol);
  }
  std::string text() const {
    std::ostringstream out;
    out.precision(3);
    for (std::size_t i = 0; i < items.size(); ++i) {
      out << (i ? ", " : "") << items[i].first << " " << items[i].second;
    }
    return out.str();
  }
};

// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
std::pair<VectorXd, VectorXd> gauss_legendre(int n) {
  MatrixXd J = MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(J);
  VectorXd w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  return {es.eigenvalues(), w};
}

}  // namespace

GroupElement random_element(std::mt19937_64& rng, double angle_scale, double translation_scale) {
  Tangent xi;
  xi << rotation_vector(rng, angle_scale * 3.0), normal3(rng, translation_scale),
      normal3(rng, 0.1), normal3(rng, 0.1);
  return lie::exp_g(xi);
}

MatrixXd random_spd(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  MatrixXd B(dim, dim);
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = n01(rng);
  return B * B.transpose() / static_cast<double>(dim) + 0.1 * MatrixXd::Identity(dim, dim);
}

MatrixXd expm_series(const MatrixXd& A, int terms) {
  const double norm = A.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const MatrixXd B = A / std::ldexp(1.0, squarings);
  MatrixXd term = MatrixXd::Identity(A.rows(), A.cols());
  MatrixXd sum = term;
  for (int k = 1; k <= terms; ++k) {
    term = term * B / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

Mat3 left_jacobian_quadrature(const Vec3& phi, int nodes) {
  thread_local std::pair<VectorXd, VectorXd> rule;
  if (rule.first.size() != nodes) rule = gauss_legendre(nodes);
  const auto& [x, w] = rule;
  Mat3 out = Mat3::Zero();
  for (int i = 0; i < nodes; ++i) {
    const double s = 0.5 * (x[i] + 1.0);
    out += 0.5 * w[i] * expm_series(lie::cross(s * phi));
  }
  return out;
}

DenseMap dense_map(const est::LinearGaussianSystem& sys) {
  const Eigen::Index d = sys.dim();
  const std::size_t n = sys.horizon() + 1;
  const Eigen::Index total = d * static_cast<Eigen::Index>(n);
  MatrixXd Lambda = MatrixXd::Zero(total, total);
  VectorXd eta = VectorXd::Zero(total);
  auto at = [d](std::size_t k) { return d * static_cast<Eigen::Index>(k); };

  const MatrixXd W0 = sys.P0.inverse();
  Lambda.block(0, 0, d, d) += W0;
  eta.segment(0, d) += W0 * sys.x0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto& s = sys.steps[k];
    const MatrixXd W = (s.L * s.Q * s.L.transpose()).inverse();
    // Residual x_{k+1} - A x_k - b, i.e. G [x_k; x_{k+1}] - b with G = [-A I].
    MatrixXd G(d, 2 * d);
    G << -s.A, MatrixXd::Identity(d, d);
    Lambda.block(at(k), at(k), 2 * d, 2 * d) += G.transpose() * W * G;
    eta.segment(at(k), 2 * d) += G.transpose() * W * s.b;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& m = sys.measurements[k];
    if (!m) continue;
    const MatrixXd W = (m->M * m->R * m->M.transpose()).inverse();
    Lambda.block(at(k), at(k), d, d) += m->H.transpose() * W * m->H;
    eta.segment(at(k), d) += m->H.transpose() * W * m->y;
  }
  Eigen::LLT<MatrixXd> llt(Lambda);
  if (llt.info() != Eigen::Success) throw SingularNormalEquations("dense information matrix");
  // A few rounds of refinement with extended-precision residuals; long
  // horizons make the dense information matrix poorly conditioned.
  VectorXd mu = llt.solve(eta);
  using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const MatrixXld Lambda_ld = Lambda.cast<long double>();
  for (int round = 0; round < 3; ++round) {
    const auto residual = (eta.cast<long double>() - Lambda_ld * mu.cast<long double>()).eval();
    mu += llt.solve(residual.cast<double>());
  }
  const MatrixXd Sigma = llt.solve(MatrixXd::Identity(total, total));
  DenseMap out;
  for (std::size_t k = 0; k < n; ++k) {
    out.means.push_back(mu.segment(at(k), d));
    out.covariances.push_back(Sigma.block(at(k), at(k), d, d));
  }
  return out;
}

MatrixXd central_difference(const std::function<VectorXd(const Vec12&)>& f, double h) {
  MatrixXd J;
  for (int i = 0; i < 12; ++i) {
    Vec12 d = Vec12::Zero();
    d[i] = h;
    const VectorXd col = (f(d) - f(-d)) / (2.0 * h);
    if (i == 0) J.resize(col.size(), 12);
    J.col(i) = col;
  }
  return J;
}

Mat12 process_jacobian_fd(ErrorConvention convention, const GroupElement& X_hat,
                          const models::InteroceptiveSample& u, double dt, double h) {
  auto step_map = [&](double step) {
    const GroupElement X_hat_next = models::propagate(X_hat, u, step);
    return Mat12(central_difference(
        [&](const Vec12& delta) -> VectorXd {
          const GroupElement X = models::retract(convention, X_hat, delta);
          return models::state_error(convention, models::propagate(X, u, step), X_hat_next);
        },
        h));
  };
  const Mat12 I = Mat12::Identity();
  return (4.0 * (step_map(dt) - I) - (step_map(2.0 * dt) - I)) / (2.0 * dt);
}

MatrixXd measurement_jacobian_fd(ErrorConvention convention, MeasurementKind kind,
                                 const models::LandmarkMap& map, std::span<const int> ids,
                                 const GroupElement& X_check, double h) {
  const auto form = models::innovation_form(convention, kind);
  const ErrorConvention frame = form == models::InnovationForm::Left    ? ErrorConvention::LeftInvariant
                                : form == models::InnovationForm::Right ? ErrorConvention::RightInvariant
                                                                        : ErrorConvention::Multiplicative;
  std::vector<models::ExteroMeasurement> templ;
  if (kind == MeasurementKind::GpsLeftInvariant) {
    templ.push_back(models::ExteroMeasurement::gps(0.0, Vec3::Zero()));
  } else {
    for (int id : ids) templ.push_back(models::ExteroMeasurement::landmark(0.0, id, Vec3::Zero()));
  }
  return central_difference(
      [&](const Vec12& delta) -> VectorXd {
        const GroupElement X = models::retract(frame, X_check, delta);
        VectorXd z(3 * static_cast<Eigen::Index>(templ.size()));
        for (std::size_t i = 0; i < templ.size(); ++i) {
          auto meas = templ[i];
          meas.value = models::predict(meas, X, map);
          z.segment<3>(3 * static_cast<Eigen::Index>(i)) =
              models::innovation(convention, meas, X_check, map);
        }
        return z;
      },
      h);
}

CheckResult check_lie_oracles(int cases, std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  Tally tally;
  for (int i = 0; i < cases; ++i) {
    const Tangent xi = random_tangent(rng, 3.0);
    const GroupElement X = lie::exp_g(xi);
    tally.add("log(exp)", rel(lie::log_g(X), xi), 1e-9);
    tally.add("exp vs series", rel(X.matrix(), expm_series(lie::wedge(xi))), 1e-9);
    const GroupElement Y = random_element(rng, 0.9);
    tally.add("exp(log)", rel(lie::exp_g(lie::log_g(Y)).matrix(), Y.matrix()), 1e-9);

    const GroupElement Z = random_element(rng);
    const Tangent eta = random_tangent(rng, 3.0);
    const Mat9 conj = Y.matrix() * lie::wedge(eta) * Y.inverse().matrix();
    tally.add("adjoint identity", rel(lie::wedge(lie::adjoint(Y) * eta), conj), 1e-10);
    tally.add("adjoint homomorphism",
              rel(lie::adjoint(Y * Z), lie::adjoint(Y) * lie::adjoint(Z)), 1e-10);

    tally.add("associativity", rel(((X * Y) * Z).matrix(), (X * (Y * Z)).matrix()), 1e-10);
    tally.add("product embedding", rel((X * Y).matrix(), X.matrix() * Y.matrix()), 1e-10);
    tally.add("identity", rel((X * GroupElement::identity()).matrix(), X.matrix()), 1e-10);
    tally.add("inverse", rel((X * X.inverse()).matrix(), Mat9::Identity()), 1e-10);
    tally.add("closure", lie::orthogonality_defect((X * Y * Z).attitude()), 1e-10);

    const Vec3 phi = rotation_vector(rng, 3.0);
    const Mat3 J = lie::left_jacobian_so3(phi);
    tally.add("J vs quadrature", rel(J, left_jacobian_quadrature(phi)), 1e-8);
    tally.add("J inverse", rel(lie::left_jacobian_inv_so3(phi) * J, Mat3::Identity()), 1e-8);
  }
  CheckResult r{"lie oracles", false, tally.worst, 1.0, tally.text(), seconds_since(t0)};
  r.passed = tally.worst <= 1.0 && r.seconds < 10.0;
  return r;
}

CheckResult check_linear_equivalence(std::uint64_t seed) {
  const auto t0 = Clock::now();
  const auto sys = est::random_linear_system(12, 6, 50, seed).system;
  const auto rts = est::linear_rts(sys);
  const DenseMap map = dense_map(sys);
  Tally tally;
  for (std::size_t k = 0; k < map.means.size(); ++k) {
    tally.add("rts mean", rel(rts.smoothed[k].x, map.means[k]), 1e-9);
    tally.add("rts covariance", (rts.smoothed[k].P - map.covariances[k]).norm() / map.covariances[k].norm(),
              1e-8);
  }
  // One Gauss-Newton step from an arbitrary start lands on the optimum; a
  // second step does not move.
  std::vector<VectorXd> start(map.means.size(), VectorXd::Zero(sys.dim()));
  const auto once = batch::linear_gn_iterate(sys, start);
  const auto twice = batch::linear_gn_iterate(sys, once);
  for (std::size_t k = 0; k < map.means.size(); ++k) {
    tally.add("gn one step", rel(once[k], map.means[k]), 1e-9);
    tally.add("gn stationary", rel(twice[k], once[k]), 1e-9);
  }
  CheckResult r{"linear equivalence", false, tally.worst, 1.0, tally.text(), seconds_since(t0)};
  r.passed = tally.worst <= 1.0;
  return r;
}

CheckResult check_jacobians(int points, std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  constexpr double h = 1e-6;
  constexpr double tol = 1e-5;
  constexpr double dt = 1e-3;
  Tally tally;
  models::LandmarkMap map;
  for (int i = 0; i < 4; ++i) map.positions.push_back(normal3(rng, 5.0));
  const std::vector<int> ids{0, 1, 2, 3};
  for (int i = 0; i < points; ++i) {
    const GroupElement X = random_element(rng, 1.0, 2.0);
    const models::InteroceptiveSample u{0.0, normal3(rng, 0.5), normal3(rng, 1.0)};

    const Mat12 A = models::invariant_process_jacobians(u, X.bias_gyro(), X.bias_vel()).A;
    tally.add("A", rel(process_jacobian_fd(ErrorConvention::LeftInvariant, X, u, dt, h), A), tol);
    const Mat12 A_star =
        models::multiplicative_process_jacobians(u, X.attitude(), X.bias_gyro(), X.bias_vel()).A;
    tally.add("A*", rel(process_jacobian_fd(ErrorConvention::Multiplicative, X, u, dt, h), A_star),
              tol);

    for (auto conv : {ErrorConvention::LeftInvariant, ErrorConvention::Multiplicative}) {
      const bool inv = conv == ErrorConvention::LeftInvariant;
      auto jac = [&](MeasurementKind kind, std::span<const int> which) {
        return inv ? models::invariant_measurement_jacobians(kind, map, which, X)
                   : models::multiplicative_measurement_jacobians(kind, map, which, X);
      };
      const MatrixXd H1 = jac(MeasurementKind::GpsLeftInvariant, {}).H;
      const MatrixXd H2 = jac(MeasurementKind::LandmarkRightInvariant, ids).H;
      tally.add(inv ? "H^L" : "H1*",
                rel(measurement_jacobian_fd(conv, MeasurementKind::GpsLeftInvariant, map, {}, X, h), H1),
                tol);
      tally.add(inv ? "H^R" : "H2*",
                rel(measurement_jacobian_fd(conv, MeasurementKind::LandmarkRightInvariant, map, ids,
                                            X, h),
                    H2),
                tol);
    }
  }
  CheckResult r{"jacobians", false, tally.worst, 1.0, tally.text(), seconds_since(t0)};
  r.passed = tally.worst <= 1.0;
  return r;
}

CheckResult check_state_independence(std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  models::LandmarkMap map;
  for (int i = 0; i < 3; ++i) map.positions.push_back(normal3(rng, 5.0));
  const std::vector<int> ids{0, 1, 2};
  bool invariant_identical = true;
  double min_witness = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    const GroupElement X1 = random_element(rng, 1.0, 2.0);
    const GroupElement X2 = random_element(rng, 1.0, 2.0).with_biases(X1.bias_gyro(), X1.bias_vel());
    const models::InteroceptiveSample u{0.0, normal3(rng, 0.5), normal3(rng, 1.0)};

    const auto A1 = models::invariant_process_jacobians(u, X1.bias_gyro(), X1.bias_vel()).A;
    const auto A2 = models::invariant_process_jacobians(u, X2.bias_gyro(), X2.bias_vel()).A;
    invariant_identical = invariant_identical && A1 == A2;
    for (auto kind : {MeasurementKind::GpsLeftInvariant, MeasurementKind::LandmarkRightInvariant}) {
      const std::span<const int> which =
          kind == MeasurementKind::GpsLeftInvariant ? std::span<const int>() : std::span<const int>(ids);
      const MatrixXd H1 = models::invariant_measurement_jacobians(kind, map, which, X1).H;
      const MatrixXd H2 = models::invariant_measurement_jacobians(kind, map, which, X2).H;
      invariant_identical = invariant_identical && H1 == H2;
    }

    const auto As1 =
        models::multiplicative_process_jacobians(u, X1.attitude(), X1.bias_gyro(), X1.bias_vel()).A;
    const auto As2 =
        models::multiplicative_process_jacobians(u, X2.attitude(), X2.bias_gyro(), X2.bias_vel()).A;
    const MatrixXd Hs1 =
        models::multiplicative_measurement_jacobians(MeasurementKind::LandmarkRightInvariant, map, ids, X1).H;
    const MatrixXd Hs2 =
        models::multiplicative_measurement_jacobians(MeasurementKind::LandmarkRightInvariant, map, ids, X2).H;
    min_witness = std::min({min_witness, (As1 - As2).cwiseAbs().maxCoeff(),
                            (Hs1 - Hs2).cwiseAbs().maxCoeff()});
  }
  const bool affine = models::is_group_affine(models::se3_kinematics, 6, 100, seed);
  const bool biased_affine = models::is_group_affine(models::se3_bias_kinematics, 6, 100, seed);

  CheckResult r{"state independence", false, 0.0, 1e-6, "", seconds_since(t0)};
  std::ostringstream d;
  d << "invariant bit-identical " << (invariant_identical ? "yes" : "no")
    << ", smallest multiplicative witness " << min_witness << ", se3 group-affine "
    << (affine ? "yes" : "no") << ", with biases " << (biased_affine ? "yes" : "no");
  r.detail = d.str();
  r.worst = min_witness;
  r.passed = invariant_identical && min_witness > 1e-6 && affine && !biased_affine;
  return r;
}

CheckResult check_ert(std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  double recovery = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const GroupElement X = random_element(rng, 1.0, 2.0);
    const Mat12 P = random_spd(12, rng);
    const Mat12 back = est::right_to_left(est::left_to_right(P, X), X);
    recovery = std::max(recovery, (back - P).cwiseAbs().maxCoeff() / std::max(1.0, P.cwiseAbs().maxCoeff()));
  }

  // Forward pass of a 20 s, 100 Hz run from a poor initial estimate.
  sim::ScenarioConfig cfg = sim::ScenarioConfig::defaults();
  cfg.seed = seed;
  const sim::Truth truth = sim::synthesize_truth(cfg);
  const auto intero = sim::corrupt_interoceptive(truth, cfg, seed + 1);
  const auto states = sim::truth_states(truth, intero);
  const auto extero = sim::generate_extero(states, truth.t, cfg, seed + 2);
  const auto spec = sim::InitialErrorSpec::high_error();
  const auto prior = sim::initial_belief(states.front(), spec.mean, spec.covariance,
                                         ErrorConvention::LeftInvariant);
  const auto aligned = est::align_measurements(intero.samples, extero);
  const auto run = est::forward_pass(prior, intero.samples, aligned, cfg.landmark_map(), cfg.noise,
                                     est::SmootherFlavor::LIRTS);
  std::size_t psd_steps = 0;
  double worst_eig = 0.0;
  auto psd = [&](const Mat12& P) {
    const double lo = Eigen::SelfAdjointEigenSolver<Mat12>(P).eigenvalues().minCoeff();
    const double scale = std::max(1e-300, P.cwiseAbs().maxCoeff());
    worst_eig = std::min(worst_eig, lo / scale);
    return lo >= -1e-12 * scale;
  };
  for (std::size_t k = 0; k < run.forward_corr.size(); ++k) {
    if (psd(run.forward_pred[k].P) && psd(run.forward_corr[k].P)) ++psd_steps;
  }

  CheckResult r{"ert integrity", false, recovery, 1e-12, "", seconds_since(t0)};
  std::ostringstream d;
  d << "conjugation round trip " << recovery << ", PSD at " << psd_steps << "/"
    << run.forward_corr.size() << " forward steps (most negative relative eigenvalue "
    << worst_eig << ")";
  r.detail = d.str();
  r.passed = recovery <= 1e-12 && psd_steps == run.forward_corr.size() &&
             run.forward_corr.size() >= 2001;
  return r;
}

CheckResult check_nees(int trials, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const auto base = est::random_linear_system(12, 6, 50, seed).system;
  const std::size_t N = base.horizon();
  double filter_sum = 0.0;
  double smoother_sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto sample = est::resample(base, seed + 1000 + static_cast<std::uint64_t>(t));
    const auto rts = est::linear_rts(sample.system);
    const VectorXd ef = rts.forward_corr[N].x - sample.truth[N];
    filter_sum += ef.dot(rts.forward_corr[N].P.ldlt().solve(ef));
    const VectorXd es = rts.smoothed[N / 2].x - sample.truth[N / 2];
    smoother_sum += es.dot(rts.smoothed[N / 2].P.ldlt().solve(es));
  }
  const double dof = 12.0 * trials;
  const boost::math::chi_squared chi2(dof);
  const double lo = boost::math::quantile(chi2, 0.025) / trials;
  const double hi = boost::math::quantile(chi2, 0.975) / trials;
  const double f = filter_sum / trials;
  const double s = smoother_sum / trials;
  CheckResult r{"nees calibration", false, 0.0, 0.0, "", seconds_since(t0)};
  std::ostringstream d;
  d << "mean NEES filter " << f << ", smoother " << s << ", band [" << lo << ", " << hi << "]";
  r.detail = d.str();
  r.worst = std::max(std::abs(f - 12.0), std::abs(s - 12.0));
  r.tolerance = hi - 12.0;
  r.passed = f >= lo && f <= hi && s >= lo && s <= hi;
  return r;
}

std::vector<CheckResult> run_all(std::uint64_t seed) {
  return {check_lie_oracles(1000, seed),       check_linear_equivalence(seed),
          check_jacobians(100, seed),          check_state_independence(seed),
          check_ert(seed),                     check_nees(200, seed)};
}

}  // namespace irts::verify
