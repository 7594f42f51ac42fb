#include "irts/linear_system.hpp"

#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace irts::est {

using Eigen::MatrixXd;
using Eigen::VectorXd;

LinearRtsResult linear_rts(const LinearGaussianSystem& sys) {
  const std::size_t n = sys.horizon() + 1;
  LinearRtsResult out;
  out.forward_pred.reserve(n);
  out.forward_corr.reserve(n);

  auto correct = [&](const LinearBelief& b, std::size_t k) {
    const auto& meas = sys.measurements[k];
    if (!meas) return b;
    const MatrixXd K = kf_gain(b.P, meas->H, meas->M, meas->R);
    return kf_correct_linear(b, K, meas->y - meas->H * b.x, meas->H, meas->M, meas->R);
  };

  out.forward_pred.push_back({sys.x0, sys.P0});
  out.forward_corr.push_back(correct(out.forward_pred.back(), 0));
  for (std::size_t k = 1; k < n; ++k) {
    const auto& step = sys.steps[k - 1];
    const auto& prev = out.forward_corr.back();
    out.forward_pred.push_back(kf_predict(prev, step.A, step.L, step.Q, step.A * prev.x + step.b));
    out.forward_corr.push_back(correct(out.forward_pred.back(), k));
  }

  out.smoothed.assign(n, out.forward_corr.back());
  for (std::size_t k = n - 1; k-- > 0;) {
    out.smoothed[k] = rts_backward_step(out.forward_corr[k], out.forward_pred[k + 1],
                                        out.smoothed[k + 1], sys.steps[k].A);
  }
  return out;
}

namespace {

MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

MatrixXd random_spd(Eigen::Index dim, double floor, std::mt19937_64& rng) {
  const MatrixXd B = random_matrix(dim, dim, rng);
  return B * B.transpose() / static_cast<double>(dim) + floor * MatrixXd::Identity(dim, dim);
}

VectorXd draw(const VectorXd& mean, const MatrixXd& cov, std::mt19937_64& rng) {
  const MatrixXd Lc = cov.llt().matrixL();
  return mean + Lc * random_matrix(mean.size(), 1, rng);
}

}  // namespace

SampledLinearSystem resample(const LinearGaussianSystem& sys, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SampledLinearSystem out{sys, {}};
  VectorXd x = draw(sys.x0, sys.P0, rng);
  out.truth.push_back(x);
  for (std::size_t k = 0; k <= sys.horizon(); ++k) {
    if (k > 0) {
      const auto& step = sys.steps[k - 1];
      const VectorXd w = draw(VectorXd::Zero(step.Q.rows()), step.Q, rng);
      x = step.A * x + step.b + step.L * w;
      out.truth.push_back(x);
    }
    auto& meas = out.system.measurements[k];
    if (meas) {
      const VectorXd v = draw(VectorXd::Zero(meas->R.rows()), meas->R, rng);
      meas->y = meas->H * x + meas->M * v;
    }
  }
  return out;
}

SampledLinearSystem random_linear_system(Eigen::Index dim, Eigen::Index meas_dim,
                                         std::size_t horizon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LinearGaussianSystem sys;
  sys.x0 = random_matrix(dim, 1, rng);
  sys.P0 = random_spd(dim, 0.5, rng);
  for (std::size_t k = 0; k < horizon; ++k) {
    // Near-identity transition keeps the trajectory bounded over long horizons.
    MatrixXd A = MatrixXd::Identity(dim, dim) + 0.1 * random_matrix(dim, dim, rng);
    // A dense random noise map is often nearly singular, which makes L Q L^T
    // and every solver built on its inverse ill-conditioned.
    MatrixXd L = 0.5 * (MatrixXd::Identity(dim, dim) + 0.2 * random_matrix(dim, dim, rng));
    sys.steps.push_back({A, 0.1 * random_matrix(dim, 1, rng), L, random_spd(dim, 0.05, rng) * 0.1});
  }
  for (std::size_t k = 0; k <= horizon; ++k) {
    sys.measurements.push_back(LinearMeasurement{VectorXd::Zero(meas_dim),
                                                 random_matrix(meas_dim, dim, rng),
                                                 MatrixXd::Identity(meas_dim, meas_dim),
                                                 random_spd(meas_dim, 0.1, rng)});
  }
  return resample(sys, seed ^ 0x9e3779b97f4a7c15ULL);
}

}  // namespace irts::est
