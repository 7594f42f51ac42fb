#include "irts/block_tridiagonal.hpp"

#include <Eigen/Cholesky>

#include "irts/errors.hpp"

namespace irts::batch {

using Eigen::MatrixXd;
using Eigen::VectorXd;

BlockTridiagonal::BlockTridiagonal(std::size_t blocks, Eigen::Index block_size)
    : diag(blocks, MatrixXd::Zero(block_size, block_size)),
      upper(blocks > 0 ? blocks - 1 : 0, MatrixXd::Zero(block_size, block_size)),
      rhs(blocks, VectorXd::Zero(block_size)) {}

MatrixXd BlockTridiagonal::dense() const {
  const Eigen::Index n = block_size();
  const auto total = static_cast<Eigen::Index>(blocks()) * n;
  MatrixXd m = MatrixXd::Zero(total, total);
  for (std::size_t k = 0; k < blocks(); ++k) {
    const auto o = static_cast<Eigen::Index>(k) * n;
    m.block(o, o, n, n) = diag[k];
    if (k + 1 < blocks()) {
      m.block(o, o + n, n, n) = upper[k];
      m.block(o + n, o, n, n) = upper[k].transpose();
    }
  }
  return m;
}

VectorXd BlockTridiagonal::dense_rhs() const {
  const Eigen::Index n = block_size();
  VectorXd g(static_cast<Eigen::Index>(blocks()) * n);
  for (std::size_t k = 0; k < blocks(); ++k) g.segment(static_cast<Eigen::Index>(k) * n, n) = rhs[k];
  return g;
}

std::vector<VectorXd> solve_block_tridiagonal(const BlockTridiagonal& sys) {
  const std::size_t n = sys.blocks();
  std::vector<Eigen::LLT<MatrixXd>> pivots;
  pivots.reserve(n);
  std::vector<VectorXd> g(n);

  for (std::size_t k = 0; k < n; ++k) {
    MatrixXd S = sys.diag[k];
    g[k] = sys.rhs[k];
    if (k > 0) {
      const MatrixXd& U = sys.upper[k - 1];
      S.noalias() -= U.transpose() * pivots.back().solve(U);
      g[k].noalias() -= U.transpose() * pivots.back().solve(g[k - 1]);
    }
    pivots.emplace_back(S);
    if (pivots.back().info() != Eigen::Success) {
      throw SingularNormalEquations("normal equations are singular at block " + std::to_string(k));
    }
  }

  std::vector<VectorXd> x(n);
  for (std::size_t k = n; k-- > 0;) {
    VectorXd r = g[k];
    if (k + 1 < n) r.noalias() -= sys.upper[k] * x[k + 1];
    x[k] = pivots[k].solve(r);
  }
  return x;
}

NormalEquations::NormalEquations(std::size_t states, Eigen::Index block_size)
    : sys_(states, block_size) {}

void NormalEquations::add_unary(std::size_t k, const VectorXd& a, const MatrixXd& J,
                                const MatrixXd& W) {
  const MatrixXd JtW = J.transpose() * W;
  sys_.diag[k].noalias() += JtW * J;
  sys_.rhs[k].noalias() -= JtW * a;
  cost_ += a.dot(W * a);
}

void NormalEquations::add_binary(std::size_t k, const VectorXd& a, const MatrixXd& J_k,
                                 const MatrixXd& J_next, const MatrixXd& W) {
  const MatrixXd JkW = J_k.transpose() * W;
  const MatrixXd JnW = J_next.transpose() * W;
  sys_.diag[k].noalias() += JkW * J_k;
  sys_.diag[k + 1].noalias() += JnW * J_next;
  sys_.upper[k].noalias() += JkW * J_next;
  sys_.rhs[k].noalias() -= JkW * a;
  sys_.rhs[k + 1].noalias() -= JnW * a;
  cost_ += a.dot(W * a);
}

}  // namespace irts::batch
