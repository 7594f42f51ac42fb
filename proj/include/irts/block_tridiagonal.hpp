#pragma once

#include <vector>

#include <Eigen/Core>

namespace irts::batch {

/// Symmetric block-tridiagonal system
///
///   [ D0  U0             ] [x0]   [g0]
///   [ U0' D1  U1         ] [x1] = [g1]
///   [     U1' D2  ...    ] [..]   [..]
///
/// with square blocks of a common size.
struct BlockTridiagonal {
  std::vector<Eigen::MatrixXd> diag;
  std::vector<Eigen::MatrixXd> upper;  // upper[k] couples block k and k+1
  std::vector<Eigen::VectorXd> rhs;

  BlockTridiagonal() = default;
  BlockTridiagonal(std::size_t blocks, Eigen::Index block_size);

  std::size_t blocks() const { return diag.size(); }
  Eigen::Index block_size() const { return diag.empty() ? 0 : diag.front().rows(); }

  Eigen::MatrixXd dense() const;
  Eigen::VectorXd dense_rhs() const;
};

/// Block Cholesky elimination, forward then back substitution. Throws
/// SingularNormalEquations when a pivot block is not positive definite.
std::vector<Eigen::VectorXd> solve_block_tridiagonal(const BlockTridiagonal& sys);

/// Accumulates weighted least-squares factors over a chain of states and
/// forms the Gauss-Newton normal equations for the increment delta that
/// minimizes sum (a + J delta)^T W (a + J delta).
class NormalEquations {
 public:
  NormalEquations(std::size_t states, Eigen::Index block_size);

  /// Residual a + J delta_k.
  void add_unary(std::size_t k, const Eigen::VectorXd& a, const Eigen::MatrixXd& J,
                 const Eigen::MatrixXd& W);
  /// Residual a + J_k delta_k + J_next delta_{k+1}.
  void add_binary(std::size_t k, const Eigen::VectorXd& a, const Eigen::MatrixXd& J_k,
                  const Eigen::MatrixXd& J_next, const Eigen::MatrixXd& W);

  /// Weighted squared residual at delta = 0.
  double cost() const { return cost_; }
  const BlockTridiagonal& system() const { return sys_; }
  std::vector<Eigen::VectorXd> solve() const { return solve_block_tridiagonal(sys_); }

 private:
  BlockTridiagonal sys_;
  double cost_ = 0.0;
};

}  // namespace irts::batch
