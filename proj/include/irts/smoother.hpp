#pragma once

#include <span>
#include <vector>

#include "irts/kalman.hpp"

namespace irts::est {

using models::InteroceptiveSample;
using models::MeasurementBatch;

enum class Side { Left, Right };

/// K_s = P_f A^T Pcheck_next^-1. Throws SingularPredictedCovariance.
Eigen::MatrixXd smoother_gain(const Eigen::MatrixXd& P_corr, const Eigen::MatrixXd& A,
                              const Eigen::MatrixXd& P_pred_next);
/// P_f - K_s (Pcheck_next - P_s_next) K_s^T, symmetrized.
Eigen::MatrixXd smoother_covariance(const Eigen::MatrixXd& P_corr, const Eigen::MatrixXd& K_s,
                                    const Eigen::MatrixXd& P_pred_next,
                                    const Eigen::MatrixXd& P_smooth_next);

/// Linear backward step.
LinearBelief rts_backward_step(const LinearBelief& fwd_corr_k, const LinearBelief& fwd_pred_k1,
                               const LinearBelief& smoothed_k1, const Eigen::MatrixXd& A_k);

/// Backward step on the group. Dispatches on the convention of `fwd_corr_k`:
/// left/right-invariant beliefs use the invariant innovation and update,
/// multiplicative beliefs use the multiplicative one.
Belief rts_backward_step(const Belief& fwd_corr_k, const Belief& fwd_pred_k1,
                         const Belief& smoothed_k1, const Mat12& A_k);

/// log(Xs^-1 Xcheck) (left) or log(Xcheck Xs^-1) (right).
Tangent irts_innovation(const Belief& smoothed_k1, const Belief& fwd_pred_k1, Side side);
/// Xf exp(-(K z)^) (left) or exp(-(K z)^) Xf (right); covariance is
/// carried through unchanged (the caller owns the covariance recursion).
GroupElement irts_update(const GroupElement& X_corr, const Mat12& K_s, const Tangent& z_s,
                         Side side);

/// Smoother innovation under the multiplicative error: attitude
/// log(Cs^T Ccheck), the rest (xcheck - xs).
Tangent mrts_innovation(const Belief& smoothed_k1, const Belief& fwd_pred_k1);
GroupElement mrts_update(const GroupElement& X_corr, const Mat12& K_s, const Tangent& z_s);

/// Exteroceptive measurements snapped to interoceptive steps. GPS fixes come
/// before landmark stacks within a step.
struct StepMeasurements {
  std::vector<ExteroMeasurement> gps;
  std::vector<ExteroMeasurement> landmarks;
};

struct AlignedMeasurements {
  std::vector<StepMeasurements> steps;  // one per interoceptive sample
  std::size_t dropped = 0;              // farther than dt/2 from any step
};

AlignedMeasurements align_measurements(std::span<const InteroceptiveSample> intero,
                                       const MeasurementBatch& batch);

enum class SmootherFlavor { LIRTS, MRTS };

ErrorConvention convention_of(SmootherFlavor flavor);

struct SmootherRun {
  std::vector<Belief> forward_pred;
  std::vector<Belief> forward_corr;
  std::vector<Belief> smoothed;
  /// transitions[k] maps step k to k+1 (size N).
  std::vector<Mat12> transitions;
};

struct SmootherResult {
  SmootherRun last;
  /// Forward-corrected and smoothed means after each iteration.
  std::vector<std::vector<GroupElement>> forward_per_iteration;
  std::vector<std::vector<GroupElement>> smoothed_per_iteration;
};

/// Forward filter over the whole window (IEKF with error-representation
/// switching for LIRTS, MEKF for MRTS). Fills forward_pred, forward_corr and
/// transitions.
SmootherRun forward_pass(const Belief& initial, std::span<const InteroceptiveSample> intero,
                         const AlignedMeasurements& aligned, const LandmarkMap& map,
                         const NoiseSpec& noise, SmootherFlavor flavor);
/// Fills run.smoothed from the forward quantities.
void backward_pass(SmootherRun& run);

/// `iterations` forward/backward sweeps; every sweep after the first restarts
/// from the smoothed belief at k = 0.
SmootherResult run_smoother(const Belief& initial, std::span<const InteroceptiveSample> intero,
                            const MeasurementBatch& extero, const LandmarkMap& map,
                            const NoiseSpec& noise, SmootherFlavor flavor, int iterations);

std::vector<GroupElement> means(std::span<const Belief> beliefs);

}  // namespace irts::est
