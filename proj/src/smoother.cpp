#include "irts/smoother.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "irts/errors.hpp"

namespace irts::est {

using Eigen::MatrixXd;
using models::MeasurementKind;

MatrixXd smoother_gain(const MatrixXd& P_corr, const MatrixXd& A, const MatrixXd& P_pred_next) {
  Eigen::LLT<MatrixXd> llt(symmetrized(P_pred_next));
  if (llt.info() != Eigen::Success) {
    throw SingularPredictedCovariance("predicted covariance is not invertible");
  }
  // K_s^T = Pcheck^-1 A P_f
  return llt.solve(A * P_corr).transpose();
}

MatrixXd smoother_covariance(const MatrixXd& P_corr, const MatrixXd& K_s,
                             const MatrixXd& P_pred_next, const MatrixXd& P_smooth_next) {
  return symmetrized(P_corr - K_s * (P_pred_next - P_smooth_next) * K_s.transpose());
}

LinearBelief rts_backward_step(const LinearBelief& fwd_corr_k, const LinearBelief& fwd_pred_k1,
                               const LinearBelief& smoothed_k1, const MatrixXd& A_k) {
  const MatrixXd K = smoother_gain(fwd_corr_k.P, A_k, fwd_pred_k1.P);
  return {fwd_corr_k.x + K * (smoothed_k1.x - fwd_pred_k1.x),
          smoother_covariance(fwd_corr_k.P, K, fwd_pred_k1.P, smoothed_k1.P)};
}

Tangent irts_innovation(const Belief& smoothed_k1, const Belief& fwd_pred_k1, Side side) {
  if (side == Side::Left) {
    return lie::log_g(smoothed_k1.X.inverse() * fwd_pred_k1.X);
  }
  return lie::log_g(fwd_pred_k1.X * smoothed_k1.X.inverse());
}

GroupElement irts_update(const GroupElement& X_corr, const Mat12& K_s, const Tangent& z_s,
                         Side side) {
  const Tangent step = K_s * z_s;
  return models::retract(
      side == Side::Left ? ErrorConvention::LeftInvariant : ErrorConvention::RightInvariant,
      X_corr, step);
}

Tangent mrts_innovation(const Belief& smoothed_k1, const Belief& fwd_pred_k1) {
  // Error of the forward prediction relative to the smoothed estimate.
  return models::state_error(ErrorConvention::Multiplicative, smoothed_k1.X, fwd_pred_k1.X);
}

GroupElement mrts_update(const GroupElement& X_corr, const Mat12& K_s, const Tangent& z_s) {
  const Tangent step = K_s * z_s;
  return models::retract(ErrorConvention::Multiplicative, X_corr, step);
}

Belief rts_backward_step(const Belief& fwd_corr_k, const Belief& fwd_pred_k1,
                         const Belief& smoothed_k1, const Mat12& A_k) {
  const Mat12 K = smoother_gain(fwd_corr_k.P, A_k, fwd_pred_k1.P);
  GroupElement X;
  switch (fwd_corr_k.convention) {
    case ErrorConvention::LeftInvariant:
      X = irts_update(fwd_corr_k.X, K, irts_innovation(smoothed_k1, fwd_pred_k1, Side::Left),
                      Side::Left);
      break;
    case ErrorConvention::RightInvariant:
      X = irts_update(fwd_corr_k.X, K, irts_innovation(smoothed_k1, fwd_pred_k1, Side::Right),
                      Side::Right);
      break;
    case ErrorConvention::Multiplicative:
      X = mrts_update(fwd_corr_k.X, K, mrts_innovation(smoothed_k1, fwd_pred_k1));
      break;
  }
  Belief out{X, smoother_covariance(fwd_corr_k.P, K, fwd_pred_k1.P, smoothed_k1.P),
             fwd_corr_k.convention, fwd_corr_k.t};
  require_psd(out.P, "smoothed covariance");
  return out;
}

AlignedMeasurements align_measurements(std::span<const InteroceptiveSample> intero,
                                       const MeasurementBatch& batch) {
  AlignedMeasurements out;
  out.steps.resize(intero.size());
  if (intero.empty()) {
    out.dropped = batch.size();
    return out;
  }
  const auto n = intero.size();
  for (const auto& meas : batch) {
    auto it = std::lower_bound(intero.begin(), intero.end(), meas.t,
                               [](const InteroceptiveSample& s, double t) { return s.t < t; });
    std::size_t k = static_cast<std::size_t>(it - intero.begin());
    if (k == n) {
      k = n - 1;
    } else if (k > 0 && meas.t - intero[k - 1].t <= intero[k].t - meas.t) {
      k = k - 1;
    }
    // Half of the grid spacing on the side the measurement falls.
    double spacing = 0.0;
    if (meas.t >= intero[k].t) {
      spacing = k + 1 < n ? intero[k + 1].t - intero[k].t : (n > 1 ? intero[k].t - intero[k - 1].t : 0.0);
    } else {
      spacing = k > 0 ? intero[k].t - intero[k - 1].t : (n > 1 ? intero[1].t - intero[0].t : 0.0);
    }
    if (std::abs(meas.t - intero[k].t) > 0.5 * spacing + 1e-12) {
      ++out.dropped;
      continue;
    }
    auto& step = out.steps[k];
    (meas.kind == MeasurementKind::GpsLeftInvariant ? step.gps : step.landmarks).push_back(meas);
  }
  for (auto& step : out.steps) {
    std::stable_sort(step.landmarks.begin(), step.landmarks.end(),
                     [](const ExteroMeasurement& a, const ExteroMeasurement& b) {
                       return a.landmark_id.value_or(-1) < b.landmark_id.value_or(-1);
                     });
  }
  return out;
}

ErrorConvention convention_of(SmootherFlavor flavor) {
  return flavor == SmootherFlavor::LIRTS ? ErrorConvention::LeftInvariant
                                         : ErrorConvention::Multiplicative;
}

namespace {

Belief correct_step(const Belief& belief, const StepMeasurements& step, const LandmarkMap& map,
                    const NoiseSpec& noise, SmootherFlavor flavor) {
  Belief out = belief;
  for (const auto& gps : step.gps) {
    out = flavor == SmootherFlavor::LIRTS ? iekf_correct(out, gps, map, noise)
                                          : mekf_correct(out, gps, map, noise);
  }
  if (!step.landmarks.empty()) {
    out = flavor == SmootherFlavor::LIRTS ? iekf_correct(out, step.landmarks, map, noise)
                                          : mekf_correct(out, step.landmarks, map, noise);
  }
  return out;
}

bool finite(const GroupElement& X) {
  return X.attitude().allFinite() && X.position().allFinite() && X.bias_gyro().allFinite() &&
         X.bias_vel().allFinite();
}

}  // namespace

SmootherRun forward_pass(const Belief& initial, std::span<const InteroceptiveSample> intero,
                         const AlignedMeasurements& aligned, const LandmarkMap& map,
                         const NoiseSpec& noise, SmootherFlavor flavor) {
  if (intero.empty()) {
    throw DataError("forward pass needs at least one interoceptive sample");
  }
  if (initial.convention != convention_of(flavor)) {
    throw DataError(std::string("initial belief is ") + models::to_string(initial.convention) +
                    ", smoother expects " + models::to_string(convention_of(flavor)));
  }
  const std::size_t n = intero.size();
  const Mat12 Qc = noise.process_psd();
  SmootherRun run;
  run.forward_pred.reserve(n);
  run.forward_corr.reserve(n);
  run.transitions.reserve(n - 1);

  std::size_t k = 0;
  try {
    Belief first = initial;
    first.t = intero[0].t;
    run.forward_pred.push_back(first);
    run.forward_corr.push_back(correct_step(first, aligned.steps[0], map, noise, flavor));
    for (k = 1; k < n; ++k) {
      const Belief& prev = run.forward_corr.back();
      const InteroceptiveSample& u = intero[k - 1];
      const double dt = intero[k].t - u.t;
      const auto jac = flavor == SmootherFlavor::LIRTS
                           ? models::invariant_process_jacobians(u, prev.X.bias_gyro(),
                                                                 prev.X.bias_vel())
                           : models::multiplicative_process_jacobians(
                                 u, prev.X.attitude(), prev.X.bias_gyro(), prev.X.bias_vel());
      const auto d = models::discretize(jac, Qc, dt);
      run.transitions.push_back(d.A);
      run.forward_pred.push_back(
          kf_predict(prev, d.A, d.L, d.Q, models::propagate(prev.X, u, dt), intero[k].t));
      run.forward_corr.push_back(
          correct_step(run.forward_pred.back(), aligned.steps[k], map, noise, flavor));
      if (!finite(run.forward_corr.back().X)) {
        throw NumericalError("state estimate is not finite");
      }
    }
  } catch (const StepError&) {
    throw;
  } catch (const NumericalError& e) {
    throw StepError(k, e.what());
  }
  return run;
}

void backward_pass(SmootherRun& run) {
  const std::size_t n = run.forward_corr.size();
  run.smoothed.assign(n, run.forward_corr.back());
  std::size_t k = n - 1;
  try {
    while (k-- > 0) {
      run.smoothed[k] = rts_backward_step(run.forward_corr[k], run.forward_pred[k + 1],
                                          run.smoothed[k + 1], run.transitions[k]);
      if (!finite(run.smoothed[k].X)) {
        throw NumericalError("smoothed estimate is not finite");
      }
    }
  } catch (const StepError&) {
    throw;
  } catch (const NumericalError& e) {
    throw StepError(k, e.what());
  }
}

std::vector<GroupElement> means(std::span<const Belief> beliefs) {
  std::vector<GroupElement> out;
  out.reserve(beliefs.size());
  for (const auto& b : beliefs) out.push_back(b.X);
  return out;
}

SmootherResult run_smoother(const Belief& initial, std::span<const InteroceptiveSample> intero,
                            const MeasurementBatch& extero, const LandmarkMap& map,
                            const NoiseSpec& noise, SmootherFlavor flavor, int iterations) {
  if (iterations < 1) {
    throw DataError("smoother needs at least one iteration");
  }
  const AlignedMeasurements aligned = align_measurements(intero, extero);
  SmootherResult result;
  Belief start = initial;
  for (int it = 0; it < iterations; ++it) {
    SmootherRun run = forward_pass(start, intero, aligned, map, noise, flavor);
    backward_pass(run);
    result.forward_per_iteration.push_back(means(run.forward_corr));
    result.smoothed_per_iteration.push_back(means(run.smoothed));
    start = run.smoothed.front();
    result.last = std::move(run);
  }
  return result;
}

}  // namespace irts::est
