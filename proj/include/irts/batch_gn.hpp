#pragma once

#include <span>
#include <vector>

#include "irts/block_tridiagonal.hpp"
#include "irts/linear_system.hpp"
#include "irts/smoother.hpp"

namespace irts::batch {

using est::Belief;
using lie::GroupElement;
using models::ExteroMeasurement;
using models::InteroceptiveSample;
using models::LandmarkMap;
using models::MeasurementBatch;
using models::NoiseSpec;

enum class GnFlavor { IGN, MGN };

/// IGN linearizes with the left-invariant error, MGN with the multiplicative one.
models::ErrorConvention convention_of(GnFlavor flavor);

struct BatchProblem {
  Belief prior;  // convention must match the solver flavor
  std::vector<InteroceptiveSample> intero;
  MeasurementBatch extero;
  LandmarkMap map;
  NoiseSpec noise;

  std::size_t horizon() const { return intero.empty() ? 0 : intero.size() - 1; }
};

struct BatchSolution {
  std::vector<GroupElement> states;
  std::vector<double> costs;                         // cost of each snapshot
  std::vector<std::vector<GroupElement>> snapshots;  // iterations + 1 entries
};

/// Residual a + J_k delta_k + J_next delta_{k+1} of one process step, where
/// delta is the error of the current iterate under the flavor's convention.
struct ProcessFactor {
  Vec12 a;
  Mat12 J_k;
  Mat12 J_next;
  Mat12 W;
};
ProcessFactor process_factor(GnFlavor flavor, const GroupElement& X_k, const GroupElement& X_next,
                             const InteroceptiveSample& u, double dt, const NoiseSpec& noise);

/// Residual a + J delta for a GPS fix or a landmark stack.
struct MeasurementFactor {
  Eigen::VectorXd a;
  Eigen::MatrixXd J;
  Eigen::MatrixXd W;
};
MeasurementFactor measurement_factor(GnFlavor flavor, std::span<const ExteroMeasurement> meas,
                                     const GroupElement& X, const LandmarkMap& map,
                                     const NoiseSpec& noise);

std::vector<GroupElement> dead_reckon(const GroupElement& prior_state,
                                      std::span<const InteroceptiveSample> intero);

NormalEquations assemble(const BatchProblem& problem, std::span<const GroupElement> current,
                         GnFlavor flavor);

struct GnStep {
  std::vector<GroupElement> next;
  double cost;  // at `current`
};
/// One undamped Gauss-Newton step.
GnStep gn_iterate(const BatchProblem& problem, std::span<const GroupElement> current,
                  GnFlavor flavor);
double batch_cost(const BatchProblem& problem, std::span<const GroupElement> current,
                  GnFlavor flavor);

/// Dead reckoning followed by exactly `iterations` Gauss-Newton steps.
BatchSolution solve(const BatchProblem& problem, GnFlavor flavor, int iterations);

/// The same machinery on a vector-space linear-Gaussian system.
NormalEquations assemble(const est::LinearGaussianSystem& sys,
                         std::span<const Eigen::VectorXd> current);
std::vector<Eigen::VectorXd> linear_gn_iterate(const est::LinearGaussianSystem& sys,
                                               std::span<const Eigen::VectorXd> current);

}  // namespace irts::batch
