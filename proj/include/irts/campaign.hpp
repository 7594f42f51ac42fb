#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "irts/sim.hpp"

namespace irts::sim {

enum class Estimator { IRTS, MRTS, IGN, MGN };

inline constexpr Estimator kAllEstimators[4] = {Estimator::IRTS, Estimator::MRTS, Estimator::IGN,
                                                Estimator::MGN};

const char* to_string(Estimator e);
/// Case-insensitive; throws ConfigParse on an unknown name.
Estimator parse_estimator(const std::string& name);
/// Comma-separated list, deduplicated, in canonical order.
std::vector<Estimator> parse_estimators(const std::string& list);
bool is_smoother(Estimator e);
/// Convention of the initial belief handed to the estimator.
ErrorConvention convention_of(Estimator e);

struct CampaignOptions {
  std::vector<Estimator> estimators{Estimator::IRTS, Estimator::MRTS};
  int trials = 50;
  int iterations = 1;
  std::uint64_t seed = 1;
  /// 0 picks std::thread::hardware_concurrency().
  int threads = 0;
  /// When false the initial error is exactly the configured mean.
  bool sample_initial_error = true;

  void validate() const;
};

/// Outcome of one estimator on one trial.
struct EstimatorRun {
  bool ok = false;
  std::string failure;
  /// RMSE after each iteration (smoother sweep or Gauss-Newton step).
  std::vector<StateRmse> per_iteration;
  /// Forward-filter RMSE of the first sweep (smoothers only).
  std::optional<StateRmse> filter;
  /// Per-step error magnitudes after the last iteration.
  StateErrors final_errors;
};

struct TrialResult {
  int trial = 0;
  Vec12 initial_error = Vec12::Zero();
  std::vector<EstimatorRun> runs;  // parallel to CampaignOptions::estimators
};

struct Summary {
  double mean = 0.0;
  double p025 = 0.0;
  double p975 = 0.0;
  std::size_t count = 0;
};

/// Statistics across the successful trials of one estimator.
struct EstimatorStats {
  Estimator estimator;
  std::size_t failures = 0;
  /// [iteration][state]
  std::vector<std::array<Summary, 4>> per_iteration;
  std::optional<std::array<Summary, 4>> filter;
};

struct CampaignResult {
  CampaignOptions options;
  std::vector<double> times;
  std::vector<TrialResult> trials;
  std::vector<EstimatorStats> stats;

  const EstimatorStats& stats_for(Estimator e) const;
  /// Index of `e` in options.estimators; throws if absent.
  std::size_t slot(Estimator e) const;
};

/// Sample percentile with linear interpolation between order statistics,
/// p in [0, 1]. Throws on an empty sample.
double percentile(std::vector<double> values, double p);
Summary summarize(const std::vector<double>& values);

/// Everything one trial needs, derived from (config, spec, options.seed, trial).
struct TrialData {
  std::vector<GroupElement> truth;
  std::vector<InteroceptiveSample> intero;
  MeasurementBatch extero;
  LandmarkMap map;
  Vec12 initial_error;
};
TrialData make_trial(const ScenarioConfig& config, const Truth& truth,
                     const InitialErrorSpec& spec, const CampaignOptions& options, int trial);

/// Runs one estimator from the trial's initial error.
EstimatorRun run_estimator(Estimator e, const TrialData& data, const NoiseSpec& noise,
                           const Mat12& P0, int iterations);

CampaignResult run_campaign(const ScenarioConfig& config, const InitialErrorSpec& spec,
                            const CampaignOptions& options);

}  // namespace irts::sim
