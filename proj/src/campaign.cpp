#include "irts/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <sstream>
#include <thread>

#include "irts/batch_gn.hpp"
#include "irts/errors.hpp"
#include "irts/smoother.hpp"

namespace irts::sim {

const char* to_string(Estimator e) {
  switch (e) {
    case Estimator::IRTS: return "irts";
    case Estimator::MRTS: return "mrts";
    case Estimator::IGN: return "ign";
    case Estimator::MGN: return "mgn";
  }
  return "?";
}

Estimator parse_estimator(const std::string& name) {
  std::string lower;
  for (char c : name) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  for (Estimator e : kAllEstimators) {
    if (lower == to_string(e)) return e;
  }
  throw ConfigParse(0, "estimators", "unknown estimator '" + name + "'");
}

std::vector<Estimator> parse_estimators(const std::string& list) {
  std::vector<bool> seen(4, false);
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    seen[static_cast<std::size_t>(parse_estimator(item))] = true;
  }
  std::vector<Estimator> out;
  for (Estimator e : kAllEstimators) {
    if (seen[static_cast<std::size_t>(e)]) out.push_back(e);
  }
  if (out.empty()) throw ConfigParse(0, "estimators", "no estimator selected");
  return out;
}

bool is_smoother(Estimator e) { return e == Estimator::IRTS || e == Estimator::MRTS; }

ErrorConvention convention_of(Estimator e) {
  return e == Estimator::IRTS || e == Estimator::IGN ? ErrorConvention::LeftInvariant
                                                     : ErrorConvention::Multiplicative;
}

void CampaignOptions::validate() const {
  if (trials < 1) throw ConfigParse(0, "trials", "trials must be >= 1");
  if (iterations < 1) throw ConfigParse(0, "iterations", "iterations must be >= 1");
  if (threads < 0) throw ConfigParse(0, "threads", "threads must be >= 0");
  if (estimators.empty()) throw ConfigParse(0, "estimators", "no estimator selected");
}

const EstimatorStats& CampaignResult::stats_for(Estimator e) const { return stats[slot(e)]; }

std::size_t CampaignResult::slot(Estimator e) const {
  const auto it = std::find(options.estimators.begin(), options.estimators.end(), e);
  if (it == options.estimators.end()) {
    throw DataError(std::string("estimator ") + to_string(e) + " was not run");
  }
  return static_cast<std::size_t>(it - options.estimators.begin());
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) {
    s.mean = s.p025 = s.p975 = std::nan("");
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  s.p025 = percentile(values, 0.025);
  s.p975 = percentile(values, 0.975);
  // With a single sample all three coincide exactly.
  if (values.size() == 1) s.p025 = s.p975 = s.mean;
  return s;
}

namespace {

// Independent stream per (campaign seed, trial, purpose).
std::mt19937_64 stream(std::uint64_t seed, int trial, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), purpose};
  return std::mt19937_64(seq);
}

std::uint64_t stream_seed(std::uint64_t seed, int trial, std::uint32_t purpose) {
  return stream(seed, trial, purpose)();
}

enum Purpose : std::uint32_t { kIntero = 1, kExtero = 2, kInitial = 3 };

bool finite(const StateRmse& r) {
  return std::isfinite(r.attitude) && std::isfinite(r.position) && std::isfinite(r.bias_gyro) &&
         std::isfinite(r.bias_vel);
}

}  // namespace

TrialData make_trial(const ScenarioConfig& config, const Truth& truth,
                     const InitialErrorSpec& spec, const CampaignOptions& options, int trial) {
  TrialData data;
  const CorruptedIntero intero =
      corrupt_interoceptive(truth, config, stream_seed(options.seed, trial, kIntero));
  data.truth = truth_states(truth, intero);
  data.intero = intero.samples;
  data.map = config.landmark_map();
  data.extero =
      generate_extero(data.truth, truth.t, config, stream_seed(options.seed, trial, kExtero));
  data.initial_error = spec.mean;
  if (options.sample_initial_error) {
    auto rng = stream(options.seed, trial, kInitial);
    std::normal_distribution<double> n01;
    Vec12 z;
    for (int i = 0; i < 12; ++i) z[i] = n01(rng);
    data.initial_error += spec.covariance.diagonal().cwiseSqrt().asDiagonal() * z;
  }
  return data;
}

EstimatorRun run_estimator(Estimator e, const TrialData& data, const NoiseSpec& noise,
                           const Mat12& P0, int iterations) {
  EstimatorRun run;
  const Belief prior = initial_belief(data.truth.front(), data.initial_error, P0, convention_of(e));
  std::vector<std::vector<GroupElement>> iterates;
  try {
    if (is_smoother(e)) {
      const auto flavor = e == Estimator::IRTS ? est::SmootherFlavor::LIRTS : est::SmootherFlavor::MRTS;
      auto result =
          est::run_smoother(prior, data.intero, data.extero, data.map, noise, flavor, iterations);
      run.filter = rmse(result.forward_per_iteration.front(), data.truth);
      iterates = std::move(result.smoothed_per_iteration);
    } else {
      const auto flavor = e == Estimator::IGN ? batch::GnFlavor::IGN : batch::GnFlavor::MGN;
      batch::BatchProblem problem{prior, data.intero, data.extero, data.map, noise};
      auto sol = batch::solve(problem, flavor, iterations);
      iterates.assign(std::make_move_iterator(sol.snapshots.begin() + 1),
                      std::make_move_iterator(sol.snapshots.end()));
    }
  } catch (const Error& err) {
    run.failure = err.what();
    return run;
  }
  for (const auto& states : iterates) {
    run.per_iteration.push_back(rmse(states, data.truth));
    if (!finite(run.per_iteration.back())) {
      run.failure = "non-finite RMSE";
      run.per_iteration.clear();
      return run;
    }
  }
  run.final_errors = state_errors(iterates.back(), data.truth);
  run.ok = true;
  return run;
}

CampaignResult run_campaign(const ScenarioConfig& config, const InitialErrorSpec& spec,
                            const CampaignOptions& options) {
  config.validate();
  spec.validate();
  options.validate();
  const Truth truth = synthesize_truth(config);

  CampaignResult result;
  result.options = options;
  result.times = truth.t;
  result.trials.resize(static_cast<std::size_t>(options.trials));

  auto work = [&](int trial) {
    const TrialData data = make_trial(config, truth, spec, options, trial);
    TrialResult& tr = result.trials[static_cast<std::size_t>(trial)];
    tr.trial = trial;
    tr.initial_error = data.initial_error;
    for (Estimator e : options.estimators) {
      tr.runs.push_back(run_estimator(e, data, config.noise, spec.covariance, options.iterations));
    }
  };

  int threads = options.threads > 0 ? options.threads
                                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, options.trials);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int t = next++; t < options.trials; t = next++) work(t);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  // Aggregation runs in trial order, so the statistics do not depend on
  // scheduling.
  for (std::size_t s = 0; s < options.estimators.size(); ++s) {
    EstimatorStats st;
    st.estimator = options.estimators[s];
    std::vector<const EstimatorRun*> ok;
    for (const auto& tr : result.trials) {
      if (tr.runs[s].ok) {
        ok.push_back(&tr.runs[s]);
      } else {
        ++st.failures;
      }
    }
    for (int it = 0; it < options.iterations; ++it) {
      std::array<Summary, 4> row;
      for (int state = 0; state < 4; ++state) {
        std::vector<double> v;
        for (const auto* r : ok) v.push_back(r->per_iteration[static_cast<std::size_t>(it)][state]);
        row[static_cast<std::size_t>(state)] = summarize(v);
      }
      st.per_iteration.push_back(row);
    }
    if (is_smoother(st.estimator)) {
      std::array<Summary, 4> row;
      for (int state = 0; state < 4; ++state) {
        std::vector<double> v;
        for (const auto* r : ok) v.push_back((*r->filter)[state]);
        row[static_cast<std::size_t>(state)] = summarize(v);
      }
      st.filter = row;
    }
    result.stats.push_back(std::move(st));
  }
  return result;
}

}  // namespace irts::sim
