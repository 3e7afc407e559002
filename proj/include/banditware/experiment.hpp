#pragma once

// Round-by-round replay simulations of the bandit, learning-curve
// aggregation over repeated simulations, the full-data baseline, and the
// pooled linear-regression baseline study.
//
// Metrics are always computed against the whole environment:
//   rmse      pooled over every (instance, arm) pair, each arm predicted by
//             its own model;
//   accuracy  fraction of instances whose recommended arm (pure argmin of the
//             predictions, cost tie-break) has an actual runtime within
//             (1 + t_r) * best_actual + t_s.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "banditware/bandit.hpp"
#include "banditware/core.hpp"
#include "banditware/dataset.hpp"
#include "banditware/regression.hpp"
#include "banditware/rng.hpp"

namespace banditware {

struct ExperimentConfig {
  std::size_t n_rounds = 50;
  std::size_t n_sims = 100;
  std::uint64_t seed = 0;
  BanditConfig bandit;
  double eval_tolerance_ratio = 0.0;
  double eval_tolerance_seconds = 0.0;
  bool standardize_features = false;  // z-score features over the environment before fitting
  std::size_t threads = 1;            // does not affect results
  bool keep_decisions = false;

  void validate() const {
    if (n_rounds < 1) throw Error(Errc::invalid_config, "n_rounds must be >= 1");
    if (n_sims < 1) throw Error(Errc::invalid_config, "n_sims must be >= 1");
    if (!(eval_tolerance_ratio >= 0.0) || !(eval_tolerance_seconds >= 0.0)) {
      throw Error(Errc::invalid_config, "evaluation tolerances must be >= 0");
    }
    bandit.validate();
  }

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.n_rounds == b.n_rounds && a.n_sims == b.n_sims && a.seed == b.seed && a.bandit == b.bandit &&
           a.eval_tolerance_ratio == b.eval_tolerance_ratio && a.eval_tolerance_seconds == b.eval_tolerance_seconds &&
           a.standardize_features == b.standardize_features;
  }
};

/// Copy of `env` with every feature shifted to mean 0 and scaled to unit
/// population sd across instances. Constant features are only centred.
inline ReplayEnvironment standardized(const ReplayEnvironment& env) {
  if (env.empty()) throw Error(Errc::empty_environment, "environment has no instances");
  const std::size_t m = env.feature_names().size();
  const auto n = static_cast<double>(env.size());
  std::vector<double> mean(m, 0.0), sd(m, 0.0);
  for (const auto& inst : env.instances()) {
    for (std::size_t j = 0; j < m; ++j) mean[j] += inst.features.values[j];
  }
  for (auto& v : mean) v /= n;
  for (const auto& inst : env.instances()) {
    for (std::size_t j = 0; j < m; ++j) sd[j] += (inst.features.values[j] - mean[j]) * (inst.features.values[j] - mean[j]);
  }
  for (auto& v : sd) v = std::sqrt(v / n);

  std::vector<ReplayInstance> out(env.instances().begin(), env.instances().end());
  for (auto& inst : out) {
    for (std::size_t j = 0; j < m; ++j) {
      auto& v = inst.features.values[j];
      v -= mean[j];
      if (sd[j] > 0.0) v /= sd[j];
    }
  }
  return ReplayEnvironment(env.feature_names(), env.hardware_ids(), std::move(out), env.complete_only(),
                           env.dropped_count());
}

struct CurvePoint {
  std::size_t round = 0;  // 1-based
  double mean = 0.0;
  double sd = 0.0;  // sample sd across sims; 0 when n == 1
  std::size_t n = 0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct DecisionRecord {
  std::size_t round = 0;
  std::size_t instance = 0;
  std::string hardware_id;
  DecisionKind kind = DecisionKind::explore;
  double runtime_seconds = 0.0;

  friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

struct SimulationTrace {
  std::vector<double> rmse;
  std::vector<double> accuracy;
  std::vector<DecisionRecord> decisions;
};

struct FullFit {
  std::vector<LinearModel> models;  // aligned with the hardware set
  double rmse = 0.0;
  double accuracy = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<CurvePoint> rmse_curve;
  std::vector<CurvePoint> accuracy_curve;
  double full_fit_rmse = 0.0;
  double full_fit_accuracy = 0.0;
  std::vector<std::vector<DecisionRecord>> decisions;  // per sim, when kept
};

/// Dense (instance x arm) view of a complete environment in hardware-set
/// order, built once and reused for every evaluation.
class EvalTable {
 public:
  EvalTable(const ReplayEnvironment& env, std::span<const HardwareConfig> hardware)
      : names_(env.feature_names()), hardware_(hardware.begin(), hardware.end()) {
    if (env.empty()) throw Error(Errc::empty_environment, "environment has no instances");
    validate_hardware_set(hardware_);
    n_inst_ = env.size();
    n_arms_ = hardware_.size();
    m_ = names_.size();
    std::vector<std::size_t> col;
    for (const auto& h : hardware_) col.push_back(env.arm_index(h.id));
    x_.reserve(n_inst_ * m_);
    actual_.reserve(n_inst_ * n_arms_);
    for (std::size_t i = 0; i < n_inst_; ++i) {
      const auto& inst = env.instance(i);
      x_.insert(x_.end(), inst.features.values.begin(), inst.features.values.end());
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n_arms_; ++k) {
        const auto& v = inst.runtimes[col[k]];
        if (!v) throw Error(Errc::missing_arm, "instance " + inst.id + " has no run on " + hardware_[k].id);
        actual_.push_back(*v);
        best = std::min(best, *v);
      }
      best_.push_back(best);
    }
  }

  std::size_t instances() const noexcept { return n_inst_; }
  std::size_t arms() const noexcept { return n_arms_; }
  std::span<const HardwareConfig> hardware() const noexcept { return hardware_; }

  template <class ModelAt>
  double rmse(ModelAt&& model_at) const {
    check(model_at);
    double sum = 0.0;
    for (std::size_t i = 0; i < n_inst_; ++i) {
      const std::span<const double> x(x_.data() + i * m_, m_);
      for (std::size_t k = 0; k < n_arms_; ++k) {
        const double d = model_at(k).predict_values(x) - actual_[i * n_arms_ + k];
        sum += d * d;
      }
    }
    return std::sqrt(sum / static_cast<double>(n_inst_ * n_arms_));
  }

  template <class ModelAt>
  double accuracy(ModelAt&& model_at, double tolerance_ratio, double tolerance_seconds) const {
    check(model_at);
    std::vector<double> pred(n_arms_);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n_inst_; ++i) {
      const std::span<const double> x(x_.data() + i * m_, m_);
      for (std::size_t k = 0; k < n_arms_; ++k) pred[k] = model_at(k).predict_values(x);
      const auto rec = tolerant_select_index(pred, hardware_, 0.0, 0.0).index;
      if (actual_[i * n_arms_ + rec] <= (1.0 + tolerance_ratio) * best_[i] + tolerance_seconds) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n_inst_);
  }

 private:
  template <class ModelAt>
  void check(ModelAt& model_at) const {
    for (std::size_t k = 0; k < n_arms_; ++k) {
      const LinearModel& mdl = model_at(k);
      if (mdl.feature_names != names_ || mdl.weights.size() != m_) {
        throw Error(Errc::inconsistent_features, "model for " + hardware_[k].id + " uses other features");
      }
    }
  }

  std::vector<std::string> names_;
  std::vector<HardwareConfig> hardware_;
  std::size_t n_inst_ = 0;
  std::size_t n_arms_ = 0;
  std::size_t m_ = 0;
  std::vector<double> x_;
  std::vector<double> actual_;
  std::vector<double> best_;
};

namespace detail {

inline auto model_span_at(std::span<const LinearModel> models, std::size_t arms) {
  if (models.size() != arms) throw Error(Errc::dimension_mismatch, "one model per arm is required");
  return [models](std::size_t k) -> const LinearModel& { return models[k]; };
}

}  // namespace detail

/// Pooled RMSE of `models` (aligned with `hardware`) over every stored run.
inline double evaluate_rmse(std::span<const LinearModel> models, std::span<const HardwareConfig> hardware,
                            const ReplayEnvironment& env) {
  const EvalTable table(env, hardware);
  return table.rmse(detail::model_span_at(models, table.arms()));
}

inline double evaluate_accuracy(std::span<const LinearModel> models, std::span<const HardwareConfig> hardware,
                                const ReplayEnvironment& env, double tolerance_ratio, double tolerance_seconds) {
  const EvalTable table(env, hardware);
  return table.accuracy(detail::model_span_at(models, table.arms()), tolerance_ratio, tolerance_seconds);
}

/// Per-arm least squares on every run in the environment: the best the
/// bandit's models can converge to.
inline FullFit full_fit_baseline(const ReplayEnvironment& env, std::span<const HardwareConfig> hardware,
                                 double ridge_lambda = kDefaultRidgeLambda, double tolerance_ratio = 0.0,
                                 double tolerance_seconds = 0.0) {
  const EvalTable table(env, hardware);
  FullFit ff;
  for (const auto& h : hardware) {
    const auto k = env.arm_index(h.id);
    std::vector<Sample> data;
    data.reserve(env.size());
    for (const auto& inst : env.instances()) {
      if (inst.runtimes[k]) data.push_back(Sample{inst.features, *inst.runtimes[k]});
    }
    ff.models.push_back(fit_least_squares(data, ridge_lambda));
  }
  auto at = detail::model_span_at(ff.models, table.arms());
  ff.rmse = table.rmse(at);
  ff.accuracy = table.accuracy(at, tolerance_ratio, tolerance_seconds);
  return ff;
}

namespace detail {

inline SimulationTrace simulate(const ReplayEnvironment& env, const EvalTable& table, const ExperimentConfig& config,
                                std::size_t sim_index, Bandit* final_state = nullptr) {
  Rng rng = make_stream(config.seed, sim_index);
  const auto schedule = sample_rounds(env, config.n_rounds, rng);
  Bandit bandit(std::vector<HardwareConfig>(table.hardware().begin(), table.hardware().end()), env.feature_names(),
                config.bandit);
  auto model_at = [&bandit](std::size_t k) -> const LinearModel& { return bandit.arms()[k].model; };

  SimulationTrace trace;
  trace.rmse.reserve(config.n_rounds);
  trace.accuracy.reserve(config.n_rounds);
  for (std::size_t r = 0; r < config.n_rounds; ++r) {
    const auto i = schedule[r];
    const auto& x = env.instance(i).features;
    const auto decision = bandit.select_arm(x, rng);
    const double runtime = env.observe(i, decision.hardware_id);
    bandit.update(decision.hardware_id, x, runtime);
    trace.rmse.push_back(table.rmse(model_at));
    trace.accuracy.push_back(table.accuracy(model_at, config.eval_tolerance_ratio, config.eval_tolerance_seconds));
    if (config.keep_decisions) {
      trace.decisions.push_back(DecisionRecord{r + 1, i, decision.hardware_id, decision.kind, runtime});
    }
  }
  if (final_state) *final_state = std::move(bandit);
  return trace;
}

inline std::vector<CurvePoint> aggregate(const std::vector<std::vector<double>>& per_sim, std::size_t n_rounds) {
  std::vector<CurvePoint> curve;
  const std::size_t n = per_sim.size();
  for (std::size_t r = 0; r < n_rounds; ++r) {
    double mean = 0.0;
    for (const auto& s : per_sim) mean += s[r];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const auto& s : per_sim) ss += (s[r] - mean) * (s[r] - mean);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    curve.push_back(CurvePoint{r + 1, mean, sd, n});
  }
  return curve;
}

}  // namespace detail

/// One simulation: the bandit processes `n_rounds` workflows drawn
/// uniformly from `env`, with runtimes served by replay. Seeded from
/// (config.seed, sim_index) only.
inline SimulationTrace run_simulation(const ReplayEnvironment& raw_env, std::span<const HardwareConfig> hardware,
                                      const ExperimentConfig& config, std::size_t sim_index) {
  config.validate();
  const auto env = config.standardize_features ? standardized(raw_env) : raw_env;
  const EvalTable table(env, hardware);
  return detail::simulate(env, table, config, sim_index);
}

/// Bandit state after simulation `sim_index` has run to completion.
inline Bandit run_simulation_state(const ReplayEnvironment& raw_env, std::span<const HardwareConfig> hardware,
                                   const ExperimentConfig& config, std::size_t sim_index) {
  config.validate();
  const auto env = config.standardize_features ? standardized(raw_env) : raw_env;
  const EvalTable table(env, hardware);
  Bandit out(std::vector<HardwareConfig>(hardware.begin(), hardware.end()), env.feature_names(), config.bandit);
  detail::simulate(env, table, config, sim_index, &out);
  return out;
}

/// `n_sims` independent simulations aggregated into mean/sd learning curves,
/// plus the full-fit reference. Parallel over sims; the result does not
/// depend on the thread count.
inline ExperimentReport run_repeated(const ReplayEnvironment& raw_env, std::span<const HardwareConfig> hardware,
                                     const ExperimentConfig& config) {
  config.validate();
  const auto env = config.standardize_features ? standardized(raw_env) : raw_env;
  const EvalTable table(env, hardware);
  std::vector<SimulationTrace> traces(config.n_sims);

  const std::size_t n_threads = std::clamp<std::size_t>(config.threads, 1, config.n_sims);
  if (n_threads == 1) {
    for (std::size_t s = 0; s < config.n_sims; ++s) traces[s] = detail::simulate(env, table, config, s);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t s = next.fetch_add(1); s < config.n_sims; s = next.fetch_add(1)) {
          try {
            traces[s] = detail::simulate(env, table, config, s);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<std::vector<double>> rmse, acc;
  rmse.reserve(traces.size());
  acc.reserve(traces.size());
  for (auto& t : traces) {
    rmse.push_back(std::move(t.rmse));
    acc.push_back(std::move(t.accuracy));
  }

  ExperimentReport report;
  report.config = config;
  report.rmse_curve = detail::aggregate(rmse, config.n_rounds);
  report.accuracy_curve = detail::aggregate(acc, config.n_rounds);
  const auto ff = full_fit_baseline(env, hardware, config.bandit.ridge_lambda, config.eval_tolerance_ratio,
                                    config.eval_tolerance_seconds);
  report.full_fit_rmse = ff.rmse;
  report.full_fit_accuracy = ff.accuracy;
  if (config.keep_decisions) {
    for (auto& t : traces) report.decisions.push_back(std::move(t.decisions));
  }
  return report;
}

struct DistributionStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double range = 0.0;  // max - min

  static DistributionStats of(std::span<const double> v) {
    if (v.empty()) throw Error(Errc::empty_data, "statistics of an empty set");
    DistributionStats s;
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    s.range = s.max - s.min;
    return s;
  }
};

struct BaselineStats {
  std::size_t n_models = 0;
  std::size_t samples_per_model = 0;
  std::vector<double> rmse_values;
  std::vector<double> r2_values;
  std::vector<double> fit_seconds;
  DistributionStats rmse;
  DistributionStats r2;
  DistributionStats fit_duration;
};

/// Pooled regressor of runtime on the dataset features plus a one-hot
/// column per hardware id.
inline std::vector<std::string> pooled_feature_names(const Dataset& d) {
  auto names = d.feature_names;
  for (const auto& h : d.hardware_ids) names.push_back("hardware=" + h);
  return names;
}

inline FeatureVector pooled_features(const Dataset& d, const std::vector<std::string>& names, const RunRecord& r) {
  FeatureVector x{names, r.observation.features.values};
  for (const auto& h : d.hardware_ids) x.values.push_back(h == r.observation.hardware_id ? 1.0 : 0.0);
  return x;
}

/// Trains `n_models` pooled linear regressions, each on `samples_per_model`
/// rows drawn without replacement, and scores each on the full dataset.
inline BaselineStats linear_regression_baseline(const Dataset& dataset, std::size_t samples_per_model,
                                                std::size_t n_models, Rng& rng,
                                                double ridge_lambda = kDefaultRidgeLambda) {
  if (samples_per_model > dataset.size()) {
    throw Error(Errc::sample_too_large, std::to_string(samples_per_model) + " samples requested from " +
                                            std::to_string(dataset.size()) + " records");
  }
  if (samples_per_model < 1) throw Error(Errc::invalid_config, "samples_per_model must be >= 1");
  if (n_models < 1) throw Error(Errc::invalid_config, "n_models must be >= 1");

  const auto names = pooled_feature_names(dataset);
  std::vector<FeatureVector> all_x;
  all_x.reserve(dataset.size());
  for (const auto& r : dataset.records) all_x.push_back(pooled_features(dataset, names, r));

  BaselineStats st;
  st.n_models = n_models;
  st.samples_per_model = samples_per_model;
  for (std::size_t m = 0; m < n_models; ++m) {
    const auto sample = subsample(dataset, samples_per_model, rng);
    std::vector<Sample> train;
    train.reserve(sample.size());
    for (const auto& r : sample.records) {
      train.push_back(Sample{pooled_features(dataset, names, r), r.observation.runtime_seconds});
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto model = fit_least_squares(train, ridge_lambda);
    const auto t1 = std::chrono::steady_clock::now();

    std::vector<PredictionPair> pairs;
    pairs.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      pairs.push_back(PredictionPair{model.predict_values(all_x[i].values), dataset.records[i].observation.runtime_seconds});
    }
    st.rmse_values.push_back(rmse(pairs));
    st.r2_values.push_back(r_squared(pairs));
    st.fit_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  st.rmse = DistributionStats::of(st.rmse_values);
  st.r2 = DistributionStats::of(st.r2_values);
  st.fit_duration = DistributionStats::of(st.fit_seconds);
  return st;
}

}  // namespace banditware
