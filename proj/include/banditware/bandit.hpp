#pragma once

// Decaying contextual epsilon-greedy hardware selection with tolerant
// (resource-aware) exploitation.
//
// Each arm keeps its full observation history and a least-squares runtime
// model refitted after every observation. With probability epsilon an arm is
// drawn uniformly; otherwise the cheapest arm whose estimate lies within
// R_limit = (1 + t_r) * R_min + t_s is chosen. Epsilon is multiplied by
// alpha once per processed workflow, whichever branch was taken.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "banditware/core.hpp"
#include "banditware/regression.hpp"
#include "banditware/rng.hpp"

namespace banditware {

struct BanditConfig {
  double alpha = 0.99;
  double epsilon0 = 1.0;
  double tolerance_ratio = 0.0;    // t_r, dimensionless
  double tolerance_seconds = 0.0;  // t_s, seconds
  double ridge_lambda = kDefaultRidgeLambda;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(Errc::invalid_config, "alpha must be in (0, 1]");
    if (!(epsilon0 >= 0.0 && epsilon0 <= 1.0)) {
      throw Error(Errc::invalid_config, "epsilon0 must be in [0, 1]");
    }
    if (!(tolerance_ratio >= 0.0) || !std::isfinite(tolerance_ratio)) {
      throw Error(Errc::invalid_config, "tolerance_ratio must be >= 0");
    }
    if (!(tolerance_seconds >= 0.0) || !std::isfinite(tolerance_seconds)) {
      throw Error(Errc::invalid_config, "tolerance_seconds must be >= 0");
    }
    if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) {
      throw Error(Errc::invalid_config, "ridge_lambda must be >= 0");
    }
  }

  friend bool operator==(const BanditConfig&, const BanditConfig&) = default;
};

struct Selection {
  std::size_t index = 0;
  double r_limit = 0.0;
};

/// Index of the arm picked by tolerant selection over `estimates`
/// (aligned with `hardware`). Among arms with estimate <= R_limit the
/// cheapest wins; equal cost falls back to the lower estimate, then the id.
/// Arms attaining the minimum are always eligible, so a negative minimum
/// combined with t_r > 0 still yields a choice.
inline Selection tolerant_select_index(std::span<const double> estimates,
                                       std::span<const HardwareConfig> hardware,
                                       double tolerance_ratio, double tolerance_seconds) {
  if (estimates.empty() || estimates.size() != hardware.size()) {
    throw Error(Errc::dimension_mismatch, "estimates and hardware set differ in size");
  }
  const double r_min = *std::min_element(estimates.begin(), estimates.end());
  const double r_limit = (1.0 + tolerance_ratio) * r_min + tolerance_seconds;

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (!(estimates[i] <= r_limit || estimates[i] == r_min)) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto ki = resource_cost(hardware[i]);
    const auto kb = resource_cost(hardware[*best]);
    if (ki != kb) {
      if (ki < kb) best = i;
    } else if (estimates[i] != estimates[*best]) {
      if (estimates[i] < estimates[*best]) best = i;
    } else if (hardware[i].id < hardware[*best].id) {
      best = i;
    }
  }
  return Selection{*best, r_limit};
}

inline std::string tolerant_select(std::span<const double> estimates,
                                   std::span<const HardwareConfig> hardware, double tolerance_ratio,
                                   double tolerance_seconds) {
  return hardware[tolerant_select_index(estimates, hardware, tolerance_ratio, tolerance_seconds).index]
      .id;
}

enum class DecisionKind { explore, exploit };

inline std::string_view to_string(DecisionKind k) {
  return k == DecisionKind::explore ? "explore" : "exploit";
}

struct ArmEstimate {
  std::string hardware_id;
  double runtime_seconds = 0.0;

  friend bool operator==(const ArmEstimate&, const ArmEstimate&) = default;
};

/// Audit record of one selection.
struct Decision {
  std::string hardware_id;
  std::size_t arm_index = 0;
  DecisionKind kind = DecisionKind::explore;
  std::vector<ArmEstimate> estimates;
  std::optional<double> r_limit;  // exploit only

  friend bool operator==(const Decision&, const Decision&) = default;
};

struct ArmState {
  HardwareConfig hardware;
  LinearModel model;
  std::vector<Sample> history;

  friend bool operator==(const ArmState&, const ArmState&) = default;
};

class Bandit {
 public:
  Bandit(std::vector<HardwareConfig> hardware, std::vector<std::string> feature_names,
         BanditConfig config = {})
      : config_(config), feature_names_(std::move(feature_names)), epsilon_(config.epsilon0) {
    config_.validate();
    validate_hardware_set(hardware);
    if (feature_names_.empty()) throw Error(Errc::dimension_mismatch, "no feature names");
    arms_.reserve(hardware.size());
    for (auto& h : hardware) {
      arms_.push_back(ArmState{std::move(h), LinearModel::zero(feature_names_), {}});
    }
    hardware_.reserve(arms_.size());
    for (const auto& a : arms_) hardware_.push_back(a.hardware);
  }

  /// Rebuilds a bandit from persisted parts. With `has_history == false`
  /// the state can recommend but rejects `update`.
  static Bandit restore(BanditConfig config, std::vector<std::string> feature_names,
                        std::vector<ArmState> arms, double epsilon, std::size_t rounds_completed,
                        bool has_history) {
    std::vector<HardwareConfig> hw;
    hw.reserve(arms.size());
    for (const auto& a : arms) hw.push_back(a.hardware);
    Bandit b(std::move(hw), feature_names, config);
    for (const auto& a : arms) {
      if (a.model.feature_names != feature_names || a.model.weights.size() != feature_names.size()) {
        throw Error(Errc::inconsistent_features, "arm " + a.hardware.id + " model feature names");
      }
      if (has_history && a.history.size() != a.model.n_observations) {
        throw Error(Errc::schema_mismatch, "arm " + a.hardware.id + " history size differs from n_observations");
      }
    }
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(Errc::invalid_config, "epsilon out of range");
    b.arms_ = std::move(arms);
    b.epsilon_ = epsilon;
    b.rounds_completed_ = rounds_completed;
    b.has_history_ = has_history;
    return b;
  }

  const BanditConfig& config() const noexcept { return config_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  std::span<const ArmState> arms() const noexcept { return arms_; }
  std::span<const HardwareConfig> hardware() const noexcept { return hardware_; }
  double epsilon() const noexcept { return epsilon_; }
  std::size_t rounds_completed() const noexcept { return rounds_completed_; }
  bool has_history() const noexcept { return has_history_; }

  std::size_t index_of(std::string_view hardware_id) const {
    for (std::size_t i = 0; i < arms_.size(); ++i) {
      if (arms_[i].hardware.id == hardware_id) return i;
    }
    throw Error(Errc::unknown_hardware_id, std::string(hardware_id));
  }

  /// Per-arm estimated runtimes, in arm order.
  std::vector<double> estimate_all(const FeatureVector& x) const {
    check_features(x);
    std::vector<double> out;
    out.reserve(arms_.size());
    for (const auto& a : arms_) out.push_back(a.model.predict_values(x.values));
    return out;
  }

  /// One epsilon-greedy draw. Does not change the bandit.
  Decision select_arm(const FeatureVector& x, Rng& rng) const {
    const auto est = estimate_all(x);
    Decision d;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon_) {
      std::uniform_int_distribution<std::size_t> pick(0, arms_.size() - 1);
      d.kind = DecisionKind::explore;
      d.arm_index = pick(rng);
    } else {
      const auto sel =
          tolerant_select_index(est, hardware_, config_.tolerance_ratio, config_.tolerance_seconds);
      d.kind = DecisionKind::exploit;
      d.arm_index = sel.index;
      d.r_limit = sel.r_limit;
    }
    d.hardware_id = arms_[d.arm_index].hardware.id;
    d.estimates.reserve(arms_.size());
    for (std::size_t i = 0; i < arms_.size(); ++i) {
      d.estimates.push_back(ArmEstimate{arms_[i].hardware.id, est[i]});
    }
    return d;
  }

  /// The exploit branch alone: deterministic, no state change.
  std::string recommend(const FeatureVector& x) const {
    const auto est = estimate_all(x);
    return tolerant_select(est, hardware_, config_.tolerance_ratio, config_.tolerance_seconds);
  }

  /// Records an observed runtime for one arm, refits that arm, and decays
  /// epsilon. Leaves the bandit untouched when it throws.
  void update(std::string_view hardware_id, const FeatureVector& x, double runtime_seconds) {
    const std::size_t k = index_of(hardware_id);
    if (!std::isfinite(runtime_seconds)) throw Error(Errc::non_finite_value, "runtime");
    if (runtime_seconds < 0.0) {
      throw Error(Errc::negative_runtime, std::string(hardware_id) + ": " + std::to_string(runtime_seconds));
    }
    check_features(x);
    if (!has_history_) {
      throw Error(Errc::missing_history, "bandit was loaded without observation histories");
    }

    auto history = arms_[k].history;
    history.push_back(Sample{x, runtime_seconds});
    auto model = fit_least_squares(history, config_.ridge_lambda);

    arms_[k].history = std::move(history);
    arms_[k].model = std::move(model);
    epsilon_ *= config_.alpha;
    ++rounds_completed_;
  }

  friend bool operator==(const Bandit&, const Bandit&) = default;

 private:
  void check_features(const FeatureVector& x) const {
    if (x.names != feature_names_) {
      throw Error(Errc::inconsistent_features, "feature names do not match the bandit");
    }
    validate_feature_vector(x);
  }

  BanditConfig config_;
  std::vector<std::string> feature_names_;
  std::vector<ArmState> arms_;
  std::vector<HardwareConfig> hardware_;
  double epsilon_ = 1.0;
  std::size_t rounds_completed_ = 0;
  bool has_history_ = true;
};

}  // namespace banditware
