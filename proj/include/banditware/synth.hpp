#pragma once

// Synthetic hardware scenarios: each arm's runtime is a known linear
// function of the features plus Gaussian noise. Scenarios are described in
// a plain key-value text file, e.g.
//
//   features = num_tasks
//   feature.num_tasks = choice 100 500
//   instances = 80
//   noise_ratio = 0.02
//   arm.H0.cpus = 2
//   arm.H0.memory_gb = 16
//   arm.H0.weights = 0.8
//   arm.H0.bias = 20
//
// `noise_ratio` sets each arm's noise sd to that fraction of its mean
// runtime under the feature distribution; `arm.<id>.noise_sd` overrides it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "banditware/core.hpp"
#include "banditware/csv.hpp"
#include "banditware/dataset.hpp"
#include "banditware/rng.hpp"

namespace banditware {

struct SyntheticArmSpec {
  HardwareConfig hardware;
  std::vector<double> true_weights;
  double true_bias = 0.0;
  double noise_sd = 0.0;  // seconds

  double mean_runtime(std::span<const double> x) const {
    double acc = true_bias;
    for (std::size_t i = 0; i < true_weights.size(); ++i) acc += true_weights[i] * x[i];
    return acc;
  }
};

/// Marginal distribution of one feature: a uniform pick from a finite set,
/// or a continuous uniform range.
struct FeatureDistribution {
  enum class Kind { choice, uniform };
  Kind kind = Kind::choice;
  std::vector<double> choices;
  double low = 0.0;
  double high = 0.0;

  double sample(Rng& rng) const {
    if (kind == Kind::choice) {
      std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
      return choices[pick(rng)];
    }
    std::uniform_real_distribution<double> u(low, high);
    return u(rng);
  }

  double mean() const {
    if (kind == Kind::uniform) return 0.5 * (low + high);
    double s = 0.0;
    for (double c : choices) s += c;
    return s / static_cast<double>(choices.size());
  }
};

struct SyntheticDraw {
  FeatureVector features;
  std::vector<double> runtimes;  // one per arm, in arm order
};

class SyntheticEnv {
 public:
  SyntheticEnv(std::vector<SyntheticArmSpec> specs, std::vector<std::string> feature_names,
               std::vector<FeatureDistribution> sampler)
      : specs_(std::move(specs)), names_(std::move(feature_names)), sampler_(std::move(sampler)) {
    if (names_.empty() || sampler_.size() != names_.size()) {
      throw Error(Errc::dimension_mismatch, "one distribution per feature name is required");
    }
    std::vector<HardwareConfig> hw;
    for (const auto& s : specs_) {
      if (s.true_weights.size() != names_.size()) {
        throw Error(Errc::dimension_mismatch, "arm " + s.hardware.id + " has " +
                                                  std::to_string(s.true_weights.size()) + " weights for " +
                                                  std::to_string(names_.size()) + " features");
      }
      if (!(s.noise_sd >= 0.0)) throw Error(Errc::invalid_config, "arm " + s.hardware.id + ": noise_sd < 0");
      hw.push_back(s.hardware);
    }
    validate_hardware_set(hw);
    for (const auto& d : sampler_) {
      if (d.kind == FeatureDistribution::Kind::choice && d.choices.empty()) {
        throw Error(Errc::invalid_config, "empty choice list");
      }
      if (d.kind == FeatureDistribution::Kind::uniform && !(d.low <= d.high)) {
        throw Error(Errc::invalid_config, "uniform range with low > high");
      }
    }
    hardware_ = std::move(hw);
  }

  const std::vector<SyntheticArmSpec>& specs() const noexcept { return specs_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  const std::vector<HardwareConfig>& hardware() const noexcept { return hardware_; }

  /// Draws a context, then each arm's runtime w^T x + b + N(0, sd), clamped at 0.
  SyntheticDraw draw(Rng& rng) const {
    SyntheticDraw d;
    d.features.names = names_;
    for (const auto& s : sampler_) d.features.values.push_back(s.sample(rng));
    std::normal_distribution<double> z(0.0, 1.0);
    for (const auto& s : specs_) {
      const double r = s.mean_runtime(d.features.values) + s.noise_sd * z(rng);
      d.runtimes.push_back(std::max(0.0, r));
    }
    return d;
  }

  /// `n` independent draws as a dataset with one record per (instance, arm).
  Dataset materialize(std::size_t n, Rng& rng) const {
    std::vector<RunRecord> records;
    records.reserve(n * specs_.size());
    const auto width = std::to_string(n > 0 ? n - 1 : 0).size();
    for (std::size_t i = 0; i < n; ++i) {
      auto d = draw(rng);
      auto id = std::to_string(i);
      id = "s" + std::string(width - id.size(), '0') + id;
      for (std::size_t k = 0; k < specs_.size(); ++k) {
        records.push_back(RunRecord{id, Observation{d.features, specs_[k].hardware.id, d.runtimes[k]}});
      }
    }
    return Dataset::from_records(names_, std::move(records));
  }

 private:
  std::vector<SyntheticArmSpec> specs_;
  std::vector<std::string> names_;
  std::vector<FeatureDistribution> sampler_;
  std::vector<HardwareConfig> hardware_;
};

inline SyntheticEnv make_synthetic_env(std::vector<SyntheticArmSpec> specs, std::vector<std::string> feature_names,
                                       std::vector<FeatureDistribution> sampler) {
  return SyntheticEnv(std::move(specs), std::move(feature_names), std::move(sampler));
}

struct SyntheticScenario {
  std::vector<std::string> feature_names;
  std::vector<FeatureDistribution> features;
  std::vector<SyntheticArmSpec> arms;
  std::vector<bool> explicit_noise;  // per arm: noise_sd given in the file
  std::size_t instances = 80;
  double noise_ratio = 0.0;

  /// Recomputes the noise sd of every arm without an explicit override.
  void apply_noise_ratio(double ratio) {
    noise_ratio = ratio;
    std::vector<double> mean_x;
    for (const auto& f : features) mean_x.push_back(f.mean());
    for (std::size_t k = 0; k < arms.size(); ++k) {
      if (!explicit_noise[k]) arms[k].noise_sd = ratio * std::abs(arms[k].mean_runtime(mean_x));
    }
  }

  /// Drops every per-arm override so `ratio` applies to all arms.
  void override_noise_ratio(double ratio) {
    std::fill(explicit_noise.begin(), explicit_noise.end(), false);
    apply_noise_ratio(ratio);
  }

  SyntheticEnv environment() const { return SyntheticEnv(arms, feature_names, features); }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace detail

inline SyntheticScenario parse_scenario(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::vector<std::string> arm_order;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    return Error(Errc::parse_error, source + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail("expected key = value");
    auto key = detail::trim(line.substr(0, eq));
    auto value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw fail("empty key");
    if (key.rfind("arm.", 0) == 0) {
      const auto dot = key.find('.', 4);
      if (dot == std::string::npos) throw fail("arm keys look like arm.<id>.<field>");
      auto id = key.substr(4, dot - 4);
      if (std::find(arm_order.begin(), arm_order.end(), id) == arm_order.end()) arm_order.push_back(id);
    }
    if (!kv.emplace(key, value).second) throw fail("duplicate key '" + key + "'");
  }
  line_no = 0;

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    auto v = it->second;
    kv.erase(it);
    return v;
  };
  auto number = [&](const std::string& key, const std::string& text) {
    auto v = csv::parse_double(text);
    if (!v || !std::isfinite(*v)) throw Error(Errc::parse_error, source + ": " + key + ": not a number '" + text + "'");
    return *v;
  };
  auto numbers = [&](const std::string& key, const std::vector<std::string>& ws) {
    std::vector<double> out;
    for (const auto& w : ws) out.push_back(number(key, w));
    return out;
  };
  auto required = [&](const std::string& key) {
    auto v = take(key);
    if (!v) throw Error(Errc::parse_error, source + ": missing key '" + key + "'");
    return *v;
  };

  SyntheticScenario sc;
  for (auto& w : detail::words(required("features"))) {
    if (w.back() == ',') w.pop_back();
    if (!w.empty()) sc.feature_names.push_back(w);
  }
  if (sc.feature_names.empty()) throw Error(Errc::parse_error, source + ": no features listed");
  for (const auto& f : sc.feature_names) {
    const auto key = "feature." + f;
    auto ws = detail::words(required(key));
    FeatureDistribution d;
    if (ws.empty()) throw Error(Errc::parse_error, source + ": " + key + " is empty");
    const auto kind = ws.front();
    ws.erase(ws.begin());
    if (kind == "choice") {
      d.kind = FeatureDistribution::Kind::choice;
      d.choices = numbers(key, ws);
      if (d.choices.empty()) throw Error(Errc::parse_error, source + ": " + key + ": no choices");
    } else if (kind == "uniform") {
      d.kind = FeatureDistribution::Kind::uniform;
      auto v = numbers(key, ws);
      if (v.size() != 2 || v[0] > v[1]) throw Error(Errc::parse_error, source + ": " + key + ": uniform <low> <high>");
      d.low = v[0];
      d.high = v[1];
    } else {
      throw Error(Errc::parse_error, source + ": " + key + ": unknown distribution '" + kind + "'");
    }
    sc.features.push_back(std::move(d));
  }
  if (auto v = take("instances")) {
    const double n = number("instances", *v);
    if (n < 1 || n != std::floor(n)) throw Error(Errc::parse_error, source + ": instances must be a positive integer");
    sc.instances = static_cast<std::size_t>(n);
  }
  double ratio = 0.0;
  if (auto v = take("noise_ratio")) ratio = number("noise_ratio", *v);
  if (ratio < 0.0) throw Error(Errc::parse_error, source + ": noise_ratio must be >= 0");

  if (arm_order.empty()) throw Error(Errc::parse_error, source + ": no arms defined");
  for (const auto& id : arm_order) {
    const auto p = "arm." + id + ".";
    SyntheticArmSpec a;
    a.hardware.id = id;
    const double cpus = number(p + "cpus", required(p + "cpus"));
    if (cpus != std::floor(cpus)) throw Error(Errc::parse_error, source + ": " + p + "cpus must be an integer");
    a.hardware.cpus = static_cast<int>(cpus);
    a.hardware.memory_gb = number(p + "memory_gb", required(p + "memory_gb"));
    if (auto w = take(p + "cost_weight")) a.hardware.cost_weight = number(p + "cost_weight", *w);
    a.true_weights = numbers(p + "weights", detail::words(required(p + "weights")));
    a.true_bias = number(p + "bias", required(p + "bias"));
    bool has_noise = false;
    if (auto n = take(p + "noise_sd")) {
      a.noise_sd = number(p + "noise_sd", *n);
      has_noise = true;
    }
    sc.arms.push_back(std::move(a));
    sc.explicit_noise.push_back(has_noise);
  }
  if (!kv.empty()) throw Error(Errc::parse_error, source + ": unknown key '" + kv.begin()->first + "'");

  sc.apply_noise_ratio(ratio);
  try {
    (void)sc.environment();
  } catch (const Error& e) {
    throw Error(Errc::parse_error, source + ": " + e.what());
  }
  return sc;
}

inline SyntheticScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  return parse_scenario(in, path.string());
}

}  // namespace banditware
