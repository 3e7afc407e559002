#pragma once

// Shared domain types: workflow feature vectors, hardware descriptions,
// observed runs, and the error type used throughout the library.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace banditware {

enum class Errc {
  dimension_mismatch,
  non_finite_value,
  invalid_hardware,
  empty_data,
  inconsistent_features,
  zero_variance,
  invalid_config,
  duplicate_hardware_id,
  empty_hardware_set,
  unknown_hardware_id,
  negative_runtime,
  missing_history,
  missing_column,
  parse_error,
  empty_dataset,
  no_complete_instances,
  missing_arm,
  empty_environment,
  sample_too_large,
  non_square_matrix,
  checksum_mismatch,
  io_error,
  schema_mismatch,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::non_finite_value: return "NonFiniteValue";
    case Errc::invalid_hardware: return "InvalidHardware";
    case Errc::empty_data: return "EmptyData";
    case Errc::inconsistent_features: return "InconsistentFeatures";
    case Errc::zero_variance: return "ZeroVariance";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::duplicate_hardware_id: return "DuplicateHardwareId";
    case Errc::empty_hardware_set: return "EmptyHardwareSet";
    case Errc::unknown_hardware_id: return "UnknownHardwareId";
    case Errc::negative_runtime: return "NegativeRuntime";
    case Errc::missing_history: return "MissingHistory";
    case Errc::missing_column: return "MissingColumn";
    case Errc::parse_error: return "ParseError";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::no_complete_instances: return "NoCompleteInstances";
    case Errc::missing_arm: return "MissingArm";
    case Errc::empty_environment: return "EmptyEnvironment";
    case Errc::sample_too_large: return "SampleTooLarge";
    case Errc::non_square_matrix: return "NonSquareMatrix";
    case Errc::checksum_mismatch: return "ChecksumMismatch";
    case Errc::io_error: return "IoError";
    case Errc::schema_mismatch: return "SchemaMismatch";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the `Errc` kinds so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// The m-dimensional context of one workflow.
struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline void validate_feature_vector(const FeatureVector& v) {
  if (v.names.size() != v.values.size()) {
    throw Error(Errc::dimension_mismatch, std::to_string(v.names.size()) + " names but " +
                                              std::to_string(v.values.size()) + " values");
  }
  if (v.values.empty()) throw Error(Errc::dimension_mismatch, "feature vector is empty");
  for (std::size_t i = 0; i < v.values.size(); ++i) {
    if (!std::isfinite(v.values[i])) {
      throw Error(Errc::non_finite_value, "feature '" + v.names[i] + "' is not finite");
    }
  }
}

/// A selectable hardware configuration (one bandit arm).
struct HardwareConfig {
  std::string id;
  int cpus = 1;
  double memory_gb = 1.0;
  // Overrides the (cpus, memory_gb) ordering when set.
  std::optional<double> cost_weight;

  friend bool operator==(const HardwareConfig&, const HardwareConfig&) = default;
};

inline void validate_hardware(const HardwareConfig& h) {
  if (h.id.empty()) throw Error(Errc::invalid_hardware, "hardware id is empty");
  if (h.cpus < 1) throw Error(Errc::invalid_hardware, h.id + ": cpus must be >= 1");
  if (!(h.memory_gb > 0.0) || !std::isfinite(h.memory_gb)) {
    throw Error(Errc::invalid_hardware, h.id + ": memory_gb must be positive");
  }
  if (h.cost_weight && (!(*h.cost_weight >= 0.0) || !std::isfinite(*h.cost_weight))) {
    throw Error(Errc::invalid_hardware, h.id + ": cost_weight must be non-negative");
  }
}

/// Checks a whole arm set: non-empty, unique ids, and cost weights given for
/// either every arm or none (a mixed set has no meaningful ordering).
inline void validate_hardware_set(std::span<const HardwareConfig> set) {
  if (set.empty()) throw Error(Errc::empty_hardware_set, "no hardware configurations given");
  std::set<std::string_view> seen;
  std::size_t weighted = 0;
  for (const auto& h : set) {
    validate_hardware(h);
    if (!seen.insert(h.id).second) throw Error(Errc::duplicate_hardware_id, h.id);
    if (h.cost_weight) ++weighted;
  }
  if (weighted != 0 && weighted != set.size()) {
    throw Error(Errc::invalid_hardware, "cost_weight must be set on all hardware or on none");
  }
}

/// Comparison key for resource efficiency: the explicit weight when present,
/// otherwise CPUs first, then memory.
struct CostKey {
  double weight = 0.0;
  int cpus = 0;
  double memory_gb = 0.0;

  friend auto operator<=>(const CostKey&, const CostKey&) = default;
};

inline CostKey resource_cost(const HardwareConfig& h) {
  if (h.cost_weight) return CostKey{*h.cost_weight, 0, 0.0};
  return CostKey{0.0, h.cpus, h.memory_gb};
}

/// Strict total order over a validated hardware set (ids break ties).
inline bool cheaper(const HardwareConfig& a, const HardwareConfig& b) {
  const auto ka = resource_cost(a);
  const auto kb = resource_cost(b);
  if (ka != kb) return ka < kb;
  return a.id < b.id;
}

struct Observation {
  FeatureVector features;
  std::string hardware_id;
  double runtime_seconds = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

inline void validate_observation(const Observation& o) {
  validate_feature_vector(o.features);
  if (!std::isfinite(o.runtime_seconds)) {
    throw Error(Errc::non_finite_value, "runtime is not finite");
  }
  if (o.runtime_seconds < 0.0) throw Error(Errc::negative_runtime, o.hardware_id);
}

struct RunRecord {
  std::string instance_id;
  Observation observation;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// A (context, runtime) pair as stored in an arm's history.
struct Sample {
  FeatureVector features;
  double runtime_seconds = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

}  // namespace banditware
