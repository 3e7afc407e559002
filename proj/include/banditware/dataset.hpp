#pragma once

// Historical run traces and the replay environment that answers "what was
// the runtime of instance j on hardware k" during simulation.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "banditware/core.hpp"
#include "banditware/csv.hpp"
#include "banditware/rng.hpp"

namespace banditware {

struct CsvColumns {
  std::vector<std::string> features;
  std::string hardware = "hardware";
  std::string runtime = "runtime";
  std::optional<std::string> instance;
};

/// Canonical instance id for rows without an explicit one: the exact
/// feature tuple.
inline std::string instance_key(const FeatureVector& x) {
  std::string key;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    if (i) key.push_back(';');
    key += csv::format_double(x.values[i]);
  }
  return key;
}

struct Dataset {
  std::vector<RunRecord> records;
  std::vector<std::string> feature_names;
  std::vector<std::string> hardware_ids;  // sorted, unique

  std::size_t size() const noexcept { return records.size(); }

  /// Builds a dataset and derives `hardware_ids`; validates every record.
  static Dataset from_records(std::vector<std::string> feature_names, std::vector<RunRecord> records) {
    Dataset d;
    d.feature_names = std::move(feature_names);
    std::set<std::string> ids;
    for (const auto& r : records) {
      if (r.instance_id.empty()) throw Error(Errc::parse_error, "record with empty instance id");
      if (r.observation.features.names != d.feature_names) {
        throw Error(Errc::inconsistent_features, "record " + r.instance_id + " feature names");
      }
      validate_observation(r.observation);
      ids.insert(r.observation.hardware_id);
    }
    d.records = std::move(records);
    d.hardware_ids.assign(ids.begin(), ids.end());
    return d;
  }

  /// Records satisfying `keep`, with hardware ids recomputed.
  Dataset filter(const std::function<bool(const RunRecord&)>& keep) const {
    std::vector<RunRecord> kept;
    for (const auto& r : records) {
      if (keep(r)) kept.push_back(r);
    }
    return from_records(feature_names, std::move(kept));
  }
};

inline Dataset parse_dataset(const csv::Table& table, const CsvColumns& cols, const std::string& source) {
  if (cols.features.empty()) throw Error(Errc::missing_column, source + ": no feature columns named");
  std::vector<std::size_t> fcols;
  for (const auto& f : cols.features) fcols.push_back(table.require_column(f, source));
  const auto hcol = table.require_column(cols.hardware, source);
  const auto rcol = table.require_column(cols.runtime, source);
  std::optional<std::size_t> icol;
  if (cols.instance) icol = table.require_column(*cols.instance, source);

  auto cell_error = [&](std::size_t row, std::size_t col, const std::string& what) {
    return Error(Errc::parse_error, source + ": row " + std::to_string(row + 2) + ", column '" +
                                        table.header[col] + "': " + what + " '" + table.rows[row][col] + "'");
  };

  std::vector<RunRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    RunRecord rec;
    rec.observation.features.names = cols.features;
    for (auto c : fcols) {
      auto v = csv::parse_double(row[c]);
      if (!v || !std::isfinite(*v)) throw cell_error(r, c, "not a finite number");
      rec.observation.features.values.push_back(*v);
    }
    rec.observation.hardware_id = row[hcol];
    if (rec.observation.hardware_id.empty()) throw cell_error(r, hcol, "empty hardware id");
    auto rt = csv::parse_double(row[rcol]);
    if (!rt || !std::isfinite(*rt) || *rt < 0.0) throw cell_error(r, rcol, "not a non-negative runtime");
    rec.observation.runtime_seconds = *rt;
    if (icol) {
      rec.instance_id = row[*icol];
      if (rec.instance_id.empty()) throw cell_error(r, *icol, "empty instance id");
    } else {
      rec.instance_id = instance_key(rec.observation.features);
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw Error(Errc::empty_dataset, source + ": no data rows");
  return Dataset::from_records(cols.features, std::move(records));
}

inline Dataset load_csv(const std::filesystem::path& path, const CsvColumns& cols) {
  return parse_dataset(csv::read_file(path), cols, path.string());
}

/// Writes `instance,<features...>,hardware,runtime`.
inline void write_csv(const Dataset& d, std::ostream& out) {
  std::vector<std::string> header{"instance"};
  header.insert(header.end(), d.feature_names.begin(), d.feature_names.end());
  header.push_back("hardware");
  header.push_back("runtime");
  csv::write_row(out, header);
  for (const auto& r : d.records) {
    std::vector<std::string> row{r.instance_id};
    for (double v : r.observation.features.values) row.push_back(csv::format_double(v));
    row.push_back(r.observation.hardware_id);
    row.push_back(csv::format_double(r.observation.runtime_seconds));
    csv::write_row(out, row);
  }
}

inline void write_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  write_csv(d, out);
}

/// Columns read back by `load_csv` for a file produced by `write_csv`.
inline CsvColumns written_columns(const Dataset& d) {
  return CsvColumns{d.feature_names, "hardware", "runtime", std::string("instance")};
}

// Hardware sidecar: id,cpus,memory_gb[,cost_weight]

inline std::vector<HardwareConfig> load_hardware_csv(const std::filesystem::path& path) {
  const auto t = csv::read_file(path);
  const auto source = path.string();
  const auto icol = t.require_column("id", source);
  const auto ccol = t.require_column("cpus", source);
  const auto mcol = t.require_column("memory_gb", source);
  const auto wcol = t.column("cost_weight");
  std::vector<HardwareConfig> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    auto bad = [&](std::size_t c) {
      return Error(Errc::parse_error, source + ": row " + std::to_string(r + 2) + ", column '" + t.header[c] +
                                          "': '" + row[c] + "'");
    };
    HardwareConfig h;
    h.id = row[icol];
    auto cpus = csv::parse_double(row[ccol]);
    if (!cpus || *cpus != std::floor(*cpus)) throw bad(ccol);
    h.cpus = static_cast<int>(*cpus);
    auto mem = csv::parse_double(row[mcol]);
    if (!mem) throw bad(mcol);
    h.memory_gb = *mem;
    if (wcol && !row[*wcol].empty()) {
      auto w = csv::parse_double(row[*wcol]);
      if (!w) throw bad(*wcol);
      h.cost_weight = *w;
    }
    out.push_back(std::move(h));
  }
  validate_hardware_set(out);
  return out;
}

inline void write_hardware_csv(std::span<const HardwareConfig> hw, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  const bool weighted = std::any_of(hw.begin(), hw.end(), [](const auto& h) { return h.cost_weight.has_value(); });
  std::vector<std::string> header{"id", "cpus", "memory_gb"};
  if (weighted) header.push_back("cost_weight");
  csv::write_row(out, header);
  for (const auto& h : hw) {
    std::vector<std::string> row{h.id, std::to_string(h.cpus), csv::format_double(h.memory_gb)};
    if (weighted) row.push_back(h.cost_weight ? csv::format_double(*h.cost_weight) : "");
    csv::write_row(out, row);
  }
}

/// One workflow instance observed on (possibly) every arm.
struct ReplayInstance {
  std::string id;
  FeatureVector features;
  std::vector<std::optional<double>> runtimes;  // aligned with ReplayEnvironment::hardware_ids
};

class ReplayEnvironment {
 public:
  ReplayEnvironment() = default;
  ReplayEnvironment(std::vector<std::string> feature_names, std::vector<std::string> hardware_ids,
                    std::vector<ReplayInstance> instances, bool complete_only, std::size_t dropped)
      : feature_names_(std::move(feature_names)),
        hardware_ids_(std::move(hardware_ids)),
        instances_(std::move(instances)),
        complete_only_(complete_only),
        dropped_(dropped) {}

  std::size_t size() const noexcept { return instances_.size(); }
  bool empty() const noexcept { return instances_.empty(); }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<std::string>& hardware_ids() const noexcept { return hardware_ids_; }
  std::span<const ReplayInstance> instances() const noexcept { return instances_; }
  const ReplayInstance& instance(std::size_t i) const { return instances_.at(i); }
  bool complete_only() const noexcept { return complete_only_; }
  /// Instances discarded because they lacked some arm.
  std::size_t dropped_count() const noexcept { return dropped_; }

  std::size_t arm_index(std::string_view hardware_id) const {
    for (std::size_t k = 0; k < hardware_ids_.size(); ++k) {
      if (hardware_ids_[k] == hardware_id) return k;
    }
    throw Error(Errc::unknown_hardware_id, std::string(hardware_id));
  }

  /// Stored runtime of instance `i` on `hardware_id`.
  double observe(std::size_t i, std::string_view hardware_id) const {
    const auto& inst = instances_.at(i);
    const auto& v = inst.runtimes[arm_index(hardware_id)];
    if (!v) throw Error(Errc::missing_arm, "instance " + inst.id + " has no run on " + std::string(hardware_id));
    return *v;
  }

 private:
  std::vector<std::string> feature_names_;
  std::vector<std::string> hardware_ids_;
  std::vector<ReplayInstance> instances_;
  bool complete_only_ = true;
  std::size_t dropped_ = 0;
};

/// Groups records by instance id (first-appearance order); repeated
/// (instance, hardware) runs are averaged.
inline ReplayEnvironment build_replay(const Dataset& d, bool complete_only = true) {
  const auto& ids = d.hardware_ids;
  struct Acc {
    ReplayInstance inst;
    std::vector<double> sum;
    std::vector<std::size_t> count;
  };
  std::vector<Acc> accs;
  std::unordered_map<std::string, std::size_t> index;
  std::map<std::string, std::size_t, std::less<>> arm;
  for (std::size_t k = 0; k < ids.size(); ++k) arm.emplace(ids[k], k);

  for (const auto& r : d.records) {
    auto [it, inserted] = index.try_emplace(r.instance_id, accs.size());
    if (inserted) {
      Acc a;
      a.inst.id = r.instance_id;
      a.inst.features = r.observation.features;
      a.sum.assign(ids.size(), 0.0);
      a.count.assign(ids.size(), 0);
      accs.push_back(std::move(a));
    }
    auto& a = accs[it->second];
    const auto k = arm.at(r.observation.hardware_id);
    a.sum[k] += r.observation.runtime_seconds;
    ++a.count[k];
  }

  std::vector<ReplayInstance> out;
  std::size_t dropped = 0;
  for (auto& a : accs) {
    a.inst.runtimes.assign(ids.size(), std::nullopt);
    bool complete = true;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (a.count[k] == 0) {
        complete = false;
      } else {
        a.inst.runtimes[k] = a.sum[k] / static_cast<double>(a.count[k]);
      }
    }
    if (complete_only && !complete) {
      ++dropped;
      continue;
    }
    out.push_back(std::move(a.inst));
  }
  if (complete_only && out.empty()) {
    throw Error(Errc::no_complete_instances,
                "no instance has a run on every one of " + std::to_string(ids.size()) + " hardware ids");
  }
  return ReplayEnvironment(d.feature_names, ids, std::move(out), complete_only, dropped);
}

/// Uniform with-replacement instance indices.
inline std::vector<std::size_t> sample_rounds(const ReplayEnvironment& env, std::size_t n_rounds, Rng& rng) {
  if (env.empty()) throw Error(Errc::empty_environment, "cannot schedule rounds on an empty environment");
  std::uniform_int_distribution<std::size_t> pick(0, env.size() - 1);
  std::vector<std::size_t> out(n_rounds);
  for (auto& i : out) i = pick(rng);
  return out;
}

/// Uniform without-replacement sample of `n` records, in draw order.
inline Dataset subsample(const Dataset& d, std::size_t n, Rng& rng) {
  if (n > d.size()) {
    throw Error(Errc::sample_too_large,
                std::to_string(n) + " samples requested from " + std::to_string(d.size()) + " records");
  }
  std::vector<std::size_t> idx(d.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<RunRecord> recs;
  recs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) recs.push_back(d.records[idx[i]]);
  Dataset out;
  out.feature_names = d.feature_names;
  out.hardware_ids = d.hardware_ids;
  out.records = std::move(recs);
  return out;
}

}  // namespace banditware
