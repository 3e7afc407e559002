#pragma once

// JSON and flat-CSV forms of experiment reports and baseline statistics.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include "banditware/csv.hpp"
#include "banditware/experiment.hpp"
#include "banditware/persistence.hpp"

namespace banditware {

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  return {{"n_rounds", c.n_rounds},
          {"n_sims", c.n_sims},
          {"seed", c.seed},
          {"bandit", config_to_json(c.bandit)},
          {"eval_tolerance_ratio", c.eval_tolerance_ratio},
          {"eval_tolerance_seconds", c.eval_tolerance_seconds},
          {"standardize_features", c.standardize_features}};
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.n_rounds = j.at("n_rounds").get<std::size_t>();
  c.n_sims = j.at("n_sims").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.bandit = config_from_json(j.at("bandit"));
  c.eval_tolerance_ratio = j.at("eval_tolerance_ratio").get<double>();
  c.eval_tolerance_seconds = j.at("eval_tolerance_seconds").get<double>();
  c.standardize_features = j.value("standardize_features", false);
  return c;
}

inline nlohmann::json curve_to_json(const std::vector<CurvePoint>& curve) {
  auto arr = nlohmann::json::array();
  for (const auto& p : curve) arr.push_back({{"round", p.round}, {"mean", p.mean}, {"sd", p.sd}, {"n", p.n}});
  return arr;
}

inline std::vector<CurvePoint> curve_from_json(const nlohmann::json& j) {
  std::vector<CurvePoint> out;
  for (const auto& p : j) {
    CurvePoint c;
    c.round = p.at("round").get<std::size_t>();
    c.mean = p.at("mean").get<double>();
    c.sd = p.at("sd").get<double>();
    c.n = p.value("n", std::size_t{0});
    out.push_back(c);
  }
  return out;
}

inline nlohmann::json report_to_json(const ExperimentReport& r) {
  nlohmann::json j{{"config", experiment_config_to_json(r.config)},
                   {"full_fit", {{"rmse", r.full_fit_rmse}, {"accuracy", r.full_fit_accuracy}}},
                   {"curves", {{"rmse", curve_to_json(r.rmse_curve)}, {"accuracy", curve_to_json(r.accuracy_curve)}}}};
  if (!r.decisions.empty()) {
    auto sims = nlohmann::json::array();
    for (const auto& sim : r.decisions) {
      auto arr = nlohmann::json::array();
      for (const auto& d : sim) {
        arr.push_back({{"round", d.round},
                       {"instance", d.instance},
                       {"hardware", d.hardware_id},
                       {"kind", std::string(to_string(d.kind))},
                       {"runtime", d.runtime_seconds}});
      }
      sims.push_back(std::move(arr));
    }
    j["decisions"] = std::move(sims);
  }
  return j;
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
  try {
    ExperimentReport r;
    r.config = experiment_config_from_json(j.at("config"));
    r.full_fit_rmse = j.at("full_fit").at("rmse").get<double>();
    r.full_fit_accuracy = j.at("full_fit").at("accuracy").get<double>();
    r.rmse_curve = curve_from_json(j.at("curves").at("rmse"));
    r.accuracy_curve = curve_from_json(j.at("curves").at("accuracy"));
    if (r.rmse_curve.empty() || r.accuracy_curve.empty()) {
      throw Error(Errc::schema_mismatch, "report has empty curves");
    }
    if (j.contains("decisions")) {
      for (const auto& sim : j.at("decisions")) {
        std::vector<DecisionRecord> v;
        for (const auto& d : sim) {
          const auto kind = d.at("kind").get<std::string>();
          if (kind != "explore" && kind != "exploit") throw Error(Errc::schema_mismatch, "decision kind " + kind);
          v.push_back(DecisionRecord{d.at("round").get<std::size_t>(), d.at("instance").get<std::size_t>(),
                                     d.at("hardware").get<std::string>(),
                                     kind == "explore" ? DecisionKind::explore : DecisionKind::exploit,
                                     d.at("runtime").get<double>()});
        }
        r.decisions.push_back(std::move(v));
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema_mismatch, e.what());
  }
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema_mismatch, path.string() + ": " + e.what());
  }
}

/// Plot-ready rows `round,metric,series,mean,sd`. The `full_fit` series
/// repeats the reference value at every round (sd 0).
/// `metric` restricts output to "rmse" or "accuracy".
inline void write_report_csv(const ExperimentReport& r, std::ostream& out,
                             const std::optional<std::string>& metric = std::nullopt) {
  if (metric && *metric != "rmse" && *metric != "accuracy") {
    throw Error(Errc::invalid_config, "unknown metric '" + *metric + "'");
  }
  csv::write_row(out, {"round", "metric", "series", "mean", "sd"});
  auto emit = [&](const std::string& name, const std::vector<CurvePoint>& curve, double full_fit) {
    if (metric && *metric != name) return;
    for (const auto& p : curve) {
      csv::write_row(out, {std::to_string(p.round), name, "bandit", csv::format_double(p.mean), csv::format_double(p.sd)});
    }
    for (const auto& p : curve) {
      csv::write_row(out, {std::to_string(p.round), name, "full_fit", csv::format_double(full_fit), "0"});
    }
  };
  emit("rmse", r.rmse_curve, r.full_fit_rmse);
  emit("accuracy", r.accuracy_curve, r.full_fit_accuracy);
}

inline nlohmann::json distribution_to_json(const DistributionStats& s, bool with_range = true) {
  nlohmann::json j{{"min", s.min}, {"max", s.max}, {"mean", s.mean}};
  if (with_range) j["range"] = s.range;
  return j;
}

inline nlohmann::json baseline_to_json(const BaselineStats& s) {
  return {{"n_models", s.n_models},
          {"samples_per_model", s.samples_per_model},
          {"rmse", distribution_to_json(s.rmse)},
          {"r2", distribution_to_json(s.r2)},
          {"fit_duration", distribution_to_json(s.fit_duration, false)},
          {"models", {{"rmse", s.rmse_values}, {"r2", s.r2_values}, {"fit_seconds", s.fit_seconds}}}};
}

}  // namespace banditware
