#pragma once

// Versioned JSON persistence of a bandit. Histories are optional; a state
// loaded without them can still recommend.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "banditware/bandit.hpp"

namespace banditware {

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json hardware_to_json(const HardwareConfig& h) {
  nlohmann::json j{{"id", h.id}, {"cpus", h.cpus}, {"memory_gb", h.memory_gb}};
  if (h.cost_weight) j["cost_weight"] = *h.cost_weight;
  return j;
}

inline HardwareConfig hardware_from_json(const nlohmann::json& j) {
  HardwareConfig h;
  h.id = j.at("id").get<std::string>();
  h.cpus = j.at("cpus").get<int>();
  h.memory_gb = j.at("memory_gb").get<double>();
  if (j.contains("cost_weight")) h.cost_weight = j.at("cost_weight").get<double>();
  return h;
}

inline nlohmann::json config_to_json(const BanditConfig& c) {
  return {{"alpha", c.alpha},
          {"epsilon0", c.epsilon0},
          {"tolerance_ratio", c.tolerance_ratio},
          {"tolerance_seconds", c.tolerance_seconds},
          {"ridge_lambda", c.ridge_lambda}};
}

inline BanditConfig config_from_json(const nlohmann::json& j) {
  BanditConfig c;
  c.alpha = j.at("alpha").get<double>();
  c.epsilon0 = j.at("epsilon0").get<double>();
  c.tolerance_ratio = j.at("tolerance_ratio").get<double>();
  c.tolerance_seconds = j.at("tolerance_seconds").get<double>();
  c.ridge_lambda = j.at("ridge_lambda").get<double>();
  return c;
}

inline nlohmann::json bandit_to_json(const Bandit& b, bool include_history = true) {
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : b.arms()) {
    nlohmann::json arm{{"hardware", hardware_to_json(a.hardware)},
                       {"weights", a.model.weights},
                       {"bias", a.model.bias},
                       {"n_observations", a.model.n_observations}};
    if (include_history && b.has_history()) {
      nlohmann::json hist = nlohmann::json::array();
      for (const auto& s : a.history) hist.push_back(nlohmann::json::array({s.features.values, s.runtime_seconds}));
      arm["history"] = std::move(hist);
    }
    arms.push_back(std::move(arm));
  }
  return {{"version", kModelFormatVersion},
          {"feature_names", b.feature_names()},
          {"config", config_to_json(b.config())},
          {"epsilon", b.epsilon()},
          {"rounds_completed", b.rounds_completed()},
          {"arms", std::move(arms)}};
}

inline Bandit bandit_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw Error(Errc::schema_mismatch, "unsupported model version " + j.at("version").dump());
    }
    const auto names = j.at("feature_names").get<std::vector<std::string>>();
    const auto config = config_from_json(j.at("config"));
    std::vector<ArmState> arms;
    bool has_history = true;
    for (const auto& ja : j.at("arms")) {
      ArmState a;
      a.hardware = hardware_from_json(ja.at("hardware"));
      a.model.feature_names = names;
      a.model.weights = ja.at("weights").get<std::vector<double>>();
      a.model.bias = ja.at("bias").get<double>();
      a.model.n_observations = ja.at("n_observations").get<std::size_t>();
      if (ja.contains("history")) {
        for (const auto& row : ja.at("history")) {
          a.history.push_back(Sample{FeatureVector{names, row.at(0).get<std::vector<double>>()},
                                     row.at(1).get<double>()});
        }
      } else {
        has_history = false;
      }
      arms.push_back(std::move(a));
    }
    if (!has_history) {
      for (auto& a : arms) a.history.clear();
    }
    return Bandit::restore(config, names, std::move(arms), j.at("epsilon").get<double>(),
                           j.at("rounds_completed").get<std::size_t>(), has_history);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema_mismatch, e.what());
  }
}

inline void save_bandit(const Bandit& b, const std::filesystem::path& path, bool include_history = true) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << bandit_to_json(b, include_history).dump(2) << '\n';
}

inline Bandit load_bandit(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema_mismatch, path.string() + ": " + e.what());
  }
  return bandit_from_json(j);
}

}  // namespace banditware
