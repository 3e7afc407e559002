// banditware: command-line front end for hardware recommendation experiments.
//
// Exit status: 0 success, 1 usage error, 2 data error, 3 runtime failure.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "banditware/banditware.hpp"

#ifndef BANDITWARE_SCENARIO_DIR
#define BANDITWARE_SCENARIO_DIR "scenarios"
#endif

namespace bw = banditware;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

int exit_code_for(bw::Errc code) {
  switch (code) {
    case bw::Errc::invalid_config:
      return kExitUsage;
    case bw::Errc::checksum_mismatch:
      return kExitRuntime;
    default:
      return kExitData;
  }
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BANDITWARE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring BANDITWARE_THREADS='" << env << "'\n";
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct BanditFlags {
  double alpha = 0.99;
  double epsilon0 = 1.0;
  double tolerance_ratio = 0.0;
  double tolerance_seconds = 0.0;
  double ridge = bw::kDefaultRidgeLambda;

  void attach(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "Exploration decay factor per round")->capture_default_str();
    cmd->add_option("--epsilon0", epsilon0, "Initial exploration rate")->capture_default_str();
    cmd->add_option("--tolerance-ratio", tolerance_ratio, "Selection slack relative to the fastest estimate (t_r)")
        ->capture_default_str();
    cmd->add_option("--tolerance-seconds", tolerance_seconds, "Selection slack in seconds (t_s)")->capture_default_str();
    cmd->add_option("--ridge", ridge, "Ridge penalty on model weights")->capture_default_str();
  }

  bw::BanditConfig config() const { return bw::BanditConfig{alpha, epsilon0, tolerance_ratio, tolerance_seconds, ridge}; }
};

struct ExperimentFlags {
  BanditFlags bandit;
  std::size_t rounds = 50;
  std::size_t sims = 100;
  std::uint64_t seed = 0;
  double eval_tolerance_ratio = 0.0;
  double eval_tolerance_seconds = 0.0;
  std::size_t threads = 0;
  std::string out;
  std::string csv;
  std::string save_model;
  bool decisions = false;
  bool standardize = false;

  void attach(CLI::App* cmd) {
    bandit.attach(cmd);
    cmd->add_option("--rounds", rounds, "Rounds per simulation")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--sims", sims, "Independent simulations")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Base random seed")->capture_default_str();
    cmd->add_option("--eval-tolerance-ratio", eval_tolerance_ratio, "Accuracy slack relative to the best actual runtime")
        ->capture_default_str();
    cmd->add_option("--eval-tolerance-seconds", eval_tolerance_seconds, "Accuracy slack in seconds")
        ->capture_default_str();
    cmd->add_option("--threads", threads, "Worker threads (0: BANDITWARE_THREADS or all cores)")->capture_default_str();
    cmd->add_option("--out", out, "Report JSON path")->required();
    cmd->add_option("--csv", csv, "Also write the flat curve CSV here");
    cmd->add_option("--save-model", save_model, "Persist the bandit state of simulation 0");
    cmd->add_flag("--decisions", decisions, "Include per-simulation decision logs in the report");
    cmd->add_flag("--standardize", standardize, "Z-score each feature over the environment before fitting");
  }

  bw::ExperimentConfig config() const {
    bw::ExperimentConfig c;
    c.n_rounds = rounds;
    c.n_sims = sims;
    c.seed = seed;
    c.bandit = bandit.config();
    c.eval_tolerance_ratio = eval_tolerance_ratio;
    c.eval_tolerance_seconds = eval_tolerance_seconds;
    c.threads = resolve_threads(threads);
    c.keep_decisions = decisions;
    c.standardize_features = standardize;
    if (standardize && !save_model.empty()) {
      throw bw::Error(bw::Errc::invalid_config, "--save-model cannot be combined with --standardize");
    }
    return c;
  }
};

void write_report_outputs(const bw::ExperimentReport& report, const ExperimentFlags& flags) {
  bw::write_json(bw::report_to_json(report), flags.out);
  if (!flags.csv.empty()) {
    std::ofstream out(flags.csv);
    if (!out) throw bw::Error(bw::Errc::io_error, "cannot write " + flags.csv);
    bw::write_report_csv(report, out);
  }
  const auto& r = report.rmse_curve.back();
  const auto& a = report.accuracy_curve.back();
  std::cout << std::setprecision(6) << "full-fit rmse: " << report.full_fit_rmse
            << "  accuracy: " << report.full_fit_accuracy << '\n'
            << "round " << r.round << " rmse: " << r.mean << " +/- " << r.sd << "  accuracy: " << a.mean << " +/- "
            << a.sd << '\n';
}

void save_sim0_model(const bw::ReplayEnvironment& env, std::span<const bw::HardwareConfig> hw,
                     const bw::ExperimentConfig& config, const std::string& path) {
  if (path.empty()) return;
  const auto bandit = bw::run_simulation_state(env, hw, config, 0);
  bw::save_bandit(bandit, path);
  std::cerr << "saved model to " << path << '\n';
}

// Hardware entries for the ids present in the dataset, in sidecar order.
std::vector<bw::HardwareConfig> hardware_for(const bw::Dataset& d, const std::vector<bw::HardwareConfig>& sidecar,
                                             const std::string& sidecar_path) {
  std::vector<bw::HardwareConfig> out;
  for (const auto& id : d.hardware_ids) {
    bool found = false;
    for (const auto& h : sidecar) found = found || h.id == id;
    if (!found) throw bw::Error(bw::Errc::unknown_hardware_id, id + " is not described in " + sidecar_path);
  }
  for (const auto& h : sidecar) {
    if (std::find(d.hardware_ids.begin(), d.hardware_ids.end(), h.id) != d.hardware_ids.end()) {
      out.push_back(h);
    } else {
      std::cerr << "warning: hardware " << h.id << " has no runs in the dataset; ignored\n";
    }
  }
  return out;
}

struct DataFlags {
  std::string data;
  std::vector<std::string> features;
  std::string hardware_column = "hardware";
  std::string runtime_column = "runtime";
  std::string instance_column;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", data, "Run trace CSV")->required();
    cmd->add_option("--features", features, "Feature column names (comma separated)")->required()->delimiter(',');
    cmd->add_option("--hardware-column", hardware_column, "Hardware id column")->capture_default_str();
    cmd->add_option("--runtime-column", runtime_column, "Runtime column (seconds)")->capture_default_str();
    cmd->add_option("--instance-column", instance_column, "Workflow instance id column (default: feature tuple)");
  }

  bw::Dataset load() const {
    bw::CsvColumns cols{features, hardware_column, runtime_column, std::nullopt};
    if (!instance_column.empty()) cols.instance = instance_column;
    return bw::load_csv(data, cols);
  }
};

fs::path sibling_hardware_path(const fs::path& out) {
  auto p = out;
  p.replace_filename(out.stem().string() + "_hardware.csv");
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"banditware: learn which hardware configuration minimises an application's runtime"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(44);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Replay the bandit over a run trace and report learning curves");
  DataFlags sim_data;
  std::string sim_hardware;
  ExperimentFlags sim_flags;
  sim_data.attach(simulate);
  simulate->add_option("--hardware", sim_hardware, "Hardware sidecar CSV (id,cpus,memory_gb[,cost_weight])")->required();
  sim_flags.attach(simulate);

  // synth
  auto* synth = app.add_subcommand("synth", "Run the bandit against a synthetic hardware scenario");
  std::string scenario_path = std::string(BANDITWARE_SCENARIO_DIR) + "/default.conf";
  std::optional<double> noise;
  std::optional<std::size_t> instances;
  std::string synth_dataset_out;
  ExperimentFlags synth_flags;
  synth->add_option("--scenario", scenario_path, "Scenario file")->capture_default_str();
  synth->add_option("--noise", noise, "Noise sd as a fraction of each arm's mean runtime (overrides the scenario)");
  synth->add_option("--instances", instances, "Workflow instances to generate (overrides the scenario)")
      ->check(CLI::PositiveNumber);
  synth->add_option("--dataset-out", synth_dataset_out, "Write the generated runs (and a _hardware.csv sidecar)");
  synth_flags.attach(synth);

  // bench-matmul
  auto* bench = app.add_subcommand("bench-matmul", "Benchmark tiled matrix squaring across worker counts");
  std::vector<std::size_t> sizes;
  std::vector<double> sparsities{0.0};
  std::vector<std::int64_t> min_values{0};
  std::vector<std::int64_t> max_values{10};
  std::vector<std::size_t> workers{1, 2, 4};
  std::size_t reps = 1;
  std::size_t tile = 64;
  std::uint64_t bench_seed = 0;
  std::string bench_out;
  std::string bench_hw_out;
  std::string bench_from;
  std::optional<double> min_size;
  bench->add_option("--sizes", sizes, "Matrix sizes (comma separated)")->delimiter(',')->check(CLI::PositiveNumber);
  bench->add_option("--sparsities", sparsities, "Fractions of zero cells")->delimiter(',')->capture_default_str();
  bench->add_option("--min-values", min_values, "Lower bounds of cell values")->delimiter(',')->capture_default_str();
  bench->add_option("--max-values", max_values, "Upper bounds of cell values")->delimiter(',')->capture_default_str();
  bench->add_option("--workers", workers, "Worker counts; each is one hardware id wN")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench->add_option("--reps", reps, "Repetitions per configuration")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--tile", tile, "Tile edge length")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed, "Matrix generation seed")->capture_default_str();
  bench->add_option("--out", bench_out, "Dataset CSV path")->required();
  bench->add_option("--hardware-out", bench_hw_out, "Hardware sidecar path (default: <out>_hardware.csv)");
  bench->add_option("--from", bench_from, "Filter an existing benchmark CSV instead of running");
  bench->add_option("--min-size", min_size, "Keep only rows with size >= this value");

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Distribution of pooled linear regressions trained on small samples");
  DataFlags base_data;
  std::size_t samples = 25;
  std::size_t models = 100;
  std::uint64_t base_seed = 0;
  double base_ridge = bw::kDefaultRidgeLambda;
  std::string base_out;
  base_data.attach(baseline);
  baseline->add_option("--samples", samples, "Training rows per model")->capture_default_str()->check(CLI::PositiveNumber);
  baseline->add_option("--models", models, "Number of models")->capture_default_str()->check(CLI::PositiveNumber);
  baseline->add_option("--seed", base_seed, "Sampling seed")->capture_default_str();
  baseline->add_option("--ridge", base_ridge, "Ridge penalty on model weights")->capture_default_str();
  baseline->add_option("--out", base_out, "Stats JSON path")->required();

  // recommend
  auto* recommend = app.add_subcommand("recommend", "Print the recommended hardware for one workflow");
  std::string model_path;
  std::vector<std::string> feature_pairs;
  bool verbose = false;
  recommend->add_option("--model", model_path, "Persisted bandit JSON")->required();
  recommend->add_option("--features", feature_pairs, "name=value pairs (comma separated)")->required()->delimiter(',');
  recommend->add_flag("--verbose", verbose, "Also print per-arm runtime estimates");

  // report
  auto* report = app.add_subcommand("report", "Convert a report JSON into plot-ready CSV");
  std::string report_in;
  std::string report_out;
  std::string metric;
  report->add_option("--in", report_in, "Report JSON")->required();
  report->add_option("--out", report_out, "CSV path (default: standard output)");
  report->add_option("--metric", metric, "Only this metric")->check(CLI::IsMember({"rmse", "accuracy"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) {
      const auto cfg = sim_flags.config();
      cfg.validate();
      const auto data = sim_data.load();
      const auto sidecar = bw::load_hardware_csv(sim_hardware);
      const auto hw = hardware_for(data, sidecar, sim_hardware);
      const auto env = bw::build_replay(data, true);
      std::cerr << "replay: " << env.size() << " instances on " << hw.size() << " hardware";
      if (env.dropped_count()) std::cerr << " (" << env.dropped_count() << " incomplete dropped)";
      std::cerr << '\n';
      const auto rep = bw::run_repeated(env, hw, cfg);
      write_report_outputs(rep, sim_flags);
      save_sim0_model(env, hw, cfg, sim_flags.save_model);
    } else if (*synth) {
      const auto cfg = synth_flags.config();
      cfg.validate();
      auto sc = bw::load_scenario(scenario_path);
      if (noise) {
        if (*noise < 0.0) throw bw::Error(bw::Errc::invalid_config, "--noise must be >= 0");
        sc.override_noise_ratio(*noise);
      }
      if (instances) sc.instances = *instances;
      const auto senv = sc.environment();
      bw::Rng data_rng = bw::make_stream(cfg.seed, std::numeric_limits<std::uint64_t>::max());
      const auto data = senv.materialize(sc.instances, data_rng);
      if (!synth_dataset_out.empty()) {
        bw::write_csv(data, synth_dataset_out);
        bw::write_hardware_csv(senv.hardware(), sibling_hardware_path(synth_dataset_out));
      }
      const auto env = bw::build_replay(data, true);
      const auto rep = bw::run_repeated(env, senv.hardware(), cfg);
      write_report_outputs(rep, synth_flags);
      save_sim0_model(env, senv.hardware(), cfg, synth_flags.save_model);
    } else if (*bench) {
      bw::Dataset data;
      if (!bench_from.empty()) {
        data = bw::load_csv(bench_from, bw::CsvColumns{bw::matmul_feature_names(), "hardware", "runtime", std::nullopt});
      } else {
        if (sizes.empty()) throw bw::Error(bw::Errc::invalid_config, "--sizes is required unless --from is given");
        bw::BenchGrid grid;
        grid.sizes = sizes;
        grid.sparsities = sparsities;
        grid.min_values = min_values;
        grid.max_values = max_values;
        grid.workers = workers;
        grid.repetitions = reps;
        grid.tile_size = tile;
        bw::Rng rng(bench_seed);
        const auto res = bw::bench_matmul(grid, rng, [](const bw::BenchProgress& p) {
          std::cerr << "size " << p.spec.size << " sparsity " << p.spec.sparsity << " values [" << p.spec.min_value
                    << "," << p.spec.max_value << "] rep " << p.repetition << " w" << p.workers << ": "
                    << p.runtime_seconds << " s\n";
        });
        data = res.dataset;
        bw::write_hardware_csv(res.hardware, bench_hw_out.empty() ? sibling_hardware_path(bench_out) : fs::path(bench_hw_out));
      }
      if (min_size) {
        const double threshold = *min_size;
        data = data.filter([threshold](const bw::RunRecord& r) { return r.observation.features.values[0] >= threshold; });
      }
      bw::write_csv(data, bench_out);
      std::cerr << "wrote " << data.size() << " rows to " << bench_out << '\n';
    } else if (*baseline) {
      const auto data = base_data.load();
      bw::Rng rng(base_seed);
      const auto st = bw::linear_regression_baseline(data, samples, models, rng, base_ridge);
      bw::write_json(bw::baseline_to_json(st), base_out);
      std::cout << std::setprecision(6) << "rmse: min " << st.rmse.min << " max " << st.rmse.max << " mean "
                << st.rmse.mean << " range " << st.rmse.range << '\n'
                << "r2: min " << st.r2.min << " max " << st.r2.max << " mean " << st.r2.mean << " range "
                << st.r2.range << '\n';
    } else if (*recommend) {
      const auto bandit = bw::load_bandit(model_path);
      std::map<std::string, double> given;
      for (const auto& kv : feature_pairs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw bw::Error(bw::Errc::parse_error, "expected name=value, got '" + kv + "'");
        auto v = bw::csv::parse_double(kv.substr(eq + 1));
        if (!v) throw bw::Error(bw::Errc::parse_error, "feature '" + kv.substr(0, eq) + "' is not a number");
        given[kv.substr(0, eq)] = *v;
      }
      bw::FeatureVector x;
      x.names = bandit.feature_names();
      for (const auto& name : x.names) {
        auto it = given.find(name);
        if (it == given.end()) throw bw::Error(bw::Errc::missing_column, "missing feature '" + name + "'");
        x.values.push_back(it->second);
        given.erase(it);
      }
      if (!given.empty()) throw bw::Error(bw::Errc::inconsistent_features, "unknown feature '" + given.begin()->first + "'");
      std::cout << bandit.recommend(x) << '\n';
      if (verbose) {
        const auto est = bandit.estimate_all(x);
        for (std::size_t k = 0; k < est.size(); ++k) {
          std::cout << "  " << bandit.arms()[k].hardware.id << ' ' << std::setprecision(10) << est[k] << '\n';
        }
      }
    } else if (*report) {
      const auto rep = bw::report_from_json(bw::read_json(report_in));
      std::optional<std::string> only;
      if (!metric.empty()) only = metric;
      if (report_out.empty()) {
        bw::write_report_csv(rep, std::cout, only);
      } else {
        std::ofstream out(report_out);
        if (!out) throw bw::Error(bw::Errc::io_error, "cannot write " + report_out);
        bw::write_report_csv(rep, out, only);
      }
    }
  } catch (const bw::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
