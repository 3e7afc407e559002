#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "banditware/banditware.hpp"

using namespace banditware;
namespace fs = std::filesystem;

namespace {

const std::string kCli = BANDITWARE_CLI;
const std::string kFixtures = BANDITWARE_FIXTURE_DIR;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("banditware_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  CliResult run(const std::string& args, const std::string& env = "") const {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = env + " '" + kCli + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpListsDefaults) {
  for (const char* sub : {"simulate", "synth", "bench-matmul", "baseline", "recommend", "report"}) {
    const auto r = run(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_FALSE(r.out.empty()) << sub;
  }
  const auto r = run("simulate --help");
  for (const char* needle : {"0.99", "1e-08", "50", "100", "--tolerance-ratio", "--tolerance-seconds", "--threads"}) {
    EXPECT_NE(r.out.find(needle), std::string::npos) << needle;
  }
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("report --in x.json --no-such-flag").code, 1);
  EXPECT_EQ(run("synth --out " + path("r.json").string() + " --rounds 0").code, 1);
  EXPECT_EQ(run("synth --out " + path("r.json").string() + " --alpha 1.5").code, 1);
  EXPECT_EQ(run("report --in x.json --metric latency").code, 1);
  EXPECT_FALSE(fs::exists(path("r.json")));
}

TEST_F(Cli, SimulateOnFixture) {
  const auto r = run("simulate --data " + kFixtures + "/runs.csv --hardware " + kFixtures +
                     "/hardware.csv --features size,depth --rounds 5 --sims 3 --alpha 0.99 --epsilon0 1.0 "
                     "--tolerance-seconds 20 --seed 7 --out " + path("r.json").string() + " --csv " +
                     path("r.csv").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("full-fit rmse"), std::string::npos);
  const auto rep = report_from_json(read_json(path("r.json")));
  EXPECT_EQ(rep.rmse_curve.size(), 5u);
  EXPECT_EQ(rep.config.seed, 7u);
  EXPECT_EQ(rep.config.bandit.tolerance_seconds, 20.0);
  EXPECT_TRUE(fs::exists(path("r.csv")));
}

TEST_F(Cli, SimulateMissingData) {
  const auto r = run("simulate --data " + path("absent.csv").string() + " --hardware " + kFixtures +
                     "/hardware.csv --features size --out " + path("r.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("absent.csv"), std::string::npos);
}

TEST_F(Cli, SimulateBadColumnAndUnknownHardware) {
  EXPECT_EQ(run("simulate --data " + kFixtures + "/runs.csv --hardware " + kFixtures +
                "/hardware.csv --features nope --out " + path("r.json").string())
                .code,
            2);
  std::ofstream(path("hw.csv")) << "id,cpus,memory_gb\nH0,2,16\nH1,3,24\n";
  const auto r = run("simulate --data " + kFixtures + "/runs.csv --hardware " + path("hw.csv").string() +
                     " --features size --out " + path("r.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("H2"), std::string::npos);
}

TEST_F(Cli, SimulateIsByteIdenticalAcrossRunsAndThreads) {
  const std::string common = "simulate --data " + kFixtures + "/runs.csv --hardware " + kFixtures +
                             "/hardware.csv --features size,depth --rounds 20 --sims 8 --seed 3 --decisions";
  ASSERT_EQ(run(common + " --threads 1 --out " + path("a.json").string()).code, 0);
  ASSERT_EQ(run(common + " --out " + path("b.json").string(), "BANDITWARE_THREADS=3").code, 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
}

TEST_F(Cli, SynthNoiselessRecovers) {
  const auto r = run("synth --noise 0 --rounds 100 --sims 10 --seed 1 --out " + path("r.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = report_from_json(read_json(path("r.json")));
  EXPECT_LT(rep.rmse_curve.back().mean, 1e-6);
}

TEST_F(Cli, SynthWritesDatasetAndIsDeterministic) {
  const std::string common = "synth --rounds 30 --sims 5 --seed 11 --dataset-out " + path("d.csv").string();
  ASSERT_EQ(run(common + " --out " + path("a.json").string()).code, 0);
  ASSERT_EQ(run(common + " --out " + path("b.json").string()).code, 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  const auto hw = load_hardware_csv(path("d_hardware.csv"));
  EXPECT_EQ(hw.size(), 4u);
  const auto d = load_csv(path("d.csv"), CsvColumns{{"num_tasks"}, "hardware", "runtime", std::string("instance")});
  EXPECT_EQ(d.size(), 80u * 4u);
}

TEST_F(Cli, SynthMalformedScenario) {
  std::ofstream(path("bad.conf")) << "features = a\nwhat is this\n";
  EXPECT_EQ(run("synth --scenario " + path("bad.conf").string() + " --out " + path("r.json").string()).code, 2);
  EXPECT_EQ(run("synth --scenario " + path("none.conf").string() + " --out " + path("r.json").string()).code, 2);
}

TEST_F(Cli, BenchMatmulCountsAndFilter) {
  const auto r = run("bench-matmul --sizes 10,20,30 --sparsities 0,0.5 --workers 1,2,4 --reps 1 --out " +
                     path("mm.csv").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(r.err.empty());  // progress lines
  const CsvColumns cols{{"size", "sparsity", "min_value", "max_value"}, "hardware", "runtime", std::nullopt};
  EXPECT_EQ(load_csv(path("mm.csv"), cols).size(), 18u);
  const auto hw = load_hardware_csv(path("mm_hardware.csv"));
  ASSERT_EQ(hw.size(), 3u);
  EXPECT_EQ(hw[2].cpus, 4);

  ASSERT_EQ(run("bench-matmul --from " + path("mm.csv").string() + " --min-size 20 --out " + path("big.csv").string()).code, 0);
  const auto big = load_csv(path("big.csv"), cols);
  EXPECT_EQ(big.size(), 12u);
  for (const auto& rec : big.records) EXPECT_GE(rec.observation.features.values[0], 20.0);
}

TEST_F(Cli, BenchMatmulNeedsSizes) {
  EXPECT_EQ(run("bench-matmul --out " + path("mm.csv").string()).code, 1);
}

TEST_F(Cli, Baseline) {
  ASSERT_EQ(run("synth --rounds 2 --sims 1 --seed 1 --dataset-out " + path("d.csv").string() + " --out " +
                path("r.json").string())
                .code,
            0);
  const auto r = run("baseline --data " + path("d.csv").string() +
                     " --features num_tasks --samples 25 --models 100 --seed 1 --out " + path("b.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = read_json(path("b.json"));
  EXPECT_EQ(j.at("n_models"), 100);
  EXPECT_EQ(j.at("rmse").at("range").get<double>(),
            j.at("rmse").at("max").get<double>() - j.at("rmse").at("min").get<double>());
  ASSERT_EQ(run("baseline --data " + path("d.csv").string() + " --features num_tasks --samples 10 --models 1 --out " +
                path("one.json").string())
                .code,
            0);
  EXPECT_EQ(read_json(path("one.json")).at("rmse").at("range").get<double>(), 0.0);
  EXPECT_EQ(run("baseline --data " + path("d.csv").string() + " --features num_tasks --samples 100000 --out " +
                path("x.json").string())
                .code,
            2);
  EXPECT_EQ(run("baseline --data " + path("nope.csv").string() + " --features num_tasks --out " +
                path("x.json").string())
                .code,
            2);
}

TEST_F(Cli, RecommendFromSavedModel) {
  // separated lines: A = 4x + 10, B = 2x + 40; A is faster below x = 15
  Bandit b({{"A", 1, 1, {}}, {"B", 2, 1, {}}}, {"x", "y"});
  for (double x : {0.0, 10.0, 30.0}) {
    b.update("A", {{"x", "y"}, {x, 1}}, 4 * x + 10);
    b.update("B", {{"x", "y"}, {x, 2}}, 2 * x + 40);
  }
  save_bandit(b, path("m.json"));
  const auto before = slurp(path("m.json"));

  auto r = run("recommend --model " + path("m.json").string() + " --features x=5,y=1");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, b.recommend({{"x", "y"}, {5, 1}}) + "\n");
  r = run("recommend --model " + path("m.json").string() + " --features y=1,x=25 --verbose");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, 2), b.recommend({{"x", "y"}, {25, 1}}) + "\n");
  EXPECT_NE(r.out.find("  A "), std::string::npos);

  r = run("recommend --model " + path("m.json").string() + " --features x=5");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("'y'"), std::string::npos);
  EXPECT_EQ(run("recommend --model " + path("m.json").string() + " --features x=5,y=1,z=3").code, 2);
  EXPECT_EQ(run("recommend --model " + path("m.json").string() + " --features x=five,y=1").code, 2);
  EXPECT_EQ(slurp(path("m.json")), before);
}

TEST_F(Cli, RecommendColdStartIsCheapest) {
  save_bandit(Bandit({{"big", 8, 32, {}}, {"small", 2, 16, {}}}, {"x"}), path("m.json"));
  const auto r = run("recommend --model " + path("m.json").string() + " --features x=3");
  EXPECT_EQ(r.out, "small\n");
}

TEST_F(Cli, SaveModelThenRecommend) {
  ASSERT_EQ(run("synth --rounds 40 --sims 2 --seed 5 --save-model " + path("m.json").string() + " --out " +
                path("r.json").string())
                .code,
            0);
  const auto r = run("recommend --model " + path("m.json").string() + " --features num_tasks=500");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_bandit(path("m.json")).rounds_completed(), 40u);
}

TEST_F(Cli, ReportConversion) {
  ASSERT_EQ(run("synth --rounds 10 --sims 3 --out " + path("r.json").string()).code, 0);
  auto r = run("report --in " + path("r.json").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "round,metric,series,mean,sd");
  r = run("report --in " + path("r.json").string() + " --metric rmse --out " + path("r.csv").string());
  ASSERT_EQ(r.code, 0);
  const auto text = slurp(path("r.csv"));
  EXPECT_EQ(text.find(",accuracy,"), std::string::npos);
  EXPECT_NE(text.find(",rmse,"), std::string::npos);

  auto j = read_json(path("r.json"));
  j["curves"]["accuracy"] = nlohmann::json::array();
  write_json(j, path("empty.json"));
  EXPECT_EQ(run("report --in " + path("empty.json").string()).code, 2);
  std::ofstream(path("junk.json")) << "[1,2";
  EXPECT_EQ(run("report --in " + path("junk.json").string()).code, 2);
}
