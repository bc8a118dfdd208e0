#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bpoa/cli.hpp"
#include "bpoa/equilibria.hpp"
#include "bpoa/io.hpp"

namespace bpoa {
namespace {

namespace fs = std::filesystem;
using io::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bpoa_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "bpoa");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }

  static std::vector<std::vector<std::string>> csv(const std::string& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream f(p);
    std::string line;
    while (std::getline(f, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (!line.empty() && line.back() == ',') cells.emplace_back();
      rows.push_back(cells);
    }
    return rows;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, SweepRowsMatchHandSubstitution) {
  ASSERT_EQ(run({"sweep", "--ns", "1,10", "--zetas", "0.00001,0.05", "--grid", "0", "--csv",
                 path("s.csv")}),
            kExitOk);
  const json j = json::parse(out_.str());
  const auto& rows = j.at("rows");
  ASSERT_EQ(rows.size(), 4u);
  // N = 1 is a lone agent: always selected.
  EXPECT_NEAR(rows[0].at("exact_ratio").get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(rows[1].at("exact_ratio").get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(rows[2].at("bound").get<double>(), 2.0 - 1.0 / 10, 1e-4);
  EXPECT_NEAR(rows[3].at("bound").get<double>(), 1.9 * (1 - std::exp(-0.5)) / 0.5, 1e-12);
  EXPECT_NEAR(rows[3].at("bound").get<double>(), 1.4951, 1e-4);
  const auto table = csv(path("s.csv"));
  ASSERT_EQ(table.size(), 5u);
  EXPECT_EQ(table[0][3], "bound");
  EXPECT_EQ(table[4][0], "10");
  EXPECT_NEAR(std::stod(table[4][3]), 1.4951, 1e-4);
}

TEST_F(CliTest, SweepMeasuredRatioTracksExact) {
  ASSERT_EQ(run({"sweep", "--ns", "2,3", "--zetas", "0.2", "--grid", "300"}), kExitOk);
  for (const json& row : json::parse(out_.str()).at("rows")) {
    EXPECT_NEAR(row.at("measured_ratio").get<double>(), row.at("exact_ratio").get<double>(), 1e-4);
  }
}

TEST_F(CliTest, SweepRejectsInfeasibleGrid) {
  EXPECT_EQ(run({"sweep", "--ns", "10", "--zetas", "0.2"}), kExitInvalidInput);
  EXPECT_EQ(run({"sweep", "--ns", "2.5", "--zetas", "0.2"}), kExitInvalidInput);
}

TEST_F(CliTest, CertifyOnTwoAgentEquilibrium) {
  ASSERT_EQ(run({"equilibrium", "bernoulli", "--n", "2", "--zeta", "0.5", "--out", path("eq.json")}),
            kExitOk);
  ASSERT_EQ(run({"certify", "general", "--instance", path("eq.json"), "--profile", path("eq.json"),
                 "--csv", path("c.csv"), "--out", path("c.json")}),
            kExitOk);
  const auto table = csv(path("c.csv"));
  ASSERT_EQ(table.size(), 2u);
  EXPECT_EQ(table[0][6], "ratio");
  EXPECT_EQ(table[1][3], "case1");
  EXPECT_NEAR(std::stod(table[1][6]), 1.125, 1e-5);
  EXPECT_NEAR(std::stod(table[1][9]), 22.181, 1e-3);
  const json cert = io::read_json_file(path("c.json"));
  EXPECT_EQ(cert.at("config").at("variant"), "general");
  EXPECT_EQ(cert.at("config").at("params"), "golden");
}

TEST_F(CliTest, VerifyNeOnPoolingRunningExampleExitsWithWitness) {
  ASSERT_EQ(run({"gen", "--preset", "bernoulli", "--n", "4", "--zeta", "0.25", "--out",
                 path("ex.json")}),
            kExitOk);
  EXPECT_EQ(run({"verify-ne", "--instance", path("ex.json"), "--profile", "pooling", "--epsilon",
                 "0.25", "--out", path("v.json")}),
            kExitNotEquilibrium);
  const json v = io::read_json_file(path("v.json"));
  EXPECT_FALSE(v.at("is_epsilon_ne").get<bool>());
  EXPECT_NEAR(v.at("witness").at("utility_before").get<double>(), 0.25, 1e-12);
  EXPECT_GT(v.at("witness").at("gain").get<double>(), 0.1);
  EXPECT_EQ(run({"verify-ne", "--instance", path("ex.json"), "--profile", "pooling"}),
            kExitInvalidInput);
}

TEST_F(CliTest, AlignedEquilibriumPassesVerification) {
  ASSERT_EQ(run({"equilibrium", "bernoulli", "--n", "2", "--zeta", "0.5", "--epsilon", "0.1",
                 "--out", path("eq.json")}),
            kExitOk);
  EXPECT_EQ(run({"verify-ne", "--instance", path("eq.json"), "--profile", path("eq.json"),
                 "--epsilon", "0.1", "--br-method", "exhaustive"}),
            kExitOk);
}

TEST_F(CliTest, BrdCycleExitsNotConverged) {
  EXPECT_EQ(run({"equilibrium", "brd", "--instance",
                 std::string(BPOA_FIXTURE_DIR) + "/brd_cycle_instance.json", "--epsilon", "0.1",
                 "--max-rounds", "50", "--br-method", "exhaustive", "--out", path("b.json")}),
            kExitNotConverged);
  const json b = io::read_json_file(path("b.json"));
  EXPECT_FALSE(b.at("converged").get<bool>());
  EXPECT_EQ(b.at("cycle_length").get<int>(), 2);
}

TEST_F(CliTest, BrdOnGeneratedInstances) {
  // The symmetric two-agent grain game has no pure equilibrium reachable
  // from full revelation; dynamics cycle.
  ASSERT_EQ(run({"gen", "--preset", "bernoulli", "--n", "2", "--zeta", "0.5", "--out",
                 path("ex.json")}),
            kExitOk);
  EXPECT_EQ(run({"equilibrium", "brd", "--instance", path("ex.json"), "--epsilon", "0.1",
                 "--out", path("b.json")}),
            kExitNotConverged);
  EXPECT_TRUE(io::read_json_file(path("b.json")).at("cycle_length").is_number());

  ASSERT_EQ(run({"gen", "--n", "3", "--support", "3", "--epsilon", "0.125", "--utility", "linear",
                 "--seed", "3", "--out", path("g.json")}),
            kExitOk);
  ASSERT_EQ(run({"equilibrium", "brd", "--instance", path("g.json"), "--epsilon", "0.125", "--out",
                 path("gb.json")}),
            kExitOk);
  EXPECT_TRUE(io::read_json_file(path("gb.json")).at("converged").get<bool>());
  EXPECT_EQ(run({"verify-ne", "--instance", path("gb.json"), "--profile", path("gb.json"),
                 "--epsilon", "0.125", "--br-method", "exhaustive"}),
            kExitOk);
  EXPECT_EQ(run({"certify", "general", "--instance", path("gb.json"), "--profile", path("gb.json")}),
            kExitOk);
}

TEST_F(CliTest, CapAndInputErrors) {
  ASSERT_EQ(run({"equilibrium", "bernoulli", "--n", "3", "--zeta", "0.2", "--out", path("eq.json")}),
            kExitOk);
  EXPECT_EQ(run({"welfare", "--instance", path("eq.json"), "--profile", path("eq.json"), "--mode",
                 "exact", "--cap", "1000"}),
            kExitCapExceeded);
  EXPECT_EQ(run({"welfare", "--instance", path("missing.json")}), kExitInvalidInput);
  EXPECT_EQ(run({"welfare"}), kExitInvalidInput);
  EXPECT_EQ(run({"welfare", "--instance", path("eq.json"), "--mode", "fast"}), kExitInvalidInput);
  EXPECT_EQ(run({"gen", "--n", "2", "--k", "3"}), kExitInvalidInput);
  EXPECT_EQ(run({"equilibrium", "bernoulli", "--n", "5", "--zeta", "0.5"}), kExitInvalidInput);
  {
    std::ofstream f(path("bad.json"));
    f << "{\"k\": 1, \"agents\": [";
  }
  EXPECT_EQ(run({"first-best", "--instance", path("bad.json")}), kExitInvalidInput);
  EXPECT_EQ(run({"certify", "warmup", "--instance", path("eq.json"), "--params", "golden"}),
            kExitInvalidInput);
}

TEST_F(CliTest, GeneratorRespectsGrainGrid) {
  ASSERT_EQ(run({"gen", "--n", "5", "--k", "2", "--support", "4", "--epsilon", "0.125", "--seed",
                 "3", "--out", path("g.json")}),
            kExitOk);
  const Instance inst = io::instance_from_json(io::read_json_file(path("g.json")));
  EXPECT_EQ(inst.num_agents(), 5);
  EXPECT_EQ(inst.k(), 2);
  for (const Prior& p : inst.priors()) {
    const auto g = grain_counts(p, DiscretizationSpec(0.125));
    int total = 0;
    for (int c : g) total += c;
    EXPECT_EQ(total, 8);
  }
}

TEST_F(CliTest, NegativeShiftRatiosGrow) {
  double prev = 0.0;
  for (const char* eps : {"1e-3", "1e-4", "1e-5"}) {
    const std::string f = path(std::string("ns") + eps + ".json");
    ASSERT_EQ(run({"gen", "--preset", "negative-shift", "--n", "2", "--zeta", "0.5", "--shift-eps",
                   eps, "--out", f}),
              kExitOk);
    EXPECT_NE(err_.str().find("warning"), std::string::npos);
    const json g = io::read_json_file(f);
    EXPECT_EQ(g.at("value_domain"), "unrestricted");
    ASSERT_EQ(run({"welfare", "--instance", f, "--profile", f}), kExitOk);
    const json w = json::parse(out_.str());
    EXPECT_NEAR(w.at("welfare").at("value").get<double>(), std::stod(eps), 1e-9);
    const double r = w.at("ratio").get<double>();
    EXPECT_GT(r, prev);
    EXPECT_GT(r, 0.01 / std::stod(eps));
    prev = r;
    EXPECT_EQ(run({"certify", "general", "--instance", f, "--profile", f}), kExitInvalidInput);
  }
}

TEST_F(CliTest, NoisyAtZeroMatchesWelfare) {
  ASSERT_EQ(run({"equilibrium", "bernoulli", "--n", "3", "--zeta", "0.2", "--out", path("eq.json")}),
            kExitOk);
  // Lift the zero atom so the noise model applies.
  json eq = io::read_json_file(path("eq.json"));
  for (json& a : eq.at("instance").at("agents")) a.at("prior")[0][0] = "0.1";
  io::write_json_file(path("lifted.json"), eq);
  ASSERT_EQ(run({"welfare", "--instance", path("lifted.json"), "--profile", path("lifted.json")}),
            kExitOk);
  const double clear = json::parse(out_.str()).at("welfare").at("value").get<double>();
  ASSERT_EQ(run({"noisy", "--instance", path("lifted.json"), "--profile", path("lifted.json"),
                 "--eta", "0", "--samples", "200000", "--seed", "5"}),
            kExitOk);
  const json n = json::parse(out_.str());
  EXPECT_NEAR(n.at("welfare").at("value").get<double>(), clear,
              4 * n.at("welfare").at("std_error").get<double>());
  EXPECT_EQ(n.at("welfare").at("samples").get<std::uint64_t>(), 200000u);
  EXPECT_NEAR(n.at("bound").get<double>(), 11 + 5 * std::sqrt(5.0), 1e-12);
  EXPECT_EQ(run({"noisy", "--instance", path("eq.json"), "--profile", path("eq.json"), "--eta",
                 "0.1"}),
            kExitInvalidInput);
}

TEST_F(CliTest, ByteIdenticalAcrossRunsAndWorkers) {
  ASSERT_EQ(run({"gen", "--n", "4", "--k", "2", "--support", "3", "--seed", "11", "--utility",
                 "random-monotone", "--out", path("a.json")}),
            kExitOk);
  ASSERT_EQ(run({"gen", "--n", "4", "--k", "2", "--support", "3", "--seed", "11", "--utility",
                 "random-monotone", "--out", path("b.json")}),
            kExitOk);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  const std::vector<std::vector<std::string>> cmds = {
      {"welfare", "--instance", path("a.json"), "--mode", "mc", "--samples", "30000", "--seed", "4"},
      {"first-best", "--instance", path("a.json"), "--mode", "mc", "--samples", "30000"},
      {"certify", "general", "--instance", path("a.json"), "--mode", "mc", "--samples", "20000"},
      {"noisy", "--instance", path("a.json"), "--eta", "0.2", "--v-lower", "0.0001", "--samples",
       "30000", "--seed", "8"},
      {"verify-ne", "--instance", path("a.json"), "--epsilon", "0.05", "--br-method", "local"},
  };
  for (const auto& base : cmds) {
    std::vector<std::string> outputs;
    for (const char* w : {"1", "3"}) {
      auto args = base;
      args.insert(args.end(), {"--workers", w, "--out", path(std::string("o") + w + ".json")});
      const int code = run(args);
      EXPECT_TRUE(code == kExitOk || code == kExitNotEquilibrium || code == kExitInvalidInput)
          << base[0] << " " << err_.str();
      outputs.push_back(slurp(path(std::string("o") + w + ".json")));
    }
    EXPECT_EQ(outputs[0], outputs[1]) << base[0];
  }
}

TEST_F(CliTest, ConfigRoundTrip) {
  ASSERT_EQ(run({"sweep", "--ns", "2,3", "--zetas", "0.1", "--grid", "50", "--out",
                 path("a.json")}),
            kExitOk);
  ASSERT_EQ(run({"sweep", "--config", path("a.json"), "--out", path("b.json")}), kExitOk);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  const json cfg = io::read_json_file(path("a.json")).at("config");
  EXPECT_EQ(cfg.at("ns"), "2,3");
  EXPECT_FALSE(cfg.contains("out"));
  EXPECT_FALSE(cfg.contains("workers"));
  io::write_json_file(path("c.json"), {{"ns", "2"}, {"zetas", "0.1"}, {"grid", 0}});
  ASSERT_EQ(run({"sweep", "--config", path("c.json"), "--zetas", "0.2"}), kExitOk);
  const json j = json::parse(out_.str());
  EXPECT_EQ(j.at("rows").size(), 1u);
  EXPECT_EQ(j.at("config").at("zetas"), "0.2");
  io::write_json_file(path("d.json"), {{"eta", 0.1}});
  EXPECT_EQ(run({"sweep", "--config", path("d.json")}), kExitInvalidInput);
}

}  // namespace
}  // namespace bpoa
