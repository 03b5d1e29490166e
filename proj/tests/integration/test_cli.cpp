#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "anensolar/io.hpp"
#include "anensolar/workflow.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kCli = ANENSOLAR_CLI_PATH;
const fs::path kSmallConfig = fs::path(ANENSOLAR_SOURCE_DIR) / "configs" / "small.json";

struct Result {
  int exit_code;
  std::string err;
};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "anensolar_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result run(const std::string& args) {
  const auto err = fs::temp_directory_path() / "anensolar_cli_tests" / "stderr.txt";
  const std::string cmd = "'" + kCli.string() + "' " + args + " >/dev/null 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

Result run_chain(const fs::path& out) {
  const std::string common = "-c '" + kSmallConfig.string() + "' -o '" + out.string() + "'";
  for (const char* cmd : {"synth", "anen", "simulate", "verify", "report"}) {
    auto r = run(std::string(cmd) + " " + common);
    if (r.exit_code != 0) return r;
  }
  return {0, ""};
}

}  // namespace

TEST(Cli, FullChainProducesEveryArtifact) {
  const auto out = scratch("chain");
  const auto r = run_chain(out);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const char* f : {"forecasts.anen", "analysis.anen", "locations.csv", "sigma.anen", "analogs.anen",
                        "ensemble.anen", "solar.anen", "power.anen", "power_raw.anen", "power_truth.anen",
                        "verify.csv", "verify_raw.csv", "verify_summary.json", "report.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto ens = anensolar::read_ensemble(out / "ensemble.anen");
  EXPECT_EQ(ens.members(), 21u);
  EXPECT_EQ(ens.init_times.size(), 15u);
  const auto power = anensolar::read_ensemble(out / "power.anen");
  EXPECT_EQ(power.variable_names, (std::vector<std::string>{"SP128", "STU300"}));

  const auto summary = nlohmann::json::parse(slurp(out / "verify_summary.json"));
  EXPECT_LT(summary["rmse_anen"].get<double>(), summary["rmse_raw"].get<double>());

  std::istringstream report(slurp(out / "report.csv"));
  std::string header;
  std::getline(report, header);
  EXPECT_EQ(header, "slot,rmse_AnEn,rmse_Raw");

  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  for (const char* cmd : {"synth", "anen", "simulate", "verify", "report"}) {
    ASSERT_TRUE(manifest.contains(cmd)) << cmd;
    EXPECT_EQ(manifest[cmd]["config_sha256"].get<std::string>().size(), 64u);
  }
}

TEST(Cli, RerunIsBitIdentical) {
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  ASSERT_EQ(run_chain(a).exit_code, 0);
  ASSERT_EQ(run_chain(b).exit_code, 0);
  // config hashes differ only through the output path, so compare outputs
  const auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
  const auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
  for (const auto& [cmd, entry] : ma.items()) {
    EXPECT_EQ(entry["outputs"], mb[cmd]["outputs"]) << cmd;
  }
  EXPECT_EQ(slurp(a / "power.anen"), slurp(b / "power.anen"));
}

TEST(Cli, ParallelRunMatchesSerial) {
  const auto a = scratch("serial");
  const auto b = scratch("parallel");
  ASSERT_EQ(run_chain(a).exit_code, 0);
  const std::string common = "-c '" + kSmallConfig.string() + "' -o '" + b.string() + "' -j 4";
  for (const char* cmd : {"synth", "anen", "simulate"}) ASSERT_EQ(run(std::string(cmd) + " " + common).exit_code, 0);
  EXPECT_EQ(slurp(a / "ensemble.anen"), slurp(b / "ensemble.anen"));
  EXPECT_EQ(slurp(a / "power.anen"), slurp(b / "power.anen"));
}

TEST(Cli, WeightsNotSummingToOneNamesTheKey) {
  const auto out = scratch("bad_weights");
  const auto r = run("anen -o '" + out.string() + "' --set 'anen.weights=[0.5,0.3,0.3]'");
  EXPECT_EQ(r.exit_code, 2);
  const auto j = nlohmann::json::parse(r.err);
  EXPECT_EQ(j["error"], "invalid_argument");
  EXPECT_NE(j["message"].get<std::string>().find("anen.weights"), std::string::npos);
}

TEST(Cli, EveryConfigProblemIsListed) {
  const auto out = scratch("many_problems");
  const auto r = run("sigma -o '" + out.string() +
                     "' --set anen.members=0 --set nonsense=1 --set 'simulate.modules=[\"XX\"]'");
  EXPECT_EQ(r.exit_code, 2);
  const auto msg = nlohmann::json::parse(r.err)["message"].get<std::string>();
  for (const char* key : {"anen.members", "nonsense", "simulate.modules"}) {
    EXPECT_NE(msg.find(key), std::string::npos) << key << " missing from: " << msg;
  }
}

TEST(Cli, EnvironmentOverridesSitBetweenFileAndSet) {
  const auto out = scratch("env");
  setenv("ANENSOLAR_ANEN__MEMBERS", "0", 1);
  auto r = run("sigma -o '" + out.string() + "'");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("anen.members"), std::string::npos);
  r = run("synth -o '" + out.string() + "' --set anen.members=5");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  unsetenv("ANENSOLAR_ANEN__MEMBERS");
}

TEST(Cli, MissingInputsAreIoErrors) {
  const auto out = scratch("missing");
  const auto r = run("simulate -o '" + out.string() + "'");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "io_failure");
}

TEST(Cli, WeightSearchWorkflowRunsAndResumes) {
  const auto out = scratch("workflow");
  const std::string common = "-o '" + out.string() + "' --set synth.days=20 --set synth.rows=2 --set synth.cols=2"
                             " --set 'anen.search_days=[0,15]' --set 'anen.test_days=[15,20]'"
                             " --set anen.members=5 --set optimize.total_samples=2 --set cluster.regimes=2";
  ASSERT_EQ(run("synth " + common).exit_code, 0);
  const auto wf_file = out / "wf.json";
  ASSERT_EQ(run("workflow build --kind weight-search -f '" + wf_file.string() + "' " + common +
                " --set optimize.step=0.5 --set workflow.worker_budget=2").exit_code, 0);
  const auto wf = anensolar::load_workflow(wf_file);
  EXPECT_EQ(wf.pipelines.size(), 6u);
  EXPECT_EQ(wf.task_count(), 36u);

  const auto log = out / "events.log";
  auto r = run("workflow run -f '" + wf_file.string() + "' --event-log '" + log.string() + "'");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto events = anensolar::read_event_log(log);
  EXPECT_TRUE(anensolar::audit_event_log(events, wf).empty());
  EXPECT_TRUE(fs::exists(out / "w0" / "nn" / "verify.csv"));
  EXPECT_TRUE(fs::exists(out / "w5" / "rb" / "verify.csv"));

  const auto log2 = out / "events2.log";
  r = run("workflow run -f '" + wf_file.string() + "' --resume '" + log.string() + "' --event-log '" +
          log2.string() + "'");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(anensolar::read_event_log(log2).empty());
}

TEST(Cli, OptimizeWeightsThenSearchWithThem) {
  const auto out = scratch("optimize");
  const std::string common = "-c '" + kSmallConfig.string() + "' -o '" + out.string() + "'";
  ASSERT_EQ(run("synth " + common).exit_code, 0);
  auto r = run("optimize-weights " + common);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(fs::exists(out / "optimization.csv"));
  r = run("anen " + common + " --set anen.weights_file='" + (out / "weights.csv").string() + "'");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  r = run("optimize-weights " + common + " --set optimize.strategy=NN");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(fs::exists(out / "assignment.csv"));
}

TEST(Cli, SimulationWorkflowOverPartitions) {
  const auto out = scratch("simulation");
  const std::string common = "-o '" + out.string() + "' --set synth.days=20"
                             " --set 'anen.search_days=[0,15]' --set 'anen.test_days=[15,20]' --set anen.members=5"
                             " --set 'simulate.modules=[\"SP128\",\"KS20\"]'";
  ASSERT_EQ(run("synth " + common).exit_code, 0);
  {
    std::ofstream(out / "east.txt") << "id\n0\n1\n2\n3\n4\n5\n";
    std::ofstream(out / "west.txt") << "id\n6\n7\n8\n9\n10\n11\n";
    std::ofstream(out / "partitions.csv") << "id,area,locations\neast,6," << (out / "east.txt").string()
                                          << "\nwest,6," << (out / "west.txt").string() << "\n";
  }
  const auto wf_file = out / "sim.json";
  auto r = run("workflow build --kind simulation --partitions '" + (out / "partitions.csv").string() + "' -f '" +
               wf_file.string() + "' " + common);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  r = run("workflow run -f '" + wf_file.string() + "'");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto power = anensolar::read_ensemble(out / "west" / "power.anen");
  EXPECT_EQ(power.variable_names, (std::vector<std::string>{"SP128", "KS20"}));
}
