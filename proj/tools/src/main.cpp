#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "anensolar/error.hpp"
#include "commands.hpp"

extern char** environ;

namespace {

using namespace anensolar;
using namespace anensolar::cli;

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config, "JSON configuration file (comments allowed)");
  cmd->add_option("--set", opts.sets, "Override a key, e.g. --set anen.members=11")->allow_extra_args(false);
  cmd->add_option("-o,--out", opts.out, "Output directory");
  cmd->add_option("-j,--parallel", opts.parallel, "Worker threads");
  cmd->add_flag("-v,--verbose", opts.verbose, "Progress messages on stderr");
}

void print_error(const std::string& code, const std::string& message) {
  nlohmann::json j;
  j["error"] = code;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analog-ensemble solar power forecasting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "anensolar 0.1.0");

  CommonOptions common;
  ReportOptions report;
  WorkflowRunOptions wf_run;
  WorkflowBuildOptions wf_build;

  struct Simple {
    const char* name;
    const char* help;
    int (*fn)(const Context&);
  };
  const Simple simple[] = {
      {"synth", "Generate a synthetic forecast archive and analysis", run_synth},
      {"sigma", "Compute the per-predictor standard deviations", run_sigma},
      {"anen", "Search analogs and build the weather ensemble", run_anen},
      {"simulate", "Convert weather ensembles to PV power", run_simulate},
      {"verify", "Score power ensembles against the analysis", run_verify},
      {"cluster", "Cluster locations into weather regimes", run_cluster},
      {"optimize-weights", "Search predictor weights (EW, NN or RB)", run_optimize},
  };
  std::function<int()> action;
  for (const auto& s : simple) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, common);
    cmd->callback([&action, &common, fn = s.fn] {
      action = [&common, fn] { return fn(make_context(common, environ)); };
    });
  }

  auto* rep = app.add_subcommand("report", "Tabulate verification CSVs side by side");
  add_common(rep, common);
  rep->add_option("--method", report.methods, "NAME=verify.csv (repeatable)");
  rep->add_option("--metric", report.metric, "rmse, bias, crps or spread");
  rep->callback([&] { action = [&] { return run_report(make_context(common, environ), report); }; });

  auto* wf = app.add_subcommand("workflow", "Build or run task workflows");
  wf->require_subcommand(1);
  auto* run = wf->add_subcommand("run", "Run a workflow file");
  run->add_option("-f,--file", wf_run.file, "Workflow JSON")->required();
  run->add_option("--event-log", wf_run.event_log, "Transition log to write");
  run->add_option("--resume", wf_run.resume, "Earlier transition log; finished tasks are skipped");
  run->add_option("--budget", wf_run.budget, "Override the worker budget");
  run->callback([&] { action = [&] { return run_workflow(wf_run); }; });

  auto* build = wf->add_subcommand("build", "Write a workflow file");
  add_common(build, common);
  build->add_option("--kind", wf_build.kind, "weight-search or simulation")->required();
  build->add_option("-f,--file", wf_build.file, "Workflow JSON to write")->required();
  build->add_option("--partitions", wf_build.partitions, "CSV id,area,locations_file");
  build->add_option("--executable", wf_build.executable, "Program the tasks invoke");
  build->add_option("--max-cores", wf_build.max_cores, "Core hint for the largest partition");
  build->callback([&] { action = [&] { return build_workflow(make_context(common, environ), wf_build); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    return action();
  } catch (const Error& e) {
    print_error(std::string(to_string(e.code())), e.what());
    return e.code() == Errc::invalid_argument ? 2 : 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
}
