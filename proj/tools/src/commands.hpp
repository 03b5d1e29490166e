#pragma once

#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace anensolar::cli {

struct CommonOptions {
  std::optional<fs::path> config;
  std::vector<std::string> sets;
  std::optional<fs::path> out;
  std::optional<std::size_t> parallel;
  int verbose = 0;
};

struct Context {
  Json raw;        // merged configuration as hashed into the manifest
  RunConfig cfg;
  std::optional<fs::path> config_file;
};

Context make_context(const CommonOptions& opts, char** envp);

int run_synth(const Context& ctx);
int run_sigma(const Context& ctx);
int run_anen(const Context& ctx);
int run_simulate(const Context& ctx);
int run_verify(const Context& ctx);
int run_cluster(const Context& ctx);
int run_optimize(const Context& ctx);

struct ReportOptions {
  std::vector<std::string> methods;  // NAME=path
  std::string metric = "rmse";
};
int run_report(const Context& ctx, const ReportOptions& opts);

struct WorkflowRunOptions {
  fs::path file;
  std::optional<fs::path> event_log;
  std::optional<fs::path> resume;
  std::optional<std::size_t> budget;
};
int run_workflow(const WorkflowRunOptions& opts);

struct WorkflowBuildOptions {
  std::string kind;  // weight-search | simulation
  fs::path file;
  std::optional<fs::path> partitions;
  std::string executable = "anensolar";
  std::size_t max_cores = 1;
};
int build_workflow(const Context& ctx, const WorkflowBuildOptions& opts);

}  // namespace anensolar::cli
