#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

namespace anensolar {

class WeightGrid;

enum class TaskState { pending, scheduled, running, done, failed, canceled };

std::string_view to_string(TaskState s);
TaskState parse_task_state(std::string_view s);

/// Edges of the task state machine, including resubmission (FAILED ->
/// PENDING) and hand-back on backend loss (SCHEDULED -> PENDING).
bool valid_transition(TaskState from, TaskState to);

struct TaskCommand {
  std::vector<std::string> argv;
  std::size_t cores = 1;
};

struct TaskSpec {
  std::string id;
  TaskCommand command;
  int max_retries = 3;
};

struct StageSpec {
  std::string id;
  std::vector<TaskSpec> tasks;
};

struct PipelineSpec {
  std::string id;
  std::vector<StageSpec> stages;
};

struct Workflow {
  std::vector<PipelineSpec> pipelines;
  std::size_t worker_budget = 1;

  std::size_t task_count() const;
  /// Throws Errc::invalid_workflow listing every problem: no pipelines,
  /// empty pipelines or stages, duplicate task ids, zero-core tasks, tasks
  /// wider than the budget, negative retry counts.
  void validate() const;
};

/// Declarative file: {"worker_budget", "max_retries", "pipelines": [{"id",
/// "stages": [{"id", "tasks": [{"id", "command": [...], "cores",
/// "max_retries"}]}]}]}. Comments are allowed.
Workflow load_workflow(const std::filesystem::path& path);
Workflow parse_workflow(std::string_view json_text);
void save_workflow(const Workflow& wf, const std::filesystem::path& path);

struct TransitionRecord {
  std::int64_t timestamp_us = 0;  // since submission
  std::uint64_t seq = 0;          // global total order
  std::string task;
  TaskState from = TaskState::pending;
  TaskState to = TaskState::pending;
  std::string detail;             // "exit=N", "lost", "cancel", ...

  friend bool operator==(const TransitionRecord&, const TransitionRecord&) = default;
};

/// One record per line: "timestamp_us seq task FROM TO detail".
std::string format_record(const TransitionRecord& r);
TransitionRecord parse_record(std::string_view line);
void write_event_log(const std::vector<TransitionRecord>& log, const std::filesystem::path& path);
std::vector<TransitionRecord> read_event_log(const std::filesystem::path& path);

/// Audits a log against the workflow: per-task chains start at PENDING,
/// follow valid edges and end terminal; exit-code attempts stay within
/// max_retries + 1; no stage starts before its predecessor is terminal; the
/// cores of RUNNING tasks never exceed the budget. Returns the violations.
std::vector<std::string> audit_event_log(const std::vector<TransitionRecord>& log,
                                         const Workflow& wf);

/// Execution substrate. Completion callbacks may arrive from any thread.
class Backend {
 public:
  struct Listener {
    std::function<void(std::uint64_t token, int exit_code)> exited;
    std::function<void(std::uint64_t token)> lost;
    std::function<void(bool available)> availability;
  };

  virtual ~Backend() = default;
  virtual void attach(Listener listener) = 0;
  virtual bool available() const = 0;
  virtual void launch(std::uint64_t token, const TaskSpec& task, std::size_t attempt) = 0;
  /// Asks a running launch to stop; it still reports its exit.
  virtual void cancel(std::uint64_t token) = 0;
  /// Simulated crash: every running launch is reported lost and the backend
  /// refuses work until restart().
  virtual void kill() = 0;
  virtual void restart() = 0;
  /// Joins all outstanding launches.
  virtual void shutdown() = 0;
};

/// Runs each launch on its own thread through a callable.
using TaskFunction = std::function<int(const TaskSpec&, std::size_t attempt, std::stop_token)>;
std::shared_ptr<Backend> make_function_backend(TaskFunction fn);

/// Runs each task's argv as a child process. An argv[0] equal to
/// `self_alias` is replaced by `self_executable`.
std::shared_ptr<Backend> make_process_backend(std::filesystem::path self_executable = {},
                                              std::string self_alias = "anensolar");

enum class RunStatus { running, degraded, succeeded, failed, canceled };
std::string_view to_string(RunStatus s);

struct RunOptions {
  std::optional<std::filesystem::path> event_log;      // streamed as records arrive
  std::vector<TransitionRecord> resume_from;            // tasks DONE here are not re-run
};

class RunHandle {
 public:
  RunHandle() = default;
  explicit RunHandle(std::shared_ptr<struct RunShared> shared);
  RunHandle(RunHandle&&) noexcept = default;
  RunHandle& operator=(RunHandle&&) noexcept = default;
  ~RunHandle();

  RunStatus status() const;
  TaskState state(const std::string& task_id) const;
  std::size_t attempts(const std::string& task_id) const;
  std::vector<TransitionRecord> events() const;

  void cancel();
  /// Blocks until every task is terminal; returns the final status.
  RunStatus wait();
  bool wait_for(std::chrono::milliseconds timeout);

 private:
  std::shared_ptr<struct RunShared> shared_;
};

/// Validates the workflow and starts the coordinator.
RunHandle submit(Workflow workflow, std::shared_ptr<Backend> backend, RunOptions options = {});

struct WeightSearchOptions {
  std::string executable = "anensolar";
  std::filesystem::path config = "config.json";
  std::filesystem::path output = "runs";
  std::size_t worker_budget = 1;
  int max_retries = 3;
};

/// One pipeline per grid vector: stages anen -> simulate -> verify, each
/// with an NN and an RB task (6 tasks per pipeline).
Workflow build_weight_search_workflow(const WeightGrid& grid, const WeightSearchOptions& opts = {});

struct Partition {
  std::string id;
  std::size_t area = 1;  // grid points covered
  std::filesystem::path locations;  // location-id list for the partition
};

struct SimulationOptions {
  std::string executable = "anensolar";
  std::filesystem::path config = "config.json";
  std::filesystem::path output = "runs";
  std::size_t worker_budget = 1;
  std::size_t max_cores = 1;  // hint for the largest partition
  int max_retries = 3;
};

/// One pipeline with stage 1 = AnEn per partition and stage 2 = power
/// simulation per partition; core hints scale with partition area.
Workflow build_simulation_workflow(const std::vector<Partition>& partitions,
                                   const std::vector<std::string>& modules,
                                   const SimulationOptions& opts = {});

}  // namespace anensolar
