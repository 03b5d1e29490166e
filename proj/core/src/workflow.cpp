#include "anensolar/workflow.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <charconv>
#include <condition_variable>
#include <csignal>
#include <deque>
#include <fstream>
#include <list>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "anensolar/error.hpp"
#include "anensolar/weights.hpp"

extern char** environ;

namespace anensolar {

std::string_view to_string(TaskState s) {
  switch (s) {
    case TaskState::pending: return "PENDING";
    case TaskState::scheduled: return "SCHEDULED";
    case TaskState::running: return "RUNNING";
    case TaskState::done: return "DONE";
    case TaskState::failed: return "FAILED";
    case TaskState::canceled: return "CANCELED";
  }
  return "?";
}

TaskState parse_task_state(std::string_view s) {
  for (auto st : {TaskState::pending, TaskState::scheduled, TaskState::running, TaskState::done,
                  TaskState::failed, TaskState::canceled}) {
    if (to_string(st) == s) return st;
  }
  throw Error(Errc::malformed_header, "unknown task state '" + std::string(s) + "'");
}

bool valid_transition(TaskState from, TaskState to) {
  using S = TaskState;
  switch (from) {
    case S::pending: return to == S::scheduled || to == S::canceled;
    case S::scheduled: return to == S::running || to == S::pending || to == S::canceled;
    case S::running: return to == S::done || to == S::failed || to == S::canceled;
    case S::failed: return to == S::pending;
    case S::done:
    case S::canceled: return false;
  }
  return false;
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::running: return "running";
    case RunStatus::degraded: return "degraded";
    case RunStatus::succeeded: return "succeeded";
    case RunStatus::failed: return "failed";
    case RunStatus::canceled: return "canceled";
  }
  return "?";
}

std::size_t Workflow::task_count() const {
  std::size_t n = 0;
  for (const auto& p : pipelines)
    for (const auto& s : p.stages) n += s.tasks.size();
  return n;
}

void Workflow::validate() const {
  std::vector<std::string> problems;
  if (worker_budget < 1) problems.push_back("worker_budget must be at least 1");
  if (pipelines.empty()) problems.push_back("workflow has no pipelines");
  std::set<std::string> ids;
  for (const auto& p : pipelines) {
    if (p.stages.empty()) problems.push_back("pipeline '" + p.id + "' has no stages");
    for (const auto& s : p.stages) {
      if (s.tasks.empty()) {
        problems.push_back("stage '" + s.id + "' of pipeline '" + p.id + "' is empty");
      }
      for (const auto& t : s.tasks) {
        if (t.id.empty()) problems.push_back("task without id in stage '" + s.id + "'");
        if (!ids.insert(t.id).second) problems.push_back("duplicate task id '" + t.id + "'");
        if (t.command.cores < 1) problems.push_back("task '" + t.id + "' requests zero cores");
        if (t.command.cores > worker_budget) {
          problems.push_back("task '" + t.id + "' requests " + std::to_string(t.command.cores) +
                             " cores, budget is " + std::to_string(worker_budget));
        }
        if (t.max_retries < 0) problems.push_back("task '" + t.id + "' has negative max_retries");
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid workflow:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(Errc::invalid_workflow, msg);
  }
}

Workflow parse_workflow(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_workflow, std::string("workflow file is not valid JSON: ") + e.what());
  }
  try {
    Workflow wf;
    wf.worker_budget = doc.value("worker_budget", std::size_t{1});
    const int default_retries = doc.value("max_retries", 3);
    for (const auto& jp : doc.at("pipelines")) {
      PipelineSpec p;
      p.id = jp.value("id", "p" + std::to_string(wf.pipelines.size()));
      for (const auto& js : jp.at("stages")) {
        StageSpec s;
        s.id = js.value("id", p.id + ".s" + std::to_string(p.stages.size()));
        for (const auto& jt : js.at("tasks")) {
          TaskSpec t;
          t.id = jt.at("id").get<std::string>();
          t.command.argv = jt.at("command").get<std::vector<std::string>>();
          t.command.cores = jt.value("cores", std::size_t{1});
          t.max_retries = jt.value("max_retries", default_retries);
          s.tasks.push_back(std::move(t));
        }
        p.stages.push_back(std::move(s));
      }
      wf.pipelines.push_back(std::move(p));
    }
    return wf;
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_workflow, std::string("workflow file: ") + e.what());
  }
}

Workflow load_workflow(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_workflow(ss.str());
}

void save_workflow(const Workflow& wf, const std::filesystem::path& path) {
  using nlohmann::json;
  json doc;
  doc["worker_budget"] = wf.worker_budget;
  doc["pipelines"] = json::array();
  for (const auto& p : wf.pipelines) {
    json jp{{"id", p.id}, {"stages", json::array()}};
    for (const auto& s : p.stages) {
      json js{{"id", s.id}, {"tasks", json::array()}};
      for (const auto& t : s.tasks) {
        js["tasks"].push_back({{"id", t.id},
                               {"command", t.command.argv},
                               {"cores", t.command.cores},
                               {"max_retries", t.max_retries}});
      }
      jp["stages"].push_back(std::move(js));
    }
    doc["pipelines"].push_back(std::move(jp));
  }
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());
  out << doc.dump(1) << '\n';
}

std::string format_record(const TransitionRecord& r) {
  std::string line = std::to_string(r.timestamp_us) + ' ' + std::to_string(r.seq) + ' ' + r.task +
                     ' ' + std::string(to_string(r.from)) + ' ' + std::string(to_string(r.to));
  if (!r.detail.empty()) line += ' ' + r.detail;
  return line;
}

TransitionRecord parse_record(std::string_view line) {
  std::istringstream ss{std::string(line)};
  TransitionRecord r;
  std::string from, to;
  if (!(ss >> r.timestamp_us >> r.seq >> r.task >> from >> to)) {
    throw Error(Errc::malformed_header, "bad event record '" + std::string(line) + "'");
  }
  r.from = parse_task_state(from);
  r.to = parse_task_state(to);
  ss >> r.detail;
  return r;
}

void write_event_log(const std::vector<TransitionRecord>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());
  for (const auto& r : log) out << format_record(r) << '\n';
}

std::vector<TransitionRecord> read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  std::vector<TransitionRecord> log;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) log.push_back(parse_record(line));
  }
  return log;
}

std::vector<std::string> audit_event_log(const std::vector<TransitionRecord>& log_in,
                                         const Workflow& wf) {
  struct Info {
    std::size_t pipeline, stage, cores;
    int max_retries;
  };
  std::unordered_map<std::string, Info> info;
  for (std::size_t p = 0; p < wf.pipelines.size(); ++p)
    for (std::size_t s = 0; s < wf.pipelines[p].stages.size(); ++s)
      for (const auto& t : wf.pipelines[p].stages[s].tasks)
        info[t.id] = {p, s, t.command.cores, t.max_retries};

  auto log = log_in;
  std::stable_sort(log.begin(), log.end(),
                   [](const auto& a, const auto& b) { return a.seq < b.seq; });

  std::vector<std::string> problems;
  std::unordered_map<std::string, TaskState> state;
  std::unordered_map<std::string, int> exits;
  std::unordered_map<std::string, std::uint64_t> last_seq;
  std::size_t running_cores = 0;
  std::int64_t last_ts = 0;
  for (const auto& r : log) {
    auto it = info.find(r.task);
    if (it == info.end()) {
      problems.push_back("record for unknown task '" + r.task + "'");
      continue;
    }
    if (r.timestamp_us < last_ts) {
      problems.push_back("timestamp goes backwards at seq " + std::to_string(r.seq));
    }
    last_ts = r.timestamp_us;
    auto [st, fresh] = state.emplace(r.task, TaskState::pending);
    if (r.from != st->second) {
      problems.push_back("task '" + r.task + "' chain break at seq " + std::to_string(r.seq));
    }
    if (!valid_transition(r.from, r.to)) {
      problems.push_back("task '" + r.task + "' invalid transition " +
                         std::string(to_string(r.from)) + "->" + std::string(to_string(r.to)));
    }
    st->second = r.to;
    last_seq[r.task] = r.seq;
    if (r.detail.rfind("exit=", 0) == 0 && ++exits[r.task] > it->second.max_retries + 1) {
      problems.push_back("task '" + r.task + "' ran more than max_retries + 1 times");
    }
    if (r.to == TaskState::running) running_cores += it->second.cores;
    if (r.from == TaskState::running) running_cores -= it->second.cores;
    if (running_cores > wf.worker_budget) {
      problems.push_back("budget exceeded at seq " + std::to_string(r.seq));
    }
  }

  // A stage closes at the last record of its tasks; successors may not be
  // scheduled before that.
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> closed;
  for (const auto& [id, inf] : info) {
    auto st = state.find(id);
    const TaskState final_state = st == state.end() ? TaskState::pending : st->second;
    if (final_state != TaskState::done && final_state != TaskState::failed &&
        final_state != TaskState::canceled) {
      problems.push_back("task '" + id + "' never reached a terminal state");
    }
    auto& c = closed[{inf.pipeline, inf.stage}];
    if (auto ls = last_seq.find(id); ls != last_seq.end()) c = std::max(c, ls->second);
  }
  for (const auto& r : log) {
    if (r.to != TaskState::scheduled) continue;
    auto it = info.find(r.task);
    if (it == info.end() || it->second.stage == 0) continue;
    if (r.seq < closed[{it->second.pipeline, it->second.stage - 1}]) {
      problems.push_back("task '" + r.task + "' scheduled before its previous stage finished");
    }
  }
  return problems;
}

// ---------------------------------------------------------------------------
// Backends

namespace {

class ThreadedBackend : public Backend {
 public:
  ~ThreadedBackend() override { shutdown(); }

  void attach(Listener listener) override {
    std::lock_guard lock(m_);
    listener_ = std::move(listener);
  }

  bool available() const override {
    std::lock_guard lock(m_);
    return available_;
  }

  void launch(std::uint64_t token, const TaskSpec& task, std::size_t attempt) override {
    std::unique_lock lock(m_);
    reap();
    if (!available_) {
      auto li = listener_;
      lock.unlock();
      if (li.lost) li.lost(token);
      return;
    }
    auto l = std::make_shared<Launch>();
    l->token = token;
    launches_.push_back(l);
    l->thread = std::jthread([this, l, task, attempt] { run(l, task, attempt); });
  }

  void cancel(std::uint64_t token) override {
    std::lock_guard lock(m_);
    for (auto& l : launches_) {
      if (l->token == token && !l->finished) {
        l->stop.request_stop();
        on_stop(*l, SIGTERM);
      }
    }
  }

  void kill() override {
    std::vector<std::uint64_t> lost;
    Listener li;
    {
      std::lock_guard lock(m_);
      available_ = false;
      for (auto& l : launches_) {
        if (l->finished || l->lost) continue;
        l->lost = true;
        l->stop.request_stop();
        on_stop(*l, SIGKILL);
        lost.push_back(l->token);
      }
      li = listener_;
    }
    for (auto t : lost)
      if (li.lost) li.lost(t);
    if (li.availability) li.availability(false);
  }

  void restart() override {
    Listener li;
    {
      std::lock_guard lock(m_);
      available_ = true;
      li = listener_;
    }
    if (li.availability) li.availability(true);
  }

  void shutdown() override {
    std::list<std::shared_ptr<Launch>> all;
    {
      std::lock_guard lock(m_);
      all.swap(launches_);
    }
    for (auto& l : all)
      if (l->thread.joinable()) l->thread.join();
  }

 protected:
  struct Launch {
    std::uint64_t token = 0;
    std::stop_source stop;
    bool lost = false;
    bool finished = false;
    pid_t pid = -1;
    std::jthread thread;
  };

  virtual int execute(const TaskSpec& task, std::size_t attempt, Launch& launch) = 0;
  /// Called under the lock when a launch is asked to stop.
  virtual void on_stop(Launch&, int /*signal*/) {}

  mutable std::mutex m_;

 private:
  void run(const std::shared_ptr<Launch>& l, const TaskSpec& task, std::size_t attempt) {
    int code = 1;
    try {
      code = execute(task, attempt, *l);
    } catch (...) {
      code = 1;
    }
    bool lost;
    Listener li;
    {
      std::lock_guard lock(m_);
      lost = l->lost;
      l->finished = true;
      li = listener_;
    }
    if (!lost && li.exited) li.exited(l->token, code);
  }

  // Joins finished launches; caller holds the lock.
  void reap() {
    for (auto it = launches_.begin(); it != launches_.end();) {
      if ((*it)->finished) {
        if ((*it)->thread.joinable()) (*it)->thread.join();
        it = launches_.erase(it);
      } else {
        ++it;
      }
    }
  }

  Listener listener_;
  bool available_ = true;
  std::list<std::shared_ptr<Launch>> launches_;
};

class FunctionBackend final : public ThreadedBackend {
 public:
  explicit FunctionBackend(TaskFunction fn) : fn_(std::move(fn)) {}
  ~FunctionBackend() override { shutdown(); }

 protected:
  int execute(const TaskSpec& task, std::size_t attempt, Launch& launch) override {
    return fn_(task, attempt, launch.stop.get_token());
  }

 private:
  TaskFunction fn_;
};

class ProcessBackend final : public ThreadedBackend {
 public:
  ProcessBackend(std::filesystem::path self, std::string alias)
      : self_(std::move(self)), alias_(std::move(alias)) {}
  ~ProcessBackend() override { shutdown(); }

 protected:
  int execute(const TaskSpec& task, std::size_t, Launch& launch) override {
    if (task.command.argv.empty()) return 127;
    std::vector<std::string> args = task.command.argv;
    if (!self_.empty() && args[0] == alias_) args[0] = self_.string();
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    pid_t pid = -1;
    if (posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ) != 0) return 127;
    {
      std::lock_guard lock(m_);
      launch.pid = pid;
      if (launch.stop.stop_requested()) ::kill(pid, launch.lost ? SIGKILL : SIGTERM);
    }
    int status = 0;
    while (waitpid(pid, &status, 0) < 0) {
      if (errno != EINTR) return 127;
    }
    {
      std::lock_guard lock(m_);
      launch.pid = -1;
    }
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return 1;
  }

  void on_stop(Launch& l, int signal) override {
    if (l.pid > 0) ::kill(l.pid, signal);
  }

 private:
  std::filesystem::path self_;
  std::string alias_;
};

}  // namespace

std::shared_ptr<Backend> make_function_backend(TaskFunction fn) {
  return std::make_shared<FunctionBackend>(std::move(fn));
}

std::shared_ptr<Backend> make_process_backend(std::filesystem::path self_executable,
                                              std::string self_alias) {
  return std::make_shared<ProcessBackend>(std::move(self_executable), std::move(self_alias));
}

// ---------------------------------------------------------------------------
// Coordinator

struct RunShared {
  struct Message {
    enum Kind { exited, lost, availability, cancel } kind;
    std::uint64_t token = 0;
    int code = 0;
    bool flag = false;
  };

  struct TaskRt {
    const TaskSpec* spec = nullptr;
    std::size_t pipeline = 0, stage = 0;
    TaskState state = TaskState::pending;
    std::size_t attempts = 0;
    std::uint64_t token = 0;
    bool cancel_requested = false;
  };

  Workflow wf;
  std::shared_ptr<Backend> backend;
  std::vector<TaskRt> tasks;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::vector<std::vector<std::size_t>>> layout;
  std::vector<std::size_t> current_stage;
  std::vector<bool> pipeline_finished;
  std::unordered_map<std::uint64_t, std::size_t> token_task;
  std::uint64_t next_token = 0;
  std::size_t used_cores = 0;
  bool backend_available = true;
  bool canceling = false;
  std::chrono::steady_clock::time_point start;
  std::optional<std::ofstream> sink;

  std::mutex qm;
  std::condition_variable qcv;
  std::deque<Message> queue;

  mutable std::mutex sm;
  std::condition_variable scv;
  std::vector<TransitionRecord> log;
  RunStatus status = RunStatus::running;
  bool finished = false;

  std::jthread coordinator;

  void post(Message m) {
    {
      std::lock_guard lock(qm);
      queue.push_back(m);
    }
    qcv.notify_one();
  }

  bool is_final(const TaskRt& t) const {
    return t.state == TaskState::done || t.state == TaskState::canceled ||
           (t.state == TaskState::failed &&
            t.attempts > static_cast<std::size_t>(t.spec->max_retries));
  }

  void transition(std::size_t k, TaskState to, std::string detail) {
    auto& t = tasks[k];
    if (!valid_transition(t.state, to)) {
      throw std::logic_error("workflow engine attempted an invalid transition");
    }
    std::lock_guard lock(sm);
    TransitionRecord r;
    r.timestamp_us = std::chrono::duration_cast<std::chrono::microseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    if (!log.empty()) r.timestamp_us = std::max(r.timestamp_us, log.back().timestamp_us);
    r.seq = log.size();
    r.task = t.spec->id;
    r.from = t.state;
    r.to = to;
    r.detail = std::move(detail);
    t.state = to;
    if (sink) *sink << format_record(r) << '\n';
    log.push_back(std::move(r));
  }

  void set_status(RunStatus s) {
    std::lock_guard lock(sm);
    status = s;
  }

  void schedule() {
    if (canceling || !backend_available || !backend->available()) return;
    for (std::size_t p = 0; p < layout.size(); ++p) {
      if (pipeline_finished[p]) continue;
      for (auto k : layout[p][current_stage[p]]) {
        auto& t = tasks[k];
        if (t.state != TaskState::pending) continue;
        if (used_cores + t.spec->command.cores > wf.worker_budget) continue;
        used_cores += t.spec->command.cores;
        transition(k, TaskState::scheduled, "");
        t.token = ++next_token;
        token_task[t.token] = k;
        transition(k, TaskState::running, "attempt=" + std::to_string(t.attempts + 1));
        backend->launch(t.token, *t.spec, t.attempts + 1);
      }
    }
  }

  void advance(std::size_t p) {
    while (!pipeline_finished[p]) {
      const auto& stage = layout[p][current_stage[p]];
      bool all_final = true, clean = true;
      for (auto k : stage) {
        if (!is_final(tasks[k])) all_final = false;
        if (tasks[k].state != TaskState::done) clean = false;
      }
      if (!all_final) return;
      if (!clean) {
        for (std::size_t s = current_stage[p] + 1; s < layout[p].size(); ++s)
          for (auto k : layout[p][s])
            if (tasks[k].state == TaskState::pending) transition(k, TaskState::canceled, "upstream");
        pipeline_finished[p] = true;
        return;
      }
      if (++current_stage[p] == layout[p].size()) {
        pipeline_finished[p] = true;
        --current_stage[p];
      }
    }
  }

  std::optional<std::size_t> running_task(std::uint64_t token) {
    auto it = token_task.find(token);
    if (it == token_task.end()) return std::nullopt;
    const auto k = it->second;
    token_task.erase(it);
    if (tasks[k].token != token || tasks[k].state != TaskState::running) return std::nullopt;
    used_cores -= tasks[k].spec->command.cores;
    return k;
  }

  void handle(const Message& m) {
    switch (m.kind) {
      case Message::exited: {
        auto k = running_task(m.token);
        if (!k) return;
        auto& t = tasks[*k];
        if (canceling || t.cancel_requested) {
          transition(*k, TaskState::canceled, "cancel");
        } else {
          ++t.attempts;
          const std::string detail = "exit=" + std::to_string(m.code);
          if (m.code == 0) {
            transition(*k, TaskState::done, detail);
          } else {
            transition(*k, TaskState::failed, detail);
            if (t.attempts <= static_cast<std::size_t>(t.spec->max_retries)) {
              transition(*k, TaskState::pending, "retry");
            }
          }
        }
        advance(t.pipeline);
        return;
      }
      case Message::lost: {
        auto k = running_task(m.token);
        if (!k) return;
        if (canceling || tasks[*k].cancel_requested) {
          transition(*k, TaskState::canceled, "lost");
        } else {
          transition(*k, TaskState::failed, "lost");
          transition(*k, TaskState::pending, "resubmit");
        }
        advance(tasks[*k].pipeline);
        return;
      }
      case Message::availability:
        backend_available = m.flag;
        if (!canceling) set_status(m.flag ? RunStatus::running : RunStatus::degraded);
        return;
      case Message::cancel:
        if (canceling) return;
        canceling = true;
        for (std::size_t k = 0; k < tasks.size(); ++k) {
          auto& t = tasks[k];
          if (t.state == TaskState::pending) {
            transition(k, TaskState::canceled, "cancel");
          } else if (t.state == TaskState::running) {
            t.cancel_requested = true;
            backend->cancel(t.token);
          }
        }
        for (std::size_t p = 0; p < layout.size(); ++p) advance(p);
        return;
    }
  }

  bool all_finished() const {
    return std::all_of(pipeline_finished.begin(), pipeline_finished.end(),
                       [](bool b) { return b; });
  }

  void run() {
    try {
      loop();
    } catch (...) {
      // Engine fault: report the run as failed rather than hang waiters.
      canceling = false;
      std::lock_guard lock(sm);
      status = RunStatus::failed;
      finished = true;
      scv.notify_all();
      return;
    }
  }

  void loop() {
    for (std::size_t p = 0; p < layout.size(); ++p) advance(p);
    while (true) {
      schedule();
      if (all_finished()) break;
      Message m;
      {
        std::unique_lock lock(qm);
        qcv.wait(lock, [&] { return !queue.empty(); });
        m = queue.front();
        queue.pop_front();
      }
      handle(m);
    }
    backend->shutdown();
    bool any_failed = false;
    for (const auto& t : tasks) any_failed |= t.state == TaskState::failed;
    {
      std::lock_guard lock(sm);
      status = canceling ? RunStatus::canceled
                         : (any_failed ? RunStatus::failed : RunStatus::succeeded);
      if (sink) sink->flush();
      finished = true;
    }
    scv.notify_all();
  }
};

RunHandle::RunHandle(std::shared_ptr<RunShared> shared) : shared_(std::move(shared)) {}

RunHandle::~RunHandle() {
  if (!shared_) return;
  bool done;
  {
    std::lock_guard lock(shared_->sm);
    done = shared_->finished;
  }
  if (!done) cancel();
  wait();
  if (shared_->coordinator.joinable()) shared_->coordinator.join();
  shared_->backend->attach({});
}

RunStatus RunHandle::status() const {
  std::lock_guard lock(shared_->sm);
  return shared_->status;
}

TaskState RunHandle::state(const std::string& id) const {
  auto it = shared_->index.find(id);
  if (it == shared_->index.end()) throw Error(Errc::invalid_argument, "unknown task '" + id + "'");
  std::lock_guard lock(shared_->sm);
  return shared_->tasks[it->second].state;
}

std::size_t RunHandle::attempts(const std::string& id) const {
  auto it = shared_->index.find(id);
  if (it == shared_->index.end()) throw Error(Errc::invalid_argument, "unknown task '" + id + "'");
  std::lock_guard lock(shared_->sm);
  return shared_->tasks[it->second].attempts;
}

std::vector<TransitionRecord> RunHandle::events() const {
  std::lock_guard lock(shared_->sm);
  return shared_->log;
}

void RunHandle::cancel() { shared_->post({RunShared::Message::cancel}); }

RunStatus RunHandle::wait() {
  std::unique_lock lock(shared_->sm);
  shared_->scv.wait(lock, [&] { return shared_->finished; });
  return shared_->status;
}

bool RunHandle::wait_for(std::chrono::milliseconds timeout) {
  std::unique_lock lock(shared_->sm);
  return shared_->scv.wait_for(lock, timeout, [&] { return shared_->finished; });
}

RunHandle submit(Workflow workflow, std::shared_ptr<Backend> backend, RunOptions options) {
  workflow.validate();
  if (!backend) throw Error(Errc::backend_unavailable, "no backend supplied");
  auto s = std::make_shared<RunShared>();
  s->wf = std::move(workflow);
  s->backend = std::move(backend);

  for (std::size_t p = 0; p < s->wf.pipelines.size(); ++p) {
    auto& stages = s->layout.emplace_back();
    for (std::size_t st = 0; st < s->wf.pipelines[p].stages.size(); ++st) {
      auto& ids = stages.emplace_back();
      for (const auto& t : s->wf.pipelines[p].stages[st].tasks) {
        ids.push_back(s->tasks.size());
        s->index[t.id] = s->tasks.size();
        s->tasks.push_back({&t, p, st});
      }
    }
  }
  s->current_stage.assign(s->layout.size(), 0);
  s->pipeline_finished.assign(s->layout.size(), false);

  // Resume: tasks whose last recorded state is DONE are not re-run.
  std::unordered_map<std::string, TaskState> last;
  std::unordered_map<std::string, std::size_t> exits;
  for (const auto& r : options.resume_from) {
    last[r.task] = r.to;
    if (r.detail.rfind("exit=", 0) == 0) ++exits[r.task];
  }
  for (auto& t : s->tasks) {
    auto it = last.find(t.spec->id);
    if (it != last.end() && it->second == TaskState::done) {
      t.state = TaskState::done;
      t.attempts = exits[t.spec->id];
    }
  }

  if (options.event_log) {
    s->sink.emplace(*options.event_log);
    if (!*s->sink) throw Error(Errc::io_failure, "cannot open " + options.event_log->string());
  }

  std::weak_ptr<RunShared> weak = s;
  Backend::Listener li;
  li.exited = [weak](std::uint64_t token, int code) {
    if (auto p = weak.lock()) p->post({RunShared::Message::exited, token, code});
  };
  li.lost = [weak](std::uint64_t token) {
    if (auto p = weak.lock()) p->post({RunShared::Message::lost, token});
  };
  li.availability = [weak](bool up) {
    if (auto p = weak.lock()) p->post({RunShared::Message::availability, 0, 0, up});
  };
  s->backend->attach(std::move(li));
  s->backend_available = s->backend->available();
  if (!s->backend_available) s->status = RunStatus::degraded;
  s->start = std::chrono::steady_clock::now();
  s->coordinator = std::jthread([raw = s.get()] { raw->run(); });
  return RunHandle(s);
}

// ---------------------------------------------------------------------------
// Builders

namespace {

std::string join_weights(const WeightVector& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, w[i]);
    if (i) out += ',';
    out.append(buf, end);
  }
  return out;
}

}  // namespace

Workflow build_weight_search_workflow(const WeightGrid& grid, const WeightSearchOptions& o) {
  if (grid.empty()) throw Error(Errc::invalid_workflow, "weight grid is empty");
  Workflow wf;
  wf.worker_budget = o.worker_budget;
  wf.pipelines.reserve(grid.size());
  const std::string cfg = o.config.string();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    PipelineSpec p;
    p.id = "w" + std::to_string(k);
    const std::string weights = join_weights(grid.vector(k));
    for (const char* stage : {"anen", "simulate", "verify"}) {
      StageSpec s;
      s.id = p.id + "." + stage;
      for (const char* strategy : {"nn", "rb"}) {
        const std::string dir = (o.output / p.id / strategy).string();
        TaskSpec t;
        t.id = s.id + "." + strategy;
        t.max_retries = o.max_retries;
        t.command.argv = {o.executable, stage, "--config", cfg, "--out", dir};
        if (std::string_view(stage) == "anen") {
          t.command.argv.insert(t.command.argv.end(),
                                {"--set", "anen.weights=[" + weights + "]", "--set",
                                 std::string("anen.samples=") + strategy});
        }
        s.tasks.push_back(std::move(t));
      }
      p.stages.push_back(std::move(s));
    }
    wf.pipelines.push_back(std::move(p));
  }
  return wf;
}

Workflow build_simulation_workflow(const std::vector<Partition>& partitions,
                                   const std::vector<std::string>& modules,
                                   const SimulationOptions& o) {
  if (partitions.empty()) throw Error(Errc::invalid_workflow, "no partitions");
  if (modules.empty()) throw Error(Errc::invalid_workflow, "no PV modules");
  std::size_t max_area = 0;
  for (const auto& p : partitions) max_area = std::max(max_area, p.area);
  if (max_area == 0) throw Error(Errc::invalid_workflow, "partitions have zero area");

  std::string module_list;
  for (const auto& m : modules) module_list += (module_list.empty() ? "[\"" : ",\"") + m + "\"";
  module_list += "]";

  Workflow wf;
  wf.worker_budget = std::max(o.worker_budget, std::max<std::size_t>(o.max_cores, 1));
  PipelineSpec pipe;
  pipe.id = "simulation";
  StageSpec anen{"anen", {}}, power{"simulate", {}};
  const std::string cfg = o.config.string();
  for (const auto& part : partitions) {
    // ceil(area / max_area * max_cores), at least one core
    const std::size_t cores =
        std::max<std::size_t>(1, (part.area * std::max<std::size_t>(o.max_cores, 1) + max_area - 1) / max_area);
    const std::string dir = (o.output / part.id).string();
    TaskSpec a;
    a.id = "anen." + part.id;
    a.max_retries = o.max_retries;
    a.command = {{o.executable, "anen", "--config", cfg, "--set",
                  "anen.locations=" + part.locations.string(), "--out", dir},
                 cores};
    TaskSpec s;
    s.id = "simulate." + part.id;
    s.max_retries = o.max_retries;
    s.command = {{o.executable, "simulate", "--config", cfg, "--set",
                  "simulate.modules=" + module_list, "--out", dir},
                 cores};
    anen.tasks.push_back(std::move(a));
    power.tasks.push_back(std::move(s));
  }
  pipe.stages.push_back(std::move(anen));
  pipe.stages.push_back(std::move(power));
  wf.pipelines.push_back(std::move(pipe));
  return wf;
}

}  // namespace anensolar
