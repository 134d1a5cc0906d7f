#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <vector>

#include "fauno/event_log.hpp"
#include "fauno/rng.hpp"
#include "fauno/topology.hpp"
#include "fauno/types.hpp"
#include "fauno/workload.hpp"

namespace fauno {

// Discrete-time engine. Each tick runs a fixed phase order:
//   1. deliver due messages
//   2. generate client tasks
//   3. agent actions (hook)
//   4. worker processing
//   5. deadline expiry
//   6. neighbor state shares
// The engine is single-threaded and fully deterministic for a fixed seed.
class World {
 public:
  struct Config {
    double ticks_per_second = 10.0;
    int share_period = 1;  // 0 disables state shares
    double state_share_bits = 1024.0;
    int hop_limit = 4;     // max offloads per task
  };

  struct Counts {
    std::int64_t created = 0;
    std::int64_t queued = 0;
    std::int64_t in_transit = 0;
    std::int64_t processing = 0;
    std::int64_t completed = 0;
    std::int64_t dropped_queue_full = 0;
    std::int64_t dropped_deadline = 0;
  };

  enum class EnqueueResult { kAccepted, kDroppedQueueFull };

  World(const Topology& topology, Config cfg,
        std::unique_ptr<WorkloadSource> workload, std::uint64_t seed);

  // Invoked at phase 3; offload decisions go through offload_head().
  void set_action_hook(std::function<void(World&)> hook) { action_hook_ = std::move(hook); }

  // Runs one tick and returns its events.
  std::vector<Event> advance_tick();

  Tick tick() const { return tick_; }
  const Topology& topology() const { return *topology_; }
  const Config& config() const { return cfg_; }

  const WorkerState& worker(NodeId id) const;
  const Task& task(TaskId id) const;
  bool has_task(TaskId id) const;

  // Latest snapshots received by `node`, keyed by sender.
  const std::map<NodeId, WorkerSnapshot>& snapshots_at(NodeId node) const;

  // Moves the head task of `from` into transit toward neighbor `to`.
  // Any accrued service progress is lost; the target re-executes in full.
  void offload_head(NodeId from, NodeId to);

  // FIFO admission with drop-on-full semantics (constraint on queue bounds).
  EnqueueResult enqueue_task(NodeId worker, TaskId task);

  // Injects a task outside the workload path (tests, trace warm starts).
  TaskId spawn_task(NodeId origin, const TaskSpec& spec);

  Counts counts() const { return counts_; }
  const std::vector<Event>& all_events() const { return events_; }

  // Completions credited per processing node during the current tick; feeds
  // the completion bonus in the reward.
  const std::map<NodeId, int>& completions_this_tick() const { return completions_this_tick_; }

  // True if the worker's head task would finish during the next processing
  // phase; the default service estimate in the overload penalty.
  bool head_completes_this_tick(NodeId id) const;

 private:
  void deliver_phase();
  void generation_phase();
  void processing_phase();
  void expiry_phase();
  void share_phase();

  void set_status(Task& t, TaskStatus next);
  void finalize_completion(Task& t);
  void schedule_message(Message msg, Tick latency);
  void log(EventKind kind, TaskId task, NodeId node, std::int64_t detail = 0);
  WorkerState& worker_mut(NodeId id);

  const Topology* topology_;
  Config cfg_;
  std::unique_ptr<WorkloadSource> workload_;
  Rng rng_workload_;

  Tick tick_ = 0;
  std::vector<WorkerState> workers_;
  std::vector<Task> tasks_;
  std::set<TaskId> live_tasks_;
  std::map<Tick, std::vector<Message>> schedule_;
  std::int64_t next_seq_ = 0;
  std::vector<std::map<NodeId, WorkerSnapshot>> snapshot_cache_;
  std::vector<Event> events_;
  std::map<NodeId, int> completions_this_tick_;
  std::function<void(World&)> action_hook_;
  Counts counts_;
};

}  // namespace fauno
