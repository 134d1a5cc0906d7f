#include "fauno/world.hpp"

#include <algorithm>
#include <cmath>

#include "fauno/errors.hpp"
#include "fauno/latency.hpp"

namespace fauno {

World::World(const Topology& topology, Config cfg,
             std::unique_ptr<WorkloadSource> workload, std::uint64_t seed)
    : topology_(&topology),
      cfg_(cfg),
      workload_(std::move(workload)),
      rng_workload_(Rng(seed).split(0x776f726bULL)) {
  if (cfg_.hop_limit < 0) throw ConfigError("world: hop_limit must be >= 0");
  workers_.reserve(static_cast<std::size_t>(topology.node_count()));
  for (const auto& n : topology.nodes()) {
    WorkerState w;
    w.id = n.id;
    w.queue_cap = n.profile.queue_cap;
    w.cores = n.profile.cores;
    w.freq = n.profile.freq;
    w.tx_power_dbm = n.profile.tx_power_dbm;
    workers_.push_back(w);
  }
  snapshot_cache_.assign(workers_.size(), {});
}

const WorkerState& World::worker(NodeId id) const {
  if (id < 0 || id >= static_cast<NodeId>(workers_.size())) {
    throw InvalidArgumentError("world: unknown worker " + std::to_string(id));
  }
  return workers_[static_cast<std::size_t>(id)];
}

WorkerState& World::worker_mut(NodeId id) {
  return const_cast<WorkerState&>(worker(id));
}

const Task& World::task(TaskId id) const {
  if (!has_task(id)) throw InvalidArgumentError("world: unknown task " + std::to_string(id));
  return tasks_[static_cast<std::size_t>(id)];
}

bool World::has_task(TaskId id) const {
  return id >= 0 && id < static_cast<TaskId>(tasks_.size());
}

const std::map<NodeId, WorkerSnapshot>& World::snapshots_at(NodeId node) const {
  worker(node);
  return snapshot_cache_[static_cast<std::size_t>(node)];
}

void World::log(EventKind kind, TaskId task, NodeId node, std::int64_t detail) {
  events_.push_back(Event{tick_, kind, task, node, detail});
}

void World::set_status(Task& t, TaskStatus next) {
  if (is_terminal(t.status)) {
    throw ContractViolation("task status change after terminal state");
  }
  auto bucket = [this](TaskStatus s) -> std::int64_t* {
    switch (s) {
      case TaskStatus::kQueued: return &counts_.queued;
      case TaskStatus::kInTransit: return &counts_.in_transit;
      case TaskStatus::kProcessing: return &counts_.processing;
      case TaskStatus::kCompleted: return &counts_.completed;
      case TaskStatus::kDroppedQueueFull: return &counts_.dropped_queue_full;
      case TaskStatus::kDroppedDeadline: return &counts_.dropped_deadline;
      case TaskStatus::kCreated: return nullptr;
    }
    return nullptr;
  };
  if (auto* old_bucket = bucket(t.status)) --*old_bucket;
  t.status = next;
  if (auto* new_bucket = bucket(next)) ++*new_bucket;
  if (is_terminal(next)) live_tasks_.erase(t.id);
}

void World::schedule_message(Message msg, Tick latency) {
  msg.deliver_at = tick_ + std::max<Tick>(1, latency);
  msg.seq = next_seq_++;
  schedule_[msg.deliver_at].push_back(msg);
}

TaskId World::spawn_task(NodeId origin, const TaskSpec& spec) {
  worker(origin);
  if (spec.instructions <= 0.0 || spec.input_bits <= 0.0 || spec.output_bits <= 0.0 ||
      spec.cpi <= 0.0 || spec.deadline_ticks <= 0) {
    throw InvalidArgumentError("spawn_task: non-positive task field");
  }
  Task t;
  t.id = static_cast<TaskId>(tasks_.size());
  t.instructions = spec.instructions;
  t.input_bits = spec.input_bits;
  t.output_bits = spec.output_bits;
  t.cpi = spec.cpi;
  t.deadline_ticks = spec.deadline_ticks;
  t.origin_client = origin;
  t.created_at = tick_;
  t.status = TaskStatus::kCreated;
  t.path.push_back(origin);
  tasks_.push_back(t);
  live_tasks_.insert(t.id);
  ++counts_.created;
  log(EventKind::kCreated, t.id, origin);
  return t.id;
}

World::EnqueueResult World::enqueue_task(NodeId worker_id, TaskId task_id) {
  WorkerState& w = worker_mut(worker_id);
  Task& t = tasks_.at(static_cast<std::size_t>(task_id));
  if (t.status != TaskStatus::kCreated && t.status != TaskStatus::kInTransit) {
    throw ContractViolation("enqueue_task: task not in an enqueueable state");
  }
  if (w.queue_len() < w.queue_cap) {
    w.queue.push_back(task_id);
    set_status(t, TaskStatus::kQueued);
    log(EventKind::kEnqueued, task_id, worker_id);
    return EnqueueResult::kAccepted;
  }
  set_status(t, TaskStatus::kDroppedQueueFull);
  log(EventKind::kDropQueueFull, task_id, worker_id);
  return EnqueueResult::kDroppedQueueFull;
}

void World::offload_head(NodeId from, NodeId to) {
  WorkerState& w = worker_mut(from);
  if (w.queue.empty()) throw ContractViolation("offload_head: empty queue");
  if (!topology_->adjacent(from, to)) {
    throw RoutingError("offload_head: target is not a neighbor");
  }
  Task& t = tasks_.at(static_cast<std::size_t>(w.queue.front()));
  if (t.hops >= cfg_.hop_limit) {
    throw ContractViolation("offload_head: hop limit reached");
  }
  w.queue.pop_front();
  w.remaining_work = 0.0;  // accrued progress is lost
  ++t.hops;
  t.path.push_back(to);
  set_status(t, TaskStatus::kInTransit);
  const Link link = topology_->link_between(from, to);
  Message msg;
  msg.kind = Message::Kind::kTask;
  msg.src = from;
  msg.dst = to;
  msg.size_bits = t.input_bits;
  msg.task_id = t.id;
  schedule_message(msg, comm_latency(t.input_bits, link, cfg_.ticks_per_second));
  log(EventKind::kOffloadSend, t.id, from, to);
}

bool World::head_completes_this_tick(NodeId id) const {
  const WorkerState& w = worker(id);
  if (w.queue.empty()) return false;
  const Task& head = task(w.queue.front());
  const double remaining =
      head.status == TaskStatus::kProcessing ? w.remaining_work : head.work_cycles();
  return remaining <= w.service_rate() + 1e-9;
}

void World::finalize_completion(Task& t) {
  const Tick age = tick_ - t.created_at;
  if (age > t.deadline_ticks) {
    set_status(t, TaskStatus::kDroppedDeadline);
    log(EventKind::kDropDeadline, t.id, t.origin_client);
    return;
  }
  t.completed_at = tick_;
  set_status(t, TaskStatus::kCompleted);
  completions_this_tick_[t.processed_by] += 1;
  log(EventKind::kCompleted, t.id, t.origin_client, age);
}

void World::deliver_phase() {
  auto it = schedule_.find(tick_);
  if (it == schedule_.end()) return;
  std::vector<Message> due = std::move(it->second);
  schedule_.erase(it);
  for (const Message& msg : due) {
    switch (msg.kind) {
      case Message::Kind::kTask: {
        Task& t = tasks_.at(static_cast<std::size_t>(msg.task_id));
        if (is_terminal(t.status)) break;  // expired mid-flight
        log(EventKind::kOffloadArrive, t.id, msg.dst, msg.src);
        enqueue_task(msg.dst, t.id);
        break;
      }
      case Message::Kind::kResult: {
        Task& t = tasks_.at(static_cast<std::size_t>(msg.task_id));
        if (is_terminal(t.status)) break;
        t.result_hop -= 1;
        if (t.result_hop == 0) {
          finalize_completion(t);
        } else {
          const NodeId here = t.path[static_cast<std::size_t>(t.result_hop)];
          const NodeId next = t.path[static_cast<std::size_t>(t.result_hop - 1)];
          const Link link = topology_->link_between(here, next);
          Message fwd;
          fwd.kind = Message::Kind::kResult;
          fwd.src = here;
          fwd.dst = next;
          fwd.size_bits = t.output_bits;
          fwd.task_id = t.id;
          schedule_message(fwd, comm_latency(t.output_bits, link, cfg_.ticks_per_second));
        }
        break;
      }
      case Message::Kind::kStateShare: {
        auto& cache = snapshot_cache_[static_cast<std::size_t>(msg.dst)];
        auto existing = cache.find(msg.src);
        if (existing == cache.end() ||
            existing->second.snapshot_tick < msg.snapshot.snapshot_tick) {
          cache[msg.src] = msg.snapshot;
        }
        break;
      }
    }
  }
}

void World::generation_phase() {
  if (!workload_) return;
  for (const auto& n : topology_->nodes()) {
    if (!n.profile.receives_client_tasks) continue;
    const auto specs = workload_->draw(n.id, tick_, rng_workload_);
    for (const auto& spec : specs) {
      const TaskId id = spawn_task(n.id, spec);
      enqueue_task(n.id, id);
    }
  }
}

void World::processing_phase() {
  for (WorkerState& w : workers_) {
    if (w.queue.empty()) {
      w.remaining_work = 0.0;
      continue;
    }
    Task& head = tasks_.at(static_cast<std::size_t>(w.queue.front()));
    if (head.status != TaskStatus::kProcessing) {
      set_status(head, TaskStatus::kProcessing);
      w.remaining_work = head.work_cycles();
    }
    w.remaining_work -= w.service_rate();
    if (w.remaining_work <= 1e-9) {
      w.remaining_work = 0.0;
      w.queue.pop_front();
      head.processed_by = w.id;
      log(EventKind::kProcessDone, head.id, w.id);
      if (w.id == head.origin_client) {
        finalize_completion(head);
      } else {
        set_status(head, TaskStatus::kInTransit);
        head.result_hop = static_cast<int>(head.path.size()) - 1;
        const NodeId next = head.path[static_cast<std::size_t>(head.result_hop - 1)];
        const Link link = topology_->link_between(w.id, next);
        Message msg;
        msg.kind = Message::Kind::kResult;
        msg.src = w.id;
        msg.dst = next;
        msg.size_bits = head.output_bits;
        msg.task_id = head.id;
        schedule_message(msg, comm_latency(head.output_bits, link, cfg_.ticks_per_second));
      }
    }
  }
}

void World::expiry_phase() {
  // live_tasks_ shrinks while we drop; collect the victims first.
  std::vector<TaskId> expired;
  for (TaskId id : live_tasks_) {
    const Task& t = tasks_[static_cast<std::size_t>(id)];
    if (tick_ - t.created_at > t.deadline_ticks) expired.push_back(id);
  }
  for (TaskId id : expired) {
    Task& t = tasks_[static_cast<std::size_t>(id)];
    if (t.status == TaskStatus::kQueued || t.status == TaskStatus::kProcessing) {
      WorkerState& w = worker_mut(t.path.back());
      auto pos = std::find(w.queue.begin(), w.queue.end(), id);
      if (pos != w.queue.end()) {
        if (pos == w.queue.begin()) w.remaining_work = 0.0;
        w.queue.erase(pos);
      }
    }
    set_status(t, TaskStatus::kDroppedDeadline);
    log(EventKind::kDropDeadline, id, t.path.back());
  }
}

void World::share_phase() {
  if (cfg_.share_period <= 0 || tick_ % cfg_.share_period != 0) return;
  for (const WorkerState& w : workers_) {
    WorkerSnapshot snap;
    snap.node = w.id;
    snap.queue_len = w.queue_len();
    snap.queue_cap = w.queue_cap;
    snap.cores = w.cores;
    snap.freq = w.freq;
    snap.tx_power_dbm = w.tx_power_dbm;
    snap.snapshot_tick = tick_;
    for (NodeId nb : topology_->neighbors(w.id)) {
      const Link link = topology_->link_between(w.id, nb);
      Message msg;
      msg.kind = Message::Kind::kStateShare;
      msg.src = w.id;
      msg.dst = nb;
      msg.size_bits = cfg_.state_share_bits;
      msg.snapshot = snap;
      schedule_message(msg, comm_latency(cfg_.state_share_bits, link, cfg_.ticks_per_second));
    }
  }
}

std::vector<Event> World::advance_tick() {
  const std::size_t first_event = events_.size();
  completions_this_tick_.clear();
  deliver_phase();
  generation_phase();
  if (action_hook_) action_hook_(*this);
  processing_phase();
  expiry_phase();
  share_phase();
  ++tick_;
  return std::vector<Event>(events_.begin() + static_cast<std::ptrdiff_t>(first_event),
                            events_.end());
}

}  // namespace fauno
