#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

namespace fauno {

using NodeId = int;
using TaskId = std::int64_t;
using Tick = std::int64_t;

enum class TaskStatus {
  kCreated,
  kQueued,
  kInTransit,
  kProcessing,
  kCompleted,
  kDroppedQueueFull,
  kDroppedDeadline,
};

inline bool is_terminal(TaskStatus s) {
  return s == TaskStatus::kCompleted || s == TaskStatus::kDroppedQueueFull ||
         s == TaskStatus::kDroppedDeadline;
}

const char* task_status_name(TaskStatus s);

// The unit of work. `path` records the chain of nodes the task was offloaded
// through (origin first); results retrace it hop by hop.
struct Task {
  TaskId id = -1;
  double instructions = 0.0;   // instruction count
  double input_bits = 0.0;     // payload transmitted on offload
  double output_bits = 0.0;    // result transmitted back
  double cpi = 1.0;            // CPU cycles per instruction
  Tick deadline_ticks = 0;     // max ticks between creation and result return
  NodeId origin_client = -1;
  Tick created_at = 0;
  TaskStatus status = TaskStatus::kCreated;

  int hops = 0;                     // offload count, bounded by hop limit
  std::vector<NodeId> path;         // offload chain, path.front() == origin
  int result_hop = -1;              // index into path while result travels
  NodeId processed_by = -1;
  Tick completed_at = -1;

  double work_cycles() const { return instructions * cpi; }
};

// A node's compute profile plus its bounded FIFO queue.
struct WorkerState {
  NodeId id = -1;
  std::deque<TaskId> queue;
  int queue_cap = 0;
  int cores = 0;
  double freq = 0.0;          // instructions per tick per core
  double tx_power_dbm = 0.0;
  double remaining_work = 0.0;  // cycles left on the head task, 0 if idle

  double service_rate() const { return static_cast<double>(cores) * freq; }
  int queue_len() const { return static_cast<int>(queue.size()); }
};

struct WorkerSnapshot {
  NodeId node = -1;
  int queue_len = 0;
  int queue_cap = 0;
  int cores = 0;
  double freq = 0.0;
  double tx_power_dbm = 0.0;
  Tick snapshot_tick = -1;
};

// Directional view of a physical link: carries the transmitter's power so
// the Shannon-Hartley latency is a pure function of (size, link).
struct Link {
  NodeId src = -1;
  NodeId dst = -1;
  double bandwidth_hz = 0.0;
  double gain_db = 0.0;
  double noise_dbm = 0.0;
  double tx_power_dbm = 0.0;
};

struct Message {
  enum class Kind { kTask, kResult, kStateShare };
  Kind kind = Kind::kTask;
  NodeId src = -1;
  NodeId dst = -1;
  double size_bits = 0.0;
  TaskId task_id = -1;
  WorkerSnapshot snapshot;
  Tick deliver_at = 0;
  std::int64_t seq = 0;  // registration order, the intra-tick tiebreak
};

struct DeviceProfile {
  std::string name;
  int cores = 1;
  double freq = 0.0;  // instructions per tick per core
  int queue_cap = 10;
  double tx_power_dbm = 40.0;
  bool receives_client_tasks = false;
  bool hosts_agent = true;
};

}  // namespace fauno
