#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fauno/mlp.hpp"
#include "fauno/topology.hpp"
#include "fauno/types.hpp"

namespace fauno {

// 64-bit parameters plus a fixed header; the accounting used for every
// model-sized payload crossing the simulated network.
inline double payload_bits(std::int64_t param_count) {
  return 64.0 * static_cast<double>(param_count) + 1024.0;
}

// Update transport: payloads are abstract, only their size travels. The
// delay function is pluggable; the default sums per-hop Shannon latencies
// along the shortest path.
class FlTransport {
 public:
  using DelayFn = std::function<Tick(NodeId src, NodeId dst, double bits)>;

  explicit FlTransport(DelayFn delay);
  static DelayFn multi_hop_delay(const Topology& topology, double ticks_per_second);

  std::uint64_t register_update(NodeId src, NodeId dst, double bits, Tick now);
  // Every delivered id is returned exactly once, ordered by (ready, id).
  std::vector<std::uint64_t> poll_completed(NodeId dst, Tick now);

  Tick delay_for(NodeId src, NodeId dst, double bits) const { return delay_(src, dst, bits); }

 private:
  struct Pending {
    std::uint64_t id = 0;
    NodeId dst = -1;
    Tick ready_at = 0;
  };
  DelayFn delay_;
  std::vector<Pending> pending_;
  std::uint64_t next_id_ = 1;
};

struct FlUpdate {
  std::uint64_t update_id = 0;
  NodeId agent_id = -1;
  ModelDelta delta;
  int steps = 0;    // local updates performed since last adoption
  int version = 0;  // global version the delta was computed against
  double size_bits = 0.0;
  Tick submitted_tick = 0;
};

enum class SubmitOutcome { kStaged, kReplacedOlder, kRejectedStale, kIgnoredOlder };
const char* submit_outcome_name(SubmitOutcome o);

// At most one staged update per agent.
class UpdateBuffer {
 public:
  explicit UpdateBuffer(int threshold);

  int count() const { return static_cast<int>(entries_.size()); }
  int threshold() const { return threshold_; }
  const std::map<NodeId, FlUpdate>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

  friend SubmitOutcome submit_update(UpdateBuffer& buffer, FlUpdate upd,
                                     int current_version);

 private:
  std::map<NodeId, FlUpdate> entries_;
  int threshold_;
};

// Stale versions are rejected; a newer update from a known agent replaces
// the staged one only when it carries more local steps.
SubmitOutcome submit_update(UpdateBuffer& buffer, FlUpdate upd, int current_version);

// Step-proportional weights, normalized to sum to one.
std::map<NodeId, double> compute_coefficients(const UpdateBuffer& buffer);

struct GlobalCritic {
  Mlp weights;
  int version = 0;
  double server_lr = 1.0;
};

// w <- w + server_lr * sum_k p_k * delta_k, bumps the version, clears the
// buffer. Requires count >= threshold.
void aggregate(GlobalCritic& global, UpdateBuffer& buffer);

struct AuditRecord {
  Tick tick = 0;
  std::string event;  // submit|replace|reject_stale|aggregate|broadcast|adopt
  NodeId agent = -1;
  int version = 0;
  int k = 0;
};

std::string audit_to_jsonl(const std::vector<AuditRecord>& records);

struct FedStats {
  std::int64_t submissions = 0;
  std::int64_t replacements = 0;
  std::int64_t rejections_stale = 0;
  std::int64_t aggregations = 0;
  std::int64_t broadcasts = 0;
};

// The buffered semi-asynchronous manager. Runs as a node-resident process:
// submissions and broadcasts ride the FlTransport, adoption happens when the
// agent polls after delivery.
class GlobalManager {
 public:
  GlobalManager(const Topology& topology, GlobalCritic initial, int threshold,
                FlTransport& transport);

  NodeId manager_node() const { return manager_node_; }
  const GlobalCritic& global() const { return global_; }
  int threshold() const { return buffer_.threshold(); }

  // Agent-side: ship a delta toward the manager.
  void submit_from_agent(NodeId agent, ModelDelta delta, int steps, int version,
                         Tick now);
  // Manager-side: drain deliveries, maybe aggregate and broadcast.
  void on_tick(Tick now);
  // Agent-side: newest delivered global, if any. Marks adoption in the audit
  // log; the caller must actually install the weights.
  std::optional<std::pair<Mlp, int>> poll_adoption(NodeId agent, Tick now);

  const std::vector<AuditRecord>& audit() const { return audit_; }
  const FedStats& stats() const { return stats_; }

 private:
  void broadcast(Tick now);

  const Topology* topology_;
  NodeId manager_node_;
  GlobalCritic global_;
  UpdateBuffer buffer_;
  FlTransport* transport_;
  std::vector<NodeId> agent_nodes_;
  double critic_payload_bits_;

  std::map<std::uint64_t, FlUpdate> inflight_updates_;
  struct BroadcastPayload {
    std::shared_ptr<const Mlp> weights;
    int version = 0;
  };
  std::map<std::uint64_t, BroadcastPayload> inflight_broadcasts_;
  // Deliveries drained by the wrong consumer at the manager node.
  std::vector<std::uint64_t> update_stash_;
  std::map<NodeId, std::vector<std::uint64_t>> broadcast_stash_;
  std::vector<AuditRecord> audit_;
  FedStats stats_;
};

}  // namespace fauno
