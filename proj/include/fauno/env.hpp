#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "fauno/topology.hpp"
#include "fauno/workload.hpp"
#include "fauno/world.hpp"

namespace fauno {

// Action 0 processes the head task locally; action k >= 1 offloads it to the
// k-th neighbor in ascending node-id order.
struct Action {
  int choice = 0;
};

struct RewardWeights {
  double chi_wait = 1.0;
  double chi_comm = 3.0;
  double chi_exc = 0.5;
  double chi_overload = 30.0;
  double task_utility = 100.0;  // completion bonus r_u
  bool completion_bonus_enabled = true;
  double overload_eps = 1e-6;
};

// Upper bounds used for min-max feature normalization; lower bounds are 0.
struct NormRanges {
  double queue_len = 10.0;
  double queue_cap = 10.0;
  double cores = 1.0;
  double freq = 1.0;
  double tx_power = 40.0;
  double instructions = 1.0;
  double bits = 1.0;
  double deadline = 1.0;
};

struct NeighborView {
  NodeId id = -1;
  bool heard = false;
  WorkerSnapshot snapshot;
};

struct TaskView {
  bool present = false;
  TaskId id = -1;
  double instructions = 0.0;
  double input_bits = 0.0;
  double output_bits = 0.0;
  double cpi = 1.0;
  Tick remaining_deadline = 0;
  int hops = 0;
};

struct Observation {
  NodeId node = -1;
  int queue_len = 0;
  int queue_cap = 0;
  int cores = 0;
  double freq = 0.0;
  double tx_power = 0.0;
  std::vector<NeighborView> neighbors;  // ascending id, actual neighbors only
  TaskView task;
  std::vector<std::uint8_t> action_mask;  // length action_dim
  std::vector<double> features;           // length obs_dim, all in [0,1]
};

// Closed-form pieces of the reward, kept separate so they can be checked
// against straight-line oracles.
namespace env_math {

// chi_wait*(q_src/rate_src [+ q_dst/rate_dst]) + chi_comm*t_comm
//   + chi_exc*(work/rate_dst - work/rate_src); all zero-comm for local.
double delay_cost_local(double q_src, double rate_src, const RewardWeights& w);
double delay_cost_offload(double q_src, double rate_src, double q_dst,
                          double rate_dst, double t_comm_ticks,
                          double work_cycles, const RewardWeights& w);

// Expected queue after admitting one more task, net of service.
int expected_queue(int queue_len, int service, int queue_cap);
// -ln(p)/3 where p is the normalized remaining capacity, clamped below.
double overload_from_expected(int expected_queue, int queue_cap, double eps);

}  // namespace env_math

struct EnvConfig {
  World::Config world;
  RewardWeights reward;
  int episode_length = 150;
  NormRanges norm;
  // <0 selects the default estimate (1 when the target's head task finishes
  // this tick, else 0); >=0 forces a fixed per-tick service count.
  int service_estimate_override = -1;
};

struct StepResult {
  std::map<NodeId, Observation> observations;
  std::map<NodeId, double> rewards;
  bool done = false;
  std::vector<Event> events;
};

// Per-agent decision layer over a World. One driver owns the Env at a time;
// observations are read-only and can be taken in any order between steps.
class Env {
 public:
  Env(const Topology& topology, EnvConfig cfg,
      std::unique_ptr<WorkloadSource> workload);

  std::map<NodeId, Observation> reset(std::uint64_t seed);
  StepResult step(const std::map<NodeId, Action>& actions);

  Observation observe(NodeId agent) const;
  std::map<NodeId, Observation> observe_all() const;

  double delay_cost(NodeId agent, const Action& action) const;
  double overload_penalty(NodeId agent, const Action& action) const;
  // -(delay + chi_O * overload); the completion bonus is added during step().
  double action_cost_reward(NodeId agent, const Action& action) const;

  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }
  const std::vector<NodeId>& agents() const { return agents_; }
  const Topology& topology() const { return *topology_; }
  const EnvConfig& config() const { return cfg_; }
  World& world();
  const World& world() const;
  Tick tick() const;

 private:
  NodeId action_target(NodeId agent, const Action& action) const;
  std::vector<std::uint8_t> compute_mask(NodeId agent) const;
  void require_valid(NodeId agent, const Action& action) const;

  const Topology* topology_;
  EnvConfig cfg_;
  std::unique_ptr<WorkloadSource> workload_;
  std::unique_ptr<World> world_;
  std::vector<NodeId> agents_;
  int obs_dim_ = 0;
  int action_dim_ = 0;
  int max_degree_ = 0;
  std::vector<std::pair<NodeId, NodeId>> pending_offloads_;
};

}  // namespace fauno
