#include "fauno/env.hpp"

#include <algorithm>
#include <cmath>

#include "fauno/errors.hpp"
#include "fauno/latency.hpp"

namespace fauno {

namespace env_math {

double delay_cost_local(double q_src, double rate_src, const RewardWeights& w) {
  return w.chi_wait * (q_src / rate_src);
}

double delay_cost_offload(double q_src, double rate_src, double q_dst,
                          double rate_dst, double t_comm_ticks,
                          double work_cycles, const RewardWeights& w) {
  const double wait = q_src / rate_src + q_dst / rate_dst;
  const double exc = work_cycles / rate_dst - work_cycles / rate_src;
  return w.chi_wait * wait + w.chi_comm * t_comm_ticks + w.chi_exc * exc;
}

int expected_queue(int queue_len, int service, int queue_cap) {
  return std::min(std::max(0, queue_len - service) + 1, queue_cap);
}

double overload_from_expected(int expected_queue, int queue_cap, double eps) {
  const double p = std::max(
      eps, static_cast<double>(queue_cap - expected_queue) / queue_cap);
  return -std::log(p) / 3.0;
}

}  // namespace env_math

Env::Env(const Topology& topology, EnvConfig cfg,
         std::unique_ptr<WorkloadSource> workload)
    : topology_(&topology), cfg_(cfg), workload_(std::move(workload)) {
  if (cfg_.episode_length <= 0) throw ConfigError("env: episode_length must be positive");
  agents_ = topology.agent_nodes();
  if (agents_.empty()) throw ConfigError("env: no agent-bearing nodes");
  max_degree_ = topology.max_agent_degree();
  action_dim_ = 1 + max_degree_;
  obs_dim_ = 5 + 5 * max_degree_ + 6;
}

World& Env::world() {
  if (!world_) throw ContractViolation("env: reset() before using the world");
  return *world_;
}

const World& Env::world() const {
  if (!world_) throw ContractViolation("env: reset() before using the world");
  return *world_;
}

Tick Env::tick() const { return world().tick(); }

std::map<NodeId, Observation> Env::reset(std::uint64_t seed) {
  world_ = std::make_unique<World>(*topology_, cfg_.world, workload_->clone(), seed);
  world_->set_action_hook([this](World& w) {
    for (auto [from, to] : pending_offloads_) w.offload_head(from, to);
    pending_offloads_.clear();
  });
  return observe_all();
}

std::vector<std::uint8_t> Env::compute_mask(NodeId agent) const {
  const WorkerState& w = world().worker(agent);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(action_dim_), 0);
  mask[0] = 1;  // local / no-op is always available
  if (w.queue.empty()) return mask;
  const Task& head = world().task(w.queue.front());
  const bool can_offload = head.hops < cfg_.world.hop_limit;
  const auto& nbs = topology_->neighbors(agent);
  for (std::size_t k = 0; k < nbs.size(); ++k) {
    mask[k + 1] = can_offload ? 1 : 0;
  }
  return mask;
}

Observation Env::observe(NodeId agent) const {
  const WorkerState& w = world().worker(agent);
  if (!topology_->node(agent).profile.hosts_agent) {
    throw ContractViolation("observe: node hosts no agent");
  }
  Observation obs;
  obs.node = agent;
  obs.queue_len = w.queue_len();
  obs.queue_cap = w.queue_cap;
  obs.cores = w.cores;
  obs.freq = w.freq;
  obs.tx_power = w.tx_power_dbm;

  const auto& cache = world().snapshots_at(agent);
  for (NodeId nb : topology_->neighbors(agent)) {
    NeighborView v;
    v.id = nb;
    auto it = cache.find(nb);
    if (it != cache.end()) {
      v.heard = true;
      v.snapshot = it->second;
    }
    obs.neighbors.push_back(v);
  }

  if (!w.queue.empty()) {
    const Task& head = world().task(w.queue.front());
    obs.task.present = true;
    obs.task.id = head.id;
    obs.task.instructions = head.instructions;
    obs.task.input_bits = head.input_bits;
    obs.task.output_bits = head.output_bits;
    obs.task.cpi = head.cpi;
    obs.task.remaining_deadline =
        std::max<Tick>(0, head.created_at + head.deadline_ticks - world().tick());
    obs.task.hops = head.hops;
  }

  obs.action_mask = compute_mask(agent);

  // Flat feature vector, min-max scaled into [0,1].
  const NormRanges& r = cfg_.norm;
  auto scale = [](double v, double hi) {
    if (hi <= 0.0) return 0.0;
    return std::clamp(v / hi, 0.0, 1.0);
  };
  auto& f = obs.features;
  f.reserve(static_cast<std::size_t>(obs_dim_));
  f.push_back(scale(obs.queue_len, r.queue_len));
  f.push_back(scale(obs.queue_cap, r.queue_cap));
  f.push_back(scale(obs.cores, r.cores));
  f.push_back(scale(obs.freq, r.freq));
  f.push_back(scale(obs.tx_power, r.tx_power));
  for (int k = 0; k < max_degree_; ++k) {
    if (k < static_cast<int>(obs.neighbors.size()) && obs.neighbors[static_cast<std::size_t>(k)].heard) {
      const auto& s = obs.neighbors[static_cast<std::size_t>(k)].snapshot;
      f.push_back(scale(s.queue_len, r.queue_len));
      f.push_back(scale(s.queue_cap, r.queue_cap));
      f.push_back(scale(s.cores, r.cores));
      f.push_back(scale(s.freq, r.freq));
      f.push_back(scale(s.tx_power_dbm, r.tx_power));
    } else {
      // unheard neighbor or padding slot
      for (int j = 0; j < 5; ++j) f.push_back(0.0);
    }
  }
  f.push_back(obs.task.present ? 1.0 : 0.0);
  f.push_back(scale(obs.task.instructions, r.instructions));
  f.push_back(scale(obs.task.input_bits, r.bits));
  f.push_back(scale(obs.task.output_bits, r.bits));
  f.push_back(scale(obs.task.cpi, 4.0));
  f.push_back(scale(static_cast<double>(obs.task.remaining_deadline), r.deadline));
  return obs;
}

std::map<NodeId, Observation> Env::observe_all() const {
  std::map<NodeId, Observation> out;
  for (NodeId a : agents_) out.emplace(a, observe(a));
  return out;
}

NodeId Env::action_target(NodeId agent, const Action& action) const {
  if (action.choice == 0) return agent;
  const auto& nbs = topology_->neighbors(agent);
  const int k = action.choice - 1;
  if (k < 0 || k >= static_cast<int>(nbs.size())) {
    throw ContractViolation("action: neighbor index out of range");
  }
  return nbs[static_cast<std::size_t>(k)];
}

void Env::require_valid(NodeId agent, const Action& action) const {
  const auto mask = compute_mask(agent);
  if (action.choice < 0 || action.choice >= action_dim_ ||
      !mask[static_cast<std::size_t>(action.choice)]) {
    throw ContractViolation("action: masked or out-of-range choice " +
                            std::to_string(action.choice) + " at node " +
                            std::to_string(agent));
  }
}

double Env::delay_cost(NodeId agent, const Action& action) const {
  require_valid(agent, action);
  const WorkerState& src = world().worker(agent);
  if (src.queue.empty()) {
    throw ContractViolation("delay_cost: no task at the head of the queue");
  }
  const Task& head = world().task(src.queue.front());
  if (action.choice == 0) {
    return env_math::delay_cost_local(src.queue_len(), src.service_rate(), cfg_.reward);
  }
  const NodeId target = action_target(agent, action);
  const WorkerState& dst = world().worker(target);
  const Link link = topology_->link_between(agent, target);
  const double t_comm = static_cast<double>(
      comm_latency(head.output_bits, link, cfg_.world.ticks_per_second));
  return env_math::delay_cost_offload(src.queue_len(), src.service_rate(),
                                      dst.queue_len(), dst.service_rate(), t_comm,
                                      head.work_cycles(), cfg_.reward);
}

double Env::overload_penalty(NodeId agent, const Action& action) const {
  const NodeId target = action_target(agent, action);
  const WorkerState& w = world().worker(target);
  const int service = cfg_.service_estimate_override >= 0
                          ? cfg_.service_estimate_override
                          : (world().head_completes_this_tick(target) ? 1 : 0);
  const int expected = env_math::expected_queue(w.queue_len(), service, w.queue_cap);
  return env_math::overload_from_expected(expected, w.queue_cap, cfg_.reward.overload_eps);
}

double Env::action_cost_reward(NodeId agent, const Action& action) const {
  const WorkerState& w = world().worker(agent);
  if (w.queue.empty()) return 0.0;  // no decision this tick
  const double d = delay_cost(agent, action);
  const double o = overload_penalty(agent, action);
  return -(d + cfg_.reward.chi_overload * o);
}

StepResult Env::step(const std::map<NodeId, Action>& actions) {
  if (world().tick() >= cfg_.episode_length) {
    throw ContractViolation("step: episode already finished");
  }
  for (const auto& [agent, action] : actions) {
    if (!std::binary_search(agents_.begin(), agents_.end(), agent)) {
      throw ContractViolation("step: action for unknown agent " + std::to_string(agent));
    }
    require_valid(agent, action);
  }
  for (NodeId a : agents_) {
    if (!actions.count(a)) {
      throw ContractViolation("step: missing action for agent " + std::to_string(a));
    }
  }

  // Costs are evaluated against the state the agents observed, before this
  // tick's deliveries and arrivals mutate the queues.
  StepResult result;
  pending_offloads_.clear();
  for (const auto& [agent, action] : actions) {
    result.rewards[agent] = action_cost_reward(agent, action);
    if (action.choice > 0 && !world().worker(agent).queue.empty()) {
      pending_offloads_.emplace_back(agent, action_target(agent, action));
    }
  }

  result.events = world_->advance_tick();

  if (cfg_.reward.completion_bonus_enabled) {
    for (const auto& [node, count] : world().completions_this_tick()) {
      auto it = result.rewards.find(node);
      if (it != result.rewards.end()) {
        it->second += cfg_.reward.task_utility * count;
      }
    }
  }

  result.done = world().tick() >= cfg_.episode_length;
  result.observations = observe_all();
  return result;
}

}  // namespace fauno
