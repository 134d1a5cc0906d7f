#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "fauno/env.hpp"
#include "fauno/fed.hpp"
#include "fauno/mlp.hpp"
#include "fauno/rng.hpp"

namespace fauno {

// Picks the candidate (self or heard-from neighbor) with the smallest
// queue_len/queue_cap, ties to the smallest node id. Pure in the observation.
Action least_queue_action(const Observation& obs);

struct DqnConfig {
  double gamma = 0.90;
  double eps_start = 1.0;
  double eps_end = 0.05;
  int eps_decay_steps = 20000;
  int replay_capacity = 10000;
  int target_sync_period = 500;  // online->target hard syncs, in train steps
  double lr = 3e-4;
  int round_period = 150;  // env steps between synchronous FedAvg rounds
  int minibatch = 30;
  int warmup = 500;  // replay size before training starts
};

// Dueling head over a shared trunk: Q(s,a) = V(s) + A(s,a) - mean_a' A(s,a'),
// the mean over unmasked actions only. Trunk mirrors the critic (256 -> 124).
struct DuelingParams {
  Mlp trunk;       // obs -> 256 -> 124, tanh throughout
  Mlp value_head;  // 124 -> 1
  Mlp adv_head;    // 124 -> actions

  static DuelingParams make(int obs_dim, int action_dim, Rng& rng);
  std::int64_t param_count() const;
  std::vector<const std::vector<double>*> tensors() const;
  std::vector<std::vector<double>*> tensors();
};

// Masked entries carry a -infinity sentinel.
std::vector<double> dueling_q(const DuelingParams& params,
                              const std::vector<double>& obs,
                              const std::vector<std::uint8_t>& mask);

struct DuelingGrad {
  MlpGrad trunk;
  MlpGrad value_head;
  MlpGrad adv_head;
};

struct DqnTransition {
  std::vector<double> obs;
  std::vector<std::uint8_t> mask;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_obs;
  std::vector<std::uint8_t> next_mask;
  bool done = false;
};

// Squared TD error with double estimation: online argmax, target evaluation.
// Gradients flow only through the online Q of the taken action.
struct DqnLossOut {
  double loss = 0.0;
  DuelingGrad grad;
};
DqnLossOut dqn_loss(const DuelingParams& online, const DuelingParams& target,
                    const std::vector<const DqnTransition*>& batch, double gamma);

// Element-wise weighted mean with normalized weights.
Mlp fedavg_round(const std::vector<const Mlp*>& models,
                 const std::vector<double>& weights);
DuelingParams fedavg_round(const std::vector<const DuelingParams*>& models,
                           const std::vector<double>& weights);

// One SCOF-style learner: dueling double DQN with an epsilon-greedy policy,
// replay buffer, periodic hard target sync, and a synchronous-round barrier.
class DqnAgent {
 public:
  DqnAgent(int obs_dim, int action_dim, DqnConfig cfg, std::uint64_t seed);

  Action act(const Observation& obs);
  void observe_transition(const Observation& prev, const Action& action, double reward,
                          const Observation& next, bool done);
  // No-op while the round barrier is up or replay is below warmup.
  void maybe_train();

  bool wants_round() const;        // hit a round boundary, upload due
  void mark_round_started();       // upload registered, barrier up
  void finish_round(const DuelingParams& global);  // broadcast adopted
  bool in_round_barrier() const { return awaiting_round_; }

  const DuelingParams& online() const { return online_; }
  std::int64_t env_steps() const { return env_steps_; }
  std::int64_t train_steps() const { return train_steps_; }
  double epsilon() const;
  const DqnConfig& config() const { return cfg_; }

  // Convergence harness hook: single fixed-transition optimization step.
  double train_on(const std::vector<const DqnTransition*>& batch);

 private:
  DqnConfig cfg_;
  DuelingParams online_;
  DuelingParams target_;
  Adam opt_trunk_;
  Adam opt_value_;
  Adam opt_adv_;
  Rng rng_;
  std::deque<DqnTransition> replay_;
  std::int64_t env_steps_ = 0;
  std::int64_t train_steps_ = 0;
  bool awaiting_round_ = false;
};

// Synchronous federation for the SCOF baseline: a round collects every
// agent's model through the transport, averages, and broadcasts; agents do
// not train again until their copy of the round result arrives.
class ScofFederation {
 public:
  ScofFederation(const Topology& topology, FlTransport& transport,
                 std::int64_t model_param_count);

  void upload(NodeId agent, const DuelingParams& model, Tick now);
  void on_tick(Tick now);  // aggregates once all m uploads arrived
  std::optional<DuelingParams> poll_round_result(NodeId agent, Tick now);

  int rounds_completed() const { return rounds_completed_; }
  const std::vector<AuditRecord>& audit() const { return audit_; }

 private:
  const Topology* topology_;
  FlTransport* transport_;
  NodeId manager_node_;
  std::vector<NodeId> agent_nodes_;
  double model_bits_;

  std::map<std::uint64_t, std::pair<NodeId, DuelingParams>> inflight_uploads_;
  std::map<NodeId, DuelingParams> round_models_;
  struct ResultPayload {
    std::shared_ptr<const DuelingParams> model;
    int round = 0;
  };
  std::map<std::uint64_t, ResultPayload> inflight_results_;
  std::vector<std::uint64_t> upload_stash_;
  std::map<NodeId, std::vector<std::uint64_t>> result_stash_;
  int rounds_completed_ = 0;
  std::vector<AuditRecord> audit_;
};

}  // namespace fauno
