#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fauno/env.hpp"
#include "fauno/mlp.hpp"
#include "fauno/rng.hpp"

namespace fauno {

// Actor: obs -> 64 -> 32 -> actions (tanh hidden, masked softmax head).
// Critic: obs -> 256 -> 124 -> 1 (tanh hidden, linear output).
Mlp make_actor(int obs_dim, int action_dim, Rng& rng);
Mlp make_critic(int obs_dim, Rng& rng);

// Softmax restricted to unmasked entries; masked slots come out exactly 0.
std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<std::uint8_t>& mask);
std::vector<double> actor_forward(const Mlp& actor, const std::vector<double>& obs,
                                  const std::vector<std::uint8_t>& mask);
double critic_forward(const Mlp& critic, const std::vector<double>& obs);

double entropy(const std::vector<double>& probs);

// Categorical draw; returns (action, log prob). All-zero mass is a caller bug.
std::pair<int, double> sample_action(const std::vector<double>& probs, Rng& rng);
int argmax_action(const std::vector<double>& probs);

// Generalized advantage estimation, truncated at done boundaries.
struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};
GaeResult gae(const std::vector<double>& rewards, const std::vector<double>& values,
              double value_last, const std::vector<std::uint8_t>& dones,
              double gamma, double lambda);

struct PpoConfig {
  double gamma = 0.90;
  double gae_lambda = 0.95;
  double clip_eps = 0.5;
  double lr_actor = 1e-3;
  double lr_critic = 3e-4;
  double c1 = 0.5;      // critic loss coefficient
  double c2 = 0.5;      // entropy coefficient
  double mu = 0.005;    // proximal pull toward the adopted global critic
  int epochs = 4;
  int minibatch = 30;
  int horizon = 150;    // environment steps collected per update
  int share_every = 1;  // updates between federation submissions
  bool normalize_advantages = true;
};

struct Transition {
  std::vector<double> obs;
  std::vector<std::uint8_t> mask;
  int action = 0;
  double log_prob_old = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
};

using Trajectory = std::vector<Transition>;

// One evaluation of the combined objective over a batch of trajectory
// indices, with exact gradients:
//   mean[-surrogate + c1*(return - V)^2 - c2*entropy] + mu*||w - anchor||^2
// `critic_anchor` may be null (no proximal term).
struct PpoLossOut {
  double total = 0.0;
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy_bonus = 0.0;
  double proximal = 0.0;
  MlpGrad actor_grad;
  MlpGrad critic_grad;
};
PpoLossOut ppo_loss(const Mlp& actor, const Mlp& critic, const Mlp* critic_anchor,
                    const Trajectory& traj, const std::vector<int>& idx,
                    const std::vector<double>& advantages,
                    const std::vector<double>& returns, const PpoConfig& cfg);

struct PpoUpdateStats {
  double mean_loss = 0.0;
  double mean_surrogate = 0.0;
  double mean_value_loss = 0.0;
  double mean_entropy = 0.0;
  int minibatches = 0;
};

// K epochs of shuffled minibatch ascent on the clipped objective. The
// trajectory must hold exactly one horizon of transitions.
PpoUpdateStats ppo_update(Mlp& actor, Mlp& critic, const Mlp* critic_anchor,
                          Adam& actor_opt, Adam& critic_opt, const Trajectory& traj,
                          double value_last, const PpoConfig& cfg, Rng& rng);

// Per-agent actor-critic learner. Drives collection, updates, and the
// federation hand-off points (adopt / share) at iteration boundaries.
class LocalLearner {
 public:
  LocalLearner(int obs_dim, int action_dim, PpoConfig cfg, std::uint64_t seed);

  Action act(const Observation& obs);
  void record(double reward, bool done);
  bool ready_to_update() const;
  bool at_iteration_boundary() const { return traj_.empty() && !awaiting_record_; }
  PpoUpdateStats update(const std::vector<double>& bootstrap_obs);

  // True right after an update whose index is a multiple of share_every.
  bool wants_to_share() const;
  ModelDelta take_share_payload();  // delta since adoption; clears the flag

  void adopt_global(const Mlp& weights, int version);

  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  Mlp& actor() { return actor_; }
  Mlp& critic() { return critic_; }
  int version() const { return version_; }
  int steps_since_adoption() const { return steps_since_adopt_; }
  std::int64_t iterations() const { return iterations_; }
  std::int64_t env_steps() const { return env_steps_; }
  const PpoConfig& config() const { return cfg_; }

  std::string to_json() const;
  static LocalLearner from_json(const std::string& text);

 private:
  LocalLearner() : actor_opt_(1.0), critic_opt_(1.0), rng_(0) {}

  PpoConfig cfg_;
  Mlp actor_;
  Mlp critic_;
  Mlp critic_anchor_;
  Adam actor_opt_;
  Adam critic_opt_;
  Rng rng_;
  Trajectory traj_;
  bool awaiting_record_ = false;
  int version_ = 0;
  int steps_since_adopt_ = 0;
  std::int64_t iterations_ = 0;
  std::int64_t env_steps_ = 0;
  bool share_pending_ = false;
};

// Versioned JSON checkpoint for one network + optimizer state.
std::string mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const std::string& text);

}  // namespace fauno
