#include "fauno/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fauno/errors.hpp"
#include "fauno/ppo.hpp"

namespace fauno {

Action least_queue_action(const Observation& obs) {
  if (!obs.task.present) return Action{0};
  double best_ratio = static_cast<double>(obs.queue_len) / obs.queue_cap;
  NodeId best_id = obs.node;
  int best_choice = 0;
  for (std::size_t k = 0; k < obs.neighbors.size(); ++k) {
    const auto& nb = obs.neighbors[k];
    if (!nb.heard) continue;
    const int choice = static_cast<int>(k) + 1;
    if (choice >= static_cast<int>(obs.action_mask.size()) ||
        !obs.action_mask[static_cast<std::size_t>(choice)]) {
      continue;  // offload unavailable (hop limit)
    }
    const double ratio =
        static_cast<double>(nb.snapshot.queue_len) / nb.snapshot.queue_cap;
    if (ratio < best_ratio || (ratio == best_ratio && nb.id < best_id)) {
      best_ratio = ratio;
      best_id = nb.id;
      best_choice = choice;
    }
  }
  return Action{best_choice};
}

DuelingParams DuelingParams::make(int obs_dim, int action_dim, Rng& rng) {
  DuelingParams p;
  p.trunk = Mlp::make({obs_dim, 256, 124}, Act::kTanh, Act::kTanh, rng);
  p.value_head = Mlp::make({124, 1}, Act::kIdentity, Act::kIdentity, rng);
  p.adv_head = Mlp::make({124, action_dim}, Act::kIdentity, Act::kIdentity, rng);
  return p;
}

std::int64_t DuelingParams::param_count() const {
  return trunk.param_count() + value_head.param_count() + adv_head.param_count();
}

std::vector<const std::vector<double>*> DuelingParams::tensors() const {
  std::vector<const std::vector<double>*> out;
  for (const auto* part : {&trunk, &value_head, &adv_head}) {
    auto ts = part->tensors();
    out.insert(out.end(), ts.begin(), ts.end());
  }
  return out;
}

std::vector<std::vector<double>*> DuelingParams::tensors() {
  std::vector<std::vector<double>*> out;
  for (auto* part : {&trunk, &value_head, &adv_head}) {
    auto ts = part->tensors();
    out.insert(out.end(), ts.begin(), ts.end());
  }
  return out;
}

namespace {

struct DuelingTrace {
  Mlp::Trace trunk;
  Mlp::Trace value;
  Mlp::Trace adv;
  std::vector<double> q;
  int unmasked = 0;
};

DuelingTrace dueling_forward(const DuelingParams& p, const std::vector<double>& obs,
                             const std::vector<std::uint8_t>& mask) {
  DuelingTrace t;
  t.trunk = p.trunk.forward_trace(obs);
  const auto& h = t.trunk.acts.back();
  t.value = p.value_head.forward_trace(h);
  t.adv = p.adv_head.forward_trace(h);
  const auto& a = t.adv.acts.back();
  if (mask.size() != a.size()) throw ContractViolation("dueling_q: mask length mismatch");
  double mean = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (mask[k]) {
      mean += a[k];
      ++t.unmasked;
    }
  }
  if (t.unmasked == 0) throw ContractViolation("dueling_q: no unmasked actions");
  mean /= t.unmasked;
  const double v = t.value.acts.back()[0];
  t.q.assign(a.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (mask[k]) t.q[k] = v + a[k] - mean;
  }
  return t;
}

// Backprop dL/dQ[action] through heads and trunk.
void dueling_backward(const DuelingParams& p, const DuelingTrace& t,
                      const std::vector<std::uint8_t>& mask, int action, double dq,
                      DuelingGrad& grad) {
  std::vector<double> dadv(t.adv.acts.back().size(), 0.0);
  const double inv_m = 1.0 / t.unmasked;
  for (std::size_t j = 0; j < dadv.size(); ++j) {
    if (!mask[j]) continue;
    const double indicator = static_cast<int>(j) == action ? 1.0 : 0.0;
    dadv[j] = dq * (indicator - inv_m);
  }
  std::vector<double> dvalue{dq};
  auto dh_value = p.value_head.backward(t.value, std::move(dvalue), grad.value_head);
  auto dh_adv = p.adv_head.backward(t.adv, std::move(dadv), grad.adv_head);
  for (std::size_t i = 0; i < dh_value.size(); ++i) dh_value[i] += dh_adv[i];
  p.trunk.backward(t.trunk, std::move(dh_value), grad.trunk);
}

int argmax_unmasked(const std::vector<double>& q, const std::vector<std::uint8_t>& mask) {
  int best = -1;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (!mask[k]) continue;
    if (best < 0 || q[k] > q[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

}  // namespace

std::vector<double> dueling_q(const DuelingParams& params,
                              const std::vector<double>& obs,
                              const std::vector<std::uint8_t>& mask) {
  return dueling_forward(params, obs, mask).q;
}

DqnLossOut dqn_loss(const DuelingParams& online, const DuelingParams& target,
                    const std::vector<const DqnTransition*>& batch, double gamma) {
  if (batch.empty()) throw ContractViolation("dqn_loss: empty batch");
  DqnLossOut out;
  out.grad.trunk = online.trunk.zero_grad();
  out.grad.value_head = online.value_head.zero_grad();
  out.grad.adv_head = online.adv_head.zero_grad();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const DqnTransition* tr : batch) {
    const auto trace = dueling_forward(online, tr->obs, tr->mask);
    const double q = trace.q[static_cast<std::size_t>(tr->action)];
    double y = tr->reward;
    if (!tr->done) {
      const auto qn_online = dueling_q(online, tr->next_obs, tr->next_mask);
      const int a_star = argmax_unmasked(qn_online, tr->next_mask);
      const auto qn_target = dueling_q(target, tr->next_obs, tr->next_mask);
      y += gamma * qn_target[static_cast<std::size_t>(a_star)];
    }
    const double err = q - y;
    out.loss += err * err * inv_b;
    dueling_backward(online, trace, tr->mask, tr->action, 2.0 * err * inv_b, out.grad);
  }
  if (!std::isfinite(out.loss)) throw TrainingError("dqn_loss: non-finite TD loss");
  return out;
}

Mlp fedavg_round(const std::vector<const Mlp*>& models,
                 const std::vector<double>& weights) {
  if (models.empty() || models.size() != weights.size()) {
    throw ProtocolError("fedavg_round: models/weights mismatch");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ProtocolError("fedavg_round: negative weight");
    total += w;
  }
  if (total <= 0.0) throw ProtocolError("fedavg_round: weights sum to zero");
  for (const Mlp* m : models) {
    if (!same_shape(*m, *models[0])) throw ProtocolError("fedavg_round: shape mismatch");
  }
  Mlp out = *models[0];
  auto out_ts = out.tensors();
  for (std::size_t t = 0; t < out_ts.size(); ++t) {
    std::fill(out_ts[t]->begin(), out_ts[t]->end(), 0.0);
  }
  for (std::size_t i = 0; i < models.size(); ++i) {
    const double w = weights[i] / total;
    const auto ts = models[i]->tensors();
    for (std::size_t t = 0; t < ts.size(); ++t) {
      for (std::size_t j = 0; j < ts[t]->size(); ++j) {
        (*out_ts[t])[j] += w * (*ts[t])[j];
      }
    }
  }
  return out;
}

DuelingParams fedavg_round(const std::vector<const DuelingParams*>& models,
                           const std::vector<double>& weights) {
  if (models.empty()) throw ProtocolError("fedavg_round: no models");
  std::vector<const Mlp*> trunks, values, advs;
  for (const auto* m : models) {
    trunks.push_back(&m->trunk);
    values.push_back(&m->value_head);
    advs.push_back(&m->adv_head);
  }
  DuelingParams out;
  out.trunk = fedavg_round(trunks, weights);
  out.value_head = fedavg_round(values, weights);
  out.adv_head = fedavg_round(advs, weights);
  return out;
}

DqnAgent::DqnAgent(int obs_dim, int action_dim, DqnConfig cfg, std::uint64_t seed)
    : cfg_(cfg),
      opt_trunk_(cfg.lr),
      opt_value_(cfg.lr),
      opt_adv_(cfg.lr),
      rng_(Rng(seed).split(0x64716eULL)) {
  online_ = DuelingParams::make(obs_dim, action_dim, rng_);
  target_ = online_;
}

double DqnAgent::epsilon() const {
  const double frac = std::min(
      1.0, static_cast<double>(env_steps_) / std::max(1, cfg_.eps_decay_steps));
  return cfg_.eps_start + frac * (cfg_.eps_end - cfg_.eps_start);
}

Action DqnAgent::act(const Observation& obs) {
  std::vector<int> unmasked;
  for (std::size_t k = 0; k < obs.action_mask.size(); ++k) {
    if (obs.action_mask[k]) unmasked.push_back(static_cast<int>(k));
  }
  if (rng_.uniform() < epsilon()) {
    return Action{unmasked[static_cast<std::size_t>(
        rng_.uniform_int(0, static_cast<int>(unmasked.size()) - 1))]};
  }
  const auto q = dueling_q(online_, obs.features, obs.action_mask);
  return Action{argmax_unmasked(q, obs.action_mask)};
}

void DqnAgent::observe_transition(const Observation& prev, const Action& action,
                                  double reward, const Observation& next, bool done) {
  DqnTransition tr;
  tr.obs = prev.features;
  tr.mask = prev.action_mask;
  tr.action = action.choice;
  tr.reward = reward;
  tr.next_obs = next.features;
  tr.next_mask = next.action_mask;
  tr.done = done;
  replay_.push_back(std::move(tr));
  while (static_cast<int>(replay_.size()) > cfg_.replay_capacity) replay_.pop_front();
  ++env_steps_;
}

double DqnAgent::train_on(const std::vector<const DqnTransition*>& batch) {
  auto out = dqn_loss(online_, target_, batch, cfg_.gamma);
  opt_trunk_.step(online_.trunk, out.grad.trunk);
  opt_value_.step(online_.value_head, out.grad.value_head);
  opt_adv_.step(online_.adv_head, out.grad.adv_head);
  ++train_steps_;
  if (train_steps_ % cfg_.target_sync_period == 0) target_ = online_;
  return out.loss;
}

void DqnAgent::maybe_train() {
  if (awaiting_round_) return;  // synchronous barrier
  if (static_cast<int>(replay_.size()) < std::max(cfg_.warmup, cfg_.minibatch)) return;
  std::vector<const DqnTransition*> batch;
  for (int i = 0; i < cfg_.minibatch; ++i) {
    const int j = rng_.uniform_int(0, static_cast<int>(replay_.size()) - 1);
    batch.push_back(&replay_[static_cast<std::size_t>(j)]);
  }
  train_on(batch);
}

bool DqnAgent::wants_round() const {
  return !awaiting_round_ && cfg_.round_period > 0 && env_steps_ > 0 &&
         env_steps_ % cfg_.round_period == 0;
}

void DqnAgent::mark_round_started() { awaiting_round_ = true; }

void DqnAgent::finish_round(const DuelingParams& global) {
  online_ = global;
  target_ = global;
  awaiting_round_ = false;
}

ScofFederation::ScofFederation(const Topology& topology, FlTransport& transport,
                               std::int64_t model_param_count)
    : topology_(&topology),
      transport_(&transport),
      manager_node_(topology.global_manager()),
      agent_nodes_(topology.agent_nodes()),
      model_bits_(payload_bits(model_param_count)) {}

void ScofFederation::upload(NodeId agent, const DuelingParams& model, Tick now) {
  const auto id = transport_->register_update(agent, manager_node_, model_bits_, now);
  inflight_uploads_.emplace(id, std::make_pair(agent, model));
  audit_.push_back({now, "submit", agent, rounds_completed_,
                    static_cast<int>(round_models_.size())});
}

void ScofFederation::on_tick(Tick now) {
  auto delivered = transport_->poll_completed(manager_node_, now);
  delivered.insert(delivered.end(), upload_stash_.begin(), upload_stash_.end());
  upload_stash_.clear();
  for (std::uint64_t id : delivered) {
    auto it = inflight_uploads_.find(id);
    if (it == inflight_uploads_.end()) {
      if (inflight_results_.count(id)) result_stash_[manager_node_].push_back(id);
      continue;
    }
    round_models_[it->second.first] = std::move(it->second.second);
    inflight_uploads_.erase(it);
  }
  if (round_models_.size() < agent_nodes_.size()) return;

  // All participants arrived: average with equal weights and send back.
  std::vector<const DuelingParams*> models;
  std::vector<double> weights;
  for (const auto& [agent, model] : round_models_) {
    models.push_back(&model);
    weights.push_back(1.0);
  }
  auto averaged = std::make_shared<const DuelingParams>(fedavg_round(models, weights));
  round_models_.clear();
  ++rounds_completed_;
  audit_.push_back({now, "aggregate", -1, rounds_completed_, 0});
  for (NodeId agent : agent_nodes_) {
    const auto id = transport_->register_update(manager_node_, agent, model_bits_, now);
    inflight_results_.emplace(id, ResultPayload{averaged, rounds_completed_});
  }
  audit_.push_back({now, "broadcast", -1, rounds_completed_, 0});
}

std::optional<DuelingParams> ScofFederation::poll_round_result(NodeId agent, Tick now) {
  auto delivered = transport_->poll_completed(agent, now);
  if (auto stashed = result_stash_.find(agent); stashed != result_stash_.end()) {
    delivered.insert(delivered.end(), stashed->second.begin(), stashed->second.end());
    result_stash_.erase(stashed);
  }
  std::optional<ResultPayload> best;
  for (std::uint64_t id : delivered) {
    auto it = inflight_results_.find(id);
    if (it == inflight_results_.end()) {
      if (inflight_uploads_.count(id)) upload_stash_.push_back(id);
      continue;
    }
    if (!best || it->second.round > best->round) best = it->second;
    inflight_results_.erase(it);
  }
  if (!best) return std::nullopt;
  audit_.push_back({now, "adopt", agent, best->round, 0});
  return *best->model;
}

}  // namespace fauno
