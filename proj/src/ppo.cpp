#include "fauno/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "fauno/errors.hpp"

namespace fauno {

using json = nlohmann::json;

Mlp make_actor(int obs_dim, int action_dim, Rng& rng) {
  return Mlp::make({obs_dim, 64, 32, action_dim}, Act::kTanh, Act::kIdentity, rng);
}

Mlp make_critic(int obs_dim, Rng& rng) {
  return Mlp::make({obs_dim, 256, 124, 1}, Act::kTanh, Act::kIdentity, rng);
}

std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<std::uint8_t>& mask) {
  if (logits.size() != mask.size()) {
    throw ContractViolation("masked_softmax: mask length mismatch");
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) max_logit = std::max(max_logit, logits[i]);
  }
  if (!std::isfinite(max_logit)) {
    throw ContractViolation("masked_softmax: no unmasked entries");
  }
  std::vector<double> probs(logits.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    probs[i] = std::exp(logits[i] - max_logit);
    z += probs[i];
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (mask[i]) probs[i] /= z;
  }
  return probs;
}

std::vector<double> actor_forward(const Mlp& actor, const std::vector<double>& obs,
                                  const std::vector<std::uint8_t>& mask) {
  return masked_softmax(actor.forward(obs), mask);
}

double critic_forward(const Mlp& critic, const std::vector<double>& obs) {
  const auto out = critic.forward(obs);
  if (!std::isfinite(out[0])) throw TrainingError("critic produced non-finite value");
  return out[0];
}

double entropy(const std::vector<double>& probs) {
  double s = 0.0;
  for (double p : probs) {
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

std::pair<int, double> sample_action(const std::vector<double>& probs, Rng& rng) {
  double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (total <= 0.0) throw ContractViolation("sample_action: degenerate distribution");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    acc += probs[i];
    if (u < acc) return {static_cast<int>(i), std::log(probs[i])};
  }
  // u landed on the far edge of the accumulated mass
  return {last_positive, std::log(probs[static_cast<std::size_t>(last_positive)])};
}

int argmax_action(const std::vector<double>& probs) {
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

GaeResult gae(const std::vector<double>& rewards, const std::vector<double>& values,
              double value_last, const std::vector<std::uint8_t>& dones,
              double gamma, double lambda) {
  if (rewards.size() != values.size() || rewards.size() != dones.size()) {
    throw ContractViolation("gae: length mismatch");
  }
  const int n = static_cast<int>(rewards.size());
  GaeResult out;
  out.advantages.assign(static_cast<std::size_t>(n), 0.0);
  out.returns.assign(static_cast<std::size_t>(n), 0.0);
  double carry = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const double next_value =
        t + 1 < n ? values[static_cast<std::size_t>(t) + 1] : value_last;
    const double nonterminal = dones[static_cast<std::size_t>(t)] ? 0.0 : 1.0;
    const double delta = rewards[static_cast<std::size_t>(t)] +
                         gamma * next_value * nonterminal -
                         values[static_cast<std::size_t>(t)];
    carry = delta + gamma * lambda * nonterminal * carry;
    out.advantages[static_cast<std::size_t>(t)] = carry;
    out.returns[static_cast<std::size_t>(t)] =
        carry + values[static_cast<std::size_t>(t)];
  }
  return out;
}

PpoLossOut ppo_loss(const Mlp& actor, const Mlp& critic, const Mlp* critic_anchor,
                    const Trajectory& traj, const std::vector<int>& idx,
                    const std::vector<double>& advantages,
                    const std::vector<double>& returns, const PpoConfig& cfg) {
  if (idx.empty()) throw ContractViolation("ppo_loss: empty batch");
  PpoLossOut out;
  out.actor_grad = actor.zero_grad();
  out.critic_grad = critic.zero_grad();
  const double inv_b = 1.0 / static_cast<double>(idx.size());

  for (int i : idx) {
    const Transition& tr = traj[static_cast<std::size_t>(i)];
    const double adv = advantages[static_cast<std::size_t>(i)];
    const double ret = returns[static_cast<std::size_t>(i)];

    // --- actor: clipped surrogate + entropy ---
    const auto trace = actor.forward_trace(tr.obs);
    const auto& logits = trace.acts.back();
    const auto probs = masked_softmax(logits, tr.mask);
    const double pa = probs[static_cast<std::size_t>(tr.action)];
    const double log_pa = std::log(pa);
    const double ratio = std::exp(log_pa - tr.log_prob_old);
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    const double u1 = ratio * adv;
    const double u2 = clipped * adv;
    const double surr = std::min(u1, u2);
    const double ent = entropy(probs);

    out.surrogate += surr * inv_b;
    out.entropy_bonus += ent * inv_b;

    // d(-surr)/dlog_pa: only the unclipped branch carries gradient.
    double dsurr_dlogpa = 0.0;
    if (u1 <= u2) dsurr_dlogpa = ratio * adv;
    // dL/dlogits through log pi(a) and entropy.
    std::vector<double> dlogits(logits.size(), 0.0);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      if (!tr.mask[k]) continue;
      const double pk = probs[k];
      const double dlogpa_dzk = (static_cast<int>(k) == tr.action ? 1.0 : 0.0) - pk;
      const double dent_dzk = -pk * (std::log(pk) + ent);
      dlogits[k] = inv_b * (-dsurr_dlogpa * dlogpa_dzk - cfg.c2 * dent_dzk);
    }
    actor.backward(trace, std::move(dlogits), out.actor_grad);

    // --- critic: squared error on the return target ---
    const auto vtrace = critic.forward_trace(tr.obs);
    const double v = vtrace.acts.back()[0];
    const double err = ret - v;
    out.value_loss += err * err * inv_b;
    std::vector<double> dv{inv_b * cfg.c1 * -2.0 * err};
    critic.backward(vtrace, std::move(dv), out.critic_grad);
  }

  // --- proximal pull toward the adopted global critic ---
  if (critic_anchor != nullptr && cfg.mu > 0.0) {
    if (!same_shape(critic, *critic_anchor)) {
      throw ProtocolError("ppo_loss: anchor shape mismatch");
    }
    const auto tw = critic.tensors();
    const auto ta = critic_anchor->tensors();
    double prox = 0.0;
    std::size_t idx_t = 0;
    for (std::size_t l = 0; l < critic.layers().size(); ++l) {
      for (auto* gt : {&out.critic_grad.dw[l], &out.critic_grad.db[l]}) {
        const auto& w = *tw[idx_t];
        const auto& a = *ta[idx_t];
        for (std::size_t j = 0; j < w.size(); ++j) {
          const double diff = w[j] - a[j];
          prox += diff * diff;
          (*gt)[j] += 2.0 * cfg.mu * diff;
        }
        ++idx_t;
      }
    }
    out.proximal = cfg.mu * prox;
  }

  out.total = -out.surrogate + cfg.c1 * out.value_loss - cfg.c2 * out.entropy_bonus +
              out.proximal;
  if (!std::isfinite(out.total)) {
    throw TrainingError("ppo_loss: non-finite objective (surr=" +
                        std::to_string(out.surrogate) + ", vf=" +
                        std::to_string(out.value_loss) + ")");
  }
  return out;
}

PpoUpdateStats ppo_update(Mlp& actor, Mlp& critic, const Mlp* critic_anchor,
                          Adam& actor_opt, Adam& critic_opt, const Trajectory& traj,
                          double value_last, const PpoConfig& cfg, Rng& rng) {
  if (traj.empty()) throw ContractViolation("ppo_update: empty trajectory");
  std::vector<double> rewards, values;
  std::vector<std::uint8_t> dones;
  for (const auto& tr : traj) {
    rewards.push_back(tr.reward);
    values.push_back(tr.value);
    dones.push_back(tr.done ? 1 : 0);
  }
  auto est = gae(rewards, values, value_last, dones, cfg.gamma, cfg.gae_lambda);

  if (cfg.normalize_advantages && est.advantages.size() > 1) {
    double mean = 0.0;
    for (double a : est.advantages) mean += a;
    mean /= static_cast<double>(est.advantages.size());
    double var = 0.0;
    for (double a : est.advantages) var += (a - mean) * (a - mean);
    var /= static_cast<double>(est.advantages.size());
    const double inv_std = 1.0 / (std::sqrt(var) + 1e-8);
    for (double& a : est.advantages) a = (a - mean) * inv_std;
  }

  std::vector<int> order(traj.size());
  std::iota(order.begin(), order.end(), 0);

  PpoUpdateStats stats;
  const int mb = std::max(1, cfg.minibatch);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(mb)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(mb));
      std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
      auto out = ppo_loss(actor, critic, critic_anchor, traj, batch, est.advantages,
                          est.returns, cfg);
      actor_opt.step(actor, out.actor_grad);
      critic_opt.step(critic, out.critic_grad);
      stats.mean_loss += out.total;
      stats.mean_surrogate += out.surrogate;
      stats.mean_value_loss += out.value_loss;
      stats.mean_entropy += out.entropy_bonus;
      ++stats.minibatches;
    }
  }
  if (stats.minibatches > 0) {
    stats.mean_loss /= stats.minibatches;
    stats.mean_surrogate /= stats.minibatches;
    stats.mean_value_loss /= stats.minibatches;
    stats.mean_entropy /= stats.minibatches;
  }
  return stats;
}

LocalLearner::LocalLearner(int obs_dim, int action_dim, PpoConfig cfg, std::uint64_t seed)
    : cfg_(cfg),
      actor_opt_(cfg.lr_actor),
      critic_opt_(cfg.lr_critic),
      rng_(Rng(seed).split(0x70706fULL)) {
  actor_ = make_actor(obs_dim, action_dim, rng_);
  critic_ = make_critic(obs_dim, rng_);
  critic_anchor_ = critic_;
}

Action LocalLearner::act(const Observation& obs) {
  if (awaiting_record_) throw ContractViolation("learner: act() without record()");
  const auto probs = actor_forward(actor_, obs.features, obs.action_mask);
  auto [a, log_p] = sample_action(probs, rng_);
  Transition tr;
  tr.obs = obs.features;
  tr.mask = obs.action_mask;
  tr.action = a;
  tr.log_prob_old = log_p;
  tr.value = critic_forward(critic_, obs.features);
  traj_.push_back(std::move(tr));
  awaiting_record_ = true;
  return Action{a};
}

void LocalLearner::record(double reward, bool done) {
  if (!awaiting_record_) throw ContractViolation("learner: record() without act()");
  traj_.back().reward = reward;
  traj_.back().done = done;
  awaiting_record_ = false;
  ++env_steps_;
}

bool LocalLearner::ready_to_update() const {
  return !awaiting_record_ && static_cast<int>(traj_.size()) >= cfg_.horizon;
}

PpoUpdateStats LocalLearner::update(const std::vector<double>& bootstrap_obs) {
  if (!ready_to_update()) throw ContractViolation("learner: update before horizon");
  const double value_last = critic_forward(critic_, bootstrap_obs);
  auto stats = ppo_update(actor_, critic_, cfg_.mu > 0.0 ? &critic_anchor_ : nullptr,
                          actor_opt_, critic_opt_, traj_, value_last, cfg_, rng_);
  traj_.clear();
  ++iterations_;
  ++steps_since_adopt_;
  if (cfg_.share_every > 0 && iterations_ % cfg_.share_every == 0) {
    share_pending_ = true;
  }
  return stats;
}

bool LocalLearner::wants_to_share() const { return share_pending_; }

ModelDelta LocalLearner::take_share_payload() {
  if (!share_pending_) throw ContractViolation("learner: no share pending");
  share_pending_ = false;
  return subtract_params(critic_, critic_anchor_);
}

void LocalLearner::adopt_global(const Mlp& weights, int version) {
  if (!same_shape(weights, critic_)) {
    throw ProtocolError("adopt_global: critic shape mismatch");
  }
  critic_ = weights;
  critic_anchor_ = weights;
  version_ = version;
  steps_since_adopt_ = 0;
}

namespace {

json mlp_to_json_obj(const Mlp& net) {
  json doc;
  doc["layers"] = json::array();
  for (const auto& layer : net.layers()) {
    doc["layers"].push_back({{"in", layer.in},
                             {"out", layer.out},
                             {"act", layer.act == Act::kTanh ? "tanh" : "identity"},
                             {"w", layer.w},
                             {"b", layer.b}});
  }
  return doc;
}

Mlp mlp_from_json_obj(const json& doc) {
  Mlp net;
  for (const auto& jl : doc.at("layers")) {
    DenseLayer layer;
    layer.in = jl.at("in").get<int>();
    layer.out = jl.at("out").get<int>();
    layer.act = jl.at("act").get<std::string>() == "tanh" ? Act::kTanh : Act::kIdentity;
    layer.w = jl.at("w").get<std::vector<double>>();
    layer.b = jl.at("b").get<std::vector<double>>();
    if (layer.w.size() != static_cast<std::size_t>(layer.in) * static_cast<std::size_t>(layer.out) ||
        layer.b.size() != static_cast<std::size_t>(layer.out)) {
      throw ProtocolError("checkpoint: layer shape mismatch");
    }
    net.layers().push_back(std::move(layer));
  }
  return net;
}

json adam_to_json(const Adam& opt) {
  const auto s = opt.state();
  return json{{"t", s.t}, {"m", s.m}, {"v", s.v}};
}

void adam_from_json(Adam& opt, const json& doc) {
  Adam::State s;
  s.t = doc.at("t").get<std::int64_t>();
  s.m = doc.at("m").get<std::vector<std::vector<double>>>();
  s.v = doc.at("v").get<std::vector<std::vector<double>>>();
  opt.restore(s);
}

}  // namespace

std::string mlp_to_json(const Mlp& net) { return mlp_to_json_obj(net).dump(); }

Mlp mlp_from_json(const std::string& text) {
  return mlp_from_json_obj(json::parse(text));
}

std::string LocalLearner::to_json() const {
  json doc;
  doc["shape_tag"] = "ppo_actor_critic";
  doc["config"] = {{"gamma", cfg_.gamma},       {"gae_lambda", cfg_.gae_lambda},
                   {"clip_eps", cfg_.clip_eps}, {"lr_actor", cfg_.lr_actor},
                   {"lr_critic", cfg_.lr_critic}, {"c1", cfg_.c1},
                   {"c2", cfg_.c2},             {"mu", cfg_.mu},
                   {"epochs", cfg_.epochs},     {"minibatch", cfg_.minibatch},
                   {"horizon", cfg_.horizon},   {"share_every", cfg_.share_every},
                   {"normalize_advantages", cfg_.normalize_advantages}};
  doc["actor"] = mlp_to_json_obj(actor_);
  doc["critic"] = mlp_to_json_obj(critic_);
  doc["critic_anchor"] = mlp_to_json_obj(critic_anchor_);
  doc["actor_opt"] = adam_to_json(actor_opt_);
  doc["critic_opt"] = adam_to_json(critic_opt_);
  doc["global_version"] = version_;
  doc["steps_since_adopt"] = steps_since_adopt_;
  doc["iterations"] = iterations_;
  doc["env_steps"] = env_steps_;
  return doc.dump();
}

LocalLearner LocalLearner::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("checkpoint parse: ") + e.what());
  }
  if (doc.value("shape_tag", "") != "ppo_actor_critic") {
    throw ProtocolError("checkpoint: wrong shape tag");
  }
  LocalLearner l;
  const auto& jc = doc.at("config");
  l.cfg_.gamma = jc.at("gamma").get<double>();
  l.cfg_.gae_lambda = jc.at("gae_lambda").get<double>();
  l.cfg_.clip_eps = jc.at("clip_eps").get<double>();
  l.cfg_.lr_actor = jc.at("lr_actor").get<double>();
  l.cfg_.lr_critic = jc.at("lr_critic").get<double>();
  l.cfg_.c1 = jc.at("c1").get<double>();
  l.cfg_.c2 = jc.at("c2").get<double>();
  l.cfg_.mu = jc.at("mu").get<double>();
  l.cfg_.epochs = jc.at("epochs").get<int>();
  l.cfg_.minibatch = jc.at("minibatch").get<int>();
  l.cfg_.horizon = jc.at("horizon").get<int>();
  l.cfg_.share_every = jc.at("share_every").get<int>();
  l.cfg_.normalize_advantages = jc.at("normalize_advantages").get<bool>();
  l.actor_ = mlp_from_json_obj(doc.at("actor"));
  l.critic_ = mlp_from_json_obj(doc.at("critic"));
  l.critic_anchor_ = mlp_from_json_obj(doc.at("critic_anchor"));
  l.actor_opt_ = Adam(l.cfg_.lr_actor);
  l.critic_opt_ = Adam(l.cfg_.lr_critic);
  adam_from_json(l.actor_opt_, doc.at("actor_opt"));
  adam_from_json(l.critic_opt_, doc.at("critic_opt"));
  l.version_ = doc.at("global_version").get<int>();
  l.steps_since_adopt_ = doc.at("steps_since_adopt").get<int>();
  l.iterations_ = doc.at("iterations").get<std::int64_t>();
  l.env_steps_ = doc.at("env_steps").get<std::int64_t>();
  l.rng_ = Rng(0x1ea4e5ULL ^ static_cast<std::uint64_t>(l.env_steps_));
  return l;
}

}  // namespace fauno
