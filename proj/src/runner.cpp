#include "fauno/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fauno/baselines.hpp"
#include "fauno/errors.hpp"
#include "fauno/fed.hpp"
#include "fauno/ppo.hpp"

namespace fauno {

using json = nlohmann::json;

namespace {

class RandomDriver : public PolicyDriver {
 public:
  explicit RandomDriver(std::uint64_t seed) : rng_(Rng(seed).split(0x72616e64ULL)) {}

  std::map<NodeId, Action> act(Env&, const std::map<NodeId, Observation>& obs) override {
    std::map<NodeId, Action> actions;
    for (const auto& [agent, o] : obs) {
      std::vector<int> unmasked;
      for (std::size_t k = 0; k < o.action_mask.size(); ++k) {
        if (o.action_mask[k]) unmasked.push_back(static_cast<int>(k));
      }
      actions[agent] = Action{unmasked[static_cast<std::size_t>(
          rng_.uniform_int(0, static_cast<int>(unmasked.size()) - 1))]};
    }
    return actions;
  }

 private:
  Rng rng_;
};

class LeastQueueDriver : public PolicyDriver {
 public:
  std::map<NodeId, Action> act(Env&, const std::map<NodeId, Observation>& obs) override {
    std::map<NodeId, Action> actions;
    for (const auto& [agent, o] : obs) actions[agent] = least_queue_action(o);
    return actions;
  }
};

class FaunoDriver : public PolicyDriver {
 public:
  FaunoDriver(const ExperimentConfig& cfg, Env& env, std::uint64_t seed)
      : fed_enabled_(cfg.fed.enabled) {
    const auto& topology = env.topology();
    Rng init_rng = Rng(seed).split(0x676c6f62ULL);
    GlobalCritic global;
    global.weights = make_critic(env.obs_dim(), init_rng);
    global.version = 0;
    global.server_lr = cfg.fed.server_lr;

    const auto agents = env.agents();
    for (NodeId a : agents) {
      auto learner = std::make_unique<LocalLearner>(
          env.obs_dim(), env.action_dim(), cfg.ppo,
          seed ^ (0x5151ULL + static_cast<std::uint64_t>(a) * 0x9e3779b97f4a7c15ULL));
      // Every agent starts from the same global critic (version 0).
      learner->adopt_global(global.weights, 0);
      learners_.emplace(a, std::move(learner));
    }
    if (fed_enabled_) {
      const int m = static_cast<int>(agents.size());
      const int threshold = cfg.fed.buffer_threshold > 0 ? cfg.fed.buffer_threshold
                                                         : (m + 1) / 2;
      transport_ = std::make_unique<FlTransport>(
          FlTransport::multi_hop_delay(topology, cfg.ticks_per_second));
      manager_ = std::make_unique<GlobalManager>(topology, std::move(global), threshold,
                                                 *transport_);
    }
  }

  std::map<NodeId, Action> act(Env& env, const std::map<NodeId, Observation>& obs) override {
    std::map<NodeId, Action> actions;
    for (const auto& [agent, o] : obs) {
      auto& learner = *learners_.at(agent);
      // The newer-global poll happens at iteration boundaries only.
      if (fed_enabled_ && learner.at_iteration_boundary()) {
        if (auto adopted = manager_->poll_adoption(agent, env.tick())) {
          if (adopted->second > learner.version()) {
            learner.adopt_global(adopted->first, adopted->second);
          }
        }
      }
      actions[agent] = learner.act(o);
    }
    return actions;
  }

  void post_step(Env& env, const std::map<NodeId, Observation>&,
                 const std::map<NodeId, Action>&, const StepResult& result) override {
    for (auto& [agent, learner] : learners_) {
      learner->record(result.rewards.at(agent), result.done);
      if (learner->ready_to_update()) {
        learner->update(result.observations.at(agent).features);
        if (fed_enabled_ && learner->wants_to_share()) {
          manager_->submit_from_agent(agent, learner->take_share_payload(),
                                      learner->steps_since_adoption(),
                                      learner->version(), env.tick());
        }
      }
    }
    if (fed_enabled_) manager_->on_tick(env.tick());
  }

  FedStats fed_stats() const override {
    return manager_ ? manager_->stats() : FedStats{};
  }

  std::vector<AuditRecord> fed_audit() const override {
    return manager_ ? manager_->audit() : std::vector<AuditRecord>{};
  }

  std::string checkpoint_json() const override {
    json doc;
    doc["kind"] = "fauno_checkpoint";
    doc["global_version"] = manager_ ? manager_->global().version : 0;
    json agents = json::object();
    for (const auto& [agent, learner] : learners_) {
      agents[std::to_string(agent)] = json::parse(learner->to_json());
    }
    doc["agents"] = agents;
    return doc.dump();
  }

 private:
  bool fed_enabled_;
  std::map<NodeId, std::unique_ptr<LocalLearner>> learners_;
  std::unique_ptr<FlTransport> transport_;
  std::unique_ptr<GlobalManager> manager_;
};

class ScofDriver : public PolicyDriver {
 public:
  ScofDriver(const ExperimentConfig& cfg, Env& env, std::uint64_t seed)
      : fed_enabled_(cfg.fed.enabled) {
    for (NodeId a : env.agents()) {
      agents_.emplace(a, std::make_unique<DqnAgent>(
                             env.obs_dim(), env.action_dim(), cfg.dqn,
                             seed ^ (0xd9ULL + static_cast<std::uint64_t>(a) *
                                                   0x9e3779b97f4a7c15ULL)));
    }
    if (fed_enabled_) {
      transport_ = std::make_unique<FlTransport>(
          FlTransport::multi_hop_delay(env.topology(), cfg.ticks_per_second));
      const auto param_count =
          agents_.begin()->second->online().param_count();
      federation_ = std::make_unique<ScofFederation>(env.topology(), *transport_,
                                                     param_count);
    }
  }

  std::map<NodeId, Action> act(Env& env, const std::map<NodeId, Observation>& obs) override {
    std::map<NodeId, Action> actions;
    for (const auto& [agent, o] : obs) {
      auto& dqn = *agents_.at(agent);
      if (fed_enabled_ && dqn.in_round_barrier()) {
        if (auto result = federation_->poll_round_result(agent, env.tick())) {
          dqn.finish_round(*result);
        }
      }
      actions[agent] = dqn.act(o);
    }
    return actions;
  }

  void post_step(Env& env, const std::map<NodeId, Observation>& prev,
                 const std::map<NodeId, Action>& actions,
                 const StepResult& result) override {
    for (auto& [agent, dqn] : agents_) {
      dqn->observe_transition(prev.at(agent), actions.at(agent),
                              result.rewards.at(agent),
                              result.observations.at(agent), result.done);
      if (fed_enabled_ && dqn->wants_round()) {
        federation_->upload(agent, dqn->online(), env.tick());
        dqn->mark_round_started();
      }
      dqn->maybe_train();
    }
    if (fed_enabled_) federation_->on_tick(env.tick());
  }

  FedStats fed_stats() const override {
    FedStats s;
    if (federation_) s.aggregations = federation_->rounds_completed();
    return s;
  }

  std::vector<AuditRecord> fed_audit() const override {
    return federation_ ? federation_->audit() : std::vector<AuditRecord>{};
  }

 private:
  bool fed_enabled_;
  std::map<NodeId, std::unique_ptr<DqnAgent>> agents_;
  std::unique_ptr<FlTransport> transport_;
  std::unique_ptr<ScofFederation> federation_;
};

// Samples from fixed actor networks; used by `evaluate`.
class FrozenPpoDriver : public PolicyDriver {
 public:
  FrozenPpoDriver(std::map<NodeId, Mlp> actors, std::uint64_t seed)
      : actors_(std::move(actors)), rng_(Rng(seed).split(0x6576616cULL)) {}

  std::map<NodeId, Action> act(Env&, const std::map<NodeId, Observation>& obs) override {
    std::map<NodeId, Action> actions;
    for (const auto& [agent, o] : obs) {
      const auto probs = actor_forward(actors_.at(agent), o.features, o.action_mask);
      actions[agent] = Action{sample_action(probs, rng_).first};
    }
    return actions;
  }

 private:
  std::map<NodeId, Mlp> actors_;
  Rng rng_;
};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

}  // namespace

std::unique_ptr<PolicyDriver> make_driver(const ExperimentConfig& cfg, Env& env,
                                          std::uint64_t seed) {
  switch (cfg.algorithm) {
    case AlgorithmKind::kRandom: return std::make_unique<RandomDriver>(seed);
    case AlgorithmKind::kLeastQueue: return std::make_unique<LeastQueueDriver>();
    case AlgorithmKind::kFauno: return std::make_unique<FaunoDriver>(cfg, env, seed);
    case AlgorithmKind::kScof: return std::make_unique<ScofDriver>(cfg, env, seed);
  }
  throw ConfigError("unknown algorithm");
}

std::uint64_t episode_seed(std::uint64_t run_seed, int episode) {
  std::uint64_t x = run_seed ^ (0x9e3779b97f4a7c15ULL *
                                (static_cast<std::uint64_t>(episode) + 1));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

MetricsReport run_episodes(const ExperimentConfig& cfg, Env& env, PolicyDriver& driver,
                           std::uint64_t seed, int episodes,
                           const std::string& out_dir) {
  MetricsReport report;
  report.algorithm = algorithm_name(cfg.algorithm);
  report.topology_label = cfg.topology.label();
  report.lambda = cfg.lambda_per_tick;
  report.seed = seed;

  std::ofstream events_out;
  const bool log_events = cfg.output.log_events && !out_dir.empty();
  if (log_events) {
    events_out.open(std::filesystem::path(out_dir) / "events.jsonl");
  }

  std::int64_t global_step = 0;
  std::int64_t next_checkpoint = cfg.output.checkpoint_interval_steps;
  for (int episode = 0; episode < episodes; ++episode) {
    auto obs = env.reset(episode_seed(seed, episode));
    std::map<NodeId, double> reward_sums;
    std::vector<Event> episode_events;
    for (int step = 0; step < cfg.steps_per_episode; ++step) {
      auto actions = driver.act(env, obs);
      auto result = env.step(actions);
      driver.post_step(env, obs, actions, result);
      for (const auto& [agent, r] : result.rewards) reward_sums[agent] += r;
      episode_events.insert(episode_events.end(), result.events.begin(),
                            result.events.end());
      obs = std::move(result.observations);
      ++global_step;
      if (cfg.output.save_checkpoints && !out_dir.empty() &&
          global_step >= next_checkpoint) {
        const auto blob = driver.checkpoint_json();
        if (!blob.empty()) {
          write_file(std::filesystem::path(out_dir) /
                         ("checkpoint_step" + std::to_string(global_step) + ".json"),
                     blob);
        }
        next_checkpoint += cfg.output.checkpoint_interval_steps;
      }
    }
    episode_events.push_back(Event{env.tick(), EventKind::kEpisodeEnd, -1, -1,
                                   env.world().counts().created});
    EpisodeMetrics m = compute_metrics(episode_events);
    m.episode = episode;
    for (const auto& [agent, sum] : reward_sums) {
      m.mean_reward_per_agent[agent] = sum / cfg.steps_per_episode;
    }
    report.episodes.push_back(std::move(m));
    if (log_events) events_out << events_to_jsonl(episode_events);
  }
  report.fed = driver.fed_stats();
  report.finalize();

  if (!out_dir.empty()) {
    const std::filesystem::path dir(out_dir);
    write_file(dir / "report.json", report.to_json());
    write_file(dir / "episodes.csv", report.episodes_csv());
    write_file(dir / "long.csv", report.long_format_csv());
    write_file(dir / "config.json", cfg.to_json_text());
    write_file(dir / "topology.json", env.topology().to_json());
    const auto audit = driver.fed_audit();
    if (!audit.empty()) write_file(dir / "fed_audit.jsonl", audit_to_jsonl(audit));
    if (cfg.output.save_checkpoints) {
      const auto blob = driver.checkpoint_json();
      if (!blob.empty()) write_file(dir / "checkpoint_final.json", blob);
    }
  }
  return report;
}

}  // namespace

MetricsReport run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                             const std::string& out_dir) {
  cfg.validate();
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  Topology topology = build_topology(cfg.topology, seed);
  Env env(topology, derive_env_config(cfg, topology),
          build_workload(cfg.workload, cfg.lambda_per_tick));
  auto driver = make_driver(cfg, env, seed);
  return run_episodes(cfg, env, *driver, seed, cfg.episodes, out_dir);
}

MetricsReport evaluate_checkpoint(const ExperimentConfig& cfg,
                                  const std::string& checkpoint_path,
                                  std::uint64_t seed, int episodes,
                                  const std::string& out_dir) {
  std::ifstream in(checkpoint_path);
  if (!in) throw ConfigError("evaluate: cannot open " + checkpoint_path);
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("checkpoint parse: ") + e.what());
  }
  if (doc.value("kind", "") != "fauno_checkpoint") {
    throw ProtocolError("evaluate: not a checkpoint bundle");
  }
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  Topology topology = build_topology(cfg.topology, seed);
  Env env(topology, derive_env_config(cfg, topology),
          build_workload(cfg.workload, cfg.lambda_per_tick));
  std::map<NodeId, Mlp> actors;
  for (const auto& [key, value] : doc.at("agents").items()) {
    auto learner = LocalLearner::from_json(value.dump());
    actors.emplace(std::stoi(key), learner.actor());
  }
  for (NodeId a : env.agents()) {
    if (!actors.count(a)) {
      throw ProtocolError("evaluate: checkpoint missing agent " + std::to_string(a));
    }
  }
  FrozenPpoDriver driver(std::move(actors), seed);
  ExperimentConfig eval_cfg = cfg;
  eval_cfg.episodes = episodes;
  auto report = run_episodes(eval_cfg, env, driver, seed, episodes, out_dir);
  report.algorithm += "_eval";
  return report;
}

}  // namespace fauno
