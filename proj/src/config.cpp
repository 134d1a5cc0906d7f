#include "fauno/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fauno/errors.hpp"

namespace fauno {

using json = nlohmann::json;

const char* algorithm_name(AlgorithmKind a) {
  switch (a) {
    case AlgorithmKind::kFauno: return "fauno";
    case AlgorithmKind::kLeastQueue: return "least_queue";
    case AlgorithmKind::kScof: return "scof";
    case AlgorithmKind::kRandom: return "random";
  }
  return "?";
}

AlgorithmKind algorithm_from_name(const std::string& name) {
  if (name == "fauno") return AlgorithmKind::kFauno;
  if (name == "least_queue") return AlgorithmKind::kLeastQueue;
  if (name == "scof") return AlgorithmKind::kScof;
  if (name == "random") return AlgorithmKind::kRandom;
  throw ConfigError("unknown algorithm '" + name + "'");
}

std::string TopologySpec::label() const {
  if (builder == "cluster") return "cluster" + std::to_string(n_clusters);
  if (builder == "random") return "random" + std::to_string(n_nodes);
  return "file";
}

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  ExperimentConfig cfg;
  if (doc.contains("algorithm")) {
    cfg.algorithm = algorithm_from_name(doc.at("algorithm").get<std::string>());
  }
  read_if(doc, "seeds", cfg.seeds);
  read_if(doc, "episodes", cfg.episodes);
  read_if(doc, "steps_per_episode", cfg.steps_per_episode);
  read_if(doc, "ticks_per_second", cfg.ticks_per_second);
  read_if(doc, "lambda_per_tick", cfg.lambda_per_tick);

  if (doc.contains("topology")) {
    const auto& jt = doc.at("topology");
    read_if(jt, "builder", cfg.topology.builder);
    read_if(jt, "n_clusters", cfg.topology.n_clusters);
    read_if(jt, "n_nodes", cfg.topology.n_nodes);
    if (jt.contains("area")) {
      const auto area = jt.at("area").get<std::vector<double>>();
      if (area.size() != 2) throw ConfigError("topology.area must be [w, h]");
      cfg.topology.area_w = area[0];
      cfg.topology.area_h = area[1];
    }
    read_if(jt, "comm_radius", cfg.topology.comm_radius);
    read_if(jt, "path", cfg.topology.path);
    if (jt.contains("link")) {
      const auto& jl = jt.at("link");
      read_if(jl, "bandwidth_hz", cfg.topology.link.bandwidth_hz);
      read_if(jl, "gain_db", cfg.topology.link.gain_db);
      read_if(jl, "noise_dbm", cfg.topology.link.noise_dbm);
    }
    if (jt.contains("devices")) {
      const auto& jd = jt.at("devices");
      read_if(jd, "millis_to_instructions_per_tick",
              cfg.topology.devices.millis_to_instructions_per_tick);
      read_if(jd, "queue_cap", cfg.topology.devices.default_queue_cap);
      read_if(jd, "tx_power_dbm", cfg.topology.devices.default_tx_power_dbm);
    }
  }

  if (doc.contains("workload")) {
    const auto& jw = doc.at("workload");
    read_if(jw, "type", cfg.workload.type);
    read_if(jw, "instructions", cfg.workload.instructions);
    read_if(jw, "input_bits", cfg.workload.input_bits);
    read_if(jw, "output_bits", cfg.workload.output_bits);
    read_if(jw, "cpi", cfg.workload.cpi);
    read_if(jw, "deadline_ticks", cfg.workload.deadline_ticks);
    read_if(jw, "jitter", cfg.workload.jitter);
    read_if(jw, "trace_path", cfg.workload.trace_path);
    read_if(jw, "instruction_scale", cfg.workload.instruction_scale);
  }

  if (doc.contains("reward")) {
    const auto& jr = doc.at("reward");
    read_if(jr, "chi_wait", cfg.reward.chi_wait);
    read_if(jr, "chi_comm", cfg.reward.chi_comm);
    read_if(jr, "chi_exc", cfg.reward.chi_exc);
    read_if(jr, "chi_overload", cfg.reward.chi_overload);
    read_if(jr, "task_utility", cfg.reward.task_utility);
    read_if(jr, "completion_bonus_enabled", cfg.reward.completion_bonus_enabled);
    read_if(jr, "overload_eps", cfg.reward.overload_eps);
  }

  if (doc.contains("env")) {
    const auto& je = doc.at("env");
    read_if(je, "share_period", cfg.share_period);
    read_if(je, "state_share_bits", cfg.state_share_bits);
    read_if(je, "hop_limit", cfg.hop_limit);
  }

  if (doc.contains("ppo")) {
    const auto& jp = doc.at("ppo");
    read_if(jp, "gamma", cfg.ppo.gamma);
    read_if(jp, "gae_lambda", cfg.ppo.gae_lambda);
    read_if(jp, "clip_eps", cfg.ppo.clip_eps);
    read_if(jp, "lr_actor", cfg.ppo.lr_actor);
    read_if(jp, "lr_critic", cfg.ppo.lr_critic);
    read_if(jp, "c1", cfg.ppo.c1);
    read_if(jp, "c2", cfg.ppo.c2);
    read_if(jp, "mu", cfg.ppo.mu);
    read_if(jp, "epochs", cfg.ppo.epochs);
    read_if(jp, "minibatch", cfg.ppo.minibatch);
    read_if(jp, "horizon", cfg.ppo.horizon);
    read_if(jp, "share_every", cfg.ppo.share_every);
    read_if(jp, "normalize_advantages", cfg.ppo.normalize_advantages);
  }

  if (doc.contains("dqn")) {
    const auto& jd = doc.at("dqn");
    read_if(jd, "gamma", cfg.dqn.gamma);
    read_if(jd, "eps_start", cfg.dqn.eps_start);
    read_if(jd, "eps_end", cfg.dqn.eps_end);
    read_if(jd, "eps_decay_steps", cfg.dqn.eps_decay_steps);
    read_if(jd, "replay_capacity", cfg.dqn.replay_capacity);
    read_if(jd, "target_sync_period", cfg.dqn.target_sync_period);
    read_if(jd, "lr", cfg.dqn.lr);
    read_if(jd, "round_period", cfg.dqn.round_period);
    read_if(jd, "minibatch", cfg.dqn.minibatch);
    read_if(jd, "warmup", cfg.dqn.warmup);
  }

  if (doc.contains("fed")) {
    const auto& jf = doc.at("fed");
    read_if(jf, "enabled", cfg.fed.enabled);
    read_if(jf, "buffer_threshold", cfg.fed.buffer_threshold);
    read_if(jf, "server_lr", cfg.fed.server_lr);
  }

  if (doc.contains("output")) {
    const auto& jo = doc.at("output");
    read_if(jo, "log_events", cfg.output.log_events);
    read_if(jo, "save_checkpoints", cfg.output.save_checkpoints);
    read_if(jo, "checkpoint_interval_steps", cfg.output.checkpoint_interval_steps);
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string ExperimentConfig::to_json_text() const {
  json doc;
  doc["algorithm"] = algorithm_name(algorithm);
  doc["seeds"] = seeds;
  doc["episodes"] = episodes;
  doc["steps_per_episode"] = steps_per_episode;
  doc["ticks_per_second"] = ticks_per_second;
  doc["lambda_per_tick"] = lambda_per_tick;
  doc["topology"] = {{"builder", topology.builder},
                     {"n_clusters", topology.n_clusters},
                     {"n_nodes", topology.n_nodes},
                     {"area", {topology.area_w, topology.area_h}},
                     {"comm_radius", topology.comm_radius},
                     {"path", topology.path},
                     {"link",
                      {{"bandwidth_hz", topology.link.bandwidth_hz},
                       {"gain_db", topology.link.gain_db},
                       {"noise_dbm", topology.link.noise_dbm}}},
                     {"devices",
                      {{"millis_to_instructions_per_tick",
                        topology.devices.millis_to_instructions_per_tick},
                       {"queue_cap", topology.devices.default_queue_cap},
                       {"tx_power_dbm", topology.devices.default_tx_power_dbm}}}};
  doc["workload"] = {{"type", workload.type},
                     {"instructions", workload.instructions},
                     {"input_bits", workload.input_bits},
                     {"output_bits", workload.output_bits},
                     {"cpi", workload.cpi},
                     {"deadline_ticks", workload.deadline_ticks},
                     {"jitter", workload.jitter},
                     {"trace_path", workload.trace_path},
                     {"instruction_scale", workload.instruction_scale}};
  doc["reward"] = {{"chi_wait", reward.chi_wait},
                   {"chi_comm", reward.chi_comm},
                   {"chi_exc", reward.chi_exc},
                   {"chi_overload", reward.chi_overload},
                   {"task_utility", reward.task_utility},
                   {"completion_bonus_enabled", reward.completion_bonus_enabled},
                   {"overload_eps", reward.overload_eps}};
  doc["env"] = {{"share_period", share_period},
                {"state_share_bits", state_share_bits},
                {"hop_limit", hop_limit}};
  doc["ppo"] = {{"gamma", ppo.gamma},
                {"gae_lambda", ppo.gae_lambda},
                {"clip_eps", ppo.clip_eps},
                {"lr_actor", ppo.lr_actor},
                {"lr_critic", ppo.lr_critic},
                {"c1", ppo.c1},
                {"c2", ppo.c2},
                {"mu", ppo.mu},
                {"epochs", ppo.epochs},
                {"minibatch", ppo.minibatch},
                {"horizon", ppo.horizon},
                {"share_every", ppo.share_every},
                {"normalize_advantages", ppo.normalize_advantages}};
  doc["dqn"] = {{"gamma", dqn.gamma},
                {"eps_start", dqn.eps_start},
                {"eps_end", dqn.eps_end},
                {"eps_decay_steps", dqn.eps_decay_steps},
                {"replay_capacity", dqn.replay_capacity},
                {"target_sync_period", dqn.target_sync_period},
                {"lr", dqn.lr},
                {"round_period", dqn.round_period},
                {"minibatch", dqn.minibatch},
                {"warmup", dqn.warmup}};
  doc["fed"] = {{"enabled", fed.enabled},
                {"buffer_threshold", fed.buffer_threshold},
                {"server_lr", fed.server_lr}};
  doc["output"] = {{"log_events", output.log_events},
                   {"save_checkpoints", output.save_checkpoints},
                   {"checkpoint_interval_steps", output.checkpoint_interval_steps}};
  return doc.dump(2);
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(!seeds.empty(), "seeds must not be empty");
  require(episodes > 0, "episodes must be positive");
  require(steps_per_episode > 0, "steps_per_episode must be positive");
  require(ticks_per_second > 0.0, "ticks_per_second must be positive");
  require(lambda_per_tick > 0.0, "lambda_per_tick must be positive");
  require(topology.builder == "cluster" || topology.builder == "random" ||
              topology.builder == "file",
          "topology.builder must be cluster|random|file");
  if (topology.builder == "cluster") {
    require(topology.n_clusters >= 1 && topology.n_clusters <= 8,
            "topology.n_clusters must be in 1..8");
  }
  if (topology.builder == "random") {
    require(topology.n_nodes >= 2, "topology.n_nodes must be >= 2");
    require(topology.comm_radius > 0.0, "topology.comm_radius must be positive");
  }
  if (topology.builder == "file") {
    std::ifstream probe(topology.path);
    require(static_cast<bool>(probe), "topology.path does not exist: " + topology.path);
  }
  require(workload.type == "synthetic" || workload.type == "trace",
          "workload.type must be synthetic|trace");
  if (workload.type == "trace") {
    std::ifstream probe(workload.trace_path);
    require(static_cast<bool>(probe),
            "workload.trace_path does not exist: " + workload.trace_path);
    require(workload.instruction_scale > 0.0, "workload.instruction_scale must be positive");
  } else {
    require(workload.instructions > 0.0 && workload.input_bits > 0.0 &&
                workload.output_bits > 0.0 && workload.cpi > 0.0 &&
                workload.deadline_ticks > 0,
            "workload fields must be positive");
    require(workload.jitter >= 0.0 && workload.jitter < 1.0, "workload.jitter in [0,1)");
  }
  require(reward.chi_wait >= 0.0 && reward.chi_comm >= 0.0 && reward.chi_exc >= 0.0 &&
              reward.chi_overload >= 0.0 && reward.task_utility >= 0.0,
          "reward weights must be non-negative");
  require(reward.overload_eps > 0.0, "reward.overload_eps must be positive");
  require(ppo.gamma >= 0.0 && ppo.gamma < 1.0, "ppo.gamma in [0,1)");
  require(ppo.gae_lambda >= 0.0 && ppo.gae_lambda <= 1.0, "ppo.gae_lambda in [0,1]");
  require(ppo.clip_eps > 0.0, "ppo.clip_eps must be positive");
  require(ppo.lr_actor > 0.0 && ppo.lr_critic > 0.0, "ppo learning rates positive");
  require(ppo.c1 >= 0.0 && ppo.c2 >= 0.0 && ppo.mu >= 0.0, "ppo coefficients non-negative");
  require(ppo.epochs > 0 && ppo.minibatch > 0 && ppo.horizon > 0,
          "ppo epochs/minibatch/horizon positive");
  require(dqn.gamma >= 0.0 && dqn.gamma < 1.0, "dqn.gamma in [0,1)");
  require(dqn.replay_capacity > 0 && dqn.target_sync_period > 0 && dqn.minibatch > 0,
          "dqn structural parameters positive");
  require(dqn.lr > 0.0, "dqn.lr positive");
  require(fed.buffer_threshold >= 0, "fed.buffer_threshold must be >= 0");
  require(fed.server_lr > 0.0, "fed.server_lr must be positive");
  require(share_period >= 0, "env.share_period must be >= 0");
  require(hop_limit >= 0, "env.hop_limit must be >= 0");
}

Topology build_topology(const TopologySpec& spec, std::uint64_t seed) {
  if (spec.builder == "cluster") {
    return build_cluster_topology(spec.n_clusters, spec.devices, spec.link);
  }
  if (spec.builder == "random") {
    Rng rng = Rng(seed).split(0x746f706fULL);
    return build_random_topology(spec.n_nodes, spec.area_w, spec.area_h,
                                 spec.comm_radius, spec.devices, spec.link, rng);
  }
  if (spec.builder == "file") {
    std::ifstream in(spec.path);
    if (!in) throw ConfigError("topology file: cannot open " + spec.path);
    std::stringstream buf;
    buf << in.rdbuf();
    return Topology::from_json(buf.str());
  }
  throw ConfigError("unknown topology builder '" + spec.builder + "'");
}

std::unique_ptr<WorkloadSource> build_workload(const WorkloadSpec& spec,
                                               double lambda_per_tick) {
  if (spec.type == "trace") {
    return std::make_unique<TraceWorkload>(
        load_trace(spec.trace_path, spec.instruction_scale));
  }
  SyntheticWorkload::Params p;
  p.lambda_per_tick = lambda_per_tick;
  p.instructions = spec.instructions;
  p.input_bits = spec.input_bits;
  p.output_bits = spec.output_bits;
  p.cpi = spec.cpi;
  p.deadline_ticks = spec.deadline_ticks;
  p.jitter = spec.jitter;
  return std::make_unique<SyntheticWorkload>(p);
}

NormRanges derive_norm_ranges(const Topology& topology, const WorkloadSpec& workload) {
  NormRanges r;
  r.queue_len = 1.0;
  r.cores = 1.0;
  r.freq = 1.0;
  r.tx_power = 1.0;
  for (const auto& n : topology.nodes()) {
    r.queue_len = std::max(r.queue_len, static_cast<double>(n.profile.queue_cap));
    r.cores = std::max(r.cores, static_cast<double>(n.profile.cores));
    r.freq = std::max(r.freq, n.profile.freq);
    r.tx_power = std::max(r.tx_power, n.profile.tx_power_dbm);
  }
  r.queue_cap = r.queue_len;
  if (workload.type == "trace") {
    double max_instr = 1.0, max_bits = 1.0, max_deadline = 1.0;
    for (const auto& e : load_trace(workload.trace_path, workload.instruction_scale)) {
      max_instr = std::max(max_instr, e.spec.instructions);
      max_bits = std::max(max_bits, std::max(e.spec.input_bits, e.spec.output_bits));
      max_deadline = std::max(max_deadline, static_cast<double>(e.spec.deadline_ticks));
    }
    r.instructions = max_instr;
    r.bits = max_bits;
    r.deadline = max_deadline;
  } else {
    r.instructions = workload.instructions * (1.0 + workload.jitter);
    r.bits = std::max(workload.input_bits, workload.output_bits) * (1.0 + workload.jitter);
    r.deadline = static_cast<double>(workload.deadline_ticks);
  }
  return r;
}

EnvConfig derive_env_config(const ExperimentConfig& cfg, const Topology& topology) {
  EnvConfig e;
  e.world.ticks_per_second = cfg.ticks_per_second;
  e.world.share_period = cfg.share_period;
  e.world.state_share_bits = cfg.state_share_bits;
  e.world.hop_limit = cfg.hop_limit;
  e.reward = cfg.reward;
  e.episode_length = cfg.steps_per_episode;
  e.norm = derive_norm_ranges(topology, cfg.workload);
  return e;
}

}  // namespace fauno
