#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fauno/baselines.hpp"
#include "fauno/env.hpp"
#include "fauno/ppo.hpp"
#include "fauno/topology.hpp"
#include "fauno/workload.hpp"

namespace fauno {

enum class AlgorithmKind { kFauno, kLeastQueue, kScof, kRandom };
const char* algorithm_name(AlgorithmKind a);
AlgorithmKind algorithm_from_name(const std::string& name);

struct TopologySpec {
  std::string builder = "cluster";  // cluster | random | file
  int n_clusters = 2;
  int n_nodes = 10;
  double area_w = 100.0;
  double area_h = 100.0;
  double comm_radius = 40.0;
  std::string path;  // builder == file
  LinkDefaults link;
  DeviceCatalog devices;

  std::string label() const;
};

struct WorkloadSpec {
  std::string type = "synthetic";  // synthetic | trace
  // synthetic defaults follow the experimental parameter table; sizes are in
  // bits (the table's Mbyte figures are unit-ambiguous, so configs say bits).
  double instructions = 8.0e7;
  double input_bits = 1.2e9;
  double output_bits = 1.2e9;
  double cpi = 1.0;
  Tick deadline_ticks = 1000;
  double jitter = 0.2;
  std::string trace_path;
  double instruction_scale = 0.1;
};

struct FedSpec {
  bool enabled = true;
  int buffer_threshold = 0;  // 0 -> ceil(m/2)
  double server_lr = 1.0;
};

struct OutputSpec {
  bool log_events = false;
  bool save_checkpoints = false;
  int checkpoint_interval_steps = 1500;
};

struct ExperimentConfig {
  AlgorithmKind algorithm = AlgorithmKind::kFauno;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int episodes = 40;
  int steps_per_episode = 150;
  double ticks_per_second = 10.0;
  double lambda_per_tick = 1.0;
  TopologySpec topology;
  WorkloadSpec workload;
  RewardWeights reward;
  int share_period = 1;
  double state_share_bits = 1024.0;
  int hop_limit = 4;
  PpoConfig ppo;
  DqnConfig dqn;
  FedSpec fed;
  OutputSpec output;

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
  std::string to_json_text() const;
  void validate() const;
};

Topology build_topology(const TopologySpec& spec, std::uint64_t seed);
std::unique_ptr<WorkloadSource> build_workload(const WorkloadSpec& spec,
                                               double lambda_per_tick);
NormRanges derive_norm_ranges(const Topology& topology, const WorkloadSpec& workload);
EnvConfig derive_env_config(const ExperimentConfig& cfg, const Topology& topology);

}  // namespace fauno
