#pragma once

#include <map>
#include <memory>
#include <string>

#include "fauno/config.hpp"
#include "fauno/env.hpp"
#include "fauno/metrics.hpp"

namespace fauno {

// Per-algorithm policy/learning loop plugged into the episode runner.
class PolicyDriver {
 public:
  virtual ~PolicyDriver() = default;
  virtual std::map<NodeId, Action> act(Env& env,
                                       const std::map<NodeId, Observation>& obs) = 0;
  virtual void post_step(Env& env, const std::map<NodeId, Observation>& prev,
                         const std::map<NodeId, Action>& actions,
                         const StepResult& result) {
    (void)env;
    (void)prev;
    (void)actions;
    (void)result;
  }
  virtual FedStats fed_stats() const { return {}; }
  virtual std::vector<AuditRecord> fed_audit() const { return {}; }
  virtual std::string checkpoint_json() const { return {}; }
};

std::unique_ptr<PolicyDriver> make_driver(const ExperimentConfig& cfg, Env& env,
                                          std::uint64_t seed);

// Derives the per-episode seed; identical (seed, episode) pairs replay the
// same workload stream for every algorithm.
std::uint64_t episode_seed(std::uint64_t run_seed, int episode);

// Runs the configured number of episodes with continuous (training-time)
// metric collection. If out_dir is non-empty, writes report.json,
// episodes.csv, long.csv, config.json, topology.json, plus event and
// federation logs when enabled.
MetricsReport run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                             const std::string& out_dir = {});

// Frozen-policy evaluation of a saved checkpoint bundle (no training).
MetricsReport evaluate_checkpoint(const ExperimentConfig& cfg,
                                  const std::string& checkpoint_path,
                                  std::uint64_t seed, int episodes,
                                  const std::string& out_dir = {});

}  // namespace fauno
