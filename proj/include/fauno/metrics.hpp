#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fauno/event_log.hpp"
#include "fauno/fed.hpp"
#include "fauno/types.hpp"

namespace fauno {

struct EpisodeMetrics {
  int episode = 0;
  std::int64_t created = 0;
  std::int64_t completed = 0;
  std::int64_t drops_queue = 0;
  std::int64_t drops_deadline = 0;
  double finished_ratio = 0.0;
  std::optional<double> avg_response_ticks;
  std::map<NodeId, double> mean_reward_per_agent;

  std::string to_json() const;
};

struct Aggregate {
  double mean = 0.0;
  double stdev = 0.0;
  int n = 0;
};
Aggregate aggregate_of(const std::vector<double>& xs);

struct MetricsReport {
  std::string algorithm;
  std::string topology_label;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::vector<EpisodeMetrics> episodes;

  std::int64_t total_created = 0;
  std::int64_t total_completed = 0;
  std::int64_t total_drops_queue = 0;
  std::int64_t total_drops_deadline = 0;
  Aggregate finished_ratio;   // across episodes
  Aggregate avg_response;     // across episodes with completions
  double mean_reward = 0.0;   // across agents and episodes
  FedStats fed;

  void finalize();  // fills aggregates from the episode list

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
  std::string episodes_csv() const;   // documented column layout
  std::string long_format_csv() const;  // episode,metric,value
};

// Derives one episode's counts from its event stream. The stream must end
// with an episode_end record whose detail equals the created count; anything
// else is treated as a truncated log.
EpisodeMetrics compute_metrics(const std::vector<Event>& events);

// mean +/- std table over multiple runs, grouped algorithm x topology x lambda.
std::string render_table(const std::vector<MetricsReport>& reports);

}  // namespace fauno
