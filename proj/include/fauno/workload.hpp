#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fauno/rng.hpp"
#include "fauno/types.hpp"

namespace fauno {

struct TaskSpec {
  double instructions = 0.0;
  double input_bits = 0.0;
  double output_bits = 0.0;
  double cpi = 1.0;
  Tick deadline_ticks = 0;
};

// Produces the task specs arriving at a client on a given tick. The draw
// consumes only the passed rng, so identical seeds give identical streams
// regardless of what the agents do.
class WorkloadSource {
 public:
  virtual ~WorkloadSource() = default;
  virtual std::vector<TaskSpec> draw(NodeId client, Tick tick, Rng& rng) = 0;
  virtual std::unique_ptr<WorkloadSource> clone() const = 0;
};

// Poisson(lambda) arrivals per client per tick; task shapes jittered
// uniformly around the base values.
class SyntheticWorkload : public WorkloadSource {
 public:
  struct Params {
    double lambda_per_tick = 1.0;
    double instructions = 8.0e7;
    double input_bits = 1.2e9;
    double output_bits = 1.2e9;
    double cpi = 1.0;
    Tick deadline_ticks = 1000;
    double jitter = 0.2;  // relative, uniform in [1-j, 1+j]
  };

  explicit SyntheticWorkload(Params params);
  std::vector<TaskSpec> draw(NodeId client, Tick tick, Rng& rng) override;
  std::unique_ptr<WorkloadSource> clone() const override;
  const Params& params() const { return params_; }

 private:
  Params params_;
};

struct TraceEntry {
  Tick arrival_tick = 0;
  NodeId client_id = -1;
  TaskSpec spec;
};

// Replays a fixed arrival schedule. Entries must be sorted by arrival tick.
class TraceWorkload : public WorkloadSource {
 public:
  explicit TraceWorkload(std::vector<TraceEntry> entries);
  std::vector<TaskSpec> draw(NodeId client, Tick tick, Rng& rng) override;
  std::unique_ptr<WorkloadSource> clone() const override;
  const std::vector<TraceEntry>& entries() const { return entries_; }

 private:
  std::vector<TraceEntry> entries_;
};

// Parses the trace CSV (header: arrival_tick,client_id,instructions,
// input_bits,output_bits,cpi,deadline_ticks) and rescales instruction
// counts by instruction_scale. Schema violations report the line number.
std::vector<TraceEntry> load_trace(const std::string& path, double instruction_scale);
std::vector<TraceEntry> parse_trace(const std::string& text, double instruction_scale);

}  // namespace fauno
