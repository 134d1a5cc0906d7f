#include "fauno/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fauno/errors.hpp"

namespace fauno {

SyntheticWorkload::SyntheticWorkload(Params params) : params_(params) {
  if (params_.lambda_per_tick <= 0.0) {
    throw ConfigError("synthetic workload: lambda must be positive");
  }
  if (params_.instructions <= 0.0 || params_.input_bits <= 0.0 ||
      params_.output_bits <= 0.0 || params_.cpi <= 0.0 ||
      params_.deadline_ticks <= 0) {
    throw ConfigError("synthetic workload: task fields must be positive");
  }
  if (params_.jitter < 0.0 || params_.jitter >= 1.0) {
    throw ConfigError("synthetic workload: jitter must be in [0, 1)");
  }
}

std::vector<TaskSpec> SyntheticWorkload::draw(NodeId, Tick, Rng& rng) {
  const int count = rng.poisson(params_.lambda_per_tick);
  std::vector<TaskSpec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    TaskSpec t;
    const double j = params_.jitter;
    t.instructions = params_.instructions * rng.uniform(1.0 - j, 1.0 + j);
    t.input_bits = params_.input_bits * rng.uniform(1.0 - j, 1.0 + j);
    t.output_bits = params_.output_bits * rng.uniform(1.0 - j, 1.0 + j);
    t.cpi = params_.cpi;
    t.deadline_ticks = params_.deadline_ticks;
    out.push_back(t);
  }
  return out;
}

std::unique_ptr<WorkloadSource> SyntheticWorkload::clone() const {
  return std::make_unique<SyntheticWorkload>(params_);
}

TraceWorkload::TraceWorkload(std::vector<TraceEntry> entries)
    : entries_(std::move(entries)) {}

std::vector<TaskSpec> TraceWorkload::draw(NodeId client, Tick tick, Rng&) {
  // Entries are sorted by arrival tick; linear scan with a lower bound.
  std::vector<TaskSpec> out;
  auto it = std::lower_bound(entries_.begin(), entries_.end(), tick,
                             [](const TraceEntry& e, Tick t) { return e.arrival_tick < t; });
  for (; it != entries_.end() && it->arrival_tick == tick; ++it) {
    if (it->client_id == client) out.push_back(it->spec);
  }
  return out;
}

std::unique_ptr<WorkloadSource> TraceWorkload::clone() const {
  return std::make_unique<TraceWorkload>(entries_);
}

namespace {

double parse_field(const std::string& field, int line_no, const char* name) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(field, &pos);
    if (pos != field.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw IngestionError("trace line " + std::to_string(line_no) + ": bad " +
                         name + " value '" + field + "'");
  }
}

}  // namespace

std::vector<TraceEntry> parse_trace(const std::string& text, double instruction_scale) {
  if (instruction_scale <= 0.0) {
    throw InvalidArgumentError("load_trace: instruction_scale must be positive");
  }
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw IngestionError("trace: empty file");
  ++line_no;
  if (line.back() == '\r') line.pop_back();
  const std::string expected =
      "arrival_tick,client_id,instructions,input_bits,output_bits,cpi,deadline_ticks";
  if (line != expected) {
    throw IngestionError("trace line 1: header mismatch, expected '" + expected + "'");
  }
  std::vector<TraceEntry> entries;
  Tick last_tick = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 7) {
      throw IngestionError("trace line " + std::to_string(line_no) +
                           ": expected 7 fields, got " + std::to_string(fields.size()));
    }
    TraceEntry e;
    e.arrival_tick = static_cast<Tick>(parse_field(fields[0], line_no, "arrival_tick"));
    e.client_id = static_cast<NodeId>(parse_field(fields[1], line_no, "client_id"));
    e.spec.instructions =
        parse_field(fields[2], line_no, "instructions") * instruction_scale;
    e.spec.input_bits = parse_field(fields[3], line_no, "input_bits");
    e.spec.output_bits = parse_field(fields[4], line_no, "output_bits");
    e.spec.cpi = parse_field(fields[5], line_no, "cpi");
    e.spec.deadline_ticks =
        static_cast<Tick>(parse_field(fields[6], line_no, "deadline_ticks"));
    if (e.arrival_tick < last_tick) {
      throw IngestionError("trace line " + std::to_string(line_no) +
                           ": arrival ticks out of order");
    }
    if (e.spec.instructions <= 0.0 || e.spec.input_bits <= 0.0 ||
        e.spec.output_bits <= 0.0 || e.spec.cpi <= 0.0 || e.spec.deadline_ticks <= 0) {
      throw IngestionError("trace line " + std::to_string(line_no) +
                           ": non-positive task field");
    }
    last_tick = e.arrival_tick;
    entries.push_back(e);
  }
  return entries;
}

std::vector<TraceEntry> load_trace(const std::string& path, double instruction_scale) {
  std::ifstream in(path);
  if (!in) throw IngestionError("load_trace: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str(), instruction_scale);
}

}  // namespace fauno
