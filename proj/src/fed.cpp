#include "fauno/fed.hpp"

#include <algorithm>
#include <sstream>

#include "fauno/errors.hpp"
#include "fauno/latency.hpp"

namespace fauno {

FlTransport::FlTransport(DelayFn delay) : delay_(std::move(delay)) {
  if (!delay_) throw InvalidArgumentError("fl transport: null delay function");
}

FlTransport::DelayFn FlTransport::multi_hop_delay(const Topology& topology,
                                                  double ticks_per_second) {
  return [&topology, ticks_per_second](NodeId src, NodeId dst, double bits) -> Tick {
    const auto path = topology.route_path(src, dst);
    Tick total = 0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const Link link = topology.link_between(path[i], path[i + 1]);
      total += comm_latency(bits, link, ticks_per_second);
    }
    return total;
  };
}

std::uint64_t FlTransport::register_update(NodeId src, NodeId dst, double bits,
                                           Tick now) {
  Pending p;
  p.id = next_id_++;
  p.dst = dst;
  p.ready_at = now + delay_(src, dst, bits);
  pending_.push_back(p);
  return p.id;
}

std::vector<std::uint64_t> FlTransport::poll_completed(NodeId dst, Tick now) {
  std::vector<std::uint64_t> done;
  auto keep = pending_.begin();
  for (auto it = pending_.begin(); it != pending_.end(); ++it) {
    if (it->dst == dst && it->ready_at <= now) {
      done.push_back(it->id);
    } else {
      *keep++ = *it;
    }
  }
  pending_.erase(keep, pending_.end());
  std::sort(done.begin(), done.end());  // registration order == id order
  return done;
}

const char* submit_outcome_name(SubmitOutcome o) {
  switch (o) {
    case SubmitOutcome::kStaged: return "staged";
    case SubmitOutcome::kReplacedOlder: return "replaced_older";
    case SubmitOutcome::kRejectedStale: return "rejected_stale";
    case SubmitOutcome::kIgnoredOlder: return "ignored_older";
  }
  return "?";
}

UpdateBuffer::UpdateBuffer(int threshold) : threshold_(threshold) {
  if (threshold < 1) throw InvalidArgumentError("update buffer: threshold must be >= 1");
}

SubmitOutcome submit_update(UpdateBuffer& buffer, FlUpdate upd, int current_version) {
  if (upd.steps < 1) throw ProtocolError("submit_update: steps must be >= 1");
  if (upd.delta.empty()) throw ProtocolError("submit_update: empty delta");
  if (upd.version < current_version) return SubmitOutcome::kRejectedStale;
  auto it = buffer.entries_.find(upd.agent_id);
  if (it == buffer.entries_.end()) {
    buffer.entries_.emplace(upd.agent_id, std::move(upd));
    return SubmitOutcome::kStaged;
  }
  if (upd.steps > it->second.steps) {
    it->second = std::move(upd);
    return SubmitOutcome::kReplacedOlder;
  }
  return SubmitOutcome::kIgnoredOlder;
}

std::map<NodeId, double> compute_coefficients(const UpdateBuffer& buffer) {
  if (buffer.count() == 0) {
    throw ContractViolation("compute_coefficients: empty buffer");
  }
  double total = 0.0;
  for (const auto& [agent, upd] : buffer.entries()) {
    total += static_cast<double>(upd.steps);
  }
  std::map<NodeId, double> out;
  for (const auto& [agent, upd] : buffer.entries()) {
    out[agent] = static_cast<double>(upd.steps) / total;
  }
  return out;
}

void aggregate(GlobalCritic& global, UpdateBuffer& buffer) {
  if (buffer.count() < buffer.threshold()) {
    throw ContractViolation("aggregate: buffer below threshold");
  }
  const auto coeffs = compute_coefficients(buffer);
  auto tensors = global.weights.tensors();
  for (const auto& [agent, upd] : buffer.entries()) {
    const double p = coeffs.at(agent) * global.server_lr;
    if (upd.delta.size() != tensors.size()) {
      throw ProtocolError("aggregate: delta tensor count mismatch");
    }
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      if (upd.delta[t].size() != tensors[t]->size()) {
        throw ProtocolError("aggregate: delta shape mismatch");
      }
      for (std::size_t j = 0; j < upd.delta[t].size(); ++j) {
        (*tensors[t])[j] += p * upd.delta[t][j];
      }
    }
  }
  global.version += 1;
  buffer.clear();
}

std::string audit_to_jsonl(const std::vector<AuditRecord>& records) {
  std::ostringstream out;
  for (const auto& r : records) {
    out << "{\"tick\":" << r.tick << ",\"event\":\"" << r.event << '"';
    if (r.agent >= 0) out << ",\"agent\":" << r.agent;
    out << ",\"version\":" << r.version << ",\"k\":" << r.k << "}\n";
  }
  return out.str();
}

GlobalManager::GlobalManager(const Topology& topology, GlobalCritic initial,
                             int threshold, FlTransport& transport)
    : topology_(&topology),
      manager_node_(topology.global_manager()),
      global_(std::move(initial)),
      buffer_(threshold),
      transport_(&transport),
      agent_nodes_(topology.agent_nodes()),
      critic_payload_bits_(payload_bits(global_.weights.param_count())) {}

void GlobalManager::submit_from_agent(NodeId agent, ModelDelta delta, int steps,
                                      int version, Tick now) {
  FlUpdate upd;
  upd.agent_id = agent;
  upd.delta = std::move(delta);
  upd.steps = steps;
  upd.version = version;
  double params = 0.0;
  for (const auto& t : upd.delta) params += static_cast<double>(t.size());
  upd.size_bits = payload_bits(static_cast<std::int64_t>(params));
  upd.submitted_tick = now;
  upd.update_id = transport_->register_update(agent, manager_node_, upd.size_bits, now);
  inflight_updates_.emplace(upd.update_id, std::move(upd));
}

void GlobalManager::on_tick(Tick now) {
  // The manager node may also host an agent; broadcasts addressed to that
  // agent can surface in this poll and are parked for poll_adoption().
  auto delivered = transport_->poll_completed(manager_node_, now);
  delivered.insert(delivered.end(), update_stash_.begin(), update_stash_.end());
  update_stash_.clear();
  for (std::uint64_t id : delivered) {
    auto it = inflight_updates_.find(id);
    if (it == inflight_updates_.end()) {
      if (inflight_broadcasts_.count(id)) broadcast_stash_[manager_node_].push_back(id);
      continue;
    }
    FlUpdate upd = std::move(it->second);
    inflight_updates_.erase(it);
    const NodeId agent = upd.agent_id;
    const auto outcome = submit_update(buffer_, std::move(upd), global_.version);
    switch (outcome) {
      case SubmitOutcome::kStaged:
        ++stats_.submissions;
        audit_.push_back({now, "submit", agent, global_.version, buffer_.count()});
        break;
      case SubmitOutcome::kReplacedOlder:
        ++stats_.replacements;
        audit_.push_back({now, "replace", agent, global_.version, buffer_.count()});
        break;
      case SubmitOutcome::kRejectedStale:
        ++stats_.rejections_stale;
        audit_.push_back({now, "reject_stale", agent, global_.version, buffer_.count()});
        break;
      case SubmitOutcome::kIgnoredOlder:
        break;
    }
    if (buffer_.count() >= buffer_.threshold()) {
      aggregate(global_, buffer_);
      ++stats_.aggregations;
      audit_.push_back({now, "aggregate", -1, global_.version, buffer_.count()});
      broadcast(now);
    }
  }
}

void GlobalManager::broadcast(Tick now) {
  auto snapshot = std::make_shared<const Mlp>(global_.weights);
  for (NodeId agent : agent_nodes_) {
    const std::uint64_t id =
        transport_->register_update(manager_node_, agent, critic_payload_bits_, now);
    inflight_broadcasts_.emplace(id, BroadcastPayload{snapshot, global_.version});
  }
  ++stats_.broadcasts;
  audit_.push_back({now, "broadcast", -1, global_.version, buffer_.count()});
}

std::optional<std::pair<Mlp, int>> GlobalManager::poll_adoption(NodeId agent, Tick now) {
  auto delivered = transport_->poll_completed(agent, now);
  if (auto stashed = broadcast_stash_.find(agent); stashed != broadcast_stash_.end()) {
    delivered.insert(delivered.end(), stashed->second.begin(), stashed->second.end());
    broadcast_stash_.erase(stashed);
  }
  std::optional<BroadcastPayload> best;
  for (std::uint64_t id : delivered) {
    auto it = inflight_broadcasts_.find(id);
    if (it == inflight_broadcasts_.end()) {
      if (inflight_updates_.count(id)) update_stash_.push_back(id);
      continue;
    }
    if (!best || it->second.version > best->version) best = it->second;
    inflight_broadcasts_.erase(it);
  }
  if (!best) return std::nullopt;
  audit_.push_back({now, "adopt", agent, best->version, buffer_.count()});
  return std::make_pair(*best->weights, best->version);
}

}  // namespace fauno
