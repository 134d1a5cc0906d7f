#include "fauno/event_log.hpp"

#include <sstream>

namespace fauno {

const char* task_status_name(TaskStatus s) {
  switch (s) {
    case TaskStatus::kCreated: return "created";
    case TaskStatus::kQueued: return "queued";
    case TaskStatus::kInTransit: return "in_transit";
    case TaskStatus::kProcessing: return "processing";
    case TaskStatus::kCompleted: return "completed";
    case TaskStatus::kDroppedQueueFull: return "dropped_queue_full";
    case TaskStatus::kDroppedDeadline: return "dropped_deadline";
  }
  return "?";
}

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::kCreated: return "created";
    case EventKind::kEnqueued: return "enqueued";
    case EventKind::kDropQueueFull: return "drop_queue_full";
    case EventKind::kDropDeadline: return "drop_deadline";
    case EventKind::kOffloadSend: return "offload_send";
    case EventKind::kOffloadArrive: return "offload_arrive";
    case EventKind::kProcessDone: return "process_done";
    case EventKind::kCompleted: return "completed";
    case EventKind::kEpisodeEnd: return "episode_end";
  }
  return "?";
}

std::string event_to_json(const Event& e) {
  std::ostringstream out;
  out << "{\"tick\":" << e.tick << ",\"kind\":\"" << event_kind_name(e.kind) << '"';
  if (e.task >= 0) out << ",\"task_id\":" << e.task;
  out << ",\"node\":" << e.node << ",\"detail\":" << e.detail << '}';
  return out.str();
}

std::string events_to_jsonl(const std::vector<Event>& events) {
  std::ostringstream out;
  for (const auto& e : events) out << event_to_json(e) << '\n';
  return out.str();
}

std::uint64_t hash_events(const std::vector<Event>& events) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::int64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffULL;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& e : events) {
    mix(e.tick);
    mix(static_cast<std::int64_t>(e.kind));
    mix(e.task);
    mix(e.node);
    mix(e.detail);
  }
  return h;
}

}  // namespace fauno
