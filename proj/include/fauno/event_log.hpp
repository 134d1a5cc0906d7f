#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fauno/types.hpp"

namespace fauno {

enum class EventKind {
  kCreated,
  kEnqueued,
  kDropQueueFull,
  kDropDeadline,
  kOffloadSend,
  kOffloadArrive,
  kProcessDone,
  kCompleted,
  kEpisodeEnd,
};

const char* event_kind_name(EventKind k);

struct Event {
  Tick tick = 0;
  EventKind kind = EventKind::kCreated;
  TaskId task = -1;
  NodeId node = -1;
  // Kind-specific payload: offload target, response ticks for completions,
  // created-count for episode end.
  std::int64_t detail = 0;

  bool operator==(const Event&) const = default;
};

// One JSON object per line: {"tick":..,"kind":..,"task_id":..,"node":..,"detail":..}
std::string event_to_json(const Event& e);
std::string events_to_jsonl(const std::vector<Event>& events);

// FNV-1a over the serialized stream; used by the determinism checks.
std::uint64_t hash_events(const std::vector<Event>& events);

}  // namespace fauno
