#pragma once

#include <array>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "agentflow/errors.hpp"
#include "agentflow/types.hpp"

namespace agentflow {

using Json = nlohmann::ordered_json;

enum class EventKind : std::uint8_t {
  RunStart,
  RunEnd,
  Traffic,
  Publish,
  Deliver,
  Drop,
  Discard,
  HandlerStart,
  HandlerEnd,
  AgentSpawned,
  AgentTerminated,
  AgentFailed,
  MalformedRequest,
  RequestSent,
  RequestRetry,
  RequestSucceeded,
  RequestTimedOut,
  DuplicateResponse,
  RoundOpen,
  Decide,
  Reelect,
  LateRank,
  Suspect,
  Dispatch,
  DispatchTimeout,
  NoService,
  TaskCreated,
  TaskAssigned,
  TaskStarted,
  TaskCompleted,
  TaskOrphaned,
  TaskTimedOut,
};

inline constexpr std::array<std::string_view, 32> kEventKindNames = {
    "run_start",         "run_end",          "traffic",        "publish",
    "deliver",           "drop",             "discard",        "handler_start",
    "handler_end",       "agent_spawned",    "agent_terminated", "agent_failed",
    "malformed_request", "request_sent",     "request_retry",  "request_succeeded",
    "request_timed_out", "duplicate_response", "round_open",   "decide",
    "reelect",           "late_rank",        "suspect",        "dispatch",
    "dispatch_timeout",  "no_service",       "task_created",   "task_assigned",
    "task_started",      "task_completed",   "task_orphaned",  "task_timed_out",
};

inline std::string_view to_string(EventKind k) {
  return kEventKindNames[static_cast<std::size_t>(k)];
}

inline EventKind event_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kEventKindNames.size(); ++i)
    if (kEventKindNames[i] == name) return static_cast<EventKind>(i);
  throw CorruptLog("unknown event kind '" + std::string(name) + "'");
}

/// One line of the event log. Empty string fields are omitted on output.
struct LogRecord {
  Tick tick = 0;
  EventKind kind = EventKind::Publish;
  std::string agent;
  std::string topic;
  std::string task;
  std::string round;
  Json detail;

  Json to_json() const {
    Json j;
    j["tick"] = tick;
    j["kind"] = to_string(kind);
    j["agent"] = agent;
    if (!topic.empty()) j["topic"] = topic;
    if (!task.empty()) j["task"] = task;
    if (!round.empty()) j["round"] = round;
    j["detail"] = detail.is_null() ? Json::object() : detail;
    return j;
  }

  static LogRecord from_json(const Json& j) {
    try {
      LogRecord r;
      r.tick = j.at("tick").get<Tick>();
      r.kind = event_kind_from_string(j.at("kind").get<std::string>());
      r.agent = j.at("agent").get<std::string>();
      if (j.contains("topic")) r.topic = j["topic"].get<std::string>();
      if (j.contains("task")) r.task = j["task"].get<std::string>();
      if (j.contains("round")) r.round = j["round"].get<std::string>();
      r.detail = j.at("detail");
      if (!r.detail.is_object()) throw CorruptLog("detail must be an object");
      return r;
    } catch (const Json::exception& e) {
      throw CorruptLog(std::string("bad log record: ") + e.what());
    }
  }
};

enum class TraceLevel {
  /// Coordination traffic and lifecycle records; telemetry and handler
  /// boundaries are only counted.
  Coordination,
  /// Everything, including heartbeat traffic and handler start/end pairs.
  Full,
};

/// Append-only event log shared by every layer of a run.
class EventLog {
 public:
  using Listener = std::function<void(const LogRecord&)>;

  explicit EventLog(TraceLevel level = TraceLevel::Coordination) : level_(level) {}

  TraceLevel level() const noexcept { return level_; }
  bool full() const noexcept { return level_ == TraceLevel::Full; }

  void append(LogRecord record) {
    for (auto& l : listeners_) l(record);
    records_.push_back(std::move(record));
  }

  void add_listener(Listener l) { listeners_.push_back(std::move(l)); }
  void clear_listeners() { listeners_.clear(); }

  const std::vector<LogRecord>& records() const noexcept { return records_; }
  std::vector<LogRecord>& records() noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  void write_jsonl(std::ostream& os) const {
    for (const auto& r : records_) os << r.to_json().dump() << '\n';
  }

  std::string to_jsonl() const {
    std::string out;
    for (const auto& r : records_) {
      out += r.to_json().dump();
      out += '\n';
    }
    return out;
  }

  /// Parses line-delimited JSON. Throws CorruptLog with the line number.
  static EventLog read_jsonl(std::istream& is) {
    EventLog log(TraceLevel::Full);
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
      ++n;
      if (line.empty()) continue;
      Json j = Json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object())
        throw CorruptLog("line " + std::to_string(n) + ": not a JSON object");
      try {
        log.records_.push_back(LogRecord::from_json(j));
      } catch (const CorruptLog& e) {
        throw CorruptLog("line " + std::to_string(n) + ": " + e.what());
      }
    }
    return log;
  }

 private:
  TraceLevel level_;
  std::vector<LogRecord> records_;
  std::vector<Listener> listeners_;
};

}  // namespace agentflow
