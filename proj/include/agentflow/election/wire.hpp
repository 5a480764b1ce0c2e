#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "agentflow/errors.hpp"
#include "agentflow/types.hpp"

namespace agentflow::election {

// Text encodings of the coordination messages. Fields are separated by one
// space; doubles use the shortest round-trip form so every receiver sees
// bit-identical load values.

inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw MalformedRequest("bad number '" + std::string(s) + "'");
  return v;
}

inline int parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw MalformedRequest("bad integer '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  while (!s.empty()) {
    auto pos = s.find(' ');
    out.push_back(s.substr(0, pos));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

/// A unit of work: "<task> <work_units>".
struct WorkOrder {
  TaskId task;
  double work = 1.0;

  std::string encode() const { return task.str() + ' ' + format_double(work); }

  static WorkOrder decode(std::string_view s) {
    auto f = split_fields(s);
    if (f.size() != 2 || f[0].empty()) throw MalformedRequest("bad work order '" + std::string(s) + "'");
    return {TaskId(f[0]), parse_double(f[1])};
  }
};

/// "<task>.g<generation>": unique per task and election generation, and a
/// valid topic segment so it can serve as a courier correlation.
inline RoundId make_round_id(const TaskId& task, int generation) {
  return RoundId(task.str() + ".g" + std::to_string(generation));
}

/// Rank announcement on "election/<task>/rank":
///   "<generation> <task> <work> <client-reply-topic|-> <client-corr|-> <candidate|-> <value|->"
/// A '-' candidate is an abstention (the publisher has no live candidate).
struct RankNotice {
  int generation = 0;
  WorkOrder order;
  std::string reply_topic;  // empty for re-elections with no client waiting
  std::string correlation;
  std::optional<AgentId> candidate;
  double value = 0.0;

  std::string encode() const {
    std::string s = std::to_string(generation);
    s += ' ';
    s += order.task.str();
    s += ' ';
    s += format_double(order.work);
    s += ' ';
    s += reply_topic.empty() ? "-" : reply_topic;
    s += ' ';
    s += correlation.empty() ? "-" : correlation;
    s += ' ';
    if (candidate) {
      s += candidate->str();
      s += ' ';
      s += format_double(value);
    } else {
      s += "- -";
    }
    return s;
  }

  static RankNotice decode(std::string_view s) {
    auto f = split_fields(s);
    if (f.size() != 7) throw MalformedRequest("bad rank notice '" + std::string(s) + "'");
    RankNotice n;
    n.generation = parse_int(f[0]);
    n.order.task = TaskId(f[1]);
    n.order.work = parse_double(f[2]);
    if (f[3] != "-") n.reply_topic = std::string(f[3]);
    if (f[4] != "-") n.correlation = std::string(f[4]);
    if (f[5] != "-") {
      n.candidate = AgentId(f[5]);
      n.value = parse_double(f[6]);
    }
    return n;
  }
};

inline std::string rank_topic(const TaskId& task) { return "election/" + task.str() + "/rank"; }
inline std::string result_topic(const TaskId& task) { return "election/" + task.str() + "/result"; }
inline std::string service_request_topic(const AgentId& service) {
  return "service/" + service.str() + "/req";
}

}  // namespace agentflow::election
