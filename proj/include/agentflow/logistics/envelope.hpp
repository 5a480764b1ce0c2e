#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "agentflow/errors.hpp"
#include "agentflow/messaging/topic.hpp"
#include "agentflow/types.hpp"

namespace agentflow::logistics {

/// Request payload wrapper. Wire layout, version 1:
///
///   byte 0        : 0x01 (format version)
///   then 3 fields : reply_topic, correlation, body
///                   each as a big-endian uint32 length followed by the bytes
///
/// Nothing may follow the third field.
struct Envelope {
  static constexpr std::uint8_t kVersion = 0x01;

  std::string reply_topic;
  std::string correlation;
  std::string body;
};

namespace detail {

inline void put_field(std::string& out, std::string_view field) {
  auto n = static_cast<std::uint32_t>(field.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out.append(field);
}

inline std::string_view take_field(std::string_view& in) {
  if (in.size() < 4) throw MalformedRequest("truncated envelope length");
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<unsigned char>(in[static_cast<std::size_t>(i)]);
  in.remove_prefix(4);
  if (in.size() < n) throw MalformedRequest("truncated envelope field");
  auto field = in.substr(0, n);
  in.remove_prefix(n);
  return field;
}

}  // namespace detail

inline std::string encode(const Envelope& env) {
  std::string out;
  out.reserve(13 + env.reply_topic.size() + env.correlation.size() + env.body.size());
  out.push_back(static_cast<char>(Envelope::kVersion));
  detail::put_field(out, env.reply_topic);
  detail::put_field(out, env.correlation);
  detail::put_field(out, env.body);
  return out;
}

/// Throws MalformedRequest on a bad version, truncation, trailing bytes, a
/// missing correlation, or a reply topic that is not a publishable topic.
inline Envelope decode(std::string_view bytes) {
  if (bytes.empty()) throw MalformedRequest("empty envelope");
  if (static_cast<std::uint8_t>(bytes.front()) != Envelope::kVersion)
    throw MalformedRequest("unsupported envelope version");
  bytes.remove_prefix(1);
  Envelope env;
  env.reply_topic = std::string(detail::take_field(bytes));
  env.correlation = std::string(detail::take_field(bytes));
  env.body = std::string(detail::take_field(bytes));
  if (!bytes.empty()) throw MalformedRequest("trailing bytes after envelope");
  if (env.correlation.empty()) throw MalformedRequest("request has no correlation");
  if (env.reply_topic.empty()) throw MalformedRequest("request has no reply topic");
  try {
    (void)TopicName::topic(env.reply_topic);
  } catch (const InvalidTopic& e) {
    throw MalformedRequest(std::string("bad reply topic: ") + e.what());
  }
  return env;
}

/// The client-to-channel mapping: "reply/<client>/<correlation>". Both ids
/// must be single topic segments, which makes the mapping injective.
inline TopicName make_reply_topic(const AgentId& client, const CorrelationId& correlation) {
  if (!TopicName::valid_segment(client.str()))
    throw InvalidTopic("client id is not a topic segment: '" + client.str() + "'");
  if (!TopicName::valid_segment(correlation.str()))
    throw InvalidTopic("correlation is not a topic segment: '" + correlation.str() + "'");
  std::string t;
  t.reserve(7 + client.str().size() + correlation.str().size());
  t.append("reply/").append(client.str()).push_back('/');
  t.append(correlation.str());
  return TopicName::topic(t);
}

/// Splits a reply topic back into (client, correlation); false if `topic`
/// does not have the reply shape.
inline bool parse_reply_topic(std::string_view topic, std::string_view& client,
                              std::string_view& correlation) {
  constexpr std::string_view kPrefix = "reply/";
  if (topic.substr(0, kPrefix.size()) != kPrefix) return false;
  topic.remove_prefix(kPrefix.size());
  auto slash = topic.find('/');
  if (slash == std::string_view::npos || slash == 0) return false;
  client = topic.substr(0, slash);
  correlation = topic.substr(slash + 1);
  return !correlation.empty() && correlation.find('/') == std::string_view::npos;
}

}  // namespace agentflow::logistics
