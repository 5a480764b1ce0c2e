#pragma once

#include <cctype>
#include <compare>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "agentflow/errors.hpp"

namespace agentflow {

/// '/'-separated topic. Publish topics are wildcard-free; subscription
/// filters may end in a single trailing multi-level wildcard segment "#".
class TopicName {
 public:
  static constexpr char kSeparator = '/';
  static constexpr std::string_view kWildcard = "#";

  TopicName() = default;

  /// Parses a concrete (publishable) topic. Throws InvalidTopic.
  static TopicName topic(std::string_view text) { return TopicName(text, false); }

  /// Parses a subscription filter, exact or trailing-'#'. Throws InvalidTopic.
  static TopicName filter(std::string_view text) { return TopicName(text, true); }

  const std::string& str() const noexcept { return value_; }
  bool wildcard() const noexcept { return wildcard_; }
  bool empty() const noexcept { return value_.empty(); }

  /// For a wildcard filter "a/b/#" this is "a/b"; otherwise the whole topic.
  std::string_view prefix() const noexcept {
    if (!wildcard_) return value_;
    if (value_.size() == 1) return {};
    return std::string_view(value_).substr(0, value_.size() - 2);
  }

  std::vector<std::string_view> segments() const {
    std::vector<std::string_view> out;
    std::string_view rest = value_;
    while (true) {
      auto pos = rest.find(kSeparator);
      out.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    return out;
  }

  friend bool operator==(const TopicName& a, const TopicName& b) noexcept {
    return a.value_ == b.value_;
  }
  friend auto operator<=>(const TopicName& a, const TopicName& b) noexcept {
    return a.value_ <=> b.value_;
  }

  /// True when `segment` is usable as a single topic segment.
  static bool valid_segment(std::string_view segment) noexcept {
    if (segment.empty()) return false;
    for (char c : segment) {
      if (c == kSeparator || c == '#') return false;
      if (std::isspace(static_cast<unsigned char>(c)) || std::iscntrl(static_cast<unsigned char>(c)))
        return false;
    }
    return true;
  }

 private:
  TopicName(std::string_view text, bool allow_wildcard) : value_(text) {
    if (text.empty()) throw InvalidTopic("empty topic");
    std::string_view rest = text;
    while (true) {
      auto pos = rest.find(kSeparator);
      auto seg = rest.substr(0, pos);
      bool last = pos == std::string_view::npos;
      if (seg == kWildcard) {
        if (!allow_wildcard) throw InvalidTopic("wildcard in publish topic: " + value_);
        if (!last) throw InvalidTopic("wildcard must be the trailing segment: " + value_);
        wildcard_ = true;
      } else if (!valid_segment(seg)) {
        throw InvalidTopic("malformed topic: '" + value_ + "'");
      }
      if (last) break;
      rest.remove_prefix(pos + 1);
    }
  }

  std::string value_;
  bool wildcard_ = false;
};

/// Exact segment equality, or a trailing '#' filter whose prior segments
/// equal the topic's first segments and the topic has at least one more.
inline bool match_filter(const TopicName& filter, const TopicName& topic) {
  if (!filter.wildcard()) return filter.str() == topic.str();
  auto prefix = filter.prefix();
  const std::string& t = topic.str();
  if (prefix.empty()) return !t.empty();
  return t.size() > prefix.size() + 1 && t.compare(0, prefix.size(), prefix) == 0 &&
         t[prefix.size()] == TopicName::kSeparator;
}

}  // namespace agentflow

template <>
struct std::hash<agentflow::TopicName> {
  std::size_t operator()(const agentflow::TopicName& t) const noexcept {
    return std::hash<std::string>{}(t.str());
  }
};
