#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "agentflow/errors.hpp"
#include "agentflow/types.hpp"

namespace agentflow {

/// Link behaviour of the simulated transport.
struct NetworkModel {
  Tick latency_lo = 1;
  Tick latency_hi = 10;
  double drop_probability = 0.0;
  /// Disjoint groups of node ids. A message whose sender and receiver sit in
  /// different groups is dropped; ungrouped nodes reach everyone.
  std::vector<std::vector<AgentId>> partitions;

  void validate() const {
    if (latency_lo < 0 || latency_hi < latency_lo)
      throw InvalidNetworkModel("latency range must satisfy 0 <= lo <= hi");
    if (!(drop_probability >= 0.0 && drop_probability <= 1.0))
      throw InvalidNetworkModel("drop_probability must lie in [0, 1]");
    std::map<AgentId, std::size_t> seen;
    for (std::size_t g = 0; g < partitions.size(); ++g) {
      for (const auto& id : partitions[g]) {
        auto [it, fresh] = seen.emplace(id, g);
        if (!fresh && it->second != g)
          throw InvalidNetworkModel("node '" + id.str() + "' appears in two partition groups");
      }
    }
  }
};

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s,
                                     std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Maps a 64-bit hash to [0, 1).
inline double unit_interval(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Counter-based sampler: every (message, receiver) link draws its latency
/// and loss from a hash of its identity, so a draw never depends on how many
/// other messages were sampled before it.
class LinkSampler {
 public:
  LinkSampler() = default;
  LinkSampler(std::uint64_t seed, NetworkModel model) : seed_(seed), model_(std::move(model)) {
    model_.validate();
    for (std::size_t g = 0; g < model_.partitions.size(); ++g)
      for (const auto& id : model_.partitions[g]) group_.emplace(id, g);
  }

  const NetworkModel& model() const noexcept { return model_; }

  /// Identity of one publish; combined with each receiver when sampling.
  std::uint64_t message_key(const AgentId& sender, std::string_view topic, Tick sent_at,
                            std::string_view payload) const noexcept {
    std::uint64_t h = detail::fnv1a(sender.str(), seed_ ^ 0x5bd1e995ULL);
    h = detail::fnv1a(topic, detail::splitmix64(h));
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(sent_at));
    return detail::fnv1a(payload, h);
  }

  bool reachable(const AgentId& from, const AgentId& to) const {
    if (group_.empty()) return true;
    auto a = group_.find(from);
    auto b = group_.find(to);
    if (a == group_.end() || b == group_.end()) return true;
    return a->second == b->second;
  }

  bool dropped(std::uint64_t message_key, const AgentId& receiver) const noexcept {
    if (model_.drop_probability <= 0.0) return false;
    if (model_.drop_probability >= 1.0) return true;
    auto h = detail::splitmix64(detail::fnv1a(receiver.str(), message_key ^ 0xd1b54a32d192ed03ULL));
    return detail::unit_interval(h) < model_.drop_probability;
  }

  Tick latency(std::uint64_t message_key, const AgentId& receiver) const noexcept {
    auto span = static_cast<std::uint64_t>(model_.latency_hi - model_.latency_lo) + 1;
    if (span == 1) return model_.latency_lo;
    auto h = detail::splitmix64(detail::fnv1a(receiver.str(), message_key));
    auto offset = static_cast<Tick>(detail::unit_interval(h) * static_cast<double>(span));
    return model_.latency_lo + offset;
  }

 private:
  std::uint64_t seed_ = 0;
  NetworkModel model_;
  std::map<AgentId, std::size_t> group_;
};

}  // namespace agentflow
