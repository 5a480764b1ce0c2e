#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "agentflow/messaging/network.hpp"
#include "agentflow/sim/config.hpp"

namespace agentflow::sim {

// Independent random streams derived from the run seed. Each purpose has its
// own stream so that, e.g., changing the failure fraction leaves the task
// arrivals untouched.
enum class Stream : std::uint64_t { Arrivals = 1, Clients = 2, Controllers = 3, Edges = 4, Times = 5 };

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream s) {
  std::uint64_t k = agentflow::detail::splitmix64(seed ^ agentflow::detail::splitmix64(static_cast<std::uint64_t>(s)));
  return std::mt19937_64(k);
}

/// Uniform double in [0, 1) from 53 random bits (portable across standard
/// library implementations, unlike std::uniform_real_distribution).
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n) by rejection.
inline std::uint64_t uniform_below(std::mt19937_64& g, std::uint64_t n) {
  if (n <= 1) return 0;
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do v = g(); while (v >= limit);
  return v % n;
}

/// Poisson arrival ticks in [0, duration): exponential gaps with rate
/// rate_per_min / 60 / ticks_per_second per tick.
inline std::vector<Tick> generate_tasks(double rate_per_min, Tick duration, std::uint64_t seed,
                                        int ticks_per_second = 1000) {
  std::vector<Tick> out;
  if (!(rate_per_min > 0.0) || duration <= 0) return out;
  double lambda = rate_per_min / 60.0 / static_cast<double>(ticks_per_second);
  auto g = make_stream(seed, Stream::Arrivals);
  out.reserve(static_cast<std::size_t>(lambda * static_cast<double>(duration) * 1.1) + 16);
  double t = 0.0;
  while (true) {
    t += -std::log1p(-uniform01(g)) / lambda;
    if (t >= static_cast<double>(duration)) break;
    out.push_back(static_cast<Tick>(t));
  }
  return out;
}

/// Seeded Fisher-Yates permutation of [0, n).
inline std::vector<int> permutation(int n, std::mt19937_64& g) {
  std::vector<int> p(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(p[static_cast<std::size_t>(i)], p[uniform_below(g, static_cast<std::uint64_t>(i) + 1)]);
  return p;
}

inline int failure_count(double fraction, int n) {
  return static_cast<int>(std::llround(fraction * static_cast<double>(n)));
}

/// Crash schedule. The order in which nodes fail and their failure times are
/// drawn for every node up front, then the first round(fraction * n) are
/// taken; a higher fraction therefore fails a superset of the nodes of a
/// lower one, at the same times.
inline std::vector<ScriptedFailure> fault_schedule(const SimConfig& c) {
  std::vector<ScriptedFailure> out = c.faults.scripted;
  double lo = c.faults.window_start * static_cast<double>(c.duration_ticks);
  double hi = c.faults.window_end * static_cast<double>(c.duration_ticks);

  auto draw = [&](Stream order_stream, Stream time_stream, int n, double fraction, auto name) {
    auto og = make_stream(c.seed, order_stream);
    auto tg = make_stream(c.seed ^ static_cast<std::uint64_t>(order_stream), time_stream);
    std::vector<int> order = permutation(n, og);
    int k = std::min(failure_count(fraction, n), n);
    for (int i = 0; i < n; ++i) {
      Tick t = static_cast<Tick>(lo + uniform01(tg) * (hi - lo));
      if (i < k) out.push_back({t, name(order[static_cast<std::size_t>(i)])});
    }
  };
  draw(Stream::Controllers, Stream::Times, c.n_controllers, c.faults.controller_failure_fraction,
       [&](int i) { return controller_name(c, i); });
  draw(Stream::Edges, Stream::Times, c.n_edge_nodes(), c.faults.edge_failure_fraction,
       [&](int i) { return edge_name(c, i); });
  std::stable_sort(out.begin(), out.end(),
                   [](const ScriptedFailure& a, const ScriptedFailure& b) { return a.tick < b.tick; });
  return out;
}

}  // namespace agentflow::sim
