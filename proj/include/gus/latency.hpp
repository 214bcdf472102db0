#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gus/rng.hpp"
#include "gus/tag.hpp"

namespace gus {

// Simulated time in fixed-point tenths of a millisecond.
using Ticks = std::int64_t;
inline constexpr Ticks kTicksPerMs = 10;

inline constexpr double to_ms(Ticks t) { return static_cast<double>(t) / kTicksPerMs; }
inline Ticks from_ms(double ms) { return static_cast<Ticks>(std::llround(ms * kTicksPerMs)); }

class LatencyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LatencyModel {
  std::vector<std::vector<Ticks>> one_way;  // [sender-1][recipient-1]
  Ticks jitter = 0;                         // extra delay drawn from U[0, jitter]
  std::vector<std::string> regions;

  int n() const { return static_cast<int>(one_way.size()); }
  Ticks base(NodeId from, NodeId to) const { return one_way.at(from - 1).at(to - 1); }
  const std::string& region(NodeId node) const { return regions.at(node - 1); }
};

// Round-trip times in ms; one-way delay is half the RTT.
inline LatencyModel latency_from_rtt(const std::vector<std::vector<double>>& rtt_ms, std::vector<std::string> regions = {}) {
  const std::size_t n = rtt_ms.size();
  if (n == 0) throw LatencyError("latency matrix is empty");
  LatencyModel m;
  m.one_way.assign(n, std::vector<Ticks>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    if (rtt_ms[i].size() != n)
      throw LatencyError("latency matrix is not square: row " + std::to_string(i + 1) + " has " +
                         std::to_string(rtt_ms[i].size()) + " entries, expected " + std::to_string(n));
    for (std::size_t j = 0; j < n; ++j) {
      if (!(rtt_ms[i][j] > 0))
        throw LatencyError("latency matrix entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                           ") must be positive");
      m.one_way[i][j] = std::max<Ticks>(1, from_ms(rtt_ms[i][j] / 2));
    }
  }
  if (regions.empty())
    for (std::size_t i = 0; i < n; ++i) regions.push_back("N" + std::to_string(i + 1));
  if (regions.size() != n) throw LatencyError("region names do not match matrix size");
  m.regions = std::move(regions);
  return m;
}

// Emulated inter-region RTTs (ms) for CA, VA, IR, OR, JP; the diagonal is local delivery.
inline const std::vector<std::vector<double>>& table3_rtt() {
  static const std::vector<std::vector<double>> t = {
      {0.2, 72, 151, 59, 113},
      {72, 0.2, 88, 93, 162},
      {151, 88, 0.2, 145, 220},
      {59, 93, 145, 0.2, 121},
      {113, 162, 220, 121, 0.2},
  };
  return t;
}

inline LatencyModel latency_table3(int n) {
  if (n < 1 || n > 5) throw LatencyError("table3 profile covers at most 5 nodes, got " + std::to_string(n));
  static const std::vector<std::string> names = {"CA", "VA", "IR", "OR", "JP"};
  std::vector<std::vector<double>> rtt(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) rtt[i][j] = table3_rtt()[i][j];
  return latency_from_rtt(rtt, std::vector<std::string>(names.begin(), names.begin() + n));
}

inline LatencyModel latency_uniform(int n, double rtt_ms) {
  std::vector<std::vector<double>> rtt(n, std::vector<double>(n, rtt_ms));
  for (int i = 0; i < n; ++i) rtt[i][i] = 0.2;
  return latency_from_rtt(rtt);
}

// Named profiles: "table3", or "uniform" (10 ms RTT).
inline LatencyModel latency_profile(std::string_view name, int n) {
  if (name == "table3") return latency_table3(n);
  if (name == "uniform") return latency_uniform(n, 10);
  throw LatencyError("unknown latency profile '" + std::string(name) + "'");
}

inline Ticks message_delay(const LatencyModel& m, NodeId from, NodeId to, Rng& rng) {
  Ticks d = m.base(from, to);
  if (m.jitter > 0) d += rng.between(0, m.jitter);
  return d;
}

}  // namespace gus
