#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gus/history.hpp"

namespace gus {

// Nearest-rank percentile of an ascending sample, p in (0, 100].
inline Ticks percentile(const std::vector<Ticks>& sorted, double p) {
  if (sorted.empty()) return 0;
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

struct LatencySummary {
  std::string kind;
  std::string region;
  std::size_t count = 0;
  Ticks p50 = 0, p90 = 0, p99 = 0, p999 = 0;
  double mean_ms = 0;
  std::map<std::int64_t, std::size_t> per_ms;  // floor(latency in ms) -> ops

  // Fraction of ops whose latency lies in [lo_ms, hi_ms].
  double mass(double lo_ms, double hi_ms) const {
    std::size_t k = 0;
    for (const auto& [ms, c] : per_ms)
      if (ms >= std::floor(lo_ms) && ms <= hi_ms) k += c;
    return count ? static_cast<double>(k) / static_cast<double>(count) : 0;
  }
};

struct StatsWindow {
  Ticks from = 0;
  Ticks to = std::numeric_limits<Ticks>::max();
};

// Groups completed ops invoked inside the window by (kind, region of the
// client's node); region "all" aggregates every node.
inline std::vector<LatencySummary> summarize(const History& h, const std::vector<std::string>& regions,
                                             StatsWindow window = {}) {
  std::map<std::pair<std::string, std::string>, std::vector<Ticks>> groups;
  for (const auto& e : h) {
    if (!e.response || e.invoke < window.from || e.invoke > window.to) continue;
    const std::string kind = to_string(e.kind);
    const std::string region = e.node >= 1 && e.node <= static_cast<NodeId>(regions.size())
                                   ? regions[e.node - 1]
                                   : "N" + std::to_string(e.node);
    groups[{kind, region}].push_back(e.latency());
    groups[{kind, "all"}].push_back(e.latency());
  }
  std::vector<LatencySummary> out;
  for (auto& [key, lat] : groups) {
    std::sort(lat.begin(), lat.end());
    LatencySummary s;
    s.kind = key.first;
    s.region = key.second;
    s.count = lat.size();
    s.p50 = percentile(lat, 50);
    s.p90 = percentile(lat, 90);
    s.p99 = percentile(lat, 99);
    s.p999 = percentile(lat, 99.9);
    double sum = 0;
    for (Ticks t : lat) {
      sum += to_ms(t);
      ++s.per_ms[t / kTicksPerMs];
    }
    s.mean_ms = sum / static_cast<double>(lat.size());
    out.push_back(std::move(s));
  }
  return out;
}

inline const LatencySummary* find_summary(const std::vector<LatencySummary>& v, const std::string& kind,
                                          const std::string& region) {
  for (const auto& s : v)
    if (s.kind == kind && s.region == region) return &s;
  return nullptr;
}

inline void print_percentiles(std::ostream& os, const std::vector<LatencySummary>& v) {
  os << "kind   region     count      p50      p90      p99    p99.9     mean\n";
  char line[160];
  for (const auto& s : v) {
    std::snprintf(line, sizeof line, "%-6s %-6s %9zu %8.1f %8.1f %8.1f %8.1f %8.2f\n", s.kind.c_str(), s.region.c_str(),
                  s.count, to_ms(s.p50), to_ms(s.p90), to_ms(s.p99), to_ms(s.p999), s.mean_ms);
    os << line;
  }
}

// Empirical CDF at 1 ms resolution: bucket [ms, ms+1) and the cumulative
// fraction through it. Empty buckets are skipped.
inline void print_cdf(std::ostream& os, const std::vector<LatencySummary>& v) {
  for (const auto& s : v) {
    os << "# cdf " << s.kind << ' ' << s.region << " (" << s.count << " ops)\n";
    std::size_t acc = 0;
    for (const auto& [ms, c] : s.per_ms) {
      acc += c;
      char line[96];
      std::snprintf(line, sizeof line, "%8lld ms  %7.4f\n", static_cast<long long>(ms),
                    static_cast<double>(acc) / static_cast<double>(s.count));
      os << line;
    }
  }
}

inline nlohmann::json stats_json(const std::vector<LatencySummary>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : v) {
    nlohmann::json cdf = nlohmann::json::array();
    std::size_t acc = 0;
    for (const auto& [ms, c] : s.per_ms) {
      acc += c;
      cdf.push_back({{"ms", ms}, {"fraction", static_cast<double>(acc) / static_cast<double>(s.count)}});
    }
    out.push_back({{"kind", s.kind},
                   {"region", s.region},
                   {"count", s.count},
                   {"p50_ms", to_ms(s.p50)},
                   {"p90_ms", to_ms(s.p90)},
                   {"p99_ms", to_ms(s.p99)},
                   {"p99_9_ms", to_ms(s.p999)},
                   {"mean_ms", s.mean_ms},
                   {"cdf", cdf}});
  }
  return out;
}

}  // namespace gus
