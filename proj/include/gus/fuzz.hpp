#pragma once

#include <cstdint>

#include "gus/rng.hpp"
#include "gus/scenario.hpp"

namespace gus {

struct FuzzOptions {
  bool zero_conflict = false;  // private keys only, no crashes
  double duration_ms = 1500;
};

// Randomized adversarial scenario: latencies 1–200 ms, up to f crashes, FIFO
// on or off, random jitter, conflict rate and write ratio.
inline Scenario fuzz_scenario(Protocol p, int n, std::uint64_t seed, const FuzzOptions& opt = {}) {
  Rng rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(n));
  Scenario s;
  s.name = std::string("fuzz-") + to_string(p) + "-n" + std::to_string(n) + "-s" + std::to_string(seed);
  s.protocol = p;
  s.n = n;
  s.f = (n - 1) / 2;
  s.seed = seed;
  s.latency_profile = "matrix";
  s.rtt_matrix.assign(n, std::vector<double>(n, 0.2));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) s.rtt_matrix[i][j] = s.rtt_matrix[j][i] = static_cast<double>(rng.between(1, 200));
  s.clients_per_node = static_cast<int>(rng.between(1, 4));
  s.duration_ms = opt.duration_ms;
  s.warmup_ms = 0;
  s.cooldown_ms = 0;
  s.toggles.fifo = rng.chance(0.5);
  s.toggles.jitter_ms = rng.chance(0.7) ? static_cast<double>(rng.between(1, 100)) : 0;
  if (p == Protocol::kGus) s.toggles.piggyback = rng.chance(0.3);
  if (opt.zero_conflict) {
    s.workload = Workload{rng.unit(), 0.0, static_cast<int>(rng.between(1, 4)), 16};
    return s;
  }
  s.workload = Workload{rng.unit(), rng.unit(), static_cast<int>(rng.between(1, 3)), 16};
  const int crashes = static_cast<int>(rng.between(0, s.f));
  std::vector<NodeId> nodes;
  for (NodeId i = 1; i <= n; ++i) nodes.push_back(i);
  for (int k = 0; k < crashes; ++k) {
    const auto pick = static_cast<std::size_t>(rng.below(nodes.size()));
    s.faults.crashes.push_back(Crash{nodes[pick], from_ms(static_cast<double>(rng.between(0, static_cast<std::int64_t>(opt.duration_ms))))});
    nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return s;
}

}  // namespace gus
