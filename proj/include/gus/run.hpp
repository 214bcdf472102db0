#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gus/baselines.hpp"
#include "gus/gus_node.hpp"
#include "gus/history.hpp"
#include "gus/rng.hpp"
#include "gus/scenario.hpp"
#include "gus/simnet.hpp"

namespace gus {

inline constexpr const char* kHotKey = "hot";

struct ClientRequest {
  OpKind kind = OpKind::kRead;
  Key key;
  Value value;  // writes only
};

// Closed-loop request stream: kind by write_ratio, the shared hot key with
// probability conflict_rate, otherwise a key private to the client.
class WorkloadGen {
 public:
  WorkloadGen(const Workload& w, std::uint64_t seed) : w_(w), rng_(seed) {}

  ClientRequest next(ClientId client) {
    ClientRequest r;
    r.kind = rng_.chance(w_.write_ratio) ? OpKind::kWrite : OpKind::kRead;
    if (rng_.chance(w_.conflict_rate)) r.key = kHotKey;
    else r.key = "c" + std::to_string(client) + "/k" + std::to_string(rng_.below(static_cast<std::uint64_t>(w_.key_space)));
    if (r.kind == OpKind::kWrite) {
      const std::uint64_t seq = ++issued_[client];
      r.value = hex16(fnv1a(std::to_string(client) + ":" + std::to_string(seq)));
    }
    return r;
  }

 private:
  Workload w_;
  Rng rng_;
  std::map<ClientId, std::uint64_t> issued_;
};

inline std::vector<std::unique_ptr<Replica>> make_replicas(Protocol p, const QuorumConfig& q, const GusOptions& opt = {}) {
  std::vector<std::unique_ptr<Replica>> out;
  for (NodeId i = 1; i <= q.n; ++i) {
    switch (p) {
      case Protocol::kGus: out.push_back(std::make_unique<GusNode>(i, q, opt)); break;
      case Protocol::kAbd: out.push_back(std::make_unique<AbdNode>(i, q)); break;
      case Protocol::kFastOnly: out.push_back(std::make_unique<FastOnlyNode>(i, q.n, q.n - q.q_write)); break;
    }
  }
  return out;
}

inline GusOptions scenario_gus_options(const Scenario& s) {
  return GusOptions{s.toggles.piggyback, s.toggles.tag_along, completed_flag_enabled(s)};
}

inline SimConfig scenario_sim_config(const Scenario& s) {
  SimConfig c;
  c.latency = scenario_latency(s);
  c.fifo = s.toggles.fifo;
  c.seed = s.seed;
  c.faults = s.faults;
  c.script = s.script;
  return c;
}

struct RunResult {
  Scenario scenario;
  QuorumConfig quorums;
  LatencyModel latency;
  History history;
  Telemetry telemetry;
};

inline ClientId client_id(const Scenario& s, NodeId node, int k) {
  return static_cast<ClientId>((node - 1) * s.clients_per_node + k + 1);
}

inline NodeId client_node(const Scenario& s, ClientId c) {
  return static_cast<NodeId>((c - 1) / static_cast<ClientId>(s.clients_per_node) + 1);
}

inline RunResult run_scenario(const Scenario& s) {
  validate_scenario(s);
  RunResult r;
  r.scenario = s;
  r.quorums = scenario_quorums(s);
  SimConfig cfg = scenario_sim_config(s);
  r.latency = cfg.latency;
  Simulator sim(std::move(cfg), make_replicas(s.protocol, r.quorums, scenario_gus_options(s)));
  WorkloadGen gen(s.workload, Rng(s.seed).fork().next());
  const Ticks stop = from_ms(s.duration_ms);

  auto issue = [&](Simulator& sm, ClientId c, Ticks at) {
    ClientRequest q = gen.next(c);
    sm.invoke(at, c, client_node(s, c), q.kind, std::move(q.key), std::move(q.value));
  };
  sim.on_completion([&](Simulator& sm, const HistoryEvent& e) {
    if (sm.now() < stop) issue(sm, e.client, sm.now());
  });
  for (NodeId node = 1; node <= s.n; ++node)
    for (int k = 0; k < s.clients_per_node; ++k) issue(sim, client_id(s, node, k), 0);
  sim.run();
  r.history = sim.history();
  r.telemetry = sim.telemetry();
  return r;
}

}  // namespace gus
