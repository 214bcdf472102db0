#pragma once

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "gus/baselines.hpp"
#include "gus/gus_node.hpp"
#include "gus/lincheck.hpp"
#include "gus/simnet.hpp"

namespace gus {

// Adversarial executions against a register whose every operation takes one
// round trip with n − f replies. Nodes a, b, c, ... are 1, 2, 3, ...; with
// n = 2f + 1 and q = f + 1, d = f + 1 and the writer e = f + 2, the write quorum
// is {d, ..., n} and the first read uses {a, ..., d}.
enum class Execution { kE1, kE2, kE3 };

inline const char* to_string(Execution e) {
  switch (e) {
    case Execution::kE1: return "e1";
    case Execution::kE2: return "e2";
    case Execution::kE3: return "e3";
  }
  return "?";
}

struct ExecutionReport {
  std::string name;
  bool expect_violation = false;
  History history;
  Telemetry telemetry;
  Verdict verdict;
  std::string narrative;

  const HistoryEvent* op(const std::string& label) const {
    for (const auto& e : history)
      if (e.label == label) return &e;
    return nullptr;
  }
  bool script_ok() const { return telemetry.script_errors.empty(); }
  // As designed: the violation appears exactly when expected and the script held.
  bool as_expected() const { return script_ok() && verdict.conclusive && verdict.ok != expect_violation; }
};

namespace detail {

inline constexpr const char* kKey = "x-register";

inline std::string node_name(NodeId i) {
  return i <= 26 ? std::string(1, static_cast<char>('a' + i - 1)) : "n" + std::to_string(i);
}

inline std::string describe(const HistoryEvent& e) {
  std::ostringstream os;
  os << e.label << " at " << node_name(e.node) << ": " << to_string(e.kind) << ' '
     << (e.value == default_value() ? "default" : e.value) << " invoked " << format_ms(e.invoke) << " ms, ";
  if (e.response) os << "returned " << format_ms(*e.response) << " ms";
  else os << "never returned";
  return os.str();
}

inline std::string explain(const ExecutionReport& r) {
  std::ostringstream os;
  for (const auto& e : r.history) os << "  " << describe(e) << '\n';
  if (!r.script_ok())
    for (const auto& err : r.telemetry.script_errors) os << "  script error: " << err << '\n';
  if (r.verdict.ok) {
    os << "  linearizable; witness order:";
    for (const auto& k : r.verdict.keys)
      for (OpId id : k.witness)
        for (const auto& e : r.history)
          if (e.op == id) os << ' ' << e.label;
    os << '\n';
  } else if (const KeyVerdict* k = r.verdict.first_failure()) {
    os << "  VIOLATION: shortest failing prefix has " << k->violating_prefix << " events, closed by ";
    for (const auto& e : r.history)
      if (e.op == k->violating_op) os << e.label;
    os << '\n';
    // Spell out the real-time chain: a read that saw x finished before one that missed it began.
    for (const auto& seen : r.history)
      for (const auto& missed : r.history)
        if (seen.kind == OpKind::kRead && missed.kind == OpKind::kRead && seen.response && missed.response &&
            seen.value != default_value() && missed.value == default_value() && *seen.response < missed.invoke)
          os << "  witness: " << seen.label << " returned " << seen.value << " at " << format_ms(*seen.response)
             << " ms, so its write took effect; " << missed.label << " invoked at " << format_ms(missed.invoke)
             << " ms returned the default value\n";
  }
  return os.str();
}

}  // namespace detail

inline ExecutionReport run_fastonly_execution(Execution which, int n = 7) {
  if (n <= 5 || n % 2 == 0)
    throw std::invalid_argument("impossibility executions need odd n > 5 (n = 2f + 1), got " + std::to_string(n));
  const int f = (n - 1) / 2;
  const NodeId a = 1, b = 2, d = f + 1, e = f + 2;
  const Ticks r1_at = from_ms(100), r2_at = from_ms(200);
  const Value x = "x-value-from-w1";

  SimConfig cfg;
  cfg.latency = latency_uniform(n, 10);
  cfg.seed = 1;
  auto hold = [](NodeId from, NodeId to, const char* kind, const char* until) {
    return ScriptDirective{from, to, kind, -1, ScriptAction::kHoldUntilOp, 0, until};
  };
  auto drop = [](NodeId from, NodeId to, const char* kind) {
    return ScriptDirective{from, to, kind, -1, ScriptAction::kDrop, 0, {}};
  };
  if (which == Execution::kE1) {
    // w1 completes with {d..n}; everything from that quorum to a..c, except d↔a, waits for r1.
    for (NodeId to = a; to < d; ++to) cfg.script.push_back(hold(e, to, "store", "r1"));
    for (NodeId from = e; from <= n; ++from) cfg.script.push_back(hold(from, a, "query-reply", "r1"));
  } else {
    // Only d hears of w1; e and its writer crash mid-write.
    for (NodeId to = 1; to <= n; ++to)
      if (to != d && to != e) cfg.script.push_back(drop(e, to, "store"));
    cfg.faults.crashes.push_back(Crash{e, 1});
    for (NodeId from = e + 1; from <= n; ++from) cfg.script.push_back(hold(from, a, "query-reply", "r1"));
  }
  std::vector<std::unique_ptr<Replica>> nodes;
  for (NodeId i = 1; i <= n; ++i) nodes.push_back(std::make_unique<FastOnlyNode>(i, n, f));
  Simulator sim(std::move(cfg), std::move(nodes));
  sim.invoke(0, 1, e, OpKind::kWrite, detail::kKey, x, "w1");
  sim.invoke(r1_at, 2, a, OpKind::kRead, detail::kKey, {}, "r1");
  if (which == Execution::kE3) {
    // a and d crash right after r1; b's read then sees only nodes that never heard of w1.
    sim.on_completion([&](Simulator& s, const HistoryEvent& ev) {
      if (ev.label != "r1") return;
      s.crash(a, s.now());
      s.crash(d, s.now());
    });
    sim.invoke(r2_at, 3, b, OpKind::kRead, detail::kKey, {}, "r2");
  }
  sim.run();

  ExecutionReport r;
  r.name = std::string(to_string(which)) + " (fastonly, n=" + std::to_string(n) + ")";
  r.expect_violation = which == Execution::kE3;
  r.history = sim.history();
  r.telemetry = sim.telemetry();
  r.verdict = check_history(r.history);
  r.narrative = detail::explain(r);
  return r;
}

// The same shape against Gus at n = 5: only d hears the write at first (the
// rest is delayed, not lost), a reads, then a and d crash and b reads.
inline ExecutionReport run_gus_companion(int n = 5) {
  if (n < 3 || n > 5) throw std::invalid_argument("gus companion runs with 3 ≤ n ≤ 5, got " + std::to_string(n));
  const int f = (n - 1) / 2;
  const NodeId a = 1, b = 2, d = n - 1, e = n;
  const Value x = "x-value-from-w1";
  SimConfig cfg;
  cfg.latency = latency_uniform(n, 10);
  cfg.seed = 1;
  for (NodeId to = 1; to < d; ++to)
    cfg.script.push_back(ScriptDirective{e, to, "write", -1, ScriptAction::kDeliverAt, from_ms(500), {}});
  std::vector<std::unique_ptr<Replica>> nodes;
  QuorumConfig q = default_quorums(n);
  q.f = f;
  for (NodeId i = 1; i <= n; ++i) nodes.push_back(std::make_unique<GusNode>(i, q, GusOptions{false, false, n >= 4}));
  Simulator sim(std::move(cfg), std::move(nodes));
  sim.invoke(0, 1, e, OpKind::kWrite, detail::kKey, x, "w1");
  sim.invoke(from_ms(100), 2, a, OpKind::kRead, detail::kKey, {}, "r1");
  sim.on_completion([&](Simulator& s, const HistoryEvent& ev) {
    if (ev.label != "r1") return;
    s.crash(a, s.now());
    if (f >= 2) s.crash(d, s.now());
    s.invoke(s.now() + from_ms(100), 3, b, OpKind::kRead, detail::kKey, {}, "r2");
  });
  sim.run();

  ExecutionReport r;
  r.name = "gus companion (n=" + std::to_string(n) + ")";
  r.expect_violation = false;
  r.history = sim.history();
  r.telemetry = sim.telemetry();
  r.verdict = check_history(r.history);
  r.narrative = detail::explain(r);
  return r;
}

}  // namespace gus
