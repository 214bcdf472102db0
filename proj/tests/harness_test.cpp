#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "gus/fuzz.hpp"
#include "gus/impossible.hpp"
#include "gus/properties.hpp"
#include "gus/report.hpp"
#include "gus/run.hpp"
#include "gus/stats.hpp"

using namespace gus;
using nlohmann::json;

namespace {

Scenario small(Protocol p = Protocol::kGus) {
  Scenario s;
  s.name = "t";
  s.protocol = p;
  s.n = 3;
  s.f = 1;
  s.latency_profile = "table3";
  s.clients_per_node = 4;
  s.duration_ms = 2000;
  s.warmup_ms = 100;
  s.cooldown_ms = 100;
  s.workload.write_ratio = 0.2;
  s.workload.conflict_rate = 0.3;
  s.workload.key_space = 5;
  s.seed = 17;
  return s;
}

std::string csv_of(const History& h) {
  std::ostringstream os;
  write_history_csv(os, h);
  return os.str();
}

std::string parse_error(const json& j) {
  try {
    parse_scenario(j);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Scenario, DefaultsAndFields) {
  const Scenario s = parse_scenario(json::parse(R"({
    "n": 5, "protocol": "abd", "latency": {"uniform": 40}, "seed": 9,
    "workload": {"write_ratio": 0.5, "conflict_rate": 0.1},
    "faults": [{"node": 2, "at_ms": 10.5}],
    "script": [{"from": 1, "kind": "store", "action": "deliver_at", "at_ms": 3}]
  })"));
  EXPECT_EQ(s.protocol, Protocol::kAbd);
  EXPECT_EQ(s.f, 2);
  EXPECT_EQ(s.clients_per_node, 16);
  EXPECT_EQ(s.duration_ms, 10000);
  EXPECT_EQ(s.latency_profile, "uniform");
  EXPECT_EQ(s.uniform_rtt_ms, 40);
  EXPECT_EQ(s.faults.crashes.at(0).at, from_ms(10.5));
  EXPECT_EQ(s.script.at(0).action, ScriptAction::kDeliverAt);
  EXPECT_EQ(s.script.at(0).at, from_ms(3));
  EXPECT_EQ(scenario_quorums(s), (QuorumConfig{5, 2, 3, 3}));
}

TEST(Scenario, FieldLevelDiagnostics) {
  EXPECT_NE(parse_error(json::parse(R"({"n": 3, "colour": 1})")).find("unknown field 'colour'"), std::string::npos);
  EXPECT_NE(parse_error(json::parse(R"({"n": 3, "workload": {"write_ratio": 2}})")).find("workload.write_ratio"),
            std::string::npos);
  EXPECT_NE(parse_error(json::parse(R"({"n": 3, "protocol": "paxos"})")).find("protocol"), std::string::npos);
  EXPECT_NE(parse_error(json::parse(R"({"n": "three"})")).find("n:"), std::string::npos);
  EXPECT_NE(parse_error(json::parse(R"({"n": 3, "faults": [{"node": 1, "at_ms": 0}, {"node": 2, "at_ms": 0}]})"))
                .find("exceed f"),
            std::string::npos);
  EXPECT_NE(parse_error(json::parse(R"({"n": 3, "protocol": "abd", "toggles": {"n45_completed_flag": true}})"))
                .find("n45_completed_flag"),
            std::string::npos);
  EXPECT_NE(parse_error(json::parse(R"({"n": 7, "q_read": 3, "q_write": 5})")).find("≮"), std::string::npos);
  EXPECT_NE(parse_error(json::parse(R"({"n": 3, "script": [{"kind": "gossip", "action": "drop"}]})")).find("gossip"),
            std::string::npos);
  EXPECT_NE(parse_error(json::parse(R"({"n": 6, "latency": "table3"})")).find("table3"), std::string::npos);
}

TEST(Scenario, LargeClustersUseRelaxedQuorums) {
  const Scenario s = parse_scenario(json::parse(R"({"n": 7, "f": 2, "latency": "uniform"})"));
  EXPECT_EQ(scenario_quorums(s), (QuorumConfig{7, 2, 4, 5}));
  EXPECT_FALSE(parse_error(json::parse(R"({"n": 7, "latency": "uniform"})")).empty());  // f = 3 is infeasible
  const Scenario fast = parse_scenario(json::parse(R"({"n": 7, "protocol": "fastonly", "latency": "uniform"})"));
  EXPECT_EQ(scenario_quorums(fast), (QuorumConfig{7, 3, 4, 4}));
}

TEST(Scenario, CompletedFlagDefaultsOnForFourAndFive) {
  Scenario s = small();
  EXPECT_FALSE(completed_flag_enabled(s));
  s.n = 4;
  EXPECT_TRUE(completed_flag_enabled(s));
  s.toggles.n45_completed_flag = false;
  EXPECT_FALSE(completed_flag_enabled(s));
}

TEST(Workload, ConflictRateControlsSharing) {
  Workload w;
  w.conflict_rate = 1;
  WorkloadGen all_hot(w, 1);
  for (ClientId c = 1; c <= 50; ++c) EXPECT_EQ(all_hot.next(c).key, kHotKey);

  w.conflict_rate = 0;
  WorkloadGen none(w, 1);
  std::map<Key, ClientId> owner;
  for (int i = 0; i < 5000; ++i) {
    const ClientId c = 1 + i % 40;
    auto [it, fresh] = owner.try_emplace(none.next(c).key, c);
    ASSERT_EQ(it->second, c) << "key " << it->first << " shared";
  }

  w.conflict_rate = 0.25;
  WorkloadGen quarter(w, 42);
  int hot = 0;
  for (int i = 0; i < 10000; ++i) hot += quarter.next(1 + i % 16).key == kHotKey;
  EXPECT_NEAR(hot / 10000.0, 0.25, 0.02);
}

TEST(Workload, WriteRatioAndValues) {
  Workload w;
  w.write_ratio = 0.3;
  WorkloadGen g(w, 3);
  int writes = 0;
  std::set<Value> values;
  for (int i = 0; i < 10000; ++i) {
    auto r = g.next(1 + i % 8);
    if (r.kind == OpKind::kWrite) {
      ++writes;
      EXPECT_EQ(r.value.size(), 16u);
      values.insert(r.value);
    }
  }
  EXPECT_NEAR(writes / 10000.0, 0.3, 0.02);
  EXPECT_EQ(values.size(), static_cast<std::size_t>(writes));  // every write value is distinct
}

TEST(Run, ClosedLoopClientsNeverOverlap) {
  const RunResult r = run_scenario(small());
  std::map<ClientId, Ticks> busy_until;
  std::size_t done = 0;
  for (const auto& e : r.history) {
    EXPECT_EQ(client_node(r.scenario, e.client), e.node);
    auto it = busy_until.find(e.client);
    if (it != busy_until.end()) {
      EXPECT_GE(e.invoke, it->second);
    }
    if (e.response) busy_until[e.client] = *e.response, ++done;
  }
  EXPECT_EQ(busy_until.size(), 12u);
  EXPECT_GT(done, 100u);
  EXPECT_TRUE(r.telemetry.conserved());
  EXPECT_TRUE(check_history(r.history).ok);
}

TEST(Run, NoWritesMeansNoWriteTraffic) {
  Scenario s = small();
  s.workload.write_ratio = 0;
  const RunResult r = run_scenario(s);
  for (const char* kind : {"write", "ack-write", "commit-write", "ack-commit", "update-view", "store", "store-ack"}) {
    for (std::size_t i = 0; i < kMessageKinds; ++i)
      if (kMessageKindNames[i] == kind) {
        EXPECT_EQ(r.telemetry.sent_by_kind[i], 0u) << kind;
      }
  }
  EXPECT_TRUE(r.telemetry.stores.empty());
}

TEST(Run, SameSeedSameCsv) {
  for (Protocol p : {Protocol::kGus, Protocol::kAbd}) {
    Scenario s = small(p);
    s.toggles.jitter_ms = 10;
    const std::string a = csv_of(run_scenario(s).history);
    EXPECT_EQ(a, csv_of(run_scenario(s).history));
    s.seed += 1;
    EXPECT_NE(a, csv_of(run_scenario(s).history));
  }
}

TEST(Run, AbdWritesTakeTwoPhasesGusUncontendedFast) {
  Scenario s = small(Protocol::kAbd);
  s.workload.conflict_rate = 0;
  for (const auto& e : run_scenario(s).history)
    if (e.kind == OpKind::kWrite && e.response) {
      EXPECT_EQ(e.phases, 2);
    }
  s.protocol = Protocol::kGus;
  for (const auto& e : run_scenario(s).history)
    if (e.response) {
      EXPECT_LE(e.phases, 1) << e.op;
      if (e.kind == OpKind::kWrite) {
        EXPECT_EQ(e.phases, 1) << e.op;
      }
    }
}

TEST(Stats, NearestRankPercentile) {
  std::vector<Ticks> v{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  EXPECT_EQ(percentile(v, 50), 50);
  EXPECT_EQ(percentile(v, 90), 90);
  EXPECT_EQ(percentile(v, 99), 100);
  EXPECT_EQ(percentile(v, 0), 10);
  EXPECT_EQ(percentile({}, 50), 0);
}

TEST(Stats, GroupsByKindAndRegionWithinWindow) {
  History h;
  auto add = [&](NodeId node, OpKind k, double inv, double lat) {
    HistoryEvent e;
    e.op = h.size() + 1;
    e.node = node;
    e.kind = k;
    e.invoke = from_ms(inv);
    e.response = from_ms(inv + lat);
    h.push_back(e);
  };
  add(1, OpKind::kRead, 10, 72);
  add(1, OpKind::kRead, 20, 72);
  add(3, OpKind::kRead, 30, 88);
  add(2, OpKind::kWrite, 40, 72);
  add(1, OpKind::kRead, 5000, 1);  // outside the window
  const auto v = summarize(h, {"CA", "VA", "IR"}, StatsWindow{0, from_ms(1000)});
  const auto* all = find_summary(v, "read", "all");
  ASSERT_NE(all, nullptr);
  EXPECT_EQ(all->count, 3u);
  EXPECT_NEAR(all->mass(72, 72.99), 2.0 / 3, 1e-9);
  EXPECT_NEAR(all->mass(88, 88.99), 1.0 / 3, 1e-9);
  EXPECT_EQ(find_summary(v, "read", "IR")->p50, from_ms(88));
  EXPECT_EQ(find_summary(v, "write", "VA")->count, 1u);
  EXPECT_EQ(find_summary(v, "read", "VA"), nullptr);
  EXPECT_TRUE(summarize({}, {}).empty());
  std::ostringstream os;
  print_cdf(os, v);
  EXPECT_NE(os.str().find("88 ms   1.0000"), std::string::npos) << os.str();
}

TEST(Properties, FlagSyntheticCounterexamples) {
  auto ev = [](OpId id, OpKind k, std::uint64_t inv, std::uint64_t res, Tag t, WriteId src) {
    HistoryEvent e;
    e.op = id;
    e.key = "k";
    e.kind = k;
    e.invoke = static_cast<Ticks>(inv);
    e.invoke_order = inv;
    e.response = static_cast<Ticks>(res);
    e.response_order = res;
    e.tag = t;
    e.source = src;
    return e;
  };
  const History dup{ev(1, OpKind::kWrite, 1, 2, {1, 1}, {1, 1}), ev(2, OpKind::kWrite, 3, 4, {1, 1}, {2, 1})};
  PropertyReport a;
  check_unique_write_tag(dup, a);
  EXPECT_EQ(a.unique_write_tag.size(), 1u);

  const History regress{ev(1, OpKind::kWrite, 1, 2, {2, 1}, {1, 1}), ev(2, OpKind::kRead, 3, 4, {1, 3}, {3, 1}),
                        ev(3, OpKind::kWrite, 5, 6, {2, 1}, {2, 2})};
  PropertyReport b;
  check_progress_of_tag(regress, b);
  EXPECT_EQ(b.progress_of_tag.size(), 2u);

  const History read{ev(1, OpKind::kRead, 1, 50, {1, 2}, {2, 1})};
  PropertyReport c;
  check_committed_write(read, {{"k", {1, 2}, {2, 1}, 1, 10}, {"k", {1, 2}, {2, 1}, 2, 60}}, 2, c);
  EXPECT_EQ(c.committed_write.size(), 1u);
  PropertyReport c2;
  check_committed_write(read, {{"k", {1, 2}, {2, 1}, 1, 10}, {"k", {1, 2}, {2, 1}, 2, 40}}, 2, c2);
  EXPECT_TRUE(c2.ok());

  const History twice{ev(1, OpKind::kRead, 1, 2, {1, 2}, {2, 1}), ev(2, OpKind::kRead, 3, 4, {2, 2}, {2, 1})};
  PropertyReport d;
  check_single_association(twice, d);
  EXPECT_EQ(d.single_association.size(), 1u);
}

TEST(Properties, HoldOnGusRuns) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RunResult r = run_scenario(fuzz_scenario(Protocol::kGus, 3 + seed % 3, seed));
    const PropertyReport rep = check_properties(r.history, r.telemetry.stores, r.quorums.q_write);
    EXPECT_TRUE(rep.ok()) << "seed " << seed << ": " << rep.violations();
  }
}

TEST(Lincheck, CatchesCorruptedRunHistory) {
  Scenario s = small();
  s.workload.conflict_rate = 0.8;
  RunResult r = run_scenario(s);
  ASSERT_TRUE(check_history(r.history).ok);
  // A read that starts after some write finished can no longer return the initial value.
  std::map<Key, std::uint64_t> first_write_done;
  for (const auto& e : r.history)
    if (e.kind == OpKind::kWrite && e.response) {
      auto [it, fresh] = first_write_done.try_emplace(e.key, e.response_order);
      if (!fresh) it->second = std::min(it->second, e.response_order);
    }
  for (auto& e : r.history) {
    auto w = first_write_done.find(e.key);
    if (e.kind != OpKind::kRead || !e.response || w == first_write_done.end() || w->second > e.invoke_order) continue;
    e.value = default_value();
    const Verdict v = check_history(r.history);
    ASSERT_FALSE(v.ok);
    EXPECT_EQ(v.first_failure()->key, e.key);
    return;
  }
  FAIL() << "no read to corrupt";
}

TEST(Impossible, FastOnlyExecutions) {
  const auto e1 = run_fastonly_execution(Execution::kE1);
  EXPECT_TRUE(e1.as_expected()) << e1.narrative;
  EXPECT_EQ(e1.op("r1")->value, "x-value-from-w1");
  EXPECT_TRUE(e1.op("w1")->response);

  const auto e2 = run_fastonly_execution(Execution::kE2);
  EXPECT_TRUE(e2.as_expected()) << e2.narrative;
  EXPECT_EQ(e2.op("r1")->value, "x-value-from-w1");
  EXPECT_FALSE(e2.op("w1")->response);

  const auto e3 = run_fastonly_execution(Execution::kE3);
  EXPECT_TRUE(e3.as_expected()) << e3.narrative;
  EXPECT_FALSE(e3.verdict.ok);
  EXPECT_EQ(e3.op("r2")->value, default_value());
  EXPECT_EQ(e3.verdict.first_failure()->violating_op, e3.op("r2")->op);
  EXPECT_NE(e3.narrative.find("witness: r1 returned"), std::string::npos);
  EXPECT_EQ(e3.narrative, run_fastonly_execution(Execution::kE3).narrative);
}

TEST(Impossible, LargerClustersToo) {
  EXPECT_FALSE(run_fastonly_execution(Execution::kE3, 9).verdict.ok);
  EXPECT_TRUE(run_fastonly_execution(Execution::kE1, 9).as_expected());
  EXPECT_THROW(run_fastonly_execution(Execution::kE3, 8), std::invalid_argument);
  EXPECT_THROW(run_fastonly_execution(Execution::kE3, 5), std::invalid_argument);
}

TEST(Impossible, GusSurvivesTheSameShape) {
  for (int n : {3, 4, 5}) {
    const auto r = run_gus_companion(n);
    EXPECT_TRUE(r.as_expected()) << r.narrative;
    EXPECT_TRUE(r.telemetry.blocked.empty());
    EXPECT_EQ(r.op("r2")->value, "x-value-from-w1") << r.narrative;
  }
}

TEST(Report, LostAcksAreALivenessFailure) {
  Scenario s = small();
  s.script.push_back(ScriptDirective{0, 0, "ack-read", -1, ScriptAction::kDrop, 0, {}});
  const RunResult r = run_scenario(s);
  EXPECT_FALSE(r.telemetry.blocked.empty());
  EXPECT_EQ(exit_code(check_history(r.history), r.telemetry), kExitLiveness);
}

TEST(Report, ExitCodes) {
  Verdict ok, bad;
  bad.ok = false;
  Telemetry quiet, stuck;
  stuck.blocked = {4};
  EXPECT_EQ(exit_code(ok, quiet), kExitOk);
  EXPECT_EQ(exit_code(ok, stuck), kExitLiveness);
  EXPECT_EQ(exit_code(bad, stuck), kExitViolation);
  EXPECT_EQ(telemetry_json(stuck)["blocked_ops"][0], 4);
}
