#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gus/latency.hpp"
#include "gus/quorum.hpp"
#include "gus/simnet.hpp"

namespace gus {

enum class Protocol { kGus, kAbd, kFastOnly };

inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::kGus: return "gus";
    case Protocol::kAbd: return "abd";
    case Protocol::kFastOnly: return "fastonly";
  }
  return "?";
}

struct Workload {
  double write_ratio = 0.055;
  double conflict_rate = 0.0;
  int key_space = 1000;
  int value_size = 16;  // recorded only; payloads are digests
};

struct Toggles {
  bool piggyback = false;
  bool tag_along = false;
  std::optional<bool> n45_completed_flag;  // default: on for gus with n = 4 or 5
  bool fifo = false;
  double jitter_ms = 0;
};

struct Scenario {
  std::string name;
  Protocol protocol = Protocol::kGus;
  int n = 3;
  int f = 1;
  std::optional<int> q_read;
  std::optional<int> q_write;
  std::string latency_profile = "table3";  // "table3", "uniform" or "matrix"
  double uniform_rtt_ms = 10;
  std::vector<std::vector<double>> rtt_matrix;
  std::vector<std::string> regions;
  int clients_per_node = 16;
  Workload workload;
  double duration_ms = 10000;
  double warmup_ms = 1000;
  double cooldown_ms = 1000;
  std::uint64_t seed = 1;
  Toggles toggles;
  FaultPlan faults;
  std::vector<ScriptDirective> script;
};

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Explicit quorums if given, else majorities for n ≤ 5, else the relaxed
// read-optimized pair for (n, f).
inline QuorumConfig scenario_quorums(const Scenario& s) {
  QuorumConfig q;
  if (s.q_read || s.q_write) {
    if (!s.q_read || !s.q_write) throw ScenarioError("q_read and q_write must be given together");
    q = QuorumConfig{s.n, s.f, *s.q_read, *s.q_write};
    if (s.protocol != Protocol::kFastOnly) {
      auto check = validate_quorums(s.n, q.q_read, q.q_write);
      if (!check) throw ScenarioError("quorums: " + check.diagnostic);
    }
  } else if (s.protocol == Protocol::kFastOnly) {
    q = QuorumConfig{s.n, s.f, s.n - s.f, s.n - s.f};
  } else if (s.n <= 5) {
    q = default_quorums(s.n);
    q.f = s.f;
  } else {
    q = relaxed_quorums(s.n, s.f);
  }
  if (s.protocol == Protocol::kFastOnly) q.q_read = q.q_write = s.n - s.f;
  if (std::max(q.q_read, q.q_write) > s.n - s.f)
    throw ScenarioError("quorums " + std::to_string(q.q_read) + "/" + std::to_string(q.q_write) +
                        " unreachable with f = " + std::to_string(s.f) + " crashes (n − f = " + std::to_string(s.n - s.f) +
                        ")");
  return q;
}

inline bool completed_flag_enabled(const Scenario& s) {
  if (s.toggles.n45_completed_flag) return *s.toggles.n45_completed_flag;
  return s.protocol == Protocol::kGus && (s.n == 4 || s.n == 5);
}

inline LatencyModel scenario_latency(const Scenario& s) {
  LatencyModel m;
  if (s.latency_profile == "table3") m = latency_table3(s.n);
  else if (s.latency_profile == "uniform") m = latency_uniform(s.n, s.uniform_rtt_ms);
  else if (s.latency_profile == "matrix") m = latency_from_rtt(s.rtt_matrix, s.regions);
  else throw ScenarioError("latency: unknown profile '" + s.latency_profile + "'");
  if (m.n() != s.n) throw ScenarioError("latency: matrix covers " + std::to_string(m.n()) + " nodes, n = " + std::to_string(s.n));
  m.jitter = from_ms(s.toggles.jitter_ms);
  return m;
}

inline void validate_scenario(const Scenario& s) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ScenarioError(msg);
  };
  need(s.n >= 1 && s.n <= 63, "n: must be in [1, 63], got " + std::to_string(s.n));
  need(s.f >= 0 && s.f < s.n, "f: must be in [0, n), got " + std::to_string(s.f));
  need(s.protocol == Protocol::kFastOnly || s.n >= 3, "n: quorum protocols need n ≥ 3");
  need(s.clients_per_node >= 0, "clients_per_node: must be ≥ 0");
  need(s.workload.write_ratio >= 0 && s.workload.write_ratio <= 1, "workload.write_ratio: must be in [0, 1]");
  need(s.workload.conflict_rate >= 0 && s.workload.conflict_rate <= 1, "workload.conflict_rate: must be in [0, 1]");
  need(s.workload.key_space >= 1, "workload.key_space: must be ≥ 1");
  need(s.workload.value_size >= 0, "workload.value_size: must be ≥ 0");
  need(s.duration_ms > 0, "duration_ms: must be > 0");
  need(s.warmup_ms >= 0 && s.cooldown_ms >= 0, "warmup_ms/cooldown_ms: must be ≥ 0");
  need(s.warmup_ms + s.cooldown_ms < s.duration_ms, "warmup_ms + cooldown_ms must be < duration_ms");
  need(s.toggles.jitter_ms >= 0, "toggles.jitter_ms: must be ≥ 0");
  need(s.protocol == Protocol::kGus || !s.toggles.n45_completed_flag.value_or(false),
       "toggles.n45_completed_flag: only meaningful for protocol gus");
  need(s.protocol == Protocol::kGus || (!s.toggles.piggyback && !s.toggles.tag_along),
       "toggles.piggyback/tag_along: only meaningful for protocol gus");
  std::set<NodeId> crashed;
  for (const auto& c : s.faults.crashes) {
    need(c.node >= 1 && c.node <= s.n, "faults: unknown node " + std::to_string(c.node));
    need(c.at >= 0, "faults: crash time must be ≥ 0");
    crashed.insert(c.node);
  }
  need(static_cast<int>(crashed.size()) <= s.f,
       "faults: " + std::to_string(crashed.size()) + " crashed nodes exceed f = " + std::to_string(s.f));
  for (const auto& d : s.script) {
    need(d.from >= 0 && d.from <= s.n && d.to >= 0 && d.to <= s.n, "script: node out of range");
    bool known = d.kind.empty();
    for (auto k : kMessageKindNames) known = known || k == d.kind;
    need(known, "script: unknown message kind '" + d.kind + "'");
    need(d.action != ScriptAction::kHoldUntilOp || !d.until.empty(), "script: hold_until needs 'until'");
  }
  try {
    scenario_quorums(s);
  } catch (const QuorumError& e) {
    throw ScenarioError(std::string("quorums: ") + e.what());
  }
  try {
    scenario_latency(s);
  } catch (const LatencyError& e) {
    throw ScenarioError(std::string("latency: ") + e.what());
  }
}

namespace detail {

template <class T>
T field(const nlohmann::json& j, const char* name, const std::string& where) {
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(where + name + ": " + e.what());
  }
}

template <class T>
void optional_field(const nlohmann::json& j, const char* name, T& out, const std::string& where = "") {
  if (j.contains(name)) out = field<T>(j, name, where);
}

inline void only_fields(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ScenarioError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ScenarioError(where + ": unknown field '" + k + "'");
  }
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j) {
  using detail::field;
  using detail::optional_field;
  detail::only_fields(j,
                      {"name", "protocol", "n", "f", "q_read", "q_write", "latency", "clients_per_node", "workload",
                       "duration_ms", "warmup_ms", "cooldown_ms", "seed", "toggles", "faults", "script"},
                      "scenario");
  Scenario s;
  optional_field(j, "name", s.name);
  if (j.contains("protocol")) {
    const auto p = field<std::string>(j, "protocol", "");
    if (p == "gus") s.protocol = Protocol::kGus;
    else if (p == "abd") s.protocol = Protocol::kAbd;
    else if (p == "fastonly") s.protocol = Protocol::kFastOnly;
    else throw ScenarioError("protocol: expected gus, abd or fastonly, got '" + p + "'");
  }
  s.n = field<int>(j, "n", "");
  s.f = j.contains("f") ? field<int>(j, "f", "") : (s.n - 1) / 2;
  if (j.contains("q_read")) s.q_read = field<int>(j, "q_read", "");
  if (j.contains("q_write")) s.q_write = field<int>(j, "q_write", "");
  if (j.contains("latency")) {
    const auto& l = j.at("latency");
    if (l.is_string()) {
      s.latency_profile = l.get<std::string>();
    } else if (l.is_object() && l.contains("uniform")) {
      detail::only_fields(l, {"uniform"}, "latency");
      s.latency_profile = "uniform";
      s.uniform_rtt_ms = field<double>(l, "uniform", "latency.");
    } else if (l.is_object() && l.contains("rtt")) {
      detail::only_fields(l, {"rtt", "regions"}, "latency");
      s.latency_profile = "matrix";
      s.rtt_matrix = field<std::vector<std::vector<double>>>(l, "rtt", "latency.");
      optional_field(l, "regions", s.regions, "latency.");
    } else {
      throw ScenarioError("latency: expected \"table3\", \"uniform\", {\"uniform\": rtt_ms} or {\"rtt\": matrix}");
    }
  }
  optional_field(j, "clients_per_node", s.clients_per_node);
  if (j.contains("workload")) {
    const auto& w = j.at("workload");
    detail::only_fields(w, {"write_ratio", "conflict_rate", "key_space", "value_size"}, "workload");
    optional_field(w, "write_ratio", s.workload.write_ratio, "workload.");
    optional_field(w, "conflict_rate", s.workload.conflict_rate, "workload.");
    optional_field(w, "key_space", s.workload.key_space, "workload.");
    optional_field(w, "value_size", s.workload.value_size, "workload.");
  }
  optional_field(j, "duration_ms", s.duration_ms);
  optional_field(j, "warmup_ms", s.warmup_ms);
  optional_field(j, "cooldown_ms", s.cooldown_ms);
  optional_field(j, "seed", s.seed);
  if (j.contains("toggles")) {
    const auto& t = j.at("toggles");
    detail::only_fields(t, {"piggyback", "tag_along", "n45_completed_flag", "fifo", "jitter_ms"}, "toggles");
    optional_field(t, "piggyback", s.toggles.piggyback, "toggles.");
    optional_field(t, "tag_along", s.toggles.tag_along, "toggles.");
    if (t.contains("n45_completed_flag")) s.toggles.n45_completed_flag = field<bool>(t, "n45_completed_flag", "toggles.");
    optional_field(t, "fifo", s.toggles.fifo, "toggles.");
    optional_field(t, "jitter_ms", s.toggles.jitter_ms, "toggles.");
  }
  if (j.contains("faults")) {
    for (const auto& c : j.at("faults")) {
      detail::only_fields(c, {"node", "at_ms"}, "faults[]");
      s.faults.crashes.push_back(Crash{field<int>(c, "node", "faults[]."), from_ms(field<double>(c, "at_ms", "faults[]."))});
    }
  }
  if (j.contains("script")) {
    for (const auto& d : j.at("script")) {
      detail::only_fields(d, {"from", "to", "kind", "occurrence", "action", "at_ms", "until"}, "script[]");
      ScriptDirective sd;
      optional_field(d, "from", sd.from, "script[].");
      optional_field(d, "to", sd.to, "script[].");
      optional_field(d, "kind", sd.kind, "script[].");
      optional_field(d, "occurrence", sd.occurrence, "script[].");
      const auto action = field<std::string>(d, "action", "script[].");
      if (action == "drop") {
        sd.action = ScriptAction::kDrop;
      } else if (action == "deliver_at") {
        sd.action = ScriptAction::kDeliverAt;
        sd.at = from_ms(field<double>(d, "at_ms", "script[]."));
      } else if (action == "hold_until") {
        sd.action = ScriptAction::kHoldUntilOp;
        sd.until = field<std::string>(d, "until", "script[].");
      } else {
        throw ScenarioError("script[].action: expected drop, deliver_at or hold_until, got '" + action + "'");
      }
      s.script.push_back(std::move(sd));
    }
  }
  validate_scenario(s);
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(path + ": " + e.what());
  }
  return parse_scenario(j);
}

}  // namespace gus
