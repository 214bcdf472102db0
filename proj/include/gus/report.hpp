#pragma once

#include <ostream>
#include <string>

#include <json.hpp>

#include "gus/lincheck.hpp"
#include "gus/run.hpp"

namespace gus {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitViolation = 2;
inline constexpr int kExitLiveness = 3;

inline nlohmann::json telemetry_json(const Telemetry& t) {
  nlohmann::json kinds = nlohmann::json::object();
  for (std::size_t i = 0; i < kMessageKinds; ++i) kinds[std::string(kMessageKindNames[i])] = t.sent_by_kind[i];
  return {{"sent", t.sent},
          {"delivered", t.delivered},
          {"dropped_script", t.dropped_script},
          {"dropped_crash", t.dropped_crash},
          {"held", t.held},
          {"conserved", t.conserved()},
          {"sent_by_kind", kinds},
          {"trace_hash", hex16(t.trace_hash)},
          {"end_ms", to_ms(t.end_time)},
          {"stores", t.stores.size()},
          {"blocked_ops", t.blocked},
          {"script_errors", t.script_errors}};
}

inline nlohmann::json verdict_json(const Verdict& v) {
  nlohmann::json keys = nlohmann::json::array();
  for (const auto& k : v.keys) {
    if (k.ok && k.conclusive) continue;
    keys.push_back({{"key", k.key},
                    {"ok", k.ok},
                    {"conclusive", k.conclusive},
                    {"violating_prefix", k.violating_prefix},
                    {"violating_op", k.violating_op},
                    {"steps", k.steps}});
  }
  return {{"ok", v.ok}, {"conclusive", v.conclusive}, {"ops", v.ops}, {"keys_checked", v.keys.size()}, {"problems", keys}};
}

// Violations outrank liveness failures.
inline int exit_code(const Verdict& v, const Telemetry& t) {
  if (!v.ok) return kExitViolation;
  if (!t.blocked.empty()) return kExitLiveness;
  return kExitOk;
}

}  // namespace gus
