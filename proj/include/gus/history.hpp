#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gus/latency.hpp"
#include "gus/replica.hpp"
#include "gus/rng.hpp"

namespace gus {

using ClientId = std::uint32_t;

struct HistoryEvent {
  OpId op = 0;
  ClientId client = 0;
  NodeId node = 0;
  Key key;
  OpKind kind = OpKind::kRead;
  Value value;  // written value, or the value a read returned
  Ticks invoke = 0;
  std::optional<Ticks> response;
  // Global event sequence numbers; these break ties between equal timestamps.
  std::uint64_t invoke_order = 0;
  std::uint64_t response_order = 0;
  int phases = 0;
  Tag tag;
  WriteId source;
  std::string label;

  bool pending() const { return !response.has_value(); }
  Ticks latency() const { return response ? *response - invoke : 0; }
};

using History = std::vector<HistoryEvent>;

inline std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Values produced by the workload are already 16-hex digests and pass through.
inline std::string value_digest(const Value& v) {
  if (v.size() == 16 && v.find_first_not_of("0123456789abcdef") == std::string::npos) return v;
  return hex16(fnv1a(v));
}

inline constexpr const char* kHistoryCsvHeader =
    "op_id,key,client,node,kind,invoke_ms,response_ms,latency_ms,phases,tag_ts,tag_id,value_digest";

inline std::string format_ms(Ticks t) {
  std::ostringstream os;
  os << t / kTicksPerMs << '.' << t % kTicksPerMs;
  return os.str();
}

inline void write_history_csv(std::ostream& os, const History& h) {
  os << kHistoryCsvHeader << '\n';
  for (const auto& e : h) {
    os << e.op << ',' << e.key << ',' << e.client << ',' << e.node << ',' << to_string(e.kind) << ','
       << format_ms(e.invoke) << ',';
    if (e.response) {
      os << format_ms(*e.response) << ',' << format_ms(e.latency()) << ',' << e.phases << ',' << e.tag.ts << ','
         << e.tag.id << ',';
    } else {
      os << ",,,,,";
    }
    if (e.kind == OpKind::kWrite || e.response) os << value_digest(e.value);
    os << '\n';
  }
}

class HistoryParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline Ticks parse_ms(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return from_ms(v);
  } catch (const std::exception&) {
    throw HistoryParseError("line " + std::to_string(line) + ": bad time '" + s + "'");
  }
}

inline long long parse_int(const std::string& s, std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw HistoryParseError("line " + std::to_string(line) + ": bad " + what + " '" + s + "'");
  }
}

}  // namespace detail

// Event order is rebuilt from times alone: everything at one tick counts as
// concurrent, which can only make the check more permissive.
inline History read_history_csv(std::istream& is) {
  History h;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw HistoryParseError("empty history file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHistoryCsvHeader) throw HistoryParseError("unexpected header: " + line);
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 12)
      throw HistoryParseError("line " + std::to_string(lineno) + ": expected 12 fields, got " +
                              std::to_string(f.size()));
    HistoryEvent e;
    e.op = static_cast<OpId>(detail::parse_int(f[0], lineno, "op_id"));
    e.key = f[1];
    e.client = static_cast<ClientId>(detail::parse_int(f[2], lineno, "client"));
    e.node = static_cast<NodeId>(detail::parse_int(f[3], lineno, "node"));
    if (f[4] == "read") e.kind = OpKind::kRead;
    else if (f[4] == "write") e.kind = OpKind::kWrite;
    else throw HistoryParseError("line " + std::to_string(lineno) + ": bad kind '" + f[4] + "'");
    e.invoke = detail::parse_ms(f[5], lineno);
    e.invoke_order = 2 * static_cast<std::uint64_t>(e.invoke);
    if (!f[6].empty()) {
      e.response = detail::parse_ms(f[6], lineno);
      e.response_order = 2 * static_cast<std::uint64_t>(*e.response) + 1;
      e.phases = static_cast<int>(detail::parse_int(f[8], lineno, "phases"));
      e.tag = Tag{detail::parse_int(f[9], lineno, "tag_ts"),
                  static_cast<NodeId>(detail::parse_int(f[10], lineno, "tag_id"))};
    }
    e.value = f[11];
    h.push_back(std::move(e));
  }
  return h;
}

}  // namespace gus
