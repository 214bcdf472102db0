#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>

namespace gus {

// Nodes are numbered 1..n. Writer ids are node ids.
using NodeId = std::int32_t;
using Key = std::string;
using Value = std::string;

// Writer id of the initial register value; below every real node id.
inline constexpr NodeId kBottomId = 0;

// Version identifier of a written value. Ordered by timestamp, then writer id.
struct Tag {
  std::int64_t ts = 0;
  NodeId id = kBottomId;

  friend constexpr auto operator<=>(const Tag&, const Tag&) = default;

  constexpr bool is_initial() const { return ts == 0 && id == kBottomId; }

  std::string str() const {
    return "(" + std::to_string(ts) + "," + (id == kBottomId ? std::string("_") : std::to_string(id)) + ")";
  }
};

inline constexpr Tag kInitialTag{};

inline std::ostream& operator<<(std::ostream& os, const Tag& t) { return os << t.str(); }

// tag_cmp: three-way comparison, timestamp first, writer id tie-break.
constexpr std::strong_ordering tag_cmp(const Tag& a, const Tag& b) { return a <=> b; }

// Identifies one write independent of the tag(s) it travels under.
struct WriteId {
  NodeId writer = kBottomId;
  std::uint64_t seq = 0;
  friend constexpr auto operator<=>(const WriteId&, const WriteId&) = default;
};

// Value of a never-written key.
inline const Value& default_value() {
  static const Value v = "0000000000000000";
  return v;
}

}  // namespace gus
