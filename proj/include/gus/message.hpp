#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>

#include "gus/tag.hpp"

namespace gus {

using OpId = std::uint64_t;

// A (tag, value) pair as it lives in a node's storage.
struct StoredVersion {
  Tag tag;
  Value value;
  WriteId write;  // (writer, writer_seq): stable across re-tagging
};

// ---- Gus protocol messages ----

struct WriteMsg {
  Key key;
  Tag tag;  // speculative tag
  Value value;
  std::uint64_t writer_seq = 0;
};

struct AckWriteMsg {
  Key key;
  Tag responder_tag;  // responder's tag before handling the write
  bool responder_tag_completed = true;
  Tag echo_tag;  // the speculative tag being acknowledged
  std::uint64_t writer_seq = 0;
};

struct CommitWriteMsg {
  Key key;
  Tag tag;
  std::uint64_t writer_seq = 0;
};

struct AckCommitMsg {
  Key key;
  Tag tag;
  std::uint64_t writer_seq = 0;
};

struct ReadMsg {
  Key key;
  OpId rid = 0;
};

struct AckReadMsg {
  Key key;
  OpId rid = 0;
  Tag responder_tag;
  std::optional<StoredVersion> piggyback;
};

struct UpdateViewMsg {
  Key key;
  Tag tag;
};

// ---- Baseline (ABD / FastOnly) messages ----

struct QueryMsg {
  Key key;
  OpId rid = 0;
};

struct QueryReplyMsg {
  Key key;
  OpId rid = 0;
  StoredVersion version;
};

struct StoreMsg {
  Key key;
  OpId rid = 0;
  StoredVersion version;
};

struct StoreAckMsg {
  Key key;
  OpId rid = 0;
};

using Message = std::variant<WriteMsg, AckWriteMsg, CommitWriteMsg, AckCommitMsg, ReadMsg, AckReadMsg, UpdateViewMsg,
                             QueryMsg, QueryReplyMsg, StoreMsg, StoreAckMsg>;

inline constexpr std::string_view kMessageKindNames[] = {
    "write", "ack-write", "commit-write", "ack-commit", "read",  "ack-read",
    "update-view", "query", "query-reply", "store", "store-ack"};
inline constexpr std::size_t kMessageKinds = std::variant_size_v<Message>;

inline std::string_view message_kind(const Message& m) { return kMessageKindNames[m.index()]; }

inline const Key& message_key(const Message& m) {
  return std::visit([](const auto& x) -> const Key& { return x.key; }, m);
}

struct Envelope {
  NodeId from = 0;
  NodeId to = 0;
  Message msg;
};

}  // namespace gus
