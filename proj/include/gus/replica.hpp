#pragma once

#include <string>
#include <vector>

#include "gus/message.hpp"

namespace gus {

enum class OpKind { kRead, kWrite };

inline const char* to_string(OpKind k) { return k == OpKind::kRead ? "read" : "write"; }

// A client operation finishing at its node.
struct Completion {
  OpId op = 0;
  OpKind kind = OpKind::kRead;
  Key key;
  Value value;     // read result, or the written value
  Tag tag;         // tag the read returned / the write's final tag
  WriteId source;  // write whose value was returned (reads) or performed (writes)
  int phases = 1;
};

// A version entering a node's storage under a given tag.
struct StoreEvent {
  Key key;
  Tag tag;
  WriteId write;
};

// Everything one transition produces; the simulator owns delivery.
struct Output {
  std::vector<Envelope> sends;
  std::vector<Completion> done;
  std::vector<StoreEvent> stored;

  void send(NodeId from, NodeId to, Message m) { sends.push_back(Envelope{from, to, std::move(m)}); }
  bool empty() const { return sends.empty() && done.empty() && stored.empty(); }
};

// One replica: a server plus its co-located client proxy.
class Replica {
 public:
  virtual ~Replica() = default;

  virtual NodeId id() const = 0;
  virtual void invoke_write(OpId op, const Key& key, const Value& value, Output& out) = 0;
  virtual void invoke_read(OpId op, const Key& key, Output& out) = 0;
  virtual void receive(NodeId from, const Message& msg, Output& out) = 0;
};

}  // namespace gus
