#pragma once

#include <map>
#include <optional>
#include <stdexcept>

#include "gus/gus_node.hpp"
#include "gus/quorum.hpp"
#include "gus/replica.hpp"

namespace gus {

namespace detail {

// Server side shared by ABD and FastOnly: one (tag, value) per key, replaced by
// anything with a larger tag.
class SingleVersionServer {
 public:
  const StoredVersion& version(const Key& key) {
    auto [it, fresh] = regs_.try_emplace(key);
    if (fresh) it->second = StoredVersion{kInitialTag, default_value(), WriteId{}};
    return it->second;
  }

  bool offer(const Key& key, const StoredVersion& v, Output& out) {
    version(key);
    StoredVersion& cur = regs_[key];
    if (!(cur.tag < v.tag)) return false;
    cur = v;
    out.stored.push_back(StoreEvent{key, v.tag, v.write});
    return true;
  }

 private:
  std::map<Key, StoredVersion> regs_;
};

}  // namespace detail

// Multi-writer ABD. Writes: query a read quorum for the max tag, then store
// (max.ts+1, self) at a write quorum. Reads: query a read quorum, return the max;
// write it back unless every reply carried the same tag.
class AbdNode final : public Replica {
 public:
  AbdNode(NodeId self, QuorumConfig q) : self_(self), q_(q) {}

  NodeId id() const override { return self_; }
  Tag tag(const Key& key) { return server_.version(key).tag; }

  void invoke_write(OpId op, const Key& key, const Value& value, Output& out) override {
    Op& o = ops_[op];
    o = Op{op, OpKind::kWrite, key, value};
    o.write = WriteId{self_, ++seq_};
    broadcast(QueryMsg{key, op}, out);
  }

  void invoke_read(OpId op, const Key& key, Output& out) override {
    ops_[op] = Op{op, OpKind::kRead, key, {}};
    broadcast(QueryMsg{key, op}, out);
  }

  void receive(NodeId from, const Message& msg, Output& out) override {
    if (auto* m = std::get_if<QueryMsg>(&msg)) {
      out.send(self_, from, QueryReplyMsg{m->key, m->rid, server_.version(m->key)});
    } else if (auto* m = std::get_if<StoreMsg>(&msg)) {
      server_.offer(m->key, m->version, out);
      out.send(self_, from, StoreAckMsg{m->key, m->rid});
    } else if (auto* m = std::get_if<QueryReplyMsg>(&msg)) {
      on_reply(from, *m, out);
    } else if (auto* m = std::get_if<StoreAckMsg>(&msg)) {
      on_store_ack(from, *m, out);
    }
  }

 private:
  struct Op {
    OpId id = 0;
    OpKind kind = OpKind::kRead;
    Key key;
    Value value;
    WriteId write;
    int phase = 1;
    NodeSet replied = 0;
    std::optional<StoredVersion> best;
    bool all_equal = true;
    StoredVersion chosen;
  };

  void broadcast(const Message& m, Output& out) const {
    for (NodeId j = 1; j <= q_.n; ++j) out.send(self_, j, m);
  }

  void on_reply(NodeId from, const QueryReplyMsg& m, Output& out) {
    auto it = ops_.find(m.rid);
    if (it == ops_.end()) return;
    Op& o = it->second;
    if (o.phase != 1 || (o.replied & node_bit(from))) return;
    o.replied |= node_bit(from);
    if (o.best && o.best->tag != m.version.tag) o.all_equal = false;
    if (!o.best || o.best->tag < m.version.tag) o.best = m.version;
    if (node_count(o.replied) < q_.q_read) return;

    if (o.kind == OpKind::kWrite) {
      o.chosen = StoredVersion{Tag{o.best->tag.ts + 1, self_}, o.value, o.write};
    } else {
      o.chosen = *o.best;
      if (o.all_equal) {
        out.done.push_back(Completion{o.id, OpKind::kRead, o.key, o.chosen.value, o.chosen.tag, o.chosen.write, 1});
        ops_.erase(it);
        return;
      }
    }
    o.phase = 2;
    o.replied = 0;
    broadcast(StoreMsg{o.key, o.id, o.chosen}, out);
  }

  void on_store_ack(NodeId from, const StoreAckMsg& m, Output& out) {
    auto it = ops_.find(m.rid);
    if (it == ops_.end()) return;
    Op& o = it->second;
    if (o.phase != 2 || (o.replied & node_bit(from))) return;
    o.replied |= node_bit(from);
    if (node_count(o.replied) < q_.q_write) return;
    out.done.push_back(Completion{o.id, o.kind, o.key, o.chosen.value, o.chosen.tag, o.chosen.write, 2});
    ops_.erase(it);
  }

  NodeId self_;
  QuorumConfig q_;
  std::uint64_t seq_ = 0;
  detail::SingleVersionServer server_;
  std::map<OpId, Op> ops_;
};

// Strawman register whose reads and writes always finish in one round trip with
// n−f replies and never write back. Unsafe for n > 5; exists to run the
// impossibility executions.
class FastOnlyNode final : public Replica {
 public:
  FastOnlyNode(NodeId self, int n, int f) : self_(self), n_(n), quorum_(n - f) {
    if (quorum_ < 1) throw std::invalid_argument("fastonly: n - f must be positive");
  }

  NodeId id() const override { return self_; }
  int quorum() const { return quorum_; }
  Tag tag(const Key& key) { return server_.version(key).tag; }

  void invoke_write(OpId op, const Key& key, const Value& value, Output& out) override {
    const Tag t{server_.version(key).tag.ts + 1, self_};
    ops_[op] = Op{op, OpKind::kWrite, key, StoredVersion{t, value, WriteId{self_, ++seq_}}};
    broadcast(StoreMsg{key, op, ops_[op].chosen}, out);
  }

  void invoke_read(OpId op, const Key& key, Output& out) override {
    ops_[op] = Op{op, OpKind::kRead, key, {}};
    broadcast(QueryMsg{key, op}, out);
  }

  void receive(NodeId from, const Message& msg, Output& out) override {
    if (auto* m = std::get_if<QueryMsg>(&msg)) {
      out.send(self_, from, QueryReplyMsg{m->key, m->rid, server_.version(m->key)});
    } else if (auto* m = std::get_if<StoreMsg>(&msg)) {
      server_.offer(m->key, m->version, out);
      out.send(self_, from, StoreAckMsg{m->key, m->rid});
    } else if (auto* m = std::get_if<QueryReplyMsg>(&msg)) {
      auto it = ops_.find(m->rid);
      if (it == ops_.end() || (it->second.replied & node_bit(from))) return;
      Op& o = it->second;
      o.replied |= node_bit(from);
      if (!o.has_best || o.chosen.tag < m->version.tag) {
        o.chosen = m->version;
        o.has_best = true;
      }
      if (node_count(o.replied) >= quorum_) finish(it, out);
    } else if (auto* m = std::get_if<StoreAckMsg>(&msg)) {
      auto it = ops_.find(m->rid);
      if (it == ops_.end() || (it->second.replied & node_bit(from))) return;
      it->second.replied |= node_bit(from);
      if (node_count(it->second.replied) >= quorum_) finish(it, out);
    }
  }

 private:
  struct Op {
    OpId id = 0;
    OpKind kind = OpKind::kRead;
    Key key;
    StoredVersion chosen;
    NodeSet replied = 0;
    bool has_best = false;
  };

  void finish(std::map<OpId, Op>::iterator it, Output& out) {
    const Op& o = it->second;
    out.done.push_back(Completion{o.id, o.kind, o.key, o.chosen.value, o.chosen.tag, o.chosen.write, 1});
    ops_.erase(it);
  }

  void broadcast(const Message& m, Output& out) const {
    for (NodeId j = 1; j <= n_; ++j) out.send(self_, j, m);
  }

  NodeId self_;
  int n_;
  int quorum_;
  std::uint64_t seq_ = 0;
  detail::SingleVersionServer server_;
  std::map<OpId, Op> ops_;
};

}  // namespace gus
