#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "gus/quorum.hpp"
#include "gus/replica.hpp"

namespace gus {

// Bit j set <=> node j. Node ids are 1..63.
using NodeSet = std::uint64_t;

constexpr NodeSet node_bit(NodeId n) { return NodeSet{1} << n; }
constexpr NodeSet all_nodes(int n) { return ((NodeSet{1} << (n + 1)) - 1) & ~NodeSet{1}; }
inline int node_count(NodeSet s) { return std::popcount(s); }

// tag -> nodes known to have stored the version carrying that tag.
// view[j] of the protocol is { t : bit j of view_map[t] }.
using ViewMap = std::map<Tag, NodeSet>;
using StorageMap = std::map<Tag, StoredVersion>;

// SafeToRead: the smallest stored tag >= tag_max that a read quorum containing
// `self` has stored, together with its value. When `final_tags` is given, a tag
// not known to be final needs `q_unconfirmed` holders instead of q_read.
inline std::optional<StoredVersion> safe_to_read(const ViewMap& view, const StorageMap& storage, NodeId self,
                                                 int q_read, const Tag& tag_max,
                                                 const std::set<Tag>* final_tags = nullptr, int q_unconfirmed = 0) {
  for (auto it = storage.lower_bound(tag_max); it != storage.end(); ++it) {
    auto v = view.find(it->first);
    if (v == view.end() || !(v->second & node_bit(self))) continue;
    int need = q_read;
    if (final_tags && !final_tags->count(it->first)) need = std::max(q_read, q_unconfirmed);
    if (node_count(v->second) >= need) return it->second;
  }
  return std::nullopt;
}

struct GusOptions {
  bool piggyback = false;       // ack-read carries a value the responder knows is final
  bool tag_along = false;       // co-located reads join an in-flight read (not linearizable in general)
  bool completed_flag = false;  // ack-write says whether the responder's greater tags are still pending
};

class GusNode final : public Replica {
 public:
  struct WriteOp {
    OpId op = 0;
    std::uint64_t seq = 0;
    Value value;
    Tag speculative;
    Tag commit;
    int phase = 1;
    NodeSet responded = 0;
    NodeSet adopters = 0;  // responders that stored the value under the speculative tag
    int ok = 0;            // adopters plus pending-flagged responders
    int others_not_ok = 0;
    std::int64_t max_ts = 0;
    NodeSet commit_acks = 0;
  };

  struct ReadOp {
    OpId op = 0;
    NodeSet acked = 0;
    bool have_quorum = false;
    Tag tag_max;
    std::vector<OpId> riders;
  };

  struct KeyState {
    StorageMap storage;
    std::map<WriteId, Tag> index;  // write -> its tag in storage
    Tag cur;
    ViewMap view;
    std::map<NodeId, StoredVersion> tmp;  // most recent pending write per writer
    std::set<Tag> committed;
    std::set<Tag> final_tags;  // tags that will never be re-tagged
    std::map<WriteId, Tag> early_commits;
    std::map<Tag, WriteId> seen;  // every tag this node has handled
    std::optional<WriteOp> write;
    std::map<OpId, ReadOp> reads;
    std::optional<OpId> lead_read;
  };

  // A writer goes slow once `slow_after` other nodes answered without adopting,
  // the most it can wait for with f nodes down. A read may return a tag it does
  // not know to be final only with n − slow_after holders, so the two never
  // both happen for one speculative tag.
  GusNode(NodeId self, QuorumConfig q, GusOptions opt = {}) : self_(self), q_(q), opt_(opt) {
    if (self < 1 || self > q.n) throw std::invalid_argument("node id out of range");
    if (q.n > 63) throw std::invalid_argument("at most 63 nodes");
    slow_after_ = std::max(1, q.n - q.f - q.q_write + 1);
    q_unconfirmed_ = std::max(q.q_read, q.n - slow_after_);
  }

  int slow_after() const { return slow_after_; }
  int unconfirmed_read_quorum() const { return q_unconfirmed_; }

  NodeId id() const override { return self_; }
  const QuorumConfig& quorums() const { return q_; }
  const GusOptions& options() const { return opt_; }

  // nullptr until the key is first touched.
  const KeyState* state(const Key& key) const {
    auto it = keys_.find(key);
    return it == keys_.end() ? nullptr : &it->second;
  }

  void invoke_write(OpId op, const Key& key, const Value& value, Output& out) override {
    KeyState& k = touch(key);
    if (k.write) throw std::logic_error("node " + std::to_string(self_) + " already has a write in flight on " + key);
    WriteOp w;
    w.op = op;
    w.seq = ++seq_;
    w.value = value;
    w.max_ts = k.cur.ts;
    w.speculative = Tag{k.cur.ts + 1, self_};
    // The local copy is stored now but only announced once the tag is final.
    store(k, key, StoredVersion{w.speculative, value, WriteId{self_, w.seq}}, out);
    w.responded = node_bit(self_);
    w.adopters = node_bit(self_);
    w.ok = 1;
    k.write = std::move(w);
    for (NodeId j = 1; j <= q_.n; ++j)
      if (j != self_) out.send(self_, j, WriteMsg{key, k.write->speculative, value, k.write->seq});
    decide(k, key, out);
  }

  void invoke_read(OpId op, const Key& key, Output& out) override {
    KeyState& k = touch(key);
    if (opt_.tag_along && k.lead_read) {
      k.reads.at(*k.lead_read).riders.push_back(op);
      return;
    }
    k.reads.emplace(op, ReadOp{op});
    if (opt_.tag_along) k.lead_read = op;
    for (NodeId j = 1; j <= q_.n; ++j) out.send(self_, j, ReadMsg{key, op});
  }

  void receive(NodeId from, const Message& msg, Output& out) override {
    std::visit([&](const auto& m) { on(from, m, out); }, msg);
  }

  void mark_completed(const Key& key, const Tag& tag) { touch(key).committed.insert(tag); }

  bool is_completed(const Key& key, const Tag& tag) const {
    const KeyState* k = state(key);
    return k && k->committed.count(tag);
  }

 private:
  KeyState& touch(const Key& key) {
    auto [it, fresh] = keys_.try_emplace(key);
    KeyState& k = it->second;
    if (fresh) {
      const WriteId none{};
      k.storage.emplace(kInitialTag, StoredVersion{kInitialTag, default_value(), none});
      k.index.emplace(none, kInitialTag);
      k.view.emplace(kInitialTag, all_nodes(q_.n));
      k.final_tags.insert(kInitialTag);
      k.committed.insert(kInitialTag);
      k.seen.emplace(kInitialTag, none);
    }
    return k;
  }

  void broadcast(const Message& m, Output& out) const {
    for (NodeId j = 1; j <= q_.n; ++j)
      if (j != self_) out.send(self_, j, m);
  }

  void store(KeyState& k, const Key& key, StoredVersion v, Output& out) {
    k.index[v.write] = v.tag;
    k.seen[v.tag] = v.write;
    if (k.cur < v.tag) k.cur = v.tag;
    out.stored.push_back(StoreEvent{key, v.tag, v.write});
    k.storage.insert_or_assign(v.tag, std::move(v));
  }

  void retag(KeyState& k, const Key& key, const WriteId& w, const Tag& to, Output& out) {
    auto idx = k.index.find(w);
    if (idx->second == to) return;
    auto node = k.storage.extract(idx->second);
    StoredVersion v = std::move(node.mapped());
    v.tag = to;
    store(k, key, std::move(v), out);
  }

  // True unless every known tag above `incoming` belongs to this node's own write in flight.
  bool greater_tag_completed(const KeyState& k, const Tag& incoming) const {
    for (auto it = k.seen.upper_bound(incoming); it != k.seen.end(); ++it) {
      const WriteId& w = it->second;
      if (!(w.writer == self_ && k.write && k.write->seq == w.seq)) return true;
    }
    return false;
  }

  void decide(KeyState& k, const Key& key, Output& out) {
    WriteOp& w = *k.write;
    if (w.phase != 1) return;
    if (w.ok >= q_.q_write) {
      finish_fast(k, key, out);
    } else if (w.others_not_ok >= slow_after_ && node_count(w.responded) > q_.n - q_.q_write) {
      // The commit timestamp must cover every write quorum, hence n − q_write + 1 replies.
      start_commit(k, key, out);
    }
  }

  void finish_fast(KeyState& k, const Key& key, Output& out) {
    WriteOp w = std::move(*k.write);
    k.write.reset();
    const Tag& t = w.speculative;
    k.view[t] |= node_bit(self_) | w.adopters;
    k.final_tags.insert(t);
    k.committed.insert(t);
    broadcast(UpdateViewMsg{key, t}, out);
    out.done.push_back(Completion{w.op, OpKind::kWrite, key, w.value, t, WriteId{self_, w.seq}, 1});
    recheck_reads(k, key, out);
  }

  void start_commit(KeyState& k, const Key& key, Output& out) {
    WriteOp& w = *k.write;
    w.phase = 2;
    w.commit = Tag{w.max_ts + 1, self_};
    apply_commit(k, key, self_, w.commit, w.seq, out);
    w.commit_acks = node_bit(self_);
    broadcast(CommitWriteMsg{key, w.commit, w.seq}, out);
    maybe_finish_commit(k, key, out);
  }

  void maybe_finish_commit(KeyState& k, const Key& key, Output& out) {
    WriteOp& w = *k.write;
    if (node_count(w.commit_acks) < q_.q_write) return;
    WriteOp done = std::move(w);
    k.write.reset();
    k.committed.insert(done.commit);
    out.done.push_back(Completion{done.op, OpKind::kWrite, key, done.value, done.commit, WriteId{self_, done.seq}, 2});
    recheck_reads(k, key, out);
  }

  // Stores writer j's write under its final tag. False if the value has not arrived yet.
  bool apply_commit(KeyState& k, const Key& key, NodeId writer, const Tag& tag, std::uint64_t seq, Output& out) {
    const WriteId w{writer, seq};
    auto t = k.tmp.find(writer);
    if (t != k.tmp.end() && t->second.write == w) {
      StoredVersion v = std::move(t->second);
      k.tmp.erase(t);
      v.tag = tag;
      store(k, key, std::move(v), out);
    } else if (k.index.count(w)) {
      retag(k, key, w, tag, out);
    } else {
      return false;
    }
    k.view[tag] |= node_bit(self_) | node_bit(writer);
    k.final_tags.insert(tag);
    k.committed.insert(tag);
    broadcast(UpdateViewMsg{key, tag}, out);
    return true;
  }

  void on(NodeId from, const WriteMsg& m, Output& out) {
    KeyState& k = touch(m.key);
    const WriteId w{from, m.writer_seq};
    const Tag prior = k.cur;
    auto tmp = k.tmp.find(from);
    const bool duplicate = k.index.count(w) || (tmp != k.tmp.end() && tmp->second.write == w);
    const bool completed = greater_tag_completed(k, m.tag);
    if (!duplicate) {
      if (auto ec = k.early_commits.find(w); ec != k.early_commits.end()) {
        const Tag final_tag = ec->second;
        k.early_commits.erase(ec);
        k.tmp[from] = StoredVersion{m.tag, m.value, w};
        apply_commit(k, m.key, from, final_tag, m.writer_seq, out);
        out.send(self_, from, AckCommitMsg{m.key, final_tag, m.writer_seq});
      } else if (prior < m.tag) {
        store(k, m.key, StoredVersion{m.tag, m.value, w}, out);
        k.view[m.tag] |= node_bit(self_);
        broadcast(UpdateViewMsg{m.key, m.tag}, out);
      } else {
        k.tmp[from] = StoredVersion{m.tag, m.value, w};
        k.seen[m.tag] = w;
      }
    }
    out.send(self_, from, AckWriteMsg{m.key, prior, completed, m.tag, m.writer_seq});
    recheck_reads(k, m.key, out);
  }

  void on(NodeId from, const AckWriteMsg& m, Output& out) {
    KeyState& k = touch(m.key);
    if (!k.write || k.write->seq != m.writer_seq || k.write->phase != 1) return;
    WriteOp& w = *k.write;
    if (w.responded & node_bit(from)) return;
    w.responded |= node_bit(from);
    w.max_ts = std::max(w.max_ts, m.responder_tag.ts);
    if (m.responder_tag < m.echo_tag) {
      w.adopters |= node_bit(from);
      ++w.ok;
    } else if (opt_.completed_flag && !m.responder_tag_completed) {
      ++w.ok;
    } else {
      ++w.others_not_ok;
    }
    decide(k, m.key, out);
  }

  void on(NodeId from, const CommitWriteMsg& m, Output& out) {
    KeyState& k = touch(m.key);
    if (apply_commit(k, m.key, from, m.tag, m.writer_seq, out)) {
      out.send(self_, from, AckCommitMsg{m.key, m.tag, m.writer_seq});
      recheck_reads(k, m.key, out);
    } else {
      k.early_commits[WriteId{from, m.writer_seq}] = m.tag;
    }
  }

  void on(NodeId from, const AckCommitMsg& m, Output& out) {
    KeyState& k = touch(m.key);
    k.view[m.tag] |= node_bit(from);
    if (!k.write || k.write->seq != m.writer_seq || k.write->phase != 2 || k.write->commit != m.tag) return;
    k.write->commit_acks |= node_bit(from);
    maybe_finish_commit(k, m.key, out);
  }

  void on(NodeId from, const ReadMsg& m, Output& out) {
    KeyState& k = touch(m.key);
    AckReadMsg ack{m.key, m.rid, k.cur, std::nullopt};
    if (opt_.piggyback) {
      for (auto it = k.storage.rbegin(); it != k.storage.rend(); ++it) {
        if (k.final_tags.count(it->first)) {
          ack.piggyback = it->second;
          break;
        }
      }
    }
    out.send(self_, from, std::move(ack));
  }

  void on(NodeId from, const AckReadMsg& m, Output& out) {
    KeyState& k = touch(m.key);
    auto r = k.reads.find(m.rid);
    if (r == k.reads.end() || (r->second.acked & node_bit(from))) return;
    ReadOp& rd = r->second;
    rd.acked |= node_bit(from);
    // A responder's tag is in its storage; its own undecided write is the exception.
    if (m.responder_tag.id != from) k.view[m.responder_tag] |= node_bit(from);
    if (opt_.piggyback && m.piggyback) absorb(k, m.key, *m.piggyback, from, out);
    if (rd.have_quorum) return;
    if (rd.tag_max < m.responder_tag) rd.tag_max = m.responder_tag;
    if (node_count(rd.acked) >= q_.q_read) {
      rd.have_quorum = true;
      if (try_finish_read(k, m.key, m.rid, 1, out)) {
        recheck_reads(k, m.key, out);
        return;
      }
    }
    recheck_reads(k, m.key, out);
  }

  void on(NodeId from, const UpdateViewMsg& m, Output& out) {
    KeyState& k = touch(m.key);
    NodeSet& holders = k.view[m.tag];
    holders |= node_bit(from);
    if (m.tag.id == from) k.final_tags.insert(m.tag);
    if (node_count(holders) >= q_.q_write) k.committed.insert(m.tag);
    recheck_reads(k, m.key, out);
  }

  void on(NodeId, const QueryMsg&, Output&) {}
  void on(NodeId, const QueryReplyMsg&, Output&) {}
  void on(NodeId, const StoreMsg&, Output&) {}
  void on(NodeId, const StoreAckMsg&, Output&) {}

  // Adopts a final version piggybacked on an ack-read from `from`.
  void absorb(KeyState& k, const Key& key, const StoredVersion& v, NodeId from, Output& out) {
    if (!k.storage.count(v.tag)) {
      if (k.index.count(v.write)) {
        retag(k, key, v.write, v.tag, out);
      } else {
        if (auto t = k.tmp.find(v.write.writer); t != k.tmp.end() && t->second.write == v.write) k.tmp.erase(t);
        store(k, key, v, out);
      }
      broadcast(UpdateViewMsg{key, v.tag}, out);
    }
    k.view[v.tag] |= node_bit(self_) | node_bit(from);
    k.final_tags.insert(v.tag);
  }

  bool try_finish_read(KeyState& k, const Key& key, OpId rid, int phases, Output& out) {
    ReadOp& rd = k.reads.at(rid);
    auto v = safe_to_read(k.view, k.storage, self_, q_.q_read, rd.tag_max, &k.final_tags, q_unconfirmed_);
    if (!v) return false;
    out.done.push_back(Completion{rd.op, OpKind::kRead, key, v->value, v->tag, v->write, phases});
    for (OpId rider : rd.riders) out.done.push_back(Completion{rider, OpKind::kRead, key, v->value, v->tag, v->write, 0});
    if (k.lead_read == rid) k.lead_read.reset();
    k.reads.erase(rid);
    return true;
  }

  void recheck_reads(KeyState& k, const Key& key, Output& out) {
    std::vector<OpId> waiting;
    for (const auto& [rid, rd] : k.reads)
      if (rd.have_quorum) waiting.push_back(rid);
    for (OpId rid : waiting) try_finish_read(k, key, rid, 2, out);
  }

  NodeId self_;
  QuorumConfig q_;
  GusOptions opt_;
  int slow_after_ = 1;
  int q_unconfirmed_ = 0;
  std::uint64_t seq_ = 0;
  std::map<Key, KeyState> keys_;
};

}  // namespace gus
