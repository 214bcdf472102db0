#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "gus/history.hpp"

namespace gus {

struct LinOptions {
  std::uint64_t max_steps = 50'000'000;  // per key; exceeding it yields an inconclusive verdict
  bool minimize = true;                  // search for the shortest failing prefix
  std::uint64_t witness_steps = 1'000'000;  // budget for a witness once the zone test has passed
};

struct KeyVerdict {
  Key key;
  bool ok = true;
  bool conclusive = true;
  // A valid linearization order (completed ops plus the pending writes it used).
  // May be empty when the zone test decided a history too large to search.
  std::vector<OpId> witness;
  // On failure: the shortest event prefix that is already non-linearizable, and the
  // operation whose invocation or response closes it.
  std::size_t violating_prefix = 0;
  OpId violating_op = 0;
  std::uint64_t steps = 0;
};

struct Verdict {
  bool ok = true;
  bool conclusive = true;
  std::size_t ops = 0;
  std::vector<KeyVerdict> keys;

  const KeyVerdict* first_failure() const {
    for (const auto& k : keys)
      if (!k.ok) return &k;
    return nullptr;
  }
};

namespace detail {

// Wing & Gong search with Lowe's memoization over (linearized set, register value).
class RegisterSearch {
 public:
  RegisterSearch(const std::vector<const HistoryEvent*>& ops, std::uint64_t max_steps) : ops_(ops), max_steps_(max_steps) {}

  bool run() {
    build();
    for (auto* h : ops_)
      if (h->kind == OpKind::kRead) observed_.insert(h->value);
    std::vector<Frame> calls;
    std::vector<std::uint64_t> linearized((ops_.size() + 63) / 64, 0);
    int state = intern(default_value());
    int entry = next_[kHead];
    auto bit = [&](int op) -> std::uint64_t& { return linearized[op / 64]; };
    auto mask = [](int op) { return std::uint64_t{1} << (op % 64); };
    // Undo moves until one with an untried alternative; false if none is left.
    auto backtrack = [&]() {
      while (!calls.empty()) {
        const Frame f = calls.back();
        calls.pop_back();
        const int op = entries_[f.entry].op;
        bit(op) &= ~mask(op);
        state = f.state;
        unlift(f.entry);
        if (!f.forced) {
          entry = next_[f.entry];
          return true;
        }
      }
      return false;
    };
    while (next_[kHead] != kTail) {
      if (++steps_ > max_steps_) {
        conclusive_ = false;
        return false;
      }
      const Entry& e = entries_[entry];
      if (!e.call) {
        if (ops_[e.op]->pending()) break;
        if (!backtrack()) return false;
        continue;
      }
      const HistoryEvent& h = *ops_[e.op];
      int next_state = state;
      bool legal = true;
      if (h.kind == OpKind::kWrite) next_state = intern(h.value);
      else legal = state != kUnobserved && values_[state] == h.value;
      if (!legal) {
        entry = next_[entry];
        continue;
      }
      // Dominance: an enabled read of the current value, or an unread write
      // while the current value is unread anyway, can be taken now without loss.
      const bool forced = h.kind == OpKind::kRead || (state == kUnobserved && next_state == kUnobserved);
      bit(e.op) |= mask(e.op);
      if (memo_.insert(Memo{linearized, next_state}).second) {
        calls.push_back(Frame{entry, state, forced});
        state = next_state;
        lift(entry);
        entry = next_[kHead];
        continue;
      }
      bit(e.op) &= ~mask(e.op);
      if (forced) {
        if (!backtrack()) return false;
      } else {
        entry = next_[entry];
      }
    }
    for (const auto& f : calls) witness_.push_back(ops_[entries_[f.entry].op]->op);
    return true;
  }

  bool conclusive() const { return conclusive_; }
  std::uint64_t steps() const { return steps_; }
  const std::vector<OpId>& witness() const { return witness_; }

 private:
  static constexpr int kHead = 0;
  static constexpr int kTail = 1;
  static constexpr int kUnobserved = -1;

  struct Entry {
    bool call = true;
    int op = -1;
    int match = -1;
    std::uint64_t order = 0;
  };
  struct Frame {
    int entry;
    int state;
    bool forced;
  };
  struct Memo {
    std::vector<std::uint64_t> bits;
    int state;
    bool operator==(const Memo&) const = default;
  };
  struct MemoHash {
    std::size_t operator()(const Memo& m) const {
      std::uint64_t h = static_cast<std::uint64_t>(m.state) * 0x9e3779b97f4a7c15ULL;
      for (auto w : m.bits) h = (h ^ w) * 0x100000001b3ULL + (h >> 29);
      return static_cast<std::size_t>(h);
    }
  };

  void build() {
    entries_.assign(2, Entry{});
    std::vector<int> order;
    for (int i = 0; i < static_cast<int>(ops_.size()); ++i) {
      const HistoryEvent& h = *ops_[i];
      const int c = static_cast<int>(entries_.size());
      entries_.push_back(Entry{true, i, c + 1, h.invoke_order});
      entries_.push_back(Entry{false, i, c, h.pending() ? std::numeric_limits<std::uint64_t>::max() : h.response_order});
      order.push_back(c);
      order.push_back(c + 1);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (entries_[a].order != entries_[b].order) return entries_[a].order < entries_[b].order;
      return entries_[a].call && !entries_[b].call;
    });
    next_.assign(entries_.size(), kTail);
    prev_.assign(entries_.size(), kHead);
    int last = kHead;
    for (int idx : order) {
      next_[last] = idx;
      prev_[idx] = last;
      last = idx;
    }
    next_[last] = kTail;
    prev_[kTail] = last;
  }

  void remove(int e) {
    next_[prev_[e]] = next_[e];
    prev_[next_[e]] = prev_[e];
  }
  void restore(int e) {
    next_[prev_[e]] = e;
    prev_[next_[e]] = e;
  }
  void lift(int call) {
    remove(call);
    remove(entries_[call].match);
  }
  void unlift(int call) {
    restore(entries_[call].match);
    restore(call);
  }

  // Values no read returns are interchangeable for the rest of the search and
  // share one state, which collapses orderings among unobserved writes.
  int intern(const Value& v) {
    if (!observed_.count(v)) return kUnobserved;
    auto [it, fresh] = ids_.try_emplace(v, static_cast<int>(values_.size()));
    if (fresh) values_.push_back(v);
    return it->second;
  }

  const std::vector<const HistoryEvent*>& ops_;
  std::uint64_t max_steps_;
  std::vector<Entry> entries_;
  std::vector<int> next_, prev_;
  std::unordered_set<Memo, MemoHash> memo_;
  std::set<Value> observed_;
  std::map<Value, int> ids_;
  std::vector<Value> values_;
  std::uint64_t steps_ = 0;
  bool conclusive_ = true;
  std::vector<OpId> witness_;
};

// Pending reads constrain nothing and are dropped. A pending write whose value
// no completed read returned can always be omitted, so it is dropped too.
// The ops the search needs, copied so bounds can be tightened.
struct Pruned {
  std::vector<HistoryEvent> ops;
  std::vector<const HistoryEvent*> view;
};

// Drops pending reads and pending writes nobody observed. A pending write whose
// value no other write shares and some read returned must take effect before
// that read returns, so it gets the earliest such response as its own.
inline Pruned relevant(const std::vector<const HistoryEvent*>& ops) {
  std::map<Value, const HistoryEvent*> first_read;
  std::map<Value, int> writers;
  for (auto* h : ops) {
    if (h->kind == OpKind::kWrite) ++writers[h->value];
    if (h->kind != OpKind::kRead || h->pending()) continue;
    auto [it, fresh] = first_read.try_emplace(h->value, h);
    if (!fresh && h->response_order < it->second->response_order) it->second = h;
  }
  Pruned p;
  for (auto* h : ops) {
    if (!h->pending()) {
      p.ops.push_back(*h);
      continue;
    }
    auto seen = first_read.find(h->value);
    if (h->kind == OpKind::kRead || seen == first_read.end()) continue;
    HistoryEvent e = *h;
    if (writers[h->value] == 1 && h->value != default_value() && seen->second->response_order > h->invoke_order) {
      e.response = seen->second->response;
      e.response_order = seen->second->response_order;
    }
    p.ops.push_back(std::move(e));
  }
  for (const auto& e : p.ops) p.view.push_back(&e);
  return p;
}

// The history as it stood after its first `k` events: later invocations vanish,
// later responses become pending.
inline std::vector<HistoryEvent> event_prefix(const std::vector<const HistoryEvent*>& ops,
                                              const std::vector<std::uint64_t>& event_orders, std::size_t k) {
  const std::uint64_t cut = k == 0 ? 0 : event_orders[k - 1];
  std::vector<HistoryEvent> out;
  for (auto* h : ops) {
    if (k == 0 || h->invoke_order > cut) continue;
    HistoryEvent e = *h;
    if (e.response && e.response_order > cut) {
      e.response.reset();
      e.response_order = 0;
    }
    out.push_back(std::move(e));
  }
  return out;
}

// Exact O(n log n) decision for register histories in which every written value
// is distinct and every op is complete (Gibbons and Korach). A write and the
// reads returning its value form a cluster; with f the earliest response and s
// the latest invocation in the cluster, its zone is forward [f, s] when f < s
// and backward [s, f] otherwise. The history is linearizable iff no two
// forward zones intersect and no backward zone lies inside a forward one.
// Returns nothing when the preconditions fail.
inline std::optional<bool> zone_check(const std::vector<const HistoryEvent*>& ops) {
  struct Cluster {
    std::uint64_t first_response = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t last_invoke = 0;
    bool has_write = false;
  };
  std::map<Value, Cluster> clusters;
  // The initial value behaves as a write that finished before everything.
  Cluster& initial = clusters[default_value()];
  initial.first_response = 0;
  initial.has_write = true;
  auto inv = [](const HistoryEvent* h) { return h->invoke_order + 1; };
  auto res = [](const HistoryEvent* h) { return h->response_order + 1; };
  for (auto* h : ops) {
    if (h->pending()) return std::nullopt;
    if (h->kind != OpKind::kWrite) continue;
    Cluster& c = clusters[h->value];
    if (c.has_write) return std::nullopt;
    c.has_write = true;
    c.first_response = std::min(c.first_response, res(h));
    c.last_invoke = std::max(c.last_invoke, inv(h));
  }
  for (auto* h : ops) {
    if (h->kind != OpKind::kRead) continue;
    auto it = clusters.find(h->value);
    if (it == clusters.end() || !it->second.has_write) return false;
    it->second.first_response = std::min(it->second.first_response, res(h));
    it->second.last_invoke = std::max(it->second.last_invoke, inv(h));
  }
  // A read that finished before its write began.
  for (auto* h : ops)
    if (h->kind == OpKind::kWrite && clusters[h->value].first_response < inv(h)) return false;

  std::vector<std::pair<std::uint64_t, std::uint64_t>> forward, backward;
  for (const auto& [v, c] : clusters) {
    if (c.first_response < c.last_invoke) forward.emplace_back(c.first_response, c.last_invoke);
    else backward.emplace_back(c.last_invoke, c.first_response);
  }
  std::sort(forward.begin(), forward.end());
  for (std::size_t i = 1; i < forward.size(); ++i)
    if (forward[i].first <= forward[i - 1].second) return false;
  // Forward zones are now disjoint and sorted; the only one that could hold a
  // backward zone is the last that starts at or before it.
  for (const auto& [lo, hi] : backward) {
    auto it = std::upper_bound(forward.begin(), forward.end(), std::pair{lo, std::numeric_limits<std::uint64_t>::max()});
    if (it == forward.begin()) continue;
    --it;
    if (it->first <= lo && hi <= it->second) return false;
  }
  return true;
}

inline bool linearizable_ops(const std::vector<const HistoryEvent*>& ops, std::uint64_t max_steps) {
  auto rel = relevant(ops);
  if (auto z = zone_check(rel.view)) return *z;
  RegisterSearch s(rel.view, max_steps);
  return s.run() || !s.conclusive();
}

}  // namespace detail

// Linearizability of one key's operations against an atomic register initialised
// to the default value.
inline KeyVerdict check_key(const Key& key, const std::vector<const HistoryEvent*>& ops, const LinOptions& opt = {}) {
  KeyVerdict v;
  v.key = key;
  auto rel = detail::relevant(ops);
  if (auto z = detail::zone_check(rel.view)) {
    v.ok = *z;
    v.steps = rel.view.size();
    if (v.ok) {
      detail::RegisterSearch s(rel.view, opt.witness_steps);
      if (s.run()) v.witness = s.witness();
      return v;
    }
  } else {
    detail::RegisterSearch s(rel.view, opt.max_steps);
    v.ok = s.run();
    v.conclusive = s.conclusive();
    v.steps = s.steps();
    if (v.ok) {
      v.witness = s.witness();
      return v;
    }
    if (!v.conclusive) {
      v.ok = true;
      return v;
    }
  }
  // Linearizability is prefix-closed, so the failing prefixes form a suffix of
  // the event indices and binary search finds the shortest.
  std::vector<std::uint64_t> orders;
  for (auto* h : ops) {
    orders.push_back(h->invoke_order);
    if (h->response) orders.push_back(h->response_order);
  }
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  std::size_t lo = 1, hi = orders.size();
  if (opt.minimize) {
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      auto prefix = detail::event_prefix(ops, orders, mid);
      std::vector<const HistoryEvent*> ptrs;
      for (auto& e : prefix) ptrs.push_back(&e);
      if (detail::linearizable_ops(ptrs, opt.max_steps)) lo = mid + 1;
      else hi = mid;
    }
  } else {
    lo = orders.size();
  }
  v.violating_prefix = lo;
  const std::uint64_t closing = orders[lo - 1];
  for (auto* h : ops)
    if (h->invoke_order == closing || (h->response && h->response_order == closing)) v.violating_op = h->op;
  return v;
}

// Registers are independent objects, so the history is checked key by key.
inline Verdict check_history(const History& h, const LinOptions& opt = {}) {
  std::map<Key, std::vector<const HistoryEvent*>> by_key;
  for (const auto& e : h) by_key[e.key].push_back(&e);
  Verdict v;
  v.ops = h.size();
  for (const auto& [key, ops] : by_key) {
    KeyVerdict kv = check_key(key, ops, opt);
    v.ok = v.ok && kv.ok;
    v.conclusive = v.conclusive && kv.conclusive;
    v.keys.push_back(std::move(kv));
  }
  return v;
}

}  // namespace gus
