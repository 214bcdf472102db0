#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gus/history.hpp"
#include "gus/latency.hpp"
#include "gus/replica.hpp"
#include "gus/rng.hpp"

namespace gus {

struct Crash {
  NodeId node = 0;
  Ticks at = 0;
};

struct FaultPlan {
  std::vector<Crash> crashes;
};

enum class ScriptAction { kDrop, kDeliverAt, kHoldUntilOp };

// Matches messages by (from, to, kind); 0 and "" are wildcards. occurrence
// selects the k-th match (0-based), or every match when negative.
struct ScriptDirective {
  NodeId from = 0;
  NodeId to = 0;
  std::string kind;
  int occurrence = -1;
  ScriptAction action = ScriptAction::kDrop;
  Ticks at = 0;        // kDeliverAt
  std::string until;   // kHoldUntilOp: label of the operation whose response releases it
};

struct SimConfig {
  LatencyModel latency;
  bool fifo = false;
  std::uint64_t seed = 1;
  FaultPlan faults;
  std::vector<ScriptDirective> script;
  std::optional<Ticks> horizon;  // stop processing events past this time
  bool record_trace = false;
};

// A version entering one node's storage.
struct StoreRecord {
  Key key;
  Tag tag;
  WriteId write;
  NodeId node = 0;
  Ticks at = 0;
};

struct Delivery {
  Ticks sent = 0;
  Ticks at = 0;
  NodeId from = 0;
  NodeId to = 0;
  std::size_t kind = 0;  // Message variant index
  std::uint64_t send_seq = 0;
};

struct Telemetry {
  std::array<std::uint64_t, kMessageKinds> sent_by_kind{};
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped_script = 0;
  std::uint64_t dropped_crash = 0;
  std::uint64_t held = 0;  // never released by the end of the run
  std::uint64_t trace_hash = 0xcbf29ce484222325ULL;
  Ticks end_time = 0;
  std::vector<StoreRecord> stores;
  std::vector<Delivery> deliveries;  // only with record_trace
  std::vector<OpId> blocked;               // invoked at a live node, never answered
  std::vector<std::string> script_errors;  // directives that matched nothing

  bool conserved() const { return sent == delivered + dropped_script + dropped_crash + held; }
};

class Simulator {
 public:
  using CompletionHook = std::function<void(Simulator&, const HistoryEvent&)>;

  Simulator(SimConfig cfg, std::vector<std::unique_ptr<Replica>> replicas)
      : cfg_(std::move(cfg)), replicas_(std::move(replicas)), rng_(cfg_.seed) {
    const int n = static_cast<int>(replicas_.size());
    if (cfg_.latency.n() != n)
      throw std::invalid_argument("latency model covers " + std::to_string(cfg_.latency.n()) + " nodes, cluster has " +
                                  std::to_string(n));
    for (int i = 0; i < n; ++i)
      if (replicas_[i]->id() != i + 1) throw std::invalid_argument("replica ids must be 1..n in order");
    crashed_.assign(n + 1, false);
    last_delivery_.assign(n + 1, std::vector<Ticks>(n + 1, 0));
    script_state_.resize(cfg_.script.size());
    for (const auto& c : cfg_.faults.crashes) {
      if (c.node < 1 || c.node > n) throw std::invalid_argument("crash of unknown node " + std::to_string(c.node));
      push(Event{c.at, 0, EventType::kCrash, {}, 0, c.node});
    }
  }

  int n() const { return static_cast<int>(replicas_.size()); }
  Ticks now() const { return now_; }
  Replica& replica(NodeId id) { return *replicas_.at(id - 1); }
  bool crashed(NodeId id) const { return crashed_.at(id); }
  const History& history() const { return history_; }
  const Telemetry& telemetry() const { return tel_; }
  void on_completion(CompletionHook hook) { hook_ = std::move(hook); }

  // Schedules an invocation; it is dropped if the node has crashed by then.
  OpId invoke(Ticks at, ClientId client, NodeId node, OpKind kind, Key key, Value value = {}, std::string label = {}) {
    if (node < 1 || node > n()) throw std::invalid_argument("invoke at unknown node " + std::to_string(node));
    const OpId op = next_op_++;
    pending_.emplace(op, Request{client, node, kind, std::move(key), std::move(value), std::move(label)});
    push(Event{std::max(at, now_), 0, EventType::kInvoke, {}, op, node});
    return op;
  }

  // Schedules a crash; from inside a completion hook this can be "right now".
  void crash(NodeId node, Ticks at) {
    if (node < 1 || node > n()) throw std::invalid_argument("crash of unknown node " + std::to_string(node));
    push(Event{std::max(at, now_), 0, EventType::kCrash, {}, 0, node});
  }

  const Telemetry& run() {
    while (!queue_.empty()) {
      Event ev = queue_.top();
      if (cfg_.horizon && ev.at > *cfg_.horizon) break;
      queue_.pop();
      now_ = ev.at;
      switch (ev.type) {
        case EventType::kCrash: crashed_[ev.node] = true; break;
        case EventType::kInvoke: start(ev.op); break;
        case EventType::kDeliver: deliver(ev); break;
      }
    }
    finish();
    return tel_;
  }

 private:
  enum class EventType { kInvoke, kDeliver, kCrash };

  struct Event {
    Ticks at = 0;
    std::uint64_t seq = 0;
    EventType type = EventType::kDeliver;
    Envelope env;
    OpId op = 0;
    NodeId node = 0;
    Ticks sent = 0;
    std::uint64_t send_seq = 0;
  };

  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  struct Request {
    ClientId client = 0;
    NodeId node = 0;
    OpKind kind = OpKind::kRead;
    Key key;
    Value value;
    std::string label;
  };

  struct Held {
    Envelope env;
    std::uint64_t send_seq = 0;
    Ticks sent = 0;
  };

  struct DirectiveState {
    int seen = 0;
    int applied = 0;
  };

  void push(Event ev) {
    ev.seq = next_seq_++;
    queue_.push(std::move(ev));
  }

  void start(OpId op) {
    auto it = pending_.find(op);
    Request& r = it->second;
    if (crashed_[r.node]) {
      pending_.erase(it);
      return;
    }
    HistoryEvent h;
    h.op = op;
    h.client = r.client;
    h.node = r.node;
    h.key = r.key;
    h.kind = r.kind;
    h.value = r.value;
    h.invoke = now_;
    h.invoke_order = next_order_++;
    h.label = r.label;
    index_[op] = history_.size();
    history_.push_back(std::move(h));

    // One outstanding write per (node, key); later ones wait at the proxy.
    if (r.kind == OpKind::kWrite) {
      auto& q = write_queue_[{r.node, r.key}];
      q.push_back(op);
      if (q.size() > 1) return;
    }
    dispatch(op);
  }

  void dispatch(OpId op) {
    const Request& r = pending_.at(op);
    Output out;
    if (r.kind == OpKind::kWrite) replica(r.node).invoke_write(op, r.key, r.value, out);
    else replica(r.node).invoke_read(op, r.key, out);
    absorb(r.node, out);
  }

  void deliver(const Event& ev) {
    const Envelope& e = ev.env;
    if (crashed_[e.to]) {
      ++tel_.dropped_crash;
      return;
    }
    ++tel_.delivered;
    if (cfg_.record_trace)
      tel_.deliveries.push_back(Delivery{ev.sent, now_, e.from, e.to, e.msg.index(), ev.send_seq});
    tel_.trace_hash = fnv1a_mix(tel_.trace_hash, static_cast<std::uint64_t>(now_));
    tel_.trace_hash = fnv1a_mix(tel_.trace_hash, (static_cast<std::uint64_t>(e.from) << 40) |
                                                     (static_cast<std::uint64_t>(e.to) << 20) | e.msg.index());
    Output out;
    replica(e.to).receive(e.from, e.msg, out);
    absorb(e.to, out);
  }

  void absorb(NodeId node, Output& out) {
    for (auto& s : out.stored) tel_.stores.push_back(StoreRecord{s.key, s.tag, s.write, node, now_});
    for (auto& env : out.sends) send(std::move(env));
    for (auto& c : out.done) complete(node, c);
  }

  void send(Envelope env) {
    send_seq_ = tel_.sent;
    ++tel_.sent;
    ++tel_.sent_by_kind[env.msg.index()];
    for (std::size_t i = 0; i < cfg_.script.size(); ++i) {
      const ScriptDirective& d = cfg_.script[i];
      if ((d.from != 0 && d.from != env.from) || (d.to != 0 && d.to != env.to) ||
          (!d.kind.empty() && d.kind != message_kind(env.msg)))
        continue;
      DirectiveState& st = script_state_[i];
      const int idx = st.seen++;
      if (d.occurrence >= 0 && idx != d.occurrence) continue;
      ++st.applied;
      switch (d.action) {
        case ScriptAction::kDrop: ++tel_.dropped_script; return;
        case ScriptAction::kDeliverAt: schedule_at(std::max(d.at, now_), std::move(env), send_seq_, now_); return;
        case ScriptAction::kHoldUntilOp:
          if (released_.count(d.until)) break;
          held_[d.until].push_back(Held{std::move(env), send_seq_, now_});
          return;
      }
    }
    schedule(std::move(env), send_seq_, now_);
  }

  void schedule(Envelope env, std::uint64_t send_seq, Ticks sent) {
    Ticks t = now_ + message_delay(cfg_.latency, env.from, env.to, rng_);
    if (cfg_.fifo) {
      Ticks& last = last_delivery_[env.from][env.to];
      t = std::max(t, last);
      last = t;
    }
    schedule_at(t, std::move(env), send_seq, sent);
  }

  void schedule_at(Ticks t, Envelope env, std::uint64_t send_seq, Ticks sent) {
    push(Event{t, 0, EventType::kDeliver, std::move(env), 0, 0, sent, send_seq});
  }

  void complete(NodeId node, const Completion& c) {
    auto idx = index_.find(c.op);
    if (idx == index_.end()) throw std::logic_error("completion for unknown op " + std::to_string(c.op));
    HistoryEvent& h = history_[idx->second];
    if (h.response) throw std::logic_error("op " + std::to_string(c.op) + " completed twice");
    h.response = now_;
    h.response_order = next_order_++;
    h.phases = c.phases;
    h.tag = c.tag;
    h.source = c.source;
    if (h.kind == OpKind::kRead) h.value = c.value;

    if (h.kind == OpKind::kWrite) {
      auto& q = write_queue_[{node, h.key}];
      if (!q.empty() && q.front() == c.op) q.pop_front();
      if (!q.empty()) dispatch(q.front());
    }
    pending_.erase(c.op);

    if (!h.label.empty()) {
      released_.insert(h.label);
      auto held = held_.find(h.label);
      if (held != held_.end()) {
        auto envs = std::move(held->second);
        held_.erase(held);
        for (auto& held : envs) schedule(std::move(held.env), held.send_seq, held.sent);
      }
    }
    // The hook may invoke more operations and so grow history_.
    if (hook_) {
      const HistoryEvent copy = h;
      hook_(*this, copy);
    }
  }

  void finish() {
    tel_.end_time = now_;
    for (const auto& [label, envs] : held_) tel_.held += envs.size();
    while (!queue_.empty()) {
      // Only reachable with a horizon: count in-flight messages as held.
      if (queue_.top().type == EventType::kDeliver) ++tel_.held;
      queue_.pop();
    }
    for (const auto& h : history_)
      if (!h.response && !crashed_[h.node]) tel_.blocked.push_back(h.op);
    for (std::size_t i = 0; i < cfg_.script.size(); ++i)
      if (script_state_[i].applied == 0) {
        const auto& d = cfg_.script[i];
        tel_.script_errors.push_back("directive " + std::to_string(i) + " (from " + std::to_string(d.from) + " to " +
                                     std::to_string(d.to) + " kind '" + d.kind + "' occurrence " +
                                     std::to_string(d.occurrence) + ") matched no message");
      }
  }

  SimConfig cfg_;
  std::vector<std::unique_ptr<Replica>> replicas_;
  Rng rng_;
  Ticks now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t send_seq_ = 0;
  std::uint64_t next_order_ = 1;
  OpId next_op_ = 1;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::vector<bool> crashed_;
  std::vector<std::vector<Ticks>> last_delivery_;
  std::vector<DirectiveState> script_state_;
  std::map<std::string, std::vector<Held>> held_;
  std::set<std::string> released_;
  std::map<OpId, Request> pending_;
  std::map<OpId, std::size_t> index_;
  std::map<std::pair<NodeId, Key>, std::deque<OpId>> write_queue_;
  History history_;
  Telemetry tel_;
  CompletionHook hook_;
};

}  // namespace gus
