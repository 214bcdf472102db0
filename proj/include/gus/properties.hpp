#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gus/history.hpp"
#include "gus/simnet.hpp"

namespace gus {

struct PropertyReport {
  std::vector<std::string> unique_write_tag;
  std::vector<std::string> progress_of_tag;
  std::vector<std::string> committed_write;
  std::vector<std::string> single_association;

  std::size_t violations() const {
    return unique_write_tag.size() + progress_of_tag.size() + committed_write.size() + single_association.size();
  }
  bool ok() const { return violations() == 0; }
};

namespace detail {

inline std::string op_str(const HistoryEvent& e) {
  return std::string(to_string(e.kind)) + " #" + std::to_string(e.op) + " on " + e.key + " tag " + e.tag.str();
}

}  // namespace detail

// Distinct completed writes carry distinct tags.
inline void check_unique_write_tag(const History& h, PropertyReport& rep) {
  std::map<std::pair<Key, Tag>, const HistoryEvent*> seen;
  for (const auto& e : h) {
    if (e.kind != OpKind::kWrite || e.pending()) continue;
    auto [it, fresh] = seen.try_emplace({e.key, e.tag}, &e);
    if (!fresh) rep.unique_write_tag.push_back(detail::op_str(*it->second) + " and " + detail::op_str(e));
  }
}

// If a completes before b starts, tag(b) ≥ tag(a), strictly when b is a write.
inline void check_progress_of_tag(const History& h, PropertyReport& rep) {
  std::map<Key, std::vector<const HistoryEvent*>> by_key;
  for (const auto& e : h)
    if (!e.pending()) by_key[e.key].push_back(&e);
  for (auto& [key, ops] : by_key) {
    auto by_response = ops;
    std::sort(by_response.begin(), by_response.end(),
              [](auto* a, auto* b) { return a->response_order < b->response_order; });
    std::sort(ops.begin(), ops.end(), [](auto* a, auto* b) { return a->invoke_order < b->invoke_order; });
    std::size_t i = 0;
    const HistoryEvent* best = nullptr;  // max tag among ops already answered
    for (const HistoryEvent* b : ops) {
      while (i < by_response.size() && by_response[i]->response_order < b->invoke_order) {
        if (!best || best->tag < by_response[i]->tag) best = by_response[i];
        ++i;
      }
      if (!best) continue;
      const bool bad = b->kind == OpKind::kWrite ? !(best->tag < b->tag) : b->tag < best->tag;
      if (bad) rep.progress_of_tag.push_back(detail::op_str(*best) + " precedes " + detail::op_str(*b));
    }
  }
}

// Every value a read returns was stored at ≥ q_write nodes by its response.
inline void check_committed_write(const History& h, const std::vector<StoreRecord>& stores, int q_write,
                                  PropertyReport& rep) {
  std::map<std::pair<Key, WriteId>, std::map<NodeId, Ticks>> first_store;
  for (const auto& s : stores) {
    auto& m = first_store[{s.key, s.write}];
    if (!m.count(s.node)) m[s.node] = s.at;
  }
  for (const auto& e : h) {
    if (e.kind != OpKind::kRead || e.pending() || e.tag.is_initial()) continue;
    int holders = 0;
    auto it = first_store.find({e.key, e.source});
    if (it != first_store.end())
      for (const auto& [node, at] : it->second) holders += at <= *e.response;
    if (holders < q_write)
      rep.committed_write.push_back(detail::op_str(e) + " returned a value stored at " + std::to_string(holders) +
                                    " nodes");
  }
}

// A write is observed under one tag only, and a tag names one write only.
inline void check_single_association(const History& h, PropertyReport& rep) {
  std::map<std::pair<Key, WriteId>, Tag> tag_of;
  std::map<std::pair<Key, Tag>, WriteId> write_of;
  for (const auto& e : h) {
    if (e.pending()) continue;
    if (e.kind == OpKind::kRead && e.tag.is_initial()) continue;
    auto [t, fresh_t] = tag_of.try_emplace({e.key, e.source}, e.tag);
    if (!fresh_t && t->second != e.tag)
      rep.single_association.push_back(detail::op_str(e) + " sees write (" + std::to_string(e.source.writer) + "," +
                                       std::to_string(e.source.seq) + ") previously under " + t->second.str());
    auto [w, fresh_w] = write_of.try_emplace({e.key, e.tag}, e.source);
    if (!fresh_w && w->second != e.source)
      rep.single_association.push_back(detail::op_str(e) + " names a different write under the same tag");
  }
}

inline PropertyReport check_properties(const History& h, const std::vector<StoreRecord>& stores, int q_write) {
  PropertyReport rep;
  check_unique_write_tag(h, rep);
  check_progress_of_tag(h, rep);
  check_committed_write(h, stores, q_write, rep);
  check_single_association(h, rep);
  return rep;
}

}  // namespace gus
