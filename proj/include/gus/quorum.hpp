#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>

namespace gus {

struct QuorumConfig {
  int n = 3;
  int f = 1;
  int q_read = 2;
  int q_write = 2;

  friend bool operator==(const QuorumConfig&, const QuorumConfig&) = default;
};

class QuorumError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class QuorumBias { kReadOptimized, kWriteOptimized };

struct QuorumCheck {
  bool ok = true;
  std::string diagnostic;  // names the first failing inequality
  explicit operator bool() const { return ok; }
};

// Write quorums must pairwise intersect (2·qw > n) and a write may only ever be
// associated with one tag (2n − 2·qw − 1 < qr).
inline QuorumCheck validate_quorums(int n, int q_read, int q_write) {
  auto fail = [](std::string d) { return QuorumCheck{false, std::move(d)}; };
  if (n < 1) return fail("n = " + std::to_string(n) + " < 1");
  if (q_read < 1 || q_read > n)
    return fail("q_read = " + std::to_string(q_read) + " outside [1, " + std::to_string(n) + "]");
  if (q_write < 1 || q_write > n)
    return fail("q_write = " + std::to_string(q_write) + " outside [1, " + std::to_string(n) + "]");
  if (!(2 * q_write > n))
    return fail("2·" + std::to_string(q_write) + " = " + std::to_string(2 * q_write) + " ≯ " + std::to_string(n));
  const int lhs = 2 * n - 2 * q_write - 1;
  if (!(lhs < q_read))
    return fail("2·" + std::to_string(n) + "−2·" + std::to_string(q_write) + "−1 = " + std::to_string(lhs) + " ≮ " +
                std::to_string(q_read));
  return {};
}

// Simple-majority quorums for the optimistically fast regime 3 ≤ n ≤ 5.
inline QuorumConfig default_quorums(int n) {
  if (n < 3) throw QuorumError("n = " + std::to_string(n) + ": need at least 3 nodes");
  if (n > 5)
    throw QuorumError("n = " + std::to_string(n) +
                      ": optimistically fast reads and writes are impossible for n > 5 with n = 2f+1; use relaxed quorums");
  const int maj = n / 2 + 1;
  return QuorumConfig{n, (n - 1) / 2, maj, maj};
}

// Larger quorums traded for fewer tolerated crashes (every quorum stays reachable
// with f nodes down).
inline QuorumConfig relaxed_quorums(int n, int f, QuorumBias bias = QuorumBias::kReadOptimized) {
  if (n < 3) throw QuorumError("n = " + std::to_string(n) + ": need at least 3 nodes");
  if (f < 1) throw QuorumError("f = " + std::to_string(f) + ": need f ≥ 1");
  const int reachable = n - f;
  // Smallest qw with 2·qw > n and 2n − 2·qw − 1 < qr.
  auto min_write_for = [n](int qr) {
    int qw = n / 2 + 1;
    while (qw <= n && !(2 * n - 2 * qw - 1 < qr)) ++qw;
    return qw;
  };
  if (bias == QuorumBias::kReadOptimized) {
    const int qr = n / 2 + 1;
    const int qw = min_write_for(qr);
    if (qr > reachable || qw > reachable) {
      const int lhs = 2 * n - 2 * reachable - 1;
      throw QuorumError("(n=" + std::to_string(n) + ", f=" + std::to_string(f) + ") infeasible: q_write ≤ n−f = " +
                        std::to_string(reachable) + " gives 2·" + std::to_string(n) + "−2·" + std::to_string(reachable) +
                        "−1 = " + std::to_string(lhs) + " ≮ q_read = " + std::to_string(qr));
    }
    return QuorumConfig{n, f, qr, qw};
  }
  for (int qw = n / 2 + 1; qw <= reachable; ++qw) {
    const int qr = std::max(1, 2 * n - 2 * qw);  // smallest qr > 2n − 2qw − 1
    if (qr <= reachable) return QuorumConfig{n, f, qr, qw};
  }
  throw QuorumError("(n=" + std::to_string(n) + ", f=" + std::to_string(f) +
                    ") infeasible: no q_write ≤ n−f admits q_read ≤ n−f with 2n−2·q_write−1 < q_read");
}

}  // namespace gus
