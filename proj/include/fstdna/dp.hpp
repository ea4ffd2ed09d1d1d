#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fstdna/machine.hpp"
#include "fstdna/view.hpp"

namespace fstdna {

struct ProbSemiring {
  using T = double;
  static constexpr bool idempotent = false;
  static T zero() { return 0.0; }
  static T one() { return 1.0; }
  static T add(T a, T b) { return a + b; }
  static T mul(T a, T b) { return a * b; }
  static T from_weight(double w) { return w; }
};

// Costs are -log of transition probabilities.
struct TropicalSemiring {
  using T = double;
  static constexpr bool idempotent = true;
  static T zero() { return std::numeric_limits<double>::infinity(); }
  static T one() { return 0.0; }
  static T add(T a, T b) { return std::min(a, b); }
  static T mul(T a, T b) { return a + b; }
  static T from_weight(double w) { return w > 0 ? -std::log(w) : zero(); }
};

// Probability semiring carried in log space.
struct LogSemiring {
  using T = double;
  static constexpr bool idempotent = false;
  static T zero() { return -std::numeric_limits<double>::infinity(); }
  static T one() { return 0.0; }
  static T add(T a, T b) {
    if (a == zero()) return b;
    if (b == zero()) return a;
    T m = std::max(a, b);
    return m + std::log1p(std::exp(-std::fabs(a - b)));
  }
  static T mul(T a, T b) { return (a == zero() || b == zero()) ? zero() : a + b; }
  static T from_weight(double w) { return w > 0 ? std::log(w) : zero(); }
};

// States in an order compatible with the eps/eps arcs; nullopt on a cycle.
std::optional<std::vector<int>> eps_topological_order(const Machine& m);

template <class SR>
typename SR::T evaluate(const Machine& m, const std::vector<int>& x, const std::vector<int>& y) {
  using T = typename SR::T;
  for (int s : x)
    if (s < 0 || s >= m.in_alpha.size()) throw Error("evaluate: input symbol outside alphabet");
  for (int s : y)
    if (s < 0 || s >= m.out_alpha.size()) throw Error("evaluate: output symbol outside alphabet");
  const int Q = m.num_states();
  const size_t X = x.size(), Y = y.size();
  auto topo = eps_topological_order(m);
  bool cyclic = !topo;
  if (cyclic && !SR::idempotent) throw Error("evaluate: eps/eps cycle in probability semiring");
  std::vector<int> order;
  if (topo) {
    order = *topo;
  } else {
    for (int q = 0; q < Q; ++q) order.push_back(q);
  }
  Adjacency adj(m);
  std::vector<T> F((X + 1) * (Y + 1) * Q, SR::zero());
  auto cell = [&](size_t i, size_t j) { return &F[(i * (Y + 1) + j) * Q]; };
  cell(0, 0)[m.initial] = SR::one();
  for (size_t i = 0; i <= X; ++i) {
    for (size_t j = 0; j <= Y; ++j) {
      T* here = cell(i, j);
      int passes = cyclic ? Q : 1;
      for (int pass = 0; pass < passes; ++pass) {
        bool changed = false;
        for (int q : order) {
          T v = here[q];
          if (v == SR::zero()) continue;
          for (int k = adj.begin(q); k < adj.end(q); ++k) {
            const Transition& t = m.trans[adj.order[k]];
            size_t di = t.in != kEps, dj = t.out != kEps;
            if (di && (i >= X || x[i] != t.in)) continue;
            if (dj && (j >= Y || y[j] != t.out)) continue;
            T add = SR::mul(v, SR::from_weight(t.weight));
            if (!di && !dj) {
              // eps/eps arcs stay in this cell; only the cyclic tropical case needs repeat passes
              if (cyclic) {
                T nv = SR::add(here[t.dst], add);
                if (nv != here[t.dst]) here[t.dst] = nv, changed = true;
              } else {
                here[t.dst] = SR::add(here[t.dst], add);
              }
              continue;
            }
            T* dst = cell(i + di, j + dj);
            dst[t.dst] = SR::add(dst[t.dst], add);
          }
        }
        if (cyclic && !changed) break;
      }
    }
  }
  return cell(X, Y)[m.final];
}

struct DecodeOptions {
  size_t beam = 0;  // 0 keeps every state
  double delta = std::numeric_limits<double>::infinity();  // cost window above the column best
  bool lexical_ties = true;  // equal-cost paths: keep the lexically smaller input prefix
};

struct DecodeResult {
  bool ok = false;
  std::vector<int> input;
  double log_weight = -std::numeric_limits<double>::infinity();
};

// Max-weight path with output y; input symbols of that path.
DecodeResult viterbi(View& v, const std::vector<int>& y, const DecodeOptions& opt = {});
DecodeResult viterbi_decode(const Machine& m, const std::vector<int>& y);

// Input-deterministic encoder with epsilon lookahead and a per-(state,symbol) cache.
// Each symbol is consumed after the fewest epsilon-input steps; a tie there is an ambiguity.
class Encoder {
 public:
  explicit Encoder(const Machine& m);
  // Throws Error("unencodable input") or Error("machine not encoder-deterministic").
  std::vector<int> encode(const std::vector<int>& x);
  // As encode, but when the input ends mid-block, feeds `pad` symbols until the final state is reachable.
  std::vector<int> encode_padded(const std::vector<int>& x, int pad, int* pads_used = nullptr);
  // Length of the output only (no allocation of the output vector).
  size_t encoded_length(const std::vector<int>& x);

 private:
  struct Step {
    int next = -1;
    int out_begin = 0;
    int out_len = 0;
    int status = 0;  // 0 unknown, 1 ok, 2 no path, 3 ambiguous
  };
  const Step& step(int q, int sym);
  Step compute(int q, int sym);

  const Machine& m_;
  Adjacency adj_;
  int nsym_;
  std::vector<Step> cache_;
  std::vector<int> outbuf_;
};

std::vector<int> encode_deterministic(const Machine& m, const std::vector<int>& x);

}  // namespace fstdna
