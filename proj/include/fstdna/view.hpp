#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "fstdna/machine.hpp"

namespace fstdna {

// Outgoing arc of a lazily expanded state. tag carries a model-specific
// weight formula id through composition (-1 when unused).
struct Arc {
  int in = kEps;
  int out = kEps;
  double w = 1.0;
  uint64_t dst = 0;
  int tag = -1;
};

// A transducer whose states are expanded on demand.
class View {
 public:
  virtual ~View() = default;
  virtual const Alphabet& in_alpha() const = 0;
  virtual const Alphabet& out_alpha() const = 0;
  virtual uint64_t initial() = 0;
  virtual uint64_t final() = 0;
  // Replaces `out` with the arcs leaving s.
  virtual void arcs(uint64_t s, std::vector<Arc>& out) = 0;
  virtual std::string state_name(uint64_t s) { return std::to_string(s); }
  // Keys are guaranteed to fit in this many bits.
  virtual int key_bits() const { return 64; }
};

int bits_for(uint64_t n);  // bits needed to represent 0..n-1

class MachineView : public View {
 public:
  explicit MachineView(const Machine& m);
  const Alphabet& in_alpha() const override { return m_.in_alpha; }
  const Alphabet& out_alpha() const override { return m_.out_alpha; }
  uint64_t initial() override { return static_cast<uint64_t>(m_.initial); }
  uint64_t final() override { return static_cast<uint64_t>(m_.final); }
  void arcs(uint64_t s, std::vector<Arc>& out) override;
  std::string state_name(uint64_t s) override;
  int key_bits() const override { return bits_for(static_cast<uint64_t>(m_.num_states())); }

 private:
  const Machine& m_;
  Adjacency adj_;
};

// Splits every state that mixes epsilon-input and input-consuming arcs:
// key 2q keeps the epsilon-input arcs plus an eps/eps arc to 2q+1, which
// holds the input-consuming arcs. A final state with epsilon-input arcs is
// split the same way and 2q+1 becomes final.
class WaitingView : public View {
 public:
  explicit WaitingView(View& base) : base_(base) {}
  const Alphabet& in_alpha() const override { return base_.in_alpha(); }
  const Alphabet& out_alpha() const override { return base_.out_alpha(); }
  uint64_t initial() override { return base_.initial() << 1; }
  uint64_t final() override;
  void arcs(uint64_t s, std::vector<Arc>& out) override;
  std::string state_name(uint64_t s) override;
  int key_bits() const override { return base_.key_bits() + 1; }

 private:
  View& base_;
  std::vector<Arc> scratch_;
};

// r o s, where s must already be waiting. Pair states are packed into one key
// when both fit, and interned to dense ids otherwise.
class ComposeView : public View {
 public:
  ComposeView(View& r, View& s);
  const Alphabet& in_alpha() const override { return r_.in_alpha(); }
  const Alphabet& out_alpha() const override { return s_.out_alpha(); }
  uint64_t initial() override { return init_; }
  uint64_t final() override { return final_; }
  void arcs(uint64_t s, std::vector<Arc>& out) override;
  std::string state_name(uint64_t s) override;

  int key_bits() const override { return packed_ ? r_.key_bits() + sbits_ : 64; }

  std::pair<uint64_t, uint64_t> pair_of(uint64_t id) const;
  size_t interned() const { return pairs_.size(); }

 private:
  uint64_t intern(uint64_t a, uint64_t b);
  bool packed_ = false;
  int sbits_ = 0;

  View& r_;
  View& s_;
  std::vector<int> zmap_;
  std::vector<std::pair<uint64_t, uint64_t>> pairs_;
  struct PairHash {
    size_t operator()(const std::pair<uint64_t, uint64_t>& p) const {
      return std::hash<uint64_t>()(p.first * 0x9E3779B97F4A7C15ULL ^ (p.second + 0x632BE59BD9B4E019ULL));
    }
  };
  std::unordered_map<std::pair<uint64_t, uint64_t>, uint64_t, PairHash> ids_;
  uint64_t init_ = 0, final_ = 0;
  std::vector<Arc> ra_, sa_;
};

// Breadth-first expansion of everything reachable from the initial state,
// followed by pruning.
Machine materialize(View& v, bool with_names = true, size_t max_states = 50'000'000);

}  // namespace fstdna
