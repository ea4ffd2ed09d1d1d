#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace fstdna {

constexpr int kEps = -1;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Transition {
  int src = 0;
  int in = kEps;
  int out = kEps;
  double weight = 1.0;
  int dst = 0;
};

// Symbol table for one side of a transducer.
class Alphabet {
 public:
  Alphabet() = default;
  Alphabet(std::initializer_list<std::string> syms);
  explicit Alphabet(const std::vector<std::string>& syms);

  int add(const std::string& s);
  int find(const std::string& s) const;  // -1 if absent
  int at(const std::string& s) const;    // throws if absent
  const std::string& name(int i) const { return syms_[i]; }
  int size() const { return static_cast<int>(syms_.size()); }
  const std::vector<std::string>& symbols() const { return syms_; }
  bool operator==(const Alphabet& o) const { return syms_ == o.syms_; }

 private:
  std::vector<std::string> syms_;
  std::unordered_map<std::string, int> index_;
};

struct Machine {
  Alphabet in_alpha, out_alpha;
  std::vector<std::string> names;
  std::vector<Transition> trans;
  int initial = 0;
  int final = 0;

  int num_states() const { return static_cast<int>(names.size()); }
  int num_transitions() const { return static_cast<int>(trans.size()); }
  int add_state(std::string name = {});
  void add(int src, int in, int out, double w, int dst);
  // Label helpers taking symbol names; "" means epsilon.
  void add(int src, const std::string& in, const std::string& out, double w, int dst);

  std::vector<int> encode_in(const std::vector<std::string>& syms) const;
  std::vector<int> encode_out(const std::vector<std::string>& syms) const;
  std::vector<std::string> decode_in(const std::vector<int>& s) const;
  std::vector<std::string> decode_out(const std::vector<int>& s) const;

  void validate() const;
};

// CSR view of outgoing transitions, by source state.
struct Adjacency {
  std::vector<int> offset;
  std::vector<int> order;
  explicit Adjacency(const Machine& m);
  int begin(int s) const { return offset[s]; }
  int end(int s) const { return offset[s + 1]; }
};

bool is_waiting_state(const Machine& m, const Adjacency& adj, int s);
bool has_eps_cycle(const Machine& m);

// Drops states that are not both reachable and co-reachable (initial and final always kept).
Machine prune(const Machine& m);

Machine compose(const Machine& r, const Machine& s);
Machine concatenate(const Machine& a, const Machine& b);
Machine union_of(const Machine& a, const Machine& b);
Machine kleene_closure(const Machine& a);
Machine to_waiting_machine(const Machine& a);

// Machine from explicit symbol list: identity/echo machines and linear chains.
Machine identity_machine(const Alphabet& a);
Machine chain_machine(const Alphabet& in, const Alphabet& out, const std::vector<int>& in_seq,
                      const std::vector<int>& out_seq);

}  // namespace fstdna
