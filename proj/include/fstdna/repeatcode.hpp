#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fstdna/machine.hpp"

namespace fstdna {

inline const char* kNucleotides = "ACGT";
int nt_index(char c);  // throws on anything outside ACGT
char complement(char c);
std::string revcomp(std::string_view s);
Alphabet dna_alphabet();

constexpr int kNoInvRep = 0;  // invreplen value meaning "no local inverted-repeat filter"

struct CodeParams {
  int kmer = 4;
  int invrep = kNoInvRep;
  int controls = 0;
  bool allow_tandem = false;
  bool start_word = false;
  bool end_word = false;
  int search_cap = 0;  // 0 means 2*kmer
  std::vector<std::string> words;  // fixed control words (skip the search when non-empty)

  int cap() const { return search_cap > 0 ? search_cap : 2 * kmer; }
};

bool has_repeat(std::string_view seq, int invrep = kNoInvRep, bool tandem = true);

struct KmerGraph {
  enum Kind { Natural, Control, Bridge, Init, Final };
  struct Vertex {
    std::string ctx;  // context k-mer (prefix for initial-chain vertices)
    Kind kind = Natural;
    int ctrl = -1;
    int layer = 0;
  };
  struct Edge {
    int from = 0, to = 0;
    char label = 'A';
    int ctrl = -1;       // entry edge for control word ctrl
    bool natural = false;
  };

  int k = 0;
  std::vector<Vertex> v;
  std::vector<Edge> e;
  std::vector<std::string> controls;
  int initial = -1, final = -1;
  int start_vertex = -1;  // first vertex reached from the initial state
  bool end_merged = false;

  int find(const std::string& kmer) const;  // natural or control vertex by k-mer, -1 if absent
  std::vector<std::vector<int>> out_edges() const;  // edge indices per vertex, in insertion order
};

KmerGraph build_pruned_graph(const CodeParams& p);

// Dense view of a vertex subset used by the reachability search.
struct Reach {
  std::vector<std::vector<int>> pred;
  std::vector<char> alive;
  int alive_count = 0;
};

std::vector<std::vector<int>> prequel_layers(const Reach& r, int D, const std::vector<char>& inA, int maxN);
std::vector<int> prequels(const KmerGraph& g, int D, const std::vector<int>& A, int N);
int steps_to(const KmerGraph& g, int D, const std::vector<int>& A, int cap);  // -1 means unbounded

// Greedy search: each new word maximizes the minimum Hamming distance to earlier
// words and their reverse complements; candidates scanned from the lexically greatest.
std::vector<std::string> find_control_words(const KmerGraph& g, int C, int cap, bool first_is_start = false);

KmerGraph attach_controls(const KmerGraph& g, const std::vector<std::string>& W, const CodeParams& p);

enum class InputMode { MixedRadix, Binary };

Machine graph_to_machine(const KmerGraph& g, InputMode mode);

struct Code {
  KmerGraph graph;
  Machine machine;
  std::vector<std::string> words;
};

Code generate_code(const CodeParams& p, InputMode mode = InputMode::MixedRadix);

// State/transition totals excluding control-symbol inputs, arcs leaving the
// initial state and eps-output arcs into the final state.
std::pair<int, int> core_counts(const Machine& m);

// Context string recorded in a code-machine state name.
std::string state_context(const std::string& name);

Machine delay_transform(const Machine& m, int kmer);

struct RateEstimate {
  double mean = 0;
  double stderr_ = 0;
};
RateEstimate bases_per_bit(const Machine& m, int trials, int len, uint64_t seed);

std::string digit_symbol(int digit, int radix);
std::string control_symbol(int n);  // 0-based index -> "c1", "c2", ...

}  // namespace fstdna
