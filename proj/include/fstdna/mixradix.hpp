#pragma once

#include <string>
#include <vector>

#include "fstdna/machine.hpp"

namespace fstdna {

enum class Arithmetic { Exact, Float64 };

struct RadixParams {
  int N = 2;
  double nu = 0.01;
  Arithmetic arith = Arithmetic::Exact;
};

struct CodewordInterval {
  std::string word;  // '0'/'1' string, possibly ending in '$'
  double A = 0, B = 0;
  std::string A_exact, B_exact;  // rational text "p/q" (exact mode)
};

std::vector<CodewordInterval> input_word_set(int N, double nu);

struct MixradixStats {
  int classes = 0;  // merged output-tree states, including the terminal class
  int prefix_states = 0;
  // Per input word, the sorted list of full output encodings (digit strings "r_R ...").
  std::vector<std::pair<std::string, std::vector<std::string>>> encodings;
};

Machine generate_mixradix(const RadixParams& p, MixradixStats* stats = nullptr);
Machine naive_binary_ternary();
double mean_symbols_per_bit(const Machine& m, int N, int radix);

// Output digits emitted for one input word at a fixed radix (empty if not a word).
std::vector<std::string> encode_word_at_radix(const Machine& m, const std::string& word, int radix);

}  // namespace fstdna
