#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fstdna/dp.hpp"
#include "fstdna/errormodel.hpp"
#include "fstdna/machine.hpp"

namespace fstdna {

// ---- machine JSON ----

std::string machine_to_json(const Machine& m);
Machine machine_from_json(const std::string& text);  // Error carries the offending field
Machine load_machine(const std::string& path);
void save_machine(const Machine& m, const std::string& path);

// ---- channel ----

struct ChannelSpec {
  double sub_rate = 0, ts_tv_ratio = 10;
  double del_rate = 0;
  int del_maxlen = 4;
  double dup_rate = 0;
  int dup_maxlen = 4;
  uint64_t seed = 1;
};

struct MutateStats {
  long subs = 0, transitions = 0, dups = 0, dup_skipped = 0, dup_bases = 0, dels = 0, del_bases = 0;
};

// Substitutions, then tandem duplications, then deletions, each as a left-to-right pass.
std::string mutate(const std::string& dna, const ChannelSpec& ch, MutateStats* stats = nullptr);

size_t levenshtein(const std::string& a, const std::string& b);

// ---- stacks ----

// Layer names: hamming31, hamming74, mixradar:N[:nu], dnastore:k[:C[:start|end|startend]],
// watermark:M[:ratio[:seed]] (ratio 0 or a fraction such as 1/16; a control word closes each cycle
// when the following dnastore layer has one), marker:M, file:path.json
struct Stack {
  std::vector<std::string> layers;
  Machine machine;
  int kmer = 0;                // of the dnastore layer, 0 if none
  std::string end_symbol;      // appended to every message when the code mandates an end word
  std::vector<std::string> control_words;
};

Stack build_stack(const std::vector<std::string>& layers);

// Bits are '0'/'1' characters; DNA is an ACGT string.
std::string encode_bits(const Stack& s, const std::string& bits);

struct DecoderConfig {
  ErrorParams params;
  int context = 0;  // 0: kmer/2
  bool tandem_only = true;
  size_t beam = 0;  // 0: 256 for context <= 2, 512 for 3, 1024 beyond
  double delta = 20;
};

// Error-model parameters matched to a channel, with small floors so the decoder never rules an event out.
ErrorParams params_for_channel(const ChannelSpec& ch, int context);

size_t default_beam(int context);

struct DecodeOutcome {
  bool ok = false;
  std::string bits;
  double log_weight = 0;
  std::string error;
};

// Viterbi over stack o error model. Reads shorter than twice the context are rejected.
DecodeOutcome decode_dna(const Stack& s, const std::string& dna, const DecoderConfig& cfg, size_t expected_bits = 0);

// Newline-delimited bit blocks for an external LDPC decoder.
void write_ldpc_blocks(std::ostream& out, const std::string& bits, size_t block);
std::string read_ldpc_blocks(std::istream& in);

// ---- experiments ----

struct ExperimentConfig {
  std::string name;
  std::vector<std::string> stack;
  size_t bits = 2048;
  int replicates = 20;
  uint64_t seed = 1;
  ChannelSpec channel;
  std::string grid_param;  // sub, del or dup
  std::vector<double> grid;
  DecoderConfig decoder;
  bool match_decoder = true;  // derive decoder params from each grid point's channel
  int decoder_context = 0;
  int threads = 0;  // 0: one per hardware thread

  static ExperimentConfig from_json(const std::string& text);
};

struct ReplicateResult {
  double setting = 0;
  int replicate = 0;
  double distance = 0;
  bool failed = false;
};

struct SettingSummary {
  double setting = 0;
  double median = 0, q1 = 0, q3 = 0;
  int failures = 0;
};

struct ExperimentResult {
  std::vector<ReplicateResult> rows;
  std::vector<SettingSummary> summary;
};

// Replicates run on a worker pool; rows come back ordered by (setting, replicate).
ExperimentResult run_experiment(const ExperimentConfig& cfg);
std::string experiment_csv(const ExperimentConfig& cfg, const ExperimentResult& r);

// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> v, double q);

std::string random_bits(size_t n, uint64_t seed);

}  // namespace fstdna
