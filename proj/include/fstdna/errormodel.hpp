#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fstdna/machine.hpp"
#include "fstdna/view.hpp"

namespace fstdna {

// Indices of the named probabilities; duplication lengths follow from kLen1.
enum Param {
  kDelOpen,
  kDelExt,
  kDelEnd,
  kTanDup,
  kFwdDup,
  kRevDup,
  kNoGap,
  kTransition,
  kTransversion,
  kMatch,
  kLen1
};

struct ErrorParams {
  double delopen = 0.01, delext = 0.5, delend = 0.5;
  double tandup = 0.01, fwddup = 0.0, revdup = 0.0, nogap = 0.98;
  double transition = 0.01, transversion = 0.005, match = 0.985;
  std::vector<double> len_dist;  // len_dist[i] = probability of a length i+1 duplication

  // Uniform lengths 1..c, zero out to 2c.
  static ErrorParams defaults(int c);
  void validate(double tol = 1e-12) const;

  std::vector<double> to_vector() const;
  static ErrorParams from_vector(const std::vector<double>& v);

  std::string to_json() const;
  static ErrorParams from_json(const std::string& text);
};

// Symbol indices follow dna_alphabet(): A C G T.
double substitution_weight(int x, int y, const ErrorParams& e);
double pcont(int j, int k, const ErrorParams& e);

// One additive term of an arc weight: coef times the product of the listed parameters.
struct Term {
  double coef = 1.0;
  std::vector<int> params;
};
using Formula = std::vector<Term>;
double eval_formula(const Formula& f, const std::vector<double>& theta);

enum class EKind { A = 0, F = 1, S = 2, D = 3, T = 4, Fwd = 5, Rev = 6 };

struct EState {
  EKind kind = EKind::A;
  int i = 0;  // remaining duplication length
  int plen = 0, flen = 0;
  uint64_t past = 0, future = 0;  // two bits per symbol; past[0] oldest, future[0] next
};

// Lazy error-model transducer. Arc tags index formulas().
class ErrorModelView : public View {
 public:
  ErrorModelView(const ErrorParams& e, int c, bool tandem_only = false);
  const Alphabet& in_alpha() const override { return dna_; }
  const Alphabet& out_alpha() const override { return dna_; }
  uint64_t initial() override { return pack({}); }
  uint64_t final() override { return pack({EKind::F}); }
  void arcs(uint64_t s, std::vector<Arc>& out) override;
  std::string state_name(uint64_t s) override;
  int key_bits() const override { return 15 + 4 * c_; }

  int context() const { return c_; }
  bool tandem_only() const { return tandem_only_; }
  const std::vector<Formula>& formulas() const { return formulas_; }
  const ErrorParams& params() const { return e_; }

  uint64_t pack(const EState& s) const;
  EState unpack(uint64_t key) const;
  char block(const EState& s) const;  // 'a'..'f'
  // Total weight of completing the excursion that starts in this state (1 outside inverted-duplication chains).
  double mass(uint64_t key) const;
  // True for epsilon-input arcs that shorten the future context (only valid once the input is exhausted).
  bool is_end_arc(uint64_t src, const Arc& a) const;

 private:
  int add_formula(Formula f);
  void main_moves(const EState& s, std::vector<std::pair<int, EState>>& moves) const;
  void emit(std::vector<Arc>& out, int in, int sub_from, int fid_base, uint64_t dst) const;

  ErrorParams e_;
  int c_;
  bool tandem_only_;
  Alphabet dna_;
  std::vector<Formula> formulas_;
  std::vector<double> w_;
  // formula ids
  std::vector<int> main_;  // [j][k][cls]
  int load_, delopen_, delext_, delend_, fwd_entry_;
  std::vector<int> tan_entry_, rev_entry_, fwd_stop_;  // fwd_stop_[i*3+cls]
  int emit_[3];
  std::vector<std::pair<int, EState>> moves_;
};

Machine build_error_model(const ErrorParams& e, int c, bool tandem_only = false);

// m composed with the L -> M -> R read-window machine.
Machine wrap_partial_observation(const Machine& m);

// Draws an output from the error model given input x (indices into A C G T).
std::vector<int> sample_channel(ErrorModelView& v, const std::vector<int>& x, std::mt19937_64& rng);

struct TrainingPair {
  std::vector<int> input, output;
};

struct FitReport {
  std::vector<double> loglik;  // before each M-step
  int skipped = 0;
  std::vector<std::string> warnings;
};

// Log-likelihood of one pair under the model; -inf when no path exists.
double pair_log_likelihood(ErrorModelView& v, const TrainingPair& p);

ErrorParams baum_welch(const std::vector<TrainingPair>& data, const ErrorParams& init, int c, bool tandem_only,
                       int iters, FitReport* report = nullptr);

}  // namespace fstdna
