#include "fstdna/errormodel.hpp"

#include <cmath>
#include <future>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "fstdna/dp.hpp"
#include "fstdna/repeatcode.hpp"

namespace fstdna {

namespace {

int comp(int a) { return 3 - a; }
int partner(int a) { return a ^ 2; }  // A<->G, C<->T
int sub_class(int x, int y) { return x == y ? 0 : (partner(x) == y ? 1 : 2); }

int sym_at(uint64_t word, int t) { return static_cast<int>((word >> (2 * t)) & 3); }
uint64_t with_sym(uint64_t word, int t, int a) { return word | (static_cast<uint64_t>(a) << (2 * t)); }

const char* kParamNames[] = {"delopen", "delext", "delend", "tandup", "fwddup", "revdup",
                             "nogap", "transition", "transversion", "match"};

}  // namespace

// ---- parameters ----

ErrorParams ErrorParams::defaults(int c) {
  ErrorParams e;
  e.len_dist.assign(2 * c, 0.0);
  for (int i = 0; i < c; ++i) e.len_dist[i] = 1.0 / c;
  return e;
}

void ErrorParams::validate(double tol) const {
  auto v = to_vector();
  for (size_t i = 0; i < v.size(); ++i)
    if (!(v[i] >= 0 && v[i] <= 1)) throw Error("error params: probability out of range at index " + std::to_string(i));
  if (len_dist.empty()) throw Error("error params: lenDist is empty");
  auto check = [&](double s, const char* what) {
    if (std::fabs(s - 1.0) > tol) throw Error(std::string("error params: ") + what + " must sum to 1");
  };
  check(delopen + tandup + fwddup + revdup + nogap, "delopen+tandup+fwddup+revdup+nogap");
  check(delext + delend, "delext+delend");
  check(transition + transversion + match, "transition+transversion+match");
  double s = 0;
  for (double x : len_dist) s += x;
  check(s, "lenDist");
}

std::vector<double> ErrorParams::to_vector() const {
  std::vector<double> v{delopen, delext, delend, tandup, fwddup, revdup, nogap, transition, transversion, match};
  v.insert(v.end(), len_dist.begin(), len_dist.end());
  return v;
}

ErrorParams ErrorParams::from_vector(const std::vector<double>& v) {
  ErrorParams e;
  double* f[] = {&e.delopen, &e.delext, &e.delend, &e.tandup, &e.fwddup,
                 &e.revdup, &e.nogap, &e.transition, &e.transversion, &e.match};
  for (int i = 0; i < kLen1; ++i) *f[i] = v.at(i);
  e.len_dist.assign(v.begin() + kLen1, v.end());
  return e;
}

std::string ErrorParams::to_json() const {
  nlohmann::ordered_json j;
  auto v = to_vector();
  for (int i = 0; i < kLen1; ++i) j[kParamNames[i]] = v[i];
  j["lenDist"] = len_dist;
  return j.dump(2);
}

ErrorParams ErrorParams::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("error params: ") + e.what());
  }
  if (!j.is_object()) throw Error("error params: expected a JSON object");
  std::vector<double> v;
  for (int i = 0; i < kLen1; ++i) {
    if (!j.contains(kParamNames[i]) || !j[kParamNames[i]].is_number())
      throw Error(std::string("error params: missing or non-numeric field \"") + kParamNames[i] + "\"");
    v.push_back(j[kParamNames[i]].get<double>());
  }
  if (!j.contains("lenDist") || !j["lenDist"].is_array()) throw Error("error params: missing array field \"lenDist\"");
  for (const auto& x : j["lenDist"]) {
    if (!x.is_number()) throw Error("error params: non-numeric entry in \"lenDist\"");
    v.push_back(x.get<double>());
  }
  return from_vector(v);
}

double substitution_weight(int x, int y, const ErrorParams& e) {
  if (x < 0 || x > 3 || y < 0 || y > 3) throw Error("substitution_weight: invalid nucleotide");
  switch (sub_class(x, y)) {
    case 0: return e.match;
    case 1: return e.transition;
    default: return e.transversion / 2;
  }
}

double pcont(int j, int k, const ErrorParams& e) {
  double tail_j = 0, tail_k = 0;
  for (int i = j + 1; i <= static_cast<int>(e.len_dist.size()); ++i) tail_j += e.len_dist[i - 1];
  for (int i = k + 1; i <= static_cast<int>(e.len_dist.size()); ++i) tail_k += e.len_dist[i - 1];
  return e.nogap + (e.tandup + e.fwddup) * tail_j + e.revdup * tail_k;
}

double eval_formula(const Formula& f, const std::vector<double>& theta) {
  double s = 0;
  for (const auto& t : f) {
    double p = t.coef;
    for (int q : t.params) p *= theta[q];
    s += p;
  }
  return s;
}

// ---- lazy transducer ----

namespace {

Formula product(const Formula& a, const Formula& b) {
  Formula r;
  for (const auto& x : a)
    for (const auto& y : b) {
      Term t{x.coef * y.coef, x.params};
      t.params.insert(t.params.end(), y.params.begin(), y.params.end());
      r.push_back(std::move(t));
    }
  return r;
}

Formula sub_formula(int cls) {
  if (cls == 0) return {{1.0, {kMatch}}};
  if (cls == 1) return {{1.0, {kTransition}}};
  return {{0.5, {kTransversion}}};
}

}  // namespace

ErrorModelView::ErrorModelView(const ErrorParams& e, int c, bool tandem_only)
    : e_(e), c_(c), tandem_only_(tandem_only), dna_(dna_alphabet()) {
  if (c < 1 || c > 7) throw Error("error model: context must be in 1..7");
  if (e_.len_dist.empty()) e_.len_dist = ErrorParams::defaults(c).len_dist;
  e_.validate(1e-9);
  const int L = static_cast<int>(e_.len_dist.size());
  auto pc = [&](int j, int k) {
    Formula f{{1.0, {kNoGap}}};
    for (int i = j + 1; i <= L; ++i) {
      f.push_back({1.0, {kTanDup, kLen1 + i - 1}});
      if (!tandem_only_) f.push_back({1.0, {kFwdDup, kLen1 + i - 1}});
    }
    if (!tandem_only_)
      for (int i = k + 1; i <= L; ++i) f.push_back({1.0, {kRevDup, kLen1 + i - 1}});
    return f;
  };
  main_.resize((c + 1) * (c + 1) * 3);
  for (int j = 0; j <= c; ++j)
    for (int k = 0; k <= c; ++k)
      for (int cls = 0; cls < 3; ++cls) main_[(j * (c + 1) + k) * 3 + cls] = add_formula(product(pc(j, k), sub_formula(cls)));
  load_ = add_formula({{1.0, {}}});
  delopen_ = add_formula({{1.0, {kDelOpen}}});
  delext_ = add_formula({{1.0, {kDelExt}}});
  delend_ = add_formula({{1.0, {kDelEnd}}});
  fwd_entry_ = add_formula({{1.0, {kFwdDup}}});
  tan_entry_.assign(c + 1, -1);
  rev_entry_.assign(c + 1, -1);
  fwd_stop_.assign((c + 1) * 3, -1);
  for (int i = 1; i <= std::min(c, L); ++i) {
    tan_entry_[i] = add_formula({{1.0, {kTanDup, kLen1 + i - 1}}});
    rev_entry_[i] = add_formula({{1.0, {kRevDup, kLen1 + i - 1}}});
    for (int cls = 0; cls < 3; ++cls)
      fwd_stop_[i * 3 + cls] = add_formula(product({{1.0, {kLen1 + i - 1}}}, sub_formula(cls)));
  }
  for (int cls = 0; cls < 3; ++cls) emit_[cls] = add_formula(sub_formula(cls));
}

int ErrorModelView::add_formula(Formula f) {
  formulas_.push_back(std::move(f));
  w_.push_back(eval_formula(formulas_.back(), e_.to_vector()));
  return static_cast<int>(formulas_.size()) - 1;
}

uint64_t ErrorModelView::pack(const EState& s) const {
  return static_cast<uint64_t>(s.kind) | static_cast<uint64_t>(s.i) << 3 | static_cast<uint64_t>(s.plen) << 7 |
         static_cast<uint64_t>(s.flen) << 11 | s.past << 15 | s.future << (15 + 2 * c_);
}

EState ErrorModelView::unpack(uint64_t key) const {
  EState s;
  s.kind = static_cast<EKind>(key & 7);
  s.i = static_cast<int>((key >> 3) & 15);
  s.plen = static_cast<int>((key >> 7) & 15);
  s.flen = static_cast<int>((key >> 11) & 15);
  uint64_t mask = (uint64_t{1} << (2 * c_)) - 1;
  s.past = (key >> 15) & mask;
  s.future = (key >> (15 + 2 * c_)) & mask;
  return s;
}

char ErrorModelView::block(const EState& s) const {
  if (s.kind == EKind::A) return 'a';
  if (s.kind == EKind::F) return 'f';
  if (s.plen == 0) return 'b';
  if (s.plen < c_) return 'c';
  return s.flen == c_ ? 'd' : 'e';
}

// The input-advancing (or, in blocks d/e, future-draining) moves of S-state s, without weights.
void ErrorModelView::main_moves(const EState& s, std::vector<std::pair<int, EState>>& moves) const {
  moves.clear();
  const int j = s.plen, k = s.flen;
  const int n1 = sym_at(s.future, 0);
  auto shifted = [&](EState d) {
    if (j < c_) {
      d.past = with_sym(s.past, j, n1);
      d.plen = j + 1;
    } else {
      d.past = with_sym(s.past >> 2, c_ - 1, n1);
    }
    return d;
  };
  if (k == c_) {
    for (int x = 0; x < 4; ++x) {
      EState d = shifted(s);
      d.future = with_sym(s.future >> 2, c_ - 1, x);
      moves.push_back({x, d});
    }
  }
  if (j == c_) {
    EState d = shifted(s);
    d.future = s.future >> 2;
    d.flen = k - 1;
    if (d.flen == 0) d = EState{EKind::F};
    moves.push_back({kEps, d});
  }
}

void ErrorModelView::emit(std::vector<Arc>& out, int in, int sub_from, int fid_base, uint64_t dst) const {
  for (int y = 0; y < 4; ++y) {
    int fid = fid_base + sub_class(sub_from, y);
    if (w_[fid] > 0) out.push_back({in, y, w_[fid], dst, fid});
  }
}

void ErrorModelView::arcs(uint64_t key, std::vector<Arc>& out) {
  out.clear();
  const EState s = unpack(key);
  const int j = s.plen, k = s.flen;
  auto push = [&](int in, int outsym, int fid, const EState& d) {
    if (w_[fid] > 0) out.push_back({in, outsym, w_[fid], pack(d), fid});
  };
  auto as = [&](EKind kind, int i) {
    EState d = s;
    d.kind = kind;
    d.i = i;
    return d;
  };
  auto del_of = [&](const EState& d) { return d.kind == EKind::F ? d : EState{EKind::D, 0, d.plen, d.flen, d.past, d.future}; };
  auto& moves = moves_;
  switch (s.kind) {
    case EKind::F:
      return;
    case EKind::A:
      for (int x = 0; x < 4; ++x) push(x, kEps, load_, EState{EKind::S, 0, 0, 1, 0, static_cast<uint64_t>(x)});
      return;
    case EKind::S: {
      if (j == 0 && k < c_) {
        for (int x = 0; x < 4; ++x) {
          EState d = s;
          d.future = with_sym(s.future, k, x);
          d.flen = k + 1;
          push(x, kEps, load_, d);
        }
        return;
      }
      main_moves(s, moves);
      const int n1 = sym_at(s.future, 0);
      const int base = main_[(j * (c_ + 1) + k) * 3];
      for (const auto& [in, d] : moves) {
        uint64_t dk = pack(d);
        for (int y = 0; y < 4; ++y) {
          int fid = base + sub_class(n1, y);
          if (w_[fid] > 0) out.push_back({in, y, w_[fid], dk, fid});
        }
        push(in, kEps, delopen_, del_of(d));
      }
      if (j >= 1) {
        for (int i = 1; i <= j && i < static_cast<int>(tan_entry_.size()); ++i)
          if (tan_entry_[i] >= 0) push(kEps, kEps, tan_entry_[i], as(EKind::T, i));
        if (!tandem_only_) {
          push(kEps, kEps, fwd_entry_, as(EKind::Fwd, 1));
          for (int i = 1; i <= k && i < static_cast<int>(rev_entry_.size()); ++i)
            if (rev_entry_[i] >= 0) push(kEps, kEps, rev_entry_[i], as(EKind::Rev, i));
        }
      }
      return;
    }
    case EKind::D: {
      EState sv = as(EKind::S, 0);
      main_moves(sv, moves);
      for (const auto& [in, d] : moves) push(in, kEps, delext_, del_of(d));
      push(kEps, kEps, delend_, sv);
      return;
    }
    case EKind::T: {
      int p = sym_at(s.past, j - s.i);
      emit(out, kEps, p, emit_[0], pack(s.i > 1 ? as(EKind::T, s.i - 1) : as(EKind::S, 0)));
      return;
    }
    case EKind::Fwd: {
      int a = comp(sym_at(s.past, j - s.i));
      if (s.i < j) emit(out, kEps, a, emit_[0], pack(as(EKind::Fwd, s.i + 1)));
      if (s.i < static_cast<int>(tan_entry_.size()) && fwd_stop_[s.i * 3] >= 0)
        emit(out, kEps, a, fwd_stop_[s.i * 3], pack(as(EKind::S, 0)));
      return;
    }
    case EKind::Rev: {
      int a = comp(sym_at(s.future, s.i - 1));
      emit(out, kEps, a, emit_[0], pack(s.i > 1 ? as(EKind::Rev, s.i - 1) : as(EKind::S, 0)));
      return;
    }
  }
}

std::string ErrorModelView::state_name(uint64_t key) {
  EState s = unpack(key);
  std::string name;
  switch (s.kind) {
    case EKind::A: return "S_a";
    case EKind::F: return "S_f";
    case EKind::S: name = "S"; break;
    case EKind::D: name = "D"; break;
    case EKind::T: name = "T" + std::to_string(s.i); break;
    case EKind::Fwd: name = "F" + std::to_string(s.i); break;
    case EKind::Rev: name = "R" + std::to_string(s.i); break;
  }
  name += '_';
  name += block(s);
  name += '(';
  for (int t = 0; t < s.plen; ++t) name += kNucleotides[sym_at(s.past, t)];
  name += ',';
  for (int t = 0; t < s.flen; ++t) name += kNucleotides[sym_at(s.future, t)];
  name += ')';
  return name;
}

double ErrorModelView::mass(uint64_t key) const {
  if ((key & 7) != static_cast<uint64_t>(EKind::Fwd)) return 1.0;
  EState s = unpack(key);
  double m = 0;
  for (int l = s.i; l <= s.plen && l <= static_cast<int>(e_.len_dist.size()); ++l) m += e_.len_dist[l - 1];
  return m;
}

bool ErrorModelView::is_end_arc(uint64_t src, const Arc& a) const {
  if (a.in != kEps) return false;
  EKind sk = static_cast<EKind>(src & 7), dk = static_cast<EKind>(a.dst & 7);
  if (sk != EKind::S && sk != EKind::D) return false;
  if (dk == EKind::F) return true;
  if (dk != EKind::S && dk != EKind::D) return false;
  return ((a.dst >> 11) & 15) < ((src >> 11) & 15);
}

Machine build_error_model(const ErrorParams& e, int c, bool tandem_only) {
  ErrorModelView v(e, c, tandem_only);
  return materialize(v);
}

Machine wrap_partial_observation(const Machine& m) {
  Machine w;
  w.in_alpha = m.out_alpha;
  w.out_alpha = m.out_alpha;
  int l = w.add_state("L"), mid = w.add_state("M"), r = w.add_state("R");
  w.initial = l;
  w.final = r;
  for (int a = 0; a < w.in_alpha.size(); ++a) {
    w.add(l, a, kEps, 1.0, l);
    w.add(mid, a, a, 1.0, mid);
    w.add(r, a, kEps, 1.0, r);
  }
  w.add(l, kEps, kEps, 1.0, mid);
  w.add(mid, kEps, kEps, 1.0, r);
  return compose(m, w);
}

// ---- sampling ----

std::vector<int> sample_channel(ErrorModelView& v, const std::vector<int>& x, std::mt19937_64& rng) {
  if (static_cast<int>(x.size()) < 2 * v.context())
    throw Error("sample_channel: input shorter than the full context (" + std::to_string(2 * v.context()) + " nt)");
  const uint64_t fin = v.final();
  uint64_t s = v.initial();
  size_t pos = 0;
  std::vector<int> y;
  std::vector<Arc> arcs;
  std::vector<double> cum;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (!(s == fin && pos == x.size())) {
    v.arcs(s, arcs);
    cum.clear();
    double tot = 0;
    for (const auto& a : arcs) {
      bool ok = a.in == kEps ? (pos == x.size() || !v.is_end_arc(s, a)) : (pos < x.size() && a.in == x[pos]);
      if (ok) tot += a.w * v.mass(a.dst);
      cum.push_back(tot);
    }
    if (tot <= 0) throw Error("sample_channel: no continuation from " + v.state_name(s));
    double u = unif(rng) * tot;
    size_t pick = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
    if (pick >= arcs.size()) pick = arcs.size() - 1;
    while (pick > 0 && cum[pick] == cum[pick - 1]) --pick;
    const Arc& a = arcs[pick];
    if (a.in != kEps) ++pos;
    if (a.out != kEps) y.push_back(a.out);
    s = a.dst;
  }
  return y;
}

// ---- forward/backward over one training pair ----

namespace {

struct Profile {
  struct PArc {
    int from, to, out, tag;
    double w;
  };
  std::vector<PArc> eps, emit;  // eps arcs sorted by source topological rank
  std::vector<int> order;       // topological order of the eps-output subgraph
  int initial = 0, final = -1;
  int n = 0;
};

Profile build_profile(ErrorModelView& v, const std::vector<int>& x) {
  Profile p;
  const int shift = v.key_bits();
  std::unordered_map<uint64_t, int> ids;
  std::vector<std::pair<size_t, uint64_t>> nodes;
  auto id_of = [&](size_t pos, uint64_t key) {
    uint64_t packed = (static_cast<uint64_t>(pos) << shift) | key;
    auto [it, fresh] = ids.try_emplace(packed, static_cast<int>(nodes.size()));
    if (fresh) nodes.push_back({pos, key});
    return it->second;
  };
  p.initial = id_of(0, v.initial());
  const uint64_t fin = v.final();
  std::vector<Arc> arcs;
  std::vector<Profile::PArc> eps;
  for (size_t h = 0; h < nodes.size(); ++h) {
    auto [pos, key] = nodes[h];
    if (key == fin && pos == x.size()) p.final = static_cast<int>(h);
    v.arcs(key, arcs);
    for (const auto& a : arcs) {
      size_t np = pos;
      if (a.in != kEps) {
        if (pos >= x.size() || a.in != x[pos]) continue;
        np = pos + 1;
      }
      int to = id_of(np, a.dst);
      Profile::PArc pa{static_cast<int>(h), to, a.out, a.tag, a.w};
      (a.out == kEps ? eps : p.emit).push_back(pa);
    }
  }
  p.n = static_cast<int>(nodes.size());
  std::vector<int> indeg(p.n, 0);
  std::vector<std::vector<int>> succ(p.n);
  for (size_t i = 0; i < eps.size(); ++i) {
    succ[eps[i].from].push_back(static_cast<int>(i));
    indeg[eps[i].to]++;
  }
  std::vector<int> stack;
  for (int q = p.n - 1; q >= 0; --q)
    if (!indeg[q]) stack.push_back(q);
  while (!stack.empty()) {
    int q = stack.back();
    stack.pop_back();
    p.order.push_back(q);
    for (int ai : succ[q]) {
      p.eps.push_back(eps[ai]);
      if (--indeg[eps[ai].to] == 0) stack.push_back(eps[ai].to);
    }
  }
  if (static_cast<int>(p.order.size()) != p.n) throw Error("error model: epsilon-output cycle in profile");
  return p;
}

// Returns log Z; fills per-formula expected counts when `counts` is non-null.
// Columns are rescaled to sum 1, so everything stays in linear space.
double forward_backward(const Profile& p, const std::vector<int>& y, std::vector<double>* counts) {
  const double NEG = LogSemiring::zero();
  if (p.final < 0) return NEG;
  const size_t Y = y.size(), V = p.n;
  std::vector<double> alpha((Y + 1) * V, 0.0), scale(Y + 1, 1.0);
  auto A = [&](size_t j) { return &alpha[j * V]; };
  A(0)[p.initial] = 1.0;
  double logz = 0;
  for (size_t j = 0; j <= Y; ++j) {
    double* cur = A(j);
    if (j > 0) {
      const double* prev = A(j - 1);
      for (const auto& a : p.emit)
        if (a.out == y[j - 1] && prev[a.from] != 0) cur[a.to] += prev[a.from] * a.w;
    }
    for (const auto& a : p.eps)
      if (cur[a.from] != 0) cur[a.to] += cur[a.from] * a.w;
    double sum = 0;
    for (size_t q = 0; q < V; ++q) sum += cur[q];
    if (sum <= 0) return NEG;
    scale[j] = sum;
    logz += std::log(sum);
    for (size_t q = 0; q < V; ++q) cur[q] /= sum;
  }
  const double last = A(Y)[p.final];
  if (last <= 0) return NEG;
  logz += std::log(last);
  if (!counts) return logz;
  std::vector<double> beta((Y + 1) * V, 0.0);
  auto B = [&](size_t j) { return &beta[j * V]; };
  for (size_t jj = Y + 1; jj-- > 0;) {
    double* cur = B(jj);
    if (jj == Y) cur[p.final] = 1.0 / last;
    if (jj < Y) {
      const double* next = B(jj + 1);
      const double inv = 1.0 / scale[jj + 1];
      for (const auto& a : p.emit)
        if (a.out == y[jj] && next[a.to] != 0) cur[a.from] += next[a.to] * a.w * inv;
    }
    for (size_t i = p.eps.size(); i-- > 0;) {
      const auto& a = p.eps[i];
      if (cur[a.to] != 0) cur[a.from] += cur[a.to] * a.w;
    }
  }
  auto& cnt = *counts;
  for (size_t j = 0; j <= Y; ++j) {
    const double* al = A(j);
    const double* be = B(j);
    for (const auto& a : p.eps) cnt[a.tag] += al[a.from] * a.w * be[a.to];
    if (j < Y) {
      const double* bn = B(j + 1);
      const double inv = 1.0 / scale[j + 1];
      for (const auto& a : p.emit)
        if (a.out == y[j]) cnt[a.tag] += al[a.from] * a.w * bn[a.to] * inv;
    }
  }
  return logz;
}

}  // namespace

double pair_log_likelihood(ErrorModelView& v, const TrainingPair& p) {
  Profile prof = build_profile(v, p.input);
  return forward_backward(prof, p.output, nullptr);
}

ErrorParams baum_welch(const std::vector<TrainingPair>& data, const ErrorParams& init, int c, bool tandem_only,
                       int iters, FitReport* report) {
  ErrorParams cur = init;
  if (cur.len_dist.empty()) cur.len_dist = ErrorParams::defaults(c).len_dist;
  FitReport local;
  FitReport& rep = report ? *report : local;
  const std::vector<std::vector<int>> groups = {
      {kDelOpen, kTanDup, kFwdDup, kRevDup, kNoGap}, {kDelExt, kDelEnd}, {kTransition, kTransversion, kMatch}};
  const unsigned workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  for (int it = 0; it <= iters; ++it) {
    ErrorModelView v(cur, c, tandem_only);
    const size_t F = v.formulas().size();
    std::vector<double> tag_counts(F, 0.0);
    double ll = 0;
    int skipped = 0;
    // Pairs are split into contiguous chunks and reduced in chunk order, so results do not depend on timing.
    std::vector<std::future<std::pair<double, std::vector<double>>>> jobs;
    std::vector<std::vector<int>> chunk_zero(workers);
    for (unsigned w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        ErrorModelView vw(cur, c, tandem_only);
        std::vector<double> cnt(F, 0.0);
        double sum = 0;
        for (size_t i = w; i < data.size(); i += workers) {
          Profile prof = build_profile(vw, data[i].input);
          std::vector<double> pc(F, 0.0);
          double z = forward_backward(prof, data[i].output, &pc);
          if (!std::isfinite(z)) {
            chunk_zero[w].push_back(static_cast<int>(i));
            continue;
          }
          sum += z;
          for (size_t f = 0; f < F; ++f) cnt[f] += pc[f];
        }
        return std::make_pair(sum, cnt);
      }));
    }
    for (unsigned w = 0; w < workers; ++w) {
      auto [sum, cnt] = jobs[w].get();
      ll += sum;
      for (size_t f = 0; f < F; ++f) tag_counts[f] += cnt[f];
      skipped += static_cast<int>(chunk_zero[w].size());
      if (it == 0)
        for (int i : chunk_zero[w]) rep.warnings.push_back("pair " + std::to_string(i) + " has zero likelihood; skipped");
    }
    rep.loglik.push_back(ll);
    rep.skipped = skipped;
    if (it == iters) break;
    // Split each formula's expected count over its terms, then over the parameters in each term.
    std::vector<double> theta = cur.to_vector();
    std::vector<double> pcount(theta.size(), 0.0);
    for (size_t f = 0; f < F; ++f) {
      if (tag_counts[f] <= 0) continue;
      const Formula& fm = v.formulas()[f];
      double w = eval_formula(fm, theta);
      if (w <= 0) continue;
      for (const auto& t : fm) {
        double tv = t.coef;
        for (int q : t.params) tv *= theta[q];
        for (int q : t.params) pcount[q] += tag_counts[f] * tv / w;
      }
    }
    std::vector<std::vector<int>> all = groups;
    std::vector<int> lens;
    for (size_t q = kLen1; q < theta.size(); ++q) lens.push_back(static_cast<int>(q));
    all.push_back(lens);
    for (const auto& g : all) {
      double tot = 0;
      for (int q : g) tot += pcount[q];
      if (tot <= 0) continue;
      for (int q : g) theta[q] = pcount[q] / tot;
    }
    cur = ErrorParams::from_vector(theta);
  }
  return cur;
}

}  // namespace fstdna
