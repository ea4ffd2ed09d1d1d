#include "fstdna/mixradix.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <unordered_map>

#include "fstdna/repeatcode.hpp"

namespace fstdna {

namespace {

mpq_class decimal_rational(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  std::string s(buf);
  if (s.find('e') != std::string::npos || s.find('E') != std::string::npos) {
    mpq_class q(x);
    return q;
  }
  auto dot = s.find('.');
  std::string digits = s, den = "1";
  if (dot != std::string::npos) {
    digits = s.substr(0, dot) + s.substr(dot + 1);
    den = "1" + std::string(s.size() - dot - 1, '0');
  }
  mpq_class q{mpz_class(digits), mpz_class(den)};
  q.canonicalize();
  return q;
}

int sym_rank(char c) { return c == '$' ? 0 : (c == '0' ? 1 : 2); }

struct WordDef {
  std::string w;
  int len;
  bool term;
};

std::vector<WordDef> word_defs(int N) {
  std::vector<WordDef> out;
  for (int L = 0; L <= N; ++L)
    for (int b = 0; b < (1 << L); ++b) {
      std::string s;
      for (int i = L - 1; i >= 0; --i) s.push_back((b >> i) & 1 ? '1' : '0');
      bool term = L < N;
      if (term) s.push_back('$');
      out.push_back({s, L, term});
    }
  return out;
}

template <class Num>
struct NumOps;

template <>
struct NumOps<mpq_class> {
  static mpq_class from_nu(double nu) { return decimal_rational(nu); }
  static mpq_class pow(const mpq_class& b, int e) {
    mpq_class r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  }
  // digit r with D + r(E-D)/R <= m < D + (r+1)(E-D)/R
  static int digit(const mpq_class& m, const mpq_class& D, const mpq_class& E, int R) {
    mpq_class q = (m - D) * R / (E - D);
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return static_cast<int>(f.get_si());
  }
  static double to_double(const mpq_class& x) { return x.get_d(); }
  static std::string text(const mpq_class& x) { return x.get_str(); }
};

template <>
struct NumOps<double> {
  static double from_nu(double nu) { return nu; }
  static double pow(double b, int e) { return std::pow(b, e); }
  static int digit(double m, double D, double E, int R) {
    int r = 0;
    while (r < R - 1 && !(D + r * (E - D) / R <= m && m < D + (r + 1) * (E - D) / R)) ++r;
    return r;
  }
  static double to_double(double x) { return x; }
  static std::string text(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }
};

template <class Num>
std::vector<std::pair<WordDef, Num>> sorted_words(int N, const Num& nu) {
  using O = NumOps<Num>;
  std::vector<std::pair<WordDef, Num>> out;
  Num half = (Num(1) - nu) / 2;
  for (auto& d : word_defs(N)) {
    Num p = O::pow(half, d.len);
    if (d.term) p *= nu;
    out.push_back({d, p});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    const std::string &x = a.first.w, &y = b.first.w;
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(),
                                        [](char c1, char c2) { return sym_rank(c1) < sym_rank(c2); });
  });
  return out;
}

struct OutNode {
  int parent = -1;
  int digit = 0, radix = 0;
  int child[3] = {-1, -1, -1};  // per radix 2,3,4
  bool final = false;
  int trie = 0;
};

// Global trie of output prefixes, counting distinct owning words.
struct PrefixTrie {
  struct T {
    int owner = -1;
    bool shared = false;
    std::unordered_map<int, int> next;
  };
  std::vector<T> nodes{T{}};
  int child(int t, int sym) {
    auto it = nodes[t].next.find(sym);
    if (it != nodes[t].next.end()) return it->second;
    int id = static_cast<int>(nodes.size());
    nodes[t].next.emplace(sym, id);
    nodes.emplace_back();
    return id;
  }
  void own(int t, int word) {
    if (nodes[t].owner < 0) nodes[t].owner = word;
    else if (nodes[t].owner != word) nodes[t].shared = true;
  }
};

int sym_code(int digit, int radix) { return radix * 4 + digit; }

template <class Num>
Machine build(const RadixParams& p, MixradixStats* stats) {
  using O = NumOps<Num>;
  if (p.N < 1) throw Error("mixradix: N must be at least 1");
  if (!(p.nu > 0 && p.nu < 1)) throw Error("mixradix: nu must lie in (0,1)");
  const Num nu = O::from_nu(p.nu);
  auto W = sorted_words<Num>(p.N, nu);
  const size_t nw = W.size();
  std::vector<Num> A(nw), B(nw);
  Num acc = 0;
  for (size_t i = 0; i < nw; ++i) {
    A[i] = acc;
    acc += W[i].second;
    B[i] = acc;
  }
  std::vector<std::vector<OutNode>> trees(nw);
  PrefixTrie trie;
  for (size_t wi = 0; wi < nw; ++wi) {
    const Num m = A[wi] + (B[wi] - A[wi]) / 2;
    auto& nodes = trees[wi];
    std::vector<std::pair<Num, Num>> iv;
    nodes.push_back({});
    iv.push_back({Num(0), Num(1)});
    trie.own(0, static_cast<int>(wi));
    Num emax = 0;
    bool have_final = false;
    for (size_t h = 0; h < nodes.size(); ++h) {
      Num D = iv[h].first, E = iv[h].second;
      if (D >= A[wi] && E <= B[wi]) {
        nodes[h].final = true;
        if (!have_final || E > emax) emax = E;
        have_final = true;
        continue;
      }
      if (nodes.size() > 5'000'000) throw Error("mixradix: interval underflow below numeric resolution");
      for (int R = 2; R <= 4; ++R) {
        int r = O::digit(m, D, E, R);
        if (r < 0 || r >= R) throw Error("mixradix: midpoint outside node interval");
        Num d0 = D + r * (E - D) / R, d1 = D + (r + 1) * (E - D) / R;
        OutNode c;
        c.parent = static_cast<int>(h);
        c.digit = r;
        c.radix = R;
        c.trie = trie.child(nodes[h].trie, sym_code(r, R));
        trie.own(c.trie, static_cast<int>(wi));
        int id = static_cast<int>(nodes.size());
        nodes[h].child[R - 2] = id;
        nodes.push_back(c);
        iv.push_back({d0, d1});
      }
    }
    if (B[wi] < 1) {
      Num alpha = (Num(1) - emax) / (Num(1) - B[wi]);
      Num Bw = B[wi];
      for (size_t x = wi + 1; x < nw; ++x) {
        A[x] = alpha * (A[x] - Bw) + emax;
        B[x] = alpha * (B[x] - Bw) + emax;
      }
    }
  }

  // Keep nodes whose proper ancestors are all shared; unique nodes become terminal.
  std::vector<std::vector<char>> keep(nw), fin(nw);
  for (size_t wi = 0; wi < nw; ++wi) {
    auto& nodes = trees[wi];
    keep[wi].assign(nodes.size(), 0);
    fin[wi].assign(nodes.size(), 0);
    for (size_t i = 0; i < nodes.size(); ++i) {
      int par = nodes[i].parent;
      bool ok = par < 0 || (keep[wi][par] && !fin[wi][par]);
      if (!ok) continue;
      keep[wi][i] = 1;
      fin[wi][i] = nodes[i].final || !trie.nodes[nodes[i].trie].shared;
    }
  }

  // Merge by identical output language: hash-cons bottom-up (trees are deterministic).
  std::map<std::vector<int>, int> cls_of;
  const int kFinal = 0;
  cls_of[{}] = kFinal;
  std::vector<std::vector<int>> cls(nw);
  std::vector<std::vector<int>> cls_children;  // per class: (digit, radix, child class) x3
  cls_children.push_back({});
  for (size_t wi = 0; wi < nw; ++wi) {
    auto& nodes = trees[wi];
    cls[wi].assign(nodes.size(), -1);
    for (size_t ii = nodes.size(); ii-- > 0;) {
      if (!keep[wi][ii]) continue;
      if (fin[wi][ii]) {
        cls[wi][ii] = kFinal;
        continue;
      }
      std::vector<int> key;
      for (int k = 0; k < 3; ++k) {
        int c = nodes[ii].child[k];
        key.push_back(nodes[c].digit);
        key.push_back(cls[wi][c]);
      }
      auto [it, fresh] = cls_of.try_emplace(key, static_cast<int>(cls_children.size()));
      if (fresh) cls_children.push_back(key);
      cls[wi][ii] = it->second;
    }
  }

  Machine mch;
  for (const char* s : {"0", "1", "$"}) mch.in_alpha.add(s);
  for (int R = 2; R <= 4; ++R)
    for (int d = 0; d < R; ++d) mch.out_alpha.add(digit_symbol(d, R));
  int root = mch.add_state("in:");
  mch.initial = mch.final = root;
  // Prefix tree over input words.
  std::map<std::string, int> prefix_state{{"", root}};
  std::vector<std::string> internal{""};
  for (int L = 1; L < p.N; ++L)
    for (int b = 0; b < (1 << L); ++b) {
      std::string s;
      for (int i = L - 1; i >= 0; --i) s.push_back((b >> i) & 1 ? '1' : '0');
      prefix_state[s] = mch.add_state("in:" + s);
      internal.push_back(s);
    }
  std::vector<int> cls_state(cls_children.size(), -1);
  cls_state[kFinal] = root;
  for (size_t c = 1; c < cls_children.size(); ++c) cls_state[c] = mch.add_state("out:" + std::to_string(c));
  std::map<std::string, size_t> word_index;
  for (size_t wi = 0; wi < nw; ++wi) word_index[W[wi].first.w] = wi;
  for (const auto& s : internal) {
    for (char sym : {'0', '1', '$'}) {
      std::string t = s + sym;
      int dst;
      auto pit = prefix_state.find(t);
      if (sym != '$' && pit != prefix_state.end()) {
        dst = pit->second;
      } else {
        size_t wi = word_index.at(t);
        dst = cls_state[cls[wi][0]];
      }
      mch.add(prefix_state[s], mch.in_alpha.at(std::string(1, sym)), kEps, 1.0, dst);
    }
  }
  for (size_t c = 1; c < cls_children.size(); ++c) {
    const auto& key = cls_children[c];
    for (int k = 0; k < 3; ++k)
      mch.add(cls_state[c], kEps, mch.out_alpha.at(digit_symbol(key[2 * k], k + 2)), 1.0,
              cls_state[key[2 * k + 1]]);
  }

  if (stats) {
    stats->classes = static_cast<int>(cls_children.size());
    stats->prefix_states = static_cast<int>(internal.size());
    stats->encodings.clear();
    for (size_t wi = 0; wi < nw; ++wi) {
      std::vector<std::string> enc;
      auto& nodes = trees[wi];
      for (size_t i = 0; i < nodes.size(); ++i) {
        if (!keep[wi][i] || !fin[wi][i]) continue;
        std::vector<std::string> digs;
        for (int c = static_cast<int>(i); nodes[c].parent >= 0; c = nodes[c].parent)
          digs.push_back(digit_symbol(nodes[c].digit, nodes[c].radix));
        std::string s;
        for (auto it = digs.rbegin(); it != digs.rend(); ++it) s += (s.empty() ? "" : " ") + *it;
        enc.push_back(s);
      }
      std::sort(enc.begin(), enc.end());
      stats->encodings.push_back({W[wi].first.w, enc});
    }
  }
  return mch;
}

}  // namespace

std::vector<CodewordInterval> input_word_set(int N, double nu) {
  if (N < 1 || !(nu > 0 && nu < 1)) throw Error("input_word_set: invalid parameters");
  auto W = sorted_words<mpq_class>(N, decimal_rational(nu));
  std::vector<CodewordInterval> out;
  mpq_class a = 0;
  for (auto& [d, p] : W) {
    CodewordInterval c;
    c.word = d.w;
    c.A = a.get_d();
    c.A_exact = a.get_str();
    a += p;
    c.B = a.get_d();
    c.B_exact = a.get_str();
    out.push_back(c);
  }
  return out;
}

Machine generate_mixradix(const RadixParams& p, MixradixStats* stats) {
  if (p.arith == Arithmetic::Exact) return build<mpq_class>(p, stats);
  return build<double>(p, stats);
}

Machine naive_binary_ternary() {
  Machine m;
  m.in_alpha = Alphabet{"0", "1"};
  m.out_alpha = Alphabet{"0_3", "1_3", "2_3"};
  int s = m.add_state("s");
  int p = m.add_state("s0");
  int f = m.add_state("end");
  m.initial = s;
  m.final = f;
  m.add(s, "1", "2_3", 1.0, s);
  m.add(s, "0", "", 1.0, p);
  m.add(p, "0", "0_3", 1.0, s);
  m.add(p, "1", "1_3", 1.0, s);
  m.add(s, "", "", 1.0, f);
  // flush: a dangling 0 is completed with a zero padding bit
  m.add(p, "", "0_3", 1.0, f);
  return m;
}

std::vector<std::string> encode_word_at_radix(const Machine& m, const std::string& word, int radix) {
  Adjacency adj(m);
  int q = m.initial;
  for (char c : word) {
    int sym = m.in_alpha.find(std::string(1, c));
    int nxt = -1;
    for (int k = adj.begin(q); k < adj.end(q); ++k)
      if (m.trans[adj.order[k]].in == sym) nxt = m.trans[adj.order[k]].dst;
    if (nxt < 0) return {};
    q = nxt;
  }
  std::vector<std::string> out;
  const std::string suffix = "_" + std::to_string(radix);
  while (q != m.initial) {
    int nxt = -1;
    for (int k = adj.begin(q); k < adj.end(q); ++k) {
      const auto& t = m.trans[adj.order[k]];
      if (t.in != kEps || t.out == kEps) continue;
      const std::string& s = m.out_alpha.name(t.out);
      if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
        out.push_back(s);
        nxt = t.dst;
        break;
      }
    }
    if (nxt < 0) return {};
    q = nxt;
  }
  return out;
}

double mean_symbols_per_bit(const Machine& m, int N, int radix) {
  double total = 0;
  for (int b = 0; b < (1 << N); ++b) {
    std::string w;
    for (int i = N - 1; i >= 0; --i) w.push_back((b >> i) & 1 ? '1' : '0');
    auto enc = encode_word_at_radix(m, w, radix);
    if (enc.empty()) throw Error("mean_symbols_per_bit: word " + w + " has no encoding");
    total += static_cast<double>(enc.size());
  }
  return total / (1 << N) / N;
}

}  // namespace fstdna
