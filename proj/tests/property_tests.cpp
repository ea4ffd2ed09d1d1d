#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <set>

#include "fstdna/dp.hpp"
#include "fstdna/errormodel.hpp"
#include "fstdna/machine.hpp"
#include "fstdna/pipeline.hpp"
#include "fstdna/repeatcode.hpp"
#include "fstdna/synccode.hpp"
#include "fstdna/view.hpp"

using namespace fstdna;

namespace {

enum class Forward { EpsEps, EpsIn, EpsOut };

// Arcs with an epsilon on the chosen side (and all eps/eps arcs) move to a higher state.
Machine random_machine(std::mt19937_64& rng, Forward fw) {
  std::uniform_int_distribution<int> nq(2, 4), nt(3, 10), lab(-1, 1);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  Machine m;
  m.in_alpha = Alphabet{"0", "1"};
  m.out_alpha = Alphabet{"0", "1"};
  int Q = nq(rng);
  for (int i = 0; i < Q; ++i) m.add_state();
  m.initial = 0;
  m.final = static_cast<int>(rng() % Q);
  int T = nt(rng);
  for (int t = 0; t < T; ++t) {
    int src = static_cast<int>(rng() % Q), dst = static_cast<int>(rng() % Q);
    int in = lab(rng), out = lab(rng);
    bool forward = (in == kEps && out == kEps) || (fw == Forward::EpsIn && in == kEps) ||
                   (fw == Forward::EpsOut && out == kEps);
    if (forward) {
      if (src == Q - 1) continue;
      dst = src + 1 + static_cast<int>(rng() % (Q - 1 - src));
    }
    m.add(src, in, out, w(rng), dst);
  }
  return m;
}

std::vector<std::vector<int>> all_strings(int maxlen) {
  std::vector<std::vector<int>> r{{}};
  for (size_t i = 0; i < r.size(); ++i)
    if (static_cast<int>(r[i].size()) < maxlen)
      for (int b = 0; b < 2; ++b) {
        auto s = r[i];
        s.push_back(b);
        r.push_back(s);
      }
  return r;
}

// Visits every complete path consuming exactly x and emitting exactly y (either unconstrained when null).
void for_each_path(const Machine& m, const std::vector<int>* x, const std::vector<int>* y,
                   const std::function<void(double, const std::vector<int>&, const std::vector<int>&)>& f) {
  std::vector<int> in, out;
  std::function<void(int, size_t, double)> rec = [&](int q, size_t i, double w) {
    if (q == m.final && (!x || i == x->size()) && (!y || out.size() == y->size())) f(w, in, out);
    for (const auto& t : m.trans) {
      if (t.src != q) continue;
      if (t.in != kEps && x && (i >= x->size() || (*x)[i] != t.in)) continue;
      if (t.out != kEps && y && (out.size() >= y->size() || (*y)[out.size()] != t.out)) continue;
      if (t.in != kEps) in.push_back(t.in);
      if (t.out != kEps) out.push_back(t.out);
      rec(t.dst, i + (t.in != kEps), w * t.weight);
      if (t.in != kEps) in.pop_back();
      if (t.out != kEps) out.pop_back();
    }
  };
  rec(m.initial, 0, 1.0);
}

double brute_sum(const Machine& m, const std::vector<int>& x, const std::vector<int>& y) {
  double s = 0;
  for_each_path(m, &x, &y, [&](double w, const auto&, const auto&) { s += w; });
  return s;
}

std::vector<int> seq(const std::string& s) {
  std::vector<int> v;
  for (char c : s) v.push_back(nt_index(c));
  return v;
}

bool naive_repeat(const std::string& w) {
  const size_t n = w.size();
  for (size_t L = 1; 2 * L <= n; ++L)
    for (size_t p = 0; p + 2 * L <= n; ++p) {
      if (w.compare(p, L, w, p + L, L) == 0) return true;
      if (L >= 2 && revcomp(w.substr(p, L)) == w.substr(p + L, L)) return true;
    }
  return false;
}

}  // namespace

TEST_CASE("semiring axioms") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 10000; ++n) {
    double a = u(rng), b = u(rng), c = u(rng);
    using P = ProbSemiring;
    CHECK(P::add(P::add(a, b), c) == doctest::Approx(P::add(a, P::add(b, c))));
    CHECK(P::mul(a, P::add(b, c)) == doctest::Approx(P::add(P::mul(a, b), P::mul(a, c))));
    CHECK(P::mul(P::mul(a, b), c) == doctest::Approx(P::mul(a, P::mul(b, c))));
    CHECK(P::add(a, P::zero()) == a);
    CHECK(P::mul(a, P::one()) == a);
    CHECK(P::mul(a, P::zero()) == P::zero());

    using T = TropicalSemiring;
    double ta = T::from_weight(a), tb = T::from_weight(b), tc = T::from_weight(c);
    CHECK(T::add(T::add(ta, tb), tc) == T::add(ta, T::add(tb, tc)));
    CHECK(T::add(ta, tb) == T::add(tb, ta));
    CHECK(T::mul(ta, T::add(tb, tc)) == doctest::Approx(T::add(T::mul(ta, tb), T::mul(ta, tc))));
    CHECK(T::add(ta, T::zero()) == ta);
    CHECK(T::mul(ta, T::one()) == ta);
    CHECK(T::mul(ta, T::zero()) == T::zero());
    CHECK(T::add(ta, ta) == ta);

    using L = LogSemiring;
    double la = L::from_weight(a), lb = L::from_weight(b), lc = L::from_weight(c);
    CHECK(std::exp(L::add(la, lb)) == doctest::Approx(a + b));
    CHECK(L::add(L::add(la, lb), lc) == doctest::Approx(L::add(la, L::add(lb, lc))));
    CHECK(L::mul(la, L::add(lb, lc)) == doctest::Approx(L::add(L::mul(la, lb), L::mul(la, lc))));
    CHECK(L::add(la, L::zero()) == la);
    CHECK(L::mul(la, L::zero()) == L::zero());
  }
}

TEST_CASE("evaluate equals the sum over enumerated paths") {
  std::mt19937_64 rng(2);
  auto strs = all_strings(3);
  for (int n = 0; n < 100; ++n) {
    Machine m = random_machine(rng, Forward::EpsEps);
    for (const auto& x : strs)
      for (const auto& y : strs) {
        double b = brute_sum(m, x, y);
        CHECK(evaluate<ProbSemiring>(m, x, y) == doctest::Approx(b).epsilon(1e-12));
        double lw = evaluate<LogSemiring>(m, x, y);
        if (b > 0) CHECK(std::exp(lw) == doctest::Approx(b).epsilon(1e-9));
      }
  }
}

TEST_CASE("viterbi finds the best enumerated path") {
  std::mt19937_64 rng(3);
  auto strs = all_strings(4);
  for (int n = 0; n < 100; ++n) {
    Machine m = random_machine(rng, Forward::EpsOut);
    for (const auto& y : strs) {
      // every cycle emits, so the paths with output y are finite
      double best = 0;
      for_each_path(m, nullptr, &y, [&](double w, const auto&, const auto&) { best = std::max(best, w); });
      auto r = viterbi_decode(m, y);
      if (best == 0) {
        CHECK_FALSE(r.ok);
        continue;
      }
      REQUIRE(r.ok);
      CHECK(r.log_weight == doctest::Approx(std::log(best)).epsilon(1e-9));
      CHECK(std::exp(-evaluate<TropicalSemiring>(m, r.input, y)) == doctest::Approx(best).epsilon(1e-9));
    }
  }
}

TEST_CASE("composition equals summing over intermediate sequences") {
  std::mt19937_64 rng(4);
  auto strs = all_strings(2);
  for (int n = 0; n < 200; ++n) {
    Machine r = random_machine(rng, Forward::EpsIn);
    Machine s = random_machine(rng, Forward::EpsEps);
    Machine c = compose(r, s);
    for (const auto& x : strs) {
      // every output of r on x, with its weight
      std::vector<std::pair<double, std::vector<int>>> zs;
      for_each_path(r, &x, nullptr, [&](double w, const auto&, const auto& z) { zs.push_back({w, z}); });
      for (const auto& y : strs) {
        double expect = 0;
        for (const auto& [w, z] : zs) expect += w * brute_sum(s, z, y);
        CHECK(evaluate<ProbSemiring>(c, x, y) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("waiting machines keep the function within the size bounds") {
  std::mt19937_64 rng(5);
  auto strs = all_strings(3);
  for (int n = 0; n < 200; ++n) {
    Machine m = random_machine(rng, Forward::EpsEps);
    Machine w = to_waiting_machine(m);
    CHECK(w.num_states() <= 2 * m.num_states());
    CHECK(w.num_transitions() <= m.num_transitions() + m.num_states());
    Adjacency adj(w);
    for (int q = 0; q < w.num_states(); ++q) {
      bool eps = false, inp = false;
      for (int k = adj.begin(q); k < adj.end(q); ++k) (w.trans[adj.order[k]].in == kEps ? eps : inp) = true;
      CHECK_FALSE((eps && inp));
    }
    for (const auto& x : strs)
      for (const auto& y : strs)
        CHECK(evaluate<ProbSemiring>(w, x, y) == doctest::Approx(evaluate<ProbSemiring>(m, x, y)).epsilon(1e-12));
  }
}

TEST_CASE("machine json round trip keeps the function") {
  std::mt19937_64 rng(6);
  auto strs = all_strings(2);
  for (int n = 0; n < 100; ++n) {
    Machine m = random_machine(rng, Forward::EpsEps);
    Machine back = machine_from_json(machine_to_json(m));
    for (const auto& x : strs)
      for (const auto& y : strs) CHECK(evaluate<ProbSemiring>(back, x, y) == evaluate<ProbSemiring>(m, x, y));
  }
}

TEST_CASE("prequels match path enumeration") {
  CodeParams p;
  p.kmer = 2;
  KmerGraph g = build_pruned_graph(p);
  auto out = g.out_edges();
  for (size_t D = 0; D < g.v.size(); ++D) {
    if (g.v[D].kind != KmerGraph::Natural) continue;
    for (int N = 0; N <= 4; ++N) {
      std::set<int> expect;
      for (size_t s = 0; s < g.v.size(); ++s) {
        if (g.v[s].kind != KmerGraph::Natural) continue;
        std::function<bool(int, int)> reach = [&](int q, int left) -> bool {
          if (left == 0) return q == static_cast<int>(D);
          if (left != N && q == static_cast<int>(D)) return false;
          for (int e : out[q])
            if (reach(g.e[e].to, left - 1)) return true;
          return false;
        };
        if (reach(static_cast<int>(s), N)) expect.insert(static_cast<int>(s));
      }
      auto got = prequels(g, static_cast<int>(D), {static_cast<int>(D)}, N);
      CHECK(std::set<int>(got.begin(), got.end()) == expect);
    }
  }
  int tg = g.find("TG");
  CHECK(steps_to(g, tg, {tg}, 8) <= 4);
}

TEST_CASE("repeat-free windows and control words in 10^4 encodings") {
  CodeParams p;
  p.kmer = 4;
  p.controls = 2;
  p.start_word = p.end_word = true;
  Code c = generate_code(p, InputMode::Binary);
  REQUIRE(c.words.size() == 2);
  for (const auto& v : build_pruned_graph(p).v)
    if (v.kind == KmerGraph::Natural) CHECK_FALSE(naive_repeat(v.ctx));
  Encoder enc(c.machine);
  int c2 = c.machine.in_alpha.at("c2");
  int zero = c.machine.in_alpha.at("0"), one = c.machine.in_alpha.at("1");
  std::mt19937_64 rng(7);
  long bad_window = 0, stray_control = 0, round_trip = 0;
  for (int n = 0; n < 10000; ++n) {
    // the start word needs no input symbol
    std::vector<int> x;
    for (int i = 0; i < 64; ++i) x.push_back(rng() & 1 ? one : zero);
    // an unfinished radix block is padded with zeros before the end word
    std::vector<int> y;
    for (int pad = 0; y.empty(); ++pad) {
      REQUIRE(pad <= 8);
      auto xp = x;
      xp.insert(xp.end(), pad, zero);
      xp.push_back(c2);
      try {
        y = enc.encode(xp);
        x = xp;
      } catch (const Error&) {
      }
    }
    std::string dna;
    for (int o : y) dna += c.machine.out_alpha.name(o);
    for (size_t i = 0; i + 4 <= dna.size(); ++i) {
      std::string w = dna.substr(i, 4);
      bad_window += naive_repeat(w);
      bool ctl = w == c.words[0] || w == c.words[1];
      bool allowed = (i == 0 && w == c.words[0]) || (i + 4 == dna.size() && w == c.words[1]);
      stray_control += ctl && !allowed;
    }
    CHECK(dna.substr(0, 4) == c.words[0]);
    CHECK(dna.substr(dna.size() - 4) == c.words[1]);
    if (n < 1000) {
      auto r = viterbi_decode(c.machine, y);
      round_trip += r.ok && r.input == x;
    }
  }
  CHECK(bad_window == 0);
  CHECK(stray_control == 0);
  CHECK(round_trip == 1000);
}

TEST_CASE("delayed machine matches the original on short inputs") {
  CodeParams p;
  p.kmer = 2;
  p.controls = 1;
  p.start_word = p.end_word = true;
  Code c = generate_code(p, InputMode::Binary);
  Machine d = delay_transform(c.machine, 2);
  Encoder enc(c.machine);
  int c1 = c.machine.in_alpha.at("c1");
  int encoded = 0;
  for (int len = 0; len <= 6; ++len)
    for (int bits = 0; bits < (1 << len); ++bits) {
      std::vector<int> x;
      for (int i = 0; i < len; ++i) x.push_back(c.machine.in_alpha.at((bits >> i) & 1 ? "1" : "0"));
      x.push_back(c1);
      std::vector<int> y;
      try {
        y = enc.encode(x);
      } catch (const Error&) {
        continue;
      }
      std::vector<int> dx, dy;
      for (int s : x) dx.push_back(d.in_alpha.at(c.machine.in_alpha.name(s)));
      for (int s : y) dy.push_back(d.out_alpha.at(c.machine.out_alpha.name(s)));
      CHECK(evaluate<ProbSemiring>(d, dx, dy) == doctest::Approx(evaluate<ProbSemiring>(c.machine, x, y)));
      CHECK(viterbi_decode(d, dy).input == dx);
      ++encoded;
    }
  CHECK(encoded > 20);
}

TEST_CASE("error model state counts match an independent enumeration") {
  auto p4 = [](int k) { return std::pow(4.0, k); };
  // a, f; b with future 1..c; c, d, e blocks with S, D and their duplication states
  auto expected = [&](int c, bool tandem_only) {
    double n = 2;
    for (int f = 1; f <= c; ++f) n += p4(f);
    for (int k = 1; k < c; ++k) n += p4(k) * p4(c) * (tandem_only ? 2 + k : 2 + 2 * k + c);
    n += p4(c) * p4(c) * (tandem_only ? 2 + c : 2 + 3 * c);
    for (int k = 1; k < c; ++k) n += p4(c) * p4(k) * (tandem_only ? 2 + c : 2 + 2 * c + k);
    return static_cast<int>(n);
  };
  for (int c = 1; c <= 2; ++c) {
    ErrorParams e = ErrorParams::defaults(c);
    e.fwddup = e.revdup = 0.002;
    e.nogap -= 0.004;
    CHECK(build_error_model(e, c).num_states() == expected(c, false));
    CHECK(build_error_model(ErrorParams::defaults(c), c, true).num_states() == expected(c, true));
  }
  CHECK(expected(1, false) == 86);
  CHECK(expected(2, false) == 2902);
  CHECK(expected(1, true) == 54);
}

TEST_CASE("error model outgoing probability is normalized") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int c = 1; c <= 2; ++c)
    for (int rep = 0; rep < 3; ++rep) {
      ErrorParams e = ErrorParams::defaults(c);
      double g[5];
      double tot = 0;
      for (double& v : g) tot += v = u(rng);
      e.delopen = g[0] / tot, e.tandup = g[1] / tot, e.fwddup = g[2] / tot, e.revdup = g[3] / tot;
      e.nogap = 1 - e.delopen - e.tandup - e.fwddup - e.revdup;
      e.delext = u(rng) * 0.9;
      e.delend = 1 - e.delext;
      double ts = u(rng) * 0.1, tv = u(rng) * 0.1;
      e.transition = ts, e.transversion = tv, e.match = 1 - ts - tv;
      tot = 0;
      for (auto& l : e.len_dist) tot += l = u(rng);
      for (auto& l : e.len_dist) l /= tot;
      e.validate(1e-9);
      ErrorModelView v(e, c);
      // walk every reachable state
      std::vector<uint64_t> todo{v.initial()};
      std::set<uint64_t> seen{v.initial()};
      std::vector<Arc> arcs;
      double worst = 0;
      int checked = 0;
      while (!todo.empty()) {
        uint64_t s = todo.back();
        todo.pop_back();
        v.arcs(s, arcs);
        std::vector<Arc> here = arcs;
        for (const auto& a : here)
          if (seen.insert(a.dst).second) todo.push_back(a.dst);
        EState st = v.unpack(s);
        if (st.kind != EKind::S || v.block(st) != 'd') continue;
        for (int x = 0; x < 4; ++x) {
          double sum = 0;
          for (const auto& a : here)
            if (a.in == x || (a.in == kEps && !v.is_end_arc(s, a))) sum += a.w * v.mass(a.dst);
          worst = std::max(worst, std::fabs(sum - 1));
        }
        ++checked;
      }
      CHECK(checked == static_cast<int>(std::pow(16.0, c)));
      CHECK(worst <= 1e-10);
    }
}

TEST_CASE("pcont identity") {
  ErrorParams e = ErrorParams::defaults(3);
  e.fwddup = 0.004;
  e.revdup = 0.006;
  e.nogap -= 0.01;
  e.len_dist = {0.1, 0.2, 0.3, 0.15, 0.15, 0.1};
  for (int j = 0; j <= 6; ++j)
    for (int k = 0; k <= 6; ++k) {
      double lj = 0, lk = 0;
      for (int i = 1; i <= j; ++i) lj += e.len_dist[i - 1];
      for (int i = 1; i <= k; ++i) lk += e.len_dist[i - 1];
      CHECK(pcont(j, k, e) + e.delopen + (e.tandup + e.fwddup) * lj + e.revdup * lk == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("clean error model is the identity for any read") {
  std::mt19937_64 rng(9);
  for (int c = 1; c <= 3; ++c) {
    ErrorParams e = ErrorParams::defaults(c);
    e.delopen = e.tandup = e.fwddup = e.revdup = 0;
    e.nogap = 1;
    e.transition = e.transversion = 0;
    e.match = 1;
    ErrorModelView v(e, c);
    for (int n = 0; n < 50; ++n) {
      std::vector<int> x(2 * c + rng() % 10);
      for (auto& s : x) s = static_cast<int>(rng() % 4);
      CHECK(pair_log_likelihood(v, {x, x}) == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("substitution-only channel weight is a product of match probabilities") {
  ErrorParams e = ErrorParams::defaults(1);
  e.delopen = e.tandup = 0;
  e.nogap = 1;
  Machine m = build_error_model(e, 1);
  for (std::string s : {"AC", "ACGTT", "GGATC"})
    CHECK(evaluate<ProbSemiring>(m, seq(s), seq(s)) == doctest::Approx(std::pow(e.match, s.size())));
}

TEST_CASE("partial observation admits every substring") {
  ErrorParams e = ErrorParams::defaults(1);
  Machine w = wrap_partial_observation(build_error_model(e, 1));
  std::string x = "ACGTAC";
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t j = i; j <= x.size(); ++j)
      CHECK(std::isfinite(evaluate<TropicalSemiring>(w, seq(x), seq(x.substr(i, j - i)))));
}

TEST_CASE("baum-welch log-likelihood does not decrease") {
  ErrorParams truth = ErrorParams::defaults(1);
  truth.delopen = 0.03;
  truth.tandup = 0.04;
  truth.nogap = 0.93;
  truth.transition = 0.02;
  truth.transversion = 0.01;
  truth.match = 0.97;
  ErrorModelView v(truth, 1, true);
  std::mt19937_64 rng(10);
  std::vector<TrainingPair> data;
  for (int i = 0; i < 20; ++i) {
    std::vector<int> x(150);
    for (auto& s : x) s = static_cast<int>(rng() % 4);
    data.push_back({x, sample_channel(v, x, rng)});
  }
  FitReport rep;
  ErrorParams fit = baum_welch(data, ErrorParams::defaults(1), 1, true, 10, &rep);
  REQUIRE(rep.loglik.size() >= 10);
  for (size_t i = 1; i < rep.loglik.size(); ++i) CHECK(rep.loglik[i] >= rep.loglik[i - 1] - 1e-8 * std::fabs(rep.loglik[i - 1]));
  fit.validate(1e-9);

  // noiseless pairs push the match probability up
  std::vector<TrainingPair> clean;
  for (const auto& d : data) clean.push_back({d.input, d.input});
  ErrorParams m1 = baum_welch(clean, ErrorParams::defaults(1), 1, true, 1);
  ErrorParams m3 = baum_welch(clean, ErrorParams::defaults(1), 1, true, 3);
  CHECK(m1.match > ErrorParams::defaults(1).match);
  CHECK(m3.match >= m1.match);
}

TEST_CASE("hamming 7,4 corrects every single error") {
  Machine h = hamming_machine("7,4");
  Machine flip;
  flip.in_alpha = flip.out_alpha = Alphabet{"0", "1"};
  flip.initial = flip.final = flip.add_state();
  flip.add(0, 0, 0, 0.9, 0);
  flip.add(0, 1, 1, 0.9, 0);
  flip.add(0, 0, 1, 0.1, 0);
  flip.add(0, 1, 0, 0.1, 0);
  Machine ch = compose(h, flip);
  int ok = 0;
  for (int d = 0; d < 16; ++d) {
    std::vector<int> x{d >> 3 & 1, d >> 2 & 1, d >> 1 & 1, d & 1};
    auto y = encode_deterministic(h, x);
    CHECK(viterbi_decode(ch, y).input == x);
    for (int k = 0; k < 7; ++k) {
      auto e = y;
      e[k] ^= 1;
      auto r = viterbi_decode(ch, e);
      ok += r.ok && r.input == x;
    }
  }
  CHECK(ok == 16 * 7);
}

TEST_CASE("mutation counts follow their binomial laws") {
  std::mt19937_64 rng(11);
  std::string dna(1000000, 'A');
  for (auto& c : dna) c = kNucleotides[rng() % 4];
  auto within = [](double k, double n, double p) {
    double sd = std::sqrt(n * p * (1 - p));
    return std::fabs(k - n * p) <= 4 * sd;
  };
  ChannelSpec ch;
  ch.sub_rate = 0.05;
  ch.ts_tv_ratio = 3;
  ch.seed = 12;
  MutateStats st;
  std::string s = mutate(dna, ch, &st);
  long diff = 0;
  for (size_t i = 0; i < s.size(); ++i) diff += s[i] != dna[i];
  CHECK(diff == st.subs);
  CHECK(within(st.subs, 1e6, 0.05));
  CHECK(within(st.transitions, st.subs, 0.75));

  ChannelSpec dl;
  dl.del_rate = 0.03;
  dl.del_maxlen = 4;
  dl.seed = 13;
  st = {};
  s = mutate(dna, dl, &st);
  long trials = static_cast<long>(s.size()) + st.dels;
  CHECK(static_cast<long>(dna.size()) == static_cast<long>(s.size()) + st.del_bases);
  CHECK(within(st.dels, trials, 0.03));
  CHECK(st.del_bases / double(st.dels) == doctest::Approx(2.5).epsilon(0.02));

  ChannelSpec du;
  du.dup_rate = 0.02;
  du.dup_maxlen = 4;
  du.seed = 14;
  st = {};
  s = mutate(dna, du, &st);
  CHECK(within(st.dups + st.dup_skipped, 1e6, 0.02));
  CHECK(static_cast<long>(s.size()) == 1000000 + st.dup_bases);
}
