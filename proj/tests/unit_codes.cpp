#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "fstdna/dp.hpp"
#include "fstdna/mixradix.hpp"
#include "fstdna/repeatcode.hpp"

using namespace fstdna;

TEST_CASE("repeat definitions") {
  CHECK(has_repeat("AA"));
  CHECK(has_repeat("ACGT"));  // AC then revcomp(AC)
  CHECK_FALSE(has_repeat("A"));
  CHECK_FALSE(has_repeat("ACTG"));
  CHECK(has_repeat("ACTACT"));
  CHECK(has_repeat("ACTCTG"));  // CT CT
  CHECK(has_repeat("CATGA", kNoInvRep, false));  // CA TG
  // local inverted repeat AC..GT with a two-base spacer
  CHECK_FALSE(has_repeat("ACAAGT", kNoInvRep, false));
  CHECK(has_repeat("ACAAGT", 2, false));
  CHECK_THROWS_AS(has_repeat("ACN"), Error);
}

TEST_CASE("revcomp") {
  CHECK(revcomp("AACG") == "CGTT");
  CHECK(complement('G') == 'C');
}

TEST_CASE("k=2 pruned graph drops homopolymers only") {
  CodeParams p;
  p.kmer = 2;
  KmerGraph g = build_pruned_graph(p);
  std::set<std::string> natural;
  for (const auto& v : g.v)
    if (v.kind == KmerGraph::Natural) natural.insert(v.ctx);
  for (const auto& s : natural) CHECK(s[0] != s[1]);
  // inverted repeats need two bases on each side, so AT, CG and friends survive
  CHECK(natural.size() == 12);
  p.allow_tandem = true;
  natural.clear();
  for (const auto& v : build_pruned_graph(p).v)
    if (v.kind == KmerGraph::Natural) natural.insert(v.ctx);
  CHECK(natural.size() == 16);
}

TEST_CASE("prequels at small N") {
  CodeParams p;
  p.kmer = 2;
  KmerGraph g = build_pruned_graph(p);
  int D = g.find("TG");
  REQUIRE(D >= 0);
  auto p0 = prequels(g, D, {D}, 0);
  CHECK(p0 == std::vector<int>{D});
  auto p1 = prequels(g, D, {D}, 1);
  std::set<int> preds;
  for (const auto& e : g.e)
    if (e.to == D) preds.insert(e.from);
  CHECK(std::set<int>(p1.begin(), p1.end()) == preds);
  int n = steps_to(g, D, {D}, 8);
  CHECK(n >= 1);
  CHECK(n <= 4);
}

TEST_CASE("control word search") {
  CodeParams p;
  p.kmer = 2;
  CHECK(find_control_words(build_pruned_graph(p), 1, 4) == std::vector<std::string>{"TG"});
  p.allow_tandem = true;
  CHECK(find_control_words(build_pruned_graph(p), 1, 4) == std::vector<std::string>{"TT"});
  CodeParams q;
  q.kmer = 4;
  CHECK(find_control_words(build_pruned_graph(q), 2, 8) == std::vector<std::string>{"TGTC", "CTGT"});
}

TEST_CASE("code machines: labels and controls") {
  CodeParams p;
  p.kmer = 2;
  p.controls = 1;
  p.start_word = true;
  Code c = generate_code(p);
  CHECK(c.words == std::vector<std::string>{"TG"});
  CHECK(c.machine.in_alpha.find("c1") >= 0);
  // the control word is entered only through transitions consuming c1
  Adjacency adj(c.machine);
  for (const auto& t : c.machine.trans) {
    if (t.in < 0) continue;
    const std::string& s = c.machine.in_alpha.name(t.in);
    CHECK((s == "c1" || s.find('_') != std::string::npos));
  }
}

TEST_CASE("code encoding round trip") {
  CodeParams p;
  p.kmer = 4;
  Code c = generate_code(p, InputMode::Binary);
  Encoder enc(c.machine);
  std::vector<int> x;
  for (int i = 0; i < 40; ++i) x.push_back(c.machine.in_alpha.find((i * 7 % 3) ? "1" : "0"));
  std::vector<int> y;
  try {
    y = enc.encode(x);
  } catch (const Error&) {
    y = enc.encode_padded(x, c.machine.in_alpha.find("0"));
  }
  std::string dna;
  for (int o : y) dna += c.machine.out_alpha.name(o);
  CHECK_FALSE(dna.empty());
  for (size_t i = 0; i + 4 <= dna.size(); ++i) CHECK_FALSE(has_repeat(dna.substr(i, 4)));
  auto r = viterbi_decode(c.machine, y);
  REQUIRE(r.ok);
  CHECK(std::equal(x.begin(), x.end(), r.input.begin()));
}

TEST_CASE("delay transform keeps the function") {
  CodeParams p;
  p.kmer = 2;
  p.controls = 2;
  p.start_word = p.end_word = true;
  Code c = generate_code(p, InputMode::Binary);
  Machine d = delay_transform(c.machine, 2);
  Encoder enc(c.machine);
  int c2 = c.machine.in_alpha.at("c2");
  int encoded = 0;
  for (int bits = 0; bits < 16; ++bits) {
    std::vector<int> x;
    for (int i = 0; i < 4; ++i) x.push_back(c.machine.in_alpha.at((bits >> i) & 1 ? "1" : "0"));
    x.push_back(c2);
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
    ++encoded;
  }
  CHECK(encoded > 0);
}

TEST_CASE("bases per bit of an all-quat code is one half") {
  Machine m;
  m.in_alpha = Alphabet{"0", "1"};
  m.out_alpha = dna_alphabet();
  m.initial = m.final = m.add_state();
  int mid = m.add_state();
  // two bits per base through a binary tree
  m.add(0, 0, kEps, 1.0, mid);
  int mid1 = m.add_state();
  m.add(0, 1, kEps, 1.0, mid1);
  m.add(mid, 0, 0, 1.0, 0);
  m.add(mid, 1, 1, 1.0, 0);
  m.add(mid1, 0, 2, 1.0, 0);
  m.add(mid1, 1, 3, 1.0, 0);
  auto r = bases_per_bit(m, 10, 64, 1);
  CHECK(r.mean == doctest::Approx(0.5));
}

TEST_CASE("mixradix input words") {
  auto w = input_word_set(2, 0.01);
  REQUIRE(w.size() == 7);
  std::vector<std::string> words;
  for (const auto& x : w) words.push_back(x.word);
  CHECK(words == std::vector<std::string>{"00", "01", "10", "11", "$", "0$", "1$"});
  double total = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    total += w[i].B - w[i].A;
    if (i) CHECK(w[i].A == doctest::Approx(w[i - 1].B));
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(input_word_set(1, 0.01).size() == 3);
}

TEST_CASE("mixradix encodings of 00 and 11") {
  MixradixStats st;
  generate_mixradix(RadixParams{}, &st);
  std::map<std::string, std::vector<std::string>> enc(st.encodings.begin(), st.encodings.end());
  CHECK(enc["00"] == std::vector<std::string>{"0_2 0_2", "0_2 0_3", "0_2 0_4", "0_3", "0_4"});
  auto e11 = enc["11"];
  CHECK(e11.size() == 11);
  CHECK(std::count(e11.begin(), e11.end(), "2_3 1_3") == 1);
  CHECK(std::count(e11.begin(), e11.end(), "3_4 1_4") == 1);
}

TEST_CASE("mixradix symbols per bit for N=2") {
  Machine m = generate_mixradix(RadixParams{});
  CHECK(mean_symbols_per_bit(m, 2, 2) == doctest::Approx(1.125).epsilon(1e-9));
  CHECK(mean_symbols_per_bit(m, 2, 3) == doctest::Approx(0.875).epsilon(1e-9));
  CHECK(mean_symbols_per_bit(m, 2, 4) == doctest::Approx(0.625).epsilon(1e-9));
}

TEST_CASE("naive binary to ternary") {
  Machine nb = naive_binary_ternary();
  auto enc = [&](const std::string& s) {
    std::vector<int> x;
    for (char c : s) x.push_back(nb.in_alpha.at(std::string(1, c)));
    Encoder e(nb);
    std::string out;
    for (int o : e.encode_padded(x, nb.in_alpha.at("0"))) out += nb.out_alpha.name(o) + " ";
    return out;
  };
  CHECK(enc("0011") == "0_3 2_3 2_3 ");
  CHECK(enc("1") == "2_3 ");
  CHECK(enc("0") == "0_3 ");
}
