#include <doctest.h>

#include <cmath>
#include <random>

#include "fstdna/dp.hpp"
#include "fstdna/errormodel.hpp"
#include "fstdna/repeatcode.hpp"

using namespace fstdna;

namespace {

std::vector<int> seq(const std::string& s) {
  std::vector<int> v;
  for (char c : s) v.push_back(nt_index(c));
  return v;
}

ErrorParams clean(int c) {
  ErrorParams e = ErrorParams::defaults(c);
  e.delopen = e.tandup = e.fwddup = e.revdup = 0;
  e.nogap = 1;
  e.transition = e.transversion = 0;
  e.match = 1;
  return e;
}

}  // namespace

TEST_CASE("params json round trip and validation") {
  ErrorParams e = ErrorParams::defaults(2);
  ErrorParams back = ErrorParams::from_json(e.to_json());
  CHECK(back.to_vector() == e.to_vector());
  e.nogap = 0.5;
  CHECK_THROWS_AS(e.validate(), Error);
  CHECK_THROWS_AS(ErrorParams::from_json("{\"delopen\": 0.1}"), Error);
}

TEST_CASE("substitution weights") {
  ErrorParams e = ErrorParams::defaults(1);
  CHECK(substitution_weight(0, 0, e) == e.match);
  CHECK(substitution_weight(0, 2, e) == e.transition);           // A->G
  CHECK(substitution_weight(0, 1, e) == e.transversion * 0.5);   // A->C
  double row = 0;
  for (int y = 0; y < 4; ++y) row += substitution_weight(1, y, e);
  CHECK(row == doctest::Approx(1.0));
}

TEST_CASE("pcont at zero context is nogap plus all duplication mass") {
  ErrorParams e = ErrorParams::defaults(2);
  e.fwddup = 0.002;
  e.revdup = 0.003;
  e.nogap = 1 - e.delopen - e.tandup - e.fwddup - e.revdup;
  CHECK(pcont(0, 0, e) == doctest::Approx(e.nogap + e.tandup + e.fwddup + e.revdup));
  CHECK(pcont(4, 4, e) == doctest::Approx(e.nogap));
}

TEST_CASE("clean channel is the identity") {
  for (int c = 1; c <= 3; ++c) {
    ErrorModelView v(clean(c), c);
    for (std::string s : {"ACGTAC", "TTTTTT", "GATTACA", "CGCGCGCG"}) {
      CHECK(pair_log_likelihood(v, {seq(s), seq(s)}) == doctest::Approx(0.0));
      std::string t = s;
      t[2] = t[2] == 'A' ? 'C' : 'A';
      CHECK(pair_log_likelihood(v, {seq(s), seq(t)}) == -INFINITY);
    }
  }
}

TEST_CASE("reads shorter than twice the context have no path") {
  ErrorModelView v(ErrorParams::defaults(2), 2);
  CHECK(pair_log_likelihood(v, {seq("ACG"), seq("ACG")}) == -INFINITY);
}

TEST_CASE("tandem duplication of three bases needs context three") {
  ErrorParams e = ErrorParams::defaults(3);
  ErrorModelView v3(e, 3, true);
  CHECK(std::isfinite(pair_log_likelihood(v3, {seq("TTACGCA"), seq("TTACGACGCA")})));
  ErrorParams e2 = ErrorParams::defaults(2);
  e2.delopen = 0;
  e2.nogap = 1 - e2.tandup;
  e2.transition = e2.transversion = 0;
  e2.match = 1;
  ErrorModelView v2(e2, 2, true);
  CHECK(pair_log_likelihood(v2, {seq("TTACGCA"), seq("TTACGACGCA")}) == -INFINITY);
}

TEST_CASE("state names and blocks") {
  ErrorModelView v(ErrorParams::defaults(2), 2);
  CHECK(v.state_name(v.initial()) == "S_a");
  CHECK(v.state_name(v.final()) == "S_f");
  EState s{EKind::S, 0, 2, 2, 0, 0};
  CHECK(v.block(s) == 'd');
  CHECK(v.state_name(v.pack(s)) == "S_d(AA,AA)");
  EState back = v.unpack(v.pack(EState{EKind::T, 2, 2, 1, 9, 3}));
  CHECK(back.kind == EKind::T);
  CHECK(back.i == 2);
  CHECK(back.plen == 2);
  CHECK(back.flen == 1);
  CHECK(back.past == 9);
  CHECK(back.future == 3);
}

TEST_CASE("materialized model agrees with the lazy view") {
  ErrorParams e = ErrorParams::defaults(1);
  e.fwddup = e.revdup = 0.005;
  e.nogap -= 0.01;
  Machine m = build_error_model(e, 1);
  ErrorModelView v(e, 1);
  for (auto [x, y] : std::vector<std::pair<std::string, std::string>>{{"ACGT", "ACGT"}, {"ACGT", "AACGT"}, {"ACGT", "AGT"}}) {
    double a = std::log(evaluate<ProbSemiring>(m, seq(x), seq(y)));
    CHECK(a == doctest::Approx(pair_log_likelihood(v, {seq(x), seq(y)})).epsilon(1e-9));
  }
}

TEST_CASE("partial observation wrapper accepts substrings") {
  ErrorParams e = clean(1);
  Machine w = wrap_partial_observation(build_error_model(e, 1));
  CHECK(evaluate<ProbSemiring>(w, seq("ACGTTA"), seq("CGT")) > 0);
  CHECK(evaluate<ProbSemiring>(w, seq("ACGTTA"), seq("GGG")) == 0);
}

TEST_CASE("channel sampling is the identity without errors") {
  ErrorModelView v(clean(2), 2);
  std::mt19937_64 rng(4);
  auto x = seq("ACGTTGCAGT");
  CHECK(sample_channel(v, x, rng) == x);
}

TEST_CASE("baum-welch recovers a deletion rate") {
  ErrorParams truth = ErrorParams::defaults(1);
  truth.delopen = 0.05;
  truth.tandup = 0.0;
  truth.nogap = 0.95;
  ErrorModelView v(truth, 1, true);
  std::mt19937_64 rng(11);
  std::vector<TrainingPair> data;
  for (int i = 0; i < 50; ++i) {
    std::vector<int> x(200);
    for (auto& s : x) s = static_cast<int>(rng() % 4);
    data.push_back({x, sample_channel(v, x, rng)});
  }
  ErrorParams init = ErrorParams::defaults(1);
  FitReport rep;
  ErrorParams fit = baum_welch(data, init, 1, true, 8, &rep);
  CHECK(fit.delopen == doctest::Approx(0.05).epsilon(0.2));
  fit.validate(1e-9);
}
