#include <doctest.h>

#include <sstream>

#include "fstdna/pipeline.hpp"
#include "fstdna/synccode.hpp"

using namespace fstdna;

TEST_CASE("levenshtein") {
  CHECK(levenshtein("kitten", "sitting") == 3);
  CHECK(levenshtein("", "ACG") == 3);
  CHECK(levenshtein("ACGT", "ACGT") == 0);
  CHECK(levenshtein("ACGT", "AGT") == 1);
}

TEST_CASE("mutate") {
  ChannelSpec none;
  CHECK(mutate("ACGTACGT", none) == "ACGTACGT");
  ChannelSpec ch;
  ch.sub_rate = 0.1;
  ch.del_rate = 0.05;
  ch.dup_rate = 0.05;
  ch.seed = 42;
  std::string x = random_bits(1, 1);
  std::string dna(500, 'A');
  for (size_t i = 0; i < dna.size(); ++i) dna[i] = "ACGT"[(i * 7 + i / 3) % 4];
  MutateStats st;
  std::string a = mutate(dna, ch, &st), b = mutate(dna, ch);
  CHECK(a == b);
  CHECK(a.size() == dna.size() + st.dup_bases - st.del_bases);
  ch.seed = 43;
  CHECK(mutate(dna, ch) != a);
  // substitutions only: every change is a single base
  ChannelSpec sub;
  sub.sub_rate = 1.0;
  sub.ts_tv_ratio = 1e9;
  std::string t = mutate("ACGT", sub);
  CHECK(t == "GTAC");
}

TEST_CASE("machine json") {
  Machine h = hamming_machine("3,1");
  Machine back = machine_from_json(machine_to_json(h));
  CHECK(back.num_states() == h.num_states());
  CHECK(back.num_transitions() == h.num_transitions());
  CHECK(evaluate<ProbSemiring>(back, {1, 0}, {1, 1, 1, 0, 0, 0}) == 1.0);
  try {
    machine_from_json(R"({"inAlphabet": [], "outAlphabet": [], "states": [{"id": 0}], "final": 0, "transitions": []})");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("\"initial\"") != std::string::npos);
  }
  Machine w = machine_from_json(R"({"inAlphabet": ["a"], "outAlphabet": ["b"], "states": [{"id": 0}, {"id": 1}],
    "initial": 0, "final": 1, "transitions": [{"from": 0, "in": "a", "out": null, "to": 1}]})");
  REQUIRE(w.num_transitions() == 1);
  CHECK(w.trans[0].out == kEps);
  CHECK(w.trans[0].weight == 1.0);
}

TEST_CASE("stack parsing") {
  CHECK_THROWS_AS(build_stack({"nonsense"}), Error);
  Stack s = build_stack({"hamming74", "dnastore:4"});
  CHECK(s.kmer == 4);
  CHECK(s.machine.out_alpha.size() == 4);
}

TEST_CASE("noiseless encode and decode") {
  for (auto layers : std::vector<std::vector<std::string>>{{"dnastore:2"}, {"hamming74", "dnastore:4"},
                                                            {"mixradar:2", "dnastore:4:1"}}) {
    Stack s = build_stack(layers);
    std::string bits = random_bits(96, 5);
    std::string dna = encode_bits(s, bits);
    CHECK(dna.find_first_not_of("ACGT") == std::string::npos);
    DecoderConfig cfg;
    cfg.params = params_for_channel(ChannelSpec{}, std::max(1, s.kmer / 2));
    auto out = decode_dna(s, dna, cfg, bits.size());
    REQUIRE(out.ok);
    CHECK(out.bits == bits);
  }
}

TEST_CASE("short reads are rejected") {
  Stack s = build_stack({"dnastore:4"});
  DecoderConfig cfg;
  cfg.params = params_for_channel(ChannelSpec{}, 2);
  CHECK_FALSE(decode_dna(s, "ACG", cfg).ok);
}

TEST_CASE("decoder parameters match the channel") {
  ChannelSpec ch;
  ch.sub_rate = 0.02;
  ch.ts_tv_ratio = 3;
  ch.del_rate = 0.05;
  ch.del_maxlen = 3;
  ch.dup_rate = 0.01;
  ErrorParams e = params_for_channel(ch, 2);
  e.validate(1e-9);
  CHECK(e.match == doctest::Approx(0.98));
  CHECK(e.transition == doctest::Approx(0.015));
  CHECK(e.delopen == doctest::Approx(0.05));
  CHECK(e.delend == doctest::Approx(0.5));
  CHECK(default_beam(2) == 256);
  CHECK(default_beam(4) == 1024);
}

TEST_CASE("ldpc blocks") {
  std::ostringstream out;
  write_ldpc_blocks(out, "10110", 4);
  CHECK(out.str() == "1011\n0000\n");
  std::istringstream in(out.str());
  CHECK(read_ldpc_blocks(in) == "10110000");
  CHECK_THROWS_AS(write_ldpc_blocks(out, "1", 0), Error);
}

TEST_CASE("quantiles and random bits") {
  CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({5}, 0.25) == 5);
  CHECK(quantile({0, 10}, 0.25) == doctest::Approx(2.5));
  CHECK(random_bits(64, 9) == random_bits(64, 9));
  CHECK(random_bits(64, 9) != random_bits(64, 10));
  CHECK(random_bits(64, 9).find_first_not_of("01") == std::string::npos);
}

TEST_CASE("experiment config and csv") {
  auto cfg = ExperimentConfig::from_json(R"({"name": "t", "stack": ["dnastore:2"], "bits": 64, "replicates": 2,
    "seed": 3, "threads": 2, "channel": {"sub": 0.0}, "grid": {"param": "del", "values": [0.0, 0.01]}})");
  CHECK(cfg.bits == 64);
  CHECK(cfg.grid.size() == 2);
  auto r1 = run_experiment(cfg);
  cfg.threads = 1;
  auto r2 = run_experiment(cfg);
  std::string csv = experiment_csv(cfg, r1);
  CHECK(csv == experiment_csv(cfg, r2));
  CHECK(csv.rfind("kind,del,replicate,distance,failed,median,q1,q3,failures", 0) == 0);
  REQUIRE(r1.summary.size() == 2);
  CHECK(r1.summary[0].median == 0.0);
  CHECK_THROWS_AS(ExperimentConfig::from_json("{\"stack\": 3}"), Error);
}
