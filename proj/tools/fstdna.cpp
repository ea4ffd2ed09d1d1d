#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "fstdna/errormodel.hpp"
#include "fstdna/mixradix.hpp"
#include "fstdna/pipeline.hpp"
#include "fstdna/repeatcode.hpp"
#include "fstdna/synccode.hpp"

using namespace fstdna;

namespace {

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

struct Record {
  std::string name, seq;
};

// FASTA if the text starts with '>', otherwise one sequence per non-empty line.
std::vector<Record> read_sequences(const std::string& text) {
  std::vector<Record> recs;
  std::istringstream in(text);
  std::string line;
  bool fasta = false;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) {
      fasta = c == '>';
      break;
    }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (fasta && !line.empty() && line[0] == '>') {
      recs.push_back({line.substr(1), ""});
      continue;
    }
    std::string s;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) s += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (fasta) {
      if (recs.empty()) throw Error("FASTA: sequence before first header");
      recs.back().seq += s;
    } else if (!s.empty()) {
      recs.push_back({"read" + std::to_string(recs.size() + 1), s});
    }
  }
  return recs;
}

std::string write_sequences(const std::vector<Record>& recs, bool fasta) {
  std::string out;
  for (const auto& r : recs) {
    if (fasta) out += ">" + r.name + "\n";
    out += r.seq + "\n";
  }
  return out;
}

std::string bits_from(const std::string& text, const std::string& format) {
  std::string bits;
  if (format == "bytes") {
    for (unsigned char c : text)
      for (int b = 7; b >= 0; --b) bits += ((c >> b) & 1) ? '1' : '0';
    return bits;
  }
  for (char c : text) {
    if (c == '0' || c == '1') bits += c;
    else if (!std::isspace(static_cast<unsigned char>(c))) throw Error(std::string("bits: unexpected character '") + c + "'");
  }
  return bits;
}

std::string bits_to(const std::string& bits, const std::string& format) {
  if (format != "bytes") return bits + "\n";
  std::string out;
  for (size_t i = 0; i + 8 <= bits.size(); i += 8) {
    unsigned char c = 0;
    for (int b = 0; b < 8; ++b) c = static_cast<unsigned char>(c << 1 | (bits[i + b] == '1'));
    out += static_cast<char>(c);
  }
  return out;
}

Stack stack_from(const std::vector<std::string>& layers, const std::string& machine_path, int kmer) {
  if (!machine_path.empty()) {
    Stack st;
    st.machine = load_machine(machine_path);
    st.layers = {"file:" + machine_path};
    st.kmer = kmer;
    return st;
  }
  if (layers.empty()) throw Error("give --stack layers or --machine");
  return build_stack(layers);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-state transducer tools for DNA storage codes"};
  app.require_subcommand(1);
  app.fallthrough();
  uint64_t seed = 1;
  app.add_option("--seed", seed, "Random seed")->capture_default_str();

  // gen-code
  auto* gc = app.add_subcommand("gen-code", "Repeat-free code machine");
  CodeParams cp;
  std::string gc_invrep = "inf", gc_mode = "radix", gc_out;
  gc->add_option("--kmer", cp.kmer, "Codeword length (even)")->capture_default_str();
  gc->add_option("--controls", cp.controls, "Number of control words")->capture_default_str();
  gc->add_option("--invrep", gc_invrep, "Minimum excluded inverted-repeat length, or inf")->capture_default_str();
  gc->add_flag("--allow-tandem", cp.allow_tandem, "Keep tandem repeats");
  gc->add_flag("--start-word", cp.start_word, "First control word starts every message");
  gc->add_flag("--end-word", cp.end_word, "Last control word ends every message");
  gc->add_option("--search-cap", cp.search_cap, "Path-length cap for control reachability (0: 2*kmer)");
  gc->add_option("--words", cp.words, "Fixed control words");
  gc->add_option("--input", gc_mode, "Input alphabet")->check(CLI::IsMember({"radix", "binary"}))->capture_default_str();
  gc->add_option("-o,--out", gc_out, "Output machine JSON (default stdout)");

  // gen-mixradar
  auto* gm = app.add_subcommand("gen-mixradar", "Binary to mixed-radix transducer");
  RadixParams rp;
  bool gm_float = false;
  std::string gm_out;
  gm->add_option("--bits", rp.N, "Input block length N")->capture_default_str();
  gm->add_option("--nu", rp.nu, "Tolerance")->capture_default_str();
  gm->add_flag("--float", gm_float, "Use double-precision interval arithmetic");
  gm->add_option("-o,--out", gm_out, "Output machine JSON");

  // gen-error
  auto* ge = app.add_subcommand("gen-error", "Error-model transducer");
  int ge_c = 2;
  bool ge_tandem = false, ge_wrap = false;
  std::string ge_params, ge_out;
  ge->add_option("--context", ge_c, "Context length c")->capture_default_str();
  ge->add_option("--params", ge_params, "ErrorParams JSON");
  ge->add_flag("--tandem-only", ge_tandem, "Only tandem duplications");
  ge->add_flag("--partial", ge_wrap, "Wrap for partial observation of the read");
  ge->add_option("-o,--out", ge_out, "Output machine JSON");

  // gen-sync
  auto* gs = app.add_subcommand("gen-sync", "Hamming, marker and watermark machines");
  std::string gs_kind, gs_ratio = "0", gs_control, gs_out;
  int gs_period = 64;
  gs->add_option("--kind", gs_kind, "Machine kind")
      ->required()
      ->check(CLI::IsMember({"hamming74", "hamming31", "marker", "watermark", "interleave"}));
  gs->add_option("--period", gs_period, "Signal bits per cycle")->capture_default_str();
  gs->add_option("--ratio", gs_ratio, "Pilot digits per signal bit, e.g. 1/16")->capture_default_str();
  gs->add_option("--control", gs_control, "Control symbol closing each cycle (marker default c1)");
  gs->add_option("-o,--out", gs_out, "Output machine JSON");

  // compose
  auto* co = app.add_subcommand("compose", "Compose machines left to right");
  std::vector<std::string> co_in;
  std::string co_out;
  co->add_option("machines", co_in, "Machine JSON files")->required()->expected(1, -1);
  co->add_option("-o,--out", co_out, "Output machine JSON");

  // encode
  auto* en = app.add_subcommand("encode", "Encode bits to DNA");
  std::vector<std::string> en_stack;
  std::string en_machine, en_in = "-", en_out, en_format = "bits";
  bool en_fasta = false;
  en->add_option("--stack", en_stack, "Layers, e.g. mixradar:2 dnastore:4");
  en->add_option("--machine", en_machine, "Composed machine JSON instead of --stack");
  en->add_option("-i,--in", en_in, "Input bits (- for stdin)")->capture_default_str();
  en->add_option("--format", en_format, "Input format")->check(CLI::IsMember({"bits", "bytes"}))->capture_default_str();
  en->add_flag("--fasta", en_fasta, "Write FASTA");
  en->add_option("-o,--out", en_out, "Output DNA");

  // decode
  auto* de = app.add_subcommand("decode", "Decode DNA reads to bits");
  std::vector<std::string> de_stack;
  std::string de_machine, de_in = "-", de_out, de_format = "bits", de_params, de_ldpc;
  int de_c = 0;
  size_t de_beam = 0, de_expect = 0, de_block = 2048;
  double de_delta = 20;
  bool de_all_dups = false;
  de->add_option("--stack", de_stack, "Layers, e.g. mixradar:2 dnastore:4");
  de->add_option("--machine", de_machine, "Composed machine JSON instead of --stack");
  de->add_option("-i,--in", de_in, "DNA reads, plain or FASTA")->capture_default_str();
  de->add_option("--context", de_c, "Error-model context (default kmer/2)");
  de->add_option("--params", de_params, "ErrorParams JSON (default: matched to a clean channel)");
  de->add_flag("--all-dups", de_all_dups, "Also model forward and reverse-complement duplications");
  de->add_option("--beam", de_beam, "Beam width (0: by context)");
  de->add_option("--delta", de_delta, "Cost window in nats")->capture_default_str();
  de->add_option("--expected-bits", de_expect, "Truncate output to this many bits");
  de->add_option("--format", de_format, "Output format")->check(CLI::IsMember({"bits", "bytes"}))->capture_default_str();
  de->add_option("--ldpc-out", de_ldpc, "Also write newline-delimited bit blocks here");
  de->add_option("--ldpc-block", de_block, "Bits per LDPC block")->capture_default_str();
  de->add_option("-o,--out", de_out, "Output bits");

  // mutate
  auto* mu = app.add_subcommand("mutate", "Corrupt DNA with substitutions, duplications and deletions");
  ChannelSpec ch;
  std::string mu_in = "-", mu_out;
  bool mu_fasta = false;
  mu->add_option("-i,--in", mu_in, "DNA, plain or FASTA")->capture_default_str();
  mu->add_option("--sub", ch.sub_rate, "Substitution rate")->capture_default_str();
  mu->add_option("--tstv", ch.ts_tv_ratio, "Transition/transversion ratio")->capture_default_str();
  mu->add_option("--del", ch.del_rate, "Deletion initiation rate")->capture_default_str();
  mu->add_option("--delmax", ch.del_maxlen, "Max deletion length")->capture_default_str();
  mu->add_option("--dup", ch.dup_rate, "Tandem duplication initiation rate")->capture_default_str();
  mu->add_option("--dupmax", ch.dup_maxlen, "Max duplication length")->capture_default_str();
  mu->add_flag("--fasta", mu_fasta, "Write FASTA");
  mu->add_option("-o,--out", mu_out, "Output DNA");

  // eval
  auto* ev = app.add_subcommand("eval", "Normalized edit distance between two bit files");
  std::string ev_a, ev_b, ev_format = "bits";
  ev->add_option("original", ev_a, "Original bits")->required();
  ev->add_option("decoded", ev_b, "Decoded bits")->required();
  ev->add_option("--format", ev_format, "Input format")->check(CLI::IsMember({"bits", "bytes"}))->capture_default_str();

  // experiment
  auto* ex = app.add_subcommand("experiment", "Encode, corrupt, decode and score over a channel grid");
  std::string ex_cfg, ex_out;
  int ex_threads = -1;
  ex->add_option("config", ex_cfg, "Experiment JSON")->required();
  ex->add_option("--threads", ex_threads, "Worker threads (0: hardware)");
  ex->add_option("-o,--out", ex_out, "Output CSV");

  // fit
  auto* fi = app.add_subcommand("fit", "Baum-Welch fit of error-model parameters");
  int fi_c = 2, fi_iters = 10;
  std::string fi_train, fi_init, fi_out;
  bool fi_tandem = false;
  fi->add_option("--context", fi_c, "Context length c")->capture_default_str();
  fi->add_option("--train", fi_train, "FASTA of (original, observed) record pairs")->required();
  fi->add_option("--iters", fi_iters, "EM iterations")->capture_default_str();
  fi->add_option("--init", fi_init, "Initial ErrorParams JSON");
  fi->add_flag("--tandem-only", fi_tandem, "Only tandem duplications");
  fi->add_option("-o,--out", fi_out, "Output ErrorParams JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gc) {
      if (gc_invrep == "inf") cp.invrep = kNoInvRep;
      else cp.invrep = std::stoi(gc_invrep);
      Code code = generate_code(cp, gc_mode == "binary" ? InputMode::Binary : InputMode::MixedRadix);
      spill(gc_out, machine_to_json(code.machine) + "\n");
      std::cerr << "states " << code.machine.num_states() << " transitions " << code.machine.num_transitions();
      for (size_t i = 0; i < code.words.size(); ++i) std::cerr << " " << control_symbol(static_cast<int>(i)) << "=" << code.words[i];
      std::cerr << "\n";
    } else if (*gm) {
      rp.arith = gm_float ? Arithmetic::Float64 : Arithmetic::Exact;
      Machine m = generate_mixradix(rp);
      spill(gm_out, machine_to_json(m) + "\n");
      std::cerr << "states " << m.num_states() << " transitions " << m.num_transitions();
      for (int R = 2; R <= 4; ++R) std::cerr << " r" << R << "=" << mean_symbols_per_bit(m, rp.N, R);
      std::cerr << "\n";
    } else if (*ge) {
      ErrorParams p = ge_params.empty() ? ErrorParams::defaults(ge_c) : ErrorParams::from_json(slurp(ge_params));
      Machine m = build_error_model(p, ge_c, ge_tandem);
      if (ge_wrap) m = wrap_partial_observation(m);
      spill(ge_out, machine_to_json(m) + "\n");
      std::cerr << "states " << m.num_states() << " transitions " << m.num_transitions() << "\n";
    } else if (*gs) {
      Machine m;
      if (gs_kind == "hamming74") m = hamming_machine("7,4");
      else if (gs_kind == "hamming31") m = hamming_machine("3,1");
      else if (gs_kind == "marker") m = marker_machine(gs_period, gs_control.empty() ? "c1" : gs_control);
      else {
        WatermarkSpec w;
        w.period = gs_period;
        w.seed = seed;
        w.control_symbol = gs_control;
        auto slash = gs_ratio.find('/');
        w.interleave_ratio = slash == std::string::npos
                                 ? std::stod(gs_ratio)
                                 : std::stod(gs_ratio.substr(0, slash)) / std::stod(gs_ratio.substr(slash + 1));
        if (gs_kind == "interleave" && w.interleave_ratio == 0) w.interleave_ratio = 1;
        m = gs_kind == "interleave" ? interleave_watermark_machine(w) : watermark_radix_machine(w);
      }
      spill(gs_out, machine_to_json(m) + "\n");
    } else if (*co) {
      Machine m = load_machine(co_in[0]);
      for (size_t i = 1; i < co_in.size(); ++i) m = compose(m, load_machine(co_in[i]));
      m = prune(m);
      spill(co_out, machine_to_json(m) + "\n");
      std::cerr << "states " << m.num_states() << " transitions " << m.num_transitions() << "\n";
    } else if (*en) {
      Stack st = stack_from(en_stack, en_machine, 0);
      std::string bits = bits_from(slurp(en_in), en_format);
      std::string dna = encode_bits(st, bits);
      spill(en_out, write_sequences({{"encoded bits=" + std::to_string(bits.size()), dna}}, en_fasta));
    } else if (*de) {
      Stack st = stack_from(de_stack, de_machine, de_c * 2);
      DecoderConfig dc;
      dc.context = de_c > 0 ? de_c : std::max(1, st.kmer / 2);
      dc.params = de_params.empty() ? params_for_channel(ChannelSpec{}, dc.context) : ErrorParams::from_json(slurp(de_params));
      dc.tandem_only = !de_all_dups;
      dc.beam = de_beam;
      dc.delta = de_delta;
      auto reads = read_sequences(slurp(de_in));
      std::string all;
      int failed = 0;
      for (const auto& r : reads) {
        DecodeOutcome out = decode_dna(st, r.seq, dc, de_expect);
        if (!out.ok) {
          ++failed;
          std::cerr << r.name << ": " << out.error << "\n";
          continue;
        }
        all += out.bits;
      }
      spill(de_out, bits_to(all, de_format));
      if (!de_ldpc.empty()) {
        std::ofstream f(de_ldpc);
        if (!f) throw Error("cannot write " + de_ldpc);
        write_ldpc_blocks(f, all, de_block);
      }
      if (failed) return 2;
    } else if (*mu) {
      ch.seed = seed;
      auto reads = read_sequences(slurp(mu_in));
      MutateStats total;
      for (size_t i = 0; i < reads.size(); ++i) {
        ChannelSpec c = ch;
        c.seed = seed + i;
        MutateStats s;
        reads[i].seq = mutate(reads[i].seq, c, &s);
        total.subs += s.subs, total.dups += s.dups, total.dels += s.dels;
        total.dup_bases += s.dup_bases, total.del_bases += s.del_bases;
      }
      spill(mu_out, write_sequences(reads, mu_fasta));
      nlohmann::ordered_json j;
      j["substitutions"] = total.subs;
      j["duplications"] = total.dups;
      j["duplicatedBases"] = total.dup_bases;
      j["deletions"] = total.dels;
      j["deletedBases"] = total.del_bases;
      std::cerr << j.dump() << "\n";
    } else if (*ev) {
      std::string a = bits_from(slurp(ev_a), ev_format), b = bits_from(slurp(ev_b), ev_format);
      size_t d = levenshtein(a, b);
      nlohmann::ordered_json j;
      j["distance"] = d;
      j["bits"] = a.size();
      j["normalized"] = a.empty() ? static_cast<double>(b.size()) : static_cast<double>(d) / static_cast<double>(a.size());
      std::cout << j.dump() << "\n";
    } else if (*ex) {
      ExperimentConfig cfg = ExperimentConfig::from_json(slurp(ex_cfg));
      if (app.count("--seed")) cfg.seed = seed;
      if (ex_threads >= 0) cfg.threads = ex_threads;
      ExperimentResult r = run_experiment(cfg);
      spill(ex_out, experiment_csv(cfg, r));
    } else if (*fi) {
      auto recs = read_sequences(slurp(fi_train));
      if (recs.size() % 2) throw Error("fit: training FASTA needs an even number of records (original, observed)");
      std::vector<TrainingPair> data;
      for (size_t i = 0; i < recs.size(); i += 2) {
        TrainingPair p;
        for (char c : recs[i].seq) p.input.push_back(nt_index(c));
        for (char c : recs[i + 1].seq) p.output.push_back(nt_index(c));
        data.push_back(std::move(p));
      }
      ErrorParams init = fi_init.empty() ? ErrorParams::defaults(fi_c) : ErrorParams::from_json(slurp(fi_init));
      FitReport rep;
      ErrorParams fit = baum_welch(data, init, fi_c, fi_tandem, fi_iters, &rep);
      spill(fi_out, fit.to_json() + "\n");
      for (size_t i = 0; i < rep.loglik.size(); ++i) std::cerr << "iter " << i << " loglik " << rep.loglik[i] << "\n";
      for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "fstdna: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
