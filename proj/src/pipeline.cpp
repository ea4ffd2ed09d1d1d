#include "fstdna/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <atomic>
#include <iomanip>
#include <istream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fstdna/mixradix.hpp"
#include "fstdna/repeatcode.hpp"
#include "fstdna/synccode.hpp"

namespace fstdna {

using nlohmann::json;

// ---- machine JSON ----

std::string machine_to_json(const Machine& m) {
  nlohmann::ordered_json j;
  j["inAlphabet"] = m.in_alpha.symbols();
  j["outAlphabet"] = m.out_alpha.symbols();
  auto states = nlohmann::ordered_json::array();
  for (int q = 0; q < m.num_states(); ++q) {
    nlohmann::ordered_json s;
    s["id"] = q;
    if (!m.names[q].empty()) s["name"] = m.names[q];
    states.push_back(s);
  }
  j["states"] = states;
  j["initial"] = m.initial;
  j["final"] = m.final;
  auto trans = nlohmann::ordered_json::array();
  for (const auto& t : m.trans) {
    nlohmann::ordered_json o;
    o["from"] = t.src;
    o["in"] = t.in == kEps ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(m.in_alpha.name(t.in));
    o["out"] = t.out == kEps ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(m.out_alpha.name(t.out));
    if (t.weight != 1.0) o["weight"] = t.weight;
    o["to"] = t.dst;
    trans.push_back(o);
  }
  j["transitions"] = trans;
  return j.dump();
}

Machine machine_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("machine JSON: ") + e.what());
  }
  auto need = [&](const json& o, const char* field, const std::string& where) -> const json& {
    if (!o.is_object() || !o.contains(field)) throw Error("machine JSON: missing field \"" + std::string(field) + "\"" + where);
    return o.at(field);
  };
  Machine m;
  for (const char* side : {"inAlphabet", "outAlphabet"}) {
    const json& a = need(j, side, "");
    if (!a.is_array()) throw Error(std::string("machine JSON: \"") + side + "\" must be an array");
    for (const auto& s : a) {
      if (!s.is_string()) throw Error(std::string("machine JSON: non-string symbol in \"") + side + "\"");
      (side[0] == 'i' ? m.in_alpha : m.out_alpha).add(s.get<std::string>());
    }
  }
  const json& states = need(j, "states", "");
  if (!states.is_array()) throw Error("machine JSON: \"states\" must be an array");
  std::vector<std::string> names(states.size());
  std::vector<char> seen(states.size(), 0);
  for (size_t i = 0; i < states.size(); ++i) {
    std::string where = " in states[" + std::to_string(i) + "]";
    const json& id = need(states[i], "id", where);
    if (!id.is_number_integer() || id.get<long>() < 0 || id.get<size_t>() >= states.size())
      throw Error("machine JSON: bad \"id\"" + where);
    size_t q = id.get<size_t>();
    if (seen[q]) throw Error("machine JSON: duplicate state id" + where);
    seen[q] = 1;
    if (states[i].contains("name")) {
      if (!states[i]["name"].is_string()) throw Error("machine JSON: \"name\" must be a string" + where);
      names[q] = states[i]["name"].get<std::string>();
    }
  }
  for (auto& n : names) m.add_state(n);
  auto state_field = [&](const json& o, const char* f, const std::string& where) {
    const json& v = need(o, f, where);
    if (!v.is_number_integer() || v.get<long>() < 0 || v.get<long>() >= m.num_states())
      throw Error("machine JSON: \"" + std::string(f) + "\" is not a valid state id" + where);
    return v.get<int>();
  };
  m.initial = state_field(j, "initial", "");
  m.final = state_field(j, "final", "");
  const json& trans = need(j, "transitions", "");
  if (!trans.is_array()) throw Error("machine JSON: \"transitions\" must be an array");
  for (size_t i = 0; i < trans.size(); ++i) {
    std::string where = " in transitions[" + std::to_string(i) + "]";
    const json& t = trans[i];
    int from = state_field(t, "from", where), to = state_field(t, "to", where);
    auto label = [&](const char* f, const Alphabet& a) {
      if (!t.contains(f) || t[f].is_null()) return kEps;
      if (!t[f].is_string()) throw Error("machine JSON: \"" + std::string(f) + "\" must be a string or null" + where);
      int s = a.find(t[f].get<std::string>());
      if (s < 0) throw Error("machine JSON: symbol \"" + t[f].get<std::string>() + "\" not in alphabet" + where);
      return s;
    };
    int in = label("in", m.in_alpha), out = label("out", m.out_alpha);
    double w = 1.0;
    if (t.contains("weight")) {
      if (!t["weight"].is_number()) throw Error("machine JSON: \"weight\" must be a number" + where);
      w = t["weight"].get<double>();
    }
    m.add(from, in, out, w, to);
  }
  return m;
}

Machine load_machine(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return machine_from_json(ss.str());
}

void save_machine(const Machine& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << machine_to_json(m) << "\n";
}

// ---- channel ----

std::string mutate(const std::string& dna, const ChannelSpec& ch, MutateStats* stats) {
  MutateStats local;
  MutateStats& st = stats ? *stats : local;
  std::mt19937_64 rng(ch.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double p_ts = ch.ts_tv_ratio / (ch.ts_tv_ratio + 1.0);
  std::string s = dna;
  for (char& c : s) {
    int x = nt_index(c);
    if (ch.sub_rate > 0 && u(rng) < ch.sub_rate) {
      ++st.subs;
      int y;
      if (u(rng) < p_ts) {
        y = x ^ 2;
        ++st.transitions;
      } else {
        // the two transversion partners of x are (x^1) and (x^3)
        y = (rng() & 1) ? (x ^ 1) : (x ^ 3);
      }
      c = kNucleotides[y];
    }
  }
  if (ch.dup_rate > 0) {
    std::string t;
    t.reserve(s.size() * 2);
    long guard = 0;  // copies may not reach back before the end of the previous copy's source
    for (size_t i = 0; i < s.size(); ++i) {
      t.push_back(s[i]);
      if (u(rng) < ch.dup_rate) {
        long len = 1 + static_cast<long>(rng() % static_cast<uint64_t>(ch.dup_maxlen));
        long start = static_cast<long>(i) + 1 - len;
        if (start < guard) {
          ++st.dup_skipped;
          continue;
        }
        t.append(s, static_cast<size_t>(start), static_cast<size_t>(len));
        guard = static_cast<long>(i) + 1;
        ++st.dups;
        st.dup_bases += len;
      }
    }
    s.swap(t);
  }
  if (ch.del_rate > 0) {
    std::string t;
    t.reserve(s.size());
    for (size_t i = 0; i < s.size();) {
      if (u(rng) < ch.del_rate) {
        size_t len = 1 + static_cast<size_t>(rng() % static_cast<uint64_t>(ch.del_maxlen));
        len = std::min(len, s.size() - i);
        ++st.dels;
        st.del_bases += static_cast<long>(len);
        i += len;
      } else {
        t.push_back(s[i++]);
      }
    }
    s.swap(t);
  }
  return s;
}

size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<size_t> row(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    size_t diag = row[0];
    row[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] != b[j - 1])});
      diag = up;
    }
  }
  return row[b.size()];
}

// ---- stacks ----

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double parse_ratio(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return std::stod(s);
  return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

bool has_radix_digits(const Machine& m) { return m.out_alpha.find(digit_symbol(0, 2)) >= 0; }

}  // namespace

Stack build_stack(const std::vector<std::string>& layers) {
  if (layers.empty()) throw Error("stack: no layers");
  Stack st;
  st.layers = layers;
  // Codes are generated first so watermark layers know whether a control word exists.
  std::vector<Machine> parts(layers.size());
  std::vector<std::string> kinds(layers.size());
  for (size_t i = 0; i < layers.size(); ++i) kinds[i] = split(layers[i], ':')[0];
  for (size_t i = 0; i < layers.size(); ++i) {
    auto f = split(layers[i], ':');
    const std::string& k = f[0];
    try {
      if (k == "hamming31" || k == "hamming74") {
        parts[i] = hamming_machine(k == "hamming31" ? "3,1" : "7,4");
      } else if (k == "mixradar") {
        RadixParams p;
        p.N = f.size() > 1 ? std::stoi(f[1]) : 2;
        p.nu = f.size() > 2 ? std::stod(f[2]) : 0.01;
        parts[i] = generate_mixradix(p);
      } else if (k == "dnastore") {
        CodeParams p;
        p.kmer = f.size() > 1 ? std::stoi(f[1]) : 4;
        p.controls = f.size() > 2 ? std::stoi(f[2]) : 0;
        std::string roles = f.size() > 3 ? f[3] : "";
        p.start_word = roles == "start" || roles == "startend";
        p.end_word = roles == "end" || roles == "startend";
        bool radix = i > 0 && has_radix_digits(parts[i - 1]);
        Code c = generate_code(p, radix ? InputMode::MixedRadix : InputMode::Binary);
        parts[i] = c.machine;
        st.kmer = p.kmer;
        st.control_words = c.words;
        if (p.end_word) st.end_symbol = control_symbol(static_cast<int>(c.words.size()) - 1);
      } else if (k == "watermark") {
        WatermarkSpec w;
        w.period = f.size() > 1 ? std::stoi(f[1]) : 64;
        w.interleave_ratio = f.size() > 2 ? parse_ratio(f[2]) : 0;
        w.seed = f.size() > 3 ? std::stoull(f[3]) : 1;
        for (size_t j = i + 1; j < layers.size(); ++j) {
          auto g = split(layers[j], ':');
          if (g[0] == "dnastore" && g.size() > 2 && std::stoi(g[2]) > 0) {
            std::string roles = g.size() > 3 ? g[3] : "";
            // the first free word serves as the cycle marker
            int idx = (roles == "start" || roles == "startend") ? 1 : 0;
            int n = std::stoi(g[2]);
            if (idx < n - ((roles == "end" || roles == "startend") ? 1 : 0)) w.control_symbol = control_symbol(idx);
          }
        }
        parts[i] = w.interleave_ratio > 0 ? interleave_watermark_machine(w) : watermark_radix_machine(w);
      } else if (k == "marker") {
        parts[i] = marker_machine(f.size() > 1 ? std::stoi(f[1]) : 64, "c1");
      } else if (k == "file") {
        if (f.size() < 2) throw Error("file layer needs a path");
        parts[i] = load_machine(layers[i].substr(5));
      } else {
        throw Error("unknown layer kind");
      }
    } catch (const std::invalid_argument&) {
      throw Error("stack: bad number in layer \"" + layers[i] + "\"");
    } catch (const Error& e) {
      throw Error("stack: layer \"" + layers[i] + "\": " + e.what());
    }
  }
  Machine m = parts[0];
  for (size_t i = 1; i < parts.size(); ++i) m = compose(m, parts[i]);
  st.machine = prune(m);
  return st;
}

std::string encode_bits(const Stack& s, const std::string& bits) {
  const Machine& m = s.machine;
  std::vector<int> x;
  x.reserve(bits.size() + 8);
  for (char c : bits) {
    int sym = m.in_alpha.find(std::string(1, c));
    if (sym < 0) throw Error(std::string("encode: symbol '") + c + "' not accepted by the stack");
    x.push_back(sym);
  }
  int end = s.end_symbol.empty() ? -1 : m.in_alpha.find(s.end_symbol);
  int dollar = m.in_alpha.find("$"), zero = m.in_alpha.find("0");
  Encoder enc(m);
  // Try the message as is, then closed by '$', then zero-padded.
  std::vector<std::vector<int>> tails{{}};
  if (dollar >= 0) tails.push_back({dollar});
  for (int n = 1; n <= 8 && zero >= 0; ++n) tails.push_back(std::vector<int>(n, zero));
  std::string last_error = "unencodable input";
  for (const auto& tail : tails) {
    std::vector<int> y = x;
    y.insert(y.end(), tail.begin(), tail.end());
    if (end >= 0) y.push_back(end);
    try {
      auto out = enc.encode(y);
      std::string dna;
      dna.reserve(out.size());
      for (int o : out) dna += m.out_alpha.name(o);
      return dna;
    } catch (const Error& e) {
      last_error = e.what();
      if (last_error != "unencodable input") break;
    }
  }
  throw Error("encode: " + last_error);
}

ErrorParams params_for_channel(const ChannelSpec& ch, int context) {
  ErrorParams e;
  const double floor = 1e-3;
  double sub = std::max(ch.sub_rate, floor);
  double r = ch.ts_tv_ratio;
  e.transition = sub * r / (r + 1);
  e.transversion = sub / (r + 1);
  e.match = 1 - sub;
  e.delopen = std::min(std::max(ch.del_rate, floor), 0.45);
  e.delend = ch.del_maxlen <= 1 ? 1.0 : 2.0 / (ch.del_maxlen + 1);
  e.delext = 1 - e.delend;
  e.tandup = std::min(std::max(ch.dup_rate, floor), 0.45);
  e.fwddup = e.revdup = 0;
  e.nogap = 1 - e.delopen - e.tandup;
  e.len_dist.assign(2 * context, 0.0);
  int L = std::max(1, std::min(ch.dup_maxlen, 2 * context));
  for (int i = 0; i < L; ++i) e.len_dist[i] = 1.0 / L;
  return e;
}

size_t default_beam(int context) { return context <= 2 ? 256 : context == 3 ? 512 : 1024; }

DecodeOutcome decode_dna(const Stack& s, const std::string& dna, const DecoderConfig& cfg, size_t expected_bits) {
  DecodeOutcome res;
  const int c = cfg.context > 0 ? cfg.context : std::max(1, s.kmer / 2);
  if (static_cast<int>(dna.size()) < 2 * c) {
    res.error = "read shorter than " + std::to_string(2 * c) + " nt";
    return res;
  }
  std::vector<int> y;
  y.reserve(dna.size());
  for (char ch : dna) y.push_back(nt_index(ch));
  ErrorParams p = cfg.params;
  if (p.len_dist.empty()) p.len_dist = ErrorParams::defaults(c).len_dist;
  ErrorModelView ev(p, c, cfg.tandem_only);
  WaitingView wv(ev);
  MachineView mv(s.machine);
  ComposeView cv(mv, wv);
  DecodeOptions opt;
  opt.beam = cfg.beam ? cfg.beam : default_beam(c);
  opt.delta = cfg.delta;
  DecodeResult r = viterbi(cv, y, opt);
  if (!r.ok) {
    res.error = "undecodable";
    return res;
  }
  res.ok = true;
  res.log_weight = r.log_weight;
  for (int sym : r.input) {
    const std::string& n = s.machine.in_alpha.name(sym);
    if (n == "0" || n == "1") res.bits += n;
  }
  if (expected_bits && res.bits.size() > expected_bits) res.bits.resize(expected_bits);
  return res;
}

void write_ldpc_blocks(std::ostream& out, const std::string& bits, size_t block) {
  if (block == 0) throw Error("ldpc: block length must be positive");
  for (size_t i = 0; i < bits.size(); i += block) {
    std::string b = bits.substr(i, block);
    b.resize(block, '0');
    out << b << "\n";
  }
}

std::string read_ldpc_blocks(std::istream& in) {
  std::string line, bits;
  while (std::getline(in, line))
    for (char c : line)
      if (c == '0' || c == '1') bits += c;
  return bits;
}

// ---- experiments ----

std::string random_bits(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::string s(n, '0');
  for (size_t i = 0; i < n; ++i) s[i] = (rng() >> 63) ? '1' : '0';
  return s;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  double pos = q * (v.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(pos));
  size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("experiment config: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c.name = j.value("name", "");
    if (!j.contains("stack")) throw Error("experiment config: missing \"stack\"");
    c.stack = j.at("stack").get<std::vector<std::string>>();
    c.bits = j.value("bits", size_t{2048});
    c.replicates = j.value("replicates", 20);
    c.threads = j.value("threads", 0);
    c.seed = j.value("seed", uint64_t{1});
    if (j.contains("channel")) {
      const json& ch = j["channel"];
      c.channel.sub_rate = ch.value("sub", 0.0);
      c.channel.ts_tv_ratio = ch.value("tstv", 10.0);
      c.channel.del_rate = ch.value("del", 0.0);
      c.channel.del_maxlen = ch.value("delmax", 4);
      c.channel.dup_rate = ch.value("dup", 0.0);
      c.channel.dup_maxlen = ch.value("dupmax", 4);
    }
    if (j.contains("grid")) {
      c.grid_param = j["grid"].at("param").get<std::string>();
      c.grid = j["grid"].at("values").get<std::vector<double>>();
    }
    if (j.contains("decoder")) {
      const json& d = j["decoder"];
      c.decoder.beam = d.value("beam", size_t{0});
      c.decoder.delta = d.value("delta", 20.0);
      c.decoder_context = d.value("context", 0);
      c.decoder.tandem_only = d.value("tandemOnly", true);
      if (d.contains("params")) {
        c.decoder.params = ErrorParams::from_json(d["params"].dump());
        c.match_decoder = false;
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("experiment config: ") + e.what());
  }
  if (c.grid.empty()) c.grid = {0.0};
  if (!c.grid_param.empty() && c.grid_param != "sub" && c.grid_param != "del" && c.grid_param != "dup")
    throw Error("experiment config: grid param must be sub, del or dup");
  return c;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  Stack st = build_stack(cfg.stack);
  const int ctx = cfg.decoder_context > 0 ? cfg.decoder_context : std::max(1, st.kmer / 2);
  const size_t G = cfg.grid.size(), R = static_cast<size_t>(std::max(0, cfg.replicates));
  std::vector<ChannelSpec> channels(G);
  std::vector<DecoderConfig> decoders(G);
  for (size_t g = 0; g < G; ++g) {
    ChannelSpec ch = cfg.channel;
    double v = cfg.grid[g];
    if (cfg.grid_param == "sub") ch.sub_rate = v;
    if (cfg.grid_param == "del") ch.del_rate = v;
    if (cfg.grid_param == "dup") ch.dup_rate = v;
    channels[g] = ch;
    decoders[g] = cfg.decoder;
    decoders[g].context = ctx;
    if (cfg.match_decoder) decoders[g].params = params_for_channel(ch, ctx);
  }

  ExperimentResult res;
  res.rows.resize(G * R);
  auto job = [&](size_t idx) {
    size_t g = idx / R;
    int r = static_cast<int>(idx % R);
    // Messages depend only on (seed, replicate), so settings share messages.
    uint64_t ms = cfg.seed * 1000003ULL + static_cast<uint64_t>(r) * 7919ULL + 17;
    std::string bits = random_bits(cfg.bits, ms);
    ReplicateResult& rr = res.rows[idx];
    rr.setting = cfg.grid[g];
    rr.replicate = r;
    try {
      std::string dna = encode_bits(st, bits);
      ChannelSpec ch = channels[g];
      ch.seed = ms ^ (0x5851F42D4C957F2DULL + g);
      DecodeOutcome out = decode_dna(st, mutate(dna, ch), decoders[g], bits.size());
      if (!out.ok) {
        rr.failed = true;
        rr.distance = 1.0;
      } else {
        rr.distance = bits.empty() ? static_cast<double>(out.bits.size())
                                   : static_cast<double>(levenshtein(out.bits, bits)) / static_cast<double>(bits.size());
      }
    } catch (const Error&) {
      rr.failed = true;
      rr.distance = 1.0;
    }
  };
  size_t workers = cfg.threads > 0 ? static_cast<size_t>(cfg.threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, G * R);
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next.fetch_add(1)) < G * R;) job(i);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (size_t g = 0; g < G; ++g) {
    SettingSummary sum;
    sum.setting = cfg.grid[g];
    std::vector<double> dists;
    for (size_t r = 0; r < R; ++r) {
      const auto& row = res.rows[g * R + r];
      dists.push_back(row.distance);
      if (row.failed) ++sum.failures;
    }
    sum.median = quantile(dists, 0.5);
    sum.q1 = quantile(dists, 0.25);
    sum.q3 = quantile(dists, 0.75);
    res.summary.push_back(sum);
  }
  return res;
}

std::string experiment_csv(const ExperimentConfig& cfg, const ExperimentResult& r) {
  std::ostringstream o;
  o << std::setprecision(8);
  const std::string param = cfg.grid_param.empty() ? "setting" : cfg.grid_param;
  o << "kind," << param << ",replicate,distance,failed,median,q1,q3,failures\n";
  for (const auto& row : r.rows)
    o << "replicate," << row.setting << "," << row.replicate << "," << row.distance << "," << (row.failed ? 1 : 0)
      << ",,,,\n";
  for (const auto& s : r.summary)
    o << "aggregate," << s.setting << ",,,," << s.median << "," << s.q1 << "," << s.q3 << "," << s.failures << "\n";
  return o.str();
}

}  // namespace fstdna
