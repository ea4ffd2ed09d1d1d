#include "fstdna/repeatcode.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include "fstdna/dp.hpp"

namespace fstdna {

int nt_index(char c) {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
  }
  throw Error(std::string("invalid nucleotide '") + c + "'");
}

char complement(char c) { return kNucleotides[3 - nt_index(c)]; }

std::string revcomp(std::string_view s) {
  std::string r(s.rbegin(), s.rend());
  for (auto& c : r) c = complement(c);
  return r;
}

Alphabet dna_alphabet() { return Alphabet{"A", "C", "G", "T"}; }

std::string digit_symbol(int digit, int radix) { return std::to_string(digit) + "_" + std::to_string(radix); }
std::string control_symbol(int n) { return "c" + std::to_string(n + 1); }

namespace {

// Repeats ending exactly at the last position of s.
bool repeat_at_end(std::string_view s, int invrep, bool tandem) {
  const int n = static_cast<int>(s.size());
  if (tandem)
    for (int L = 1; 2 * L <= n; ++L)
      if (s.substr(n - 2 * L, L) == s.substr(n - L, L)) return true;
  // s.revcomp(s) with |s| >= 2 always contains one with |s| = 2
  if (n >= 4 && s[n - 1] == complement(s[n - 4]) && s[n - 2] == complement(s[n - 3])) return true;
  if (invrep > 0) {
    for (int t = 2; 2 * invrep + t <= n; ++t) {
      bool hit = true;
      for (int i = 0; i < invrep && hit; ++i) hit = s[n - 1 - i] == complement(s[n - 2 * invrep - t + i]);
      if (hit) return true;
    }
  }
  return false;
}

}  // namespace

bool has_repeat(std::string_view seq, int invrep, bool tandem) {
  for (char c : seq) nt_index(c);
  for (size_t n = 1; n <= seq.size(); ++n)
    if (repeat_at_end(seq.substr(0, n), invrep, tandem)) return true;
  return false;
}

int KmerGraph::find(const std::string& kmer) const {
  for (size_t i = 0; i < v.size(); ++i)
    if ((v[i].kind == Natural || v[i].kind == Control) && v[i].ctx == kmer) return static_cast<int>(i);
  return -1;
}

std::vector<std::vector<int>> KmerGraph::out_edges() const {
  std::vector<std::vector<int>> out(v.size());
  for (size_t i = 0; i < e.size(); ++i) out[e[i].from].push_back(static_cast<int>(i));
  return out;
}

KmerGraph build_pruned_graph(const CodeParams& p) {
  if (p.kmer < 1) throw Error("kmer length must be positive");
  KmerGraph g;
  g.k = p.kmer;
  std::vector<std::string> kmers;
  std::string cur;
  // Depth-first extension; repeat-freedom is inherited by substrings.
  auto rec = [&](auto&& self) -> void {
    if (static_cast<int>(cur.size()) == p.kmer) {
      kmers.push_back(cur);
      return;
    }
    for (int c = 0; c < 4; ++c) {
      cur.push_back(kNucleotides[c]);
      if (!repeat_at_end(cur, p.invrep, !p.allow_tandem)) self(self);
      cur.pop_back();
    }
  };
  rec(rec);
  if (kmers.empty()) throw Error("no code exists for parameters");
  std::unordered_map<std::string, int> idx;
  for (const auto& km : kmers) {
    idx.emplace(km, static_cast<int>(g.v.size()));
    g.v.push_back({km, KmerGraph::Natural, -1, 0});
  }
  for (size_t i = 0; i < g.v.size(); ++i) {
    std::string suffix = g.v[i].ctx.substr(1);
    for (int c = 0; c < 4; ++c) {
      auto it = idx.find(suffix + kNucleotides[c]);
      if (it != idx.end()) g.e.push_back({static_cast<int>(i), it->second, kNucleotides[c], -1, true});
    }
  }
  return g;
}

std::vector<std::vector<int>> prequel_layers(const Reach& r, int D, const std::vector<char>& inA, int maxN) {
  const size_t n = r.pred.size();
  std::vector<std::vector<int>> layers{{D}};
  std::vector<char> mark(n, 0);
  for (int N = 1; N <= maxN; ++N) {
    std::vector<int> cur;
    std::fill(mark.begin(), mark.end(), 0);
    for (int v : layers.back()) {
      if (N > 1 && inA[v]) continue;
      for (int u : r.pred[v])
        if (!mark[u]) mark[u] = 1, cur.push_back(u);
    }
    std::sort(cur.begin(), cur.end());
    layers.push_back(std::move(cur));
  }
  return layers;
}

namespace {

Reach make_reach(const KmerGraph& g, const std::vector<char>& alive) {
  Reach r;
  r.pred.resize(g.v.size());
  r.alive = alive;
  for (char a : alive) r.alive_count += a;
  for (const auto& e : g.e)
    if (e.natural && alive[e.from] && alive[e.to]) r.pred[e.to].push_back(e.from);
  return r;
}

int steps_from_layers(const std::vector<std::vector<int>>& L, int alive_count) {
  for (size_t N = 0; N < L.size(); ++N)
    if (static_cast<int>(L[N].size()) == alive_count) return static_cast<int>(N);
  return -1;
}

int hamming(const std::string& a, const std::string& b) {
  int d = 0;
  for (size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

// Removes reverse complements of W, then repeatedly drops non-W vertices with no
// in- or out-edges among survivors (edges into W are not counted).
std::vector<char> prune_for_words(const KmerGraph& g, const std::vector<char>& isW) {
  const size_t n = g.v.size();
  std::vector<char> alive(n, 1);
  for (size_t i = 0; i < n; ++i)
    if (isW[i]) {
      int r = g.find(revcomp(g.v[i].ctx));
      if (r >= 0 && !isW[r]) alive[r] = 0;
    }
  for (;;) {
    std::vector<int> in(n, 0), out(n, 0);
    for (const auto& e : g.e)
      if (e.natural && alive[e.from] && alive[e.to] && !isW[e.to]) out[e.from]++, in[e.to]++;
    bool changed = false;
    for (size_t i = 0; i < n; ++i)
      if (alive[i] && !isW[i] && (in[i] == 0 || out[i] == 0)) alive[i] = 0, changed = true;
    if (!changed) return alive;
  }
}

bool words_feasible(const KmerGraph& g, const std::vector<int>& T, int cap, bool first_exempt) {
  std::vector<char> isW(g.v.size(), 0);
  for (int w : T) isW[w] = 1;
  auto alive = prune_for_words(g, isW);
  for (int w : T)
    if (!alive[w]) return false;
  Reach r = make_reach(g, alive);
  for (size_t i = first_exempt ? 1 : 0; i < T.size(); ++i) {
    auto L = prequel_layers(r, T[i], isW, cap);
    if (steps_from_layers(L, r.alive_count) < 0) return false;
  }
  return true;
}

}  // namespace

std::vector<int> prequels(const KmerGraph& g, int D, const std::vector<int>& A, int N) {
  std::vector<char> alive(g.v.size(), 1), inA(g.v.size(), 0);
  for (int a : A) inA[a] = 1;
  Reach r = make_reach(g, alive);
  return prequel_layers(r, D, inA, N)[N];
}

int steps_to(const KmerGraph& g, int D, const std::vector<int>& A, int cap) {
  std::vector<char> alive(g.v.size(), 1), inA(g.v.size(), 0);
  for (int a : A) inA[a] = 1;
  Reach r = make_reach(g, alive);
  return steps_from_layers(prequel_layers(r, D, inA, cap), r.alive_count);
}

std::vector<std::string> find_control_words(const KmerGraph& g, int C, int cap, bool first_is_start) {
  if (C < 1) throw Error("find_control_words: C must be at least 1");
  std::vector<int> cand;
  for (size_t i = 0; i < g.v.size(); ++i)
    if (g.v[i].kind == KmerGraph::Natural) cand.push_back(static_cast<int>(i));
  std::sort(cand.begin(), cand.end(), [&](int a, int b) { return g.v[a].ctx > g.v[b].ctx; });
  std::vector<int> W;
  for (int n = 0; n < C; ++n) {
    int best = -1, best_d = -1;
    for (int b : cand) {
      const std::string& bs = g.v[b].ctx;
      bool skip = false;
      int d = 1 << 20;
      std::string brc = revcomp(bs);
      for (int a : W) {
        const std::string& as = g.v[a].ctx;
        if (a == b || brc == as) skip = true;
        std::string arc = revcomp(as);
        d = std::min({d, hamming(as, bs), hamming(as, brc), hamming(arc, bs), hamming(arc, brc)});
      }
      if (skip || (best >= 0 && d <= best_d)) continue;
      std::vector<int> T = W;
      T.push_back(b);
      if (words_feasible(g, T, cap, first_is_start)) best = b, best_d = d;
    }
    if (best < 0) throw Error("control words unavailable at this kmer length");
    W.push_back(best);
  }
  std::vector<std::string> out;
  for (int w : W) out.push_back(g.v[w].ctx);
  return out;
}

KmerGraph attach_controls(const KmerGraph& g0, const std::vector<std::string>& W, const CodeParams& p) {
  const int k = g0.k;
  const int C = static_cast<int>(W.size());
  if ((p.start_word || p.end_word) && C == 0) throw Error("start/end words need at least one control word");
  std::vector<int> wid;
  std::vector<char> isW(g0.v.size(), 0);
  for (const auto& w : W) {
    int i = g0.find(w);
    if (i < 0) throw Error("control word '" + w + "' is not a vertex of the graph");
    wid.push_back(i);
    isW[i] = 1;
  }
  std::vector<char> alive = prune_for_words(g0, isW);
  for (int w : wid)
    if (!alive[w]) throw Error("control word pruned from graph");

  KmerGraph g;
  g.k = k;
  g.controls = W;
  std::vector<int> map(g0.v.size(), -1);
  for (size_t i = 0; i < g0.v.size(); ++i) {
    if (!alive[i]) continue;
    map[i] = static_cast<int>(g.v.size());
    g.v.push_back({g0.v[i].ctx, isW[i] ? KmerGraph::Control : KmerGraph::Natural, -1, 0});
  }
  for (int n = 0; n < C; ++n) g.v[map[wid[n]]].ctrl = n;
  // Natural edges, excluding those into control words.
  for (const auto& e : g0.e)
    if (e.natural && alive[e.from] && alive[e.to] && !isW[e.to])
      g.e.push_back({map[e.from], map[e.to], e.label, -1, true});

  int start_n = p.start_word ? 0 : -1;
  int end_n = p.end_word ? (C > 1 ? 1 : 0) : -1;

  // Reachability over survivors including edges into W, for bridge layers.
  Reach r;
  r.pred.resize(g0.v.size());
  r.alive = alive;
  for (char a : alive) r.alive_count += a;
  std::vector<std::vector<std::pair<int, char>>> succ(g0.v.size());  // ACGT order
  for (const auto& e : g0.e)
    if (e.natural && alive[e.from] && alive[e.to]) {
      r.pred[e.to].push_back(e.from);
      succ[e.from].push_back({e.to, e.label});
    }

  if (p.start_word) {
    g.initial = static_cast<int>(g.v.size());
    g.v.push_back({"", KmerGraph::Init, -1, 0});
    int prev = g.initial;
    const std::string& sw = W[start_n];
    for (int m = 1; m < k; ++m) {
      int id = static_cast<int>(g.v.size());
      g.v.push_back({sw.substr(0, m), KmerGraph::Init, -1, m});
      g.e.push_back({prev, id, sw[m - 1], -1, false});
      prev = id;
    }
    g.e.push_back({prev, map[wid[start_n]], sw[k - 1], -1, false});
    g.start_vertex = map[wid[start_n]];
  } else {
    g.initial = static_cast<int>(g.v.size());
    g.v.push_back({"", KmerGraph::Init, -1, 0});
    for (size_t i = 0; i < g.v.size(); ++i)
      if (g.v[i].kind == KmerGraph::Natural) {
        g.start_vertex = static_cast<int>(i);
        break;
      }
  }

  // The end word becomes the final vertex; with start == end it is a duplicate.
  int end_vertex = -1;
  if (p.end_word) {
    if (end_n == start_n) {
      end_vertex = static_cast<int>(g.v.size());
      g.v.push_back({W[end_n], KmerGraph::Final, end_n, 0});
    } else {
      end_vertex = map[wid[end_n]];
      g.v[end_vertex].kind = KmerGraph::Final;
      // the merged end word keeps no outgoing edges
      g.e.erase(std::remove_if(g.e.begin(), g.e.end(), [&](const KmerGraph::Edge& e) { return e.from == end_vertex; }),
                g.e.end());
    }
    g.final = end_vertex;
    g.end_merged = true;
  } else {
    g.final = static_cast<int>(g.v.size());
    g.v.push_back({"", KmerGraph::Final, -1, 0});
  }

  // Bridge sources: natural vertices and control vertices other than the merged end word.
  std::vector<int> srcs;
  for (size_t i = 0; i < g0.v.size(); ++i)
    if (alive[i] && map[i] != end_vertex) srcs.push_back(static_cast<int>(i));

  for (int n = 0; n < C; ++n) {
    if (n == start_n && n != end_n) continue;  // start-only words are reached by the initial chain
    int D = wid[n];
    auto L = prequel_layers(r, D, isW, 4 * k);
    int st = steps_from_layers(L, r.alive_count);
    if (st < 1) throw Error("control word '" + W[n] + "' unreachable within search cap");
    std::vector<std::vector<char>> inL(L.size(), std::vector<char>(g0.v.size(), 0));
    for (size_t N = 0; N < L.size(); ++N)
      for (int v : L[N]) inL[N][v] = 1;
    int target = (n == end_n) ? end_vertex : map[D];
    auto pick = [&](int u, int layer) -> std::pair<int, char> {
      for (auto [v, lab] : succ[u])
        if (inL[layer][v] && (layer == 0 || !isW[v])) return {v, lab};
      throw Error("bridge construction failed");
    };
    std::map<int, int> layer_ids;  // g0 vertex -> bridge vertex at current layer
    auto bridge_vertex = [&](int layer, int v0, std::map<int, int>& ids) {
      if (layer == 0) return target;
      auto it = ids.find(v0);
      if (it != ids.end()) return it->second;
      int id = static_cast<int>(g.v.size());
      g.v.push_back({g0.v[v0].ctx, KmerGraph::Bridge, n, layer});
      ids.emplace(v0, id);
      return id;
    };
    for (int u : srcs) {
      auto [v, lab] = pick(u, st - 1);
      g.e.push_back({map[u], bridge_vertex(st - 1, v, layer_ids), lab, n, false});
    }
    for (int layer = st - 1; layer >= 1; --layer) {
      std::map<int, int> next_ids;
      for (auto [v0, id] : layer_ids) {
        auto [v, lab] = pick(v0, layer - 1);
        g.e.push_back({id, bridge_vertex(layer - 1, v, next_ids), lab, -1, false});
      }
      layer_ids = std::move(next_ids);
    }
  }
  return g;
}

Machine graph_to_machine(const KmerGraph& g, InputMode mode) {
  Machine m;
  if (mode == InputMode::MixedRadix) {
    for (int r = 2; r <= 4; ++r)
      for (int d = 0; d < r; ++d) m.in_alpha.add(digit_symbol(d, r));
  } else {
    m.in_alpha.add("0");
    m.in_alpha.add("1");
  }
  for (size_t n = 0; n < g.controls.size(); ++n) m.in_alpha.add(control_symbol(static_cast<int>(n)));
  m.out_alpha = dna_alphabet();

  std::vector<int> st(g.v.size());
  for (size_t i = 0; i < g.v.size(); ++i) {
    const auto& v = g.v[i];
    std::string tag;
    switch (v.kind) {
      case KmerGraph::Natural: break;
      case KmerGraph::Control: tag = ".ctl" + std::to_string(v.ctrl + 1); break;
      case KmerGraph::Bridge: tag = ".b" + std::to_string(v.ctrl + 1) + "." + std::to_string(v.layer); break;
      case KmerGraph::Init: tag = ".i" + std::to_string(v.layer); break;
      case KmerGraph::Final: tag = ".final"; break;
    }
    st[i] = m.add_state(v.ctx + tag);
  }
  m.initial = st[g.initial];
  m.final = st[g.final];

  auto out = g.out_edges();
  for (size_t i = 0; i < g.v.size(); ++i) {
    std::vector<int> nat;
    for (int ei : out[i]) {
      const auto& e = g.e[ei];
      if (e.natural) {
        nat.push_back(ei);
      } else {
        int in = e.ctrl >= 0 ? m.in_alpha.at(control_symbol(e.ctrl)) : kEps;
        m.add(st[i], in, nt_index(e.label), 1.0, st[e.to]);
      }
    }
    std::sort(nat.begin(), nat.end(), [&](int a, int b) { return g.e[a].label < g.e[b].label; });
    const int d = static_cast<int>(nat.size());
    const int src = st[i];
    auto emit = [&](int from, const std::string& in, int ei) {
      m.add(from, in.empty() ? kEps : m.in_alpha.at(in), nt_index(g.e[ei].label), 1.0, st[g.e[ei].to]);
    };
    if (d == 1) {
      emit(src, "", nat[0]);
    } else if (d >= 2 && mode == InputMode::MixedRadix) {
      for (int r = 0; r < d; ++r) emit(src, digit_symbol(r, d), nat[r]);
    } else if (d == 2) {
      emit(src, "0", nat[0]);
      emit(src, "1", nat[1]);
    } else if (d == 3) {
      // 00 -> 0, 01 -> 1, 1 -> 2
      int p = m.add_state(m.names[src] + ".p");
      m.add(src, m.in_alpha.at("0"), kEps, 1.0, p);
      emit(src, "1", nat[2]);
      emit(p, "0", nat[0]);
      emit(p, "1", nat[1]);
    } else if (d == 4) {
      int p0 = m.add_state(m.names[src] + ".p0");
      int p1 = m.add_state(m.names[src] + ".p1");
      m.add(src, m.in_alpha.at("0"), kEps, 1.0, p0);
      m.add(src, m.in_alpha.at("1"), kEps, 1.0, p1);
      emit(p0, "0", nat[0]);
      emit(p0, "1", nat[1]);
      emit(p1, "0", nat[2]);
      emit(p1, "1", nat[3]);
    }
    if (d == 0 && static_cast<int>(i) != g.final && g.v[i].kind != KmerGraph::Bridge &&
        g.v[i].kind != KmerGraph::Init)
      throw Error("graph_to_machine: vertex " + g.v[i].ctx + " has no natural successor");
    // Without an end word the encoder may stop at any vertex that carries information.
    if (!g.end_merged && d >= 2 && (g.v[i].kind == KmerGraph::Natural || g.v[i].kind == KmerGraph::Control))
      m.add(src, kEps, kEps, 1.0, m.final);
  }
  if (g.initial >= 0 && g.start_vertex >= 0 && g.v[g.initial].kind == KmerGraph::Init && g.v[g.initial].layer == 0) {
    bool chained = false;
    for (int ei : out[g.initial]) chained = true, (void)ei;
    if (!chained) m.add(m.initial, kEps, kEps, 1.0, st[g.start_vertex]);
  }
  return m;
}

Code generate_code(const CodeParams& p, InputMode mode) {
  if (p.kmer < 1) throw Error("kmer length must be positive");
  if (p.controls < 0) throw Error("controls must be non-negative");
  if (p.cap() < p.kmer) throw Error("search cap must be at least the kmer length");
  Code c;
  KmerGraph g = build_pruned_graph(p);
  if (!p.words.empty()) {
    c.words = p.words;
  } else if (p.controls > 0) {
    c.words = find_control_words(g, p.controls, p.cap(), p.start_word);
  }
  c.graph = attach_controls(g, c.words, p);
  c.machine = graph_to_machine(c.graph, mode);
  return c;
}

std::pair<int, int> core_counts(const Machine& m) {
  int t = 0;
  for (const auto& tr : m.trans) {
    if (tr.in != kEps && m.in_alpha.name(tr.in)[0] == 'c') continue;
    if (tr.src == m.initial) continue;
    if (tr.dst == m.final && tr.out == kEps) continue;
    ++t;
  }
  return {m.num_states(), t};
}

std::string state_context(const std::string& name) {
  size_t n = 0;
  while (n < name.size() && std::string_view("ACGT").find(name[n]) != std::string_view::npos) ++n;
  return name.substr(0, n);
}

Machine delay_transform(const Machine& m, int kmer) {
  if (kmer % 2) throw Error("delay_transform: kmer length must be even");
  const int h = kmer / 2;
  const std::string fin_ctx = state_context(m.names[m.final]);
  if (static_cast<int>(fin_ctx.size()) != kmer) throw Error("delay_transform: final state lacks a fixed end word");
  Adjacency adj(m);
  // The start must be a fixed chain: initial state's context is empty and the
  // chain states carry growing prefixes of the start word.
  std::vector<int> chain{m.initial};
  while (static_cast<int>(chain.size()) <= h) {
    int q = chain.back();
    if (adj.end(q) - adj.begin(q) != 1) throw Error("delay_transform: variable start word");
    const Transition& t = m.trans[adj.order[adj.begin(q)]];
    if (t.in != kEps || t.out == kEps) throw Error("delay_transform: variable start word");
    chain.push_back(t.dst);
  }
  for (size_t i = 0; i < chain.size(); ++i)
    if (static_cast<int>(state_context(m.names[chain[i]]).size()) != static_cast<int>(i))
      throw Error("delay_transform: variable start word");

  std::vector<char> drop(m.num_states(), 0);
  for (int i = 0; i < h; ++i) drop[chain[i]] = 1;
  Machine r;
  r.in_alpha = m.in_alpha;
  r.out_alpha = m.out_alpha;
  std::vector<int> map(m.num_states(), -1);
  for (int s = 0; s < m.num_states(); ++s) {
    if (drop[s]) continue;
    std::string ctx = state_context(m.names[s]);
    std::string rest = m.names[s].substr(ctx.size());
    std::string name;
    if (static_cast<int>(ctx.size()) >= h)
      name = ctx.substr(0, ctx.size() - h) + "/" + ctx.substr(ctx.size() - h) + rest;
    else
      name = m.names[s];
    map[s] = r.add_state(name);
  }
  for (const auto& t : m.trans) {
    if (drop[t.src]) continue;
    int out = t.out;
    if (out != kEps) {
      std::string ctx = state_context(m.names[t.dst]);
      int L = static_cast<int>(ctx.size());
      if (L <= h) throw Error("delay_transform: short context on emitting transition");
      out = nt_index(ctx[L - h - 1]);
    }
    r.add(map[t.src], t.in, out, t.weight, map[t.dst]);
  }
  r.initial = map[chain[h]];
  int cur = map[m.final];
  for (int i = 0; i < h; ++i) {
    int nxt = r.add_state(fin_ctx.substr(kmer - h + i + 1) + ".pad" + std::to_string(i + 1));
    r.add(cur, kEps, nt_index(fin_ctx[kmer - h + i]), 1.0, nxt);
    cur = nxt;
  }
  r.final = cur;
  return r;
}

RateEstimate bases_per_bit(const Machine& m, int trials, int len, uint64_t seed) {
  Encoder enc(m);
  std::mt19937_64 rng(seed);
  int bit0 = m.in_alpha.find("0"), bit1 = m.in_alpha.find("1");
  if (bit0 < 0 || bit1 < 0) throw Error("bases_per_bit: machine does not take bit input");
  // A merged end word needs its control symbol after the payload.
  int suffix = -1;
  const std::string& fname = m.names[m.final];
  if (!state_context(fname).empty()) {
    for (int i = 0; i < m.in_alpha.size(); ++i)
      if (m.in_alpha.name(i)[0] == 'c') {
        for (const auto& t : m.trans)
          if (t.in == i) {
            suffix = -2;
            break;
          }
      }
  }
  std::vector<int> x(len);
  double sum = 0, sum2 = 0;
  std::vector<int> trial_suffixes;
  for (int t = 0; t < trials; ++t) {
    for (auto& b : x) b = (rng() & 1) ? bit1 : bit0;
    double L = -1;
    // Try plain input, then zero padding, then each control symbol as terminator.
    std::vector<int> y = x;
    for (int pad = 0; pad < 4 && L < 0; ++pad) {
      try {
        L = static_cast<double>(enc.encoded_length(y));
        break;
      } catch (const Error&) {
      }
      if (suffix == -2) {
        for (int i = 0; i < m.in_alpha.size() && L < 0; ++i) {
          if (m.in_alpha.name(i)[0] != 'c') continue;
          y.push_back(i);
          try {
            L = static_cast<double>(enc.encoded_length(y));
          } catch (const Error&) {
          }
          y.pop_back();
        }
      }
      if (L < 0) y.push_back(bit0);
    }
    if (L < 0) throw Error("bases_per_bit: input could not be encoded");
    double r = L / len;
    sum += r;
    sum2 += r * r;
  }
  RateEstimate e;
  e.mean = sum / trials;
  double var = trials > 1 ? (sum2 - trials * e.mean * e.mean) / (trials - 1) : 0;
  e.stderr_ = std::sqrt(std::max(0.0, var) / trials);
  return e;
}

}  // namespace fstdna
