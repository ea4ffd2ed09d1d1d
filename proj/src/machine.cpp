#include "fstdna/machine.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>

#include "fstdna/view.hpp"

namespace fstdna {

Alphabet::Alphabet(std::initializer_list<std::string> syms) {
  for (const auto& s : syms) add(s);
}

Alphabet::Alphabet(const std::vector<std::string>& syms) {
  for (const auto& s : syms) add(s);
}

int Alphabet::add(const std::string& s) {
  auto it = index_.find(s);
  if (it != index_.end()) return it->second;
  int id = size();
  syms_.push_back(s);
  index_.emplace(s, id);
  return id;
}

int Alphabet::find(const std::string& s) const {
  auto it = index_.find(s);
  return it == index_.end() ? -1 : it->second;
}

int Alphabet::at(const std::string& s) const {
  int i = find(s);
  if (i < 0) throw Error("symbol '" + s + "' not in alphabet");
  return i;
}

int Machine::add_state(std::string name) {
  names.push_back(std::move(name));
  return num_states() - 1;
}

void Machine::add(int src, int in, int out, double w, int dst) { trans.push_back({src, in, out, w, dst}); }

void Machine::add(int src, const std::string& in, const std::string& out, double w, int dst) {
  add(src, in.empty() ? kEps : in_alpha.at(in), out.empty() ? kEps : out_alpha.at(out), w, dst);
}

std::vector<int> Machine::encode_in(const std::vector<std::string>& syms) const {
  std::vector<int> r;
  r.reserve(syms.size());
  for (const auto& s : syms) r.push_back(in_alpha.at(s));
  return r;
}

std::vector<int> Machine::encode_out(const std::vector<std::string>& syms) const {
  std::vector<int> r;
  r.reserve(syms.size());
  for (const auto& s : syms) r.push_back(out_alpha.at(s));
  return r;
}

std::vector<std::string> Machine::decode_in(const std::vector<int>& s) const {
  std::vector<std::string> r;
  for (int i : s) r.push_back(in_alpha.name(i));
  return r;
}

std::vector<std::string> Machine::decode_out(const std::vector<int>& s) const {
  std::vector<std::string> r;
  for (int i : s) r.push_back(out_alpha.name(i));
  return r;
}

void Machine::validate() const {
  int n = num_states();
  if (initial < 0 || initial >= n || final < 0 || final >= n) throw Error("initial/final state out of range");
  for (const auto& t : trans) {
    if (t.src < 0 || t.src >= n || t.dst < 0 || t.dst >= n) throw Error("transition state id out of range");
    if (t.in != kEps && (t.in < 0 || t.in >= in_alpha.size())) throw Error("input label out of range");
    if (t.out != kEps && (t.out < 0 || t.out >= out_alpha.size())) throw Error("output label out of range");
  }
}

Adjacency::Adjacency(const Machine& m) {
  int n = m.num_states();
  offset.assign(n + 1, 0);
  for (const auto& t : m.trans) offset[t.src + 1]++;
  for (int i = 0; i < n; ++i) offset[i + 1] += offset[i];
  order.resize(m.trans.size());
  std::vector<int> fill(offset.begin(), offset.end() - 1);
  for (int i = 0; i < m.num_transitions(); ++i) order[fill[m.trans[i].src]++] = i;
}

bool is_waiting_state(const Machine& m, const Adjacency& adj, int s) {
  for (int k = adj.begin(s); k < adj.end(s); ++k)
    if (m.trans[adj.order[k]].in == kEps) return false;
  return true;
}

bool has_eps_cycle(const Machine& m) {
  Adjacency adj(m);
  int n = m.num_states();
  std::vector<char> color(n, 0);
  std::vector<std::pair<int, int>> stack;
  for (int root = 0; root < n; ++root) {
    if (color[root]) continue;
    stack.push_back({root, adj.begin(root)});
    color[root] = 1;
    while (!stack.empty()) {
      auto& [s, k] = stack.back();
      if (k == adj.end(s)) {
        color[s] = 2;
        stack.pop_back();
        continue;
      }
      const Transition& t = m.trans[adj.order[k++]];
      if (t.in != kEps || t.out != kEps || t.weight == 0) continue;
      if (color[t.dst] == 1) return true;
      if (color[t.dst] == 0) {
        color[t.dst] = 1;
        stack.push_back({t.dst, adj.begin(t.dst)});
      }
    }
  }
  return false;
}

Machine prune(const Machine& m) {
  int n = m.num_states();
  std::vector<std::vector<int>> fwd(n), bwd(n);
  for (const auto& t : m.trans) {
    if (t.weight == 0) continue;
    fwd[t.src].push_back(t.dst);
    bwd[t.dst].push_back(t.src);
  }
  auto sweep = [n](const std::vector<std::vector<int>>& g, int start) {
    std::vector<char> seen(n, 0);
    std::vector<int> q{start};
    seen[start] = 1;
    while (!q.empty()) {
      int s = q.back();
      q.pop_back();
      for (int d : g[s])
        if (!seen[d]) seen[d] = 1, q.push_back(d);
    }
    return seen;
  };
  auto reach = sweep(fwd, m.initial);
  auto coreach = sweep(bwd, m.final);
  std::vector<int> remap(n, -1);
  Machine r;
  r.in_alpha = m.in_alpha;
  r.out_alpha = m.out_alpha;
  for (int s = 0; s < n; ++s)
    if ((reach[s] && coreach[s]) || s == m.initial || s == m.final) remap[s] = r.add_state(m.names[s]);
  for (const auto& t : m.trans) {
    if (t.weight == 0 || remap[t.src] < 0 || remap[t.dst] < 0) continue;
    if (!(reach[t.src] && coreach[t.dst])) continue;
    r.add(remap[t.src], t.in, t.out, t.weight, remap[t.dst]);
  }
  r.initial = remap[m.initial];
  r.final = remap[m.final];
  return r;
}

Machine to_waiting_machine(const Machine& a) {
  Adjacency adj(a);
  Machine r;
  r.in_alpha = a.in_alpha;
  r.out_alpha = a.out_alpha;
  r.names = a.names;
  r.initial = a.initial;
  r.final = a.final;
  std::vector<int> split(a.num_states(), -1);
  for (int s = 0; s < a.num_states(); ++s) {
    bool eps = false, inp = false;
    for (int k = adj.begin(s); k < adj.end(s); ++k) (a.trans[adj.order[k]].in == kEps ? eps : inp) = true;
    // a final state with epsilon-input arcs is split too, so paths can end in a waiting state
    if (eps && (inp || s == a.final)) {
      split[s] = r.add_state(a.names[s].empty() ? std::string() : a.names[s] + "~w");
      r.add(s, kEps, kEps, 1.0, split[s]);
    }
  }
  for (const auto& t : a.trans) {
    int src = (t.in != kEps && split[t.src] >= 0) ? split[t.src] : t.src;
    r.add(src, t.in, t.out, t.weight, t.dst);
  }
  if (split[a.final] >= 0) r.final = split[a.final];
  return r;
}

Machine compose(const Machine& r, const Machine& s) {
  for (const auto& z : r.out_alpha.symbols())
    if (s.in_alpha.find(z) < 0) throw Error("compose: output symbol '" + z + "' missing from next machine's input alphabet");
  Machine sw = to_waiting_machine(s);
  MachineView rv(r), sv(sw);
  ComposeView cv(rv, sv);
  return materialize(cv);
}

namespace {

// Index map taking b's symbols onto a's; both alphabets must hold the same symbol set.
std::vector<int> same_alphabet_map(const Alphabet& a, const Alphabet& b, const char* op) {
  if (a.size() != b.size()) throw Error(std::string(op) + ": alphabet mismatch");
  std::vector<int> map(b.size());
  for (int i = 0; i < b.size(); ++i) {
    map[i] = a.find(b.name(i));
    if (map[i] < 0) throw Error(std::string(op) + ": alphabet mismatch");
  }
  return map;
}

int append_states(Machine& dst, const Machine& src, const std::vector<int>& imap, const std::vector<int>& omap) {
  int base = dst.num_states();
  for (const auto& n : src.names) dst.add_state(n);
  for (const auto& t : src.trans)
    dst.add(t.src + base, t.in == kEps ? kEps : imap[t.in], t.out == kEps ? kEps : omap[t.out], t.weight,
            t.dst + base);
  return base;
}

}  // namespace

Machine concatenate(const Machine& a, const Machine& b) {
  auto im = same_alphabet_map(a.in_alpha, b.in_alpha, "concatenate");
  auto om = same_alphabet_map(a.out_alpha, b.out_alpha, "concatenate");
  Machine r = a;
  int base = append_states(r, b, im, om);
  r.add(a.final, kEps, kEps, 1.0, b.initial + base);
  r.final = b.final + base;
  return r;
}

Machine union_of(const Machine& a, const Machine& b) {
  auto im = same_alphabet_map(a.in_alpha, b.in_alpha, "union");
  auto om = same_alphabet_map(a.out_alpha, b.out_alpha, "union");
  Machine r = a;
  int base = append_states(r, b, im, om);
  int init = r.add_state("union.initial");
  int fin = r.add_state("union.final");
  r.add(init, kEps, kEps, 1.0, a.initial);
  r.add(init, kEps, kEps, 1.0, b.initial + base);
  r.add(a.final, kEps, kEps, 1.0, fin);
  r.add(b.final + base, kEps, kEps, 1.0, fin);
  r.initial = init;
  r.final = fin;
  return r;
}

Machine kleene_closure(const Machine& a) {
  Machine r = a;
  r.add(a.final, kEps, kEps, 1.0, a.initial);
  return r;
}

Machine identity_machine(const Alphabet& a) {
  Machine m;
  m.in_alpha = a;
  m.out_alpha = a;
  m.initial = m.final = m.add_state("id");
  for (int i = 0; i < a.size(); ++i) m.add(0, i, i, 1.0, 0);
  return m;
}

Machine chain_machine(const Alphabet& in, const Alphabet& out, const std::vector<int>& in_seq,
                      const std::vector<int>& out_seq) {
  Machine m;
  m.in_alpha = in;
  m.out_alpha = out;
  int cur = m.add_state("c0");
  m.initial = cur;
  size_t n = std::max(in_seq.size(), out_seq.size());
  for (size_t i = 0; i < n; ++i) {
    int nxt = m.add_state("c" + std::to_string(i + 1));
    m.add(cur, i < in_seq.size() ? in_seq[i] : kEps, i < out_seq.size() ? out_seq[i] : kEps, 1.0, nxt);
    cur = nxt;
  }
  m.final = cur;
  return m;
}

// ---- views ----

MachineView::MachineView(const Machine& m) : m_(m), adj_(m) {}

void MachineView::arcs(uint64_t s, std::vector<Arc>& out) {
  out.clear();
  int q = static_cast<int>(s);
  for (int k = adj_.begin(q); k < adj_.end(q); ++k) {
    const Transition& t = m_.trans[adj_.order[k]];
    out.push_back({t.in, t.out, t.weight, static_cast<uint64_t>(t.dst), -1});
  }
}

std::string MachineView::state_name(uint64_t s) {
  const auto& n = m_.names[static_cast<size_t>(s)];
  return n.empty() ? std::to_string(s) : n;
}

void WaitingView::arcs(uint64_t s, std::vector<Arc>& out) {
  out.clear();
  base_.arcs(s >> 1, scratch_);
  bool eps = false, inp = false;
  for (const auto& a : scratch_) (a.in == kEps ? eps : inp) = true;
  bool split = eps && (inp || (s >> 1) == base_.final());
  bool upper = s & 1;
  for (Arc a : scratch_) {
    if (split && ((a.in == kEps) == upper)) continue;
    a.dst <<= 1;
    out.push_back(a);
  }
  if (split && !upper) out.push_back({kEps, kEps, 1.0, s | 1, -1});
}

uint64_t WaitingView::final() {
  uint64_t f = base_.final();
  base_.arcs(f, scratch_);
  for (const auto& a : scratch_)
    if (a.in == kEps) return (f << 1) | 1;
  return f << 1;
}

std::string WaitingView::state_name(uint64_t s) {
  return base_.state_name(s >> 1) + ((s & 1) ? "~w" : "");
}

int bits_for(uint64_t n) {
  int b = 1;
  while (b < 64 && (uint64_t{1} << b) < n) ++b;
  return b;
}

ComposeView::ComposeView(View& r, View& s) : r_(r), s_(s) {
  sbits_ = s.key_bits();
  packed_ = r.key_bits() + sbits_ <= 64;
  const Alphabet& z = r.out_alpha();
  zmap_.resize(z.size());
  for (int i = 0; i < z.size(); ++i) zmap_[i] = s.in_alpha().find(z.name(i));
  init_ = intern(r.initial(), s.initial());
  final_ = intern(r.final(), s.final());
}

std::pair<uint64_t, uint64_t> ComposeView::pair_of(uint64_t id) const {
  if (packed_) return {id >> sbits_, sbits_ == 64 ? id : id & ((uint64_t{1} << sbits_) - 1)};
  return pairs_[id];
}

uint64_t ComposeView::intern(uint64_t a, uint64_t b) {
  if (packed_) return (a << sbits_) | b;
  auto [it, fresh] = ids_.try_emplace({a, b}, pairs_.size());
  if (fresh) pairs_.push_back({a, b});
  return it->second;
}

void ComposeView::arcs(uint64_t id, std::vector<Arc>& out) {
  out.clear();
  auto [r, s] = pair_of(id);
  s_.arcs(s, sa_);
  bool waiting = true;
  for (const auto& a : sa_)
    if (a.in == kEps) waiting = false;
  if (!waiting) {
    for (const auto& a : sa_)
      if (a.in == kEps) out.push_back({kEps, a.out, a.w, intern(r, a.dst), a.tag});
    return;
  }
  r_.arcs(r, ra_);
  for (const auto& a : ra_) {
    if (a.out == kEps) {
      out.push_back({a.in, kEps, a.w, intern(a.dst, s), a.tag});
      continue;
    }
    int z = zmap_[a.out];
    if (z < 0) continue;
    for (const auto& b : sa_)
      if (b.in == z) out.push_back({a.in, b.out, a.w * b.w, intern(a.dst, b.dst), b.tag});
  }
}

std::string ComposeView::state_name(uint64_t id) {
  auto [r, s] = pair_of(id);
  return r_.state_name(r) + "|" + s_.state_name(s);
}

Machine materialize(View& v, bool with_names, size_t max_states) {
  Machine m;
  m.in_alpha = v.in_alpha();
  m.out_alpha = v.out_alpha();
  std::unordered_map<uint64_t, int> id;
  std::deque<uint64_t> queue;
  auto get = [&](uint64_t k) {
    auto [it, fresh] = id.try_emplace(k, m.num_states());
    if (fresh) {
      if (static_cast<size_t>(m.num_states()) >= max_states) throw Error("materialize: state limit exceeded");
      m.add_state(with_names ? v.state_name(k) : std::string());
      queue.push_back(k);
    }
    return it->second;
  };
  m.initial = get(v.initial());
  uint64_t fk = v.final();
  std::vector<Arc> arcs;
  while (!queue.empty()) {
    uint64_t k = queue.front();
    queue.pop_front();
    int src = id[k];
    v.arcs(k, arcs);
    std::vector<Arc> local = arcs;
    for (const auto& a : local) m.add(src, a.in, a.out, a.w, get(a.dst));
  }
  m.final = get(fk);
  return prune(m);
}

}  // namespace fstdna
