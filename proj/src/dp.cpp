#include "fstdna/dp.hpp"

#include <queue>
#include <unordered_map>

namespace fstdna {

std::optional<std::vector<int>> eps_topological_order(const Machine& m) {
  const int Q = m.num_states();
  std::vector<int> indeg(Q, 0);
  std::vector<std::vector<int>> succ(Q);
  for (const auto& t : m.trans)
    if (t.in == kEps && t.out == kEps && t.weight != 0) {
      succ[t.src].push_back(t.dst);
      indeg[t.dst]++;
    }
  std::vector<int> order, stack;
  for (int q = Q - 1; q >= 0; --q)
    if (!indeg[q]) stack.push_back(q);
  while (!stack.empty()) {
    int q = stack.back();
    stack.pop_back();
    order.push_back(q);
    for (int d : succ[q])
      if (--indeg[d] == 0) stack.push_back(d);
  }
  if (static_cast<int>(order.size()) != Q) return std::nullopt;
  return order;
}

namespace {

constexpr int kNone = -1;

// Column-local search node; parent indexes scratch (local) or permanent storage.
struct Node {
  uint64_t key;
  double cost;
  int parent;
  int in;
  bool local;
};

// Traceback record kept for every committed node.
struct Link {
  int parent;
  int in;
  int depth;
};

struct Live {
  int link;
  uint64_t key;
  double cost;
};

class ViterbiRun {
 public:
  ViterbiRun(View& v, const std::vector<int>& y, const DecodeOptions& opt) : v_(v), y_(y), opt_(opt) {}

  DecodeResult run() {
    DecodeResult res;
    uint64_t fin = v_.final();
    scratch_.clear();
    index_.clear();
    relax(v_.initial(), 0.0, {kNone, false}, kEps);
    std::vector<Live> live;
    for (size_t j = 0;; ++j) {
      closure(j == y_.size() ? 0 : opt_.beam, j == y_.size() ? &fin : nullptr);
      if (j == y_.size()) {
        auto it = index_.find(fin);
        if (it == index_.end()) return res;
        res.ok = true;
        res.log_weight = -scratch_[it->second].cost;
        res.input = trace({it->second, true});
        return res;
      }
      commit(live);
      scratch_.clear();
      index_.clear();
      int sym = y_[j];
      for (size_t k = 0; k < live.size(); ++k) {
        const Live& n = live[k];
        for (size_t a = emit_off_[k]; a < emit_off_[k + 1]; ++a) {
          const Arc& arc = emit_[a];
          if (arc.out == sym) relax(arc.dst, n.cost - std::log(arc.w), {n.link, false}, arc.in);
        }
      }
      if (scratch_.empty()) return res;
    }
  }

 private:
  using Ptr = std::pair<int, bool>;  // (index, local)

  // Local parents can be replaced after a tie, so local depths are recounted.
  int depth(Ptr p) const {
    int d = 0;
    while (p.first != kNone && p.second) {
      const Node& n = scratch_[p.first];
      ++d;
      p = {n.parent, n.local};
    }
    return p.first == kNone ? d : d + perm_[p.first].depth;
  }
  Ptr up(Ptr p, int& in) const {
    if (p.second) {
      const Node& n = scratch_[p.first];
      in = n.in;
      return {n.parent, n.local};
    }
    const Link& l = perm_[p.first];
    in = l.in;
    return {l.parent, false};
  }

  std::vector<int> trace(Ptr p) const {
    std::vector<int> rev;
    while (p.first != kNone) {
      int in;
      p = up(p, in);
      if (in != kEps) rev.push_back(in);
    }
    return {rev.rbegin(), rev.rend()};
  }

  // True when the path (parent, in) has a lexically smaller input than the path ending at node b.
  // Both paths agree up to their deepest common ancestor, so only the tails are compared.
  bool lex_less(Ptr a, int a_in, Ptr b) const {
    std::vector<int> ta, tb;
    if (a_in != kEps) ta.push_back(a_in);
    int da = depth(a), db = depth(b);
    int in;
    while (da > db) { a = up(a, in); if (in != kEps) ta.push_back(in); --da; }
    while (db > da) { b = up(b, in); if (in != kEps) tb.push_back(in); --db; }
    while (a != b) {
      a = up(a, in);
      if (in != kEps) ta.push_back(in);
      b = up(b, in);
      if (in != kEps) tb.push_back(in);
    }
    return std::lexicographical_compare(ta.rbegin(), ta.rend(), tb.rbegin(), tb.rend());
  }

  void relax(uint64_t key, double cost, Ptr parent, int in) {
    auto [it, fresh] = index_.try_emplace(key, static_cast<int>(scratch_.size()));
    if (fresh) {
      scratch_.push_back({key, cost, parent.first, in, parent.second});
      heap_.push({cost, it->second});
      return;
    }
    Node& n = scratch_[it->second];
    bool better = cost < n.cost;
    if (!better && cost == n.cost && opt_.lexical_ties) {
      if (parent.second && parent.first == it->second) return;
      better = lex_less(parent, in, {it->second, true});
    }
    if (!better) return;
    n.cost = cost;
    n.parent = parent.first;
    n.in = in;
    n.local = parent.second;
    heap_.push({cost, it->second});
  }

  // Relaxes arcs with empty output inside the current column, in cost order.
  // Popped costs are final, so once `limit` emitting nodes are settled (or the
  // window is exceeded) no later node can enter the beam. Nodes without
  // output arcs never reach the next column and do not count.
  // In the last column, stops as soon as `stop_at` is settled.
  void closure(size_t limit, const uint64_t* stop_at) {
    size_t pops = 0;
    settled_.clear();
    emit_.clear();
    emit_off_.assign(1, 0);
    double best = std::numeric_limits<double>::infinity();
    bool first = true;
    while (!heap_.empty()) {
      auto [c, i] = heap_.top();
      heap_.pop();
      if (c > scratch_[i].cost) continue;
      if (++pops > 64 * scratch_.size() + 1'000'000) throw Error("viterbi: negative-cost epsilon cycle");
      if (first) best = c, first = false;
      if (!stop_at && (c > best + opt_.delta || (limit && settled_.size() >= limit))) break;
      bool again = popped(i);
      if (stop_at && scratch_[i].key == *stop_at) break;
      v_.arcs(scratch_[i].key, arcs_);
      size_t mark = emit_.size();
      for (const auto& a : arcs_) {
        if (a.w <= 0) continue;
        if (a.out != kEps) {
          if (!again) emit_.push_back(a);
          continue;
        }
        relax(a.dst, c - std::log(a.w), {i, true}, a.in);
      }
      if (emit_.size() > mark) {
        settled_.push_back(i);
        emit_off_.push_back(emit_.size());
      }
    }
  }

  bool popped(int i) {
    if (static_cast<size_t>(i) >= seen_.size()) seen_.resize(scratch_.size() * 2 + 16, 0);
    if (seen_[i]) return true;
    seen_[i] = 1;
    return false;
  }

  // Moves the settled nodes (and their in-column ancestors) to permanent storage.
  void commit(std::vector<Live>& live) {
    while (!heap_.empty()) heap_.pop();
    std::fill(seen_.begin(), seen_.end(), 0);
    const std::vector<int>& idx = settled_;
    mapped_.assign(scratch_.size(), kNone);
    std::vector<int> chain;
    for (int i : idx) {
      chain.clear();
      int cur = i;
      while (cur != kNone && mapped_[cur] == kNone) {
        chain.push_back(cur);
        const Node& n = scratch_[cur];
        if (!n.local) break;
        cur = n.parent;
      }
      for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        const Node& n = scratch_[*it];
        int parent = n.local ? mapped_[n.parent] : n.parent;
        mapped_[*it] = static_cast<int>(perm_.size());
        perm_.push_back({parent, n.in, parent == kNone ? 1 : perm_[parent].depth + 1});
      }
    }
    live.clear();
    for (int i : idx) live.push_back({mapped_[i], scratch_[i].key, scratch_[i].cost});
  }

  View& v_;
  const std::vector<int>& y_;
  DecodeOptions opt_;
  std::vector<Link> perm_;
  std::vector<Node> scratch_;
  std::vector<int> mapped_;
  std::vector<int> settled_;
  std::vector<Arc> emit_;  // output arcs of settled_[k] are emit_[emit_off_[k] .. emit_off_[k+1])
  std::vector<size_t> emit_off_;
  std::vector<char> seen_;
  std::unordered_map<uint64_t, int> index_;
  std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>, std::greater<>> heap_;
  std::vector<Arc> arcs_;
};

}  // namespace

DecodeResult viterbi(View& v, const std::vector<int>& y, const DecodeOptions& opt) {
  ViterbiRun run(v, y, opt);
  return run.run();
}

DecodeResult viterbi_decode(const Machine& m, const std::vector<int>& y) {
  for (int s : y)
    if (s < 0 || s >= m.out_alpha.size()) throw Error("viterbi: output symbol outside alphabet");
  MachineView mv(m);
  return viterbi(mv, y, DecodeOptions{});
}

// ---- encoder ----

Encoder::Encoder(const Machine& m) : m_(m), adj_(m), nsym_(m.in_alpha.size() + 1) {
  cache_.resize(static_cast<size_t>(m.num_states()) * nsym_);
}

const Encoder::Step& Encoder::step(int q, int sym) {
  Step& s = cache_[static_cast<size_t>(q) * nsym_ + sym];
  if (s.status == 0) s = compute(q, sym);
  return s;
}

Encoder::Step Encoder::compute(int q, int sym) {
  const bool end = sym == nsym_ - 1;
  // Breadth-first over epsilon-input arcs. The symbol is consumed at the smallest
  // epsilon depth; two routes of equal length there make the step ambiguous.
  struct Via {
    int trans = -1, depth = 0;
    bool multi = false;
  };
  std::unordered_map<int, Via> via;
  std::vector<int> frontier{q};
  via[q] = {};
  std::vector<std::pair<int, int>> hits;  // (from state, transition or -1 for reaching final)
  int hit_depth = -1;
  for (size_t h = 0; h < frontier.size(); ++h) {
    int s = frontier[h];
    Via cur = via[s];
    if (hit_depth >= 0 && cur.depth > hit_depth) break;
    if (end && s == m_.final) hits.push_back({s, -1}), hit_depth = cur.depth;
    for (int k = adj_.begin(s); k < adj_.end(s); ++k) {
      int ti = adj_.order[k];
      const Transition& t = m_.trans[ti];
      if (t.weight == 0) continue;
      if (t.in == kEps) {
        auto it = via.find(t.dst);
        if (it == via.end()) {
          via[t.dst] = {ti, cur.depth + 1, false};
          frontier.push_back(t.dst);
        } else if (it->second.depth == cur.depth + 1 || t.dst == q) {
          it->second.multi = true;
        }
      } else if (!end && t.in == sym) {
        hits.push_back({s, ti});
        hit_depth = cur.depth;
      }
    }
  }
  Step st;
  if (hits.empty()) {
    st.status = 2;
    return st;
  }
  if (hits.size() > 1) {
    st.status = 3;
    return st;
  }
  // Multi flags set after a child was visited do not propagate; recheck along the path.
  std::vector<int> path;
  int s = hits[0].first;
  if (hits[0].second >= 0) path.push_back(hits[0].second);
  while (true) {
    const Via& v = via[s];
    if (v.multi) {
      st.status = 3;
      return st;
    }
    if (s == q) break;
    path.push_back(v.trans);
    s = m_.trans[v.trans].src;
  }
  st.out_begin = static_cast<int>(outbuf_.size());
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    const Transition& t = m_.trans[*it];
    if (t.out != kEps) outbuf_.push_back(t.out);
  }
  st.out_len = static_cast<int>(outbuf_.size()) - st.out_begin;
  st.next = hits[0].second >= 0 ? m_.trans[hits[0].second].dst : m_.final;
  st.status = 1;
  return st;
}

std::vector<int> Encoder::encode(const std::vector<int>& x) {
  std::vector<int> out;
  int q = m_.initial;
  auto apply = [&](int sym) {
    if (sym < 0 || sym >= nsym_) throw Error("unencodable input");
    const Step& s = step(q, sym);
    if (s.status == 2) throw Error("unencodable input");
    if (s.status == 3) throw Error("machine not encoder-deterministic");
    out.insert(out.end(), outbuf_.begin() + s.out_begin, outbuf_.begin() + s.out_begin + s.out_len);
    q = s.next;
  };
  for (int a : x) {
    if (a < 0 || a >= nsym_ - 1) throw Error("unencodable input");
    apply(a);
  }
  apply(nsym_ - 1);
  return out;
}

std::vector<int> Encoder::encode_padded(const std::vector<int>& x, int pad, int* pads_used) {
  std::vector<int> cur = x;
  for (int n = 0;; ++n) {
    try {
      auto r = encode(cur);
      if (pads_used) *pads_used = n;
      return r;
    } catch (const Error& e) {
      if (std::string(e.what()) != "unencodable input" || n >= 8 || pad < 0) throw;
    }
    cur.push_back(pad);
  }
}

size_t Encoder::encoded_length(const std::vector<int>& x) {
  size_t len = 0;
  int q = m_.initial;
  auto apply = [&](int sym) {
    const Step& s = step(q, sym);
    if (s.status == 2) throw Error("unencodable input");
    if (s.status == 3) throw Error("machine not encoder-deterministic");
    len += s.out_len;
    q = s.next;
  };
  for (int a : x) apply(a);
  apply(nsym_ - 1);
  return len;
}

std::vector<int> encode_deterministic(const Machine& m, const std::vector<int>& x) {
  Encoder e(m);
  return e.encode(x);
}

}  // namespace fstdna
