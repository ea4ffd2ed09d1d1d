#include "fstdna/synccode.hpp"

#include <cmath>

#include "fstdna/repeatcode.hpp"

namespace fstdna {

Machine hamming_machine(const std::string& variant) {
  Machine m;
  m.in_alpha = Alphabet{"0", "1"};
  m.out_alpha = Alphabet{"0", "1"};
  if (variant == "3,1" || variant == "31") {
    int q = m.add_state("hamming31");
    int a = m.add_state("hamming31.1"), b = m.add_state("hamming31.2");
    m.initial = m.final = q;
    int a0 = m.add_state("hamming31.0.1"), b0 = m.add_state("hamming31.0.2");
    m.add(q, 1, 1, 1.0, a);
    m.add(a, kEps, 1, 1.0, b);
    m.add(b, kEps, 1, 1.0, q);
    m.add(q, 0, 0, 1.0, a0);
    m.add(a0, kEps, 0, 1.0, b0);
    m.add(b0, kEps, 0, 1.0, q);
    return m;
  }
  if (variant != "7,4" && variant != "74") throw Error("hamming_machine: unknown variant " + variant);
  // Reads d1..d4, then writes positions 1..7 with parity at 1, 2, 4.
  int root = m.add_state("hamming74 p1 p2 d1 p4 d2 d3 d4");
  m.initial = m.final = root;
  std::vector<int> level{root};
  for (int depth = 1; depth <= 4; ++depth) {
    std::vector<int> next;
    for (size_t i = 0; i < level.size(); ++i)
      for (int b = 0; b < 2; ++b) {
        int code = static_cast<int>(i) * 2 + b;
        if (depth < 4) {
          std::string name = "h74:";
          for (int k = depth - 1; k >= 0; --k) name += ((code >> k) & 1) ? '1' : '0';
          int s = m.add_state(name);
          m.add(level[i], b, kEps, 1.0, s);
          next.push_back(s);
          continue;
        }
        int d1 = (code >> 3) & 1, d2 = (code >> 2) & 1, d3 = (code >> 1) & 1, d4 = code & 1;
        int word[7] = {d1 ^ d2 ^ d4, d1 ^ d3 ^ d4, d1, d2 ^ d3 ^ d4, d2, d3, d4};
        int cur = level[i];
        int in = b;
        for (int k = 0; k < 7; ++k) {
          int dst = k == 6 ? root : m.add_state("h74:" + std::to_string(code) + "." + std::to_string(k + 1));
          m.add(cur, in, word[k], 1.0, dst);
          in = kEps;
          cur = dst;
        }
      }
    level = next;
  }
  return m;
}

Machine marker_machine(int M, const std::string& control, const Alphabet& alphabet) {
  if (M < 1) throw Error("marker_machine: period must be positive");
  Machine m;
  m.in_alpha = alphabet;
  m.out_alpha = alphabet;
  int ctl = m.out_alpha.add(control);
  for (int i = 0; i < M; ++i) m.add_state("mk" + std::to_string(i));
  int emit = m.add_state("mk.emit");
  m.initial = 0;
  m.final = m.add_state("mk.end");
  for (int i = 0; i < M; ++i) {
    for (int a = 0; a < alphabet.size(); ++a) m.add(i, a, a, 1.0, i + 1 < M ? i + 1 : emit);
    m.add(i, kEps, kEps, 1.0, m.final);
  }
  m.add(emit, kEps, ctl, 1.0, 0);
  return m;
}

uint64_t watermark_hash(uint64_t seed, uint64_t state, uint64_t slot) {
  uint64_t z = seed * 0x9E3779B97F4A7C15ULL + state * 0xBF58476D1CE4E5B9ULL + slot * 0x94D049BB133111EBULL + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

int watermark_digit(const WatermarkSpec& spec, int state, int bit, int radix) {
  // Ordered pair of distinct digits drawn from R*(R-1) choices.
  uint64_t h = watermark_hash(spec.seed, static_cast<uint64_t>(state), static_cast<uint64_t>(radix));
  int pairs = radix * (radix - 1);
  int k = static_cast<int>(h % pairs);
  int first = k / (radix - 1);
  int second = k % (radix - 1);
  if (second >= first) ++second;
  return bit ? second : first;
}

int pilot_digit(const WatermarkSpec& spec, int state, int radix) {
  uint64_t h = watermark_hash(spec.seed, static_cast<uint64_t>(state), 16 + static_cast<uint64_t>(radix));
  return static_cast<int>(h % radix);
}

namespace {

Machine watermark(const WatermarkSpec& spec, bool pilots) {
  if (spec.period < 1) throw Error("watermark: period must be positive");
  int stride = 0;
  if (pilots) {
    if (!(spec.interleave_ratio > 0 && spec.interleave_ratio <= 1))
      throw Error("watermark: interleave ratio must be in (0,1]");
    stride = static_cast<int>(std::lround(1.0 / spec.interleave_ratio));
  }
  Machine m;
  m.in_alpha = Alphabet{"0", "1"};
  for (int R = 2; R <= 4; ++R)
    for (int d = 0; d < R; ++d) m.out_alpha.add(digit_symbol(d, R));
  int ctl = spec.control_symbol.empty() ? -1 : m.out_alpha.add(spec.control_symbol);
  const int M = spec.period;
  std::vector<int> st(M), pil(M, -1);
  for (int i = 0; i < M; ++i) st[i] = m.add_state("wm" + std::to_string(i));
  m.names[st[0]] += " splitmix64 seed=" + std::to_string(spec.seed);
  for (int i = 0; i < M; ++i)
    if (stride && (i + 1) % stride == 0) pil[i] = m.add_state("wm" + std::to_string(i) + ".pilot");
  int tail = ctl >= 0 ? m.add_state("wm.ctl") : -1;
  // A message may stop after any signal bit.
  m.initial = st[0];
  m.final = m.add_state("wm.end");
  for (int i = 0; i < M; ++i) {
    m.add(st[i], kEps, kEps, 1.0, m.final);
    int after = i + 1 < M ? st[i + 1] : (tail >= 0 ? tail : st[0]);
    int dst = pil[i] >= 0 ? pil[i] : after;
    for (int b = 0; b < 2; ++b)
      for (int R = 2; R <= 4; ++R) m.add(st[i], b, m.out_alpha.at(digit_symbol(watermark_digit(spec, i, b, R), R)), 1.0, dst);
    if (pil[i] >= 0)
      for (int R = 2; R <= 4; ++R) m.add(pil[i], kEps, m.out_alpha.at(digit_symbol(pilot_digit(spec, i, R), R)), 1.0, after);
  }
  if (tail >= 0) m.add(tail, kEps, ctl, 1.0, st[0]);
  return m;
}

}  // namespace

Machine watermark_radix_machine(const WatermarkSpec& spec) { return watermark(spec, false); }

Machine interleave_watermark_machine(const WatermarkSpec& spec) { return watermark(spec, true); }

}  // namespace fstdna
