#pragma once

#include <cstdint>
#include <string>

#include "fstdna/machine.hpp"

namespace fstdna {

// "3,1" repeats each bit three times; "7,4" emits p1 p2 d1 p4 d2 d3 d4.
Machine hamming_machine(const std::string& variant);

// Copies symbols of `alphabet` (bits by default) and emits `control` after every M of them.
Machine marker_machine(int M, const std::string& control, const Alphabet& alphabet = Alphabet{"0", "1"});

struct WatermarkSpec {
  int period = 64;               // signal bits per cycle
  double interleave_ratio = 0;   // pilot digits per signal bit: 0, or in (0,1]
  uint64_t seed = 1;
  std::string control_symbol;    // emitted after each cycle when non-empty
};

// splitmix64 over (seed, state, slot); the generator is fixed so signatures can be regenerated anywhere.
uint64_t watermark_hash(uint64_t seed, uint64_t state, uint64_t slot);

// Per state, bit b becomes one digit at whichever radix (2, 3, 4) the next stage accepts;
// the two bits always map to distinct digits.
Machine watermark_radix_machine(const WatermarkSpec& spec);
// As above, plus one pseudorandom pilot digit (epsilon input) after every 1/ratio signal bits.
Machine interleave_watermark_machine(const WatermarkSpec& spec);

// Digit chosen for bit b in state i at radix R, and the pilot digit after state i.
int watermark_digit(const WatermarkSpec& spec, int state, int bit, int radix);
int pilot_digit(const WatermarkSpec& spec, int state, int radix);

}  // namespace fstdna
