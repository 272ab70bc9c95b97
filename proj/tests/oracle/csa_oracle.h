#ifndef HOPCRACK_TESTS_CSA_ORACLE_H
#define HOPCRACK_TESTS_CSA_ORACLE_H

// Naive reference for channel selection, written from the link-layer rules
// alone: no bit tricks, no shared code with the library.

#include <array>
#include <cstdint>
#include <vector>

namespace oracle {

using UsedFlags = std::array<bool, 37>;

inline UsedFlags flags_from_bits(std::uint64_t bits) {
  UsedFlags f{};
  for (int c = 0; c < 37; ++c) f[c] = ((bits >> c) & 1u) != 0;
  return f;
}

inline int next_unmapped(int last, int hop) {
  int u = last;
  for (int i = 0; i < hop; ++i) u = (u == 36) ? 0 : u + 1;
  return u;
}

inline int mapped_channel(int unmapped, const UsedFlags& used) {
  if (used[unmapped]) return unmapped;
  std::vector<int> table;
  for (int c = 0; c < 37; ++c) {
    if (used[c]) table.push_back(c);
  }
  int index = unmapped;
  while (index >= static_cast<int>(table.size())) index -= static_cast<int>(table.size());
  return table[index];
}

inline std::vector<int> channels(int luc, int hop, const UsedFlags& used, int n) {
  std::vector<int> out;
  int last = luc;
  for (int k = 0; k < n; ++k) {
    last = next_unmapped(last, hop);
    out.push_back(mapped_channel(last, used));
  }
  return out;
}

// Brute-force multiplicative inverse modulo 37.
inline int inverse(int x) {
  for (int y = 1; y < 37; ++y) {
    if ((x * y) % 37 == 1) return y;
  }
  return 0;
}

}  // namespace oracle

#endif  // HOPCRACK_TESTS_CSA_ORACLE_H
