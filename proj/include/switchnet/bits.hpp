#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace switchnet {

using Bit = std::uint8_t;
using Bits = std::vector<Bit>;
using BitSpan = std::span<const Bit>;

// Configuration index convention for joint tables: x_1 is the most
// significant bit of the index.
inline std::uint64_t config_index(BitSpan x) {
  std::uint64_t index = 0;
  for (Bit b : x) index = (index << 1) | (b & 1u);
  return index;
}

inline Bits config_bits(std::uint64_t index, std::size_t n) {
  Bits x(n);
  for (std::size_t i = 0; i < n; ++i) x[n - 1 - i] = static_cast<Bit>((index >> i) & 1u);
  return x;
}

}  // namespace switchnet
