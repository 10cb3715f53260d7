#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace rldp::gf {

// GF(2^8) with reduction polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11D).
// 0x02 generates the multiplicative group (order 255) under this polynomial,
// so log/antilog tables are built on its powers.

using Element = std::uint8_t;

inline constexpr unsigned kPoly = 0x11D;
inline constexpr Element kGenerator = 0x02;

namespace detail {

struct LogTables {
  std::array<Element, 512> exp{};
  std::array<std::uint8_t, 256> log{};
  constexpr LogTables() {
    unsigned x = 1;
    for (unsigned i = 0; i < 255; ++i) {
      exp[i] = static_cast<Element>(x);
      log[x] = static_cast<std::uint8_t>(i);
      x <<= 1;
      if (x & 0x100u) x ^= kPoly;
    }
    for (unsigned i = 255; i < 512; ++i) exp[i] = exp[i - 255];
  }
};

inline constexpr LogTables kLog{};

struct MulTable {
  std::array<std::array<Element, 256>, 256> m{};
  constexpr MulTable() {
    for (unsigned a = 1; a < 256; ++a)
      for (unsigned b = 1; b < 256; ++b)
        m[a][b] = kLog.exp[kLog.log[a] + kLog.log[b]];
  }
};

inline constexpr MulTable kMul{};

}  // namespace detail

constexpr Element add(Element a, Element b) { return a ^ b; }
constexpr Element sub(Element a, Element b) { return a ^ b; }

constexpr Element mul(Element a, Element b) { return detail::kMul.m[a][b]; }

constexpr Element inv(Element a) {
  if (a == 0) throw std::domain_error("gf256: zero has no inverse");
  return detail::kLog.exp[255 - detail::kLog.log[a]];
}

constexpr Element div(Element a, Element b) { return mul(a, inv(b)); }

// Row of the product table for a fixed scalar; hot loops over payload symbols
// index this directly.
inline const Element* mul_row(Element c) { return detail::kMul.m[c].data(); }

}  // namespace rldp::gf
