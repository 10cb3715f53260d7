#pragma once

#include <cstdint>
#include <vector>

namespace rldp {

// Fixed-universe bit set over node ids. The coverage computations intersect
// and subtract neighbor sets constantly, so these are word-parallel.
class NodeSet {
 public:
  NodeSet() = default;
  explicit NodeSet(std::uint32_t universe)
      : n_(universe), w_((universe + 63) / 64, 0) {}

  std::uint32_t universe() const { return n_; }

  void insert(std::uint32_t v) { w_[v >> 6] |= 1ull << (v & 63); }
  void erase(std::uint32_t v) { w_[v >> 6] &= ~(1ull << (v & 63)); }
  bool contains(std::uint32_t v) const {
    return (w_[v >> 6] >> (v & 63)) & 1u;
  }

  NodeSet& operator|=(const NodeSet& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i];
    return *this;
  }
  NodeSet& operator&=(const NodeSet& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i];
    return *this;
  }
  NodeSet& operator-=(const NodeSet& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= ~o.w_[i];
    return *this;
  }

  std::uint32_t count() const {
    std::uint32_t c = 0;
    for (auto w : w_) c += static_cast<std::uint32_t>(__builtin_popcountll(w));
    return c;
  }
  bool empty() const {
    for (auto w : w_)
      if (w) return false;
    return true;
  }

  std::uint32_t intersect_count(const NodeSet& o) const {
    std::uint32_t c = 0;
    for (std::size_t i = 0; i < w_.size(); ++i)
      c += static_cast<std::uint32_t>(__builtin_popcountll(w_[i] & o.w_[i]));
    return c;
  }

  bool operator==(const NodeSet& o) const = default;

  // ascending id order
  template <class F>
  void for_each(F f) const {
    for (std::size_t i = 0; i < w_.size(); ++i) {
      std::uint64_t w = w_[i];
      while (w) {
        f(static_cast<std::uint32_t>(i * 64 + __builtin_ctzll(w)));
        w &= w - 1;
      }
    }
  }

  std::vector<std::uint32_t> to_vector() const {
    std::vector<std::uint32_t> out;
    out.reserve(count());
    for_each([&](std::uint32_t v) { out.push_back(v); });
    return out;
  }

 private:
  std::uint32_t n_ = 0;
  std::vector<std::uint64_t> w_;
};

}  // namespace rldp
