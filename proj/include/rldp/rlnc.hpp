#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rldp/gf256.hpp"
#include "rldp/rng.hpp"

namespace rldp {

using NodeId = std::uint32_t;
using GenerationId = std::uint32_t;

struct NativePacket {
  NodeId source = 0;
  std::vector<gf::Element> payload;
  double creation_time = 0.0;
};

// Coefficients over the generation's member columns. Columns are source node
// ids in ascending order; coeffs is parallel to columns and may contain
// zeros (the labels advertise generation membership regardless).
struct EncodingVector {
  std::vector<NodeId> columns;
  std::vector<gf::Element> coeffs;
};

struct EncodedPacket {
  GenerationId generation = 0;
  NodeId source = 0;         // transmitter of this packet
  NodeId origin_source = 0;  // source whose native addition triggered it
  EncodingVector ev;
  std::vector<gf::Element> payload;
  std::vector<NodeId> forwarders;  // ascending; empty for baseline policies
  double hop_timestamp = 0.0;
};

// Per-generation decoding state: rows held in reduced row echelon form over
// dynamically growing columns. Columns appear as soon as a packet labels
// them and stay ordered by source id.
class DecodingMatrix {
 public:
  enum class Insert { innovative, redundant };

  std::size_t rank() const { return rows_.size(); }
  std::size_t width() const { return cols_.size(); }
  const std::vector<NodeId>& columns() const { return cols_; }

  bool is_innovative(const EncodingVector& ev) const {
    if (rows_.empty()) return any_nonzero(ev.coeffs);
    // Work in the union column space without touching the matrix.
    std::vector<NodeId> ucols = merged_columns(ev.columns);
    std::vector<gf::Element> v = densify(ev, ucols);
    std::vector<std::size_t> pos = positions(ucols);
    for (const Row& r : rows_) {
      const gf::Element c = v[pos[pivot_index(r)]];
      if (c == 0) continue;
      const gf::Element* mr = gf::mul_row(c);
      for (std::size_t i = 0; i < cols_.size(); ++i)
        v[pos[i]] = gf::sub(v[pos[i]], mr[r.c[i]]);
    }
    return any_nonzero(v);
  }

  Insert insert(const EncodingVector& ev, std::span<const gf::Element> payload) {
    if (ev.columns.size() != ev.coeffs.size())
      throw std::invalid_argument("rlnc: ragged encoding vector");
    if (!rows_.empty() && payload.size() != rows_[0].p.size())
      throw std::invalid_argument("rlnc: payload length changed mid-generation");
    merge_columns(ev.columns);
    std::vector<gf::Element> v = densify(ev, cols_);
    std::vector<gf::Element> p(payload.begin(), payload.end());
    reduce(v, p);
    return place(std::move(v), std::move(p)) ? Insert::innovative
                                             : Insert::redundant;
  }

  // A source's own packet enters as a unit row on its own column. Under
  // strictly inter-source coding the column cannot pre-exist, so the row is
  // always independent.
  void add_native(NodeId src, std::span<const gf::Element> payload) {
    EncodingVector ev;
    ev.columns = {src};
    ev.coeffs = {1};
    if (insert(ev, payload) != Insert::innovative)
      throw std::logic_error("rlnc: own native was already spanned");
  }

  // out = sum over rows of scalars[i] * row[i]; scalars parallel to rows.
  void combination(std::span<const gf::Element> scalars, EncodingVector& ev,
                   std::vector<gf::Element>& payload) const {
    if (scalars.size() != rows_.size())
      throw std::invalid_argument("rlnc: scalar count != rank");
    ev.columns = cols_;
    ev.coeffs.assign(cols_.size(), 0);
    payload.assign(rows_.empty() ? 0 : rows_[0].p.size(), 0);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const gf::Element* mr = gf::mul_row(scalars[r]);
      for (std::size_t i = 0; i < cols_.size(); ++i)
        ev.coeffs[i] = gf::add(ev.coeffs[i], mr[rows_[r].c[i]]);
      for (std::size_t i = 0; i < payload.size(); ++i)
        payload[i] = gf::add(payload[i], mr[rows_[r].p[i]]);
    }
  }

  // Fresh random recode over everything held. Scalars are drawn uniformly
  // from the nonzero elements: a recode from a fully reduced state then
  // always carries every held dimension, which is what makes single-coverage
  // receptions reliable at field size 2^8.
  void random_combination(Rng& rng, EncodingVector& ev,
                          std::vector<gf::Element>& payload) const {
    if (rows_.empty())
      throw std::logic_error("rlnc: recode from empty matrix");
    std::vector<gf::Element> scalars(rows_.size());
    do {
      for (auto& s : scalars)
        s = static_cast<gf::Element>(1 + rng.uniform_below(255));
      combination(scalars, ev, payload);
    } while (!any_nonzero(ev.coeffs));
  }

  // Sources whose native is recovered: a column is decoded once some row is
  // a unit vector on it.
  std::vector<NodeId> decoded_sources() const {
    std::vector<NodeId> out;
    for (const Row& r : rows_)
      if (nonzero_count(r.c) == 1) out.push_back(r.pivot);
    std::sort(out.begin(), out.end());
    return out;
  }

  const std::vector<gf::Element>* payload_of(NodeId src) const {
    for (const Row& r : rows_)
      if (r.pivot == src && nonzero_count(r.c) == 1) return &r.p;
    return nullptr;
  }

 private:
  struct Row {
    std::vector<gf::Element> c;  // over cols_
    std::vector<gf::Element> p;
    NodeId pivot = 0;  // column id, stable across column merges
  };

  static bool any_nonzero(const std::vector<gf::Element>& v) {
    return std::any_of(v.begin(), v.end(), [](gf::Element e) { return e != 0; });
  }
  static std::size_t nonzero_count(const std::vector<gf::Element>& v) {
    std::size_t n = 0;
    for (auto e : v) n += (e != 0);
    return n;
  }

  std::size_t pivot_index(const Row& r) const {
    return static_cast<std::size_t>(
        std::lower_bound(cols_.begin(), cols_.end(), r.pivot) - cols_.begin());
  }

  std::vector<NodeId> merged_columns(const std::vector<NodeId>& in) const {
    std::vector<NodeId> u;
    std::set_union(cols_.begin(), cols_.end(), in.begin(), in.end(),
                   std::back_inserter(u));
    return u;
  }

  // index of each of cols_ inside a superset column list
  std::vector<std::size_t> positions(const std::vector<NodeId>& ucols) const {
    std::vector<std::size_t> pos(cols_.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < cols_.size(); ++i) {
      while (ucols[j] != cols_[i]) ++j;
      pos[i] = j;
    }
    return pos;
  }

  static std::vector<gf::Element> densify(const EncodingVector& ev,
                                          const std::vector<NodeId>& cols) {
    std::vector<gf::Element> v(cols.size(), 0);
    std::size_t j = 0;
    for (std::size_t i = 0; i < ev.columns.size(); ++i) {
      while (j < cols.size() && cols[j] != ev.columns[i]) ++j;
      if (j == cols.size())
        throw std::invalid_argument("rlnc: unaligned encoding vector");
      v[j] = ev.coeffs[i];
    }
    return v;
  }

  void merge_columns(const std::vector<NodeId>& in) {
    std::vector<NodeId> u = merged_columns(in);
    if (u.size() == cols_.size()) return;
    for (Row& r : rows_) {
      std::vector<gf::Element> nc(u.size(), 0);
      std::size_t j = 0;
      for (std::size_t i = 0; i < cols_.size(); ++i) {
        while (u[j] != cols_[i]) ++j;
        nc[j] = r.c[i];
      }
      r.c = std::move(nc);
    }
    cols_ = std::move(u);
  }

  void reduce(std::vector<gf::Element>& v, std::vector<gf::Element>& p) const {
    for (const Row& r : rows_) {
      const gf::Element c = v[pivot_index(r)];
      if (c == 0) continue;
      const gf::Element* mr = gf::mul_row(c);
      for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = gf::sub(v[i], mr[r.c[i]]);
      for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = gf::sub(p[i], mr[r.p[i]]);
    }
  }

  bool place(std::vector<gf::Element> v, std::vector<gf::Element> p) {
    std::size_t lead = 0;
    while (lead < v.size() && v[lead] == 0) ++lead;
    if (lead == v.size()) return false;
    const gf::Element* mr = gf::mul_row(gf::inv(v[lead]));
    for (auto& e : v) e = mr[e];
    for (auto& e : p) e = mr[e];
    // eliminate the new pivot column from existing rows
    for (Row& r : rows_) {
      const gf::Element c = r.c[lead];
      if (c == 0) continue;
      const gf::Element* m2 = gf::mul_row(c);
      for (std::size_t i = 0; i < r.c.size(); ++i)
        r.c[i] = gf::sub(r.c[i], m2[v[i]]);
      for (std::size_t i = 0; i < r.p.size(); ++i)
        r.p[i] = gf::sub(r.p[i], m2[p[i]]);
    }
    Row nr{std::move(v), std::move(p), cols_[lead]};
    auto it = std::lower_bound(
        rows_.begin(), rows_.end(), lead, [this](const Row& r, std::size_t l) {
          return pivot_index(r) < l;
        });
    rows_.insert(it, std::move(nr));
    return true;
  }

  std::vector<NodeId> cols_;
  std::vector<Row> rows_;
};

}  // namespace rldp
