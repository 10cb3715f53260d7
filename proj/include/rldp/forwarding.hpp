#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_set>
#include <vector>

#include "rldp/generations.hpp"
#include "rldp/rlnc.hpp"
#include "rldp/topology.hpp"

namespace rldp {

// One set-cover problem: candidate forwarders with the two-hop targets each
// one reaches, plus the universe that needs covering.
struct CoverInstance {
  std::vector<std::pair<NodeId, NodeSet>> candidates;  // ascending by id
  NodeSet universe;
};

// Partial dominant pruning. For the packet origin (no previous hop) the
// candidates are all neighbors and the universe is the full two-hop
// neighborhood. For a relay v that heard the packet from u, everything u
// already reached or will reach through its own election is pruned:
//   C = N(v) - N(u) - {u}
//   U = N(N(v)) - N(v) - N(u) - N(N(u) cap N(v)) - {v, u}
inline CoverInstance pdp_reduce(const TopologySnapshot& view, NodeId v,
                                std::optional<NodeId> prev) {
  CoverInstance ci;
  ci.universe = two_hop(view, v);
  NodeSet cand = view.adj_set[v];
  if (prev) {
    const NodeId u = *prev;
    cand -= view.adj_set[u];
    cand.erase(u);
    ci.universe -= view.adj_set[u];
    ci.universe.erase(u);
    NodeSet common = view.adj_set[u];
    common &= view.adj_set[v];
    common.for_each(
        [&](NodeId w) { ci.universe -= view.adj_set[w]; });
  }
  cand.for_each([&](NodeId c) {
    NodeSet cover = view.adj_set[c];
    cover &= ci.universe;
    ci.candidates.emplace_back(c, std::move(cover));
  });
  return ci;
}

// Largest marginal coverage first, ties to the lowest node id; stops when
// nothing more can be covered. Two-hop targets no candidate reaches are
// ignored (they are unreachable through this neighborhood anyway).
inline std::vector<NodeId> greedy_set_cover(const CoverInstance& ci) {
  std::vector<NodeId> chosen;
  NodeSet uncovered = ci.universe;
  std::vector<char> used(ci.candidates.size(), 0);
  while (!uncovered.empty()) {
    std::size_t best = ci.candidates.size();
    std::uint32_t best_gain = 0;
    for (std::size_t i = 0; i < ci.candidates.size(); ++i) {
      if (used[i]) continue;
      const std::uint32_t gain =
          ci.candidates[i].second.intersect_count(uncovered);
      if (gain > best_gain) {  // strict: first (lowest id) wins ties
        best_gain = gain;
        best = i;
      }
    }
    if (best == ci.candidates.size()) break;
    used[best] = 1;
    chosen.push_back(ci.candidates[best].first);
    uncovered -= ci.candidates[best].second;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

// Has this node already forwarded for a given (origin source, generation)
// native addition?
class SeenTable {
 public:
  bool test(NodeId origin, GenerationId gen) const {
    return seen_.count(key(origin, gen)) != 0;
  }
  void set(NodeId origin, GenerationId gen) { seen_.insert(key(origin, gen)); }

 private:
  static std::uint64_t key(NodeId origin, GenerationId gen) {
    return (std::uint64_t(gen) << 32) | origin;
  }
  std::unordered_set<std::uint64_t> seen_;
};

struct ForwardingPolicy {
  enum class Kind { flooding, probabilistic, rldp };
  Kind kind = Kind::rldp;
  double omega = 1.0;  // forward probability for the probabilistic baseline
};

// Everything a node carries between receptions.
struct NodeState {
  NodeId id = 0;
  GenerationStore generations;
  std::map<GenerationId, DecodingMatrix> matrices;
  SeenTable seen;
};

struct ReceiveOutcome {
  enum class Action {
    drop_redundant,
    drop_not_forwarder,
    drop_seen,
    drop_coin,
    forward
  };
  Action action = Action::drop_redundant;
  bool innovative = false;
  std::optional<EncodedPacket> tx;
  std::vector<NodeId> decoded;  // decoded sources after an innovative insert
};

// Receive procedure for the coded dominant-pruning policy, in order:
// reject non-innovative packets, update the decoding matrix, forward only if
// elected and not already forwarded for this (origin, generation), and then
// transmit a fresh recode with a newly elected forwarder set.
inline ReceiveOutcome rldp_on_receive(NodeState& st, const EncodedPacket& pkt,
                                      NodeId prev, const TopologySnapshot& view,
                                      double now, Rng& rng) {
  ReceiveOutcome out;
  st.generations.observe(pkt.generation, pkt.ev.columns, now);
  DecodingMatrix& m = st.matrices[pkt.generation];
  if (m.insert(pkt.ev, pkt.payload) == DecodingMatrix::Insert::redundant)
    return out;
  out.innovative = true;
  out.decoded = m.decoded_sources();
  if (!std::binary_search(pkt.forwarders.begin(), pkt.forwarders.end(), st.id)) {
    out.action = ReceiveOutcome::Action::drop_not_forwarder;
    return out;
  }
  if (st.seen.test(pkt.origin_source, pkt.generation)) {
    out.action = ReceiveOutcome::Action::drop_seen;
    return out;
  }
  st.seen.set(pkt.origin_source, pkt.generation);
  EncodedPacket tx;
  tx.generation = pkt.generation;
  tx.source = st.id;
  tx.origin_source = pkt.origin_source;
  m.random_combination(rng, tx.ev, tx.payload);
  tx.forwarders = greedy_set_cover(pdp_reduce(view, st.id, prev));
  tx.hop_timestamp = now;
  out.action = ReceiveOutcome::Action::forward;
  out.tx = std::move(tx);
  return out;
}

// Innovative-based baselines: every innovative reception triggers a fresh
// recode, transmitted always (flooding) or with probability omega.
inline ReceiveOutcome baseline_on_receive(NodeState& st,
                                          const EncodedPacket& pkt,
                                          const ForwardingPolicy& policy,
                                          double now, Rng& rng) {
  ReceiveOutcome out;
  st.generations.observe(pkt.generation, pkt.ev.columns, now);
  DecodingMatrix& m = st.matrices[pkt.generation];
  if (m.insert(pkt.ev, pkt.payload) == DecodingMatrix::Insert::redundant)
    return out;
  out.innovative = true;
  out.decoded = m.decoded_sources();
  if (policy.kind == ForwardingPolicy::Kind::probabilistic &&
      !rng.bernoulli(policy.omega)) {
    out.action = ReceiveOutcome::Action::drop_coin;
    return out;
  }
  EncodedPacket tx;
  tx.generation = pkt.generation;
  tx.source = st.id;
  tx.origin_source = pkt.origin_source;
  m.random_combination(rng, tx.ev, tx.payload);
  tx.hop_timestamp = now;
  out.action = ReceiveOutcome::Action::forward;
  out.tx = std::move(tx);
  return out;
}

// A source adds a native under strictly inter-source generation selection
// and always transmits a recode of everything it holds for that generation.
inline std::pair<GenerationId, EncodedPacket> source_emit(
    NodeState& st, const NativePacket& native, const ForwardingPolicy& policy,
    const TopologySnapshot& view, double now, Rng& rng,
    std::uint32_t generation_size) {
  const GenerationId gid =
      st.generations.select_generation(native.source, now, generation_size);
  st.generations.note_member(gid, native.source, now);
  st.matrices[gid].add_native(native.source, native.payload);
  EncodedPacket tx;
  tx.generation = gid;
  tx.source = native.source;
  tx.origin_source = native.source;
  st.matrices[gid].random_combination(rng, tx.ev, tx.payload);
  tx.hop_timestamp = now;
  if (policy.kind == ForwardingPolicy::Kind::rldp) {
    tx.forwarders = greedy_set_cover(pdp_reduce(view, native.source, {}));
    st.seen.set(native.source, gid);
  }
  return {gid, std::move(tx)};
}

}  // namespace rldp
