#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rldp/forwarding.hpp"
#include "rldp/generations.hpp"
#include "rldp/rlnc.hpp"
#include "rldp/rng.hpp"
#include "rldp/topology.hpp"

namespace rldp {

struct SimConfig {
  std::uint32_t nodes = 100;
  double a_hat = 4.0;        // normalized side length (side = a_hat * range)
  double range = 250.0;      // transmission range in meters
  std::uint32_t sources = 10;
  double lambda = 1.0;       // per-source native rate, packets per second
  double duration = 60.0;    // native generation stops here; queue drains
  double warm_up = 0.0;      // natives created earlier are not counted
  double loss = 0.0;         // independent per-link erasure probability
  double hop_latency = 0.002;
  double hop_jitter = 0.0005;  // uniform extra delay per hop
  std::uint32_t generation_size = 30;
  std::uint32_t payload_bytes = 32;
  ForwardingPolicy policy;
  enum class Mobility { static_nodes, waypoint } mobility = Mobility::static_nodes;
  MobilityConfig mobility_cfg;
  enum class View { oracle, hello } view = View::oracle;
  double hello_interval = 1.0;  // neighbor view refresh period in hello mode
  std::uint64_t seed = 1;
};

enum class RecordKind : std::uint8_t { native, tx, rx, decode };

// One line of the event log. Field meaning depends on the kind:
//   native: node = origin source, aux = per-source native index
//   tx:     node = transmitter, aux = elected forwarder count,
//           flags bit0 = source emission (vs relay)
//   rx:     node = receiver, other = transmitter,
//           flags bit0 = innovative, bits 1-3 = ReceiveOutcome::Action
//   decode: node = decoder, other = decoded origin source,
//           flags bit0 = recovered payload matched the native
struct LogRecord {
  double t = 0.0;
  RecordKind kind = RecordKind::native;
  NodeId node = 0;
  NodeId other = 0;
  GenerationId generation = 0;
  NodeId origin = 0;
  std::uint8_t flags = 0;
  std::uint32_t aux = 0;
};

struct EventLog {
  std::vector<LogRecord> records;
};

inline std::string serialize_log(const EventLog& log) {
  static const char* names[] = {"native", "tx", "rx", "decode"};
  std::string out;
  out.reserve(log.records.size() * 48);
  char line[160];
  for (const LogRecord& r : log.records) {
    std::snprintf(line, sizeof line, "%.9f %s %u %u %u %u %u %u\n", r.t,
                  names[static_cast<int>(r.kind)], r.node, r.other,
                  r.generation, r.origin, unsigned(r.flags), r.aux);
    out += line;
  }
  return out;
}

// Aggregates computed from a finished log. Delivery of a native to a node
// means the node decoded that source within the native's generation; the
// origin itself is excluded from its own denominator.
struct Metrics {
  std::uint64_t natives = 0;         // created at or after warm_up
  std::uint64_t expected_pairs = 0;  // natives * (nodes - 1)
  std::uint64_t delivered_pairs = 0;
  std::uint64_t transmissions = 0;   // tx joined to a counted native
  std::uint64_t payload_mismatches = 0;
  std::vector<double> delays;        // one entry per delivered pair, seconds

  double pdr() const {
    return expected_pairs ? double(delivered_pairs) / double(expected_pairs)
                          : 0.0;
  }
  double forwards_per_native() const {
    return natives ? double(transmissions) / double(natives) : 0.0;
  }
  double mean_delay() const {
    if (delays.empty()) return 0.0;
    double s = 0.0;
    for (double d : delays) s += d;
    return s / double(delays.size());
  }
};

inline Metrics delivery_accounting(const EventLog& log, std::uint32_t nodes,
                                   double warm_up) {
  Metrics m;
  // (generation, origin) -> creation time of natives that count
  std::map<std::pair<GenerationId, NodeId>, double> counted;
  for (const LogRecord& r : log.records) {
    if (r.kind == RecordKind::native && r.t >= warm_up)
      counted.emplace(std::make_pair(r.generation, r.origin), r.t);
  }
  m.natives = counted.size();
  m.expected_pairs = m.natives * (nodes - 1);
  for (const LogRecord& r : log.records) {
    const auto it = counted.find({r.generation, r.origin});
    if (it == counted.end()) continue;
    if (r.kind == RecordKind::tx) {
      ++m.transmissions;
    } else if (r.kind == RecordKind::decode) {
      ++m.delivered_pairs;
      m.delays.push_back(r.t - it->second);
      if (!(r.flags & 1u)) ++m.payload_mismatches;
    }
  }
  return m;
}

struct RunResult {
  TopologySnapshot topology;  // initial placement
  EventLog log;
  Metrics metrics;
};

namespace detail {

struct Event {
  double t = 0.0;
  std::uint64_t seq = 0;
  enum class Kind : std::uint8_t { native, arrival } kind = Kind::native;
  NodeId node = 0;  // native: source; arrival: receiver
  NodeId prev = 0;  // arrival: transmitter
  std::shared_ptr<const EncodedPacket> pkt;
  std::uint32_t aux = 0;  // native: per-source index
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t != b.t) return a.t > b.t;
    return a.seq > b.seq;
  }
};

// Deterministic payload pattern so recovered natives can be checked against
// their origin without carrying extra bookkeeping.
inline std::vector<gf::Element> native_payload(NodeId src, std::uint32_t index,
                                               std::uint32_t bytes) {
  std::vector<gf::Element> p(bytes);
  for (std::uint32_t i = 0; i < bytes; ++i)
    p[i] = gf::Element((src * 31u + index * 17u + i * 7u + 11u) & 0xFFu);
  return p;
}

class Engine {
 public:
  Engine(const SimConfig& cfg, const TopologySnapshot* fixed_topology)
      : cfg_(cfg), rng_(cfg.seed) {
    if (cfg.nodes < 2) throw std::invalid_argument("need at least two nodes");
    if (cfg.sources < 1 || cfg.sources > cfg.nodes)
      throw std::invalid_argument("source count out of range");
    if (cfg.lambda <= 0.0 || cfg.duration <= 0.0)
      throw std::invalid_argument("lambda and duration must be positive");
    if (cfg.loss < 0.0 || cfg.loss > 1.0)
      throw std::invalid_argument("loss must be a probability");
    if (cfg.warm_up < 0.0 || cfg.warm_up >= cfg.duration)
      throw std::invalid_argument("warm_up must lie inside the run");
    if (cfg.generation_size < 1)
      throw std::invalid_argument("generation_size must be positive");
    if (cfg.payload_bytes < 1)
      throw std::invalid_argument("payload_bytes must be positive");
    if (cfg.policy.kind == ForwardingPolicy::Kind::probabilistic &&
        (cfg.policy.omega < 0.0 || cfg.policy.omega > 1.0))
      throw std::invalid_argument("omega must be a probability");
    if (fixed_topology) {
      if (fixed_topology->n() != cfg.nodes)
        throw std::invalid_argument("fixed topology size mismatch");
      topo_ = *fixed_topology;
    } else {
      topo_ = generate_rgg(cfg.nodes, cfg.a_hat, cfg.range, rng_);
    }
    initial_ = topo_;
    view_ = topo_;
    if (cfg.mobility == SimConfig::Mobility::waypoint)
      mob_.emplace(cfg.nodes, topo_.side, cfg.mobility_cfg,
                   cfg.seed ^ 0xA5A5A5A55A5A5A5Aull);
    states_.resize(cfg.nodes);
    for (std::uint32_t i = 0; i < cfg.nodes; ++i) states_[i].id = i;
  }

  RunResult run() {
    schedule_natives();
    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      advance_to(ev.t);
      if (ev.kind == detail::Event::Kind::native)
        handle_native(ev);
      else
        handle_arrival(ev);
    }
    RunResult res;
    res.topology = std::move(initial_);
    res.metrics = delivery_accounting(log_, cfg_.nodes, cfg_.warm_up);
    res.log = std::move(log_);
    return res;
  }

 private:
  void schedule_natives() {
    for (NodeId s = 0; s < cfg_.sources; ++s) {
      const double phase = rng_.uniform() / cfg_.lambda;
      std::uint32_t k = 0;
      for (double t = phase; t < cfg_.duration; t += 1.0 / cfg_.lambda, ++k)
        push({t, 0, Event::Kind::native, s, 0, nullptr, k});
    }
  }

  void push(Event ev) {
    ev.seq = ++seq_;
    queue_.push(std::move(ev));
  }

  // Mobility and the neighbor view are advanced lazily, between events.
  void advance_to(double t) {
    if (mob_) {
      while (cfg_.view == SimConfig::View::hello && next_hello_ <= t) {
        step_positions(next_hello_);
        recompute_adjacency(topo_);
        adjacency_fresh_ = true;
        view_ = topo_;
        next_hello_ += cfg_.hello_interval;
      }
      step_positions(t);
    }
    now_ = t;
  }

  void step_positions(double t) {
    if (t <= mob_time_) return;
    mob_->advance(topo_, t - mob_time_);
    mob_time_ = t;
    adjacency_fresh_ = false;
  }

  const TopologySnapshot& current_view() {
    if (cfg_.view == SimConfig::View::oracle) {
      refresh_adjacency();
      return topo_;
    }
    return view_;
  }

  void refresh_adjacency() {
    if (!adjacency_fresh_) {
      recompute_adjacency(topo_);
      adjacency_fresh_ = true;
    }
  }

  void handle_native(const Event& ev) {
    NativePacket native;
    native.source = ev.node;
    native.creation_time = ev.t;
    native.payload = native_payload(ev.node, ev.aux, cfg_.payload_bytes);
    auto [gid, pkt] = source_emit(states_[ev.node], native, cfg_.policy,
                                  current_view(), ev.t, rng_,
                                  cfg_.generation_size);
    natives_.emplace(std::make_pair(gid, ev.node), std::move(native));
    log_.records.push_back({ev.t, RecordKind::native, ev.node, 0, gid, ev.node,
                            0, ev.aux});
    note_deliveries(ev.node, gid, states_[ev.node].matrices[gid]);
    transmit(ev.node, std::move(pkt), true);
  }

  void handle_arrival(const Event& ev) {
    NodeState& st = states_[ev.node];
    ReceiveOutcome out;
    if (cfg_.policy.kind == ForwardingPolicy::Kind::rldp)
      out = rldp_on_receive(st, *ev.pkt, ev.prev, current_view(), ev.t, rng_);
    else
      out = baseline_on_receive(st, *ev.pkt, cfg_.policy, ev.t, rng_);
    std::uint8_t flags = out.innovative ? 1u : 0u;
    flags |= std::uint8_t(static_cast<int>(out.action)) << 1;
    log_.records.push_back({ev.t, RecordKind::rx, ev.node, ev.prev,
                            ev.pkt->generation, ev.pkt->origin_source, flags,
                            0});
    if (out.innovative)
      note_deliveries(ev.node, ev.pkt->generation,
                      st.matrices[ev.pkt->generation]);
    if (out.tx) transmit(ev.node, std::move(*out.tx), false);
  }

  // Record first-time decodes of other sources' natives and verify the
  // recovered payload byte for byte against what the origin injected.
  void note_deliveries(NodeId node, GenerationId gen,
                       const DecodingMatrix& m) {
    for (NodeId src : m.decoded_sources()) {
      if (src == node) continue;
      const std::uint64_t key =
          (std::uint64_t(gen) << 40) ^ (std::uint64_t(node) << 20) ^ src;
      if (!delivered_.insert(key).second) continue;
      const auto it = natives_.find({gen, src});
      if (it == natives_.end()) continue;  // decoded before origin logged: impossible
      const std::vector<gf::Element>* got = m.payload_of(src);
      const bool ok = got && *got == it->second.payload;
      log_.records.push_back({now_, RecordKind::decode, node, src, gen, src,
                              std::uint8_t(ok ? 1 : 0), 0});
    }
  }

  void transmit(NodeId from, EncodedPacket pkt, bool is_source) {
    log_.records.push_back({now_, RecordKind::tx, from, 0, pkt.generation,
                            pkt.origin_source,
                            std::uint8_t(is_source ? 1 : 0),
                            std::uint32_t(pkt.forwarders.size())});
    refresh_adjacency();
    auto shared = std::make_shared<const EncodedPacket>(std::move(pkt));
    for (NodeId u : topo_.adj[from]) {
      if (rng_.bernoulli(cfg_.loss)) continue;
      double delay = cfg_.hop_latency;
      if (cfg_.hop_jitter > 0.0) delay += rng_.uniform(0.0, cfg_.hop_jitter);
      push({now_ + delay, 0, Event::Kind::arrival, u, from, shared, 0});
    }
  }

  SimConfig cfg_;
  Rng rng_;
  TopologySnapshot topo_;     // live positions, adjacency refreshed on demand
  TopologySnapshot initial_;  // as generated, returned with the result
  TopologySnapshot view_;     // what forwarder election sees in hello mode
  std::optional<WaypointMobility> mob_;
  std::vector<NodeState> states_;
  std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  double mob_time_ = 0.0;
  double next_hello_ = 0.0;
  bool adjacency_fresh_ = true;
  EventLog log_;
  std::map<std::pair<GenerationId, NodeId>, NativePacket> natives_;
  std::unordered_set<std::uint64_t> delivered_;
};

}  // namespace detail

// Runs one simulation to completion. When fixed_topology is given it
// overrides random placement (sizes must agree); mobility still applies.
inline RunResult run_simulation(const SimConfig& cfg,
                                const TopologySnapshot* fixed_topology = nullptr) {
  detail::Engine engine(cfg, fixed_topology);
  return engine.run();
}

}  // namespace rldp
