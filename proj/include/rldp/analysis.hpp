#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "rldp/sim.hpp"
#include "rldp/topology.hpp"

namespace rldp {

// Number of copies of one native that reach a fixed node with n neighbors
// under gossip relaying with forward probability omega and link erasure rho.
// With probability phi the packet never takes hold in the neighborhood at
// all (zero copies); otherwise every neighbor holds it and independently
// gets a copy through with probability omega * (1 - rho).
struct CopyPmf {
  double phi = 0.0;  // P{packet absent from the whole neighborhood}
  double omega = 1.0;
  double rho = 0.0;
  std::uint32_t n = 0;
  std::vector<double> p;  // p[k] = P{X = k}, k = 0..n

  double omega_eff() const { return omega * (1.0 - rho); }
};

inline CopyPmf copy_pmf(double phi, double omega, double rho, std::uint32_t n) {
  if (phi < 0.0 || phi > 1.0) throw std::invalid_argument("phi out of [0,1]");
  if (omega < 0.0 || omega > 1.0)
    throw std::invalid_argument("omega out of [0,1]");
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("rho out of [0,1]");
  CopyPmf out;
  out.phi = phi;
  out.omega = omega;
  out.rho = rho;
  out.n = n;
  const double q = out.omega_eff();
  out.p.assign(n + 1, 0.0);
  double binom = 1.0;  // C(n, k), updated multiplicatively
  for (std::uint32_t k = 0; k <= n; ++k) {
    out.p[k] = (1.0 - phi) * binom * std::pow(q, double(k)) *
               std::pow(1.0 - q, double(n - k));
    binom = binom * double(n - k) / double(k + 1);
  }
  out.p[0] += phi;
  return out;
}

// Inverts P{X = 0} = phi + (1 - phi) * (1 - omega_eff)^n for phi, given an
// observed zero-copy probability. Degenerate when omega_eff is 0 (then every
// phi predicts p0 = 1). Clamped to [0, 1]: sampling noise can push the raw
// estimate slightly outside.
inline double fit_phi(double p0, double omega_eff, std::uint32_t n) {
  if (n < 1) throw std::invalid_argument("need at least one neighbor");
  if (omega_eff <= 0.0 || omega_eff > 1.0)
    throw std::domain_error("omega_eff must be in (0,1]");
  if (p0 < 0.0 || p0 > 1.0) throw std::invalid_argument("p0 out of [0,1]");
  const double miss = std::pow(1.0 - omega_eff, double(n));
  const double denom = 1.0 - miss;
  if (denom <= 0.0) throw std::domain_error("zero-copy law is degenerate");
  const double phi = (p0 - miss) / denom;
  return phi < 0.0 ? 0.0 : (phi > 1.0 ? 1.0 : phi);
}

inline double total_variation(const std::vector<double>& a,
                              const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return 0.5 * s;
}

// ----- rank-evolution chain ------------------------------------------------

using Matrix = std::vector<std::vector<double>>;

// One slot of the rank process at a node: the rank Z_k after k natives have
// entered a generation of size g, given Z_{k-1} = i. A node that is already
// full for the first k - 1 natives (i = k - 1) gains the k-th dimension
// exactly when at least one copy arrives; a node behind by k - 1 - i can
// catch up by at most the X_k copies it receives, and recodes it hears are
// innovative until it reaches the ceiling k.
inline Matrix transition_matrix(std::uint32_t k, const CopyPmf& pmf,
                                std::uint32_t g) {
  if (k < 1) throw std::invalid_argument("slot index starts at 1");
  const std::uint32_t n = pmf.n;
  Matrix t(g + 1, std::vector<double>(g + 1, 0.0));
  if (k > g) {  // generation is closed, no native enters: nothing moves
    for (std::uint32_t i = 0; i <= g; ++i) t[i][i] = 1.0;
    return t;
  }
  for (std::uint32_t i = 0; i <= g; ++i) {
    if (i >= k) {  // states above the current ceiling cannot be occupied
      t[i][i] = 1.0;
      continue;
    }
    for (std::uint32_t j = i; j <= k; ++j) {
      const std::uint32_t need = j - i;
      if (j < k) {
        if (need <= n) t[i][j] = pmf.p[need];
      } else {
        double tail = 0.0;
        for (std::uint32_t c = need; c <= n; ++c) tail += pmf.p[c];
        t[i][j] = tail;
      }
    }
  }
  return t;
}

// P{Z_k = r} for r = 0..g after the k-th native, starting from rank 0.
inline std::vector<double> rank_marginals_at(const CopyPmf& pmf,
                                             std::uint32_t g, std::uint32_t k) {
  if (k > g) throw std::invalid_argument("slot out of range");
  std::vector<double> v(g + 1, 0.0);
  v[0] = 1.0;
  for (std::uint32_t step = 1; step <= k; ++step) {
    const Matrix t = transition_matrix(step, pmf, g);
    std::vector<double> nv(g + 1, 0.0);
    for (std::uint32_t i = 0; i <= g; ++i) {
      if (v[i] == 0.0) continue;
      for (std::uint32_t j = 0; j <= g; ++j) nv[j] += v[i] * t[i][j];
    }
    v = std::move(nv);
  }
  return v;
}

// Expected fraction of a generation a node decodes: the node recovers
// exactly k natives when the rank process is full at slot k (Z_k = k) and
// never returns to the full diagonal afterwards. The survival factor is
// computed by propagating the chain forward from slot k with the full state
// removed at every later slot.
inline double expected_delivery_rlnc(const CopyPmf& pmf, std::uint32_t g) {
  if (g < 1) throw std::invalid_argument("generation size must be positive");
  std::vector<Matrix> slot(g + 1);
  for (std::uint32_t k = 1; k <= g; ++k) slot[k] = transition_matrix(k, pmf, g);

  std::vector<double> v(g + 1, 0.0);
  v[0] = 1.0;
  double total = 0.0;
  for (std::uint32_t k = 1; k <= g; ++k) {
    // advance the marginal to slot k
    std::vector<double> nv(g + 1, 0.0);
    for (std::uint32_t i = 0; i <= g; ++i) {
      if (v[i] == 0.0) continue;
      for (std::uint32_t j = 0; j <= g; ++j) nv[j] += v[i] * slot[k][i][j];
    }
    v = std::move(nv);

    double weight = v[k];  // P{Z_k = k}
    if (weight > 0.0) {
      if (k == g) {
        total += double(k) * weight;
      } else {
        // survival: never full again at slots k+1..g
        std::vector<double> w(g + 1, 0.0);
        w[k] = 1.0;
        for (std::uint32_t step = k + 1; step <= g; ++step) {
          std::vector<double> nw(g + 1, 0.0);
          for (std::uint32_t i = 0; i <= g; ++i) {
            if (w[i] == 0.0) continue;
            for (std::uint32_t j = 0; j <= g; ++j) nw[j] += w[i] * slot[step][i][j];
          }
          nw[step] = 0.0;  // taboo: reaching full rank here ends the excursion
          w = std::move(nw);
        }
        double survive = 0.0;
        for (double x : w) survive += x;
        total += double(k) * weight * survive;
      }
    }
  }
  return total / double(g);
}

// Uncoded baseline: a native is delivered iff at least one copy arrives.
inline double expected_delivery_xor(const CopyPmf& pmf) {
  return 1.0 - pmf.p[0];
}

// ----- Monte Carlo copy distribution ---------------------------------------

// Copy-count histograms from full gossip simulations, grouped by the
// destination's hop distance from the source and its degree. One native is
// injected at node 0 of a fresh placement per trial; the count of arrivals
// at a uniformly chosen other node is one sample.
struct CopyStats {
  std::uint32_t nodes = 0;
  double a_hat = 0.0;
  double omega = 0.0;
  double rho = 0.0;
  std::uint64_t trials = 0;
  // (hop distance, degree) -> histogram over copy counts 0..degree
  std::map<std::pair<int, int>, std::vector<std::uint64_t>> strata;
};

inline CopyStats mc_copy_distribution(std::uint32_t nodes, double a_hat,
                                      double omega, double rho,
                                      std::uint64_t trials,
                                      std::uint64_t seed) {
  CopyStats stats;
  stats.nodes = nodes;
  stats.a_hat = a_hat;
  stats.omega = omega;
  stats.rho = rho;
  stats.trials = trials;

  Rng master(seed);
  SimConfig cfg;
  cfg.nodes = nodes;
  cfg.a_hat = a_hat;
  cfg.sources = 1;
  cfg.lambda = 10.0;
  cfg.duration = 0.1;  // one native from node 0, then the wave drains
  cfg.loss = rho;
  cfg.hop_jitter = 0.0;
  cfg.payload_bytes = 1;
  cfg.generation_size = 1;
  cfg.policy.kind = ForwardingPolicy::Kind::probabilistic;
  cfg.policy.omega = omega;

  for (std::uint64_t t = 0; t < trials; ++t) {
    const TopologySnapshot topo = generate_rgg(nodes, a_hat, cfg.range, master);
    const NodeId dest = 1 + NodeId(master.uniform_below(nodes - 1));
    const int h = hop_distance(topo, 0, dest);
    cfg.seed = master.next();
    const RunResult run = run_simulation(cfg, &topo);
    if (h < 1) continue;  // unreachable destination, no copy law to sample
    std::uint32_t copies = 0;
    for (const LogRecord& r : run.log.records)
      if (r.kind == RecordKind::rx && r.node == dest) ++copies;
    const int deg = int(topo.adj[dest].size());
    auto& hist = stats.strata[{h, deg}];
    if (hist.empty()) hist.assign(std::size_t(deg) + 1, 0);
    ++hist[copies];
  }
  return stats;
}

// Fit of the analytic copy law to one stratum histogram.
struct PmfFit {
  int hops = 0;
  int degree = 0;
  std::uint64_t samples = 0;
  double phi_hat = 0.0;
  double d_tv = 0.0;
  std::vector<double> empirical;
  std::vector<double> model;
};

inline PmfFit fit_stratum(const CopyStats& stats, int hops, int degree) {
  const auto it = stats.strata.find({hops, degree});
  if (it == stats.strata.end() || it->second.empty())
    throw std::out_of_range("no samples in stratum");
  PmfFit fit;
  fit.hops = hops;
  fit.degree = degree;
  std::uint64_t total = 0;
  for (std::uint64_t c : it->second) total += c;
  fit.samples = total;
  fit.empirical.resize(it->second.size());
  for (std::size_t k = 0; k < it->second.size(); ++k)
    fit.empirical[k] = double(it->second[k]) / double(total);
  const double omega_eff = stats.omega * (1.0 - stats.rho);
  fit.phi_hat = fit_phi(fit.empirical[0], omega_eff, std::uint32_t(degree));
  fit.model =
      copy_pmf(fit.phi_hat, stats.omega, stats.rho, std::uint32_t(degree)).p;
  fit.d_tv = total_variation(fit.empirical, fit.model);
  return fit;
}

}  // namespace rldp
