#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rldp/analysis.hpp"

using rldp::CopyPmf;
using rldp::Rng;

namespace {

// Process-level oracle for the delivery model: simulate the rank recursion
// z_k = min(z_{k-1} + X_k, k) directly, with X_k drawn from the mixture copy
// law (zero copies with probability phi, else Binomial(n, omega_eff)), and
// average the last slot at which the matrix was full. Shares nothing with
// the matrix-product implementation under test.
double mc_delivery(double phi, double omega, double rho, std::uint32_t n,
                   std::uint32_t g, std::uint64_t trials, std::uint64_t seed) {
  Rng rng(seed);
  const double q = omega * (1.0 - rho);
  double acc = 0.0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    std::uint32_t z = 0, last_full = 0;
    for (std::uint32_t k = 1; k <= g; ++k) {
      std::uint32_t x = 0;
      if (!rng.bernoulli(phi))
        for (std::uint32_t i = 0; i < n; ++i) x += rng.bernoulli(q);
      z = std::min(z + x, k);
      if (z == k) last_full = k;
    }
    acc += double(last_full) / double(g);
  }
  return acc / double(trials);
}

}  // namespace

TEST_CASE("copy pmf matches hand-computed mixtures", "[analysis]") {
  // n=2, phi=0.5, omega=0.6, rho=0.5: all-or-nothing neighborhood, then
  // per-neighbor success 0.3
  const CopyPmf pmf = rldp::copy_pmf(0.5, 0.6, 0.5, 2);
  CHECK(pmf.omega_eff() == Catch::Approx(0.3));
  REQUIRE(pmf.p.size() == 3);
  CHECK(pmf.p[0] == Catch::Approx(0.5 + 0.5 * 0.49));
  CHECK(pmf.p[1] == Catch::Approx(0.5 * 2.0 * 0.3 * 0.7));
  CHECK(pmf.p[2] == Catch::Approx(0.5 * 0.09));

  // with phi = 0 the law is plain binomial; the C(n,k) factor shows at n=3
  const CopyPmf p3 = rldp::copy_pmf(0.0, 0.5, 0.0, 3);
  CHECK(p3.p[1] == Catch::Approx(3.0 * 0.5 * 0.25));

  // phi = 1 starves the neighborhood regardless of omega
  const CopyPmf starved = rldp::copy_pmf(1.0, 1.0, 0.0, 4);
  CHECK(starved.p[0] == Catch::Approx(1.0));

  // lossless: mass splits between nobody and everybody
  const CopyPmf bimodal = rldp::copy_pmf(0.1, 0.5, 0.0, 2);
  CHECK(bimodal.p[0] == Catch::Approx(0.325));
  CHECK(bimodal.p[1] == Catch::Approx(0.45));
  CHECK(bimodal.p[2] == Catch::Approx(0.225));
  CHECK(rldp::fit_phi(0.325, 0.5, 2) == Catch::Approx(0.1));

  const CopyPmf allon = rldp::copy_pmf(0.3, 1.0, 0.0, 5);
  CHECK(allon.p[0] == Catch::Approx(0.3));
  CHECK(allon.p[5] == Catch::Approx(0.7));

  // zero neighbors: nothing can arrive
  const CopyPmf lonely = rldp::copy_pmf(0.5, 1.0, 0.0, 0);
  REQUIRE(lonely.p.size() == 1);
  CHECK(lonely.p[0] == 1.0);

  for (std::uint32_t n : {1u, 2u, 5u, 17u}) {
    const CopyPmf p = rldp::copy_pmf(0.37, 0.81, 0.12, n);
    double sum = 0.0;
    for (double v : p.p) sum += v;
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  }

  CHECK_THROWS_AS(rldp::copy_pmf(1.1, 1.0, 0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(rldp::copy_pmf(0.5, -0.1, 0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(rldp::copy_pmf(0.5, 1.0, 2.0, 2), std::invalid_argument);
}

TEST_CASE("phi fitting inverts the zero-copy probability", "[analysis]") {
  for (double phi : {0.05, 0.3, 0.7, 0.95})
    for (double oe : {0.2, 0.5, 0.9, 1.0})
      for (std::uint32_t n : {1u, 3u, 8u, 20u}) {
        const double miss = std::pow(1.0 - oe, double(n));
        const double p0 = phi + (1.0 - phi) * miss;
        CHECK(rldp::fit_phi(p0, oe, n) == Catch::Approx(phi).margin(1e-10));
      }
  // noise beyond the representable range clamps instead of extrapolating
  CHECK(rldp::fit_phi(0.0, 0.5, 3) == 0.0);   // below the floor (1-oe)^n
  CHECK(rldp::fit_phi(0.05, 0.5, 3) == 0.0);
  CHECK(rldp::fit_phi(1.0, 0.5, 3) == 1.0);
  CHECK_THROWS_AS(rldp::fit_phi(0.5, 0.0, 3), std::domain_error);
  CHECK_THROWS_AS(rldp::fit_phi(1.5, 0.5, 3), std::invalid_argument);
}

TEST_CASE("total variation distance", "[analysis]") {
  CHECK(rldp::total_variation({1.0, 0.0}, {0.0, 1.0}) == 1.0);
  CHECK(rldp::total_variation({0.5, 0.5}, {0.25, 0.75}) == Catch::Approx(0.25));
  CHECK(rldp::total_variation({0.2, 0.8}, {0.2, 0.8}) == 0.0);
  CHECK_THROWS_AS(rldp::total_variation({1.0}, {0.5, 0.5}),
                  std::invalid_argument);
}

TEST_CASE("transition slots are stochastic with the right support",
          "[analysis]") {
  const CopyPmf pmf = rldp::copy_pmf(0.4, 0.9, 0.1, 4);
  const std::uint32_t g = 6;
  for (std::uint32_t k = 1; k <= g; ++k) {
    const auto t = rldp::transition_matrix(k, pmf, g);
    REQUIRE(t.size() == g + 1);
    for (std::uint32_t i = 0; i <= g; ++i) {
      double sum = 0.0;
      for (std::uint32_t j = 0; j <= g; ++j) {
        sum += t[i][j];
        if (j < i) CHECK(t[i][j] == 0.0);           // rank never decreases
        if (j > k && i < k) CHECK(t[i][j] == 0.0);  // ceiling at the slot
      }
      CHECK(sum == Catch::Approx(1.0).margin(1e-12));
      if (i >= k) CHECK(t[i][i] == 1.0);  // unreachable states just persist
    }
  }
  // slot 1 from empty: miss everything or catch the first native
  const auto t1 = rldp::transition_matrix(1, pmf, g);
  CHECK(t1[0][0] == Catch::Approx(pmf.p[0]));
  CHECK(t1[0][1] == Catch::Approx(1.0 - pmf.p[0]));

  // past the last native the chain freezes
  const auto frozen = rldp::transition_matrix(g + 1, pmf, g);
  for (std::uint32_t i = 0; i <= g; ++i)
    for (std::uint32_t j = 0; j <= g; ++j)
      CHECK(frozen[i][j] == (i == j ? 1.0 : 0.0));

  CHECK_THROWS_AS(rldp::transition_matrix(0, pmf, g), std::invalid_argument);
}

TEST_CASE("rank marginals stay normalized and match the lossless endpoint",
          "[analysis]") {
  const CopyPmf sure = rldp::copy_pmf(0.0, 1.0, 0.0, 3);
  const auto v = rldp::rank_marginals_at(sure, 5, 5);
  CHECK(v[5] == Catch::Approx(1.0));

  const CopyPmf pmf = rldp::copy_pmf(0.35, 0.7, 0.05, 4);
  for (std::uint32_t k : {0u, 1u, 3u, 6u}) {
    const auto m = rldp::rank_marginals_at(pmf, 6, k);
    double sum = 0.0;
    for (std::uint32_t r = 0; r < m.size(); ++r) {
      sum += m[r];
      if (r > k) CHECK(m[r] == 0.0);  // cannot exceed natives sent so far
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("delivery endpoints are exact", "[analysis]") {
  const CopyPmf sure = rldp::copy_pmf(0.0, 1.0, 0.0, 2);
  CHECK(rldp::expected_delivery_rlnc(sure, 8) == Catch::Approx(1.0));
  CHECK(rldp::expected_delivery_xor(sure) == Catch::Approx(1.0));

  const CopyPmf starved = rldp::copy_pmf(1.0, 0.9, 0.1, 3);
  CHECK(rldp::expected_delivery_rlnc(starved, 8) == Catch::Approx(0.0));
  CHECK(rldp::expected_delivery_xor(starved) == Catch::Approx(0.0));

  const CopyPmf silent = rldp::copy_pmf(0.2, 0.0, 0.0, 3);
  CHECK(rldp::expected_delivery_rlnc(silent, 8) == Catch::Approx(0.0));

  const CopyPmf hand = rldp::copy_pmf(0.5, 0.6, 0.5, 2);
  CHECK(rldp::expected_delivery_xor(hand) == Catch::Approx(1.0 - 0.745));
  CHECK(rldp::expected_delivery_xor(rldp::copy_pmf(0.1, 0.5, 0.0, 2)) ==
        Catch::Approx(0.675));
}

TEST_CASE("delivery model agrees with the process oracle", "[analysis]") {
  struct Point {
    double phi, omega, rho;
    std::uint32_t n, g;
  };
  int idx = 0;
  for (const Point& pt : {Point{0.3, 0.8, 0.1, 4, 10},
                          Point{0.7, 0.6, 0.0, 3, 8},
                          Point{0.15, 0.9, 0.2, 6, 12}}) {
    const CopyPmf pmf = rldp::copy_pmf(pt.phi, pt.omega, pt.rho, pt.n);
    const double exact = rldp::expected_delivery_rlnc(pmf, pt.g);
    const double mc = mc_delivery(pt.phi, pt.omega, pt.rho, pt.n, pt.g, 60000,
                                  7000 + idx++);
    INFO("phi=" << pt.phi << " omega=" << pt.omega << " rho=" << pt.rho);
    CHECK(exact == Catch::Approx(mc).margin(0.012));
    CHECK(exact >= 0.0);
    CHECK(exact <= 1.0);
  }
}

TEST_CASE("pruning degrades delivery through the stated omega ladder",
          "[analysis]") {
  // frozen values for phi=0.1, rho=0.2, n=2, g=30 (independently computed
  // by a reference implementation of the same chain)
  const double expected[4] = {0.9767, 0.9396, 0.5981, 0.1392};
  const double omegas[4] = {1.0, 0.9, 0.7, 0.5};
  double prev = 2.0;
  for (int i = 0; i < 4; ++i) {
    const CopyPmf pmf = rldp::copy_pmf(0.1, omegas[i], 0.2, 2);
    const double d = rldp::expected_delivery_rlnc(pmf, 30);
    CHECK(d == Catch::Approx(expected[i]).margin(1e-4));
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("coded delivery dominates one-shot forwarding at full gossip",
          "[analysis]") {
  for (double phi : {0.1, 0.3})
    for (double rho : {0.0, 0.2})
      for (std::uint32_t n : {2u, 5u, 8u, 11u, 14u}) {
        const CopyPmf pmf = rldp::copy_pmf(phi, 1.0, rho, n);
        INFO("phi=" << phi << " rho=" << rho << " n=" << n);
        CHECK(rldp::expected_delivery_rlnc(pmf, 30) >=
              rldp::expected_delivery_xor(pmf));
      }
}

TEST_CASE("simulated copy histograms populate and fit", "[analysis]") {
  const auto stats = rldp::mc_copy_distribution(30, 2.7, 0.7, 0.0, 1500, 99);
  CHECK(stats.trials == 1500);
  REQUIRE(!stats.strata.empty());
  std::uint64_t samples = 0;
  for (const auto& [key, hist] : stats.strata) {
    CHECK(key.first >= 1);
    CHECK(int(hist.size()) == key.second + 1);  // copies bounded by degree
    std::uint64_t tot = 0;
    for (std::uint64_t c : hist) tot += c;
    CHECK(tot > 0);
    samples += tot;
  }
  CHECK(samples <= stats.trials);  // unreachable destinations are skipped
  CHECK(samples > stats.trials / 2);

  // the densest stratum must produce a usable fit
  std::pair<int, int> best;
  std::uint64_t most = 0;
  for (const auto& [key, hist] : stats.strata) {
    std::uint64_t tot = 0;
    for (std::uint64_t c : hist) tot += c;
    if (tot > most) {
      most = tot;
      best = key;
    }
  }
  const auto fit = rldp::fit_stratum(stats, best.first, best.second);
  CHECK(fit.samples == most);
  CHECK(fit.phi_hat >= 0.0);
  CHECK(fit.phi_hat <= 1.0);
  CHECK(fit.d_tv >= 0.0);
  CHECK(fit.d_tv <= 1.0);
  CHECK(fit.empirical.size() == fit.model.size());
  CHECK_THROWS_AS(rldp::fit_stratum(stats, 999, 999), std::out_of_range);
}
