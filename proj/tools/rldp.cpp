// Command-line front end: `simulate` runs replicated broadcast experiments
// from a config file, `analyze` tabulates the analytic delivery model, and
// `validate-pmf` fits the copy-count law against stratified simulation.
// Exit codes: 0 success, 2 bad usage or configuration, 3 runtime failure.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "rldp/experiment.hpp"

namespace {

namespace fs = std::filesystem;

rldp::ConfigMap load_config(const std::string& path) {
  if (path.empty()) return rldp::ConfigMap::parse_string("");
  return rldp::ConfigMap::parse_file(path);
}

std::vector<double> double_list(const rldp::ConfigMap& cm,
                                const std::string& key,
                                const std::vector<double>& dflt) {
  if (!cm.has(key)) return dflt;
  std::vector<double> out;
  for (const std::string& v : rldp::split_list(cm.get_str(key, "")))
    out.push_back(rldp::ConfigMap::to_double(key, v));
  if (out.empty()) throw rldp::ConfigError("key " + key + ": empty list");
  return out;
}

std::vector<std::uint32_t> count_list(const rldp::ConfigMap& cm,
                                      const std::string& key,
                                      const std::vector<std::uint32_t>& dflt) {
  if (!cm.has(key)) return dflt;
  std::vector<std::uint32_t> out;
  for (const std::string& v : rldp::split_list(cm.get_str(key, "")))
    out.push_back(std::uint32_t(rldp::ConfigMap::to_u64(key, v)));
  if (out.empty()) throw rldp::ConfigError("key " + key + ": empty list");
  return out;
}

void reject_unknown(const rldp::ConfigMap& cm, const std::string& section,
                    const std::vector<std::string>& known) {
  for (const auto& [key, value] : cm.entries()) {
    (void)value;
    if (key.rfind(section + ".", 0) != 0) continue;
    const std::string bare = key.substr(section.size() + 1);
    bool ok = false;
    for (const std::string& k : known) ok = ok || k == bare;
    if (!ok) throw rldp::ConfigError("unknown key " + key);
  }
}

void emit(const std::string& out_dir, const std::string& name,
          const std::string& content) {
  if (out_dir.empty()) {
    std::fputs(content.c_str(), stdout);
    return;
  }
  fs::create_directories(out_dir);
  rldp::write_file_atomic(fs::path(out_dir) / name, content);
  std::printf("wrote %s\n", (fs::path(out_dir) / name).string().c_str());
}

int run_simulate(const std::string& cfg_path, const std::string& out_dir,
                 const std::uint64_t* seed, unsigned jobs) {
  rldp::ExperimentSpec spec =
      rldp::load_experiment(rldp::ConfigMap::parse_file(cfg_path));
  if (seed) spec.base.seed = *seed;
  const rldp::ExperimentReport report = rldp::run_experiment(spec, jobs);
  rldp::write_report(report, out_dir, jobs);
  for (std::size_t p = 0; p < report.points.size(); ++p) {
    const rldp::PointResult& pt = report.points[p];
    std::string label;
    for (const auto& [key, value] : pt.overrides)
      label += " " + key + "=" + value;
    std::printf("point %zu%s: delivery %.4f +-%.4f, forwards/native %.2f "
                "+-%.2f, mean delay %.4fs\n",
                p, label.c_str(), pt.pdr.mean, pt.pdr.half_width,
                pt.forwards.mean, pt.forwards.half_width, pt.delay.mean);
  }
  std::printf("report written to %s\n", out_dir.c_str());
  return 0;
}

int run_analyze(const std::string& cfg_path, const std::string& out_dir) {
  const rldp::ConfigMap cm = load_config(cfg_path);
  reject_unknown(cm, "analyze", {"phi", "omega", "rho", "n", "g"});
  const std::vector<double> phis = double_list(cm, "analyze.phi", {0.1, 0.3});
  const std::vector<double> omegas =
      double_list(cm, "analyze.omega", {1.0, 0.9, 0.7, 0.5});
  const std::vector<double> rhos = double_list(cm, "analyze.rho", {0.0, 0.2});
  std::vector<std::uint32_t> default_n;
  for (std::uint32_t n = 2; n <= 14; ++n) default_n.push_back(n);
  const std::vector<std::uint32_t> ns = count_list(cm, "analyze.n", default_n);
  const std::uint32_t g = std::uint32_t(cm.get_u64("analyze.g", 30));

  std::string csv = "phi,omega,rho,n,g,delivery_rlnc,delivery_xor\n";
  char line[160];
  for (double phi : phis)
    for (double omega : omegas)
      for (double rho : rhos)
        for (std::uint32_t n : ns) {
          const rldp::CopyPmf pmf = rldp::copy_pmf(phi, omega, rho, n);
          std::snprintf(line, sizeof line, "%g,%g,%g,%u,%u,%.9f,%.9f\n", phi,
                        omega, rho, n, g, rldp::expected_delivery_rlnc(pmf, g),
                        rldp::expected_delivery_xor(pmf));
          csv += line;
        }
  emit(out_dir, "delivery.csv", csv);
  return 0;
}

int run_validate_pmf(const std::string& cfg_path, const std::string& out_dir,
                     const std::uint64_t* seed, unsigned jobs) {
  const rldp::ConfigMap cm = load_config(cfg_path);
  reject_unknown(cm, "pmf",
                 {"nodes", "a_hat", "density", "omega", "rho", "trials",
                  "hops", "degrees", "seed"});
  const std::uint32_t nodes = std::uint32_t(cm.get_u64("pmf.nodes", 100));
  double a_hat = cm.get_double("pmf.a_hat", 4.0);
  if (cm.has("pmf.density")) {
    const std::string d = cm.get_str("pmf.density", "");
    if (d == "dense") a_hat = rldp::kDenseSide;
    else if (d == "sparse") a_hat = rldp::kSparseSide;
    else throw rldp::ConfigError("pmf.density must be dense or sparse");
  }
  const double omega = cm.get_double("pmf.omega", 0.9);
  const double rho = cm.get_double("pmf.rho", 0.0);
  const std::uint64_t trials = cm.get_u64("pmf.trials", 100000);
  const std::vector<std::uint32_t> hops = count_list(cm, "pmf.hops", {2, 3, 5});
  const std::vector<std::uint32_t> degrees = count_list(cm, "pmf.degrees", {6});
  std::uint64_t base_seed = cm.get_u64("pmf.seed", 1);
  if (seed) base_seed = *seed;
  if (trials < 1) throw rldp::ConfigError("pmf.trials must be at least 1");

  // fixed chunking so the result depends on the seed, not the thread count
  constexpr unsigned kChunks = 8;
  std::vector<rldp::CopyStats> parts(kChunks);
  std::atomic<unsigned> next{0};
  const auto worker = [&] {
    for (;;) {
      const unsigned c = next.fetch_add(1);
      if (c >= kChunks) return;
      const std::uint64_t share =
          trials / kChunks + (c < trials % kChunks ? 1 : 0);
      parts[c] = rldp::mc_copy_distribution(
          nodes, a_hat, omega, rho, share,
          base_seed ^ (0x9E3779B97F4A7C15ull * (c + 1)));
    }
  };
  {
    std::vector<std::thread> pool;
    const unsigned t = std::min(kChunks, std::max(1u, jobs));
    for (unsigned j = 0; j < t; ++j) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  rldp::CopyStats stats = parts[0];
  for (unsigned c = 1; c < kChunks; ++c) {
    stats.trials += parts[c].trials;
    for (const auto& [key, hist] : parts[c].strata) {
      auto& dst = stats.strata[key];
      if (dst.size() < hist.size()) dst.resize(hist.size(), 0);
      for (std::size_t k = 0; k < hist.size(); ++k) dst[k] += hist[k];
    }
  }

  std::string csv = "omega,a_hat,hops,degree,samples,phi_hat,d_tv\n";
  char line[160];
  for (std::uint32_t h : hops)
    for (std::uint32_t deg : degrees) {
      try {
        const rldp::PmfFit fit = rldp::fit_stratum(stats, int(h), int(deg));
        std::snprintf(line, sizeof line, "%g,%g,%u,%u,%llu,%.6f,%.6f\n", omega,
                      a_hat, h, deg, (unsigned long long)fit.samples,
                      fit.phi_hat, fit.d_tv);
        csv += line;
      } catch (const std::out_of_range&) {
        std::fprintf(stderr,
                     "note: no samples for hops=%u degree=%u at %llu trials\n",
                     h, deg, (unsigned long long)trials);
      }
    }
  emit(out_dir, "pmf_fit.csv", csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wireless broadcast simulator and delivery-model toolkit"};
  app.require_subcommand(1);

  std::string cfg_path, out_dir = "out", table_out;
  std::uint64_t seed = 0;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  CLI::App* sim = app.add_subcommand(
      "simulate", "run a replicated, swept broadcast experiment");
  sim->add_option("--config", cfg_path, "experiment config file")->required();
  sim->add_option("--out", out_dir, "report directory (default: out)");
  CLI::Option* sim_seed =
      sim->add_option("--seed", seed, "override the base seed");
  sim->add_option("--jobs", jobs, "worker threads");

  CLI::App* an = app.add_subcommand(
      "analyze", "tabulate the analytic delivery model over parameter grids");
  an->add_option("--config", cfg_path, "config file with an [analyze] section");
  an->add_option("--out", table_out, "directory for delivery.csv (default: stdout)");

  CLI::App* vp = app.add_subcommand(
      "validate-pmf", "fit the copy-count law to stratified flood simulations");
  vp->add_option("--config", cfg_path, "config file with a [pmf] section");
  vp->add_option("--out", table_out, "directory for pmf_fit.csv (default: stdout)");
  CLI::Option* vp_seed = vp->add_option("--seed", seed, "override the seed");
  vp->add_option("--jobs", jobs, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed())
      return run_simulate(cfg_path, out_dir, sim_seed->count() ? &seed : nullptr,
                          jobs);
    if (an->parsed()) return run_analyze(cfg_path, table_out);
    return run_validate_pmf(cfg_path, table_out,
                            vp_seed->count() ? &seed : nullptr, jobs);
  } catch (const rldp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::logic_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
