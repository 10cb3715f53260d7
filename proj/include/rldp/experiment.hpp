#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rldp/analysis.hpp"
#include "rldp/sim.hpp"

namespace rldp {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Minimal INI-style configuration: [section] headers, key = value lines,
// '#' or ';' comments, blank lines ignored. Keys are stored flattened as
// "section.key". Unknown sections or keys are rejected by the loaders, not
// by the parser.
class ConfigMap {
 public:
  static ConfigMap parse_string(const std::string& text) {
    ConfigMap cm;
    std::string section;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("line " + std::to_string(lineno) +
                            ": unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty())
          throw ConfigError("line " + std::to_string(lineno) +
                            ": empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) +
                          ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      cm.kv_[full] = value;  // reassignment allowed, last one wins
    }
    return cm;
  }

  static ConfigMap parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_str(const std::string& key, const std::string& dflt) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
  }

  double get_double(const std::string& key, double dflt) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    return to_double(key, it->second);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    return to_u64(key, it->second);
  }

  static double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      throw ConfigError("key " + key + ": not a number: " + v);
    }
    if (used != v.size())
      throw ConfigError("key " + key + ": trailing junk in number: " + v);
    return x;
  }

  static std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    unsigned long long x = 0;
    try {
      x = std::stoull(v, &used);
    } catch (const std::exception&) {
      throw ConfigError("key " + key + ": not a count: " + v);
    }
    if (used != v.size() || v.find('-') != std::string::npos)
      throw ConfigError("key " + key + ": not a count: " + v);
    return x;
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }
  std::map<std::string, std::string> kv_;
};

// Applies one "sim.*" key to a configuration. Shared between base loading
// and sweep overrides so both accept exactly the same vocabulary.
inline void apply_sim_key(SimConfig& cfg, const std::string& key,
                          const std::string& value) {
  const auto num = [&] { return ConfigMap::to_double("sim." + key, value); };
  const auto cnt = [&] { return ConfigMap::to_u64("sim." + key, value); };
  if (key == "nodes") cfg.nodes = std::uint32_t(cnt());
  else if (key == "density") {
    if (value == "dense") cfg.a_hat = kDenseSide;
    else if (value == "sparse") cfg.a_hat = kSparseSide;
    else throw ConfigError("sim.density must be dense or sparse");
  }
  else if (key == "a_hat") cfg.a_hat = num();
  else if (key == "range") cfg.range = num();
  else if (key == "sources") cfg.sources = std::uint32_t(cnt());
  else if (key == "lambda") cfg.lambda = num();
  else if (key == "duration") cfg.duration = num();
  else if (key == "warm_up") cfg.warm_up = num();
  else if (key == "loss") cfg.loss = num();
  else if (key == "hop_latency") cfg.hop_latency = num();
  else if (key == "hop_jitter") cfg.hop_jitter = num();
  else if (key == "generation_size") cfg.generation_size = std::uint32_t(cnt());
  else if (key == "payload_bytes") cfg.payload_bytes = std::uint32_t(cnt());
  else if (key == "policy") {
    if (value == "rldp") cfg.policy.kind = ForwardingPolicy::Kind::rldp;
    else if (value == "flooding")
      cfg.policy.kind = ForwardingPolicy::Kind::flooding;
    else if (value == "probabilistic")
      cfg.policy.kind = ForwardingPolicy::Kind::probabilistic;
    else throw ConfigError("sim.policy must be rldp, flooding or probabilistic");
  }
  else if (key == "omega") cfg.policy.omega = num();
  else if (key == "mobility") {
    if (value == "static") cfg.mobility = SimConfig::Mobility::static_nodes;
    else if (value == "waypoint") cfg.mobility = SimConfig::Mobility::waypoint;
    else throw ConfigError("sim.mobility must be static or waypoint");
  }
  else if (key == "speed_min") cfg.mobility_cfg.v_min = num();
  else if (key == "speed_max") cfg.mobility_cfg.v_max = num();
  else if (key == "pause") cfg.mobility_cfg.pause = num();
  else if (key == "view") {
    if (value == "oracle") cfg.view = SimConfig::View::oracle;
    else if (value == "hello") cfg.view = SimConfig::View::hello;
    else throw ConfigError("sim.view must be oracle or hello");
  }
  else if (key == "hello_interval") cfg.hello_interval = num();
  else if (key == "seed") cfg.seed = cnt();
  else throw ConfigError("unknown key sim." + key);
}

struct SweepAxis {
  std::string key;                  // a sim.* key name, without the prefix
  std::vector<std::string> values;  // applied in declared order
};

struct ExperimentSpec {
  SimConfig base;
  std::vector<SweepAxis> axes;
  std::uint32_t replications = 20;
  bool emit_cdf = true;
  std::uint32_t cdf_points = 49;
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

inline ExperimentSpec load_experiment(const ConfigMap& cm) {
  ExperimentSpec spec;
  for (const auto& [key, value] : cm.entries()) {
    // other tools own these sections; one file can drive the whole toolkit
    if (key.rfind("analyze.", 0) == 0 || key.rfind("pmf.", 0) == 0) continue;
    if (key.rfind("sim.", 0) == 0) {
      apply_sim_key(spec.base, key.substr(4), value);
    } else if (key.rfind("sweep.", 0) == 0) {
      SweepAxis axis;
      axis.key = key.substr(6);
      axis.values = split_list(value);
      if (axis.values.empty())
        throw ConfigError("sweep." + axis.key + ": empty value list");
      {  // validate every value against a scratch config now, not mid-run
        SimConfig scratch = spec.base;
        for (const std::string& v : axis.values) apply_sim_key(scratch, axis.key, v);
      }
      spec.axes.push_back(std::move(axis));
    } else if (key == "experiment.replications") {
      spec.replications = std::uint32_t(ConfigMap::to_u64(key, value));
      if (spec.replications < 1)
        throw ConfigError("experiment.replications must be at least 1");
    } else if (key == "experiment.emit_cdf") {
      if (value == "true") spec.emit_cdf = true;
      else if (value == "false") spec.emit_cdf = false;
      else throw ConfigError("experiment.emit_cdf must be true or false");
    } else if (key == "experiment.cdf_points") {
      spec.cdf_points = std::uint32_t(ConfigMap::to_u64(key, value));
      if (spec.cdf_points < 2)
        throw ConfigError("experiment.cdf_points must be at least 2");
    } else {
      throw ConfigError("unknown key " + key);
    }
  }
  return spec;
}

// Two-sided 95% Student-t quantiles for df = 1..30; the normal quantile is
// close enough beyond that.
inline double t_quantile_95(std::uint32_t df) {
  static const double table[30] = {
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
      2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
      2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (df == 0) throw std::invalid_argument("zero degrees of freedom");
  if (df <= 30) return table[df - 1];
  return 1.960;
}

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  // 0 when only one replication exists
};

inline MeanCi mean_ci(const std::vector<double>& xs) {
  MeanCi out;
  if (xs.empty()) return out;
  double s = 0.0;
  for (double x : xs) s += x;
  out.mean = s / double(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double var = ss / double(xs.size() - 1);
  out.half_width = t_quantile_95(std::uint32_t(xs.size() - 1)) *
                   std::sqrt(var / double(xs.size()));
  return out;
}

struct PointResult {
  std::vector<std::pair<std::string, std::string>> overrides;  // axis -> value
  SimConfig cfg;
  std::vector<Metrics> reps;
  MeanCi pdr;
  MeanCi forwards;
  MeanCi delay;
  double natives_mean = 0.0;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<PointResult> points;
};

namespace detail {

inline void aggregate_point(PointResult& pt) {
  std::vector<double> pdrs, fwds, dels;
  double natives = 0.0;
  for (const Metrics& m : pt.reps) {
    pdrs.push_back(m.pdr());
    fwds.push_back(m.forwards_per_native());
    dels.push_back(m.mean_delay());
    natives += double(m.natives);
  }
  pt.pdr = mean_ci(pdrs);
  pt.forwards = mean_ci(fwds);
  pt.delay = mean_ci(dels);
  pt.natives_mean = natives / double(pt.reps.size());
}

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

}  // namespace detail

// Expands the sweep grid (first axis outermost), runs every replication,
// and aggregates. Replication r of every point uses seed base + r, so
// points are compared under common random numbers. Threads split the
// (point, replication) task list; results are merged in task order, so the
// output is independent of scheduling.
inline ExperimentReport run_experiment(const ExperimentSpec& spec,
                                       std::uint32_t jobs = 1) {
  ExperimentReport report;
  report.spec = spec;

  std::size_t n_points = 1;
  for (const SweepAxis& a : spec.axes) n_points *= a.values.size();
  report.points.resize(n_points);
  for (std::size_t p = 0; p < n_points; ++p) {
    PointResult& pt = report.points[p];
    pt.cfg = spec.base;
    std::size_t rem = p;
    std::size_t stride = n_points;
    for (const SweepAxis& a : spec.axes) {
      stride /= a.values.size();
      const std::string& v = a.values[rem / stride];
      rem %= stride;
      apply_sim_key(pt.cfg, a.key, v);
      pt.overrides.emplace_back(a.key, v);
    }
    pt.reps.resize(spec.replications);
  }

  const std::size_t tasks = n_points * spec.replications;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string error;
  bool error_is_config = false;
  std::mutex error_mu;
  const auto note = [&](std::size_t p, std::uint32_t r, const char* what,
                        bool config) {
    std::lock_guard<std::mutex> lk(error_mu);
    failed.store(true);
    if (!error.empty()) return;
    error = "sweep point " + std::to_string(p);
    for (const auto& [key, value] : report.points[p].overrides)
      error += " " + key + "=" + value;
    error += ", replication " + std::to_string(r) + ": " + what;
    error_is_config = config;
  };
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks || failed.load()) return;
      const std::size_t p = i / spec.replications;
      const std::uint32_t r = std::uint32_t(i % spec.replications);
      SimConfig cfg = report.points[p].cfg;
      cfg.seed = spec.base.seed + r;
      try {
        report.points[p].reps[r] = run_simulation(cfg).metrics;
      } catch (const std::logic_error& e) {
        note(p, r, e.what(), true);  // a config the engine rejects
      } catch (const std::exception& e) {
        note(p, r, e.what(), false);
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::uint32_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failed.load()) {
    if (error_is_config) throw ConfigError(error);
    throw std::runtime_error("replication failed: " + error);
  }

  for (PointResult& pt : report.points) detail::aggregate_point(pt);
  return report;
}

// ----- file emission --------------------------------------------------------

inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string results_csv(const ExperimentReport& report) {
  std::string out = "point";
  for (const SweepAxis& a : report.spec.axes) out += "," + a.key;
  out += ",replications,natives_mean,pdr_mean,pdr_ci95"
         ",forwards_per_native_mean,forwards_per_native_ci95"
         ",mean_delay_mean,mean_delay_ci95\n";
  for (std::size_t p = 0; p < report.points.size(); ++p) {
    const PointResult& pt = report.points[p];
    out += std::to_string(p);
    for (const auto& [key, value] : pt.overrides) out += "," + value;
    out += "," + std::to_string(report.spec.replications);
    out += "," + detail::fmt(pt.natives_mean);
    out += "," + detail::fmt(pt.pdr.mean) + "," + detail::fmt(pt.pdr.half_width);
    out += "," + detail::fmt(pt.forwards.mean) + "," +
           detail::fmt(pt.forwards.half_width);
    out += "," + detail::fmt(pt.delay.mean) + "," +
           detail::fmt(pt.delay.half_width);
    out += "\n";
  }
  return out;
}

// Delivery-within-deadline curve for one point: fraction of expected pairs
// delivered within each bound, averaged over replications with a t CI.
// The grid is log-spaced from one hop latency to the run duration, with a
// final unbounded row that equals the plain delivery ratio.
inline std::string cdf_csv(const PointResult& pt, std::uint32_t points) {
  bool any_pairs = false;
  for (const Metrics& m : pt.reps)
    if (m.expected_pairs) any_pairs = true;
  if (!any_pairs) return "delay_bound_seconds,delivered_fraction_mean,ci95\n";

  std::vector<double> grid;
  const double lo = std::max(pt.cfg.hop_latency, 1e-6);
  const double hi = std::max(pt.cfg.duration, lo * 2.0);
  for (std::uint32_t i = 0; i < points; ++i)
    grid.push_back(lo * std::pow(hi / lo, double(i) / double(points - 1)));
  grid.push_back(std::numeric_limits<double>::infinity());

  std::string out = "delay_bound_seconds,delivered_fraction_mean,ci95\n";
  for (double bound : grid) {
    std::vector<double> fracs;
    for (const Metrics& m : pt.reps) {
      std::uint64_t within = 0;
      for (double d : m.delays)
        if (d <= bound) ++within;
      fracs.push_back(m.expected_pairs
                          ? double(within) / double(m.expected_pairs)
                          : 0.0);
    }
    const MeanCi ci = mean_ci(fracs);
    out += (std::isinf(bound) ? std::string("inf") : detail::fmt(bound)) + "," +
           detail::fmt(ci.mean) + "," + detail::fmt(ci.half_width) + "\n";
  }
  return out;
}

// The manifest is itself a loadable experiment config that reproduces the
// run: resolved base keys, sweep axes, and experiment settings.
inline std::string manifest_ini(const ExperimentReport& report,
                                std::uint32_t jobs) {
  const SimConfig& c = report.spec.base;
  std::string out = "# reproducible experiment manifest\n[sim]\n";
  out += "nodes = " + std::to_string(c.nodes) + "\n";
  out += "a_hat = " + detail::fmt(c.a_hat) + "\n";
  out += "range = " + detail::fmt(c.range) + "\n";
  out += "sources = " + std::to_string(c.sources) + "\n";
  out += "lambda = " + detail::fmt(c.lambda) + "\n";
  out += "duration = " + detail::fmt(c.duration) + "\n";
  out += "warm_up = " + detail::fmt(c.warm_up) + "\n";
  out += "loss = " + detail::fmt(c.loss) + "\n";
  out += "hop_latency = " + detail::fmt(c.hop_latency) + "\n";
  out += "hop_jitter = " + detail::fmt(c.hop_jitter) + "\n";
  out += "generation_size = " + std::to_string(c.generation_size) + "\n";
  out += "payload_bytes = " + std::to_string(c.payload_bytes) + "\n";
  out += std::string("policy = ") +
         (c.policy.kind == ForwardingPolicy::Kind::rldp ? "rldp"
          : c.policy.kind == ForwardingPolicy::Kind::flooding
              ? "flooding"
              : "probabilistic") +
         "\n";
  out += "omega = " + detail::fmt(c.policy.omega) + "\n";
  out += std::string("mobility = ") +
         (c.mobility == SimConfig::Mobility::waypoint ? "waypoint" : "static") +
         "\n";
  out += "speed_min = " + detail::fmt(c.mobility_cfg.v_min) + "\n";
  out += "speed_max = " + detail::fmt(c.mobility_cfg.v_max) + "\n";
  out += "pause = " + detail::fmt(c.mobility_cfg.pause) + "\n";
  out += std::string("view = ") +
         (c.view == SimConfig::View::hello ? "hello" : "oracle") + "\n";
  out += "hello_interval = " + detail::fmt(c.hello_interval) + "\n";
  out += "seed = " + std::to_string(c.seed) + "\n";
  out += "\n[experiment]\n";
  out += "replications = " + std::to_string(report.spec.replications) + "\n";
  out += std::string("emit_cdf = ") +
         (report.spec.emit_cdf ? "true" : "false") + "\n";
  out += "cdf_points = " + std::to_string(report.spec.cdf_points) + "\n";
  out += "# jobs used: " + std::to_string(jobs) + "\n";
  if (!report.spec.axes.empty()) out += "\n[sweep]\n";
  for (const SweepAxis& a : report.spec.axes) {
    out += a.key + " = ";
    for (std::size_t i = 0; i < a.values.size(); ++i)
      out += (i ? ", " : "") + a.values[i];
    out += "\n";
  }
  return out;
}

inline void write_report(const ExperimentReport& report,
                         const std::filesystem::path& out_dir,
                         std::uint32_t jobs) {
  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / "results.csv", results_csv(report));
  write_file_atomic(out_dir / "manifest.ini", manifest_ini(report, jobs));
  if (report.spec.emit_cdf)
    for (std::size_t p = 0; p < report.points.size(); ++p)
      write_file_atomic(out_dir / ("cdf_p" + std::to_string(p) + ".csv"),
                        cdf_csv(report.points[p], report.spec.cdf_points));
}

}  // namespace rldp
