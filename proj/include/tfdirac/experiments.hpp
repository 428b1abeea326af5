#pragma once

#include "tfdirac/clifford.hpp"
#include "tfdirac/evolution.hpp"
#include "tfdirac/lattice.hpp"
#include "tfdirac/propagator.hpp"
#include "tfdirac/tfa.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfdirac {

class FitAborted : public std::runtime_error {
 public:
  FitAborted(const std::string& what, double t, double tail) : std::runtime_error(what), time(t), tail_fraction(tail) {}
  double time;
  double tail_fraction;
};

/// Uniform double in [0, 1) from the raw 64-bit engine output (portable across
/// standard libraries, unlike std::uniform_real_distribution).
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Sum of `count` Gaussian wave packets with random centers (|x_j| <= spread),
/// frequencies (|xi_j| <= max_frequency), widths in [0.7, 1.4] and complex
/// spinor amplitudes.  Smooth and localized; reproducible from the seed.
inline SpinorField random_packets(const Lattice& lat, int components, std::uint64_t seed, int count = 3, double spread = 2.0,
                                  double max_frequency = 2.0, std::shared_ptr<const DiracMatrixSet> dirac = nullptr) {
  std::mt19937_64 rng(seed);
  const int d = lat.dim();
  struct Packet {
    std::vector<double> center, freq;
    double width;
    std::vector<cplx> amp;
  };
  std::vector<Packet> packets(count);
  for (auto& p : packets) {
    for (int j = 0; j < d; ++j) p.center.push_back(spread * (2 * unit_uniform(rng) - 1));
    for (int j = 0; j < d; ++j) p.freq.push_back(max_frequency * (2 * unit_uniform(rng) - 1));
    p.width = 0.7 + 0.7 * unit_uniform(rng);
    for (int c = 0; c < components; ++c) p.amp.emplace_back(2 * unit_uniform(rng) - 1, 2 * unit_uniform(rng) - 1);
  }
  return sample_field(
      lat, components,
      [&](std::span<const double> x, std::span<cplx> v) {
        for (const auto& p : packets) {
          double ph = 0.0;
          for (int j = 0; j < d; ++j) ph += p.freq[j] * x[j];
          const cplx e = gaussian_profile(x, p.center, p.width) * std::polar(1.0, 2 * std::numbers::pi * ph);
          for (int c = 0; c < components; ++c) v[c] += p.amp[c] * e;
        }
      },
      std::move(dirac));
}

/// amplitude * Gaussian (width a) in the first spinor component.
inline SpinorField gaussian_datum(const Lattice& lat, std::shared_ptr<const DiracMatrixSet> set, double amplitude = 1.0,
                                  double width = 1.0) {
  const int n = set ? set->spinor_dim : 1;
  return sample_field(
      lat, n, [&](std::span<const double> x, std::span<cplx> v) { v[0] = amplitude * gaussian_profile(x, {}, width); },
      std::move(set));
}

struct GrowthFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
  std::vector<double> times;
  std::vector<double> norms;
  std::vector<double> tail_fractions;
};

/// Least-squares slope of log ||psi(t)||_spec against log(1 + t) under free evolution.
/// With abort_on_tail, a flagged tail fraction throws FitAborted.
inline GrowthFit fit_growth_exponent(const SpinorField& psi0, const NormSpec& spec, const std::vector<double>& times,
                                     bool abort_on_tail = true) {
  spec.validate();
  if (spec.kind != 'M' || spec.r != 0.0) throw std::invalid_argument("fit_growth_exponent: spec must be of kind M with r = 0");
  if (times.size() < 2) throw std::invalid_argument("fit_growth_exponent: need at least two times");
  require_dirac(psi0, "fit_growth_exponent");
  GrowthFit fit;
  const Window g = Window::gaussian(psi0.lattice());
  const SpinorField spec0 = forward_ft(psi0);
  for (double t : times) {
    if (!(t >= 0.0)) throw std::invalid_argument("fit_growth_exponent: times must be non-negative");
    const NormResult r = modulation_norm(inverse_ft(propagate_spectrum(spec0, t)), spec, g);
    if (r.tail_flag && abort_on_tail) {
      std::ostringstream msg;
      msg << "fit_growth_exponent: tail fraction " << r.tail_fraction << " at t = " << t << " exceeds the threshold " << kTailThreshold;
      throw FitAborted(msg.str(), t, r.tail_fraction);
    }
    if (!(r.value > 0.0)) throw std::invalid_argument("fit_growth_exponent: zero norm; datum is degenerate");
    fit.times.push_back(t);
    fit.norms.push_back(r.value);
    fit.tail_fractions.push_back(r.tail_fraction);
  }
  const std::size_t n = times.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = std::log1p(fit.times[i]);
    ys[i] = std::log(fit.norms[i]);
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_growth_exponent: times must not all coincide");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ys[i] - fit.intercept - fit.slope * xs[i];
    sse += e * e;
  }
  fit.slope_stderr = n > 2 ? std::sqrt(sse / (n - 2) / sxx) : 0.0;
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

struct SmoothingSeries {
  bool degenerate = false;
  std::vector<double> times;
  std::vector<double> ratios;
  std::vector<double> tail_fractions;
};

/// ||psi(t)||_{M^{p,q}_{0,s}} / (||psi0||_{M^{p,q}_{0,s}} + t^gamma ||psi0||_{M^{p,q}_{0,s-gamma}}) for t > 1.
inline SmoothingSeries smoothing_ratio(const SpinorField& psi0, double p, double q, double s, double gamma,
                                       const std::vector<double>& times) {
  require_dirac(psi0, "smoothing_ratio");
  if (!(gamma >= 0.0)) throw std::invalid_argument("smoothing_ratio: gamma must be non-negative");
  for (double t : times) {
    if (!(t > 1.0)) throw std::invalid_argument("smoothing_ratio: times must exceed 1");
  }
  SmoothingSeries out;
  const Window g = Window::gaussian(psi0.lattice());
  const NormSpec main{'M', p, q, 0.0, s};
  const NormSpec shifted{'M', p, q, 0.0, s - gamma};
  const double a = modulation_norm(psi0, main, g).value;
  const double b = modulation_norm(psi0, shifted, g).value;
  if (a == 0.0 && b == 0.0) {
    out.degenerate = true;
    return out;
  }
  const SpinorField spec0 = forward_ft(psi0);
  for (double t : times) {
    const NormResult r = modulation_norm(inverse_ft(propagate_spectrum(spec0, t)), main, g);
    out.times.push_back(t);
    out.ratios.push_back(r.value / (a + std::pow(t, gamma) * b));
    out.tail_fractions.push_back(r.tail_fraction);
  }
  return out;
}

/// Evenly spaced grid of `count` points on [a, b].
inline std::vector<double> linear_grid(double a, double b, int count) {
  if (count < 1) throw std::invalid_argument("linear_grid: count must be >= 1");
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) v[i] = count == 1 ? a : a + (b - a) * i / (count - 1);
  return v;
}

// Suite configuration ------------------------------------------------------

/// Parsed suite file.
///
///   # comment
///   [suite]
///   seed = 7
///   experiments = free-growth-d1, smoothing-d1
///
///   [experiment free-growth-d1]
///   nodes = 512
///
/// Sections: one optional [suite], any number of [experiment <id>].  Lines are
/// `key = value`.  An experiment id is either a preset (see suite_presets()) or
/// a section that sets `kind`.  Without an `experiments` key every section runs
/// in file order.
struct SuiteConfig {
  std::map<std::string, std::string> suite;
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, std::string>> sections;
  bool has_list = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string t; std::getline(ss, t, ',');) {
    t = trim(t);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace detail

inline SuiteConfig parse_suite(std::istream& in) {
  SuiteConfig cfg;
  std::map<std::string, std::string>* current = nullptr;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) { throw std::invalid_argument("suite config line " + std::to_string(lineno) + ": " + msg); };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find_first_of("#;"); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      const std::string head = detail::trim(line.substr(1, line.size() - 2));
      if (head == "suite") {
        current = &cfg.suite;
      } else if (head.rfind("experiment", 0) == 0 && head.size() > 10 && (head[10] == ' ' || head[10] == '\t')) {
        const std::string id = detail::trim(head.substr(10));
        if (id.empty()) fail("experiment section without id");
        if (cfg.sections.count(id)) fail("duplicate experiment section '" + id + "'");
        cfg.order.push_back(id);
        current = &cfg.sections[id];
      } else {
        fail("unknown section '" + head + "'");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    if (current == nullptr) fail("key outside a section");
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.empty()) fail("empty key");
    (*current)[key] = detail::trim(line.substr(eq + 1));
  }
  if (auto it = cfg.suite.find("experiments"); it != cfg.suite.end()) {
    cfg.has_list = true;
    cfg.order = detail::split_list(it->second);
  }
  return cfg;
}

/// Built-in experiment definitions.
inline const std::map<std::string, std::map<std::string, std::string>>& suite_presets() {
  static const std::map<std::string, std::map<std::string, std::string>> presets{
      {"free-growth-d1",
       {{"kind", "growth"}, {"dim", "1"}, {"nodes", "1024"}, {"period", "64"}, {"mass", "1"}, {"spec", "M:inf:inf:0:0"},
        {"t_min", "1"}, {"t_max", "50"}, {"t_count", "50"}, {"expect_min", "0.35"}, {"expect_max", "0.65"}}},
      {"free-growth-d1-l2",
       {{"kind", "growth"}, {"dim", "1"}, {"nodes", "1024"}, {"period", "64"}, {"mass", "1"}, {"spec", "M:2:2:0:0"},
        {"t_min", "1"}, {"t_max", "50"}, {"t_count", "50"}, {"expect_min", "-0.02"}, {"expect_max", "0.02"}}},
      {"smoothing-d1",
       {{"kind", "smoothing"}, {"dim", "1"}, {"nodes", "1024"}, {"period", "64"}, {"mass", "1"}, {"p", "inf"}, {"q", "1"},
        {"s", "1"}, {"gamma", "0.5"}, {"t_min", "1.5"}, {"t_max", "50"}, {"t_count", "25"}, {"bound", "10"}}},
      {"thirring-charge",
       {{"kind", "charge"}, {"dim", "1"}, {"nodes", "256"}, {"period", "32"}, {"mass", "1"}, {"nonlinearity", "thirring"},
        {"amplitude", "0.2"}, {"horizon", "5"}, {"dt", "0.005"}, {"tolerance", "1e-12"}, {"max_iterations", "200"},
        {"expect_max", "1e-6"}}},
      {"clifford-all", {{"kind", "clifford"}, {"dim_max", "8"}, {"expect_max", "1e-12"}}},
  };
  return presets;
}

struct SeriesRow {
  double t = 0.0;
  double norm = 0.0;
  double tail_fraction = 0.0;
};

struct Fitted {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct ExperimentReport {
  std::string id;
  std::string kind;
  std::map<std::string, std::string> parameters;
  std::vector<SeriesRow> series;
  std::map<std::string, Fitted> fitted;
  bool passed = false;
  std::string message;
  bool sentinel_run = false;
  double sentinel_drift = 0.0;
  bool sentinel_flag = false;
};

namespace detail {

class Params {
 public:
  explicit Params(std::map<std::string, std::string> v) : v_(std::move(v)) {}

  std::string str(const std::string& k) const {
    auto it = v_.find(k);
    if (it == v_.end()) throw std::invalid_argument("experiment parameter '" + k + "' is missing");
    used_.insert(k);
    return it->second;
  }
  std::string str(const std::string& k, const std::string& def) const { return v_.count(k) ? str(k) : def; }
  double num(const std::string& k) const {
    const std::string s = str(k);
    if (s == "inf") return kInf;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size()) throw std::invalid_argument("experiment parameter '" + k + "': bad number '" + s + "'");
    return v;
  }
  double num(const std::string& k, double def) const { return v_.count(k) ? num(k) : def; }
  int integer(const std::string& k) const {
    const double v = num(k);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw std::invalid_argument("experiment parameter '" + k + "' must be an integer");
    return static_cast<int>(v);
  }
  int integer(const std::string& k, int def) const { return v_.count(k) ? integer(k) : def; }
  bool flag(const std::string& k, bool def) const {
    if (!v_.count(k)) return def;
    const std::string s = str(k);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw std::invalid_argument("experiment parameter '" + k + "' must be true or false");
  }
  void check_all_used() const {
    for (const auto& [k, v] : v_) {
      if (!used_.count(k)) throw std::invalid_argument("unknown experiment parameter '" + k + "'");
    }
  }
  const std::map<std::string, std::string>& all() const { return v_; }

 private:
  std::map<std::string, std::string> v_;
  mutable std::set<std::string> used_;
};

inline double max_relative_drift(const std::vector<SeriesRow>& a, const std::vector<SeriesRow>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    const double den = std::max(std::abs(a[i].norm), 1e-300);
    m = std::max(m, std::abs(a[i].norm - b[i].norm) / den);
  }
  return m;
}

struct Lab {
  Lattice lat;
  std::shared_ptr<const DiracMatrixSet> set;
};

inline Lab make_lab(const Params& p, int scale) {
  const int d = p.integer("dim");
  const int nodes = p.integer("nodes") * scale;
  const double period = p.num("period") * scale;
  return {Lattice(d, nodes, period), std::make_shared<const DiracMatrixSet>(build_dirac_matrices(d, p.num("mass")))};
}

inline SpinorField make_datum(const Params& p, const Lab& lab, std::uint64_t seed) {
  const std::string kind = p.str("datum", "gaussian");
  const double amp = p.num("amplitude", 1.0);
  if (kind == "gaussian") return gaussian_datum(lab.lat, lab.set, amp, p.num("width", 1.0));
  if (kind == "random") {
    SpinorField f = random_packets(lab.lat, lab.set->spinor_dim, seed, 3, 2.0, 2.0, lab.set);
    f *= amp;
    return f;
  }
  throw std::invalid_argument("experiment parameter 'datum' must be gaussian or random");
}

inline std::vector<SeriesRow> run_growth(const Params& p, const Lab& lab, std::uint64_t seed, ExperimentReport* rep) {
  const SpinorField psi0 = make_datum(p, lab, seed);
  const NormSpec spec = NormSpec::parse(p.str("spec"));
  const auto times = linear_grid(p.num("t_min"), p.num("t_max"), p.integer("t_count"));
  const GrowthFit fit = fit_growth_exponent(psi0, spec, times, rep != nullptr);
  std::vector<SeriesRow> rows;
  for (std::size_t i = 0; i < fit.times.size(); ++i) rows.push_back({fit.times[i], fit.norms[i], fit.tail_fractions[i]});
  if (rep) {
    const double lo = p.num("expect_min"), hi = p.num("expect_max");
    rep->fitted["slope"] = {fit.slope, fit.slope - 1.96 * fit.slope_stderr, fit.slope + 1.96 * fit.slope_stderr};
    rep->fitted["r_squared"] = {fit.r_squared, fit.r_squared, fit.r_squared};
    rep->passed = fit.slope >= lo && fit.slope <= hi;
    std::ostringstream msg;
    msg << "slope " << fit.slope << (rep->passed ? " within " : " outside ") << "[" << lo << ", " << hi << "]";
    rep->message = msg.str();
  }
  return rows;
}

inline std::vector<SeriesRow> run_smoothing(const Params& p, const Lab& lab, std::uint64_t seed, ExperimentReport* rep) {
  const SpinorField psi0 = make_datum(p, lab, seed);
  const auto times = linear_grid(p.num("t_min"), p.num("t_max"), p.integer("t_count"));
  const auto series = smoothing_ratio(psi0, p.num("p"), p.num("q"), p.num("s"), p.num("gamma"), times);
  const double bound = p.num("bound");
  std::vector<SeriesRow> rows;
  for (std::size_t i = 0; i < series.times.size(); ++i) rows.push_back({series.times[i], series.ratios[i], series.tail_fractions[i]});
  if (rep) {
    if (series.degenerate) {
      rep->passed = true;
      rep->message = "degenerate datum (zero norm); ratio undefined";
      return rows;
    }
    double mx = 0.0;
    bool finite = true;
    for (double r : series.ratios) {
      finite = finite && std::isfinite(r);
      mx = std::max(mx, r);
    }
    rep->fitted["max_ratio"] = {mx, mx, mx};
    rep->passed = finite && mx <= bound;
    std::ostringstream msg;
    msg << "max ratio " << mx << (rep->passed ? " <= " : " > ") << bound;
    rep->message = msg.str();
  }
  return rows;
}

inline NonlinearitySpec parse_nonlinearity(const std::string& s) {
  if (s == "none" || s == "zero") return NonlinearitySpec::zero();
  if (s == "thirring") return NonlinearitySpec::thirring();
  if (s.rfind("power:", 0) == 0) return NonlinearitySpec::power_law(std::stoi(s.substr(6)));
  if (s.rfind("general:", 0) == 0) {
    std::ifstream in(s.substr(8));
    if (!in) throw std::invalid_argument("cannot open nonlinearity table " + s.substr(8));
    return NonlinearitySpec::read_table(in);
  }
  throw std::invalid_argument("unknown nonlinearity '" + s + "' (none, power:k, thirring, general:file)");
}

inline std::vector<SeriesRow> run_charge(const Params& p, const Lab& lab, std::uint64_t seed, ExperimentReport* rep) {
  const SpinorField psi0 = make_datum(p, lab, seed);
  const NonlinearitySpec f = parse_nonlinearity(p.str("nonlinearity"));
  EvolutionConfig cfg{p.num("horizon"), p.num("dt"), p.num("tolerance"), p.integer("max_iterations")};
  const NonlinearSolution sol = solve_nonlinear(psi0, f, cfg);
  const double q0 = std::pow(psi0.l2_norm(), 2);
  std::vector<SeriesRow> rows;
  double drift = 0.0;
  for (std::size_t i = 0; i < sol.trajectory.times.size(); ++i) {
    const auto& s = sol.trajectory.states[i];
    const double q = std::pow(s.l2_norm(), 2);
    drift = std::max(drift, std::abs(q - q0));
    rows.push_back({sol.trajectory.times[i], q, shell_mass_fraction(s)});
  }
  if (rep) {
    const double tol = p.num("expect_max");
    rep->fitted["charge_drift"] = {drift, drift, drift};
    rep->fitted["horizon_used"] = {sol.certificate.horizon_used, sol.certificate.horizon_used, sol.certificate.horizon_used};
    double worst = 0.0;
    for (double c : sol.certificate.contraction_factors) worst = std::max(worst, c);
    rep->fitted["max_contraction_factor"] = {worst, worst, worst};
    rep->passed = drift < tol;
    std::ostringstream msg;
    msg << "charge drift " << drift << (rep->passed ? " < " : " >= ") << tol << " over [0, " << sol.certificate.horizon_used << "]";
    rep->message = msg.str();
  }
  return rows;
}

inline std::vector<SeriesRow> run_clifford(const Params& p, ExperimentReport* rep) {
  const int dmax = p.integer("dim_max");
  const double tol = p.num("expect_max");
  std::vector<SeriesRow> rows;
  bool ok = true;
  for (int d = 1; d <= dmax; ++d) {
    const auto r = verify_clifford(build_dirac_matrices(d, 1.0), tol);
    ok = ok && r.ok;
    rows.push_back({static_cast<double>(d), r.max_anticommutator_residual, 0.0});
  }
  if (rep) {
    rep->passed = ok;
    rep->message = ok ? "all Clifford identities hold" : "Clifford identity violated";
  }
  return rows;
}

}  // namespace detail

inline ExperimentReport run_experiment(const std::string& id, const std::map<std::string, std::string>& overrides,
                                       std::uint64_t seed) {
  std::map<std::string, std::string> merged;
  const auto& presets = suite_presets();
  if (auto it = presets.find(id); it != presets.end()) merged = it->second;
  for (const auto& [k, v] : overrides) merged[k] = v;
  if (!merged.count("kind")) throw std::invalid_argument("unknown experiment id '" + id + "'");

  const detail::Params p(merged);
  ExperimentReport rep;
  rep.id = id;
  rep.kind = p.str("kind");
  rep.parameters = merged;
  const bool sentinel = p.flag("sentinel", rep.kind != "clifford");
  try {
    if (rep.kind == "clifford") {
      rep.series = detail::run_clifford(p, &rep);
    } else {
      const auto lab = detail::make_lab(p, 1);
      auto run = [&](const detail::Lab& l, ExperimentReport* r) {
        if (rep.kind == "growth") return detail::run_growth(p, l, seed, r);
        if (rep.kind == "smoothing") return detail::run_smoothing(p, l, seed, r);
        if (rep.kind == "charge") return detail::run_charge(p, l, seed, r);
        throw std::invalid_argument("experiment '" + id + "': unknown kind '" + rep.kind + "'");
      };
      rep.series = run(lab, &rep);
      if (sentinel) {
        // same spacing, twice the extent: truncation and frequency-resolution check
        const auto coarse = rep.series;
        const auto fine = run(detail::make_lab(p, 2), nullptr);
        rep.sentinel_run = true;
        rep.sentinel_drift = detail::max_relative_drift(coarse, fine);
        rep.sentinel_flag = rep.sentinel_drift > 0.02;
      }
    }
    p.check_all_used();
  } catch (const FitAborted& e) {
    rep.passed = false;
    rep.message = e.what();
  }
  return rep;
}

inline std::vector<ExperimentReport> run_suite(const SuiteConfig& cfg) {
  std::uint64_t seed = 1;
  for (const auto& [k, v] : cfg.suite) {
    if (k == "seed") {
      seed = std::stoull(v);
    } else if (k != "experiments" && k != "output") {
      throw std::invalid_argument("unknown [suite] key '" + k + "'");
    }
  }
  std::vector<ExperimentReport> out;
  for (const auto& id : cfg.order) {
    const auto it = cfg.sections.find(id);
    static const std::map<std::string, std::string> none;
    if (it == cfg.sections.end() && !suite_presets().count(id)) throw std::invalid_argument("unknown experiment id '" + id + "'");
    out.push_back(run_experiment(id, it == cfg.sections.end() ? none : it->second, seed));
  }
  return out;
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_series_csv(const std::string& path, const std::vector<SeriesRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,norm,tail_fraction\n";
  for (const auto& r : rows) out << format_g17(r.t) << ',' << format_g17(r.norm) << ',' << format_g17(r.tail_fraction) << '\n';
}

inline nlohmann::json report_json(const ExperimentReport& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["kind"] = r.kind;
  j["parameters"] = r.parameters;
  j["passed"] = r.passed;
  j["message"] = r.message;
  nlohmann::json fitted = nlohmann::json::object();
  for (const auto& [k, f] : r.fitted) fitted[k] = {{"value", f.value}, {"ci_low", f.ci_low}, {"ci_high", f.ci_high}};
  j["fitted"] = fitted;
  j["sentinel"] = {{"run", r.sentinel_run}, {"drift", r.sentinel_drift}, {"flag", r.sentinel_flag}};
  j["series_csv"] = r.id + ".csv";
  return j;
}

/// Writes <dir>/<id>.csv per experiment and <dir>/report.json.
inline void write_suite_output(const std::string& dir, const std::vector<ExperimentReport>& reports) {
  std::filesystem::create_directories(dir);
  nlohmann::json all = nlohmann::json::array();
  for (const auto& r : reports) {
    write_series_csv((std::filesystem::path(dir) / (r.id + ".csv")).string(), r.series);
    all.push_back(report_json(r));
  }
  std::ofstream out(std::filesystem::path(dir) / "report.json");
  out << all.dump(2) << '\n';
}

}  // namespace tfdirac
