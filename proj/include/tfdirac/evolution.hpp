#pragma once

#include "tfdirac/lattice.hpp"
#include "tfdirac/propagator.hpp"
#include "tfdirac/tfa.hpp"
#include "tfdirac/weyl.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tfdirac {

struct EvolutionConfig {
  double horizon = 1.0;
  double dt = 1e-2;
  double tolerance = 1e-12;
  int max_iterations = 100;

  void validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("EvolutionConfig: horizon must be positive");
    if (!(dt > 0.0) || dt > horizon * (1 + 1e-12)) throw std::invalid_argument("EvolutionConfig: need 0 < dt <= horizon");
    if (!(tolerance > 0.0)) throw std::invalid_argument("EvolutionConfig: tolerance must be positive");
    if (max_iterations < 1) throw std::invalid_argument("EvolutionConfig: max_iterations must be >= 1");
  }

  /// Number of quadrature steps; the step actually used is horizon / steps().
  int steps() const { return static_cast<int>(std::ceil(horizon / dt - 1e-9)); }
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last) : std::runtime_error(what), last_residual(last) {}
  double last_residual;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SpinorField> states;
};

/// Bounded perturbation V(t): none, pointwise multiplication by a matrix
/// field, or a Weyl operator (d = 1, dense).  Time-dependent forms are
/// evaluated at quadrature nodes only.
class Potential {
 public:
  static Potential none() { return Potential(); }

  static Potential multiplication(MatrixField v) {
    check_field(v);
    auto shared = std::make_shared<const MatrixField>(std::move(v));
    Potential p;
    p.mult_ = [shared](double) { return shared; };
    return p;
  }

  static Potential multiplication(std::function<MatrixField(double)> family) {
    Potential p;
    p.mult_ = [family = std::move(family)](double t) {
      auto v = std::make_shared<const MatrixField>(family(t));
      check_field(*v);
      return v;
    };
    return p;
  }

  static Potential weyl(const PhaseSpaceArray& sigma) {
    auto op = std::make_shared<const Eigen::MatrixXcd>(quantize(sigma));
    Potential p;
    p.weyl_ = [op](double) { return op; };
    return p;
  }

  static Potential weyl(std::function<PhaseSpaceArray(double)> family) {
    Potential p;
    auto cache = std::make_shared<std::map<double, std::shared_ptr<const Eigen::MatrixXcd>>>();
    p.weyl_ = [family = std::move(family), cache](double t) {
      auto it = cache->find(t);
      if (it != cache->end()) return it->second;
      auto op = std::make_shared<const Eigen::MatrixXcd>(quantize(family(t)));
      cache->emplace(t, op);
      return std::shared_ptr<const Eigen::MatrixXcd>(op);
    };
    return p;
  }

  bool is_zero() const { return !mult_ && !weyl_; }

  SpinorField apply(double t, const SpinorField& psi) const {
    if (mult_) {
      const auto v = mult_(t);
      if (!v->lattice.same_as(psi.lattice()) || v->n != psi.components()) {
        throw std::invalid_argument("Potential: matrix field does not match the spinor field");
      }
      SpinorField out = psi.relocated(psi.lattice());
      const int n = v->n;
      for (std::size_t i = 0; i < psi.nodes(); ++i) {
        const auto m = v->node(i);
        const auto x = psi.node(i);
        auto y = out.node(i);
        for (int a = 0; a < n; ++a) {
          cplx s{};
          for (int b = 0; b < n; ++b) s += m[a * n + b] * x[b];
          y[a] = s;
        }
      }
      return out;
    }
    if (weyl_) return apply_operator(*weyl_(t), psi);
    return psi.relocated(psi.lattice());
  }

 private:
  static void check_field(const MatrixField& v) {
    for (const auto& z : v.values) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw std::invalid_argument("Potential: non-finite entry");
    }
  }

  std::function<std::shared_ptr<const MatrixField>(double)> mult_;
  std::function<std::shared_ptr<const Eigen::MatrixXcd>(double)> weyl_;
};

namespace detail {

// Discrete Duhamel map on the grid t_i = i h:
//   Phi(u)_i = U0(t_i) psi0 - i h sum_k w_k U0(t_i - t_k) g_k,   g_k = G(t_k, u_k)
// with trapezoid weights w_0 = w_i = 1/2.  Evaluated in frequency space with
//   B_0 = ghat_0 / 2,  B_i = mu_h B_{i-1} + ghat_i,  sum = h (B_i - ghat_i / 2).
class DuhamelMap {
 public:
  DuhamelMap(const SpinorField& psi0, double horizon, int steps) : psi0_(psi0), steps_(steps) {
    const DiracMatrixSet& set = require_dirac(psi0, "DuhamelMap");
    h_ = horizon / steps;
    const SpinorField spec0 = forward_ft(psi0);
    step_.emplace(spec0.lattice(), set, h_);
    free_.reserve(steps + 1);
    for (int i = 0; i <= steps; ++i) {
      SpinorField s = spec0;
      MultiplierTable(spec0.lattice(), set, i * h_).apply(s.values());
      free_.push_back(std::move(s));
    }
  }

  double step() const { return h_; }
  int steps() const { return steps_; }
  double time(int i) const { return i * h_; }

  std::vector<SpinorField> free_states() const {
    std::vector<SpinorField> out;
    out.reserve(free_.size());
    for (const auto& s : free_) out.push_back(inverse_ft(s));
    return out;
  }

  template <class G>
  std::vector<SpinorField> apply(const std::vector<SpinorField>& u, G&& g, bool include_free = true) const {
    std::vector<SpinorField> out;
    out.reserve(u.size());
    std::optional<SpinorField> acc;
    const cplx mi{0.0, -1.0};
    for (int i = 0; i <= steps_; ++i) {
      const SpinorField ghat = forward_ft(g(time(i), u[i]));
      if (!acc) {
        acc = ghat;
        *acc *= 0.5;
      } else {
        step_->apply(acc->values());
        *acc += ghat;
      }
      SpinorField s = include_free ? free_[i] : free_[i].relocated(free_[i].lattice());
      if (i > 0) {
        const auto av = acc->values();
        const auto gv = ghat.values();
        auto sv = s.values();
        for (std::size_t k = 0; k < sv.size(); ++k) sv[k] += mi * h_ * (av[k] - 0.5 * gv[k]);
      }
      out.push_back(inverse_ft(s));
    }
    return out;
  }

 private:
  SpinorField psi0_;
  int steps_;
  double h_ = 0.0;
  std::optional<MultiplierTable> step_;
  std::vector<SpinorField> free_;
};

inline double max_distance(const std::vector<SpinorField>& a, const std::vector<SpinorField>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).l2_norm());
  return m;
}

}  // namespace detail

struct LinearSolution {
  Trajectory trajectory;
  std::vector<double> increments;  // max_t L^2 distance of successive Picard iterates
  std::vector<double> residuals;   // Volterra residual per grid time (L^2)
  int iterations = 0;
};

/// Picard iteration of the trapezoid-discretized Volterra equation
///   psi(t) = U0(t) psi0 - i int_0^t U0(t-s) V(s) psi(s) ds.
inline LinearSolution solve_linear(const SpinorField& psi0, const Potential& v, const EvolutionConfig& cfg) {
  cfg.validate();
  const detail::DuhamelMap map(psi0, cfg.horizon, cfg.steps());
  LinearSolution sol;
  for (int i = 0; i <= map.steps(); ++i) sol.trajectory.times.push_back(map.time(i));
  std::vector<SpinorField> u = map.free_states();
  auto g = [&](double t, const SpinorField& x) { return v.apply(t, x); };
  if (v.is_zero()) {
    sol.trajectory.states = std::move(u);
    sol.residuals.assign(sol.trajectory.times.size(), 0.0);
    return sol;
  }
  double last = INFINITY;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    std::vector<SpinorField> next = map.apply(u, g);
    last = detail::max_distance(next, u);
    sol.increments.push_back(last);
    u = std::move(next);
    sol.iterations = it;
    if (last < cfg.tolerance) break;
  }
  if (!(last < cfg.tolerance)) {
    throw ConvergenceError("solve_linear: Picard iteration did not converge in " + std::to_string(cfg.max_iterations) +
                               " iterations (last increment " + std::to_string(last) + ")",
                           last);
  }
  const std::vector<SpinorField> check = map.apply(u, g);
  for (std::size_t i = 0; i < u.size(); ++i) sol.residuals.push_back((check[i] - u[i]).l2_norm());
  sol.trajectory.states = std::move(u);
  return sol;
}

/// Dyson-Phillips terms D_0 = U0 psi0, D_{k+1} = -i int U0(t-s) V(s) D_k(s) ds on
/// the same quadrature as solve_linear; sum_{k<=j} D_k is the j-th Picard iterate.
inline std::vector<std::vector<SpinorField>> dyson_phillips_terms(const SpinorField& psi0, const Potential& v,
                                                                  const EvolutionConfig& cfg, int count) {
  cfg.validate();
  if (count < 1) throw std::invalid_argument("dyson_phillips_terms: count must be >= 1");
  const detail::DuhamelMap map(psi0, cfg.horizon, cfg.steps());
  std::vector<std::vector<SpinorField>> terms;
  terms.push_back(map.free_states());
  auto g = [&](double t, const SpinorField& x) { return v.apply(t, x); };
  for (int k = 1; k < count; ++k) terms.push_back(map.apply(terms.back(), g, false));
  return terms;
}

/// One monomial c z^alpha conj(z)^beta contributing to output component j.
struct Monomial {
  int component = 0;
  cplx coefficient{};
  std::vector<int> alpha;
  std::vector<int> beta;

  int degree() const {
    int s = 0;
    for (int a : alpha) s += a;
    for (int b : beta) s += b;
    return s;
  }
};

enum class NonlinearityKind { Zero, Power, Thirring, General };

struct NonlinearitySpec {
  NonlinearityKind kind = NonlinearityKind::Zero;
  int power = 1;                // Power: |psi|^{2k} psi
  int degree = 0;               // General: monomials above this total degree are dropped
  std::vector<Monomial> terms;  // General

  static NonlinearitySpec zero() { return {}; }
  static NonlinearitySpec power_law(int k) {
    if (k < 1) throw std::invalid_argument("NonlinearitySpec: power k must be a positive integer");
    NonlinearitySpec s;
    s.kind = NonlinearityKind::Power;
    s.power = k;
    return s;
  }
  static NonlinearitySpec thirring() {
    NonlinearitySpec s;
    s.kind = NonlinearityKind::Thirring;
    return s;
  }
  static NonlinearitySpec general(std::vector<Monomial> terms, int degree) {
    NonlinearitySpec s;
    s.kind = NonlinearityKind::General;
    s.terms = std::move(terms);
    s.degree = degree;
    s.validate();
    return s;
  }

  void validate(int n = -1) const {
    if (kind == NonlinearityKind::Power && power < 1) throw std::invalid_argument("NonlinearitySpec: power k must be >= 1");
    if (kind != NonlinearityKind::General) return;
    if (degree < 1) throw std::invalid_argument("NonlinearitySpec: truncation degree must be >= 1");
    for (const auto& m : terms) {
      if (!std::isfinite(m.coefficient.real()) || !std::isfinite(m.coefficient.imag())) {
        throw std::invalid_argument("NonlinearitySpec: non-finite coefficient");
      }
      if (m.alpha.size() != m.beta.size()) throw std::invalid_argument("NonlinearitySpec: alpha and beta lengths differ");
      for (int a : m.alpha) {
        if (a < 0) throw std::invalid_argument("NonlinearitySpec: negative exponent");
      }
      for (int b : m.beta) {
        if (b < 0) throw std::invalid_argument("NonlinearitySpec: negative exponent");
      }
      if (m.degree() == 0 && m.coefficient != cplx{}) throw std::invalid_argument("NonlinearitySpec: constant term violates F(0) = 0");
      if (n >= 0 && (static_cast<int>(m.alpha.size()) != n || m.component < 0 || m.component >= n)) {
        throw std::invalid_argument("NonlinearitySpec: monomial does not match spinor dimension " + std::to_string(n));
      }
    }
  }

  /// Text table: a line "degree D", then lines "j re im a_1..a_n b_1..b_n"; '#' starts a comment.
  static NonlinearitySpec read_table(std::istream& in) {
    std::vector<Monomial> terms;
    int degree = -1;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      std::istringstream ls(line);
      std::vector<std::string> tok;
      for (std::string t; ls >> t;) tok.push_back(t);
      if (tok.empty()) continue;
      try {
        if (tok[0] == "degree") {
          if (tok.size() != 2) throw std::invalid_argument("expected 'degree D'");
          degree = std::stoi(tok[1]);
          continue;
        }
        if (tok.size() < 5 || (tok.size() - 3) % 2 != 0) throw std::invalid_argument("expected 'j re im a... b...'");
        Monomial m;
        m.component = std::stoi(tok[0]);
        m.coefficient = {std::stod(tok[1]), std::stod(tok[2])};
        const std::size_t n = (tok.size() - 3) / 2;
        for (std::size_t k = 0; k < n; ++k) m.alpha.push_back(std::stoi(tok[3 + k]));
        for (std::size_t k = 0; k < n; ++k) m.beta.push_back(std::stoi(tok[3 + n + k]));
        terms.push_back(std::move(m));
      } catch (const std::exception& e) {
        throw std::invalid_argument("nonlinearity table line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    if (degree < 0) throw std::invalid_argument("nonlinearity table: missing 'degree D' line");
    return general(std::move(terms), degree);
  }
};

/// Pointwise F(psi).
inline SpinorField eval_nonlinearity(const SpinorField& psi, const NonlinearitySpec& f, const DiracMatrixSet& set) {
  const int n = psi.components();
  f.validate(n);
  SpinorField out = psi.relocated(psi.lattice());
  switch (f.kind) {
    case NonlinearityKind::Zero: break;
    case NonlinearityKind::Power:
      for (std::size_t i = 0; i < psi.nodes(); ++i) {
        double r2 = 0.0;
        for (const auto& z : psi.node(i)) r2 += std::norm(z);
        const double w = std::pow(r2, f.power);
        for (int a = 0; a < n; ++a) out(i, a) = w * psi(i, a);
      }
      break;
    case NonlinearityKind::Thirring: {
      if (set.spinor_dim != n) throw std::invalid_argument("eval_nonlinearity: Dirac set does not match the field");
      const Eigen::MatrixXcd& a0 = set.alphas[0];
      Eigen::VectorXcd z(n), az(n);
      for (std::size_t i = 0; i < psi.nodes(); ++i) {
        for (int a = 0; a < n; ++a) z(a) = psi(i, a);
        az.noalias() = a0 * z;
        const cplx pair = z.dot(az);  // (alpha_0 z, z) = sum (alpha_0 z)_a conj(z_a)
        for (int a = 0; a < n; ++a) out(i, a) = pair * az(a);
      }
      break;
    }
    case NonlinearityKind::General: {
      std::vector<cplx> zbar(n);
      for (std::size_t i = 0; i < psi.nodes(); ++i) {
        const auto z = psi.node(i);
        for (int a = 0; a < n; ++a) zbar[a] = std::conj(z[a]);
        for (const auto& m : f.terms) {
          if (m.degree() > f.degree) continue;
          cplx v = m.coefficient;
          for (int a = 0; a < n; ++a) {
            for (int e = 0; e < m.alpha[a]; ++e) v *= z[a];
            for (int e = 0; e < m.beta[a]; ++e) v *= zbar[a];
          }
          out(i, m.component) += v;
        }
      }
      break;
    }
  }
  return out;
}

struct NonlinearOptions {
  NormSpec x_norm{'M', 2.0, 1.0, 0.0, 0.0};
  int x_norm_samples = 8;            // time nodes used for the sup over t in the X norm
  double min_horizon_fraction = 1.0 / 64;
};

struct Certificate {
  std::vector<double> contraction_factors;  // X-norm increment ratios, one per iteration after the first
  std::vector<double> x_increments;
  std::vector<double> l2_increments;
  std::vector<double> residuals;            // Duhamel residual per grid time (L^2)
  double horizon_used = 0.0;
  int restarts = 0;
  int iterations = 0;
  std::string x_norm;
};

struct NonlinearSolution {
  Trajectory trajectory;
  Certificate certificate;
};

/// Picard iteration of the trapezoid Duhamel map psi = U0 psi0 - i int U0(t-s) F(psi(s)) ds.
/// An X-norm contraction factor above 1 halves the horizon and restarts, down
/// to min_horizon_fraction of the requested horizon.
inline NonlinearSolution solve_nonlinear(const SpinorField& psi0, const NonlinearitySpec& f, const EvolutionConfig& cfg,
                                         const NonlinearOptions& opt = {}) {
  cfg.validate();
  const DiracMatrixSet& set = require_dirac(psi0, "solve_nonlinear");
  f.validate(psi0.components());
  for (const auto& z : psi0.values()) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw std::invalid_argument("solve_nonlinear: non-finite datum");
  }
  const Window window = Window::gaussian(psi0.lattice());
  auto g = [&](double, const SpinorField& x) { return eval_nonlinearity(x, f, set); };

  Certificate cert;
  cert.x_norm = opt.x_norm.str();
  double horizon = cfg.horizon;
  const double floor = cfg.horizon * opt.min_horizon_fraction;
  while (true) {
    EvolutionConfig run = cfg;
    run.horizon = horizon;
    run.dt = std::min(cfg.dt, horizon);
    const detail::DuhamelMap map(psi0, run.horizon, run.steps());
    const int steps = map.steps();
    const int stride = std::max(1, steps / std::max(1, opt.x_norm_samples));
    auto x_distance = [&](const std::vector<SpinorField>& a, const std::vector<SpinorField>& b) {
      double m = 0.0;
      for (int i = 0; i <= steps; i += stride) m = std::max(m, modulation_norm(a[i] - b[i], opt.x_norm, window).value);
      return m;
    };
    auto x_size = [&](const std::vector<SpinorField>& a) {
      double m = 0.0;
      for (int i = 0; i <= steps; i += stride) m = std::max(m, modulation_norm(a[i], opt.x_norm, window).value);
      return m;
    };

    cert.contraction_factors.clear();
    cert.x_increments.clear();
    cert.l2_increments.clear();
    std::vector<SpinorField> u = map.free_states();
    const double scale = std::max(x_size(u), 1e-300);
    bool restart = false;
    double last = INFINITY;
    int it = 1;
    for (; it <= cfg.max_iterations; ++it) {
      std::vector<SpinorField> next = map.apply(u, g);
      last = detail::max_distance(next, u);
      const double xd = x_distance(next, u);
      if (!cert.x_increments.empty() && cert.x_increments.back() > 0.0) {
        const double factor = xd / cert.x_increments.back();
        cert.contraction_factors.push_back(factor);
        // ratios of increments at rounding level carry no information
        if (factor > 1.0 && cert.x_increments.back() > 1e-10 * scale) restart = true;
      }
      cert.x_increments.push_back(xd);
      cert.l2_increments.push_back(last);
      u = std::move(next);
      if (restart || last < cfg.tolerance) break;
    }
    cert.iterations = std::min(it, cfg.max_iterations);
    if (!restart && !(last < cfg.tolerance)) restart = true;
    if (restart) {
      if (horizon / 2 < floor) {
        throw ConvergenceError("solve_nonlinear: no contraction above the horizon floor " + std::to_string(floor) +
                                   " (last increment " + std::to_string(last) + ")",
                               last);
      }
      horizon /= 2;
      ++cert.restarts;
      continue;
    }
    const std::vector<SpinorField> check = map.apply(u, g);
    cert.residuals.clear();
    for (std::size_t i = 0; i < u.size(); ++i) cert.residuals.push_back((check[i] - u[i]).l2_norm());
    cert.horizon_used = horizon;
    NonlinearSolution sol;
    for (int i = 0; i <= steps; ++i) sol.trajectory.times.push_back(map.time(i));
    sol.trajectory.states = std::move(u);
    sol.certificate = std::move(cert);
    return sol;
  }
}

}  // namespace tfdirac
