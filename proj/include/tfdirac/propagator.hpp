#pragma once

#include "tfdirac/clifford.hpp"
#include "tfdirac/lattice.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfdirac {

namespace detail {

// sin(z)/z; four Taylor terms below |z| < 1e-4.
inline double sinc(double z) {
  if (std::abs(z) < 1e-4) {
    const double z2 = z * z;
    return 1.0 - z2 / 6.0 + z2 * z2 / 120.0 - z2 * z2 * z2 / 5040.0;
  }
  return std::sin(z) / z;
}

inline double mass_bracket(std::span<const double> xi, double m) {
  double r2 = m * m;
  for (double v : xi) r2 += v * v;
  return std::sqrt(r2);
}

}  // namespace detail

/// Free Dirac symbol e^{-2 pi i t G(xi)}, G = m alpha_0 + sum xi_j alpha_j:
///   cos(2 pi t <xi>_m) I - 2 pi i t sinc(2 pi t <xi>_m) G(xi).
inline Eigen::MatrixXcd multiplier(std::span<const double> xi, double t, const DiracMatrixSet& set) {
  const double z = 2 * std::numbers::pi * t * detail::mass_bracket(xi, set.mass);
  const Eigen::MatrixXcd g = set.generator(xi);
  const cplx c{0.0, -2 * std::numbers::pi * t * detail::sinc(z)};
  Eigen::MatrixXcd mu = c * g;
  mu.diagonal().array() += std::cos(z);
  return mu;
}

/// mu_t evaluated at every node of a frequency lattice, stored flat.
class MultiplierTable {
 public:
  MultiplierTable(const Lattice& frequencies, const DiracMatrixSet& set, double t)
      : lattice_(frequencies), t_(t), n_(set.spinor_dim) {
    if (frequencies.dim() != set.dim) throw std::invalid_argument("MultiplierTable: lattice and Dirac set dimensions differ");
    const std::size_t nn = static_cast<std::size_t>(n_) * n_;
    data_.resize(frequencies.size() * nn);
    std::vector<double> xi(frequencies.dim());
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
      frequencies.positions_of(i, xi);
      const Eigen::MatrixXcd mu = multiplier(xi, t, set);
      for (int a = 0; a < n_; ++a) {
        for (int b = 0; b < n_; ++b) data_[i * nn + a * n_ + b] = mu(a, b);
      }
    }
  }

  const Lattice& lattice() const { return lattice_; }
  double time() const { return t_; }
  int spinor_dim() const { return n_; }

  /// Replaces every node vector v of `spectrum` by mu_t(xi) v.
  void apply(std::span<cplx> spectrum) const {
    const std::size_t nn = static_cast<std::size_t>(n_) * n_;
    if (spectrum.size() != lattice_.size() * n_) throw std::invalid_argument("MultiplierTable::apply: size mismatch");
    std::vector<cplx> tmp(n_);
    for (std::size_t i = 0; i < lattice_.size(); ++i) {
      const cplx* mu = data_.data() + i * nn;
      cplx* v = spectrum.data() + i * n_;
      for (int a = 0; a < n_; ++a) {
        cplx s{};
        for (int b = 0; b < n_; ++b) s += mu[a * n_ + b] * v[b];
        tmp[a] = s;
      }
      std::copy(tmp.begin(), tmp.end(), v);
    }
  }

 private:
  Lattice lattice_;
  double t_;
  int n_;
  std::vector<cplx> data_;
};

/// Holds one table and rebuilds it when t, the lattice or the Dirac set changes.
/// Not thread-safe; use one cache per worker.
class MultiplierCache {
 public:
  const MultiplierTable& get(const Lattice& frequencies, const DiracMatrixSet& set, double t) {
    const bool hit = table_ && table_->time() == t && table_->lattice().same_as(frequencies) && set_mass_ == set.mass &&
                     table_->spinor_dim() == set.spinor_dim && set_dim_ == set.dim;
    if (!hit) {
      table_.emplace(frequencies, set, t);
      set_mass_ = set.mass;
      set_dim_ = set.dim;
    }
    return *table_;
  }

 private:
  std::optional<MultiplierTable> table_;
  double set_mass_ = 0.0;
  int set_dim_ = 0;
};

inline const DiracMatrixSet& require_dirac(const SpinorField& f, const char* who) {
  if (!f.dirac()) throw std::invalid_argument(std::string(who) + ": field carries no Dirac matrix set");
  return *f.dirac();
}

/// Applies mu_t to a spectrum (a field on a frequency lattice).
inline SpinorField propagate_spectrum(const SpinorField& spectrum, double t) {
  const DiracMatrixSet& set = require_dirac(spectrum, "propagate_spectrum");
  SpinorField out = spectrum;
  MultiplierTable(spectrum.lattice(), set, t).apply(out.values());
  return out;
}

/// psi(t) = F^{-1} mu_t F psi0.
inline SpinorField evolve_free(const SpinorField& psi0, double t) {
  require_dirac(psi0, "evolve_free");
  return inverse_ft(propagate_spectrum(forward_ft(psi0), t));
}

inline SpinorField evolve_free(const SpinorField& psi0, double t, MultiplierCache& cache) {
  const DiracMatrixSet& set = require_dirac(psi0, "evolve_free");
  SpinorField fhat = forward_ft(psi0);
  cache.get(fhat.lattice(), set, t).apply(fhat.values());
  return inverse_ft(fhat);
}

struct EnergyProjectors {
  Eigen::MatrixXcd plus;
  Eigen::MatrixXcd minus;
};

/// P_+/- = (I +/- G(xi)/<xi>_m) / 2.
inline EnergyProjectors energy_projectors(std::span<const double> xi, const DiracMatrixSet& set) {
  const double w = detail::mass_bracket(xi, set.mass);
  if (w == 0.0) {
    std::string node = "(";
    for (std::size_t j = 0; j < xi.size(); ++j) node += (j ? ", " : "") + std::to_string(xi[j]);
    throw std::domain_error("energy_projectors: degenerate node xi = " + node + ") with m = 0");
  }
  const Eigen::MatrixXcd g = set.generator(xi) / w;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(set.spinor_dim, set.spinor_dim);
  return {0.5 * (id + g), 0.5 * (id - g)};
}

struct ModeResidual {
  std::vector<int> index;
  double residual = 0.0;
};

/// Per-mode check of the Klein-Gordon decomposition of free evolution:
/// psihat(t, xi) = e^{-2 pi i t <xi>_m} P_+ psihat0 + e^{+2 pi i t <xi>_m} P_- psihat0.
/// `evolved` must come from an independent propagation of psi0 to time t.
/// Residuals are relative to the largest mode amplitude of psi0.
inline std::vector<ModeResidual> dispersion_residuals(const SpinorField& psi0, const SpinorField& evolved, double t) {
  const DiracMatrixSet& set = require_dirac(psi0, "dispersion_residuals");
  const SpinorField a = forward_ft(psi0);
  const SpinorField b = forward_ft(evolved);
  if (!a.lattice().same_as(b.lattice())) throw std::invalid_argument("dispersion_residuals: lattices differ");
  const Lattice& lat = a.lattice();
  const int n = set.spinor_dim;

  double scale = 0.0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    double s = 0.0;
    for (const auto& v : a.node(i)) s += std::norm(v);
    scale = std::max(scale, std::sqrt(s));
  }
  if (scale == 0.0) scale = 1.0;

  std::vector<ModeResidual> out(lat.size());
  std::vector<double> xi(lat.dim());
  Eigen::VectorXcd v0(n), v1(n);
  for (std::size_t i = 0; i < lat.size(); ++i) {
    lat.positions_of(i, xi);
    for (int c = 0; c < n; ++c) {
      v0(c) = a(i, c);
      v1(c) = b(i, c);
    }
    Eigen::VectorXcd pred;
    const double w = detail::mass_bracket(xi, set.mass);
    if (w == 0.0) {
      pred = v0;
    } else {
      const auto p = energy_projectors(xi, set);
      const double ph = 2 * std::numbers::pi * t * w;
      pred = std::polar(1.0, -ph) * (p.plus * v0) + std::polar(1.0, ph) * (p.minus * v0);
    }
    out[i].index.resize(lat.dim());
    lat.coords(i, out[i].index);
    for (auto& k : out[i].index) k -= lat.nodes_per_axis() / 2;
    out[i].residual = (v1 - pred).norm() / scale;
  }
  return out;
}

}  // namespace tfdirac
