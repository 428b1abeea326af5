#pragma once

#include "tfdirac/lattice.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tfdirac {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Scalar analysis window sampled on a lattice.
class Window {
 public:
  /// Takes the first component of `profile`; rejects the zero function.
  static Window from_field(const SpinorField& profile) {
    Window w(profile.lattice());
    double s = 0.0;
    for (std::size_t i = 0; i < profile.nodes(); ++i) {
      w.values_[i] = profile(i, 0);
      s += std::norm(w.values_[i]);
    }
    if (s == 0.0) throw std::invalid_argument("Window: zero window");
    w.norm_ = std::sqrt(s * profile.lattice().cell_measure());
    return w;
  }

  /// L^2-normalized Gaussian 2^{d/4} a^{-d/2} e^{-pi |x|^2 / a^2}.
  static Window gaussian(const Lattice& lat, double width = 1.0) {
    if (!(width > 0.0)) throw std::invalid_argument("Window: width must be positive");
    return from_field(sample_field(lat, 1, [&](std::span<const double> x, std::span<cplx> v) {
      v[0] = gaussian_profile(x, {}, width);
    }));
  }

  const Lattice& lattice() const { return lattice_; }
  std::span<const cplx> values() const { return values_; }
  double l2_norm() const { return norm_; }

 private:
  explicit Window(Lattice lat) : lattice_(std::move(lat)), values_(lattice_.size()) {}
  Lattice lattice_;
  std::vector<cplx> values_;
  double norm_ = 0.0;
};

enum class ValueKind { Scalar, Vector, Matrix };

/// Values per phase-space node: 1, n or n*n.
inline int value_dims(ValueKind kind, int n) {
  switch (kind) {
    case ValueKind::Scalar: return 1;
    case ValueKind::Vector: return n;
    case ValueKind::Matrix: return n * n;
  }
  return 0;
}

/// |v| of one node value: absolute value, Euclidean norm, or operator norm.
inline double value_modulus(ValueKind kind, int n, std::span<const cplx> v) {
  switch (kind) {
    case ValueKind::Scalar: return std::abs(v[0]);
    case ValueKind::Vector: {
      double s = 0.0;
      for (const auto& z : v) s += std::norm(z);
      return std::sqrt(s);
    }
    case ValueKind::Matrix: {
      if (n == 1) return std::abs(v[0]);
      if (n == 2) {
        // largest eigenvalue of A^*A in closed form
        const double a = std::norm(v[0]) + std::norm(v[2]);
        const double c = std::norm(v[1]) + std::norm(v[3]);
        const cplx b = std::conj(v[0]) * v[1] + std::conj(v[2]) * v[3];
        const double h = 0.5 * (a - c);
        return std::sqrt(std::max(0.0, 0.5 * (a + c) + std::sqrt(h * h + std::norm(b))));
      }
      Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(v.data(), n, n);
      const Eigen::MatrixXcd h = m.adjoint() * m;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
      return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    }
  }
  return 0.0;
}

/// Samples over (x, xi): node (ix, ixi) holds value_dims values starting at
/// ((ix * Nxi) + ixi) * value_dims.
struct PhaseSpaceArray {
  Lattice positions;
  Lattice frequencies;
  ValueKind kind = ValueKind::Scalar;
  int n = 1;
  std::vector<cplx> values;

  PhaseSpaceArray(Lattice x, Lattice xi, ValueKind k, int dim)
      : positions(std::move(x)), frequencies(std::move(xi)), kind(k), n(dim) {
    if (n < 1) throw std::invalid_argument("PhaseSpaceArray: value dimension must be >= 1");
    values.assign(positions.size() * frequencies.size() * static_cast<std::size_t>(value_dims(kind, n)), cplx{});
  }

  int dims() const { return value_dims(kind, n); }

  std::span<cplx> at(std::size_t ix, std::size_t ixi) {
    return {values.data() + (ix * frequencies.size() + ixi) * dims(), static_cast<std::size_t>(dims())};
  }
  std::span<const cplx> at(std::size_t ix, std::size_t ixi) const {
    return {values.data() + (ix * frequencies.size() + ixi) * dims(), static_cast<std::size_t>(dims())};
  }
  double modulus(std::size_t ix, std::size_t ixi) const { return value_modulus(kind, n, at(ix, ixi)); }
};

/// Weighted mixed norm specification.
///   M: ( int ( int |V(x,xi)|^p <x>^{rp} dx )^{q/p} <xi>^{sq} dxi )^{1/q}
///   W: ( int ( int |V(x,xi)|^p <xi>^{rp} dxi )^{q/p} <x>^{sq} dx )^{1/q}
struct NormSpec {
  char kind = 'M';
  double p = 2.0;
  double q = 2.0;
  double r = 0.0;
  double s = 0.0;

  void validate() const {
    if (kind != 'M' && kind != 'W') throw std::invalid_argument("NormSpec: kind must be M or W");
    if (!(p >= 1.0) || !(q >= 1.0)) throw std::invalid_argument("NormSpec: exponents must lie in [1, inf]");
    if (!std::isfinite(r) || !std::isfinite(s)) throw std::invalid_argument("NormSpec: weights must be finite");
  }

  /// Parses "M:p:q:r:s"; "inf" denotes an infinite exponent.
  static NormSpec parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
    if (parts.size() != 5 || parts[0].size() != 1) throw std::invalid_argument("NormSpec: expected K:p:q:r:s, got '" + text + "'");
    auto num = [&](const std::string& t, bool exponent) {
      if (exponent && (t == "inf" || t == "Inf" || t == "INF")) return kInf;
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(t, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != t.size() || t.empty()) throw std::invalid_argument("NormSpec: bad number '" + t + "'");
      return v;
    };
    NormSpec spec{parts[0][0], num(parts[1], true), num(parts[2], true), num(parts[3], false), num(parts[4], false)};
    spec.validate();
    return spec;
  }

  std::string str() const {
    auto f = [](double v) {
      if (std::isinf(v)) return std::string("inf");
      std::ostringstream o;
      o << v;
      return o.str();
    };
    return std::string(1, kind) + ":" + f(p) + ":" + f(q) + ":" + f(r) + ":" + f(s);
  }
};

struct NormResult {
  double value = 0.0;
  double tail_fraction = 0.0;
  bool tail_flag = false;
};

/// Fraction of phase-space mass allowed in the outer shell before flagging.
inline constexpr double kTailThreshold = 1e-8;

namespace detail {

inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

// Outer 10% shell: within ceil(N/20) nodes of either edge on some axis.
inline int shell_width(int nodes) { return static_cast<int>(std::ceil(0.05 * nodes)); }

inline bool in_shell(const Lattice& lat, std::size_t index, int width) {
  const int n = lat.nodes_per_axis();
  for (int j = 0; j < lat.dim(); ++j) {
    const int k = static_cast<int>(index % n);
    index /= n;
    if (k < width || k >= n - width) return true;
  }
  return false;
}

inline double pow_p(double v, double p) {
  if (p == 1.0) return v;
  if (p == 2.0) return v * v;
  return std::pow(v, p);
}

inline double root_p(double v, double p) {
  if (p == 1.0) return v;
  if (p == 2.0) return std::sqrt(v);
  return std::pow(v, 1.0 / p);
}

inline std::vector<double> weights_on(const Lattice& lat, double order) {
  std::vector<double> w(lat.size());
  std::vector<double> z(lat.dim());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    lat.positions_of(i, z);
    w[i] = bracket_weight(z, order);
  }
  return w;
}

}  // namespace detail

/// Streaming evaluation of a mixed norm from rows of moduli |V(x_i, .)|.
/// Rows may be a subsample of the x-nodes; `row_measure` is the x-measure
/// each row stands for.
class MixedNormAccumulator {
 public:
  MixedNormAccumulator(const Lattice& positions, const Lattice& frequencies, const NormSpec& spec)
      : positions_(positions), frequencies_(frequencies), spec_(spec) {
    spec_.validate();
    if (positions.dim() != frequencies.dim()) throw std::invalid_argument("MixedNormAccumulator: dimension mismatch");
    const bool m = spec_.kind == 'M';
    inner_weight_x_ = detail::weights_on(positions, m ? spec_.r : spec_.s);
    weight_xi_ = detail::weights_on(frequencies, m ? spec_.s : spec_.r);
    if (m) {
      inner_.assign(frequencies.size(), 0.0);
      comp_.assign(frequencies.size(), 0.0);
    }
    shell_x_ = detail::shell_width(positions.nodes_per_axis());
    shell_xi_ = detail::shell_width(frequencies.nodes_per_axis());
  }

  void add_row(std::size_t ix, std::span<const double> moduli, double row_measure) {
    if (moduli.size() != frequencies_.size()) throw std::invalid_argument("MixedNormAccumulator: row length mismatch");
    const bool x_shell = detail::in_shell(positions_, ix, shell_x_);
    double row_mass = 0.0;
    double row_tail = 0.0;
    for (std::size_t k = 0; k < moduli.size(); ++k) {
      const double m2 = moduli[k] * moduli[k];
      row_mass += m2;
      if (x_shell || detail::in_shell(frequencies_, k, shell_xi_)) row_tail += m2;
    }
    mass_ += row_mass * row_measure;
    tail_ += row_tail * row_measure;

    const double dxi = frequencies_.cell_measure();
    if (spec_.kind == 'M') {
      const double wx = inner_weight_x_[ix];
      for (std::size_t k = 0; k < moduli.size(); ++k) {
        const double v = moduli[k] * wx;
        if (std::isinf(spec_.p)) {
          inner_[k] = std::max(inner_[k], v);
        } else {
          // Neumaier-compensated accumulation across rows
          const double term = detail::pow_p(v, spec_.p) * row_measure;
          const double t = inner_[k] + term;
          comp_[k] += std::abs(inner_[k]) >= std::abs(term) ? (inner_[k] - t) + term : (term - t) + inner_[k];
          inner_[k] = t;
        }
      }
    } else {
      double inner = 0.0;
      if (std::isinf(spec_.p)) {
        for (std::size_t k = 0; k < moduli.size(); ++k) inner = std::max(inner, moduli[k] * weight_xi_[k]);
      } else {
        row_terms_.resize(moduli.size());
        for (std::size_t k = 0; k < moduli.size(); ++k) row_terms_[k] = detail::pow_p(moduli[k] * weight_xi_[k], spec_.p);
        inner = detail::root_p(detail::pairwise_sum(row_terms_) * dxi, spec_.p);
      }
      const double v = inner * inner_weight_x_[ix];
      if (std::isinf(spec_.q)) {
        outer_max_ = std::max(outer_max_, v);
      } else {
        outer_terms_.push_back(detail::pow_p(v, spec_.q) * row_measure);
      }
    }
  }

  NormResult finish() const {
    NormResult res;
    const double dxi = frequencies_.cell_measure();
    if (spec_.kind == 'M') {
      std::vector<double> terms(inner_.size());
      double mx = 0.0;
      for (std::size_t k = 0; k < inner_.size(); ++k) {
        const double inner = std::isinf(spec_.p) ? inner_[k] : detail::root_p(inner_[k] + comp_[k], spec_.p);
        const double v = inner * weight_xi_[k];
        if (std::isinf(spec_.q)) {
          mx = std::max(mx, v);
        } else {
          terms[k] = detail::pow_p(v, spec_.q);
        }
      }
      res.value = std::isinf(spec_.q) ? mx : detail::root_p(detail::pairwise_sum(terms) * dxi, spec_.q);
    } else {
      res.value = std::isinf(spec_.q) ? outer_max_ : detail::root_p(detail::pairwise_sum(outer_terms_), spec_.q);
    }
    res.tail_fraction = mass_ > 0.0 ? tail_ / mass_ : 0.0;
    res.tail_flag = res.tail_fraction > kTailThreshold;
    return res;
  }

 private:
  Lattice positions_;
  Lattice frequencies_;
  NormSpec spec_;
  std::vector<double> inner_weight_x_;
  std::vector<double> weight_xi_;
  std::vector<double> inner_;
  std::vector<double> comp_;
  std::vector<double> row_terms_;
  std::vector<double> outer_terms_;
  double outer_max_ = 0.0;
  double mass_ = 0.0;
  double tail_ = 0.0;
  int shell_x_ = 0;
  int shell_xi_ = 0;
};

/// Calls fn(ix, row) for every x-node whose coordinates are multiples of
/// `stride`, where row holds V_g f(x_ix, .) on f.lattice().dual() with the
/// components of f interleaved.  V_g f(x, xi) = int f(y) conj(g(y - x)) e^{-2 pi i y xi} dy.
template <class Fn>
void for_each_stft_row(const SpinorField& f, const Window& g, int stride, Fn&& fn) {
  const Lattice& lat = f.lattice();
  if (!lat.same_as(g.lattice())) throw std::invalid_argument("stft: field and window lattices differ");
  const int n = lat.nodes_per_axis();
  if (stride < 1 || n % stride != 0) throw std::invalid_argument("stft: stride must divide the node count");
  const int d = lat.dim();
  const int c = f.components();
  const std::size_t size = lat.size();

  std::vector<cplx> gbar(size);
  for (std::size_t j = 0; j < size; ++j) gbar[j] = std::conj(g.values()[j]);

  // coordinates of every node, reused for all rows
  std::vector<int> coords(size * d);
  for (std::size_t j = 0; j < size; ++j) lat.coords(j, std::span<int>(coords.data() + j * d, d));

  std::vector<cplx> buf(size * c);
  std::vector<int> kx(d);
  for (std::size_t ix = 0; ix < size; ++ix) {
    lat.coords(ix, kx);
    bool on_grid = true;
    for (int a = 0; a < d; ++a) on_grid = on_grid && kx[a] % stride == 0;
    if (!on_grid) continue;
    for (std::size_t j = 0; j < size; ++j) {
      std::size_t gi = 0;
      for (int a = 0; a < d; ++a) gi = gi * n + static_cast<std::size_t>(((coords[j * d + a] - kx[a] + n / 2) % n + n) % n);
      const cplx w = gbar[gi];
      for (int cc = 0; cc < c; ++cc) buf[j * c + cc] = f(j, cc) * w;
    }
    detail::centered_transform(buf, lat, c, -1);
    fn(ix, std::span<const cplx>(buf));
  }
}

/// Full STFT array.  Scalar fields give Scalar values, spinors Vector values;
/// pass ValueKind::Matrix for fields storing n*n matrix entries.
inline PhaseSpaceArray stft(const SpinorField& f, const Window& g, std::optional<ValueKind> kind = std::nullopt) {
  ValueKind k = kind.value_or(f.components() == 1 ? ValueKind::Scalar : ValueKind::Vector);
  int n = f.components();
  if (k == ValueKind::Matrix) {
    n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(f.components()))));
    if (n * n != f.components()) throw std::invalid_argument("stft: matrix values need a square component count");
  }
  PhaseSpaceArray out(f.lattice(), f.lattice().dual(), k, n);
  const std::size_t row = f.lattice().size() * f.components();
  for_each_stft_row(f, g, 1, [&](std::size_t ix, std::span<const cplx> r) {
    std::copy(r.begin(), r.end(), out.values.begin() + static_cast<std::ptrdiff_t>(ix * row));
  });
  return out;
}

inline NormResult mixed_norm(const PhaseSpaceArray& v, const NormSpec& spec) {
  MixedNormAccumulator acc(v.positions, v.frequencies, spec);
  std::vector<double> row(v.frequencies.size());
  const double dx = v.positions.cell_measure();
  for (std::size_t ix = 0; ix < v.positions.size(); ++ix) {
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = v.modulus(ix, k);
    acc.add_row(ix, row, dx);
  }
  return acc.finish();
}

/// Mixed norm of V_g f without storing the phase-space array.  stride > 1
/// samples every stride-th x-node per axis (each row then carries stride^d
/// cells of measure).
inline NormResult modulation_norm(const SpinorField& f, const NormSpec& spec, const Window& g, int stride = 1,
                                  ValueKind kind = ValueKind::Vector) {
  const Lattice& lat = f.lattice();
  const Lattice dual = lat.dual();
  int n = f.components();
  if (kind == ValueKind::Matrix) n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(f.components()))));
  if (kind == ValueKind::Scalar && f.components() != 1) throw std::invalid_argument("modulation_norm: scalar kind needs one component");
  MixedNormAccumulator acc(lat, dual, spec);
  std::vector<double> row(dual.size());
  const double measure = lat.cell_measure() * std::pow(static_cast<double>(stride), lat.dim());
  const int c = f.components();
  for_each_stft_row(f, g, stride, [&](std::size_t ix, std::span<const cplx> r) {
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = value_modulus(kind, n, r.subspan(k * c, c));
    acc.add_row(ix, row, measure);
  });
  return acc.finish();
}

inline NormResult modulation_norm(const SpinorField& f, const NormSpec& spec) {
  return modulation_norm(f, spec, Window::gaussian(f.lattice()));
}

/// sup_x |V_g f(x, xi)| for every frequency node (sampled rows).
inline std::vector<double> frequency_envelope(const SpinorField& f, const Window& g, int stride = 1,
                                              ValueKind kind = ValueKind::Vector) {
  const Lattice dual = f.lattice().dual();
  int n = f.components();
  if (kind == ValueKind::Matrix) n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(f.components()))));
  const int c = f.components();
  std::vector<double> env(dual.size(), 0.0);
  for_each_stft_row(f, g, stride, [&](std::size_t, std::span<const cplx> r) {
    for (std::size_t k = 0; k < env.size(); ++k) env[k] = std::max(env[k], value_modulus(kind, n, r.subspan(k * c, c)));
  });
  return env;
}

/// Bounded uniform partition of unity on a lattice: psi_k(t) = phi(t - k) / sum_j phi(t - j)
/// for integer centers k in [-P/2, P/2), with phi = 1 on [0,1]^d and supported in [-1,2]^d.
class Bupu {
 public:
  /// Smoothed step: 0 for u <= 0, 1 for u >= 1, C-infinity in between.
  static double smooth_step(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / u);
    const double b = std::exp(-1.0 / (1.0 - u));
    return a / (a + b);
  }

  /// One-dimensional base bump: 1 on [0,1], 0 outside (-1,2).
  static double bump(double u) { return smooth_step(u + 1.0) * smooth_step(2.0 - u); }

  explicit Bupu(const Lattice& lat) : lattice_(lat) {
    const int d = lat.dim();
    const int n = lat.nodes_per_axis();
    std::vector<int> counts(d);
    for (int j = 0; j < d; ++j) {
      const double p = lat.period(j);
      if (std::abs(p - std::round(p)) > 1e-9 || std::round(p) < 4) {
        throw std::invalid_argument("Bupu: lattice periods must be integers >= 4");
      }
      if (n / p < 8.0 - 1e-9) throw std::invalid_argument("Bupu: lattice too coarse (fewer than 8 nodes per unit cell)");
      counts[j] = static_cast<int>(std::lround(p));
    }

    std::size_t total = 1;
    for (int cnt : counts) total *= static_cast<std::size_t>(cnt);
    centers_.resize(total);
    for (std::size_t c = 0; c < total; ++c) {
      std::size_t rem = c;
      centers_[c].resize(d);
      for (int j = d - 1; j >= 0; --j) {
        centers_[c][j] = static_cast<int>(rem % counts[j]) - counts[j] / 2;
        rem /= counts[j];
      }
    }

    // per-axis raw bump values phi1(t - k), periodized
    std::vector<std::vector<std::vector<double>>> axis(d);
    for (int j = 0; j < d; ++j) {
      const double p = lat.period(j);
      axis[j].assign(counts[j], std::vector<double>(n));
      for (int kc = 0; kc < counts[j]; ++kc) {
        const int k = kc - counts[j] / 2;
        for (int i = 0; i < n; ++i) {
          double u = lat.position(j, i) - k;
          u -= p * std::floor((u - (-p / 2 + 0.5)) / p);
          axis[j][kc][i] = bump(u);
        }
      }
    }

    const std::size_t size = lat.size();
    std::vector<double> sum(size, 0.0);
    std::vector<std::vector<std::pair<std::size_t, double>>> raw(total);
    std::vector<int> kn(d);
    for (std::size_t c = 0; c < total; ++c) {
      for (std::size_t i = 0; i < size; ++i) {
        lat.coords(i, kn);
        double v = 1.0;
        for (int j = 0; j < d && v != 0.0; ++j) v *= axis[j][centers_[c][j] + counts[j] / 2][kn[j]];
        if (v != 0.0) {
          raw[c].emplace_back(i, v);
          sum[i] += v;
        }
      }
    }
    for (double s : sum) {
      if (!(s > 0.0)) throw std::logic_error("Bupu: bumps do not cover the lattice");
    }
    for (auto& list : raw) {
      for (auto& [i, v] : list) v /= sum[i];
    }
    pieces_ = std::move(raw);
  }

  const Lattice& lattice() const { return lattice_; }
  std::size_t count() const { return centers_.size(); }
  std::span<const int> center(std::size_t k) const { return centers_[k]; }

  /// Nonzero (node, psi_k) pairs of bump k.
  const std::vector<std::pair<std::size_t, double>>& piece(std::size_t k) const { return pieces_[k]; }

  /// Dense psi_k on the lattice.
  std::vector<double> dense(std::size_t k) const {
    std::vector<double> v(lattice_.size(), 0.0);
    for (const auto& [i, w] : pieces_[k]) v[i] = w;
    return v;
  }

 private:
  Lattice lattice_;
  std::vector<std::vector<int>> centers_;
  std::vector<std::vector<std::pair<std::size_t, double>>> pieces_;
};

/// BUPU on the lattice appropriate for `kind`: the frequency lattice for M,
/// the spatial lattice for W.
inline Bupu build_bupu(const Lattice& lat) { return Bupu(lat); }

namespace detail {

inline double shell_mass_fraction(const SpinorField& f) {
  const int w = shell_width(f.lattice().nodes_per_axis());
  double total = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < f.nodes(); ++i) {
    double s = 0.0;
    for (const auto& v : f.node(i)) s += std::norm(v);
    total += s;
    if (in_shell(f.lattice(), i, w)) tail += s;
  }
  return total > 0.0 ? tail / total : 0.0;
}

// (integral of (|h| <z>^w)^p over the field's lattice)^(1/p), or the weighted max.
inline double weighted_lp(const SpinorField& h, double p, double w) {
  const Lattice& lat = h.lattice();
  std::vector<double> terms(lat.size());
  std::vector<double> z(lat.dim());
  double mx = 0.0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    lat.positions_of(i, z);
    double s = 0.0;
    for (const auto& v : h.node(i)) s += std::norm(v);
    const double m = std::sqrt(s) * bracket_weight(z, w);
    if (std::isinf(p)) {
      mx = std::max(mx, m);
    } else {
      terms[i] = pow_p(m, p);
    }
  }
  return std::isinf(p) ? mx : root_p(pairwise_sum(terms) * lat.cell_measure(), p);
}

}  // namespace detail

/// Discrete norm through frequency-uniform decomposition.
///   M: ( sum_k || F^{-1} psi_k F f ||_{L^p_r}^q <k>^{sq} )^{1/q}, bupu on f.lattice().dual()
///   W: ( sum_k || F (psi_k f) ||_{L^p_r}^q <k>^{sq} )^{1/q},       bupu on f.lattice()
inline NormResult uniform_decomposition_norm(const SpinorField& f, const NormSpec& spec, const Bupu& bupu) {
  spec.validate();
  const bool m = spec.kind == 'M';
  const Lattice expected = m ? f.lattice().dual() : f.lattice();
  if (!bupu.lattice().same_as(expected)) {
    throw std::invalid_argument(m ? "uniform_decomposition_norm: M kind needs a BUPU on the frequency lattice"
                                  : "uniform_decomposition_norm: W kind needs a BUPU on the spatial lattice");
  }
  const SpinorField fhat = forward_ft(f);
  const SpinorField& base = m ? fhat : f;
  const int c = f.components();

  std::vector<double> terms;
  double mx = 0.0;
  std::vector<double> kc(f.lattice().dim());
  for (std::size_t k = 0; k < bupu.count(); ++k) {
    SpinorField piece = base.relocated(base.lattice());
    bool any = false;
    for (const auto& [i, w] : bupu.piece(k)) {
      for (int a = 0; a < c; ++a) {
        piece(i, a) = base(i, a) * w;
        any = any || piece(i, a) != cplx{};
      }
    }
    double local = 0.0;
    if (any) {
      const SpinorField h = m ? inverse_ft(piece) : forward_ft(piece);
      local = detail::weighted_lp(h, spec.p, spec.r);
    }
    for (std::size_t j = 0; j < kc.size(); ++j) kc[j] = bupu.center(k)[j];
    const double v = local * bracket_weight(kc, spec.s);
    if (std::isinf(spec.q)) {
      mx = std::max(mx, v);
    } else {
      terms.push_back(detail::pow_p(v, spec.q));
    }
  }
  NormResult res;
  res.value = std::isinf(spec.q) ? mx : detail::root_p(detail::pairwise_sum(terms), spec.q);
  res.tail_fraction = std::max(detail::shell_mass_fraction(f), detail::shell_mass_fraction(fhat));
  res.tail_flag = res.tail_fraction > kTailThreshold;
  return res;
}

struct BernsteinCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  int order = 0;
};

/// lhs = ||f||_{FL^1} = int |fhat|;  rhs = ||f||_2^{1 - d/(2N)} (sum_j ||d_j^N f||_2)^{d/(2N)}
/// with N the smallest integer above d/2.
inline BernsteinCheck bernstein_bound_check(const SpinorField& f) {
  const int d = f.lattice().dim();
  BernsteinCheck out;
  out.order = d / 2 + 1;
  const SpinorField fhat = forward_ft(f);
  out.lhs = detail::weighted_lp(fhat, 1.0, 0.0);
  const double l2 = f.l2_norm();
  if (l2 == 0.0) return out;
  double deriv = 0.0;
  for (int j = 0; j < d; ++j) deriv += derivative(f, j, out.order).l2_norm();
  const double theta = d / (2.0 * out.order);
  out.rhs = std::pow(l2, 1.0 - theta) * std::pow(deriv, theta);
  return out;
}

}  // namespace tfdirac
