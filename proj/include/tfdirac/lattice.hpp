#pragma once

#include "tfdirac/clifford.hpp"
#include "tfdirac/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tfdirac {

/// Periodic lattice with N nodes on every axis.
///
/// Positions:   x_k = -P/2 + k P/N,          k = 0 .. N-1
/// Frequencies: xi_k = (k - N/2) / P         (centered ordering)
/// so x spans [-P/2, P/2) and xi spans [-N/(2P), N/(2P)).  The frequency nodes
/// of a lattice are the position nodes of its dual(), whose period is N/P.
/// Flat node indices are row-major (last axis fastest).
class Lattice {
 public:
  Lattice(int dim, int nodes, double period) : Lattice(nodes, std::vector<double>(dim > 0 ? dim : 0, period)) {
    if (dim < 1) throw std::invalid_argument("Lattice: dimension must be >= 1");
  }

  Lattice(int nodes, std::vector<double> periods) : nodes_(nodes), periods_(std::move(periods)) {
    if (periods_.empty()) throw std::invalid_argument("Lattice: dimension must be >= 1");
    if (nodes_ < 2 || (nodes_ & (nodes_ - 1)) != 0) {
      throw std::invalid_argument("Lattice: nodes per axis must be a power of two >= 2, got " + std::to_string(nodes_));
    }
    for (double p : periods_) {
      if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("Lattice: periods must be positive and finite");
    }
    size_ = 1;
    for (std::size_t j = 0; j < periods_.size(); ++j) size_ *= static_cast<std::size_t>(nodes_);
  }

  int dim() const { return static_cast<int>(periods_.size()); }
  int nodes_per_axis() const { return nodes_; }
  std::size_t size() const { return size_; }
  double period(int axis) const { return periods_.at(axis); }
  std::span<const double> periods() const { return periods_; }
  double spacing(int axis) const { return periods_.at(axis) / nodes_; }

  double cell_measure() const {
    double v = 1.0;
    for (double p : periods_) v *= p / nodes_;
    return v;
  }

  double position(int axis, int k) const { return -periods_[axis] / 2 + k * (periods_[axis] / nodes_); }
  double frequency(int axis, int k) const { return (k - nodes_ / 2) / periods_[axis]; }

  /// Lattice whose position nodes are this lattice's frequency nodes.
  Lattice dual() const {
    std::vector<double> p(periods_.size());
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = nodes_ / periods_[j];
    return Lattice(nodes_, std::move(p));
  }

  /// Axes of `other` appended after this lattice's axes (phase-space lattices).
  Lattice product(const Lattice& other) const {
    if (other.nodes_ != nodes_) throw std::invalid_argument("Lattice::product: node counts differ");
    std::vector<double> p = periods_;
    p.insert(p.end(), other.periods_.begin(), other.periods_.end());
    return Lattice(nodes_, std::move(p));
  }

  void coords(std::size_t index, std::span<int> out) const {
    for (int j = dim() - 1; j >= 0; --j) {
      out[j] = static_cast<int>(index % nodes_);
      index /= nodes_;
    }
  }

  std::size_t index(std::span<const int> k) const {
    std::size_t idx = 0;
    for (int j = 0; j < dim(); ++j) {
      const int kk = ((k[j] % nodes_) + nodes_) % nodes_;
      idx = idx * nodes_ + static_cast<std::size_t>(kk);
    }
    return idx;
  }

  void positions_of(std::size_t index, std::span<double> out) const {
    for (int j = dim() - 1; j >= 0; --j) {
      out[j] = position(j, static_cast<int>(index % nodes_));
      index /= nodes_;
    }
  }

  void frequencies_of(std::size_t index, std::span<double> out) const {
    for (int j = dim() - 1; j >= 0; --j) {
      out[j] = frequency(j, static_cast<int>(index % nodes_));
      index /= nodes_;
    }
  }

  bool same_as(const Lattice& o) const {
    if (o.nodes_ != nodes_ || o.periods_.size() != periods_.size()) return false;
    for (std::size_t j = 0; j < periods_.size(); ++j) {
      if (std::abs(o.periods_[j] - periods_[j]) > 1e-12 * std::max(1.0, std::abs(periods_[j]))) return false;
    }
    return true;
  }

 private:
  int nodes_;
  std::vector<double> periods_;
  std::size_t size_ = 0;
};

/// <z>_m^s = (m^2 + |z|^2)^{s/2}.  m = 1 is the Japanese bracket.
inline double bracket_weight(std::span<const double> z, double s, double m = 1.0) {
  double r2 = m * m;
  for (double v : z) r2 += v * v;
  if (s == 0.0) return 1.0;
  if (s == 1.0) return std::sqrt(r2);
  if (s == 2.0) return r2;
  return std::pow(r2, s / 2);
}

/// C^n-valued samples on a lattice, node-major with components interleaved.
///
/// A field may carry the Dirac matrix set it belongs to; scalar fields
/// (components == 1) usually do not.
class SpinorField {
 public:
  SpinorField(Lattice lattice, int components, std::shared_ptr<const DiracMatrixSet> dirac = nullptr)
      : lattice_(std::move(lattice)), components_(components), dirac_(std::move(dirac)) {
    if (components_ < 1) throw std::invalid_argument("SpinorField: component count must be >= 1");
    if (dirac_ && dirac_->spinor_dim != components_) {
      throw std::invalid_argument("SpinorField: component count does not match the Dirac matrix set");
    }
    data_.assign(lattice_.size() * static_cast<std::size_t>(components_), cplx{});
  }

  explicit SpinorField(Lattice lattice, std::shared_ptr<const DiracMatrixSet> dirac)
      : SpinorField(std::move(lattice), dirac ? dirac->spinor_dim : 1, dirac) {}

  const Lattice& lattice() const { return lattice_; }
  int components() const { return components_; }
  std::size_t nodes() const { return lattice_.size(); }
  const std::shared_ptr<const DiracMatrixSet>& dirac() const { return dirac_; }

  std::span<cplx> values() { return data_; }
  std::span<const cplx> values() const { return data_; }

  std::span<cplx> node(std::size_t i) { return {data_.data() + i * components_, static_cast<std::size_t>(components_)}; }
  std::span<const cplx> node(std::size_t i) const {
    return {data_.data() + i * components_, static_cast<std::size_t>(components_)};
  }

  cplx& operator()(std::size_t i, int c) { return data_[i * components_ + c]; }
  const cplx& operator()(std::size_t i, int c) const { return data_[i * components_ + c]; }

  /// Same shape and metadata, values on another lattice (used by transforms).
  SpinorField relocated(Lattice lattice) const {
    SpinorField f(std::move(lattice), components_, dirac_);
    return f;
  }

  /// sqrt( sum |psi|^2 * cell measure )
  double l2_norm() const {
    double s = 0.0;
    for (const auto& v : data_) s += std::norm(v);
    return std::sqrt(s * lattice_.cell_measure());
  }

  SpinorField& operator+=(const SpinorField& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  SpinorField& operator-=(const SpinorField& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  SpinorField& operator*=(cplx a) {
    for (auto& v : data_) v *= a;
    return *this;
  }
  friend SpinorField operator+(SpinorField a, const SpinorField& b) { return a += b; }
  friend SpinorField operator-(SpinorField a, const SpinorField& b) { return a -= b; }
  friend SpinorField operator*(cplx s, SpinorField a) { return a *= s; }

 private:
  void check_compatible(const SpinorField& o) const {
    if (o.components_ != components_ || !o.lattice_.same_as(lattice_)) {
      throw std::invalid_argument("SpinorField: incompatible operands");
    }
  }

  Lattice lattice_;
  int components_;
  std::shared_ptr<const DiracMatrixSet> dirac_;
  std::vector<cplx> data_;
};

/// n x n matrices on a lattice (row-major per node); multiplication potentials.
struct MatrixField {
  Lattice lattice;
  int n = 0;
  std::vector<cplx> values;

  MatrixField(Lattice lat, int dim) : lattice(std::move(lat)), n(dim) {
    if (n < 1) throw std::invalid_argument("MatrixField: matrix dimension must be >= 1");
    values.assign(lattice.size() * static_cast<std::size_t>(n * n), cplx{});
  }

  std::span<cplx> node(std::size_t i) { return {values.data() + i * n * n, static_cast<std::size_t>(n * n)}; }
  std::span<const cplx> node(std::size_t i) const {
    return {values.data() + i * n * n, static_cast<std::size_t>(n * n)};
  }
};

namespace detail {

// Multiplies node i by (-1)^{sum of its axis indices}.
inline void checkerboard(std::span<cplx> data, const Lattice& lat, int howmany) {
  const int d = lat.dim();
  const int n = lat.nodes_per_axis();
  std::vector<int> k(d, 0);
  int sum = 0;
  const std::size_t size = lat.size();
  for (std::size_t i = 0; i < size; ++i) {
    if (sum & 1) {
      for (int c = 0; c < howmany; ++c) data[i * howmany + c] = -data[i * howmany + c];
    }
    for (int j = d - 1; j >= 0; --j) {
      ++sum;
      if (++k[j] < n) break;
      sum -= n;
      k[j] = 0;
    }
  }
}

/// Centered continuous-transform approximation on raw interleaved data living
/// on `lat`.  Result values correspond to nodes of lat.dual().
///   sign = -1: F(xi_l) = dx^d sum_k f(x_k) e^{-2 pi i x_k xi_l}
///   sign = +1: same with e^{+2 pi i ...}
inline void centered_transform(std::span<cplx> data, const Lattice& lat, int howmany, int sign) {
  checkerboard(data, lat, howmany);
  dft_inplace(data, lat.dim(), lat.nodes_per_axis(), howmany, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD);
  checkerboard(data, lat, howmany);
  double scale = lat.cell_measure();
  if ((lat.dim() * (lat.nodes_per_axis() / 2)) % 2 != 0) scale = -scale;
  for (auto& v : data) v *= scale;
}

}  // namespace detail

/// Componentwise Fourier transform, F f(xi) = int e^{-2 pi i x xi} f(x) dx,
/// sampled on the frequency nodes.  The result lives on lattice().dual().
inline SpinorField forward_ft(const SpinorField& f) {
  SpinorField out = f.relocated(f.lattice().dual());
  std::copy(f.values().begin(), f.values().end(), out.values().begin());
  detail::centered_transform(out.values(), f.lattice(), f.components(), -1);
  return out;
}

/// Inverse of forward_ft: takes samples on a frequency lattice back to positions.
inline SpinorField inverse_ft(const SpinorField& fhat) {
  SpinorField out = fhat.relocated(fhat.lattice().dual());
  std::copy(fhat.values().begin(), fhat.values().end(), out.values().begin());
  detail::centered_transform(out.values(), fhat.lattice(), fhat.components(), +1);
  return out;
}

/// Samples fn(x) -> component values at every node.
inline SpinorField sample_field(const Lattice& lat, int components,
                                const std::function<void(std::span<const double>, std::span<cplx>)>& fn,
                                std::shared_ptr<const DiracMatrixSet> dirac = nullptr) {
  SpinorField f(lat, components, std::move(dirac));
  std::vector<double> x(lat.dim());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    lat.positions_of(i, x);
    fn(x, f.node(i));
  }
  return f;
}

/// 2^{d/4} a^{-d/2} e^{-pi |x-c|^2 / a^2}: L^2-normalized Gaussian of width a.
inline double gaussian_profile(std::span<const double> x, std::span<const double> center, double width) {
  double r2 = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double u = x[j] - (center.empty() ? 0.0 : center[j]);
    r2 += u * u;
  }
  const double d = static_cast<double>(x.size());
  return std::pow(2.0, d / 4) * std::pow(width, -d / 2) * std::exp(-std::numbers::pi * r2 / (width * width));
}

/// Scalar Fourier multiplier a(D) applied componentwise.
inline SpinorField apply_fourier_multiplier(const SpinorField& f, const std::function<cplx(std::span<const double>)>& symbol) {
  SpinorField fhat = forward_ft(f);
  const Lattice& flat = fhat.lattice();
  std::vector<double> xi(flat.dim());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    flat.positions_of(i, xi);
    const cplx a = symbol(xi);
    for (auto& v : fhat.node(i)) v *= a;
  }
  return inverse_ft(fhat);
}

/// Spectral partial derivative d^order / dx_axis^order.
inline SpinorField derivative(const SpinorField& f, int axis, int order) {
  if (axis < 0 || axis >= f.lattice().dim()) throw std::invalid_argument("derivative: axis out of range");
  if (order < 0) throw std::invalid_argument("derivative: order must be non-negative");
  return apply_fourier_multiplier(f, [&](std::span<const double> xi) {
    return std::pow(cplx{0.0, 2 * std::numbers::pi * xi[axis]}, order);
  });
}

/// Upsamples each component by a factor two per axis (same periods) through
/// zero-padding of the centered spectrum.  The Nyquist coefficient is split
/// evenly between +/- N/(2P), so the interpolant passes through the samples.
inline SpinorField upsample2(const SpinorField& f) {
  const Lattice& lat = f.lattice();
  const int d = lat.dim();
  const int n = lat.nodes_per_axis();
  const int c = f.components();
  Lattice fine(2 * n, std::vector<double>(lat.periods().begin(), lat.periods().end()));
  SpinorField fhat = forward_ft(f);
  SpinorField ghat = f.relocated(fine.dual());

  std::vector<int> k(d), kk(d);
  const int combos = 1 << d;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    lat.coords(i, k);
    for (int mask = 0; mask < combos; ++mask) {
      double w = 1.0;
      bool valid = true;
      for (int j = 0; j < d; ++j) {
        const bool nyq = k[j] == 0;
        const bool hi = (mask >> j) & 1;
        if (!nyq && hi) {
          valid = false;
          break;
        }
        if (nyq) w *= 0.5;
        kk[j] = nyq && hi ? 3 * n / 2 : k[j] + n / 2;
      }
      if (!valid) continue;
      const std::size_t target = fine.index(kk);
      for (int a = 0; a < c; ++a) ghat(target, a) += w * fhat(i, a);
    }
  }
  return inverse_ft(ghat);
}

}  // namespace tfdirac
