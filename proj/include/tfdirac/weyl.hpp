#pragma once

#include "tfdirac/io.hpp"
#include "tfdirac/lattice.hpp"
#include "tfdirac/tfa.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfdirac {

/// Canonical symplectic matrix J = [[0, I], [-I, 0]] on R^{2d} and its inverse.
struct SymplecticMap {
  Eigen::MatrixXd j;
  Eigen::MatrixXd j_inv;

  explicit SymplecticMap(int d) {
    if (d < 1) throw std::invalid_argument("SymplecticMap: dimension must be >= 1");
    j = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    j.topRightCorner(d, d) = Eigen::MatrixXd::Identity(d, d);
    j.bottomLeftCorner(d, d) = -Eigen::MatrixXd::Identity(d, d);
    j_inv = -j;
  }
};

/// Weyl symbols are Matrix-kind phase-space arrays over (lattice, lattice.dual()).
inline PhaseSpaceArray make_symbol(const Lattice& lat, int n,
                                   const std::function<void(std::span<const double>, std::span<const double>, Eigen::MatrixXcd&)>& fn) {
  PhaseSpaceArray s(lat, lat.dual(), ValueKind::Matrix, n);
  const Lattice dual = lat.dual();
  std::vector<double> x(lat.dim()), xi(lat.dim());
  Eigen::MatrixXcd m(n, n);
  for (std::size_t ix = 0; ix < lat.size(); ++ix) {
    lat.positions_of(ix, x);
    for (std::size_t k = 0; k < dual.size(); ++k) {
      dual.positions_of(k, xi);
      m.setZero();
      fn(x, xi, m);
      auto v = s.at(ix, k);
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) v[a * n + b] = m(a, b);
      }
    }
  }
  return s;
}

inline void check_symbol(const PhaseSpaceArray& sigma) {
  if (sigma.kind != ValueKind::Matrix) throw std::invalid_argument("symbol: values must be matrices");
  if (!sigma.frequencies.same_as(sigma.positions.dual())) throw std::invalid_argument("symbol: frequency lattice must be the dual lattice");
  for (const auto& v : sigma.values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw std::invalid_argument("symbol: non-finite entry");
  }
}

/// The symbol as an n*n-component field on the 2d-dimensional phase-space lattice.
inline SpinorField symbol_as_field(const PhaseSpaceArray& sigma) {
  SpinorField f(sigma.positions.product(sigma.frequencies), sigma.dims());
  std::copy(sigma.values.begin(), sigma.values.end(), f.values().begin());
  return f;
}

inline Snapshot to_snapshot(const PhaseSpaceArray& sigma, double mass = 0.0) {
  check_symbol(sigma);
  const Lattice& lat = sigma.positions;
  for (int j = 1; j < lat.dim(); ++j) {
    if (lat.period(j) != lat.period(0)) throw std::invalid_argument("snapshot: lattice must be isotropic");
  }
  Snapshot s;
  s.header.layout = SnapshotLayout::Symbol;
  s.header.dim = static_cast<std::uint32_t>(lat.dim());
  s.header.nodes = static_cast<std::uint32_t>(lat.nodes_per_axis());
  s.header.period = lat.period(0);
  s.header.spinor_dim = static_cast<std::uint32_t>(sigma.n);
  s.header.mass = mass;
  s.values = sigma.values;
  return s;
}

inline PhaseSpaceArray symbol_from_snapshot(const Snapshot& s) {
  if (s.header.layout != SnapshotLayout::Symbol) throw std::runtime_error("snapshot: not a symbol");
  const Lattice lat = s.spatial_lattice();
  PhaseSpaceArray sigma(lat, lat.dual(), ValueKind::Matrix, static_cast<int>(s.header.spinor_dim));
  sigma.values = s.values;
  return sigma;
}

/// W(f,g)(x,xi) = int f(x + y/2) (x) conj g(x - y/2) e^{-2 pi i y xi} dy.
/// Scalar fields give a Scalar array; spinors give the matrix of component
/// transforms, entry (a,b) = W(f_a, g_b).  Half-node shifts use the band-limited
/// interpolant of f and g.
inline PhaseSpaceArray wigner(const SpinorField& f, const SpinorField& g) {
  const Lattice& lat = f.lattice();
  if (!lat.same_as(g.lattice())) throw std::invalid_argument("wigner: fields live on different lattices");
  if (f.components() != g.components()) throw std::invalid_argument("wigner: component counts differ");
  const int n = f.components();
  const int d = lat.dim();
  const int nn = lat.nodes_per_axis();
  const int fine_n = 2 * nn;
  const SpinorField ff = upsample2(f);
  const SpinorField gf = upsample2(g);
  const Lattice& fine = ff.lattice();

  PhaseSpaceArray out(lat, lat.dual(), n == 1 ? ValueKind::Scalar : ValueKind::Matrix, n);
  const int dims = out.dims();
  const std::size_t size = lat.size();
  std::vector<cplx> buf(size * dims);
  std::vector<int> k(d), j(d), ip(d), im(d);
  for (std::size_t ix = 0; ix < size; ++ix) {
    lat.coords(ix, k);
    for (std::size_t iy = 0; iy < size; ++iy) {
      lat.coords(iy, j);
      for (int a = 0; a < d; ++a) {
        const int off = j[a] - nn / 2;
        ip[a] = ((2 * k[a] + off) % fine_n + fine_n) % fine_n;
        im[a] = ((2 * k[a] - off) % fine_n + fine_n) % fine_n;
      }
      const auto fv = ff.node(fine.index(ip));
      const auto gv = gf.node(fine.index(im));
      cplx* dst = buf.data() + iy * dims;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) dst[a * n + b] = fv[a] * std::conj(gv[b]);
      }
    }
    detail::centered_transform(buf, lat, dims, -1);
    std::copy(buf.begin(), buf.end(), out.values.begin() + static_cast<std::ptrdiff_t>(ix * size * dims));
  }
  return out;
}

/// Largest lattice accepted by the dense quantization.
inline constexpr int kQuantizeMaxNodes = 256;

/// Dense Weyl operator on the lattice spinor space, index node * n + component.
///   (sigma^w f)(x) = int K(x,y) f(y) dy,  K(x,y) = int e^{2 pi i (x-y) xi} sigma((x+y)/2, xi) dxi
/// with x - y taken as the shortest periodic difference; the midpoint uses the
/// band-limited interpolant of sigma in x.
inline Eigen::MatrixXcd quantize(const PhaseSpaceArray& sigma) {
  check_symbol(sigma);
  const Lattice& lat = sigma.positions;
  if (lat.dim() != 1) throw std::invalid_argument("quantize: only d = 1 is supported (dense kernel)");
  const int nn = lat.nodes_per_axis();
  if (nn > kQuantizeMaxNodes) {
    throw std::invalid_argument("quantize: N = " + std::to_string(nn) + " exceeds the dense limit N <= " +
                                std::to_string(kQuantizeMaxNodes));
  }
  const int n = sigma.n;
  const int nsq = n * n;
  const Lattice dual = lat.dual();

  // sigma(x, .) for all xi and entries as one multi-component field in x
  SpinorField rows(lat, static_cast<int>(dual.size()) * nsq);
  std::copy(sigma.values.begin(), sigma.values.end(), rows.values().begin());
  const SpinorField fine = upsample2(rows);

  // table[m][delta + N/2] = int e^{2 pi i delta dx xi} sigma~(m, xi) dxi
  const int fine_n = 2 * nn;
  std::vector<cplx> table(static_cast<std::size_t>(fine_n) * nn * nsq);
  std::vector<cplx> buf(dual.size() * nsq);
  for (int m = 0; m < fine_n; ++m) {
    const auto src = fine.node(static_cast<std::size_t>(m));
    std::copy(src.begin(), src.end(), buf.begin());
    detail::centered_transform(buf, dual, nsq, +1);
    std::copy(buf.begin(), buf.end(), table.begin() + static_cast<std::ptrdiff_t>(m) * nn * nsq);
  }

  const double dx = lat.cell_measure();
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(nn) * n, static_cast<Eigen::Index>(nn) * n);
  for (int a = 0; a < nn; ++a) {
    for (int b = 0; b < nn; ++b) {
      int delta = ((a - b) % nn + nn) % nn;
      if (delta >= nn / 2) delta -= nn;
      const cplx* k1 = &table[(static_cast<std::size_t>(((2 * b + delta) % fine_n + fine_n) % fine_n) * nn + (delta + nn / 2)) * nsq];
      if (delta == -nn / 2) {
        const cplx* k2 = &table[(static_cast<std::size_t>(((2 * b + nn / 2) % fine_n + fine_n) % fine_n) * nn + (delta + nn / 2)) * nsq];
        for (int r = 0; r < n; ++r) {
          for (int c = 0; c < n; ++c) op(a * n + r, b * n + c) = 0.5 * (k1[r * n + c] + k2[r * n + c]) * dx;
        }
      } else {
        for (int r = 0; r < n; ++r) {
          for (int c = 0; c < n; ++c) op(a * n + r, b * n + c) = k1[r * n + c] * dx;
        }
      }
    }
  }
  return op;
}

inline SpinorField apply_operator(const Eigen::MatrixXcd& op, const SpinorField& f) {
  const auto len = static_cast<Eigen::Index>(f.values().size());
  if (op.cols() != len || op.rows() != len) throw std::invalid_argument("apply_operator: size mismatch");
  Eigen::Map<const Eigen::VectorXcd> v(f.values().data(), len);
  SpinorField out = f.relocated(f.lattice());
  Eigen::Map<Eigen::VectorXcd>(out.values().data(), len) = op * v;
  return out;
}

/// Dense forward transform matrix (with dx^d), identity on the n components.
inline Eigen::MatrixXcd fourier_matrix(const Lattice& lat, int n) {
  const Lattice dual = lat.dual();
  const auto size = static_cast<Eigen::Index>(lat.size());
  Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(size * n, size * n);
  std::vector<double> x(lat.dim()), xi(lat.dim());
  for (Eigen::Index l = 0; l < size; ++l) {
    dual.positions_of(static_cast<std::size_t>(l), xi);
    for (Eigen::Index k = 0; k < size; ++k) {
      lat.positions_of(static_cast<std::size_t>(k), x);
      double ph = 0.0;
      for (int j = 0; j < lat.dim(); ++j) ph += x[j] * xi[j];
      const cplx e = std::polar(lat.cell_measure(), -2 * std::numbers::pi * ph);
      for (int c = 0; c < n; ++c) f(l * n + c, k * n + c) = e;
    }
  }
  return f;
}

/// tau = sigma o J^{-1}, i.e. tau(u, v) = sigma(-v, u), as a symbol on lattice.dual().
inline PhaseSpaceArray rotate_symbol(const PhaseSpaceArray& sigma) {
  check_symbol(sigma);
  const Lattice& lat = sigma.positions;
  if (lat.dim() != 1) throw std::invalid_argument("rotate_symbol: only d = 1 is supported");
  const int nn = lat.nodes_per_axis();
  const Lattice dual = lat.dual();
  PhaseSpaceArray tau(dual, dual.dual(), ValueKind::Matrix, sigma.n);
  for (int i = 0; i < nn; ++i) {
    for (int j = 0; j < nn; ++j) {
      const auto src = sigma.at(static_cast<std::size_t>((nn - j) % nn), static_cast<std::size_t>(i));
      auto dst = tau.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  return tau;
}

/// Operator norm (L^2 with node measures) of F sigma^w - (sigma o J^{-1})^w F.
inline double symplectic_covariance_check(const PhaseSpaceArray& sigma) {
  const Eigen::MatrixXcd a = quantize(sigma);
  const Eigen::MatrixXcd b = quantize(rotate_symbol(sigma));
  const Eigen::MatrixXcd f = fourier_matrix(sigma.positions, sigma.n);
  const Eigen::MatrixXcd r = f * a - b * f;
  const double scale = std::sqrt(sigma.frequencies.cell_measure() / sigma.positions.cell_measure());
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(r);
  return scale * (svd.singularValues().size() ? svd.singularValues()(0) : 0.0);
}

/// Discrete M^{inf,1}_{0,s} norm of a matrix symbol on the 2d-dimensional
/// phase-space lattice, matrix values in operator norm.  stride subsamples the
/// sup over phase-space positions.
inline NormResult sjostrand_norm(const PhaseSpaceArray& sigma, double s, int stride = 1) {
  check_symbol(sigma);
  const SpinorField f = symbol_as_field(sigma);
  return modulation_norm(f, NormSpec{'M', kInf, 1.0, 0.0, s}, Window::gaussian(f.lattice()), stride, ValueKind::Matrix);
}

/// Discrete M^{inf,1}_{0,s} norm of a function on R^d.
inline NormResult sjostrand_norm(const SpinorField& f, double s, int stride = 1) {
  return modulation_norm(f, NormSpec{'M', kInf, 1.0, 0.0, s}, Window::gaussian(f.lattice()), stride);
}

/// Smooth radial cutoff: 1 for |xi| <= 1, 0 for |xi| >= 2.
inline double split_cutoff(std::span<const double> xi) {
  double r2 = 0.0;
  for (double v : xi) r2 += v * v;
  return 1.0 - Bupu::smooth_step(std::sqrt(r2) - 1.0);
}

struct SplitResult {
  SpinorField low;   // chi(D) f
  SpinorField high;  // f - chi(D) f
  int order = 0;
};

inline SplitResult split(const SpinorField& f, int k) {
  if (k < 0) throw std::invalid_argument("split: derivative order must be non-negative");
  SpinorField low = apply_fourier_multiplier(f, [](std::span<const double> xi) { return cplx{split_cutoff(xi), 0.0}; });
  SpinorField high = f - low;
  return {std::move(low), std::move(high), k};
}

struct SplitDiagnostics {
  std::vector<NormResult> low_derivatives;  // M^{inf,1} of d_j^order f1, one per axis
  NormResult high;                          // M^{inf,1} of f2
};

inline SplitDiagnostics split_diagnostics(const SplitResult& parts, double s = 0.0) {
  SplitDiagnostics out;
  for (int j = 0; j < parts.low.lattice().dim(); ++j) {
    out.low_derivatives.push_back(sjostrand_norm(derivative(parts.low, j, parts.order), s));
  }
  out.high = sjostrand_norm(parts.high, s);
  return out;
}

struct NarrowEnvelope {
  std::vector<double> envelope;  // h(zeta) = max over the family of sup_z |V_g sigma(z, zeta)|
  double l1 = 0.0;               // int h
};

/// Dominating-function diagnostic for a symbol family.
inline NarrowEnvelope narrow_envelope(std::span<const PhaseSpaceArray> family, int stride = 1) {
  if (family.empty()) throw std::invalid_argument("narrow_envelope: empty family");
  NarrowEnvelope out;
  for (const auto& sigma : family) {
    check_symbol(sigma);
    const SpinorField f = symbol_as_field(sigma);
    const auto env = frequency_envelope(f, Window::gaussian(f.lattice()), stride, ValueKind::Matrix);
    if (out.envelope.empty()) out.envelope.assign(env.size(), 0.0);
    if (env.size() != out.envelope.size()) throw std::invalid_argument("narrow_envelope: symbols on different lattices");
    for (std::size_t i = 0; i < env.size(); ++i) out.envelope[i] = std::max(out.envelope[i], env[i]);
  }
  const Lattice z = family.front().positions.product(family.front().frequencies).dual();
  out.l1 = detail::pairwise_sum(out.envelope) * z.cell_measure();
  return out;
}

}  // namespace tfdirac
