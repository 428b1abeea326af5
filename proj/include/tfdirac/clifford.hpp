#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfdirac {

using cplx = std::complex<double>;

/// Hermitian anticommuting matrices alpha_0..alpha_d together with the mass.
///
/// alphas[0] is the mass matrix diag(I_{n/2}, -I_{n/2}); alphas[1..d] carry the
/// spatial derivatives.  Basis ordering of the default construction: see
/// build_dirac_matrices().
struct DiracMatrixSet {
  int dim = 0;
  int spinor_dim = 0;
  double mass = 0.0;
  std::vector<Eigen::MatrixXcd> alphas;

  /// m*alpha_0 + sum_j xi_j alpha_j
  Eigen::MatrixXcd generator(std::span<const double> xi) const {
    if (static_cast<int>(xi.size()) != dim) {
      throw std::invalid_argument("generator: frequency has wrong dimension");
    }
    Eigen::MatrixXcd g = mass * alphas[0];
    for (int j = 0; j < dim; ++j) g += xi[j] * alphas[j + 1];
    return g;
  }
};

namespace detail {

inline Eigen::Matrix2cd pauli(int k) {
  const cplx i1{0.0, 1.0};
  Eigen::Matrix2cd s;
  switch (k) {
    case 1: s << 0, 1, 1, 0; break;
    case 2: s << 0, -i1, i1, 0; break;
    case 3: s << 1, 0, 0, -1; break;
    default: throw std::logic_error("pauli index out of range");
  }
  return s;
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// 2k+1 mutually anticommuting Hermitian generators in dimension 2^k.
// Gamma(0) = {[1]};  Gamma(k) = {s1 (x) g : g in Gamma(k-1)} u {s2 (x) I, s3 (x) I}.
inline std::vector<Eigen::MatrixXcd> clifford_generators(int k) {
  std::vector<Eigen::MatrixXcd> gens{Eigen::MatrixXcd::Identity(1, 1)};
  for (int level = 1; level <= k; ++level) {
    const auto half = static_cast<Eigen::Index>(gens.front().rows());
    std::vector<Eigen::MatrixXcd> next;
    next.reserve(gens.size() + 2);
    for (const auto& g : gens) next.push_back(kron(pauli(1), g));
    next.push_back(kron(pauli(2), Eigen::MatrixXcd::Identity(half, half)));
    next.push_back(kron(pauli(3), Eigen::MatrixXcd::Identity(half, half)));
    gens = std::move(next);
  }
  return gens;
}

}  // namespace detail

/// Spinor dimension of the default construction, 2^ceil(d/2).
inline int spinor_dimension(int d) { return 1 << ((d + 1) / 2); }

/// Builds a Dirac matrix set for spatial dimension d via the recursive
/// tensor-product scheme.
///
/// With k = ceil(d/2) and Gamma(k-1) the generators one level down:
///   alpha_0     = s3 (x) I
///   alpha_j     = s1 (x) Gamma(k-1)[j-1]   for j = 1 .. 2k-1
///   alpha_{2k}  = s2 (x) I                  (only used when d = 2k)
/// For d = 3 this is Dirac's representation alpha_j = [[0, s_j], [s_j, 0]];
/// for d = 1 it gives alpha_1 = s1, alpha_0 = s3.
inline DiracMatrixSet build_dirac_matrices(int d, double m) {
  if (d < 1) throw std::invalid_argument("build_dirac_matrices: dimension must be >= 1");
  if (d > 16) throw std::invalid_argument("build_dirac_matrices: dimension above 16 is not supported by dense storage");
  if (!(m >= 0.0) || !std::isfinite(m)) throw std::invalid_argument("build_dirac_matrices: mass must be finite and non-negative");

  const int k = (d + 1) / 2;
  const auto lower = detail::clifford_generators(k - 1);
  const auto half = static_cast<Eigen::Index>(lower.front().rows());
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(half, half);

  DiracMatrixSet set;
  set.dim = d;
  set.spinor_dim = 2 * static_cast<int>(half);
  set.mass = m;
  set.alphas.reserve(d + 1);
  set.alphas.push_back(detail::kron(detail::pauli(3), id));
  for (int j = 1; j <= d; ++j) {
    if (j <= static_cast<int>(lower.size())) {
      set.alphas.push_back(detail::kron(detail::pauli(1), lower[j - 1]));
    } else {
      set.alphas.push_back(detail::kron(detail::pauli(2), id));
    }
  }
  return set;
}

struct CliffordReport {
  bool ok = false;
  bool hermitian = false;
  bool anticommute = false;
  bool mass_block_form = false;
  bool even_dimension = false;
  double max_anticommutator_residual = 0.0;
  int worst_i = -1;
  int worst_j = -1;
  double max_hermiticity_residual = 0.0;
  int worst_hermitian = -1;
  double mass_block_residual = 0.0;
};

/// Checks Hermiticity, alpha_i alpha_j + alpha_j alpha_i = 2 delta_ij I and the
/// block form of alpha_0, all in the entrywise max norm.
inline CliffordReport verify_clifford(const DiracMatrixSet& set, double tol) {
  CliffordReport r;
  const int n = set.spinor_dim;
  r.even_dimension = n > 0 && n % 2 == 0;
  const int count = static_cast<int>(set.alphas.size());
  bool shapes_ok = count == set.dim + 1;
  for (const auto& a : set.alphas) shapes_ok = shapes_ok && a.rows() == n && a.cols() == n;
  if (!shapes_ok) return r;

  for (int i = 0; i < count; ++i) {
    const double h = (set.alphas[i] - set.alphas[i].adjoint()).cwiseAbs().maxCoeff();
    if (r.worst_hermitian < 0 || h > r.max_hermiticity_residual) {
      r.max_hermiticity_residual = h;
      r.worst_hermitian = i;
    }
  }
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  for (int i = 0; i < count; ++i) {
    for (int j = i; j < count; ++j) {
      Eigen::MatrixXcd ac = set.alphas[i] * set.alphas[j] + set.alphas[j] * set.alphas[i];
      if (i == j) ac -= 2.0 * id;
      const double res = ac.cwiseAbs().maxCoeff();
      if (r.worst_i < 0 || res > r.max_anticommutator_residual) {
        r.max_anticommutator_residual = res;
        r.worst_i = i;
        r.worst_j = j;
      }
    }
  }
  if (r.even_dimension) {
    Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(n, n);
    for (int a = 0; a < n; ++a) block(a, a) = a < n / 2 ? 1.0 : -1.0;
    r.mass_block_residual = (set.alphas[0] - block).cwiseAbs().maxCoeff();
  } else {
    r.mass_block_residual = INFINITY;
  }
  r.hermitian = r.max_hermiticity_residual <= tol;
  r.anticommute = r.max_anticommutator_residual <= tol;
  r.mass_block_form = r.mass_block_residual <= tol;
  r.ok = r.hermitian && r.anticommute && r.mass_block_form && r.even_dimension;
  return r;
}

}  // namespace tfdirac
