#pragma once

// Independent reference computations for the tests.  Nothing here goes
// through the library's FFT path: sums are evaluated directly from formulas.

#include "tfdirac/tfdirac.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using tfdirac::cplx;
constexpr double pi = std::numbers::pi;

/// Dense matrix exponential of -2 pi i t G.
inline Eigen::MatrixXcd propagator_expm(const Eigen::MatrixXcd& g, double t) {
  const Eigen::MatrixXcd a = cplx{0.0, -2 * pi * t} * g;
  return a.exp();
}

/// Direct DFT sum: F f(xi) = sum_k f(x_k) e^{-2 pi i x_k xi} dx, d = 1.
inline cplx fourier_sum(const std::function<cplx(double)>& f, double period, int nodes, double xi) {
  const double dx = period / nodes;
  cplx s{};
  for (int k = 0; k < nodes; ++k) {
    const double x = -period / 2 + k * dx;
    s += f(x) * std::polar(1.0, -2 * pi * x * xi);
  }
  return s * dx;
}

/// Riemann sum of V_g f(x, xi) = int f(y) conj g(y - x) e^{-2 pi i y xi} dy over [-R, R], d = 1.
inline cplx stft_quadrature(const std::function<cplx(double)>& f, const std::function<cplx(double)>& g, double x, double xi,
                            double radius = 12.0, int samples = 6000) {
  const double h = 2 * radius / samples;
  cplx s{};
  for (int k = 0; k < samples; ++k) {
    const double y = -radius + (k + 0.5) * h;
    s += f(y) * std::conj(g(y - x)) * std::polar(1.0, -2 * pi * y * xi);
  }
  return s * h;
}

/// Riemann sum of W(f,g)(x, xi) = int f(x + y/2) conj g(x - y/2) e^{-2 pi i y xi} dy, d = 1.
inline cplx wigner_quadrature(const std::function<cplx(double)>& f, const std::function<cplx(double)>& g, double x, double xi,
                              double radius = 16.0, int samples = 8000) {
  const double h = 2 * radius / samples;
  cplx s{};
  for (int k = 0; k < samples; ++k) {
    const double y = -radius + (k + 0.5) * h;
    s += f(x + y / 2) * std::conj(g(x - y / 2)) * std::polar(1.0, -2 * pi * y * xi);
  }
  return s * h;
}

/// L^2-normalized Hermite functions h_k(x) = c_k H_k(sqrt(2 pi) x) e^{-pi x^2}, k <= 3.
inline double hermite_function(int k, double x) {
  const double u = std::sqrt(2 * pi) * x;
  double hk = 1.0;
  switch (k) {
    case 0: hk = 1.0; break;
    case 1: hk = 2 * u; break;
    case 2: hk = 4 * u * u - 2; break;
    case 3: hk = 8 * u * u * u - 12 * u; break;
    default: throw std::invalid_argument("hermite_function: order above 3");
  }
  double fact = 1.0;
  for (int j = 2; j <= k; ++j) fact *= j;
  return std::pow(2.0, 0.25) / std::sqrt(std::pow(2.0, k) * fact) * hk * std::exp(-pi * x * x);
}

/// Exponential of a small dense matrix times a vector (for the reference stepper).
inline Eigen::VectorXcd expm_apply(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& v) { return a.exp() * v; }

/// Reference for i d/dt psi = (D_m + V(t)) psi: classical RK4 in the
/// interaction picture phi(t) = U0(-t) psi(t), with exact free propagation.
inline tfdirac::SpinorField lawson_rk4(const tfdirac::SpinorField& psi0, const tfdirac::Potential& v, double horizon, int steps) {
  using tfdirac::SpinorField;
  const double h = horizon / steps;
  // right-hand side of the interaction-picture equation at time t
  auto rhs = [&](double t, const SpinorField& phi) {
    SpinorField psi = tfdirac::evolve_free(phi, t);
    SpinorField w = v.apply(t, psi);
    SpinorField back = tfdirac::evolve_free(w, -t);
    back *= cplx{0.0, -1.0};
    return back;
  };
  SpinorField phi = psi0;
  for (int i = 0; i < steps; ++i) {
    const double t = i * h;
    const SpinorField k1 = rhs(t, phi);
    const SpinorField k2 = rhs(t + h / 2, phi + cplx{h / 2} * k1);
    const SpinorField k3 = rhs(t + h / 2, phi + cplx{h / 2} * k2);
    const SpinorField k4 = rhs(t + h, phi + cplx{h} * k3);
    phi = phi + cplx{h / 6} * (k1 + cplx{2.0} * k2 + cplx{2.0} * k3 + k4);
  }
  return tfdirac::evolve_free(phi, horizon);
}

/// Max over nodes of |a - b| (Euclidean per node).
inline double max_node_distance(const tfdirac::SpinorField& a, const tfdirac::SpinorField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.nodes(); ++i) {
    double s = 0.0;
    for (int c = 0; c < a.components(); ++c) s += std::norm(a(i, c) - b(i, c));
    m = std::max(m, std::sqrt(s));
  }
  return m;
}

}  // namespace oracle
