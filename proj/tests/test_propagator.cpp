#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace tfdirac;

namespace {

std::shared_ptr<const DiracMatrixSet> dirac(int d, double m) { return std::make_shared<const DiracMatrixSet>(build_dirac_matrices(d, m)); }

double max_diff(const SpinorField& a, const SpinorField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

std::vector<double> random_xi(std::mt19937_64& rng, int d, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> xi(d);
  for (auto& v : xi) v = g(rng);
  return xi;
}

}  // namespace

TEST(Multiplier, TimeZeroIsIdentity) {
  for (int d : {1, 2, 3, 5}) {
    const auto set = build_dirac_matrices(d, 1.0);
    std::mt19937_64 rng(d);
    const auto xi = random_xi(rng, d, 3.0);
    EXPECT_EQ((multiplier(xi, 0.0, set) - Eigen::MatrixXcd::Identity(set.spinor_dim, set.spinor_dim)).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Multiplier, AgreesWithMatrixExponential) {
  std::mt19937_64 rng(5);
  for (int d = 1; d <= 6; ++d) {
    for (double m : {0.0, 1.0, 2.5}) {
      const auto set = build_dirac_matrices(d, m);
      for (int trial = 0; trial < 10; ++trial) {
        const auto xi = random_xi(rng, d, 2.0);
        const double t = 4.0 * (static_cast<double>(rng() % 1000) / 1000.0) - 2.0;
        const Eigen::MatrixXcd mu = multiplier(xi, t, set);
        const Eigen::MatrixXcd ref = oracle::propagator_expm(set.generator(xi), t);
        EXPECT_LT((mu - ref).cwiseAbs().maxCoeff(), 1e-12) << "d=" << d << " m=" << m << " t=" << t;
      }
    }
  }
}

TEST(Multiplier, UnitaryAndGroupLaw) {
  std::mt19937_64 rng(6);
  for (int d : {1, 2, 3, 4}) {
    const auto set = build_dirac_matrices(d, 0.8);
    const int n = set.spinor_dim;
    for (int trial = 0; trial < 20; ++trial) {
      const auto xi = random_xi(rng, d, 5.0);
      const double t = 0.37 * trial, s = -1.3 + 0.11 * trial;
      const Eigen::MatrixXcd a = multiplier(xi, t, set);
      EXPECT_LT((a.adjoint() * a - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((a * multiplier(xi, s, set) - multiplier(xi, t + s, set)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Multiplier, MasslessOneDimensionalForm) {
  const auto set = build_dirac_matrices(1, 0.0);
  for (double xi0 : {-2.5, -0.3, 0.7, 4.0}) {
    for (double t : {0.1, 1.0, 3.3}) {
      const double xi[] = {xi0};
      const double ph = 2 * oracle::pi * t * std::abs(xi0);
      const Eigen::MatrixXcd want = std::cos(ph) * Eigen::MatrixXcd::Identity(2, 2) -
                                    cplx{0.0, std::sin(ph) * (xi0 > 0 ? 1.0 : -1.0)} * set.alphas[1];
      EXPECT_LT((multiplier(xi, t, set) - want).cwiseAbs().maxCoeff(), 1e-13);
      EXPECT_LT((oracle::propagator_expm(set.generator(xi), t) - want).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Multiplier, RemovableSingularity) {
  const auto set = build_dirac_matrices(2, 0.0);
  const double zero[] = {0.0, 0.0};
  EXPECT_LT((multiplier(zero, 3.0, set) - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
  // across the series switch the matrix stays continuous and matches expm
  for (double r : {1e-7, 5e-6, 1.59e-5, 1.6e-5, 1e-4}) {
    const double xi[] = {r, 0.0};
    EXPECT_LT((multiplier(xi, 1.0, set) - oracle::propagator_expm(set.generator(xi), 1.0)).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Multiplier, EigenvaluesArePhases) {
  std::mt19937_64 rng(8);
  for (int d : {1, 3, 4}) {
    const auto set = build_dirac_matrices(d, 1.2);
    const int n = set.spinor_dim;
    const auto xi = random_xi(rng, d, 1.5);
    const double t = 0.61;
    const double w = std::sqrt(1.44 + std::inner_product(xi.begin(), xi.end(), xi.begin(), 0.0));
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(multiplier(xi, t, set));
    int plus = 0, minus = 0;
    for (int k = 0; k < n; ++k) {
      const cplx ev = es.eigenvalues()(k);
      if (std::abs(ev - std::polar(1.0, -2 * oracle::pi * t * w)) < 1e-10) ++plus;
      if (std::abs(ev - std::polar(1.0, 2 * oracle::pi * t * w)) < 1e-10) ++minus;
    }
    EXPECT_EQ(plus, n / 2);
    EXPECT_EQ(minus, n / 2);
  }
}

TEST(EvolveFree, ConservesL2AndObeysGroupLaw) {
  const Lattice lat(1, 256, 32.0);
  const auto f = random_packets(lat, 2, 17, 3, 2.0, 2.0, dirac(1, 1.0));
  for (double t : {0.0, 0.5, 3.0, 10.0}) {
    EXPECT_NEAR(evolve_free(f, t).l2_norm(), f.l2_norm(), 1e-10 * f.l2_norm());
  }
  const auto a = evolve_free(evolve_free(f, 1.3), 2.4);
  const auto b = evolve_free(f, 3.7);
  EXPECT_LT(max_diff(a, b), 1e-10);
  EXPECT_LT(max_diff(evolve_free(evolve_free(f, 4.2), -4.2), f), 1e-12);
}

TEST(EvolveFree, CacheMatchesUncached) {
  const Lattice lat(2, 32, 8.0);
  const auto f = random_packets(lat, 2, 3, 3, 1.0, 1.0, dirac(2, 0.5));
  MultiplierCache cache;
  EXPECT_EQ(max_diff(evolve_free(f, 0.7, cache), evolve_free(f, 0.7)), 0.0);
  EXPECT_EQ(max_diff(evolve_free(f, 0.7, cache), evolve_free(f, 0.7)), 0.0);
  EXPECT_EQ(max_diff(evolve_free(f, 1.1, cache), evolve_free(f, 1.1)), 0.0);
}

TEST(EvolveFree, MatchesNodewiseExponentialIn2D) {
  const Lattice lat(2, 16, 6.0);
  const auto set = dirac(2, 1.0);
  const auto f = random_packets(lat, 2, 9, 3, 1.0, 1.0, set);
  const double t = 0.9;
  const auto fh = forward_ft(f);
  SpinorField ref_hat = fh;
  std::vector<double> xi(2);
  for (std::size_t i = 0; i < lat.size(); ++i) {
    fh.lattice().positions_of(i, xi);
    Eigen::VectorXcd v(2);
    v << fh(i, 0), fh(i, 1);
    const Eigen::VectorXcd w = oracle::propagator_expm(set->generator(xi), t) * v;
    ref_hat(i, 0) = w(0);
    ref_hat(i, 1) = w(1);
  }
  EXPECT_LT(max_diff(evolve_free(f, t), inverse_ft(ref_hat)), 1e-12);
}

TEST(EvolveFree, PlaneWaveEigenvectorGetsScalarPhase) {
  const Lattice lat(1, 64, 8.0);
  const auto set = dirac(1, 1.0);
  const double k = 3.0 / 8.0 * 5;  // frequency node 15/8
  const double xi[] = {k};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(set->generator(xi));
  const Eigen::VectorXcd v = es.eigenvectors().col(1);  // eigenvalue +<k>_m
  const auto psi0 = sample_field(
      lat, 2, [&](std::span<const double> x, std::span<cplx> out) {
        const cplx e = std::polar(1.0, 2 * oracle::pi * k * x[0]);
        out[0] = e * v(0);
        out[1] = e * v(1);
      },
      set);
  const double t = 2.3;
  const auto psi = evolve_free(psi0, t);
  const cplx phase = std::polar(1.0, -2 * oracle::pi * t * std::sqrt(1 + k * k));
  EXPECT_LT(max_diff(psi, phase * psi0), 1e-12);
}

TEST(EvolveFree, RequiresDiracSet) {
  const Lattice lat(1, 16, 4.0);
  EXPECT_THROW(evolve_free(SpinorField(lat, 2), 1.0), std::invalid_argument);
}

TEST(EnergyProjectors, Algebra) {
  std::mt19937_64 rng(10);
  for (int d : {1, 2, 3, 6}) {
    const auto set = build_dirac_matrices(d, 0.4);
    const int n = set.spinor_dim;
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    for (int trial = 0; trial < 10; ++trial) {
      const auto xi = random_xi(rng, d, 2.0);
      const auto p = energy_projectors(xi, set);
      EXPECT_EQ((p.plus + p.minus - id).cwiseAbs().maxCoeff(), 0.0);
      EXPECT_LT((p.plus * p.plus - p.plus).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((p.minus * p.minus - p.minus).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((p.plus * p.minus).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_NEAR(p.plus.trace().real(), n / 2.0, 1e-12);
      EXPECT_NEAR(p.minus.trace().real(), n / 2.0, 1e-12);
      // range of P_+ is the +<xi>_m eigenspace of the generator (eigensolver oracle)
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(set.generator(xi));
      const Eigen::MatrixXcd up = es.eigenvectors().rightCols(n / 2);
      EXPECT_LT((p.plus - up * up.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(EnergyProjectors, DegenerateNodeNamed) {
  const auto set = build_dirac_matrices(2, 0.0);
  const double zero[] = {0.0, 0.0};
  try {
    energy_projectors(zero, set);
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("xi = (0"), std::string::npos);
  }
}

TEST(EnergyProjectors, PositiveEnergyDataEvolveByPhase) {
  const Lattice lat(1, 128, 16.0);
  const auto set = dirac(1, 1.0);
  const auto f = random_packets(lat, 2, 12, 3, 2.0, 1.5, set);
  // project each mode onto range(P_+)
  SpinorField fh = forward_ft(f);
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const double xi[] = {fh.lattice().position(0, static_cast<int>(i))};
    const Eigen::Vector2cd v(fh(i, 0), fh(i, 1));
    const Eigen::VectorXcd w = energy_projectors(xi, *set).plus * v;
    fh(i, 0) = w(0);
    fh(i, 1) = w(1);
  }
  const double t = 1.7;
  const auto evolved = forward_ft(evolve_free(inverse_ft(fh), t));
  double err = 0.0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const double xi = fh.lattice().position(0, static_cast<int>(i));
    const cplx ph = std::polar(1.0, -2 * oracle::pi * t * std::sqrt(1 + xi * xi));
    for (int c = 0; c < 2; ++c) err = std::max(err, std::abs(evolved(i, c) - ph * fh(i, c)));
  }
  EXPECT_LT(err, 1e-12);
}

TEST(Dispersion, KleinGordonPhasesPerMode) {
  for (int d : {1, 2}) {
    const Lattice lat(d, d == 1 ? 256 : 32, 16.0);
    const auto f = random_packets(lat, spinor_dimension(d), 40 + d, 3, 2.0, 1.0, dirac(d, 1.0));
    for (double t : {0.3, 2.0, 7.5}) {
      double worst = 0.0;
      for (const auto& r : dispersion_residuals(f, evolve_free(f, t), t)) worst = std::max(worst, r.residual);
      EXPECT_LT(worst, 1e-10) << "d=" << d << " t=" << t;
    }
  }
}

TEST(Dispersion, DetectsWrongEvolution) {
  const Lattice lat(1, 64, 8.0);
  const auto f = random_packets(lat, 2, 2, 3, 1.0, 1.0, dirac(1, 1.0));
  double worst = 0.0;
  for (const auto& r : dispersion_residuals(f, evolve_free(f, 1.0), 1.01)) worst = std::max(worst, r.residual);
  EXPECT_GT(worst, 1e-3);
}

TEST(Multiplier, SjostrandNormGrowsPolynomially) {
  // mu_t(xi) as a matrix-valued function of xi, measured in M^{inf,1}
  const Lattice xi_lat = Lattice(1, 1024, 128.0).dual();
  const auto set = build_dirac_matrices(1, 1.0);
  const auto win = Window::gaussian(xi_lat);
  std::vector<double> ts{1, 2, 5, 10, 20, 50}, vals;
  for (double t : ts) {
    SpinorField mu(xi_lat, 4);
    for (std::size_t i = 0; i < xi_lat.size(); ++i) {
      const double xi[] = {xi_lat.position(0, static_cast<int>(i))};
      const Eigen::MatrixXcd m = multiplier(xi, t, set);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) mu(i, a * 2 + b) = m(a, b);
    }
    const double v = modulation_norm(mu, NormSpec::parse("M:inf:1:0:0"), win, 4, ValueKind::Matrix).value;
    ASSERT_TRUE(std::isfinite(v));
    vals.push_back(v);
  }
  // least-squares slope of log norm against log(1 + t)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double x = std::log1p(ts[i]), y = std::log(vals[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double k = static_cast<double>(ts.size());
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  EXPECT_LT(slope, 2.0);
  EXPECT_LT(vals.back(), vals.front() * std::pow(51.0 / 2.0, 2.0));
}
