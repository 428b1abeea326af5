#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace tfdirac;

namespace {

const Lattice kLat(1, 128, 16.0);

SpinorField gaussian(const Lattice& lat) {
  return sample_field(lat, 1, [](std::span<const double> x, std::span<cplx> v) { v[0] = gaussian_profile(x, {}, 1.0); });
}

std::vector<SpinorField> corpus(const Lattice& lat, int comps, int count, std::uint64_t seed) {
  std::vector<SpinorField> out;
  for (int i = 0; i < count; ++i) out.push_back(random_packets(lat, comps, seed + i, 3, 2.0, 1.5));
  return out;
}

double norm_of(const SpinorField& f, const std::string& spec) { return modulation_norm(f, NormSpec::parse(spec)).value; }

}  // namespace

TEST(NormSpec, ParseAndPrint) {
  const auto s = NormSpec::parse("W:inf:1:0.5:-2");
  EXPECT_EQ(s.kind, 'W');
  EXPECT_TRUE(std::isinf(s.p));
  EXPECT_EQ(s.q, 1.0);
  EXPECT_EQ(s.r, 0.5);
  EXPECT_EQ(s.s, -2.0);
  EXPECT_EQ(NormSpec::parse(s.str()).str(), s.str());
  EXPECT_THROW(NormSpec::parse("M:0.5:2:0:0"), std::invalid_argument);
  EXPECT_THROW(NormSpec::parse("X:2:2:0:0"), std::invalid_argument);
  EXPECT_THROW(NormSpec::parse("M:2:2:0"), std::invalid_argument);
  EXPECT_THROW(NormSpec::parse("M:2:2:inf:0"), std::invalid_argument);
  EXPECT_THROW(NormSpec::parse("M:2x:2:0:0"), std::invalid_argument);
}

TEST(Window, RejectsZero) {
  EXPECT_THROW(Window::from_field(SpinorField(kLat, 1)), std::invalid_argument);
  EXPECT_NEAR(Window::gaussian(kLat).l2_norm(), 1.0, 1e-12);
}

TEST(Stft, GaussianMatchesQuadratureAndClosedForm) {
  const auto v = stft(gaussian(kLat), Window::gaussian(kLat));
  const Lattice& xs = v.positions;
  const Lattice& ks = v.frequencies;
  auto g = [](double y) { return cplx{std::pow(2.0, 0.25) * std::exp(-oracle::pi * y * y)}; };
  double err_closed = 0.0, err_quad = 0.0;
  for (int ix = 0; ix < 128; ix += 3) {
    const double x = xs.position(0, ix);
    for (int k = 0; k < 128; k += 5) {
      const double xi = ks.position(0, k);
      const double closed = std::exp(-oracle::pi * (x * x + xi * xi) / 2);
      err_closed = std::max(err_closed, std::abs(v.modulus(ix, k) - closed));
      if (std::abs(x) < 4 && std::abs(xi) < 3) {
        err_quad = std::max(err_quad, std::abs(v.at(ix, k)[0] - oracle::stft_quadrature(g, g, x, xi)));
      }
    }
  }
  EXPECT_LT(err_closed, 1e-8);
  EXPECT_LT(err_quad, 1e-8);

  // the unnormalized pair e^{-pi x^2} picks up the factor 2^{-1/2}
  auto plain = sample_field(kLat, 1, [](std::span<const double> x, std::span<cplx> v) { v[0] = std::exp(-oracle::pi * x[0] * x[0]); });
  const auto u = stft(plain, Window::from_field(plain));
  double err_plain = 0.0;
  for (int ix = 0; ix < 128; ix += 3)
    for (int k = 0; k < 128; k += 5) {
      const double x = xs.position(0, ix), xi = ks.position(0, k);
      err_plain = std::max(err_plain, std::abs(u.modulus(ix, k) - std::pow(2.0, -0.5) * std::exp(-oracle::pi * (x * x + xi * xi) / 2)));
    }
  EXPECT_LT(err_plain, 1e-8);
}

TEST(Stft, ZeroFieldGivesZero) {
  const auto v = stft(SpinorField(kLat, 2), Window::gaussian(kLat));
  for (auto z : v.values) EXPECT_EQ(z, cplx{});
}

TEST(Stft, FundamentalIdentity) {
  const auto f = random_packets(kLat, 1, 21, 3, 2.0, 1.5);
  const auto g = gaussian(kLat);
  const auto v = stft(f, Window::from_field(g));
  const auto w = stft(forward_ft(f), Window::from_field(forward_ft(g)));
  ASSERT_TRUE(w.positions.same_as(kLat.dual()));
  double err = 0.0;
  for (int ix = 0; ix < 128; ++ix) {
    for (int k = 0; k < 128; ++k) {
      err = std::max(err, std::abs(v.modulus(ix, k) - w.modulus(k, (128 - ix) % 128)));
    }
  }
  EXPECT_LT(err, 1e-8);
}

TEST(Stft, CovarianceUnderTimeFrequencyShifts) {
  const auto f = random_packets(kLat, 2, 4, 3, 1.0, 1.0);
  const auto win = Window::gaussian(kLat);
  const auto v = stft(f, win);
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 4; ++trial) {
    const int su = static_cast<int>(rng() % 24) - 12, se = static_cast<int>(rng() % 16) - 8;
    const double eta = se / kLat.period(0);
    SpinorField h(kLat, 2);
    for (int k = 0; k < 128; ++k) {
      const int src = ((k - su) % 128 + 128) % 128;
      const cplx mod = std::polar(1.0, 2 * oracle::pi * eta * kLat.position(0, k));
      for (int c = 0; c < 2; ++c) h(k, c) = mod * f(src, c);
    }
    const auto vh = stft(h, win);
    double err = 0.0;
    for (int ix = 0; ix < 128; ++ix)
      for (int k = 0; k < 128; ++k)
        err = std::max(err, std::abs(vh.modulus(ix, k) - v.modulus(((ix - su) % 128 + 128) % 128, ((k - se) % 128 + 128) % 128)));
    EXPECT_LT(err, 1e-12);
  }
}

TEST(MixedNorm, GaussianM22IsOne) {
  const auto r = mixed_norm(stft(gaussian(kLat), Window::gaussian(kLat)), NormSpec::parse("M:2:2:0:0"));
  EXPECT_NEAR(r.value, 1.0, 1e-6);
  EXPECT_FALSE(r.tail_flag);
  // quadrature oracle on a coarser phase-space grid
  auto g = [](double y) { return cplx{std::pow(2.0, 0.25) * std::exp(-oracle::pi * y * y)}; };
  double s = 0.0;
  const double h = 0.25;
  for (double x = -5; x <= 5; x += h)
    for (double xi = -5; xi <= 5; xi += h) s += std::norm(oracle::stft_quadrature(g, g, x, xi, 8.0, 800)) * h * h;
  EXPECT_NEAR(std::sqrt(s), 1.0, 1e-6);
}

TEST(MixedNorm, SupBelowSumOfSamples) {
  for (const auto& f : corpus(kLat, 2, 5, 100)) {
    const auto v = stft(f, Window::gaussian(kLat));
    const double mx = mixed_norm(v, NormSpec::parse("M:inf:inf:0:0")).value;
    const double sum = mixed_norm(v, NormSpec::parse("M:1:1:0:0")).value / (v.positions.cell_measure() * v.frequencies.cell_measure());
    EXPECT_LE(mx, sum);
  }
}

TEST(MixedNorm, StreamedMatchesStored) {
  const auto f = random_packets(kLat, 2, 8);
  const auto v = stft(f, Window::gaussian(kLat));
  for (const char* s : {"M:2:2:0:0", "M:1:inf:1:0", "W:inf:2:0:1", "M:3:1.5:0.5:-1", "W:1:1:2:2"}) {
    const auto spec = NormSpec::parse(s);
    EXPECT_NEAR(modulation_norm(f, spec).value, mixed_norm(v, spec).value, 1e-12 * mixed_norm(v, spec).value) << s;
  }
}

TEST(MixedNorm, DirectQuadratureOracle) {
  // recompute a weighted mixed norm by explicit loops over the stored array
  const auto f = random_packets(kLat, 2, 9);
  const auto v = stft(f, Window::gaussian(kLat));
  const double p = 3.0, q = 1.5, r = 0.5, s = 1.0;
  const double dx = kLat.cell_measure(), dxi = kLat.dual().cell_measure();
  double outer = 0.0;
  for (int k = 0; k < 128; ++k) {
    double inner = 0.0;
    for (int ix = 0; ix < 128; ++ix) {
      const double x = kLat.position(0, ix);
      inner += std::pow(v.modulus(ix, k) * std::pow(1 + x * x, r / 2), p) * dx;
    }
    const double xi = kLat.frequency(0, k);
    outer += std::pow(std::pow(inner, 1 / p) * std::pow(1 + xi * xi, s / 2), q) * dxi;
  }
  const double want = std::pow(outer, 1 / q);
  EXPECT_NEAR(mixed_norm(v, NormSpec{'M', p, q, r, s}).value, want, 1e-12 * want);
}

TEST(MixedNorm, HomogeneousAndSubadditive) {
  const auto fs = corpus(kLat, 2, 6, 200);
  for (const char* s : {"M:2:2:0:0", "M:1:inf:0:1", "W:inf:1:1:0", "M:1:1:0.5:0.5"}) {
    for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
      const double a = norm_of(fs[i], s), b = norm_of(fs[i + 1], s);
      EXPECT_NEAR(norm_of(cplx{-2.0, 1.5} * fs[i], s), std::abs(cplx{-2.0, 1.5}) * a, 1e-12 * a);
      EXPECT_LE(norm_of(fs[i] + fs[i + 1], s), (a + b) * (1 + 1e-12));
    }
  }
}

TEST(MixedNorm, HausdorffYoungMinkowski) {
  // q <= p: W^{q,p}_{s,r} swaps the integration order of M^{p,q}_{r,s}; Minkowski gives C = 1.
  const struct {
    double p, q, r, s;
  } cases[] = {{2, 1, 0, 0}, {kInf, 1, 0, 0}, {kInf, 2, 1, 0.5}, {4, 2, 0, 1}, {2, 2, 0.5, 0.5}};
  for (const auto& f : corpus(kLat, 2, 12, 300)) {
    const auto v = stft(f, Window::gaussian(kLat));
    for (const auto& c : cases) {
      const double m = mixed_norm(v, NormSpec{'M', c.p, c.q, c.r, c.s}).value;
      const double w = mixed_norm(v, NormSpec{'W', c.q, c.p, c.s, c.r}).value;
      EXPECT_LE(w, m * (1 + 1e-12));
    }
  }
}

TEST(MixedNorm, MonotoneEmbedding) {
  // reproducing formula |V_g f| <= |V_g f| * |V_g g| gives C = 1 for unweighted exponents
  const auto fs = corpus(kLat, 2, 50, 1000);
  double worst_inf2 = 0.0, worst_21 = 0.0, worst_mixed = 0.0;
  for (const auto& f : fs) {
    const auto v = stft(f, Window::gaussian(kLat));
    auto n = [&](const char* s) { return mixed_norm(v, NormSpec::parse(s)).value; };
    worst_inf2 = std::max(worst_inf2, n("M:inf:inf:0:0") / n("M:2:2:0:0"));
    worst_21 = std::max(worst_21, n("M:2:2:0:0") / n("M:1:1:0:0"));
    worst_mixed = std::max(worst_mixed, n("M:inf:2:0:0") / n("M:1:1:0:0"));
    // weights: smaller orders never increase the norm
    EXPECT_LE(n("M:2:1:0:0"), n("M:2:1:1:0"));
    EXPECT_LE(n("M:2:1:0:-1"), n("M:2:1:0:0"));
  }
  EXPECT_LE(worst_inf2, 1 + 1e-6);
  EXPECT_LE(worst_21, 1 + 1e-6);
  EXPECT_LE(worst_mixed, 1 + 1e-6);
}

TEST(MixedNorm, SpinorNormVersusComponents) {
  for (const auto& f : corpus(kLat, 4, 10, 500)) {
    for (const char* s : {"M:2:2:0:0", "M:1:inf:0:0", "W:2:1:1:0"}) {
      double mx = 0.0, sum = 0.0;
      for (int c = 0; c < 4; ++c) {
        SpinorField fc(kLat, 1);
        for (std::size_t i = 0; i < kLat.size(); ++i) fc(i, 0) = f(i, c);
        const double v = norm_of(fc, s);
        mx = std::max(mx, v);
        sum += v;
      }
      const double full = norm_of(f, s);
      EXPECT_LE(mx, full * (1 + 1e-12));
      EXPECT_LE(full, sum * (1 + 1e-12));
      EXPECT_LE(full, 4 * mx * (1 + 1e-12));
    }
  }
}

TEST(MixedNorm, TwoWindowsGiveEquivalentNorms) {
  const auto narrow = Window::gaussian(kLat, 1.0), wide = Window::gaussian(kLat, 2.0);
  double lo = 1e300, hi = 0.0;
  for (const auto& f : corpus(kLat, 2, 20, 700)) {
    const auto spec = NormSpec::parse("M:1:1:0:0");
    const double r = modulation_norm(f, spec, narrow).value / modulation_norm(f, spec, wide).value;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi / lo, 4.0);
}

TEST(MixedNorm, TailFlagRaisedNearEdge) {
  const auto f = sample_field(kLat, 1, [](std::span<const double> x, std::span<cplx> v) {
    const double c[] = {7.5};
    v[0] = gaussian_profile(x, c, 1.0);
  });
  const auto r = modulation_norm(f, NormSpec::parse("M:2:2:0:0"));
  EXPECT_TRUE(r.tail_flag);
  EXPECT_GT(r.tail_fraction, kTailThreshold);
  EXPECT_FALSE(modulation_norm(gaussian(kLat), NormSpec::parse("M:2:2:0:0")).tail_flag);
}

TEST(MixedNorm, StrideSamplingApproximatesFullNorm) {
  const auto f = random_packets(kLat, 2, 31);
  const auto spec = NormSpec::parse("M:2:1:0:0");
  const double full = modulation_norm(f, spec).value;
  const double coarse = modulation_norm(f, spec, Window::gaussian(kLat), 2).value;
  EXPECT_NEAR(coarse, full, 1e-3 * full);
}

TEST(Bupu, PartitionOfUnity) {
  for (int d : {1, 2}) {
    const Lattice lat(d, d == 1 ? 64 : 32, 4.0);
    const auto b = build_bupu(lat);
    std::vector<double> sum(lat.size(), 0.0);
    std::vector<int> cover(lat.size(), 0);
    for (std::size_t k = 0; k < b.count(); ++k) {
      for (const auto& [i, w] : b.piece(k)) {
        EXPECT_GE(w, 0.0);
        sum[i] += w;
        ++cover[i];
      }
    }
    for (std::size_t i = 0; i < lat.size(); ++i) {
      EXPECT_NEAR(sum[i], 1.0, 1e-12);
      EXPECT_LE(cover[i], d == 1 ? 3 : 9);
    }
  }
}

TEST(Bupu, SupportAndPlateau) {
  EXPECT_DOUBLE_EQ(Bupu::bump(0.5), 1.0);
  EXPECT_DOUBLE_EQ(Bupu::bump(0.0), 1.0);
  EXPECT_DOUBLE_EQ(Bupu::bump(1.0), 1.0);
  EXPECT_EQ(Bupu::bump(-1.0), 0.0);
  EXPECT_EQ(Bupu::bump(2.0), 0.0);
  EXPECT_GT(Bupu::bump(-0.5), 0.0);
  const Lattice lat(1, 64, 8.0);
  const auto b = build_bupu(lat);
  for (std::size_t k = 0; k < b.count(); ++k) {
    const int c = b.center(k)[0];
    for (const auto& [i, w] : b.piece(k)) {
      double u = lat.position(0, static_cast<int>(i)) - c;
      u -= 8.0 * std::floor((u + 3.5) / 8.0);  // periodic representative in [-3.5, 4.5)
      EXPECT_GT(u, -1.0);
      EXPECT_LT(u, 2.0);
    }
  }
}

TEST(Bupu, RejectsCoarseOrFractionalLattices) {
  EXPECT_THROW(build_bupu(Lattice(1, 16, 4.0)), std::invalid_argument);  // 4 nodes per unit
  EXPECT_THROW(build_bupu(Lattice(1, 64, 4.5)), std::invalid_argument);
  EXPECT_THROW(build_bupu(Lattice(1, 64, 2.0)), std::invalid_argument);
}

TEST(UniformDecomposition, ZeroGivesZero) {
  const auto b = build_bupu(kLat.dual());
  EXPECT_EQ(uniform_decomposition_norm(SpinorField(kLat, 2), NormSpec::parse("M:2:2:0:0"), b).value, 0.0);
}

TEST(UniformDecomposition, SingleModeOracle) {
  // a pure exponential at integer frequency k0 sits on the plateau edge of two
  // neighbouring bumps, each carrying weight 1/2
  const Lattice lat(1, 128, 16.0);
  const auto b = build_bupu(lat.dual());
  for (int k0 : {-2, 0, 1, 3}) {
    const auto f = sample_field(lat, 1, [&](std::span<const double> x, std::span<cplx> v) { v[0] = std::polar(1.0, 2 * oracle::pi * k0 * x[0]); });
    const double piece = 0.5 * std::sqrt(16.0);  // ||e^{2 pi i k0 x} / 2||_{L^2(torus)}
    const double want = std::sqrt(2 * piece * piece);
    EXPECT_NEAR(uniform_decomposition_norm(f, NormSpec::parse("M:2:2:0:0"), b).value, want, 1e-10);
    EXPECT_NEAR(uniform_decomposition_norm(f, NormSpec::parse("M:2:inf:0:0"), b).value, piece, 1e-10);
  }
}

TEST(UniformDecomposition, EquivalentToContinuousNorm) {
  const auto b = build_bupu(kLat.dual());
  for (const char* s : {"M:2:2:0:0", "M:1:1:0:0", "M:inf:1:0:1"}) {
    const auto spec = NormSpec::parse(s);
    double lo = 1e300, hi = 0.0;
    for (const auto& f : corpus(kLat, 2, 20, 900)) {
      const double r = uniform_decomposition_norm(f, spec, b).value / modulation_norm(f, spec).value;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    EXPECT_GT(lo, 0.0) << s;
    EXPECT_LT(hi / lo, 3.0) << s;
  }
}

TEST(UniformDecomposition, WKindUsesSpatialBupu) {
  const auto f = random_packets(kLat, 2, 12);
  EXPECT_THROW(uniform_decomposition_norm(f, NormSpec::parse("W:2:2:0:0"), build_bupu(kLat.dual())), std::invalid_argument);
  const double w = uniform_decomposition_norm(f, NormSpec::parse("W:2:2:0:0"), build_bupu(kLat)).value;
  EXPECT_GT(w, 0.0);
}

TEST(Bernstein, GaussianAgainstQuadrature) {
  const Lattice lat(1, 512, 32.0);
  const auto r = bernstein_bound_check(sample_field(lat, 1, [](std::span<const double> x, std::span<cplx> v) { v[0] = std::exp(-oracle::pi * x[0] * x[0]); }));
  EXPECT_EQ(r.order, 1);
  // lhs = int e^{-pi xi^2}; rhs = ||f||_2^{1/2} ||f'||_2^{1/2}, both by Riemann sums
  double l1 = 0.0, l2 = 0.0, d2 = 0.0;
  const double h = 1e-3;
  for (double x = -10; x < 10; x += h) {
    const double e = std::exp(-oracle::pi * x * x);
    l1 += e * h;
    l2 += e * e * h;
    d2 += std::pow(2 * oracle::pi * x * e, 2) * h;
  }
  EXPECT_NEAR(r.lhs, l1, 1e-9);
  EXPECT_NEAR(r.rhs, std::pow(l2, 0.25) * std::pow(d2, 0.25), 1e-9);
  EXPECT_LE(r.lhs, 2.0 * r.rhs);
}

TEST(Bernstein, UniformOverDilations) {
  const Lattice lat(1, 2048, 64.0);
  double first = 0.0;
  for (double lam : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const auto r = bernstein_bound_check(sample_field(lat, 1, [&](std::span<const double> x, std::span<cplx> v) {
      v[0] = std::exp(-oracle::pi * lam * lam * x[0] * x[0]);
    }));
    const double ratio = r.lhs / r.rhs;
    if (first == 0.0) first = ratio;
    EXPECT_NEAR(ratio, first, 1e-8) << lam;
  }
}

TEST(Bernstein, ZeroField) {
  const auto r = bernstein_bound_check(SpinorField(kLat, 2));
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
}

TEST(Bernstein, HigherDimensionOrder) {
  const Lattice lat(2, 64, 12.0);
  const auto f = random_packets(lat, 2, 3);
  const auto r = bernstein_bound_check(f);
  EXPECT_EQ(r.order, 2);
  EXPECT_GT(r.rhs, 0.0);
  EXPECT_LE(r.lhs, 5.0 * r.rhs);
}
