#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dinozaur/errors.hpp"
#include "dinozaur/spectral.hpp"
#include "oracles.hpp"

using namespace dinozaur;
using namespace dinozaur::spectral;

namespace {

constexpr double kPi = std::numbers::pi;

SpectralField random_spectrum(const ModeSet& modes, int channels, std::uint64_t seed) {
  Rng rng(seed);
  SpectralField s(modes, channels);
  for (auto& z : s.coefficients()) z = Complex(rng.normal(), rng.normal());
  return s;
}

double inner(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(Grid, RejectsOddAndTinyExtents) {
  EXPECT_THROW(Grid({5}), ConfigError);
  EXPECT_THROW(Grid({2}), ConfigError);
  EXPECT_THROW(Grid(std::vector<int>{}), ConfigError);
  EXPECT_NO_THROW(Grid({4, 6}));
}

TEST(Grid, CoordinatesAreRowMajor) {
  const Grid g({4, 8});
  EXPECT_EQ(g.points(), 32u);
  EXPECT_DOUBLE_EQ(g.coordinate(9, 0), 0.25);
  EXPECT_DOUBLE_EQ(g.coordinate(9, 1), 0.125);
}

TEST(ModeSet, SizeAndHalfSpectrumLayout) {
  const ModeSet m1({5});
  EXPECT_EQ(m1.size(), 5u);
  const ModeSet m2({3, 4});
  EXPECT_EQ(m2.size(), 5u * 4u);
  const ModeSet m3({2, 2, 3});
  EXPECT_EQ(m3.size(), 3u * 3u * 3u);
  for (std::size_t m = 0; m < m2.size(); ++m) EXPECT_GE(m2.wavenumber(m, 1), 0);
}

TEST(ModeSet, ConjugatePartnersInZeroPlane) {
  const ModeSet modes({3, 3});
  for (std::size_t m = 0; m < modes.size(); ++m) {
    if (modes.has_implicit_partner(m)) continue;
    const std::size_t p = modes.conjugate_partner(m);
    EXPECT_EQ(modes.wavenumber(p, 0), -modes.wavenumber(m, 0));
    EXPECT_EQ(modes.wavenumber(p, 1), 0);
  }
}

TEST(ModeSet, AliasingIsRejected) {
  EXPECT_THROW(ModeSet({9}).require_compatible(Grid({16})), ConfigError);
  EXPECT_NO_THROW(ModeSet({8}).require_compatible(Grid({16})));
  EXPECT_THROW(ModeSet({4, 4}).require_compatible(Grid({16})), ConfigError);
}

TEST(FrequencyLattice, EigenvaluesAreFourPiSquaredNorms) {
  const ModeSet modes({3, 2});
  const auto lat = frequency_lattice(modes);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const int k0 = modes.wavenumber(m, 0), k1 = modes.wavenumber(m, 1);
    EXPECT_EQ(lat.squared_norms[m], k0 * k0 + k1 * k1);
    EXPECT_DOUBLE_EQ(lat.eigenvalue_magnitude(m), 4.0 * kPi * kPi * (k0 * k0 + k1 * k1));
  }
}

class ForwardFft : public ::testing::TestWithParam<std::vector<int>> {};

TEST_P(ForwardFft, MatchesDirectSum) {
  const auto n = GetParam();
  std::vector<int> kmax(n.size());
  for (std::size_t j = 0; j < n.size(); ++j) kmax[j] = n[j] / 2;
  const ModeSet modes(kmax);
  const Field f = oracle::random_field(n, 2, 11);
  const SpectralField F = forward_fft(f, modes);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    std::vector<int> k(n.size());
    for (std::size_t j = 0; j < n.size(); ++j) k[j] = modes.wavenumber(m, static_cast<int>(j));
    for (int c = 0; c < 2; ++c) EXPECT_LT(std::abs(F.at(m, c) - oracle::dft(f, k, c)), 1e-13);
  }
}

TEST_P(ForwardFft, RoundTripIsTheBoxProjection) {
  const auto n = GetParam();
  std::vector<int> kmax(n.size());
  for (std::size_t j = 0; j < n.size(); ++j) kmax[j] = n[j] / 4 + 1;
  const Field f = oracle::random_field(n, 3, 12);
  const Field back = inverse_fft(forward_fft(f, ModeSet(kmax)), Grid(n));
  const Field expect = oracle::apply_multiplier(f, kmax, [](const std::vector<int>&, int) { return 1.0; });
  EXPECT_LT(max_abs_diff(back, expect), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Shapes, ForwardFft,
                         ::testing::Values(std::vector<int>{8}, std::vector<int>{16}, std::vector<int>{8, 6},
                                           std::vector<int>{4, 6, 8}));

TEST(InverseFft, BandLimitedFieldIsReproducedExactly) {
  const std::vector<int> n{16, 8};
  const Grid grid(n);
  Field f(n, 1);
  for (std::size_t p = 0; p < grid.points(); ++p) {
    const double x = grid.coordinate(p, 0), y = grid.coordinate(p, 1);
    f.at(p, 0) = 1.5 + std::cos(2 * kPi * (3 * x - y)) + 0.3 * std::sin(2 * kPi * 2 * y);
  }
  const Field back = inverse_fft(forward_fft(f, ModeSet::full(grid)), grid);
  EXPECT_LT(max_abs_diff(back, f), 1e-13);
}

TEST(InverseFft, NyquistContentIsUnretained) {
  const std::vector<int> n{8};
  const Grid grid(n);
  Field f(n, 1);
  for (std::size_t p = 0; p < 8; ++p) f.at(p, 0) = (p % 2 == 0) ? 1.0 : -1.0;
  const Field rest = unretained_part(f, ModeSet::full(grid));
  EXPECT_LT(max_abs_diff(rest, f), 1e-14);
}

TEST(Adjoints, ForwardFftAdjointIdentity) {
  for (const auto& n : {std::vector<int>{16}, std::vector<int>{8, 8}, std::vector<int>{4, 6, 8}}) {
    const Grid grid(n);
    std::vector<int> kmax(n.size(), 2);
    const ModeSet modes(kmax);
    const Field f = oracle::random_field(n, 2, 21);
    const SpectralField g = random_spectrum(modes, 2, 22);
    const double lhs = real_inner(g, forward_fft(f, modes));
    const double rhs = inner(forward_fft_adjoint(g, grid), f);
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST(Adjoints, InverseFftAdjointIdentity) {
  for (const auto& n : {std::vector<int>{16}, std::vector<int>{8, 8}, std::vector<int>{4, 6, 8}}) {
    const Grid grid(n);
    std::vector<int> kmax(n.size(), 2);
    const ModeSet modes(kmax);
    const SpectralField F = random_spectrum(modes, 2, 31);
    const Field g = oracle::random_field(n, 2, 32);
    const double lhs = inner(g, inverse_fft(F, grid));
    const double rhs = real_inner(inverse_fft_adjoint(g, modes), F);
    EXPECT_NEAR(lhs, rhs, 1e-11 * (1.0 + std::abs(lhs)));
  }
}

TEST(Diffuse, MatchesDirectHeatKernel) {
  const std::vector<int> n{8, 8};
  const std::vector<int> kmax{3, 3};
  const Field f = oracle::random_field(n, 2, 41);
  const std::vector<double> tau{0.004, 0.02};
  const Field got = inverse_fft(diffuse(forward_fft(f, ModeSet(kmax)), tau), Grid(n));
  const Field expect = oracle::apply_multiplier(f, kmax, [&](const std::vector<int>& k, int c) {
    return std::exp(-4.0 * kPi * kPi * (k[0] * k[0] + k[1] * k[1]) * tau[c]);
  });
  EXPECT_LT(max_abs_diff(got, expect), 1e-12);
}

TEST(Diffuse, RejectsNegativeTimes) {
  const ModeSet modes({2});
  const SpectralField s(modes, 1);
  const std::vector<double> tau{-1e-3};
  EXPECT_THROW(diffuse(s, tau), DomainError);
}

TEST(SpectralGradient, DifferentiatesTrigonometricField) {
  const std::vector<int> n{16, 16};
  const Grid grid(n);
  Field f(n, 1);
  for (std::size_t p = 0; p < grid.points(); ++p) {
    const double x = grid.coordinate(p, 0), y = grid.coordinate(p, 1);
    f.at(p, 0) = std::sin(2 * kPi * x) * std::cos(2 * kPi * 2 * y);
  }
  const Field g = spectral_gradient(forward_fft(f, ModeSet({4, 4})), grid);
  ASSERT_EQ(g.channels(), 2);
  for (std::size_t p = 0; p < grid.points(); ++p) {
    const double x = grid.coordinate(p, 0), y = grid.coordinate(p, 1);
    EXPECT_NEAR(g.at(p, 0), 2 * kPi * std::cos(2 * kPi * x) * std::cos(4 * kPi * y), 1e-12);
    EXPECT_NEAR(g.at(p, 1), -4 * kPi * std::sin(2 * kPi * x) * std::sin(4 * kPi * y), 1e-12);
  }
}
