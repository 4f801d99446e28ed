#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "stbclora/analytic.hpp"

using namespace stbclora;

namespace {

SystemParams g2_params(int sf, int n, double s2, double snr) {
  return params_for_code(CodeName::g2, sf, n, s2, snr);
}

std::vector<SystemParams> random_params(int count, bool perfect, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> sfd(7, 12), md(1, 4), nd(1, 2);
  std::uniform_real_distribution<double> sed(0.001, 0.1), td(-20.0, 10.0);
  std::vector<SystemParams> out;
  while (static_cast<int>(out.size()) < count) {
    SystemParams p;
    p.spreading_factor = sfd(rng);
    p.tx_antennas = md(rng);
    p.rx_antennas = nd(rng);
    p.symbols_per_block = (rng() % 2) ? 2 : 4;
    p.rate = p.symbols_per_block == 2 ? 1.0 : 0.5;
    p.sigma_e_sq = perfect ? 0.0 : sed(rng);
    p.snr = std::pow(10.0, td(rng) / 10.0);
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_CASE("constants at a hand-checked point") {
  // SF=7, J=2, r=1, M=2, N=1, perfect estimates, T = 0.01 so A = 0.8
  SystemParams p = g2_params(7, 1, 0.0, 0.01);
  const AnalyticConstants k = constants(p);
  CHECK(k.a == Catch::Approx(0.8).epsilon(1e-14));
  CHECK(k.b == Catch::Approx(std::sqrt(harmonic_numbers(126).h)).epsilon(1e-14));
  CHECK(k.c == Catch::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(k.d == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(k.e == Catch::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("constants signs, breakpoints and piecewise continuity") {
  for (const SystemParams& p : random_params(40, false, 71)) {
    const AnalyticConstants k = constants(p);
    CHECK(k.a > 0.0);
    CHECK(k.b > 0.0);
    CHECK(k.c > 0.0);
    CHECK(k.d > 0.0);
    CHECK(k.e < 0.0);
    if (k.a1 >= 0.0) {
      CHECK(k.a1 <= k.b1);
      CHECK(k.b1 <= k.b2);
    }
    CHECK(k.l1_slope * k.a1 + k.l1_intercept == Catch::Approx(1.0).margin(1e-10));
    CHECK(k.l1_slope * k.b1 + k.l1_intercept ==
          Catch::Approx(k.l2_slope * k.b1 + k.l2_intercept).margin(1e-10));
    CHECK(k.l2_slope * k.b2 + k.l2_intercept == Catch::Approx(0.0).margin(1e-10));
  }
  // sigma_e^2 = 0 collapses D and E
  SystemParams p = g2_params(9, 2, 0.0, 0.3);
  const AnalyticConstants k = constants(p);
  CHECK(k.e == -1.0);
  CHECK(k.d == Catch::Approx(std::exp(-log_gamma(4.0))).epsilon(1e-14));
}

TEST_CASE("closed form equals numeric integration of its own integrand") {
  for (const SystemParams& p : random_params(20, true, 72)) {
    const AnalyticConstants k = constants(p);
    REQUIRE(k.a1 >= 0.0);
    const int mn = p.diversity_order();
    auto integrand = [&](double x) {
      return k.piecewise_q(x) * std::pow(x, mn - 1) * std::exp(k.e * x);
    };
    const double ref =
        k.d * adaptive_integrate_seeded(integrand, {0.0, k.a1, k.b1, k.b2}, 1e-11, 4000000);
    CHECK(p_err_n_perfect_closed(p) == Catch::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("closed form demands perfect estimates and valid breakpoints") {
  CHECK_THROWS_AS(p_err_n_perfect_closed(g2_params(7, 1, 0.01, 1.0)), std::domain_error);
  // tiny harmonic offset (huge J) pushes the first breakpoint below zero
  SystemParams p;
  p.spreading_factor = 7;
  p.tx_antennas = 2;
  p.rx_antennas = 1;
  p.symbols_per_block = 120;
  p.rate = 1.0;
  p.sigma_e_sq = 0.0;
  p.snr = 1.0;
  CHECK(constants(p).a1 < 0.0);
  CHECK_THROWS_AS(p_err_n_perfect_closed(p), la_validity_error);
}

TEST_CASE("quadrature path converges to the exact integral") {
  const QuadratureRule wide = gauss_hermite(96);
  const double inf = std::numeric_limits<double>::infinity();
  double worst30 = 0.0, worst96 = 0.0;
  for (const SystemParams& p : random_params(20, false, 73)) {
    if (p.diversity_order() < 2) continue;  // the +-7 node span clips MN=1 tails
    const AnalyticConstants k = constants(p);
    const int mn = p.diversity_order();
    const double logd = -log_gamma(double(mn)) - mn * std::log1p(p.sigma_e_sq);
    auto f = [&](double xi) {
      const double z = (k.a * std::exp(0.5 * xi) - k.b) / k.c;
      return std::exp(logd + mn * xi + k.e * std::exp(xi) + log_q_function(z));
    };
    const double ref = adaptive_integrate(f, -inf, inf, 1e-10, 4000000);
    worst30 = std::max(worst30, std::abs(p_err_n_gh(p) - ref) / ref);
    worst96 = std::max(worst96, std::abs(p_err_n_gh(p, wide) - ref) / ref);
  }
  CHECK(worst96 < 1e-6);
  CHECK(worst30 < 2e-3);  // measured accuracy of the default 30-node rule
}

TEST_CASE("interference closed form") {
  // two-symbol blocks collapse to a single term
  SystemParams p = g2_params(7, 1, 0.05, 0.5);
  const double teff = 0.5 * 128.0;
  const double kappa = teff / (0.05 * teff + 2.0);
  const double d = 1.0 / ((1.0 + 0.05) * (1.0 + 0.05));  // Gamma(2) = 1
  const double want = d * 0.5 * std::pow(0.5 * kappa + 1.0 / 1.05, -2.0);
  CHECK(p_err_iai_closed(p) == Catch::Approx(want).epsilon(1e-12));

  // single-symbol blocks have no interference term
  SystemParams siso = params_for_code(CodeName::g1, 7, 1, 0.05, 0.5);
  CHECK(p_err_iai_closed(siso) == 0.0);

  // fixed sigma_e^2, growing SNR approaches the saturation value
  SystemParams hi = g2_params(7, 1, 0.05, 1e9);
  const double sat = d * 0.5 * std::pow(0.5 / 0.05 + 1.0 / 1.05, -2.0);
  CHECK(p_err_iai_closed(hi) == Catch::Approx(sat).epsilon(1e-6));

  for (const SystemParams& q : random_params(30, false, 74)) {
    const double v = p_err_iai_closed(q);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("ber routes and bounds") {
  // perfect-knowledge route requires zero error variance
  CHECK_THROWS_AS(ber_perfect(g2_params(7, 1, 0.01, 1.0)), std::domain_error);
  for (const SystemParams& p : random_params(30, true, 75)) {
    const double b = ber_perfect(p);
    CHECK(b >= 0.0);
    CHECK(b <= bit_error_scale(p.spreading_factor));
  }
  for (const SystemParams& p : random_params(30, false, 76)) {
    const double b = ber_imperfect(p);
    CHECK(b >= 0.0);
    CHECK(b <= bit_error_scale(p.spreading_factor));
  }
  // without interference the imperfect composition reduces to the noise term
  SystemParams p0 = g2_params(7, 1, 0.0, 0.05);
  CHECK(ber_imperfect(p0) == Catch::Approx(bit_error_scale(7) * p_err_n_gh(p0)).epsilon(1e-14));
}

TEST_CASE("perfect-knowledge BER decreases with SNR and with antennas") {
  double prev = 1.0;
  for (double db = -20.0; db <= 10.0; db += 1.0) {
    const double b = ber_perfect(g2_params(7, 1, 0.0, std::pow(10.0, db / 10.0)));
    CHECK(b < prev);
    prev = b;
  }
  for (double db = -16.0; db <= 4.0; db += 2.0) {
    const double t = std::pow(10.0, db / 10.0);
    CHECK(ber_perfect(g2_params(9, 2, 0.0, t)) < ber_perfect(g2_params(9, 1, 0.0, t)));
  }
}

TEST_CASE("the two perfect-knowledge routes agree within the linear-approximation budget") {
  for (double db = -15.0; db <= 5.0; db += 2.5) {
    SystemParams p = g2_params(8, 1, 0.0, std::pow(10.0, db / 10.0));
    const double la = p_err_n_perfect_closed(p);
    const double gh = p_err_n_gh(p, recommended_quadrature(p));
    CHECK(std::abs(la - gh) / gh < 0.10);
  }
}

TEST_CASE("asymptote value, slope, and the constant offset of the true curve") {
  // direct formula evaluation, pinned
  SystemParams p = g2_params(9, 1, 0.0, 100.0);
  const double want = bit_error_scale(9) * (2.0 / 2048.0) * 1e-4 * 3.0;
  CHECK(ber_asymptotic_perfect(p) == Catch::Approx(want).epsilon(1e-12));

  // pure power law: one decade of SNR costs MN decades of BER
  for (int n : {1, 2}) {
    SystemParams a = g2_params(9, n, 0.0, 10.0), b = g2_params(9, n, 0.0, 100.0);
    CHECK(ber_asymptotic_perfect(a) / ber_asymptotic_perfect(b) ==
          Catch::Approx(std::pow(10.0, 2 * n)).epsilon(1e-12));
  }

  // the true curve settles onto the same slope: T^MN * BER approaches a
  // constant (the constant differs from the asymptote's because the harmonic
  // offset never vanishes)
  for (int n : {1, 2}) {
    const int mn = 2 * n;
    const double c30 = ber_perfect(g2_params(9, n, 0.0, 1e3)) * std::pow(1e3, mn);
    const double c40 = ber_perfect(g2_params(9, n, 0.0, 1e4)) * std::pow(1e4, mn);
    CHECK(c40 == Catch::Approx(c30).epsilon(0.02));
  }
  CHECK_THROWS_AS(ber_asymptotic_perfect(g2_params(9, 1, 0.01, 10.0)), std::domain_error);
}

TEST_CASE("error floor") {
  SystemParams p = g2_params(7, 1, 0.05, 1.0);
  const double f = error_floor(p);
  CHECK(f > 0.0);
  CHECK(f < 0.5);
  // spreading factor does not enter
  CHECK(error_floor(g2_params(12, 1, 0.05, 123.0)) == f);
  // more antennas push the floor down
  CHECK(error_floor(g2_params(7, 2, 0.05, 1.0)) < f);
  CHECK(error_floor(params_for_code(CodeName::g4, 7, 1, 0.05, 1.0)) < f);
  // larger estimation error raises it
  CHECK(error_floor(g2_params(7, 1, 0.1, 1.0)) > error_floor(g2_params(7, 1, 0.01, 1.0)));
  CHECK_THROWS_AS(error_floor(g2_params(7, 1, 0.0, 1.0)), std::domain_error);

  // the imperfect-knowledge curve flattens onto the floor at high SNR
  const double b1 = ber_imperfect(g2_params(7, 1, 0.05, 1e3), gauss_hermite(128));
  const double b2 = ber_imperfect(g2_params(7, 1, 0.05, 1e4), gauss_hermite(128));
  CHECK(std::abs(b1 - b2) / b2 < 0.02);
  CHECK(b2 == Catch::Approx(bit_error_scale(7) * 2.0 * f).epsilon(0.02));

  // saturated noise term matches a wide-quadrature evaluation at huge SNR
  SystemParams hi = g2_params(7, 1, 0.05, 1e8);
  const double pn_hi = p_err_n_gh(hi, gauss_hermite(128));
  const double mu2 = std::sqrt(1.05 / 1.10);
  const double direct = 0.5 * (1.0 - mu2 * (1.0 + 2.0 * (1.0 - mu2 * mu2) / 4.0));
  CHECK(pn_hi == Catch::Approx(direct).epsilon(1e-3));
}

TEST_CASE("rice factor diagnostic") {
  SystemParams p = g2_params(7, 2, 0.0, 0.5);
  const double teff = 0.5 * 128.0;
  CHECK(rice_factor_diagnostic(p, 1.0) == Catch::Approx(teff / 2.0).epsilon(1e-14));
  CHECK(rice_factor_diagnostic(p, 2.0) == Catch::Approx(2.0 * rice_factor_diagnostic(p, 1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(rice_factor_diagnostic(p, -1.0), std::domain_error);

  SystemParams q = g2_params(7, 2, 0.01, 0.5);
  CHECK(rice_factor_diagnostic(q, 1.0) ==
        Catch::Approx(teff / (0.01 * teff + 2.0)).epsilon(1e-14));

  // sampled squared norms land almost surely above 10 dB of Rice factor
  BlockRng rng(808);
  int above = 0;
  const int draws = 100000;
  SystemParams fig = g2_params(7, 2, 0.0, std::pow(10.0, -0.5));
  for (int t = 0; t < draws; ++t) {
    const double x = sample_channel(2, 2, rng).frobenius_sq();
    if (rice_factor_diagnostic(fig, x) > 10.0) ++above;
  }
  CHECK(above > static_cast<int>(0.95 * draws));
}

TEST_CASE("numeric oracle guards and degeneracies") {
  SystemParams p = g2_params(10, 1, 0.0, 1.0);
  CHECK_THROWS_AS(oracle_ber_numeric(p), std::domain_error);

  // with zero error variance the interference branch is the noise branch
  SystemParams z = g2_params(7, 1, 0.0, 0.3);
  const detail::BranchScales s = detail::branch_scales(z, 1.7);
  CHECK(s.sigma_sig == Catch::Approx(s.sigma_noise).epsilon(1e-14));

  // oracle composition matches its parts
  SystemParams q = g2_params(7, 1, 0.02, 0.5);
  const double pn = oracle_p_err_n_numeric(q);
  const double pi = oracle_p_err_iai_numeric(q);
  CHECK(oracle_ber_numeric(q) ==
        Catch::Approx(bit_error_scale(7) * (pn + (1.0 - pn) * pi)).epsilon(1e-12));
}

TEST_CASE("approximation chain sits within its budget of the oracle at mid SNR") {
  SystemParams p = g2_params(7, 1, 0.0, std::pow(10.0, -3.18 / 10.0));  // BER near 1e-2
  const double oracle = oracle_ber_numeric(p);
  CHECK(std::abs(ber_perfect(p) - oracle) / oracle < 0.15);
  CHECK(std::abs(ber_imperfect(p) - oracle) / oracle < 0.15);
}
