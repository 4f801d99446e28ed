#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "stbclora/channel.hpp"

using namespace stbclora;

TEST_CASE("gain statistics") {
  BlockRng rng(101);
  const int draws = 500000;
  double sum_sq = 0.0, sum_re2 = 0.0, sum_im2 = 0.0, sum_fro = 0.0;
  const int m = 2, n = 1;
  for (int t = 0; t < draws; ++t) {
    const ChannelRealization real = sample_channel(m, n, rng);
    sum_fro += real.h.frobenius_sq();
    for (const auto& h : real.h.data) {
      sum_sq += std::norm(h);
      sum_re2 += h.real() * h.real();
      sum_im2 += h.imag() * h.imag();
    }
  }
  const double entries = static_cast<double>(draws) * m * n;
  CHECK(sum_sq / entries == Catch::Approx(1.0).epsilon(0.005));
  CHECK(sum_fro / draws == Catch::Approx(double(m * n)).epsilon(0.005));
  CHECK(sum_re2 / entries == Catch::Approx(0.5).epsilon(0.01));
  CHECK(sum_im2 / entries == Catch::Approx(0.5).epsilon(0.01));

  CHECK_THROWS_AS(sample_channel(5, 1, rng), std::domain_error);
  CHECK_THROWS_AS(sample_channel(2, 0, rng), std::domain_error);
}

TEST_CASE("estimation error models") {
  BlockRng rng(202);
  const ChannelRealization real = sample_channel(2, 2, rng);

  const ChannelRealization perfect = estimate_channel(real, ceem_perfect(), 1.0, 7, rng);
  for (const auto& e : perfect.error.data) CHECK(e == std::complex<double>{0.0, 0.0});
  for (std::size_t i = 0; i < real.h.data.size(); ++i)
    CHECK(perfect.h_hat().data[i] == real.h.data[i]);

  // fixed variance: sample variance of the error entries within 2%
  double acc = 0.0;
  const int draws = 250000;
  for (int t = 0; t < draws; ++t) {
    const ChannelRealization est = estimate_channel(real, ceem_fixed(0.01), 1.0, 7, rng);
    for (const auto& e : est.error.data) acc += std::norm(e);
  }
  CHECK(acc / (static_cast<double>(draws) * 4) == Catch::Approx(0.01).epsilon(0.02));

  // pilot model evaluates to 1/(1 + Lp 2^SF T)
  CHECK(ceem_pilot(4).effective_sigma_e_sq(0.1, 7) == Catch::Approx(1.0 / 52.2).epsilon(1e-12));
  CHECK(ceem_pilot(4).effective_sigma_e_sq(1000.0, 12) ==
        Catch::Approx(1.0 / (1.0 + 4.0 * 4096.0 * 1000.0)).epsilon(1e-12));
  CHECK_THROWS_AS(ceem_pilot(0).validate(), std::domain_error);
  CHECK_THROWS_AS(ceem_fixed(-0.1).validate(), std::domain_error);
  CHECK_THROWS_AS(ceem_pilot(4).effective_sigma_e_sq(0.0, 7), std::domain_error);
}

TEST_CASE("squared estimate norm is Gamma(MN, 1 + sigma_e^2)") {
  BlockRng rng(303);
  const int draws = 400000;
  const double s2 = 0.05;
  const int m = 2, n = 2;
  double sum = 0.0, sumsq = 0.0, cross = 0.0, sum_h = 0.0, sum_e = 0.0;
  for (int t = 0; t < draws; ++t) {
    ChannelRealization real = sample_channel(m, n, rng);
    real = estimate_channel(real, ceem_fixed(s2), 1.0, 7, rng);
    const double x = real.frobenius_sq();
    sum += x;
    sumsq += x * x;
    cross += real.h.data[0].real() * real.error.data[0].real();
    sum_h += real.h.data[0].real();
    sum_e += real.error.data[0].real();
  }
  const double mean = sum / draws;
  const double var = sumsq / draws - mean * mean;
  const int mn = m * n;
  CHECK(mean == Catch::Approx(mn * (1.0 + s2)).epsilon(0.005));
  CHECK(var == Catch::Approx(mn * (1.0 + s2) * (1.0 + s2)).epsilon(0.02));
  // independence of the error from the true gains
  const double corr = (cross / draws - (sum_h / draws) * (sum_e / draws)) /
                      std::sqrt(0.5 * 0.5 * s2);
  CHECK(std::abs(corr) < 0.01);
}

TEST_CASE("transmit is the identity for a unit SISO channel") {
  ChannelRealization real;
  real.h = CMatrix(1, 1);
  real.error = CMatrix(1, 1);
  real.h(0, 0) = {1.0, 0.0};
  BlockRng rng(404);
  FrameGrid tx(1, std::vector<ChirpFrame>(1, ChirpFrame{{1.0, 2.0}, {3.0, -4.0}}));
  const FrameGrid rx = transmit(tx, real, 0.0, rng);
  REQUIRE(rx.size() == 1);
  REQUIRE(rx[0].size() == 1);
  CHECK(rx[0][0] == tx[0][0]);
}

TEST_CASE("received slots follow the linear model") {
  BlockRng rng(505);
  const ChannelRealization real = sample_channel(2, 2, rng);
  ModulationConfig cfg;
  cfg.spreading_factor = 7;
  const auto tx = encode_block({11, 87}, code_matrix(CodeName::g2), cfg);
  const auto rx = transmit(tx, real, 0.0, rng);
  for (int u = 0; u < 2; ++u)
    for (int n = 0; n < 2; ++n)
      for (int k = 0; k < 128; ++k) {
        const auto want = real.h(0, n) * tx[u][0][k] + real.h(1, n) * tx[u][1][k];
        CHECK(std::abs(rx[u][n][k] - want) < 1e-12);
      }
}

TEST_CASE("noise-only received variance equals N0") {
  BlockRng rng(606);
  ChannelRealization real;
  real.h = CMatrix(1, 1);
  real.error = CMatrix(1, 1);
  const double n0 = 0.8;
  double acc = 0.0;
  const int trials = 8000, n = 128;
  for (int t = 0; t < trials; ++t) {
    FrameGrid tx(1, std::vector<ChirpFrame>(1, ChirpFrame(n, {0.0, 0.0})));
    const auto rx = transmit(tx, real, n0, rng);
    for (const auto& c : rx[0][0]) acc += std::norm(c);
  }
  CHECK(acc / (static_cast<double>(trials) * n) == Catch::Approx(n0).epsilon(0.01));
}

TEST_CASE("block realizations are independent") {
  const int blocks = 100000;
  double prev = 0.0, sum = 0.0, sumsq = 0.0, lag = 0.0;
  for (int b = 0; b < blocks; ++b) {
    BlockRng rng(derive_seed(42, 3, b));
    const ChannelRealization real = sample_channel(1, 1, rng);
    const double x = std::norm(real.h(0, 0));
    sum += x;
    sumsq += x * x;
    if (b > 0) lag += x * prev;
    prev = x;
  }
  const double mean = sum / blocks;
  const double var = sumsq / blocks - mean * mean;
  const double autocorr = (lag / (blocks - 1) - mean * mean) / var;
  CHECK(std::abs(autocorr) < 0.01);
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}
