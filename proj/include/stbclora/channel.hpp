#pragma once

// Quasi-static flat Rayleigh MIMO channel, complex AWGN, and the two
// channel-estimation-error models. Gains are constant over the slots of one
// space-time block and independent across blocks; the block RNG is seeded
// from (master seed, stream, block index) so results do not depend on worker
// count or execution order.

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "stbclora/complex_matrix.hpp"
#include "stbclora/stbc.hpp"

namespace stbclora {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t block) {
  return detail::mix64(detail::mix64(detail::mix64(master) ^ stream) ^ block);
}

/// Per-block random source. Owned by exactly one worker at a time.
class BlockRng {
 public:
  explicit BlockRng(std::uint64_t seed) : engine_(seed) {}

  double gaussian() { return normal_(engine_); }

  /// Circularly symmetric complex Gaussian with the given total variance.
  std::complex<double> circular_gaussian(double variance) {
    const double s = std::sqrt(0.5 * variance);
    const double re = gaussian();
    const double im = gaussian();
    return {s * re, s * im};
  }

  int uniform_symbol(int count) {
    return std::uniform_int_distribution<int>(0, count - 1)(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// True gains H, estimation errors E, and the receiver's estimate H + E.
struct ChannelRealization {
  CMatrix h;      // true gains, unit variance per entry
  CMatrix error;  // estimation errors

  CMatrix h_hat() const { return h + error; }
  double frobenius_sq() const { return h_hat().frobenius_sq(); }  // X
};

enum class CeemModel { perfect, fixed_variance, pilot_decaying };

struct CeemConfig {
  CeemModel model = CeemModel::perfect;
  double sigma_e_sq = 0.0;  // fixed_variance only
  int pilot_count = 0;      // pilot_decaying only

  void validate() const {
    if (model == CeemModel::fixed_variance && !(sigma_e_sq >= 0.0))
      throw std::domain_error("CeemConfig: error variance must be non-negative");
    if (model == CeemModel::pilot_decaying && pilot_count < 1)
      throw std::domain_error("CeemConfig: pilot count must be >= 1");
  }

  /// Effective estimate-error variance at linear SNR T. The pilot model
  /// decays as 1/(1 + Lp * 2^SF * T).
  double effective_sigma_e_sq(double snr, int spreading_factor) const {
    validate();
    switch (model) {
      case CeemModel::perfect: return 0.0;
      case CeemModel::fixed_variance: return sigma_e_sq;
      case CeemModel::pilot_decaying: {
        if (!(snr > 0.0)) throw std::domain_error("CeemConfig: pilot model needs positive SNR");
        const double t_eff = static_cast<double>(1 << spreading_factor) * snr;
        return 1.0 / (1.0 + pilot_count * t_eff);
      }
    }
    return 0.0;
  }
};

inline CeemConfig ceem_perfect() { return CeemConfig{}; }
inline CeemConfig ceem_fixed(double sigma_e_sq) {
  return CeemConfig{CeemModel::fixed_variance, sigma_e_sq, 0};
}
inline CeemConfig ceem_pilot(int pilot_count) {
  return CeemConfig{CeemModel::pilot_decaying, 0.0, pilot_count};
}

/// Draw the true gain matrix: i.i.d. circular complex Gaussian entries with
/// unit total variance (0.5 per dimension). Errors start at zero.
inline ChannelRealization sample_channel(int tx_antennas, int rx_antennas, BlockRng& rng) {
  if (tx_antennas < 1 || tx_antennas > 4)
    throw std::domain_error("sample_channel: transmit antennas must be in 1..4");
  if (rx_antennas < 1) throw std::domain_error("sample_channel: need at least one receive antenna");
  ChannelRealization out;
  out.h = CMatrix(tx_antennas, rx_antennas);
  out.error = CMatrix(tx_antennas, rx_antennas);
  for (int m = 0; m < tx_antennas; ++m)
    for (int n = 0; n < rx_antennas; ++n) out.h(m, n) = rng.circular_gaussian(1.0);
  return out;
}

/// Draw estimation errors per the configured model, independent of H.
inline ChannelRealization estimate_channel(const ChannelRealization& real, const CeemConfig& ceem,
                                           double snr, int spreading_factor, BlockRng& rng) {
  const double s2 = ceem.effective_sigma_e_sq(snr, spreading_factor);
  ChannelRealization out = real;
  if (s2 > 0.0) {
    for (int m = 0; m < out.h.rows; ++m)
      for (int n = 0; n < out.h.cols; ++n) out.error(m, n) = rng.circular_gaussian(s2);
  }
  return out;
}

/// Push a block of transmit frames through the channel: every slot sees the
/// same gains, every received sample picks up i.i.d. complex noise of total
/// variance N0.
inline FrameGrid transmit(const FrameGrid& tx_slots, const ChannelRealization& real,
                          double noise_density, BlockRng& rng) {
  if (!(noise_density >= 0.0)) throw std::domain_error("transmit: negative noise density");
  const int slots = static_cast<int>(tx_slots.size());
  const int m_tx = real.h.rows;
  const int n_rx = real.h.cols;
  FrameGrid rx(slots, std::vector<ChirpFrame>(n_rx));
  for (int u = 0; u < slots; ++u) {
    if (static_cast<int>(tx_slots[u].size()) != m_tx)
      throw std::invalid_argument("transmit: transmit antenna count mismatch");
    const std::size_t len = tx_slots[u].empty() ? 0 : tx_slots[u][0].size();
    for (int n = 0; n < n_rx; ++n) {
      ChirpFrame& out = rx[u][n];
      out.assign(len, {0.0, 0.0});
      for (int m = 0; m < m_tx; ++m) {
        const std::complex<double> g = real.h(m, n);
        const ChirpFrame& in = tx_slots[u][m];
        if (in.size() != len) throw std::invalid_argument("transmit: frame length mismatch");
        for (std::size_t k = 0; k < len; ++k) out[k] += g * in[k];
      }
      for (std::size_t k = 0; k < len; ++k) out[k] += rng.circular_gaussian(noise_density);
    }
  }
  return rx;
}

}  // namespace stbclora
