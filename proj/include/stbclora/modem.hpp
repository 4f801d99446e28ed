#pragma once

// Chirp-spread-spectrum modulation and demodulation for one LoRa symbol
// stream, at one sample per chip. A symbol p in [0, 2^SF) is the base upchirp
// cyclically advanced by p chips; dechirping turns the shift into a single
// DFT tone, so the two demodulators here (correlator bank and dechirp+DFT)
// make identical decisions.

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "stbclora/fft.hpp"
#include "stbclora/numerics.hpp"

namespace stbclora {

using ChirpFrame = std::vector<std::complex<double>>;

struct ModulationConfig {
  int spreading_factor = 7;   // 7..12
  double symbol_energy = 1.0;  // Es
  double noise_density = 0.0;  // N0
  double bandwidth_hz = 125e3;

  int chips_per_symbol() const noexcept { return 1 << spreading_factor; }
  double sample_interval() const noexcept { return 1.0 / bandwidth_hz; }

  void validate() const {
    if (spreading_factor < 7 || spreading_factor > 12)
      throw std::domain_error("ModulationConfig: spreading factor must be in 7..12");
    if (!(symbol_energy > 0.0))
      throw std::domain_error("ModulationConfig: symbol energy must be positive");
    if (!(noise_density >= 0.0))
      throw std::domain_error("ModulationConfig: noise density must be non-negative");
    if (!(bandwidth_hz > 0.0)) throw std::domain_error("ModulationConfig: bandwidth must be positive");
  }
};

namespace detail {

// e^{j pi q^2 / N} for q in [0, N); chip kappa of symbol p reads index
// (p + kappa) mod N. The square is reduced mod 2N in integers, so the phase
// argument stays small and exact.
inline const std::vector<std::complex<double>>& chirp_table(int spreading_factor) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<std::vector<std::complex<double>>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[spreading_factor];
  if (!slot) {
    const std::int64_t n = std::int64_t{1} << spreading_factor;
    auto table = std::make_unique<std::vector<std::complex<double>>>(n);
    for (std::int64_t q = 0; q < n; ++q) {
      const std::int64_t sq = (q * q) % (2 * n);
      (*table)[q] = std::polar(1.0, kPi * static_cast<double>(sq) / static_cast<double>(n));
    }
    slot = std::move(table);
  }
  return *slot;
}

}  // namespace detail

/// Chirp frame for symbol p: chips of magnitude sqrt(Es/2^SF) with the
/// quadratic phase advanced by p chips.
inline ChirpFrame modulate(int symbol, const ModulationConfig& cfg) {
  cfg.validate();
  const int n = cfg.chips_per_symbol();
  if (symbol < 0 || symbol >= n) throw std::domain_error("modulate: symbol out of range");
  const auto& table = detail::chirp_table(cfg.spreading_factor);
  const double amp = std::sqrt(cfg.symbol_energy / n);
  ChirpFrame chips(n);
  for (int k = 0; k < n; ++k) chips[k] = amp * table[(symbol + k) & (n - 1)];
  return chips;
}

/// Unit-energy downchirp, the conjugate of the unit-energy base upchirp.
inline ChirpFrame downchirp(const ModulationConfig& cfg) {
  cfg.validate();
  const int n = cfg.chips_per_symbol();
  const auto& table = detail::chirp_table(cfg.spreading_factor);
  const double amp = std::sqrt(1.0 / n);
  ChirpFrame chips(n);
  for (int k = 0; k < n; ++k) chips[k] = amp * std::conj(table[k]);
  return chips;
}

/// Correlation of a received frame against the unit-energy basis chirp for
/// symbol index i. On a clean frame carrying p this is sqrt(Es) at i == p and
/// zero elsewhere.
inline std::complex<double> chirp_correlation(const ChirpFrame& received, int index,
                                              const ModulationConfig& cfg) {
  cfg.validate();
  const int n = cfg.chips_per_symbol();
  if (static_cast<int>(received.size()) != n)
    throw std::domain_error("chirp_correlation: frame length mismatch");
  if (index < 0 || index >= n) throw std::domain_error("chirp_correlation: index out of range");
  const auto& table = detail::chirp_table(cfg.spreading_factor);
  const double amp = std::sqrt(1.0 / n);
  std::complex<double> acc{0.0, 0.0};
  for (int k = 0; k < n; ++k) acc += received[k] * std::conj(amp * table[(index + k) & (n - 1)]);
  return acc;
}

struct DemodResult {
  int symbol = 0;
  std::vector<double> metrics;  // |DFT(received . downchirp)| per bin
};

/// Dechirp-and-DFT demodulation. Returns the full metric vector so callers
/// that feed combined frames in can reuse the per-bin magnitudes.
inline DemodResult demod_dft(const ChirpFrame& received, const ModulationConfig& cfg) {
  cfg.validate();
  const int n = cfg.chips_per_symbol();
  if (static_cast<int>(received.size()) != n)
    throw std::domain_error("demod_dft: frame length mismatch");
  const auto& table = detail::chirp_table(cfg.spreading_factor);
  const double amp = std::sqrt(1.0 / n);
  std::vector<std::complex<double>> work(n);
  for (int k = 0; k < n; ++k) work[k] = received[k] * std::conj(table[k]) * amp;
  fft_plan(n).forward(work);
  DemodResult out;
  out.metrics.resize(n);
  double best = -1.0;
  for (int i = 0; i < n; ++i) {
    out.metrics[i] = std::abs(work[i]);
    if (out.metrics[i] > best) {  // ties resolve to the lowest index
      best = out.metrics[i];
      out.symbol = i;
    }
  }
  return out;
}

/// Correlator-bank demodulation, the slow reference path.
inline int demod_correlator(const ChirpFrame& received, const ModulationConfig& cfg) {
  cfg.validate();
  const int n = cfg.chips_per_symbol();
  if (static_cast<int>(received.size()) != n)
    throw std::domain_error("demod_correlator: frame length mismatch");
  int decision = 0;
  double best = -1.0;
  for (int i = 0; i < n; ++i) {
    const double mag = std::abs(chirp_correlation(received, i, cfg));
    if (mag > best) {
      best = mag;
      decision = i;
    }
  }
  return decision;
}

}  // namespace stbclora
