#pragma once

// Seeded Monte Carlo BER estimation over an SNR grid: encode, fade, estimate,
// combine, demodulate, count. Blocks are independent work items with
// counter-derived seeds, so a sweep is reproducible bit-for-bit regardless of
// worker count; the stop rule is evaluated at fixed chunk boundaries for the
// same reason.

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "stbclora/channel.hpp"
#include "stbclora/modem.hpp"
#include "stbclora/stbc.hpp"

namespace stbclora {

struct StopRule {
  long long min_bit_errors = 200;
  long long max_blocks = 1000000;
};

struct ExperimentSpec {
  int spreading_factor = 7;
  double symbol_energy = 1.0;
  CodeName code = CodeName::g2;
  int rx_antennas = 1;
  CeemConfig ceem;
  std::vector<double> snr_grid_db;
  StopRule stop;
  std::uint64_t seed = 1;

  void validate() const {
    if (spreading_factor < 7 || spreading_factor > 12)
      throw std::domain_error("ExperimentSpec: spreading factor must be in 7..12");
    if (!(symbol_energy > 0.0)) throw std::domain_error("ExperimentSpec: symbol energy must be positive");
    if (rx_antennas < 1) throw std::domain_error("ExperimentSpec: need at least one receive antenna");
    ceem.validate();
    if (snr_grid_db.empty()) throw std::domain_error("ExperimentSpec: SNR grid is empty");
    for (std::size_t i = 1; i < snr_grid_db.size(); ++i)
      if (!(snr_grid_db[i] > snr_grid_db[i - 1]))
        throw std::domain_error("ExperimentSpec: SNR grid must be strictly increasing");
    if (stop.min_bit_errors < 50)
      throw std::domain_error("ExperimentSpec: stop rule needs at least 50 bit errors");
    if (stop.max_blocks < 1) throw std::domain_error("ExperimentSpec: max blocks must be >= 1");
  }
};

struct BerEstimate {
  double snr_db = 0.0;
  long long bit_errors = 0;
  long long bits_total = 0;
  long long symbol_errors = 0;
  long long symbols_total = 0;
  long long blocks_run = 0;
  std::uint64_t seed = 0;

  double ber() const { return bits_total > 0 ? static_cast<double>(bit_errors) / bits_total : 0.0; }
  double ser() const {
    return symbols_total > 0 ? static_cast<double>(symbol_errors) / symbols_total : 0.0;
  }
  double ci_halfwidth() const {
    if (bits_total <= 0) return 0.0;
    const double p = ber();
    return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(bits_total));
  }
};

namespace detail {

struct PointContext {
  ModulationConfig cfg;
  StbcCode code;
  CombiningPlan plan;
  int rx_antennas;
  CeemConfig ceem;
  double snr_linear;
  std::uint64_t master_seed;
  std::uint64_t stream;  // one stream per SNR point
};

struct ErrorCounts {
  long long bits = 0;
  long long symbols = 0;
};

inline ErrorCounts simulate_block(const PointContext& ctx, std::uint64_t block_index) {
  BlockRng rng(derive_seed(ctx.master_seed, ctx.stream, block_index));
  const int n_sym = 1 << ctx.cfg.spreading_factor;
  ChannelRealization real = sample_channel(ctx.code.antennas, ctx.rx_antennas, rng);
  real = estimate_channel(real, ctx.ceem, ctx.snr_linear, ctx.cfg.spreading_factor, rng);
  std::vector<int> symbols(ctx.code.symbols_per_block);
  for (int& s : symbols) s = rng.uniform_symbol(n_sym);
  const FrameGrid tx = encode_block(symbols, ctx.code, ctx.cfg);
  const FrameGrid rx = transmit(tx, real, ctx.cfg.noise_density, rng);
  const std::vector<ChirpFrame> combined = combine(rx, real.h_hat(), ctx.plan);
  ErrorCounts out;
  for (int j = 0; j < ctx.code.symbols_per_block; ++j) {
    const int decided = demod_dft(combined[j], ctx.cfg).symbol;
    const unsigned diff = static_cast<unsigned>(decided ^ symbols[j]);
    out.bits += std::popcount(diff);
    out.symbols += decided != symbols[j] ? 1 : 0;
  }
  return out;
}

inline ErrorCounts run_block_range(const PointContext& ctx, std::uint64_t first,
                                   std::uint64_t last) {
  ErrorCounts acc;
  for (std::uint64_t b = first; b < last; ++b) {
    const ErrorCounts c = simulate_block(ctx, b);
    acc.bits += c.bits;
    acc.symbols += c.symbols;
  }
  return acc;
}

}  // namespace detail

/// Simulate one SNR grid point until the stop rule is met. Deterministic in
/// (spec, snr_index); worker count only changes wall time.
inline BerEstimate run_point(const ExperimentSpec& spec, std::size_t snr_index, int workers = 1) {
  spec.validate();
  if (snr_index >= spec.snr_grid_db.size()) throw std::domain_error("run_point: bad grid index");
  if (workers < 1) workers = 1;
  detail::PointContext ctx;
  const double snr_db = spec.snr_grid_db[snr_index];
  ctx.snr_linear = std::pow(10.0, snr_db / 10.0);
  ctx.cfg.spreading_factor = spec.spreading_factor;
  ctx.cfg.symbol_energy = spec.symbol_energy;
  // SNR convention: T = Es / (N0 * 2^SF)
  ctx.cfg.noise_density =
      spec.symbol_energy / (ctx.snr_linear * static_cast<double>(1 << spec.spreading_factor));
  ctx.code = code_matrix(spec.code);
  ctx.plan = derive_combining_plan(ctx.code);
  ctx.rx_antennas = spec.rx_antennas;
  ctx.ceem = spec.ceem;
  ctx.master_seed = spec.seed;
  ctx.stream = static_cast<std::uint64_t>(snr_index) + 1;

  BerEstimate est;
  est.snr_db = snr_db;
  est.seed = spec.seed;
  // Stop-rule checks happen on a fixed geometric schedule of block counts, so
  // the overshoot past min_bit_errors stays bounded at high BER while low-BER
  // points still run in large parallel chunks. The schedule never depends on
  // observed errors or worker count.
  long long chunk = 64;
  long long done = 0;
  while (done < spec.stop.max_blocks && est.bit_errors < spec.stop.min_bit_errors) {
    const long long want = std::min(chunk, spec.stop.max_blocks - done);
    chunk = std::min<long long>(chunk * 2, 8192);
    const int nw = static_cast<int>(std::min<long long>(workers, want));
    std::vector<detail::ErrorCounts> partial(nw);
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (int w = 0; w < nw; ++w) {
      const std::uint64_t first = done + (want * w) / nw;
      const std::uint64_t last = done + (want * (w + 1)) / nw;
      pool.emplace_back([&, w, first, last] { partial[w] = detail::run_block_range(ctx, first, last); });
    }
    for (auto& t : pool) t.join();
    for (const auto& c : partial) {
      est.bit_errors += c.bits;
      est.symbol_errors += c.symbols;
    }
    done += want;
  }
  est.blocks_run = done;
  est.symbols_total = done * ctx.code.symbols_per_block;
  est.bits_total = est.symbols_total * spec.spreading_factor;
  return est;
}

/// One estimate per grid point, in grid order.
inline std::vector<BerEstimate> run_sweep(const ExperimentSpec& spec, int workers = 1) {
  spec.validate();
  std::vector<BerEstimate> out;
  out.reserve(spec.snr_grid_db.size());
  for (std::size_t i = 0; i < spec.snr_grid_db.size(); ++i)
    out.push_back(run_point(spec, i, workers));
  return out;
}

/// Least-squares slope of log10(BER) against SNR_dB/10 over a window of
/// points, negated: the empirical diversity order.
inline double fit_log10_slope(const std::vector<std::pair<double, double>>& db_ber_points) {
  if (db_ber_points.size() < 2)
    throw std::domain_error("fit_log10_slope: need at least two points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [db, ber] : db_ber_points) {
    sx += db / 10.0;
    sy += std::log10(ber);
  }
  const double n = static_cast<double>(db_ber_points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [db, ber] : db_ber_points) {
    const double dx = db / 10.0 - mx;
    sxx += dx * dx;
    sxy += dx * (std::log10(ber) - my);
  }
  if (!(sxx > 0.0)) throw std::domain_error("fit_log10_slope: degenerate SNR window");
  return -sxy / sxx;
}

/// Diversity-order estimate from the last `window` points of a simulated
/// curve. Every windowed point must carry enough errors to be trusted.
inline double estimate_diversity_slope(const std::vector<BerEstimate>& curve, int window,
                                       long long min_bit_errors = 50) {
  if (window < 2 || static_cast<std::size_t>(window) > curve.size())
    throw std::domain_error("estimate_diversity_slope: bad window");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = curve.size() - window; i < curve.size(); ++i) {
    const BerEstimate& e = curve[i];
    if (e.bit_errors < min_bit_errors || !(e.ber() > 0.0))
      throw accuracy_error("estimate_diversity_slope: window point lacks errors", 0.0);
    pts.emplace_back(e.snr_db, e.ber());
  }
  return fit_log10_slope(pts);
}

}  // namespace stbclora
