#pragma once

// Orthogonal space-time block codes over chirp frames: the formal code
// matrices, waveform-level block encoding, and the channel-estimate-weighted
// linear combining derived from the code structure. With perfect estimates
// and no noise the combined output for symbol j is exactly ||H||_F^2 times
// the transmitted-scale frame of j.

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "stbclora/complex_matrix.hpp"
#include "stbclora/modem.hpp"

namespace stbclora {

enum class CodeName { g1, g2, g3, g4 };  // g1 is the single-antenna passthrough

inline const char* to_string(CodeName name) {
  switch (name) {
    case CodeName::g1: return "G1";
    case CodeName::g2: return "G2";
    case CodeName::g3: return "G3";
    case CodeName::g4: return "G4";
  }
  return "?";
}

struct CodeEntry {
  enum class Kind { zero, symbol };
  Kind kind = Kind::zero;
  int source_index = 0;  // j in [0, J)
  int sign = 1;
  bool conjugated = false;
};

struct StbcCode {
  CodeName name = CodeName::g2;
  int slots = 0;             // U
  int antennas = 0;          // M
  int symbols_per_block = 0; // J
  int u_cons = 1;            // G^H G = u_cons * sum|g|^2 * I
  std::vector<CodeEntry> entries;  // slots x antennas, row-major

  double rate() const noexcept { return static_cast<double>(symbols_per_block) / slots; }
  const CodeEntry& entry(int u, int m) const {
    return entries[static_cast<std::size_t>(u) * antennas + m];
  }
};

namespace detail {

inline CodeEntry sym(int j, int sign, bool conj) {
  return CodeEntry{CodeEntry::Kind::symbol, j, sign, conj};
}

// 8x4 rate-1/2 design: a 4x4 real orthogonal design on g1..g4 stacked on its
// element-wise conjugate.
inline std::vector<CodeEntry> rate_half_entries(int antennas) {
  static constexpr int kIndex[4][4] = {{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
  static constexpr int kSign[4][4] = {{+1, +1, +1, +1}, {-1, +1, -1, +1}, {-1, +1, +1, -1},
                                      {-1, -1, +1, +1}};
  std::vector<CodeEntry> entries;
  entries.reserve(static_cast<std::size_t>(8) * antennas);
  for (int pass = 0; pass < 2; ++pass) {
    for (int u = 0; u < 4; ++u)
      for (int m = 0; m < antennas; ++m)
        entries.push_back(sym(kIndex[u][m], kSign[u][m], pass == 1));
  }
  return entries;
}

}  // namespace detail

inline StbcCode code_matrix(CodeName name) {
  StbcCode code;
  code.name = name;
  switch (name) {
    case CodeName::g1:
      code.slots = 1;
      code.antennas = 1;
      code.symbols_per_block = 1;
      code.u_cons = 1;
      code.entries = {detail::sym(0, +1, false)};
      break;
    case CodeName::g2:
      code.slots = 2;
      code.antennas = 2;
      code.symbols_per_block = 2;
      code.u_cons = 1;
      code.entries = {detail::sym(0, +1, false), detail::sym(1, +1, false),
                      detail::sym(1, -1, true), detail::sym(0, +1, true)};
      break;
    case CodeName::g3:
      code.slots = 8;
      code.antennas = 3;
      code.symbols_per_block = 4;
      code.u_cons = 2;
      code.entries = detail::rate_half_entries(3);
      break;
    case CodeName::g4:
      code.slots = 8;
      code.antennas = 4;
      code.symbols_per_block = 4;
      code.u_cons = 2;
      code.entries = detail::rate_half_entries(4);
      break;
  }
  return code;
}

using FrameGrid = std::vector<std::vector<ChirpFrame>>;  // [slot][antenna]

/// Space-time encode J symbols into the U x M grid of transmit frames. Each
/// non-zero entry carries the (possibly negated/conjugated) chirp frame of
/// its symbol scaled by sqrt(1/M), i.e. energy Es/M per antenna per slot.
inline FrameGrid encode_block(const std::vector<int>& symbols, const StbcCode& code,
                              const ModulationConfig& cfg) {
  if (static_cast<int>(symbols.size()) != code.symbols_per_block)
    throw std::invalid_argument("encode_block: symbol count does not match the code");
  const int n = cfg.chips_per_symbol();
  std::vector<ChirpFrame> frames(code.symbols_per_block);
  for (int j = 0; j < code.symbols_per_block; ++j) frames[j] = modulate(symbols[j], cfg);
  const double scale = std::sqrt(1.0 / code.antennas);
  FrameGrid grid(code.slots, std::vector<ChirpFrame>(code.antennas));
  for (int u = 0; u < code.slots; ++u) {
    for (int m = 0; m < code.antennas; ++m) {
      const CodeEntry& e = code.entry(u, m);
      ChirpFrame& out = grid[u][m];
      out.assign(n, {0.0, 0.0});
      if (e.kind == CodeEntry::Kind::zero) continue;
      const ChirpFrame& src = frames[e.source_index];
      const double s = scale * e.sign;
      if (e.conjugated)
        for (int k = 0; k < n; ++k) out[k] = s * std::conj(src[k]);
      else
        for (int k = 0; k < n; ++k) out[k] = s * src[k];
    }
  }
  return grid;
}

struct CombiningTerm {
  int slot = 0;
  int tx_antenna = 0;
  bool conjugate_rx = false;       // conjugate the received frame
  bool conjugate_channel = true;   // conjugate the channel estimate
  int sign = 1;
};

struct CombiningPlan {
  int symbols = 0;
  int slots = 0;
  int antennas = 0;
  int divisor = 1;  // appearances of each symbol per antenna column
  std::vector<std::vector<CombiningTerm>> terms;  // per symbol
};

namespace detail {

// Numeric orthogonality check G^H G = u_cons * sum|g|^2 * I by substituting
// random values for the formal entries.
inline bool code_is_orthogonal(const StbcCode& code, double tol) {
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<std::complex<double>> g(code.symbols_per_block);
    double gsq = 0.0;
    for (auto& v : g) {
      v = {gauss(rng), gauss(rng)};
      gsq += std::norm(v);
    }
    for (int c1 = 0; c1 < code.antennas; ++c1) {
      for (int c2 = 0; c2 < code.antennas; ++c2) {
        std::complex<double> acc{0.0, 0.0};
        for (int u = 0; u < code.slots; ++u) {
          auto value = [&](const CodeEntry& e) -> std::complex<double> {
            if (e.kind == CodeEntry::Kind::zero) return {0.0, 0.0};
            auto v = g[e.source_index];
            if (e.conjugated) v = std::conj(v);
            return static_cast<double>(e.sign) * v;
          };
          acc += std::conj(value(code.entry(u, c1))) * value(code.entry(u, c2));
        }
        const std::complex<double> want =
            (c1 == c2) ? std::complex<double>(code.u_cons * gsq, 0.0) : std::complex<double>(0.0, 0.0);
        if (std::abs(acc - want) > tol * (1.0 + code.u_cons * gsq)) return false;
      }
    }
  }
  return true;
}

}  // namespace detail

/// Build the linear combining plan from the code matrix. A +g_j entry at slot
/// u, antenna m contributes conj(h_hat[m][n]) * r[u][n]; a conjugated entry
/// contributes h_hat[m][n] * conj(r[u][n]); signs carry over. The sum is
/// divided by the per-column appearance count so the clean combined output is
/// exactly ||H||_F^2 times the transmitted-scale frame.
inline CombiningPlan derive_combining_plan(const StbcCode& code) {
  if (!detail::code_is_orthogonal(code, 1e-10))
    throw std::invalid_argument("derive_combining_plan: code matrix is not orthogonal");
  CombiningPlan plan;
  plan.symbols = code.symbols_per_block;
  plan.slots = code.slots;
  plan.antennas = code.antennas;
  plan.terms.resize(code.symbols_per_block);
  std::vector<std::vector<int>> appearances(code.symbols_per_block,
                                            std::vector<int>(code.antennas, 0));
  for (int u = 0; u < code.slots; ++u) {
    for (int m = 0; m < code.antennas; ++m) {
      const CodeEntry& e = code.entry(u, m);
      if (e.kind == CodeEntry::Kind::zero) continue;
      CombiningTerm term;
      term.slot = u;
      term.tx_antenna = m;
      term.sign = e.sign;
      term.conjugate_rx = e.conjugated;
      term.conjugate_channel = !e.conjugated;
      plan.terms[e.source_index].push_back(term);
      ++appearances[e.source_index][m];
    }
  }
  plan.divisor = appearances[0][0];
  for (int j = 0; j < code.symbols_per_block; ++j)
    for (int m = 0; m < code.antennas; ++m)
      if (appearances[j][m] != plan.divisor)
        throw std::invalid_argument("derive_combining_plan: uneven symbol appearance counts");
  return plan;
}

/// Apply the combining plan to the U x N received grid with the channel
/// estimate (M x N). Returns one combined frame per block symbol, ready for
/// demod_dft.
inline std::vector<ChirpFrame> combine(const FrameGrid& rx_slots, const CMatrix& h_hat,
                                       const CombiningPlan& plan) {
  if (static_cast<int>(rx_slots.size()) != plan.slots)
    throw std::invalid_argument("combine: slot count mismatch");
  if (h_hat.rows != plan.antennas) throw std::invalid_argument("combine: antenna count mismatch");
  const int n_rx = h_hat.cols;
  std::size_t frame_len = 0;
  for (const auto& slot : rx_slots) {
    if (static_cast<int>(slot.size()) != n_rx)
      throw std::invalid_argument("combine: receive antenna count mismatch");
    for (const auto& frame : slot) {
      if (frame_len == 0) frame_len = frame.size();
      if (frame.size() != frame_len) throw std::invalid_argument("combine: frame length mismatch");
    }
  }
  std::vector<ChirpFrame> out(plan.symbols, ChirpFrame(frame_len, {0.0, 0.0}));
  for (int j = 0; j < plan.symbols; ++j) {
    ChirpFrame& acc = out[j];
    for (int n = 0; n < n_rx; ++n) {
      for (const CombiningTerm& term : plan.terms[j]) {
        std::complex<double> w = h_hat(term.tx_antenna, n);
        if (term.conjugate_channel) w = std::conj(w);
        w *= static_cast<double>(term.sign);
        const ChirpFrame& r = rx_slots[term.slot][n];
        if (term.conjugate_rx)
          for (std::size_t k = 0; k < frame_len; ++k) acc[k] += w * std::conj(r[k]);
        else
          for (std::size_t k = 0; k < frame_len; ++k) acc[k] += w * r[k];
      }
    }
    const double inv = 1.0 / plan.divisor;
    for (auto& v : acc) v *= inv;
  }
  return out;
}

}  // namespace stbclora
