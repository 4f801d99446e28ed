#pragma once

// Iterative radix-2 FFT with a per-size plan cache. Forward transform is
// unnormalized: X[k] = sum_n x[n] e^{-j 2 pi n k / N}.

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "stbclora/numerics.hpp"

namespace stbclora {

class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    if (n == 0 || (n & (n - 1)) != 0)
      throw std::invalid_argument("FftPlan: length must be a power of two");
    bitrev_.resize(n);
    std::size_t log2n = 0;
    while ((std::size_t{1} << log2n) < n) ++log2n;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t bit = 0; bit < log2n; ++bit)
        if (i & (std::size_t{1} << bit)) r |= std::size_t{1} << (log2n - 1 - bit);
      bitrev_[i] = r;
    }
    twiddle_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k)
      twiddle_[k] = std::polar(1.0, -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
  }

  std::size_t size() const noexcept { return n_; }

  void forward(std::vector<std::complex<double>>& a) const {
    if (a.size() != n_) throw std::invalid_argument("FftPlan: length mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j = bitrev_[i];
      if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t stride = n_ / len;
      const std::size_t half = len / 2;
      for (std::size_t base = 0; base < n_; base += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const auto u = a[base + j];
          const auto v = a[base + j + half] * twiddle_[j * stride];
          a[base + j] = u + v;
          a[base + j + half] = u - v;
        }
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddle_;
};

/// Shared immutable plan per size; safe to use from several threads at once.
inline const FftPlan& fft_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FftPlan>(n);
  return *slot;
}

}  // namespace stbclora
