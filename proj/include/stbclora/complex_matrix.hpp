#pragma once

// Minimal dense complex matrix for antenna-sized (<= 8x4) gain arrays.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stbclora {

struct CMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::complex<double>> data;

  CMatrix() = default;
  CMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {
    if (r < 0 || c < 0) throw std::invalid_argument("CMatrix: negative dimension");
  }

  std::complex<double>& operator()(int r, int c) {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  const std::complex<double>& operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }

  double frobenius_sq() const {
    double s = 0.0;
    for (const auto& v : data) s += std::norm(v);
    return s;
  }

  friend CMatrix operator+(const CMatrix& a, const CMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
      throw std::invalid_argument("CMatrix: dimension mismatch");
    CMatrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
  }
};

}  // namespace stbclora
