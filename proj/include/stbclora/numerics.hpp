#pragma once

// Special functions and quadrature shared by the analytic BER expressions
// and the numerical test oracles. Everything here is a pure function.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stbclora {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSqrtPi = 1.772453850905516027298167483341145183;
inline constexpr double kEulerE = 2.718281828459045235360287471352662498;

/// Thrown when an iterative routine cannot reach the requested accuracy.
/// Carries the best estimate obtained before giving up.
class accuracy_error : public std::runtime_error {
 public:
  accuracy_error(const std::string& what, double best_estimate)
      : std::runtime_error(what), best_(best_estimate) {}
  double best_estimate() const noexcept { return best_; }

 private:
  double best_;
};

/// Gaussian tail probability Q(x) = P[N(0,1) > x].
inline double q_function(double x) {
  if (!std::isfinite(x)) throw std::domain_error("q_function: non-finite argument");
  return 0.5 * std::erfc(x / std::sqrt(2.0));
}

/// log Q(x), usable far into the tail where Q underflows.
inline double log_q_function(double x) {
  if (!std::isfinite(x)) throw std::domain_error("log_q_function: non-finite argument");
  if (x < 30.0) return std::log(q_function(x));
  // Q(x) = phi(x)/x * (1 - 1/x^2 + 3/x^4 - ...), truncated where terms stop mattering
  const double inv2 = 1.0 / (x * x);
  double term = 1.0;
  double series = 1.0;
  for (int k = 1; k < 40; ++k) {
    term *= -(2.0 * k - 1.0) * inv2;
    if (std::abs(term) < 1e-18 * std::abs(series)) break;
    series += term;
  }
  return -0.5 * x * x - 0.5 * std::log(2.0 * kPi) - std::log(x) + std::log(series);
}

/// Partial sums of 1/q and 1/q^2 up to k, accumulated in ascending order.
struct HarmonicPair {
  int k = 0;
  double h = 0.0;  // sum of 1/q
  double l = 0.0;  // sum of 1/q^2
};

inline HarmonicPair harmonic_numbers(int k) {
  if (k < 1) throw std::domain_error("harmonic_numbers: k must be >= 1");
  HarmonicPair out{k, 0.0, 0.0};
  for (int q = 1; q <= k; ++q) {
    out.h += 1.0 / q;
    out.l += 1.0 / (static_cast<double>(q) * q);
  }
  return out;
}

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma: argument must be positive");
  return std::lgamma(x);
}

inline double log_factorial(int n) { return std::lgamma(n + 1.0); }

inline double log_binomial(int n, int k) {
  if (k < 0 || k > n) throw std::domain_error("log_binomial: k out of range");
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

inline double binomial(int n, int k) { return std::round(std::exp(log_binomial(n, k))); }

/// ln I0(x), stable for every magnitude of x.
inline double log_bessel_i0(double x) {
  x = std::abs(x);
  if (x < 15.0) {
    const double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
      term *= q / (static_cast<double>(k) * k);
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    return std::log(sum);
  }
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 30; ++k) {
    const double m = 2.0 * k - 1.0;
    term *= m * m / (8.0 * k * x);
    if (term < 1e-18 * sum) break;
    sum += term;
  }
  return x - 0.5 * std::log(2.0 * kPi * x) + std::log(sum);
}

/// ln I1(x) for x >= 0.
inline double log_bessel_i1(double x) {
  if (x < 0.0) throw std::domain_error("log_bessel_i1: negative argument");
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (x < 15.0) {
    const double q = 0.25 * x * x;
    double term = 0.5 * x, sum = term;
    for (int k = 1; k < 60; ++k) {
      term *= q / (static_cast<double>(k) * (k + 1.0));
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    return std::log(sum);
  }
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 30; ++k) {
    const double m = 2.0 * k - 1.0;
    term *= (m * m - 4.0) / (8.0 * k * x);
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    sum += term;
  }
  return x - 0.5 * std::log(2.0 * kPi * x) + std::log(sum);
}

/// Mean of a Rice(nu, sigma) variable, exact via the half-order Laguerre form.
inline double rice_mean(double nu, double sigma) {
  if (sigma < 0.0 || nu < 0.0) throw std::domain_error("rice_mean: negative parameter");
  if (sigma == 0.0) return nu;
  const double kf = nu * nu / (2.0 * sigma * sigma);
  const double half = 0.5 * kf;
  // e^{-k/2} [(1+k) I0(k/2) + k I1(k/2)] with the exponential folded into the Bessels
  const double i0e = std::exp(log_bessel_i0(half) - half);
  const double i1e = half > 0.0 ? std::exp(log_bessel_i1(half) - half) : 0.0;
  return sigma * std::sqrt(kPi / 2.0) * ((1.0 + kf) * i0e + kf * i1e);
}

inline double rice_second_moment(double nu, double sigma) { return nu * nu + 2.0 * sigma * sigma; }

/// Gauss-Hermite rule: integrates f against e^{-x^2} exactly for polynomials
/// of degree <= 2*order - 1.
struct QuadratureRule {
  std::vector<double> nodes;    // ascending, symmetric about zero
  std::vector<double> weights;  // positive, sum = sqrt(pi)
  int order() const noexcept { return static_cast<int>(nodes.size()); }
};

inline QuadratureRule gauss_hermite(int order) {
  if (order < 1 || order > 128) throw std::domain_error("gauss_hermite: order must be in 1..128");
  const int n = order;
  const int half = (n + 1) / 2;
  std::vector<double> root(half, 0.0), weight(half, 0.0);
  constexpr double kPiQuarterInv = 0.751125544464942482;  // pi^{-1/4}
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    // interlacing initial guesses, largest root first
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * root[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * root[1];
    } else {
      z = 2.0 * z - root[i - 2];
    }
    double pp = 0.0;
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
      // orthonormal Hermite recurrence; p2 trails one order behind p1
      double p1 = kPiQuarterInv, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) <= 1e-14 * (1.0 + std::abs(z))) {
        converged = true;
        break;
      }
    }
    if (!converged) throw std::runtime_error("gauss_hermite: root iteration did not converge");
    root[i] = z;
    weight[i] = 2.0 / (pp * pp);
  }
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  for (int i = 0; i < half; ++i) {
    const int hi = n - 1 - i;
    const double x = (hi == i) ? 0.0 : root[i];  // odd order puts one node at the origin
    rule.nodes[hi] = x;
    rule.nodes[i] = -x;
    rule.weights[hi] = weight[i];
    rule.weights[i] = weight[i];
  }
  return rule;
}

namespace detail {

struct SimpsonInterval {
  double a, b;
  double fa, fm, fb;  // endpoint and midpoint values
  double fl, fr;      // quarter-point values, reused when split
  double estimate;    // Richardson-extrapolated Simpson value
  double error;
};

template <typename F>
SimpsonInterval make_interval(F&& f, double a, double b, double fa, double fm, double fb) {
  SimpsonInterval iv{a, b, fa, fm, fb, 0.0, 0.0, 0.0, 0.0};
  const double h = b - a;
  const double m = 0.5 * (a + b);
  iv.fl = f(0.5 * (a + m));
  iv.fr = f(0.5 * (m + b));
  const double coarse = h / 6.0 * (fa + 4.0 * fm + fb);
  const double fine = h / 12.0 * (fa + 4.0 * iv.fl + 2.0 * fm + 4.0 * iv.fr + fb);
  iv.estimate = fine + (fine - coarse) / 15.0;
  iv.error = std::abs(fine - coarse) / 15.0;
  if (!(std::abs(h) > 1e-14 * (std::abs(a) + std::abs(b) + 1.0))) iv.error = 0.0;
  return iv;
}

// Globally adaptive Simpson over a seeded partition. Splits the interval with
// the largest error estimate until the summed error meets the relative target.
template <typename F>
double adaptive_simpson_seeded(F&& f, const std::vector<double>& knots, double rel_tol,
                               std::size_t max_evals) {
  std::vector<SimpsonInterval> heap;
  auto cmp = [](const SimpsonInterval& x, const SimpsonInterval& y) { return x.error < y.error; };
  double total = 0.0, total_err = 0.0;
  std::size_t evals = 0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double a = knots[i], b = knots[i + 1];
    if (!(b > a)) continue;
    const double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    auto iv = make_interval(f, a, b, fa, fm, fb);
    evals += 5;
    total += iv.estimate;
    total_err += iv.error;
    heap.push_back(iv);
    std::push_heap(heap.begin(), heap.end(), cmp);
  }
  if (heap.empty()) return 0.0;
  const double floor_scale = 1e-300;
  while (total_err > rel_tol * std::max(std::abs(total), floor_scale)) {
    if (evals >= max_evals) {
      throw accuracy_error("adaptive_integrate: evaluation budget exhausted", total);
    }
    std::pop_heap(heap.begin(), heap.end(), cmp);
    SimpsonInterval worst = heap.back();
    heap.pop_back();
    if (worst.error == 0.0) break;  // nothing left to refine
    total -= worst.estimate;
    total_err -= worst.error;
    const double m = 0.5 * (worst.a + worst.b);
    auto left = make_interval(f, worst.a, m, worst.fa, worst.fl, worst.fm);
    auto right = make_interval(f, m, worst.b, worst.fm, worst.fr, worst.fb);
    evals += 4;
    total += left.estimate + right.estimate;
    total_err += left.error + right.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), cmp);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), cmp);
  }
  return total;
}

}  // namespace detail

/// Adaptive integration of f over [lower, upper] to a relative tolerance.
/// Either bound may be infinite; infinite ranges are folded onto (0,1) with a
/// rational substitution, so integrands must decay. Interior seed points can
/// be supplied to pre-partition around known features.
template <typename F>
double adaptive_integrate_seeded(F&& f, std::vector<double> knots, double tol,
                                 std::size_t max_evals = 2000000) {
  if (!(tol > 0.0)) throw std::domain_error("adaptive_integrate: tolerance must be positive");
  if (knots.size() < 2) throw std::domain_error("adaptive_integrate: need at least two knots");
  std::sort(knots.begin(), knots.end());
  const double lower = knots.front(), upper = knots.back();
  const bool lo_inf = std::isinf(lower), up_inf = std::isinf(upper);
  if (!lo_inf && !up_inf) {
    return detail::adaptive_simpson_seeded(f, knots, tol, max_evals);
  }
  if (lo_inf && up_inf) {
    auto g = [&f](double t) {
      const double u = 1.0 - t * t;
      if (u <= 0.0) return 0.0;
      const double x = t / u;
      if (!std::isfinite(x)) return 0.0;
      const double fx = f(x);
      if (fx == 0.0) return 0.0;
      return fx * (1.0 + t * t) / (u * u);
    };
    std::vector<double> tk{-1.0};
    for (double x : knots)
      if (std::isfinite(x)) {
        // invert x = t/(1-t^2)
        const double t = (std::sqrt(4.0 * x * x + 1.0) - 1.0) / (2.0 * x == 0.0 ? 1.0 : 2.0 * x);
        tk.push_back(x == 0.0 ? 0.0 : t);
      }
    tk.push_back(1.0);
    return detail::adaptive_simpson_seeded(g, tk, tol, max_evals);
  }
  if (up_inf) {
    auto g = [&f, lower](double t) {
      const double u = 1.0 - t;
      if (u <= 0.0) return 0.0;
      const double x = lower + t / u;
      if (!std::isfinite(x)) return 0.0;
      const double fx = f(x);
      if (fx == 0.0) return 0.0;
      return fx / (u * u);
    };
    std::vector<double> tk{0.0, 1.0};
    for (double x : knots)
      if (std::isfinite(x) && x > lower) tk.push_back((x - lower) / (1.0 + x - lower));
    return detail::adaptive_simpson_seeded(g, tk, tol, max_evals);
  }
  // lower infinite: mirror
  auto g = [&f, upper](double t) {
    const double u = 1.0 - t;
    if (u <= 0.0) return 0.0;
    const double x = upper - t / u;
    if (!std::isfinite(x)) return 0.0;
    const double fx = f(x);
    if (fx == 0.0) return 0.0;
    return fx / (u * u);
  };
  std::vector<double> tk{0.0, 1.0};
  for (double x : knots)
    if (std::isfinite(x) && x < upper) tk.push_back((upper - x) / (1.0 + upper - x));
  return detail::adaptive_simpson_seeded(g, tk, tol, max_evals);
}

template <typename F>
double adaptive_integrate(F&& f, double lower, double upper, double tol,
                          std::size_t max_evals = 2000000) {
  return adaptive_integrate_seeded(std::forward<F>(f), {lower, upper}, tol, max_evals);
}

}  // namespace stbclora
