#ifndef PAM_SPECIAL_HPP
#define PAM_SPECIAL_HPP

// Special functions used by the lattice heat kernel: exponentially scaled
// modified Bessel functions of integer order, the generalized exponential
// integral E_s for half-integer s, and Gauss-Legendre rules.

#include <pam/error.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace pam::special {

/// Switchover between the power series and the large-argument expansion.
inline constexpr double i0_series_limit = 20.0;

/// e^{-|x|} I_0(x).
inline double bessel_i0_scaled(double x) {
  x = std::abs(x);
  if (x < i0_series_limit) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= q / (static_cast<double>(k) * k);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return sum * std::exp(-x);
  }
  // e^{-x} I_0(x) ~ (2 pi x)^{-1/2} sum_j ((2j-1)!!)^2 / (j! 8^j x^j)
  double term = 1.0;
  double sum = 1.0;
  for (int j = 1; j < 60; ++j) {
    const double r = (2.0 * j - 1.0) * (2.0 * j - 1.0) / (8.0 * j * x);
    if (r >= 1.0) break;
    term *= r;
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

/// Coefficients a_j(k) of e^{-x} I_k(x) ~ (2 pi x)^{-1/2} sum_j a_j(k) x^{-j}.
inline std::vector<double> bessel_i_asymptotic_coeffs(int k, int terms) {
  std::vector<double> a(static_cast<std::size_t>(terms), 0.0);
  if (terms == 0) return a;
  a[0] = 1.0;
  const double mu = 4.0 * static_cast<double>(k) * k;
  for (int j = 1; j < terms; ++j) {
    const double odd = 2.0 * j - 1.0;
    a[static_cast<std::size_t>(j)] =
        -a[static_cast<std::size_t>(j) - 1] * (mu - odd * odd) / (8.0 * j);
  }
  return a;
}

/// e^{-x} I_k(x) for k = 0..kmax, x >= 0.
///
/// Small and moderate x use Miller's backward recurrence normalized by
/// e^{-x}(I_0 + 2 sum_{k>=1} I_k) = 1; once x >= 2 kmax^2 the large-argument
/// expansion converges geometrically for every requested order.
inline std::vector<double> bessel_i_scaled_table(double x, int kmax) {
  if (kmax < 0) throw parameter_error("kmax must be >= 0");
  if (x < 0) throw parameter_error("scaled Bessel table needs x >= 0");
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const double kk = static_cast<double>(kmax);
  if (x >= std::max(40.0, 2.0 * kk * kk)) {
    const double pref = 1.0 / std::sqrt(2.0 * std::numbers::pi * x);
    for (int k = 0; k <= kmax; ++k) {
      const double mu = 4.0 * static_cast<double>(k) * k;
      double term = 1.0;
      double sum = 1.0;
      for (int j = 1; j < 80; ++j) {
        const double odd = 2.0 * j - 1.0;
        term *= -(mu - odd * odd) / (8.0 * j * x);
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
      }
      out[static_cast<std::size_t>(k)] = pref * sum;
    }
    return out;
  }
  const int start = kmax + static_cast<int>(std::ceil(1.5 * x + 10.0 * std::sqrt(x))) + 40;
  double above = 0.0;  // y_{k+1}
  double here = 1e-300;  // y_k
  double norm = 0.0;
  for (int k = start; k >= 1; --k) {
    const double below = (2.0 * k / x) * here + above;  // y_{k-1}
    if (k <= kmax) out[static_cast<std::size_t>(k)] = here;
    norm += 2.0 * here;
    above = here;
    here = below;
    if (here > 1e250) {
      const double s = 1e-250;
      here *= s;
      above *= s;
      norm *= s;
      for (int j = k; j <= kmax; ++j) out[static_cast<std::size_t>(j)] *= s;
    }
  }
  out[0] = here;
  norm += here;
  for (auto& v : out) v /= norm;
  return out;
}

/// E_s(z) = int_1^inf e^{-z u} u^{-s} du for s a positive multiple of 1/2.
inline double expint_e(double s, double z) {
  const double twice = 2.0 * s;
  if (s <= 0.0 || std::abs(twice - std::round(twice)) > 1e-12) {
    throw parameter_error("expint_e supports positive half-integer orders only");
  }
  if (z < 0.0) throw parameter_error("expint_e needs z >= 0");
  if (z == 0.0) {
    if (s <= 1.0) return std::numeric_limits<double>::infinity();
    return 1.0 / (s - 1.0);
  }
  if (z > 2.0) {
    // modified Lentz evaluation of the continued fraction
    constexpr double tiny = 1e-300;
    double b = z + s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
      const double an = -static_cast<double>(i) * (s - 1.0 + i);
      b += 2.0;
      d = 1.0 / (an * d + b);
      c = b + an / c;
      const double del = c * d;
      h *= del;
      if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-z);
  }
  const bool half = std::abs(twice - 2.0 * std::floor(s)) > 0.5;
  double nu = half ? 0.5 : 1.0;
  double e = half ? std::sqrt(std::numbers::pi / z) * std::erfc(std::sqrt(z)) : -std::expint(-z);
  const double ez = std::exp(-z);
  while (nu + 0.25 < s) {
    e = (ez - z * e) / nu;
    nu += 1.0;
  }
  return e;
}

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw parameter_error("Gauss-Legendre order must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      // derivative at the converged node
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return rule;
}

/// Gauss-Legendre rule mapped to [a, b].
inline QuadratureRule gauss_legendre(int n, double a, double b) {
  auto rule = gauss_legendre(n);
  const double h = 0.5 * (b - a);
  const double m = 0.5 * (b + a);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    rule.nodes[i] = m + h * rule.nodes[i];
    rule.weights[i] *= h;
  }
  return rule;
}

}  // namespace pam::special

#endif  // PAM_SPECIAL_HPP
