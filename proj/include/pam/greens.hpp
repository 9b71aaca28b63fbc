#ifndef PAM_GREENS_HPP
#define PAM_GREENS_HPP

// Lattice Green function of the rate-2d simple random walk on Z^d.
//
// The primary route writes every quantity as a one-dimensional time integral
// of the heat kernel p_t(0,x) = prod_i e^{-2t} I_{|x_i|}(2t):
//
//   G_d(x)      = int_0^inf p_t(0,x) dt
//   ||G_d||_2^2 = int_0^inf t p_t(0,0) dt
//
// The integral is split at a time T; [0,T] is integrated by adaptive
// Gauss-Kronrod on geometrically growing panels and [T,inf) analytically
// from the large-time expansion of the scaled Bessel factors. The Fourier
// representation over [0,pi]^d is kept as an independent cross-check.

#include <pam/error.hpp>
#include <pam/rng.hpp>
#include <pam/special.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace pam {

enum class GreenQuantity { at_origin, l2_norm_sq, at_site, alpha };
enum class GreenMethod { time_integral, fourier_quadrature, monte_carlo };

inline const char* to_string(GreenQuantity q) {
  switch (q) {
    case GreenQuantity::at_origin: return "G_d(0)";
    case GreenQuantity::l2_norm_sq: return "|G_d|_2^2";
    case GreenQuantity::at_site: return "G_d(x)";
    case GreenQuantity::alpha: return "alpha_d";
  }
  return "?";
}

inline const char* to_string(GreenMethod m) {
  switch (m) {
    case GreenMethod::time_integral: return "time-integral";
    case GreenMethod::fourier_quadrature: return "fourier-quadrature";
    case GreenMethod::monte_carlo: return "monte-carlo";
  }
  return "?";
}

/// A Green-function constant. Divergence is a value (+inf), not an exception.
struct GreenEstimate {
  int d = 0;
  GreenQuantity quantity = GreenQuantity::at_origin;
  double value = 0.0;
  double abs_error = 0.0;
  GreenMethod method = GreenMethod::time_integral;

  bool divergent() const noexcept { return std::isinf(value); }
};

/// p_t^nu(0,0) for the rate-2d*nu walk: (e^{-2 nu t} I_0(2 nu t))^d.
inline double heat_kernel_diag(int d, double nu, double t) {
  if (d < 1) throw parameter_error("dimension must be >= 1");
  if (nu < 0.0 || t < 0.0) throw parameter_error("heat kernel needs nu >= 0 and t >= 0");
  return std::pow(special::bessel_i0_scaled(2.0 * nu * t), d);
}

namespace detail {

inline constexpr int tail_terms = 16;

/// c_j with prod_i e^{-2t} I_{k_i}(2t) ~ (4 pi t)^{-d/2} sum_j c_j t^{-j}.
inline std::vector<double> heat_tail_coeffs(std::span<const int> orders, int terms = tail_terms) {
  std::vector<double> c(static_cast<std::size_t>(terms), 0.0);
  c[0] = 1.0;
  std::vector<double> next(c.size());
  for (int k : orders) {
    auto a = special::bessel_i_asymptotic_coeffs(k, terms);
    double scale = 1.0;
    for (auto& v : a) {  // x = 2t
      v *= scale;
      scale *= 0.5;
    }
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = 0; i + j < c.size(); ++j) next[i + j] += c[i] * a[j];
    }
    c.swap(next);
  }
  return c;
}

/// Start of the analytic tail for d factors of maximal order kmax.
inline double tail_start(int d, int kmax) {
  return std::max({64.0, 4.0 * d, static_cast<double>(kmax) * kmax});
}

struct Integral {
  double value = 0.0;
  double abs_error = 0.0;
};

/// int_T^inf t^tpow e^{-a t} (4 pi t)^{-d/2} sum_j c_j t^{-j} dt, with an
/// estimate of the truncation remainder. Infinite when the integral diverges.
inline Integral heat_tail(std::span<const double> c, int d, int tpow, double a, double T) {
  double sum = 0.0;
  double last = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double s = 0.5 * d + static_cast<double>(j) - tpow;
    if (a == 0.0 && s <= 1.0) return {std::numeric_limits<double>::infinity(), 0.0};
    const double term = c[j] * std::pow(T, 1.0 - s) * special::expint_e(s, a * T);
    sum += term;
    last = std::abs(term);
  }
  const double pref = std::pow(4.0 * std::numbers::pi, -0.5 * d);
  return {pref * sum, 2.0 * pref * last};
}

/// int_0^inf t^tpow e^{-a t} f(t) dt where f has the heat-kernel tail `c`.
/// `fine` selects the 31-point Kronrod extension instead of the 15-point one.
template <class F>
Integral heat_time_integral(F&& f, std::span<const double> c, int d, int tpow, double a, double T,
                            bool fine) {
  auto g = [&](double t) {
    double w = f(t);
    if (tpow == 1) w *= t;
    if (a > 0.0) w *= std::exp(-a * t);
    return w;
  };
  const double rel = fine ? 1e-13 : 1e-10;
  double h = 0.25 / std::max({1.0, a, 0.5 * d});
  // the scaled I_0 changes formula at 2t = i0_series_limit; keep that a panel edge
  const double kink = 0.5 * special::i0_series_limit;
  double lo = 0.0;
  double hi = h;
  Integral out;
  while (lo < T) {
    if (a > 0.0) {
      // f <= 1, so the rest is at most int_lo^inf t^tpow e^{-a t} dt
      const double rest = std::exp(-a * lo) * (tpow == 1 ? lo / a + 1.0 / (a * a) : 1.0 / a);
      if (rest <= 1e-17 * out.value) {
        out.abs_error += rest + 1e-15 * out.value;
        return out;
      }
    }
    hi = std::min(hi, T);
    if (lo < kink && hi > kink) hi = kink;
    // Boost compares errors on [-1,1] against estimates on [lo,hi]; hand it [-1,1]
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    auto unit = [&](double u) { return half * g(mid + half * u); };
    double err = 0.0;
    double v = 0.0;
    if (fine) {
      v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(unit, -1.0, 1.0, 12, rel, &err);
    } else {
      v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(unit, -1.0, 1.0, 12, rel, &err);
    }
    out.value += v;
    out.abs_error += err;
    lo = hi;
    hi *= 2.0;
  }
  const auto tail = heat_tail(c, d, tpow, a, T);
  out.value += tail.value;
  out.abs_error += tail.abs_error + 1e-15 * std::abs(out.value);
  return out;
}

inline void check_tol(double tol) {
  if (!(tol > 0.0)) throw parameter_error("tolerance must be positive");
}

inline Integral diag_integral(int d, int tpow, double a, double tol) {
  const int zero = 0;
  std::vector<int> orders(static_cast<std::size_t>(d), zero);
  const auto c = heat_tail_coeffs(orders);
  auto f = [d](double t) { return std::pow(special::bessel_i0_scaled(2.0 * t), d); };
  const bool fine = tol < 1e-9;
  auto r = heat_time_integral(f, c, d, tpow, a, tail_start(d, 0), fine);
  if (!fine && r.abs_error > tol) r = heat_time_integral(f, c, d, tpow, a, tail_start(d, 0), true);
  return r;
}

}  // namespace detail

/// int_0^inf e^{-a t} p_t(0,0) dt for the rate-2d walk (a >= 0). Infinite
/// for a = 0 in d <= 2.
inline detail::Integral diag_resolvent(int d, double a, double tol = 1e-12) {
  if (d < 1) throw parameter_error("dimension must be >= 1");
  if (a < 0.0) throw parameter_error("resolvent parameter must be >= 0");
  detail::check_tol(tol);
  if (a == 0.0 && d <= 2) return {std::numeric_limits<double>::infinity(), 0.0};
  return detail::diag_integral(d, 0, a, tol);
}

/// G_d(0); divergent for d <= 2.
inline GreenEstimate green_zero(int d, double tol = 1e-10) {
  if (d < 1) throw parameter_error("dimension must be >= 1");
  detail::check_tol(tol);
  GreenEstimate out{d, GreenQuantity::at_origin, 0.0, 0.0, GreenMethod::time_integral};
  if (d <= 2) {
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  const auto r = detail::diag_integral(d, 0, 0.0, tol);
  if (r.abs_error > tol) {
    throw convergence_error("G_d(0) quadrature error above tolerance", r.value, r.abs_error);
  }
  out.value = r.value;
  out.abs_error = r.abs_error;
  return out;
}

/// ||G_d||_2^2 = int_0^inf t p_t(0,0) dt; divergent for d <= 4.
inline GreenEstimate green_l2sq(int d, double tol = 1e-10) {
  if (d < 1) throw parameter_error("dimension must be >= 1");
  detail::check_tol(tol);
  GreenEstimate out{d, GreenQuantity::l2_norm_sq, 0.0, 0.0, GreenMethod::time_integral};
  if (d <= 4) {
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  const auto r = detail::diag_integral(d, 1, 0.0, tol);
  if (r.abs_error > tol) {
    throw convergence_error("|G_d|^2 quadrature error above tolerance", r.value, r.abs_error);
  }
  out.value = r.value;
  out.abs_error = r.abs_error;
  return out;
}

/// G_d(x) for d >= 3.
inline GreenEstimate green_at(int d, std::span<const int> x, double tol = 1e-10) {
  if (d <= 2) throw divergence_error("G_d(x) is infinite for d <= 2");
  if (x.size() != static_cast<std::size_t>(d)) throw dimension_error("site dimension != d");
  detail::check_tol(tol);
  std::vector<int> orders;
  orders.reserve(x.size());
  for (int c : x) orders.push_back(std::abs(c));
  const int kmax = *std::max_element(orders.begin(), orders.end());
  const auto c = detail::heat_tail_coeffs(orders);
  auto f = [&](double t) {
    const auto q = special::bessel_i_scaled_table(2.0 * t, kmax);
    double v = 1.0;
    for (int k : orders) v *= q[static_cast<std::size_t>(k)];
    return v;
  };
  const double T = detail::tail_start(d, kmax);
  const bool fine = tol < 1e-9;
  auto r = detail::heat_time_integral(f, c, d, 0, 0.0, T, fine);
  if (!fine && r.abs_error > tol) r = detail::heat_time_integral(f, c, d, 0, 0.0, T, true);
  if (r.abs_error > tol) {
    throw convergence_error("G_d(x) quadrature error above tolerance", r.value, r.abs_error);
  }
  return {d, GreenQuantity::at_site, r.value, r.abs_error, GreenMethod::time_integral};
}

/// alpha_d = G_d(0) / (2d ||G_d||_2^2); zero for d in {3,4}.
inline GreenEstimate alpha(int d, double tol = 1e-10) {
  if (d <= 2) throw domain_error("alpha_d needs d >= 3 (G_d(0) is infinite)");
  GreenEstimate out{d, GreenQuantity::alpha, 0.0, 0.0, GreenMethod::time_integral};
  if (d <= 4) return out;
  const auto g0 = green_zero(d, tol);
  const auto l2 = green_l2sq(d, tol);
  out.value = g0.value / (2.0 * d * l2.value);
  out.abs_error = out.value * (g0.abs_error / g0.value + l2.abs_error / l2.value);
  return out;
}

namespace detail {

/// Expectation over Theta uniform on [0,pi]^d of h(c), c = d - sum cos Theta_i,
/// with the last coordinate integrated in closed form (inner(c)) and a
/// pyramid (Duffy) split of the remaining cube that removes the singularity
/// at the origin. Tensor Gauss-Legendre with `nodes` points per axis.
template <class Inner>
double fourier_expectation(int d, int nodes, Inner&& inner) {
  const int k = d - 1;
  const auto rule = special::gauss_legendre(nodes, 0.0, 1.0);
  const std::size_t n = rule.nodes.size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
  double total = 0.0;
  // idx[0] drives the pyramid height s; the others the in-face coordinates.
  while (true) {
    const double s = rule.nodes[idx[0]];
    double w = rule.weights[idx[0]] * std::pow(s, k - 1);
    double cm1 = 0.0;  // c - 1 = sum 2 sin^2(theta/2)
    {
      const double sh = std::sin(0.5 * std::numbers::pi * s);
      cm1 += 2.0 * sh * sh;
    }
    for (std::size_t i = 1; i < idx.size(); ++i) {
      w *= rule.weights[idx[i]];
      const double sh = std::sin(0.5 * std::numbers::pi * s * rule.nodes[idx[i]]);
      cm1 += 2.0 * sh * sh;
    }
    total += w * inner(cm1);
    std::size_t a = 0;
    while (a < idx.size() && ++idx[a] == n) {
      idx[a] = 0;
      ++a;
    }
    if (a == idx.size()) break;
  }
  return static_cast<double>(k) * total;
}

}  // namespace detail

/// G_d(0) = E[1 / (2 sum_i (1 - cos Theta_i))], Theta_i iid uniform on [0,pi].
/// abs_error compares against a rule with two thirds of the nodes.
inline GreenEstimate green_zero_fourier(int d, int nodes = 48) {
  if (d < 1) throw parameter_error("dimension must be >= 1");
  GreenEstimate out{d, GreenQuantity::at_origin, std::numeric_limits<double>::infinity(), 0.0,
                    GreenMethod::fourier_quadrature};
  if (d <= 2) return out;
  // (1/pi) int_0^pi dtheta / (2 (c - cos theta)) = 1 / (2 sqrt(c^2 - 1))
  auto inner = [](double cm1) { return 0.5 / std::sqrt(cm1 * (cm1 + 2.0)); };
  const double fine = detail::fourier_expectation(d, nodes, inner);
  const double coarse = detail::fourier_expectation(d, std::max(2, 2 * nodes / 3), inner);
  out.value = fine;
  out.abs_error = std::abs(fine - coarse) + 1e-14 * fine;
  return out;
}

/// ||G_d||_2^2 = E[1 / (2 sum_i (1 - cos Theta_i))^2].
inline GreenEstimate green_l2sq_fourier(int d, int nodes = 24) {
  if (d < 1) throw parameter_error("dimension must be >= 1");
  GreenEstimate out{d, GreenQuantity::l2_norm_sq, std::numeric_limits<double>::infinity(), 0.0,
                    GreenMethod::fourier_quadrature};
  if (d <= 4) return out;
  // (1/pi) int_0^pi dtheta / (4 (c - cos theta)^2) = c / (4 (c^2 - 1)^{3/2})
  auto inner = [](double cm1) {
    const double q = cm1 * (cm1 + 2.0);
    return 0.25 * (cm1 + 1.0) / (q * std::sqrt(q));
  };
  const double fine = detail::fourier_expectation(d, nodes, inner);
  const double coarse = detail::fourier_expectation(d, std::max(2, 2 * nodes / 3), inner);
  out.value = fine;
  out.abs_error = std::abs(fine - coarse) + 1e-14 * fine;
  return out;
}

/// Plain Monte Carlo of the Fourier expectation. Only d >= 5 has finite
/// variance; abs_error is one standard error.
inline GreenEstimate green_zero_monte_carlo(int d, std::uint64_t samples, std::uint64_t seed) {
  if (d < 5) throw domain_error("Monte Carlo G_d(0) has infinite variance for d <= 4");
  if (samples < 2) throw parameter_error("need at least two samples");
  double mean = 0.0;
  double m2 = 0.0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    Stream rng(seed, i);
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      const double sh = std::sin(0.5 * std::numbers::pi * rng.uniform());
      s += 2.0 * sh * sh;
    }
    const double v = 0.5 / s;
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {d, GreenQuantity::at_origin, mean, std::sqrt(var / static_cast<double>(samples)),
          GreenMethod::monte_carlo};
}

/// G_d on the cube {-R..R}^d, stored once per sorted tuple of |x_i|.
class GreenTable {
 public:
  GreenTable(int d, int radius) : d_(d), radius_(radius) {
    if (d <= 2) throw divergence_error("G_d is infinite for d <= 2");
    if (radius < 0) throw parameter_error("radius must be >= 0");
    build();
  }

  int dim() const noexcept { return d_; }
  int radius() const noexcept { return radius_; }
  double abs_error() const noexcept { return abs_error_; }
  std::size_t distinct_values() const noexcept { return values_.size(); }

  /// G_d(x); any x with max |x_i| <= R.
  double operator()(std::span<const int> x) const {
    std::vector<int> a(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = std::abs(x[i]);
    std::sort(a.begin(), a.end());
    return values_.at(key(a));
  }

  /// Value for a nondecreasing tuple of absolute coordinates.
  double sorted(std::span<const int> a) const { return values_.at(key(a)); }

  /// Calls fn(sorted tuple) for every nondecreasing tuple in {0..R}^d.
  template <class Fn>
  void for_each_tuple(Fn&& fn) const {
    std::vector<int> a(static_cast<std::size_t>(d_), 0);
    while (true) {
      fn(std::span<const int>(a));
      int i = d_ - 1;
      while (i >= 0 && a[static_cast<std::size_t>(i)] == radius_) --i;
      if (i < 0) break;
      const int v = a[static_cast<std::size_t>(i)] + 1;
      for (int j = i; j < d_; ++j) a[static_cast<std::size_t>(j)] = v;
    }
  }

 private:
  std::uint64_t key(std::span<const int> a) const {
    std::uint64_t k = 0;
    for (int v : a) k = k * static_cast<std::uint64_t>(radius_ + 1) + static_cast<std::uint64_t>(v);
    return k;
  }

  void build() {
    std::vector<std::vector<int>> tuples;
    for_each_tuple([&](std::span<const int> a) { tuples.emplace_back(a.begin(), a.end()); });
    const double T = detail::tail_start(d_, radius_);
    // composite Gauss-Legendre on [0,1/16],[1/16,1/8],...; two orders for the error
    std::vector<double> t_nodes;
    std::vector<double> w_fine;
    std::vector<double> w_coarse;
    {
      double lo = 0.0;
      double hi = 1.0 / 16.0;
      while (lo < T) {
        hi = std::min(hi, T);
        const auto fine = special::gauss_legendre(24, lo, hi);
        const auto coarse = special::gauss_legendre(16, lo, hi);
        for (std::size_t i = 0; i < fine.nodes.size(); ++i) {
          t_nodes.push_back(fine.nodes[i]);
          w_fine.push_back(fine.weights[i]);
          w_coarse.push_back(0.0);
        }
        for (std::size_t i = 0; i < coarse.nodes.size(); ++i) {
          t_nodes.push_back(coarse.nodes[i]);
          w_fine.push_back(0.0);
          w_coarse.push_back(coarse.weights[i]);
        }
        lo = hi;
        hi *= 2.0;
      }
    }
    std::vector<double> fine(tuples.size(), 0.0);
    std::vector<double> coarse(tuples.size(), 0.0);
    for (std::size_t n = 0; n < t_nodes.size(); ++n) {
      const auto q = special::bessel_i_scaled_table(2.0 * t_nodes[n], radius_);
      for (std::size_t m = 0; m < tuples.size(); ++m) {
        double v = 1.0;
        for (int k : tuples[m]) v *= q[static_cast<std::size_t>(k)];
        fine[m] += w_fine[n] * v;
        coarse[m] += w_coarse[n] * v;
      }
    }
    values_.reserve(tuples.size());
    abs_error_ = 0.0;
    for (std::size_t m = 0; m < tuples.size(); ++m) {
      const auto c = detail::heat_tail_coeffs(tuples[m]);
      const auto tail = detail::heat_tail(c, d_, 0, 0.0, T);
      const double v = fine[m] + tail.value;
      abs_error_ = std::max(abs_error_, std::abs(fine[m] - coarse[m]) + tail.abs_error);
      values_.emplace(key(tuples[m]), v);
    }
  }

  int d_;
  int radius_;
  double abs_error_ = 0.0;
  std::unordered_map<std::uint64_t, double> values_;
};

}  // namespace pam

#endif  // PAM_GREENS_HPP
