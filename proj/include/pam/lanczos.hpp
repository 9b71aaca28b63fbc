#ifndef PAM_LANCZOS_HPP
#define PAM_LANCZOS_HPP

// Top eigenpair of a large symmetric operator given only its action.
//
// Plain Lanczos without reorthogonalization, run in two passes: the first
// keeps three vectors and watches the top Ritz value of the tridiagonal
// matrix; the second replays the (bitwise identical) recurrence to assemble
// the Ritz vector, whose exact Rayleigh quotient and residual are what we
// report. Loss of orthogonality only produces ghost copies of converged Ritz
// values, which does not disturb the top pair. If the replayed residual is
// still too large the method restarts from the Ritz vector.

#include <pam/error.hpp>
#include <pam/lattice.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace pam {

struct EigenOptions {
  double tol = 1e-9;          ///< target for ||A y - theta y|| with ||y|| = 1
  std::size_t max_iters = 50'000;  ///< operator applications, all restarts included
  bool power_fallback = false;     ///< use shifted power iteration instead of Lanczos
  double shift = 0.0;              ///< power iteration only: A + shift must be >= 0
};

struct EigenResult {
  double value = 0.0;     ///< Rayleigh quotient of `vector`
  double residual = 0.0;  ///< ||A y - value y||, y normalized
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> vector;
};

namespace detail {

/// Number of eigenvalues of the tridiagonal (a, b) strictly below x.
inline std::size_t sturm_below(std::span<const double> a, std::span<const double> b, double x) {
  std::size_t count = 0;
  double d = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double off = i == 0 ? 0.0 : b[i - 1] * b[i - 1];
    d = a[i] - x - (i == 0 ? 0.0 : off / d);
    if (d == 0.0) d = -std::numeric_limits<double>::min();
    if (d < 0.0) ++count;
  }
  return count;
}

/// Largest eigenvalue of the symmetric tridiagonal matrix by bisection.
inline double tridiag_top(std::span<const double> a, std::span<const double> b) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = (i > 0 ? std::abs(b[i - 1]) : 0.0) + (i + 1 < a.size() ? std::abs(b[i]) : 0.0);
    lo = std::max(lo, a[i]);
    hi = std::max(hi, a[i] + r);
  }
  const std::size_t n = a.size();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_below(a, b, mid) < n) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

/// Unit eigenvector of the tridiagonal matrix for its top eigenvalue theta,
/// by inverse iteration on the positive definite (theta' - T).
inline std::vector<double> tridiag_top_vector(std::span<const double> a, std::span<const double> b,
                                              double theta) {
  const std::size_t n = a.size();
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i + 1 < n; ++i) scale = std::max(scale, std::abs(b[i]));
  const double shift = theta + std::max(1e-14 * scale, std::numeric_limits<double>::min());
  std::vector<double> s(n, 1.0);
  std::vector<double> diag(n);
  std::vector<double> rhs(n);
  for (int sweep = 0; sweep < 3; ++sweep) {
    // Thomas elimination of (shift - T) s_new = s
    rhs = s;
    diag[0] = shift - a[0];
    for (std::size_t i = 1; i < n; ++i) {
      const double l = -b[i - 1] / diag[i - 1];
      diag[i] = shift - a[i] + l * b[i - 1];
      rhs[i] -= l * rhs[i - 1];
    }
    s[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) s[i] = (rhs[i] + b[i] * s[i + 1]) / diag[i];
    double norm = 0.0;
    for (double v : s) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : s) v /= norm;
  }
  return s;
}

inline void normalize(std::span<double> v) {
  const double norm = std::sqrt(dot(v, v));
  if (!(norm > 0.0)) throw degenerate_error("zero vector in eigensolver");
  for (double& x : v) x /= norm;
}

template <class Apply>
EigenResult rayleigh(Apply& apply, std::vector<double> y, std::vector<double>& work) {
  normalize(y);
  std::fill(work.begin(), work.end(), 0.0);
  apply(std::span<const double>(y), std::span<double>(work));
  EigenResult r;
  r.value = dot(y, work);
  double res = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = work[i] - r.value * y[i];
    res += e * e;
  }
  r.residual = std::sqrt(res);
  r.vector = std::move(y);
  return r;
}

template <class Apply>
EigenResult power_top(Apply& apply, std::vector<double> start, const EigenOptions& opts) {
  std::vector<double> v = std::move(start);
  std::vector<double> w(v.size());
  normalize(v);
  EigenResult best;
  best.residual = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= opts.max_iters; ++it) {
    std::fill(w.begin(), w.end(), 0.0);
    apply(std::span<const double>(v), std::span<double>(w));
    const double theta = dot(v, w);
    double res = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double e = w[i] - theta * v[i];
      res += e * e;
    }
    res = std::sqrt(res);
    if (res < best.residual) {
      best.value = theta;
      best.residual = res;
      best.iterations = it;
    }
    if (res <= opts.tol) {
      best.vector = v;
      best.converged = true;
      return best;
    }
    for (std::size_t i = 0; i < v.size(); ++i) w[i] += opts.shift * v[i];
    normalize(w);
    v.swap(w);
  }
  throw convergence_error("power iteration did not converge", best.value, best.residual);
}

}  // namespace detail

/// Largest eigenvalue of the symmetric operator `apply` (out += A in) on
/// vectors of length `start.size()`, with its Ritz vector.
template <class Apply>
EigenResult symmetric_top_eigenpair(Apply&& apply, std::vector<double> start, const EigenOptions& opts = {}) {
  if (start.empty()) throw parameter_error("empty operator");
  if (!(opts.tol > 0.0)) throw parameter_error("eigen tolerance must be positive");
  if (opts.power_fallback) return detail::power_top(apply, std::move(start), opts);

  const std::size_t n = start.size();
  std::vector<double> work(n);
  std::vector<double> v_prev(n);
  std::vector<double> v(n);
  std::vector<double> w(n);
  std::size_t used = 0;
  double best_value = 0.0;
  double best_residual = std::numeric_limits<double>::infinity();

  // one Lanczos step: w = A v - beta_prev v_prev, alpha, then w -= alpha v
  auto step = [&](double beta_prev, double& alpha) {
    std::fill(w.begin(), w.end(), 0.0);
    apply(std::span<const double>(v), std::span<double>(w));
    alpha = dot(v, w);
    double nn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] -= alpha * v[i] + beta_prev * v_prev[i];
      nn += w[i] * w[i];
    }
    return std::sqrt(nn);
  };

  std::vector<double> q0 = std::move(start);
  detail::normalize(q0);
  while (used < opts.max_iters) {
    // pass 1: tridiagonal coefficients only
    std::vector<double> alphas;
    std::vector<double> betas;
    std::fill(v_prev.begin(), v_prev.end(), 0.0);
    v = q0;
    double beta_prev = 0.0;
    double op_scale = 0.0;
    std::size_t next_check = 8;
    std::vector<double> s;
    while (true) {
      double alpha = 0.0;
      const double beta = step(beta_prev, alpha);
      ++used;
      alphas.push_back(alpha);
      op_scale = std::max({op_scale, std::abs(alpha), beta});
      const bool breakdown = beta <= 1e-13 * op_scale;
      const bool out_of_budget = used >= opts.max_iters;
      if (breakdown || out_of_budget || alphas.size() >= next_check) {
        const double theta = detail::tridiag_top(alphas, betas);
        s = detail::tridiag_top_vector(alphas, betas, theta);
        const double estimate = beta * std::abs(s.back());
        if (breakdown || out_of_budget || estimate <= 0.1 * opts.tol) break;
        next_check = alphas.size() + std::max<std::size_t>(8, alphas.size() / 8);
      }
      betas.push_back(beta);
      for (std::size_t i = 0; i < n; ++i) {
        v_prev[i] = v[i];
        v[i] = w[i] / beta;
      }
      beta_prev = beta;
    }

    // pass 2: replay and assemble y = sum_i s_i v_i
    std::vector<double> y(n, 0.0);
    std::fill(v_prev.begin(), v_prev.end(), 0.0);
    v = q0;
    beta_prev = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) y[i] += s[k] * v[i];
      if (k + 1 == s.size()) break;
      double alpha = 0.0;
      step(beta_prev, alpha);
      const double beta = betas[k];
      for (std::size_t i = 0; i < n; ++i) {
        v_prev[i] = v[i];
        v[i] = w[i] / beta;
      }
      beta_prev = beta;
    }
    auto r = detail::rayleigh(apply, std::move(y), work);
    used += s.size();
    r.iterations = used;
    if (r.residual < best_residual) {
      best_residual = r.residual;
      best_value = r.value;
    }
    if (r.residual <= opts.tol) {
      r.converged = true;
      return r;
    }
    q0 = std::move(r.vector);
  }
  throw convergence_error("Lanczos did not reach the residual tolerance", best_value, best_residual);
}

}  // namespace pam

#endif  // PAM_LANCZOS_HPP
