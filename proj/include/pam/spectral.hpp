#ifndef PAM_SPECTRAL_HPP
#define PAM_SPECTRAL_HPP

// The spectral side: mu(kappa) = sup spec(kappa Delta + delta_0), its
// inverse, the operator
//
//   L_p = kappa sum_j Delta_{x_j} + rho sum_k Delta_{y_k} + sum_{j,k} delta_0(x_j - y_k)
//
// on Z^{d(p+n)}, and Dirichlet box estimates of lambda_p = sup <f, L_p f> / p.
// Axis layout of a configuration box: the first d*p axes are x_1..x_p, the
// remaining d*n axes are y_1..y_n, each walker occupying d consecutive axes.

#include <pam/error.hpp>
#include <pam/greens.hpp>
#include <pam/lanczos.hpp>
#include <pam/lattice.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace pam {

struct PamParams {
  int d = 1;
  int n = 1;
  int p = 1;
  double kappa = 0.0;
  double rho = 0.0;

  void validate() const {
    if (d < 1) throw parameter_error("d must be >= 1");
    if (n < 1) throw parameter_error("n must be >= 1");
    if (p < 1) throw parameter_error("p must be >= 1");
    if (!(std::isfinite(kappa) && kappa >= 0.0)) throw parameter_error("kappa must be finite and >= 0");
    if (!(std::isfinite(rho) && rho >= 0.0)) throw parameter_error("rho must be finite and >= 0");
  }

  /// (d, p, n, rho, kappa): lambda_p^{(n)}(kappa, rho) = (n/p) lambda_n^{(p)}(rho, kappa).
  PamParams partner() const { return {d, p, n, rho, kappa}; }

  int dim() const { return d * (p + n); }

  friend bool operator==(const PamParams&, const PamParams&) = default;
};

enum class EstimateKind { spectral, closed_form, monte_carlo };

inline const char* to_string(EstimateKind k) {
  switch (k) {
    case EstimateKind::spectral: return "spectral";
    case EstimateKind::closed_form: return "closed-form";
    case EstimateKind::monte_carlo: return "monte-carlo";
  }
  return "?";
}

struct LyapunovEstimate {
  PamParams params;
  EstimateKind kind = EstimateKind::spectral;
  double value = 0.0;
  /// spectral: residual / p, a bound on the distance to the box spectrum.
  /// monte-carlo: one standard error.
  double error = 0.0;
  int radius = -1;
  double t = 0.0;
  std::uint64_t samples = 0;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// lambda_spectral only: last two radii differ by less than the tolerance.
  bool radius_converged = false;
};

// ---------------------------------------------------------------------------
// mu and its inverse

/// mu(kappa) for kappa Delta + delta_0 on Z^d. It is the root mu of
/// int_0^inf e^{-mu t} (e^{-2 kappa t} I_0(2 kappa t))^d dt = 1, zero once
/// kappa >= G_d(0).
inline double mu(int d, double kappa, double tol = 1e-10) {
  if (d < 1) throw parameter_error("d must be >= 1");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw parameter_error("kappa must be finite and >= 0");
  if (!(tol > 0.0)) throw parameter_error("tolerance must be positive");
  if (kappa == 0.0) return 1.0;
  if (d >= 3 && kappa >= green_zero(d, 1e-12).value) return 0.0;
  const double qtol = std::min(1e-12, 0.01 * tol);
  // int e^{-mu t} p_t^kappa dt = (1/kappa) int e^{-(mu/kappa) s} p_s ds
  auto excess = [&](double m) { return diag_resolvent(d, m / kappa, qtol).value / kappa - 1.0; };
  double lo = 0.0;  // excess > 0
  double hi = 1.0;  // excess <= 0 since p_t <= 1
  while (hi - lo > 0.5 * tol) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// The kappa in [0, G_d(0)] with mu(kappa) = t; zero for t >= 1.
inline double mu_inverse(int d, double t, double tol = 1e-10) {
  if (d < 1) throw parameter_error("d must be >= 1");
  if (!(t >= 0.0) || !std::isfinite(t)) throw parameter_error("t must be finite and >= 0");
  if (!(tol > 0.0)) throw parameter_error("tolerance must be positive");
  if (t >= 1.0) return 0.0;
  if (t == 0.0) {
    if (d <= 2) throw divergence_error("mu^{-1}(0) = G_d(0) is infinite for d <= 2");
    return green_zero(d, 1e-12).value;
  }
  const double qtol = std::min(1e-12, 0.01 * tol);
  // mu(kappa) > t  <=>  (1/kappa) int e^{-(t/kappa) s} p_s ds > 1
  auto above = [&](double k) { return diag_resolvent(d, t / k, qtol).value / k > 1.0; };
  double lo = 0.0;
  double hi = 0.0;
  if (d >= 3) {
    hi = green_zero(d, 1e-12).value;
  } else {
    hi = 1.0;
    while (above(hi)) {
      lo = hi;
      hi *= 2.0;
    }
  }
  while (hi - lo > 0.5 * tol) {
    const double mid = 0.5 * (lo + hi);
    if (above(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// n min(mu(kappa/n), mu(rho/p)): an upper bound on lambda_p^{(n)}(kappa, rho).
inline double lambda_upper_bound(const PamParams& q, double tol = 1e-10) {
  q.validate();
  return q.n * std::min(mu(q.d, q.kappa / q.n, tol), mu(q.d, q.rho / q.p, tol));
}

// ---------------------------------------------------------------------------
// The operator on a configuration box

inline Box configuration_box(const PamParams& q, int radius) {
  q.validate();
  return Box(q.dim(), radius);
}

class Generator {
 public:
  Generator(const PamParams& q, Box box) : q_(q), box_(std::move(box)) {
    q_.validate();
    if (box_.dim() != q_.dim()) {
      throw dimension_error("box dimension " + std::to_string(box_.dim()) + " != d(p+n) = " +
                            std::to_string(q_.dim()));
    }
    potential_.resize(box_.size());
    std::vector<int> x(static_cast<std::size_t>(box_.dim()), -box_.radius());
    const auto d = static_cast<std::size_t>(q_.d);
    const auto xs = static_cast<std::size_t>(q_.p) * d;
    for (std::size_t idx = 0; idx < box_.size(); ++idx) {
      int hits = 0;
      for (int j = 0; j < q_.p; ++j) {
        for (int k = 0; k < q_.n; ++k) {
          const int* a = x.data() + static_cast<std::size_t>(j) * d;
          const int* b = x.data() + xs + static_cast<std::size_t>(k) * d;
          if (std::equal(a, a + d, b)) ++hits;
        }
      }
      potential_[idx] = hits;
      for (auto& c : x) {  // odometer, coordinate 0 fastest
        if (++c <= box_.radius()) break;
        c = -box_.radius();
      }
    }
  }

  const PamParams& params() const noexcept { return q_; }
  const Box& box() const noexcept { return box_; }
  /// I_p on the box.
  std::span<const double> potential() const noexcept { return potential_; }

  /// out += L_p f.
  void apply(std::span<const double> f, std::span<double> out) const {
    for (std::size_t i = 0; i < f.size(); ++i) out[i] += potential_[i] * f[i];
    const int xs = q_.d * q_.p;
    if (q_.kappa != 0.0) {
      for (int a = 0; a < xs; ++a) add_axis_laplacian(box_, f, out, a, q_.kappa);
    }
    if (q_.rho != 0.0) {
      for (int a = xs; a < box_.dim(); ++a) add_axis_laplacian(box_, f, out, a, q_.rho);
    }
  }

  /// Positive start vector: lowest Dirichlet mode weighted by 1 + I_p.
  std::vector<double> start_vector() const {
    std::vector<double> c(box_.side());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double coord = static_cast<double>(i) - box_.radius();
      c[i] = std::cos(std::numbers::pi * coord / (2.0 * box_.radius() + 2.0));
    }
    std::vector<double> v(box_.size());
    std::vector<std::size_t> x(static_cast<std::size_t>(box_.dim()), 0);
    for (std::size_t idx = 0; idx < v.size(); ++idx) {
      double w = 1.0 + potential_[idx];
      for (auto i : x) w *= c[i];
      v[idx] = w;
      for (auto& ci : x) {
        if (++ci < box_.side()) break;
        ci = 0;
      }
    }
    return v;
  }

 private:
  PamParams q_;
  Box box_;
  std::vector<double> potential_;
};

/// L_p f on f's box (Dirichlet extension).
inline Field apply_generator(const PamParams& q, const Field& f) {
  Generator g(q, f.box());
  Field out(f.box());
  g.apply(f.values(), out.values());
  return out;
}

/// A spectral estimate together with the Ritz vector it came from.
struct EigenPair {
  LyapunovEstimate estimate;
  Field vector;
};

/// Default solver options for a configuration box.
inline EigenOptions eigen_options(const PamParams& q, double tol = 1e-9) {
  EigenOptions o;
  o.tol = tol;
  // spectrum of L_p lies in [-4d(p kappa + n rho), np]
  o.shift = 4.0 * q.d * (q.p * q.kappa + q.n * q.rho);
  return o;
}

inline EigenPair top_eigenpair(const PamParams& q, int radius, const EigenOptions& opts) {
  Generator g(q, configuration_box(q, radius));
  auto apply = [&g](std::span<const double> in, std::span<double> out) { g.apply(in, out); };
  EigenResult r;
  try {
    r = symmetric_top_eigenpair(apply, g.start_vector(), opts);
  } catch (const convergence_error& e) {
    throw convergence_error(std::string(e.what()) + " (R=" + std::to_string(radius) + ")",
                            e.best_value() / q.p, e.best_residual());
  }
  LyapunovEstimate est;
  est.params = q;
  est.kind = EstimateKind::spectral;
  est.value = r.value / q.p;
  est.residual = r.residual;
  est.error = r.residual / q.p;
  est.radius = radius;
  est.iterations = r.iterations;
  est.converged = r.converged;
  return {est, Field(g.box(), std::move(r.vector))};
}

/// (1/p) x top eigenvalue of L_p on the radius-R box: a lower bound of lambda_p^{(n)}.
inline LyapunovEstimate top_eigen(const PamParams& q, int radius, const EigenOptions& opts) {
  return top_eigenpair(q, radius, opts).estimate;
}

inline LyapunovEstimate top_eigen(const PamParams& q, int radius, double tol = 1e-9) {
  return top_eigen(q, radius, eigen_options(q, tol));
}

/// Box estimates for increasing radii. Each entry is a lower bound of
/// lambda, and so is the running maximum, which is what gets reported.
inline std::vector<LyapunovEstimate> lambda_spectral(const PamParams& q, std::span<const int> radii,
                                                     const EigenOptions& opts) {
  if (radii.empty()) throw parameter_error("radius list is empty");
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (radii[i] <= radii[i - 1]) throw parameter_error("radii must be strictly increasing");
  }
  std::vector<LyapunovEstimate> out;
  out.reserve(radii.size());
  for (int r : radii) {
    auto est = top_eigen(q, r, opts);
    if (!out.empty() && est.value < out.back().value) est.value = out.back().value;
    out.push_back(est);
  }
  if (out.size() >= 2) {
    out.back().radius_converged = out.back().value - out[out.size() - 2].value < opts.tol;
  }
  return out;
}

inline std::vector<LyapunovEstimate> lambda_spectral(const PamParams& q, std::span<const int> radii,
                                                     double tol = 1e-9) {
  return lambda_spectral(q, radii, eigen_options(q, tol));
}

// ---------------------------------------------------------------------------
// Tensor square of the p = 1 eigenvector

struct TensorGap {
  double lambda1 = 0.0;    ///< Rayleigh quotient of f for L_1
  double gap = 0.0;        ///< (rho/2) sum_{y, z~y} (sum_x f(x,y)(f(x,z)-f(x,y)))^2 / |f~|^2
  double rayleigh2 = 0.0;  ///< <f~, L_2 f~> / (2 |f~|^2)
  double residual = 0.0;   ///< eigen-residual of f
  /// |rayleigh2 - lambda1 - gap|; vanishes for an exact eigenvector
  double identity_error = 0.0;
};

/// Builds f~(x1,x2,y) = f(x1,y) f(x2,y) from the top eigenvector f of L_1 on
/// the radius-R box and evaluates the identity behind lambda_2 >= lambda_1 + gap.
inline TensorGap tensor_gap(const PamParams& q, int radius, const EigenOptions& opts) {
  q.validate();
  if (q.p != 1) throw parameter_error("tensor_gap needs p = 1");
  const auto pair = top_eigenpair(q, radius, opts);
  const Field& f = pair.vector;
  const Box& box = f.box();
  const std::size_t L = box.side();
  std::size_t bx = 1;  // sites of one x-walker block
  for (int i = 0; i < q.d; ++i) bx *= L;
  const std::size_t by = box.size() / bx;
  const int ydim = q.d * q.n;

  // |f~|^2 = sum_y (sum_x f(x,y)^2)^2 and the gap numerator
  double tilde_sq = 0.0;
  std::vector<double> mass(by, 0.0);
  for (std::size_t iy = 0; iy < by; ++iy) {
    double m = 0.0;
    for (std::size_t ix = 0; ix < bx; ++ix) m += f[ix + bx * iy] * f[ix + bx * iy];
    mass[iy] = m;
    tilde_sq += m * m;
  }
  if (!(tilde_sq > 0.0)) throw degenerate_error("tensor square of the eigenvector vanishes");
  double gap_sum = 0.0;
  std::size_t ystride = 1;
  for (int a = 0; a < ydim; ++a, ystride *= L) {
    for (std::size_t iy = 0; iy < by; ++iy) {
      const std::size_t c = (iy / ystride) % L;
      for (int sgn : {-1, 1}) {
        const bool inside = sgn < 0 ? c > 0 : c + 1 < L;
        double inner = -mass[iy];
        if (inside) {
          const std::size_t iz = sgn < 0 ? iy - ystride : iy + ystride;
          for (std::size_t ix = 0; ix < bx; ++ix) inner += f[ix + bx * iy] * f[ix + bx * iz];
        }
        gap_sum += inner * inner;
      }
    }
  }

  TensorGap out;
  out.residual = pair.estimate.residual;
  {
    Generator g1(q, box);
    std::vector<double> lf(box.size(), 0.0);
    g1.apply(f.values(), lf);
    out.lambda1 = dot(f.values(), lf) / dot(f.values(), f.values());
  }
  out.gap = 0.5 * q.rho * gap_sum / tilde_sq;

  PamParams q2 = q;
  q2.p = 2;
  Box big(q2.dim(), radius);
  std::vector<double> ft(big.size());
  for (std::size_t iy = 0; iy < by; ++iy) {
    for (std::size_t i2 = 0; i2 < bx; ++i2) {
      const double b = f[i2 + bx * iy];
      double* row = ft.data() + bx * (i2 + bx * iy);
      for (std::size_t i1 = 0; i1 < bx; ++i1) row[i1] = f[i1 + bx * iy] * b;
    }
  }
  Generator g2(q2, big);
  std::vector<double> lft(big.size(), 0.0);
  g2.apply(ft, lft);
  out.rayleigh2 = dot(ft, lft) / (2.0 * dot(ft, ft));
  out.identity_error = std::abs(out.rayleigh2 - out.lambda1 - out.gap);
  return out;
}

inline TensorGap tensor_gap(const PamParams& q, int radius, double tol = 1e-11) {
  return tensor_gap(q, radius, eigen_options(q, tol));
}

// ---------------------------------------------------------------------------
// Gagliardo-Nirenberg with C = 2

struct GnCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// d = 1: |f|_inf^2 <= 2 |f|_2 |grad f|_2.  d = 2: |f|_4^2 <= 2 |f|_2 |grad f|_2.
inline GnCheck check_gn(const Field& f, int d) {
  if (d != 1 && d != 2) throw domain_error("Gagliardo-Nirenberg check is defined for d = 1, 2");
  if (f.box().dim() != d) throw dimension_error("field dimension does not match d");
  const auto nm = norms(f);
  const auto axes = all_axes(d);
  const double grad = std::sqrt(grad_sq_norm(f, axes));
  GnCheck r;
  r.lhs = d == 1 ? nm.linf * nm.linf : nm.l4 * nm.l4;
  r.rhs = 2.0 * nm.l2 * grad;
  r.holds = r.lhs <= r.rhs;
  return r;
}

// ---------------------------------------------------------------------------
// The Green test function for the critical-kappa lower bound

struct F0Rayleigh {
  double value = 0.0;        ///< (interaction - rho grad_y) / grad_x
  double interaction = 0.0;  ///< sum I_p f0^2
  double grad_y = 0.0;       ///< |grad_y f0|^2
  double grad_x = 0.0;       ///< |grad_x f0|^2
  double g_zero = 0.0;       ///< G_d(0)
  double g_l2sq = 0.0;       ///< sum of G_d^2 over the cube
  double g_grad_sq = 0.0;    ///< |grad g|^2 of the truncated g
  double table_error = 0.0;  ///< quadrature error bound of the Green values
};

/// f0(x,y) = prod_j g(x_j)/|g|_2 prod_k delta_0(y_k) with g = G_d restricted
/// to {-R..R}^d, and its kappa-lower-bound functional.
inline F0Rayleigh f0_rayleigh(int d, int n, int p, double rho, int radius) {
  if (d <= 4) throw divergence_error("|G_d|_2 is infinite for d <= 4");
  if (n < 1 || p < 1) throw parameter_error("n and p must be >= 1");
  if (!(rho >= 0.0)) throw parameter_error("rho must be >= 0");
  GreenTable table(d, radius);
  std::vector<double> fact(static_cast<std::size_t>(d) + 1, 1.0);
  for (int i = 1; i <= d; ++i) fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i) - 1] * i;

  double l2 = 0.0;
  double grad = 0.0;
  std::vector<int> nb(static_cast<std::size_t>(d));
  table.for_each_tuple([&](std::span<const int> a) {
    // sites with this sorted |x| pattern: permutations times sign choices
    double mult = fact[static_cast<std::size_t>(d)];
    std::size_t run = 1;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      if (i < a.size() && a[i] == a[i - 1]) {
        ++run;
      } else {
        mult /= fact[run];
        run = 1;
      }
    }
    for (int v : a) {
      if (v != 0) mult *= 2.0;
    }
    const double g = table.sorted(a);
    double nsum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const int v = a[i];
      auto lookup = [&](int w) {
        std::copy(a.begin(), a.end(), nb.begin());
        nb[i] = w;
        std::sort(nb.begin(), nb.end());
        return table.sorted(nb);
      };
      if (v == 0) {
        if (radius >= 1) nsum += 2.0 * lookup(1);
      } else {
        nsum += lookup(v - 1);
        if (v + 1 <= radius) nsum += lookup(v + 1);
      }
    }
    l2 += mult * g * g;
    grad += mult * g * (2.0 * d * g - nsum);
  });

  F0Rayleigh out;
  std::vector<int> zero(static_cast<std::size_t>(d), 0);
  out.g_zero = table.sorted(zero);
  out.g_l2sq = l2;
  out.g_grad_sq = grad;
  out.table_error = table.abs_error();
  out.interaction = static_cast<double>(n) * p * out.g_zero * out.g_zero / l2;
  out.grad_y = 2.0 * d * n;
  out.grad_x = p * grad / l2;
  out.value = (out.interaction - rho * out.grad_y) / out.grad_x;
  return out;
}

}  // namespace pam

#endif  // PAM_SPECTRAL_HPP
