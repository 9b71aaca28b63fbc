#ifndef PAM_MONTECARLO_HPP
#define PAM_MONTECARLO_HPP

// Feynman-Kac Monte Carlo for the annealed moments
//
//   E[u(0,t)^p] = E[ exp( sum_{j,k} int_0^t delta_0(X_j(s) - Y_k(t-s)) ds ) ],
//
// with X_j rate-2d kappa walks and Y_k rate-2d rho walks, all started at 0.
// Paths are exact jump sequences, so the collision time is an exact sum of
// interval lengths. Also a catalyst-conditioned PDE integrator used as an
// independent oracle for u(0,t) given one realization of the catalysts.

#include <pam/error.hpp>
#include <pam/lattice.hpp>
#include <pam/rng.hpp>
#include <pam/spectral.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <thread>
#include <vector>

namespace pam {

/// Continuous-time simple random walk on Z^d, right-continuous.
struct JumpPath {
  int d = 1;
  double rate = 0.0;  ///< total jump rate 2d nu
  double horizon = 0.0;
  std::vector<int> start;
  std::vector<double> epochs;  ///< strictly increasing, in (0, horizon]
  std::vector<int> axes;       ///< 0-based
  std::vector<int> signs;      ///< +1 or -1
  /// positions[i*d .. i*d+d) is the site after i jumps (i = 0 is start)
  std::vector<int> positions;

  std::size_t jumps() const noexcept { return epochs.size(); }

  /// Number of jumps at or before time s.
  std::size_t jumps_until(double s) const {
    return static_cast<std::size_t>(std::upper_bound(epochs.begin(), epochs.end(), s) - epochs.begin());
  }

  std::span<const int> site_after(std::size_t k) const {
    return std::span<const int>(positions).subspan(k * static_cast<std::size_t>(d),
                                                   static_cast<std::size_t>(d));
  }

  /// X(s) for s in [0, horizon].
  std::span<const int> position(double s) const {
    if (s < 0.0 || s > horizon) throw horizon_error("time outside the path horizon");
    return site_after(jumps_until(s));
  }

  void push_jump(double epoch, int axis, int sign) {
    epochs.push_back(epoch);
    axes.push_back(axis);
    signs.push_back(sign);
    const std::size_t base = positions.size() - static_cast<std::size_t>(d);
    for (int i = 0; i < d; ++i) positions.push_back(positions[base + static_cast<std::size_t>(i)]);
    positions[positions.size() - static_cast<std::size_t>(d) + static_cast<std::size_t>(axis)] += sign;
  }
};

inline JumpPath constant_path(int d, double horizon, std::span<const int> start = {}) {
  JumpPath p;
  p.d = d;
  p.horizon = horizon;
  p.start.assign(static_cast<std::size_t>(d), 0);
  if (!start.empty()) {
    if (start.size() != static_cast<std::size_t>(d)) throw dimension_error("start site has wrong dimension");
    std::copy(start.begin(), start.end(), p.start.begin());
  }
  p.positions = p.start;
  return p;
}

/// Exponential holding times at rate 2d nu, direction uniform over the 2d choices.
inline JumpPath sample_path(int d, double nu, double t_end, Stream& rng, std::span<const int> start = {}) {
  if (d < 1) throw parameter_error("d must be >= 1");
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw parameter_error("nu must be finite and >= 0");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw parameter_error("t_end must be finite and >= 0");
  JumpPath p = constant_path(d, t_end, start);
  p.rate = 2.0 * d * nu;
  if (p.rate == 0.0) return p;
  double s = 0.0;
  while (true) {
    s += rng.exponential(p.rate);
    if (s > t_end) break;
    const auto r = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(d)));
    p.push_jump(s, r / 2, (r % 2) == 0 ? 1 : -1);
  }
  return p;
}

/// s -> Y(t - s) on [0, t]: starts at Y(t), ends at Y(0).
inline JumpPath reverse_path(const JumpPath& y, double t) {
  if (t > y.horizon) throw horizon_error("path horizon shorter than t");
  const std::size_t k = y.jumps_until(t);
  auto end = y.site_after(k);
  JumpPath r = constant_path(y.d, t, end);
  r.rate = y.rate;
  for (std::size_t i = k; i-- > 0;) {
    double e = t - y.epochs[i];
    if (e <= 0.0) continue;  // a jump exactly at t has zero-length effect
    r.push_jump(e, y.axes[i], -y.signs[i]);
  }
  return r;
}

namespace detail {

inline bool same_site(std::span<const int> a, std::span<const int> b) {
  return std::equal(a.begin(), a.end(), b.begin());
}

/// Lebesgue measure of {s in [0,t] : X(s) != Y(t - s)}, by merging the jump
/// epochs of X with the reversed epochs of Y.
inline double reversed_deficit(const JumpPath& x, const JumpPath& y, double t) {
  const std::size_t kx = x.jumps_until(t);
  const std::size_t ky = y.jumps_until(t);
  std::size_t ix = 0;  // jumps of X so far
  std::size_t iy = ky; // Y(t - s) index; decreases as s grows
  double s = 0.0;
  double deficit = 0.0;
  while (true) {
    const double nx = ix < kx ? x.epochs[ix] : t;
    const double ny = iy > 0 ? t - y.epochs[iy - 1] : t;
    const double next = std::min(nx, ny);
    if (!same_site(x.site_after(ix), y.site_after(iy))) deficit += next - s;
    if (next >= t) break;
    s = next;
    if (nx <= next && ix < kx) ++ix;
    if (ny <= next && iy > 0) --iy;
  }
  return deficit;
}

/// Lebesgue measure of {s in [0,t] : X(s) != Z(s)}.
inline double same_time_deficit(const JumpPath& x, const JumpPath& z, double t) {
  const std::size_t kx = x.jumps_until(t);
  const std::size_t kz = z.jumps_until(t);
  std::size_t ix = 0;
  std::size_t iz = 0;
  double s = 0.0;
  double deficit = 0.0;
  while (true) {
    const double nx = ix < kx ? x.epochs[ix] : t;
    const double nz = iz < kz ? z.epochs[iz] : t;
    const double next = std::min(nx, nz);
    if (!same_site(x.site_after(ix), z.site_after(iz))) deficit += next - s;
    if (next >= t) break;
    s = next;
    if (nx <= next && ix < kx) ++ix;
    if (nz <= next && iz < kz) ++iz;
  }
  return deficit;
}

inline void check_horizon(std::span<const JumpPath> paths, double t) {
  for (const auto& p : paths) {
    if (p.horizon < t) throw horizon_error("path horizon shorter than t");
  }
}

}  // namespace detail

/// sum_{j,k} int_0^t delta_0(X_j(s) - Y_k(t-s)) ds, exactly.
inline double collision_time(std::span<const JumpPath> xs, std::span<const JumpPath> ys, double t) {
  if (!(t >= 0.0)) throw parameter_error("t must be >= 0");
  detail::check_horizon(xs, t);
  detail::check_horizon(ys, t);
  double total = 0.0;
  for (const auto& x : xs) {
    for (const auto& y : ys) total += t - detail::reversed_deficit(x, y, t);
  }
  return total;
}

/// Which side of the time reversal the collision kernel is evaluated on.
enum class McForm {
  reversed_kernel,  ///< X_j(s) against Y_k(t - s), Y run forward
  reversed_catalyst ///< X_j(s) against Yhat_k(s), Yhat the reversed catalyst path
};

struct McEstimate {
  PamParams params;
  double t = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  double lambda_t = 0.0;  ///< estimate of Lambda_p(t), clamped to [0, n]
  double std_error = 0.0;   ///< delta-method standard error of lambda_t
  double ess = 0.0;       ///< (sum w)^2 / sum w^2
  /// false when ess < 30: the normal interval is not trustworthy
  bool ci_available = false;
};

struct McOptions {
  unsigned workers = 1;
  McForm form = McForm::reversed_kernel;
};

namespace detail {

/// sum over pairs of the time X_j and Y_k are apart, for sample `index`.
inline double sample_deficit(const PamParams& q, double t, std::uint64_t seed, std::uint64_t index,
                             McForm form) {
  Stream rng(seed, index);
  std::vector<JumpPath> xs;
  std::vector<JumpPath> ys;
  xs.reserve(static_cast<std::size_t>(q.p));
  ys.reserve(static_cast<std::size_t>(q.n));
  for (int j = 0; j < q.p; ++j) xs.push_back(sample_path(q.d, q.kappa, t, rng));
  for (int k = 0; k < q.n; ++k) ys.push_back(sample_path(q.d, q.rho, t, rng));
  double deficit = 0.0;
  for (const auto& y : ys) {
    if (form == McForm::reversed_kernel) {
      for (const auto& x : xs) deficit += reversed_deficit(x, y, t);
    } else {
      const auto yhat = reverse_path(y, t);
      for (const auto& x : xs) deficit += same_time_deficit(x, yhat, t);
    }
  }
  return deficit;
}

/// Runs fn(i) for i in [0, count) on `workers` threads, contiguous blocks.
template <class Fn>
void parallel_for(std::uint64_t count, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::uint64_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::uint64_t lo = w * chunk;
    const std::uint64_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::uint64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

/// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double v) {
    const double s = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      c += (sum - s) + v;
    } else {
      c += (v - s) + sum;
    }
    sum = s;
  }
  double value() const { return sum + c; }
};

}  // namespace detail

/// Lambda_p(t) = (1/(p t)) log E[exp(collision time)].
///
/// With D the separation time (n p t minus the collision time) the estimate
/// is n - (D_min - log mean e^{-(D - D_min)}) / (p t), evaluated in log space.
/// Per-sample values are computed independently and reduced in index order,
/// so the result does not depend on the number of workers.
inline McEstimate lambda_mc(const PamParams& q, double t, std::uint64_t samples, std::uint64_t seed,
                            const McOptions& opts = {}) {
  q.validate();
  if (!(t > 0.0) || !std::isfinite(t)) throw parameter_error("t must be finite and > 0");
  if (samples < 2) throw parameter_error("lambda_mc needs at least two samples");
  std::vector<double> deficit(samples);
  detail::parallel_for(samples, opts.workers, [&](std::uint64_t i) {
    deficit[i] = detail::sample_deficit(q, t, seed, i, opts.form);
  });
  const double dmin = *std::min_element(deficit.begin(), deficit.end());
  detail::CompensatedSum sw;
  detail::CompensatedSum sw2;
  for (double dv : deficit) {
    const double w = std::exp(-(dv - dmin));
    sw.add(w);
    sw2.add(w * w);
  }
  const double nn = static_cast<double>(samples);
  const double mean = sw.value() / nn;
  const double var = std::max(0.0, (sw2.value() - nn * mean * mean) / (nn - 1.0));
  const double pt = q.p * t;

  McEstimate out;
  out.params = q;
  out.t = t;
  out.samples = samples;
  out.seed = seed;
  out.lambda_t = std::clamp(q.n - (dmin - std::log(mean)) / pt, 0.0, static_cast<double>(q.n));
  out.std_error = std::sqrt(var / nn) / mean / pt;
  out.ess = sw.value() * sw.value() / sw2.value();
  out.ci_available = out.ess >= 30.0;
  return out;
}

/// Mean and standard error of exp(int_0^t xi(X(s), t - s) ds) over X-draws,
/// xi being generated by the fixed catalyst paths.
struct ConditionalMoment {
  double mean = 0.0;
  double std_error = 0.0;
};

inline ConditionalMoment feynman_kac_conditional(int d, double kappa, double t,
                                                 std::span<const JumpPath> catalysts,
                                                 std::uint64_t samples, std::uint64_t seed) {
  if (samples < 2) throw parameter_error("need at least two samples");
  detail::check_horizon(catalysts, t);
  detail::CompensatedSum s1;
  detail::CompensatedSum s2;
  for (std::uint64_t i = 0; i < samples; ++i) {
    Stream rng(seed, i);
    const JumpPath x = sample_path(d, kappa, t, rng);
    const std::span<const JumpPath> one(&x, 1);
    const double w = std::exp(collision_time(one, catalysts, t));
    s1.add(w);
    s2.add(w * w);
  }
  const double nn = static_cast<double>(samples);
  const double mean = s1.value() / nn;
  const double var = std::max(0.0, (s2.value() - nn * mean * mean) / (nn - 1.0));
  return {mean, std::sqrt(var / nn)};
}

// ---------------------------------------------------------------------------
// Catalyst-conditioned PDE oracle

struct PdeOptions {
  int min_substeps = 1;     ///< substeps per constant-potential interval, at least
  int krylov_dim = 30;      ///< Lanczos basis size for exp(hA) v
  double tol = 1e-12;       ///< relative local error per substep
};

struct PdeResult {
  double u0 = 0.0;             ///< u(0, t)
  double boundary_leak = 0.0;  ///< 1 - v(0,t) for the potential-free problem
  std::size_t substeps = 0;
};

namespace detail {

/// v <- exp(h A) v for symmetric A by a Lanczos approximation; returns the
/// standard a-posteriori error estimate of the step.
template <class Apply>
double krylov_expv(Apply& apply, double h, std::vector<double>& v, int mmax) {
  const std::size_t n = v.size();
  const double beta0 = std::sqrt(dot(v, v));
  if (beta0 == 0.0) return 0.0;
  const int m_cap = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(mmax), n));
  std::vector<std::vector<double>> basis;
  basis.reserve(static_cast<std::size_t>(m_cap) + 1);
  basis.emplace_back(v);
  for (double& x : basis[0]) x /= beta0;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> w(n);
  double last_beta = 0.0;
  for (int j = 0; j < m_cap; ++j) {
    std::fill(w.begin(), w.end(), 0.0);
    apply(std::span<const double>(basis[static_cast<std::size_t>(j)]), std::span<double>(w));
    alpha.push_back(dot(w, basis[static_cast<std::size_t>(j)]));
    // full reorthogonalization, twice: the basis is short
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        const double c = dot(w, b);
        for (std::size_t i = 0; i < n; ++i) w[i] -= c * b[i];
      }
    }
    last_beta = std::sqrt(dot(w, w));
    if (j + 1 == m_cap || last_beta <= 1e-14 * beta0) break;
    beta.push_back(last_beta);
    std::vector<double> next(w);
    for (double& x : next) x /= last_beta;
    basis.push_back(std::move(next));
  }
  const auto m = static_cast<Eigen::Index>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    T(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < m) {
      T(i, i + 1) = beta[static_cast<std::size_t>(i)];
      T(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  const Eigen::VectorXd ev = (h * es.eigenvalues().array()).exp();
  const Eigen::VectorXd e1 = es.eigenvectors().row(0).transpose();
  const Eigen::VectorXd c = es.eigenvectors() * ev.cwiseProduct(e1);
  std::fill(v.begin(), v.end(), 0.0);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double ck = beta0 * c(k);
    const auto& b = basis[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < n; ++i) v[i] += ck * b[i];
  }
  return beta0 * h * last_beta * std::abs(c(m - 1));
}

/// Integrates v' = A v over [0, span], splitting into substeps as needed.
template <class Apply>
std::size_t integrate_constant(Apply& apply, double span, std::vector<double>& v, const PdeOptions& o,
                               double total_time) {
  if (span <= 0.0) return 0;
  std::size_t steps = 0;
  double h = span / std::max(1, o.min_substeps);
  double done = 0.0;
  while (done < span) {
    h = std::min(h, span - done);
    std::vector<double> trial = v;
    const double err = krylov_expv(apply, h, trial, o.krylov_dim);
    const double scale = std::sqrt(dot(trial, trial));
    if (err <= o.tol * std::max(scale, 1e-300)) {
      v.swap(trial);
      done += h;
      ++steps;
      h *= 1.5;
    } else {
      h *= 0.5;
      if (h < 1e-14 * std::max(total_time, 1.0)) {
        throw step_underflow_error("exponential integrator step underflow", v[0], err);
      }
    }
  }
  return steps;
}

}  // namespace detail

/// u(0,t) for du/ds = kappa Delta u + xi(., s) u on {-R..R}^d (Dirichlet),
/// u(., 0) = 1, xi(x, s) = sum_k delta_x(Y_k(s)).
inline PdeResult pde_moment_oracle(const PamParams& q, int radius, double t,
                                   std::span<const JumpPath> catalysts, const PdeOptions& opts = {}) {
  q.validate();
  if (!(t >= 0.0)) throw parameter_error("t must be >= 0");
  if (catalysts.size() != static_cast<std::size_t>(q.n)) {
    throw parameter_error("expected n catalyst paths");
  }
  detail::check_horizon(catalysts, t);
  for (const auto& y : catalysts) {
    if (y.d != q.d) throw dimension_error("catalyst dimension != d");
  }
  const Box box(q.d, radius);
  std::vector<double> xi(box.size(), 0.0);
  auto apply = [&](std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] += xi[i] * in[i];
    if (q.kappa != 0.0) {
      for (int a = 0; a < q.d; ++a) add_axis_laplacian(box, in, out, a, q.kappa);
    }
  };
  // all potential-change epochs in (0, t)
  std::vector<double> cuts;
  for (const auto& y : catalysts) {
    for (double e : y.epochs) {
      if (e < t) cuts.push_back(e);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(t);

  PdeResult out;
  std::vector<double> u(box.size(), 1.0);
  double s = 0.0;
  for (double next : cuts) {
    std::fill(xi.begin(), xi.end(), 0.0);
    for (const auto& y : catalysts) {
      const auto site = y.position(s);
      if (box.contains(site)) xi[box.index(site)] += 1.0;
    }
    out.substeps += detail::integrate_constant(apply, next - s, u, opts, t);
    s = next;
  }
  out.u0 = u[box.origin()];

  std::fill(xi.begin(), xi.end(), 0.0);
  std::vector<double> v(box.size(), 1.0);
  detail::integrate_constant(apply, t, v, opts, t);
  out.boundary_leak = 1.0 - v[box.origin()];
  return out;
}

}  // namespace pam

#endif  // PAM_MONTECARLO_HPP
