#ifndef PAM_PHASE_HPP
#define PAM_PHASE_HPP

// Bounds on the critical diffusion constants kappa_p^{(n)}(rho) (the kappa at
// which lambda_p hits zero), intermittency classification built only on
// those bounds, and grid sweeps that tabulate bounds next to box estimates.

#include <pam/error.hpp>
#include <pam/greens.hpp>
#include <pam/io.hpp>
#include <pam/lattice.hpp>
#include <pam/montecarlo.hpp>
#include <pam/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pam {

struct KappaBounds {
  int d = 0;
  int n = 0;
  int p = 0;
  double rho = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double lower_error = 0.0;
  double upper_error = 0.0;
  /// the pieces of `lower`; `green_bound` is only present for d >= 5
  double mu_bound = 0.0;        ///< n/(4d) mu(rho/p)
  double inverse_bound = 0.0;   ///< n mu^{-1}(4 d rho / p)
  std::optional<double> green_bound;  ///< (n G_d(0) - rho n / (p alpha_d))_+

  bool infinite() const noexcept { return std::isinf(upper); }
};

struct BoundOptions {
  double tol = 1e-10;
  /// d <= 2: return infinite bounds instead of throwing
  bool allow_infinite = false;
  /// include the Green-function bound (d >= 5)
  bool use_green_bound = true;
};

/// lower <= kappa_p^{(n)}(rho) <= upper.
inline KappaBounds kappa_bounds(int d, int n, int p, double rho, const BoundOptions& o = {}) {
  PamParams{d, n, p, 0.0, rho}.validate();
  KappaBounds b;
  b.d = d;
  b.n = n;
  b.p = p;
  b.rho = rho;
  if (d <= 2) {
    if (!o.allow_infinite) throw domain_error("critical kappa is infinite for d <= 2");
    b.lower = b.upper = std::numeric_limits<double>::infinity();
    b.mu_bound = b.inverse_bound = b.lower;
    return b;
  }
  const auto g = green_zero(d, std::min(o.tol, 1e-10));
  const double nd = n;
  b.mu_bound = nd / (4.0 * d) * mu(d, rho / p, o.tol);
  b.inverse_bound = nd * mu_inverse(d, 4.0 * d * rho / p, o.tol);
  // mu and mu^{-1} are bisection roots; their own accuracy dominates
  double err1 = nd / (4.0 * d) * o.tol;
  double err2 = nd * (o.tol + g.abs_error);
  b.lower = b.mu_bound;
  b.lower_error = err1;
  if (b.inverse_bound > b.lower) {
    b.lower = b.inverse_bound;
    b.lower_error = err2;
  }
  if (d >= 5 && o.use_green_bound) {
    const auto a = alpha(d, std::min(o.tol, 1e-10));
    const double raw = nd * g.value - rho * nd / (p * a.value);
    const double gb = std::max(0.0, raw);
    b.green_bound = gb;
    if (gb > b.lower) {
      b.lower = gb;
      b.lower_error = nd * g.abs_error + rho * nd / p * a.abs_error / (a.value * a.value);
    }
  }
  b.upper = std::max(0.0, nd * g.value - nd * rho / p);
  b.upper_error = b.upper > 0.0 ? nd * g.abs_error : 0.0;
  return b;
}

enum class RegimeLabel { not_intermittent, partial, certified_q, zero_exponent, unresolved };

struct Regime {
  RegimeLabel label = RegimeLabel::unresolved;
  int q = 0;  ///< certified_q only
  std::string justification;

  std::string name() const {
    switch (label) {
      case RegimeLabel::not_intermittent: return "NotIntermittent";
      case RegimeLabel::partial: return "PartialIntermittent";
      case RegimeLabel::certified_q: return "CertifiedQIntermittent(" + std::to_string(q) + ")";
      case RegimeLabel::zero_exponent: return "ZeroExponent";
      case RegimeLabel::unresolved: return "Unresolved";
    }
    return "?";
  }
};

struct ClassifyOptions {
  double tol = 1e-10;
  int q_max = 64;
};

/// Regime of (d, n, kappa, rho) using only the critical-kappa bounds.
/// A certified q needs kappa_{q-1} <= upper(q-1) <= kappa < lower(q) <= kappa_q,
/// i.e. lambda_{q-1} = 0 < lambda_q.
inline Regime classify(int d, int n, double kappa, double rho, const ClassifyOptions& o = {}) {
  PamParams{d, n, 1, kappa, rho}.validate();
  Regime r;
  if (d <= 2) {
    r.label = RegimeLabel::partial;
    r.justification =
        "recurrent dimension: the critical kappa is infinite, so lambda_p > 0 for every p and the "
        "system is p-intermittent for some p; full intermittency is conjectured, not asserted";
    return r;
  }
  const auto g = green_zero(d, std::min(o.tol, 1e-10));
  const double ng = n * g.value;
  if (kappa >= ng + n * g.abs_error) {
    r.label = RegimeLabel::not_intermittent;
    r.justification = "kappa >= n G_d(0): every lambda_p vanishes, so no moment grows faster than another";
    return r;
  }
  const double a = d >= 5 ? alpha(d, std::min(o.tol, 1e-10)).value : 0.0;
  for (int q = 2; q <= o.q_max; ++q) {
    BoundOptions bo;
    bo.tol = o.tol;
    const auto prev = kappa_bounds(d, n, q - 1, rho, bo);
    if (prev.upper + prev.upper_error > kappa) break;  // upper(q-1) only grows with q
    bo.use_green_bound = d >= 5 && a > static_cast<double>(q - 1) / q;
    const auto cur = kappa_bounds(d, n, q, rho, bo);
    if (kappa < cur.lower - cur.lower_error) {
      r.label = RegimeLabel::certified_q;
      r.q = q;
      r.justification = "lambda_" + std::to_string(q - 1) +
                        " = 0 from the upper critical-kappa bound (kappa >= " +
                        io::format_double(prev.upper) + "); lambda_" + std::to_string(q) +
                        " > 0 from the lower bound (kappa < " + io::format_double(cur.lower) + ")";
      if (bo.use_green_bound && cur.green_bound && *cur.green_bound == cur.lower) {
        r.justification += " via the Green test function, valid since alpha_d > (q-1)/q";
      }
      return r;
    }
  }
  r.label = RegimeLabel::partial;
  r.justification =
      "kappa < n G_d(0): lambda_p > 0 for large p, so the system is p-intermittent for some p; no "
      "certified window contains kappa and finer structure is conjectured, not asserted";
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepSpec {
  int d = 3;
  int n = 1;
  std::vector<int> ps{1};
  std::vector<double> kappas{0.0};
  std::vector<double> rhos{0.0};
  bool compute_lambda = true;
  int radius = 4;                         ///< requested; reduced to fit max_sites
  std::size_t max_sites = 2'000'000;
  double tol = 1e-9;
  unsigned workers = 1;
};

struct SweepRow {
  PamParams params;
  double lambda_est = std::numeric_limits<double>::quiet_NaN();
  std::string lambda_kind;  ///< "spectral(R=..)", "none" or "failed: ..."
  int radius = -1;
  double residual = 0.0;
  double lambda_upper = std::numeric_limits<double>::quiet_NaN();  ///< n min(mu(kappa/n), mu(rho/p))
  double kappa_lower = 0.0;
  double kappa_upper = 0.0;
  Regime regime;
  bool failed = false;
};

inline const char* phase_csv_header() {
  return "d,n,p,kappa,rho,lambda_est,lambda_kind,kappa_lower,kappa_upper,regime,justification";
}

inline std::string phase_csv_line(const SweepRow& r) {
  using io::csv_field;
  using io::format_double;
  std::string s;
  s += std::to_string(r.params.d) + ',' + std::to_string(r.params.n) + ',' + std::to_string(r.params.p) + ',';
  s += format_double(r.params.kappa) + ',' + format_double(r.params.rho) + ',';
  s += format_double(r.lambda_est) + ',' + csv_field(r.lambda_kind) + ',';
  s += format_double(r.kappa_lower) + ',' + format_double(r.kappa_upper) + ',';
  s += csv_field(r.regime.name()) + ',' + csv_field(r.regime.justification);
  return s;
}

/// Largest radius <= requested whose configuration box fits `max_sites`.
inline int fitting_radius(int dim, int requested, std::size_t max_sites) {
  for (int r = requested; r > 0; --r) {
    double sites = std::pow(2.0 * r + 1.0, dim);
    if (sites <= static_cast<double>(max_sites)) return r;
  }
  return 0;
}

/// Grid points in output order: p outermost, then rho, then kappa.
inline std::vector<PamParams> sweep_grid(const SweepSpec& s) {
  if (s.ps.empty() || s.kappas.empty() || s.rhos.empty()) throw parameter_error("empty sweep grid");
  auto sorted = [](const auto& v) { return std::is_sorted(v.begin(), v.end()); };
  if (!sorted(s.ps) || !sorted(s.kappas) || !sorted(s.rhos)) throw parameter_error("sweep grid must be sorted");
  std::vector<PamParams> out;
  for (int p : s.ps) {
    for (double rho : s.rhos) {
      for (double kappa : s.kappas) {
        PamParams q{s.d, s.n, p, kappa, rho};
        q.validate();
        out.push_back(q);
      }
    }
  }
  return out;
}

inline SweepRow sweep_row(const SweepSpec& s, const PamParams& q) {
  SweepRow row;
  row.params = q;
  try {
    if (q.d <= 2) {
      row.kappa_lower = row.kappa_upper = std::numeric_limits<double>::infinity();
    } else {
      const auto b = kappa_bounds(q.d, q.n, q.p, q.rho, BoundOptions{});
      row.kappa_lower = b.lower;
      row.kappa_upper = b.upper;
    }
    row.regime = classify(q.d, q.n, q.kappa, q.rho);
    row.lambda_upper = lambda_upper_bound(q);
    if (s.compute_lambda) {
      const int r = fitting_radius(q.dim(), s.radius, s.max_sites);
      const auto est = top_eigen(q, r, s.tol);
      row.lambda_est = est.value;
      row.radius = r;
      row.residual = est.residual;
      row.lambda_kind = "spectral(R=" + std::to_string(r) + ")";
    } else {
      row.lambda_kind = "none";
    }
  } catch (const error& e) {
    row.failed = true;
    row.lambda_kind = std::string("failed: ") + e.what();
    row.regime.label = RegimeLabel::unresolved;
    row.regime.justification = "row failed; see lambda_kind";
  }
  return row;
}

/// Evaluates every grid point. Rows are computed `workers` at a time and
/// returned in grid order; a failing row is marked, not fatal.
inline std::vector<SweepRow> sweep(const SweepSpec& s) {
  const auto grid = sweep_grid(s);
  std::vector<SweepRow> rows(grid.size());
  detail::parallel_for(grid.size(), s.workers, [&](std::uint64_t i) { rows[i] = sweep_row(s, grid[i]); });
  return rows;
}

/// Like sweep, but appends rows to a CSV file as they complete and keeps a
/// cursor file (`<csv>.cursor`, the number of rows written) so an interrupted
/// run resumes where it stopped. Returns the rows computed in this call.
inline std::vector<SweepRow> sweep_to_csv(const SweepSpec& s, const std::filesystem::path& csv) {
  const auto grid = sweep_grid(s);
  const std::filesystem::path cursor_path = csv.string() + ".cursor";
  std::size_t done = 0;
  if (std::filesystem::exists(cursor_path) && std::filesystem::exists(csv)) {
    std::ifstream in(cursor_path);
    in >> done;
    if (!in || done > grid.size()) done = 0;
  }
  if (done == 0) {
    std::ofstream out(csv, std::ios::trunc);
    if (!out) throw parameter_error("cannot write " + csv.string());
    out << phase_csv_header() << '\n';
  }
  std::vector<SweepRow> computed;
  const std::size_t batch = std::max(1u, s.workers);
  while (done < grid.size()) {
    const std::size_t hi = std::min(grid.size(), done + batch);
    std::vector<SweepRow> rows(hi - done);
    detail::parallel_for(rows.size(), s.workers,
                         [&](std::uint64_t i) { rows[i] = sweep_row(s, grid[done + i]); });
    {
      std::ofstream out(csv, std::ios::app);
      if (!out) throw parameter_error("cannot write " + csv.string());
      for (const auto& r : rows) out << phase_csv_line(r) << '\n';
    }
    done = hi;
    {
      std::ofstream cur(cursor_path, std::ios::trunc);
      cur << done << '\n';
    }
    for (auto& r : rows) computed.push_back(std::move(r));
  }
  return computed;
}

}  // namespace pam

#endif  // PAM_PHASE_HPP
