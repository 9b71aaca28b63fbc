#ifndef PAM_LATTICE_HPP
#define PAM_LATTICE_HPP

// Finite centered cubes {-R,...,R}^m of Z^m, dense fields on them and the
// nearest-neighbour difference operators with zero (Dirichlet) extension.
//
// Axes are 0-based throughout the C++ interface. Sites are indexed
// lexicographically with coordinate 0 varying fastest.

#include <pam/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pam {

class Box {
 public:
  /// Dense storage ceiling; larger boxes are rejected.
  static constexpr std::size_t max_sites = 10'000'000;

  Box(int dim, int radius) : dim_(dim), radius_(radius) {
    if (dim < 1) throw parameter_error("box dimension must be >= 1");
    if (radius < 0) throw parameter_error("box radius must be >= 0");
    side_ = 2 * static_cast<std::size_t>(radius) + 1;
    strides_.resize(static_cast<std::size_t>(dim));
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) {
      strides_[static_cast<std::size_t>(a)] = n;
      if (n > max_sites / side_) {
        throw capacity_error("box (2R+1)^m = " + std::to_string(side_) + "^" +
                             std::to_string(dim) + " exceeds the dense limit of " +
                             std::to_string(max_sites) + " sites");
      }
      n *= side_;
    }
    size_ = n;
  }

  int dim() const noexcept { return dim_; }
  int radius() const noexcept { return radius_; }
  std::size_t side() const noexcept { return side_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t stride(int axis) const { return strides_.at(static_cast<std::size_t>(axis)); }

  bool contains(std::span<const int> x) const noexcept {
    if (x.size() != static_cast<std::size_t>(dim_)) return false;
    for (int c : x) {
      if (c < -radius_ || c > radius_) return false;
    }
    return true;
  }

  std::size_t index(std::span<const int> x) const {
    if (!contains(x)) throw parameter_error("site outside box");
    std::size_t idx = 0;
    for (std::size_t a = 0; a < x.size(); ++a) {
      idx += static_cast<std::size_t>(x[a] + radius_) * strides_[a];
    }
    return idx;
  }

  void site(std::size_t idx, std::span<int> out) const {
    for (std::size_t a = 0; a < strides_.size(); ++a) {
      out[a] = static_cast<int>(idx % side_) - radius_;
      idx /= side_;
    }
  }

  std::vector<int> site(std::size_t idx) const {
    std::vector<int> x(static_cast<std::size_t>(dim_));
    site(idx, x);
    return x;
  }

  std::size_t origin() const noexcept {
    std::size_t idx = 0;
    for (auto s : strides_) idx += static_cast<std::size_t>(radius_) * s;
    return idx;
  }

  friend bool operator==(const Box& a, const Box& b) noexcept {
    return a.dim_ == b.dim_ && a.radius_ == b.radius_;
  }

 private:
  int dim_;
  int radius_;
  std::size_t side_ = 1;
  std::size_t size_ = 1;
  std::vector<std::size_t> strides_;
};

/// A real function on the sites of a Box.
class Field {
 public:
  explicit Field(Box box) : box_(std::move(box)), values_(box_.size(), 0.0) {}
  Field(Box box, std::vector<double> values) : box_(std::move(box)), values_(std::move(values)) {
    if (values_.size() != box_.size()) throw dimension_error("field size does not match box");
  }

  static Field delta(const Box& box) {
    Field f(box);
    f.values_[box.origin()] = 1.0;
    return f;
  }

  const Box& box() const noexcept { return box_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(std::span<const int> x) const { return values_[box_.index(x)]; }

 private:
  Box box_;
  std::vector<double> values_;
};

/// Every axis of an m-dimensional box.
inline std::vector<int> all_axes(int m) {
  std::vector<int> axes(static_cast<std::size_t>(m));
  std::iota(axes.begin(), axes.end(), 0);
  return axes;
}

/// out += scale * Delta_axis f, neighbours outside the box read as 0.
inline void add_axis_laplacian(const Box& box, std::span<const double> f, std::span<double> out,
                               int axis, double scale) {
  const std::size_t s = box.stride(axis);
  const std::size_t L = box.side();
  const std::size_t block = s * L;
  const std::size_t n = box.size();
  for (std::size_t b = 0; b < n; b += block) {
    for (std::size_t c = 0; c < L; ++c) {
      const std::size_t base = b + c * s;
      const bool lo = c > 0;
      const bool hi = c + 1 < L;
      for (std::size_t i = 0; i < s; ++i) {
        const std::size_t idx = base + i;
        double v = -2.0 * f[idx];
        if (lo) v += f[idx - s];
        if (hi) v += f[idx + s];
        out[idx] += scale * v;
      }
    }
  }
}

inline void check_axes(const Box& box, std::span<const int> axes) {
  if (axes.empty()) throw parameter_error("axis set must be nonempty");
  for (int a : axes) {
    if (a < 0 || a >= box.dim()) throw dimension_error("axis out of range");
  }
}

/// (Delta_A f)(x) = sum_{i in A} sum_{+-} [f(x +- e_i) - f(x)], zero extension.
inline Field axis_laplacian(const Field& f, std::span<const int> axes) {
  check_axes(f.box(), axes);
  Field out(f.box());
  for (int a : axes) add_axis_laplacian(f.box(), f.values(), out.values(), a, 1.0);
  return out;
}

/// sum_x sum_{i in A} (f(x + e_i) - f(x))^2 over all of Z^m, zero extension.
inline double grad_sq_norm(const Box& box, std::span<const double> f, std::span<const int> axes) {
  check_axes(box, axes);
  const std::size_t L = box.side();
  const std::size_t n = box.size();
  double acc = 0.0;
  for (int a : axes) {
    const std::size_t s = box.stride(a);
    const std::size_t block = s * L;
    for (std::size_t b = 0; b < n; b += block) {
      for (std::size_t c = 0; c < L; ++c) {
        const std::size_t base = b + c * s;
        for (std::size_t i = 0; i < s; ++i) {
          const std::size_t idx = base + i;
          const double here = f[idx];
          const double up = c + 1 < L ? f[idx + s] : 0.0;
          acc += (up - here) * (up - here);
          // the bond entering the box from below
          if (c == 0) acc += here * here;
        }
      }
    }
  }
  return acc;
}

inline double grad_sq_norm(const Field& f, std::span<const int> axes) {
  return grad_sq_norm(f.box(), f.values(), axes);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double dot(const Field& f, const Field& g) {
  if (!(f.box() == g.box())) throw dimension_error("fields live on different boxes");
  return dot(f.values(), g.values());
}

struct Norms {
  double l2 = 0.0;
  double l4 = 0.0;
  double linf = 0.0;
};

inline Norms norms(std::span<const double> f) {
  double s2 = 0.0;
  double s4 = 0.0;
  double mx = 0.0;
  for (double v : f) {
    const double v2 = v * v;
    s2 += v2;
    s4 += v2 * v2;
    mx = std::max(mx, std::abs(v));
  }
  return {std::sqrt(s2), std::sqrt(std::sqrt(s4)), mx};
}

inline Norms norms(const Field& f) { return norms(f.values()); }

}  // namespace pam

#endif  // PAM_LATTICE_HPP
