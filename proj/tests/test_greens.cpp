#include <pam/greens.hpp>

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace {

// Watson's closed form for the simple cubic lattice: expected visits to the
// origin of the discrete-time walk. The rate-6 walk spends 1/6 per visit.
double watson_cubic() {
  const double pi = std::numbers::pi;
  return std::sqrt(6.0) / (32.0 * pi * pi * pi) * std::tgamma(1.0 / 24.0) * std::tgamma(5.0 / 24.0) *
         std::tgamma(7.0 / 24.0) * std::tgamma(11.0 / 24.0);
}

// Return probability constant of the 4-d hypercubic walk (tabulated).
constexpr double visits_d4 = 1.2394671218;

// Independent scipy prototypes (time integral with scipy.special.i0e and quad).
constexpr double g0_d5 = 0.115630812484023;
constexpr double l2_d5 = 0.0193494144038235;
constexpr double alpha_d5 = 0.5975933435;

TEST(HeatKernel, SeriesOracle) {
  // e^{-2t} I_0(2t) by its power series
  auto series = [](double t) {
    double term = 1.0;
    double s = 1.0;
    for (int k = 1; k < 40; ++k) {
      term *= t * t / (static_cast<double>(k) * k);
      s += term;
    }
    return s * std::exp(-2.0 * t);
  };
  EXPECT_NEAR(pam::heat_kernel_diag(1, 1.0, 1.0), series(1.0), 1e-15);
  EXPECT_NEAR(pam::heat_kernel_diag(3, 1.0, 2.0), std::pow(series(2.0), 3), 1e-15);
  EXPECT_NEAR(pam::heat_kernel_diag(2, 0.5, 4.0), std::pow(series(2.0), 2), 1e-15);
  EXPECT_EQ(pam::heat_kernel_diag(4, 1.0, 0.0), 1.0);
  EXPECT_EQ(pam::heat_kernel_diag(4, 0.0, 7.0), 1.0);
}

TEST(DiagResolvent, OneDimensionalClosedForm) {
  for (double a : {0.01, 0.3, 1.0, 4.0, 50.0}) {
    EXPECT_NEAR(pam::diag_resolvent(1, a).value, 1.0 / std::sqrt(a * (a + 4.0)), 1e-12) << a;
  }
  EXPECT_TRUE(std::isinf(pam::diag_resolvent(2, 0.0).value));
  EXPECT_THROW(pam::diag_resolvent(1, -1.0), pam::parameter_error);
}

TEST(GreenZero, DivergentBelowThree) {
  for (int d : {1, 2}) {
    const auto g = pam::green_zero(d);
    EXPECT_TRUE(g.divergent());
    EXPECT_TRUE(std::isinf(g.value));
  }
  for (int d : {1, 2, 3, 4}) EXPECT_TRUE(pam::green_l2sq(d).divergent());
}

TEST(GreenZero, WatsonCubic) {
  const auto g = pam::green_zero(3, 1e-12);
  EXPECT_NEAR(g.value, watson_cubic() / 6.0, 1e-12);
  EXPECT_LE(g.abs_error, 1e-12);
}

TEST(GreenZero, HypercubicFour) { EXPECT_NEAR(pam::green_zero(4).value, visits_d4 / 8.0, 1e-10); }

TEST(GreenZero, FrozenFiveDimensional) {
  EXPECT_NEAR(pam::green_zero(5, 1e-12).value, g0_d5, 1e-13);
  EXPECT_NEAR(pam::green_l2sq(5, 1e-12).value, l2_d5, 1e-13);
}

TEST(GreenZero, FiniteAndDecreasingInDimension) {
  double prev = std::numeric_limits<double>::infinity();
  for (int d = 3; d <= 30; ++d) {
    const auto g = pam::green_zero(d);
    EXPECT_GT(g.value, 0.0);
    EXPECT_LT(g.value, prev) << d;
    // one visit of mean length 1/(2d) is a lower bound
    EXPECT_GT(g.value, 1.0 / (2.0 * d));
    prev = g.value;
  }
}

TEST(GreenZero, ResolutionsAgree) {
  for (int d : {3, 5, 8}) {
    EXPECT_NEAR(pam::green_zero(d, 1e-8).value, pam::green_zero(d, 1e-12).value, 1e-6);
  }
}

TEST(GreenZero, FourierCrossCheck) {
  for (int d : {3, 4, 5}) {
    const auto a = pam::green_zero(d, 1e-12);
    const auto b = pam::green_zero_fourier(d);
    EXPECT_NEAR(a.value, b.value, std::max(1e-6, 10.0 * (a.abs_error + b.abs_error))) << d;
    EXPECT_LT(b.abs_error, 1e-6);
  }
  for (int d : {5}) {
    const auto a = pam::green_l2sq(d, 1e-12);
    const auto b = pam::green_l2sq_fourier(d);
    EXPECT_NEAR(a.value, b.value, std::max(1e-6, 10.0 * (a.abs_error + b.abs_error))) << d;
  }
}

TEST(GreenZero, MonteCarloWithinFiveSigma) {
  const auto mc = pam::green_zero_monte_carlo(6, 200000, 7);
  const double exact = pam::green_zero(6).value;
  EXPECT_LT(std::abs(mc.value - exact), 5.0 * mc.abs_error);
  EXPECT_THROW(pam::green_zero_monte_carlo(4, 100, 1), pam::domain_error);
}

TEST(GreenL2, DominatesSquareAtOrigin) {
  for (int d = 5; d <= 20; ++d) {
    const double g0 = pam::green_zero(d).value;
    EXPECT_GE(pam::green_l2sq(d).value, g0 * g0);
  }
}

TEST(GreenL2, TruncatedLatticeSumsIncreaseToTheLimit) {
  const int d = 5;
  const double limit = pam::green_l2sq(d).value;
  const pam::GreenTable table(d, 4);
  double prev = 0.0;
  for (int R = 1; R <= 4; ++R) {
    double s = 0.0;
    table.for_each_tuple([&](std::span<const int> a) {
      if (a.back() > R) return;
      // sign choices times distinct permutations of the sorted tuple
      double mult = 1.0;
      int run = 1;
      double perms = 120.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != 0) mult *= 2.0;
        if (i > 0 && a[i] == a[i - 1]) {
          ++run;
          perms /= run;
        } else {
          run = 1;
        }
      }
      const double g = table.sorted(a);
      s += mult * perms * g * g;
    });
    EXPECT_GT(s, prev);
    EXPECT_LT(s, limit);
    prev = s;
  }
  EXPECT_GT(prev, 0.95 * limit);
}

TEST(GreenAt, DefiningRelation) {
  const int d = 3;
  std::array<int, 3> x{};
  for (x[0] = 0; x[0] <= 2; ++x[0]) {
    for (x[1] = 0; x[1] <= x[0]; ++x[1]) {
      for (x[2] = 0; x[2] <= x[1]; ++x[2]) {
        const double gx = pam::green_at(d, x, 1e-12).value;
        double lap = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
          for (int s : {-1, 1}) {
            auto y = x;
            y[i] += s;
            lap += pam::green_at(d, y, 1e-12).value - gx;
          }
        }
        const double want = (x[0] == 0) ? -1.0 : 0.0;
        EXPECT_NEAR(lap, want, 1e-10) << x[0] << x[1] << x[2];
      }
    }
  }
}

TEST(GreenAt, OriginMatchesGreenZero) {
  const std::array<int, 5> o{};
  EXPECT_NEAR(pam::green_at(5, o, 1e-12).value, g0_d5, 1e-12);
}

TEST(GreenAt, DecreasingAlongAxis) {
  for (int d : {3, 5}) {
    std::vector<int> x(static_cast<std::size_t>(d), 0);
    double prev = pam::green_at(d, x).value;
    for (int k = 1; k <= 5; ++k) {
      x[0] = k;
      const double g = pam::green_at(d, x).value;
      EXPECT_LT(g, prev);
      EXPECT_GT(g, 0.0);
      prev = g;
    }
  }
}

TEST(GreenAt, Errors) {
  const std::array<int, 2> x{};
  EXPECT_THROW(pam::green_at(2, x), pam::divergence_error);
  const std::array<int, 3> y{};
  EXPECT_THROW(pam::green_at(3, y, 0.0), pam::parameter_error);
  EXPECT_THROW(pam::green_at(4, y), pam::dimension_error);
}

TEST(GreenTable, MatchesPointwiseIntegral) {
  const pam::GreenTable table(3, 4);
  const std::vector<std::array<int, 3>> pts{{0, 0, 0}, {1, 0, 0}, {-2, 1, 0}, {4, 4, 4}, {3, -1, 2}};
  for (const auto& p : pts) {
    EXPECT_NEAR(table(p), pam::green_at(3, p, 1e-12).value, 1e-11);
  }
  EXPECT_LT(table.abs_error(), 1e-11);
  EXPECT_EQ(table.distinct_values(), 35u);  // multisets of size 3 from {0..4}
  EXPECT_THROW(pam::GreenTable(2, 2), pam::divergence_error);
}

TEST(GreenTable, DefiningRelationInsideTheTable) {
  const pam::GreenTable table(4, 3);
  std::array<int, 4> x{};
  for (x[0] = -2; x[0] <= 2; ++x[0]) {
    for (x[3] = -2; x[3] <= 2; ++x[3]) {
      double lap = 0.0;
      for (std::size_t i = 0; i < 4; ++i) {
        for (int s : {-1, 1}) {
          auto y = x;
          y[i] += s;
          lap += table(y) - table(x);
        }
      }
      const double want = (x[0] == 0 && x[3] == 0) ? -1.0 : 0.0;
      EXPECT_NEAR(lap, want, 1e-10);
    }
  }
}

TEST(Alpha, Values) {
  EXPECT_EQ(pam::alpha(3).value, 0.0);
  EXPECT_EQ(pam::alpha(4).value, 0.0);
  EXPECT_THROW(pam::alpha(2), pam::domain_error);
  EXPECT_NEAR(pam::alpha(5, 1e-12).value, alpha_d5, 1e-9);
}

TEST(Alpha, BoundedAndIncreasing) {
  double prev = 0.0;
  for (int d = 5; d <= 30; ++d) {
    const auto a = pam::alpha(d);
    EXPECT_GT(a.value, 0.0);
    EXPECT_LE(a.value, 1.0);
    EXPECT_GT(a.value, prev) << d;
    prev = a.value;
  }
  EXPECT_GT(prev, pam::alpha(5).value);
}

TEST(Alpha, SmallestDimensionPerQ) {
  // Dimension from which the Green-function lower bound can certify q.
  std::vector<int> first;
  for (int q = 2; q <= 4; ++q) {
    int found = 0;
    for (int d = 5; d <= 30 && !found; ++d) {
      if (pam::alpha(d).value > (q - 1.0) / q) found = d;
    }
    first.push_back(found);
    RecordProperty("first_d_q" + std::to_string(q), found);
  }
  EXPECT_EQ(first[0], 5);  // alpha_5 > 1/2
  EXPECT_GT(first[1], first[0]);
  EXPECT_GE(first[2], first[1]);
}

}  // namespace
