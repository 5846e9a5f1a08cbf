#include "prgd/accountant.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "prgd/geometry.hpp"

namespace prgd::accountant {
namespace {

TEST(PerStepDelta, Examples) {
  EXPECT_NEAR(per_step_delta(1, 1.0), 0.5, 1e-15);
  for (int d : {1, 2, 3, 17, 50}) EXPECT_EQ(per_step_delta(d, 0.0), 0.0);
  // 1 - overlap / volume with the 3-d sphere-cap formula.
  const double pi = std::acos(-1.0);
  const double oracle = 1.0 - 2.0 * (pi * 0.25 * 2.5 / 3.0) / (4.0 * pi / 3.0);
  EXPECT_NEAR(oracle, 0.6875, 1e-15);
  EXPECT_NEAR(per_step_delta(3, 1.0), oracle, 1e-12);
}

TEST(PerStepDelta, SaturatesForDisjointBalls) {
  for (int d : {1, 4, 30}) {
    EXPECT_EQ(per_step_delta(d, 2.0), 1.0);
    EXPECT_EQ(per_step_delta(d, 3.5), 1.0);
    EXPECT_EQ(per_step_delta(d, 6.0, 3.0), 1.0);
  }
}

TEST(PerStepDelta, ComplementForm) {
  for (int d = 1; d <= 20; ++d)
    for (double dx : {0.1, 0.7, 1.3, 1.9}) {
      const double a = dx / 2.0;
      const double complement =
          1.0 - specfn::reg_inc_beta(1.0 - a * a, {0.5 * (d + 1), 0.5});
      EXPECT_NEAR(per_step_delta(d, dx), complement, 1e-12);
    }
}

TEST(PerStepDelta, OverlapFractionIsComplement) {
  for (int d = 1; d <= 30; ++d)
    for (int i = 0; i <= 20; ++i) {
      const double dx = 2.0 * i / 20.0;
      EXPECT_NEAR(per_step_overlap_fraction(d, dx) + per_step_delta(d, dx), 1.0, 1e-13);
    }
  EXPECT_EQ(per_step_overlap_fraction(4, 0.0), 1.0);
  EXPECT_EQ(per_step_overlap_fraction(4, 3.0), 0.0);
  EXPECT_GT(per_step_overlap_fraction(40, 1.99), 0.0);
}

TEST(PerStepDelta, RejectsInvalidSpec) {
  EXPECT_THROW(per_step_delta(0, 1.0), DomainError);
  EXPECT_THROW(per_step_delta(2, -1.0), DomainError);
  EXPECT_THROW(per_step_delta(2, 1.0, 0.0), DomainError);
  EXPECT_THROW(overall_delta({2, 1.0, 0, 1, 1.0}), DomainError);
  EXPECT_THROW(overall_delta({2, 1.0, 1, 0, 1.0}), DomainError);
}

TEST(PerStepDelta, StrictlyIncreasingInDeltaX) {
  for (int d = 1; d <= 50; ++d) {
    // delta itself rounds to 1 near dx = 2 for larger d, so strictness is
    // checked on the directly computed complement.
    double prev = per_step_delta(d, 0.0), prev_c = per_step_overlap_fraction(d, 0.0);
    for (int i = 1; i <= 200; ++i) {
      const double dx = 2.0 * i / 200.0;
      const double v = per_step_delta(d, dx), c = per_step_overlap_fraction(d, dx);
      EXPECT_GE(v, prev) << "d=" << d << " i=" << i;
      if (v < 1.0 - 1e-12) {
        EXPECT_GT(v, prev) << "d=" << d << " i=" << i;
      }
      EXPECT_LT(c, prev_c) << "d=" << d << " i=" << i;
      prev = v;
      prev_c = c;
    }
  }
}

TEST(PerStepDelta, IncreasingInDimension) {
  for (int i = 1; i < 40; ++i) {
    const double dx = 2.0 * i / 40.0;
    for (int d = 1; d + 2 <= 51; d += 2) {
      EXPECT_GE(per_step_delta(d + 2, dx), per_step_delta(d, dx)) << "d=" << d << " dx=" << dx;
      EXPECT_LT(per_step_overlap_fraction(d + 2, dx), per_step_overlap_fraction(d, dx))
          << "d=" << d << " dx=" << dx;
    }
    for (int d = 1; d < 50; ++d)
      EXPECT_GE(per_step_delta(d + 1, dx), per_step_delta(d, dx)) << "d=" << d << " dx=" << dx;
  }
}

TEST(PerStepDelta, BoundaryValuesAllDimensions) {
  for (int d = 1; d <= 60; ++d)
    for (double r : {0.5, 1.0, 3.0}) {
      EXPECT_EQ(per_step_delta(d, 0.0, r), 0.0);
      EXPECT_EQ(per_step_delta(d, 2.0 * r, r), 1.0);
    }
}

TEST(PerStepDelta, ScalingConsistency) {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> dim(1, 60);
  std::uniform_real_distribution<double> radius(0.1, 10.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const int d = dim(gen);
    const double r = radius(gen);
    const double dx = 2.0 * r * frac(gen);
    EXPECT_NEAR(per_step_delta(d, dx, r), per_step_delta(d, dx / r, 1.0), 1e-12);
  }
}

TEST(PerStepDelta, EqualsOneMinusOverlapFraction) {
  for (int d = 1; d <= 25; ++d)
    for (int i = 0; i < 40; ++i) {
      const double dx = 2.0 * i / 39.0;
      const geometry::BallSpec spec{d, 1.0};
      const double geo = 1.0 - geometry::overlap_volume(spec, dx) / geometry::ball_volume(spec);
      EXPECT_NEAR(per_step_delta(d, dx), geo, 1e-10);
    }
}

TEST(AmplifiedDelta, Examples) {
  EXPECT_NEAR(amplified_delta({1, 1.0, 1, 1, 1.0}), 0.5, 1e-15);
  EXPECT_NEAR(amplified_delta({1, 1.0, 100, 1, 1.0}), 0.005, 1e-15);
  EXPECT_EQ(amplified_delta({7, 0.0, 33, 1, 1.0}), 0.0);
}

TEST(OverallDelta, Examples) {
  const DeltaReport full = overall_delta({1, 1.0, 100, 100, 1.0});
  EXPECT_NEAR(full.overall_delta, 0.5, 1e-15);
  EXPECT_FALSE(full.saturated);

  const DeltaReport half = overall_delta({1, 1.0, 100, 50, 1.0});
  EXPECT_EQ(half.overall_delta, 0.25);
  EXPECT_FALSE(half.saturated);

  const DeltaReport clamped = overall_delta({1, 1.9, 2, 100, 1.0});
  EXPECT_EQ(clamped.overall_delta, 1.0);
  EXPECT_TRUE(clamped.saturated);
  EXPECT_EQ(clamped.provenance, "given");
}

TEST(OverallDelta, ReportInvariantsHoldExactly) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> dim(1, 50);
  std::uniform_int_distribution<long long> count(1, 10000);
  std::uniform_real_distribution<double> dxs(0.0, 2.5);
  for (int i = 0; i < 1000; ++i) {
    const PrivacySpec spec{dim(gen), dxs(gen), count(gen), count(gen), 1.0};
    const DeltaReport r = overall_delta(spec);
    EXPECT_EQ(r.per_step_delta, per_step_delta(spec));
    EXPECT_EQ(r.amplified_delta, r.per_step_delta / static_cast<double>(spec.dataset_size));
    const double composed = r.per_step_delta * (static_cast<double>(spec.steps) /
                                                static_cast<double>(spec.dataset_size));
    EXPECT_EQ(r.overall_delta, std::min(1.0, composed));
    EXPECT_EQ(r.saturated, composed > 1.0);
  }
}

TEST(OverallDelta, StepsEqualToDatasetSizeRecoverPerStep) {
  std::mt19937_64 gen(6);
  std::uniform_int_distribution<int> dim(1, 50);
  std::uniform_int_distribution<long long> count(1, 100000);
  std::uniform_real_distribution<double> dxs(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const long long n = count(gen);
    const PrivacySpec spec{dim(gen), dxs(gen), n, n, 1.0};
    EXPECT_EQ(overall_delta(spec).overall_delta, per_step_delta(spec));
  }
}

TEST(RadiusForTarget, Examples) {
  EXPECT_NEAR(radius_for_target(1, 1.0, 0.25), 2.0, 1e-9);
  EXPECT_NEAR(radius_for_target(1, 1.0, 0.5), 1.0, 1e-9);
  EXPECT_NEAR(radius_for_target(3, 1.0, 0.6875), 1.0, 1e-9);
}

TEST(RadiusForTarget, IsATrueInverse) {
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<int> dim(1, 50);
  std::uniform_real_distribution<double> dxs(0.01, 3.0);
  std::uniform_real_distribution<double> target(1e-4, 1.0 - 1e-4);
  for (int i = 0; i < 200; ++i) {
    const int d = dim(gen);
    const double dx = dxs(gen), t = target(gen);
    const double r = radius_for_target(d, dx, t);
    EXPECT_GT(r, dx / 2.0);
    EXPECT_NEAR(per_step_delta(d, dx, r), t, 1e-9) << "d=" << d << " dx=" << dx << " t=" << t;
    if (d == 1) {
      EXPECT_NEAR(r, dx / (2.0 * t), 1e-8 * r);
    }
  }
}

TEST(RadiusForTarget, RejectsInvalidInput) {
  EXPECT_THROW(radius_for_target(3, 1.0, 0.0), DomainError);
  EXPECT_THROW(radius_for_target(3, 1.0, 1.0), DomainError);
  EXPECT_THROW(radius_for_target(3, 0.0, 0.5), DomainError);
  EXPECT_THROW(radius_for_target(0, 1.0, 0.5), DomainError);
}

TEST(DeltaCurve, Examples) {
  const std::vector<int> one{1};
  const std::vector<double> grid{0.0, 1.0, 2.0};
  const auto rows = delta_curve(one, grid);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].delta, 0.0);
  EXPECT_NEAR(rows[1].delta, 0.5, 1e-15);
  EXPECT_EQ(rows[2].delta, 1.0);

  const std::vector<int> dims{1, 3};
  const std::vector<double> point{1.0};
  const auto two = delta_curve(dims, point);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].d, 1);
  EXPECT_NEAR(two[0].delta, 0.5, 1e-15);
  EXPECT_EQ(two[1].d, 3);
  EXPECT_NEAR(two[1].delta, 0.6875, 1e-12);
  EXPECT_EQ(two[1].delta, per_step_delta(3, 1.0));

  EXPECT_THROW(delta_curve(std::vector<int>{}, grid), DomainError);
  EXPECT_THROW(delta_curve(one, std::vector<double>{}), DomainError);
}

}  // namespace
}  // namespace prgd::accountant
