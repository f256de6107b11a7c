#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <string>

#include "skewsync/clock.hpp"
#include "skewsync/skew_estimator.hpp"

using namespace skewsync;

namespace {

// Half a unit in the fourth significant digit of v.
double four_digit_tolerance(double v) {
  return 0.5 * std::pow(10.0, std::floor(std::log10(std::abs(v))) - 3);
}

struct AppLayerRow {
  std::int64_t rx_last;
  double app_skew;
};

// Receiver counts over the transmitter's 1..100000 window and the resulting
// application-layer skews, one per reference setup.
constexpr std::array<AppLayerRow, 8> kAppRows{{
    {100499, -4.9653e-3},
    {100249, -2.4838e-3},
    {100166, -1.6573e-3},
    {100124, -1.2385e-3},
    {99875, 1.2516e-3},
    {99833, 1.6728e-3},
    {99750, 2.5063e-3},
    {99502, 5.0050e-3},
}};

}  // namespace

TEST(SkewFromCounts, ReproducesAppLayerColumnToFourDigits) {
  const TickCount tx{1, 100000};
  for (const auto& row : kAppRows) {
    const double s = skew_from_counts(tx, {1, row.rx_last});
    EXPECT_NEAR(s, row.app_skew, four_digit_tolerance(row.app_skew)) << "rx last tick " << row.rx_last;
  }
}

TEST(SkewFromCounts, FirstRowToFiveDigits) {
  const double s = skew_from_counts({1, 100000}, {1, 100499});
  EXPECT_NEAR(s, -4.9653e-3, 0.5e-7);
}

TEST(SkewFromCounts, IdenticalClocksGiveZero) {
  EXPECT_EQ(skew_from_counts({1, 100000}, {1, 100000}), 0.0);
}

TEST(SkewFromCounts, RejectsEmptySpans) {
  EXPECT_THROW(skew_from_counts({5, 5}, {1, 100}), InvalidArgument);
  EXPECT_THROW(skew_from_counts({1, 100}, {7, 3}), InvalidArgument);
}

TEST(SkewFromCounts, RoleSwapIsAntisymmetricToFirstOrder) {
  for (const auto& row : kAppRows) {
    const TickCount a{1, 100000}, b{1, row.rx_last};
    const double ab = skew_from_counts(a, b);
    const double ba = skew_from_counts(b, a);
    EXPECT_LE(std::abs(ab + ba), ab * ab * 1.01);
  }
}

TEST(Residual, ReferenceRows) {
  const Residual r1 = residual_after_correction(-4.9653e-3, -4.9505e-3);
  EXPECT_NEAR(r1.absolute, 0.0148e-3, 1e-12);
  ASSERT_TRUE(r1.percent);
  EXPECT_NEAR(*r1.percent, 0.298, 0.0005);

  const Residual r8 = residual_after_correction(5.0050e-3, 5.0000e-3);
  EXPECT_NEAR(r8.absolute, 0.0050e-3, 1e-12);
  // The table truncates 0.0999% to 0.099%.
  EXPECT_NEAR(*r8.percent, 0.099, 0.001);
}

TEST(Residual, ExactEstimateLeavesNothing) {
  for (double x : {-4.9751e-3, 1e-6, 0.05}) {
    const Residual r = residual_after_correction(x, x);
    EXPECT_EQ(r.absolute, 0.0);
    ASSERT_TRUE(r.percent);
    EXPECT_EQ(*r.percent, 0.0);
  }
}

TEST(Residual, PercentAbsentForZeroReference) {
  EXPECT_FALSE(residual_after_correction(0.0, 1e-6).percent);
}

TEST(ClockModel, TickRateFollowsSkew) {
  const ClockModel c(200.0, -4.9751e-3);
  EXPECT_NEAR(c.tick_rate(), 200.0 / (1.0 - 4.9751e-3), 1e-12);
  EXPECT_NEAR(c.reading(2.0), 2.0 * c.tick_rate(), 1e-12);
}

TEST(ClockModel, ValidatesInputs) {
  EXPECT_THROW(ClockModel(0.0, 0.0), InvalidArgument);
  EXPECT_THROW(ClockModel(1.0, 0.2), InvalidArgument);
}

TEST(ClockModel, TickWindowCounts) {
  // A 200 Hz transmitter over 500 s counts 1..100000.
  EXPECT_EQ(ClockModel(200.0, 0.0).last_tick(500.0), 100000);
  // A fast receiver counts more.
  EXPECT_GT(ClockModel(200.0, -4.9751e-3).last_tick(500.0), 100000);
  EXPECT_LT(ClockModel(200.0, 5e-3).last_tick(500.0), 100000);
}

TEST(CorrectApplicationClock, ExactEstimateRemovesSkew) {
  const ClockModel rx(200.0, -2.4938e-3);
  SkewEstimate est;
  est.skew = -2.4938e-3;
  EXPECT_NEAR(correct_application_clock(rx, est).skew, 0.0, 1e-18);
}

TEST(CorrectApplicationClock, ReferenceResiduals) {
  // Correcting the application-layer skew by the physical-layer estimate
  // leaves the tabulated residual. The dividing correction adds a second-order
  // term of about tau^2, hence the 1e-7 tolerance.
  struct Case {
    double app, phy, left;
  };
  for (const Case c : {Case{-4.9653e-3, -4.9505e-3, 0.0148e-3}, Case{-2.4838e-3, -2.4876e-3, 0.0038e-3}}) {
    const ClockModel rx(200.0, c.app);
    SkewEstimate est;
    est.skew = c.phy;
    EXPECT_NEAR(std::abs(correct_application_clock(rx, est).skew), c.left, 1e-7);
  }
}
