#include "convord/convergence.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

namespace convord {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(ClosedForms, BlackScholesAndTails) {
  EXPECT_NEAR(black_scholes_call(100.0, 100.0, 0.2, 1.0), 7.965567455405804, 1e-10);
  EXPECT_NEAR(gaussian_two_sided_tail(5.0), 5.733031437583866e-07, 1e-20);
  EXPECT_NEAR(100.0 * gaussian_two_sided_tail(5.0) / 5.73303143758386e-05, 1.0, 1e-13);
  EXPECT_EQ(gaussian_two_sided_tail(kInf), 0.0);
  EXPECT_EQ(black_scholes_call(1.0, 2.0, 0.0, 1.0), 0.0);
}

TEST(W1, EmpiricalExamples) {
  const std::vector<double> a{0.0, 1.0, 2.0}, b{2.0, 3.0, 1.0}, c{3.0, 1.0, 2.0};
  EXPECT_NEAR(w1_empirical(a, b), 1.0, 1e-15);
  EXPECT_EQ(w1_empirical(b, c), 0.0);
  EXPECT_THROW(w1_empirical(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Policy, Resolution) {
  EXPECT_NEAR((ThresholdPolicy{ThresholdPolicyKind::Default, 0}).resolve(0.2, 1.0, 32), std::sqrt(32.0) / 0.4, 1e-12);
  EXPECT_TRUE(std::isinf((ThresholdPolicy{ThresholdPolicyKind::Infinite, 0}).resolve(0.2, 1.0, 32)));
  EXPECT_EQ((ThresholdPolicy{ThresholdPolicyKind::Constant, 3.0}).resolve(0.2, 1.0, 32), 3.0);
  EXPECT_NEAR((ThresholdPolicy{ThresholdPolicyKind::LogScaled, 2.0}).resolve(0.2, 1.0, 32),
              2.0 * std::sqrt(std::log(32.0)), 1e-12);
  EXPECT_EQ(parse_policy("log_scaled"), ThresholdPolicyKind::LogScaled);
  EXPECT_THROW(parse_policy("huge"), std::invalid_argument);
}

TEST(StrongRate, SlopeNearMinusOneHalf) {
  const auto r = strong_error_rate(0.2, 1.0, 1.0, {8, 16, 32, 64, 128}, 4000, 3, {});
  EXPECT_EQ(r.error.size(), 5u);
  EXPECT_FALSE(r.degenerate);
  EXPECT_GT(r.slope, -0.7);
  EXPECT_LT(r.slope, -0.3);
  EXPECT_GT(r.slope_stderr, 0.0);
  for (std::size_t i = 1; i < r.error.size(); ++i) EXPECT_LT(r.error[i], r.error[i - 1]);
  EXPECT_THROW(strong_error_rate(0.2, 1.0, 1.0, {8}, 100, 3, {}), std::invalid_argument);
}

TEST(Truncation, EventRateAndBitIdentity) {
  const SdeSpec gbm{CoefficientField::constant(0.0), CoefficientField::proportional(0.2), 1.0, InitialLaw::dirac(1.0)};
  const NoisePanel noise(20000, 100, 11);
  const auto r = truncation_event_rate(noise, 2.5, gbm);
  EXPECT_NEAR(r.bound, 100 * gaussian_two_sided_tail(2.5), 1e-15);
  EXPECT_GT(r.exceeding, 0u);
  EXPECT_EQ(r.compared_panels + r.exceeding, r.paths);
  EXPECT_EQ(r.bitwise_mismatches, 0u);
  EXPECT_TRUE(r.within_bound);
  EXPECT_THROW(truncation_event_rate(noise, -1.0, gbm), std::invalid_argument);
}

TEST(Truncation, GapVanishesForHugeThreshold) {
  const SdeSpec gbm{CoefficientField::constant(0.0), CoefficientField::proportional(0.2), 1.0, InitialLaw::dirac(1.0)};
  EXPECT_EQ(truncation_gap(gbm, 16, 50.0, 2000, 1), 0.0);
  EXPECT_GT(truncation_gap(gbm, 16, 0.5, 2000, 1), 0.0);
}

TEST(TerminalW1, ShrinksWithSteps) {
  const auto rows = terminal_w1(0.5, 1.0, 1.0, {2, 64}, 20000, 4, {});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LT(rows[1].w1, 0.05);
  EXPECT_GT(rows[0].w1, 0.0);
}

}  // namespace
}  // namespace convord
