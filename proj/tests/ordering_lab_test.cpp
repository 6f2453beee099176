#include "convord/ordering_lab.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace convord {
namespace {

SdeSpec sde(CoefficientField drift, CoefficientField diffusion, double x0 = 0.0) {
  return {std::move(drift), std::move(diffusion), 1.0, InitialLaw::dirac(x0)};
}

ExperimentSpec volatility_pair(double lo, double hi) {
  ExperimentSpec e;
  e.x = sde(CoefficientField::constant(0.0), CoefficientField::constant(lo), 1.0);
  e.y = sde(CoefficientField::constant(0.0), CoefficientField::constant(hi), 1.0);
  e.mode = OrderingMode::Cvx;
  e.suite = {{"call", {1.0}}, {"softplus"}, {"identity"}};
  e.paths = 50000;
  e.seed = 7;
  e.estimation_grid = {-5, 5, 1001};
  return e;
}

TEST(Verdicts, Classify) {
  EXPECT_EQ(classify(1.0, 0.1, 2.33), Verdict::Ordered);
  EXPECT_EQ(classify(0.1, 0.1, 2.33), Verdict::Inconclusive);
  EXPECT_EQ(classify(-1.0, 0.1, 2.33), Verdict::Violated);
  EXPECT_EQ(classify(0.0, 0.0, 2.33), Verdict::Ordered);
  EXPECT_EQ(classify(-1e-300, 0.0, 2.33), Verdict::Violated);
  EXPECT_NEAR(critical_value(0.99), 2.3263478740408408, 1e-12);
  EXPECT_EQ(parse_mode("dircvx"), OrderingMode::Dircvx);
  EXPECT_THROW(parse_mode("lex"), std::invalid_argument);
}

TEST(Verdicts, RunningStatsMergeMatchesSequential) {
  RunningStats all, a, b;
  for (int i = 0; i < 100; ++i) {
    const double v = std::sin(i * 0.7) * 3 + i * 0.01;
    all.push(v);
    (i < 37 ? a : b).push(v);
  }
  a.merge(b);
  EXPECT_EQ(a.n, all.n);
  EXPECT_NEAR(a.mean, all.mean, 1e-14);
  EXPECT_NEAR(a.variance(), all.variance(), 1e-12);
}

TEST(InitialOrder, DiracAgainstSpread) {
  const auto d = InitialLaw::dirac(0.0);
  const auto spread = InitialLaw::two_point(0.5, -1.0, 1.0);
  EXPECT_TRUE(check_initial_order(d, spread, OrderingMode::Cvx).empty());
  EXPECT_FALSE(check_initial_order(spread, d, OrderingMode::Icv).empty());
  EXPECT_FALSE(check_initial_order(d, InitialLaw::dirac(0.5), OrderingMode::Cvx).empty());
  EXPECT_TRUE(check_initial_order(d, InitialLaw::dirac(0.5), OrderingMode::Icv).empty());
}

TEST(Resolve, AutoSchemeForConstantVolatility) {
  const auto r = resolve_experiment(volatility_pair(0.2, 0.3));
  EXPECT_EQ(r.admissible_side, "X");
  EXPECT_EQ(r.scheme.m, 32u);
  EXPECT_TRUE(std::isinf(r.scheme.threshold));
  EXPECT_FALSE(r.overridden);
}

TEST(Resolve, ProportionalVolatilityThreshold) {
  ExperimentSpec e = volatility_pair(0.2, 0.3);
  e.x.diffusion = CoefficientField::proportional(0.2);
  e.y.diffusion = CoefficientField::proportional(0.3);
  e.mode = OrderingMode::Icv;
  e.estimation_grid = {0, 5, 501};
  const auto r = resolve_experiment(e);
  EXPECT_NEAR(r.s_default, std::sqrt(32.0) / 0.4, 1e-12);
  EXPECT_EQ(r.scheme.threshold, r.s_default);
}

TEST(Resolve, HypothesisFailures) {
  EXPECT_THROW(resolve_experiment(volatility_pair(0.3, 0.2)), HypothesisViolation);
  ExperimentSpec drift = volatility_pair(0.2, 0.3);
  drift.y.drift = CoefficientField::constant(0.1);
  EXPECT_THROW(resolve_experiment(drift), HypothesisViolation);
  drift.mode = OrderingMode::Icv;
  EXPECT_NO_THROW(resolve_experiment(drift));
  ExperimentSpec put = volatility_pair(0.2, 0.3);
  put.mode = OrderingMode::Icv;
  put.suite = {{"put", {1.0}}};
  EXPECT_THROW(resolve_experiment(put), HypothesisViolation);
  put.override_hypotheses = true;
  const auto r = resolve_experiment(put);
  EXPECT_TRUE(r.overridden);
  EXPECT_EQ(r.issues.size(), 1u);
  ExperimentSpec big = volatility_pair(0.2, 0.3);
  big.threshold = 1e9;
  big.x.diffusion = CoefficientField::scaled_hyperbola(0.2);
  big.y.diffusion = CoefficientField::scaled_hyperbola(0.3);
  EXPECT_THROW(resolve_experiment(big), HypothesisViolation);
}

TEST(Resolve, TentPairIsMollified) {
  ExperimentSpec e = volatility_pair(0.2, 0.3);
  e.x.diffusion = CoefficientField::tent(1.0, 1.0);
  e.y.diffusion = CoefficientField::tent(1.5, 1.0);
  e.estimation_grid = {-4, 4, 801};
  const auto r = resolve_experiment(e);
  ASSERT_EQ(r.substitutions.size(), 1u);
  EXPECT_EQ(r.x.diffusion.family(), Family::Tabulated);
  EXPECT_TRUE(std::isfinite(r.m_min));
}

TEST(Compare, VolatilityOrdering) {
  const auto rep = compare_ordered(volatility_pair(0.2, 0.3));
  ASSERT_EQ(rep.results.size(), 3u);
  EXPECT_EQ(rep.results[0].verdict, Verdict::Ordered);
  EXPECT_EQ(rep.results[1].verdict, Verdict::Ordered);
  EXPECT_NE(rep.results[2].verdict, Verdict::Violated);
  EXPECT_FALSE(rep.any_violated());
  EXPECT_GT(rep.results[0].z_score, 3.0);
}

TEST(Compare, IdenticalSdesGiveExactZero) {
  const auto rep = compare_ordered(volatility_pair(0.25, 0.25));
  for (const auto& r : rep.results) {
    EXPECT_EQ(r.paired_diff_mean, 0.0);
    EXPECT_EQ(r.paired_stderr, 0.0);
    EXPECT_EQ(r.verdict, Verdict::Ordered);
  }
}

TEST(Compare, IndependentNoiseInflatesError) {
  ExperimentSpec e = volatility_pair(0.2, 0.3);
  const auto paired = compare_ordered(e);
  e.independent_noise = true;
  const auto indep = compare_ordered(e);
  EXPECT_GT(indep.results[0].paired_stderr, 2.0 * paired.results[0].paired_stderr);
}

TEST(Compare, ReproducibleForFixedSeed) {
  const auto a = compare_ordered(volatility_pair(0.2, 0.3));
  const auto b = compare_ordered(volatility_pair(0.2, 0.3));
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    EXPECT_EQ(a.results[i].paired_diff_mean, b.results[i].paired_diff_mean);
    EXPECT_EQ(a.results[i].paired_stderr, b.results[i].paired_stderr);
  }
}

TEST(ValueFunction, CallValueIsConvexAndMonotone) {
  const auto s = sde(CoefficientField::constant(0.0), CoefficientField::scaled_hyperbola(0.2));
  const SchemeConfig c{16, SchemeVariant::PointFrozen, default_threshold(0.2, 1.0, 16), 1.0};
  const auto rep =
      value_function_convexity(s, TestFunctional::from_spec({"call", {0.0}}), {-1, 1, 21}, c, 20000, 3);
  EXPECT_EQ(rep.second_difference.size(), 19u);
  EXPECT_EQ(rep.convexity_violations, 0u);
  EXPECT_EQ(rep.monotonicity_violations, 0u);
}

TEST(SigmaCondition, ThetaDominatesInMean) {
  const auto x = sde(CoefficientField::constant(0.0), CoefficientField::scaled_hyperbola(0.2), 0.5);
  const auto y = sde(CoefficientField::constant(0.0), CoefficientField::scaled_hyperbola(0.3), 0.5);
  const SchemeConfig c{16, SchemeVariant::PointFrozen, 5.0, 1.0};
  const auto rep = marginal_sigma_condition(x, y, 0.5, c, 20000, 2);
  EXPECT_EQ(rep.k, 8u);
  EXPECT_GT(rep.z_score, 3.0);
}

TEST(Increments, RatioNearOneForSmallSteps) {
  const auto s = sde(CoefficientField::constant(0.0), CoefficientField::proportional(0.2), 1.0);
  const SchemeConfig c{64, SchemeVariant::PointFrozen, std::numeric_limits<double>::infinity(), 1.0};
  const auto rows = increment_asymptotic(s, 0.5, {1.0 / 64, 4.0 / 64}, c, 40000, 5);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(rows[0].ratio, 1.0, 4 * rows[0].ratio_stderr + 1e-3);
  EXPECT_THROW(increment_asymptotic(s, 0.5, {0.001}, c, 100, 5), std::invalid_argument);
}

TEST(Propagation, CallsStayConvexAndOrdered) {
  const auto x = sde(CoefficientField::constant(0.0), CoefficientField::constant(0.2));
  const auto y = sde(CoefficientField::constant(0.0), CoefficientField::scaled_hyperbola(0.2));
  const SchemeConfig c{32, SchemeVariant::PointFrozen, default_threshold(0.2, 1.0, 32), 1.0};
  PropagationSetup setup;
  setup.nodes = 801;
  const auto rep = propagate_suite(x, y, c, {{"call", {0.5}}, {"softplus"}, {"sup_norm"}}, setup);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_TRUE(rep.rows[0].passed());
  ASSERT_TRUE(rep.rows[0].min_gap.has_value());
  EXPECT_GE(*rep.rows[0].min_gap, -1e-9);
  EXPECT_TRUE(rep.rows[1].passed());
  EXPECT_FALSE(rep.rows[2].skipped.empty());
  EXPECT_TRUE(rep.passed());
}

TEST(Counterexample, OracleMatchesClosedForm) {
  CounterexampleSetup setup;
  setup.paths = 200000;
  const auto rep = counterexample_demo(setup);
  EXPECT_NEAR(rep.closed_form, 0.0797881587363836, 1e-13);
  EXPECT_NEAR(rep.oracle_violation, rep.closed_form, 1e-9);
  EXPECT_NEAR(rep.mc_violation, rep.closed_form, 4 * rep.mc_stderr);
  ASSERT_EQ(rep.g.size(), 3u);
  EXPECT_TRUE(rep.comparison.any_violated());
}

}  // namespace
}  // namespace convord
