#include "convord/euler.hpp"
#include "convord/kernel_oracle.hpp"
#include "convord/ordering_lab.hpp"
#include "convord/parallel.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>
#include <filesystem>
#include <limits>

namespace convord {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SdeSpec sde(CoefficientField drift, CoefficientField diffusion, double x0 = 0.0, double horizon = 1.0) {
  return {std::move(drift), std::move(diffusion), horizon, InitialLaw::dirac(x0)};
}

TEST(DrawTruncated, Examples) {
  EXPECT_EQ(draw_truncated(0.7, 5.0), 0.7);
  EXPECT_EQ(draw_truncated(-6.1, 5.0), 0.0);
  EXPECT_EQ(draw_truncated(-6.1, kInf), -6.1);
  EXPECT_EQ(draw_truncated(1e300, kInf), 1e300);
}

TEST(Step, Examples) {
  const auto bm = sde(CoefficientField::constant(0.0), CoefficientField::constant(1.0));
  for (auto v : {SchemeVariant::PointFrozen, SchemeVariant::TimeIntegrated}) {
    EXPECT_DOUBLE_EQ(step(0.0, 0, bm, {4, v, kInf, 1.0}, 1.0), 0.5);
  }
  const auto decay = sde(CoefficientField::affine(0.0, -1.0), CoefficientField::constant(0.0), 1.0);
  EXPECT_NEAR(step(1.0, 0, decay, {10, SchemeVariant::PointFrozen, kInf, 1.0}, 0.3), 0.9, 1e-15);
  EXPECT_NEAR(step(1.0, 0, decay, {10, SchemeVariant::TimeIntegrated, kInf, 1.0}, 0.3), 0.9, 1e-15);
}

TEST(Step, VariantsAgreeForTimeConstantCoefficients) {
  const auto s = sde(CoefficientField::affine(0.1, -0.3), CoefficientField::scaled_hyperbola(0.2));
  for (double x : {-2.0, 0.0, 1.5}) {
    EXPECT_EQ(step(x, 3, s, {8, SchemeVariant::PointFrozen, kInf, 1.0}, 0.4),
              step(x, 3, s, {8, SchemeVariant::TimeIntegrated, kInf, 1.0}, 0.4));
  }
}

TEST(SimulateBatch, DeterministicDiracWithoutNoise) {
  const auto s = sde(CoefficientField::constant(0.0), CoefficientField::constant(0.0), 3.0);
  const SchemeConfig c{16, SchemeVariant::PointFrozen, 5.0, 1.0};
  const auto paths = simulate_batch(s, c, NoisePanel(10, 16, 1));
  for (double v : paths.data()) EXPECT_EQ(v, 3.0);
}

TEST(SimulateBatch, TerminalVarianceMatchesTruncatedMoment) {
  const auto s = sde(CoefficientField::constant(0.0), CoefficientField::constant(1.0));
  const SchemeConfig c{8, SchemeVariant::PointFrozen, 5.0, 1.0};
  const auto f = TestFunctional::from_spec({"square", {}});
  const auto est = estimate_functional(s, c, f, 1000000, 3);
  EXPECT_NEAR(est.mean, truncated_second_moment(5.0), 3.0 * est.std_error);
}

TEST(SimulateBatch, GbmIsAMartingaleUpToTruncation) {
  const auto s = sde(CoefficientField::constant(0.0), CoefficientField::proportional(0.2), 1.0);
  const SchemeConfig c{256, SchemeVariant::PointFrozen, default_threshold(0.2, 1.0, 256), 1.0};
  const auto est = estimate_functional(s, c, TestFunctional::from_spec({"identity", {}}), 200000, 5);
  EXPECT_NEAR(est.mean, 1.0, 3.0 * est.std_error);
}

TEST(SimulateBatch, BitIdenticalAcrossThreadCounts) {
  const auto s = sde(CoefficientField::affine(0.05, -0.5), CoefficientField::scaled_hyperbola(0.3), 0.5);
  const SchemeConfig c{32, SchemeVariant::TimeIntegrated, 4.0, 1.0};
  set_thread_count(1);
  const auto a = simulate_batch(s, c, NoisePanel(9000, 32, 11));
  set_thread_count(8);
  const auto b = simulate_batch(s, c, NoisePanel(9000, 32, 11));
  set_thread_count(0);
  EXPECT_TRUE(a == b);
}

TEST(SimulateBatch, RejectsMismatchedDimensions) {
  const auto s = sde(CoefficientField::constant(0.0), CoefficientField::constant(1.0));
  EXPECT_THROW(simulate_batch(s, {8, SchemeVariant::PointFrozen, kInf, 1.0}, NoisePanel(4, 7, 1)),
               std::invalid_argument);
}

TEST(SimulateCoupled, IdenticalSpecsGiveIdenticalPanels) {
  SdeSpec s = sde(CoefficientField::constant(0.0), CoefficientField::proportional(0.2), 1.0);
  s.initial = InitialLaw::two_point(0.3, 0.5, 1.5);
  const auto [x, y] = simulate_coupled(s, s, {16, SchemeVariant::PointFrozen, 3.0, 1.0}, NoisePanel(100, 16, 2));
  EXPECT_TRUE(x == y);
}

TEST(Interpolate, Examples) {
  const std::vector<double> v{0.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(interpolate(v, 1.0, 0.25), 0.5);
  EXPECT_EQ(interpolate(v, 1.0, 0.5), 1.0);
  EXPECT_THROW(interpolate(v, 1.0, 1.5), std::out_of_range);
  const auto sup = TestFunctional::from_spec({"sup_norm", {}});
  const std::vector<double> path{1.0, -3.0, 2.0};
  EXPECT_EQ(sup.on_path(path, 1.0), 3.0);
}

TEST(ExactGbm, Examples) {
  std::vector<double> out(2);
  const std::vector<double> g{1.0};
  exact_gbm_path(1.0, 0.2, 1.0, g, out);
  EXPECT_NEAR(out[1], 1.19721736312181, 1e-13);
  exact_gbm_path(2.0, 0.0, 1.0, g, out);
  EXPECT_EQ(out[1], 2.0);
  const auto panel = exact_gbm_paths(1.0, 0.2, NoisePanel(200000, 4, 9), 1.0);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t n = 0; n < panel.paths(); ++n) {
    mean += panel(n, 4);
    m2 += panel(n, 4) * panel(n, 4);
  }
  mean /= panel.paths();
  const double se = std::sqrt((m2 / panel.paths() - mean * mean) / panel.paths());
  EXPECT_NEAR(mean, 1.0, 3.0 * se);
}

TEST(BinaryDump, RoundTrips) {
  const auto s = sde(CoefficientField::constant(0.0), CoefficientField::proportional(0.2), 1.0);
  const SchemeConfig c{8, SchemeVariant::PointFrozen, 2.5, 1.0};
  const auto paths = simulate_batch(s, c, NoisePanel(50, 8, 4));
  const auto file = std::filesystem::temp_directory_path() / "convord_paths_test.bin";
  write_binary(paths, file.string());
  const auto back = read_binary(file.string());
  std::filesystem::remove(file);
  EXPECT_TRUE(paths == back);
}

TEST(TimeIntegrated, SemiConvexityDoesNotGrow) {
  const auto diffusion = CoefficientField::piecewise_affine({{0.0, 0.1, 0.3}, {0.3, 0.2, -0.2}});
  const SdeSpec spec{CoefficientField::constant(0.0), diffusion, 1.0, InitialLaw::dirac(0.0)};
  const SchemeConfig c{4, SchemeVariant::TimeIntegrated, 5.0, 1.0};
  const auto grid = SpatialGrid::with_step(-5, 5, 0.01);
  const double a = estimate_a_sigma(diffusion, grid, default_time_grid(1.0)).value;
  for (std::size_t k = 0; k < c.m; ++k) {
    std::vector<double> v(grid.nodes);
    for (std::size_t i = 0; i < grid.nodes; ++i) v[i] = effective_coefficients(spec, c, k, grid.node(i)).diffusion;
    const auto tab = CoefficientField::tabulated(grid.lo, grid.step(), v);
    EXPECT_LE(estimate_a_sigma(tab, grid, {0.0}).value, a + 1e-9) << k;
  }
}

}  // namespace
}  // namespace convord
