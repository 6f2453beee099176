#pragma once

#include "convord/coefficients.hpp"
#include "convord/euler.hpp"
#include "convord/functionals.hpp"
#include "convord/kernel_oracle.hpp"

#include <cstddef>
#include <cstdint>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace convord {

/// icv: non-decreasing convex; cvx: convex with a shared affine drift;
/// diricv / dircvx: the directionally convex analogues.
enum class OrderingMode { Icv, Cvx, Diricv, Dircvx };

std::string_view mode_id(OrderingMode mode);
OrderingMode parse_mode(std::string_view id);

enum class Verdict { Ordered, Inconclusive, Violated };

std::string_view verdict_id(Verdict verdict);

/// Ordered if mean > z se (or se = 0 and mean >= 0); violated if mean < -z se.
Verdict classify(double mean, double std_error, double z_crit);

/// One-sided critical value Phi^{-1}(confidence).
double critical_value(double confidence);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
  std::size_t nonfinite = 0;
  /// First few path indices with a non-finite value.
  std::vector<std::size_t> flagged;
};

/// Streaming mean / variance with order-fixed merging.
struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double v);
  void merge(const RunningStats& other);
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const { return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

struct ExperimentSpec {
  SdeSpec x;
  SdeSpec y;
  OrderingMode mode = OrderingMode::Icv;
  /// m = 0 resolves to max(ceil(m_min), 32).
  std::size_t m = 0;
  SchemeVariant variant = SchemeVariant::PointFrozen;
  /// Empty resolves to s_default.
  std::optional<double> threshold;
  std::vector<FunctionalSpec> suite;
  std::size_t paths = 100000;
  std::uint64_t seed = 1;
  double confidence = 0.99;
  bool override_hypotheses = false;
  /// Comonotone initial laws through one shared uniform.
  bool couple_initial = true;
  /// Audit mode: Y driven by its own Gaussian stream.
  bool independent_noise = false;
  /// Scale used when mollification is inserted automatically.
  std::size_t mollify_n = 10;
  SpatialGrid estimation_grid = SpatialGrid::estimation_default();
};

/// Hypothesis validation and scheme resolution for one experiment.
struct Resolution {
  SdeSpec x;
  SdeSpec y;
  SchemeConfig scheme;
  std::vector<std::string> issues;
  std::vector<std::string> substitutions;
  bool overridden = false;
  /// "X" or "Y": the side whose constants admit the scheme, or "none".
  std::string admissible_side = "none";
  ConstantsReport constants_x;
  ConstantsReport constants_y;
  double m_min = 0.0;
  double s_default = 0.0;
};

/// Throws HypothesisViolation listing every issue unless override_hypotheses is set.
Resolution resolve_experiment(const ExperimentSpec& spec);

/// Exact check of X0 <=_icv Y0 (and equal means for cvx modes) on discrete laws.
std::vector<std::string> check_initial_order(const InitialLaw& x, const InitialLaw& y, OrderingMode mode);

struct FunctionalResult {
  std::string label;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double stderr_x = 0.0;
  double stderr_y = 0.0;
  double paired_diff_mean = 0.0;
  double paired_stderr = 0.0;
  double z_score = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  std::size_t nonfinite = 0;
  std::vector<std::size_t> flagged;
};

struct OrderingReport {
  std::string mode;
  std::size_t paths = 0;
  std::size_t m = 0;
  double threshold = 0.0;
  std::string variant;
  std::uint64_t seed = 0;
  std::string generator;
  double confidence = 0.99;
  double z_crit = 0.0;
  bool couple_initial = true;
  bool independent_noise = false;
  Resolution resolution;
  std::vector<FunctionalResult> results;

  bool any_violated() const;
};

/// Mean and CLT standard error of f over a stored panel.
MeanEstimate estimate_functional(const SamplePaths& paths, const TestFunctional& f);

/// Same, simulating paths on the fly (nothing of size N x m is stored).
MeanEstimate estimate_functional(const SdeSpec& spec, const SchemeConfig& config, const TestFunctional& f,
                                 std::size_t paths, std::uint64_t seed);

/// Paired common-noise estimates of E F(Y) - E F(X) for every suite functional.
OrderingReport compare_ordered(const ExperimentSpec& spec);

/// Runs an already resolved experiment (used by callers that resolve themselves).
OrderingReport compare_resolved(const ExperimentSpec& spec, const Resolution& resolution);

struct ValueFunctionReport {
  std::vector<double> x;
  std::vector<double> value;
  std::vector<double> value_stderr;
  /// Second differences at interior nodes x[1..n-2], paired over the noise.
  std::vector<double> second_difference;
  std::vector<double> second_stderr;
  std::vector<double> first_difference;
  std::vector<double> first_stderr;
  double z_crit = 0.0;
  double min_second_z = 0.0;
  double min_first_z = 0.0;
  /// Second differences below -z se.
  std::size_t convexity_violations = 0;
  std::size_t monotonicity_violations = 0;
};

/// v(x) = E f(X^x) on the grid with the same noise for every x.
ValueFunctionReport value_function_convexity(const SdeSpec& spec, const TestFunctional& f, const SpatialGrid& grid,
                                             const SchemeConfig& scheme, std::size_t paths, std::uint64_t seed,
                                             double confidence = 0.99);

struct SigmaConditionReport {
  double t = 0.0;
  std::size_t k = 0;
  MeanEstimate abs_sigma_x;
  MeanEstimate abs_theta_y;
  double paired_diff_mean = 0.0;
  double paired_stderr = 0.0;
  double z_score = 0.0;
};

/// E|sigma(t_k, X_{t_k})| against E|theta(t_k, Y_{t_k})| at the grid time nearest t.
SigmaConditionReport marginal_sigma_condition(const SdeSpec& x, const SdeSpec& y, double t,
                                              const SchemeConfig& scheme, std::size_t paths, std::uint64_t seed);

struct IncrementRow {
  double h = 0.0;
  double ratio = 0.0;
  double ratio_stderr = 0.0;
  double mean_abs_increment = 0.0;
  double mean_abs_sigma = 0.0;
};

/// E|X_{s+h} - X_s| / (sqrt(2h/pi) E|sigma(s, X_s)|) for each h; s and every h
/// must be multiples of the scheme step.
std::vector<IncrementRow> increment_asymptotic(const SdeSpec& spec, double s, const std::vector<double>& h_list,
                                               const SchemeConfig& scheme, std::size_t paths, std::uint64_t seed);

struct PropagationSetup {
  double lo = -8.0;
  double hi = 8.0;
  std::size_t nodes = 2001;
  /// Per-axis node count for tensor grids of 2 and 3 marginals.
  std::size_t tensor_nodes_2 = 401;
  std::size_t tensor_nodes_3 = 81;
  std::size_t quadrature_nodes = 128;
  double convexity_tolerance = 1e-8;
  double gap_tolerance = 1e-9;
  /// Fraction of the grid width excluded at each end when checking; values
  /// there feel the linear extrapolation beyond the grid.
  double check_margin = 0.25;

  double window_lo() const { return lo + check_margin * (hi - lo); }
  double window_hi() const { return hi - check_margin * (hi - lo); }
};

struct PropagationRow {
  std::string label;
  std::string kind;
  ConvexityDefect defect;
  /// min over the check window of the ordering gap (terminal functionals with a second SDE).
  std::optional<double> min_gap;
  bool convex_ok = true;
  bool monotone_ok = true;
  bool gap_ok = true;
  /// Set when the functional cannot be propagated on a grid (path functionals, d > 3).
  std::string skipped;

  bool passed() const { return convex_ok && monotone_ok && gap_ok; }
};

struct PropagationReport {
  SchemeConfig scheme;
  PropagationSetup setup;
  std::vector<PropagationRow> rows;

  bool passed() const;
};

/// Backward-inducts every suite functional on the grid: terminal ones through the
/// one-step kernel, multi-marginal ones (d <= 3) through tensor induction. Checks
/// convexity (and monotonicity for non-decreasing functionals) of the value
/// function and, when y is given, the sign of the kernel ordering gap.
PropagationReport propagate_suite(const SdeSpec& x, const std::optional<SdeSpec>& y, const SchemeConfig& scheme,
                                  const std::vector<FunctionalSpec>& suite, const PropagationSetup& setup);

struct CounterexampleSetup {
  CoefficientField sigma = CoefficientField::tent();
  double h = 0.01;
  double s = 5.0;
  /// Midpoint and the two-point spread around it.
  double left = -1.0;
  double mid = 0.0;
  double right = 1.0;
  double grid_lo = -3.0;
  double grid_hi = 3.0;
  std::size_t grid_nodes = 601;
  std::size_t quadrature_nodes = 128;
  std::size_t paths = 1000000;
  std::uint64_t seed = 1;
  double confidence = 0.99;
};

struct CounterexampleReport {
  double oracle_violation = 0.0;
  double closed_form = 0.0;
  double mc_violation = 0.0;
  double mc_stderr = 0.0;
  std::vector<double> g;  // oracle g at left, mid, right
  OrderingReport comparison;
};

/// Midpoint convexity of g(x) = E|sqrt(h) sigma(x) Z^s| by the oracle, by Monte
/// Carlo, and the two-marginal |u - v| comparison of Dirac(mid) against the
/// two-point spread.
CounterexampleReport counterexample_demo(const CounterexampleSetup& setup);

}  // namespace convord
