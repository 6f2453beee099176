// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "convord/approximation.hpp"
#include "convord/cli.hpp"
#include "convord/convergence.hpp"
#include "convord/kernel_oracle.hpp"
#include "convord/ordering_lab.hpp"
#include "convord/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace convord;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kPaths = 1000000;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

SdeSpec sde(CoefficientField drift, CoefficientField diffusion, InitialLaw initial = InitialLaw::dirac(0.0),
            double horizon = 1.0) {
  return {std::move(drift), std::move(diffusion), horizon, std::move(initial)};
}

CoefficientField abs_affine(double slope, double floor) {
  return CoefficientField::tabulated(-1.0, 1.0, {slope + floor, floor, slope + floor});
}

struct Pair {
  std::string name;
  SdeSpec x;
  SdeSpec y;
};

std::vector<Pair> propagation_pairs() {
  using CF = CoefficientField;
  const CF zero = CF::constant(0.0);
  return {
      {"const 0.2 vs 0.3", sde(zero, CF::constant(0.2)), sde(zero, CF::constant(0.3))},
      {"hyperbola 0.2 vs 0.3", sde(zero, CF::scaled_hyperbola(0.2)), sde(zero, CF::scaled_hyperbola(0.3))},
      {"ou-type drift, const vs hyperbola", sde(CF::affine(0.0, 0.1), CF::constant(0.25)),
       sde(CF::affine(0.05, 0.1), CF::scaled_hyperbola(0.25))},
      {"hyperbola drift, tabulated |x|", sde(CF::scaled_hyperbola(0.1), abs_affine(0.2, 0.1)),
       sde(CF::scaled_hyperbola(0.15), abs_affine(0.3, 0.1))},
      {"mean reverting, const vs hyperbola", sde(CF::affine(0.0, -0.5), CF::constant(0.2)),
       sde(CF::affine(0.1, -0.5), CF::scaled_hyperbola(0.2))},
      {"time-piecewise drift, cev", sde(CF::piecewise_affine({{0.0, 0.0, 0.1}, {0.5, 0.05, -0.1}}),
                                        CF::smoothed_cev(0.3, 1.0, 0.5)),
       sde(CF::piecewise_affine({{0.0, 0.05, 0.1}, {0.5, 0.1, -0.1}}), CF::smoothed_cev(0.4, 1.0, 0.5))},
  };
}

std::vector<FunctionalSpec> payoff_suite() {
  return {{"call", {-0.5}}, {"call", {0.5}}, {"softplus"}, {"exp", {0.5}}, {"identity"}};
}

Resolution resolve_icv(const Pair& p) {
  ExperimentSpec e;
  e.x = p.x;
  e.y = p.y;
  e.mode = OrderingMode::Icv;
  e.suite = payoff_suite();
  e.estimation_grid = {-20, 20, 4001};
  return resolve_experiment(e);
}

Outcome criterion_propagation() {
  Outcome o;
  double worst_second = kInf, worst_first = kInf;
  for (const auto& p : propagation_pairs()) {
    const Resolution r = resolve_icv(p);
    for (const SdeSpec* side : {&r.x, &r.y}) {
      const auto rep = propagate_suite(*side, std::nullopt, r.scheme, payoff_suite(), PropagationSetup{});
      for (const auto& row : rep.rows) {
        worst_second = std::min(worst_second, row.defect.min_second_difference);
        worst_first = std::min(worst_first, row.defect.min_first_difference);
        if (row.defect.min_second_difference < -1e-8 || row.defect.min_first_difference < -1e-8) {
          o.pass = false;
          o.detail += " [" + p.name + " " + row.label + "]";
        }
      }
    }
  }
  o.detail = fmt("6 pairs x 5 payoffs x 2 sides, min second diff %.3g, min first diff %.3g", worst_second,
                 worst_first) +
             o.detail;
  return o;
}

Outcome criterion_kernel_gap() {
  Outcome o;
  double worst = kInf;
  double strict_max = -kInf;
  const PropagationSetup setup;
  for (const auto& p : propagation_pairs()) {
    const Resolution r = resolve_icv(p);
    const auto rep = propagate_suite(r.x, r.y, r.scheme, payoff_suite(), setup);
    for (const auto& row : rep.rows) {
      if (!row.min_gap) {
        o.pass = false;
        o.detail += " [no gap for " + row.label + "]";
        continue;
      }
      worst = std::min(worst, *row.min_gap);
      if (*row.min_gap < -1e-9) {
        o.pass = false;
        o.detail += " [" + p.name + " " + row.label + fmt(" gap %.3g]", *row.min_gap);
      }
    }
    if (p.name == "const 0.2 vs 0.3") {
      const TruncatedGaussianMeasure measure = build_measure(r.scheme.threshold, setup.quadrature_nodes);
      for (const auto& fs : payoff_suite()) {
        const TestFunctional f = TestFunctional::from_spec(fs);
        if (fs.id == "identity") continue;
        const auto terminal = GridFunction::sample([&](double u) { return f(std::span<const double>(&u, 1)); },
                                                   setup.lo, setup.hi, setup.nodes);
        const GridFunction gap = kernel_ordering_gap(terminal, r.x, r.y, r.scheme, measure);
        strict_max = std::max(strict_max, *std::max_element(gap.values().begin(), gap.values().end()));
      }
    }
  }
  if (!(strict_max >= 1e-4)) o.pass = false;
  o.detail = fmt("min gap %.3g over 6 pairs; strict pair max gap %.4g", worst, strict_max) + o.detail;
  return o;
}

Outcome criterion_directional() {
  Outcome o;
  // h = 1/32 is below h_bar = 6.25 for the hyperbola.
  const SdeSpec x = sde(CoefficientField::constant(0.0), CoefficientField::scaled_hyperbola(0.2));
  const ConstantsReport c = compute_constants(x, {-20, 20, 4001});
  const SchemeConfig scheme{32, SchemeVariant::PointFrozen, default_threshold(c.lip, 1.0, 32), 1.0};
  if (!(scheme.step() <= c.h_bar)) o.pass = false;
  const std::vector<FunctionalSpec> suite{
      {"quadratic", {1, 1, 1}, "identity", "identity", {0.5, 1.0}},
      {"product", {}, "identity", "identity", {0.5, 1.0}},
      {"composite", {}, "exp", "softplus", {0.5, 1.0}},
  };
  PropagationSetup setup;
  setup.lo = -6;
  setup.hi = 6;
  const auto rep = propagate_suite(x, std::nullopt, scheme, suite, setup);
  double worst = kInf;
  for (const auto& row : rep.rows) {
    worst = std::min(worst, row.defect.min_second_difference);
    if (!row.skipped.empty() || row.defect.min_second_difference < -1e-8) o.pass = false;
  }

  // Unit diffusion: E[X_{t1} X_{t2}] = x^2 + t1 E[(Z^s)^2].
  const SdeSpec unit = sde(CoefficientField::constant(0.0), CoefficientField::constant(1.0));
  double analytic_err = 0.0;
  for (double s : {kInf, 2.0}) {
    const SchemeConfig u{16, SchemeVariant::PointFrozen, s, 1.0};
    const auto tensor = TensorGridFunction::sample([](std::span<const double> v) { return v[0] * v[1]; }, -10, 10,
                                                   401, {4, 16});
    const GridFunction g = multi_marginal_induct(tensor, unit, u, build_measure(s));
    const double t1 = u.time(4);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double xi = g.node(i);
      if (std::abs(xi) > 5.0) continue;
      analytic_err = std::max(analytic_err, std::abs(g.values()[i] - (xi * xi + t1 * truncated_second_moment(s))));
    }
  }
  if (!(analytic_err <= 1e-6)) o.pass = false;
  o.detail = fmt("h %.4g <= h_bar %.4g, min second diff %.3g, u*v max err %.3g", scheme.step(), c.h_bar, worst,
                 analytic_err);
  return o;
}

Outcome criterion_counterexample() {
  Outcome o;
  CounterexampleSetup setup;
  setup.paths = kPaths;
  const auto r = counterexample_demo(setup);
  const double expected = 0.1 * std::sqrt(2.0 / std::acos(-1.0)) * (1.0 - std::exp(-12.5));
  const bool quad_ok = std::abs(r.oracle_violation - expected) <= 1e-6;
  const bool mc_ok = std::abs(r.mc_violation - expected) <= 3.0 * r.mc_stderr;
  const bool verdict_ok = !r.comparison.results.empty() && r.comparison.results[0].verdict == Verdict::Violated;
  o.pass = quad_ok && mc_ok && verdict_ok;
  o.detail = fmt("quadrature %.12f, MC %.6f +- %.2g, expected %.12f, verdict %s", r.oracle_violation, r.mc_violation,
                 r.mc_stderr, expected,
                 r.comparison.results.empty() ? "none" : std::string(verdict_id(r.comparison.results[0].verdict)).c_str());
  return o;
}

struct McExperiment {
  std::string name;
  ExperimentSpec spec;
  /// Functionals expected to be strictly ordered (z > 3).
  std::vector<bool> strict;
};

std::vector<McExperiment> mc_matrix() {
  using CF = CoefficientField;
  using IL = InitialLaw;
  const CF zero = CF::constant(0.0);
  std::vector<McExperiment> out;
  auto add = [&](std::string name, OrderingMode mode, SdeSpec x, SdeSpec y, std::vector<FunctionalSpec> suite,
                 std::vector<bool> strict) {
    ExperimentSpec e;
    e.x = std::move(x);
    e.y = std::move(y);
    e.mode = mode;
    e.m = 256;
    e.suite = std::move(suite);
    e.paths = kPaths;
    e.seed = 20 + out.size();
    e.estimation_grid = {-20, 20, 4001};
    out.push_back({std::move(name), std::move(e), std::move(strict)});
  };
  const std::vector<double> two{0.5, 1.0};
  add("icv const 0.2 vs 0.3", OrderingMode::Icv, sde(zero, CF::constant(0.2), IL::dirac(1.0)),
      sde(zero, CF::constant(0.3), IL::dirac(1.0)),
      {{"call", {1.0}}, {"call", {1.3}}, {"softplus"}, {"exp", {0.5}}, {"identity"}},
      {true, true, true, true, false});
  add("cvx hyperbola 0.2 vs 0.3, spread start", OrderingMode::Cvx, sde(zero, CF::scaled_hyperbola(0.2), IL::dirac(0.0)),
      sde(zero, CF::scaled_hyperbola(0.3), IL::two_point(0.5, -0.5, 0.5)),
      {{"call", {0.0}}, {"put", {0.0}}, {"square"}, {"softplus"}}, {true, true, true, true});
  add("icv affine drift, const vs hyperbola", OrderingMode::Icv,
      sde(CF::affine(0.0, 0.1), CF::constant(0.25), IL::two_point(0.5, 0.0, 1.0)),
      sde(CF::affine(0.05, 0.1), CF::scaled_hyperbola(0.25), IL::two_point(0.5, 0.0, 1.2)),
      {{"call", {0.5}}, {"softplus"}, {"identity"}}, {false, false, false});
  add("diricv hyperbola drift, tabulated |x|", OrderingMode::Diricv,
      sde(CF::scaled_hyperbola(0.1), abs_affine(0.2, 0.1), IL::dirac(0.0)),
      sde(CF::scaled_hyperbola(0.15), abs_affine(0.3, 0.1), IL::dirac(0.0)),
      {{"average_call", {0.0}, "identity", "identity", {0.25, 0.5, 1.0}},
       {"composite", {}, "exp", "softplus", two},
       {"composite", {0.0}, "softplus", "call", two},
       {"call", {0.0}}},
      {false, false, false, false});
  add("dircvx mean reverting, const vs hyperbola", OrderingMode::Dircvx,
      sde(CF::affine(0.0, -0.5), CF::constant(0.2), IL::dirac(0.0)),
      sde(CF::affine(0.0, -0.5), CF::scaled_hyperbola(0.2), IL::dirac(0.0)),
      {{"product", {}, "identity", "identity", two},
       {"quadratic", {1, 1, 1}, "identity", "identity", two},
       {"composite", {}, "exp", "identity", two},
       {"running_integral", {}, "exp", "identity"}},
      {false, false, false, false});
  add("icv time-piecewise drift, cev 0.3 vs 0.4", OrderingMode::Icv,
      sde(CF::piecewise_affine({{0.0, 0.0, 0.1}, {0.5, 0.05, -0.1}}), CF::smoothed_cev(0.3, 1.0, 0.5), IL::dirac(1.0)),
      sde(CF::piecewise_affine({{0.0, 0.05, 0.1}, {0.5, 0.1, -0.1}}), CF::smoothed_cev(0.4, 1.0, 0.5),
          IL::samples({0.8, 1.2, 1.4})),
      {{"call", {1.0}}, {"softplus"}, {"exp", {0.5}}}, {true, true, true});
  add("cvx equal dynamics, spread start", OrderingMode::Cvx, sde(zero, CF::constant(0.1), IL::dirac(0.0)),
      sde(zero, CF::constant(0.1), IL::two_point(0.5, -1.0, 1.0)),
      {{"call", {0.0}}, {"put", {0.5}}, {"square"}, {"exp", {1.0}}}, {true, true, true, true});
  add("dircvx gbm 0.2 vs 0.3", OrderingMode::Dircvx, sde(zero, CF::proportional(0.2), IL::dirac(1.0)),
      sde(zero, CF::proportional(0.3), IL::dirac(1.0)),
      {{"product", {}, "identity", "identity", two},
       {"average_call", {1.0}, "identity", "identity", {0.25, 0.5, 0.75, 1.0}},
       {"composite", {}, "identity", "square", two}},
      {true, true, true});
  // theta x changes sign at 0; the positive half-line carries the GBM.
  out.back().spec.estimation_grid = {0, 20, 4001};
  add("icv tent pair (mollified)", OrderingMode::Icv, sde(zero, CF::tent(1.5, 1.0), IL::dirac(0.0)),
      sde(zero, CF::tent(2.0, 1.0), IL::dirac(0.0)), {{"call", {0.0}}, {"softplus"}}, {true, true});
  return out;
}

Outcome criterion_mc_matrix() {
  Outcome o;
  std::size_t violated = 0, strict_total = 0, strict_ok = 0, experiments = 0;
  double min_strict_z = kInf;
  bool modes[4] = {false, false, false, false};
  for (const auto& ex : mc_matrix()) {
    OrderingReport rep;
    try {
      rep = compare_ordered(ex.spec);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail += " [" + ex.name + ": " + e.what() + "]";
      continue;
    }
    ++experiments;
    modes[static_cast<int>(ex.spec.mode)] = true;
    for (std::size_t i = 0; i < rep.results.size(); ++i) {
      const auto& r = rep.results[i];
      if (r.verdict == Verdict::Violated) {
        ++violated;
        o.detail += " [violated: " + ex.name + " " + r.label + "]";
      }
      if (ex.strict[i]) {
        ++strict_total;
        min_strict_z = std::min(min_strict_z, r.z_score);
        if (r.verdict == Verdict::Ordered && r.z_score > 3.0) {
          ++strict_ok;
        } else {
          o.detail += " [weak: " + ex.name + " " + r.label + fmt(" z=%.2f]", r.z_score);
        }
      }
    }
  }
  const bool all_modes = modes[0] && modes[1] && modes[2] && modes[3];
  o.pass = experiments >= 8 && all_modes && violated == 0 && strict_ok == strict_total;
  o.detail = fmt("%zu experiments, %zu violated, strict %zu/%zu with z > 3 (min z %.1f)", experiments, violated,
                 strict_ok, strict_total, min_strict_z) +
             o.detail;
  return o;
}

Outcome criterion_gbm_price() {
  const SdeSpec gbm = sde(CoefficientField::constant(0.0), CoefficientField::proportional(0.2), InitialLaw::dirac(100));
  const SchemeConfig scheme{256, SchemeVariant::PointFrozen, default_threshold(0.2, 1.0, 256), 1.0};
  const auto est = estimate_functional(gbm, scheme, TestFunctional::from_spec({"call", {100.0}}), kPaths, 31);
  const double bs = black_scholes_call(100.0, 100.0, 0.2, 1.0);
  const double tol = std::max(3.0 * est.std_error, 0.05);
  Outcome o;
  o.pass = std::abs(est.mean - bs) <= tol;
  o.detail = fmt("MC %.5f +- %.4f, Black-Scholes %.5f, |diff| %.4f <= %.4f", est.mean, est.std_error, bs,
                 std::abs(est.mean - bs), tol);
  return o;
}

Outcome criterion_strong_rate() {
  const auto r = strong_error_rate(0.2, 1.0, 1.0, {16, 32, 64, 128, 256, 512, 1024}, 100000, 41, {});
  Outcome o;
  o.pass = !r.degenerate && r.slope >= -0.62 && r.slope <= -0.38;
  o.detail = fmt("slope %.4f +- %.4f over m = 16..1024", r.slope, r.slope_stderr);
  return o;
}

Outcome criterion_truncation() {
  const SdeSpec gbm = sde(CoefficientField::constant(0.0), CoefficientField::proportional(0.2), InitialLaw::dirac(1.0));
  const NoisePanel noise(kPaths, 100, 51);
  const auto r = truncation_event_rate(noise, 5.0, gbm);
  Outcome o;
  o.pass = r.within_bound && r.bitwise_mismatches == 0 && r.compared_panels + r.exceeding == r.paths;
  o.detail = fmt("observed %.3g (%zu panels), bound %.6g + 3 x %.2g, %zu bitwise mismatches in %zu panels", r.observed,
                 r.exceeding, r.bound, r.observed_stderr, r.bitwise_mismatches, r.compared_panels);
  return o;
}

Outcome criterion_increment() {
  const double h = std::ldexp(1.0, -10);
  const double horizon = std::ldexp(1.0, -6);
  const SdeSpec gbm =
      sde(CoefficientField::constant(0.0), CoefficientField::proportional(0.2), InitialLaw::dirac(1.0), horizon);
  const SchemeConfig scheme{16, SchemeVariant::PointFrozen, default_threshold(0.2, horizon, 16), horizon};
  const auto rows = increment_asymptotic(gbm, 0.0, {h}, scheme, kPaths, 61);
  Outcome o;
  o.pass = rows.size() == 1 && rows[0].ratio >= 0.97 && rows[0].ratio <= 1.03;
  o.detail = fmt("ratio %.5f +- %.5f at h = 2^-10", rows[0].ratio, rows[0].ratio_stderr);
  return o;
}

Outcome criterion_mollification() {
  Outcome o;
  const CoefficientField sigma = abs_affine(0.2, 0.1);
  const CoefficientField theta = abs_affine(0.2, 0.15);
  std::vector<std::vector<double>> diff, se;
  std::ostringstream os;
  for (std::size_t n : {5u, 10u, 20u}) {
    const SmoothedPair pair = build_mollified_pair(sigma, theta, n);
    const auto& sv = pair.sigma.table();
    const auto& tv = pair.theta.table();
    std::size_t bad = 0;
    for (std::size_t i = 0; i < sv.size(); ++i) {
      if (!(sv[i] >= 0.0 && sv[i] <= tv[i])) ++bad;
    }
    const double nn = static_cast<double>(n);
    const auto err = approximation_error(pair, sigma, theta, SpatialGrid::with_step(-nn, nn, kMollifiedGridStep));
    const bool err_ok = err.sup_err_sigma <= pair.error_bound_sigma() + 1e-6 &&
                        err.sup_err_theta <= pair.error_bound_theta() + 1e-6;

    ExperimentSpec e;
    e.x = sde(CoefficientField::constant(0.0), pair.sigma, InitialLaw::dirac(0.0));
    e.y = sde(CoefficientField::constant(0.0), pair.theta, InitialLaw::dirac(0.0));
    e.mode = OrderingMode::Cvx;
    e.suite = {{"call", {0.0}}, {"softplus"}, {"square"}};
    e.paths = 200000;
    e.seed = 71;
    e.estimation_grid = {-nn - 2.0, nn + 2.0, static_cast<std::size_t>(400 * (nn + 2.0)) + 1};
    const OrderingReport rep = compare_ordered(e);
    bool ordered = true;
    diff.emplace_back();
    se.emplace_back();
    for (const auto& r : rep.results) {
      ordered = ordered && r.verdict == Verdict::Ordered;
      diff.back().push_back(r.paired_diff_mean);
      se.back().push_back(r.paired_stderr);
    }
    if (bad || !err_ok || !ordered) o.pass = false;
    os << fmt(" n=%zu: err %.4f<=%.4f, %zu bad nodes, %s;", n, err.sup_err_sigma, pair.error_bound_sigma(), bad,
              ordered ? "ordered" : "NOT ordered");
  }
  for (std::size_t j = 0; j < diff[0].size(); ++j) {
    const double d1 = std::abs(diff[1][j] - diff[0][j]);
    const double d2 = std::abs(diff[2][j] - diff[1][j]);
    const double tol = 3.0 * std::hypot(se[1][j], se[2][j]);
    if (!(d2 <= d1 + tol)) {
      o.pass = false;
      os << fmt(" [not Cauchy: functional %zu, %.3g > %.3g + %.3g]", j, d2, d1, tol);
    }
  }
  o.detail = os.str().substr(1);
  return o;
}

Outcome criterion_determinism() {
  ExperimentConfig c = parse_config(R"(
sde_x:
  diffusion: {family: scaled_hyperbola, params: [0.2]}
  initial: {law: dirac, params: [0]}
sde_y:
  diffusion: {family: scaled_hyperbola, params: [0.3]}
  initial: {law: two_point, params: [0.5, -0.5, 0.5]}
mode: cvx
scheme: {m: 64}
suite:
  - {id: call, params: [0]}
  - {id: square}
  - {id: abs_diff, times: [0.5, 1]}
run: {paths: 50000, seed: 5}
grid: {lo: -10, hi: 10, nodes: 2001}
)",
                                    "determinism");
  std::vector<std::string> dumps;
  for (std::size_t threads : {1u, 8u}) {
    set_thread_count(threads);
    for (Command cmd : {Command::Compare, Command::Counterexample}) {
      ExperimentConfig cc = c;
      cc.counterexample.paths = 100000;
      dumps.push_back(canonical_dump(execute(cmd, cc).report));
    }
  }
  set_thread_count(0);
  Outcome o;
  o.pass = dumps[0] == dumps[2] && dumps[1] == dumps[3];
  o.detail = fmt("compare and counterexample reports at 1 and 8 threads: %s",
                 o.pass ? "byte-identical" : "DIFFER");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double budget_seconds;
  };
  const std::vector<Criterion> criteria{
      {1, "kernel convexity propagation", criterion_propagation, 60},
      {2, "kernel ordering gap", criterion_kernel_gap, kInf},
      {3, "directional propagation", criterion_directional, kInf},
      {4, "truncation counterexample", criterion_counterexample, 30},
      {5, "Monte Carlo ordering matrix", criterion_mc_matrix, 600},
      {6, "GBM call price", criterion_gbm_price, kInf},
      {7, "strong rate", criterion_strong_rate, 300},
      {8, "truncation tail", criterion_truncation, kInf},
      {9, "increment asymptotic", criterion_increment, kInf},
      {10, "mollification pipeline", criterion_mollification, kInf},
      {11, "thread-count determinism", criterion_determinism, kInf},
  };
  // Optional arguments select criteria by number.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failures = 0;
  std::size_t ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail += fmt(" [over budget %.0f s]", c.budget_seconds);
    }
    if (!o.pass) ++failures;
    std::printf("%s %2d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, ran);
  return failures == 0 ? 0 : 1;
}
