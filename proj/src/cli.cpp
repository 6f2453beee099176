#include "convord/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <stdexcept>

namespace convord {
namespace {

struct SingleResolution {
  SchemeConfig scheme;
  ConstantsReport constants;
  double s_default = 0.0;
  std::vector<std::string> issues;
};

SingleResolution resolve_single(const SdeSpec& spec, const ExperimentConfig& c) {
  SingleResolution r;
  r.constants = compute_constants(spec, estimation_grid(c));
  const double m_min = r.constants.m_min;
  std::size_t m_floor = 1;
  if (std::isfinite(m_min)) {
    m_floor = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(m_min * (1.0 - 1e-12))));
  } else {
    r.issues.push_back("minimal step count is infinite (a_sigma = inf or c_b = inf)");
  }
  const std::size_t m = c.scheme.m.value_or(std::max<std::size_t>(m_floor, 32));
  if (m < m_floor) r.issues.push_back("m = " + std::to_string(m) + " is below the minimal step count");
  r.s_default = default_threshold(r.constants.lip, c.scheme.horizon, m);
  const double s = c.scheme.threshold.value_or(r.s_default);
  if (s > r.s_default * (1.0 + 1e-12)) r.issues.push_back("threshold exceeds s_default");
  r.scheme = {m, parse_variant(c.scheme.variant), s, c.scheme.horizon};
  r.scheme.validate();
  return r;
}

Json scheme_json(const SchemeConfig& s) {
  return {{"m", s.m},
          {"threshold", number(s.threshold)},
          {"variant", std::string(variant_id(s.variant))},
          {"horizon", number(s.horizon)}};
}

const SdeConfig& need_x(const ExperimentConfig& c) {
  if (!c.sde_x) throw ConfigError("this command needs an sde_x section");
  return *c.sde_x;
}

CommandResult run_constants(const ExperimentConfig& c) {
  CommandResult out;
  out.csv.header = {"sde", "metric", "value"};
  Json results;
  auto one = [&](const char* name, const SdeConfig& sc) {
    const SdeSpec spec = sc.build(c.scheme.horizon);
    const SingleResolution r = resolve_single(spec, c);
    const SchemeBounds b = derive_scheme_bounds(r.constants, c.scheme.horizon, r.scheme.m);
    Json j = to_json(r.constants);
    j["admissible_step_root"] = number(admissible_step_root(r.constants.c_sigma, r.constants.c_b));
    j["scheme"] = scheme_json(r.scheme);
    j["s_default"] = number(b.s_default);
    j["issues"] = r.issues;
    results[name] = j;
    const std::pair<const char*, double> rows[] = {
        {"lip", r.constants.lip},         {"sup_at_zero", r.constants.sup_at_zero}, {"a_sigma", r.constants.a_sigma},
        {"c_b", r.constants.c_b},         {"c_sigma", r.constants.c_sigma},         {"m_min", b.m_min},
        {"h_bar", b.h_bar},               {"s_default", b.s_default},               {"m", double(r.scheme.m)}};
    for (const auto& [k, v] : rows) out.csv.add({name, k, csv_number(v)});
  };
  one("sde_x", need_x(c));
  if (c.sde_y) one("sde_y", *c.sde_y);
  out.report = std::move(results);
  return out;
}

CommandResult run_simulate(const ExperimentConfig& c) {
  const SdeSpec spec = need_x(c).build(c.scheme.horizon);
  const SingleResolution r = resolve_single(spec, c);
  const NoisePanel noise(c.run.paths, r.scheme.m, c.run.seed);
  const SamplePaths paths = simulate_batch(spec, r.scheme, noise);
  std::filesystem::create_directories(c.output.directory);
  const std::string file = c.simulate.format == "csv" ? "paths.csv" : "paths.bin";
  const std::string target = (std::filesystem::path(c.output.directory) / file).string();
  if (c.simulate.format == "csv") {
    write_csv(paths, target);
  } else {
    write_binary(paths, target);
  }
  RunningStats terminal;
  for (std::size_t n = 0; n < paths.paths(); ++n) terminal.push(paths(n, r.scheme.m));
  CommandResult out;
  out.report = {{"scheme", scheme_json(r.scheme)},
                {"paths", paths.paths()},
                {"seed", c.run.seed},
                {"generator", std::string(kGeneratorId)},
                {"file", file},
                {"terminal_mean", number(terminal.mean)},
                {"terminal_stderr", number(terminal.std_error())},
                {"issues", r.issues}};
  out.csv.header = {"metric", "value"};
  out.csv.add({"terminal_mean", csv_number(terminal.mean)});
  out.csv.add({"terminal_stderr", csv_number(terminal.std_error())});
  return out;
}

CommandResult run_compare(const ExperimentConfig& c) {
  const OrderingReport r = compare_ordered(to_experiment(c));
  CommandResult out;
  out.report = to_json(r);
  out.csv = ordering_csv(r);
  out.passed = !r.any_violated();
  return out;
}

CommandResult run_propagate(const ExperimentConfig& c) {
  const SdeSpec x_raw = need_x(c).build(c.scheme.horizon);
  SdeSpec x = x_raw;
  std::optional<SdeSpec> y;
  SchemeConfig scheme;
  Json resolution;
  if (c.sde_y) {
    const Resolution r = resolve_experiment(to_experiment(c));
    x = r.x;
    y = r.y;
    scheme = r.scheme;
    resolution = to_json(r);
  } else {
    const SingleResolution r = resolve_single(x, c);
    if (!r.issues.empty() && !c.run.override_hypotheses) {
      std::string msg = "hypotheses not satisfied:";
      for (const auto& issue : r.issues) msg += "\n  - " + issue;
      throw HypothesisViolation(msg);
    }
    scheme = r.scheme;
    resolution = {{"scheme", scheme_json(scheme)}, {"issues", r.issues}, {"constants_x", to_json(r.constants)}};
  }
  PropagationSetup setup;
  if (c.propagate.lo) {
    setup.lo = *c.propagate.lo;
    setup.hi = *c.propagate.hi;
  } else {
    const double center = x.initial.mean();
    const SpatialGrid g = default_oracle_grid(center, std::max(1.0, std::abs(center)));
    setup.lo = g.lo;
    setup.hi = g.hi;
  }
  setup.nodes = c.propagate.nodes;
  setup.quadrature_nodes = c.propagate.quadrature_nodes;
  setup.convexity_tolerance = c.propagate.convexity_tolerance;
  setup.gap_tolerance = c.propagate.gap_tolerance;
  setup.check_margin = c.propagate.check_margin;
  const PropagationReport p = propagate_suite(x, y, scheme, c.suite, setup);

  CommandResult out;
  out.csv.header = {"label", "kind", "min_second_difference", "min_first_difference", "min_gap", "passed", "skipped"};
  Json rows = Json::array();
  for (const auto& row : p.rows) {
    rows.push_back({{"label", row.label},
                    {"kind", row.kind},
                    {"defect", to_json(row.defect)},
                    {"min_gap", row.min_gap ? number(*row.min_gap) : Json(nullptr)},
                    {"convex_ok", row.convex_ok},
                    {"monotone_ok", row.monotone_ok},
                    {"gap_ok", row.gap_ok},
                    {"skipped", row.skipped}});
    out.csv.add({row.label, row.kind, csv_number(row.defect.min_second_difference),
                 csv_number(row.defect.min_first_difference), row.min_gap ? csv_number(*row.min_gap) : "",
                 row.passed() ? "true" : "false", row.skipped});
  }
  out.report = {{"resolution", resolution},
                {"grid",
                 {{"lo", number(setup.lo)},
                  {"hi", number(setup.hi)},
                  {"nodes", setup.nodes},
                  {"window", {number(setup.window_lo()), number(setup.window_hi())}}}},
                {"rows", rows}};
  out.passed = p.passed();
  return out;
}

CommandResult run_converge(const ExperimentConfig& c) {
  const ConvergeSection& s = c.converge;
  const ThresholdPolicy policy{parse_policy(s.policy), s.policy_value};
  const std::size_t paths = s.paths.value_or(c.run.paths);
  const RateReport rate = strong_error_rate(s.theta, s.x0, s.horizon, s.m_list, paths, c.run.seed, policy);
  const SdeSpec gbm{CoefficientField::constant(0.0), CoefficientField::proportional(s.theta), s.horizon,
                    InitialLaw::dirac(s.x0)};
  const NoisePanel noise(s.truncation_paths.value_or(c.run.paths), s.truncation_m, c.run.seed);
  const TruncationReport trunc = truncation_event_rate(noise, s.truncation_s, gbm);
  const auto w1 = terminal_w1(s.theta, s.x0, s.horizon, s.m_list, paths, c.run.seed, policy);

  const bool slope_ok = rate.degenerate
                            ? std::all_of(rate.error.begin(), rate.error.end(), [](double e) { return e == 0.0; })
                            : (rate.slope >= s.slope_lo && rate.slope <= s.slope_hi);
  const bool trunc_ok = trunc.within_bound && trunc.bitwise_mismatches == 0;

  CommandResult out;
  Json w1_rows = Json::array();
  for (const auto& row : w1) {
    w1_rows.push_back({{"m", row.m}, {"threshold", number(row.threshold)}, {"w1", number(row.w1)}});
  }
  out.report = {{"strong_rate", to_json(rate)},
                {"slope_interval", {number(s.slope_lo), number(s.slope_hi)}},
                {"slope_ok", slope_ok},
                {"truncation", to_json(trunc)},
                {"truncation_ok", trunc_ok},
                {"terminal_w1", w1_rows}};
  out.csv.header = {"metric", "m", "value", "stderr"};
  for (std::size_t i = 0; i < rate.m_list.size(); ++i) {
    out.csv.add({"strong_error", std::to_string(rate.m_list[i]), csv_number(rate.error[i]),
                 csv_number(rate.error_stderr[i])});
  }
  out.csv.add({"slope", "", csv_number(rate.slope), csv_number(rate.slope_stderr)});
  out.csv.add({"truncation_observed", std::to_string(trunc.steps), csv_number(trunc.observed),
               csv_number(trunc.observed_stderr)});
  out.csv.add({"truncation_bound", std::to_string(trunc.steps), csv_number(trunc.bound), ""});
  for (const auto& row : w1) out.csv.add({"terminal_w1", std::to_string(row.m), csv_number(row.w1), ""});
  out.passed = slope_ok && trunc_ok;
  return out;
}

CommandResult run_counterexample(const ExperimentConfig& c) {
  const CounterexampleSection& s = c.counterexample;
  CounterexampleSetup setup;
  setup.sigma = CoefficientField::tent(s.height, s.width);
  setup.h = s.h;
  setup.s = s.s;
  setup.left = s.left;
  setup.mid = s.mid;
  setup.right = s.right;
  setup.grid_lo = s.grid_lo;
  setup.grid_hi = s.grid_hi;
  setup.grid_nodes = s.grid_nodes;
  setup.quadrature_nodes = s.quadrature_nodes;
  setup.paths = s.paths.value_or(c.run.paths);
  setup.seed = c.run.seed;
  setup.confidence = c.run.confidence;
  const CounterexampleReport r = counterexample_demo(setup);
  CommandResult out;
  out.report = to_json(r);
  out.csv = ordering_csv(r.comparison);
  out.passed = !r.comparison.any_violated();
  return out;
}

}  // namespace

std::string_view command_id(Command command) {
  switch (command) {
    case Command::Constants: return "constants";
    case Command::Simulate: return "simulate";
    case Command::Compare: return "compare";
    case Command::Propagate: return "propagate";
    case Command::Converge: return "converge";
    case Command::Counterexample: return "counterexample";
  }
  return "constants";
}

const std::vector<std::string>& command_ids() {
  static const std::vector<std::string> ids{"constants", "simulate", "compare", "propagate", "converge",
                                            "counterexample"};
  return ids;
}

Command parse_command(std::string_view id) {
  for (Command c : {Command::Constants, Command::Simulate, Command::Compare, Command::Propagate, Command::Converge,
                    Command::Counterexample}) {
    if (command_id(c) == id) return c;
  }
  throw std::invalid_argument("unknown command '" + std::string(id) + "'");
}

void apply_overrides(ExperimentConfig& config, const Overrides& o) {
  if (o.seed) config.run.seed = *o.seed;
  if (o.paths) {
    if (*o.paths < 2) throw ConfigError("--paths: need at least 2 paths");
    config.run.paths = *o.paths;
    config.converge.paths.reset();
    config.converge.truncation_paths.reset();
    config.counterexample.paths.reset();
  }
  if (o.steps) {
    if (*o.steps == 0) throw ConfigError("--steps: must be >= 1");
    config.scheme.m = *o.steps;
  }
  if (o.threshold) config.scheme.threshold = parse_threshold(*o.threshold);
  if (o.override_hypotheses) config.run.override_hypotheses = true;
  if (o.out) config.output.directory = *o.out;
  if (o.formats) {
    for (const auto& f : *o.formats) {
      if (f != "json" && f != "csv") throw ConfigError("--format: unknown format '" + f + "'");
    }
    config.output.formats = *o.formats;
  }
}

CommandResult execute(Command command, const ExperimentConfig& config) {
  CommandResult r;
  switch (command) {
    case Command::Constants: r = run_constants(config); break;
    case Command::Simulate: r = run_simulate(config); break;
    case Command::Compare: r = run_compare(config); break;
    case Command::Propagate: r = run_propagate(config); break;
    case Command::Converge: r = run_converge(config); break;
    case Command::Counterexample: r = run_counterexample(config); break;
  }
  r.report = assemble_report(std::string(command_id(command)), r.passed ? "pass" : "fail", std::move(r.report),
                             to_json(config));
  return r;
}

int exit_code(const CommandResult& result) { return result.passed ? kExitOk : kExitViolated; }

int run(Command command, const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const CommandResult r = execute(command, config);
    const auto files =
        write_reports(r.report, r.csv, config.output.directory, std::string(command_id(command)), config.output.formats);
    for (const auto& f : files) out << "wrote " << f << '\n';
    out << command_id(command) << ": " << (r.passed ? "pass" : "fail") << '\n';
    return exit_code(r);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace convord
