#include "convord/report.hpp"

#include "convord/parallel.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef CONVORD_GIT_DESCRIBE
#define CONVORD_GIT_DESCRIBE "unknown"
#endif

namespace convord {
namespace {

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

Json to_json(const ConstantEstimate& e) {
  return {{"value", number(e.value)}, {"grid_estimate", number(e.grid_estimate)}, {"exact", e.exact}};
}

Json to_json(const SdeConfig& s) {
  return {{"drift", {{"family", s.drift.family}, {"params", numbers(s.drift.params)}}},
          {"diffusion", {{"family", s.diffusion.family}, {"params", numbers(s.diffusion.params)}}},
          {"initial", {{"law", s.initial.law}, {"params", numbers(s.initial.params)}}}};
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string git_describe() { return CONVORD_GIT_DESCRIBE; }

Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  if (c.sde_x) j["sde_x"] = to_json(*c.sde_x);
  if (c.sde_y) j["sde_y"] = to_json(*c.sde_y);
  j["scheme"] = {{"m", c.scheme.m ? Json(*c.scheme.m) : Json("auto")},
                 {"variant", c.scheme.variant},
                 {"threshold", c.scheme.threshold ? number(*c.scheme.threshold) : Json("auto")},
                 {"horizon", number(c.scheme.horizon)}};
  j["mode"] = c.mode;
  Json suite = Json::array();
  for (const auto& f : c.suite) {
    suite.push_back({{"id", f.id},
                     {"params", numbers(f.params)},
                     {"psi", f.psi},
                     {"phi", f.phi},
                     {"times", numbers(f.marginal_times)}});
  }
  j["suite"] = suite;
  j["run"] = {{"paths", c.run.paths},
              {"seed", c.run.seed},
              {"confidence", number(c.run.confidence)},
              {"couple_initial", c.run.couple_initial},
              {"independent_noise", c.run.independent_noise},
              {"override_hypotheses", c.run.override_hypotheses},
              {"mollify_n", c.run.mollify_n}};
  j["grid"] = {{"lo", number(c.grid.lo)}, {"hi", number(c.grid.hi)}, {"nodes", c.grid.nodes}};
  j["output"] = {{"directory", c.output.directory}, {"formats", c.output.formats}};
  j["simulate"] = {{"format", c.simulate.format}};
  Json prop = {{"nodes", c.propagate.nodes},
               {"quadrature_nodes", c.propagate.quadrature_nodes},
               {"convexity_tolerance", number(c.propagate.convexity_tolerance)},
               {"gap_tolerance", number(c.propagate.gap_tolerance)},
               {"check_margin", number(c.propagate.check_margin)}};
  if (c.propagate.lo) prop["lo"] = number(*c.propagate.lo);
  if (c.propagate.hi) prop["hi"] = number(*c.propagate.hi);
  j["propagate"] = prop;
  const ConvergeSection& cv = c.converge;
  Json conv = {{"theta", number(cv.theta)},   {"x0", number(cv.x0)},
               {"horizon", number(cv.horizon)}, {"m_list", cv.m_list},
               {"policy", cv.policy},          {"policy_value", number(cv.policy_value)},
               {"slope_lo", number(cv.slope_lo)}, {"slope_hi", number(cv.slope_hi)},
               {"truncation_m", cv.truncation_m}, {"truncation_s", number(cv.truncation_s)}};
  if (cv.paths) conv["paths"] = *cv.paths;
  if (cv.truncation_paths) conv["truncation_paths"] = *cv.truncation_paths;
  j["converge"] = conv;
  const CounterexampleSection& ce = c.counterexample;
  Json cex = {{"height", number(ce.height)},   {"width", number(ce.width)},     {"h", number(ce.h)},
              {"s", number(ce.s)},             {"left", number(ce.left)},       {"mid", number(ce.mid)},
              {"right", number(ce.right)},     {"grid_lo", number(ce.grid_lo)}, {"grid_hi", number(ce.grid_hi)},
              {"grid_nodes", ce.grid_nodes}, {"quadrature_nodes", ce.quadrature_nodes}};
  if (ce.paths) cex["paths"] = *ce.paths;
  j["counterexample"] = cex;
  return j;
}

Json to_json(const ConstantsReport& r) {
  return {{"lip", number(r.lip)},
          {"sup_at_zero", number(r.sup_at_zero)},
          {"a_sigma", number(r.a_sigma)},
          {"c_b", number(r.c_b)},
          {"c_sigma", number(r.c_sigma)},
          {"m_min", number(r.m_min)},
          {"h_bar", number(r.h_bar)},
          {"horizon", number(r.horizon)},
          {"lip_detail", to_json(r.lip_detail)},
          {"a_sigma_detail", to_json(r.a_sigma_detail)},
          {"c_b_detail", to_json(r.c_b_detail)},
          {"grid", r.grid_descriptor}};
}

Json to_json(const Resolution& r) {
  return {{"m", r.scheme.m},
          {"threshold", number(r.scheme.threshold)},
          {"variant", std::string(variant_id(r.scheme.variant))},
          {"horizon", number(r.scheme.horizon)},
          {"m_min", number(r.m_min)},
          {"s_default", number(r.s_default)},
          {"admissible_side", r.admissible_side},
          {"overridden", r.overridden},
          {"issues", r.issues},
          {"substitutions", r.substitutions},
          {"constants_x", to_json(r.constants_x)},
          {"constants_y", to_json(r.constants_y)}};
}

Json to_json(const OrderingReport& r) {
  Json results = Json::array();
  for (const auto& f : r.results) {
    results.push_back({{"label", f.label},
                       {"mean_x", number(f.mean_x)},
                       {"stderr_x", number(f.stderr_x)},
                       {"mean_y", number(f.mean_y)},
                       {"stderr_y", number(f.stderr_y)},
                       {"paired_diff_mean", number(f.paired_diff_mean)},
                       {"paired_stderr", number(f.paired_stderr)},
                       {"z_score", number(f.z_score)},
                       {"verdict", std::string(verdict_id(f.verdict))},
                       {"nonfinite", f.nonfinite},
                       {"flagged_paths", f.flagged}});
  }
  return {{"mode", r.mode},
          {"paths", r.paths},
          {"m", r.m},
          {"threshold", number(r.threshold)},
          {"variant", r.variant},
          {"seed", r.seed},
          {"generator", r.generator},
          {"confidence", number(r.confidence)},
          {"z_crit", number(r.z_crit)},
          {"couple_initial", r.couple_initial},
          {"independent_noise", r.independent_noise},
          {"resolution", to_json(r.resolution)},
          {"results", results}};
}

Json to_json(const RateReport& r) {
  return {{"m_list", r.m_list},
          {"thresholds", numbers(r.thresholds)},
          {"error", numbers(r.error)},
          {"error_stderr", numbers(r.error_stderr)},
          {"slope", number(r.slope)},
          {"slope_stderr", number(r.slope_stderr)},
          {"intercept", number(r.intercept)},
          {"residuals", numbers(r.residuals)},
          {"degenerate", r.degenerate},
          {"paths", r.paths},
          {"seed", r.seed}};
}

Json to_json(const TruncationReport& r) {
  return {{"paths", r.paths},
          {"steps", r.steps},
          {"threshold", number(r.threshold)},
          {"exceeding", r.exceeding},
          {"observed", number(r.observed)},
          {"observed_stderr", number(r.observed_stderr)},
          {"bound", number(r.bound)},
          {"within_bound", r.within_bound},
          {"compared_panels", r.compared_panels},
          {"bitwise_mismatches", r.bitwise_mismatches}};
}

Json to_json(const CounterexampleReport& r) {
  return {{"oracle_violation", number(r.oracle_violation)},
          {"closed_form", number(r.closed_form)},
          {"mc_violation", number(r.mc_violation)},
          {"mc_stderr", number(r.mc_stderr)},
          {"g", numbers(r.g)},
          {"comparison", to_json(r.comparison)}};
}

Json to_json(const ConvexityDefect& d) {
  return {{"min_second_difference", number(d.min_second_difference)},
          {"min_curvature", number(d.min_curvature)},
          {"argmin_second", number(d.argmin_second)},
          {"min_first_difference", number(d.min_first_difference)},
          {"argmin_first", number(d.argmin_first)}};
}

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header.size()) throw std::invalid_argument("CsvTable: row width differs from header");
  rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_field(cells[i]);
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

CsvTable ordering_csv(const OrderingReport& r) {
  CsvTable t;
  t.header = {"label", "mode", "mean_x", "stderr_x", "mean_y", "stderr_y", "paired_diff_mean", "paired_stderr",
              "z_score", "verdict", "nonfinite"};
  for (const auto& f : r.results) {
    t.add({f.label, r.mode, csv_number(f.mean_x), csv_number(f.stderr_x), csv_number(f.mean_y),
           csv_number(f.stderr_y), csv_number(f.paired_diff_mean), csv_number(f.paired_stderr),
           csv_number(f.z_score), std::string(verdict_id(f.verdict)), std::to_string(f.nonfinite)});
  }
  return t;
}

Json assemble_report(const std::string& command, const std::string& status, Json results, Json config_echo) {
  Json j;
  j["command"] = command;
  j["status"] = status;
  j["git_describe"] = git_describe();
  j["results"] = std::move(results);
  j["config"] = std::move(config_echo);
  j["run_info"] = {{"timestamp", timestamp()}, {"threads", thread_count()}};
  return j;
}

std::string canonical_dump(const Json& report) {
  Json copy = report;
  copy.erase("run_info");
  return copy.dump(2);
}

std::string stability_hash(const Json& report) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_dump(report)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> write_reports(Json report, const CsvTable& csv, const std::string& directory,
                                       const std::string& stem, const std::vector<std::string>& formats) {
  std::filesystem::create_directories(directory);
  if (report.contains("run_info")) report["run_info"]["stability_hash"] = stability_hash(report);
  std::vector<std::string> written;
  for (const auto& f : formats) {
    const std::string path = (std::filesystem::path(directory) / (stem + "." + f)).string();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    if (f == "json") {
      os << report.dump(2) << '\n';
    } else if (f == "csv") {
      os << csv.str();
    } else {
      throw std::invalid_argument("unknown report format '" + f + "'");
    }
    if (!os) throw std::runtime_error("write failed: " + path);
    written.push_back(path);
  }
  return written;
}

}  // namespace convord
