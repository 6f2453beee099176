#pragma once

#include "convord/convergence.hpp"
#include "convord/ordering_lab.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace convord {

/// Schema violation; the message carries "line N" and the offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldConfig {
  std::string family = "constant";
  std::vector<double> params{0.0};

  CoefficientField build() const;
};

struct LawConfig {
  std::string law = "dirac";
  std::vector<double> params{0.0};

  InitialLaw build() const;
};

struct SdeConfig {
  FieldConfig drift;
  FieldConfig diffusion;
  LawConfig initial;

  SdeSpec build(double horizon) const;
};

struct SchemeSection {
  /// Empty = auto.
  std::optional<std::size_t> m;
  std::string variant = "point_frozen";
  /// Empty = auto.
  std::optional<double> threshold;
  double horizon = 1.0;
};

struct RunSection {
  std::size_t paths = 100000;
  std::uint64_t seed = 1;
  double confidence = 0.99;
  bool couple_initial = true;
  bool independent_noise = false;
  bool override_hypotheses = false;
  std::size_t mollify_n = 10;
};

struct GridSection {
  double lo = -20.0;
  double hi = 20.0;
  std::size_t nodes = 40001;
};

struct OutputSection {
  std::string directory = "out";
  std::vector<std::string> formats{"json", "csv"};
};

struct SimulateSection {
  /// "binary" or "csv".
  std::string format = "binary";
};

struct PropagateSection {
  /// Empty bounds: +-8 max(1, |E X0|) around E X0.
  std::optional<double> lo;
  std::optional<double> hi;
  std::size_t nodes = 2001;
  std::size_t quadrature_nodes = 128;
  double convexity_tolerance = 1e-8;
  double gap_tolerance = 1e-9;
  double check_margin = 0.25;
};

struct ConvergeSection {
  double theta = 0.2;
  double x0 = 1.0;
  double horizon = 1.0;
  std::vector<std::size_t> m_list{16, 32, 64, 128, 256, 512, 1024};
  /// Empty: run.paths.
  std::optional<std::size_t> paths;
  std::string policy = "default";
  double policy_value = 2.0;
  double slope_lo = -0.62;
  double slope_hi = -0.38;
  std::size_t truncation_m = 100;
  double truncation_s = 5.0;
  std::optional<std::size_t> truncation_paths;
};

struct CounterexampleSection {
  double height = 2.0;
  double width = 1.0;
  double h = 0.01;
  double s = 5.0;
  double left = -1.0;
  double mid = 0.0;
  double right = 1.0;
  double grid_lo = -3.0;
  double grid_hi = 3.0;
  std::size_t grid_nodes = 601;
  std::size_t quadrature_nodes = 128;
  std::optional<std::size_t> paths;
};

struct ExperimentConfig {
  std::optional<SdeConfig> sde_x;
  std::optional<SdeConfig> sde_y;
  SchemeSection scheme;
  std::string mode = "icv";
  std::vector<FunctionalSpec> suite;
  RunSection run;
  GridSection grid;
  OutputSection output;
  SimulateSection simulate;
  PropagateSection propagate;
  ConvergeSection converge;
  CounterexampleSection counterexample;
};

/// Parses a YAML document (JSON is accepted too). Unknown keys, wrong types and
/// unknown registry ids raise ConfigError.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Accepts "auto" (empty), a number, or inf.
std::optional<double> parse_threshold(const std::string& text);

SpatialGrid estimation_grid(const ExperimentConfig& config);

/// Needs sde_x and sde_y.
ExperimentSpec to_experiment(const ExperimentConfig& config);

}  // namespace convord
