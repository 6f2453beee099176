#include "convord/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace convord {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const YAML::Node& node, const std::string& path, const std::string& msg) {
  std::ostringstream os;
  if (node.Mark().line >= 0) os << "line " << node.Mark().line + 1 << ": ";
  os << path << ": " << msg;
  throw ConfigError(os.str());
}

void require_map(const YAML::Node& node, const std::string& path) {
  if (!node.IsMap()) fail(node, path, "expected a table");
}

void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) {
  require_map(node, path);
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      fail(kv.first, path.empty() ? key : path + "." + key, "unknown key");
    }
  }
}

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

std::string scalar(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) fail(node, path, "expected a scalar");
  return node.Scalar();
}

double to_double(const YAML::Node& node, const std::string& path) {
  std::string s = scalar(node, path);
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "inf" || lower == "+inf" || lower == ".inf" || lower == "+.inf") return kInf;
  if (lower == "-inf" || lower == "-.inf") return -kInf;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    fail(node, path, "expected a number, got '" + s + "'");
  }
  if (used != s.size()) fail(node, path, "expected a number, got '" + s + "'");
  return v;
}

std::uint64_t to_u64(const YAML::Node& node, const std::string& path) {
  const std::string s = scalar(node, path);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    fail(node, path, "expected a non-negative integer, got '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    fail(node, path, "integer out of range");
  }
}

bool to_bool(const YAML::Node& node, const std::string& path) {
  const std::string s = scalar(node, path);
  if (s == "true") return true;
  if (s == "false") return false;
  fail(node, path, "expected true or false, got '" + s + "'");
}

std::vector<double> to_doubles(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) fail(node, path, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(to_double(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

template <class F>
void with(const YAML::Node& parent, const std::string& path, const char* key, F&& fn) {
  const YAML::Node node = parent[key];
  if (node) fn(node, join(path, key));
}

FieldConfig parse_field(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"family", "params"});
  FieldConfig f;
  if (!node["family"]) fail(node, path, "missing 'family'");
  f.family = scalar(node["family"], join(path, "family"));
  f.params.clear();
  with(node, path, "params", [&](const YAML::Node& n, const std::string& p) { f.params = to_doubles(n, p); });
  try {
    f.build();
  } catch (const std::invalid_argument& e) {
    fail(node, path, e.what());
  }
  return f;
}

LawConfig parse_law(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"law", "params"});
  LawConfig l;
  if (!node["law"]) fail(node, path, "missing 'law'");
  l.law = scalar(node["law"], join(path, "law"));
  l.params.clear();
  with(node, path, "params", [&](const YAML::Node& n, const std::string& p) { l.params = to_doubles(n, p); });
  try {
    l.build();
  } catch (const std::invalid_argument& e) {
    fail(node, path, e.what());
  }
  return l;
}

SdeConfig parse_sde(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"drift", "diffusion", "initial"});
  SdeConfig s;
  with(node, path, "drift", [&](const YAML::Node& n, const std::string& p) { s.drift = parse_field(n, p); });
  if (!node["diffusion"]) fail(node, path, "missing 'diffusion'");
  s.diffusion = parse_field(node["diffusion"], join(path, "diffusion"));
  with(node, path, "initial", [&](const YAML::Node& n, const std::string& p) { s.initial = parse_law(n, p); });
  return s;
}

FunctionalSpec parse_functional(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"id", "params", "psi", "phi", "times"});
  FunctionalSpec f;
  if (!node["id"]) fail(node, path, "missing 'id'");
  f.id = scalar(node["id"], join(path, "id"));
  with(node, path, "params", [&](const YAML::Node& n, const std::string& p) { f.params = to_doubles(n, p); });
  with(node, path, "psi", [&](const YAML::Node& n, const std::string& p) { f.psi = scalar(n, p); });
  with(node, path, "phi", [&](const YAML::Node& n, const std::string& p) { f.phi = scalar(n, p); });
  with(node, path, "times", [&](const YAML::Node& n, const std::string& p) { f.marginal_times = to_doubles(n, p); });
  try {
    TestFunctional::from_spec(f);
  } catch (const std::invalid_argument& e) {
    fail(node, path, e.what());
  }
  return f;
}

ExperimentConfig parse_root(const YAML::Node& root) {
  ExperimentConfig c;
  if (!root || root.IsNull()) return c;
  check_keys(root, "", {"sde_x", "sde_y", "scheme", "mode", "suite", "run", "grid", "output", "simulate", "propagate",
                        "converge", "counterexample"});
  with(root, "", "sde_x", [&](const YAML::Node& n, const std::string& p) { c.sde_x = parse_sde(n, p); });
  with(root, "", "sde_y", [&](const YAML::Node& n, const std::string& p) { c.sde_y = parse_sde(n, p); });
  with(root, "", "scheme", [&](const YAML::Node& n, const std::string& p) {
    check_keys(n, p, {"m", "variant", "threshold", "horizon"});
    with(n, p, "m", [&](const YAML::Node& v, const std::string& q) {
      if (v.IsScalar() && v.Scalar() == "auto") {
        c.scheme.m.reset();
      } else {
        c.scheme.m = to_u64(v, q);
        if (*c.scheme.m == 0) fail(v, q, "must be >= 1");
      }
    });
    with(n, p, "variant", [&](const YAML::Node& v, const std::string& q) {
      c.scheme.variant = scalar(v, q);
      try {
        parse_variant(c.scheme.variant);
      } catch (const std::invalid_argument& e) {
        fail(v, q, e.what());
      }
    });
    with(n, p, "threshold", [&](const YAML::Node& v, const std::string& q) {
      if (v.IsScalar() && v.Scalar() == "auto") {
        c.scheme.threshold.reset();
      } else {
        c.scheme.threshold = to_double(v, q);
        if (!(*c.scheme.threshold >= 0.0)) fail(v, q, "must be >= 0");
      }
    });
    with(n, p, "horizon", [&](const YAML::Node& v, const std::string& q) {
      c.scheme.horizon = to_double(v, q);
      if (!(c.scheme.horizon > 0.0) || !std::isfinite(c.scheme.horizon)) fail(v, q, "must be positive");
    });
  });
  with(root, "", "mode", [&](const YAML::Node& n, const std::string& p) {
    c.mode = scalar(n, p);
    try {
      parse_mode(c.mode);
    } catch (const std::invalid_argument& e) {
      fail(n, p, e.what());
    }
  });
  with(root, "", "suite", [&](const YAML::Node& n, const std::string& p) {
    if (!n.IsSequence()) fail(n, p, "expected a list of functionals");
    for (std::size_t i = 0; i < n.size(); ++i) c.suite.push_back(parse_functional(n[i], p + "[" + std::to_string(i) + "]"));
  });
  with(root, "", "run", [&](const YAML::Node& n, const std::string& p) {
    check_keys(n, p,
               {"paths", "seed", "confidence", "couple_initial", "independent_noise", "override_hypotheses", "mollify_n"});
    RunSection& r = c.run;
    with(n, p, "paths", [&](const YAML::Node& v, const std::string& q) { r.paths = to_u64(v, q); });
    with(n, p, "seed", [&](const YAML::Node& v, const std::string& q) { r.seed = to_u64(v, q); });
    with(n, p, "confidence", [&](const YAML::Node& v, const std::string& q) {
      r.confidence = to_double(v, q);
      if (!(r.confidence > 0.5 && r.confidence < 1.0)) fail(v, q, "must lie in (0.5, 1)");
    });
    with(n, p, "couple_initial", [&](const YAML::Node& v, const std::string& q) { r.couple_initial = to_bool(v, q); });
    with(n, p, "independent_noise",
         [&](const YAML::Node& v, const std::string& q) { r.independent_noise = to_bool(v, q); });
    with(n, p, "override_hypotheses",
         [&](const YAML::Node& v, const std::string& q) { r.override_hypotheses = to_bool(v, q); });
    with(n, p, "mollify_n", [&](const YAML::Node& v, const std::string& q) {
      r.mollify_n = to_u64(v, q);
      if (r.mollify_n == 0) fail(v, q, "must be >= 1");
    });
    if (r.paths < 2) fail(n, join(p, "paths"), "need at least 2 paths");
  });
  with(root, "", "grid", [&](const YAML::Node& n, const std::string& p) {
    check_keys(n, p, {"lo", "hi", "nodes"});
    with(n, p, "lo", [&](const YAML::Node& v, const std::string& q) { c.grid.lo = to_double(v, q); });
    with(n, p, "hi", [&](const YAML::Node& v, const std::string& q) { c.grid.hi = to_double(v, q); });
    with(n, p, "nodes", [&](const YAML::Node& v, const std::string& q) { c.grid.nodes = to_u64(v, q); });
    if (!(c.grid.lo < c.grid.hi) || c.grid.nodes < 3) fail(n, p, "need lo < hi and at least 3 nodes");
  });
  with(root, "", "output", [&](const YAML::Node& n, const std::string& p) {
    check_keys(n, p, {"directory", "formats"});
    with(n, p, "directory", [&](const YAML::Node& v, const std::string& q) { c.output.directory = scalar(v, q); });
    with(n, p, "formats", [&](const YAML::Node& v, const std::string& q) {
      if (!v.IsSequence()) fail(v, q, "expected a list");
      c.output.formats.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string f = scalar(v[i], q);
        if (f != "json" && f != "csv") fail(v[i], q, "unknown format '" + f + "'");
        c.output.formats.push_back(f);
      }
    });
  });
  with(root, "", "simulate", [&](const YAML::Node& n, const std::string& p) {
    check_keys(n, p, {"format"});
    with(n, p, "format", [&](const YAML::Node& v, const std::string& q) {
      c.simulate.format = scalar(v, q);
      if (c.simulate.format != "binary" && c.simulate.format != "csv") fail(v, q, "expected binary or csv");
    });
  });
  with(root, "", "propagate", [&](const YAML::Node& n, const std::string& p) {
    check_keys(n, p, {"lo", "hi", "nodes", "quadrature_nodes", "convexity_tolerance", "gap_tolerance", "check_margin"});
    PropagateSection& s = c.propagate;
    with(n, p, "lo", [&](const YAML::Node& v, const std::string& q) { s.lo = to_double(v, q); });
    with(n, p, "hi", [&](const YAML::Node& v, const std::string& q) { s.hi = to_double(v, q); });
    with(n, p, "nodes", [&](const YAML::Node& v, const std::string& q) { s.nodes = to_u64(v, q); });
    with(n, p, "quadrature_nodes", [&](const YAML::Node& v, const std::string& q) { s.quadrature_nodes = to_u64(v, q); });
    with(n, p, "convexity_tolerance",
         [&](const YAML::Node& v, const std::string& q) { s.convexity_tolerance = to_double(v, q); });
    with(n, p, "gap_tolerance", [&](const YAML::Node& v, const std::string& q) { s.gap_tolerance = to_double(v, q); });
    with(n, p, "check_margin", [&](const YAML::Node& v, const std::string& q) {
      s.check_margin = to_double(v, q);
      if (!(s.check_margin >= 0.0 && s.check_margin < 0.5)) fail(v, q, "must lie in [0, 0.5)");
    });
    if (s.lo.has_value() != s.hi.has_value()) fail(n, p, "give both lo and hi or neither");
  });
  with(root, "", "converge", [&](const YAML::Node& n, const std::string& p) {
    check_keys(n, p,
               {"theta", "x0", "horizon", "m_list", "paths", "policy", "policy_value", "slope_lo", "slope_hi",
                "truncation_m", "truncation_s", "truncation_paths"});
    ConvergeSection& s = c.converge;
    with(n, p, "theta", [&](const YAML::Node& v, const std::string& q) { s.theta = to_double(v, q); });
    with(n, p, "x0", [&](const YAML::Node& v, const std::string& q) { s.x0 = to_double(v, q); });
    with(n, p, "horizon", [&](const YAML::Node& v, const std::string& q) { s.horizon = to_double(v, q); });
    with(n, p, "m_list", [&](const YAML::Node& v, const std::string& q) {
      if (!v.IsSequence()) fail(v, q, "expected a list of step counts");
      s.m_list.clear();
      for (std::size_t i = 0; i < v.size(); ++i) s.m_list.push_back(to_u64(v[i], q));
    });
    with(n, p, "paths", [&](const YAML::Node& v, const std::string& q) { s.paths = to_u64(v, q); });
    with(n, p, "policy", [&](const YAML::Node& v, const std::string& q) {
      s.policy = scalar(v, q);
      try {
        parse_policy(s.policy);
      } catch (const std::invalid_argument& e) {
        fail(v, q, e.what());
      }
    });
    with(n, p, "policy_value", [&](const YAML::Node& v, const std::string& q) { s.policy_value = to_double(v, q); });
    with(n, p, "slope_lo", [&](const YAML::Node& v, const std::string& q) { s.slope_lo = to_double(v, q); });
    with(n, p, "slope_hi", [&](const YAML::Node& v, const std::string& q) { s.slope_hi = to_double(v, q); });
    with(n, p, "truncation_m", [&](const YAML::Node& v, const std::string& q) { s.truncation_m = to_u64(v, q); });
    with(n, p, "truncation_s", [&](const YAML::Node& v, const std::string& q) { s.truncation_s = to_double(v, q); });
    with(n, p, "truncation_paths",
         [&](const YAML::Node& v, const std::string& q) { s.truncation_paths = to_u64(v, q); });
    if (s.m_list.size() < 2) fail(n, join(p, "m_list"), "need at least two step counts");
  });
  with(root, "", "counterexample", [&](const YAML::Node& n, const std::string& p) {
    check_keys(n, p,
               {"height", "width", "h", "s", "left", "mid", "right", "grid_lo", "grid_hi", "grid_nodes",
                "quadrature_nodes", "paths"});
    CounterexampleSection& s = c.counterexample;
    with(n, p, "height", [&](const YAML::Node& v, const std::string& q) { s.height = to_double(v, q); });
    with(n, p, "width", [&](const YAML::Node& v, const std::string& q) { s.width = to_double(v, q); });
    with(n, p, "h", [&](const YAML::Node& v, const std::string& q) { s.h = to_double(v, q); });
    with(n, p, "s", [&](const YAML::Node& v, const std::string& q) { s.s = to_double(v, q); });
    with(n, p, "left", [&](const YAML::Node& v, const std::string& q) { s.left = to_double(v, q); });
    with(n, p, "mid", [&](const YAML::Node& v, const std::string& q) { s.mid = to_double(v, q); });
    with(n, p, "right", [&](const YAML::Node& v, const std::string& q) { s.right = to_double(v, q); });
    with(n, p, "grid_lo", [&](const YAML::Node& v, const std::string& q) { s.grid_lo = to_double(v, q); });
    with(n, p, "grid_hi", [&](const YAML::Node& v, const std::string& q) { s.grid_hi = to_double(v, q); });
    with(n, p, "grid_nodes", [&](const YAML::Node& v, const std::string& q) { s.grid_nodes = to_u64(v, q); });
    with(n, p, "quadrature_nodes", [&](const YAML::Node& v, const std::string& q) { s.quadrature_nodes = to_u64(v, q); });
    with(n, p, "paths", [&](const YAML::Node& v, const std::string& q) { s.paths = to_u64(v, q); });
  });
  return c;
}

}  // namespace

CoefficientField FieldConfig::build() const { return CoefficientField::from_registry(family, params); }

InitialLaw LawConfig::build() const { return InitialLaw::from_registry(law, params); }

SdeSpec SdeConfig::build(double horizon) const { return {drift.build(), diffusion.build(), horizon, initial.build()}; }

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  try {
    return parse_root(root);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return parse_config(os.str(), path);
}

std::optional<double> parse_threshold(const std::string& text) {
  if (text == "auto") return std::nullopt;
  const YAML::Node node(text);
  const double v = to_double(node, "--threshold");
  if (!(v >= 0.0)) throw ConfigError("--threshold: must be >= 0");
  return v;
}

SpatialGrid estimation_grid(const ExperimentConfig& config) { return {config.grid.lo, config.grid.hi, config.grid.nodes}; }

ExperimentSpec to_experiment(const ExperimentConfig& config) {
  if (!config.sde_x || !config.sde_y) throw ConfigError("compare needs both sde_x and sde_y");
  ExperimentSpec spec;
  spec.x = config.sde_x->build(config.scheme.horizon);
  spec.y = config.sde_y->build(config.scheme.horizon);
  spec.mode = parse_mode(config.mode);
  spec.m = config.scheme.m.value_or(0);
  spec.variant = parse_variant(config.scheme.variant);
  spec.threshold = config.scheme.threshold;
  spec.suite = config.suite;
  spec.paths = config.run.paths;
  spec.seed = config.run.seed;
  spec.confidence = config.run.confidence;
  spec.override_hypotheses = config.run.override_hypotheses;
  spec.couple_initial = config.run.couple_initial;
  spec.independent_noise = config.run.independent_noise;
  spec.mollify_n = config.run.mollify_n;
  spec.estimation_grid = estimation_grid(config);
  return spec;
}

}  // namespace convord
