#include "convord/kernel_oracle.hpp"

#include "convord/parallel.hpp"
#include "convord/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace convord {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Beyond this the normal density is below 1e-31; nodes past it carry no weight.
constexpr double kQuadratureCap = 12.0;
constexpr std::size_t kNodeChunk = 256;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double minmod(double a, double b) {
  if (a > 0.0 && b > 0.0) return std::min(a, b);
  if (a < 0.0 && b < 0.0) return std::max(a, b);
  return 0.0;
}

// Per-node data for one step: E(x_i, z) = base[i] + spread[i] z.
struct StepNodes {
  std::vector<double> base;
  std::vector<double> spread;
};

StepNodes step_nodes(const StepMap& map, double lo, double dx, std::size_t n) {
  StepNodes out{std::vector<double>(n), std::vector<double>(n)};
  const double sqrt_h = std::sqrt(map.h);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + static_cast<double>(i) * dx;
    const StepCoefficients c = map.coefficients(x);
    out.base[i] = x + map.h * c.drift;
    out.spread[i] = sqrt_h * c.diffusion;
  }
  return out;
}

struct Counts {
  std::size_t outside = 0;
  std::size_t total = 0;
};

void apply_kernel(const GridFunction& f, const StepNodes& nodes, const TruncatedGaussianMeasure& measure,
                  std::size_t begin, std::size_t end, std::span<double> out, Counts& counts) {
  const std::size_t q = measure.nodes.size();
  for (std::size_t i = begin; i < end; ++i) {
    const double y0 = nodes.base[i];
    const double c = nodes.spread[i];
    double acc = 0.0;
    if (measure.atom_mass > 0.0) {
      acc += measure.atom_mass * f(y0);
      counts.outside += f.contains(y0) ? 0 : 1;
      ++counts.total;
    }
    for (std::size_t j = 0; j < q; ++j) {
      const double y = y0 + c * measure.nodes[j];
      acc += measure.weights[j] * f(y);
      counts.outside += f.contains(y) ? 0 : 1;
    }
    counts.total += q;
    out[i] = acc;
  }
}

void add(KernelDiagnostics* diagnostics, const std::vector<Counts>& counts) {
  if (diagnostics == nullptr) return;
  for (const auto& c : counts) {
    diagnostics->extrapolations += c.outside;
    diagnostics->evaluations += c.total;
  }
}

}  // namespace

double truncated_abs_moment(double s) {
  if (s < 0.0) throw std::invalid_argument("truncated_abs_moment: s < 0");
  return std::sqrt(2.0 / std::numbers::pi) * (1.0 - std::exp(-0.5 * s * s));
}

double truncated_second_moment(double s) {
  if (s < 0.0) throw std::invalid_argument("truncated_second_moment: s < 0");
  if (std::isinf(s)) return 1.0;
  return std::erf(s / std::numbers::sqrt2) - 2.0 * s * normal_pdf(s);
}

double truncated_atom_mass(double s) {
  if (s < 0.0) throw std::invalid_argument("truncated_atom_mass: s < 0");
  return std::erfc(s / std::numbers::sqrt2);
}

double TruncatedGaussianMeasure::total_mass() const {
  double acc = atom_mass;
  for (double w : weights) acc += w;
  return acc;
}

double TruncatedGaussianMeasure::mean() const {
  double acc = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) acc += weights[j] * nodes[j];
  return acc;
}

double TruncatedGaussianMeasure::abs_mean() const {
  double acc = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) acc += weights[j] * std::abs(nodes[j]);
  return acc;
}

double TruncatedGaussianMeasure::second_moment() const {
  double acc = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) acc += weights[j] * nodes[j] * nodes[j];
  return acc;
}

TruncatedGaussianMeasure build_measure(double s, std::size_t n_nodes) {
  if (!(s >= 0.0)) throw std::invalid_argument("build_measure: threshold must be >= 0");
  if (n_nodes < 2 || n_nodes % 2 != 0) throw std::invalid_argument("build_measure: n_nodes must be even and >= 2");
  TruncatedGaussianMeasure m;
  m.s = s;
  m.atom_mass = truncated_atom_mass(s);
  if (s == 0.0) {
    m.atom_mass = 1.0;
    return m;
  }
  const std::size_t half = n_nodes / 2;
  const double edge = std::min(s, kQuadratureCap);
  const QuadratureRule& rule = gauss_legendre(half);
  std::vector<double> z(half);
  std::vector<double> w(half);
  double side = 0.0;
  for (std::size_t j = 0; j < half; ++j) {
    z[j] = 0.5 * edge * (1.0 + rule.nodes[j]);
    w[j] = 0.5 * edge * rule.weights[j] * normal_pdf(z[j]);
    side += w[j];
  }
  const double target = 0.5 * std::erf(s / std::numbers::sqrt2);
  for (double& v : w) v *= target / side;
  m.nodes.reserve(n_nodes);
  m.weights.reserve(n_nodes);
  for (std::size_t j = half; j-- > 0;) {
    m.nodes.push_back(-z[j]);
    m.weights.push_back(w[j]);
  }
  for (std::size_t j = 0; j < half; ++j) {
    m.nodes.push_back(z[j]);
    m.weights.push_back(w[j]);
  }
  return m;
}

GridFunction::GridFunction(double lo, double hi, std::vector<double> values, std::optional<double> slope_bound)
    : lo_(lo), hi_(hi), values_(std::move(values)), slope_bound_(slope_bound) {
  const std::size_t n = values_.size();
  if (n < 2) throw std::invalid_argument("GridFunction: need at least 2 nodes");
  if (!(hi > lo)) throw std::invalid_argument("GridFunction: empty interval");
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("GridFunction: non-finite value");
  }
  dx_ = (hi - lo) / static_cast<double>(n - 1);
  std::vector<double> d2(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) d2[i] = values_[i + 1] - 2.0 * values_[i] + values_[i - 1];
  curvature_.resize(n - 1);
  for (std::size_t i = 1; i + 2 < n; ++i) curvature_[i] = minmod(d2[i], d2[i + 1]);
  if (n >= 3) {
    // End cells borrow the neighbouring curvature, capped so the piece stays monotone.
    auto capped = [](double c, double delta) { return std::clamp(c, -2.0 * std::abs(delta), 2.0 * std::abs(delta)); };
    curvature_[0] = capped(d2[1], values_[1] - values_[0]);
    curvature_[n - 2] = capped(d2[n - 2], values_[n - 1] - values_[n - 2]);
  }
  left_slope_ = (values_[1] - values_[0]) / dx_;
  right_slope_ = (values_[n - 1] - values_[n - 2]) / dx_;
  if (slope_bound_) {
    left_slope_ = std::clamp(left_slope_, -*slope_bound_, *slope_bound_);
    right_slope_ = std::clamp(right_slope_, -*slope_bound_, *slope_bound_);
  }
}

double GridFunction::operator()(double x) const {
  const std::size_t n = values_.size();
  if (x < lo_) return values_[0] + left_slope_ * (x - lo_);
  if (x > hi_) return values_[n - 1] + right_slope_ * (x - hi_);
  const double pos = (x - lo_) / dx_;
  const double r = std::nearbyint(pos);
  if (std::abs(pos - r) <= 1e-12 * std::max(1.0, pos)) return values_[static_cast<std::size_t>(r)];
  const std::size_t i = std::min(static_cast<std::size_t>(pos), n - 2);
  const double u = pos - static_cast<double>(i);
  return values_[i] + u * (values_[i + 1] - values_[i]) - 0.5 * curvature_[i] * u * (1.0 - u);
}

SpatialGrid default_oracle_grid(double center, double scale) {
  return {center - 8.0 * scale, center + 8.0 * scale, 2001};
}

double one_step_map(double x, double z, double beta, double sigma, double h) {
  return x + h * beta + std::sqrt(h) * sigma * z;
}

double StepMap::operator()(double x, double z) const {
  const StepCoefficients c = coefficients(x);
  return one_step_map(x, z, c.drift, c.diffusion, h);
}

StepMap scheme_step_map(const SdeSpec& spec, const SchemeConfig& config, std::size_t k) {
  return {[spec, config, k](double x) { return effective_coefficients(spec, config, k, x); }, config.step()};
}

StepMap make_step_map(std::function<double(double)> beta, std::function<double(double)> sigma, double h) {
  return {[beta = std::move(beta), sigma = std::move(sigma)](double x) {
            return StepCoefficients{beta(x), sigma(x)};
          },
          h};
}

GridFunction kernel_step(const GridFunction& f, const StepMap& map, const TruncatedGaussianMeasure& measure,
                         KernelDiagnostics* diagnostics) {
  const std::size_t n = f.size();
  const StepNodes nodes = step_nodes(map, f.lo(), f.step(), n);
  std::vector<double> out(n);
  const std::size_t chunks = block_count(n, kNodeChunk);
  std::vector<Counts> counts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    apply_kernel(f, nodes, measure, c * kNodeChunk, std::min(n, (c + 1) * kNodeChunk), out, counts[c]);
  });
  add(diagnostics, counts);
  return GridFunction(f.lo(), f.hi(), std::move(out), f.slope_bound());
}

GridFunction backward_induct_terminal(const GridFunction& f, const SdeSpec& spec, const SchemeConfig& config,
                                      const TruncatedGaussianMeasure& measure, KernelDiagnostics* diagnostics) {
  config.validate();
  GridFunction g = f;
  for (std::size_t k = config.m; k-- > 0;) g = kernel_step(g, scheme_step_map(spec, config, k), measure, diagnostics);
  return g;
}

GridFunction backward_induct_terminal(const GridFunction& f, const SdeSpec& spec, const SchemeConfig& config,
                                      KernelDiagnostics* diagnostics) {
  return backward_induct_terminal(f, spec, config, build_measure(config.threshold), diagnostics);
}

TensorGridFunction TensorGridFunction::sample(const std::function<double(std::span<const double>)>& f, double lo,
                                              double hi, std::size_t nodes, std::vector<std::size_t> steps) {
  TensorGridFunction out;
  out.lo = lo;
  out.hi = hi;
  out.nodes = nodes;
  out.dimension = steps.size();
  out.steps = std::move(steps);
  std::size_t total = 1;
  for (std::size_t j = 0; j < out.dimension; ++j) total *= nodes;
  out.values.resize(total);
  std::vector<double> point(out.dimension);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (std::size_t j = out.dimension; j-- > 0;) {
      point[j] = out.node(rest % nodes);
      rest /= nodes;
    }
    out.values[flat] = f(point);
  }
  return out;
}

GridFunction multi_marginal_induct(const TensorGridFunction& f, const SdeSpec& spec, const SchemeConfig& config,
                                   const TruncatedGaussianMeasure& measure, KernelDiagnostics* diagnostics) {
  config.validate();
  const std::size_t d = f.dimension;
  if (d == 0 || d > 3) throw UnsupportedDimension("multi_marginal_induct: dimension must be 1, 2 or 3");
  if (f.steps.size() != d) throw std::invalid_argument("multi_marginal_induct: one step index per marginal");
  for (std::size_t j = 0; j < d; ++j) {
    if (f.steps[j] > config.m) throw std::invalid_argument("multi_marginal_induct: marginal step beyond m");
    if (j > 0 && f.steps[j] <= f.steps[j - 1]) {
      throw std::invalid_argument("multi_marginal_induct: marginal steps must increase");
    }
  }
  const std::size_t n = f.nodes;
  std::size_t expected = 1;
  for (std::size_t j = 0; j < d; ++j) expected *= n;
  if (f.values.size() != expected) throw std::invalid_argument("multi_marginal_induct: values size mismatch");

  const double dx = (f.hi - f.lo) / static_cast<double>(n - 1);
  std::vector<double> cur = f.values;
  std::size_t j = d;
  std::size_t k = f.steps[d - 1];
  while (true) {
    const std::size_t k_prev = j >= 2 ? f.steps[j - 2] : 0;
    for (std::size_t step = k; step-- > k_prev;) {
      const StepNodes nodes = step_nodes(scheme_step_map(spec, config, step), f.lo, dx, n);
      const std::size_t prefixes = cur.size() / n;
      std::vector<double> next(cur.size());
      std::vector<Counts> counts(prefixes);
      parallel_for(prefixes, [&](std::size_t p) {
        const GridFunction g(f.lo, f.hi, std::vector<double>(cur.begin() + p * n, cur.begin() + (p + 1) * n));
        apply_kernel(g, nodes, measure, 0, n, std::span<double>(next.data() + p * n, n), counts[p]);
      });
      add(diagnostics, counts);
      cur = std::move(next);
    }
    if (j == 1) break;
    std::vector<double> collapsed(cur.size() / n);
    const std::size_t outer = collapsed.size() / n;
    for (std::size_t q = 0; q < outer; ++q) {
      for (std::size_t x = 0; x < n; ++x) collapsed[q * n + x] = cur[(q * n + x) * n + x];
    }
    cur = std::move(collapsed);
    --j;
    k = k_prev;
  }
  return GridFunction(f.lo, f.hi, std::move(cur));
}

ConvexityDefect grid_convexity_defect(const GridFunction& g, double window_lo, double window_hi) {
  const std::size_t n = g.size();
  if (n < 3) throw std::invalid_argument("grid_convexity_defect: need at least 3 nodes");
  const auto& v = g.values();
  ConvexityDefect out;
  out.min_second_difference = kInf;
  out.min_first_difference = kInf;
  auto inside = [&](std::size_t i) { return g.node(i) >= window_lo && g.node(i) <= window_hi; };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (inside(i) && inside(i + 1)) {
      const double d1 = v[i + 1] - v[i];
      if (d1 < out.min_first_difference) {
        out.min_first_difference = d1;
        out.argmin_first = g.node(i);
      }
    }
    if (i >= 1 && inside(i - 1) && inside(i + 1)) {
      const double d2 = v[i + 1] - 2.0 * v[i] + v[i - 1];
      if (d2 < out.min_second_difference) {
        out.min_second_difference = d2;
        out.argmin_second = g.node(i);
      }
    }
  }
  out.min_curvature = out.min_second_difference / (g.step() * g.step());
  return out;
}

GridFunction kernel_ordering_gap(const GridFunction& f, const SdeSpec& spec_x, const SdeSpec& spec_y,
                                 const SchemeConfig& config, const TruncatedGaussianMeasure& measure,
                                 KernelDiagnostics* diagnostics) {
  config.validate();
  TimeGrid times;
  for (std::size_t k = 0; k < config.m; ++k) times.push_back(config.time(k));
  const SpatialGrid grid{f.lo(), f.hi(), f.size()};
  const DominationCheck check = check_domination(spec_x, spec_y, grid, times);
  if (!check.holds()) throw HypothesisViolation("kernel_ordering_gap: " + check.describe());
  const GridFunction gx = backward_induct_terminal(f, spec_x, config, measure, diagnostics);
  const GridFunction gy = backward_induct_terminal(f, spec_y, config, measure, diagnostics);
  std::vector<double> gap(f.size());
  for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = gy.values()[i] - gx.values()[i];
  return GridFunction(f.lo(), f.hi(), std::move(gap));
}

void write_csv(const GridFunction& g, const std::string& filename) {
  std::ofstream os(filename);
  if (!os) throw std::runtime_error("cannot open " + filename);
  os << "x,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < g.size(); ++i) os << g.node(i) << ',' << g.values()[i] << '\n';
}

}  // namespace convord
