#pragma once

#include "convord/coefficients.hpp"
#include "convord/euler.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace convord {

/// E|Z^s| = sqrt(2/pi) (1 - exp(-s^2/2)).
double truncated_abs_moment(double s);
/// E[(Z^s)^2] = erf(s/sqrt 2) - 2 s phi(s).
double truncated_second_moment(double s);
/// P(|G| > s).
double truncated_atom_mass(double s);

/// Law of Z^s = G 1{|G| <= s}: symmetric quadrature nodes on [-s, s] plus an
/// atom of mass P(|G| > s) at zero.
struct TruncatedGaussianMeasure {
  double s = 0.0;
  std::vector<double> nodes;
  std::vector<double> weights;
  double atom_mass = 1.0;

  double total_mass() const;
  double mean() const;
  double abs_mean() const;
  double second_moment() const;
};

/// n_nodes Gauss-Legendre nodes split evenly over [-s, 0] and [0, s]. The
/// split puts a rule edge on the kink of |z| so E|Z^s| is exact too.
TruncatedGaussianMeasure build_measure(double s, std::size_t n_nodes = 128);

/// Values on a uniform grid. Between nodes the interpolant is the chord minus
/// a minmod-limited curvature term: exact for quadratics, and convex (resp.
/// non-decreasing) whenever the node values are. Outside the grid it extends
/// linearly with the end-cell slopes, clamped to slope_bound when given.
class GridFunction {
 public:
  GridFunction(double lo, double hi, std::vector<double> values, std::optional<double> slope_bound = {});

  template <class F>
  static GridFunction sample(F&& f, double lo, double hi, std::size_t nodes,
                             std::optional<double> slope_bound = {}) {
    std::vector<double> v(nodes);
    const double dx = (hi - lo) / static_cast<double>(nodes - 1);
    for (std::size_t i = 0; i < nodes; ++i) v[i] = f(lo + static_cast<double>(i) * dx);
    return GridFunction(lo, hi, std::move(v), slope_bound);
  }

  std::size_t size() const { return values_.size(); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double step() const { return dx_; }
  double node(std::size_t i) const { return lo_ + static_cast<double>(i) * dx_; }
  const std::vector<double>& values() const { return values_; }
  std::optional<double> slope_bound() const { return slope_bound_; }
  bool contains(double x) const { return x >= lo_ && x <= hi_; }

  double operator()(double x) const;

 private:
  double lo_;
  double hi_;
  double dx_;
  std::vector<double> values_;
  std::vector<double> curvature_;
  std::optional<double> slope_bound_;
  double left_slope_ = 0.0;
  double right_slope_ = 0.0;
};

/// [center - 8 scale, center + 8 scale] with 2001 nodes.
SpatialGrid default_oracle_grid(double center, double scale);

/// x + h beta + sqrt(h) sigma z.
double one_step_map(double x, double z, double beta, double sigma, double h);

/// One scheme step as a function of the spatial point.
struct StepMap {
  std::function<StepCoefficients(double)> coefficients;
  double h = 0.0;

  double operator()(double x, double z) const;
};

/// Step k of the scheme, with the variant's effective coefficients.
StepMap scheme_step_map(const SdeSpec& spec, const SchemeConfig& config, std::size_t k);
StepMap make_step_map(std::function<double(double)> beta, std::function<double(double)> sigma, double h);

struct KernelDiagnostics {
  /// Evaluations that fell outside the grid and used the linear extension.
  std::size_t extrapolations = 0;
  std::size_t evaluations = 0;
};

/// (P f)(x_i) = p0 f(E(x_i, 0)) + sum_j w_j f(E(x_i, z_j)).
GridFunction kernel_step(const GridFunction& f, const StepMap& map, const TruncatedGaussianMeasure& measure,
                         KernelDiagnostics* diagnostics = nullptr);

/// x -> E f(X_T^x) as P_0 ... P_{m-1} f.
GridFunction backward_induct_terminal(const GridFunction& f, const SdeSpec& spec, const SchemeConfig& config,
                                      const TruncatedGaussianMeasure& measure,
                                      KernelDiagnostics* diagnostics = nullptr);
/// Same, with the measure built from config.threshold.
GridFunction backward_induct_terminal(const GridFunction& f, const SdeSpec& spec, const SchemeConfig& config,
                                      KernelDiagnostics* diagnostics = nullptr);

/// f(u_1, ..., u_d) sampled on the d-fold tensor power of a uniform grid,
/// row-major with u_d fastest. steps[j] is the scheme step index of marginal j.
struct TensorGridFunction {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t nodes = 0;
  std::size_t dimension = 0;
  std::vector<double> values;
  std::vector<std::size_t> steps;

  double node(std::size_t i) const { return lo + static_cast<double>(i) * (hi - lo) / static_cast<double>(nodes - 1); }

  static TensorGridFunction sample(const std::function<double(std::span<const double>)>& f, double lo, double hi,
                                   std::size_t nodes, std::vector<std::size_t> steps);
};

class UnsupportedDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// x -> E f(X_{t_{k_1}}^x, ..., X_{t_{k_d}}^x) for d <= 3, by backward induction
/// in the current coordinate and collapsing onto the diagonal at each marginal time.
GridFunction multi_marginal_induct(const TensorGridFunction& f, const SdeSpec& spec, const SchemeConfig& config,
                                   const TruncatedGaussianMeasure& measure,
                                   KernelDiagnostics* diagnostics = nullptr);

struct ConvexityDefect {
  /// min_i v_{i+1} - 2 v_i + v_{i-1}.
  double min_second_difference = 0.0;
  /// Same divided by dx^2.
  double min_curvature = 0.0;
  double argmin_second = 0.0;
  /// min_i v_{i+1} - v_i.
  double min_first_difference = 0.0;
  double argmin_first = 0.0;
};

/// Finite-difference defects over nodes inside [window_lo, window_hi].
ConvexityDefect grid_convexity_defect(const GridFunction& g, double window_lo = -1e300, double window_hi = 1e300);

/// P^{(beta, theta)} f - P^{(b, sigma)} f after full backward induction.
/// Throws HypothesisViolation when b > beta or sigma not in [0, theta] on the grid.
GridFunction kernel_ordering_gap(const GridFunction& f, const SdeSpec& spec_x, const SdeSpec& spec_y,
                                 const SchemeConfig& config, const TruncatedGaussianMeasure& measure,
                                 KernelDiagnostics* diagnostics = nullptr);

/// CSV with header "x,value".
void write_csv(const GridFunction& g, const std::string& filename);

}  // namespace convord
