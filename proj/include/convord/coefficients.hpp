#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace convord {

/// Raised when a coefficient evaluates to a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(double t, double x, const std::string& field);
  double t() const { return t_; }
  double x() const { return x_; }

 private:
  double t_;
  double x_;
};

/// An ordering hypothesis does not hold; message lists the offending points.
class HypothesisViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform spatial grid lo = x_0 < ... < x_{nodes-1} = hi.
struct SpatialGrid {
  double lo = -20.0;
  double hi = 20.0;
  std::size_t nodes = 40001;

  double step() const { return (hi - lo) / static_cast<double>(nodes - 1); }
  double node(std::size_t i) const { return lo + static_cast<double>(i) * step(); }
  std::string describe() const;

  static SpatialGrid with_step(double lo, double hi, double dx);
  /// [-20, 20] with dx = 1e-3.
  static SpatialGrid estimation_default() { return {}; }
};

using TimeGrid = std::vector<double>;

/// {kT/64 : k = 0..64}.
TimeGrid default_time_grid(double horizon);

enum class Family { Constant, Affine, Proportional, ScaledHyperbola, Tent, SmoothedCev, Tabulated };

std::string_view family_id(Family family);
Family parse_family(std::string_view id);

/// Constants a registry family knows in closed form. Missing entries fall back
/// to grid estimation.
struct KnownConstants {
  std::optional<double> lipschitz;
  /// Least a >= 0 with f^2 + a x^2 convex (may be +inf).
  std::optional<double> square_semiconvexity;
  /// Least c >= 0 with f + c x non-decreasing.
  std::optional<double> monotonicity_defect;
  double sup_at_zero = 0.0;
  bool convex = false;
  bool affine = false;
};

/// One time slice of a piecewise-constant-in-time affine coefficient
/// lambda + mu x, active on [start, next start).
struct AffinePiece {
  double start = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
};

/// A coefficient f(t, x) drawn from a fixed registry of families.
///
/// Registry parameter layouts (what config files carry):
///   constant          [c]
///   affine            [lambda, mu] or [lambda0, mu0, t1, lambda1, mu1, t2, ...]
///   proportional      [theta]                         theta x
///   scaled_hyperbola  [theta]                         theta sqrt(1 + x^2)
///   tent              [] or [height, width]           height - min(|x|, width)
///   smoothed_cev      [theta, eps, p], 0 < p <= 1     theta (eps^2 + x^2)^(p/2)
///   tabulated         [x_lo, dx, v_0, ..., v_{n-1}]   linear interpolation,
///                                                     linear extension with end slopes
class CoefficientField {
 public:
  static CoefficientField constant(double c);
  static CoefficientField affine(double lambda, double mu);
  static CoefficientField piecewise_affine(std::vector<AffinePiece> pieces);
  static CoefficientField proportional(double theta);
  static CoefficientField scaled_hyperbola(double theta);
  static CoefficientField tent(double height = 2.0, double width = 1.0);
  static CoefficientField smoothed_cev(double theta, double eps, double p);
  static CoefficientField tabulated(double x_lo, double dx, std::vector<double> values);
  static CoefficientField from_registry(std::string_view id, std::span<const double> params);

  Family family() const { return family_; }
  const std::vector<double>& params() const { return params_; }

  double operator()(double t, double x) const;

  /// (1/(t1-t0)) * integral of f(s, x) over [t0, t1].
  double step_mean(double t0, double t1, double x) const;
  /// sqrt((1/(t1-t0)) * integral of f(s, x)^2 over [t0, t1]).
  double step_rms(double t0, double t1, double x) const;

  bool has_closed_time_integrals() const { return closed_integrals_; }
  /// Same field, but step_mean / step_rms use 16-node Gauss-Legendre in time.
  CoefficientField without_closed_time_integrals() const;

  bool time_dependent() const { return pieces_.size() > 1; }
  /// Start times of the time pieces (just {0} for autonomous fields).
  std::vector<double> time_breakpoints() const;

  const KnownConstants& known() const { return known_; }

  /// Tabulated fields only: grid and node values.
  double table_lo() const { return table_lo_; }
  double table_step() const { return table_dx_; }
  const std::vector<double>& table() const { return table_; }

  friend bool operator==(const CoefficientField& a, const CoefficientField& b) {
    return a.family_ == b.family_ && a.params_ == b.params_;
  }

 private:
  CoefficientField(Family family, std::vector<double> params);
  double eval_space(std::size_t piece, double x) const;
  std::size_t piece_at(double t) const;

  Family family_;
  std::vector<double> params_;
  std::vector<AffinePiece> pieces_;
  double table_lo_ = 0.0;
  double table_dx_ = 0.0;
  std::vector<double> table_;
  bool closed_integrals_ = true;
  KnownConstants known_;
};

/// Initial law of an SDE: Dirac, two-point mixture or an equal-weight sample table.
class InitialLaw {
 public:
  enum class Kind { Dirac, TwoPoint, Samples };

  static InitialLaw dirac(double x0);
  /// weight * delta_x + (1 - weight) * delta_y.
  static InitialLaw two_point(double weight, double x, double y);
  static InitialLaw samples(std::vector<double> values);
  static InitialLaw from_registry(std::string_view id, std::span<const double> params);

  Kind kind() const { return kind_; }
  std::string_view kind_id() const;
  const std::vector<double>& params() const { return params_; }

  /// Left-continuous quantile function; monotone in u, so feeding a shared
  /// uniform into two laws yields their comonotone coupling.
  double quantile(double u) const;
  double mean() const;
  /// (value, weight) pairs sorted by value.
  const std::vector<std::pair<double, double>>& atoms() const { return atoms_; }

 private:
  Kind kind_ = Kind::Dirac;
  std::vector<double> params_;
  std::vector<std::pair<double, double>> atoms_;
  std::vector<double> sorted_;
};

/// dX = drift(t, X) dt + diffusion(t, X) dW on [0, horizon], X_0 ~ initial.
struct SdeSpec {
  CoefficientField drift = CoefficientField::constant(0.0);
  CoefficientField diffusion = CoefficientField::constant(0.0);
  double horizon = 1.0;
  InitialLaw initial = InitialLaw::dirac(0.0);
};

/// A grid-estimated constant next to the closed-form value when the family knows it.
struct ConstantEstimate {
  double value = 0.0;
  double grid_estimate = 0.0;
  bool exact = false;
};

ConstantEstimate estimate_lipschitz(const CoefficientField& field, const SpatialGrid& grid,
                                    const TimeGrid& times);
/// Least a making sigma^2 + a x^2 have non-negative discrete second differences.
ConstantEstimate estimate_a_sigma(const CoefficientField& diffusion, const SpatialGrid& grid,
                                  const TimeGrid& times);
/// Least c making b + c x non-decreasing on the grid.
ConstantEstimate estimate_c_b(const CoefficientField& drift, const SpatialGrid& grid,
                              const TimeGrid& times);

struct DominationPoint {
  double t = 0.0;
  double x = 0.0;
  std::string what;  // "drift", "diffusion_negative" or "diffusion"
  double lhs = 0.0;
  double rhs = 0.0;
};

struct DominationCheck {
  std::size_t violations = 0;
  /// First few offending points, in grid order.
  std::vector<DominationPoint> witnesses;
  bool holds() const { return violations == 0; }
  std::string describe() const;
};

/// Checks b <= beta (when check_drift) and 0 <= sigma <= theta at every grid node and time.
DominationCheck check_domination(const SdeSpec& lower, const SdeSpec& upper, const SpatialGrid& grid,
                                 const TimeGrid& times, bool check_drift = true);

struct ConstantsReport {
  double lip = 0.0;          // Lip(sigma)
  double sup_at_zero = 0.0;  // sup_t |sigma(t, 0)|
  double a_sigma = 0.0;
  double c_b = 0.0;
  double c_sigma = 0.0;  // a_sigma + lip^2
  double m_min = 0.0;
  double h_bar = 0.0;
  double horizon = 1.0;
  ConstantEstimate lip_detail;
  ConstantEstimate a_sigma_detail;
  ConstantEstimate c_b_detail;
  std::string grid_descriptor;
};

ConstantsReport compute_constants(const CoefficientField& drift, const CoefficientField& diffusion,
                                  double horizon, const SpatialGrid& grid = SpatialGrid::estimation_default());
ConstantsReport compute_constants(const SdeSpec& spec,
                                  const SpatialGrid& grid = SpatialGrid::estimation_default());

/// (sqrt(c_sigma + 2 c_b) - sqrt(c_sigma)) / (2 c_b), equal to 1/(2 sqrt(c_sigma))
/// when c_b = 0 (with 1/0 = +inf).
double admissible_step_root(double c_sigma, double c_b);
/// Largest admissible step: admissible_step_root^2.
double max_admissible_step(double c_sigma, double c_b);
/// Minimal step count horizon / max_admissible_step.
double min_step_count(double c_sigma, double c_b, double horizon);
/// sqrt(m) / (2 lip sqrt(horizon)); +inf when lip = 0.
double default_threshold(double lip, double horizon, std::size_t m);

struct SchemeBounds {
  double m_min = 0.0;
  double h_bar = 0.0;
  double s_default = 0.0;
};

SchemeBounds derive_scheme_bounds(const ConstantsReport& constants, double horizon, std::size_t m);

}  // namespace convord
