#include "convord/coefficients.hpp"

#include "convord/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace convord {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kTimeQuadratureNodes = 16;

std::string format_point(double t, double x, const std::string& field) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite evaluation of " << field << " at (t=" << t << ", x=" << x << ")";
  return os.str();
}

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

EvaluationError::EvaluationError(double t, double x, const std::string& field)
    : std::runtime_error(format_point(t, x, field)), t_(t), x_(x) {}

std::string SpatialGrid::describe() const {
  std::ostringstream os;
  os.precision(12);
  os << "uniform[" << lo << ", " << hi << "] nodes=" << nodes << " dx=" << step();
  return os.str();
}

SpatialGrid SpatialGrid::with_step(double lo, double hi, double dx) {
  require(hi > lo && dx > 0.0, "SpatialGrid: need lo < hi and dx > 0");
  const auto intervals = static_cast<std::size_t>(std::llround((hi - lo) / dx));
  return {lo, hi, std::max<std::size_t>(intervals, 1) + 1};
}

TimeGrid default_time_grid(double horizon) {
  TimeGrid times(65);
  for (std::size_t k = 0; k < times.size(); ++k) times[k] = horizon * static_cast<double>(k) / 64.0;
  return times;
}

std::string_view family_id(Family family) {
  switch (family) {
    case Family::Constant: return "constant";
    case Family::Affine: return "affine";
    case Family::Proportional: return "proportional";
    case Family::ScaledHyperbola: return "scaled_hyperbola";
    case Family::Tent: return "tent";
    case Family::SmoothedCev: return "smoothed_cev";
    case Family::Tabulated: return "tabulated";
  }
  return "unknown";
}

Family parse_family(std::string_view id) {
  for (Family f : {Family::Constant, Family::Affine, Family::Proportional, Family::ScaledHyperbola,
                   Family::Tent, Family::SmoothedCev, Family::Tabulated}) {
    if (family_id(f) == id) return f;
  }
  throw std::invalid_argument("unknown coefficient family '" + std::string(id) + "'");
}

CoefficientField::CoefficientField(Family family, std::vector<double> params)
    : family_(family), params_(std::move(params)), pieces_{AffinePiece{}} {}

CoefficientField CoefficientField::constant(double c) {
  CoefficientField f(Family::Constant, {c});
  f.known_ = {0.0, 0.0, 0.0, std::abs(c), true, true};
  return f;
}

CoefficientField CoefficientField::affine(double lambda, double mu) {
  return piecewise_affine({AffinePiece{0.0, lambda, mu}});
}

CoefficientField CoefficientField::piecewise_affine(std::vector<AffinePiece> pieces) {
  require(!pieces.empty(), "affine: at least one piece");
  require(pieces.front().start == 0.0, "affine: first piece must start at t = 0");
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    require(pieces[i].start > pieces[i - 1].start, "affine: piece start times must increase");
  }
  std::vector<double> params{pieces[0].lambda, pieces[0].mu};
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    params.insert(params.end(), {pieces[i].start, pieces[i].lambda, pieces[i].mu});
  }
  CoefficientField f(Family::Affine, std::move(params));
  f.pieces_ = std::move(pieces);
  double lip = 0.0, min_mu = kInf, sup0 = 0.0;
  for (const auto& p : f.pieces_) {
    lip = std::max(lip, std::abs(p.mu));
    min_mu = std::min(min_mu, p.mu);
    sup0 = std::max(sup0, std::abs(p.lambda));
  }
  f.known_ = {lip, 0.0, std::max(0.0, -min_mu), sup0, true, true};
  return f;
}

CoefficientField CoefficientField::proportional(double theta) {
  CoefficientField f(Family::Proportional, {theta});
  f.known_ = {std::abs(theta), 0.0, std::max(0.0, -theta), 0.0, true, true};
  return f;
}

CoefficientField CoefficientField::scaled_hyperbola(double theta) {
  CoefficientField f(Family::ScaledHyperbola, {theta});
  // f' = theta x / sqrt(1 + x^2) sweeps (-|theta|, |theta|).
  f.known_ = {std::abs(theta), 0.0, std::abs(theta), std::abs(theta), theta >= 0.0, theta == 0.0};
  return f;
}

CoefficientField CoefficientField::tent(double height, double width) {
  require(width > 0.0, "tent: width must be positive");
  CoefficientField f(Family::Tent, {height, width});
  // Slope jumps from +1 to -1 at 0, so f^2 has a concave kink there unless f(0) = 0.
  std::optional<double> a;
  if (height != 0.0) a = kInf;
  f.known_ = {1.0, a, 1.0, std::abs(height), false, false};
  return f;
}

CoefficientField CoefficientField::smoothed_cev(double theta, double eps, double p) {
  require(eps > 0.0, "smoothed_cev: eps must be positive");
  require(p > 0.0 && p <= 1.0, "smoothed_cev: need 0 < p <= 1");
  CoefficientField f(Family::SmoothedCev, {theta, eps, p});
  const double e2 = eps * eps;
  double lip = std::abs(theta);
  if (p < 1.0) {
    // |f'| = |theta| p |x| (e2 + x^2)^(p/2 - 1) peaks at x^2 = e2 / (1 - p).
    const double u = e2 / (1.0 - p);
    lip = std::abs(theta) * p * std::sqrt(u) * std::pow(e2 + u, 0.5 * p - 1.0);
  }
  double a = 0.0;
  if (p < 0.5) {
    // (f^2)'' = theta^2 2p (e2 + u)^(p-2) (e2 + (2p-1) u), u = x^2, minimal at u = 3 e2 / (1 - 2p).
    const double u = 3.0 * e2 / (1.0 - 2.0 * p);
    const double second = theta * theta * 2.0 * p * std::pow(e2 + u, p - 2.0) * (e2 + (2.0 * p - 1.0) * u);
    a = std::max(0.0, -0.5 * second);
  }
  f.known_ = {lip, a, lip, std::abs(theta) * std::pow(eps, p), theta >= 0.0 && p == 1.0, theta == 0.0};
  return f;
}

CoefficientField CoefficientField::tabulated(double x_lo, double dx, std::vector<double> values) {
  require(dx > 0.0, "tabulated: dx must be positive");
  require(values.size() >= 2, "tabulated: need at least two values");
  for (double v : values) require(std::isfinite(v), "tabulated: values must be finite");
  std::vector<double> params{x_lo, dx};
  params.insert(params.end(), values.begin(), values.end());
  CoefficientField f(Family::Tabulated, std::move(params));
  f.table_lo_ = x_lo;
  f.table_dx_ = dx;
  f.table_ = std::move(values);

  double lip = 0.0, min_slope = kInf;
  bool convex = true, affine = true;
  double prev = 0.0;
  for (std::size_t i = 0; i + 1 < f.table_.size(); ++i) {
    const double slope = (f.table_[i + 1] - f.table_[i]) / dx;
    lip = std::max(lip, std::abs(slope));
    min_slope = std::min(min_slope, slope);
    if (i > 0) {
      convex = convex && slope >= prev;
      affine = affine && slope == prev;
    }
    prev = slope;
  }
  // The semi-convexity of the square is left to grid estimation: a piecewise
  // linear table stands in for a smooth function.
  f.known_ = {lip, std::nullopt, std::max(0.0, -min_slope), std::abs(f.eval_space(0, 0.0)), convex, affine};
  return f;
}

CoefficientField CoefficientField::from_registry(std::string_view id, std::span<const double> p) {
  const Family family = parse_family(id);
  auto expect = [&](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string(id) + ": " + msg);
  };
  switch (family) {
    case Family::Constant:
      expect(p.size() == 1, "expects [c]");
      return constant(p[0]);
    case Family::Affine: {
      expect(p.size() >= 2 && (p.size() - 2) % 3 == 0, "expects [lambda, mu] or [lambda0, mu0, t1, lambda1, mu1, ...]");
      std::vector<AffinePiece> pieces{{0.0, p[0], p[1]}};
      for (std::size_t i = 2; i < p.size(); i += 3) pieces.push_back({p[i], p[i + 1], p[i + 2]});
      return piecewise_affine(std::move(pieces));
    }
    case Family::Proportional:
      expect(p.size() == 1, "expects [theta]");
      return proportional(p[0]);
    case Family::ScaledHyperbola:
      expect(p.size() == 1, "expects [theta]");
      return scaled_hyperbola(p[0]);
    case Family::Tent:
      expect(p.empty() || p.size() == 2, "expects [] or [height, width]");
      return p.empty() ? tent() : tent(p[0], p[1]);
    case Family::SmoothedCev:
      expect(p.size() == 3, "expects [theta, eps, p]");
      return smoothed_cev(p[0], p[1], p[2]);
    case Family::Tabulated:
      expect(p.size() >= 4, "expects [x_lo, dx, v0, v1, ...]");
      return tabulated(p[0], p[1], std::vector<double>(p.begin() + 2, p.end()));
  }
  throw std::invalid_argument("unreachable family");
}

std::size_t CoefficientField::piece_at(double t) const {
  if (pieces_.size() == 1) return 0;
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                             [](double v, const AffinePiece& p) { return v < p.start; });
  return it == pieces_.begin() ? 0 : static_cast<std::size_t>(it - pieces_.begin()) - 1;
}

double CoefficientField::eval_space(std::size_t piece, double x) const {
  switch (family_) {
    case Family::Constant: return params_[0];
    case Family::Affine: return pieces_[piece].lambda + pieces_[piece].mu * x;
    case Family::Proportional: return params_[0] * x;
    case Family::ScaledHyperbola: return params_[0] * std::hypot(1.0, x);
    case Family::Tent: return params_[0] - std::min(std::abs(x), params_[1]);
    case Family::SmoothedCev: {
      const double r = std::hypot(params_[1], x);
      return params_[2] == 1.0 ? params_[0] * r : params_[0] * std::pow(r, params_[2]);
    }
    case Family::Tabulated: {
      const std::size_t n = table_.size();
      const double pos = (x - table_lo_) / table_dx_;
      std::size_t i = 0;
      if (pos > 0.0) i = std::min(static_cast<std::size_t>(pos), n - 2);
      const double frac = pos - static_cast<double>(i);
      if (frac == 0.0) return table_[i];
      return table_[i] + (table_[i + 1] - table_[i]) * frac;
    }
  }
  return 0.0;
}

double CoefficientField::operator()(double t, double x) const { return eval_space(piece_at(t), x); }

double CoefficientField::step_mean(double t0, double t1, double x) const {
  if (!closed_integrals_) {
    return integrate_gl([&](double s) { return (*this)(s, x); }, t0, t1, kTimeQuadratureNodes) / (t1 - t0);
  }
  if (pieces_.size() == 1) return eval_space(0, x);
  const std::size_t first = piece_at(t0);
  if (first + 1 == pieces_.size() || pieces_[first + 1].start >= t1) return eval_space(first, x);
  double acc = 0.0;
  for (std::size_t i = first; i < pieces_.size() && pieces_[i].start < t1; ++i) {
    const double lo = std::max(t0, pieces_[i].start);
    const double hi = i + 1 < pieces_.size() ? std::min(t1, pieces_[i + 1].start) : t1;
    acc += (hi - lo) * eval_space(i, x);
  }
  return acc / (t1 - t0);
}

double CoefficientField::step_rms(double t0, double t1, double x) const {
  if (!closed_integrals_) {
    const double ms = integrate_gl(
        [&](double s) {
          const double v = (*this)(s, x);
          return v * v;
        },
        t0, t1, kTimeQuadratureNodes);
    // Positive weights keep ms >= 0; the clamp only absorbs round-off.
    return std::sqrt(std::max(0.0, ms / (t1 - t0)));
  }
  if (pieces_.size() == 1) return std::abs(eval_space(0, x));
  const std::size_t first = piece_at(t0);
  if (first + 1 == pieces_.size() || pieces_[first + 1].start >= t1) return std::abs(eval_space(first, x));
  double acc = 0.0;
  for (std::size_t i = first; i < pieces_.size() && pieces_[i].start < t1; ++i) {
    const double lo = std::max(t0, pieces_[i].start);
    const double hi = i + 1 < pieces_.size() ? std::min(t1, pieces_[i + 1].start) : t1;
    const double v = eval_space(i, x);
    acc += (hi - lo) * v * v;
  }
  return std::sqrt(acc / (t1 - t0));
}

CoefficientField CoefficientField::without_closed_time_integrals() const {
  CoefficientField copy = *this;
  copy.closed_integrals_ = false;
  return copy;
}

std::vector<double> CoefficientField::time_breakpoints() const {
  std::vector<double> out;
  out.reserve(pieces_.size());
  for (const auto& p : pieces_) out.push_back(p.start);
  return out;
}

// ---------------------------------------------------------------------------
// Initial laws

InitialLaw InitialLaw::dirac(double x0) {
  InitialLaw law;
  law.kind_ = Kind::Dirac;
  law.params_ = {x0};
  law.atoms_ = {{x0, 1.0}};
  return law;
}

InitialLaw InitialLaw::two_point(double weight, double x, double y) {
  require(weight >= 0.0 && weight <= 1.0, "two_point: weight must lie in [0, 1]");
  InitialLaw law;
  law.kind_ = Kind::TwoPoint;
  law.params_ = {weight, x, y};
  if (x <= y) {
    law.atoms_ = {{x, weight}, {y, 1.0 - weight}};
  } else {
    law.atoms_ = {{y, 1.0 - weight}, {x, weight}};
  }
  return law;
}

InitialLaw InitialLaw::samples(std::vector<double> values) {
  require(!values.empty(), "samples: need at least one value");
  InitialLaw law;
  law.kind_ = Kind::Samples;
  law.params_ = values;
  std::sort(values.begin(), values.end());
  law.sorted_ = values;
  const double w = 1.0 / static_cast<double>(values.size());
  for (double v : values) {
    if (!law.atoms_.empty() && law.atoms_.back().first == v) {
      law.atoms_.back().second += w;
    } else {
      law.atoms_.emplace_back(v, w);
    }
  }
  return law;
}

InitialLaw InitialLaw::from_registry(std::string_view id, std::span<const double> p) {
  if (id == "dirac") {
    if (p.size() != 1) throw std::invalid_argument("dirac: expects [x0]");
    return dirac(p[0]);
  }
  if (id == "two_point") {
    if (p.size() != 3) throw std::invalid_argument("two_point: expects [weight, x, y]");
    return two_point(p[0], p[1], p[2]);
  }
  if (id == "samples") return samples(std::vector<double>(p.begin(), p.end()));
  throw std::invalid_argument("unknown initial law '" + std::string(id) + "'");
}

std::string_view InitialLaw::kind_id() const {
  switch (kind_) {
    case Kind::Dirac: return "dirac";
    case Kind::TwoPoint: return "two_point";
    case Kind::Samples: return "samples";
  }
  return "unknown";
}

double InitialLaw::quantile(double u) const {
  switch (kind_) {
    case Kind::Dirac: return params_[0];
    case Kind::TwoPoint: return u < atoms_[0].second ? atoms_[0].first : atoms_.back().first;
    case Kind::Samples: {
      const auto n = sorted_.size();
      const auto i = std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)));
      return sorted_[i];
    }
  }
  return 0.0;
}

double InitialLaw::mean() const {
  double m = 0.0;
  for (const auto& [v, w] : atoms_) m += v * w;
  return m;
}

// ---------------------------------------------------------------------------
// Constant estimation

namespace {

std::vector<double> effective_times(const CoefficientField& field, const TimeGrid& times) {
  if (times.empty()) throw std::invalid_argument("time grid must be nonempty");
  if (!field.time_dependent()) return {times.front()};
  std::vector<double> out = times;
  const double t_max = *std::max_element(times.begin(), times.end());
  for (double b : field.time_breakpoints()) {
    if (b <= t_max) out.push_back(b);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> sample(const CoefficientField& field, const SpatialGrid& grid, double t,
                           const char* name) {
  std::vector<double> v(grid.nodes);
  for (std::size_t i = 0; i < grid.nodes; ++i) {
    const double x = grid.node(i);
    v[i] = field(t, x);
    if (!std::isfinite(v[i])) throw EvaluationError(t, x, name);
  }
  return v;
}

}  // namespace

ConstantEstimate estimate_lipschitz(const CoefficientField& field, const SpatialGrid& grid,
                                    const TimeGrid& times) {
  if (grid.nodes < 2) throw std::invalid_argument("estimate_lipschitz: grid needs >= 2 nodes");
  const double dx = grid.step();
  double est = 0.0;
  for (double t : effective_times(field, times)) {
    const auto v = sample(field, grid, t, "coefficient");
    for (std::size_t i = 0; i + 1 < v.size(); ++i) est = std::max(est, std::abs(v[i + 1] - v[i]) / dx);
  }
  ConstantEstimate out{est, est, false};
  if (field.known().lipschitz) {
    out.value = *field.known().lipschitz;
    out.exact = true;
  }
  return out;
}

ConstantEstimate estimate_a_sigma(const CoefficientField& diffusion, const SpatialGrid& grid,
                                  const TimeGrid& times) {
  if (grid.nodes < 3) throw std::invalid_argument("estimate_a_sigma: invalid grid, need >= 3 nodes");
  const double dx = grid.step();
  double min_d2 = 0.0;
  for (double t : effective_times(diffusion, times)) {
    auto v = sample(diffusion, grid, t, "diffusion");
    for (double& e : v) e *= e;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) min_d2 = std::min(min_d2, v[i + 1] - 2.0 * v[i] + v[i - 1]);
  }
  const double est = 0.5 * std::max(0.0, -min_d2 / (dx * dx));
  ConstantEstimate out{est, est, false};
  if (diffusion.known().square_semiconvexity) {
    out.value = *diffusion.known().square_semiconvexity;
    out.exact = true;
  }
  return out;
}

ConstantEstimate estimate_c_b(const CoefficientField& drift, const SpatialGrid& grid, const TimeGrid& times) {
  if (grid.nodes < 3) throw std::invalid_argument("estimate_c_b: invalid grid, need >= 3 nodes");
  const double dx = grid.step();
  double min_slope = 0.0;
  for (double t : effective_times(drift, times)) {
    const auto v = sample(drift, grid, t, "drift");
    for (std::size_t i = 0; i + 1 < v.size(); ++i) min_slope = std::min(min_slope, (v[i + 1] - v[i]) / dx);
  }
  const double est = std::max(0.0, -min_slope);
  ConstantEstimate out{est, est, false};
  if (drift.known().monotonicity_defect) {
    out.value = *drift.known().monotonicity_defect;
    out.exact = true;
  }
  return out;
}

double admissible_step_root(double c_sigma, double c_b) {
  if (std::isinf(c_sigma) || std::isinf(c_b)) return 0.0;
  // Rationalised form of (sqrt(c + 2b) - sqrt(c)) / (2b); no cancellation for small b.
  return 1.0 / (std::sqrt(c_sigma + 2.0 * c_b) + std::sqrt(c_sigma));
}

double max_admissible_step(double c_sigma, double c_b) {
  const double r = admissible_step_root(c_sigma, c_b);
  return r * r;
}

double min_step_count(double c_sigma, double c_b, double horizon) {
  const double h = max_admissible_step(c_sigma, c_b);
  if (h == 0.0) return kInf;
  return horizon / h;
}

double default_threshold(double lip, double horizon, std::size_t m) {
  if (lip == 0.0) return kInf;
  return std::sqrt(static_cast<double>(m)) / (2.0 * lip * std::sqrt(horizon));
}

std::string DominationCheck::describe() const {
  std::ostringstream os;
  os.precision(10);
  os << violations << " domination violation(s)";
  for (const auto& w : witnesses) {
    os << "; " << w.what << " at (t=" << w.t << ", x=" << w.x << "): " << w.lhs << " > " << w.rhs;
  }
  return os.str();
}

DominationCheck check_domination(const SdeSpec& lower, const SdeSpec& upper, const SpatialGrid& grid,
                                 const TimeGrid& times, bool check_drift) {
  constexpr std::size_t kMaxWitnesses = 8;
  constexpr double kSlack = 1e-12;
  DominationCheck out;
  auto record = [&](double t, double x, const char* what, double lhs, double rhs) {
    ++out.violations;
    if (out.witnesses.size() < kMaxWitnesses) out.witnesses.push_back({t, x, what, lhs, rhs});
  };
  for (double t : times) {
    for (std::size_t i = 0; i < grid.nodes; ++i) {
      const double x = grid.node(i);
      if (check_drift) {
        const double b = lower.drift(t, x);
        const double beta = upper.drift(t, x);
        if (b > beta + kSlack * (1.0 + std::abs(beta))) record(t, x, "drift", b, beta);
      }
      const double s = lower.diffusion(t, x);
      const double th = upper.diffusion(t, x);
      if (s < 0.0) record(t, x, "diffusion_negative", 0.0, s);
      if (s > th + kSlack * (1.0 + std::abs(th))) record(t, x, "diffusion", s, th);
    }
  }
  return out;
}

ConstantsReport compute_constants(const CoefficientField& drift, const CoefficientField& diffusion,
                                  double horizon, const SpatialGrid& grid) {
  const TimeGrid times = default_time_grid(horizon);
  ConstantsReport r;
  r.horizon = horizon;
  r.lip_detail = estimate_lipschitz(diffusion, grid, times);
  r.a_sigma_detail = estimate_a_sigma(diffusion, grid, times);
  r.c_b_detail = estimate_c_b(drift, grid, times);
  r.lip = r.lip_detail.value;
  r.a_sigma = r.a_sigma_detail.value;
  r.c_b = r.c_b_detail.value;
  r.c_sigma = r.a_sigma + r.lip * r.lip;
  r.h_bar = max_admissible_step(r.c_sigma, r.c_b);
  r.m_min = min_step_count(r.c_sigma, r.c_b, horizon);
  r.sup_at_zero = diffusion.known().sup_at_zero;
  r.grid_descriptor = grid.describe();
  return r;
}

ConstantsReport compute_constants(const SdeSpec& spec, const SpatialGrid& grid) {
  return compute_constants(spec.drift, spec.diffusion, spec.horizon, grid);
}

SchemeBounds derive_scheme_bounds(const ConstantsReport& c, double horizon, std::size_t m) {
  if (m < 1) throw std::invalid_argument("derive_scheme_bounds: m must be >= 1");
  if (std::isnan(c.c_sigma) || std::isnan(c.c_b) || std::isnan(c.lip)) {
    throw std::invalid_argument("derive_scheme_bounds: constants must not be NaN");
  }
  return {min_step_count(c.c_sigma, c.c_b, horizon), max_admissible_step(c.c_sigma, c.c_b),
          default_threshold(c.lip, horizon, m)};
}

}  // namespace convord
