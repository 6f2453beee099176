#include "convord/approximation.hpp"

#include "convord/parallel.hpp"
#include "convord/quadrature.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace convord {
namespace {

constexpr std::size_t kKernelNodes = 64;
constexpr std::size_t kOutputChunk = 1024;

double bump(double u) {
  const double q = 1.0 - u * u;
  return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

}  // namespace

MollifierKernel::MollifierKernel() {
  boost::math::quadrature::tanh_sinh<double> integrator;
  c_ = 1.0 / integrator.integrate(bump, -1.0, 1.0, 1e-15);
  const QuadratureRule& rule = gauss_legendre(kKernelNodes);
  nodes_ = rule.nodes;
  weights_.resize(nodes_.size());
  derivative_weights_.resize(nodes_.size());
  double total = 0.0;
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    weights_[j] = rule.weights[j] * density(nodes_[j]);
    derivative_weights_[j] = rule.weights[j] * derivative(nodes_[j]);
    total += weights_[j];
  }
  // The discrete rule integrates constants exactly.
  for (double& w : weights_) w /= total;
}

double MollifierKernel::density(double u) const { return c_ * bump(u); }

double MollifierKernel::derivative(double u) const {
  const double q = 1.0 - u * u;
  if (q <= 0.0) return 0.0;
  return density(u) * (-2.0 * u / (q * q));
}

const MollifierKernel& mollifier() {
  static const MollifierKernel kernel;
  return kernel;
}

SmoothedPair build_mollified_pair(const CoefficientField& sigma, const CoefficientField& theta, std::size_t n,
                                  double t) {
  if (n < 1) throw std::invalid_argument("build_mollified_pair: n must be >= 1");
  const double nn = static_cast<double>(n);
  SdeSpec lower{CoefficientField::constant(0.0), sigma, 1.0, InitialLaw::dirac(0.0)};
  SdeSpec upper{CoefficientField::constant(0.0), theta, 1.0, InitialLaw::dirac(0.0)};
  const DominationCheck check =
      check_domination(lower, upper, SpatialGrid::with_step(-nn - 1.0, nn + 1.0, kMollifiedGridStep), {t}, false);
  if (!check.holds()) throw HypothesisViolation("build_mollified_pair: " + check.describe());

  const MollifierKernel& k = mollifier();
  auto s = [&](double x) { return sigma(t, x); };
  auto th = [&](double x) { return theta(t, x); };

  SmoothedPair pair;
  pair.n = n;
  pair.t = t;
  const TimeGrid times{t};
  const SpatialGrid lip_grid = SpatialGrid::with_step(-nn - 2.0, nn + 2.0, kMollifiedGridStep);
  pair.lip_sigma = estimate_lipschitz(sigma, lip_grid, times).value;
  pair.lip_theta = estimate_lipschitz(theta, lip_grid, times).value;

  const double s_right = k.convolve(s, nn, nn);
  const double s_left = k.convolve(s, -nn, nn);
  const double th_right = k.convolve(th, nn, nn);
  const double th_left = k.convolve(th, -nn, nn);
  const double ds_right = k.convolve_derivative(s, nn, nn);
  const double ds_left = k.convolve_derivative(s, -nn, nn);
  const double dth_right = k.convolve_derivative(th, nn, nn);
  const double dth_left = k.convolve_derivative(th, -nn, nn);
  pair.sigma_right_slope = std::max(0.0, ds_right);
  pair.sigma_left_slope = std::min(0.0, ds_left);
  pair.theta_right_slope = std::max({0.0, ds_right, dth_right});
  pair.theta_left_slope = std::min({0.0, ds_left, dth_left});

  const double lo = -nn - 2.0;
  const std::size_t nodes = static_cast<std::size_t>(std::llround((2.0 * nn + 4.0) / kMollifiedGridStep)) + 1;
  std::vector<double> sv(nodes), tv(nodes);
  parallel_for(block_count(nodes, kOutputChunk), [&](std::size_t c) {
    const std::size_t end = std::min(nodes, (c + 1) * kOutputChunk);
    for (std::size_t i = c * kOutputChunk; i < end; ++i) {
      const double x = lo + static_cast<double>(i) * kMollifiedGridStep;
      if (x > nn) {
        sv[i] = s_right + pair.sigma_right_slope * (x - nn);
        tv[i] = th_right + pair.theta_right_slope * (x - nn);
      } else if (x < -nn) {
        sv[i] = s_left + pair.sigma_left_slope * (x + nn);
        tv[i] = th_left + pair.theta_left_slope * (x + nn);
      } else {
        sv[i] = k.convolve(s, x, nn);
        tv[i] = k.convolve(th, x, nn);
      }
    }
  });
  pair.sigma = CoefficientField::tabulated(lo, kMollifiedGridStep, std::move(sv));
  pair.theta = CoefficientField::tabulated(lo, kMollifiedGridStep, std::move(tv));
  return pair;
}

ApproximationError approximation_error(const SmoothedPair& pair, const CoefficientField& sigma,
                                       const CoefficientField& theta, const SpatialGrid& grid) {
  ApproximationError out;
  for (std::size_t i = 0; i < grid.nodes; ++i) {
    const double x = grid.node(i);
    out.sup_err_sigma = std::max(out.sup_err_sigma, std::abs(pair.sigma(pair.t, x) - sigma(pair.t, x)));
    out.sup_err_theta = std::max(out.sup_err_theta, std::abs(pair.theta(pair.t, x) - theta(pair.t, x)));
  }
  return out;
}

void write_tabulated(const CoefficientField& field, const std::string& filename) {
  if (field.family() != Family::Tabulated) throw std::invalid_argument("write_tabulated: field is not tabulated");
  std::ofstream os(filename);
  if (!os) throw std::runtime_error("cannot open " + filename);
  os << std::setprecision(17) << field.table_lo() << ' ' << field.table_step() << '\n';
  for (double v : field.table()) os << v << '\n';
  if (!os) throw std::runtime_error("write failed: " + filename);
}

CoefficientField read_tabulated(const std::string& filename) {
  std::ifstream is(filename);
  if (!is) throw std::runtime_error("cannot open " + filename);
  double lo = 0.0, dx = 0.0;
  if (!(is >> lo >> dx)) throw std::runtime_error(filename + ": missing 'x_lo dx' header");
  std::vector<double> values;
  for (double v; is >> v;) values.push_back(v);
  if (!is.eof()) throw std::runtime_error(filename + ": malformed value");
  return CoefficientField::tabulated(lo, dx, std::move(values));
}

}  // namespace convord
