#pragma once

#include "convord/coefficients.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace convord {

/// rho(u) = C exp(-1 / (1 - u^2)) on (-1, 1), normalised to a probability density.
class MollifierKernel {
 public:
  MollifierKernel();

  double normalisation() const { return c_; }
  double density(double u) const;
  double derivative(double u) const;

  /// (rho_n * f)(x) = int rho(u) f(x - u/n) du.
  template <class F>
  double convolve(F&& f, double x, double n) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) acc += weights_[j] * f(x - nodes_[j] / n);
    return acc;
  }

  /// d/dx (rho_n * f)(x) = n int rho'(u) f(x - u/n) du.
  template <class F>
  double convolve_derivative(F&& f, double x, double n) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) acc += derivative_weights_[j] * f(x - nodes_[j] / n);
    return n * acc;
  }

 private:
  double c_ = 0.0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> derivative_weights_;
};

/// Shared instance (64-node Gauss-Legendre rule on [-1, 1]).
const MollifierKernel& mollifier();

struct SmoothedPair {
  CoefficientField sigma = CoefficientField::constant(0.0);
  CoefficientField theta = CoefficientField::constant(0.0);
  std::size_t n = 1;
  double t = 0.0;
  double lip_sigma = 0.0;
  double lip_theta = 0.0;
  /// Tail slopes used beyond -n and n.
  double sigma_left_slope = 0.0;
  double sigma_right_slope = 0.0;
  double theta_left_slope = 0.0;
  double theta_right_slope = 0.0;

  double error_bound_sigma() const { return lip_sigma / static_cast<double>(n); }
  double error_bound_theta() const { return lip_theta / static_cast<double>(n); }
};

inline constexpr double kMollifiedGridStep = 1e-3;

/// sigma_n, theta_n at time t: convolution on [-n, n], linear tails with the
/// clipped slopes, tabulated on [-n-2, n+2]. Throws HypothesisViolation when
/// 0 <= sigma <= theta fails on [-n-1, n+1].
SmoothedPair build_mollified_pair(const CoefficientField& sigma, const CoefficientField& theta, std::size_t n,
                                  double t = 0.0);

struct ApproximationError {
  double sup_err_sigma = 0.0;
  double sup_err_theta = 0.0;
};

/// Sup errors over the grid nodes (the grid should lie in [-n, n]).
ApproximationError approximation_error(const SmoothedPair& pair, const CoefficientField& sigma,
                                       const CoefficientField& theta, const SpatialGrid& grid);

/// Text form of a tabulated field: "x_lo dx" on the first line, one value per line after.
void write_tabulated(const CoefficientField& field, const std::string& filename);
CoefficientField read_tabulated(const std::string& filename);

}  // namespace convord
