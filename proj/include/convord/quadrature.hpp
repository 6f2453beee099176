#pragma once

#include <cstddef>
#include <vector>

namespace convord {

/// Gauss-Legendre rule on [-1, 1]; nodes ascending.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (cached per n).
const QuadratureRule& gauss_legendre(std::size_t n);

/// Integral of f over [a, b] with the n-point rule.
template <class F>
double integrate_gl(F&& f, double a, double b, std::size_t n) {
  const QuadratureRule& rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) acc += rule.weights[j] * f(mid + half * rule.nodes[j]);
  return half * acc;
}

}  // namespace convord
