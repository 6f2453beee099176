#include "convord/quadrature.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

namespace convord {

const QuadratureRule& gauss_legendre(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, QuadratureRule> cache;
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");

  std::lock_guard lock(mutex);
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  // boost returns the non-negative zeros in ascending order (including 0 for odd n).
  const int order = static_cast<int>(n);
  const std::vector<double> half = boost::math::legendre_p_zeros<double>(order);
  QuadratureRule rule;
  auto weight = [order](double x) {
    const double d = boost::math::legendre_p_prime(order, x);
    return 2.0 / ((1.0 - x * x) * d * d);
  };
  for (auto it = half.rbegin(); it != half.rend(); ++it) {
    if (*it == 0.0) continue;
    rule.nodes.push_back(-*it);
    rule.weights.push_back(weight(*it));
  }
  for (double x : half) {
    rule.nodes.push_back(x);
    rule.weights.push_back(weight(x));
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

}  // namespace convord
