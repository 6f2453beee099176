#pragma once

#include "convord/coefficients.hpp"
#include "convord/euler.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace convord {

/// Exact W1 between two equal-weight empirical laws on the line.
double w1_empirical(std::span<const double> a, std::span<const double> b);

/// 2 * P(Z > s) for a standard normal Z.
double gaussian_two_sided_tail(double s);

/// Black-Scholes price of a call on x0 e^{theta W_T - theta^2 T / 2}.
double black_scholes_call(double x0, double strike, double theta, double horizon);

enum class ThresholdPolicyKind { Default, Infinite, Constant, LogScaled };

std::string_view policy_id(ThresholdPolicyKind kind);
ThresholdPolicyKind parse_policy(std::string_view id);

/// Default: s_default(lip, T, m). Constant: value. LogScaled: value * sqrt(ln m).
struct ThresholdPolicy {
  ThresholdPolicyKind kind = ThresholdPolicyKind::Default;
  double value = 2.0;

  double resolve(double lip, double horizon, std::size_t m) const;
};

struct RateReport {
  std::vector<std::size_t> m_list;
  std::vector<double> thresholds;
  std::vector<double> error;
  std::vector<double> error_stderr;
  double slope = 0.0;
  /// Delta-method standard error of the slope from the per-m MC errors.
  double slope_stderr = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;
  /// Some error is exactly zero, so no slope is fitted.
  bool degenerate = false;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
};

/// Coupled max_k |exact GBM - scheme| on the same Gaussians for every m, and the
/// least-squares slope of log error against log m.
RateReport strong_error_rate(double theta, double x0, double horizon, const std::vector<std::size_t>& m_list,
                             std::size_t paths, std::uint64_t seed, const ThresholdPolicy& policy,
                             SchemeVariant variant = SchemeVariant::PointFrozen);

struct TruncationReport {
  std::size_t paths = 0;
  std::size_t steps = 0;
  double threshold = 0.0;
  std::size_t exceeding = 0;
  double observed = 0.0;
  /// Binomial standard error of the observed fraction at the bound.
  double observed_stderr = 0.0;
  double bound = 0.0;
  bool within_bound = false;
  std::size_t compared_panels = 0;
  std::size_t bitwise_mismatches = 0;
};

/// Fraction of panels with some |G| > s against m P(|G| > s); panels without an
/// exceedance are re-simulated with and without truncation and compared bitwise.
TruncationReport truncation_event_rate(const NoisePanel& noise, double s, const SdeSpec& spec);

struct TerminalW1Row {
  std::size_t m = 0;
  double threshold = 0.0;
  double w1 = 0.0;
};

/// W1 between the scheme's terminal marginal and exact GBM driven by an
/// independent Gaussian stream.
std::vector<TerminalW1Row> terminal_w1(double theta, double x0, double horizon, const std::vector<std::size_t>& m_list,
                                       std::size_t paths, std::uint64_t seed, const ThresholdPolicy& policy);

/// Mean of max_k |untruncated scheme - truncated scheme| on shared noise.
double truncation_gap(const SdeSpec& spec, std::size_t m, double s, std::size_t paths, std::uint64_t seed);

}  // namespace convord
