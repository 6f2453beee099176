#pragma once

#include "convord/coefficients.hpp"
#include "convord/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace convord {

/// TimeIntegrated: coefficients averaged over [t_k, t_{k+1}] at the frozen
/// spatial point. PointFrozen: coefficients frozen at (t_k, x).
enum class SchemeVariant { TimeIntegrated, PointFrozen };

std::string_view variant_id(SchemeVariant variant);
SchemeVariant parse_variant(std::string_view id);

struct SchemeConfig {
  std::size_t m = 1;
  SchemeVariant variant = SchemeVariant::PointFrozen;
  /// Truncation level s; +inf gives the untruncated scheme.
  double threshold = std::numeric_limits<double>::infinity();
  double horizon = 1.0;

  double step() const { return horizon / static_cast<double>(m); }
  double time(std::size_t k) const { return horizon * static_cast<double>(k) / static_cast<double>(m); }
  void validate() const;
};

/// g if |g| <= s, else 0.
inline double draw_truncated(double g, double s) { return (g <= s && g >= -s) ? g : 0.0; }

struct StepCoefficients {
  double drift = 0.0;
  double diffusion = 0.0;
};

/// Per-step coefficients used by both the simulator and the kernel oracle.
StepCoefficients effective_coefficients(const SdeSpec& spec, const SchemeConfig& config, std::size_t k,
                                        double x);

/// One scheme step x -> x + h b_k(x) + sqrt(h) sigma_k(x) z. The caller truncates z.
double step(double x, std::size_t k, const SdeSpec& spec, const SchemeConfig& config, double z);

/// Standard normal panel G[n][k], n < paths, k < steps, computed on demand:
/// each entry is a pure function of (seed, n, k). Panels of 10^6 x 256 are
/// never materialised.
class NoisePanel {
 public:
  NoisePanel(std::size_t paths, std::size_t steps, std::uint64_t seed, Stream stream = Stream::Gaussian);

  std::size_t paths() const { return paths_; }
  std::size_t steps() const { return steps_; }
  std::uint64_t seed() const { return seed_; }
  std::string_view generator_id() const { return kGeneratorId; }

  double operator()(std::size_t n, std::size_t k) const;
  /// Writes G[n][0..steps) into out.
  void fill(std::size_t n, std::span<double> out) const;
  /// Uniform in (0, 1) for the initial-law draw of path n; disjoint from the Gaussians.
  double initial_uniform(std::size_t n, Stream stream) const;

 private:
  std::size_t paths_;
  std::size_t steps_;
  std::uint64_t seed_;
  CounterRng rng_;
};

/// N x (m + 1) panel of scheme values on t_k = kT/m, row-major.
class SamplePaths {
 public:
  SamplePaths(std::size_t paths, SchemeConfig config, std::uint64_t seed);

  std::size_t paths() const { return paths_; }
  std::size_t steps() const { return config_.m; }
  const SchemeConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const double> path(std::size_t n) const {
    return {values_.data() + n * (config_.m + 1), config_.m + 1};
  }
  std::span<double> path(std::size_t n) { return {values_.data() + n * (config_.m + 1), config_.m + 1}; }
  double operator()(std::size_t n, std::size_t k) const { return values_[n * (config_.m + 1) + k]; }
  const std::vector<double>& data() const { return values_; }

  friend bool operator==(const SamplePaths&, const SamplePaths&) = default;

 private:
  std::size_t paths_;
  SchemeConfig config_;
  std::uint64_t seed_;
  std::vector<double> values_;
};

inline bool operator==(const SchemeConfig& a, const SchemeConfig& b) {
  return a.m == b.m && a.variant == b.variant && a.horizon == b.horizon &&
         (a.threshold == b.threshold || (a.threshold != a.threshold && b.threshold != b.threshold));
}

/// Simulates one path from x0; gaussians holds the m raw draws (truncated here).
void simulate_path(const SdeSpec& spec, const SchemeConfig& config, double x0,
                   std::span<const double> gaussians, std::span<double> out);

/// Full panel. X[n][0] comes from the initial law through the InitialX substream.
SamplePaths simulate_batch(const SdeSpec& spec, const SchemeConfig& config, const NoisePanel& noise);

/// Two panels on the same Gaussian noise. With couple_initial the initial laws
/// are sampled through one shared uniform (comonotone); otherwise Y uses its own substream.
std::pair<SamplePaths, SamplePaths> simulate_coupled(const SdeSpec& spec_x, const SdeSpec& spec_y,
                                                     const SchemeConfig& config, const NoisePanel& noise,
                                                     bool couple_initial = true);

/// Piecewise-linear interpolation of grid values on [0, horizon].
double interpolate(std::span<const double> values, double horizon, double t);

/// x0 exp(theta W_{t_k} - theta^2 t_k / 2) with W built from the untruncated panel.
SamplePaths exact_gbm_paths(double x0, double theta, const NoisePanel& noise, double horizon);

/// Writes one exact GBM path (same construction as exact_gbm_paths).
void exact_gbm_path(double x0, double theta, double horizon, std::span<const double> gaussians,
                    std::span<double> out);

/// Columnar binary dump: magic "CVORDSP1", u64 N, u64 m, f64 T, u64 seed,
/// u32 variant, u32 reserved, f64 s, then N (m + 1) f64 values row-major.
void write_binary(const SamplePaths& paths, const std::string& filename);
SamplePaths read_binary(const std::string& filename);
/// CSV with header "path,k,t,value".
void write_csv(const SamplePaths& paths, const std::string& filename);

}  // namespace convord
