#include "convord/euler.hpp"

#include "convord/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace convord {

std::string_view variant_id(SchemeVariant variant) {
  return variant == SchemeVariant::TimeIntegrated ? "time_integrated" : "point_frozen";
}

SchemeVariant parse_variant(std::string_view id) {
  if (id == "time_integrated") return SchemeVariant::TimeIntegrated;
  if (id == "point_frozen") return SchemeVariant::PointFrozen;
  throw std::invalid_argument("unknown scheme variant '" + std::string(id) + "'");
}

void SchemeConfig::validate() const {
  if (m < 1) throw std::invalid_argument("scheme: m must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("scheme: horizon must be positive");
  if (!(threshold >= 0.0)) throw std::invalid_argument("scheme: threshold must be >= 0");
}

StepCoefficients effective_coefficients(const SdeSpec& spec, const SchemeConfig& config, std::size_t k,
                                        double x) {
  const double t0 = config.time(k);
  if (config.variant == SchemeVariant::PointFrozen) return {spec.drift(t0, x), spec.diffusion(t0, x)};
  const double t1 = config.time(k + 1);
  return {spec.drift.step_mean(t0, t1, x), spec.diffusion.step_rms(t0, t1, x)};
}

double step(double x, std::size_t k, const SdeSpec& spec, const SchemeConfig& config, double z) {
  const StepCoefficients c = effective_coefficients(spec, config, k, x);
  const double h = config.step();
  return x + h * c.drift + std::sqrt(h) * c.diffusion * z;
}

NoisePanel::NoisePanel(std::size_t paths, std::size_t steps, std::uint64_t seed, Stream stream)
    : paths_(paths), steps_(steps), seed_(seed), rng_(seed, stream) {}

double NoisePanel::operator()(std::size_t n, std::size_t k) const {
  const auto pair = rng_.normals(n, static_cast<std::uint32_t>(k / 2));
  return pair[k % 2];
}

void NoisePanel::fill(std::size_t n, std::span<double> out) const {
  const std::size_t m = std::min(out.size(), steps_);
  std::size_t k = 0;
  for (; k + 1 < m; k += 2) {
    const auto pair = rng_.normals(n, static_cast<std::uint32_t>(k / 2));
    out[k] = pair[0];
    out[k + 1] = pair[1];
  }
  if (k < m) out[k] = rng_.normals(n, static_cast<std::uint32_t>(k / 2))[0];
}

double NoisePanel::initial_uniform(std::size_t n, Stream stream) const {
  return CounterRng(seed_, stream).uniforms(n, 0)[0];
}

SamplePaths::SamplePaths(std::size_t paths, SchemeConfig config, std::uint64_t seed)
    : paths_(paths), config_(config), seed_(seed), values_(paths * (config.m + 1), 0.0) {}

void simulate_path(const SdeSpec& spec, const SchemeConfig& config, double x0,
                   std::span<const double> gaussians, std::span<double> out) {
  const std::size_t m = config.m;
  const double h = config.step();
  const double sqrt_h = std::sqrt(h);
  const double s = config.threshold;
  out[0] = x0;
  double x = x0;
  if (config.variant == SchemeVariant::PointFrozen && !spec.drift.time_dependent() &&
      !spec.diffusion.time_dependent()) {
    for (std::size_t k = 0; k < m; ++k) {
      const double z = draw_truncated(gaussians[k], s);
      x = x + h * spec.drift(0.0, x) + sqrt_h * spec.diffusion(0.0, x) * z;
      out[k + 1] = x;
    }
    return;
  }
  for (std::size_t k = 0; k < m; ++k) {
    const double z = draw_truncated(gaussians[k], s);
    const StepCoefficients c = effective_coefficients(spec, config, k, x);
    x = x + h * c.drift + sqrt_h * c.diffusion * z;
    out[k + 1] = x;
  }
}

namespace {

void check_dimensions(const SdeSpec& spec, const SchemeConfig& config, const NoisePanel& noise) {
  config.validate();
  if (noise.steps() != config.m) throw std::invalid_argument("dimension mismatch: noise steps != scheme m");
  if (spec.horizon != config.horizon) throw std::invalid_argument("horizon mismatch between SDE and scheme");
}

}  // namespace

SamplePaths simulate_batch(const SdeSpec& spec, const SchemeConfig& config, const NoisePanel& noise) {
  check_dimensions(spec, config, noise);
  SamplePaths out(noise.paths(), config, noise.seed());
  parallel_for(block_count(noise.paths()), [&](std::size_t b) {
    std::vector<double> g(config.m);
    const std::size_t end = std::min(noise.paths(), (b + 1) * kPathBlock);
    for (std::size_t n = b * kPathBlock; n < end; ++n) {
      noise.fill(n, g);
      const double x0 = spec.initial.quantile(noise.initial_uniform(n, Stream::InitialX));
      simulate_path(spec, config, x0, g, out.path(n));
    }
  });
  return out;
}

std::pair<SamplePaths, SamplePaths> simulate_coupled(const SdeSpec& spec_x, const SdeSpec& spec_y,
                                                     const SchemeConfig& config, const NoisePanel& noise,
                                                     bool couple_initial) {
  check_dimensions(spec_x, config, noise);
  if (spec_y.horizon != spec_x.horizon) throw std::invalid_argument("horizon mismatch between coupled SDEs");
  SamplePaths px(noise.paths(), config, noise.seed());
  SamplePaths py(noise.paths(), config, noise.seed());
  const Stream y_stream = couple_initial ? Stream::InitialX : Stream::InitialY;
  parallel_for(block_count(noise.paths()), [&](std::size_t b) {
    std::vector<double> g(config.m);
    const std::size_t end = std::min(noise.paths(), (b + 1) * kPathBlock);
    for (std::size_t n = b * kPathBlock; n < end; ++n) {
      noise.fill(n, g);
      const double x0 = spec_x.initial.quantile(noise.initial_uniform(n, Stream::InitialX));
      const double y0 = spec_y.initial.quantile(noise.initial_uniform(n, y_stream));
      simulate_path(spec_x, config, x0, g, px.path(n));
      simulate_path(spec_y, config, y0, g, py.path(n));
    }
  });
  return {std::move(px), std::move(py)};
}

double interpolate(std::span<const double> values, double horizon, double t) {
  if (values.empty()) throw std::invalid_argument("interpolate: empty values");
  if (!(t >= 0.0 && t <= horizon)) throw std::out_of_range("interpolate: t outside [0, T]");
  const std::size_t m = values.size() - 1;
  if (m == 0) return values[0];
  const double pos = t / horizon * static_cast<double>(m);
  const std::size_t k = std::min(static_cast<std::size_t>(pos), m - 1);
  const double frac = pos - static_cast<double>(k);
  if (frac == 0.0) return values[k];
  if (frac == 1.0) return values[k + 1];
  return (1.0 - frac) * values[k] + frac * values[k + 1];
}

void exact_gbm_path(double x0, double theta, double horizon, std::span<const double> gaussians,
                    std::span<double> out) {
  if (theta < 0.0) throw std::invalid_argument("exact_gbm_paths: theta must be >= 0");
  const std::size_t m = out.size() - 1;
  const double h = horizon / static_cast<double>(m);
  const double sqrt_h = std::sqrt(h);
  double w = 0.0;
  out[0] = x0;
  for (std::size_t k = 1; k <= m; ++k) {
    w += sqrt_h * gaussians[k - 1];
    const double t = horizon * static_cast<double>(k) / static_cast<double>(m);
    out[k] = x0 * std::exp(theta * w - 0.5 * theta * theta * t);
  }
}

SamplePaths exact_gbm_paths(double x0, double theta, const NoisePanel& noise, double horizon) {
  SchemeConfig config{noise.steps(), SchemeVariant::PointFrozen, std::numeric_limits<double>::infinity(), horizon};
  config.validate();
  SamplePaths out(noise.paths(), config, noise.seed());
  parallel_for(block_count(noise.paths()), [&](std::size_t b) {
    std::vector<double> g(config.m);
    const std::size_t end = std::min(noise.paths(), (b + 1) * kPathBlock);
    for (std::size_t n = b * kPathBlock; n < end; ++n) {
      noise.fill(n, g);
      exact_gbm_path(x0, theta, horizon, g, out.path(n));
    }
  });
  return out;
}

namespace {

constexpr char kMagic[8] = {'C', 'V', 'O', 'R', 'D', 'S', 'P', '1'};

template <class T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("read_binary: truncated header");
  return v;
}

}  // namespace

void write_binary(const SamplePaths& paths, const std::string& filename) {
  std::ofstream os(filename, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + filename);
  os.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(os, paths.paths());
  put<std::uint64_t>(os, paths.steps());
  put<double>(os, paths.config().horizon);
  put<std::uint64_t>(os, paths.seed());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(paths.config().variant));
  put<std::uint32_t>(os, 0);
  put<double>(os, paths.config().threshold);
  os.write(reinterpret_cast<const char*>(paths.data().data()),
           static_cast<std::streamsize>(paths.data().size() * sizeof(double)));
  if (!os) throw std::runtime_error("write failed: " + filename);
}

SamplePaths read_binary(const std::string& filename) {
  std::ifstream is(filename, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + filename);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw std::runtime_error("read_binary: bad magic");
  const auto n = get<std::uint64_t>(is);
  const auto m = get<std::uint64_t>(is);
  SchemeConfig config;
  config.m = m;
  config.horizon = get<double>(is);
  const auto seed = get<std::uint64_t>(is);
  config.variant = static_cast<SchemeVariant>(get<std::uint32_t>(is));
  get<std::uint32_t>(is);
  config.threshold = get<double>(is);
  SamplePaths out(n, config, seed);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.path(i);
    is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!is) throw std::runtime_error("read_binary: truncated body");
  return out;
}

void write_csv(const SamplePaths& paths, const std::string& filename) {
  std::ofstream os(filename);
  if (!os) throw std::runtime_error("cannot open " + filename);
  os << "path,k,t,value\n" << std::setprecision(17);
  for (std::size_t n = 0; n < paths.paths(); ++n) {
    for (std::size_t k = 0; k <= paths.steps(); ++k) {
      os << n << ',' << k << ',' << paths.config().time(k) << ',' << paths(n, k) << '\n';
    }
  }
}

}  // namespace convord
