#include "convord/convergence.hpp"

#include "convord/ordering_lab.hpp"
#include "convord/parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace convord {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double w1_empirical(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("w1_empirical: sample sizes differ");
  if (a.empty()) return 0.0;
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) acc += std::abs(sa[i] - sb[i]);
  return acc / static_cast<double>(sa.size());
}

double gaussian_two_sided_tail(double s) {
  if (s <= 0.0) return 1.0;
  return std::erfc(s / std::sqrt(2.0));
}

double black_scholes_call(double x0, double strike, double theta, double horizon) {
  if (theta <= 0.0 || horizon <= 0.0) return std::max(x0 - strike, 0.0);
  const boost::math::normal_distribution<double> nd;
  const double vol = theta * std::sqrt(horizon);
  const double d1 = (std::log(x0 / strike) + 0.5 * vol * vol) / vol;
  const double d2 = d1 - vol;
  return x0 * boost::math::cdf(nd, d1) - strike * boost::math::cdf(nd, d2);
}

std::string_view policy_id(ThresholdPolicyKind kind) {
  switch (kind) {
    case ThresholdPolicyKind::Default: return "default";
    case ThresholdPolicyKind::Infinite: return "infinite";
    case ThresholdPolicyKind::Constant: return "constant";
    case ThresholdPolicyKind::LogScaled: return "log_scaled";
  }
  return "default";
}

ThresholdPolicyKind parse_policy(std::string_view id) {
  if (id == "default") return ThresholdPolicyKind::Default;
  if (id == "infinite") return ThresholdPolicyKind::Infinite;
  if (id == "constant") return ThresholdPolicyKind::Constant;
  if (id == "log_scaled") return ThresholdPolicyKind::LogScaled;
  throw std::invalid_argument("unknown threshold policy '" + std::string(id) + "'");
}

double ThresholdPolicy::resolve(double lip, double horizon, std::size_t m) const {
  switch (kind) {
    case ThresholdPolicyKind::Default: return default_threshold(lip, horizon, m);
    case ThresholdPolicyKind::Infinite: return kInf;
    case ThresholdPolicyKind::Constant: return value;
    case ThresholdPolicyKind::LogScaled: return value * std::sqrt(std::log(static_cast<double>(m)));
  }
  return kInf;
}

RateReport strong_error_rate(double theta, double x0, double horizon, const std::vector<std::size_t>& m_list,
                             std::size_t paths, std::uint64_t seed, const ThresholdPolicy& policy,
                             SchemeVariant variant) {
  if (m_list.size() < 2) throw std::invalid_argument("strong_error_rate: need at least two step counts");
  if (paths < 2) throw std::invalid_argument("strong_error_rate: need at least 2 paths");
  RateReport r;
  r.m_list = m_list;
  r.paths = paths;
  r.seed = seed;
  const SdeSpec spec{CoefficientField::constant(0.0), CoefficientField::proportional(theta), horizon,
                     InitialLaw::dirac(x0)};
  for (std::size_t m : m_list) {
    const SchemeConfig config{m, variant, policy.resolve(theta, horizon, m), horizon};
    config.validate();
    r.thresholds.push_back(config.threshold);
    const NoisePanel noise(paths, m, seed);
    const std::size_t blocks = block_count(paths);
    std::vector<RunningStats> acc(blocks);
    parallel_for(blocks, [&](std::size_t b) {
      std::vector<double> g(m), exact(m + 1), scheme(m + 1);
      const std::size_t end = std::min(paths, (b + 1) * kPathBlock);
      for (std::size_t n = b * kPathBlock; n < end; ++n) {
        noise.fill(n, g);
        exact_gbm_path(x0, theta, horizon, g, exact);
        simulate_path(spec, config, x0, g, scheme);
        double gap = 0.0;
        for (std::size_t k = 0; k <= m; ++k) gap = std::max(gap, std::abs(exact[k] - scheme[k]));
        acc[b].push(gap);
      }
    });
    RunningStats total;
    for (const auto& a : acc) total.merge(a);
    r.error.push_back(total.mean);
    r.error_stderr.push_back(total.std_error());
  }

  const std::size_t q = m_list.size();
  r.residuals.assign(q, 0.0);
  if (std::any_of(r.error.begin(), r.error.end(), [](double e) { return !(e > 0.0); })) {
    r.degenerate = true;
    return r;
  }
  std::vector<double> lx(q), ly(q);
  for (std::size_t i = 0; i < q; ++i) {
    lx[i] = std::log(static_cast<double>(m_list[i]));
    ly[i] = std::log(r.error[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(q);
  my /= static_cast<double>(q);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("strong_error_rate: step counts must differ");
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double var = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    r.residuals[i] = ly[i] - (r.intercept + r.slope * lx[i]);
    const double w = (lx[i] - mx) / sxx;
    const double rel = r.error_stderr[i] / r.error[i];
    var += w * w * rel * rel;
  }
  r.slope_stderr = std::sqrt(var);
  return r;
}

TruncationReport truncation_event_rate(const NoisePanel& noise, double s, const SdeSpec& spec) {
  if (std::isnan(s) || s < 0.0) throw std::invalid_argument("truncation_event_rate: s must be >= 0");
  TruncationReport r;
  r.paths = noise.paths();
  r.steps = noise.steps();
  r.threshold = s;
  const std::size_t m = noise.steps();
  const SchemeConfig truncated{m, SchemeVariant::PointFrozen, s, spec.horizon};
  const SchemeConfig plain{m, SchemeVariant::PointFrozen, kInf, spec.horizon};
  truncated.validate();
  struct Block {
    std::size_t exceeding = 0;
    std::size_t compared = 0;
    std::size_t mismatches = 0;
  };
  const std::size_t blocks = block_count(noise.paths());
  std::vector<Block> acc(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> g(m), a(m + 1), c(m + 1);
    const std::size_t end = std::min(noise.paths(), (b + 1) * kPathBlock);
    for (std::size_t n = b * kPathBlock; n < end; ++n) {
      noise.fill(n, g);
      const bool exceeds = std::any_of(g.begin(), g.end(), [s](double v) { return std::abs(v) > s; });
      if (exceeds) {
        ++acc[b].exceeding;
        continue;
      }
      const double x0 = spec.initial.quantile(noise.initial_uniform(n, Stream::InitialX));
      simulate_path(spec, truncated, x0, g, a);
      simulate_path(spec, plain, x0, g, c);
      ++acc[b].compared;
      if (std::memcmp(a.data(), c.data(), a.size() * sizeof(double)) != 0) ++acc[b].mismatches;
    }
  });
  for (const auto& blk : acc) {
    r.exceeding += blk.exceeding;
    r.compared_panels += blk.compared;
    r.bitwise_mismatches += blk.mismatches;
  }
  const double nn = static_cast<double>(r.paths);
  r.observed = nn > 0.0 ? static_cast<double>(r.exceeding) / nn : 0.0;
  r.bound = static_cast<double>(m) * gaussian_two_sided_tail(s);
  const double p = std::min(r.bound, 1.0);
  r.observed_stderr = nn > 0.0 ? std::sqrt(p * (1.0 - p) / nn) : 0.0;
  r.within_bound = r.observed <= r.bound + 3.0 * r.observed_stderr;
  return r;
}

std::vector<TerminalW1Row> terminal_w1(double theta, double x0, double horizon, const std::vector<std::size_t>& m_list,
                                       std::size_t paths, std::uint64_t seed, const ThresholdPolicy& policy) {
  const SdeSpec spec{CoefficientField::constant(0.0), CoefficientField::proportional(theta), horizon,
                     InitialLaw::dirac(x0)};
  const NoisePanel reference(paths, 1, seed, Stream::GaussianAlt);
  std::vector<double> exact(paths);
  for (std::size_t n = 0; n < paths; ++n) {
    exact[n] = x0 * std::exp(theta * std::sqrt(horizon) * reference(n, 0) - 0.5 * theta * theta * horizon);
  }
  std::vector<TerminalW1Row> rows;
  for (std::size_t m : m_list) {
    const SchemeConfig config{m, SchemeVariant::PointFrozen, policy.resolve(theta, horizon, m), horizon};
    config.validate();
    const NoisePanel noise(paths, m, seed);
    std::vector<double> terminal(paths);
    parallel_for(block_count(paths), [&](std::size_t b) {
      std::vector<double> g(m), path(m + 1);
      const std::size_t end = std::min(paths, (b + 1) * kPathBlock);
      for (std::size_t n = b * kPathBlock; n < end; ++n) {
        noise.fill(n, g);
        simulate_path(spec, config, x0, g, path);
        terminal[n] = path[m];
      }
    });
    rows.push_back({m, config.threshold, w1_empirical(terminal, exact)});
  }
  return rows;
}

double truncation_gap(const SdeSpec& spec, std::size_t m, double s, std::size_t paths, std::uint64_t seed) {
  const SchemeConfig truncated{m, SchemeVariant::PointFrozen, s, spec.horizon};
  const SchemeConfig plain{m, SchemeVariant::PointFrozen, kInf, spec.horizon};
  truncated.validate();
  const NoisePanel noise(paths, m, seed);
  const std::size_t blocks = block_count(paths);
  std::vector<RunningStats> acc(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> g(m), a(m + 1), c(m + 1);
    const std::size_t end = std::min(paths, (b + 1) * kPathBlock);
    for (std::size_t n = b * kPathBlock; n < end; ++n) {
      noise.fill(n, g);
      const double x0 = spec.initial.quantile(noise.initial_uniform(n, Stream::InitialX));
      simulate_path(spec, truncated, x0, g, a);
      simulate_path(spec, plain, x0, g, c);
      double gap = 0.0;
      for (std::size_t k = 0; k <= m; ++k) gap = std::max(gap, std::abs(a[k] - c[k]));
      acc[b].push(gap);
    }
  });
  RunningStats total;
  for (const auto& a : acc) total.merge(a);
  return total.mean;
}

}  // namespace convord
