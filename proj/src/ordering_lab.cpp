#include "convord/ordering_lab.hpp"

#include "convord/approximation.hpp"
#include "convord/parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

namespace convord {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxFlagged = 10;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double z_of(double mean, double se) {
  if (se > 0.0) return mean / se;
  if (mean > 0.0) return kInf;
  if (mean < 0.0) return -kInf;
  return 0.0;
}

// Mean, variances and covariance of a pair of streams.
struct PairStats {
  std::size_t n = 0;
  double ma = 0.0;
  double mb = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  double sab = 0.0;

  void push(double a, double b) {
    ++n;
    const double da = a - ma;
    const double db = b - mb;
    ma += da / static_cast<double>(n);
    mb += db / static_cast<double>(n);
    saa += da * (a - ma);
    sbb += db * (b - mb);
    sab += da * (b - mb);
  }

  void merge(const PairStats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double w = static_cast<double>(n) * static_cast<double>(o.n) / total;
    const double da = o.ma - ma;
    const double db = o.mb - mb;
    saa += o.saa + da * da * w;
    sbb += o.sbb + db * db * w;
    sab += o.sab + da * db * w;
    ma += da * static_cast<double>(o.n) / total;
    mb += db * static_cast<double>(o.n) / total;
    n += o.n;
  }
};

MeanEstimate to_estimate(const RunningStats& s, std::size_t nonfinite, std::vector<std::size_t> flagged) {
  return {s.mean, s.std_error(), s.n, nonfinite, std::move(flagged)};
}

bool requires_nondecreasing(OrderingMode mode) {
  return mode == OrderingMode::Icv || mode == OrderingMode::Diricv;
}

bool directional(OrderingMode mode) { return mode == OrderingMode::Diricv || mode == OrderingMode::Dircvx; }

TimeGrid validation_times(const SdeSpec& x, const SdeSpec& y) {
  std::set<double> t;
  for (double v : default_time_grid(x.horizon)) t.insert(v);
  for (const CoefficientField* f : {&x.drift, &x.diffusion, &y.drift, &y.diffusion}) {
    for (double b : f->time_breakpoints()) {
      if (b <= x.horizon) t.insert(b);
    }
  }
  return {t.begin(), t.end()};
}

double initial_draw(const InitialLaw& law, const NoisePanel& noise, std::size_t n, Stream stream) {
  if (law.kind() == InitialLaw::Kind::Dirac) return law.params()[0];
  return law.quantile(noise.initial_uniform(n, stream));
}

}  // namespace

std::string_view mode_id(OrderingMode mode) {
  switch (mode) {
    case OrderingMode::Icv: return "icv";
    case OrderingMode::Cvx: return "cvx";
    case OrderingMode::Diricv: return "diricv";
    case OrderingMode::Dircvx: return "dircvx";
  }
  return "icv";
}

OrderingMode parse_mode(std::string_view id) {
  if (id == "icv") return OrderingMode::Icv;
  if (id == "cvx") return OrderingMode::Cvx;
  if (id == "diricv") return OrderingMode::Diricv;
  if (id == "dircvx") return OrderingMode::Dircvx;
  throw std::invalid_argument("unknown mode '" + std::string(id) + "'");
}

std::string_view verdict_id(Verdict verdict) {
  switch (verdict) {
    case Verdict::Ordered: return "ordered";
    case Verdict::Inconclusive: return "inconclusive";
    case Verdict::Violated: return "violated";
  }
  return "inconclusive";
}

Verdict classify(double mean, double std_error, double z_crit) {
  if (std_error == 0.0) return mean >= 0.0 ? Verdict::Ordered : Verdict::Violated;
  if (mean < -z_crit * std_error) return Verdict::Violated;
  if (mean > z_crit * std_error) return Verdict::Ordered;
  return Verdict::Inconclusive;
}

double critical_value(double confidence) {
  if (!(confidence > 0.5 && confidence < 1.0)) throw std::invalid_argument("confidence must lie in (0.5, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), confidence);
}

void RunningStats::push(double v) {
  ++n;
  const double d = v - mean;
  mean += d / static_cast<double>(n);
  m2 += d * (v - mean);
}

void RunningStats::merge(const RunningStats& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const double total = static_cast<double>(n + o.n);
  const double d = o.mean - mean;
  m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
  mean += d * static_cast<double>(o.n) / total;
  n += o.n;
}

bool OrderingReport::any_violated() const {
  return std::any_of(results.begin(), results.end(), [](const auto& r) { return r.verdict == Verdict::Violated; });
}

std::vector<std::string> check_initial_order(const InitialLaw& x, const InitialLaw& y, OrderingMode mode) {
  std::vector<std::string> issues;
  auto stop_loss = [](const InitialLaw& law, double t) {
    double acc = 0.0;
    for (const auto& [v, w] : law.atoms()) acc += w * std::max(v - t, 0.0);
    return acc;
  };
  std::vector<double> points;
  for (const auto& a : x.atoms()) points.push_back(a.first);
  for (const auto& a : y.atoms()) points.push_back(a.first);
  std::sort(points.begin(), points.end());
  for (double t : points) {
    const double ex = stop_loss(x, t);
    const double ey = stop_loss(y, t);
    if (ex > ey + 1e-12 * (1.0 + std::abs(ey))) {
      issues.push_back("initial laws not increasing-convex ordered: E(X0-t)+ = " + fmt(ex) + " > E(Y0-t)+ = " +
                       fmt(ey) + " at t = " + fmt(t));
      break;
    }
  }
  const double mx = x.mean();
  const double my = y.mean();
  if (mx > my + 1e-12 * (1.0 + std::abs(my))) {
    issues.push_back("initial means not ordered: E X0 = " + fmt(mx) + " > E Y0 = " + fmt(my));
  }
  if (!requires_nondecreasing(mode) && std::abs(mx - my) > 1e-12 * (1.0 + std::abs(my))) {
    issues.push_back("convex modes need equal initial means: " + fmt(mx) + " vs " + fmt(my));
  }
  return issues;
}

Resolution resolve_experiment(const ExperimentSpec& spec) {
  Resolution r;
  r.x = spec.x;
  r.y = spec.y;
  const double horizon = spec.x.horizon;
  if (spec.y.horizon != horizon) throw std::invalid_argument("horizon mismatch between sde_x and sde_y");
  if (spec.paths < 2) throw std::invalid_argument("need at least 2 paths");

  for (const auto& fs : spec.suite) {
    const TestFunctional f = TestFunctional::from_spec(fs);
    for (double t : f.marginal_times()) {
      if (t > horizon) throw std::invalid_argument("functional " + f.label() + ": marginal time beyond horizon");
    }
    const bool shape = directional(spec.mode) ? f.is_dir_convex() : f.is_convex();
    const bool monotone = !requires_nondecreasing(spec.mode) || f.is_nondecreasing();
    if (!shape || !monotone) {
      r.issues.push_back("functional " + f.label() + " is outside the " + std::string(mode_id(spec.mode)) + " class");
    }
  }

  const SpatialGrid& grid = spec.estimation_grid;
  r.constants_x = compute_constants(r.x, grid);
  r.constants_y = compute_constants(r.y, grid);
  if (!spec.override_hypotheses && std::isinf(r.constants_x.a_sigma) && std::isinf(r.constants_y.a_sigma)) {
    if (r.x.diffusion.time_dependent() || r.y.diffusion.time_dependent()) {
      r.issues.push_back("a_sigma is infinite on both sides and time-dependent diffusions are not mollified");
    } else {
      try {
        const SmoothedPair pair = build_mollified_pair(r.x.diffusion, r.y.diffusion, spec.mollify_n, 0.0);
        r.x.diffusion = pair.sigma;
        r.y.diffusion = pair.theta;
        r.substitutions.push_back("diffusions replaced by mollified pair n=" + std::to_string(spec.mollify_n));
        r.constants_x = compute_constants(r.x, grid);
        r.constants_y = compute_constants(r.y, grid);
      } catch (const HypothesisViolation& e) {
        r.issues.push_back(e.what());
      }
    }
  }

  const bool drift_dominance = requires_nondecreasing(spec.mode);
  if (!drift_dominance) {
    if (!(r.x.drift == r.y.drift)) r.issues.push_back("convex modes need identical drifts");
    if (!r.x.drift.known().affine) r.issues.push_back("convex modes need a drift affine in space");
  }
  const DominationCheck dom = check_domination(r.x, r.y, grid, validation_times(r.x, r.y), drift_dominance);
  if (!dom.holds()) r.issues.push_back(dom.describe());
  for (auto& issue : check_initial_order(r.x.initial, r.y.initial, spec.mode)) r.issues.push_back(std::move(issue));

  const ConstantsReport* side = nullptr;
  if (std::isfinite(r.constants_x.m_min)) {
    side = &r.constants_x;
    r.admissible_side = "X";
  } else if (std::isfinite(r.constants_y.m_min)) {
    side = &r.constants_y;
    r.admissible_side = "Y";
  } else {
    r.issues.push_back("neither side has a finite semi-convexity constant");
  }
  r.m_min = side ? side->m_min : kInf;
  const std::size_t m_floor = side ? static_cast<std::size_t>(std::ceil(r.m_min * (1.0 - 1e-12))) : 0;
  std::size_t m = spec.m;
  if (m == 0) m = std::max<std::size_t>(m_floor, 32);
  if (side && m < m_floor) {
    r.issues.push_back("m = " + std::to_string(m) + " is below the minimal step count " + fmt(r.m_min));
  }
  const double lip = side ? side->lip : r.constants_x.lip;
  r.s_default = default_threshold(lip, horizon, m);
  const double s = spec.threshold.value_or(r.s_default);
  if (s > r.s_default * (1.0 + 1e-12)) {
    r.issues.push_back("threshold " + fmt(s) + " exceeds s_default = " + fmt(r.s_default));
  }
  r.scheme = {m, spec.variant, s, horizon};
  r.scheme.validate();

  if (!r.issues.empty()) {
    if (!spec.override_hypotheses) {
      std::string msg = "hypotheses not satisfied:";
      for (const auto& issue : r.issues) msg += "\n  - " + issue;
      throw HypothesisViolation(msg);
    }
    r.overridden = true;
  }
  return r;
}

MeanEstimate estimate_functional(const SamplePaths& paths, const TestFunctional& f) {
  const std::size_t blocks = block_count(paths.paths());
  std::vector<RunningStats> stats(blocks);
  std::vector<std::vector<std::size_t>> flagged(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t end = std::min(paths.paths(), (b + 1) * kPathBlock);
    for (std::size_t n = b * kPathBlock; n < end; ++n) {
      const double v = f.on_path(paths.path(n), paths.config().horizon);
      if (std::isfinite(v)) {
        stats[b].push(v);
      } else {
        flagged[b].push_back(n);
      }
    }
  });
  RunningStats total;
  std::vector<std::size_t> all;
  for (std::size_t b = 0; b < blocks; ++b) {
    total.merge(stats[b]);
    all.insert(all.end(), flagged[b].begin(), flagged[b].end());
  }
  const std::size_t nonfinite = all.size();
  if (all.size() > kMaxFlagged) all.resize(kMaxFlagged);
  return to_estimate(total, nonfinite, std::move(all));
}

MeanEstimate estimate_functional(const SdeSpec& spec, const SchemeConfig& config, const TestFunctional& f,
                                 std::size_t paths, std::uint64_t seed) {
  config.validate();
  const NoisePanel noise(paths, config.m, seed);
  const std::size_t blocks = block_count(paths);
  std::vector<RunningStats> stats(blocks);
  std::vector<std::vector<std::size_t>> flagged(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> g(config.m), path(config.m + 1);
    const std::size_t end = std::min(paths, (b + 1) * kPathBlock);
    for (std::size_t n = b * kPathBlock; n < end; ++n) {
      noise.fill(n, g);
      simulate_path(spec, config, initial_draw(spec.initial, noise, n, Stream::InitialX), g, path);
      const double v = f.on_path(path, config.horizon);
      if (std::isfinite(v)) {
        stats[b].push(v);
      } else {
        flagged[b].push_back(n);
      }
    }
  });
  RunningStats total;
  std::vector<std::size_t> all;
  for (std::size_t b = 0; b < blocks; ++b) {
    total.merge(stats[b]);
    all.insert(all.end(), flagged[b].begin(), flagged[b].end());
  }
  const std::size_t nonfinite = all.size();
  if (all.size() > kMaxFlagged) all.resize(kMaxFlagged);
  return to_estimate(total, nonfinite, std::move(all));
}

OrderingReport compare_ordered(const ExperimentSpec& spec) { return compare_resolved(spec, resolve_experiment(spec)); }

OrderingReport compare_resolved(const ExperimentSpec& spec, const Resolution& resolution) {
  const SchemeConfig& config = resolution.scheme;
  const std::size_t n_paths = spec.paths;
  const NoisePanel noise(n_paths, config.m, spec.seed, Stream::Gaussian);
  const NoisePanel noise_alt(n_paths, config.m, spec.seed, Stream::GaussianAlt);
  const Stream y_stream = spec.couple_initial ? Stream::InitialX : Stream::InitialY;
  std::vector<TestFunctional> suite;
  for (const auto& fs : spec.suite) suite.push_back(TestFunctional::from_spec(fs));
  const std::size_t q = suite.size();

  struct Block {
    std::vector<RunningStats> x, y, d;
    std::vector<std::vector<std::size_t>> flagged;
  };
  const std::size_t blocks = block_count(n_paths);
  std::vector<Block> acc(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    Block& blk = acc[b];
    blk.x.resize(q);
    blk.y.resize(q);
    blk.d.resize(q);
    blk.flagged.resize(q);
    std::vector<double> gx(config.m), gy(config.m), px(config.m + 1), py(config.m + 1);
    const std::size_t end = std::min(n_paths, (b + 1) * kPathBlock);
    for (std::size_t n = b * kPathBlock; n < end; ++n) {
      noise.fill(n, gx);
      if (spec.independent_noise) noise_alt.fill(n, gy);
      const double x0 = initial_draw(resolution.x.initial, noise, n, Stream::InitialX);
      const double y0 = initial_draw(resolution.y.initial, noise, n, y_stream);
      simulate_path(resolution.x, config, x0, gx, px);
      simulate_path(resolution.y, config, y0, spec.independent_noise ? gy : gx, py);
      for (std::size_t i = 0; i < q; ++i) {
        const double fx = suite[i].on_path(px, config.horizon);
        const double fy = suite[i].on_path(py, config.horizon);
        if (!std::isfinite(fx) || !std::isfinite(fy)) {
          blk.flagged[i].push_back(n);
          continue;
        }
        blk.x[i].push(fx);
        blk.y[i].push(fy);
        blk.d[i].push(fy - fx);
      }
    }
  });

  OrderingReport report;
  report.mode = std::string(mode_id(spec.mode));
  report.paths = n_paths;
  report.m = config.m;
  report.threshold = config.threshold;
  report.variant = std::string(variant_id(config.variant));
  report.seed = spec.seed;
  report.generator = std::string(kGeneratorId);
  report.confidence = spec.confidence;
  report.z_crit = critical_value(spec.confidence);
  report.couple_initial = spec.couple_initial;
  report.independent_noise = spec.independent_noise;
  report.resolution = resolution;
  for (std::size_t i = 0; i < q; ++i) {
    RunningStats sx, sy, sd;
    FunctionalResult r;
    for (const Block& blk : acc) {
      sx.merge(blk.x[i]);
      sy.merge(blk.y[i]);
      sd.merge(blk.d[i]);
      r.nonfinite += blk.flagged[i].size();
      for (std::size_t idx : blk.flagged[i]) {
        if (r.flagged.size() < kMaxFlagged) r.flagged.push_back(idx);
      }
    }
    r.label = suite[i].label();
    r.mean_x = sx.mean;
    r.mean_y = sy.mean;
    r.stderr_x = sx.std_error();
    r.stderr_y = sy.std_error();
    r.paired_diff_mean = sd.mean;
    r.paired_stderr = sd.std_error();
    r.z_score = z_of(r.paired_diff_mean, r.paired_stderr);
    r.verdict = classify(r.paired_diff_mean, r.paired_stderr, report.z_crit);
    report.results.push_back(std::move(r));
  }
  return report;
}

ValueFunctionReport value_function_convexity(const SdeSpec& spec, const TestFunctional& f, const SpatialGrid& grid,
                                             const SchemeConfig& scheme, std::size_t paths, std::uint64_t seed,
                                             double confidence) {
  scheme.validate();
  const std::size_t g_nodes = grid.nodes;
  if (g_nodes < 3) throw std::invalid_argument("value_function_convexity: need at least 3 grid nodes");
  const NoisePanel noise(paths, scheme.m, seed);
  struct Block {
    std::vector<RunningStats> v, d1, d2;
  };
  const std::size_t blocks = block_count(paths);
  std::vector<Block> acc(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    Block& blk = acc[b];
    blk.v.resize(g_nodes);
    blk.d1.resize(g_nodes - 1);
    blk.d2.resize(g_nodes - 2);
    std::vector<double> g(scheme.m), path(scheme.m + 1), vals(g_nodes);
    const std::size_t end = std::min(paths, (b + 1) * kPathBlock);
    for (std::size_t n = b * kPathBlock; n < end; ++n) {
      noise.fill(n, g);
      for (std::size_t i = 0; i < g_nodes; ++i) {
        simulate_path(spec, scheme, grid.node(i), g, path);
        vals[i] = f.on_path(path, scheme.horizon);
        blk.v[i].push(vals[i]);
      }
      for (std::size_t i = 0; i + 1 < g_nodes; ++i) blk.d1[i].push(vals[i + 1] - vals[i]);
      for (std::size_t i = 1; i + 1 < g_nodes; ++i) blk.d2[i - 1].push(vals[i + 1] - 2.0 * vals[i] + vals[i - 1]);
    }
  });
  ValueFunctionReport r;
  r.z_crit = critical_value(confidence);
  r.min_second_z = kInf;
  r.min_first_z = kInf;
  for (std::size_t i = 0; i < g_nodes; ++i) {
    RunningStats s;
    for (const auto& blk : acc) s.merge(blk.v[i]);
    r.x.push_back(grid.node(i));
    r.value.push_back(s.mean);
    r.value_stderr.push_back(s.std_error());
  }
  for (std::size_t i = 0; i + 1 < g_nodes; ++i) {
    RunningStats s;
    for (const auto& blk : acc) s.merge(blk.d1[i]);
    r.first_difference.push_back(s.mean);
    r.first_stderr.push_back(s.std_error());
    r.min_first_z = std::min(r.min_first_z, z_of(s.mean, s.std_error()));
    if (classify(s.mean, s.std_error(), r.z_crit) == Verdict::Violated) ++r.monotonicity_violations;
  }
  for (std::size_t i = 0; i + 2 < g_nodes; ++i) {
    RunningStats s;
    for (const auto& blk : acc) s.merge(blk.d2[i]);
    r.second_difference.push_back(s.mean);
    r.second_stderr.push_back(s.std_error());
    r.min_second_z = std::min(r.min_second_z, z_of(s.mean, s.std_error()));
    if (classify(s.mean, s.std_error(), r.z_crit) == Verdict::Violated) ++r.convexity_violations;
  }
  return r;
}

SigmaConditionReport marginal_sigma_condition(const SdeSpec& x, const SdeSpec& y, double t,
                                              const SchemeConfig& scheme, std::size_t paths, std::uint64_t seed) {
  scheme.validate();
  if (!(t >= 0.0 && t <= scheme.horizon)) throw std::out_of_range("marginal_sigma_condition: t outside [0, T]");
  SigmaConditionReport r;
  r.k = static_cast<std::size_t>(std::llround(t / scheme.step()));
  r.k = std::min(r.k, scheme.m);
  r.t = scheme.time(r.k);
  const NoisePanel noise(paths, scheme.m, seed);
  const std::size_t blocks = block_count(paths);
  std::vector<PairStats> acc(blocks);
  std::vector<RunningStats> diff(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> g(scheme.m), px(scheme.m + 1), py(scheme.m + 1);
    const std::size_t end = std::min(paths, (b + 1) * kPathBlock);
    for (std::size_t n = b * kPathBlock; n < end; ++n) {
      noise.fill(n, g);
      simulate_path(x, scheme, initial_draw(x.initial, noise, n, Stream::InitialX), g, px);
      simulate_path(y, scheme, initial_draw(y.initial, noise, n, Stream::InitialX), g, py);
      const double a = std::abs(x.diffusion(r.t, px[r.k]));
      const double c = std::abs(y.diffusion(r.t, py[r.k]));
      acc[b].push(a, c);
      diff[b].push(c - a);
    }
  });
  PairStats total;
  RunningStats d;
  for (std::size_t b = 0; b < blocks; ++b) {
    total.merge(acc[b]);
    d.merge(diff[b]);
  }
  const double nn = static_cast<double>(total.n);
  auto se = [&](double ss) { return total.n > 1 ? std::sqrt(ss / (nn - 1.0) / nn) : 0.0; };
  r.abs_sigma_x = {total.ma, se(total.saa), total.n, 0, {}};
  r.abs_theta_y = {total.mb, se(total.sbb), total.n, 0, {}};
  r.paired_diff_mean = d.mean;
  r.paired_stderr = d.std_error();
  r.z_score = z_of(d.mean, d.std_error());
  return r;
}

std::vector<IncrementRow> increment_asymptotic(const SdeSpec& spec, double s, const std::vector<double>& h_list,
                                               const SchemeConfig& scheme, std::size_t paths, std::uint64_t seed) {
  scheme.validate();
  const double step = scheme.step();
  auto steps_of = [&](double v, const char* what) {
    const double r = v / step;
    const double k = std::nearbyint(r);
    if (std::abs(r - k) > 1e-9 * std::max(1.0, r)) {
      throw std::invalid_argument(std::string("increment_asymptotic: ") + what + " is not a multiple of T/m");
    }
    return static_cast<std::size_t>(k);
  };
  const std::size_t ks = steps_of(s, "s");
  std::vector<std::size_t> kh;
  for (double h : h_list) {
    const std::size_t k = steps_of(h, "h");
    if (k == 0) throw std::invalid_argument("increment_asymptotic: h must be positive");
    if (ks + k > scheme.m) throw std::invalid_argument("increment_asymptotic: s + h beyond horizon");
    kh.push_back(k);
  }
  const NoisePanel noise(paths, scheme.m, seed);
  const std::size_t blocks = block_count(paths);
  std::vector<std::vector<PairStats>> acc(blocks, std::vector<PairStats>(h_list.size()));
  const double ts = scheme.time(ks);
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> g(scheme.m), path(scheme.m + 1);
    const std::size_t end = std::min(paths, (b + 1) * kPathBlock);
    for (std::size_t n = b * kPathBlock; n < end; ++n) {
      noise.fill(n, g);
      simulate_path(spec, scheme, initial_draw(spec.initial, noise, n, Stream::InitialX), g, path);
      const double sig = std::abs(spec.diffusion(ts, path[ks]));
      for (std::size_t j = 0; j < kh.size(); ++j) acc[b][j].push(std::abs(path[ks + kh[j]] - path[ks]), sig);
    }
  });
  std::vector<IncrementRow> rows;
  for (std::size_t j = 0; j < h_list.size(); ++j) {
    PairStats t;
    for (std::size_t b = 0; b < blocks; ++b) t.merge(acc[b][j]);
    const double h = static_cast<double>(kh[j]) * step;
    const double scale = std::sqrt(2.0 * h / std::numbers::pi);
    IncrementRow row;
    row.h = h;
    row.mean_abs_increment = t.ma;
    row.mean_abs_sigma = t.mb;
    row.ratio = t.ma / (scale * t.mb);
    if (t.n > 1) {
      const double nn = static_cast<double>(t.n);
      const double va = t.saa / (nn - 1.0) / nn;
      const double vb = t.sbb / (nn - 1.0) / nn;
      const double cab = t.sab / (nn - 1.0) / nn;
      const double rel = va / (t.ma * t.ma) + vb / (t.mb * t.mb) - 2.0 * cab / (t.ma * t.mb);
      row.ratio_stderr = std::abs(row.ratio) * std::sqrt(std::max(rel, 0.0));
    }
    rows.push_back(row);
  }
  return rows;
}

bool PropagationReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.passed(); });
}

PropagationReport propagate_suite(const SdeSpec& x, const std::optional<SdeSpec>& y, const SchemeConfig& scheme,
                                  const std::vector<FunctionalSpec>& suite, const PropagationSetup& setup) {
  scheme.validate();
  if (!(setup.lo < setup.hi) || setup.nodes < 3) throw std::invalid_argument("propagate_suite: bad grid");
  if (!(setup.check_margin >= 0.0 && setup.check_margin < 0.5)) {
    throw std::invalid_argument("propagate_suite: check_margin must lie in [0, 0.5)");
  }
  PropagationReport report;
  report.scheme = scheme;
  report.setup = setup;
  const TruncatedGaussianMeasure measure = build_measure(scheme.threshold, setup.quadrature_nodes);
  for (const auto& fs : suite) {
    const TestFunctional f = TestFunctional::from_spec(fs);
    PropagationRow row;
    row.label = f.label();
    row.kind = std::string(kind_id(f.kind()));
    GridFunction g(setup.lo, setup.hi, std::vector<double>(2, 0.0));
    if (f.kind() == FunctionalKind::Terminal) {
      const GridFunction terminal =
          GridFunction::sample([&](double u) { return f(std::span<const double>(&u, 1)); }, setup.lo, setup.hi,
                               setup.nodes);
      g = backward_induct_terminal(terminal, x, scheme, measure);
      if (y && f.is_convex() && (f.is_nondecreasing() || x.drift == y->drift)) {
        const GridFunction gap = kernel_ordering_gap(terminal, x, *y, scheme, measure);
        double lowest = kInf;
        for (std::size_t i = 0; i < gap.size(); ++i) {
          const double xi = gap.node(i);
          if (xi >= setup.window_lo() && xi <= setup.window_hi()) lowest = std::min(lowest, gap.values()[i]);
        }
        row.min_gap = lowest;
        row.gap_ok = *row.min_gap >= -setup.gap_tolerance;
      }
    } else if (f.kind() == FunctionalKind::MultiMarginal && f.marginal_times().size() <= 3) {
      std::vector<std::size_t> steps;
      for (double t : f.marginal_times()) {
        const double r = t / scheme.step();
        const double k = std::nearbyint(r);
        if (std::abs(r - k) > 1e-9 * std::max(1.0, r)) {
          row.skipped = "marginal time " + fmt(t) + " is not a grid time";
          break;
        }
        steps.push_back(static_cast<std::size_t>(k));
      }
      if (row.skipped.empty()) {
        const std::size_t nodes = steps.size() == 3 ? setup.tensor_nodes_3
                                  : steps.size() == 2 ? setup.tensor_nodes_2
                                                      : setup.nodes;
        const auto tensor = TensorGridFunction::sample([&](std::span<const double> u) { return f(u); }, setup.lo,
                                                       setup.hi, nodes, steps);
        g = multi_marginal_induct(tensor, x, scheme, measure);
      }
    } else {
      row.skipped = "no grid propagation for this functional";
    }
    if (row.skipped.empty()) {
      row.defect = grid_convexity_defect(g, setup.window_lo(), setup.window_hi());
      const bool convex = f.kind() == FunctionalKind::Terminal ? f.is_convex() : f.is_dir_convex();
      if (convex) row.convex_ok = row.defect.min_second_difference >= -setup.convexity_tolerance;
      if (f.is_nondecreasing()) row.monotone_ok = row.defect.min_first_difference >= -setup.convexity_tolerance;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

CounterexampleReport counterexample_demo(const CounterexampleSetup& setup) {
  if (!(setup.h > 0.0)) throw std::invalid_argument("counterexample_demo: h must be positive");
  CounterexampleReport out;
  const SchemeConfig config{1, SchemeVariant::PointFrozen, setup.s, setup.h};
  const SdeSpec base{CoefficientField::constant(0.0), setup.sigma, setup.h, InitialLaw::dirac(setup.mid)};

  const TruncatedGaussianMeasure measure = build_measure(setup.s, setup.quadrature_nodes);
  const auto tensor = TensorGridFunction::sample(
      [](std::span<const double> u) { return std::abs(u[0] - u[1]); }, setup.grid_lo, setup.grid_hi,
      setup.grid_nodes, {0, 1});
  const GridFunction g = multi_marginal_induct(tensor, base, config, measure);
  out.g = {g(setup.left), g(setup.mid), g(setup.right)};
  out.oracle_violation = out.g[1] - 0.5 * (out.g[0] + out.g[2]);
  auto abs_sigma = [&](double x) { return std::abs(setup.sigma(0.0, x)); };
  out.closed_form = std::sqrt(setup.h) * truncated_abs_moment(setup.s) *
                    (abs_sigma(setup.mid) - 0.5 * (abs_sigma(setup.left) + abs_sigma(setup.right)));

  const NoisePanel noise(setup.paths, 1, setup.seed);
  const std::size_t blocks = block_count(setup.paths);
  std::vector<RunningStats> acc(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t end = std::min(setup.paths, (b + 1) * kPathBlock);
    for (std::size_t n = b * kPathBlock; n < end; ++n) {
      const double z = draw_truncated(noise(n, 0), setup.s);
      auto inc = [&](double x) { return std::abs(step(x, 0, base, config, z) - x); };
      acc[b].push(inc(setup.mid) - 0.5 * (inc(setup.left) + inc(setup.right)));
    }
  });
  RunningStats total;
  for (const auto& a : acc) total.merge(a);
  out.mc_violation = total.mean;
  out.mc_stderr = total.std_error();

  ExperimentSpec exp;
  exp.x = base;
  exp.y = base;
  exp.y.initial = InitialLaw::two_point(0.5, setup.left, setup.right);
  exp.mode = OrderingMode::Cvx;
  exp.m = 1;
  exp.threshold = setup.s;
  exp.suite = {FunctionalSpec{"abs_diff", {}, "identity", "identity", {0.0, setup.h}}};
  exp.paths = setup.paths;
  exp.seed = setup.seed;
  exp.confidence = setup.confidence;
  exp.override_hypotheses = true;
  out.comparison = compare_ordered(exp);
  return out;
}

}  // namespace convord
