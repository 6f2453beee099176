#include "convord/functionals.hpp"

#include "convord/euler.hpp"
#include "convord/parallel.hpp"
#include "convord/quadrature.hpp"
#include "convord/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace convord {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kCheckBlock = 4096;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

using Scalar = std::function<double(double)>;

struct Outer {
  Scalar fn;
  bool nondecreasing;
  double growth;
};

Outer make_psi(const std::string& name) {
  if (name == "identity") return {[](double w) { return w; }, true, 1.0};
  if (name == "square") return {[](double w) { return w * w; }, false, 2.0};
  if (name == "exp") return {[](double w) { return std::exp(w); }, true, kInf};
  if (name == "softplus") return {softplus, true, 1.0};
  throw std::invalid_argument("unknown psi '" + name + "'");
}

// Inner function together with its exact average over a linear segment a -> b.
struct Inner {
  Scalar fn;
  std::function<double(double, double)> segment_mean;
  bool nondecreasing;
  bool nonnegative;
  std::optional<double> lipschitz;
  double growth;
};

Inner make_phi(const std::string& name, double strike) {
  if (name == "identity") {
    return {[](double x) { return x; }, [](double a, double b) { return 0.5 * (a + b); }, true, false, 1.0, 1.0};
  }
  if (name == "square") {
    return {[](double x) { return x * x; }, [](double a, double b) { return (a * a + a * b + b * b) / 3.0; }, false,
            true, std::nullopt, 2.0};
  }
  if (name == "exp") {
    return {[](double x) { return std::exp(x); },
            [](double a, double b) {
              const double d = b - a;
              if (d == 0.0) return std::exp(a);
              return std::exp(a) * std::expm1(d) / d;
            },
            true, true, std::nullopt, kInf};
  }
  if (name == "softplus") {
    return {softplus,
            [](double a, double b) { return integrate_gl([&](double u) { return softplus(a + (b - a) * u); }, 0.0, 1.0, 8); },
            true, true, 1.0, 1.0};
  }
  if (name == "call") {
    return {[strike](double x) { return std::max(x - strike, 0.0); },
            [strike](double a, double b) {
              const double pa = a - strike;
              const double pb = b - strike;
              if (pa >= 0.0 && pb >= 0.0) return 0.5 * (pa + pb);
              if (pa <= 0.0 && pb <= 0.0) return 0.0;
              const double top = std::max(pa, pb);
              return top * top / (2.0 * std::abs(pb - pa));
            },
            true, true, 1.0, 1.0};
  }
  throw std::invalid_argument("unknown phi '" + name + "'");
}

double param(const FunctionalSpec& spec, std::size_t i, const char* what) {
  if (i >= spec.params.size()) {
    throw std::invalid_argument("functional " + spec.id + ": missing parameter " + what);
  }
  return spec.params[i];
}

void require_marginals(const FunctionalSpec& spec, std::size_t exact) {
  const std::size_t d = spec.marginal_times.size();
  if ((exact != 0 && d != exact) || (exact == 0 && d == 0)) {
    throw std::invalid_argument("functional " + spec.id + ": wrong number of marginal times");
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (!(spec.marginal_times[j] >= 0.0) || (j > 0 && spec.marginal_times[j] <= spec.marginal_times[j - 1])) {
      throw std::invalid_argument("functional " + spec.id + ": marginal times must be increasing and >= 0");
    }
  }
}

std::vector<double> filled(std::size_t n, double v) { return std::vector<double>(n, v); }

struct Sampler {
  CounterRng rng;
  SamplingBox box;
  std::size_t dim;

  // Draws x (box), y and z (nonnegative increments) for one trial.
  void draw(std::size_t trial, std::vector<double>& x, std::vector<double>& y, std::vector<double>& z) const {
    std::vector<double> u(3 * dim);
    for (std::size_t j = 0; j < u.size(); j += 2) {
      const auto pair = rng.uniforms(trial, static_cast<std::uint32_t>(j / 2));
      u[j] = pair[0];
      if (j + 1 < u.size()) u[j + 1] = pair[1];
    }
    for (std::size_t i = 0; i < dim; ++i) {
      x[i] = box.lo + (box.hi - box.lo) * u[i];
      y[i] = box.increment * u[dim + i];
      z[i] = box.increment * u[2 * dim + i];
    }
  }
};

double scale_of(std::initializer_list<double> values) {
  double s = 1.0;
  for (double v : values) s = std::max(s, std::abs(v));
  return s;
}

std::vector<double> plus(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

// Defect of one sample under a flag, and the tolerance it is compared against.
struct Defect {
  double value;
  double tolerance;
};

Defect evaluate_defect(const TestFunctional& f, const std::string& flag, const std::vector<double>& x,
                       const std::vector<double>& y, const std::vector<double>& z) {
  if (flag == "dir_convex") {
    const double a = f(plus(plus(x, y), z));
    const double b = f(plus(x, y));
    const double c = f(plus(x, z));
    const double d = f(x);
    return {a - b - c + d, kCheckTolerance * scale_of({a, b, c, d})};
  }
  if (flag == "convex") {
    std::vector<double> mid(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) mid[i] = 0.5 * (x[i] + y[i]);
    const double a = f(x);
    const double b = f(y);
    const double c = f(mid);
    return {0.5 * (a + b) - c, kCheckTolerance * scale_of({a, b, c})};
  }
  if (flag == "nondecreasing") {
    const double a = f(plus(x, y));
    const double b = f(x);
    return {a - b, kCheckTolerance * scale_of({a, b})};
  }
  if (flag == "lipschitz") {
    double dist = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dist = std::max(dist, std::abs(x[i] - y[i]));
    const double a = f(x);
    const double b = f(y);
    return {*f.lipschitz() * dist - std::abs(a - b), kCheckTolerance * scale_of({a, b})};
  }
  throw std::invalid_argument("unknown flag '" + flag + "'");
}

CheckReport run_check(const TestFunctional& f, const std::string& flag, std::size_t trials, const SamplingBox& box,
                      std::uint64_t seed) {
  const Sampler sampler{CounterRng(seed, Stream::Checker), box, f.argument_dimension()};
  const std::size_t blocks = block_count(trials, kCheckBlock);
  std::vector<CheckReport> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    CheckReport& r = partial[b];
    const std::size_t dim = sampler.dim;
    std::vector<double> x(dim), y(dim), z(dim);
    const std::size_t end = std::min(trials, (b + 1) * kCheckBlock);
    for (std::size_t t = b * kCheckBlock; t < end; ++t) {
      sampler.draw(t, x, y, z);
      if (flag == "convex" || flag == "lipschitz") {
        // Second point of the pair: anywhere in the box.
        for (std::size_t i = 0; i < dim; ++i) y[i] = box.lo + (box.hi - box.lo) * (y[i] / box.increment);
      }
      const Defect d = evaluate_defect(f, flag, x, y, z);
      ++r.trials;
      if (d.value < -d.tolerance) ++r.violations;
      if (d.value < r.worst_defect) {
        r.worst_defect = d.value;
        r.worst = Witness{flag, x, y, flag == "dir_convex" ? z : std::vector<double>{}};
      }
    }
  });
  CheckReport out;
  for (const auto& r : partial) {
    out.trials += r.trials;
    out.violations += r.violations;
    if (r.worst_defect < out.worst_defect) {
      out.worst_defect = r.worst_defect;
      out.worst = r.worst;
    }
  }
  return out;
}

}  // namespace

std::string_view kind_id(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::Terminal: return "terminal";
    case FunctionalKind::MultiMarginal: return "multi_marginal";
    case FunctionalKind::Path: return "path";
  }
  return "terminal";
}

QuadraticClass classify_quadratic(double a, double b, double c) {
  if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("classify_quadratic: a and b must be positive");
  return {std::abs(c) <= std::sqrt(a * b), c >= 0.0};
}

TestFunctional TestFunctional::from_spec(const FunctionalSpec& spec) {
  TestFunctional f;
  f.id_ = spec.id;
  f.spec_ = spec;
  const std::string& id = spec.id;

  auto terminal = [&](Scalar g, bool convex, bool nondecreasing, std::optional<double> lip, double growth) {
    f.kind_ = FunctionalKind::Terminal;
    f.convex_ = convex;
    f.dir_convex_ = convex;
    f.nondecreasing_ = nondecreasing;
    f.lipschitz_ = lip;
    f.growth_order_ = growth;
    f.eval_ = [g](std::span<const double> u) { return g(u[0]); };
  };

  if (id == "call") {
    const double k = param(spec, 0, "K");
    terminal([k](double x) { return std::max(x - k, 0.0); }, true, true, 1.0, 1.0);
  } else if (id == "put") {
    const double k = param(spec, 0, "K");
    terminal([k](double x) { return std::max(k - x, 0.0); }, true, false, 1.0, 1.0);
    f.witnesses_.push_back({"nondecreasing", {k - 1.0}, {1.0}, {}});
  } else if (id == "identity") {
    terminal([](double x) { return x; }, true, true, 1.0, 1.0);
  } else if (id == "square") {
    terminal([](double x) { return x * x; }, true, false, std::nullopt, 2.0);
    f.witnesses_.push_back({"nondecreasing", {-2.0}, {1.0}, {}});
  } else if (id == "exp") {
    const double a = spec.params.empty() ? 1.0 : spec.params[0];
    terminal([a](double x) { return std::exp(a * x); }, true, a >= 0.0, std::nullopt, a == 0.0 ? 0.0 : kInf);
    if (a < 0.0) f.witnesses_.push_back({"nondecreasing", {0.0}, {1.0}, {}});
  } else if (id == "softplus") {
    terminal(softplus, true, true, 1.0, 1.0);
  } else if (id == "power_call") {
    const double k = param(spec, 0, "K");
    const double p = param(spec, 1, "p");
    if (p < 1.0) throw std::invalid_argument("power_call: p must be >= 1");
    terminal([k, p](double x) { return std::pow(std::max(x - k, 0.0), p); }, true, true,
             p == 1.0 ? std::optional<double>(1.0) : std::nullopt, p);
  } else if (id == "constant") {
    const double c = param(spec, 0, "c");
    terminal([c](double) { return c; }, true, true, 0.0, 0.0);
  } else if (id == "abs_diff") {
    require_marginals(spec, 2);
    f.kind_ = FunctionalKind::MultiMarginal;
    f.convex_ = true;
    f.lipschitz_ = 2.0;
    f.eval_ = [](std::span<const double> u) { return std::abs(u[0] - u[1]); };
    f.witnesses_.push_back({"dir_convex", {1.0, 0.0}, {1.0, 0.0}, {1.0, 2.5}});
    f.witnesses_.push_back({"nondecreasing", {0.0, 1.0}, {1.0, 0.0}, {}});
  } else if (id == "quadratic" || id == "product") {
    require_marginals(spec, 2);
    double a = 0.0, b = 0.0, c = 0.5;
    if (id == "quadratic") {
      a = param(spec, 0, "a");
      b = param(spec, 1, "b");
      c = param(spec, 2, "c");
      const QuadraticClass cls = classify_quadratic(a, b, c);
      f.convex_ = cls.convex;
      f.dir_convex_ = cls.dir_convex;
      const double sign = c >= 0.0 ? 1.0 : -1.0;
      const std::vector<double> d{std::sqrt(b), -sign * std::sqrt(a)};
      if (!cls.convex) f.witnesses_.push_back({"convex", d, {-d[0], -d[1]}, {}});
      if (!cls.dir_convex) f.witnesses_.push_back({"dir_convex", {0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}});
      f.witnesses_.push_back({"nondecreasing", {-1.0, 0.0}, {1.0, 0.0}, {}});
    } else {
      f.dir_convex_ = true;
      f.witnesses_.push_back({"convex", {1.0, -1.0}, {-1.0, 1.0}, {}});
      f.witnesses_.push_back({"nondecreasing", {-1.0, -1.0}, {1.0, 1.0}, {}});
    }
    f.kind_ = FunctionalKind::MultiMarginal;
    f.growth_order_ = 2.0;
    f.eval_ = [a, b, c](std::span<const double> u) {
      return a * u[0] * u[0] + 2.0 * c * u[0] * u[1] + b * u[1] * u[1];
    };
  } else if (id == "average_call") {
    require_marginals(spec, 0);
    const double k = param(spec, 0, "K");
    f.kind_ = FunctionalKind::MultiMarginal;
    f.convex_ = f.dir_convex_ = f.nondecreasing_ = true;
    f.lipschitz_ = 1.0;
    f.eval_ = [k](std::span<const double> u) {
      double s = 0.0;
      for (double v : u) s += v;
      return std::max(s / static_cast<double>(u.size()) - k, 0.0);
    };
  } else if (id == "composite" || id == "running_integral") {
    const Outer psi = make_psi(spec.psi);
    const Inner phi = make_phi(spec.phi, spec.params.empty() ? 0.0 : spec.params[0]);
    if (spec.phi == "square" && spec.psi != "identity") {
      throw std::invalid_argument(id + ": phi=square is only registered with psi=identity");
    }
    // psi convex throughout; square is non-decreasing on the range of a nonnegative phi.
    const bool psi_monotone = psi.nondecreasing || phi.nonnegative;
    f.convex_ = true;
    f.dir_convex_ = true;
    f.nondecreasing_ = psi_monotone && phi.nondecreasing;
    if (spec.psi == "identity" && phi.lipschitz) f.lipschitz_ = *phi.lipschitz;
    f.growth_order_ = psi.growth * phi.growth;
    if (id == "composite") {
      require_marginals(spec, 0);
      f.kind_ = FunctionalKind::MultiMarginal;
      f.eval_ = [psi = psi.fn, phi = phi.fn](std::span<const double> u) {
        double s = 0.0;
        for (double v : u) s += phi(v);
        return psi(s / static_cast<double>(u.size()));
      };
    } else {
      f.kind_ = FunctionalKind::Path;
      // psi of the time average (1/T) int_0^T phi(x_t) dt along the interpolated path.
      f.path_eval_ = [psi = psi.fn, mean = phi.segment_mean](std::span<const double> path, double) {
        const std::size_t m = path.size() - 1;
        if (m == 0) return psi(mean(path[0], path[0]));
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k) s += mean(path[k], path[k + 1]);
        return psi(s / static_cast<double>(m));
      };
    }
    if (!f.nondecreasing_) {
      const std::size_t dim = f.kind_ == FunctionalKind::Path ? kPathCheckNodes : spec.marginal_times.size();
      f.witnesses_.push_back({"nondecreasing", filled(dim, -1.0), filled(dim, 1.0), {}});
    }
  } else if (id == "sup_norm") {
    f.kind_ = FunctionalKind::Path;
    f.convex_ = true;
    f.lipschitz_ = 1.0;
    f.path_eval_ = [](std::span<const double> path, double) {
      double s = 0.0;
      for (double v : path) s = std::max(s, std::abs(v));
      return s;
    };
    std::vector<double> e0(kPathCheckNodes, 0.0), e1(kPathCheckNodes, 0.0);
    e0[0] = 1.0;
    e1[1] = 1.0;
    f.witnesses_.push_back({"dir_convex", filled(kPathCheckNodes, 0.0), e0, e1});
    f.witnesses_.push_back({"nondecreasing", filled(kPathCheckNodes, -1.0), filled(kPathCheckNodes, 1.0), {}});
  } else {
    throw std::invalid_argument("unknown functional '" + id + "'");
  }
  if (f.kind_ == FunctionalKind::Path) {
    f.eval_ = [pe = f.path_eval_](std::span<const double> u) { return pe(u, 1.0); };
  }
  return f;
}

std::string TestFunctional::label() const {
  std::ostringstream os;
  os.precision(10);
  os << id_;
  if (!spec_.params.empty()) {
    os << '(';
    for (std::size_t i = 0; i < spec_.params.size(); ++i) os << (i ? "," : "") << spec_.params[i];
    os << ')';
  }
  if (id_ == "composite" || id_ == "running_integral") os << '[' << spec_.psi << ':' << spec_.phi << ']';
  if (!spec_.marginal_times.empty()) {
    os << '@';
    for (std::size_t i = 0; i < spec_.marginal_times.size(); ++i) os << (i ? "," : "") << spec_.marginal_times[i];
  }
  return os.str();
}

std::size_t TestFunctional::argument_dimension() const {
  switch (kind_) {
    case FunctionalKind::Terminal: return 1;
    case FunctionalKind::MultiMarginal: return spec_.marginal_times.size();
    case FunctionalKind::Path: return kPathCheckNodes;
  }
  return 1;
}

double TestFunctional::operator()(std::span<const double> u) const { return eval_(u); }

double TestFunctional::on_path(std::span<const double> path, double horizon) const {
  switch (kind_) {
    case FunctionalKind::Terminal: return eval_(path.subspan(path.size() - 1));
    case FunctionalKind::MultiMarginal: {
      double u[3];
      std::vector<double> big;
      const std::size_t d = spec_.marginal_times.size();
      std::span<double> args(u, d <= 3 ? d : 0);
      if (d > 3) {
        big.resize(d);
        args = big;
      }
      for (std::size_t j = 0; j < d; ++j) args[j] = interpolate(path, horizon, spec_.marginal_times[j]);
      return eval_(args);
    }
    case FunctionalKind::Path: return path_eval_(path, horizon);
  }
  return 0.0;
}

CheckReport check_directional_convexity(const TestFunctional& f, std::size_t trials, const SamplingBox& box,
                                        std::uint64_t seed) {
  return run_check(f, "dir_convex", trials, box, seed);
}

CheckReport check_convexity(const TestFunctional& f, std::size_t trials, const SamplingBox& box,
                            std::uint64_t seed) {
  return run_check(f, "convex", trials, box, seed);
}

CheckReport check_monotonicity(const TestFunctional& f, std::size_t trials, const SamplingBox& box,
                               std::uint64_t seed) {
  return run_check(f, "nondecreasing", trials, box, seed);
}

CheckReport check_lipschitz(const TestFunctional& f, std::size_t trials, const SamplingBox& box,
                            std::uint64_t seed) {
  if (!f.lipschitz()) return {};
  return run_check(f, "lipschitz", trials, box, seed);
}

double witness_defect(const TestFunctional& f, const Witness& w) {
  return evaluate_defect(f, w.flag, w.x, w.y, w.z.empty() ? w.x : w.z).value;
}

TestFunctional restrict_to_coordinate(const TestFunctional& f, std::size_t j, std::span<const double> frozen) {
  if (f.kind() != FunctionalKind::MultiMarginal || j >= f.argument_dimension() ||
      frozen.size() != f.argument_dimension()) {
    throw std::invalid_argument("restrict_to_coordinate: needs a multi-marginal functional and a full point");
  }
  TestFunctional g = f;
  g.spec_.marginal_times = {f.marginal_times()[j]};
  g.convex_ = g.dir_convex_ = f.dir_convex_ || f.convex_;
  g.witnesses_.clear();
  g.eval_ = [inner = f.eval_, j, point = std::vector<double>(frozen.begin(), frozen.end())](
                std::span<const double> u) {
    std::vector<double> p = point;
    p[j] = u[0];
    return inner(p);
  };
  return g;
}

}  // namespace convord
