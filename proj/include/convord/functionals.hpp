#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace convord {

enum class FunctionalKind { Terminal, MultiMarginal, Path };

std::string_view kind_id(FunctionalKind kind);

/// A stored counterexample to a declared-false flag: for "dir_convex" the
/// rectangle (x, y, z); for "convex" the midpoint pair (x, y); for
/// "nondecreasing" the pair x <= x + y.
struct Witness {
  std::string flag;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;
};

/// Registry address of a functional, as written in config files.
///
///   terminal:        call [K], put [K], identity, square, exp [a], softplus,
///                    power_call [K, p], constant [c]
///   multi-marginal:  abs_diff, quadratic [a, b, c], product, average_call [K],
///                    composite (psi, phi)
///   path:            sup_norm, running_integral (psi, phi)
///
/// psi in {identity, square, exp, softplus}; phi in {identity, square, exp,
/// softplus, call} (call uses params[0] as strike).
struct FunctionalSpec {
  std::string id;
  std::vector<double> params;
  std::string psi = "identity";
  std::string phi = "identity";
  std::vector<double> marginal_times;
};

class TestFunctional {
 public:
  using Evaluator = std::function<double(std::span<const double>)>;
  using PathEvaluator = std::function<double(std::span<const double>, double)>;

  static TestFunctional from_spec(const FunctionalSpec& spec);

  const std::string& id() const { return id_; }
  /// id plus parameters, unique within a suite.
  std::string label() const;
  const FunctionalSpec& spec() const { return spec_; }
  FunctionalKind kind() const { return kind_; }
  bool is_convex() const { return convex_; }
  bool is_dir_convex() const { return dir_convex_; }
  bool is_nondecreasing() const { return nondecreasing_; }
  std::optional<double> lipschitz() const { return lipschitz_; }
  double growth_order() const { return growth_order_; }
  const std::vector<double>& marginal_times() const { return spec_.marginal_times; }
  const std::vector<Witness>& witnesses() const { return witnesses_; }

  /// Number of arguments the randomized checkers sample: 1, d, or the path check grid size.
  std::size_t argument_dimension() const;

  /// Terminal: u[0]. Multi-marginal: (u_1, ..., u_d). Path: grid values on [0, 1].
  double operator()(std::span<const double> u) const;

  /// Value on a simulated path given at t_k = k T / m.
  double on_path(std::span<const double> path, double horizon) const;

 private:
  friend TestFunctional restrict_to_coordinate(const TestFunctional& f, std::size_t j,
                                               std::span<const double> frozen);

  std::string id_;
  FunctionalSpec spec_;
  FunctionalKind kind_ = FunctionalKind::Terminal;
  bool convex_ = false;
  bool dir_convex_ = false;
  bool nondecreasing_ = false;
  std::optional<double> lipschitz_;
  double growth_order_ = 1.0;
  std::vector<Witness> witnesses_;
  Evaluator eval_;
  PathEvaluator path_eval_;
};

/// Grid size used when the checkers sample piecewise-linear paths.
inline constexpr std::size_t kPathCheckNodes = 9;

struct QuadraticClass {
  bool convex = false;
  bool dir_convex = false;
};

/// a u^2 + 2 c u v + b v^2: convex iff |c| <= sqrt(ab), directionally convex iff c >= 0.
QuadraticClass classify_quadratic(double a, double b, double c);

/// x uniform in [lo, hi]^D; increments y, z uniform in [0, increment]^D.
struct SamplingBox {
  double lo = -3.0;
  double hi = 3.0;
  double increment = 2.0;
};

struct CheckReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  /// Most negative defect and where it occurred.
  double worst_defect = 0.0;
  std::optional<Witness> worst;
};

inline constexpr double kCheckTolerance = 1e-10;

/// f(x+y+z) - f(x+y) - f(x+z) + f(x) >= -1e-10 on random samples.
CheckReport check_directional_convexity(const TestFunctional& f, std::size_t trials, const SamplingBox& box,
                                        std::uint64_t seed);
/// (f(x) + f(y)) / 2 - f((x+y)/2) >= -1e-10 on random pairs.
CheckReport check_convexity(const TestFunctional& f, std::size_t trials, const SamplingBox& box, std::uint64_t seed);
/// f(x + y) - f(x) >= -1e-10 for y >= 0.
CheckReport check_monotonicity(const TestFunctional& f, std::size_t trials, const SamplingBox& box,
                               std::uint64_t seed);
/// L max|x - y| - |f(x) - f(y)| >= -1e-10 (1 + |f|). Zero trials if no constant is declared.
CheckReport check_lipschitz(const TestFunctional& f, std::size_t trials, const SamplingBox& box, std::uint64_t seed);

/// Defect of a stored witness under its flag's inequality (negative = violation).
double witness_defect(const TestFunctional& f, const Witness& w);

/// The d = 1 restriction u -> f(frozen with u at coordinate j).
TestFunctional restrict_to_coordinate(const TestFunctional& f, std::size_t j, std::span<const double> frozen);

}  // namespace convord
