#pragma once
// Box-constrained limited-memory BFGS (projected-gradient active-set variant
// in the spirit of L-BFGS-B). Variables sitting on a bound with the gradient
// pushing outward are frozen for the step; the quasi-Newton direction is
// built on the remaining free variables and the line search backtracks
// along the projected path.

#include <functional>
#include <span>
#include <vector>

namespace beliefdyn {

struct LbfgsOptions {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-10;  // on the projected-gradient inf-norm
  double function_tolerance = 1e-10;  // relative decrease, as (f_k - f_k+1) / max(|f|, 1)
  int memory = 10;
  int max_backtracks = 60;
  // Extra iterations allowed after the function tolerance fires, aimed at
  // bringing the projected gradient under gradient_tolerance.
  int polish_iterations = 50;
};

enum class LbfgsStop {
  kGradientTolerance,
  kFunctionTolerance,
  kMaxIterations,
  kLineSearchFailure,
  kNonFinite,
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  double projected_gradient_norm = 0.0;
  LbfgsStop stop = LbfgsStop::kMaxIterations;
};

// Returns f(x) and writes the gradient into `grad`.
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

// x0 is projected onto [lower, upper] first.
LbfgsResult minimize_bounded(const ObjectiveFn& objective, std::vector<double> x0,
                             std::span<const double> lower, std::span<const double> upper,
                             const LbfgsOptions& options);

double projected_gradient_norm(std::span<const double> x, std::span<const double> grad,
                               std::span<const double> lower, std::span<const double> upper);

}  // namespace beliefdyn
