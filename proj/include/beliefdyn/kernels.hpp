#pragma once
// Data-parallel inner loops. Each kernel has a plain serial reference kept for
// tests and benchmarks, and an OpenMP version. The OpenMP versions reduce in
// fixed-size blocks that are combined in block order, so their output does not
// depend on the number of threads (it may differ from the reference in the
// last bits).

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "beliefdyn/behavior_grid.hpp"
#include "beliefdyn/belief_core.hpp"

namespace beliefdyn::kernels {

inline constexpr double kProbabilityClamp = 1e-12;
inline constexpr std::size_t kReductionBlock = 128;

// (a, b, gamma, alpha)
using Theta = std::array<double, 4>;

// A weighted BCE problem flattened for fast repeated evaluation.
struct LossProblem {
  std::vector<double> magnitude;         // per cell
  std::vector<double> target;            // per cell mean_p
  std::vector<double> weight;            // per cell
  std::vector<std::uint32_t> shot_index; // per cell, into shots/log_shots
  std::vector<double> shots;             // distinct N
  std::vector<double> log_shots;         // ln N, 0 for N = 0 (unused there)

  static LossProblem build(const BehaviorGrid& grid,
                           const std::map<std::int64_t, double>& weights);
  std::size_t size() const { return target.size(); }
};

struct LossEval {
  double loss = 0.0;
  Theta gradient{};
};

// Loss contribution of a single cell and its derivative w.r.t. the log-odds.
struct CellLoss {
  double loss;
  double dloss_dz;
};
CellLoss bce_cell(double z, double target);

LossEval loss_gradient_reference(const LossProblem& problem, const Theta& theta);
LossEval loss_gradient_parallel(const LossProblem& problem, const Theta& theta);

// Row-major [magnitude][shots] table of posteriors.
std::vector<double> posterior_surface_reference(const BeliefParams& params,
                                                std::span<const double> magnitudes,
                                                std::span<const std::int64_t> shots);
std::vector<double> posterior_surface_parallel(const BeliefParams& params,
                                               std::span<const double> magnitudes,
                                               std::span<const std::int64_t> shots);

// One Binomial(trials, p[i]) draw per cell from the stream keyed by keys[i].
std::vector<std::int64_t> binomial_draws_reference(std::span<const double> p,
                                                   std::span<const std::uint64_t> keys,
                                                   std::int64_t trials);
std::vector<std::int64_t> binomial_draws_parallel(std::span<const double> p,
                                                  std::span<const std::uint64_t> keys,
                                                  std::int64_t trials);

// Mean difference between `per_side` samples of  +direction + sigma*noise and
// `per_side` samples of  -direction + sigma*noise, drawn on the fly. Sample i
// uses the stream keyed by (seed, i), so both versions see identical samples.
std::vector<double> gaussian_mean_difference_reference(std::span<const double> direction,
                                                       std::size_t per_side, double sigma,
                                                       std::uint64_t seed);
std::vector<double> gaussian_mean_difference_parallel(std::span<const double> direction,
                                                      std::size_t per_side, double sigma,
                                                      std::uint64_t seed);

}  // namespace beliefdyn::kernels
