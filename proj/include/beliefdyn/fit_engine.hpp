#pragma once
// Maximum-likelihood fitting of BeliefParams to a BehaviorGrid: shot-binned
// weighted BCE, analytic gradients, basin-hopping candidate search followed
// by bounded quasi-Newton refinement of the best candidates, and k-fold
// cross-validation over contiguous magnitude blocks.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beliefdyn/behavior_grid.hpp"
#include "beliefdyn/belief_core.hpp"
#include "beliefdyn/errors.hpp"

namespace beliefdyn {

struct Bound {
  double low;
  double high;
};

struct ParameterBounds {
  Bound a{-50.0, 50.0};
  Bound b{-50.0, 50.0};
  Bound gamma{1e-6, 100.0};
  Bound alpha{0.0, 0.999};

  std::array<double, 4> lower() const { return {a.low, b.low, gamma.low, alpha.low}; }
  std::array<double, 4> upper() const { return {a.high, b.high, gamma.high, alpha.high}; }
};

struct FitConfig {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-10;
  double function_tolerance = 1e-10;
  int basin_hop_iterations = 1000;
  int refine_top_k = 100;
  int n_bins = 15;
  ParameterBounds bounds;
  std::uint64_t seed = 0;
  // Upper bound on concurrent workers; 0 leaves it to OpenMP. Never changes results.
  int workers = 0;

  // Throws ValidationError on non-positive counts or tolerances, empty
  // bounds, gamma bounds that admit gamma <= 0 or alpha bounds outside [0, 1).
  void validate() const;
};

// Weight per distinct shot count.
using ShotWeights = std::map<std::int64_t, double>;

// Value used in place of log2(0) when binning shot counts.
inline constexpr double kZeroShotSurrogate = 0.6;

ShotWeights bin_weights(const BehaviorGrid& grid, int n_bins);

double weighted_bce_loss(const BeliefParams& params, const BehaviorGrid& grid,
                         const ShotWeights& weights);

// (dL/da, dL/db, dL/dgamma, dL/dalpha)
std::array<double, 4> loss_gradient(const BeliefParams& params, const BehaviorGrid& grid,
                                    const ShotWeights& weights);

struct CandidateOutcome {
  std::size_t index = 0;      // position in the basin-hopping sequence
  std::array<double, 4> start{};
  double start_loss = 0.0;
  std::array<double, 4> refined{};
  double loss = 0.0;
  int iterations = 0;
  bool converged = false;
  bool finite = true;
};

struct FitResult {
  BeliefParams params{0.0, 0.0, 1.0, 0.0};
  double final_loss = 0.0;
  bool converged = false;
  int iterations_used = 0;
  double gradient_norm = 0.0;          // projected inf-norm at params
  std::vector<double> candidate_losses;  // refined losses, in refinement order
  double best_start_loss = 0.0;        // lowest loss among all proposals
};

class FitError : public NumericalError {
 public:
  FitError(const std::string& what, std::vector<CandidateOutcome> candidates)
      : NumericalError(what), candidates_(std::move(candidates)) {}
  const std::vector<CandidateOutcome>& candidates() const { return candidates_; }

 private:
  std::vector<CandidateOutcome> candidates_;
};

FitResult fit(const BehaviorGrid& grid, const FitConfig& config);

struct CvPlan {
  // Each fold lists indices into the sorted magnitude list.
  std::vector<std::vector<std::size_t>> folds;
};

// Contiguous blocks with sizes differing by at most one; larger blocks first.
CvPlan make_cv_plan(std::span<const double> sorted_magnitudes, int k = 10);

struct CvFold {
  std::vector<double> held_out_magnitudes;
  FitResult fit;
  std::vector<GridCell> held_out_cells;
  std::vector<double> predictions;   // parallel to held_out_cells
  std::vector<double> observations;  // mean_p of held_out_cells
};

struct CvReport {
  std::vector<CvFold> per_fold;
  // Empty when the correlation is undefined; pearson_error says why.
  std::optional<double> pooled_pearson_r;
  std::string pearson_error;
  double mean_alpha = 0.0;
};

CvReport cross_validate(const BehaviorGrid& grid, const FitConfig& config, int k = 10);

// Sample Pearson correlation. Throws ValidationError on length mismatch or
// fewer than two points, NumericalError when either side has zero variance.
double pearson_r(std::span<const double> x, std::span<const double> y);

}  // namespace beliefdyn
