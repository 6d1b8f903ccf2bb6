#include "beliefdyn/fit_engine.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "beliefdyn/bounded_lbfgs.hpp"
#include "beliefdyn/kernels.hpp"
#include "beliefdyn/rng.hpp"

namespace beliefdyn {

namespace {

constexpr double kMetropolisTemperature = 1.0;
constexpr double kStepFraction = 0.1;
constexpr double kTieTolerance = 1e-12;
constexpr int kMinimumCells = 4;

void check_bound(const Bound& b, const char* name) {
  if (!std::isfinite(b.low) || !std::isfinite(b.high) || !(b.low < b.high))
    throw ValidationError(std::string("FitConfig: bounds for ") + name +
                          " must be finite with low < high");
}

std::array<double, 4> to_theta(const BeliefParams& p) {
  return {p.a(), p.b(), p.gamma(), p.alpha()};
}

BeliefParams from_theta(const std::array<double, 4>& t) {
  return BeliefParams(t[0], t[1], t[2], t[3]);
}

double reflect_into(double x, double lo, double hi) {
  if (x < lo) x = lo + (lo - x);
  if (x > hi) x = hi - (x - hi);
  return std::clamp(x, lo, hi);
}

struct Proposal {
  std::array<double, 4> theta;
  double loss;
  std::size_t index;
};

// Random-walk Metropolis over the box; every proposal is kept as a candidate.
std::vector<Proposal> basin_hop(const kernels::LossProblem& problem, const FitConfig& config) {
  const auto lo = config.bounds.lower();
  const auto hi = config.bounds.upper();
  CounterRng rng(hash_combine(config.seed, hash_string("basin-hopping")));

  std::vector<Proposal> out;
  out.reserve(static_cast<std::size_t>(config.basin_hop_iterations));

  std::array<double, 4> current{};
  for (int k = 0; k < 4; ++k) current[k] = lo[k] + (hi[k] - lo[k]) * rng.uniform();
  double current_loss = kernels::loss_gradient_parallel(problem, current).loss;
  out.push_back({current, current_loss, 0});

  for (int it = 1; it < config.basin_hop_iterations; ++it) {
    std::array<double, 4> next{};
    for (int k = 0; k < 4; ++k) {
      const double sigma = kStepFraction * (hi[k] - lo[k]);
      next[k] = reflect_into(current[k] + sigma * rng.normal(), lo[k], hi[k]);
    }
    const double loss = kernels::loss_gradient_parallel(problem, next).loss;
    out.push_back({next, loss, static_cast<std::size_t>(it)});
    const double u = rng.uniform();
    if (loss <= current_loss || u < std::exp(-(loss - current_loss) / kMetropolisTemperature)) {
      current = next;
      current_loss = loss;
    }
  }
  return out;
}

CandidateOutcome refine(const kernels::LossProblem& problem, const FitConfig& config,
                        const Proposal& start) {
  const auto lo = config.bounds.lower();
  const auto hi = config.bounds.upper();
  LbfgsOptions opts;
  opts.max_iterations = config.max_iterations;
  opts.gradient_tolerance = config.gradient_tolerance;
  opts.function_tolerance = config.function_tolerance;

  ObjectiveFn objective = [&problem](std::span<const double> x, std::span<double> g) {
    const kernels::LossEval e =
        kernels::loss_gradient_parallel(problem, {x[0], x[1], x[2], x[3]});
    std::copy(e.gradient.begin(), e.gradient.end(), g.begin());
    return e.loss;
  };

  CandidateOutcome out;
  out.index = start.index;
  out.start = start.theta;
  out.start_loss = start.loss;
  const LbfgsResult r = minimize_bounded(
      objective, std::vector<double>(start.theta.begin(), start.theta.end()), lo, hi, opts);
  std::copy(r.x.begin(), r.x.end(), out.refined.begin());
  out.loss = r.value;
  out.iterations = r.iterations;
  out.finite = r.stop != LbfgsStop::kNonFinite && std::isfinite(r.value);
  out.converged = out.finite && r.projected_gradient_norm <= 10.0 * config.gradient_tolerance;
  return out;
}

// Among candidates within kTieTolerance of the minimum loss: fewer
// iterations first, then lower index.
bool preferred(const CandidateOutcome& c, const CandidateOutcome& best) {
  if (c.iterations != best.iterations) return c.iterations < best.iterations;
  return c.index < best.index;
}

}  // namespace

void FitConfig::validate() const {
  if (max_iterations <= 0) throw ValidationError("FitConfig: max_iterations must be > 0");
  if (basin_hop_iterations <= 0)
    throw ValidationError("FitConfig: basin_hop_iterations must be > 0");
  if (refine_top_k <= 0) throw ValidationError("FitConfig: refine_top_k must be > 0");
  if (n_bins <= 0) throw ValidationError("FitConfig: n_bins must be > 0");
  if (workers < 0) throw ValidationError("FitConfig: workers must be >= 0");
  if (!(gradient_tolerance > 0.0) || !(function_tolerance > 0.0))
    throw ValidationError("FitConfig: tolerances must be > 0");
  check_bound(bounds.a, "a");
  check_bound(bounds.b, "b");
  check_bound(bounds.gamma, "gamma");
  check_bound(bounds.alpha, "alpha");
  if (!(bounds.gamma.low > 0.0)) throw ValidationError("FitConfig: gamma bounds must be > 0");
  if (bounds.alpha.low < 0.0 || bounds.alpha.high >= 1.0)
    throw ValidationError("FitConfig: alpha bounds must lie within [0, 1)");
}

ShotWeights bin_weights(const BehaviorGrid& grid, int n_bins) {
  if (grid.empty()) throw ValidationError("bin_weights: empty grid");
  if (n_bins < 1) throw ValidationError("bin_weights: n_bins must be >= 1");

  const auto& shots = grid.shot_values();
  std::vector<double> x;
  x.reserve(shots.size());
  for (auto n : shots)
    x.push_back(std::log2(n == 0 ? kZeroShotSurrogate : static_cast<double>(n)));

  const double lo = *std::min_element(x.begin(), x.end());
  const double hi = *std::max_element(x.begin(), x.end());
  const double width = (hi - lo) / n_bins;

  std::vector<int> bin(x.size(), 0);
  std::vector<int> occupancy(static_cast<std::size_t>(n_bins), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    int b = width > 0.0 ? static_cast<int>(std::floor((x[i] - lo) / width)) : 0;
    b = std::clamp(b, 0, n_bins - 1);
    bin[i] = b;
    ++occupancy[static_cast<std::size_t>(b)];
  }

  ShotWeights w;
  for (std::size_t i = 0; i < shots.size(); ++i)
    w[shots[i]] = 1.0 / occupancy[static_cast<std::size_t>(bin[i])];
  return w;
}

double weighted_bce_loss(const BeliefParams& params, const BehaviorGrid& grid,
                         const ShotWeights& weights) {
  if (grid.empty()) throw ValidationError("weighted_bce_loss: no data (empty grid)");
  const auto problem = kernels::LossProblem::build(grid, weights);
  return kernels::loss_gradient_parallel(problem, to_theta(params)).loss;
}

std::array<double, 4> loss_gradient(const BeliefParams& params, const BehaviorGrid& grid,
                                    const ShotWeights& weights) {
  if (grid.empty()) throw ValidationError("loss_gradient: no data (empty grid)");
  const auto problem = kernels::LossProblem::build(grid, weights);
  return kernels::loss_gradient_parallel(problem, to_theta(params)).gradient;
}

FitResult fit(const BehaviorGrid& grid, const FitConfig& config) {
  config.validate();
  if (grid.size() < static_cast<std::size_t>(kMinimumCells))
    throw ValidationError("fit: need at least 4 distinct (m, N) cells, got " +
                          std::to_string(grid.size()));

  const auto weights = bin_weights(grid, config.n_bins);
  const auto problem = kernels::LossProblem::build(grid, weights);

  std::vector<Proposal> proposals = basin_hop(problem, config);
  std::stable_sort(proposals.begin(), proposals.end(),
                   [](const Proposal& x, const Proposal& y) { return x.loss < y.loss; });
  const std::size_t k =
      std::min(proposals.size(), static_cast<std::size_t>(config.refine_top_k));

  std::vector<CandidateOutcome> outcomes(k);
#ifdef _OPENMP
  const int threads = config.workers > 0 ? config.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(k); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      outcomes[idx] = refine(problem, config, proposals[idx]);
    } catch (...) {
      outcomes[idx].index = proposals[idx].index;
      outcomes[idx].start = proposals[idx].theta;
      outcomes[idx].start_loss = proposals[idx].loss;
      outcomes[idx].finite = false;
    }
  }

  FitResult result;
  double min_loss = std::numeric_limits<double>::infinity();
  for (const auto& c : outcomes) {
    if (!c.finite) continue;
    result.candidate_losses.push_back(c.loss);
    min_loss = std::min(min_loss, c.loss);
  }
  const CandidateOutcome* best = nullptr;
  for (const auto& c : outcomes) {
    if (!c.finite || c.loss > min_loss + kTieTolerance) continue;
    if (best == nullptr || preferred(c, *best)) best = &c;
  }
  if (best == nullptr) throw FitError("fit: every candidate refinement diverged", outcomes);

  result.params = from_theta(best->refined);
  result.final_loss = best->loss;
  result.converged = best->converged;
  result.iterations_used = best->iterations;
  result.best_start_loss = proposals.front().loss;
  const auto eval = kernels::loss_gradient_parallel(problem, best->refined);
  const auto lo = config.bounds.lower();
  const auto hi = config.bounds.upper();
  result.gradient_norm = projected_gradient_norm(best->refined, eval.gradient, lo, hi);
  return result;
}

CvPlan make_cv_plan(std::span<const double> sorted_magnitudes, int k) {
  if (k < 1) throw ValidationError("make_cv_plan: k must be >= 1");
  const std::size_t n = sorted_magnitudes.size();
  if (n < static_cast<std::size_t>(k))
    throw ValidationError("make_cv_plan: " + std::to_string(n) + " magnitudes cannot fill " +
                          std::to_string(k) + " folds");
  for (std::size_t i = 1; i < n; ++i)
    if (!(sorted_magnitudes[i - 1] < sorted_magnitudes[i]))
      throw ValidationError("make_cv_plan: magnitudes must be sorted and distinct");

  const std::size_t kk = static_cast<std::size_t>(k);
  const std::size_t base = n / kk;
  const std::size_t extra = n % kk;
  CvPlan plan;
  std::size_t next = 0;
  for (std::size_t f = 0; f < kk; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    std::vector<std::size_t> fold(size);
    std::iota(fold.begin(), fold.end(), next);
    next += size;
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

CvReport cross_validate(const BehaviorGrid& grid, const FitConfig& config, int k) {
  config.validate();
  if (grid.empty()) throw ValidationError("cross_validate: no data (empty grid)");
  const auto& mags = grid.magnitudes();
  const CvPlan plan = make_cv_plan(mags, k);

  CvReport report;
  std::vector<double> all_pred;
  std::vector<double> all_obs;
  double alpha_sum = 0.0;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    CvFold fold;
    for (auto idx : plan.folds[f]) fold.held_out_magnitudes.push_back(mags[idx]);
    const BehaviorGrid train = grid.without_magnitudes(fold.held_out_magnitudes);
    const BehaviorGrid test = grid.with_magnitudes(fold.held_out_magnitudes);

    FitConfig fold_config = config;
    fold_config.seed = hash_combine(config.seed, f);
    try {
      fold.fit = fit(train, fold_config);
    } catch (const FitError& e) {
      throw FitError("fold " + std::to_string(f) + ": " + e.what(), e.candidates());
    } catch (const NumericalError& e) {
      throw NumericalError("fold " + std::to_string(f) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("fold " + std::to_string(f) + ": " + e.what());
    }

    for (const auto& c : test.cells()) {
      fold.held_out_cells.push_back(c);
      fold.predictions.push_back(posterior(fold.fit.params, InterventionPoint(c.shots, c.magnitude)));
      fold.observations.push_back(c.mean_p);
    }
    all_pred.insert(all_pred.end(), fold.predictions.begin(), fold.predictions.end());
    all_obs.insert(all_obs.end(), fold.observations.begin(), fold.observations.end());
    alpha_sum += fold.fit.params.alpha();
    report.per_fold.push_back(std::move(fold));
  }
  report.mean_alpha = alpha_sum / static_cast<double>(plan.folds.size());

  try {
    report.pooled_pearson_r = pearson_r(all_pred, all_obs);
  } catch (const NumericalError& e) {
    report.pearson_error = e.what();
  } catch (const ValidationError& e) {
    report.pearson_error = e.what();
  }
  return report;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson_r: length mismatch");
  if (x.size() < 2) throw ValidationError("pearson_r: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw NumericalError("pearson_r: undefined for zero-variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace beliefdyn
