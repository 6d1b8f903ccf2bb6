#include "beliefdyn/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "beliefdyn/errors.hpp"
#include "beliefdyn/rng.hpp"

namespace beliefdyn::kernels {

LossProblem LossProblem::build(const BehaviorGrid& grid,
                               const std::map<std::int64_t, double>& weights) {
  LossProblem p;
  const auto& shot_values = grid.shot_values();
  for (auto n : shot_values) {
    p.shots.push_back(static_cast<double>(n));
    p.log_shots.push_back(n > 0 ? std::log(static_cast<double>(n)) : 0.0);
  }
  p.magnitude.reserve(grid.size());
  p.target.reserve(grid.size());
  p.weight.reserve(grid.size());
  p.shot_index.reserve(grid.size());
  for (const auto& c : grid.cells()) {
    auto w = weights.find(c.shots);
    if (w == weights.end())
      throw ValidationError("loss: no weight for shot count " + std::to_string(c.shots));
    auto idx = std::lower_bound(shot_values.begin(), shot_values.end(), c.shots);
    p.magnitude.push_back(c.magnitude);
    p.target.push_back(c.mean_p);
    p.weight.push_back(w->second);
    p.shot_index.push_back(static_cast<std::uint32_t>(idx - shot_values.begin()));
  }
  return p;
}

CellLoss bce_cell(double z, double target) {
  // q and 1-q are each computed directly to avoid cancellation near 0 and 1.
  const double q = sigmoid(z);
  const double qc = sigmoid(-z);
  const double lo = kProbabilityClamp;
  const double hi = 1.0 - kProbabilityClamp;
  const bool q_free = q >= lo && q <= hi;
  const bool qc_free = qc >= lo && qc <= hi;
  const double loss = -target * std::log(std::clamp(q, lo, hi)) -
                      (1.0 - target) * std::log(std::clamp(qc, lo, hi));
  // d/dz log q = 1 - q and d/dz log(1-q) = -q wherever the clamp is inactive.
  const double d = -target * (q_free ? qc : 0.0) + (1.0 - target) * (qc_free ? q : 0.0);
  return {loss, d};
}

namespace {

struct Evidence {
  std::vector<double> power;  // N^(1-alpha)
};

Evidence evidence_powers(const LossProblem& p, double alpha) {
  Evidence e;
  e.power.resize(p.shots.size());
  for (std::size_t j = 0; j < p.shots.size(); ++j)
    e.power[j] = p.shots[j] > 0.0 ? std::pow(p.shots[j], 1.0 - alpha) : 0.0;
  return e;
}

inline void accumulate_cell(const LossProblem& p, const Theta& th, const Evidence& ev,
                            std::size_t i, double& loss, Theta& g) {
  const std::uint32_t j = p.shot_index[i];
  const double power = ev.power[j];
  const double z = (th[1] + th[2] * power) + th[0] * p.magnitude[i];
  const CellLoss cell = bce_cell(z, p.target[i]);
  const double w = p.weight[i];
  const double dz = w * cell.dloss_dz;
  loss += w * cell.loss;
  g[0] += dz * p.magnitude[i];
  g[1] += dz;
  g[2] += dz * power;
  g[3] -= dz * th[2] * p.log_shots[j] * power;
}

}  // namespace

LossEval loss_gradient_reference(const LossProblem& problem, const Theta& theta) {
  const Evidence ev = evidence_powers(problem, theta[3]);
  LossEval out;
  for (std::size_t i = 0; i < problem.size(); ++i)
    accumulate_cell(problem, theta, ev, i, out.loss, out.gradient);
  return out;
}

LossEval loss_gradient_parallel(const LossProblem& problem, const Theta& theta) {
  const Evidence ev = evidence_powers(problem, theta[3]);
  const std::size_t n = problem.size();
  const std::size_t n_blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<LossEval> partial(n_blocks);

#pragma omp parallel for schedule(static) if (n_blocks > 1)
  for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(n_blocks); ++blk) {
    const std::size_t begin = static_cast<std::size_t>(blk) * kReductionBlock;
    const std::size_t end = std::min(n, begin + kReductionBlock);
    LossEval& acc = partial[static_cast<std::size_t>(blk)];
    for (std::size_t i = begin; i < end; ++i)
      accumulate_cell(problem, theta, ev, i, acc.loss, acc.gradient);
  }

  LossEval out;
  for (const auto& blk : partial) {
    out.loss += blk.loss;
    for (int k = 0; k < 4; ++k) out.gradient[k] += blk.gradient[k];
  }
  return out;
}

std::vector<double> posterior_surface_reference(const BeliefParams& params,
                                                std::span<const double> magnitudes,
                                                std::span<const std::int64_t> shots) {
  std::vector<double> out;
  out.reserve(magnitudes.size() * shots.size());
  for (double m : magnitudes)
    for (auto n : shots) out.push_back(posterior(params, InterventionPoint(n, m)));
  return out;
}

std::vector<double> posterior_surface_parallel(const BeliefParams& params,
                                               std::span<const double> magnitudes,
                                               std::span<const std::int64_t> shots) {
  const std::size_t rows = magnitudes.size();
  const std::size_t cols = shots.size();
  std::vector<double> out(rows * cols);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cols); ++c)
      out[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)] =
          posterior(params, InterventionPoint(shots[static_cast<std::size_t>(c)],
                                              magnitudes[static_cast<std::size_t>(r)]));
  return out;
}

std::vector<std::int64_t> binomial_draws_reference(std::span<const double> p,
                                                   std::span<const std::uint64_t> keys,
                                                   std::int64_t trials) {
  std::vector<std::int64_t> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CounterRng rng(keys[i]);
    out[i] = rng.binomial(trials, p[i]);
  }
  return out;
}

std::vector<std::int64_t> binomial_draws_parallel(std::span<const double> p,
                                                  std::span<const std::uint64_t> keys,
                                                  std::int64_t trials) {
  std::vector<std::int64_t> out(p.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(p.size()); ++i) {
    CounterRng rng(keys[static_cast<std::size_t>(i)]);
    out[static_cast<std::size_t>(i)] = rng.binomial(trials, p[static_cast<std::size_t>(i)]);
  }
  return out;
}

namespace {

constexpr std::size_t kSampleBlock = 4096;

// Adds (positive sample i) - (negative sample i) into acc.
inline void add_sample_pair(std::span<const double> direction, double sigma, std::uint64_t seed,
                            std::size_t i, std::vector<double>& acc) {
  CounterRng pos(hash_combine(hash_combine(seed, 1), i));
  CounterRng neg(hash_combine(hash_combine(seed, 2), i));
  for (std::size_t k = 0; k < direction.size(); ++k) {
    const double vp = direction[k] + sigma * pos.normal();
    const double vn = -direction[k] + sigma * neg.normal();
    acc[k] += vp - vn;
  }
}

void check_caa_args(std::size_t per_side) {
  if (per_side == 0) throw ValidationError("CAA: sample sets must be non-empty");
}

}  // namespace

std::vector<double> gaussian_mean_difference_reference(std::span<const double> direction,
                                                       std::size_t per_side, double sigma,
                                                       std::uint64_t seed) {
  check_caa_args(per_side);
  std::vector<double> acc(direction.size(), 0.0);
  for (std::size_t i = 0; i < per_side; ++i) add_sample_pair(direction, sigma, seed, i, acc);
  for (auto& x : acc) x /= static_cast<double>(per_side);
  return acc;
}

std::vector<double> gaussian_mean_difference_parallel(std::span<const double> direction,
                                                      std::size_t per_side, double sigma,
                                                      std::uint64_t seed) {
  check_caa_args(per_side);
  const std::size_t dim = direction.size();
  const std::size_t n_blocks = (per_side + kSampleBlock - 1) / kSampleBlock;
  std::vector<std::vector<double>> partial(n_blocks, std::vector<double>(dim, 0.0));

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(n_blocks); ++blk) {
    const std::size_t begin = static_cast<std::size_t>(blk) * kSampleBlock;
    const std::size_t end = std::min(per_side, begin + kSampleBlock);
    auto& acc = partial[static_cast<std::size_t>(blk)];
    for (std::size_t i = begin; i < end; ++i) add_sample_pair(direction, sigma, seed, i, acc);
  }

  std::vector<double> out(dim, 0.0);
  for (const auto& blk : partial)
    for (std::size_t k = 0; k < dim; ++k) out[k] += blk[k];
  for (auto& x : out) x /= static_cast<double>(per_side);
  return out;
}

}  // namespace beliefdyn::kernels
