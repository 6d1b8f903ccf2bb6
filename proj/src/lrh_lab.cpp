#include "beliefdyn/lrh_lab.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "beliefdyn/errors.hpp"
#include "beliefdyn/kernels.hpp"
#include "beliefdyn/rng.hpp"

namespace beliefdyn::lrh {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = squared_norm(a);
  const double nb = squared_norm(b);
  if (na == 0.0 || nb == 0.0) throw NumericalError("cosine_similarity: zero vector");
  return dot(a, b) / std::sqrt(na * nb);
}

ConceptSpace::ConceptSpace(std::vector<Vector> directions, double orthogonality_tol)
    : directions_(std::move(directions)), tol_(orthogonality_tol) {
  if (directions_.empty()) throw ValidationError("ConceptSpace: no directions");
  if (!(tol_ >= 0.0)) throw ValidationError("ConceptSpace: orthogonality_tol must be >= 0");
  dim_ = directions_.front().size();
  if (dim_ == 0) throw ValidationError("ConceptSpace: zero dimension");
  for (std::size_t i = 0; i < directions_.size(); ++i) {
    if (directions_[i].size() != dim_)
      throw ValidationError("ConceptSpace: direction " + std::to_string(i) +
                            " has the wrong dimension");
    if (!(squared_norm(directions_[i]) > 0.0))
      throw ValidationError("ConceptSpace: direction " + std::to_string(i) + " is zero");
  }
  for (std::size_t i = 0; i < directions_.size(); ++i)
    for (std::size_t j = i + 1; j < directions_.size(); ++j) {
      const double bound = tol_ * std::sqrt(squared_norm(directions_[i]) *
                                            squared_norm(directions_[j]));
      if (std::abs(dot(directions_[i], directions_[j])) > bound)
        throw ValidationError("ConceptSpace: directions " + std::to_string(i) + " and " +
                              std::to_string(j) + " exceed the orthogonality tolerance");
    }
}

const Vector& ConceptSpace::direction(std::size_t i) const {
  if (i >= directions_.size())
    throw ValidationError("ConceptSpace: concept index " + std::to_string(i) + " out of range");
  return directions_[i];
}

double ConceptSpace::max_abs_cosine() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < directions_.size(); ++i)
    for (std::size_t j = i + 1; j < directions_.size(); ++j)
      worst = std::max(worst, std::abs(cosine_similarity(directions_[i], directions_[j])));
  return worst;
}

ConceptSpace make_concept_space(std::size_t dim, std::size_t n_concepts, SpaceMode mode,
                                std::uint64_t seed, std::optional<double> orthogonality_tol) {
  if (dim == 0 || n_concepts == 0)
    throw ValidationError("make_concept_space: dim and n_concepts must be positive");
  if (mode == SpaceMode::kExactOrthogonal && n_concepts > dim)
    throw ValidationError("make_concept_space: cannot fit " + std::to_string(n_concepts) +
                          " orthogonal directions in dimension " + std::to_string(dim));

  CounterRng rng(hash_combine(seed, hash_string("concept-space")));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<Vector> dirs(n_concepts, Vector(dim));
  for (auto& d : dirs)
    for (auto& x : d) x = scale * rng.normal();

  if (mode == SpaceMode::kRandomNearOrthogonal)
    return ConceptSpace(std::move(dirs), orthogonality_tol.value_or(0.2));

  for (std::size_t i = 0; i < dirs.size(); ++i) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t j = 0; j < i; ++j) {
        const double proj = dot(dirs[i], dirs[j]);
        for (std::size_t k = 0; k < dim; ++k) dirs[i][k] -= proj * dirs[j][k];
      }
    const double norm = std::sqrt(squared_norm(dirs[i]));
    if (!(norm > 1e-8))
      throw NumericalError("make_concept_space: degenerate draw during orthogonalization");
    for (auto& x : dirs[i]) x /= norm;
  }
  return ConceptSpace(std::move(dirs), orthogonality_tol.value_or(1e-12));
}

Representation embed(std::span<const double> betas, const ConceptSpace& space) {
  if (betas.size() != space.size())
    throw ValidationError("embed: got " + std::to_string(betas.size()) + " coefficients for " +
                          std::to_string(space.size()) + " concepts");
  Representation rep{Vector(betas.begin(), betas.end()), Vector(space.dim(), 0.0)};
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const auto& d = space.direction(i);
    for (std::size_t k = 0; k < space.dim(); ++k) rep.vector[k] += betas[i] * d[k];
  }
  return rep;
}

Representation steer(const Representation& rep, const ConceptSpace& space,
                     std::size_t concept_index, double magnitude) {
  const auto& d = space.direction(concept_index);
  if (rep.vector.size() != space.dim() || rep.betas.size() != space.size())
    throw ValidationError("steer: representation does not belong to this space");
  Representation out = rep;
  for (std::size_t k = 0; k < d.size(); ++k) out.vector[k] += magnitude * d[k];
  out.betas[concept_index] += magnitude;
  return out;
}

double recover_coefficient(const Representation& rep, const ConceptSpace& space,
                           std::size_t concept_index) {
  const auto& d = space.direction(concept_index);
  return dot(d, rep.vector) / squared_norm(d);
}

Readout::Readout(const ConceptSpace& space, std::size_t concept_index, double weight_scale,
                 double bias)
    : index_(concept_index),
      k_(weight_scale),
      bias_(bias),
      a_coeff_(squared_norm(space.direction(concept_index))) {
  if (!std::isfinite(weight_scale) || !std::isfinite(bias))
    throw ValidationError("Readout: weight_scale and bias must be finite");
}

void Readout::check_against(const ConceptSpace& space) const {
  const double expected = squared_norm(space.direction(index_));
  if (std::abs(expected - a_coeff_) > 1e-12 * std::max(1.0, expected))
    throw ValidationError("Readout: a_coeff does not match |d_i|^2 of this space");
}

double readout_log_odds(const Representation& rep, const Readout& readout,
                        const ConceptSpace& space) {
  readout.check_against(space);
  return readout.weight_scale() * dot(space.direction(readout.concept_index()), rep.vector) +
         readout.bias();
}

SteeringLine verify_steering_shift(const ConceptSpace& space, const Readout& readout,
                                   const Representation& rep,
                                   std::span<const double> magnitudes) {
  if (magnitudes.size() < 2)
    throw ValidationError("verify_steering_shift: need at least two magnitudes");
  std::vector<double> y;
  y.reserve(magnitudes.size());
  for (double m : magnitudes)
    y.push_back(readout_log_odds(steer(rep, space, readout.concept_index(), m), readout, space));

  const double n = static_cast<double>(magnitudes.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < magnitudes.size(); ++i) {
    mx += magnitudes[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < magnitudes.size(); ++i) {
    sxx += (magnitudes[i] - mx) * (magnitudes[i] - mx);
    sxy += (magnitudes[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("verify_steering_shift: magnitudes are all equal");

  SteeringLine line;
  line.slope = sxy / sxx;
  line.intercept = my - line.slope * mx;
  for (std::size_t i = 0; i < magnitudes.size(); ++i)
    line.max_residual = std::max(
        line.max_residual, std::abs(y[i] - (line.slope * magnitudes[i] + line.intercept)));
  return line;
}

Vector caa_estimate(std::span<const Vector> positive, std::span<const Vector> negative) {
  if (positive.empty() || negative.empty())
    throw ValidationError("caa_estimate: both sample sets must be non-empty");
  const std::size_t dim = positive.front().size();
  Vector mean_pos(dim, 0.0), mean_neg(dim, 0.0);
  for (const auto& v : positive) {
    if (v.size() != dim) throw ValidationError("caa_estimate: ragged samples");
    for (std::size_t k = 0; k < dim; ++k) mean_pos[k] += v[k];
  }
  for (const auto& v : negative) {
    if (v.size() != dim) throw ValidationError("caa_estimate: ragged samples");
    for (std::size_t k = 0; k < dim; ++k) mean_neg[k] += v[k];
  }
  Vector out(dim);
  for (std::size_t k = 0; k < dim; ++k)
    out[k] = mean_pos[k] / static_cast<double>(positive.size()) -
             mean_neg[k] / static_cast<double>(negative.size());
  return out;
}

Vector caa_estimate_gaussian(std::span<const double> direction, std::size_t per_side,
                             double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw ValidationError("caa_estimate_gaussian: sigma must be >= 0");
  return kernels::gaussian_mean_difference_parallel(direction, per_side, noise_sigma, seed);
}

}  // namespace beliefdyn::lrh
