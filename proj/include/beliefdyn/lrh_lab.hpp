#pragma once
// Toy linear-representation world: concept directions, additive mixtures,
// linear logistic readouts, steering by adding m * d_i, and difference-of-means
// (CAA) estimation of a steering direction.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace beliefdyn::lrh {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

enum class SpaceMode { kExactOrthogonal, kRandomNearOrthogonal };

class ConceptSpace {
 public:
  // Throws ValidationError if the directions are empty, ragged, zero, or some
  // pair violates |d_i . d_j| <= tol * |d_i| * |d_j|.
  ConceptSpace(std::vector<Vector> directions, double orthogonality_tol);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return directions_.size(); }
  const Vector& direction(std::size_t i) const;
  double orthogonality_tol() const { return tol_; }
  // Largest |cos| between two distinct directions (0 for a single direction).
  double max_abs_cosine() const;

 private:
  std::size_t dim_ = 0;
  std::vector<Vector> directions_;
  double tol_ = 0.0;
};

// Exact mode orthonormalizes Gaussian draws (two passes of modified
// Gram-Schmidt); random mode keeps i.i.d. N(0, 1/dim) directions, with a
// default tolerance of 0.2 on pairwise cosines.
ConceptSpace make_concept_space(std::size_t dim, std::size_t n_concepts, SpaceMode mode,
                                std::uint64_t seed,
                                std::optional<double> orthogonality_tol = std::nullopt);

struct Representation {
  Vector betas;   // coefficient per concept
  Vector vector;  // sum_i betas[i] * d_i
};

Representation embed(std::span<const double> betas, const ConceptSpace& space);

// v + m * d_i, with betas[i] += m.
Representation steer(const Representation& rep, const ConceptSpace& space,
                     std::size_t concept_index, double magnitude);

// Coefficient read back by projection: (d_i . v) / |d_i|^2.
double recover_coefficient(const Representation& rep, const ConceptSpace& space,
                           std::size_t concept_index);

class Readout {
 public:
  // weight = weight_scale * d_i; a_coeff = |d_i|^2.
  Readout(const ConceptSpace& space, std::size_t concept_index, double weight_scale,
          double bias);

  std::size_t concept_index() const { return index_; }
  double weight_scale() const { return k_; }
  double bias() const { return bias_; }
  double a_coeff() const { return a_coeff_; }

  // Throws ValidationError if this readout was not built for `space`.
  void check_against(const ConceptSpace& space) const;

 private:
  std::size_t index_;
  double k_;
  double bias_;
  double a_coeff_;
};

// k * (d_i . v) + bias, the log odds of concept i against its complement.
double readout_log_odds(const Representation& rep, const Readout& readout,
                        const ConceptSpace& space);

struct SteeringLine {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
};

// Least-squares line through (m, readout_log_odds(steer(rep, m))).
SteeringLine verify_steering_shift(const ConceptSpace& space, const Readout& readout,
                                   const Representation& rep,
                                   std::span<const double> magnitudes);

// mean(positive) - mean(negative).
Vector caa_estimate(std::span<const Vector> positive, std::span<const Vector> negative);

// CAA on the generative model v = beta * d + sigma * noise, beta = +1 for
// positives and -1 for negatives; samples are streamed, never stored.
Vector caa_estimate_gaussian(std::span<const double> direction, std::size_t per_side,
                             double noise_sigma, std::uint64_t seed);

}  // namespace beliefdyn::lrh
