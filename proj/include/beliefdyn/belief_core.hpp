#pragma once
// Closed-form belief dynamics: log posterior odds of a target concept as an
// additive function of steering magnitude m and in-context shot count N,
//
//   log o(c|x) = a*m + b + gamma * N^(1 - alpha),   p(c|x) = sigmoid(log o).
//
// Every function here is pure; values are immutable after construction.

#include <cstdint>
#include <span>
#include <vector>

namespace beliefdyn {

class BeliefParams {
 public:
  // Throws ValidationError unless a, b are finite, gamma > 0 and
  // alpha in [0, 1).
  BeliefParams(double a, double b, double gamma, double alpha);

  double a() const { return a_; }
  double b() const { return b_; }
  double gamma() const { return gamma_; }
  double alpha() const { return alpha_; }

  friend bool operator==(const BeliefParams&, const BeliefParams&) = default;

 private:
  double a_;
  double b_;
  double gamma_;
  double alpha_;
};

struct InterventionPoint {
  std::int64_t shots = 0;  // N >= 0
  double magnitude = 0.0;  // m

  InterventionPoint(std::int64_t n, double m);
};

// Observed labels l_i next to the concept-consistent labels y_i^(c).
class LabelSequence {
 public:
  // Throws ValidationError on length mismatch or entries other than 0/1.
  LabelSequence(std::vector<std::uint8_t> observed,
                std::vector<std::uint8_t> concept_consistent);

  std::span<const std::uint8_t> observed() const { return observed_; }
  std::span<const std::uint8_t> concept_consistent() const { return consistent_; }
  std::size_t size() const { return observed_.size(); }

 private:
  std::vector<std::uint8_t> observed_;
  std::vector<std::uint8_t> consistent_;
};

double sigmoid(double z);

// gamma * N^(1-alpha) for real N >= 0; N = 0 gives 0.
double evidence_term(double shots, double gamma, double alpha);

double log_odds(const BeliefParams& p, const InterventionPoint& x);
// Same model evaluated at a real-valued context length.
double log_odds_continuous(const BeliefParams& p, double shots, double magnitude);

double posterior(const BeliefParams& p, const InterventionPoint& x);
double posterior_continuous(const BeliefParams& p, double shots, double magnitude);
// 1 - posterior, evaluated as sigmoid(-log_odds) so it keeps full relative
// precision when the posterior is close to 1.
double posterior_complement(const BeliefParams& p, const InterventionPoint& x);

// Context length N* where log-odds crosses zero; 0 when a*m + b >= 0.
double transition_point(const BeliefParams& p, double magnitude);

// -(number of positions with l_i != y_i^(c)).
std::int64_t mismatch_log_likelihood(const LabelSequence& seq);

double log_bayes_factor(std::int64_t shots, double gamma, double alpha);

// (1/N) * sum_{n=1..N} A * n^(-alpha), the finite-sum discount.
double discount_factor_numeric(std::int64_t shots, double amplitude, double alpha);
// (A / (1 - alpha)) * N^(-alpha), its continuum approximation.
double discount_factor_closed_form(std::int64_t shots, double amplitude, double alpha);

}  // namespace beliefdyn
