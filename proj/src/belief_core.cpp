#include "beliefdyn/belief_core.hpp"

#include <cmath>
#include <string>

#include "beliefdyn/errors.hpp"

namespace beliefdyn {

BeliefParams::BeliefParams(double a, double b, double gamma, double alpha)
    : a_(a), b_(b), gamma_(gamma), alpha_(alpha) {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw ValidationError("BeliefParams: a and b must be finite");
  if (!std::isfinite(gamma) || !(gamma > 0.0))
    throw ValidationError("BeliefParams: gamma must be finite and > 0");
  if (!std::isfinite(alpha) || alpha < 0.0 || alpha >= 1.0)
    throw ValidationError("BeliefParams: alpha must lie in [0, 1)");
}

InterventionPoint::InterventionPoint(std::int64_t n, double m) : shots(n), magnitude(m) {
  if (n < 0) throw ValidationError("InterventionPoint: shots must be >= 0");
  if (!std::isfinite(m)) throw ValidationError("InterventionPoint: magnitude must be finite");
}

LabelSequence::LabelSequence(std::vector<std::uint8_t> observed,
                             std::vector<std::uint8_t> concept_consistent)
    : observed_(std::move(observed)), consistent_(std::move(concept_consistent)) {
  if (observed_.size() != consistent_.size())
    throw ValidationError("LabelSequence: observed has " + std::to_string(observed_.size()) +
                          " labels, concept_consistent has " +
                          std::to_string(consistent_.size()));
  for (std::size_t i = 0; i < observed_.size(); ++i) {
    if (observed_[i] > 1 || consistent_[i] > 1)
      throw ValidationError("LabelSequence: non-binary label at position " + std::to_string(i));
  }
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double evidence_term(double shots, double gamma, double alpha) {
  if (shots <= 0.0) return 0.0;
  if (alpha == 0.0) return gamma * shots;
  return gamma * std::pow(shots, 1.0 - alpha);
}

double log_odds(const BeliefParams& p, const InterventionPoint& x) {
  return log_odds_continuous(p, static_cast<double>(x.shots), x.magnitude);
}

double log_odds_continuous(const BeliefParams& p, double shots, double magnitude) {
  // Steering term added last so that z(m) - z(0) is a single rounding of a*m.
  const double unsteered = p.b() + evidence_term(shots, p.gamma(), p.alpha());
  return unsteered + p.a() * magnitude;
}

double posterior(const BeliefParams& p, const InterventionPoint& x) {
  return sigmoid(log_odds(p, x));
}

double posterior_continuous(const BeliefParams& p, double shots, double magnitude) {
  return sigmoid(log_odds_continuous(p, shots, magnitude));
}

double posterior_complement(const BeliefParams& p, const InterventionPoint& x) {
  return sigmoid(-log_odds(p, x));
}

double transition_point(const BeliefParams& p, double magnitude) {
  const double offset = p.a() * magnitude + p.b();
  if (offset >= 0.0) return 0.0;
  return std::pow(-offset / p.gamma(), 1.0 / (1.0 - p.alpha()));
}

std::int64_t mismatch_log_likelihood(const LabelSequence& seq) {
  std::int64_t mismatches = 0;
  const auto obs = seq.observed();
  const auto cc = seq.concept_consistent();
  for (std::size_t i = 0; i < seq.size(); ++i) mismatches += (obs[i] != cc[i]);
  return -mismatches;
}

double log_bayes_factor(std::int64_t shots, double gamma, double alpha) {
  if (shots < 0) throw ValidationError("log_bayes_factor: shots must be >= 0");
  if (!(gamma > 0.0)) throw ValidationError("log_bayes_factor: gamma must be > 0");
  if (alpha < 0.0 || alpha >= 1.0)
    throw ValidationError("log_bayes_factor: alpha must lie in [0, 1)");
  return evidence_term(static_cast<double>(shots), gamma, alpha);
}

namespace {
void check_discount_args(std::int64_t shots, double amplitude, double alpha) {
  if (shots < 1) throw ValidationError("discount factor: shots must be >= 1");
  if (!(amplitude > 0.0)) throw ValidationError("discount factor: A must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("discount factor: alpha must lie in (0, 1)");
}
}  // namespace

double discount_factor_numeric(std::int64_t shots, double amplitude, double alpha) {
  check_discount_args(shots, amplitude, alpha);
  // Smallest terms first.
  double sum = 0.0;
  for (std::int64_t n = shots; n >= 1; --n) sum += std::pow(static_cast<double>(n), -alpha);
  return amplitude * sum / static_cast<double>(shots);
}

double discount_factor_closed_form(std::int64_t shots, double amplitude, double alpha) {
  check_discount_args(shots, amplitude, alpha);
  return amplitude / (1.0 - alpha) * std::pow(static_cast<double>(shots), -alpha);
}

}  // namespace beliefdyn
