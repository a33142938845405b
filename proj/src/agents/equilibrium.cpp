#include "arena/agents/equilibrium.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "arena/errors.hpp"

namespace arena {

namespace {

void check_unit(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError(fmt::format("{} must lie in [0, 1], got {}", name, x));
}

}  // namespace

double rubinstein_share(double delta_a, double delta_b) {
  check_unit(delta_a, "delta_a");
  check_unit(delta_b, "delta_b");
  const double denom = 1.0 - delta_a * delta_b;
  if (denom <= 0.0) {
    throw DomainError(fmt::format("no unique equilibrium share for delta_a * delta_b = 1 ({}, {})",
                                  delta_a, delta_b));
  }
  return (1.0 - delta_b) / denom;
}

std::vector<double> backward_induction_shares(double delta_a, double delta_b, int rounds) {
  check_unit(delta_a, "delta_a");
  check_unit(delta_b, "delta_b");
  if (rounds < 1) throw DomainError(fmt::format("rounds must be >= 1, got {}", rounds));
  std::vector<double> shares(static_cast<std::size_t>(rounds));
  shares.back() = 1.0;
  for (int t = rounds - 1; t >= 1; --t) {
    // Round t's responder proposes in round t + 1; Bob responds on odd rounds.
    const double responder_delta = (t % 2 == 1) ? delta_b : delta_a;
    shares[static_cast<std::size_t>(t - 1)] = 1.0 - responder_delta * shares[static_cast<std::size_t>(t)];
  }
  return shares;
}

double commitment_signal_prob(double prior_p, double value_v) {
  if (!(prior_p > 0.0 && prior_p < 1.0)) {
    throw DomainError(fmt::format("prior must lie in (0, 1), got {}", prior_p));
  }
  if (!(value_v >= 1.0)) throw DomainError(fmt::format("value must be >= 1, got {}", value_v));
  return std::min(prior_p / (1.0 - prior_p) * (value_v - 1.0), 1.0);
}

double posterior_on_recommend(double prior_p, double q) {
  const double mass = prior_p + (1.0 - prior_p) * q;
  return mass > 0.0 ? prior_p / mass : 0.0;
}

bool bayesian_buyer_decide(double posterior, double value_v, TieBreak tie_break) {
  const double scaled = posterior * value_v;  // expected surplus is v * posterior - 1
  if (std::abs(scaled - 1.0) <= kIndifferenceTolerance) return tie_break == TieBreak::Buy;
  return scaled > 1.0;
}

}  // namespace arena
