#pragma once

#include <vector>

namespace arena {

// Alice's subgame-perfect share of the infinite-horizon alternating-offers
// game: (1 - delta_b) / (1 - delta_a * delta_b). Throws DomainError when the
// product of the discount factors is 1 or either factor lies outside [0, 1].
double rubinstein_share(double delta_a, double delta_b);

// Equilibrium proposal of the finite game with `rounds` rounds: element t-1 is
// the proposer's own share in round t (Alice proposes on odd rounds). The
// responder accepts at indifference, so the last proposer takes everything.
std::vector<double> backward_induction_shares(double delta_a, double delta_b, int rounds);

// Probability that a committed seller recommends a low-quality product:
// min{ p / (1 - p) * (v - 1), 1 }.
double commitment_signal_prob(double prior_p, double value_v);

// Bayes posterior of high quality after a "buy" recommendation from a seller
// who always recommends high quality and recommends low quality w.p. q.
double posterior_on_recommend(double prior_p, double q);

enum class TieBreak { Buy, Reject };

// Relative tolerance under which posterior * v is treated as exactly 1.
inline constexpr double kIndifferenceTolerance = 1e-12;

// Buys iff the expected surplus posterior * (v - 1) - (1 - posterior) is
// non-negative; exact indifference (posterior == 1/v) follows `tie_break`.
bool bayesian_buyer_decide(double posterior, double value_v, TieBreak tie_break = TieBreak::Buy);

}  // namespace arena
