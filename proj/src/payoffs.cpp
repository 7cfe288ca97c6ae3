#include "trustgame/payoffs.hpp"

namespace trustgame {

ReputationStats stationary_reputations(const GameParams& p, const BuyProbs& bp) {
  const ScoringWeights w = scoring_weights(p);
  const double dC = p.mu * bp.bG + (1.0 - p.mu) * bp.bB;
  const double dD = w.c1 * bp.bG + w.c2 * bp.bB;
  return ReputationStats{(1.0 - p.mu) * bp.bB / dC, w.c2 * bp.bB / dD};
}

TransitionMatrix reputation_transition_matrix(const GameParams& p, const BuyProbs& bp,
                                              SellerType type) {
  // After a purchase a C-seller is assigned G with probability 1-mu, a
  // D-seller with probability c2; without a purchase nothing changes.
  const ScoringWeights w = scoring_weights(p);
  const double pG = (type == SellerType::C) ? 1.0 - p.mu : w.c2;
  const double pB = 1.0 - pG;
  TransitionMatrix t;
  t.m[0][0] = pG * bp.bG + (1.0 - bp.bG);
  t.m[0][1] = pB * bp.bG;
  t.m[1][0] = pG * bp.bB;
  t.m[1][1] = pB * bp.bB + (1.0 - bp.bB);
  return t;
}

double buyer_payoff(const GameParams& p, double x, const BuyProbs& bp, BuyerStrategy s) {
  const ScoringWeights w = scoring_weights(p);
  const BuyProbs own = strategy_probs(s, p.eps);
  const double dC = p.mu * bp.bG + (1.0 - p.mu) * bp.bB;
  const double dD = w.c1 * bp.bG + w.c2 * bp.bB;
  const double gain = ((1.0 - p.mu) * own.bG * bp.bB + p.mu * bp.bG * own.bB) / dC;
  const double loss = (w.c2 * own.bG * bp.bB + w.c1 * bp.bG * own.bB) / dD;
  return p.r * x * gain - (1.0 - x) * loss;
}

SellerPayoffs seller_payoffs(const GameParams& p, const BuyProbs& bp) {
  const ScoringWeights w = scoring_weights(p);
  const double gg = bp.bG * bp.bB;
  return SellerPayoffs{p.r * gg / (p.mu * bp.bG + (1.0 - p.mu) * bp.bB),
                       gg / (w.c1 * bp.bG + w.c2 * bp.bB)};
}

PayoffProfile payoff_profile(const GameParams& p, const PopulationState& s) {
  const BuyProbs bp = mean_buy_probs(s.mix, p.eps);
  const ScoringWeights w = scoring_weights(p);
  PayoffProfile out;
  for (BuyerStrategy st : kBuyerStrategies)
    out.buyer[static_cast<int>(st)] = buyer_payoff(p, s.x, bp, st);
  const double gg = bp.bG * bp.bB;
  out.buyer_mean = p.r * s.x * gg / (p.mu * bp.bG + (1.0 - p.mu) * bp.bB) -
                   (1.0 - s.x) * gg / (w.c1 * bp.bG + w.c2 * bp.bB);
  out.seller = seller_payoffs(p, bp);
  return out;
}

}  // namespace trustgame
