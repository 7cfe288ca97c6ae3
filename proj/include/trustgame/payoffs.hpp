#ifndef TRUSTGAME_PAYOFFS_HPP
#define TRUSTGAME_PAYOFFS_HPP

#include "trustgame/model.hpp"

// Exact stationary expected payoffs.  Reputations relax much faster than
// strategies, so each seller type is summarized by the stationary distribution
// of its one-round reputation chain under the current buyer mix; payoffs are
// expectations against those stationary reputations.

namespace trustgame {

enum class SellerType : int { C = 0, D = 1 };  // C ships, D defects

// Stationary probability of holding reputation G, per seller type:
//   rhoC = (1-mu) bB_bar / (mu bG_bar + (1-mu) bB_bar)
//   rhoD =   c2   bB_bar / (c1 bG_bar +   c2   bB_bar)
struct ReputationStats {
  double rhoC;
  double rhoD;
};

ReputationStats stationary_reputations(const GameParams& p, const BuyProbs& bp);

// One-round reputation transition matrix of a seller of the given type under
// mean purchase probabilities bp.  Rows and columns are ordered {G, B};
// m[i][j] is the probability of moving from reputation i to j.  A round with
// no purchase leaves the reputation unchanged.
struct TransitionMatrix {
  std::array<std::array<double, 2>, 2> m;
};

TransitionMatrix reputation_transition_matrix(const GameParams& p, const BuyProbs& bp,
                                              SellerType type);

// Expected payoff per game of one buyer playing strategy s against the
// stationary market (mean purchase probabilities bp, C-seller fraction x):
//   r x [ (1-mu) bG bB_bar + mu bG_bar bB ] / (mu bG_bar + (1-mu) bB_bar)
//   - (1-x) [ c2 bG bB_bar + c1 bG_bar bB ] / (c1 bG_bar + c2 bB_bar)
// where (bG, bB) are the strategy's own purchase probabilities.
double buyer_payoff(const GameParams& p, double x, const BuyProbs& bp, BuyerStrategy s);

// Expected payoff per round of each seller type:
//   C: r bG_bar bB_bar / (mu bG_bar + (1-mu) bB_bar)
//   D:   bG_bar bB_bar / (c1 bG_bar +   c2   bB_bar)
struct SellerPayoffs {
  double C;
  double D;
};

SellerPayoffs seller_payoffs(const GameParams& p, const BuyProbs& bp);

// Every stationary payoff at one population state.  buyer_mean is evaluated
// by its own closed form, r x bG_bar bB_bar / (mu bG_bar + (1-mu) bB_bar)
// - (1-x) bG_bar bB_bar / (c1 bG_bar + c2 bB_bar); it coincides with the
// mix-weighted average of the per-strategy payoffs.
struct PayoffProfile {
  std::array<double, 4> buyer;  // indexed as BuyerStrategy
  double buyer_mean;
  SellerPayoffs seller;
};

PayoffProfile payoff_profile(const GameParams& p, const PopulationState& s);

}  // namespace trustgame

#endif  // TRUSTGAME_PAYOFFS_HPP
