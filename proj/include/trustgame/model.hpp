#ifndef TRUSTGAME_MODEL_HPP
#define TRUSTGAME_MODEL_HPP

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

// Core types of the buyer-seller trust game with binary reputations.
//
// Sellers either ship after payment (type C) or keep the money (type D) and
// carry a public reputation, G or B, refreshed after every purchase by the
// buyer they just served.  A fraction theta of buyers are image scorers who
// record the seller's last action (ship -> G, defect -> B); the rest always
// record G.  Both kinds err with probability mu.  Buyers condition the
// purchase on the observed reputation and tremble with probability eps when
// executing the intended action.

namespace trustgame {

inline constexpr const char* kVersion = "0.1.0";

// Construction-time violation of a domain constraint.  The message names the
// constraint that failed.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GameParams {
  double mu;     // reputation assignment error, in (0, 1/2)
  double eps;    // strategy implementation error, in (0, 1/2)
  double r;      // buyer's share of the gains from trade, in (0, 1)
  double theta;  // fraction of image-scoring buyers, in [0, 1]
};

// Checks every domain constraint and returns the validated pack.
// Throws DomainError naming the violated constraint otherwise.
GameParams validate_params(double mu, double eps, double r, double theta);

// The four reactive buyer strategies, keyed by (buy from G?, buy from B?):
// Buy = (yes, yes), Disc = (yes, no), AntiDisc = (no, yes), NoBuy = (no, no).
enum class BuyerStrategy : int { Buy = 0, Disc = 1, AntiDisc = 2, NoBuy = 3 };

inline constexpr std::array<BuyerStrategy, 4> kBuyerStrategies = {
    BuyerStrategy::Buy, BuyerStrategy::Disc, BuyerStrategy::AntiDisc,
    BuyerStrategy::NoBuy};

const char* strategy_name(BuyerStrategy s);

// Purchase probabilities toward a G-seller and a B-seller.
struct BuyProbs {
  double bG;
  double bB;
};

// Purchase probabilities of one strategy with the implementation error folded
// in: an intended purchase happens with probability 1-eps, an intended pass
// still buys with probability eps.
BuyProbs strategy_probs(BuyerStrategy s, double eps);

// Mixed state of the buyer population; y[i] is the fraction playing strategy
// i (indexed as BuyerStrategy).  Construction validates nonnegativity and
// |sum - 1| <= kSumTol, then renormalizes exactly once.  Downstream code
// never rescales a mix.
class BuyerMix {
 public:
  static constexpr double kSumTol = 1e-12;

  explicit BuyerMix(const std::array<double, 4>& y);
  BuyerMix(double y1, double y2, double y3, double y4)
      : BuyerMix(std::array<double, 4>{y1, y2, y3, y4}) {}

  double operator[](std::size_t i) const { return y_[i]; }
  double at(BuyerStrategy s) const { return y_[static_cast<std::size_t>(s)]; }
  const std::array<double, 4>& y() const { return y_; }

 private:
  std::array<double, 4> y_;
};

// Joint population state: buyer mix plus the fraction x of C-sellers.
struct PopulationState {
  BuyerMix mix;
  double x;
};

// Validates x in [0, 1].
PopulationState make_state(const BuyerMix& mix, double x);

// Effective accuracy of the aggregate scoring rule against defectors.  A
// shipping seller is re-assigned G with probability 1-mu regardless of the
// scorer's type; a defecting seller is assigned B with probability
//   c1 = theta (1-mu) + (1-theta) mu
// (image scorers record the defection, indifferent scorers err toward B)
// and G with probability c2 = 1 - c1, exactly, by construction.
struct ScoringWeights {
  double c1;
  double c2;
};

ScoringWeights scoring_weights(const GameParams& p);

// Population-mean purchase probabilities, linear in the mix:
//   bG_bar = (1-eps)(y1+y2) + eps(y3+y4)
//   bB_bar = (1-eps)(y1+y3) + eps(y2+y4)
BuyProbs mean_buy_probs(const BuyerMix& mix, double eps);

}  // namespace trustgame

#endif  // TRUSTGAME_MODEL_HPP
