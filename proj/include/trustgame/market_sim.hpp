#ifndef TRUSTGAME_MARKET_SIM_HPP
#define TRUSTGAME_MARKET_SIM_HPP

#include <cstdint>
#include <utility>

#include "trustgame/model.hpp"

// Finite-population agent simulation of the market, used to validate the
// closed-form stationary payoffs.  Every round each seller (in a fresh random
// order) is matched with one uniformly drawn buyer; the buyer sees the
// seller's current reputation, buys with its strategy's purchase probability,
// and on a purchase payoffs accrue (shipping: both sides get r; defection:
// buyer -1, seller +1) and the buyer re-assigns the seller's reputation
// (image scorers record the action, indifferent scorers record G, both with
// error mu).  Rounds without a purchase change nothing.

namespace trustgame {

enum class InitReputation { AllG, AllB, Half };  // Half: independent fair coins

struct MarketConfig {
  GameParams params;
  int n_buyers = 1000;
  int n_sellers = 1000;
  long rounds = 1000;  // T; the intended regime is 1 << T << N
  BuyerMix mix{1.0, 0.0, 0.0, 0.0};  // target shares, discretized by largest remainder
  double x = 0.5;                    // target C-seller share, same discretization
  std::uint64_t seed = 0;
  InitReputation init = InitReputation::Half;
  // Diagnostic: process sellers in fixed 0..N-1 order instead of a fresh
  // random permutation each round.  The distributions must not care.
  bool shuffle_each_round = true;
};

// Payoff standard errors are batch means over ~50 contiguous round blocks:
// games within a run share the evolving reputation pool, so they are not iid
// and a per-game (or per-agent) error bar would be too small.  Between-block
// spread also absorbs the initialization transient, which keeps 3-sigma
// comparisons against stationary closed forms honest at moderate T.  se is 0
// when there are fewer than two blocks or no games.
struct StrategyStats {
  int n_buyers = 0;   // buyers assigned this strategy
  long n_games = 0;   // matches those buyers took part in (buying or not)
  double mean = 0.0;  // payoff per game
  double se = 0.0;    // batch-means standard error of mean
};

struct SellerStats {
  int n_sellers = 0;
  double mean = 0.0;     // payoff per game (one game per seller per round)
  double se = 0.0;       // batch-means standard error of mean
  double rho_hat = 0.0;  // end-of-run fraction holding reputation G
  double rho_se = 0.0;   // binomial standard error of rho_hat; 0 at rho_hat 0
                         // or 1, so tests against a hypothesized rho should
                         // use sqrt(rho (1-rho) / n) instead
};

struct EmpiricalReport {
  std::array<StrategyStats, 4> buyer;  // indexed as BuyerStrategy
  SellerStats sellerC, sellerD;
  std::array<double, 4> realized_mix{};  // integer shares actually populated
  double realized_x = 0.0;
  double realized_theta = 0.0;
  bool regime_warning = false;  // rounds outside 10 <= T < min(N)/10
};

// Deterministic for a fixed config (bit-for-bit identical report).
EmpiricalReport simulate_market(const MarketConfig& cfg);

// The same market started from two extreme reputation initializations (same
// seed for both runs); once T washes out the burn-in the pair agrees within
// sampling error.
std::pair<EmpiricalReport, EmpiricalReport> reputation_burnin_check(
    const MarketConfig& cfg, InitReputation a = InitReputation::AllG,
    InitReputation b = InitReputation::AllB);

}  // namespace trustgame

#endif  // TRUSTGAME_MARKET_SIM_HPP
