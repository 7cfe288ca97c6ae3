#include "trustgame/model.hpp"

#include <cmath>
#include <sstream>

namespace trustgame {

namespace {

[[noreturn]] void fail(const std::string& constraint, double value) {
  std::ostringstream oss;
  oss << "domain constraint violated: " << constraint << " (got " << value << ")";
  throw DomainError(oss.str());
}

}  // namespace

GameParams validate_params(double mu, double eps, double r, double theta) {
  if (!(std::isfinite(mu) && mu > 0.0 && mu < 0.5)) fail("0 < mu < 1/2", mu);
  if (!(std::isfinite(eps) && eps > 0.0 && eps < 0.5)) fail("0 < eps < 1/2", eps);
  if (!(std::isfinite(r) && r > 0.0 && r < 1.0)) fail("0 < r < 1", r);
  if (!(std::isfinite(theta) && theta >= 0.0 && theta <= 1.0)) fail("0 <= theta <= 1", theta);
  return GameParams{mu, eps, r, theta};
}

const char* strategy_name(BuyerStrategy s) {
  switch (s) {
    case BuyerStrategy::Buy:      return "Buy";
    case BuyerStrategy::Disc:     return "Disc";
    case BuyerStrategy::AntiDisc: return "AntiDisc";
    case BuyerStrategy::NoBuy:    return "NoBuy";
  }
  return "?";
}

BuyProbs strategy_probs(BuyerStrategy s, double eps) {
  switch (s) {
    case BuyerStrategy::Buy:      return {1.0 - eps, 1.0 - eps};
    case BuyerStrategy::Disc:     return {1.0 - eps, eps};
    case BuyerStrategy::AntiDisc: return {eps, 1.0 - eps};
    case BuyerStrategy::NoBuy:    return {eps, eps};
  }
  throw DomainError("unknown buyer strategy");
}

BuyerMix::BuyerMix(const std::array<double, 4>& y) : y_(y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(std::isfinite(y_[i]) && y_[i] >= 0.0)) fail("mix fraction y >= 0", y_[i]);
    sum += y_[i];
  }
  if (std::fabs(sum - 1.0) > kSumTol) fail("|sum y - 1| <= 1e-12", sum);
  for (auto& v : y_) v /= sum;  // the one and only renormalization
}

PopulationState make_state(const BuyerMix& mix, double x) {
  if (!(std::isfinite(x) && x >= 0.0 && x <= 1.0)) fail("0 <= x <= 1", x);
  return PopulationState{mix, x};
}

ScoringWeights scoring_weights(const GameParams& p) {
  const double c1 = p.theta * (1.0 - p.mu) + (1.0 - p.theta) * p.mu;
  return ScoringWeights{c1, 1.0 - c1};
}

BuyProbs mean_buy_probs(const BuyerMix& mix, double eps) {
  const auto& y = mix.y();
  return BuyProbs{(1.0 - eps) * (y[0] + y[1]) + eps * (y[2] + y[3]),
                  (1.0 - eps) * (y[0] + y[2]) + eps * (y[1] + y[3])};
}

}  // namespace trustgame
