#include "trustgame/equilibrium.hpp"

#include <cmath>

namespace trustgame {

PopulationState uncooperative_equilibrium() {
  return PopulationState{BuyerMix{0.0, 0.0, 0.0, 1.0}, 0.0};
}

double existence_threshold_r(double mu, double eps, double theta) {
  const GameParams p = validate_params(mu, eps, 0.5, theta);  // r itself is not involved
  const ScoringWeights w = scoring_weights(p);
  const double A = mu * (1.0 - eps) + (1.0 - mu) * eps;
  const double B = w.c1 * (1.0 - eps) + w.c2 * eps;
  return A / B;
}

double equilibrium_buy_fraction(const GameParams& p) {
  const ScoringWeights w = scoring_weights(p);
  const double bB = (p.r * w.c1 - p.mu) * (1.0 - p.eps) / (1.0 - p.mu - p.r * w.c2);
  return (bB - p.eps) / (1.0 - 2.0 * p.eps);
}

std::optional<CoopEquilibrium> cooperative_equilibrium(const GameParams& p) {
  if (!(p.r > existence_threshold_r(p.mu, p.eps, p.theta))) return std::nullopt;
  const ScoringWeights w = scoring_weights(p);
  const double bB = (p.r * w.c1 - p.mu) * (1.0 - p.eps) / (1.0 - p.mu - p.r * w.c2);
  const double y1 = (bB - p.eps) / (1.0 - 2.0 * p.eps);
  return CoopEquilibrium{y1, 1.0 - y1, w.c1 / (w.c1 + p.mu), bB};
}

std::optional<double> threshold_theta(double mu, double eps, double r) {
  validate_params(mu, eps, r, 0.0);
  const double A = mu * (1.0 - eps) + (1.0 - mu) * eps;
  const double tc = A * (1.0 - r) / (r * (1.0 - 2.0 * mu) * (1.0 - 2.0 * eps));
  if (tc > 1.0) return std::nullopt;
  return tc;
}

StabilityReport coop_stability(const GameParams& p, const CoopEquilibrium& eq) {
  const ScoringWeights w = scoring_weights(p);
  const double d1 = p.mu * (1.0 - p.eps) + (1.0 - p.mu) * eq.bB_star;
  const double d2 = w.c1 * (1.0 - p.eps) + w.c2 * eq.bB_star;
  const double pref = (eq.bB_star - p.eps) * (1.0 - p.eps) * (1.0 - p.eps - eq.bB_star);
  StabilityReport rep;
  rep.jacobian[0][0] = pref * (-p.r * eq.x * p.mu * (1.0 - p.mu) / (d1 * d1) +
                               (1.0 - eq.x) * w.c1 * w.c2 / (d2 * d2));
  rep.jacobian[0][1] = pref * (p.r * p.mu / d1 + w.c1 / d2);
  rep.jacobian[1][0] = eq.x * (1.0 - eq.x) * (1.0 - p.eps) * eq.bB_star *
                       (-p.r * (1.0 - p.mu) / (d1 * d1) + w.c2 / (d2 * d2));
  rep.jacobian[1][1] = 0.0;
  rep.trace = rep.jacobian[0][0] + rep.jacobian[1][1];
  rep.det = rep.jacobian[0][0] * rep.jacobian[1][1] -
            rep.jacobian[0][1] * rep.jacobian[1][0];
  rep.condition_lhs = (1.0 - p.mu) / p.r;
  rep.condition_rhs = w.c2;
  rep.stable = rep.condition_lhs > rep.condition_rhs;
  return rep;
}

double singular_residual(const GameParams& p) {
  const ScoringWeights w = scoring_weights(p);
  const double A = p.mu * (1.0 - p.eps) + (1.0 - p.mu) * p.eps;
  const double B = w.c1 * (1.0 - p.eps) + w.c2 * p.eps;
  return p.r / A - 1.0 / B;
}

std::optional<SingularEquilibrium> singular_equilibrium(const GameParams& p, double tol) {
  const double res = singular_residual(p);
  if (std::fabs(res) > tol) return std::nullopt;
  const ScoringWeights w = scoring_weights(p);
  return SingularEquilibrium{w.c2 / (1.0 - p.mu + w.c2), w.c1 / (p.mu + w.c1), res};
}

EquilibriumReport equilibrium_report(const GameParams& p, double singular_tol) {
  EquilibriumReport rep{uncooperative_equilibrium(), cooperative_equilibrium(p),
                        std::nullopt, singular_residual(p),
                        singular_equilibrium(p, singular_tol)};
  if (rep.cooperative) rep.stability = coop_stability(p, *rep.cooperative);
  return rep;
}

}  // namespace trustgame
