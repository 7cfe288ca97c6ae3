#ifndef TRUSTGAME_EQUILIBRIUM_HPP
#define TRUSTGAME_EQUILIBRIUM_HPP

#include <optional>

#include "trustgame/payoffs.hpp"

namespace trustgame {

// The all-defect corner: every buyer plays NoBuy, no seller ships.  A stable
// equilibrium for every admissible parameter set.
PopulationState uncooperative_equilibrium();

// Interior cooperative equilibrium.  Buyers mix Buy and Disc only, sellers
// mix so that buyers are indifferent between Buy and Disc, and the Buy weight
// makes C- and D-sellers earn the same:
//   bB_star = (r c1 - mu)(1 - eps) / (1 - mu - r c2)
//   y1      = (bB_star - eps) / (1 - 2 eps),  y2 = 1 - y1
//   x       = c1 / (c1 + mu)
struct CoopEquilibrium {
  double y1;
  double y2;
  double x;
  double bB_star;  // mean purchase probability toward B-sellers at the point
};

// Present iff r > existence_threshold_r(mu, eps, theta), strictly.
std::optional<CoopEquilibrium> cooperative_equilibrium(const GameParams& p);

// The Buy-fraction formula evaluated without the existence gate.  Equals the
// CoopEquilibrium y1 where the equilibrium exists, crosses 0 exactly at
// r = existence_threshold_r, and is negative below it.  Grid commands clamp
// the non-existent side to 0 when charting.
double equilibrium_buy_fraction(const GameParams& p);

// Critical surplus share above which the cooperative equilibrium exists:
//   A / B  with  A = mu (1-eps) + (1-mu) eps,  B = c1 (1-eps) + c2 eps.
double existence_threshold_r(double mu, double eps, double theta);

// Smallest image-scorer fraction supporting the cooperative equilibrium at a
// given r; empty when even theta = 1 is not enough.  Closed form
//   theta_crit = A (1-r) / (r (1-2 mu)(1-2 eps)).
std::optional<double> threshold_theta(double mu, double eps, double r);

// Linear stability of the cooperative equilibrium within the invariant
// Buy-Disc face, in (bB_bar, x) coordinates.  With
//   D1 = mu (1-eps) + (1-mu) bB_star,  D2 = c1 (1-eps) + c2 bB_star,
//   pref = (bB_star - eps)(1 - eps)(1 - eps - bB_star):
//   J11 = pref [ -r x mu (1-mu) / D1^2 + (1-x) c1 c2 / D2^2 ]
//   J12 = pref [ r mu / D1 + c1 / D2 ]
//   J21 = x (1-x)(1-eps) bB_star [ -r (1-mu) / D1^2 + c2 / D2^2 ]
//   J22 = 0
// The point is stable iff trace < 0 and det > 0, equivalently (1-mu)/r > c2.
struct StabilityReport {
  std::array<std::array<double, 2>, 2> jacobian;
  double trace;
  double det;
  double condition_lhs;  // (1-mu)/r
  double condition_rhs;  // c2
  bool stable;
};

StabilityReport coop_stability(const GameParams& p, const CoopEquilibrium& eq);

// Exactly on the existence boundary r = A/B the pure-Disc mix leaves sellers
// indifferent for a whole interval of x, giving a line of rest points.
struct SingularEquilibrium {
  double x_lo;      // c2 / (1 - mu + c2)
  double x_hi;      // c1 / (mu + c1)
  double residual;  // r/A - 1/B, zero on the boundary
};

// How far the parameters sit from the singular boundary.
double singular_residual(const GameParams& p);

// Present iff |singular_residual| <= tol.
std::optional<SingularEquilibrium> singular_equilibrium(const GameParams& p,
                                                        double tol = 1e-9);

// Everything the `equilibrium` command reports.
struct EquilibriumReport {
  PopulationState uncooperative;
  std::optional<CoopEquilibrium> cooperative;
  std::optional<StabilityReport> stability;  // present iff cooperative is
  double residual;                           // singular residual, always
  std::optional<SingularEquilibrium> singular;
};

EquilibriumReport equilibrium_report(const GameParams& p, double singular_tol = 1e-9);

}  // namespace trustgame

#endif  // TRUSTGAME_EQUILIBRIUM_HPP
