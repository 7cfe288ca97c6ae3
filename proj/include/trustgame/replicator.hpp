#ifndef TRUSTGAME_REPLICATOR_HPP
#define TRUSTGAME_REPLICATOR_HPP

#include <string>
#include <vector>

#include "trustgame/equilibrium.hpp"

// Two-population replicator dynamics over (y, x): buyer strategy fractions
// follow dy_i/dt = y_i (P_i - P_mean); the C-seller fraction follows the
// expanded form
//   dx/dt = x (1-x) bG_bar bB_bar [ r / (mu bG_bar + (1-mu) bB_bar)
//                                   - 1 / (c1 bG_bar + c2 bB_bar) ].

namespace trustgame {

struct Derivative {
  std::array<double, 4> dy;
  double dx;
};

Derivative replicator_rhs(const GameParams& p, const PopulationState& s);

// The same field restricted to the invariant Buy-Disc face, expressed in
// (bB_bar, x) coordinates through y1 = (bB_bar - eps)/(1 - 2 eps).  This is
// the finite-difference counterpart of the closed-form Jacobian in
// coop_stability.
struct FaceRates {
  double dbB;
  double dx;
};

FaceRates buy_disc_face_rates(const GameParams& p, double bB, double x);

// The adaptive stepper shrank its step below IntegrationOpts::h_min.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(double t_, double h_, const std::string& msg)
      : std::runtime_error(msg), t(t_), h(h_) {}
  double t;
  double h;
};

struct IntegrationOpts {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double h_init = 1e-2;
  double h_min = 1e-12;      // StepFailure below this
  double fixed_step = 0.0;   // > 0 switches to fixed-step classical RK4
  double seller_rate = 1.0;  // relative adaptation speed of the sellers
  double output_dt = 0.0;    // > 0: record on a regular grid; 0: every step
};

struct Outcome {
  enum class Kind { Cooperative, Uncooperative, Unclassified };
  Kind kind = Kind::Unclassified;
  std::string reason;  // when Unclassified: "timeout" | "step_failure" | "horizon"
};

const char* outcome_name(Outcome::Kind k);

struct Trajectory {
  std::vector<double> times;
  std::vector<PopulationState> states;
  Outcome outcome;
  // Largest |sum y - 1| seen on an accepted step before the log-space gauge
  // pull-back; stays at rounding level.
  double max_simplex_drift = 0.0;
};

// Integrates in (log y, logit x) coordinates, where the growth rates are the
// bounded payoff differences and the faces of the state space sit at
// infinity.  Numerical error can therefore never land a trajectory exactly
// on a face it does not belong to (which would freeze it there, since every
// face is invariant); components that start exactly on a face are kept there,
// matching the true dynamics.  Tolerances apply to the transformed
// coordinates, so rel_tol is a relative accuracy on the strategy shares
// themselves.
Trajectory integrate(const GameParams& p, const PopulationState& s0, double horizon,
                     const IntegrationOpts& opts = {});

struct ClassifyOpts {
  double classify_tol = 1e-6;  // max-norm distance that counts as arrival
  double t_max = 1e5;
  IntegrationOpts integration{};
};

// Integrates until the state enters the classify_tol neighborhood of the
// uncooperative corner or of the cooperative equilibrium (when it exists;
// otherwise only the corner is tested), or until t_max.
Outcome classify_limit(const GameParams& p, const PopulationState& s0,
                       const ClassifyOpts& opts = {});

}  // namespace trustgame

#endif  // TRUSTGAME_REPLICATOR_HPP
