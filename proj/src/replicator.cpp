#include "trustgame/replicator.hpp"

#include <algorithm>
#include <cmath>

namespace trustgame {

namespace {

// Shared core of the vector field: per-strategy relative growth rates and the
// seller growth-rate factor, as functions of the state in plain coordinates.
//
//   rate_i = P_i - P_mean        (buyer payoff advantage of strategy i)
//   G      = bG_bar bB_bar (r / D1 - 1 / D2)   with  dx/dt = x (1-x) G.
//
// The integrators work in transformed coordinates, u_i = log y_i and
// u_x = logit x, where the field is simply (rate_i, G): faces of the state
// space sit at infinity, exactly as unreachable as in the true dynamics, so
// no clamping or projection can ever fabricate a rest point.  A coordinate
// that starts exactly on a face (y_i = 0, or x in {0, 1}) is frozen, which
// reproduces the exact invariance of those faces.
struct Field {
  double mu, om_mu, eps, om_eps, r, c1, c2, srate;
  double bG[4], bB[4];
  bool act[5];     // component takes part in the dynamics
  double x_fixed;  // the frozen x when act[4] is false

  static Field make(const GameParams& p, double seller_rate,
                    const PopulationState& s0) {
    const ScoringWeights w = scoring_weights(p);
    Field f{p.mu,  1.0 - p.mu, p.eps, 1.0 - p.eps, p.r, w.c1, w.c2,
            seller_rate, {}, {}, {}, 0.0};
    for (int i = 0; i < 4; ++i) {
      const BuyProbs bp = strategy_probs(static_cast<BuyerStrategy>(i), p.eps);
      f.bG[i] = bp.bG;
      f.bB[i] = bp.bB;
      f.act[i] = s0.mix[i] > 0.0;
    }
    f.act[4] = s0.x > 0.0 && s0.x < 1.0;
    f.x_fixed = s0.x;
    return f;
  }

  void init_u(const PopulationState& s0, double* u) const {
    for (int i = 0; i < 4; ++i) u[i] = act[i] ? std::log(s0.mix[i]) : 0.0;
    u[4] = act[4] ? std::log(s0.x) - std::log1p(-s0.x) : 0.0;
  }

  // u -> (y, x, 1-x).  Softmax over the active components: the mix is a
  // point of the simplex by construction, at any u.
  void to_state(const double* u, double* y, double* x, double* ox) const {
    double m = -1e308;
    for (int i = 0; i < 4; ++i)
      if (act[i]) m = std::max(m, u[i]);
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) sum += (y[i] = act[i] ? std::exp(u[i] - m) : 0.0);
    const double inv = 1.0 / sum;
    for (int i = 0; i < 4; ++i) y[i] *= inv;
    if (act[4]) {
      *x = 1.0 / (1.0 + std::exp(-u[4]));
      *ox = 1.0 / (1.0 + std::exp(u[4]));
    } else {
      *x = x_fixed;
      *ox = 1.0 - x_fixed;
    }
  }

  // Buyer payoffs split into coefficients of the strategy's own (bG, bB), so
  // the mean payoff reuses the same two terms.
  void eval(const double* u, double* du) const {
    double y[4], x, ox;
    to_state(u, y, &x, &ox);
    const double bGbar = om_eps * (y[0] + y[1]) + eps * (y[2] + y[3]);
    const double bBbar = om_eps * (y[0] + y[2]) + eps * (y[1] + y[3]);
    const double inv1 = 1.0 / (mu * bGbar + om_mu * bBbar);
    const double inv2 = 1.0 / (c1 * bGbar + c2 * bBbar);
    const double rx = r * x;
    const double kG = bBbar * (rx * om_mu * inv1 - ox * c2 * inv2);
    const double kB = bGbar * (rx * mu * inv1 - ox * c1 * inv2);
    const double pbar = bGbar * kG + bBbar * kB;
    for (int i = 0; i < 4; ++i)
      du[i] = act[i] ? bG[i] * kG + bB[i] * kB - pbar : 0.0;
    du[4] = act[4] ? srate * bGbar * bBbar * (r * inv1 - inv2) : 0.0;
  }

  // Pulls u back to the log-simplex gauge, sum exp(u_i) = 1 over the active
  // set.  The field only sees u through the softmax, so this changes nothing
  // downstream; it just stops a slow common-mode drift of the u values.
  // Returns |sum exp(u_i) - 1| before the shift.
  double regauge(double* u) const {
    double m = -1e308;
    for (int i = 0; i < 4; ++i)
      if (act[i]) m = std::max(m, u[i]);
    double sum = 0.0;
    for (int i = 0; i < 4; ++i)
      if (act[i]) sum += std::exp(u[i] - m);
    const double ls = m + std::log(sum);
    for (int i = 0; i < 4; ++i)
      if (act[i]) u[i] -= ls;
    return std::fabs(std::expm1(ls));
  }
};

// Dormand-Prince 5(4) with the standard step controller; the last stage is
// reused as the next first stage (the gauge pull-back does not invalidate it).
class Dopri5 {
 public:
  Dopri5(const Field& f, const IntegrationOpts& o, const double* u0)
      : f_(f), o_(o), t_(0.0), h_(o.h_init), have_k1_(false) {
    std::copy(u0, u0 + 5, u_);
  }

  // Advances to exactly t_target.  on_accept(t, u) runs after every accepted
  // step; returning true stops the run.  Returns false when stopped early.
  template <class F>
  bool advance_to(double t_target, F&& on_accept) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                            e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    double k1[5], k2[5], k3[5], k4[5], k5[5], k6[5], k7[5], tmp[5], unew[5];
    while (t_ < t_target) {
      const double left = t_target - t_;
      if (left <= o_.h_min) {  // below the minimal step: absorb the residual
        t_ = t_target;
        break;
      }
      const double h = std::min(h_, left);
      if (have_k1_) {
        std::copy(k1_, k1_ + 5, k1);
      } else {
        f_.eval(u_, k1);
      }
      for (int i = 0; i < 5; ++i) tmp[i] = u_[i] + h * a21 * k1[i];
      f_.eval(tmp, k2);
      for (int i = 0; i < 5; ++i) tmp[i] = u_[i] + h * (a31 * k1[i] + a32 * k2[i]);
      f_.eval(tmp, k3);
      for (int i = 0; i < 5; ++i)
        tmp[i] = u_[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      f_.eval(tmp, k4);
      for (int i = 0; i < 5; ++i)
        tmp[i] = u_[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      f_.eval(tmp, k5);
      for (int i = 0; i < 5; ++i)
        tmp[i] = u_[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                              a64 * k4[i] + a65 * k5[i]);
      f_.eval(tmp, k6);
      for (int i = 0; i < 5; ++i)
        unew[i] = u_[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] +
                               b5 * k5[i] + b6 * k6[i]);
      f_.eval(unew, k7);

      double err = 0.0;
      for (int i = 0; i < 5; ++i) {
        const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                              e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double sk =
            o_.abs_tol + o_.rel_tol * std::max(std::fabs(u_[i]), std::fabs(unew[i]));
        err = std::max(err, std::fabs(e) / sk);
      }
      const bool bad = !std::isfinite(err);

      if (!bad && err <= 1.0) {
        t_ += h;
        std::copy(unew, unew + 5, u_);
        max_drift_ = std::max(max_drift_, f_.regauge(u_));
        std::copy(k7, k7 + 5, k1_);
        have_k1_ = true;
        h_ = h * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        if (on_accept(t_, u_)) return false;
      } else {
        h_ = h * (bad ? 0.2 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9));
        // Only a rejected step can signal failure: an accepted one made
        // progress no matter how small its successor proposal is.
        if (h_ < o_.h_min)
          throw StepFailure(t_, h_,
                            "adaptive step size underflow at t=" + std::to_string(t_));
      }
    }
    return true;
  }

  const double* u() const { return u_; }
  double t() const { return t_; }
  double max_drift() const { return max_drift_; }

 private:
  Field f_;
  IntegrationOpts o_;
  double u_[5];
  double t_;
  double h_;
  double k1_[5];
  bool have_k1_;
  double max_drift_ = 0.0;
};

// Fixed-step classical RK4 over the same transformed field.
template <class F>
bool rk4_advance_to(const Field& f, const IntegrationOpts& o, double* u, double* t,
                    double t_target, double* max_drift, F&& on_accept) {
  double k1[5], k2[5], k3[5], k4[5], tmp[5];
  while (*t < t_target) {
    const double h = std::min(o.fixed_step, t_target - *t);
    if (h <= 1e-15 * std::max(1.0, std::fabs(t_target))) {
      *t = t_target;
      break;
    }
    f.eval(u, k1);
    for (int i = 0; i < 5; ++i) tmp[i] = u[i] + 0.5 * h * k1[i];
    f.eval(tmp, k2);
    for (int i = 0; i < 5; ++i) tmp[i] = u[i] + 0.5 * h * k2[i];
    f.eval(tmp, k3);
    for (int i = 0; i < 5; ++i) tmp[i] = u[i] + h * k3[i];
    f.eval(tmp, k4);
    for (int i = 0; i < 5; ++i)
      u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    *t += h;
    for (int i = 0; i < 5; ++i)
      if (!std::isfinite(u[i]))
        throw StepFailure(*t, h, "non-finite state in fixed-step integration");
    *max_drift = std::max(*max_drift, f.regauge(u));
    if (on_accept(*t, u)) return false;
  }
  return true;
}

PopulationState u_to_state(const Field& f, const double* u) {
  double y[4], x, ox;
  f.to_state(u, y, &x, &ox);
  return PopulationState{BuyerMix{y[0], y[1], y[2], y[3]}, x};
}

}  // namespace

Derivative replicator_rhs(const GameParams& p, const PopulationState& s) {
  const ScoringWeights w = scoring_weights(p);
  const double om_eps = 1.0 - p.eps;
  const double bGbar = om_eps * (s.mix[0] + s.mix[1]) + p.eps * (s.mix[2] + s.mix[3]);
  const double bBbar = om_eps * (s.mix[0] + s.mix[2]) + p.eps * (s.mix[1] + s.mix[3]);
  const double inv1 = 1.0 / (p.mu * bGbar + (1.0 - p.mu) * bBbar);
  const double inv2 = 1.0 / (w.c1 * bGbar + w.c2 * bBbar);
  const double rx = p.r * s.x;
  const double ox = 1.0 - s.x;
  const double kG = bBbar * (rx * (1.0 - p.mu) * inv1 - ox * w.c2 * inv2);
  const double kB = bGbar * (rx * p.mu * inv1 - ox * w.c1 * inv2);
  const double pbar = bGbar * kG + bBbar * kB;
  Derivative d{};
  for (int i = 0; i < 4; ++i) {
    const BuyProbs bp = strategy_probs(static_cast<BuyerStrategy>(i), p.eps);
    d.dy[i] = s.mix[i] * (bp.bG * kG + bp.bB * kB - pbar);
  }
  d.dx = s.x * ox * bGbar * bBbar * (p.r * inv1 - inv2);
  return d;
}

FaceRates buy_disc_face_rates(const GameParams& p, double bB, double x) {
  const double span = 1.0 - 2.0 * p.eps;
  const double y1 = (bB - p.eps) / span;
  const Derivative d =
      replicator_rhs(p, PopulationState{BuyerMix{y1, 1.0 - y1, 0.0, 0.0}, x});
  return FaceRates{span * d.dy[0], d.dx};
}

const char* outcome_name(Outcome::Kind k) {
  switch (k) {
    case Outcome::Kind::Cooperative:   return "Cooperative";
    case Outcome::Kind::Uncooperative: return "Uncooperative";
    case Outcome::Kind::Unclassified:  return "Unclassified";
  }
  return "?";
}

Trajectory integrate(const GameParams& p, const PopulationState& s0, double horizon,
                     const IntegrationOpts& opts) {
  if (!(std::isfinite(horizon) && horizon >= 0.0))
    throw DomainError("integration horizon must be finite and >= 0");
  make_state(s0.mix, s0.x);  // re-check x

  const Field f = Field::make(p, opts.seller_rate, s0);
  double u[5];
  f.init_u(s0, u);

  Trajectory traj;
  traj.outcome = Outcome{Outcome::Kind::Unclassified, "horizon"};
  traj.times.push_back(0.0);
  traj.states.push_back(u_to_state(f, u));
  if (horizon == 0.0) return traj;

  auto record = [&](double t, const double* s) {
    traj.times.push_back(t);
    traj.states.push_back(u_to_state(f, s));
  };
  const bool every_step = !(opts.output_dt > 0.0);
  auto step_cb = [&](double t, const double* s) {
    if (every_step) record(t, s);
    return false;
  };

  // Landing points: the output grid (when requested) plus the horizon.
  std::vector<double> stops;
  const double tiny = 1e-12 * std::max(1.0, horizon);
  if (!every_step)
    for (long k = 1; static_cast<double>(k) * opts.output_dt < horizon - tiny; ++k)
      stops.push_back(static_cast<double>(k) * opts.output_dt);
  stops.push_back(horizon);

  double t_end = 0.0;
  if (opts.fixed_step > 0.0) {
    double t = 0.0, drift = 0.0;
    for (double stop : stops) {
      rk4_advance_to(f, opts, u, &t, stop, &drift, step_cb);
      if (!every_step) record(t, u);
    }
    traj.max_simplex_drift = drift;
    t_end = t;
  } else {
    Dopri5 stepper(f, opts, u);
    for (double stop : stops) {
      stepper.advance_to(stop, step_cb);
      if (!every_step) record(stepper.t(), stepper.u());
    }
    std::copy(stepper.u(), stepper.u() + 5, u);
    traj.max_simplex_drift = stepper.max_drift();
    t_end = stepper.t();
  }

  if (std::fabs(traj.times.back() - horizon) > 1e-9 * std::max(1.0, horizon))
    record(t_end, u);  // a sub-minimal final residual was absorbed silently
  return traj;
}

Outcome classify_limit(const GameParams& p, const PopulationState& s0,
                       const ClassifyOpts& opts) {
  make_state(s0.mix, s0.x);  // re-check x

  const double uncoop[5] = {0.0, 0.0, 0.0, 1.0, 0.0};
  double coop[5] = {0.0, 0.0, 0.0, 0.0, 0.0};
  const std::optional<CoopEquilibrium> eq = cooperative_equilibrium(p);
  if (eq) {
    coop[0] = eq->y1;
    coop[1] = eq->y2;
    coop[4] = eq->x;
  }

  const Field f = Field::make(p, opts.integration.seller_rate, s0);
  const double tol = opts.classify_tol;
  Outcome out{Outcome::Kind::Unclassified, "timeout"};
  auto arrived = [&](const double* u) {
    double y[4], x, ox;
    f.to_state(u, y, &x, &ox);
    const double s[5] = {y[0], y[1], y[2], y[3], x};
    double du = 0.0, dc = 0.0;
    for (int i = 0; i < 5; ++i) {
      du = std::max(du, std::fabs(s[i] - uncoop[i]));
      dc = std::max(dc, std::fabs(s[i] - coop[i]));
    }
    if (du <= tol) {
      out = Outcome{Outcome::Kind::Uncooperative, ""};
      return true;
    }
    if (eq && dc <= tol) {
      out = Outcome{Outcome::Kind::Cooperative, ""};
      return true;
    }
    return false;
  };

  double u[5];
  f.init_u(s0, u);
  if (arrived(u)) return out;

  try {
    auto cb = [&](double, const double* s) { return arrived(s); };
    if (opts.integration.fixed_step > 0.0) {
      double t = 0.0, drift = 0.0;
      rk4_advance_to(f, opts.integration, u, &t, opts.t_max, &drift, cb);
    } else {
      Dopri5 stepper(f, opts.integration, u);
      stepper.advance_to(opts.t_max, cb);
    }
  } catch (const StepFailure&) {
    return Outcome{Outcome::Kind::Unclassified, "step_failure"};
  }
  return out;
}

}  // namespace trustgame
