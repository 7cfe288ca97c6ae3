#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <map>
#include <string>

#include "trustgame/basin.hpp"
#include "trustgame/equilibrium.hpp"
#include "trustgame/market_sim.hpp"
#include "trustgame/payoffs.hpp"
#include "trustgame/replicator.hpp"

// Command-line driver: closed-form reports as JSON, sweeps and trajectories
// as CSV.  Every command is deterministic given its flags; outputs carry a
// metadata header (CSV `#` lines or a JSON "meta" object).  Exit codes:
// 0 success, 2 invalid input, 3 numerical failure.

namespace {

using nlohmann::json;
using namespace trustgame;

constexpr const char* kVersion = "1.0.0";

// All output funnels through here so "" and "-" mean stdout uniformly.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      f_ = std::fopen(path.c_str(), "w");
      if (!f_) throw DomainError("cannot open output file: " + path);
      owned_ = true;
    } else {
      f_ = stdout;
    }
  }
  ~Output() {
    if (owned_) std::fclose(f_);
  }
  Output(const Output&) = delete;
  Output& operator=(const Output&) = delete;
  std::FILE* get() const { return f_; }

 private:
  std::FILE* f_ = nullptr;
  bool owned_ = false;
};

// Flags shared by every command; model parameters default to the reference
// point mu=0.02, eps=0.1, r=0.15, theta=1.
struct Common {
  double mu = 0.02, eps = 0.1, r = 0.15, theta = 1.0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
  GameParams params() const { return validate_params(mu, eps, r, theta); }
};

void meta_csv(std::FILE* f, const char* cmd, const Common& c) {
  std::fprintf(f, "# trustgame %s v%s\n", cmd, kVersion);
  std::fprintf(f, "# mu=%.12g eps=%.12g r=%.12g theta=%.12g seed=%llu\n", c.mu,
               c.eps, c.r, c.theta, static_cast<unsigned long long>(c.seed));
}

json meta_json(const char* cmd, const Common& c) {
  return json{{"command", cmd},
              {"version", kVersion},
              {"params",
               {{"mu", c.mu}, {"eps", c.eps}, {"r", c.r}, {"theta", c.theta}}}};
}

// Inclusive linear grid; steps == 1 collapses to lo.
struct Range {
  double lo = 0.0, hi = 0.0;
  int steps = 1;
  double at(int i) const {
    return steps < 2 ? lo : lo + (hi - lo) * static_cast<double>(i) /
                                     static_cast<double>(steps - 1);
  }
};

// ---------------------------------------------------------------- equilibrium

void run_equilibrium(const Common& c) {
  const GameParams p = c.params();
  const EquilibriumReport rep = equilibrium_report(p);
  json j;
  j["meta"] = meta_json("equilibrium", c);
  j["uncooperative"] = {{"mix",
                         {rep.uncooperative.mix[0], rep.uncooperative.mix[1],
                          rep.uncooperative.mix[2], rep.uncooperative.mix[3]}},
                        {"x", rep.uncooperative.x}};
  if (rep.cooperative) {
    const CoopEquilibrium& eq = *rep.cooperative;
    const StabilityReport& st = *rep.stability;
    j["cooperative"] = {
        {"y1", eq.y1},
        {"y2", eq.y2},
        {"x", eq.x},
        {"bB_star", eq.bB_star},
        {"stability",
         {{"jacobian",
           {{st.jacobian[0][0], st.jacobian[0][1]},
            {st.jacobian[1][0], st.jacobian[1][1]}}},
          {"trace", st.trace},
          {"det", st.det},
          {"condition_lhs", st.condition_lhs},
          {"condition_rhs", st.condition_rhs},
          {"stable", st.stable}}}};
  } else {
    j["cooperative"] = nullptr;
  }
  j["singular"] = {{"residual", rep.residual}, {"present", rep.singular.has_value()}};
  if (rep.singular) {
    j["singular"]["x_lo"] = rep.singular->x_lo;
    j["singular"]["x_hi"] = rep.singular->x_hi;
  }
  Output out(c.out);
  std::fprintf(out.get(), "%s\n", j.dump(2).c_str());
}

// ---------------------------------------------------------------- y1star-grid

void run_y1star_grid(const Common& c, const std::string& grid, const Range& eps_r,
                     const Range& theta_r, const Range& r_r) {
  Output out(c.out);
  std::FILE* f = out.get();
  meta_csv(f, "y1star-grid", c);
  std::fprintf(f, "# grid=%s (absent equilibrium encoded as y1_star=0)\n",
               grid.c_str());
  const bool over_eps = grid == "eps-r";
  const Range& a1 = over_eps ? eps_r : theta_r;
  std::fprintf(f, "%s,r,y1_star\n", over_eps ? "eps" : "theta");
  for (int i = 0; i < a1.steps; ++i) {
    for (int k = 0; k < r_r.steps; ++k) {
      const double v = a1.at(i);
      const GameParams p =
          over_eps ? validate_params(c.mu, v, r_r.at(k), c.theta)
                   : validate_params(c.mu, c.eps, r_r.at(k), v);
      const auto eq = cooperative_equilibrium(p);
      std::fprintf(f, "%.12g,%.12g,%.12g\n", v, p.r, eq ? eq->y1 : 0.0);
    }
  }
}

// ------------------------------------------------------------ threshold-curve

void run_threshold_curve(const Common& c, const Range& theta_r) {
  Output out(c.out);
  std::FILE* f = out.get();
  meta_csv(f, "threshold-curve", c);
  std::fprintf(f, "theta,r_crit\n");
  for (int i = 0; i < theta_r.steps; ++i) {
    const double th = theta_r.at(i);
    const GameParams p = validate_params(c.mu, c.eps, c.r, th);
    std::fprintf(f, "%.12g,%.12g\n", th,
                 existence_threshold_r(p.mu, p.eps, p.theta));
  }
}

// ------------------------------------------------------------------ trajectory

void run_trajectory(const Common& c, const std::array<double, 4>& y, double x,
                    double horizon, const IntegrationOpts& opts) {
  const GameParams p = c.params();
  const PopulationState s0 = make_state(BuyerMix{y[0], y[1], y[2], y[3]}, x);
  const Trajectory tr = integrate(p, s0, horizon, opts);
  Output out(c.out);
  std::FILE* f = out.get();
  meta_csv(f, "trajectory", c);
  std::fprintf(f,
               "# horizon=%.12g output_dt=%.12g rel_tol=%g abs_tol=%g "
               "fixed_step=%g seller_rate=%.12g\n",
               horizon, opts.output_dt, opts.rel_tol, opts.abs_tol,
               opts.fixed_step, opts.seller_rate);
  std::fprintf(f, "t,y1,y2,y3,y4,x\n");
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const PopulationState& s = tr.states[i];
    std::fprintf(f, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", tr.times[i],
                 s.mix[0], s.mix[1], s.mix[2], s.mix[3], s.x);
  }
}

// ----------------------------------------------------------------------- basin

void run_basin(const Common& c, StateSpace space, int n_samples, double t_max,
               const Range& r_r, const Range& theta_r) {
  BasinOpts opts;
  opts.n_threads = c.threads;
  opts.classify.t_max = t_max;
  Output out(c.out);
  std::FILE* f = out.get();
  meta_csv(f, "basin", c);
  std::fprintf(f, "# space=%s n_samples=%d t_max=%g\n",
               space == StateSpace::ThreeStrategy ? "three" : "four", n_samples,
               t_max);
  std::fprintf(f, "r,theta,volume,stderr,n_unclassified,seed\n");
  for (int i = 0; i < r_r.steps; ++i) {
    for (int k = 0; k < theta_r.steps; ++k) {
      const GameParams p =
          validate_params(c.mu, c.eps, r_r.at(i), theta_r.at(k));
      const BasinEstimate est =
          basin_volume(p, space, n_samples, c.seed, opts);
      std::fprintf(f, "%.12g,%.12g,%.12g,%.12g,%ld,%llu\n", p.r, p.theta,
                   est.volume, est.std_error, est.n_unclassified,
                   static_cast<unsigned long long>(est.seed));
    }
  }
}

// -------------------------------------------------------------- boundary-scan

void run_boundary_scan(const Common& c, int resolution) {
  BasinOpts opts;
  opts.n_threads = c.threads;
  const BoundaryScan scan = boundary_scan(c.params(), resolution, opts);
  Output out(c.out);
  std::FILE* f = out.get();
  meta_csv(f, "boundary-scan", c);
  std::fprintf(f, "# resolution=%d (boundary_x=-1: no crossing on the fiber)\n",
               scan.resolution);
  std::fprintf(f, "y1,y2,y4,boundary_x\n");
  for (const FiberResult& fr : scan.fibers)
    std::fprintf(f, "%.12g,%.12g,%.12g,%.12g\n", fr.y1, fr.y2, fr.y4,
                 fr.boundary_x);
}

// ---------------------------------------------------------------------- oracle

json stats_json(const StrategyStats& st, BuyerStrategy s) {
  return json{{"strategy", strategy_name(s)},
              {"n_buyers", st.n_buyers},
              {"n_games", st.n_games},
              {"mean", st.mean},
              {"se", st.se}};
}

json seller_json(const SellerStats& st) {
  return json{{"n_sellers", st.n_sellers},
              {"mean", st.mean},
              {"se", st.se},
              {"rho_hat", st.rho_hat},
              {"rho_se", st.rho_se}};
}

json empirical_json(const EmpiricalReport& r) {
  json buyers = json::array();
  for (int i = 0; i < 4; ++i)
    buyers.push_back(stats_json(r.buyer[i], static_cast<BuyerStrategy>(i)));
  return json{{"buyer", buyers},
              {"sellerC", seller_json(r.sellerC)},
              {"sellerD", seller_json(r.sellerD)},
              {"realized_mix",
               {r.realized_mix[0], r.realized_mix[1], r.realized_mix[2],
                r.realized_mix[3]}},
              {"realized_x", r.realized_x},
              {"realized_theta", r.realized_theta},
              {"regime_warning", r.regime_warning}};
}

// z is null where no data exists (empty strategy) so consumers cannot
// mistake "no evidence" for "perfect agreement".
json z_or_null(double emp, double want, double se) {
  if (se <= 0.0) return nullptr;
  return (emp - want) / se;
}

json oracle_comparison(const GameParams& p, const EmpiricalReport& r) {
  // Closed forms at the population actually realized after discretization.
  const BuyerMix mix{r.realized_mix[0], r.realized_mix[1], r.realized_mix[2],
                     r.realized_mix[3]};
  const PopulationState st = make_state(mix, r.realized_x);
  const PayoffProfile prof = payoff_profile(p, st);
  const ReputationStats rho =
      stationary_reputations(p, mean_buy_probs(st.mix, p.eps));

  json analytic = {{"buyer", {prof.buyer[0], prof.buyer[1], prof.buyer[2],
                              prof.buyer[3]}},
                   {"sellerC", prof.seller.C},
                   {"sellerD", prof.seller.D},
                   {"rhoC", rho.rhoC},
                   {"rhoD", rho.rhoD}};
  json z;
  json zb = json::array();
  for (int i = 0; i < 4; ++i)
    zb.push_back(z_or_null(r.buyer[i].mean, prof.buyer[i], r.buyer[i].se));
  z["buyer"] = zb;
  z["sellerC"] = z_or_null(r.sellerC.mean, prof.seller.C, r.sellerC.se);
  z["sellerD"] = z_or_null(r.sellerD.mean, prof.seller.D, r.sellerD.se);
  // Reputation z uses the hypothesized-p binomial scale: the empirical SE
  // vanishes at rho_hat 0 or 1, where small-count runs legitimately land.
  const auto rho_z = [](double hat, double want, int n) -> json {
    if (n < 1) return nullptr;
    const double se = std::sqrt(want * (1.0 - want) / n);
    return se > 0.0 ? json((hat - want) / se) : json(nullptr);
  };
  z["rhoC"] = rho_z(r.sellerC.rho_hat, rho.rhoC, r.sellerC.n_sellers);
  z["rhoD"] = rho_z(r.sellerD.rho_hat, rho.rhoD, r.sellerD.n_sellers);
  return json{{"analytic", analytic}, {"z", z}};
}

void run_oracle(const Common& c, MarketConfig cfg, bool at_equilibrium,
                bool burnin) {
  cfg.params = c.params();
  cfg.seed = c.seed;
  if (at_equilibrium) {
    const auto eq = cooperative_equilibrium(cfg.params);
    if (!eq)
      throw DomainError(
          "--equilibrium: no cooperative equilibrium at these parameters");
    cfg.mix = BuyerMix{eq->y1, eq->y2, 0.0, 0.0};
    cfg.x = eq->x;
  }
  const EmpiricalReport rep = simulate_market(cfg);

  json j;
  j["meta"] = meta_json("oracle", c);
  j["meta"]["market"] = {
      {"n_buyers", cfg.n_buyers},
      {"n_sellers", cfg.n_sellers},
      {"rounds", cfg.rounds},
      {"mix", {cfg.mix[0], cfg.mix[1], cfg.mix[2], cfg.mix[3]}},
      {"x", cfg.x},
      {"init", cfg.init == InitReputation::AllG   ? "allG"
               : cfg.init == InitReputation::AllB ? "allB"
                                                  : "half"}};
  j["empirical"] = empirical_json(rep);
  j.update(oracle_comparison(cfg.params, rep));

  if (burnin) {
    const auto pr =
        reputation_burnin_check(cfg, InitReputation::AllG, InitReputation::AllB);
    json diff = json::array();
    for (int i = 0; i < 4; ++i) {
      const StrategyStats& a = pr.first.buyer[i];
      const StrategyStats& b = pr.second.buyer[i];
      diff.push_back(z_or_null(a.mean, b.mean,
                               std::sqrt(a.se * a.se + b.se * b.se)));
    }
    j["burnin"] = {{"allG", empirical_json(pr.first)},
                   {"allB", empirical_json(pr.second)},
                   {"buyer_diff_z", diff}};
  }
  Output out(c.out);
  std::fprintf(out.get(), "%s\n", j.dump(2).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Asymmetric trust game with seller reputation: equilibria, replicator "
      "dynamics, basin volumes, and a stochastic market oracle"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "flat key=value experiment file; explicit flags win");

  Common c;
  app.add_option("--mu", c.mu, "reputation assignment error, in (0, 1/2)")
      ->capture_default_str();
  app.add_option("--eps", c.eps, "buyer trembling probability, in (0, 1)")
      ->capture_default_str();
  app.add_option("--r", c.r, "shipping payoff, in (0, 1)")->capture_default_str();
  app.add_option("--theta", c.theta, "image-scorer share, in [0, 1]")
      ->capture_default_str();
  app.add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  app.add_option("--threads", c.threads, "worker threads (0 = hardware)")
      ->capture_default_str();
  app.add_option("--out", c.out, "output path (default stdout)");

  // Parent flags (--mu and friends) may appear after the subcommand name.
  const auto common_flags_anywhere = [](CLI::App* cmd) {
    cmd->fallthrough();
    return cmd;
  };

  common_flags_anywhere(
      app.add_subcommand("equilibrium",
                         "Equilibrium structure and stability as JSON"))
      ->callback([&] { run_equilibrium(c); });

  {
    auto* cmd = common_flags_anywhere(app.add_subcommand(
        "y1star-grid", "CSV grid of the equilibrium Buy share y1*"));
    auto grid = std::make_shared<std::string>("eps-r");
    auto eps_r = std::make_shared<Range>(Range{0.02, 0.3, 15});
    auto theta_r = std::make_shared<Range>(Range{0.0, 1.0, 11});
    auto r_r = std::make_shared<Range>(Range{0.02, 0.98, 25});
    cmd->add_option("--grid", *grid, "axes: eps-r or theta-r")
        ->check(CLI::IsMember({"eps-r", "theta-r"}))
        ->capture_default_str();
    cmd->add_option("--eps-min", eps_r->lo)->capture_default_str();
    cmd->add_option("--eps-max", eps_r->hi)->capture_default_str();
    cmd->add_option("--eps-steps", eps_r->steps)->check(CLI::PositiveNumber);
    cmd->add_option("--theta-min", theta_r->lo)->capture_default_str();
    cmd->add_option("--theta-max", theta_r->hi)->capture_default_str();
    cmd->add_option("--theta-steps", theta_r->steps)->check(CLI::PositiveNumber);
    cmd->add_option("--r-min", r_r->lo)->capture_default_str();
    cmd->add_option("--r-max", r_r->hi)->capture_default_str();
    cmd->add_option("--r-steps", r_r->steps)->check(CLI::PositiveNumber);
    cmd->callback(
        [&c, grid, eps_r, theta_r, r_r] {
          run_y1star_grid(c, *grid, *eps_r, *theta_r, *r_r);
        });
  }

  {
    auto* cmd = common_flags_anywhere(app.add_subcommand("threshold-curve",
                                   "CSV of the existence threshold r(theta)"));
    auto theta_r = std::make_shared<Range>(Range{0.0, 1.0, 101});
    cmd->add_option("--theta-min", theta_r->lo)->capture_default_str();
    cmd->add_option("--theta-max", theta_r->hi)->capture_default_str();
    cmd->add_option("--theta-steps", theta_r->steps)->check(CLI::PositiveNumber);
    cmd->callback([&c, theta_r] { run_threshold_curve(c, *theta_r); });
  }

  {
    auto* cmd = common_flags_anywhere(app.add_subcommand(
        "trajectory", "CSV replicator trajectory from an initial state"));
    auto y = std::make_shared<std::array<double, 4>>(
        std::array<double, 4>{0.25, 0.25, 0.25, 0.25});
    auto x = std::make_shared<double>(0.5);
    auto horizon = std::make_shared<double>(200.0);
    auto opts = std::make_shared<IntegrationOpts>();
    opts->output_dt = 1.0;
    cmd->add_option("--y1", (*y)[0], "initial Buy share")->capture_default_str();
    cmd->add_option("--y2", (*y)[1], "initial Disc share")->capture_default_str();
    cmd->add_option("--y3", (*y)[2], "initial AntiDisc share")
        ->capture_default_str();
    cmd->add_option("--y4", (*y)[3], "initial NoBuy share")->capture_default_str();
    cmd->add_option("--x", *x, "initial C-seller share")->capture_default_str();
    cmd->add_option("--horizon", *horizon, "integration time")
        ->capture_default_str();
    cmd->add_option("--dt", opts->output_dt,
                    "output grid spacing (0 = every accepted step)")
        ->capture_default_str();
    cmd->add_option("--rel-tol", opts->rel_tol)->capture_default_str();
    cmd->add_option("--abs-tol", opts->abs_tol)->capture_default_str();
    cmd->add_option("--fixed-step", opts->fixed_step,
                    "> 0 switches to fixed-step RK4")
        ->capture_default_str();
    cmd->add_option("--seller-rate", opts->seller_rate,
                    "relative seller adaptation speed")
        ->capture_default_str();
    cmd->callback([&c, y, x, horizon, opts] {
      run_trajectory(c, *y, *x, *horizon, *opts);
    });
  }

  {
    auto* cmd = common_flags_anywhere(app.add_subcommand(
        "basin", "CSV Monte Carlo cooperative-basin volumes over an (r, theta) grid"));
    auto space = std::make_shared<std::string>("three");
    auto n = std::make_shared<int>(1000);
    auto t_max = std::make_shared<double>(1e5);
    auto r_r = std::make_shared<Range>(Range{0.15, 0.15, 1});
    auto theta_r = std::make_shared<Range>(Range{1.0, 1.0, 1});
    auto r_given = std::make_shared<bool>(false);
    auto th_given = std::make_shared<bool>(false);
    cmd->add_option("--space", *space, "mix simplex: three (y3 pinned 0) or four")
        ->check(CLI::IsMember({"three", "four"}))
        ->capture_default_str();
    cmd->add_option("--n-samples", *n)->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--t-max", *t_max, "classification time budget")
        ->capture_default_str();
    cmd->add_option("--r-min", r_r->lo);
    cmd->add_option("--r-max", r_r->hi);
    cmd->add_option("--r-steps", r_r->steps)
        ->check(CLI::PositiveNumber)
        ->each([r_given](const std::string&) { *r_given = true; });
    cmd->add_option("--theta-min", theta_r->lo);
    cmd->add_option("--theta-max", theta_r->hi);
    cmd->add_option("--theta-steps", theta_r->steps)
        ->check(CLI::PositiveNumber)
        ->each([th_given](const std::string&) { *th_given = true; });
    cmd->callback([&c, space, n, t_max, r_r, theta_r, r_given, th_given] {
      // Without explicit grid flags a single cell at --r/--theta is run.
      if (!*r_given) *r_r = Range{c.r, c.r, 1};
      if (!*th_given) *theta_r = Range{c.theta, c.theta, 1};
      run_basin(c,
                *space == "three" ? StateSpace::ThreeStrategy
                                  : StateSpace::FourStrategy,
                *n, *t_max, *r_r, *theta_r);
    });
  }

  {
    auto* cmd = common_flags_anywhere(app.add_subcommand(
        "boundary-scan", "CSV basin-boundary crossings over the mix grid"));
    auto res = std::make_shared<int>(11);
    cmd->add_option("--resolution", *res, "grid points per simplex edge")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->callback([&c, res] { run_boundary_scan(c, *res); });
  }

  {
    auto* cmd = common_flags_anywhere(app.add_subcommand(
        "oracle", "JSON market simulation vs closed-form payoffs"));
    auto cfg = std::make_shared<MarketConfig>();
    auto at_eq = std::make_shared<bool>(false);
    auto burnin = std::make_shared<bool>(false);
    auto y = std::make_shared<std::array<double, 4>>(
        std::array<double, 4>{1.0, 0.0, 0.0, 0.0});
    cmd->add_option("--n-buyers", cfg->n_buyers)->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--n-sellers", cfg->n_sellers)->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--rounds", cfg->rounds)->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--y1", (*y)[0], "Buy share")->capture_default_str();
    cmd->add_option("--y2", (*y)[1], "Disc share")->capture_default_str();
    cmd->add_option("--y3", (*y)[2], "AntiDisc share")->capture_default_str();
    cmd->add_option("--y4", (*y)[3], "NoBuy share")->capture_default_str();
    cmd->add_option("--x", cfg->x, "C-seller share")->capture_default_str();
    cmd->add_option("--init", cfg->init, "initial reputations")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, InitReputation>{
                {"allG", InitReputation::AllG},
                {"allB", InitReputation::AllB},
                {"half", InitReputation::Half}}))
        ->capture_default_str();
    cmd->add_flag("--equilibrium", *at_eq,
                  "run at the cooperative-equilibrium mix and x");
    cmd->add_flag("--burnin-check", *burnin,
                  "also contrast allG vs allB initializations");
    cmd->callback([&c, cfg, at_eq, burnin, y] {
      cfg->mix = BuyerMix{(*y)[0], (*y)[1], (*y)[2], (*y)[3]};
      run_oracle(c, *cfg, *at_eq, *burnin);
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const StepFailure& e) {
    std::fprintf(stderr, "numerical failure: %s (t=%.6g, h=%.3g)\n", e.what(),
                 e.t, e.h);
    return 3;
  }
  return 0;
}
