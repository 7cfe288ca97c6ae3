#include "trustgame/market_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace trustgame {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Apportions n slots to weights by largest remainder; ties break toward the
// lower index, so the discretization is deterministic.
std::vector<long> largest_remainder(const std::vector<double>& w, long n) {
  const std::size_t k = w.size();
  std::vector<long> counts(k);
  std::vector<std::pair<double, std::size_t>> rest(k);
  long assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double quota = w[i] * static_cast<double>(n);
    counts[i] = static_cast<long>(std::floor(quota));
    assigned += counts[i];
    rest[i] = {quota - std::floor(quota), i};
  }
  std::stable_sort(rest.begin(), rest.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const long leftover = n - assigned;
  for (long i = 0; i < leftover; ++i) ++counts[rest[static_cast<std::size_t>(i)].second];
  return counts;
}

}  // namespace

EmpiricalReport simulate_market(const MarketConfig& cfg) {
  const GameParams& p = cfg.params;
  if (cfg.n_buyers < 1) throw DomainError("simulate_market needs n_buyers >= 1");
  if (cfg.n_sellers < 1) throw DomainError("simulate_market needs n_sellers >= 1");
  if (cfg.rounds < 1) throw DomainError("simulate_market needs rounds >= 1");
  if (!(std::isfinite(cfg.x) && cfg.x >= 0.0 && cfg.x <= 1.0))
    throw DomainError("simulate_market needs 0 <= x <= 1");

  const int nb = cfg.n_buyers;
  const int ns = cfg.n_sellers;
  const std::vector<long> strat_counts =
      largest_remainder({cfg.mix[0], cfg.mix[1], cfg.mix[2], cfg.mix[3]}, nb);
  const long n_c = largest_remainder({cfg.x, 1.0 - cfg.x}, ns)[0];

  // Buyers sit in strategy blocks; image scorers are spread evenly across the
  // index range so every strategy holds its share of them.
  std::vector<int> strat(nb);
  {
    int b = 0;
    for (int i = 0; i < 4; ++i)
      for (long c = 0; c < strat_counts[i]; ++c) strat[b++] = i;
  }
  std::vector<char> image(nb);
  long n_image = 0;
  for (int b = 0; b < nb; ++b) {
    image[b] = static_cast<char>(std::llround((b + 1) * p.theta) -
                                 std::llround(b * p.theta));
    n_image += image[b];
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<char> rep_g(ns);
  switch (cfg.init) {
    case InitReputation::AllG: std::fill(rep_g.begin(), rep_g.end(), 1); break;
    case InitReputation::AllB: std::fill(rep_g.begin(), rep_g.end(), 0); break;
    case InitReputation::Half:
      for (auto& g : rep_g) g = uniform01(rng) < 0.5;
      break;
  }

  double b_probs[4][2];  // [strategy][observed reputation: B=0, G=1]
  for (int i = 0; i < 4; ++i) {
    const BuyProbs bp = strategy_probs(static_cast<BuyerStrategy>(i), p.eps);
    b_probs[i][0] = bp.bB;
    b_probs[i][1] = bp.bG;
  }

  // Payoff means are time averages over a correlated trajectory: every game in
  // a round sees the same reputation pool, so neither games nor agents are iid
  // clusters.  Batch means over contiguous round blocks estimate the variance
  // of such an average robustly; an initialization transient shows up as extra
  // between-block spread, which keeps the error bar honest at moderate T.
  const long blk_len = std::max<long>(1, cfg.rounds / 50);
  const long n_blk = (cfg.rounds + blk_len - 1) / blk_len;
  std::vector<double> strat_pay(4 * n_blk, 0.0), type_pay(2 * n_blk, 0.0);
  std::vector<long> strat_games(4 * n_blk, 0);

  std::vector<int> order(ns);
  std::iota(order.begin(), order.end(), 0);
  std::uniform_int_distribution<int> pick_buyer(0, nb - 1);

  for (long t = 0; t < cfg.rounds; ++t) {
    const long blk = t / blk_len;
    if (cfg.shuffle_each_round) std::shuffle(order.begin(), order.end(), rng);
    for (int s : order) {
      const int b = pick_buyer(rng);
      ++strat_games[strat[b] * n_blk + blk];
      const bool shipping = s < n_c;
      if (uniform01(rng) >= b_probs[strat[b]][static_cast<int>(rep_g[s])]) continue;
      if (shipping) {
        strat_pay[strat[b] * n_blk + blk] += p.r;
        type_pay[blk] += p.r;
      } else {
        strat_pay[strat[b] * n_blk + blk] -= 1.0;
        type_pay[n_blk + blk] += 1.0;
      }
      // Reputation refresh by the buyer just served: image scorers record the
      // action, indifferent scorers record G; either errs with probability mu.
      bool g = shipping || !image[b];
      if (uniform01(rng) < p.mu) g = !g;
      rep_g[s] = g;
    }
  }

  // Ratio-estimator batch SE: block game counts vary (buyers are drawn with
  // replacement), so se^2 = sum_b (S_b - mean*G_b)^2 * B/(B-1) / (sum G)^2.
  auto batch_se = [&](const double* pay, const long* games, double mean,
                      double total_games) {
    if (n_blk < 2 || total_games <= 0.0) return 0.0;
    double ss = 0.0;
    for (long k = 0; k < n_blk; ++k) {
      const double e = pay[k] - mean * static_cast<double>(games[k]);
      ss += e * e;
    }
    const double nb_d = static_cast<double>(n_blk);
    return std::sqrt(ss * nb_d / (nb_d - 1.0)) / total_games;
  };

  EmpiricalReport rep;
  for (int i = 0; i < 4; ++i) {
    StrategyStats& st = rep.buyer[i];
    st.n_buyers = static_cast<int>(strat_counts[i]);
    double pay = 0.0;
    for (long k = 0; k < n_blk; ++k) {
      st.n_games += strat_games[i * n_blk + k];
      pay += strat_pay[i * n_blk + k];
    }
    st.mean = st.n_games > 0 ? pay / static_cast<double>(st.n_games) : 0.0;
    st.se = batch_se(&strat_pay[i * n_blk], &strat_games[i * n_blk], st.mean,
                     static_cast<double>(st.n_games));
    rep.realized_mix[i] = static_cast<double>(st.n_buyers) / nb;
  }

  auto seller_stats = [&](int type, long lo, long hi) {
    SellerStats st;
    st.n_sellers = static_cast<int>(hi - lo);
    if (st.n_sellers == 0) return st;
    // Every seller plays exactly one game per round, so the game count of
    // block k is deterministic: n_sellers * block length.
    std::vector<long> games(n_blk);
    double total = 0.0, pay = 0.0;
    for (long k = 0; k < n_blk; ++k) {
      const long len = std::min(blk_len, cfg.rounds - k * blk_len);
      games[k] = static_cast<long>(st.n_sellers) * len;
      total += static_cast<double>(games[k]);
      pay += type_pay[type * n_blk + k];
    }
    st.mean = pay / total;
    st.se = batch_se(&type_pay[type * n_blk], games.data(), st.mean, total);
    double gcount = 0.0;
    for (long s = lo; s < hi; ++s) gcount += rep_g[s];
    st.rho_hat = gcount / st.n_sellers;
    st.rho_se = std::sqrt(st.rho_hat * (1.0 - st.rho_hat) / st.n_sellers);
    return st;
  };
  rep.sellerC = seller_stats(0, 0, n_c);
  rep.sellerD = seller_stats(1, n_c, ns);

  rep.realized_x = static_cast<double>(n_c) / ns;
  rep.realized_theta = static_cast<double>(n_image) / nb;
  rep.regime_warning =
      cfg.rounds < 10 || 10 * cfg.rounds >= std::min(cfg.n_buyers, cfg.n_sellers);
  return rep;
}

std::pair<EmpiricalReport, EmpiricalReport> reputation_burnin_check(
    const MarketConfig& cfg, InitReputation a, InitReputation b) {
  MarketConfig ca = cfg, cb = cfg;
  ca.init = a;
  cb.init = b;
  return {simulate_market(ca), simulate_market(cb)};
}

}  // namespace trustgame
