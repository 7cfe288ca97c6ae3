#include "trustgame/basin.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace trustgame {

namespace {

// 53-bit uniform in [0, 1); keeps the draw sequence independent of the
// standard library's distribution implementations.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exponential1(std::mt19937_64& rng) { return -std::log1p(-uniform01(rng)); }

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

// Runs fn(i) for i in [0, n) on up to n_threads workers; work is handed out
// in fixed blocks and results must be written by index, so the outcome does
// not depend on scheduling.
template <class Fn>
void parallel_for(long n, unsigned n_threads, Fn&& fn) {
  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<long>(n_threads, std::max<long>(n, 1)));
  if (n_threads <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  constexpr long kBlock = 16;
  auto worker = [&] {
    try {
      for (;;) {
        const long start = next.fetch_add(kBlock);
        if (start >= n) return;
        const long stop = std::min(n, start + kBlock);
        for (long i = start; i < stop; ++i) fn(i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

PopulationState sample_state(std::mt19937_64& rng, StateSpace space) {
  std::array<double, 4> y{0.0, 0.0, 0.0, 0.0};
  if (space == StateSpace::ThreeStrategy) {
    const double e1 = exponential1(rng), e2 = exponential1(rng), e4 = exponential1(rng);
    const double s = e1 + e2 + e4;
    y = {e1 / s, e2 / s, 0.0, e4 / s};
  } else {
    double e[4], s = 0.0;
    for (double& v : e) s += (v = exponential1(rng));
    y = {e[0] / s, e[1] / s, e[2] / s, e[3] / s};
  }
  const double x = uniform01(rng);
  return PopulationState{BuyerMix{y}, x};
}

BasinEstimate basin_volume(const GameParams& p, StateSpace space, int n_samples,
                           std::uint64_t seed, const BasinOpts& opts) {
  if (n_samples < 1) throw DomainError("basin_volume needs n_samples >= 1");
  std::vector<Outcome::Kind> results(static_cast<std::size_t>(n_samples));
  parallel_for(n_samples, opts.n_threads, [&](long i) {
    std::mt19937_64 rng = sample_rng(seed, static_cast<std::uint64_t>(i));
    const PopulationState s0 = sample_state(rng, space);
    results[static_cast<std::size_t>(i)] = classify_limit(p, s0, opts.classify).kind;
  });

  BasinEstimate est;
  est.n_samples = n_samples;
  est.seed = seed;
  for (Outcome::Kind k : results) {
    if (k == Outcome::Kind::Cooperative) ++est.n_cooperative;
    else if (k == Outcome::Kind::Uncooperative) ++est.n_uncooperative;
    else ++est.n_unclassified;
  }
  const long classified = est.n_cooperative + est.n_uncooperative;
  est.volume = classified > 0 ? static_cast<double>(est.n_cooperative) / classified : 0.0;
  est.std_error =
      classified > 0 ? std::sqrt(est.volume * (1.0 - est.volume) / classified) : 0.0;
  return est;
}

namespace {

constexpr double kBisectTol = 1e-3;
constexpr double kTopX = 1.0 - 1e-6;  // open-interior stand-in for x = 1

// The scan asks one question of each probe: does this point belong to the
// cooperative basin?  Everything else -- the uncooperative corner and honest
// timeouts -- is the other side of the dichotomy.  Fibers pinned to a
// simplex edge (some y component exactly 0) run constrained sub-dynamics
// that may be unable to reach one of the attractors, so mixtures of
// Uncooperative and Unclassified probes on the non-cooperative side are
// legitimate there, not violations.
FiberResult scan_fiber(const GameParams& p, double y1, double y2, double y4,
                       const ClassifyOpts& copts) {
  FiberResult fr;
  fr.y1 = y1;
  fr.y2 = y2;
  fr.y4 = y4;
  fr.boundary_x = -1.0;
  const BuyerMix mix{y1, y2, 0.0, y4};
  auto classify_at = [&](double x) {
    return classify_limit(p, PopulationState{mix, x}, copts).kind;
  };
  auto is_coop = [](Outcome::Kind k) { return k == Outcome::Kind::Cooperative; };

  const Outcome::Kind c_lo = classify_at(0.0);
  const Outcome::Kind c_hi = classify_at(kTopX);

  if (is_coop(c_lo) == is_coop(c_hi)) {
    // No crossing.  whole reports the common outcome when the fiber is
    // uniform, Unclassified when the probes mix kinds.
    fr.whole = c_lo == c_hi ? c_lo : Outcome::Kind::Unclassified;
    for (int k = 1; k <= 9; ++k) {
      const Outcome::Kind ck = classify_at(k / 10.0);
      if (is_coop(ck) != is_coop(c_lo)) ++fr.n_violations;
      if (ck != c_lo) fr.whole = Outcome::Kind::Unclassified;
    }
    return fr;
  }

  // Bisect the cooperative/non-cooperative crossing; the dichotomy leaves no
  // third outcome, so the bracket always narrows to the tolerance.
  double lo = 0.0, hi = kTopX;
  while (hi - lo > kBisectTol) {
    const double mid = 0.5 * (lo + hi);
    if (is_coop(classify_at(mid)) == is_coop(c_lo)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  fr.boundary_x = 0.5 * (lo + hi);

  // Monotonicity is verified, not assumed: away from the bracketed crossing
  // every probe must land on its side of the dichotomy.
  for (int k = 1; k <= 9; ++k) {
    const double x = k / 10.0;
    if (std::fabs(x - fr.boundary_x) <= kBisectTol) continue;
    const bool expect = x < fr.boundary_x ? is_coop(c_lo) : is_coop(c_hi);
    if (is_coop(classify_at(x)) != expect) ++fr.n_violations;
  }
  return fr;
}

}  // namespace

BoundaryScan boundary_scan(const GameParams& p, int resolution, const BasinOpts& opts) {
  if (resolution < 2) throw DomainError("boundary_scan needs resolution >= 2");
  struct Cell {
    double y1, y2, y4;
  };
  std::vector<Cell> cells;
  const double step = 1.0 / (resolution - 1);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; i + j < resolution; ++j)
      cells.push_back(Cell{i * step, j * step, 1.0 - (i + j) * step});

  BoundaryScan scan;
  scan.resolution = resolution;
  scan.fibers.resize(cells.size());
  parallel_for(static_cast<long>(cells.size()), opts.n_threads, [&](long i) {
    const Cell& c = cells[static_cast<std::size_t>(i)];
    scan.fibers[static_cast<std::size_t>(i)] =
        scan_fiber(p, c.y1, c.y2, c.y4, opts.classify);
  });
  return scan;
}

}  // namespace trustgame
