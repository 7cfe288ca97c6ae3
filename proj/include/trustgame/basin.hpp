#ifndef TRUSTGAME_BASIN_HPP
#define TRUSTGAME_BASIN_HPP

#include <cstdint>
#include <random>

#include "trustgame/replicator.hpp"

// Monte Carlo volume of the cooperative basin of attraction, and a bisection
// scan of the basin boundary surface.

namespace trustgame {

// ThreeStrategy pins y3 = 0 (AntiDisc absent, the charted cross-section);
// FourStrategy samples the full mix simplex.
enum class StateSpace { ThreeStrategy, FourStrategy };

// One state drawn uniformly: the mix is flat-Dirichlet on the active simplex
// (independent unit-rate exponentials, normalized), x is uniform on [0,1],
// independent of the mix.
PopulationState sample_state(std::mt19937_64& rng, StateSpace space);

struct BasinOpts {
  unsigned n_threads = 0;  // 0 = hardware concurrency
  ClassifyOpts classify{};
};

struct BasinEstimate {
  double volume;      // cooperative share among classified samples
  double std_error;   // sqrt(volume (1 - volume) / n_classified)
  long n_cooperative = 0;
  long n_uncooperative = 0;
  long n_unclassified = 0;  // excluded from volume, reported
  int n_samples = 0;
  std::uint64_t seed = 0;
};

// Classifies n_samples independent draws.  Sample i uses its own generator
// seeded from (seed, i), so the estimate is invariant under the worker count
// and scheduling.
BasinEstimate basin_volume(const GameParams& p, StateSpace space, int n_samples,
                           std::uint64_t seed, const BasinOpts& opts = {});

// One fiber of the boundary scan: the mix is fixed at (y1, y2, 0, y4) and x
// sweeps [0, 1].  Probes are split cooperative vs not (the uncooperative
// corner and honest non-convergence are both "not"); boundary_x brackets the
// crossing to 1e-3 and is -1 when the endpoints agree.  In that case whole
// is the common outcome when every probe matches it, else Unclassified --
// fibers on a simplex edge run constrained sub-dynamics that may be unable
// to reach an attractor, and report such mixtures legitimately.
struct FiberResult {
  double y1, y2, y4;
  double boundary_x;
  Outcome::Kind whole = Outcome::Kind::Unclassified;
  int n_violations = 0;  // cooperative-side outcomes inconsistent with a monotone fiber
};

struct BoundaryScan {
  std::vector<FiberResult> fibers;
  int resolution = 0;
};

// Scans the triangular (y1, y2, y4) grid with `resolution` points per edge.
// Along each fiber the outcome is probed at x = 0 and x = 1 - 1e-6 (the open
// interior limit; the x = 1 face is invariant), the crossing is bisected to
// 1e-3, and monotonicity in x is verified on a uniform probe grid rather
// than assumed.
BoundaryScan boundary_scan(const GameParams& p, int resolution,
                           const BasinOpts& opts = {});

}  // namespace trustgame

#endif  // TRUSTGAME_BASIN_HPP
