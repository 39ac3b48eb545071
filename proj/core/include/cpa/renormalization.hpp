#pragma once

// Block renormalization: good sites, the finite space-time block event, the
// dynamic macroscopic percolation field, the restart procedure and a plain
// oriented-percolation simulator.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "cpa/engine.hpp"
#include "cpa/stats.hpp"

namespace cpa {

/// Cube half-width n, spatial scale a and time scale b of the block event.
struct BlockGeometry {
  int n = 1;
  int a = 2;
  int b = 1;

  void validate() const;
  bool operator==(const BlockGeometry&) const = default;
};

/// Closed-form lower bound on the probability that a site is good.
double good_site_bound(double T, int m, double gamma, double lambda_next, int d);

/// No death at x on [nT, nT+3T/2], at least m maturations on [nT+T/2, nT+T],
/// and on [nT+T, nT+3T/2] an arrow usable at age m+1 on every incident edge.
bool good_site_indicator(const Omega& omega, const Site& x, double nT, double T, int m);

/// A fully occupied cube center + [-n, n]^d at a given time.
struct CubeHit {
  Site center;
  double time = 0.0;

  bool operator==(const CubeHit&) const = default;
};

/// Runs sim to t_hi and returns the first time in [t_lo, t_hi] (then the
/// lexicographically first center in `centers`) at which a full cube is alive.
std::optional<CubeHit> first_full_cube(Simulator& sim, const Box& centers, int n, double t_lo, double t_hi);

/// Block event from the cube x + [-n,n]^d at time s, inside [-5a,5a]^d: some
/// y + [-n,n]^d with y in [a,3a] x [-a,a]^(d-1) fully alive at a time in [5b,6b].
std::optional<CubeHit> find_block_B1(const Omega& omega, const BlockGeometry& g, const Site& x, double s);
bool check_block_B1(const Omega& omega, const BlockGeometry& g, const Site& x, double s);

/// Starting points (x, s) used for worst-case estimates: corners and center of
/// [-a,a]^d crossed with s in {0, b}.
std::vector<std::pair<Site, double>> block_start_grid(const BlockGeometry& g, int dimension);

struct BlockEstimate {
  Proportion overall;             // pooled over every start
  Proportion worst;               // start with the lowest frequency
  std::pair<Site, double> worst_start;
};

/// Monte Carlo estimate of the block event on fresh environments. Without
/// worst_case the start is (0, 0).
BlockEstimate estimate_B1(const ModelParams& params, const BlockGeometry& g, std::uint64_t trials, bool worst_case,
                          std::uint64_t seed, int threads = 1);

/// Exploration of the stacked block: from the anchor cube of macro site (j,k),
/// moving in direction dir (+1 or -1), inside the staircase of six block
/// regions, to a full cube in the start zone of macro site (j+dir, k+1).
std::optional<CubeHit> explore_stack(const Omega& omega, const BlockGeometry& g, const CubeHit& from, int j, int k,
                                     int dir);

/// Worst-case estimate of the stacked block event over block_start_grid.
BlockEstimate estimate_stack(const ModelParams& params, const BlockGeometry& g, std::uint64_t trials,
                             std::uint64_t seed, int threads = 1);

/// Macroscopic field on {(j,k): j+k even, |j| <= k <= levels}.
class MacroField {
 public:
  MacroField(BlockGeometry g, int levels, double epsilon_pad);

  const BlockGeometry& geometry() const { return g_; }
  int levels() const { return levels_; }
  double epsilon_pad() const { return eps_; }

  const std::optional<CubeHit>& anchor(int k, int j) const;
  // Bit of the edge (j,k) -> (j+dir, k+1), 0 <= k < levels.
  bool bit(int k, int j, int dir) const;
  // Whether that bit came from an exploration (its source anchor is not a dagger).
  bool explored(int k, int j, int dir) const;
  // Sites joined to (0,0) by an open path.
  bool reachable(int k, int j) const;
  // First level with no reachable site; nullopt when every level has one.
  std::optional<int> extinction_level() const;

  void set_anchor(int k, int j, std::optional<CubeHit> y);
  void set_bit(int k, int j, int dir, bool open, bool explored);
  void finalize();

 private:
  static std::size_t index(int k, int j) { return static_cast<std::size_t>((j + k) / 2); }
  void check(int k, int j) const;

  BlockGeometry g_;
  int levels_;
  double eps_;
  std::vector<std::vector<std::optional<CubeHit>>> anchors_;
  // bits_[k][index(k,j)][0 for +, 1 for -]: 0 closed, 1 open; +2 when explored.
  std::vector<std::vector<std::array<std::uint8_t, 2>>> bits_;
  std::vector<std::vector<bool>> reach_;
};

/// Builds the field level by level from the anchor (0,0) on the cube
/// [-n,n]^d. Dagger anchors get Bernoulli(1 - epsilon_pad) bits drawn from
/// auxiliary uniforms of omega.
MacroField build_macro_field(const Omega& omega, const BlockGeometry& g, int levels, double epsilon_pad);

void write_anchor_csv(std::ostream& out, const MacroField& field, int dimension);
void write_bits_csv(std::ostream& out, const MacroField& field);

struct RestartIteration {
  double start = 0.0;   // micro time at which the iteration began
  int N = 0;
  std::optional<Site> cube;
  // Extinction level of the launched field; nullopt when it reached every level
  // or when no field was launched.
  std::optional<int> M;
};

struct RestartOutcome {
  double sigma = 0.0;
  std::optional<Site> Y;  // nullopt is the dagger
  bool censored = false;
  std::vector<RestartIteration> iterations;
  int L() const { return static_cast<int>(iterations.size()); }
};

/// Alternates "wait for extinction or a full cube in the slab at integer
/// times" and "launch a macroscopic field from that cube" until the process
/// dies (Y dagger) or a field reaches `levels` (Y = cube center). Censored when
/// the procedure would need times beyond t_max.
RestartOutcome run_restart(const Omega& omega, const Config& f, const BlockGeometry& g, double t_max, int levels,
                           double epsilon_pad);

void write_restart_header(std::ostream& out, int dimension);
void write_restart_row(std::ostream& out, std::uint64_t trial, std::uint64_t seed, const RestartOutcome& r,
                       int dimension);

enum class PercolationKind { Site, Edge };

struct PercolationResult {
  int levels = 0;
  // First level with an empty cluster; nullopt when it reaches `levels`.
  std::optional<int> tau;
  // Per level n: size of eta_n and its leftmost / rightmost point (0,0 when empty).
  std::vector<std::size_t> sizes;
  std::vector<std::pair<int, int>> range;
  // Per column m: number of levels n with (m, n) in the cluster.
  std::vector<std::pair<int, int>> hits;

  bool survived() const { return !tau.has_value(); }
};

/// Oriented percolation on {(m,n): m+n even} from (0,0). For site percolation
/// open(m, n, 0) says whether (m,n) is open; for edge percolation
/// open(m, n, dir) says whether (m,n) -> (m+dir, n+1) is open.
PercolationResult oriented_percolation(PercolationKind kind, int levels,
                                       const std::function<bool(int, int, int)>& open);
/// Independent states from counter-based uniforms u <= p (monotone in p).
PercolationResult oriented_percolation_iid(PercolationKind kind, double p, int levels, std::uint64_t seed);
/// Site (m,n) open iff (m,0,...,0) is good at time nT.
PercolationResult oriented_percolation_good_sites(const Omega& omega, double T, int m, int levels);

}  // namespace cpa
