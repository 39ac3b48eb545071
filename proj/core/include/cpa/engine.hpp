#pragma once

// Event-driven evolution of the contact process with aging from an Omega.
//
// Only streams of living sites and of edges with exactly one living endpoint
// are merged into the pending-event queue (an arrow between two live sites has
// no effect); a site pulls its streams from the environment when it is born. Stale queue entries are skipped by comparing
// activation ids.

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <queue>
#include <vector>

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include "cpa/lattice.hpp"
#include "cpa/omega.hpp"

namespace cpa {

enum class TransitionKind : std::uint8_t { Death, Maturation, Birth, Prune };

const char* to_string(TransitionKind kind);

struct Transition {
  double time = 0.0;
  TransitionKind kind = TransitionKind::Death;
  Site site;
  // Parent of a birth; equal to `site` otherwise.
  Site source;
  Age age_before = 0;
  Age age_after = 0;

  bool operator==(const Transition&) const = default;
};

/// Interval [t_begin, t_end) during which `box` is part of the region.
struct RegionPiece {
  double t_begin = 0.0;
  double t_end = 0.0;
  Box box;
};

/// Optional spatial restriction of an evolution. Live sites are confined to the
/// strict interior of the active box; births only land there. A region may
/// change in time (piecewise constant), in which case sites that fall outside
/// at a switch are removed.
class Region {
 public:
  struct Segment {
    double start = 0.0;
    std::optional<Box> box;  // nullopt: nothing allowed
  };

  Region() = default;
  Region(Box box);  // NOLINT(google-explicit-constructor)

  // At any instant the pieces covering it must unite to a box (they may only
  // differ along axis 0, with overlapping or adjacent ranges).
  static Region piecewise(const std::vector<RegionPiece>& pieces);

  bool bounded() const { return !segments_.empty(); }
  const std::vector<Segment>& segments() const { return segments_; }
  // Index of the segment active at t, or -1 before the first one.
  int segment_at(double t) const;
  bool allows(const Site& x, double t) const;

  Region shifted_time(double t) const;
  Region translated(const Site& by) const;

 private:
  std::vector<Segment> segments_;
};

/// Guard box for runs that stand in for the infinite lattice.
struct Confinement {
  Box box;
};

struct Trajectory {
  Config initial;
  std::vector<Transition> events;
  double t_end = 0.0;

  // Configuration at time t (events with time <= t applied).
  Config at(double t) const;
  Config final_config() const { return at(t_end); }
};

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int dimension);

/// Incremental simulator over its own copy of an Omega view. Not movable:
/// the stream cursors point into it. The process starts from `initial` at
/// `start_time` and reports times in the coordinates of the view.
class Simulator {
 public:
  Simulator(const Omega& omega, const Config& initial, Region region = {},
            std::optional<Confinement> guard = std::nullopt, double start_time = 0.0);
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  double time() const { return now_; }
  bool extinct() const { return sites_.empty(); }
  std::size_t population() const { return sites_.size(); }
  Age age(const Site& x) const;
  bool alive(const Site& x) const { return age(x) != 0; }
  Config config() const;

  const Omega& omega() const { return omega_; }

  // Unspecified order.
  template <class F>
  void for_each_alive(F&& f) const {
    const int d = omega_.dimension();
    for (const auto& [k, rec] : sites_) f(Site::from_key(k, d), rec.age);
  }

  /// Next effective transition with time <= t_limit. Returns nullopt after
  /// moving the clock to t_limit when there is none.
  std::optional<Transition> step(double t_limit);

  template <class F>
  void run_until(double t, F&& on_transition) {
    while (auto tr = step(t)) on_transition(*tr);
  }
  void run_until(double t) {
    while (step(t)) {
    }
  }

 private:
  enum : std::uint8_t { kSwitch = 0, kDeath = 1, kMaturation = 2, kArrow = 3 };

  struct Pending {
    double time;
    std::uint8_t kind;
    std::uint64_t object;  // site key, edge key or segment index
    std::uint64_t id;
    bool operator>(const Pending& o) const {
      if (time != o.time) return time > o.time;
      if (kind != o.kind) return kind > o.kind;
      return object > o.object;
    }
  };

  struct SiteRecord {
    Age age = 0;
    std::uint64_t id = 0;
    StreamCursor death;
    StreamCursor maturation;
  };

  struct EdgeRecord {
    std::uint64_t id = 0;
    StreamCursor arrows;
  };

  bool interior_allowed(const Site& x) const;
  void add_site(const Site& x, std::uint64_t key, Age age, double t);
  // Keeps exactly the edges at x with one live endpoint in the schedule.
  void refresh_edges(const Site& x, double t);
  Transition kill(std::uint64_t key, TransitionKind kind, double t);
  void apply_switch(std::size_t segment, double t);

  Omega omega_;
  Region region_;
  int segment_ = -1;
  std::optional<Confinement> guard_;
  double now_ = 0.0;
  std::uint64_t next_id_ = 1;
  absl::flat_hash_map<std::uint64_t, SiteRecord> sites_;
  absl::flat_hash_map<std::uint64_t, EdgeRecord> edges_;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
  std::deque<Transition> pending_prunes_;
};

/// Full trajectory of the process started from f on [0, t_end].
Trajectory evolve(const Omega& omega, const Config& f, double t_end, const Region& region = {},
                  std::optional<Confinement> guard = std::nullopt);

/// Final configuration only; cheaper than evolve when the path is not needed.
Config evolve_final(const Omega& omega, const Config& f, double t_end, const Region& region = {},
                    std::optional<Confinement> guard = std::nullopt);

/// Gillespie sampler of the same generator, independent of Omega.
Trajectory evolve_direct(const ModelParams& params, const Config& f, double t_end, std::uint64_t seed,
                         const Region& region = {});

/// Pure growth from A0 using every arrow and no deaths.
struct GrowthTrajectory {
  std::vector<Site> initial;
  std::vector<std::pair<double, Site>> additions;  // time-ordered
  double t_end = 0.0;

  std::vector<Site> at(double t) const;
};

GrowthTrajectory richardson_evolve(const Omega& omega, const std::vector<Site>& a0, double t_end,
                                   const Region& region = {}, std::optional<Confinement> guard = std::nullopt);

/// Two-stage model: age 1 is sterile, ages >= 2 give birth at rate lambda.
ModelParams krone_params(double lambda, double gamma, int dimension = 1);

/// Whether evolving f for t + s equals evolving the time-t state for s under
/// the environment shifted by t.
bool hold_semigroup_check(const Omega& omega, const Config& f, double s, double t, const Region& region = {});

}  // namespace cpa
