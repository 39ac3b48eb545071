#pragma once

// Lifetimes, hitting times, occupied regions and the essential hitting time.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "cpa/engine.hpp"

namespace cpa {

struct LifetimeResult {
  bool extinct = false;
  // Extinction time when extinct, otherwise the censoring time T_max.
  double time = 0.0;
};

LifetimeResult lifetime(const Trajectory& traj, double t_max);
/// Runs the process only as long as needed; stops at extinction.
LifetimeResult lifetime(const Omega& omega, const Config& f, double t_max,
                        std::optional<Confinement> guard = std::nullopt);

/// First time x is alive; nullopt when it never is up to the end of traj.
std::optional<double> hitting_time(const Trajectory& traj, const Site& x);

struct OccupiedRegion {
  std::vector<Site> alive;    // A_t
  std::vector<Site> reached;  // H_t, every site alive at some s <= t
};

OccupiedRegion occupied_region(const Trajectory& traj, double t);

/// The process started from one site, run once, remembering when each site was
/// alive. Serves hitting times and the essential-hitting recursion of many
/// sites from a single evolution.
class OriginRun {
 public:
  OriginRun(const Omega& omega, double t_max, std::optional<Confinement> guard = std::nullopt,
            const Config& initial = {});

  double t_max() const { return t_max_; }
  bool survived() const { return !extinction_; }
  std::optional<double> extinction_time() const { return extinction_; }
  // First time at or after t at which x is alive; nullopt if none before t_max.
  std::optional<double> next_alive(const Site& x, double t) const;
  std::optional<double> hitting_time(const Site& x) const;
  // Every site ever reached, with its first hitting time.
  const absl::flat_hash_map<std::uint64_t, double>& first_hits() const { return first_hit_; }
  int dimension() const { return dim_; }

 private:
  struct Interval {
    double begin;
    double end;  // +inf when alive at t_max
  };

  int dim_;
  double t_max_;
  std::optional<double> extinction_;
  absl::flat_hash_map<std::uint64_t, std::vector<Interval>> intervals_;
  absl::flat_hash_map<std::uint64_t, double> first_hit_;
};

struct SigmaTrace {
  Site x;
  // u[0] = v[0] = 0; +inf marks a value declared infinite.
  std::vector<double> u;
  std::vector<double> v;
  int K = 0;
  double sigma = 0.0;
  std::optional<double> t_x;
  // Origin alive at t_max but x not alive again after v_K.
  bool censored = false;
  // Origin died before t_max without the recursion reaching a survivor.
  bool degenerate = false;
};

SigmaTrace essential_hitting(const OriginRun& origin, const Omega& omega, const Site& x,
                             std::optional<Confinement> guard = std::nullopt);
/// Convenience overload that evolves the origin process itself.
SigmaTrace essential_hitting(const Omega& omega, const Site& x, double t_max,
                             std::optional<Confinement> guard = std::nullopt);

void write_sigma_header(std::ostream& out, int dimension);
void write_sigma_row(std::ostream& out, std::uint64_t trial, std::uint64_t seed, const SigmaTrace& tr);

}  // namespace cpa
