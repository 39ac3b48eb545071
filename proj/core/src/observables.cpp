#include "cpa/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "cpa/errors.hpp"
#include "cpa/format.hpp"

namespace cpa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

LifetimeResult lifetime(const Trajectory& traj, double t_max) {
  if (traj.initial.empty()) return {true, 0.0};
  std::size_t pop = traj.initial.size();
  for (const Transition& e : traj.events) {
    if (e.time > t_max) break;
    if (e.age_before == 0 && e.age_after > 0) ++pop;
    if (e.age_before > 0 && e.age_after == 0) --pop;
    if (pop == 0) return {true, e.time};
  }
  return {false, t_max};
}

LifetimeResult lifetime(const Omega& omega, const Config& f, double t_max, std::optional<Confinement> guard) {
  if (f.empty()) return {true, 0.0};
  if (t_max > omega.horizon()) throw HorizonExceeded("lifetime window exceeds the horizon");
  Simulator sim(omega, f, {}, std::move(guard));
  while (auto tr = sim.step(t_max)) {
    if (sim.extinct()) return {true, tr->time};
  }
  return {false, t_max};
}

std::optional<double> hitting_time(const Trajectory& traj, const Site& x) {
  if (traj.initial.alive(x)) return 0.0;
  for (const Transition& e : traj.events) {
    if (e.kind == TransitionKind::Birth && e.site == x) return e.time;
  }
  return std::nullopt;
}

OccupiedRegion occupied_region(const Trajectory& traj, double t) {
  if (t > traj.t_end) throw InvalidArgument("time beyond the end of the trajectory");
  OccupiedRegion r;
  r.alive = traj.at(t).support();
  r.reached = traj.initial.support();
  for (const Transition& e : traj.events) {
    if (e.time > t) break;
    if (e.kind == TransitionKind::Birth) r.reached.push_back(e.site);
  }
  std::sort(r.reached.begin(), r.reached.end());
  r.reached.erase(std::unique(r.reached.begin(), r.reached.end()), r.reached.end());
  return r;
}

OriginRun::OriginRun(const Omega& omega, double t_max, std::optional<Confinement> guard, const Config& initial)
    : dim_(omega.dimension()), t_max_(t_max) {
  if (t_max > omega.horizon()) throw HorizonExceeded("origin run exceeds the horizon");
  const Config start = initial.empty() ? Config::single(Site::origin(dim_)) : initial;
  for (const auto& [x, a] : start) {
    intervals_[x.key()].push_back({0.0, kInf});
    first_hit_.emplace(x.key(), 0.0);
  }
  Simulator sim(omega, start, {}, std::move(guard));
  while (auto tr = sim.step(t_max)) {
    const std::uint64_t k = tr->site.key();
    if (tr->kind == TransitionKind::Birth) {
      intervals_[k].push_back({tr->time, kInf});
      first_hit_.try_emplace(k, tr->time);
    } else if (tr->age_after == 0) {
      intervals_[k].back().end = tr->time;
      if (sim.extinct()) {
        extinction_ = tr->time;
        break;
      }
    }
  }
}

std::optional<double> OriginRun::next_alive(const Site& x, double t) const {
  const auto it = intervals_.find(x.key());
  if (it == intervals_.end()) return std::nullopt;
  for (const Interval& iv : it->second) {
    if (iv.end <= t) continue;
    const double s = std::max(iv.begin, t);
    if (s > t_max_) return std::nullopt;
    return s;
  }
  return std::nullopt;
}

std::optional<double> OriginRun::hitting_time(const Site& x) const {
  const auto it = first_hit_.find(x.key());
  if (it == first_hit_.end()) return std::nullopt;
  return it->second;
}

SigmaTrace essential_hitting(const OriginRun& origin, const Omega& omega, const Site& x,
                             std::optional<Confinement> guard) {
  const double t_max = origin.t_max();
  SigmaTrace tr;
  tr.x = x;
  tr.u.push_back(0.0);
  tr.v.push_back(0.0);
  tr.t_x = origin.hitting_time(x);
  tr.degenerate = !origin.survived();
  for (int k = 0;; ++k) {
    const auto next = origin.next_alive(x, tr.v.back());
    if (!next) {
      tr.u.push_back(kInf);
      tr.K = k;
      tr.censored = origin.survived();
      break;
    }
    const double u = *next;
    tr.u.push_back(u);
    const LifetimeResult life = lifetime(omega.shift_time(u), Config::single(x), t_max - u, guard);
    if (!life.extinct) {
      tr.v.push_back(kInf);
      tr.K = k + 1;
      break;
    }
    tr.v.push_back(u + life.time);
  }
  tr.sigma = tr.u[static_cast<std::size_t>(tr.K)];
  return tr;
}

SigmaTrace essential_hitting(const Omega& omega, const Site& x, double t_max, std::optional<Confinement> guard) {
  const OriginRun origin(omega, t_max, guard);
  return essential_hitting(origin, omega, x, guard);
}

void write_sigma_header(std::ostream& out, int dimension) {
  out << "trial,seed";
  for (int i = 0; i < dimension; ++i) out << ",x" << i;
  out << ",K,sigma,t_x,censored,degenerate\n";
}

void write_sigma_row(std::ostream& out, std::uint64_t trial, std::uint64_t seed, const SigmaTrace& tr) {
  out << trial << ',' << seed;
  for (int i = 0; i < tr.x.dim(); ++i) out << ',' << tr.x[i];
  out << ',' << tr.K << ',' << format_double(tr.sigma) << ',' << (tr.t_x ? format_double(*tr.t_x) : "inf") << ','
      << (tr.censored ? 1 : 0) << ',' << (tr.degenerate ? 1 : 0) << '\n';
}

}  // namespace cpa
