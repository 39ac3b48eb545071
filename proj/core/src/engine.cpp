#include "cpa/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <string>

#include "cpa/errors.hpp"
#include "cpa/format.hpp"

namespace cpa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t edge_key(const Site& low, int axis) { return (low.key() << 2) | static_cast<std::uint64_t>(axis); }

bool same_except_axis0(const Box& a, const Box& b) {
  for (int i = 1; i < a.dim(); ++i) {
    if (a.lo[i] != b.lo[i] || a.hi[i] != b.hi[i]) return false;
  }
  return true;
}

// Union of boxes that differ only along axis 0 and chain together.
Box unite(std::vector<Box> boxes) {
  std::sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) { return a.lo[0] < b.lo[0]; });
  Box out = boxes.front();
  for (std::size_t i = 1; i < boxes.size(); ++i) {
    const Box& b = boxes[i];
    if (b.dim() != out.dim() || !same_except_axis0(out, b) || b.lo[0] > out.hi[0] + 1) {
      throw InvalidArgument("region pieces active at the same time do not form a box");
    }
    out.hi[0] = std::max(out.hi[0], b.hi[0]);
  }
  return out;
}

}  // namespace

const char* to_string(TransitionKind kind) {
  switch (kind) {
    case TransitionKind::Death:
      return "death";
    case TransitionKind::Maturation:
      return "maturation";
    case TransitionKind::Birth:
      return "birth";
    case TransitionKind::Prune:
      return "prune";
  }
  return "?";
}

Region::Region(Box box) { segments_.push_back({-kInf, std::move(box)}); }

Region Region::piecewise(const std::vector<RegionPiece>& pieces) {
  if (pieces.empty()) throw InvalidArgument("piecewise region needs at least one piece");
  std::vector<double> cuts;
  for (const auto& p : pieces) {
    if (!(p.t_end > p.t_begin)) throw InvalidArgument("region piece must have t_begin < t_end");
    cuts.push_back(p.t_begin);
    cuts.push_back(p.t_end);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  Region r;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double t = cuts[i];
    std::vector<Box> active;
    for (const auto& p : pieces) {
      if (p.t_begin <= t && t < p.t_end) active.push_back(p.box);
    }
    Segment seg{t, std::nullopt};
    if (!active.empty()) seg.box = unite(std::move(active));
    if (!r.segments_.empty()) {
      const auto& prev = r.segments_.back().box;
      const bool same = prev.has_value() == seg.box.has_value() &&
                        (!prev || (prev->lo == seg.box->lo && prev->hi == seg.box->hi));
      if (same) continue;
    }
    r.segments_.push_back(std::move(seg));
  }
  return r;
}

int Region::segment_at(double t) const {
  const auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                   [](double v, const Segment& s) { return v < s.start; });
  return static_cast<int>(it - segments_.begin()) - 1;
}

bool Region::allows(const Site& x, double t) const {
  if (!bounded()) return true;
  const int i = segment_at(t);
  if (i < 0) return false;
  const auto& box = segments_[static_cast<std::size_t>(i)].box;
  return box && box->interior_contains(x);
}

Region Region::shifted_time(double t) const {
  Region r = *this;
  for (auto& s : r.segments_) s.start -= t;
  return r;
}

Region Region::translated(const Site& by) const {
  Region r = *this;
  for (auto& s : r.segments_) {
    if (s.box) s.box = Box{s.box->lo + by, s.box->hi + by};
  }
  return r;
}

Config Trajectory::at(double t) const {
  Config c = initial;
  for (const Transition& tr : events) {
    if (tr.time > t) break;
    c.set(tr.site, tr.age_after);
  }
  return c;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int dimension) {
  out << 't' << ",kind";
  for (int i = 0; i < dimension; ++i) out << ",x" << i;
  out << ",age_before,age_after\n";
  for (const auto& [x, a] : traj.initial) {
    out << "0,initial";
    for (int i = 0; i < dimension; ++i) out << ',' << x[i];
    out << ",0," << a << '\n';
  }
  for (const Transition& tr : traj.events) {
    out << format_double(tr.time) << ',' << to_string(tr.kind);
    for (int i = 0; i < dimension; ++i) out << ',' << tr.site[i];
    out << ',' << tr.age_before << ',' << tr.age_after << '\n';
  }
}

Simulator::Simulator(const Omega& omega, const Config& initial, Region region, std::optional<Confinement> guard,
                     double start_time)
    : omega_(omega), region_(std::move(region)), guard_(std::move(guard)), now_(start_time) {
  const int d = omega_.dimension();
  if (!(start_time >= 0.0) || start_time > omega_.horizon()) {
    throw HorizonExceeded("start time outside [0, horizon]");
  }
  if (region_.bounded()) {
    segment_ = region_.segment_at(start_time);
    const auto& segs = region_.segments();
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (segs[i].start > start_time) queue_.push({segs[i].start, kSwitch, i, 0});
    }
  }
  for (const auto& [x, a] : initial) {
    if (x.dim() != d) throw InvalidArgument("initial configuration has the wrong dimension");
    if (!interior_allowed(x)) throw RegionError("initial site " + x.to_string() + " outside the region");
    if (guard_ && !guard_->box.interior_contains(x)) {
      throw RegionError("initial site " + x.to_string() + " outside the confinement box");
    }
    add_site(x, x.key(), a, start_time);
  }
  for (const auto& [x, a] : initial) refresh_edges(x, start_time);
}

bool Simulator::interior_allowed(const Site& x) const {
  if (!region_.bounded()) return true;
  if (segment_ < 0) return false;
  const auto& box = region_.segments()[static_cast<std::size_t>(segment_)].box;
  return box && box->interior_contains(x);
}

Age Simulator::age(const Site& x) const {
  const auto it = sites_.find(x.key());
  return it == sites_.end() ? 0 : it->second.age;
}

Config Simulator::config() const {
  Config c;
  for_each_alive([&](const Site& x, Age a) { c.set(x, a); });
  return c;
}

void Simulator::add_site(const Site& x, std::uint64_t key, Age age, double t) {
  const std::uint64_t base = omega_.base_key(x);
  SiteRecord rec;
  rec.age = age;
  rec.id = next_id_++;
  rec.death = StreamCursor(omega_, StreamKind::Death, base, t);
  rec.maturation = StreamCursor(omega_, StreamKind::Maturation, base, t);
  if (rec.death.time() != StreamCursor::kNever) queue_.push({rec.death.time(), kDeath, key, rec.id});
  if (rec.maturation.time() != StreamCursor::kNever) {
    queue_.push({rec.maturation.time(), kMaturation, key, rec.id});
  }
  sites_.insert_or_assign(key, std::move(rec));
}

void Simulator::refresh_edges(const Site& x, double t) {
  const Site& off = omega_.space_offset();
  const bool x_alive = sites_.contains(x.key());
  for (int axis = 0; axis < x.dim(); ++axis) {
    for (int sign = -1; sign <= 1; sign += 2) {
      Site y = x;
      y[axis] += sign;
      const Site& low = sign < 0 ? y : x;
      const std::uint64_t key = edge_key(low, axis);
      if (x_alive == sites_.contains(y.key())) {
        edges_.erase(key);
        continue;
      }
      if (edges_.contains(key)) continue;
      EdgeRecord rec;
      rec.id = next_id_++;
      rec.arrows = StreamCursor(omega_, StreamKind::Arrow, edge_key(low + off, axis), t);
      if (rec.arrows.time() != StreamCursor::kNever) queue_.push({rec.arrows.time(), kArrow, key, rec.id});
      edges_.emplace(key, std::move(rec));
    }
  }
}

Transition Simulator::kill(std::uint64_t key, TransitionKind kind, double t) {
  const auto it = sites_.find(key);
  const Age a = it->second.age;
  sites_.erase(it);
  const Site x = Site::from_key(key, omega_.dimension());
  refresh_edges(x, t);
  return {t, kind, x, x, a, 0};
}

void Simulator::apply_switch(std::size_t segment, double t) {
  segment_ = static_cast<int>(segment);
  std::vector<std::uint64_t> out;
  for (const auto& [k, rec] : sites_) {
    if (!interior_allowed(Site::from_key(k, omega_.dimension()))) out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  for (std::uint64_t k : out) pending_prunes_.push_back(kill(k, TransitionKind::Prune, t));
}

std::optional<Transition> Simulator::step(double t_limit) {
  if (!pending_prunes_.empty()) {
    Transition tr = pending_prunes_.front();
    pending_prunes_.pop_front();
    return tr;
  }
  const int d = omega_.dimension();
  while (!queue_.empty() && queue_.top().time <= t_limit) {
    const Pending p = queue_.top();
    queue_.pop();
    now_ = p.time;
    switch (p.kind) {
      case kSwitch: {
        apply_switch(p.object, p.time);
        if (!pending_prunes_.empty()) {
          Transition tr = pending_prunes_.front();
          pending_prunes_.pop_front();
          return tr;
        }
        continue;
      }
      case kDeath: {
        const auto it = sites_.find(p.object);
        if (it == sites_.end() || it->second.id != p.id) continue;
        return kill(p.object, TransitionKind::Death, p.time);
      }
      case kMaturation: {
        const auto it = sites_.find(p.object);
        if (it == sites_.end() || it->second.id != p.id) continue;
        SiteRecord& rec = it->second;
        const Age before = rec.age++;
        rec.maturation.advance();
        if (rec.maturation.time() != StreamCursor::kNever) {
          queue_.push({rec.maturation.time(), kMaturation, p.object, rec.id});
        }
        const Site x = Site::from_key(p.object, d);
        return Transition{p.time, TransitionKind::Maturation, x, x, before, rec.age};
      }
      case kArrow: {
        const auto it = edges_.find(p.object);
        if (it == edges_.end() || it->second.id != p.id) continue;
        StreamCursor& cur = it->second.arrows;
        const double mark = cur.mark();
        cur.advance();
        if (cur.time() != StreamCursor::kNever) queue_.push({cur.time(), kArrow, p.object, p.id});

        const Edge e = Edge::from_key(p.object, d);
        const Site lo = e.low();
        const Site hi = e.high();
        const auto li = sites_.find(lo.key());
        const auto hj = sites_.find(hi.key());
        const bool lo_alive = li != sites_.end();
        const bool hi_alive = hj != sites_.end();
        if (lo_alive == hi_alive) continue;
        const Age parent_age = lo_alive ? li->second.age : hj->second.age;
        if (mark > omega_.params().birth_threshold(parent_age)) continue;
        const Site& src = lo_alive ? lo : hi;
        const Site& tgt = lo_alive ? hi : lo;
        if (!interior_allowed(tgt)) continue;
        if (guard_ && !guard_->box.interior_contains(tgt)) {
          throw BoundaryHit("birth at " + tgt.to_string() + " reached the confinement box at t=" +
                            format_double(p.time));
        }
        add_site(tgt, tgt.key(), 1, p.time);
        refresh_edges(tgt, p.time);
        return Transition{p.time, TransitionKind::Birth, tgt, src, 0, 1};
      }
      default:
        break;
    }
  }
  now_ = std::max(now_, t_limit);
  return std::nullopt;
}

namespace {

void check_end(const Omega& omega, double t_end) {
  if (!(t_end >= 0.0)) throw InvalidArgument("t_end must be nonnegative");
  if (t_end > omega.horizon()) {
    throw HorizonExceeded("t_end " + format_double(t_end) + " exceeds horizon " + format_double(omega.horizon()));
  }
}

}  // namespace

Trajectory evolve(const Omega& omega, const Config& f, double t_end, const Region& region,
                  std::optional<Confinement> guard) {
  check_end(omega, t_end);
  Trajectory traj;
  traj.initial = f;
  traj.t_end = t_end;
  Simulator sim(omega, f, region, std::move(guard));
  sim.run_until(t_end, [&](const Transition& tr) { traj.events.push_back(tr); });
  return traj;
}

Config evolve_final(const Omega& omega, const Config& f, double t_end, const Region& region,
                    std::optional<Confinement> guard) {
  check_end(omega, t_end);
  Simulator sim(omega, f, region, std::move(guard));
  sim.run_until(t_end);
  return sim.config();
}

Trajectory evolve_direct(const ModelParams& params, const Config& f, double t_end, std::uint64_t seed,
                         const Region& region) {
  params.validate();
  if (!(t_end >= 0.0)) throw InvalidArgument("t_end must be nonnegative");
  if (region.segments().size() > 1) throw InvalidArgument("direct engine supports static regions only");
  for (const auto& [x, a] : f) {
    if (x.dim() != params.dimension) throw InvalidArgument("initial configuration has the wrong dimension");
    if (!region.allows(x, 0.0)) throw RegionError("initial site " + x.to_string() + " outside the region");
  }

  Trajectory traj;
  traj.initial = f;
  traj.t_end = t_end;
  std::map<Site, Age> state(f.begin(), f.end());
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] { return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53; };

  struct Birth {
    Site src;
    Site tgt;
    double rate;
  };
  std::vector<Birth> births;
  double t = 0.0;
  while (!state.empty()) {
    births.clear();
    double birth_total = 0.0;
    for (const auto& [x, a] : state) {
      const double l = params.profile.rate(a);
      if (l <= 0.0) continue;
      for (const Site& y : neighbors(x)) {
        if (state.contains(y) || !region.allows(y, 0.0)) continue;
        births.push_back({x, y, l});
        birth_total += l;
      }
    }
    const double n = static_cast<double>(state.size());
    const double total = n * (1.0 + params.gamma) + birth_total;
    t += -std::log(uniform()) / total;
    if (t > t_end) break;

    double r = uniform() * total;
    if (r < n) {
      auto it = std::next(state.begin(), std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(r), state.size() - 1));
      traj.events.push_back({t, TransitionKind::Death, it->first, it->first, it->second, 0});
      state.erase(it);
      continue;
    }
    r -= n;
    if (r < n * params.gamma) {
      const auto idx = static_cast<std::ptrdiff_t>(r / params.gamma);
      auto it = std::next(state.begin(), std::min<std::ptrdiff_t>(idx, state.size() - 1));
      traj.events.push_back({t, TransitionKind::Maturation, it->first, it->first, it->second, it->second + 1});
      ++it->second;
      continue;
    }
    r -= n * params.gamma;
    std::size_t k = 0;
    while (k + 1 < births.size() && r >= births[k].rate) {
      r -= births[k].rate;
      ++k;
    }
    const Birth& b = births[k];
    state.emplace(b.tgt, 1);
    traj.events.push_back({t, TransitionKind::Birth, b.tgt, b.src, 0, 1});
  }
  return traj;
}

std::vector<Site> GrowthTrajectory::at(double t) const {
  std::vector<Site> out = initial;
  for (const auto& [s, x] : additions) {
    if (s > t) break;
    out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

GrowthTrajectory richardson_evolve(const Omega& omega, const std::vector<Site>& a0, double t_end,
                                   const Region& region, std::optional<Confinement> guard) {
  check_end(omega, t_end);
  if (region.segments().size() > 1) throw InvalidArgument("growth process supports static regions only");
  const int d = omega.dimension();
  GrowthTrajectory traj;
  traj.t_end = t_end;

  absl::flat_hash_set<std::uint64_t> occupied;
  struct Active {
    StreamCursor cursor;
  };
  absl::flat_hash_map<std::uint64_t, Active> edges;
  using Item = std::pair<double, std::uint64_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;

  const Site& off = omega.space_offset();
  auto occupy = [&](const Site& x, double t) {
    occupied.insert(x.key());
    for (int axis = 0; axis < d; ++axis) {
      for (int sign = -1; sign <= 1; sign += 2) {
        Site y = x;
        y[axis] += sign;
        const Site& low = sign < 0 ? y : x;
        const std::uint64_t key = edge_key(low, axis);
        if (occupied.contains(y.key())) {
          edges.erase(key);
          continue;
        }
        if (edges.contains(key)) continue;
        Active a{StreamCursor(omega, StreamKind::Arrow, edge_key(low + off, axis), t)};
        if (a.cursor.time() != StreamCursor::kNever) queue.emplace(a.cursor.time(), key);
        edges.emplace(key, std::move(a));
      }
    }
  };

  std::vector<Site> init = a0;
  std::sort(init.begin(), init.end());
  init.erase(std::unique(init.begin(), init.end()), init.end());
  for (const Site& x : init) {
    if (x.dim() != d) throw InvalidArgument("initial set has the wrong dimension");
    if (!region.allows(x, 0.0)) throw RegionError("initial site " + x.to_string() + " outside the region");
    if (guard && !guard->box.interior_contains(x)) {
      throw RegionError("initial site " + x.to_string() + " outside the confinement box");
    }
  }
  traj.initial = init;
  for (const Site& x : init) occupy(x, 0.0);

  while (!queue.empty() && queue.top().first <= t_end) {
    const auto [t, key] = queue.top();
    queue.pop();
    const auto it = edges.find(key);
    if (it == edges.end() || it->second.cursor.time() != t) continue;
    it->second.cursor.advance();
    if (it->second.cursor.time() != StreamCursor::kNever) queue.emplace(it->second.cursor.time(), key);
    const Edge e = Edge::from_key(key, d);
    const Site tgt = occupied.contains(e.low().key()) ? e.high() : e.low();
    if (!region.allows(tgt, t)) continue;
    if (guard && !guard->box.interior_contains(tgt)) {
      throw BoundaryHit("growth reached the confinement box at " + tgt.to_string());
    }
    traj.additions.emplace_back(t, tgt);
    occupy(tgt, t);
  }
  return traj;
}

ModelParams krone_params(double lambda, double gamma, int dimension) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  return ModelParams::make(dimension, AgeProfile{{0.0, lambda}, lambda}, gamma, lambda);
}

bool hold_semigroup_check(const Omega& omega, const Config& f, double s, double t, const Region& region) {
  if (!(s >= 0.0) || !(t >= 0.0)) throw InvalidArgument("s and t must be nonnegative");
  check_end(omega, s + t);
  const Config whole = evolve_final(omega, f, t + s, region);
  const Config mid = evolve_final(omega, f, t, region);
  const Config rest = evolve_final(omega.shift_time(t), mid, s, region.shifted_time(t));
  return whole == rest;
}

}  // namespace cpa
