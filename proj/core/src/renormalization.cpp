#include "cpa/renormalization.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "cpa/errors.hpp"
#include "cpa/format.hpp"
#include "cpa/parallel.hpp"

namespace cpa {

namespace {

constexpr std::uint64_t kPadTag = 0x504144ull;
constexpr std::uint64_t kPercolationTag = 0x5045524cull;

std::uint64_t zigzag(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

// Calls f on every site of the closed box, in lexicographic order, until f returns true.
template <class F>
bool any_site(const Box& box, F&& f) {
  const int d = box.dim();
  for (int i = 0; i < d; ++i) {
    if (box.hi[i] < box.lo[i]) return false;
  }
  Site cur = box.lo;
  for (;;) {
    if (f(cur)) return true;
    int axis = d - 1;
    while (axis >= 0 && cur[axis] == box.hi[axis]) {
      cur[axis] = box.lo[axis];
      --axis;
    }
    if (axis < 0) return false;
    ++cur[axis];
  }
}

Box intersect(const Box& a, const Box& b) {
  Box r = a;
  for (int i = 0; i < a.dim(); ++i) {
    r.lo[i] = std::max(a.lo[i], b.lo[i]);
    r.hi[i] = std::min(a.hi[i], b.hi[i]);
  }
  return r;
}

template <class Alive>
bool cube_full(const Site& c, int n, Alive&& alive) {
  return !any_site(Box::centered(c, n), [&](const Site& z) { return !alive(z); });
}

// Box [lo0, hi0] x [-w, w]^(d-1).
Box slab_box(int d, std::int32_t lo0, std::int32_t hi0, std::int32_t w) {
  Box b{Site(d), Site(d)};
  b.lo[0] = lo0;
  b.hi[0] = hi0;
  for (int i = 1; i < d; ++i) {
    b.lo[i] = -w;
    b.hi[i] = w;
  }
  return b;
}

void require_horizon(const Omega& omega, double t, const char* what) {
  if (t > omega.horizon()) {
    throw HorizonExceeded(std::string(what) + " needs time " + format_double(t) + " beyond horizon " +
                          format_double(omega.horizon()));
  }
}

BlockEstimate summarize(const std::vector<std::vector<std::uint8_t>>& hits,
                        const std::vector<std::pair<Site, double>>& starts) {
  BlockEstimate est;
  std::uint64_t total = 0;
  std::size_t worst = 0;
  std::vector<std::uint64_t> per(starts.size(), 0);
  for (const auto& row : hits) {
    for (std::size_t s = 0; s < row.size(); ++s) per[s] += row[s];
  }
  for (std::size_t s = 0; s < starts.size(); ++s) {
    total += per[s];
    if (per[s] < per[worst]) worst = s;
  }
  const std::uint64_t trials = hits.size();
  est.overall = wilson(total, trials * starts.size());
  est.worst = wilson(per[worst], trials);
  est.worst_start = starts[worst];
  return est;
}

}  // namespace

void BlockGeometry::validate() const {
  if (n < 0 || a < 1 || b < 1) throw InvalidArgument("block geometry needs n >= 0, a >= 1, b >= 1");
  if (n >= a) throw InvalidArgument("block geometry needs n < a");
}

double good_site_bound(double T, int m, double gamma, double lambda_next, int d) {
  if (!(T > 0.0) || m < 0 || d < 1) throw InvalidArgument("good_site_bound needs T > 0, m >= 0, d >= 1");
  const double maturation = m == 0 ? 1.0 : std::pow(1.0 - std::exp(-gamma * T / (2.0 * m)), m);
  return std::exp(-1.5 * T) * maturation * std::pow(1.0 - std::exp(-lambda_next * T / 2.0), 2 * d);
}

bool good_site_indicator(const Omega& omega, const Site& x, double nT, double T, int m) {
  if (!(T > 0.0) || m < 0) throw InvalidArgument("good_site_indicator needs T > 0 and m >= 0");
  if (!omega.death_times(x, nT, nT + 1.5 * T).empty()) return false;
  if (omega.maturation_times(x, nT + 0.5 * T, nT + T).size() < static_cast<std::size_t>(m)) return false;
  const double threshold = omega.params().birth_threshold(static_cast<Age>(m) + 1);
  for (const Edge& e : incident_edges(x)) {
    const auto arrows = omega.arrow_events(e, nT + T, nT + 1.5 * T);
    if (std::none_of(arrows.begin(), arrows.end(), [&](const ArrowEvent& a) { return a.mark <= threshold; })) {
      return false;
    }
  }
  return true;
}

std::optional<CubeHit> first_full_cube(Simulator& sim, const Box& centers, int n, double t_lo, double t_hi) {
  auto alive = [&](const Site& z) { return sim.alive(z); };
  sim.run_until(t_lo);
  std::optional<CubeHit> hit;
  any_site(centers, [&](const Site& c) {
    if (!cube_full(c, n, alive)) return false;
    hit = CubeHit{c, sim.time()};
    return true;
  });
  if (hit) return hit;
  while (!sim.extinct()) {
    const auto tr = sim.step(t_hi);
    if (!tr) break;
    if (tr->kind != TransitionKind::Birth) continue;
    any_site(intersect(centers, Box::centered(tr->site, n)), [&](const Site& c) {
      if (!cube_full(c, n, alive)) return false;
      hit = CubeHit{c, tr->time};
      return true;
    });
    if (hit) return hit;
  }
  return std::nullopt;
}

std::optional<CubeHit> find_block_B1(const Omega& omega, const BlockGeometry& g, const Site& x, double s) {
  g.validate();
  const int d = omega.dimension();
  if (x.dim() != d || x.sup_norm() > g.a || s < 0.0 || s > g.b) {
    throw InvalidArgument("block start must lie in [-a,a]^d x [0,b]");
  }
  require_horizon(omega, 6.0 * g.b, "block event");
  const Box region = Box::centered(Site::origin(d), 5 * g.a);
  Simulator sim(omega, Config::cube(x, g.n), region, std::nullopt, s);
  const Box centers = slab_box(d, g.a, 3 * g.a, g.a);
  return first_full_cube(sim, centers, g.n, 5.0 * g.b, 6.0 * g.b);
}

bool check_block_B1(const Omega& omega, const BlockGeometry& g, const Site& x, double s) {
  return find_block_B1(omega, g, x, s).has_value();
}

std::vector<std::pair<Site, double>> block_start_grid(const BlockGeometry& g, int dimension) {
  std::vector<std::pair<Site, double>> out;
  const Box corners = Box::centered(Site::origin(dimension), 1);
  for (const double s : {0.0, static_cast<double>(g.b)}) {
    for (const Site& unit : corners.sites()) out.emplace_back(unit * g.a, s);
  }
  return out;
}

BlockEstimate estimate_B1(const ModelParams& params, const BlockGeometry& g, std::uint64_t trials, bool worst_case,
                          std::uint64_t seed, int threads) {
  g.validate();
  if (trials == 0) throw InvalidArgument("estimate_B1 needs at least one trial");
  const auto starts = worst_case ? block_start_grid(g, params.dimension)
                                 : std::vector<std::pair<Site, double>>{{Site::origin(params.dimension), 0.0}};
  const auto hits = parallel_map(trials, threads, [&](std::size_t i) {
    const Omega om(trial_seed(seed, i), params, 6.0 * g.b);
    std::vector<std::uint8_t> row;
    for (const auto& [x, s] : starts) row.push_back(check_block_B1(om, g, x, s) ? 1 : 0);
    return row;
  });
  return summarize(hits, starts);
}

std::optional<CubeHit> explore_stack(const Omega& omega, const BlockGeometry& g, const CubeHit& from, int j, int k,
                                     int dir) {
  const int d = omega.dimension();
  const double b = g.b;
  const std::int32_t a = g.a;
  std::vector<RegionPiece> pieces;
  for (int i = 0; i < 6; ++i) {
    const int jj = 6 * j + dir * i;
    const double t0 = 5.0 * b * (6 * k + i);
    pieces.push_back({t0, t0 + 6.0 * b, slab_box(d, a * (2 * jj - 5), a * (2 * jj + 5), 5 * a)});
  }
  const double t_lo = 30.0 * b * (k + 1);
  const double t_hi = t_lo + b;
  require_horizon(omega, t_hi, "macro exploration");
  const int target = 6 * (j + dir);
  const Box centers = slab_box(d, a * (2 * target - 1), a * (2 * target + 1), a);
  Simulator sim(omega, Config::cube(from.center, g.n), Region::piecewise(pieces), std::nullopt, from.time);
  return first_full_cube(sim, centers, g.n, t_lo, t_hi);
}

BlockEstimate estimate_stack(const ModelParams& params, const BlockGeometry& g, std::uint64_t trials,
                             std::uint64_t seed, int threads) {
  g.validate();
  if (trials == 0) throw InvalidArgument("estimate_stack needs at least one trial");
  const auto starts = block_start_grid(g, params.dimension);
  const auto hits = parallel_map(trials, threads, [&](std::size_t i) {
    const Omega om(trial_seed(seed, i), params, 31.0 * g.b);
    std::vector<std::uint8_t> row;
    for (const auto& [x, s] : starts) row.push_back(explore_stack(om, g, {x, s}, 0, 0, +1) ? 1 : 0);
    return row;
  });
  return summarize(hits, starts);
}

MacroField::MacroField(BlockGeometry g, int levels, double epsilon_pad) : g_(g), levels_(levels), eps_(epsilon_pad) {
  if (levels < 0) throw InvalidArgument("levels must be nonnegative");
  if (!(epsilon_pad >= 0.0 && epsilon_pad <= 1.0)) throw InvalidArgument("epsilon_pad must lie in [0,1]");
  for (int k = 0; k <= levels; ++k) {
    anchors_.emplace_back(static_cast<std::size_t>(k + 1));
    reach_.emplace_back(static_cast<std::size_t>(k + 1), false);
    if (k < levels) bits_.emplace_back(static_cast<std::size_t>(k + 1), std::array<std::uint8_t, 2>{0, 0});
  }
}

void MacroField::check(int k, int j) const {
  if (k < 0 || k > levels_ || j < -k || j > k || (j + k) % 2 != 0) {
    throw InvalidArgument("macro site outside the light cone");
  }
}

const std::optional<CubeHit>& MacroField::anchor(int k, int j) const {
  check(k, j);
  return anchors_[static_cast<std::size_t>(k)][index(k, j)];
}

bool MacroField::bit(int k, int j, int dir) const {
  check(k, j);
  if (k >= levels_) throw InvalidArgument("no bits above the last level");
  return bits_[static_cast<std::size_t>(k)][index(k, j)][dir > 0 ? 0 : 1] & 1;
}

bool MacroField::explored(int k, int j, int dir) const {
  check(k, j);
  if (k >= levels_) throw InvalidArgument("no bits above the last level");
  return bits_[static_cast<std::size_t>(k)][index(k, j)][dir > 0 ? 0 : 1] & 2;
}

bool MacroField::reachable(int k, int j) const {
  check(k, j);
  return reach_[static_cast<std::size_t>(k)][index(k, j)];
}

std::optional<int> MacroField::extinction_level() const {
  for (int k = 0; k <= levels_; ++k) {
    const auto& row = reach_[static_cast<std::size_t>(k)];
    if (std::none_of(row.begin(), row.end(), [](bool v) { return v; })) return k;
  }
  return std::nullopt;
}

void MacroField::set_anchor(int k, int j, std::optional<CubeHit> y) {
  check(k, j);
  anchors_[static_cast<std::size_t>(k)][index(k, j)] = std::move(y);
}

void MacroField::set_bit(int k, int j, int dir, bool open, bool was_explored) {
  check(k, j);
  bits_[static_cast<std::size_t>(k)][index(k, j)][dir > 0 ? 0 : 1] =
      static_cast<std::uint8_t>((open ? 1 : 0) | (was_explored ? 2 : 0));
}

void MacroField::finalize() {
  reach_[0][0] = true;
  for (int k = 0; k < levels_; ++k) {
    for (int j = -(k + 1); j <= k + 1; j += 2) {
      bool r = false;
      if (j - 1 >= -k && reachable(k, j - 1) && bit(k, j - 1, +1)) r = true;
      if (j + 1 <= k && reachable(k, j + 1) && bit(k, j + 1, -1)) r = true;
      reach_[static_cast<std::size_t>(k + 1)][index(k + 1, j)] = r;
    }
  }
}

MacroField build_macro_field(const Omega& omega, const BlockGeometry& g, int levels, double epsilon_pad) {
  g.validate();
  MacroField field(g, levels, epsilon_pad);
  require_horizon(omega, 30.0 * g.b * levels + g.b, "macro field");
  field.set_anchor(0, 0, CubeHit{Site::origin(omega.dimension()), 0.0});
  for (int k = 0; k < levels; ++k) {
    std::map<int, std::optional<CubeHit>> next;
    for (int j = -k; j <= k; j += 2) {
      const auto y = field.anchor(k, j);
      for (const int dir : {+1, -1}) {
        if (y) {
          const auto x = explore_stack(omega, g, *y, j, k, dir);
          field.set_bit(k, j, dir, x.has_value(), true);
          auto& slot = next[j + dir];
          if (x && (!slot || x->time > slot->time)) slot = x;
        } else {
          const double u = omega.aux_uniform(kPadTag, static_cast<std::uint64_t>(k + 1), zigzag(2 * j + (dir > 0)));
          field.set_bit(k, j, dir, u <= 1.0 - epsilon_pad, false);
        }
      }
    }
    for (int j = -(k + 1); j <= k + 1; j += 2) {
      const auto it = next.find(j);
      field.set_anchor(k + 1, j, it == next.end() ? std::nullopt : it->second);
    }
  }
  field.finalize();
  return field;
}

void write_anchor_csv(std::ostream& out, const MacroField& field, int dimension) {
  out << "level,j";
  for (int i = 0; i < dimension; ++i) out << ",y" << i;
  out << ",t,dagger\n";
  for (int k = 0; k <= field.levels(); ++k) {
    for (int j = -k; j <= k; j += 2) {
      const auto& y = field.anchor(k, j);
      out << k << ',' << j;
      for (int i = 0; i < dimension; ++i) out << ',' << (y ? y->center[i] : 0);
      out << ',' << (y ? format_double(y->time) : "") << ',' << (y ? 0 : 1) << '\n';
    }
  }
}

void write_bits_csv(std::ostream& out, const MacroField& field) {
  out << "level,j,dir,open,explored,reachable\n";
  for (int k = 0; k < field.levels(); ++k) {
    for (int j = -k; j <= k; j += 2) {
      for (const int dir : {+1, -1}) {
        out << k << ',' << j << ',' << (dir > 0 ? "+" : "-") << ',' << (field.bit(k, j, dir) ? 1 : 0) << ','
            << (field.explored(k, j, dir) ? 1 : 0) << ',' << (field.reachable(k, j) ? 1 : 0) << '\n';
      }
    }
  }
}

namespace {

std::optional<Site> find_slab_cube(const Config& c, const BlockGeometry& g) {
  const auto alive = [&](const Site& z) { return c.alive(z); };
  for (const auto& [z, age] : c) {
    Site center = z;
    bool in_slab = true;
    for (int i = 0; i < z.dim(); ++i) {
      center[i] += g.n;
      if (i > 0 && std::abs(center[i]) > g.a) in_slab = false;
    }
    if (in_slab && cube_full(center, g.n, alive)) return center;
  }
  return std::nullopt;
}

}  // namespace

RestartOutcome run_restart(const Omega& omega, const Config& f, const BlockGeometry& g, double t_max, int levels,
                           double epsilon_pad) {
  g.validate();
  require_horizon(omega, t_max, "restart procedure");
  RestartOutcome out;
  Simulator sim(omega, f);
  double t0 = 0.0;
  const double level_time = 30.0 * g.b;
  for (;;) {
    RestartIteration it;
    it.start = t0;
    for (int m = 0;; ++m) {
      const double t = t0 + m + 1;
      if (t > t_max) {
        out.censored = true;
        out.sigma = t0;
        out.iterations.push_back(it);
        return out;
      }
      sim.run_until(t);
      if (sim.extinct()) {
        it.N = m;
        out.iterations.push_back(it);
        out.sigma = t;
        return out;
      }
      if (auto c = find_slab_cube(sim.config(), g)) {
        it.N = m;
        it.cube = *c;
        break;
      }
    }
    const double tau = t0 + it.N + 1;
    if (tau + level_time * levels + g.b > omega.horizon()) {
      out.censored = true;
      out.sigma = tau;
      out.iterations.push_back(it);
      return out;
    }
    const MacroField field = build_macro_field(omega.shift_time(tau).shift_space(*it.cube), g, levels, epsilon_pad);
    it.M = field.extinction_level();
    out.iterations.push_back(it);
    if (!it.M) {
      out.Y = it.cube;
      out.sigma = tau;
      return out;
    }
    t0 = tau + level_time * *it.M;
    if (t0 > t_max) {
      out.censored = true;
      out.sigma = t0;
      return out;
    }
    sim.run_until(t0);
    if (sim.extinct()) {
      out.sigma = t0;
      return out;
    }
  }
}

void write_restart_header(std::ostream& out, int dimension) {
  out << "trial,seed,sigma";
  for (int i = 0; i < dimension; ++i) out << ",y" << i;
  out << ",dagger,L,censored\n";
}

void write_restart_row(std::ostream& out, std::uint64_t trial, std::uint64_t seed, const RestartOutcome& r,
                       int dimension) {
  out << trial << ',' << seed << ',' << format_double(r.sigma);
  for (int i = 0; i < dimension; ++i) out << ',' << (r.Y ? (*r.Y)[i] : 0);
  out << ',' << (r.Y ? 0 : 1) << ',' << r.L() << ',' << (r.censored ? 1 : 0) << '\n';
}

PercolationResult oriented_percolation(PercolationKind kind, int levels,
                                       const std::function<bool(int, int, int)>& open) {
  if (levels < 0) throw InvalidArgument("levels must be nonnegative");
  PercolationResult r;
  r.levels = levels;
  std::map<int, int> hits;
  std::vector<int> eta{0};
  auto record = [&] {
    r.sizes.push_back(eta.size());
    r.range.emplace_back(eta.empty() ? 0 : eta.front(), eta.empty() ? 0 : eta.back());
    for (int m : eta) ++hits[m];
  };
  record();
  for (int n = 0; n < levels; ++n) {
    std::vector<int> next;
    for (int m : eta) {
      for (const int dir : {-1, +1}) {
        const int target = m + dir;
        if (!next.empty() && next.back() >= target) continue;
        const bool ok = kind == PercolationKind::Site ? open(target, n + 1, 0) : open(m, n, dir);
        if (ok) next.push_back(target);
      }
    }
    // Edge percolation may reach target from its right neighbour after a closed left edge.
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    eta = std::move(next);
    record();
    if (eta.empty()) {
      r.tau = n + 1;
      break;
    }
  }
  r.hits.assign(hits.begin(), hits.end());
  return r;
}

PercolationResult oriented_percolation_iid(PercolationKind kind, double p, int levels, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("p must lie in [0,1]");
  return oriented_percolation(kind, levels, [&](int m, int n, int dir) {
    const std::uint64_t h = detail::hash_words(
        seed, {kPercolationTag, zigzag(m), static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(dir + 1)});
    return detail::to_unit_open_closed(h) <= p;
  });
}

PercolationResult oriented_percolation_good_sites(const Omega& omega, double T, int m, int levels) {
  require_horizon(omega, (levels + 1.5) * T, "good-site percolation");
  const int d = omega.dimension();
  return oriented_percolation(PercolationKind::Site, levels, [&](int col, int n, int) {
    Site x(d);
    x[0] = col;
    return good_site_indicator(omega, x, n * T, T, m);
  });
}

}  // namespace cpa
