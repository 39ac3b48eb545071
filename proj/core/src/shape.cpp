#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include <absl/container/flat_hash_set.h>

#include "cpa/errors.hpp"
#include "cpa/experiments.hpp"
#include "cpa/format.hpp"
#include "cpa/parallel.hpp"

namespace cpa {

namespace {

struct ShapeTrial {
  std::uint64_t seed = 0;
  bool survived = false;
  bool aborted = false;
  std::vector<Site> reached;  // sorted
};

double angle(double x, double y) {
  const double a = std::atan2(y, x);
  return a < 0.0 ? a + 2.0 * std::numbers::pi : a;
}

double angle(const Site& u) { return angle(u[0], u[1]); }

double euclid(const Site& u) { return std::hypot(static_cast<double>(u[0]), static_cast<double>(u[1])); }

// Whether the cell union H + [0,1]^2 contains the lattice point w.
bool covered(const absl::flat_hash_set<std::uint64_t>& h, const Site& w) {
  for (int dx = 0; dx <= 1; ++dx) {
    for (int dy = 0; dy <= 1; ++dy) {
      if (h.contains(Site{w[0] - dx, w[1] - dy}.key())) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<Site> shape_directions() {
  std::vector<Site> dirs;
  for (int x = -2; x <= 2; ++x) {
    for (int y = -2; y <= 2; ++y) {
      if (std::max(std::abs(x), std::abs(y)) == 0 || std::gcd(x, y) != 1) continue;
      dirs.push_back(Site{x, y});
    }
  }
  std::sort(dirs.begin(), dirs.end(), [](const Site& a, const Site& b) { return angle(a) < angle(b); });
  return dirs;
}

double ball_radius(const std::vector<DirectionalSpeed>& mu, double theta) {
  if (mu.empty()) throw InvalidArgument("ball_radius needs directional estimates");
  const double two_pi = 2.0 * std::numbers::pi;
  theta = std::fmod(theta, two_pi);
  if (theta < 0.0) theta += two_pi;
  const std::size_t n = mu.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = angle(mu[i].direction);
    double b = angle(mu[(i + 1) % n].direction);
    if (b <= a) b += two_pi;
    double th = theta;
    if (th < a) th += two_pi;
    if (th >= a && th < b) {
      const double w = (th - a) / (b - a);
      return (1.0 - w) / mu[i].mu + w / mu[(i + 1) % n].mu;
    }
  }
  return 1.0 / mu.front().mu;
}

ShapeEstimate shape_snapshot(const ModelParams& params, const ShapeSettings& shape, const RunSettings& s) {
  s.validate();
  if (params.dimension != 2) throw InvalidArgument("shape_snapshot works in dimension 2");
  if (!(shape.t > 0.0)) throw InvalidArgument("shape time must be positive");
  const double t_end = std::max(shape.t, s.t_max);
  const auto guard = confinement(2, t_end, s);
  const auto trials = parallel_map(s.trials, s.threads, [&](std::size_t i) {
    ShapeTrial tr;
    tr.seed = trial_seed(s.seed, i);
    const Omega om(tr.seed, params, t_end);
    try {
      Simulator sim(om, Config::single(Site{0, 0}), {}, guard);
      tr.reached.push_back(Site{0, 0});
      while (auto e = sim.step(shape.t)) {
        if (e->kind == TransitionKind::Birth) tr.reached.push_back(e->site);
      }
      sim.run_until(t_end);
      tr.survived = !sim.extinct();
    } catch (const BoundaryHit&) {
      tr.aborted = true;
    }
    if (!tr.survived) {
      tr.reached.clear();
      return tr;
    }
    std::sort(tr.reached.begin(), tr.reached.end());
    tr.reached.erase(std::unique(tr.reached.begin(), tr.reached.end()), tr.reached.end());
    return tr;
  });

  ShapeEstimate e;
  e.t = shape.t;
  e.trials = trials.size();
  e.eps = shape.eps;
  std::vector<absl::flat_hash_set<std::uint64_t>> sets;
  for (const auto& tr : trials) {
    e.aborted += tr.aborted;
    if (!tr.survived) continue;
    ++e.survivors;
    absl::flat_hash_set<std::uint64_t> h;
    std::int64_t sup = 0;
    for (const Site& x : tr.reached) {
      h.insert(x.key());
      sup = std::max(sup, x.sup_norm());
    }
    e.max_sup_radius = std::max(e.max_sup_radius, static_cast<double>(sup + 1) / shape.t);
    sets.push_back(std::move(h));
    if (static_cast<int>(e.cloud.size()) < shape.cloud_trials) e.cloud.emplace_back(tr.seed, tr.reached);
  }
  if (e.survivors == 0) throw InsufficientData("no surviving trials for the shape snapshot");

  for (const Site& u : shape_directions()) {
    std::vector<double> values;
    for (const auto& h : sets) {
      int n_max = 0;
      const int limit = static_cast<int>(e.max_sup_radius * shape.t) + 1;
      for (int n = 1; n <= limit; ++n) {
        if (h.contains((u * n).key())) n_max = n;
      }
      if (n_max > 0) values.push_back(shape.t / (n_max * euclid(u)));
    }
    DirectionalSpeed d;
    d.direction = u;
    d.count = values.size();
    if (!values.empty()) {
      d.mu = mean(values);
      double var = 0.0;
      for (double v : values) var += (v - d.mu) * (v - d.mu);
      const double m = static_cast<double>(values.size());
      const double half = values.size() > 1 ? 1.959963984540054 * std::sqrt(var / (m - 1.0) / m) : 0.0;
      d.lo = d.mu - half;
      d.hi = d.mu + half;
    }
    if (d.count == 0) throw InsufficientData("a shape direction was never reached");
    e.mu.push_back(d);
  }

  e.symmetric = true;
  for (const auto& d : e.mu) {
    const Site minus = d.direction * -1;
    const auto it = std::find_if(e.mu.begin(), e.mu.end(), [&](const DirectionalSpeed& o) { return o.direction == minus; });
    if (it == e.mu.end() || it->lo > d.hi || d.lo > it->hi) e.symmetric = false;
  }

  double r_max = 0.0;
  for (const auto& d : e.mu) r_max = std::max(r_max, 1.0 / d.mu);
  for (const double eps : shape.eps) {
    std::uint64_t inner_ok = 0;
    std::uint64_t outer_ok = 0;
    for (std::size_t k = 0; k < sets.size(); ++k) {
      const auto& h = sets[k];
      bool outer = true;
      for (const auto key : h) {
        const Site x = Site::from_key(key, 2);
        for (int dx = 0; dx <= 1 && outer; ++dx) {
          for (int dy = 0; dy <= 1 && outer; ++dy) {
            const double zx = (x[0] + dx) / shape.t;
            const double zy = (x[1] + dy) / shape.t;
            const double r = std::hypot(zx, zy);
            if (r > 0.0 && r > (1.0 + eps) * ball_radius(e.mu, angle(zx, zy))) outer = false;
          }
        }
        if (!outer) break;
      }
      bool inner = true;
      if (eps < 1.0) {
        const int lim = static_cast<int>(std::ceil((1.0 - eps) * r_max * shape.t)) + 1;
        for (int wx = -lim; wx <= lim && inner; ++wx) {
          for (int wy = -lim; wy <= lim && inner; ++wy) {
            const double r = std::hypot(wx, wy) / shape.t;
            if (r > (1.0 - eps) * ball_radius(e.mu, angle(wx, wy))) continue;
            if (!covered(h, Site{wx, wy})) inner = false;
          }
        }
      }
      inner_ok += inner;
      outer_ok += outer;
    }
    e.inner.push_back(wilson(inner_ok, sets.size()));
    e.outer.push_back(wilson(outer_ok, sets.size()));
  }
  return e;
}

void write_shape_mu_csv(std::ostream& out, const ShapeEstimate& e) {
  out << "u0,u1,count,mu,lo,hi\n";
  for (const auto& d : e.mu) {
    out << d.direction[0] << ',' << d.direction[1] << ',' << d.count << ',' << format_double(d.mu) << ','
        << format_double(d.lo) << ',' << format_double(d.hi) << '\n';
  }
}

void write_shape_inclusion_csv(std::ostream& out, const ShapeEstimate& e) {
  out << "eps,survivors,inner,inner_lo,outer,outer_lo\n";
  for (std::size_t i = 0; i < e.eps.size(); ++i) {
    out << format_double(e.eps[i]) << ',' << e.survivors << ',' << format_double(e.inner[i].p) << ','
        << format_double(e.inner[i].lo) << ',' << format_double(e.outer[i].p) << ','
        << format_double(e.outer[i].lo) << '\n';
  }
}

void write_shape_cloud_csv(std::ostream& out, const ShapeEstimate& e) {
  out << "seed,z0,z1\n";
  for (const auto& [seed, sites] : e.cloud) {
    for (const Site& x : sites) {
      out << seed << ',' << format_double(x[0] / e.t) << ',' << format_double(x[1] / e.t) << '\n';
    }
  }
}

}  // namespace cpa
