#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>

#include "cpa/errors.hpp"
#include "cpa/format.hpp"
#include "cpa/parallel.hpp"
#include "cpa/validation.hpp"
#include "cpa_cli/cli.hpp"

namespace cpa::cli {

namespace {

using Command = int (*)(const RunConfig&, bool, OutputSet&, std::ostream&);

Site along(int d, int n) {
  Site x = Site::origin(d);
  x[0] = n;
  return x;
}

std::vector<Site> along_all(int d, const std::vector<int>& ns) {
  std::vector<Site> out;
  for (int n : ns) out.push_back(along(d, n));
  return out;
}

void check_dims(const std::string& key, const std::vector<Site>& sites, int d) {
  for (const Site& x : sites) {
    if (x.dim() != d) throw ConfigError(key + ": site " + x.to_string() + " does not have dimension " + std::to_string(d));
  }
}

Config initial_config(const RunConfig& c, const std::string& section, int d) {
  const auto sites = c.sites(section + ".initial", {Site::origin(d)});
  check_dims(section + ".initial", sites, d);
  const auto age = c.integer(section + ".initial_age", 1);
  if (age < 1) throw ConfigError(section + ".initial_age must be at least 1");
  Config f;
  for (const Site& x : sites) f.set(x, static_cast<Age>(age));
  return f;
}

void write_proportion_row(std::ostream& out, const Proportion& p) {
  out << p.successes << ',' << p.trials << ',' << format_double(p.p) << ',' << format_double(p.lo) << ','
      << format_double(p.hi);
}

double default_eps_pad(const RunConfig& c, const std::string& section, const ModelParams& p, const BlockGeometry& g,
                       const RunSettings& s, std::ostream& log) {
  if (c.has(section + ".eps_pad")) {
    const double e = c.number(section + ".eps_pad", 0.0);
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError(section + ".eps_pad must lie in [0, 1]");
    return e;
  }
  const auto trials = c.integer(section + ".eps_trials", 200);
  if (trials < 1) throw ConfigError(section + ".eps_trials must be at least 1");
  const BlockEstimate est = estimate_stack(p, g, static_cast<std::uint64_t>(trials), s.seed, s.threads);
  const double eps = std::clamp(1.0 - est.worst.p, 0.0, 1.0);
  log << "eps_pad = 1 - worst stacked block estimate = " << format_double(eps) << '\n';
  return eps;
}

// Commands.

int cmd_validate(const RunConfig& c, bool quick, OutputSet& out, std::ostream& log) {
  const RunSettings s = c.run();
  const auto scenarios = quick ? 100 : c.integer("validate.scenarios", 1000);
  if (scenarios < 1) throw ConfigError("validate.scenarios must be at least 1");
  const double t_max = c.number("validate.t_max", 20.0);
  if (!(t_max >= 0.5)) throw ConfigError("validate.t_max must be at least 0.5");
  const auto report = validation::run_pathwise_suite(static_cast<std::uint64_t>(scenarios), s.seed, t_max, s.threads);

  // Coverage of the 95% Wilson interval on Bernoulli(0.3) samples of size 50.
  std::mt19937_64 rng(trial_seed(s.seed, 0x57494c53ull));
  std::bernoulli_distribution coin(0.3);
  int covered = 0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    int k = 0;
    for (int i = 0; i < 50; ++i) k += coin(rng);
    const Proportion w = wilson(static_cast<std::uint64_t>(k), 50);
    covered += w.lo <= 0.3 && 0.3 <= w.hi;
  }
  const bool wilson_ok = covered >= static_cast<int>(0.93 * reps);

  out.write("validate.csv", [&](std::ostream& os) {
    os << "check,scenarios,violations\n";
    for (const auto& t : report.checks) os << t.name << ',' << report.scenarios << ',' << t.violations << '\n';
    os << "wilson_coverage," << reps << ',' << (wilson_ok ? 0 : 1) << '\n';
  });
  for (const auto& f : report.failures) log << f << '\n';
  log << "scenarios " << report.scenarios << ", violations " << report.violations() << ", Wilson coverage "
      << format_double(static_cast<double>(covered) / reps) << '\n';
  return report.ok() && wilson_ok ? kOk : kAssertionFailure;
}

int cmd_survive(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  const ModelParams p = c.model();
  const RunSettings s = c.run();
  const SurvivalEstimate est = estimate_survival(p, initial_config(c, "survive", p.dimension), s);
  out.write("survival.csv", [&](std::ostream& os) { write_survival_csv(os, est); });
  out.write("survival_summary.csv", [&](std::ostream& os) {
    os << "alive,trials,rho,lo,hi,aborted,t_max\n";
    write_proportion_row(os, est.rho);
    os << ',' << est.aborted << ',' << format_double(s.t_max) << '\n';
  });
  log << "rho = " << format_double(est.rho.p) << " [" << format_double(est.rho.lo) << ", "
      << format_double(est.rho.hi) << "], aborted " << est.aborted << '\n';
  return kOk;
}

int cmd_tails(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  const ModelParams p = c.model();
  const RunSettings s = c.run();
  const int d = p.dimension;
  const auto grid = c.numbers("tails.grid", {2, 4, 6, 8, 10});
  const TailFit ext = fit_conditioned_extinction_tail(p, initial_config(c, "tails", d), grid, s);
  out.write("extinction_tail.csv", [&](std::ostream& os) { write_tail_csv(os, ext); });
  out.write("extinction_fit.csv", [&](std::ostream& os) { write_tail_fit_csv(os, ext); });
  log << "extinction tail: B = " << format_double(ext.rate_B) << ", R^2 = " << format_double(ext.r_squared)
      << (ext.diagnostic.empty() ? "" : ", " + ext.diagnostic) << '\n';

  const auto sites = c.sites("tails.sites", along_all(d, {10, 20, 30, 40}));
  check_dims("tails.sites", sites, d);
  const auto candidates = c.numbers("tails.C", {1, 1.5, 2, 2.5, 3, 3.5, 4});
  const auto hit_grid = c.numbers("tails.hit_grid", {0, 5, 10, 15, 20});
  const HittingSample sample = sample_hitting(p, sites, s);
  const HittingConstant hc = choose_hitting_constant(sample, candidates, hit_grid);
  out.write("hitting.csv", [&](std::ostream& os) { write_hitting_csv(os, sample); });
  out.write("hitting_constants.csv", [&](std::ostream& os) {
    os << "C,rate_B,prefactor_A,r_squared,points,exponential,chosen\n";
    for (std::size_t i = 0; i < hc.tried.size(); ++i) {
      const TailFit& f = hc.fits[i];
      os << format_double(hc.tried[i]) << ',' << format_double(f.rate_B) << ',' << format_double(f.prefactor_A)
         << ',' << format_double(f.r_squared) << ',' << f.fitted_points << ',' << (exponential_fit(f) ? 1 : 0)
         << ',' << (hc.C && *hc.C == hc.tried[i] ? 1 : 0) << '\n';
    }
  });
  if (hc.C) {
    const TailFit f = hitting_tail(sample, *hc.C, hit_grid);
    out.write("hitting_tail.csv", [&](std::ostream& os) { write_tail_csv(os, f); });
    log << "hitting tail: inverse speed " << format_double(hc.inverse_speed) << ", C = " << format_double(*hc.C)
        << ", R^2 = " << format_double(f.r_squared) << '\n';
  } else {
    log << "hitting tail: no candidate C with an exponential fit (inverse speed "
        << format_double(hc.inverse_speed) << ", " << hc.tried.size() << " feasible candidates)\n";
  }
  return kOk;
}

int cmd_K(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  const ModelParams p = c.model();
  const RunSettings s = c.run();
  const Site x = c.site("K.site", along(p.dimension, 1));
  check_dims("K.site", {x}, p.dimension);
  const auto k_max = c.integer("K.k_max", 5);
  if (k_max < 1) throw ConfigError("K.k_max must be at least 1");
  const SigmaSample sample = sample_sigma(p, {x}, s);
  std::uint64_t alive = 0;
  std::uint64_t valid = 0;
  for (const auto& tr : sample.trials) {
    valid += !tr.aborted;
    alive += !tr.aborted && tr.survived;
  }
  const Proportion rho = wilson(alive, valid);
  const auto rows = k_tail(sample, 0, static_cast<int>(k_max), rho.p);
  out.write("sigma.csv", [&](std::ostream& os) { write_sigma_csv(os, sample); });
  out.write("k_tail.csv", [&](std::ostream& os) { write_k_tail_csv(os, rows); });
  log << "rho = " << format_double(rho.p) << " over " << valid << " trials\n";
  for (const auto& r : rows) {
    log << "P(K > " << r.k << ") = " << format_double(r.exceed.p) << " (bound " << format_double(r.bound) << ")\n";
  }
  return kOk;
}

int cmd_sigma(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  const ModelParams p = c.model();
  const RunSettings s = c.run();
  const Site dir = c.site("sigma.direction", along(p.dimension, 1));
  check_dims("sigma.direction", {dir}, p.dimension);
  const auto ns = c.integers("sigma.n_list", {10, 20, 30});
  if (ns.empty()) throw ConfigError("sigma.n_list must not be empty");
  std::vector<Site> sites;
  for (int n : ns) sites.push_back(dir * n);
  const SigmaSample sample = sample_sigma(p, sites, s);
  const auto rows = sigma_t_gap(sample, ns);
  out.write("sigma.csv", [&](std::ostream& os) { write_sigma_csv(os, sample); });
  out.write("sigma_gap.csv", [&](std::ostream& os) { write_scaled_csv(os, rows); });
  for (const auto& r : rows) {
    log << "n = " << r.n << ": median |sigma - t|/n = " << format_double(r.median) << " over " << r.count << '\n';
  }
  return kOk;
}

int cmd_residual(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  const ModelParams p = c.model();
  const RunSettings s = c.run();
  const Site x = c.site("residual.x", along(p.dimension, 1));
  const Site y = c.site("residual.y", along(p.dimension, 1));
  check_dims("residual", {x, y}, p.dimension);
  const auto grid = c.numbers("residual.grid", {0.5, 1, 2, 4, 8});
  const ResidualResult r = measure_subadditivity_residual(p, x, y, grid, s);
  out.write("residual.csv", [&](std::ostream& os) { write_residual_csv(os, r); });
  out.write("residual_tail.csv", [&](std::ostream& os) { write_residual_tail_csv(os, r); });
  out.write("residual_summary.csv", [&](std::ostream& os) {
    os << "used,mean_r,second_moment,correlation\n";
    os << r.used << ',' << format_double(r.mean_r) << ',' << format_double(r.second_moment) << ','
       << format_double(r.correlation) << '\n';
  });
  log << "used " << r.used << ", mean r = " << format_double(r.mean_r) << ", corr = "
      << format_double(r.correlation) << '\n';
  return kOk;
}

int cmd_mu(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  const ModelParams p = c.model();
  const RunSettings s = c.run();
  const Site dir = c.site("mu.direction", along(p.dimension, 1));
  check_dims("mu.direction", {dir}, p.dimension);
  const MuEstimate mu = estimate_mu(p, dir, c.integers("mu.n_list", {10, 20, 30, 40}), s);
  out.write("mu.csv", [&](std::ostream& os) { write_mu_csv(os, mu); });
  out.write("mu_summary.csv", [&](std::ostream& os) {
    os << "mu,lo,hi,mu_reverse,reverse_lo,reverse_hi,hit_spread\n";
    os << format_double(mu.mu) << ',' << format_double(mu.mu_lo) << ',' << format_double(mu.mu_hi) << ','
       << format_double(mu.mu_reverse) << ',' << format_double(mu.mu_reverse_lo) << ','
       << format_double(mu.mu_reverse_hi) << ',' << format_double(mu.hit_spread) << '\n';
  });
  log << "mu = " << format_double(mu.mu) << ", reverse " << format_double(mu.mu_reverse) << ", spread of t/n "
      << format_double(mu.hit_spread) << '\n';
  return kOk;
}

int cmd_shape(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  const ModelParams p = c.model();
  const RunSettings s = c.run();
  ShapeSettings sh;
  sh.t = c.number("shape.t", sh.t);
  sh.eps = c.numbers("shape.eps", sh.eps);
  sh.cloud_trials = static_cast<int>(c.integer("shape.cloud_trials", sh.cloud_trials));
  const ShapeEstimate e = shape_snapshot(p, sh, s);
  out.write("shape_mu.csv", [&](std::ostream& os) { write_shape_mu_csv(os, e); });
  out.write("shape_inclusion.csv", [&](std::ostream& os) { write_shape_inclusion_csv(os, e); });
  out.write("shape_cloud.csv", [&](std::ostream& os) { write_shape_cloud_csv(os, e); });
  out.write("shape_summary.csv", [&](std::ostream& os) {
    os << "t,trials,survivors,aborted,symmetric,max_sup_radius\n";
    os << format_double(e.t) << ',' << e.trials << ',' << e.survivors << ',' << e.aborted << ','
       << (e.symmetric ? 1 : 0) << ',' << format_double(e.max_sup_radius) << '\n';
  });
  log << "survivors " << e.survivors << ", symmetric " << (e.symmetric ? "yes" : "no") << '\n';
  for (std::size_t i = 0; i < e.eps.size(); ++i) {
    log << "eps " << format_double(e.eps[i]) << ": inner " << format_double(e.inner[i].p) << ", outer "
        << format_double(e.outer[i].p) << '\n';
  }
  return kOk;
}

int cmd_block(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  const ModelParams p = c.model();
  const RunSettings s = c.run();
  const BlockGeometry g = c.geometry();
  const bool worst = c.flag("block.worst_case", true);
  const bool stack = c.flag("block.stack", false);
  std::vector<std::pair<std::string, BlockEstimate>> rows;
  rows.emplace_back("B1", estimate_B1(p, g, s.trials, worst, s.seed, s.threads));
  if (stack) rows.emplace_back("stack", estimate_stack(p, g, s.trials, s.seed, s.threads));
  out.write("block.csv", [&](std::ostream& os) {
    os << "event,n,a,b,successes,trials,p,lo,hi,worst_p,worst_lo,worst_hi,worst_s";
    for (int i = 0; i < p.dimension; ++i) os << ",worst_x" << i;
    os << '\n';
    for (const auto& [name, est] : rows) {
      os << name << ',' << g.n << ',' << g.a << ',' << g.b << ',';
      write_proportion_row(os, est.overall);
      os << ',' << format_double(est.worst.p) << ',' << format_double(est.worst.lo) << ','
         << format_double(est.worst.hi) << ',' << format_double(est.worst_start.second);
      for (int i = 0; i < p.dimension; ++i) os << ',' << est.worst_start.first[i];
      os << '\n';
    }
  });
  for (const auto& [name, est] : rows) {
    log << name << ": pooled " << format_double(est.overall.p) << ", worst " << format_double(est.worst.p) << '\n';
  }
  return kOk;
}

int cmd_macro(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  const ModelParams p = c.model();
  const RunSettings s = c.run();
  const BlockGeometry g = c.geometry();
  const auto levels = c.integer("macro.levels", 3);
  if (levels < 1) throw ConfigError("macro.levels must be at least 1");
  const double eps = default_eps_pad(c, "macro", p, g, s, log);
  const int L = static_cast<int>(levels);
  const double horizon = 30.0 * g.b * L + g.b;
  struct Row {
    std::uint64_t seed = 0;
    int reach = 0;
    bool alive_at_top = false;
    int violations = 0;
  };
  const auto rows = parallel_map(s.trials, s.threads, [&](std::size_t i) {
    Row r;
    r.seed = trial_seed(s.seed, i);
    const Omega om(r.seed, p, horizon);
    const MacroField field = build_macro_field(om, g, L, eps);
    std::vector<CubeHit> anchors;
    for (int k = 0; k <= L; ++k) {
      for (int j = -k; j <= k; j += 2) {
        if (!field.reachable(k, j)) continue;
        r.reach = k;
        if (field.anchor(k, j)) anchors.push_back(*field.anchor(k, j));
      }
    }
    std::sort(anchors.begin(), anchors.end(), [](const CubeHit& a, const CubeHit& b) { return a.time < b.time; });
    Simulator sim(om, Config::cube(Site::origin(p.dimension), g.n));
    for (const CubeHit& y : anchors) {
      sim.run_until(y.time);
      bool full = true;
      for (const Site& x : Box::centered(y.center, g.n).sites()) full = full && sim.alive(x);
      r.violations += !full;
    }
    sim.run_until(std::max(sim.time(), 30.0 * g.b * L));
    r.alive_at_top = !sim.extinct();
    return r;
  });
  {
    const Omega om(trial_seed(s.seed, 0), p, horizon);
    const MacroField field = build_macro_field(om, g, L, eps);
    out.write("macro_anchors.csv", [&](std::ostream& os) { write_anchor_csv(os, field, p.dimension); });
    out.write("macro_bits.csv", [&](std::ostream& os) { write_bits_csv(os, field); });
  }
  int total = 0;
  out.write("macro.csv", [&](std::ostream& os) {
    os << "trial,seed,reach_level,alive_at_top,anchor_violations\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      os << i << ',' << rows[i].seed << ',' << rows[i].reach << ',' << (rows[i].alive_at_top ? 1 : 0) << ','
         << rows[i].violations << '\n';
      total += rows[i].violations;
    }
  });
  log << "coupling violations: " << total << " over " << rows.size() << " fields\n";
  return kOk;
}

int cmd_restart(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  const ModelParams p = c.model();
  const RunSettings s = c.run();
  const BlockGeometry g = c.geometry();
  const auto levels = c.integer("restart.levels", 2);
  if (levels < 1) throw ConfigError("restart.levels must be at least 1");
  const double eps = default_eps_pad(c, "restart", p, g, s, log);
  const Config f = initial_config(c, "restart", p.dimension);
  const auto outcomes = parallel_map(s.trials, s.threads, [&](std::size_t i) {
    const Omega om(trial_seed(s.seed, i), p, s.t_max);
    return run_restart(om, f, g, s.t_max, static_cast<int>(levels), eps);
  });
  std::uint64_t dagger = 0;
  std::uint64_t censored = 0;
  out.write("restart.csv", [&](std::ostream& os) {
    write_restart_header(os, p.dimension);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      write_restart_row(os, i, trial_seed(s.seed, i), outcomes[i], p.dimension);
      dagger += !outcomes[i].Y && !outcomes[i].censored;
      censored += outcomes[i].censored;
    }
  });
  log << "dagger " << dagger << ", censored " << censored << " of " << outcomes.size() << '\n';
  return kOk;
}

int cmd_perco(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  const RunSettings s = c.run();
  const std::string kind_name = c.text("perco.kind", "site");
  if (kind_name != "site" && kind_name != "edge") throw ConfigError("perco.kind must be site or edge");
  const PercolationKind kind = kind_name == "site" ? PercolationKind::Site : PercolationKind::Edge;
  const std::string mode = c.text("perco.mode", "iid");
  const auto levels = c.integer("perco.levels", 50);
  if (levels < 1) throw ConfigError("perco.levels must be at least 1");
  const int L = static_cast<int>(levels);
  std::vector<PercolationResult> results;
  if (mode == "iid") {
    const double prob = c.number("perco.p", 0.7);
    if (!(prob >= 0.0 && prob <= 1.0)) throw ConfigError("perco.p must lie in [0, 1]");
    results = parallel_map(s.trials, s.threads,
                           [&](std::size_t i) { return oriented_percolation_iid(kind, prob, L, trial_seed(s.seed, i)); });
  } else if (mode == "good") {
    if (kind != PercolationKind::Site) throw ConfigError("perco.mode = good needs perco.kind = site");
    const ModelParams p = c.model();
    const double T = c.number("perco.T", 1.0);
    const auto m = c.integer("perco.m", 1);
    if (!(T > 0.0) || m < 0) throw ConfigError("perco.T must be positive and perco.m nonnegative");
    results = parallel_map(s.trials, s.threads, [&](std::size_t i) {
      const Omega om(trial_seed(s.seed, i), p, (L + 1.5) * T);
      return oriented_percolation_good_sites(om, T, static_cast<int>(m), L);
    });
  } else {
    throw ConfigError("perco.mode must be iid or good");
  }
  std::uint64_t survived = 0;
  out.write("perco.csv", [&](std::ostream& os) {
    os << "trial,seed,tau,survived,final_size\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      survived += r.survived();
      os << i << ',' << trial_seed(s.seed, i) << ',' << (r.tau ? std::to_string(*r.tau) : "inf") << ','
         << (r.survived() ? 1 : 0) << ',' << (r.sizes.empty() ? 0 : r.sizes.back()) << '\n';
    }
  });
  out.write("perco_profile.csv", [&](std::ostream& os) {
    os << "n,size,left,right\n";
    const auto& r = results.front();
    for (std::size_t n = 0; n < r.sizes.size(); ++n) {
      os << n << ',' << r.sizes[n] << ',' << r.range[n].first << ',' << r.range[n].second << '\n';
    }
  });
  log << "survived " << survived << " of " << results.size() << " to level " << L << '\n';
  return kOk;
}

int cmd_oracle(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  OracleSpec spec;
  spec.params = c.model();
  const int d = spec.params.dimension;
  spec.sites = c.sites("oracle.sites", {along(d, -1), along(d, 0), along(d, 1)});
  check_dims("oracle.sites", spec.sites, d);
  spec.age_cap = static_cast<Age>(std::max<long long>(1, c.integer("oracle.age_cap", 2)));
  const double t = c.number("oracle.t", 1.0);
  const double tol = c.number("oracle.tolerance", 1e-10);
  const Config f = initial_config(c, "oracle", d);
  const OracleResult r = exact_small_oracle(spec, f, t, tol);
  out.write("oracle.csv", [&](std::ostream& os) { write_oracle_csv(os, spec, r); });
  log << "P(nonempty at " << format_double(t) << ") = " << format_double(r.p_nonempty) << " (error bound "
      << format_double(r.error_bound) << ", " << r.states << " states)\n";
  return kOk;
}

int cmd_krone(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  const auto d = c.integer("model.dimension", 1);
  if (d < 1 || d > kMaxDim) throw ConfigError("model.dimension must be 1, 2 or 3");
  const Calibration cal = calibrate(static_cast<int>(d), c.run(), c.number("krone.rho_min", 0.3));
  out.write("calibration.csv", [&](std::ostream& os) { write_calibration_csv(os, cal); });
  if (!cal.found) {
    log << "no candidate reached the survival threshold\n";
    return kOk;
  }
  log << "chosen lambda = " << format_double(cal.lambda) << ", gamma = " << format_double(cal.gamma)
      << ", rho = " << format_double(cal.rho.p) << '\n';
  log << "[model]\ndimension = " << d << "\nprofile_head = 0\nprofile_tail = " << format_double(cal.lambda)
      << "\ngamma = " << format_double(cal.gamma) << '\n';
  return kOk;
}

int cmd_trace(const RunConfig& c, bool, OutputSet& out, std::ostream& log) {
  const ModelParams p = c.model();
  const RunSettings s = c.run();
  const int d = p.dimension;
  const double t = c.number("trace.t", 5.0);
  if (!(t > 0.0)) throw ConfigError("trace.t must be positive");
  const auto radius = c.integer("trace.radius", 10);
  if (radius < 2) throw ConfigError("trace.radius must be at least 2");
  const Box box = Box::centered(Site::origin(d), static_cast<int>(radius));
  const Omega om(s.seed, p, t);
  const Trajectory traj = evolve(om, initial_config(c, "trace", d), t, Region(box));
  out.write("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj, d); });

  struct Row {
    double time;
    int kind;
    Site x;
    Site y;
    double mark;
  };
  std::vector<Row> rows;
  for (const Site& x : box.sites()) {
    if (!box.interior_contains(x)) continue;
    for (double u : om.death_times(x, 0.0, t)) rows.push_back({u, 0, x, x, 0.0});
    for (double u : om.maturation_times(x, 0.0, t)) rows.push_back({u, 1, x, x, 0.0});
    for (int axis = 0; axis < d; ++axis) {
      Site y = x;
      y[axis] += 1;
      if (!box.interior_contains(y)) continue;
      for (const ArrowEvent& ev : om.arrow_events(Edge(x, y), 0.0, t)) rows.push_back({ev.time, 2, x, y, ev.mark});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.x < b.x;
  });
  static const char* kinds[] = {"death", "maturation", "arrow"};
  out.write("environment.csv", [&](std::ostream& os) {
    os << "t,kind";
    for (int i = 0; i < d; ++i) os << ",x" << i;
    for (int i = 0; i < d; ++i) os << ",y" << i;
    os << ",mark\n";
    for (const Row& r : rows) {
      os << format_double(r.time) << ',' << kinds[r.kind];
      for (int i = 0; i < d; ++i) os << ',' << r.x[i];
      for (int i = 0; i < d; ++i) os << ',' << r.y[i];
      os << ',' << format_double(r.mark) << '\n';
    }
  });
  log << traj.events.size() << " transitions, " << rows.size() << " environment events\n";
  return kOk;
}

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table{
      {"validate", cmd_validate}, {"survive", cmd_survive}, {"tails", cmd_tails},   {"K", cmd_K},
      {"sigma", cmd_sigma},       {"residual", cmd_residual}, {"mu", cmd_mu},       {"shape", cmd_shape},
      {"block", cmd_block},       {"macro", cmd_macro},     {"restart", cmd_restart}, {"perco", cmd_perco},
      {"oracle", cmd_oracle},     {"krone", cmd_krone},     {"trace", cmd_trace},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"validate", "survive", "tails", "K",     "sigma",
                                              "residual", "mu",      "shape", "block", "macro",
                                              "restart",  "perco",   "oracle", "krone", "trace"};
  return names;
}

int run_command(const std::string& command, const RunConfig& config, bool quick, std::ostream& log) {
  const auto it = commands().find(command);
  if (it == commands().end()) throw ConfigError("unknown command '" + command + "'");
  OutputSet out(config.output_dir(), command, config);
  return it->second(config, quick, out, log);
}

}  // namespace cpa::cli
