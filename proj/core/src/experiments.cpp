#include "cpa/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "cpa/errors.hpp"
#include "cpa/format.hpp"
#include "cpa/parallel.hpp"

namespace cpa {

namespace {

std::int64_t l1_norm(const Site& x) {
  std::int64_t n = 0;
  for (int i = 0; i < x.dim(); ++i) n += std::abs(static_cast<std::int64_t>(x[i]));
  return n;
}

ScaledStat summarize(int n, std::vector<double> values) {
  ScaledStat st;
  st.n = n;
  st.count = values.size();
  if (values.empty()) return st;
  st.mean = mean(values);
  double var = 0.0;
  for (double v : values) var += (v - st.mean) * (v - st.mean);
  const double m = static_cast<double>(values.size());
  const double half = values.size() > 1 ? 1.959963984540054 * std::sqrt(var / (m - 1.0) / m) : 0.0;
  st.lo = st.mean - half;
  st.hi = st.mean + half;
  st.median = quantile(values, 0.5);
  st.q90 = quantile(std::move(values), 0.9);
  return st;
}

void write_site_columns(std::ostream& out, const char* prefix, int dim) {
  for (int i = 0; i < dim; ++i) out << ',' << prefix << i;
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : "inf"; }

}  // namespace

void RunSettings::validate() const {
  if (trials == 0) throw InvalidArgument("trials must be at least 1");
  if (!(t_max > 0.0)) throw InvalidArgument("t_max must be positive");
  if (m_conf < 0.0 || margin < 0) throw InvalidArgument("m_conf and margin must be nonnegative");
}

std::optional<Confinement> confinement(int dimension, double t_end, const RunSettings& s) {
  if (s.m_conf <= 0.0) return std::nullopt;
  const auto r = static_cast<int>(std::ceil(s.m_conf * t_end)) + s.margin;
  return Confinement{Box::centered(Site::origin(dimension), r)};
}

double calibrate_confinement(const ModelParams& params, double t, std::uint64_t trials, std::uint64_t seed,
                             double safety) {
  if (!(t > 0.0) || trials == 0) throw InvalidArgument("calibrate_confinement needs t > 0 and trials >= 1");
  std::int64_t radius = 0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    const Omega om(trial_seed(seed, i), params, t);
    const GrowthTrajectory g = richardson_evolve(om, {Site::origin(params.dimension)}, t);
    for (const auto& [time, x] : g.additions) radius = std::max(radius, x.sup_norm());
  }
  return safety * std::max<double>(1.0, static_cast<double>(radius)) / t;
}

SurvivalEstimate estimate_survival(const ModelParams& params, const Config& f, const RunSettings& s) {
  s.validate();
  const auto guard = confinement(params.dimension, s.t_max, s);
  SurvivalEstimate est;
  est.trials = parallel_map(s.trials, s.threads, [&](std::size_t i) {
    SurvivalTrial tr;
    tr.seed = trial_seed(s.seed, i);
    const Omega om(tr.seed, params, s.t_max);
    try {
      const LifetimeResult life = lifetime(om, f, s.t_max, guard);
      tr.alive = !life.extinct;
      tr.lifetime = life.time;
    } catch (const BoundaryHit&) {
      tr.aborted = true;
      tr.lifetime = s.t_max;
    }
    return tr;
  });
  std::uint64_t alive = 0;
  for (const auto& tr : est.trials) {
    est.aborted += tr.aborted;
    alive += tr.alive;
  }
  est.rho = wilson(alive, est.trials.size() - est.aborted);
  return est;
}

void write_survival_csv(std::ostream& out, const SurvivalEstimate& est) {
  out << "trial,seed,alive_at_Tmax\n";
  for (std::size_t i = 0; i < est.trials.size(); ++i) {
    const auto& tr = est.trials[i];
    out << i << ',' << tr.seed << ',' << (tr.aborted ? "" : (tr.alive ? "1" : "0")) << '\n';
  }
}

TailFit fit_tail(const std::vector<double>& grid, const std::vector<std::uint64_t>& counts, std::uint64_t trials,
                 std::uint64_t min_count) {
  if (grid.size() != counts.size()) throw InvalidArgument("grid and counts differ in length");
  TailFit fit;
  fit.grid = grid;
  fit.counts = counts;
  fit.trials = trials;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double freq = trials ? static_cast<double>(counts[i]) / static_cast<double>(trials) : 0.0;
    fit.survival_freq.push_back(freq);
    if (counts[i] > 0) {
      xs.push_back(grid[i]);
      ys.push_back(std::log(freq));
    }
    if (counts[i] < min_count && fit.diagnostic.empty()) {
      fit.diagnostic = "too few events: " + std::to_string(counts[i]) + " at t=" + format_double(grid[i]);
    }
  }
  fit.fitted_points = xs.size();
  try {
    const LinearFit lf = fit_line(xs, ys);
    fit.rate_B = -lf.slope;
    fit.prefactor_A = std::exp(lf.intercept);
    fit.r_squared = std::clamp(lf.r2, 0.0, 1.0);
  } catch (const InsufficientData&) {
    if (fit.diagnostic.empty()) fit.diagnostic = "fewer than two grid points with events";
  }
  return fit;
}

void write_tail_csv(std::ostream& out, const TailFit& fit) {
  out << "t,count,trials,freq\n";
  for (std::size_t i = 0; i < fit.grid.size(); ++i) {
    out << format_double(fit.grid[i]) << ',' << fit.counts[i] << ',' << fit.trials << ','
        << format_double(fit.survival_freq[i]) << '\n';
  }
}

void write_tail_fit_csv(std::ostream& out, const TailFit& fit) {
  out << "rate_B,prefactor_A,r_squared,points,diagnostic\n";
  out << format_double(fit.rate_B) << ',' << format_double(fit.prefactor_A) << ',' << format_double(fit.r_squared)
      << ',' << fit.fitted_points << ',' << fit.diagnostic << '\n';
}

TailFit conditioned_extinction_tail(const SurvivalEstimate& est, const std::vector<double>& grid) {
  std::vector<std::uint64_t> counts(grid.size(), 0);
  for (const auto& tr : est.trials) {
    if (tr.aborted || tr.alive) continue;
    for (std::size_t i = 0; i < grid.size(); ++i) counts[i] += tr.lifetime > grid[i];
  }
  return fit_tail(grid, counts, est.trials.size() - est.aborted);
}

TailFit fit_conditioned_extinction_tail(const ModelParams& params, const Config& f, const std::vector<double>& grid,
                                        const RunSettings& s) {
  return conditioned_extinction_tail(estimate_survival(params, f, s), grid);
}

HittingSample sample_hitting(const ModelParams& params, const std::vector<Site>& sites, const RunSettings& s) {
  s.validate();
  const auto guard = confinement(params.dimension, s.t_max, s);
  HittingSample sample;
  sample.sites = sites;
  sample.t_max = s.t_max;
  sample.trials = parallel_map(s.trials, s.threads, [&](std::size_t i) {
    HittingTrial tr;
    tr.seed = trial_seed(s.seed, i);
    const Omega om(tr.seed, params, s.t_max);
    try {
      const OriginRun run(om, s.t_max, guard);
      tr.alive = run.survived();
      for (const Site& x : sites) tr.t.push_back(run.hitting_time(x));
    } catch (const BoundaryHit&) {
      tr.aborted = true;
      tr.t.assign(sites.size(), std::nullopt);
    }
    return tr;
  });
  return sample;
}

void write_hitting_csv(std::ostream& out, const HittingSample& sample) {
  const int dim = sample.sites.empty() ? 0 : sample.sites.front().dim();
  out << "trial,seed";
  write_site_columns(out, "x", dim);
  out << ",t_x,alive_at_Tmax,aborted\n";
  for (std::size_t i = 0; i < sample.trials.size(); ++i) {
    const auto& tr = sample.trials[i];
    for (std::size_t j = 0; j < sample.sites.size(); ++j) {
      out << i << ',' << tr.seed;
      for (int c = 0; c < dim; ++c) out << ',' << sample.sites[j][c];
      out << ',' << opt(tr.t[j]) << ',' << (tr.alive ? 1 : 0) << ',' << (tr.aborted ? 1 : 0) << '\n';
    }
  }
}

double hitting_horizon(const HittingSample& sample, double C, const std::vector<double>& grid) {
  std::int64_t far = 0;
  for (const Site& x : sample.sites) far = std::max(far, l1_norm(x));
  const double t = grid.empty() ? 0.0 : *std::max_element(grid.begin(), grid.end());
  return C * static_cast<double>(far) + t;
}

TailFit hitting_tail(const HittingSample& sample, double C, const std::vector<double>& grid) {
  if (hitting_horizon(sample, C, grid) > sample.t_max) {
    throw InvalidArgument("hitting tail needs C |x| + t <= t_max; raise t_max to " +
                          format_double(hitting_horizon(sample, C, grid)));
  }
  std::vector<std::uint64_t> counts(grid.size(), 0);
  std::uint64_t total = 0;
  for (const auto& tr : sample.trials) {
    if (tr.aborted) continue;
    total += sample.sites.size();
    if (!tr.alive) continue;
    for (std::size_t j = 0; j < sample.sites.size(); ++j) {
      const double base = C * static_cast<double>(l1_norm(sample.sites[j]));
      for (std::size_t i = 0; i < grid.size(); ++i) counts[i] += !tr.t[j] || *tr.t[j] >= base + grid[i];
    }
  }
  return fit_tail(grid, counts, total);
}

TailFit fit_hitting_tail(const ModelParams& params, const std::vector<Site>& sites, double C,
                         const std::vector<double>& grid, const RunSettings& s) {
  return hitting_tail(sample_hitting(params, sites, s), C, grid);
}

double inverse_speed(const HittingSample& sample) {
  std::int64_t far = 0;
  for (const Site& x : sample.sites) far = std::max(far, l1_norm(x));
  std::vector<double> ratios;
  for (const auto& tr : sample.trials) {
    if (tr.aborted || !tr.alive) continue;
    for (std::size_t j = 0; j < sample.sites.size(); ++j) {
      if (far == 0 || l1_norm(sample.sites[j]) != far || !tr.t[j]) continue;
      ratios.push_back(*tr.t[j] / static_cast<double>(far));
    }
  }
  if (ratios.empty()) throw InsufficientData("no surviving trial hit the farthest site");
  return mean(ratios);
}

bool exponential_fit(const TailFit& fit) {
  return fit.fitted_points >= 5 && fit.r_squared >= 0.9 && fit.rate_B > 0.0;
}

HittingConstant choose_hitting_constant(const HittingSample& sample, const std::vector<double>& candidates,
                                        const std::vector<double>& grid) {
  HittingConstant out;
  try {
    out.inverse_speed = inverse_speed(sample);
  } catch (const InsufficientData&) {
    return out;
  }
  std::vector<double> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  for (double c : sorted) {
    if (c < out.inverse_speed || hitting_horizon(sample, c, grid) > sample.t_max) continue;
    out.tried.push_back(c);
    out.fits.push_back(hitting_tail(sample, c, grid));
    if (!out.C && exponential_fit(out.fits.back())) out.C = c;
  }
  return out;
}

SigmaSample sample_sigma(const ModelParams& params, const std::vector<Site>& sites, const RunSettings& s) {
  s.validate();
  const auto guard = confinement(params.dimension, s.t_max, s);
  SigmaSample sample;
  sample.sites = sites;
  sample.trials = parallel_map(s.trials, s.threads, [&](std::size_t i) {
    SigmaTrial tr;
    tr.seed = trial_seed(s.seed, i);
    const Omega om(tr.seed, params, s.t_max);
    try {
      const OriginRun run(om, s.t_max, guard);
      tr.survived = run.survived();
      for (const Site& x : sites) tr.traces.push_back(essential_hitting(run, om, x, guard));
    } catch (const BoundaryHit&) {
      tr.aborted = true;
      tr.traces.clear();
    }
    return tr;
  });
  return sample;
}

void write_sigma_csv(std::ostream& out, const SigmaSample& sample) {
  write_sigma_header(out, sample.sites.empty() ? 0 : sample.sites.front().dim());
  for (std::size_t i = 0; i < sample.trials.size(); ++i) {
    for (const SigmaTrace& tr : sample.trials[i].traces) write_sigma_row(out, i, sample.trials[i].seed, tr);
  }
}

bool usable(const SigmaTrial& trial, std::size_t site) {
  if (trial.aborted || !trial.survived) return false;
  const SigmaTrace& tr = trial.traces[site];
  return !tr.censored && tr.K >= 1;
}

std::vector<KTailRow> k_tail(const SigmaSample& sample, std::size_t site, int k_max, double rho) {
  std::vector<KTailRow> rows;
  std::uint64_t n = 0;
  std::vector<std::uint64_t> exceed(static_cast<std::size_t>(k_max) + 1, 0);
  for (const auto& tr : sample.trials) {
    if (tr.aborted || !tr.survived) continue;
    ++n;
    for (int k = 1; k <= k_max; ++k) exceed[static_cast<std::size_t>(k)] += tr.traces[site].K > k;
  }
  for (int k = 1; k <= k_max; ++k) {
    rows.push_back({k, wilson(exceed[static_cast<std::size_t>(k)], n), std::pow(1.0 - rho, k)});
  }
  return rows;
}

void write_k_tail_csv(std::ostream& out, const std::vector<KTailRow>& rows) {
  out << "k,exceed,trials,freq,se,bound\n";
  for (const auto& r : rows) {
    out << r.k << ',' << r.exceed.successes << ',' << r.exceed.trials << ',' << format_double(r.exceed.p) << ','
        << format_double(r.exceed.se) << ',' << format_double(r.bound) << '\n';
  }
}

std::vector<ScaledStat> sigma_t_gap(const SigmaSample& sample, const std::vector<int>& n_list) {
  if (sample.sites.size() < n_list.size()) throw InvalidArgument("sample has fewer sites than n_list");
  std::vector<ScaledStat> out;
  for (std::size_t j = 0; j < n_list.size(); ++j) {
    std::vector<double> values;
    for (const auto& tr : sample.trials) {
      if (!usable(tr, j) || !tr.traces[j].t_x) continue;
      values.push_back(std::abs(tr.traces[j].sigma - *tr.traces[j].t_x) / n_list[j]);
    }
    out.push_back(summarize(n_list[j], std::move(values)));
  }
  return out;
}

std::vector<ScaledStat> measure_sigma_t_gap(const ModelParams& params, const Site& direction,
                                            const std::vector<int>& n_list, const RunSettings& s) {
  std::vector<Site> sites;
  for (int n : n_list) sites.push_back(direction * n);
  return sigma_t_gap(sample_sigma(params, sites, s), n_list);
}

void write_scaled_csv(std::ostream& out, const std::vector<ScaledStat>& rows) {
  out << "n,count,mean,lo,hi,median,q90\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.count << ',' << format_double(r.mean) << ',' << format_double(r.lo) << ','
        << format_double(r.hi) << ',' << format_double(r.median) << ',' << format_double(r.q90) << '\n';
  }
}

MuEstimate estimate_mu(const ModelParams& params, const Site& direction, const std::vector<int>& n_list,
                       const RunSettings& s) {
  if (n_list.size() < 2) throw InvalidArgument("estimate_mu needs at least two values of n");
  std::vector<Site> sites;
  for (int n : n_list) sites.push_back(direction * n);
  for (int n : n_list) sites.push_back(direction * -n);
  const SigmaSample sample = sample_sigma(params, sites, s);
  MuEstimate mu;
  mu.direction = direction;
  mu.n_list = n_list;
  const std::size_t m = n_list.size();
  std::vector<std::size_t> order(m);
  for (std::size_t j = 0; j < m; ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return n_list[a] < n_list[b]; });
  std::vector<double> top;
  std::vector<double> top_reverse;
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> sig;
    std::vector<double> hit;
    std::vector<double> rev;
    const bool is_top = j == order[m - 1] || j == order[m - 2];
    for (const auto& tr : sample.trials) {
      if (usable(tr, j)) sig.push_back(tr.traces[j].sigma / n_list[j]);
      if (usable(tr, j + m)) rev.push_back(tr.traces[j + m].sigma / n_list[j]);
      if (!tr.aborted && tr.survived && tr.traces[j].t_x) hit.push_back(*tr.traces[j].t_x / n_list[j]);
    }
    if (is_top) {
      top.insert(top.end(), sig.begin(), sig.end());
      top_reverse.insert(top_reverse.end(), rev.begin(), rev.end());
    }
    mu.sigma.push_back(summarize(n_list[j], std::move(sig)));
    mu.hit.push_back(summarize(n_list[j], std::move(hit)));
    mu.sigma_reverse.push_back(summarize(n_list[j], std::move(rev)));
  }
  if (top.empty() || top_reverse.empty()) throw InsufficientData("no surviving trials for the two largest n");
  const ScaledStat a = summarize(0, std::move(top));
  const ScaledStat b = summarize(0, std::move(top_reverse));
  mu.mu = a.mean;
  mu.mu_lo = a.lo;
  mu.mu_hi = a.hi;
  mu.mu_reverse = b.mean;
  mu.mu_reverse_lo = b.lo;
  mu.mu_reverse_hi = b.hi;
  double lo = mu.hit.front().mean;
  double hi = lo;
  double sum = 0.0;
  for (const auto& h : mu.hit) {
    lo = std::min(lo, h.mean);
    hi = std::max(hi, h.mean);
    sum += h.mean;
  }
  mu.hit_spread = sum > 0.0 ? (hi - lo) / (sum / static_cast<double>(mu.hit.size())) : 0.0;
  return mu;
}

void write_mu_csv(std::ostream& out, const MuEstimate& mu) {
  out << "n,count,sigma_mean,sigma_lo,sigma_hi,t_count,t_mean,t_lo,t_hi,reverse_count,reverse_mean\n";
  for (std::size_t j = 0; j < mu.n_list.size(); ++j) {
    const auto& s = mu.sigma[j];
    const auto& h = mu.hit[j];
    const auto& r = mu.sigma_reverse[j];
    out << mu.n_list[j] << ',' << s.count << ',' << format_double(s.mean) << ',' << format_double(s.lo) << ','
        << format_double(s.hi) << ',' << h.count << ',' << format_double(h.mean) << ',' << format_double(h.lo)
        << ',' << format_double(h.hi) << ',' << r.count << ',' << format_double(r.mean) << '\n';
  }
}

ResidualResult measure_subadditivity_residual(const ModelParams& params, const Site& x, const Site& y,
                                              const std::vector<double>& grid, const RunSettings& s) {
  s.validate();
  const auto guard = confinement(params.dimension, s.t_max, s);
  ResidualResult res;
  res.grid = grid;
  res.trials = parallel_map(s.trials, s.threads, [&](std::size_t i) {
    ResidualTrial tr;
    tr.seed = trial_seed(s.seed, i);
    const Omega om(tr.seed, params, 2.0 * s.t_max);
    auto ok = [](const SigmaTrace& t) { return !t.degenerate && !t.censored && t.K >= 1; };
    try {
      const OriginRun run(om, s.t_max, guard);
      if (!run.survived()) return tr;
      const SigmaTrace sx = essential_hitting(run, om, x, guard);
      if (!ok(sx)) return tr;
      const SigmaTrace sxy = essential_hitting(run, om, x + y, guard);
      if (!ok(sxy)) return tr;
      const SigmaTrace sy = essential_hitting(om.shift_time(sx.sigma).shift_space(x), y, s.t_max, guard);
      if (!ok(sy)) return tr;
      tr.used = true;
      tr.sigma_x = sx.sigma;
      tr.sigma_y_shifted = sy.sigma;
      tr.sigma_xy = sxy.sigma;
      tr.r = std::max(0.0, sxy.sigma - sx.sigma - sy.sigma);
    } catch (const BoundaryHit&) {
      tr.used = false;
    }
    return tr;
  });
  std::vector<double> a;
  std::vector<double> b;
  std::vector<std::uint64_t> exceed(grid.size(), 0);
  double sum = 0.0;
  double sum2 = 0.0;
  for (const auto& tr : res.trials) {
    if (!tr.used) continue;
    ++res.used;
    a.push_back(tr.sigma_x);
    b.push_back(tr.sigma_y_shifted);
    sum += tr.r;
    sum2 += tr.r * tr.r;
    for (std::size_t g = 0; g < grid.size(); ++g) exceed[g] += tr.r >= grid[g];
  }
  for (auto e : exceed) res.tail.push_back(wilson(e, res.used));
  if (res.used > 0) {
    res.mean_r = sum / static_cast<double>(res.used);
    res.second_moment = sum2 / static_cast<double>(res.used);
  }
  if (res.used >= 2) res.correlation = pearson(a, b);
  return res;
}

void write_residual_csv(std::ostream& out, const ResidualResult& r) {
  out << "trial,seed,used,sigma_x,sigma_y_shifted,sigma_xy,r\n";
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    const auto& t = r.trials[i];
    out << i << ',' << t.seed << ',' << (t.used ? 1 : 0) << ',' << format_double(t.sigma_x) << ','
        << format_double(t.sigma_y_shifted) << ',' << format_double(t.sigma_xy) << ',' << format_double(t.r) << '\n';
  }
}

void write_residual_tail_csv(std::ostream& out, const ResidualResult& r) {
  out << "t,count,trials,freq,lo,hi\n";
  for (std::size_t g = 0; g < r.grid.size(); ++g) {
    const auto& p = r.tail[g];
    out << format_double(r.grid[g]) << ',' << p.successes << ',' << p.trials << ',' << format_double(p.p) << ','
        << format_double(p.lo) << ',' << format_double(p.hi) << '\n';
  }
}

FkgResult fkg_spot_check(const ModelParams& params, const Box& box, const Config& f, double t, const Site& u,
                         const Site& v, const RunSettings& s) {
  s.validate();
  const auto pairs = parallel_map(s.trials, s.threads, [&](std::size_t i) {
    const Omega om(trial_seed(s.seed, i), params, t);
    const Config c = evolve_final(om, f, t, Region(box));
    return std::pair<double, double>(c.alive(u) ? 1.0 : 0.0, c.alive(v) ? 1.0 : 0.0);
  });
  FkgResult r;
  r.trials = pairs.size();
  const double n = static_cast<double>(r.trials);
  for (const auto& [a, b] : pairs) {
    r.mean_u += a / n;
    r.mean_v += b / n;
  }
  std::vector<double> z;
  for (const auto& [a, b] : pairs) z.push_back((a - r.mean_u) * (b - r.mean_v));
  if (r.trials < 2) return r;
  r.covariance = mean(z) * n / (n - 1.0);
  double var = 0.0;
  const double zm = mean(z);
  for (double w : z) var += (w - zm) * (w - zm);
  r.se = std::sqrt(var / (n - 1.0) / n) * n / (n - 1.0);
  return r;
}

Calibration calibrate(int dimension, const RunSettings& s, double rho_min) {
  Calibration c;
  for (const double lambda : {2.0, 3.0, 4.0}) {
    for (const double gamma : {1.0, 2.0}) {
      const ModelParams p = krone_params(lambda, gamma, dimension);
      const SurvivalEstimate est = estimate_survival(p, Config::single(Site::origin(dimension)), s);
      c.tried.push_back({lambda, gamma, est.rho});
      if (est.rho.p >= rho_min) {
        c.found = true;
        c.params = p;
        c.lambda = lambda;
        c.gamma = gamma;
        c.rho = est.rho;
        return c;
      }
    }
  }
  return c;
}

void write_calibration_csv(std::ostream& out, const Calibration& c) {
  out << "lambda,gamma,rho,lo,hi,chosen\n";
  for (std::size_t i = 0; i < c.tried.size(); ++i) {
    const auto& t = c.tried[i];
    const bool chosen = c.found && i + 1 == c.tried.size();
    out << format_double(t.lambda) << ',' << format_double(t.gamma) << ',' << format_double(t.rho.p) << ','
        << format_double(t.rho.lo) << ',' << format_double(t.rho.hi) << ',' << (chosen ? 1 : 0) << '\n';
  }
}

}  // namespace cpa
