#pragma once

// Monte Carlo estimators built on the simulator: survival, tails, essential
// hitting statistics, growth speed, shape, FKG spot checks and calibration.
//
// Every estimator is a deterministic function of its arguments. Trial i uses
// the environment seeded by trial_seed(settings.seed, i), and aggregation is
// done in trial order, so results do not depend on settings.threads.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cpa/engine.hpp"
#include "cpa/observables.hpp"
#include "cpa/stats.hpp"

namespace cpa {

struct RunSettings {
  std::uint64_t seed = 1;
  std::uint64_t trials = 1000;
  // Survival proxy: "survives" means alive at t_max.
  double t_max = 50.0;
  // Confinement speed; runs to time t are guarded by a box of radius
  // ceil(m_conf * t) + margin. 0 disables the guard.
  double m_conf = 0.0;
  int margin = 4;
  int threads = 1;

  void validate() const;
};

std::optional<Confinement> confinement(int dimension, double t_end, const RunSettings& s);

/// Richardson speed bound: safety times the largest sup-radius per unit time
/// of the pure-growth cluster from the origin over `trials` runs of length t.
double calibrate_confinement(const ModelParams& params, double t, std::uint64_t trials, std::uint64_t seed,
                             double safety = 1.5);

// Survival.

struct SurvivalTrial {
  std::uint64_t seed = 0;
  bool alive = false;     // alive at t_max
  bool aborted = false;   // left the confinement box
  double lifetime = 0.0;  // extinction time, or t_max
};

struct SurvivalEstimate {
  std::vector<SurvivalTrial> trials;
  Proportion rho;  // over non-aborted trials
  std::uint64_t aborted = 0;
};

SurvivalEstimate estimate_survival(const ModelParams& params, const Config& f, const RunSettings& s);
void write_survival_csv(std::ostream& out, const SurvivalEstimate& est);

// Tails.

struct TailFit {
  std::vector<double> grid;
  std::vector<std::uint64_t> counts;
  std::uint64_t trials = 0;
  std::vector<double> survival_freq;
  // Least squares fit of log(freq) = log(A) - B t over grid points with
  // positive counts.
  double rate_B = 0.0;
  double prefactor_A = 0.0;
  double r_squared = 0.0;
  std::size_t fitted_points = 0;
  // Empty when every grid point has at least min_count events.
  std::string diagnostic;
};

TailFit fit_tail(const std::vector<double>& grid, const std::vector<std::uint64_t>& counts, std::uint64_t trials,
                 std::uint64_t min_count = 50);
void write_tail_csv(std::ostream& out, const TailFit& fit);
void write_tail_fit_csv(std::ostream& out, const TailFit& fit);

/// Empirical P(t < tau < t_max) on the grid with a log-linear fit.
TailFit conditioned_extinction_tail(const SurvivalEstimate& est, const std::vector<double>& grid);
TailFit fit_conditioned_extinction_tail(const ModelParams& params, const Config& f, const std::vector<double>& grid,
                                        const RunSettings& s);

struct HittingTrial {
  std::uint64_t seed = 0;
  bool alive = false;
  bool aborted = false;
  std::vector<std::optional<double>> t;  // hitting time per site, nullopt if never hit
};

struct HittingSample {
  std::vector<Site> sites;
  std::vector<HittingTrial> trials;
  double t_max = 0.0;
};

/// One origin run per trial, recording hitting times of `sites`.
HittingSample sample_hitting(const ModelParams& params, const std::vector<Site>& sites, const RunSettings& s);
void write_hitting_csv(std::ostream& out, const HittingSample& sample);

/// Empirical P(t(x) >= C |x|_1 + t, alive at t_max) over trials and sites.
/// Requires C |x|_1 + t <= t_max for every site and grid point, so that a
/// site not hit by t_max is a genuine tail event.
double hitting_horizon(const HittingSample& sample, double C, const std::vector<double>& grid);
TailFit hitting_tail(const HittingSample& sample, double C, const std::vector<double>& grid);
TailFit fit_hitting_tail(const ModelParams& params, const std::vector<Site>& sites, double C,
                         const std::vector<double>& grid, const RunSettings& s);

struct HittingConstant {
  double inverse_speed = 0.0;
  std::optional<double> C;    // smallest tried candidate with an exponential fit
  std::vector<double> tried;  // increasing
  std::vector<TailFit> fits;  // one per tried candidate
};

/// Mean of t(x)/|x|_1 over surviving, non-aborted trials at the sites of
/// largest |x|_1 that were hit. Throws InsufficientData when there are none.
double inverse_speed(const HittingSample& sample);

/// A fit counts as exponential when at least 5 points are fitted,
/// r_squared >= 0.9 and the fitted rate is positive.
bool exponential_fit(const TailFit& fit);
/// Tries the candidates at or above the inverse speed whose horizon fits in
/// the sample's t_max, in increasing order.
HittingConstant choose_hitting_constant(const HittingSample& sample, const std::vector<double>& candidates,
                                        const std::vector<double>& grid);

// Essential hitting statistics.

struct SigmaTrial {
  std::uint64_t seed = 0;
  bool survived = false;  // origin alive at t_max
  bool aborted = false;
  std::vector<SigmaTrace> traces;  // one per site
};

struct SigmaSample {
  std::vector<Site> sites;
  std::vector<SigmaTrial> trials;
};

SigmaSample sample_sigma(const ModelParams& params, const std::vector<Site>& sites, const RunSettings& s);
void write_sigma_csv(std::ostream& out, const SigmaSample& sample);

/// A trace enters conditioned statistics when the origin survived, the trial
/// was not aborted, the trace is not censored and K >= 1.
bool usable(const SigmaTrial& trial, std::size_t site);

struct KTailRow {
  int k = 0;
  Proportion exceed;   // P(K > k) over surviving trials
  double bound = 0.0;  // (1 - rho)^k
};

std::vector<KTailRow> k_tail(const SigmaSample& sample, std::size_t site, int k_max, double rho);
void write_k_tail_csv(std::ostream& out, const std::vector<KTailRow>& rows);

struct ScaledStat {
  int n = 0;
  std::uint64_t count = 0;
  double mean = 0.0;
  double lo = 0.0;  // normal 95% interval for the mean
  double hi = 0.0;
  double median = 0.0;
  double q90 = 0.0;
};

/// |sigma(n x) - t(n x)| / n per n; sample sites must be n * direction in n_list order.
std::vector<ScaledStat> sigma_t_gap(const SigmaSample& sample, const std::vector<int>& n_list);
std::vector<ScaledStat> measure_sigma_t_gap(const ModelParams& params, const Site& direction,
                                            const std::vector<int>& n_list, const RunSettings& s);
void write_scaled_csv(std::ostream& out, const std::vector<ScaledStat>& rows);

struct MuEstimate {
  Site direction;
  std::vector<int> n_list;
  std::vector<ScaledStat> sigma;  // sigma(n x) / n
  std::vector<ScaledStat> hit;    // t(n x) / n
  std::vector<ScaledStat> sigma_reverse;
  double mu = 0.0;  // count-weighted mean of sigma(n x)/n over the two largest n
  double mu_lo = 0.0;
  double mu_hi = 0.0;
  double mu_reverse = 0.0;
  double mu_reverse_lo = 0.0;
  double mu_reverse_hi = 0.0;
  // (max - min) / mean of the mean hitting ratios t(n x)/n over n_list.
  double hit_spread = 0.0;
};

MuEstimate estimate_mu(const ModelParams& params, const Site& direction, const std::vector<int>& n_list,
                       const RunSettings& s);
void write_mu_csv(std::ostream& out, const MuEstimate& mu);

struct ResidualTrial {
  std::uint64_t seed = 0;
  bool used = false;
  double sigma_x = 0.0;
  double sigma_y_shifted = 0.0;
  double sigma_xy = 0.0;
  double r = 0.0;
};

struct ResidualResult {
  std::vector<ResidualTrial> trials;
  std::vector<double> grid;
  std::vector<Proportion> tail;  // P(r >= t) over used trials
  std::uint64_t used = 0;
  double mean_r = 0.0;
  double second_moment = 0.0;
  double correlation = 0.0;  // Pearson correlation of sigma(x) and the shifted sigma(y)
};

/// sigma(x) under omega, sigma(y) under omega shifted in time by sigma(x) and
/// in space by x, sigma(x+y) under omega, r = (sigma(x+y) - sigma(x) - shifted sigma(y))^+.
ResidualResult measure_subadditivity_residual(const ModelParams& params, const Site& x, const Site& y,
                                              const std::vector<double>& grid, const RunSettings& s);
void write_residual_csv(std::ostream& out, const ResidualResult& r);
void write_residual_tail_csv(std::ostream& out, const ResidualResult& r);

// Shape.

/// The 16 primitive directions of sup-norm at most 2 in Z^2, by angle.
std::vector<Site> shape_directions();

struct DirectionalSpeed {
  Site direction;
  std::uint64_t count = 0;
  // mu(u)/|u|_2: time per unit Euclidean distance, t / (n_max |u|_2) with
  // n_max the largest n such that n u was reached by time t.
  double mu = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct ShapeEstimate {
  double t = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t survivors = 0;
  std::uint64_t aborted = 0;
  std::vector<DirectionalSpeed> mu;
  std::vector<double> eps;
  std::vector<Proportion> inner;  // (1-eps) B_mu inside the normalized reached set
  std::vector<Proportion> outer;  // normalized reached set inside (1+eps) B_mu
  bool symmetric = false;         // intervals of u and -u overlap for every u
  double max_sup_radius = 0.0;    // largest sup-norm of the normalized reached set
  std::vector<std::pair<std::uint64_t, std::vector<Site>>> cloud;  // reached sets of the first survivors
};

struct ShapeSettings {
  double t = 40.0;
  std::vector<double> eps{0.1, 0.25, 0.5};
  int cloud_trials = 3;
};

/// Unit-ball radius of the interpolated norm in the direction of angle theta,
/// linear in angle between neighbouring directions.
double ball_radius(const std::vector<DirectionalSpeed>& mu, double theta);

ShapeEstimate shape_snapshot(const ModelParams& params, const ShapeSettings& shape, const RunSettings& s);
void write_shape_mu_csv(std::ostream& out, const ShapeEstimate& e);
void write_shape_inclusion_csv(std::ostream& out, const ShapeEstimate& e);
void write_shape_cloud_csv(std::ostream& out, const ShapeEstimate& e);

// FKG.

struct FkgResult {
  std::uint64_t trials = 0;
  double mean_u = 0.0;
  double mean_v = 0.0;
  double covariance = 0.0;
  double se = 0.0;
  bool passes() const { return covariance >= -3.0 * se; }
};

/// Covariance of "u alive at t" and "v alive at t" for the process from f
/// restricted to box.
FkgResult fkg_spot_check(const ModelParams& params, const Box& box, const Config& f, double t, const Site& u,
                         const Site& v, const RunSettings& s);

// Exact transient law of a small system.

/// Finite site set with dead boundary: births only between listed sites that
/// are lattice neighbours. Ages above age_cap are merged into age_cap, which
/// is exact when every rate is constant from age_cap on.
struct OracleSpec {
  ModelParams params;
  std::vector<Site> sites;
  Age age_cap = 2;

  void validate() const;
  std::size_t state_count() const;
};

struct OracleResult {
  std::vector<double> distribution;  // indexed by state; site i holds digit i in base age_cap+1
  double p_nonempty = 0.0;
  std::vector<double> marginals;  // P(site i alive)
  double error_bound = 0.0;       // total variation bound of the truncation
  std::size_t states = 0;
};

std::size_t oracle_state(const OracleSpec& spec, const Config& f);
/// Uniformization of the generator; throws StateSpaceOverflow above max_states.
OracleResult exact_small_oracle(const OracleSpec& spec, const Config& f, double t, double tolerance = 1e-10,
                                std::size_t max_states = 1000000);
void write_oracle_csv(std::ostream& out, const OracleSpec& spec, const OracleResult& r);

// Calibration.

struct CalibrationCandidate {
  double lambda = 0.0;
  double gamma = 0.0;
  Proportion rho;
};

struct Calibration {
  bool found = false;
  ModelParams params;
  double lambda = 0.0;
  double gamma = 0.0;
  Proportion rho;
  std::vector<CalibrationCandidate> tried;
};

/// Two-stage profiles (0, lambda) with lambda in {2,3,4} and gamma in {1,2},
/// tried in order of increasing lambda then gamma; the first with survival
/// estimate at least rho_min is chosen.
Calibration calibrate(int dimension, const RunSettings& s, double rho_min = 0.3);
void write_calibration_csv(std::ostream& out, const Calibration& c);

}  // namespace cpa
