#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Sparse>

#include "cpa/errors.hpp"
#include "cpa/experiments.hpp"
#include "cpa/format.hpp"

namespace cpa {

namespace {

constexpr double kMaxStepMean = 30.0;

}  // namespace

void OracleSpec::validate() const {
  params.validate();
  if (sites.empty()) throw InvalidArgument("oracle needs at least one site");
  if (age_cap < 1) throw InvalidArgument("oracle age cap must be at least 1");
  for (const Site& x : sites) {
    if (x.dim() != params.dimension) throw InvalidArgument("oracle site has the wrong dimension");
  }
  std::vector<Site> sorted = sites;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidArgument("oracle sites must be distinct");
  }
  const double capped = params.profile.rate(age_cap);
  for (Age a = age_cap + 1; a <= std::max<Age>(age_cap, params.profile.saturation_age()) + 1; ++a) {
    if (params.profile.rate(a) != capped) throw InvalidArgument("profile is not constant from the age cap on");
  }
}

std::size_t OracleSpec::state_count() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (n > std::numeric_limits<std::size_t>::max() / (age_cap + 1)) return std::numeric_limits<std::size_t>::max();
    n *= age_cap + 1;
  }
  return n;
}

std::size_t oracle_state(const OracleSpec& spec, const Config& f) {
  std::size_t state = 0;
  std::size_t place = 1;
  std::size_t found = 0;
  for (const Site& x : spec.sites) {
    const Age a = f.at(x);
    if (a > spec.age_cap) throw InvalidArgument("initial age above the oracle age cap");
    found += a > 0;
    state += place * a;
    place *= spec.age_cap + 1;
  }
  if (found != f.size()) throw InvalidArgument("initial configuration has sites outside the oracle set");
  return state;
}

OracleResult exact_small_oracle(const OracleSpec& spec, const Config& f, double t, double tolerance,
                                std::size_t max_states) {
  spec.validate();
  if (t < 0.0 || !(tolerance > 0.0)) throw InvalidArgument("oracle needs t >= 0 and a positive tolerance");
  const std::size_t states = spec.state_count();
  if (states > max_states) throw StateSpaceOverflow("oracle state space has " + std::to_string(states) + " states");
  const std::size_t n = spec.sites.size();
  const std::size_t base = spec.age_cap + 1;
  std::vector<std::size_t> place(n, 1);
  for (std::size_t i = 1; i < n; ++i) place[i] = place[i - 1] * base;
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if ((spec.sites[i] - spec.sites[j]).l1_norm() == 1) nbrs[i].push_back(j);
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> exit(states, 0.0);
  std::vector<Age> ages(n);
  for (std::size_t s = 0; s < states; ++s) {
    for (std::size_t i = 0; i < n; ++i) ages[i] = static_cast<Age>((s / place[i]) % base);
    for (std::size_t i = 0; i < n; ++i) {
      const Age a = ages[i];
      if (a == 0) continue;
      triplets.emplace_back(static_cast<int>(s - a * place[i]), static_cast<int>(s), 1.0);
      exit[s] += 1.0;
      if (a < spec.age_cap && spec.params.gamma > 0.0) {
        triplets.emplace_back(static_cast<int>(s + place[i]), static_cast<int>(s), spec.params.gamma);
        exit[s] += spec.params.gamma;
      }
      const double lambda = spec.params.profile.rate(a);
      if (lambda <= 0.0) continue;
      for (std::size_t j : nbrs[i]) {
        if (ages[j] != 0) continue;
        triplets.emplace_back(static_cast<int>(s + place[j]), static_cast<int>(s), lambda);
        exit[s] += lambda;
      }
    }
  }
  const double rate = std::max(1e-300, *std::max_element(exit.begin(), exit.end()));
  for (auto& tr : triplets) tr = Eigen::Triplet<double>(tr.row(), tr.col(), tr.value() / rate);
  for (std::size_t s = 0; s < states; ++s) {
    triplets.emplace_back(static_cast<int>(s), static_cast<int>(s), 1.0 - exit[s] / rate);
  }
  // Column-stochastic transpose of the uniformized chain: v' = P^T v.
  Eigen::SparseMatrix<double> pt(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
  pt.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(states));
  v[static_cast<Eigen::Index>(oracle_state(spec, f))] = 1.0;
  OracleResult r;
  r.states = states;
  const int pieces = std::max(1, static_cast<int>(std::ceil(rate * t / kMaxStepMean)));
  const double mean_step = rate * t / pieces;
  for (int p = 0; p < pieces && t > 0.0; ++p) {
    Eigen::VectorXd term = v;
    double weight = std::exp(-mean_step);
    double mass = weight;
    Eigen::VectorXd acc = weight * term;
    for (int k = 1; 1.0 - mass > tolerance; ++k) {
      term = pt * term;
      weight *= mean_step / k;
      mass += weight;
      acc += weight * term;
      if (k > 100000) break;
    }
    r.error_bound += std::max(0.0, 1.0 - mass);
    v = acc;
  }
  r.distribution.assign(v.data(), v.data() + v.size());
  for (std::size_t s = 1; s < states; ++s) r.p_nonempty += r.distribution[s];
  r.marginals.assign(n, 0.0);
  for (std::size_t s = 0; s < states; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      if ((s / place[i]) % base != 0) r.marginals[i] += r.distribution[s];
    }
  }
  return r;
}

void write_oracle_csv(std::ostream& out, const OracleSpec& spec, const OracleResult& r) {
  const int dim = spec.params.dimension;
  out << "kind";
  for (int i = 0; i < dim; ++i) out << ",x" << i;
  out << ",p\n";
  out << "nonempty";
  for (int i = 0; i < dim; ++i) out << ',';
  out << ',' << format_double(r.p_nonempty) << '\n';
  for (std::size_t j = 0; j < spec.sites.size(); ++j) {
    out << "alive";
    for (int i = 0; i < dim; ++i) out << ',' << spec.sites[j][i];
    out << ',' << format_double(r.marginals[j]) << '\n';
  }
}

}  // namespace cpa
