#include "cpa/omega.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "cpa/errors.hpp"

namespace cpa {

namespace {

constexpr std::uint64_t kSlotMarks = std::uint64_t{1} << 40;
constexpr std::uint64_t kAuxSalt = 0x41555849ull;  // "AUXI"

std::uint64_t stream_key(std::uint64_t seed, StreamKind kind, std::uint64_t obj, std::int64_t pane) {
  return detail::hash_words(seed, {static_cast<std::uint64_t>(kind) + 1, obj, static_cast<std::uint64_t>(pane)});
}

double slot_uniform(std::uint64_t key, std::uint64_t slot) {
  return detail::to_unit_open_closed(detail::mix64(key + slot * 0x9e3779b97f4a7c15ull));
}

// Smallest k with P(Poisson(mean) <= k) >= u. Monotone in mean for fixed u,
// which makes streams generated at a larger rate supersets of smaller ones.
std::uint64_t poisson_inverse(double u, double mean, long double p0) {
  if (mean <= 0.0) return 0;
  long double p = p0;
  long double cdf = p;
  std::uint64_t k = 0;
  const long double target = u;
  while (cdf < target) {
    ++k;
    p *= static_cast<long double>(mean) / static_cast<long double>(k);
    cdf += p;
    if (p < 1e-30L && static_cast<double>(k) > mean) break;
  }
  return k;
}

// Index of the pane (p*len, (p+1)*len] that contains t.
std::int64_t pane_of(double t, double len) {
  const auto p = static_cast<std::int64_t>(std::ceil(t / len)) - 1;
  return std::max<std::int64_t>(p, 0);
}

}  // namespace

void AgeProfile::validate() const {
  double prev = 0.0;
  for (double l : head) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("birth rates must be finite and nonnegative");
    if (l < prev) throw InvalidArgument("birth rates must be nondecreasing in age");
    prev = l;
  }
  if (!(tail >= prev) || !std::isfinite(tail)) {
    throw InvalidArgument("tail rate must be finite and at least every head rate");
  }
}

bool dominated_by(const AgeProfile& lhs, const AgeProfile& rhs) {
  const std::size_t m = std::max(lhs.head.size(), rhs.head.size()) + 1;
  for (Age a = 1; a <= m; ++a) {
    if (lhs.rate(a) > rhs.rate(a)) return false;
  }
  return lhs.tail <= rhs.tail;
}

ModelParams ModelParams::make(int dimension, AgeProfile profile, double gamma, double base_rate) {
  ModelParams p;
  p.dimension = dimension;
  p.base_rate = base_rate < 0.0 ? profile.tail : base_rate;
  p.profile = std::move(profile);
  p.gamma = gamma;
  p.validate();
  return p;
}

void ModelParams::validate() const {
  if (dimension < 1 || dimension > kMaxDim) throw InvalidArgument("dimension must be 1, 2 or 3");
  profile.validate();
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("aging rate gamma must be positive");
  if (!(base_rate >= profile.tail) || !std::isfinite(base_rate)) {
    throw InvalidArgument("base_rate must be finite and at least the tail birth rate");
  }
}

Omega::Omega(std::uint64_t seed, ModelParams params, double horizon, double pane_length)
    : space_offset_(params.dimension) {
  params.validate();
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw InvalidArgument("horizon must be finite and nonnegative");
  if (!(pane_length > 0.0)) throw InvalidArgument("pane length must be positive");
  auto b = std::make_shared<detail::OmegaBase>();
  b->seed = seed;
  b->params = std::move(params);
  b->horizon = horizon;
  b->pane_length = pane_length;
  const double rates[] = {1.0, b->params.gamma, b->params.base_rate};
  for (std::size_t k = 0; k < 3; ++k) b->empty_pane_prob[k] = std::exp(-static_cast<long double>(rates[k] * pane_length));
  base_ = std::move(b);
}

double Omega::rate(StreamKind kind) const {
  switch (kind) {
    case StreamKind::Death:
      return 1.0;
    case StreamKind::Maturation:
      return base_->params.gamma;
    case StreamKind::Arrow:
      return base_->params.base_rate;
  }
  return 0.0;
}

std::uint64_t Omega::stream_seed(StreamKind kind, std::uint64_t base_key) const {
  if (!base_->resampling) return base_->seed;
  const Box& keep = base_->resampling->keep;
  const int d = dimension();
  bool inside = false;
  if (kind == StreamKind::Arrow) {
    const Edge e = Edge::from_key(base_key, d);
    inside = keep.interior_contains(e.low()) && keep.interior_contains(e.high());
  } else {
    inside = keep.interior_contains(Site::from_key(base_key, d));
  }
  return inside ? base_->seed : base_->resampling->seed;
}

void Omega::fill_pane(StreamKind kind, std::uint64_t base_key, std::int64_t pane, PaneEvents& out) const {
  out.clear();
  const double len = base_->pane_length;
  const std::uint64_t key = stream_key(stream_seed(kind, base_key), kind, base_key, pane);
  const auto k = static_cast<std::size_t>(kind);
  const std::uint64_t n = poisson_inverse(slot_uniform(key, 0), rate(kind) * len, base_->empty_pane_prob[k]);
  if (n == 0) return;
  const double start = static_cast<double>(pane) * len;
  const bool marked = kind == StreamKind::Arrow;
  for (std::uint64_t i = 1; i <= n; ++i) {
    out.push_back({start + slot_uniform(key, i) * len, marked ? slot_uniform(key, kSlotMarks + i) : 0.0});
  }
  std::sort(out.begin(), out.end(), [](const ArrowEvent& a, const ArrowEvent& b) { return a.time < b.time; });
}

void Omega::check_window(double a, double b) const {
  if (!(a >= 0.0) || !(b >= a)) {
    throw InvalidArgument("window must satisfy 0 <= a <= b");
  }
  if (b > horizon()) {
    throw HorizonExceeded("window end " + std::to_string(b) + " exceeds horizon " + std::to_string(horizon()));
  }
}

template <class Emit>
void Omega::for_each_event(StreamKind kind, std::uint64_t base_key, double a, double b, Emit&& emit) const {
  check_window(a, b);
  if (a == b) return;
  const double len = base_->pane_length;
  const double lo = a + time_offset_;
  const double hi = b + time_offset_;
  PaneEvents pane;
  for (std::int64_t p = pane_of(lo, len); static_cast<double>(p) * len < hi; ++p) {
    fill_pane(kind, base_key, p, pane);
    for (const ArrowEvent& ev : pane) {
      if (ev.time < lo || ev.time > hi) continue;
      emit(ev.time - time_offset_, ev.mark);
    }
  }
}

std::vector<double> Omega::death_times(const Site& x, double a, double b) const {
  std::vector<double> out;
  for_each_event(StreamKind::Death, base_key(x), a, b, [&](double t, double) { out.push_back(t); });
  return out;
}

std::vector<double> Omega::maturation_times(const Site& x, double a, double b) const {
  std::vector<double> out;
  for_each_event(StreamKind::Maturation, base_key(x), a, b, [&](double t, double) { out.push_back(t); });
  return out;
}

std::vector<ArrowEvent> Omega::arrow_events(const Edge& e, double a, double b) const {
  std::vector<ArrowEvent> out;
  for_each_event(StreamKind::Arrow, base_key(e), a, b, [&](double t, double u) { out.push_back({t, u}); });
  return out;
}

Omega Omega::shift_time(double t) const {
  if (!(t >= 0.0) || t > horizon()) {
    throw HorizonExceeded("time shift " + std::to_string(t) + " outside [0, horizon]");
  }
  Omega v = *this;
  v.time_offset_ = time_offset_ + t;
  return v;
}

Omega Omega::shift_space(const Site& x) const {
  if (x.dim() != dimension()) throw InvalidArgument("shift dimension mismatch");
  Omega v = *this;
  v.space_offset_ = space_offset_ + x;
  return v;
}

Omega Omega::resampled_outside(const Box& keep, std::uint64_t seed) const {
  if (keep.dim() != dimension()) throw InvalidArgument("box dimension mismatch");
  auto b = std::make_shared<detail::OmegaBase>(*base_);
  b->resampling = detail::Resampling{Box{keep.lo + space_offset_, keep.hi + space_offset_}, seed};
  Omega v = *this;
  v.base_ = std::move(b);
  return v;
}

double Omega::aux_uniform(std::uint64_t tag, std::uint64_t a, std::uint64_t b) const {
  const std::uint64_t h = detail::hash_words(
      base_->seed, {kAuxSalt, tag, a, b, std::bit_cast<std::uint64_t>(time_offset_), space_offset_.key()});
  return detail::to_unit_open_closed(h);
}

std::vector<double> thin(std::span<const ArrowEvent> events, Age age, const AgeProfile& profile, double base_rate) {
  std::vector<double> out;
  if (age == 0 || base_rate <= 0.0) return out;
  const double threshold = profile.rate(age) / base_rate;
  for (const ArrowEvent& ev : events) {
    if (ev.mark <= threshold) out.push_back(ev.time);
  }
  return out;
}

StreamCursor::StreamCursor(const Omega& omega, StreamKind kind, std::uint64_t base_key, double after)
    : omega_(&omega), kind_(kind), key_(base_key) {
  const double base_after = after + omega.time_offset();
  pane_ = pane_of(base_after, omega.pane_length());
  load_pane();
  while (time_ <= after) advance();
}

void StreamCursor::load_pane() {
  idx_ = 0;
  const auto& base = omega_->base();
  for (;;) {
    if (static_cast<double>(pane_) * base.pane_length >= base.horizon) {
      time_ = kNever;
      return;
    }
    omega_->fill_pane(kind_, key_, pane_, buf_);
    if (!buf_.empty()) break;
    ++pane_;
  }
  const ArrowEvent& ev = buf_[0];
  if (ev.time > base.horizon) {
    time_ = kNever;
    return;
  }
  time_ = ev.time - omega_->time_offset();
  mark_ = ev.mark;
}

void StreamCursor::advance() {
  if (time_ == kNever) return;
  ++idx_;
  if (idx_ >= buf_.size()) {
    ++pane_;
    load_pane();
    return;
  }
  const ArrowEvent& ev = buf_[idx_];
  if (ev.time > omega_->base().horizon) {
    time_ = kNever;
    return;
  }
  time_ = ev.time - omega_->time_offset();
  mark_ = ev.mark;
}

}  // namespace cpa
