#pragma once

// Reproducible Poisson event environment for the graphical construction.
//
// Every site carries a rate-1 death stream and a rate-gamma maturation stream;
// every edge carries a rate-base_rate arrow stream whose events hold a uniform
// mark. A birth along an arrow from a site of age k is allowed when
// mark <= lambda_k / base_rate, so all birth processes of all ages (and of all
// dominated profiles) are read off the same arrows.
//
// Streams are generated lazily, pane by pane, from a counter-based hash of
// (seed, stream kind, object, pane index). Nothing is stored: asking twice,
// from any thread, yields the same events.

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <absl/container/inlined_vector.h>

#include "cpa/lattice.hpp"

namespace cpa {

/// Birth-rate sequence: lambda_0 = 0, lambda_1..lambda_m = head, lambda_i = tail for i > m.
struct AgeProfile {
  std::vector<double> head;
  double tail = 0.0;

  static AgeProfile zero() { return {}; }
  static AgeProfile constant(double lambda) { return {{}, lambda}; }

  double rate(Age age) const {
    if (age == 0) return 0.0;
    return age <= head.size() ? head[age - 1] : tail;
  }
  // Ages above this index all share the tail rate.
  std::size_t saturation_age() const { return head.size(); }

  // Throws InvalidArgument unless nonnegative, nondecreasing, head <= tail.
  void validate() const;

  bool operator==(const AgeProfile&) const = default;
};

/// lambda_i <= lambda'_i for every age i.
bool dominated_by(const AgeProfile& lhs, const AgeProfile& rhs);

struct ModelParams {
  int dimension = 1;
  AgeProfile profile;
  double gamma = 1.0;
  // Intensity of the arrow streams; must dominate every lambda_i.
  double base_rate = 0.0;

  // Fills base_rate with the profile tail when not given.
  static ModelParams make(int dimension, AgeProfile profile, double gamma, double base_rate = -1.0);

  void validate() const;

  // Acceptance threshold lambda_age / base_rate of an arrow mark.
  double birth_threshold(Age age) const {
    return base_rate > 0.0 ? profile.rate(age) / base_rate : 0.0;
  }

  bool operator==(const ModelParams&) const = default;
};

struct ArrowEvent {
  double time = 0.0;
  double mark = 0.0;

  bool operator==(const ArrowEvent&) const = default;
};

enum class StreamKind : std::uint8_t { Death = 0, Maturation = 1, Arrow = 2 };

namespace detail {

// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_words(std::uint64_t seed, std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ull);
  for (std::uint64_t w : words) h = mix64(h ^ w);
  return h;
}

// Uniform on (0, 1]; never returns 0, so a zero threshold rejects every mark.
constexpr double to_unit_open_closed(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// Objects outside `keep` draw their streams from `seed` instead.
struct Resampling {
  Box keep;
  std::uint64_t seed = 0;
};

struct OmegaBase {
  std::uint64_t seed = 0;
  ModelParams params;
  double horizon = 0.0;
  double pane_length = 1.0;
  std::optional<Resampling> resampling;
  // exp(-rate * pane_length) per stream kind.
  std::array<long double, 3> empty_pane_prob{};
};

}  // namespace detail

/// One Poisson pane of a stream, in base (unshifted) time, sorted by time.
/// Marks are 0 for death and maturation streams.
using PaneEvents = absl::InlinedVector<ArrowEvent, 4>;

class Omega {
 public:
  Omega(std::uint64_t seed, ModelParams params, double horizon, double pane_length = 1.0);

  std::uint64_t seed() const { return base_->seed; }
  const ModelParams& params() const { return base_->params; }
  int dimension() const { return base_->params.dimension; }
  double pane_length() const { return base_->pane_length; }
  // Horizon of this view (base horizon minus the time shift).
  double horizon() const { return base_->horizon - time_offset_; }
  double time_offset() const { return time_offset_; }
  const Site& space_offset() const { return space_offset_; }

  // Events of the stream on the closed window [a, b] of this view.
  std::vector<double> death_times(const Site& x, double a, double b) const;
  std::vector<double> maturation_times(const Site& x, double a, double b) const;
  std::vector<ArrowEvent> arrow_events(const Edge& e, double a, double b) const;

  /// View whose streams on [a, b] are the streams of this view on [a+t, b+t], moved back by t.
  Omega shift_time(double t) const;
  /// View whose object o carries the streams of object x + o of this view.
  Omega shift_space(const Site& x) const;

  /// Same streams for sites in the open box `keep` and edges with both
  /// endpoints there; fresh independent streams for every other object.
  Omega resampled_outside(const Box& keep, std::uint64_t seed) const;

  // Base-coordinate keys of objects of this view, for StreamCursor.
  std::uint64_t base_key(const Site& x) const { return (x + space_offset_).key(); }
  std::uint64_t base_key(const Edge& e) const { return e.translated(space_offset_).key(); }
  double rate(StreamKind kind) const;

  // Deterministic auxiliary uniform on (0, 1], keyed by a tag and two words
  // and by this view's offsets (used for Bernoulli padding and percolation).
  double aux_uniform(std::uint64_t tag, std::uint64_t a, std::uint64_t b) const;

  // Events of one pane of one stream, base coordinates.
  void fill_pane(StreamKind kind, std::uint64_t base_key, std::int64_t pane, PaneEvents& out) const;

  const detail::OmegaBase& base() const { return *base_; }

 private:
  void check_window(double a, double b) const;
  std::uint64_t stream_seed(StreamKind kind, std::uint64_t base_key) const;
  template <class Emit>
  void for_each_event(StreamKind kind, std::uint64_t base_key, double a, double b, Emit&& emit) const;

  std::shared_ptr<const detail::OmegaBase> base_;
  double time_offset_ = 0.0;
  Site space_offset_;
};

/// Keeps the arrow times whose mark passes the birth threshold of `age`.
std::vector<double> thin(std::span<const ArrowEvent> events, Age age, const AgeProfile& profile, double base_rate);

/// Sequential reader of one stream of an Omega view: yields events strictly
/// after a start time, in increasing order, generating panes on demand.
/// Times are reported in view coordinates. Ends (time = +inf) at the horizon.
class StreamCursor {
 public:
  static constexpr double kNever = std::numeric_limits<double>::infinity();

  StreamCursor() = default;
  StreamCursor(const Omega& omega, StreamKind kind, std::uint64_t base_key, double after);

  double time() const { return time_; }
  double mark() const { return mark_; }
  void advance();

 private:
  void load_pane();

  const Omega* omega_ = nullptr;
  StreamKind kind_ = StreamKind::Death;
  std::uint64_t key_ = 0;
  std::int64_t pane_ = 0;
  std::size_t idx_ = 0;
  PaneEvents buf_;
  double time_ = kNever;
  double mark_ = 0.0;
};

}  // namespace cpa
