#pragma once

// Integer lattice Z^d (d = 1, 2, 3), nearest-neighbour edges, finite-support
// age configurations and the lattice order used by the monotone couplings.

#include <array>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cpa {

inline constexpr int kMaxDim = 3;

// Age of a living site. Dead sites are never stored, so every stored age is >= 1.
using Age = std::uint64_t;

/// A point of Z^d. Coordinates are limited to [-2^19, 2^19) so that a site
/// packs into a 64-bit key whose numeric order is the lexicographic order.
class Site {
 public:
  static constexpr int kCoordBits = 20;
  static constexpr std::int32_t kCoordOffset = 1 << (kCoordBits - 1);

  Site() = default;
  explicit Site(int dim);
  Site(std::initializer_list<std::int32_t> coords);

  static Site origin(int dim) { return Site(dim); }
  static Site unit(int dim, int axis, std::int32_t sign = 1);
  static Site from_key(std::uint64_t key, int dim);

  int dim() const { return dim_; }
  std::int32_t operator[](int axis) const { return c_[static_cast<std::size_t>(axis)]; }
  std::int32_t& operator[](int axis) { return c_[static_cast<std::size_t>(axis)]; }

  // Throws InvalidArgument when a coordinate is outside the packable range.
  std::uint64_t key() const {
    std::uint64_t k = 0;
    for (int i = 0; i < kMaxDim; ++i) {
      const auto shifted = static_cast<std::uint64_t>(static_cast<std::int64_t>(c_[static_cast<std::size_t>(i)]) + kCoordOffset);
      if (shifted >> kCoordBits) throw_out_of_range();
      k = (k << kCoordBits) | shifted;
    }
    return k;
  }

  std::int64_t l1_norm() const;
  std::int64_t sup_norm() const;
  double l2_norm() const;

  Site operator+(const Site& o) const;
  Site operator-(const Site& o) const;
  Site operator-() const;
  Site operator*(std::int32_t k) const;

  bool operator==(const Site& o) const = default;
  std::strong_ordering operator<=>(const Site& o) const;

  std::string to_string() const;

 private:
  [[noreturn]] void throw_out_of_range() const;

  std::array<std::int32_t, kMaxDim> c_{};
  std::uint8_t dim_ = 1;
};

/// The 2d nearest neighbours of x, ordered axis by axis, minus before plus.
std::vector<Site> neighbors(const Site& x);

/// Unordered nearest-neighbour pair, stored with its lexicographically
/// smaller endpoint so that {a,b} and {b,a} are the same edge.
class Edge {
 public:
  Edge(const Site& a, const Site& b);

  const Site& low() const { return low_; }
  Site high() const;
  int axis() const { return axis_; }
  // The endpoint that is not `x`; x must be an endpoint.
  Site other(const Site& x) const;
  bool has_endpoint(const Site& x) const;

  std::uint64_t key() const { return (low_.key() << 2) | static_cast<std::uint64_t>(axis_); }
  static Edge from_key(std::uint64_t key, int dim);

  Edge translated(const Site& by) const;

  bool operator==(const Edge& o) const = default;
  auto operator<=>(const Edge& o) const = default;

 private:
  Edge() = default;
  Site low_;
  int axis_ = 0;
};

/// Incident edges of x, in neighbour order.
std::vector<Edge> incident_edges(const Site& x);

/// Finite-support map site -> age. Absent sites are dead.
class Config {
 public:
  using Map = std::map<Site, Age>;

  Config() = default;
  Config(std::initializer_list<std::pair<const Site, Age>> init);

  static Config single(const Site& x, Age age = 1);
  // Every site of the closed cube center + [-radius, radius]^d alive with `age`.
  static Config cube(const Site& center, int radius, Age age = 1);

  Age at(const Site& x) const;
  bool alive(const Site& x) const { return at(x) != 0; }
  // Setting age 0 kills the site.
  void set(const Site& x, Age age);
  void erase(const Site& x) { ages_.erase(x); }

  bool empty() const { return ages_.empty(); }
  std::size_t size() const { return ages_.size(); }
  std::vector<Site> support() const;

  Map::const_iterator begin() const { return ages_.begin(); }
  Map::const_iterator end() const { return ages_.end(); }

  Config translated(const Site& by) const;

  bool operator==(const Config& o) const = default;

 private:
  Map ages_;
};

Config join(const Config& f, const Config& g);
bool leq(const Config& f, const Config& g);

/// Closed box prod_i [lo_i, hi_i] of Z^d.
struct Box {
  Site lo;
  Site hi;

  static Box centered(const Site& center, int radius);

  int dim() const { return lo.dim(); }
  bool contains(const Site& x) const;
  // Strict interior prod_i (lo_i, hi_i).
  bool interior_contains(const Site& x) const;
  bool contains(const Box& inner) const;
  std::uint64_t volume() const;
  // All sites in lexicographic order.
  std::vector<Site> sites() const;
};

struct SpaceTimeBox {
  Box spatial;
  double t0 = 0.0;
  double t1 = 0.0;

  bool contains(const Site& x, double t) const {
    return spatial.contains(x) && t >= t0 && t <= t1;
  }
};

}  // namespace cpa
