#include "cpa/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "cpa/errors.hpp"

namespace cpa {

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw InvalidArgument("lattice dimension must be 1, 2 or 3, got " + std::to_string(dim));
  }
}

void check_same_dim(const Site& a, const Site& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("sites of different dimensions");
}

constexpr std::uint64_t kCoordMask = (std::uint64_t{1} << Site::kCoordBits) - 1;

}  // namespace

Site::Site(int dim) {
  check_dim(dim);
  dim_ = static_cast<std::uint8_t>(dim);
}

Site::Site(std::initializer_list<std::int32_t> coords) {
  check_dim(static_cast<int>(coords.size()));
  dim_ = static_cast<std::uint8_t>(coords.size());
  std::copy(coords.begin(), coords.end(), c_.begin());
}

Site Site::unit(int dim, int axis, std::int32_t sign) {
  Site s(dim);
  if (axis < 0 || axis >= dim) throw InvalidArgument("axis out of range");
  s[axis] = sign;
  return s;
}

void Site::throw_out_of_range() const {
  throw InvalidArgument("site coordinate out of packable range: " + to_string());
}

Site Site::from_key(std::uint64_t key, int dim) {
  Site s(dim);
  for (int i = kMaxDim - 1; i >= 0; --i) {
    const auto raw = static_cast<std::int64_t>(key & kCoordMask);
    if (i < dim) s[i] = static_cast<std::int32_t>(raw - kCoordOffset);
    key >>= kCoordBits;
  }
  return s;
}

std::int64_t Site::l1_norm() const {
  std::int64_t n = 0;
  for (int i = 0; i < dim_; ++i) n += std::llabs(c_[static_cast<std::size_t>(i)]);
  return n;
}

std::int64_t Site::sup_norm() const {
  std::int64_t n = 0;
  for (int i = 0; i < dim_; ++i) n = std::max<std::int64_t>(n, std::llabs(c_[static_cast<std::size_t>(i)]));
  return n;
}

double Site::l2_norm() const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const double v = c_[static_cast<std::size_t>(i)];
    s += v * v;
  }
  return std::sqrt(s);
}

Site Site::operator+(const Site& o) const {
  check_same_dim(*this, o);
  Site r(dim_);
  for (int i = 0; i < dim_; ++i) r[i] = (*this)[i] + o[i];
  return r;
}

Site Site::operator-(const Site& o) const {
  check_same_dim(*this, o);
  Site r(dim_);
  for (int i = 0; i < dim_; ++i) r[i] = (*this)[i] - o[i];
  return r;
}

Site Site::operator-() const {
  Site r(dim_);
  for (int i = 0; i < dim_; ++i) r[i] = -(*this)[i];
  return r;
}

Site Site::operator*(std::int32_t k) const {
  Site r(dim_);
  for (int i = 0; i < dim_; ++i) r[i] = (*this)[i] * k;
  return r;
}

std::strong_ordering Site::operator<=>(const Site& o) const {
  if (auto c = dim_ <=> o.dim_; c != 0) return c;
  for (int i = 0; i < dim_; ++i) {
    if (auto c = (*this)[i] <=> o[i]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

std::string Site::to_string() const {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < dim_; ++i) {
    if (i) os << ',';
    os << (*this)[i];
  }
  os << ')';
  return os.str();
}

std::vector<Site> neighbors(const Site& x) {
  std::vector<Site> out;
  out.reserve(static_cast<std::size_t>(2 * x.dim()));
  for (int axis = 0; axis < x.dim(); ++axis) {
    Site m = x;
    m[axis] -= 1;
    out.push_back(m);
    Site p = x;
    p[axis] += 1;
    out.push_back(p);
  }
  return out;
}

Edge::Edge(const Site& a, const Site& b) {
  check_same_dim(a, b);
  const Site diff = b - a;
  if (diff.l1_norm() != 1) {
    throw InvalidArgument("edge endpoints must be at L1 distance 1: " + a.to_string() + " " + b.to_string());
  }
  low_ = std::min(a, b);
  for (int i = 0; i < a.dim(); ++i) {
    if (diff[i] != 0) axis_ = i;
  }
}

Site Edge::high() const {
  Site h = low_;
  h[axis_] += 1;
  return h;
}

bool Edge::has_endpoint(const Site& x) const { return x == low_ || x == high(); }

Site Edge::other(const Site& x) const {
  if (x == low_) return high();
  if (x == high()) return low_;
  throw InvalidArgument("site " + x.to_string() + " is not an endpoint of the edge");
}

Edge Edge::from_key(std::uint64_t key, int dim) {
  Edge e;
  e.axis_ = static_cast<int>(key & 3u);
  e.low_ = Site::from_key(key >> 2, dim);
  return e;
}

Edge Edge::translated(const Site& by) const {
  Edge e = *this;
  e.low_ = low_ + by;
  return e;
}

std::vector<Edge> incident_edges(const Site& x) {
  std::vector<Edge> out;
  for (const Site& y : neighbors(x)) out.emplace_back(x, y);
  return out;
}

Config::Config(std::initializer_list<std::pair<const Site, Age>> init) {
  for (const auto& [x, a] : init) set(x, a);
}

Config Config::single(const Site& x, Age age) {
  Config c;
  c.set(x, age);
  return c;
}

Config Config::cube(const Site& center, int radius, Age age) {
  Config c;
  for (const Site& x : Box::centered(center, radius).sites()) c.set(x, age);
  return c;
}

Age Config::at(const Site& x) const {
  const auto it = ages_.find(x);
  return it == ages_.end() ? 0 : it->second;
}

void Config::set(const Site& x, Age age) {
  if (!ages_.empty() && ages_.begin()->first.dim() != x.dim()) {
    throw InvalidArgument("configuration mixes dimensions");
  }
  if (age == 0) {
    ages_.erase(x);
  } else {
    ages_[x] = age;
  }
}

std::vector<Site> Config::support() const {
  std::vector<Site> s;
  s.reserve(ages_.size());
  for (const auto& [x, a] : ages_) s.push_back(x);
  return s;
}

Config Config::translated(const Site& by) const {
  Config c;
  for (const auto& [x, a] : ages_) c.ages_.emplace(x + by, a);
  return c;
}

Config join(const Config& f, const Config& g) {
  Config out = f;
  for (const auto& [x, a] : g) {
    if (a > out.at(x)) out.set(x, a);
  }
  return out;
}

bool leq(const Config& f, const Config& g) {
  return std::all_of(f.begin(), f.end(), [&](const auto& kv) { return kv.second <= g.at(kv.first); });
}

Box Box::centered(const Site& center, int radius) {
  if (radius < 0) throw InvalidArgument("box radius must be nonnegative");
  Box b{center, center};
  for (int i = 0; i < center.dim(); ++i) {
    b.lo[i] -= radius;
    b.hi[i] += radius;
  }
  return b;
}

bool Box::contains(const Site& x) const {
  if (x.dim() != lo.dim()) return false;
  for (int i = 0; i < x.dim(); ++i) {
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  }
  return true;
}

bool Box::interior_contains(const Site& x) const {
  if (x.dim() != lo.dim()) return false;
  for (int i = 0; i < x.dim(); ++i) {
    if (x[i] <= lo[i] || x[i] >= hi[i]) return false;
  }
  return true;
}

bool Box::contains(const Box& inner) const { return contains(inner.lo) && contains(inner.hi); }

std::uint64_t Box::volume() const {
  std::uint64_t v = 1;
  for (int i = 0; i < dim(); ++i) {
    if (hi[i] < lo[i]) return 0;
    v *= static_cast<std::uint64_t>(hi[i] - lo[i] + 1);
  }
  return v;
}

std::vector<Site> Box::sites() const {
  std::vector<Site> out;
  if (volume() == 0) return out;
  out.reserve(volume());
  Site cur = lo;
  while (true) {
    out.push_back(cur);
    int axis = dim() - 1;
    while (axis >= 0) {
      if (cur[axis] < hi[axis]) {
        ++cur[axis];
        break;
      }
      cur[axis] = lo[axis];
      --axis;
    }
    if (axis < 0) break;
  }
  return out;
}

}  // namespace cpa
