#pragma once

// Lattice actions on configuration spaces. A System couples a site space with
// k commuting generators, each a composition of a coordinate shift (on a
// domain of rank s <= 2) and a power of a cellwise site automorphism. Local
// rules (linear or forbidden-word) carve out subshifts; a restriction spec
// freezes the cells outside a periodic support to a fixed finite value set.
//
// Points are never materialized as infinite configurations: a Config holds
// values on a finite box plus a core sub-box, and the distance between two
// partially known points is computable only when the boxes cover the cells a
// window asks for. Running out of box is a reported error, not an answer.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "meandim/lattice.hpp"
#include "meandim/rational.hpp"
#include "meandim/sites.hpp"
#include "meandim/util.hpp"

namespace meandim {

using Cell = std::array<std::int64_t, 2>;

struct Box {
  Cell lo{0, 0};
  Cell hi{0, 0};
  int s = 1;

  std::int64_t length(int axis) const { return hi[axis] - lo[axis] + 1; }
  std::int64_t cells() const {
    std::int64_t n = 1;
    for (int a = 0; a < s; ++a) n *= length(a);
    return s == 0 ? 1 : n;
  }
  bool contains(const Cell& c) const {
    for (int a = 0; a < s; ++a)
      if (c[a] < lo[a] || c[a] > hi[a]) return false;
    return true;
  }
  bool contains_box(const Box& b) const { return contains(b.lo) && contains(b.hi); }
  friend bool operator==(const Box& a, const Box& b) {
    if (a.s != b.s) return false;
    for (int i = 0; i < a.s; ++i)
      if (a.lo[i] != b.lo[i] || a.hi[i] != b.hi[i]) return false;
    return true;
  }
};

inline Box centered_box(int s, std::int64_t n) {
  Box b;
  b.s = s;
  for (int a = 0; a < s; ++a) {
    b.lo[a] = -n;
    b.hi[a] = n;
  }
  return b;
}

inline Box box_interval(std::int64_t lo, std::int64_t hi) {
  Box b;
  b.s = 1;
  b.lo[0] = lo;
  b.hi[0] = hi;
  return b;
}

inline Box box_rect(std::int64_t lo0, std::int64_t hi0, std::int64_t lo1, std::int64_t hi1) {
  Box b;
  b.s = 2;
  b.lo = {lo0, lo1};
  b.hi = {hi0, hi1};
  return b;
}

// Membership spec for a subset of Z: periodic (residues mod a period) or an
// explicit finite set. Periodic specs are the ones restrictions accept.
struct IndexSpec {
  enum class Kind { periodic, finite };
  Kind kind = Kind::periodic;
  std::int64_t period = 1;
  std::vector<std::int64_t> residues;  // sorted, unique, in [0, period)
  std::vector<std::int64_t> elements;  // finite kind, sorted

  static IndexSpec all() { return periodic_set(1, {0}); }
  static IndexSpec none() { return periodic_set(1, {}); }
  static IndexSpec periodic_set(std::int64_t period, std::vector<std::int64_t> res) {
    if (period < 1) throw precondition_failed("index period must be positive");
    IndexSpec s;
    s.kind = Kind::periodic;
    s.period = period;
    for (std::int64_t r : res) s.residues.push_back(SiteSpace::mod(r, period));
    std::sort(s.residues.begin(), s.residues.end());
    s.residues.erase(std::unique(s.residues.begin(), s.residues.end()), s.residues.end());
    return s;
  }
  static IndexSpec multiples(std::int64_t m) { return periodic_set(m, {0}); }
  static IndexSpec finite_set(std::vector<std::int64_t> elems) {
    IndexSpec s;
    s.kind = Kind::finite;
    s.elements = std::move(elems);
    std::sort(s.elements.begin(), s.elements.end());
    s.elements.erase(std::unique(s.elements.begin(), s.elements.end()), s.elements.end());
    return s;
  }

  bool contains(std::int64_t n) const {
    if (kind == Kind::finite)
      return std::binary_search(elements.begin(), elements.end(), n);
    return std::binary_search(residues.begin(), residues.end(), SiteSpace::mod(n, period));
  }

  std::int64_t count_in(std::int64_t lo, std::int64_t hi) const {
    std::int64_t c = 0;
    if (kind == Kind::finite) {
      for (std::int64_t e : elements) c += (e >= lo && e <= hi) ? 1 : 0;
      return c;
    }
    for (std::int64_t r : residues) {
      // count n in [lo, hi] with n = r mod period
      std::int64_t first = lo + SiteSpace::mod(r - lo, period);
      if (first <= hi) c += (hi - first) / period + 1;
    }
    return c;
  }
};

inline IndexSpec index_union(const IndexSpec& a, const IndexSpec& b) {
  if (a.kind != IndexSpec::Kind::periodic || b.kind != IndexSpec::Kind::periodic)
    throw precondition_failed("index union implemented for periodic specs");
  std::int64_t p = std::lcm(a.period, b.period);
  std::vector<std::int64_t> res;
  for (std::int64_t r = 0; r < p; ++r)
    if (a.contains(r) || b.contains(r)) res.push_back(r);
  return IndexSpec::periodic_set(p, res);
}

// Generator of the action: shift of the domain composed with a power of the
// cellwise site automorphism. All such maps commute pairwise.
struct Generator {
  Cell shift{0, 0};
  std::int64_t cell_power = 0;
};

struct LinearRule {
  std::vector<Cell> shape;
  std::vector<std::int64_t> coeffs;  // sum coeffs[i] * x_{n + shape[i]} = 0 mod q
};

struct ForbiddenRule {
  std::vector<Cell> shape;
  std::vector<std::vector<SiteValue>> words;
};

struct Restriction {
  IndexSpec lambda;                // support classes along axis 0
  std::vector<SiteValue> frozen;   // allowed values on cells outside the support
};

struct System {
  std::string name;
  int k = 1;  // action rank
  int s = 1;  // domain rank
  SiteSpace site = SiteSpace::alphabet(2);
  std::vector<Generator> generators;
  std::optional<ToralAutomorphism> cell_map;
  std::optional<LinearRule> linear_rule;
  std::optional<ForbiddenRule> forbidden_rule;
  std::optional<Restriction> restriction;

  Cell shift_of(const LatticeVector& u) const {
    Cell a{0, 0};
    for (int i = 0; i < k; ++i)
      for (int ax = 0; ax < s; ++ax) a[ax] += u[i] * generators[size_t(i)].shift[ax];
    return a;
  }
  std::int64_t power_of(const LatticeVector& u) const {
    std::int64_t p = 0;
    for (int i = 0; i < k; ++i) p += u[i] * generators[size_t(i)].cell_power;
    return p;
  }
  bool has_rule() const { return linear_rule || forbidden_rule; }
};

// Values on a box, plus the core box the window is "about". The gap between
// core and box is the determinacy margin: applying T^u slides the box, and
// operations fail once the core is no longer covered.
class Config {
 public:
  Config() = default;
  explicit Config(Box box, SiteValue fill = SiteValue{})
      : box_(box), core_(box), values_(size_t(box.cells()), fill) {
    core_.lo = {0, 0};
    core_.hi = {0, 0};
    core_.s = box.s;
    if (box.s > 0 && !box_.contains_box(core_)) core_ = box_;
  }

  static Config point(SiteValue v) {
    Config c;
    c.box_.s = 0;
    c.core_.s = 0;
    c.values_ = {v};
    return c;
  }

  const Box& box() const { return box_; }
  const Box& core() const { return core_; }
  void set_core(Box b) {
    if (!box_.contains_box(b)) throw precondition_failed("core must lie inside the box");
    core_ = b;
  }

  bool contains(const Cell& c) const { return box_.s == 0 || box_.contains(c); }

  const SiteValue& at(const Cell& c) const { return values_[index(c)]; }
  SiteValue& at(const Cell& c) { return values_[index(c)]; }

  const std::vector<SiteValue>& values() const { return values_; }
  std::vector<SiteValue>& values() { return values_; }

  std::optional<std::int64_t> klass;  // restriction offset class, mod period

  friend bool operator==(const Config& a, const Config& b) {
    return a.box_ == b.box_ && a.values_ == b.values_;
  }

 private:
  size_t index(const Cell& c) const {
    if (box_.s == 0) return 0;
    if (!box_.contains(c))
      throw insufficient_margin("cell (" + std::to_string(c[0]) + "," + std::to_string(c[1]) +
                                ") outside the known box");
    std::int64_t len1 = box_.s >= 2 ? box_.length(1) : 1;
    std::int64_t i = (c[0] - box_.lo[0]) * len1 + (box_.s >= 2 ? c[1] - box_.lo[1] : 0);
    return size_t(i);
  }

  Box box_;
  Box core_;
  std::vector<SiteValue> values_;
};

// T^u as far as the known box allows. The box slides against the shift part;
// the cellwise part relabels values in place. Throws once the core would fall
// outside the slid box.
inline Config apply(const System& sys, const LatticeVector& u, const Config& x) {
  if (u.size() != sys.k) throw precondition_failed("lattice vector rank mismatch");
  Cell a = sys.shift_of(u);
  std::int64_t p = sys.power_of(u);
  if (p != 0 && !sys.cell_map)
    throw precondition_failed("cellwise generator power without a site map");

  Config y = x;
  if (x.box().s > 0) {
    Box nb = x.box();
    for (int ax = 0; ax < x.box().s; ++ax) {
      nb.lo[ax] -= a[ax];
      nb.hi[ax] -= a[ax];
    }
    if (!nb.contains_box(x.core()))
      throw insufficient_margin("window cannot support the requested group element");
    y = Config(nb);
    y.set_core(x.core());
    Cell c;
    for (std::int64_t i0 = nb.lo[0]; i0 <= nb.hi[0]; ++i0) {
      c[0] = i0;
      if (nb.s >= 2) {
        for (std::int64_t i1 = nb.lo[1]; i1 <= nb.hi[1]; ++i1) {
          c[1] = i1;
          y.at(c) = x.at({i0 + a[0], i1 + a[1]});
        }
      } else {
        c[1] = 0;
        y.at(c) = x.at({i0 + a[0], 0});
      }
    }
  }
  if (p != 0) {
    auto m = sys.cell_map->power_mod(p, sys.site.q());
    for (auto& v : y.values()) v = ToralAutomorphism::apply_matrix(m, v, sys.site.q(), sys.site.rank());
  }
  if (x.klass) {
    std::int64_t per = sys.restriction ? sys.restriction->lambda.period : 1;
    y.klass = SiteSpace::mod(*x.klass - a[0], per);
  }
  return y;
}

namespace detail {
// Cache of site-map powers, for tight loops over window points.
class PowerCache {
 public:
  PowerCache(const System& sys) : sys_(sys) {}
  SiteValue map(std::int64_t p, const SiteValue& v) {
    if (p == 0 || !sys_.cell_map) return v;
    auto it = powers_.find(p);
    if (it == powers_.end())
      it = powers_.emplace(p, sys_.cell_map->power_mod(p, sys_.site.q())).first;
    return ToralAutomorphism::apply_matrix(it->second, v, sys_.site.q(), sys_.site.rank());
  }

 private:
  const System& sys_;
  std::map<std::int64_t, ToralAutomorphism::Matrix> powers_;
};
}  // namespace detail

// sup over u in the window of the site distance between (T^u x)_0 and
// (T^u y)_0. Exact rational; requires a rational site metric.
inline Rational window_metric(const System& sys, const std::vector<LatticeVector>& window,
                              const Config& x, const Config& y) {
  if (!sys.site.has_rational_distance())
    throw precondition_failed("window metric needs a rational site distance");
  detail::PowerCache cache(sys);
  Rational best(0);
  for (const auto& u : window) {
    Cell c = sys.shift_of(u);
    std::int64_t p = sys.power_of(u);
    if (!x.contains(c) || !y.contains(c))
      throw insufficient_margin("window point " + std::to_string(c[0]) + "," +
                                std::to_string(c[1]) + " beyond the known boxes");
    Rational d = sys.site.distance(cache.map(p, x.at(c)), cache.map(p, y.at(c)));
    if (best < d) best = d;
  }
  return best;
}

inline Rational window_metric(const System& sys, const Window& w, const Config& x,
                              const Config& y) {
  return window_metric(sys, window_points(w), x, y);
}

// Sum over n of 2^{-|n|} d(x_n, y_n) for rank-1 domains, reported as an
// interval: the exact partial sum over the shared box [-N, N], plus the
// worst-case unseen tail 2^{1-N} diam.
inline RationalInterval weighted_series_metric(const System& sys, const Config& x,
                                               const Config& y) {
  if (x.box().s != 1 || !(x.box() == y.box()))
    throw precondition_failed("weighted series needs configs on a shared rank-1 box");
  std::int64_t n = x.box().hi[0];
  if (x.box().lo[0] != -n || n < 0)
    throw precondition_failed("weighted series box must be symmetric [-N, N]");
  if (n > 48) throw precondition_failed("series window too deep for exact dyadic weights");
  if (!sys.site.has_rational_distance())
    throw precondition_failed("weighted series needs a rational site distance");
  Rational sum(0);
  for (std::int64_t i = -n; i <= n; ++i) {
    Rational d = sys.site.distance(x.at({i, 0}), y.at({i, 0}));
    if (!d.is_zero()) sum = sum + d * Rational::dyadic(-int(i < 0 ? -i : i));
  }
  Rational tail = Rational::dyadic(1 - int(n)) * sys.site.diameter();
  return RationalInterval{sum, sum + tail};
}

// Rule check at one placement; offset is the position of shape cell (0,0).
inline bool rule_holds_at(const System& sys, const Config& c, const Cell& offset) {
  if (sys.linear_rule) {
    const auto& r = *sys.linear_rule;
    std::int64_t acc = 0;
    for (size_t i = 0; i < r.shape.size(); ++i) {
      Cell cell{offset[0] + r.shape[i][0], offset[1] + r.shape[i][1]};
      acc += r.coeffs[i] * c.at(cell).c[0];
    }
    return SiteSpace::mod(acc, sys.site.q()) == 0;
  }
  if (sys.forbidden_rule) {
    const auto& r = *sys.forbidden_rule;
    for (const auto& w : r.words) {
      bool match = true;
      for (size_t i = 0; i < r.shape.size() && match; ++i) {
        Cell cell{offset[0] + r.shape[i][0], offset[1] + r.shape[i][1]};
        match = c.at(cell) == w[i];
      }
      if (match) return false;
    }
  }
  return true;
}

// Legality of all placements fully inside the config's box.
inline bool is_legal(const System& sys, const Config& c) {
  if (!sys.has_rule() || c.box().s == 0) return true;
  Cell ext_lo{0, 0}, ext_hi{0, 0};
  const auto& shape = sys.linear_rule ? sys.linear_rule->shape : sys.forbidden_rule->shape;
  for (const auto& sc : shape)
    for (int ax = 0; ax < 2; ++ax) {
      ext_lo[ax] = std::min(ext_lo[ax], sc[ax]);
      ext_hi[ax] = std::max(ext_hi[ax], sc[ax]);
    }
  const Box& b = c.box();
  for (std::int64_t i0 = b.lo[0] - ext_lo[0]; i0 + ext_hi[0] <= b.hi[0]; ++i0) {
    if (b.s >= 2) {
      for (std::int64_t i1 = b.lo[1] - ext_lo[1]; i1 + ext_hi[1] <= b.hi[1]; ++i1)
        if (!rule_holds_at(sys, c, {i0, i1})) return false;
    } else {
      if (!rule_holds_at(sys, c, {i0, 0})) return false;
    }
  }
  return true;
}

// ---- Builders ------------------------------------------------------------

inline System full_shift(SiteSpace site, int k) {
  System s;
  s.name = "full-shift";
  s.k = k;
  s.s = k;
  s.site = site;
  for (int i = 0; i < k; ++i) {
    Generator g;
    g.shift[i] = 1;
    s.generators.push_back(g);
  }
  return s;
}

inline System golden_mean_shift() {
  System s = full_shift(SiteSpace::alphabet(2), 1);
  s.name = "golden-mean";
  ForbiddenRule r;
  r.shape = {{0, 0}, {1, 0}};
  r.words = {{site_value(1), site_value(1)}};
  s.forbidden_rule = r;
  return s;
}

// Z^2 subshift over the quantized circle cut out by the three-cell relation
// 3*x(m,n) + x(m+1,n) + x(m,n+1) = 0 in (1/q)Z/Z.
inline System build_example_1_3(std::int64_t q) {
  if (q < 2) throw precondition_failed("need q >= 2");
  System s = full_shift(SiteSpace::torus(1, q), 2);
  s.name = "three-cell-relation";
  LinearRule r;
  r.shape = {{0, 0}, {1, 0}, {0, 1}};
  r.coeffs = {3, 1, 1};
  s.linear_rule = r;
  return s;
}

// Z^2 action on site^Z: T1 the shift, T2 the cellwise site automorphism.
inline System product_shift(SiteSpace site, ToralAutomorphism h, const std::string& name = "product-shift") {
  if (site.kind() != SiteSpace::Kind::torus || site.rank() != h.rank())
    throw precondition_failed("cellwise map rank must match the torus site");
  System s;
  s.name = name;
  s.k = 2;
  s.s = 1;
  s.site = site;
  Generator shift;
  shift.shift[0] = 1;
  Generator cell;
  cell.cell_power = 1;
  s.generators = {shift, cell};
  s.cell_map = std::move(h);
  return s;
}

// Rank-1 action by a cellwise map alone (no shift): T = site automorphism, or
// the identity when the matrix is I. The domain is a single cell.
inline System cellwise_system(SiteSpace site, std::optional<ToralAutomorphism> h) {
  System s;
  s.name = "cellwise";
  s.k = 1;
  s.s = 0;
  s.site = site;
  Generator g;
  g.cell_power = h ? 1 : 0;
  s.generators = {g};
  s.cell_map = std::move(h);
  return s;
}

inline void check_frozen_invariant(const System& s) {
  const auto& rest = *s.restriction;
  if (rest.frozen.empty()) throw precondition_failed("frozen value set must be nonempty");
  if (!s.cell_map) return;
  for (const auto& v : rest.frozen) {
    SiteValue w = s.cell_map->apply(v, s.site.q());
    bool found = false;
    for (const auto& u : rest.frozen) found = found || u == w;
    if (!found) throw precondition_failed("frozen value set is not invariant under the site map");
  }
}

// Restriction of a product system: for some offset l, every cell with axis-0
// coordinate outside lambda + l takes values in the frozen set. lambda must
// be periodic; patterns on finite windows are the union over offset classes.
inline System build_restricted_Y(System base, IndexSpec lambda, std::vector<SiteValue> frozen) {
  if (lambda.kind != IndexSpec::Kind::periodic)
    throw precondition_failed("restrictions need a periodic support spec");
  base.name += "-restricted";
  base.restriction = Restriction{std::move(lambda), std::move(frozen)};
  check_frozen_invariant(base);
  return base;
}

// The symbolic variant: a Z^2 subshift over a finite alphabet where whole
// columns outside the support are frozen. Equivalent to restricting the
// product of the full alphabet shift with itself.
inline System build_restricted_symbolic(std::int64_t alphabet, IndexSpec lambda,
                                        std::vector<SiteValue> frozen) {
  System s = full_shift(SiteSpace::alphabet(alphabet), 2);
  s.name = "restricted-columns";
  if (lambda.kind != IndexSpec::Kind::periodic)
    throw precondition_failed("restrictions need a periodic support spec");
  s.restriction = Restriction{std::move(lambda), std::move(frozen)};
  check_frozen_invariant(s);
  return s;
}

}  // namespace meandim
