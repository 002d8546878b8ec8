#pragma once

// Expansivity certificates and the machinery that feeds on them: the uniform
// agreement modulus, boundary-window gaps, coding constants for sub-actions,
// and the boundary-refined cover bound on window dimension.
//
// All distances here use the truncated weighted-series metric: the exact
// partial sum of 2^{-|n|} d(x_n, y_n) over |n| <= depth, with the unseen tail
// bounded in closed form. Certificates only claim what the truncation can
// certify.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "meandim/counting.hpp"
#include "meandim/metric.hpp"
#include "meandim/patterns.hpp"
#include "meandim/util.hpp"

namespace meandim {

inline constexpr std::int64_t kDefaultSeriesDepth = 12;

class gap_collapse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class not_found_within : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything the full series can add beyond the truncated box [-W, W]^s.
inline Rational series_tail_bound(const System& sys, std::int64_t depth) {
  if (depth < 1 || depth > 48) throw precondition_failed("series depth must be in [1, 48]");
  Rational diam = sys.site.diameter();
  if (sys.s == 0) return Rational(0);
  if (sys.s == 1) return Rational::dyadic(1 - depth) * diam;
  // sum over |n| > W of 2^{-|n|}: ring |n| = j has 8j points, each 2^{-j}
  // sum_{j>W} 8j 2^{-j} = 8 (W+2) 2^{-W}
  return Rational(8 * (depth + 2)) * Rational::dyadic(-depth) * diam;
}

// sup over the window of the truncated series distance between T^u x and
// T^u y. Exact: accumulates site-distance numerators over the common
// denominator q 2^depth.
inline Rational series_window_distance(const System& sys, const Config& x, const Config& y,
                                       const std::vector<LatticeVector>& window,
                                       std::int64_t depth = kDefaultSeriesDepth) {
  if (depth < 1 || depth > 48) throw precondition_failed("series depth must be in [1, 48]");
  if (!sys.site.has_rational_distance())
    throw precondition_failed("series metric needs a rational site distance");
  const std::int64_t d0 =
      sys.site.kind() == SiteSpace::Kind::torus ? sys.site.q() : std::int64_t(1);
  detail::PowerCache cache(sys);
  // numerators of d(h^p x_c, h^p y_c) over d0, memoized per power
  std::map<std::int64_t, std::map<Cell, std::int64_t>> memo;
  auto site_num = [&](std::int64_t p, const Cell& c) -> std::int64_t {
    auto& m = memo[p];
    auto it = m.find(c);
    if (it != m.end()) return it->second;
    Rational d = sys.site.distance(cache.map(p, x.at(c)), cache.map(p, y.at(c)));
    std::int64_t num = d.num() * (d0 / d.den());
    m.emplace(c, num);
    return num;
  };
  __int128 best = 0;
  for (const auto& u : window) {
    Cell a = sys.shift_of(u);
    std::int64_t p = sys.power_of(u);
    __int128 acc = 0;
    if (sys.s == 0) {
      acc = __int128(site_num(p, {0, 0})) << depth;
    } else if (sys.s == 1) {
      for (std::int64_t n = -depth; n <= depth; ++n)
        acc += __int128(site_num(p, {a[0] + n, 0})) << (depth - std::abs(n));
    } else {
      for (std::int64_t n0 = -depth; n0 <= depth; ++n0)
        for (std::int64_t n1 = -depth; n1 <= depth; ++n1) {
          std::int64_t e = std::max(std::abs(n0), std::abs(n1));
          acc += __int128(site_num(p, {a[0] + n0, a[1] + n1})) << (depth - e);
        }
    }
    best = std::max(best, acc);
  }
  return Rational::make(best, __int128(d0) << depth);
}

inline Rational series_distance(const System& sys, const Config& x, const Config& y,
                                std::int64_t depth = kDefaultSeriesDepth) {
  LatticeVector origin = LatticeVector::Zero(sys.k);
  return series_window_distance(sys, x, y, {origin}, depth);
}

// ---- Expansivity certificates ----------------------------------------------

enum class ExpansivityOutcome { certified, counterexample_found, inconclusive };

struct ExpansivityCertificate {
  Rational c;
  enum class Mode { analytic, empirical } mode = Mode::analytic;
  ExpansivityOutcome outcome = ExpansivityOutcome::inconclusive;
  Rational margin;      // separation excess beyond 2c when certified
  std::int64_t n_max = 0;
  std::optional<std::pair<Config, Config>> counterexample;

  bool certified() const { return outcome == ExpansivityOutcome::certified; }
  Rational band_low() const { return c; }
  Rational band_high() const { return c * Rational(2); }
};

// Default constant: 3/8 of the smallest positive site distance, so the band
// [c, 2c] sits strictly below the gap.
inline Rational default_expansivity_constant(const System& sys) {
  return sys.site.gap() * Rational(3, 8);
}

namespace detail {

// Smallest over nonzero value differences of the orbit-sup distance
// max_p d(h^p a, h^p b). For systems without a rule this is the exact
// separation floor: any two distinct configurations separate at least this
// far under the full action.
inline std::optional<std::pair<Rational, SiteValue>> orbit_separation_floor(const System& sys) {
  const auto& site = sys.site;
  if (site.kind() == SiteSpace::Kind::alphabet || !sys.cell_map) {
    // distances are orbit-invariant: the floor is the site gap, realized by
    // the value one flat step from zero
    return std::make_pair(site.gap(), site.value_at(1));
  }
  const std::int64_t q = site.q();
  std::int64_t total = site.count();
  if (total > (1 << 16)) return std::nullopt;
  std::int64_t ord = sys.cell_map->order_mod(q, 1 << 20);
  SiteValue zero{};
  std::optional<Rational> best;
  SiteValue best_delta{};
  for (std::int64_t flat = 1; flat < total; ++flat) {
    SiteValue delta = site.value_at(flat);
    Rational sup(0);
    for (std::int64_t p = 0; p < ord; ++p) {
      Rational d = site.distance(sys.cell_map->apply(delta, q, p), zero);
      if (sup < d) sup = d;
    }
    if (!best || sup < *best) {
      best = sup;
      best_delta = delta;
    }
  }
  return std::make_pair(*best, best_delta);
}

// Pair of legal configurations on [-n, n]^s equal everywhere except the
// origin cell, where they differ by delta.
inline std::pair<Config, Config> single_cell_pair(const System& sys, std::int64_t n,
                                                  const SiteValue& delta) {
  Box box = centered_box(sys.s, n);
  SiteValue base{};
  if (sys.site.kind() == SiteSpace::Kind::alphabet) base = sys.site.value_at(0);
  Config x(box, base);
  Config y = x;
  Cell target{0, 0};
  if (sys.restriction) {
    const auto& rest = *sys.restriction;
    std::int64_t l = -1;
    for (std::int64_t cand = 0; cand < rest.lambda.period && l < 0; ++cand)
      if (rest.lambda.contains(-cand)) l = cand;
    if (l < 0) throw precondition_failed("restriction has no support classes");
    x.klass = l;
    y.klass = l;
    for (const auto& cell : box_cells(box))
      if (!rest.lambda.contains(cell[0] - l)) {
        x.at(cell) = rest.frozen[0];
        y.at(cell) = rest.frozen[0];
      }
  }
  if (sys.site.kind() == SiteSpace::Kind::torus) {
    SiteValue v = y.at(target);
    for (int r = 0; r < sys.site.rank(); ++r) v.c[r] = SiteSpace::mod(v.c[r] + delta.c[r], sys.site.q());
    y.at(target) = v;
  } else {
    y.at(target) = delta;
  }
  return {std::move(x), std::move(y)};
}

}  // namespace detail

// Certify d^T_{Z^k}(x, y) > 2c for all distinct pairs, or exhibit a pair that
// stays within 2c over the [-n_max, n_max]^k window. Rule-free systems get an
// exact verdict from the orbit separation floor; constrained systems fall
// back to a pair scan over sampled legal configurations.
inline ExpansivityCertificate certify_expansive(const System& sys, const Rational& c,
                                                std::int64_t n_max,
                                                std::uint64_t seed = 1) {
  if (!(Rational(0) < c)) throw precondition_failed("expansivity constant must be positive");
  ExpansivityCertificate cert;
  cert.c = c;
  cert.n_max = n_max;
  const Rational two_c = c * Rational(2);
  const Rational gap = sys.site.gap();

  if (!sys.has_rule()) {
    auto floor = detail::orbit_separation_floor(sys);
    if (floor) {
      auto [sep, delta] = *floor;
      if (two_c < sep) {
        cert.mode = ExpansivityCertificate::Mode::analytic;
        cert.outcome = ExpansivityOutcome::certified;
        cert.margin = sep - two_c;
        return cert;
      }
      cert.mode = ExpansivityCertificate::Mode::analytic;
      cert.outcome = ExpansivityOutcome::counterexample_found;
      cert.counterexample = detail::single_cell_pair(sys, std::max<std::int64_t>(n_max, 1), delta);
      return cert;
    }
  }

  if (two_c < gap) {
    // any differing cell, brought to the origin by some window point, shows
    // site distance >= gap
    cert.mode = ExpansivityCertificate::Mode::analytic;
    cert.outcome = ExpansivityOutcome::certified;
    cert.margin = gap - two_c;
    return cert;
  }

  // empirical scan over legal configurations on the window box
  cert.mode = ExpansivityCertificate::Mode::empirical;
  const std::int64_t depth = std::min<std::int64_t>(kDefaultSeriesDepth, std::max<std::int64_t>(n_max / 2, 1));
  const std::int64_t reach = std::max<std::int64_t>(n_max - depth, 0);
  Box box = centered_box(sys.s, n_max);
  std::vector<Config> pool;
  try {
    pool = pattern_list(sys, box, 512);
  } catch (const cap_exceeded&) {
    DetRng rng(seed);
    for (int t = 0; t < 256; ++t) pool.push_back(sample_config(sys, box, rng));
  }
  auto window = window_points(Window::box(reach, sys.k));
  Rational tail = series_tail_bound(sys, depth);
  for (size_t i = 0; i < pool.size(); ++i)
    for (size_t j = i + 1; j < pool.size(); ++j) {
      if (pool[i] == pool[j]) continue;
      Rational lo = series_window_distance(sys, pool[i], pool[j], window, depth);
      if (lo + tail <= two_c) {
        cert.outcome = ExpansivityOutcome::counterexample_found;
        cert.counterexample = std::make_pair(pool[i], pool[j]);
        return cert;
      }
    }
  cert.outcome = ExpansivityOutcome::inconclusive;
  return cert;
}

// ---- Agreement modulus ------------------------------------------------------

// Smallest m with: window distance over [-m, m]^k within 2c forces full
// series distance below eps. With 2c under the site gap, window agreement
// pins every cell of [-m, m]^s, so the series is at most its tail there.
inline std::int64_t modulus_of_expansivity(const System& sys, const ExpansivityCertificate& cert,
                                           const Rational& eps, std::int64_t m_max = 64) {
  if (!cert.certified()) throw precondition_failed("modulus needs a certified system");
  if (!(Rational(0) < eps)) throw precondition_failed("eps must be positive");
  if (sys.s == 0) return 1;
  if (!(cert.band_high() < sys.site.gap()))
    throw precondition_failed("modulus needs 2c below the site gap");
  for (std::int64_t m = 1; m <= std::min<std::int64_t>(m_max, 48); ++m)
    if (series_tail_bound(sys, m) < eps) return m;
  throw not_found_within("no agreement modulus within m_max = " + std::to_string(m_max));
}

struct ModulusTable {
  std::vector<std::pair<Rational, std::int64_t>> rows;  // eps -> m
};

inline ModulusTable modulus_table(const System& sys, const ExpansivityCertificate& cert,
                                  const std::vector<Rational>& eps_ladder,
                                  std::int64_t m_max = 64) {
  ModulusTable t;
  for (const auto& eps : eps_ladder)
    t.rows.emplace_back(eps, modulus_of_expansivity(sys, cert, eps, m_max));
  return t;
}

// ---- Boundary gap -----------------------------------------------------------

struct BoundaryGap {
  Rational delta;
  bool band_empty = true;
  std::int64_t n_lo = 0;
  std::int64_t n_hi = 0;
  std::int64_t pairs_in_band = 0;
  std::int64_t pairs_tested = 0;
};

// Candidate pairs whose window distance can land inside [c, 2c]: pairs that
// agree on the core box [-N, N]^s and differ somewhere in the margin, so
// every window point sees the difference only at a discount. Linear-rule
// systems build the second leg as x + z with z a legal difference vanishing
// on the core.
inline std::vector<std::pair<Config, Config>> band_pair_candidates(const System& sys,
                                                                   std::int64_t N,
                                                                   std::int64_t depth,
                                                                   std::int64_t count,
                                                                   DetRng& rng) {
  if (sys.s < 1) throw precondition_failed("band pairs need a positive domain rank");
  if (sys.forbidden_rule)
    throw precondition_failed("band pairs are not supported for forbidden-word rules");
  Box margin = centered_box(sys.s, N + depth);
  Box core = centered_box(sys.s, N);
  std::vector<std::pair<Config, Config>> out;

  std::optional<LinearStructure> st;
  std::vector<size_t> safe;
  if (sys.linear_rule) {
    st = linear_structure(sys, margin);
    auto dep = core_dependent_free_cells(sys, *st, core);
    std::set<size_t> depset(dep.begin(), dep.end());
    for (size_t fi : st->free_cells)
      if (!depset.count(fi)) safe.push_back(fi);
    if (safe.empty()) throw precondition_failed("no free cells outside the core cone");
  }

  const std::int64_t m = sys.site.count();
  for (std::int64_t t = 0; t < count; ++t) {
    Config x = sample_config(sys, margin, rng);
    Config y = x;
    if (sys.linear_rule) {
      Config z(margin, site_value(0));
      if (t % 2 == 0) {
        size_t fi = safe[rng.below(safe.size())];
        z.at(st->cells[fi]) = sys.site.value_at(1 + std::int64_t(rng.below(std::uint64_t(m - 1))));
      } else {
        for (size_t fi : safe)
          if (rng.below(8) == 0)
            z.at(st->cells[fi]) = sys.site.value_at(std::int64_t(rng.below(std::uint64_t(m))));
      }
      propagate_linear(sys, *st, z);
      y = add_configs(sys, x, z);
    } else {
      std::vector<Cell> outside;
      for (const auto& cell : detail::box_cells(margin))
        if (!core.contains(cell)) outside.push_back(cell);
      auto mutate = [&](const Cell& cell) {
        if (sys.restriction) {
          const auto& rest = *sys.restriction;
          bool support = rest.lambda.contains(cell[0] - *y.klass);
          y.at(cell) = support ? sys.site.value_at(std::int64_t(rng.below(std::uint64_t(m))))
                               : rest.frozen[rng.below(rest.frozen.size())];
        } else {
          y.at(cell) = sys.site.value_at(std::int64_t(rng.below(std::uint64_t(m))));
        }
      };
      if (t % 2 == 0) {
        mutate(outside[rng.below(outside.size())]);
      } else {
        for (const auto& cell : outside)
          if (rng.below(8) == 0) mutate(cell);
      }
    }
    if (!(y == x)) out.emplace_back(std::move(x), std::move(y));
  }
  return out;
}

// Least boundary-window distance among pairs certainly inside the band
// [c, 2c] at window radius N. A vanishing boundary distance for an in-band
// pair means the truncation cannot see what the band saw: gap_collapse.
inline BoundaryGap boundary_gap_on_pairs(const System& sys, const ExpansivityCertificate& cert,
                                         std::int64_t N,
                                         const std::vector<std::pair<Config, Config>>& pairs,
                                         std::int64_t depth = kDefaultSeriesDepth) {
  if (!cert.certified()) throw precondition_failed("boundary gap needs a certified system");
  auto box_pts = window_points(Window::box(N, sys.k));
  auto bnd_pts = window_points(Window::boundary(N, sys.k));
  const Rational tail = series_tail_bound(sys, depth);
  BoundaryGap out;
  out.n_lo = out.n_hi = N;
  for (const auto& [x, y] : pairs) {
    ++out.pairs_tested;
    Rational lo = series_window_distance(sys, x, y, box_pts, depth);
    if (!(cert.band_low() <= lo) || !(lo + tail <= cert.band_high())) continue;
    Rational b = series_window_distance(sys, x, y, bnd_pts, depth);
    if (b.is_zero())
      throw gap_collapse("boundary distance vanished for an in-band pair at N = " +
                         std::to_string(N));
    if (out.band_empty || b < out.delta) out.delta = b;
    out.band_empty = false;
    ++out.pairs_in_band;
  }
  return out;
}

inline BoundaryGap boundary_gap(const System& sys, const ExpansivityCertificate& cert,
                                std::int64_t n_lo, std::int64_t n_hi,
                                std::int64_t pairs_per_n = 64, std::uint64_t seed = 1,
                                std::int64_t depth = kDefaultSeriesDepth) {
  if (n_lo < 1 || n_hi < n_lo) throw precondition_failed("need 1 <= n_lo <= n_hi");
  DetRng rng(seed);
  BoundaryGap agg;
  agg.n_lo = n_lo;
  agg.n_hi = n_hi;
  for (std::int64_t N = n_lo; N <= n_hi; ++N) {
    auto pairs = band_pair_candidates(sys, N, depth, pairs_per_n, rng);
    auto one = boundary_gap_on_pairs(sys, cert, N, pairs, depth);
    agg.pairs_tested += one.pairs_tested;
    agg.pairs_in_band += one.pairs_in_band;
    if (!one.band_empty && (agg.band_empty || one.delta < agg.delta)) {
      agg.delta = one.delta;
      agg.band_empty = false;
    }
  }
  return agg;
}

// ---- Coding constant --------------------------------------------------------

struct CodingConstant {
  std::int64_t K = 0;
  Rational eps;                  // uniform-continuity input scale for the sub-action
  std::int64_t lipschitz = 0;    // worst generator stretch used to derive eps
  std::int64_t pairs_tested = 0;
  std::int64_t violations = 0;   // window implication failures; must be zero
};

// Constant K with: T-window distance within 2c over [-K n, K n]^k forces
// R-window distance within 2c over [-n, n]^{k_R}, for the sub-action R
// spanned by the chosen generators. eps comes from the generators' series
// Lipschitz bounds, K from the agreement modulus at eps, and the implication
// is then checked on sampled pairs.
inline CodingConstant coding_constant(const System& sys, const std::vector<int>& r_generators,
                                      const ExpansivityCertificate& cert,
                                      std::int64_t n_max = 4, std::int64_t pairs = 200,
                                      std::uint64_t seed = 1,
                                      std::int64_t depth = kDefaultSeriesDepth) {
  if (!cert.certified()) throw precondition_failed("coding constant needs a certified system");
  CodingConstant out;
  if (r_generators.empty()) {
    out.K = 1;
    out.eps = cert.band_high();
    out.lipschitz = 1;
    return out;
  }
  for (int g : r_generators)
    if (g < 0 || g >= sys.k) throw precondition_failed("generator index out of range");

  // series stretch of one generator step: shifting the weight profile by one
  // doubles it at worst; a cellwise map stretches by its sup-norm bound
  std::int64_t lip = 1;
  for (int g : r_generators) {
    const auto& gen = sys.generators[size_t(g)];
    std::int64_t shift_norm = std::max(std::abs(gen.shift[0]), std::abs(gen.shift[1]));
    std::int64_t l = shift_norm > 0 ? 2 : 1;
    if (gen.cell_power != 0 && sys.cell_map) l = std::max(l, sys.cell_map->lipschitz_sup_bound());
    lip = std::max(lip, l);
  }
  out.lipschitz = lip;
  out.eps = cert.band_high() / Rational(lip);
  out.K = modulus_of_expansivity(sys, cert, out.eps);

  // implication scan: window hypothesis at radius K n, conclusion at n over
  // the sub-action lattice
  DetRng rng(seed);
  const std::int64_t span = out.K * n_max + depth;
  Box margin = centered_box(sys.s, span);
  for (std::int64_t t = 0; t < pairs; ++t) {
    Config x = sample_config(sys, margin, rng);
    Config y = x;
    // mix: untouched copies never differ; mutate half the time near the rim,
    // half the time anywhere
    if (t % 4 != 0) {
      auto cells = detail::box_cells(margin);
      std::int64_t flips = 1 + std::int64_t(rng.below(3));
      for (std::int64_t f = 0; f < flips; ++f) {
        const Cell& cell = cells[rng.below(cells.size())];
        y.at(cell) = sys.site.value_at(std::int64_t(rng.below(std::uint64_t(sys.site.count()))));
      }
    }
    for (std::int64_t n = 1; n <= n_max; ++n) {
      auto t_window = window_points(Window::box(out.K * n, sys.k));
      Rational hyp = series_window_distance(sys, x, y, t_window, depth);
      ++out.pairs_tested;
      if (!(hyp <= cert.band_high())) continue;
      // R-window points: integer combinations of the chosen generators
      std::vector<LatticeVector> r_window;
      std::vector<std::int64_t> coeff(r_generators.size(), -n);
      for (;;) {
        LatticeVector u = LatticeVector::Zero(sys.k);
        for (size_t i = 0; i < r_generators.size(); ++i) u[r_generators[i]] = coeff[i];
        r_window.push_back(u);
        size_t ax = 0;
        while (ax < coeff.size() && coeff[ax] == n) coeff[ax++] = -n;
        if (ax == coeff.size()) break;
        ++coeff[ax];
      }
      Rational concl = series_window_distance(sys, x, y, r_window, depth);
      if (!(concl <= cert.band_high())) ++out.violations;
    }
  }
  return out;
}

// ---- Window dimension upper bound via boundary refinement -------------------

struct WidimUpperReport {
  std::int64_t formula_bound = 0;    // 2^k (2N+1)^{k-1} L
  std::int64_t constructed_order = 0;
  std::int64_t base_cover_size = 0;
  Rational mesh;                     // of the refined cover, in the window metric
};

// Builds a mesh-delta cover of the sample, refines it by pulling back along
// every boundary window point, splits the result into chain components at c,
// and checks the refined cover has window-metric mesh at most 2c with order
// at most 2^k (2N+1)^{k-1} L.
inline WidimUpperReport widim_upper_via_boundary(const System& sys,
                                                 const ExpansivityCertificate& cert,
                                                 std::int64_t N, std::int64_t max_cover_size,
                                                 const std::vector<Config>& sample,
                                                 const Rational& delta,
                                                 std::int64_t depth = kDefaultSeriesDepth) {
  if (!cert.certified()) throw precondition_failed("widim bound needs a certified system");
  if (sample.size() < 2) throw precondition_failed("need at least two sample points");
  auto bnd_pts = window_points(Window::boundary(N, sys.k));
  auto box_pts = window_points(Window::box(N, sys.k));

  // close the sample under the boundary maps
  const int n = int(sample.size());
  std::vector<std::vector<int>> image_of(bnd_pts.size(), std::vector<int>(sample.size()));
  std::vector<Config> all(sample.begin(), sample.end());
  for (size_t ui = 0; ui < bnd_pts.size(); ++ui)
    for (size_t i = 0; i < sample.size(); ++i) {
      Config img = apply(sys, bnd_pts[ui], sample[i]);
      size_t found = all.size();
      for (size_t j = 0; j < all.size(); ++j)
        if (all[j].box() == img.box() && all[j].values() == img.values()) {
          found = j;
          break;
        }
      if (found == all.size()) all.push_back(std::move(img));
      image_of[ui][i] = int(found);
    }

  // base metric table on the closed sample
  DistanceTable<Rational> base(Eigen::Index(all.size()));
  LatticeVector origin = LatticeVector::Zero(sys.k);
  for (size_t i = 0; i < all.size(); ++i)
    for (size_t j = i + 1; j < all.size(); ++j)
      base.set(Eigen::Index(i), Eigen::Index(j),
               series_window_distance(sys, all[i], all[j], {origin}, depth));

  // mesh-delta cover of the closed sample
  auto merges = complete_linkage(base);
  Cover v = linkage_cover_at(base, merges, delta);
  if (std::int64_t(v.sets.size()) > max_cover_size)
    throw precondition_failed("no cover of the requested size at mesh delta");

  // pull back along each boundary point and join
  Cover joined = Cover::trivial(n);
  for (size_t ui = 0; ui < bnd_pts.size(); ++ui) {
    Cover pulled;
    pulled.n_points = n;
    for (const auto& set : v.sets) {
      std::vector<int> pre;
      for (int i = 0; i < n; ++i)
        if (std::find(set.begin(), set.end(), image_of[ui][size_t(i)]) != set.end())
          pre.push_back(i);
      if (!pre.empty()) pulled.sets.push_back(std::move(pre));
    }
    joined = cover_join(joined, pulled);
  }

  // window metric table on the original sample
  DistanceTable<Rational> wm(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      wm.set(i, j, series_window_distance(sys, sample[size_t(i)], sample[size_t(j)], box_pts, depth));

  Cover refined = chain_component_split(joined, wm, cert.band_low());
  Rational mesh = cover_mesh(refined, wm);
  if (!(mesh <= cert.band_high()))
    throw precondition_failed("refined cover mesh exceeded 2c: " + mesh.str());

  WidimUpperReport rep;
  rep.base_cover_size = std::int64_t(v.sets.size());
  rep.mesh = mesh;
  rep.constructed_order = cover_order(refined) + 1;  // sets per point
  std::int64_t side = 2 * N + 1;
  std::int64_t pow_side = 1;
  for (int i = 0; i < sys.k - 1; ++i) pow_side *= side;
  rep.formula_bound = (std::int64_t(1) << sys.k) * pow_side * max_cover_size;
  if (rep.constructed_order > rep.formula_bound)
    throw precondition_failed("constructed order exceeded the boundary-refinement bound");
  return rep;
}

}  // namespace meandim
