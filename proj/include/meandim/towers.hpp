#pragma once

// Staged tower constructions over a quantized torus. A subshift is refined
// stage by stage: stage n forces a suffix of net blocks inside a window of
// L_{n+1} cells, each cell holding three stage-n windows. The combinatorial
// side (free index sets, their running density) is exact integer arithmetic;
// the geometric side (nets, stage patterns, recurrence gaps) works on sampled
// finite windows. Variants differ in the forced-suffix template:
//   sec5         one cell per net member,
//   sec5-remark  each member repeated b times,
//   sec6         each member filling a^2 cells as a ramp of automorphism
//                powers, a cells per power.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "meandim/dimension.hpp"

namespace meandim {

enum class TowerVariant { sec5, sec5_remark, sec6 };

inline std::string to_string(TowerVariant v) {
  switch (v) {
    case TowerVariant::sec5:
      return "sec5";
    case TowerVariant::sec5_remark:
      return "sec5-remark";
    default:
      return "sec6";
  }
}

// L[0] must be 1; L[n+1] is the cell count of the stage-n window. b[n] is the
// net size consumed by stage n, and a[n] (sec6 only) a common period of the
// stage-n net members, a[n] >= b[n].
struct TowerParams {
  TowerVariant variant = TowerVariant::sec5;
  std::vector<std::int64_t> L;
  std::vector<std::int64_t> b;
  std::vector<std::int64_t> a;

  int stages() const { return int(L.size()) - 1; }
};

inline void validate_tower_params(const TowerParams& p) {
  if (p.L.empty() || p.L[0] != 1)
    throw precondition_failed("tower params need L[0] == 1");
  if (std::int64_t(p.b.size()) + 1 < std::int64_t(p.L.size()))
    throw precondition_failed("tower params need one b per stage");
  if (p.variant == TowerVariant::sec6 &&
      std::int64_t(p.a.size()) + 1 < std::int64_t(p.L.size()))
    throw precondition_failed("sec6 tower params need one a per stage");
  for (std::size_t n = 0; n + 1 < p.L.size(); ++n) {
    const std::int64_t L = p.L[n + 1];
    const std::int64_t b = p.b[n];
    if (L < 1 || b < 1)
      throw precondition_failed("tower stages need L >= 1 and b >= 1");
    if (L > (std::int64_t(1) << 30) || b > (std::int64_t(1) << 20))
      throw precondition_failed("tower stage parameters out of range");
    switch (p.variant) {
      case TowerVariant::sec5:
        if (3 * L - 3 * b < 1)
          throw precondition_failed("sec5 stage needs 3L - 3b >= 1");
        break;
      case TowerVariant::sec5_remark:
        if (n + 1 >= 40 || L <= (std::int64_t(1) << (n + 1)) * b * b)
          throw precondition_failed("sec5-remark stage needs L > 2^{n+1} b^2");
        break;
      case TowerVariant::sec6: {
        const std::int64_t a = p.a[n];
        if (a < b) throw precondition_failed("sec6 stage needs a >= b");
        if (a > (std::int64_t(1) << 20))
          throw precondition_failed("tower stage parameters out of range");
        if (3 * L - 3 * a * a * b < 1)
          throw precondition_failed("sec6 stage needs 3L - 3a^2b >= 1");
        break;
      }
    }
  }
}

// Sites covered by the stage-n window: 3^n L_0 ... L_n.
inline std::int64_t span_sites(const TowerParams& p, int n) {
  if (n < 0 || n > p.stages()) throw precondition_failed("tower stage out of range");
  std::int64_t acc = 1;
  for (int k = 0; k <= n; ++k) {
    const std::int64_t f = (k == 0 ? 1 : 3) * p.L[std::size_t(k)];
    if (acc > (std::int64_t(1) << 56) / f)
      throw cap_exceeded("tower span overflows the site cap");
    acc *= f;
  }
  return acc;
}

// Number of stage-n window slots that stay free at stage n+1. The stage-n
// window has 3 L_{n+1} such slots; the forced suffix eats the last 3b (sec5),
// 3b^2 (sec5-remark) or 3a^2b (sec6) of them.
inline std::int64_t stage_multiplier(const TowerParams& p, int n) {
  if (n < 0 || n >= p.stages()) throw precondition_failed("tower stage out of range");
  const std::int64_t L = p.L[std::size_t(n) + 1];
  const std::int64_t b = p.b[std::size_t(n)];
  switch (p.variant) {
    case TowerVariant::sec5:
      return 3 * L - 3 * b;
    case TowerVariant::sec5_remark:
      return 3 * L - 3 * b * b;
    default:
      return 3 * L - 3 * p.a[std::size_t(n)] * p.a[std::size_t(n)] * b;
  }
}

struct FreeIndexSet {
  int stage = 0;
  std::int64_t span = 1;
  std::vector<std::int64_t> indices;  // sorted, within [0, span)
};

inline FreeIndexSet free_index_recursion(const TowerParams& p, int n,
                                         std::int64_t cap = std::int64_t(1) << 22) {
  validate_tower_params(p);
  if (n < 0 || n > p.stages()) throw precondition_failed("tower stage out of range");
  FreeIndexSet out;
  out.indices = {0};
  out.span = 1;
  for (int k = 0; k < n; ++k) {
    const std::int64_t mult = stage_multiplier(p, k);
    const std::int64_t next_span = span_sites(p, k + 1);  // throws before any overflow below
    if (std::int64_t(out.indices.size()) > cap / mult)
      throw cap_exceeded("free index set exceeds the materialization cap");
    std::vector<std::int64_t> next;
    next.reserve(std::size_t(mult) * out.indices.size());
    for (std::int64_t m = 0; m < mult; ++m)
      for (std::int64_t i : out.indices) next.push_back(m * out.span + i);
    out.indices = std::move(next);
    out.span = next_span;
  }
  out.stage = n;
  return out;
}

// |I_n| / (3^n L_0...L_n), computed both from the materialized set and from
// the telescoping product of per-stage survival ratios; the two must agree.
inline Rational free_fraction(const TowerParams& p, int n,
                              std::int64_t cap = std::int64_t(1) << 22) {
  const FreeIndexSet set = free_index_recursion(p, n, cap);
  const Rational by_count(std::int64_t(set.indices.size()), set.span);
  Rational by_product(1);
  for (int k = 0; k < n; ++k)
    by_product *= Rational(stage_multiplier(p, k), 3 * p.L[std::size_t(k) + 1]);
  if (by_count != by_product) throw check_failed("free fraction routes disagree");
  return by_count;
}

struct QuarterDensityReport {
  bool ok = false;
  std::int64_t t_max = 0;
  std::int64_t failing_t = -1;
  // prefix lengths classified by which bound certifies them: below twice a
  // stage span, inside the free multiples of a span, or past them
  std::int64_t case1 = 0;
  std::int64_t case2 = 0;
  std::int64_t case3 = 0;
};

// Exhaustively checks |[0, t) intersect I| > t / 4 for 1 <= t <= t_max, where
// I is the increasing union of the free index sets. Requires sec6 params
// whose free fraction never drops below 1/2; anything weaker is rejected
// instead of silently scanned.
inline QuarterDensityReport quarter_density_check(const TowerParams& p, std::int64_t t_max) {
  validate_tower_params(p);
  if (p.variant != TowerVariant::sec6)
    throw precondition_failed("quarter density is stated for sec6 towers");
  if (t_max < 1) throw precondition_failed("quarter density needs t_max >= 1");
  const int S = p.stages();
  std::vector<std::int64_t> spans(std::size_t(S) + 1);
  for (int k = 0; k <= S; ++k) spans[std::size_t(k)] = span_sites(p, k);
  if (spans[std::size_t(S)] < t_max)
    throw precondition_failed("tower too short: the last span must reach t_max");
  Rational frac(1);
  for (int k = 0; k < S; ++k) {
    frac *= Rational(stage_multiplier(p, k), 3 * p.L[std::size_t(k) + 1]);
    if (frac < Rational(1, 2))
      throw precondition_failed("free fraction drops below 1/2: largeness violated");
  }

  // I intersect [0, t_max), materialized lazily through the recursion
  std::vector<std::int64_t> idx = {0};
  for (int k = 0; k < S; ++k) {
    const std::int64_t mult = stage_multiplier(p, k);
    std::vector<std::int64_t> next;
    for (std::int64_t m = 0; m < mult; ++m) {
      const std::int64_t base = m * spans[std::size_t(k)];
      if (base >= t_max) break;
      for (std::int64_t i : idx) {
        if (base + i >= t_max) break;
        next.push_back(base + i);
      }
    }
    idx = std::move(next);
  }

  QuarterDensityReport rep;
  rep.t_max = t_max;
  rep.ok = true;
  std::size_t ptr = 0;
  int stage = 0;
  for (std::int64_t t = 1; t <= t_max; ++t) {
    while (ptr < idx.size() && idx[ptr] < t) ++ptr;
    while (stage + 1 <= S && spans[std::size_t(stage) + 1] <= t) ++stage;
    if (t < 2 * spans[std::size_t(stage)])
      ++rep.case1;
    else if (stage < S && t <= stage_multiplier(p, stage) * spans[std::size_t(stage)])
      ++rep.case2;
    else
      ++rep.case3;
    if (4 * std::int64_t(ptr) <= t) {
      rep.ok = false;
      rep.failing_t = t;
      break;
    }
  }
  return rep;
}

using BlockPoint = std::vector<SiteValue>;

namespace detail {

inline BlockPoint apply_blockwise(const SiteSpace& site, const ToralAutomorphism& h,
                                  const BlockPoint& v, std::int64_t e) {
  BlockPoint out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = h.apply(v[i], site.q(), e);
  return out;
}

inline Rational block_distance(const SiteSpace& site, const BlockPoint& u, const BlockPoint& v) {
  Rational m(0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Rational d = site.distance(u[i], v[i]);
    if (d > m) m = d;
  }
  return m;
}

}  // namespace detail

struct PeriodicNet {
  std::int64_t block_len = 0;
  std::vector<BlockPoint> members;
  std::vector<std::int64_t> periods;  // orbit length of each member
  std::int64_t common_period = 1;     // lcm of the periods
  Rational mesh{0};                   // max over target of min distance to the net
  std::int64_t target_size = 0;
};

// Greedy cover of the target sample by full orbits under the cellwise
// automorphism: every uncovered target point contributes its whole orbit, so
// the result is exactly invariant. Density is then verified by an exhaustive
// nearest-distance scan. The mesh must exceed half the grid pitch, otherwise
// no grid-valued net can be that dense in the underlying torus.
inline PeriodicNet periodic_net(const SiteSpace& site, const ToralAutomorphism& h,
                                const std::vector<BlockPoint>& target, const Rational& eps,
                                std::int64_t orbit_cap = std::int64_t(1) << 12) {
  if (site.kind() != SiteSpace::Kind::torus)
    throw precondition_failed("periodic nets need a quantized torus site");
  if (!site.has_rational_distance())
    throw precondition_failed("periodic nets need a rational site distance");
  if (target.empty()) throw precondition_failed("net target must be nonempty");
  if (!(eps > Rational(0))) throw precondition_failed("net mesh must be positive");
  if (!(eps * Rational(2 * site.q()) > Rational(1)))
    throw insufficient_margin("mesh within the grid pitch: density unachievable at this quantization");
  const std::int64_t len = std::int64_t(target[0].size());
  if (len < 1) throw precondition_failed("net blocks must hold at least one site");
  for (const auto& t : target)
    if (std::int64_t(t.size()) != len)
      throw precondition_failed("net target blocks must share one length");

  PeriodicNet net;
  net.block_len = len;
  net.target_size = std::int64_t(target.size());
  for (const auto& t : target) {
    bool covered = false;
    for (const auto& m : net.members)
      if (detail::block_distance(site, t, m) < eps) {
        covered = true;
        break;
      }
    if (covered) continue;
    BlockPoint cur = t;
    std::int64_t period = 0;
    const std::size_t first = net.members.size();
    do {
      net.members.push_back(cur);
      cur = detail::apply_blockwise(site, h, cur, 1);
      if (++period > orbit_cap) throw cap_exceeded("net orbit exceeds the cap");
    } while (cur != t);
    for (std::size_t i = first; i < net.members.size(); ++i) net.periods.push_back(period);
  }

  for (const auto& t : target) {
    Rational best(-1);
    for (const auto& m : net.members) {
      const Rational d = detail::block_distance(site, t, m);
      if (best < Rational(0) || d < best) best = d;
    }
    if (!(best < eps)) throw check_failed("net failed the exhaustive density scan");
    if (best > net.mesh) net.mesh = best;
  }
  std::vector<BlockPoint> sorted = net.members;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& m : net.members) {
    const BlockPoint im = detail::apply_blockwise(site, h, m, 1);
    if (!std::binary_search(sorted.begin(), sorted.end(), im))
      throw check_failed("net is not closed under the block automorphism");
  }
  for (std::int64_t q : net.periods) net.common_period = std::lcm(net.common_period, q);
  return net;
}

struct ForcedCell {
  std::int64_t cell = 0;    // window slot in [0, L_{n+1})
  std::int64_t member = 0;  // net member index
  std::int64_t power = 0;   // automorphism power applied to the member
};

struct TowerStage {
  int stage = 0;
  TowerVariant variant = TowerVariant::sec5;
  std::int64_t window_cells = 0;  // L_{n+1}
  PeriodicNet net;
  std::vector<ForcedCell> forced;
  std::int64_t distinct_images = 1;  // period of the template under the block map
};

// Instantiates the forced-suffix template of stage n on a net of b_n blocks.
// The stage set is the union of the template's images under the block
// automorphism; that union is finite with exactly lcm(member periods) terms,
// recorded as distinct_images.
inline TowerStage build_stage(const TowerParams& p, int n, const PeriodicNet& net) {
  validate_tower_params(p);
  if (n < 0 || n >= p.stages()) throw precondition_failed("tower stage out of range");
  const std::int64_t L = p.L[std::size_t(n) + 1];
  const std::int64_t b = p.b[std::size_t(n)];
  if (std::int64_t(net.members.size()) != b)
    throw precondition_failed("net size must equal the stage's b");
  if (net.block_len != 3 * span_sites(p, n))
    throw precondition_failed("net blocks must span three stage windows");
  std::int64_t width = 1;
  if (p.variant == TowerVariant::sec5_remark) width = b;
  if (p.variant == TowerVariant::sec6) {
    const std::int64_t a = p.a[std::size_t(n)];
    width = a * a;
    for (std::int64_t q : net.periods)
      if (a % q != 0)
        throw precondition_failed("sec6 needs a to be a common period of the net members");
  }
  if (L <= width * b) throw precondition_failed("forced suffix does not fit the window");

  TowerStage st;
  st.stage = n;
  st.variant = p.variant;
  st.window_cells = L;
  st.net = net;
  for (std::int64_t i = 1; i <= b; ++i)
    for (std::int64_t j = 0; j < width; ++j) {
      ForcedCell f;
      f.cell = L - i * width + j;
      f.member = i - 1;
      f.power = p.variant == TowerVariant::sec6 ? j / p.a[std::size_t(n)] : 0;
      st.forced.push_back(f);
    }
  std::sort(st.forced.begin(), st.forced.end(),
            [](const ForcedCell& x, const ForcedCell& y) { return x.cell < y.cell; });
  st.distinct_images = 1;
  for (std::int64_t q : net.periods) st.distinct_images = std::lcm(st.distinct_images, q);
  return st;
}

// Free variables and forced blocks never collide: every forced slot's site
// interval must avoid the stage-(n+1) free index set.
inline bool stage_avoids_free_indices(const TowerParams& p, const TowerStage& st,
                                      std::int64_t cap = std::int64_t(1) << 22) {
  const FreeIndexSet free = free_index_recursion(p, st.stage + 1, cap);
  const std::int64_t unit = 3 * span_sites(p, st.stage);
  for (const auto& f : st.forced) {
    const std::int64_t lo = f.cell * unit;
    const auto it = std::lower_bound(free.indices.begin(), free.indices.end(), lo);
    if (it != free.indices.end() && *it < lo + unit) return false;
  }
  return true;
}

struct TowerSystem {
  TowerSystem(SiteSpace s, ToralAutomorphism m, TowerParams pr)
      : site(std::move(s)), h(std::move(m)), params(std::move(pr)) {}

  SiteSpace site;
  ToralAutomorphism h;
  TowerParams params;
  std::vector<TowerStage> stages;
};

namespace detail {

inline void append_stage_block(const TowerSystem& t, int n, DetRng& rng, bool canonical,
                               BlockPoint& out) {
  if (n == 0) {
    out.push_back(canonical ? SiteValue{} : random_site_value(t.site, rng));
    return;
  }
  const TowerStage& st = t.stages[std::size_t(n - 1)];
  const std::int64_t unit = st.net.block_len;
  const std::size_t base = out.size();
  for (std::int64_t cell = 0; cell < st.window_cells; ++cell)
    for (int third = 0; third < 3; ++third) append_stage_block(t, n - 1, rng, canonical, out);
  for (const auto& f : st.forced) {
    const BlockPoint v =
        apply_blockwise(t.site, t.h, st.net.members[std::size_t(f.member)], f.power);
    std::copy(v.begin(), v.end(), out.begin() + std::int64_t(base) + f.cell * unit);
  }
  if (!canonical && st.distinct_images > 1) {
    const std::int64_t twist = std::int64_t(rng.below(std::uint64_t(st.distinct_images)));
    if (twist != 0)
      for (std::size_t i = base; i < out.size(); ++i)
        out[i] = t.h.apply(out[i], t.site.q(), twist);
  }
}

}  // namespace detail

inline BlockPoint sample_stage_block(const TowerSystem& t, int n, DetRng& rng) {
  if (n < 0 || n > int(t.stages.size()))
    throw precondition_failed("tower stage not built");
  BlockPoint out;
  out.reserve(std::size_t(span_sites(t.params, n)));
  detail::append_stage_block(t, n, rng, false, out);
  return out;
}

// The stage block whose free sites are all zero; legal at every stage because
// forced values are forced and zero survives every template whose net was
// seeded with the canonical block of the previous stage.
inline BlockPoint canonical_stage_block(const TowerSystem& t, int n) {
  if (n < 0 || n > int(t.stages.size()))
    throw precondition_failed("tower stage not built");
  DetRng unused(0);
  BlockPoint out;
  out.reserve(std::size_t(span_sites(t.params, n)));
  detail::append_stage_block(t, n, unused, true, out);
  return out;
}

inline bool stage_block_legal(const TowerSystem& t, int n, const BlockPoint& v) {
  if (n < 0 || n > int(t.stages.size()))
    throw precondition_failed("tower stage not built");
  if (std::int64_t(v.size()) != span_sites(t.params, n)) return false;
  if (n == 0) return true;
  const TowerStage& st = t.stages[std::size_t(n - 1)];
  const std::int64_t unit = st.net.block_len;
  const std::int64_t third = unit / 3;
  for (std::int64_t m = 0; m < st.distinct_images; ++m) {
    const BlockPoint u = detail::apply_blockwise(t.site, t.h, v, -m);
    bool ok = true;
    for (const auto& f : st.forced) {
      const BlockPoint want =
          detail::apply_blockwise(t.site, t.h, st.net.members[std::size_t(f.member)], f.power);
      if (!std::equal(want.begin(), want.end(), u.begin() + f.cell * unit)) {
        ok = false;
        break;
      }
    }
    for (std::int64_t c = 0; ok && c < 3 * st.window_cells; ++c) {
      const BlockPoint sub(u.begin() + c * third, u.begin() + (c + 1) * third);
      ok = stage_block_legal(t, n - 1, sub);
    }
    if (ok) return true;
  }
  return false;
}

// Builds nets and stage templates in one pass. The stage-n net target is the
// canonical block cube plus net_sample sampled cubes; the realized net size
// must match the b_n announced in the params.
inline TowerSystem build_tower(const SiteSpace& site, const ToralAutomorphism& h,
                               const TowerParams& params, const std::vector<Rational>& mesh,
                               std::int64_t net_sample, DetRng& rng) {
  validate_tower_params(params);
  if (int(mesh.size()) < params.stages())
    throw precondition_failed("tower build needs one mesh per stage");
  if (net_sample < 0) throw precondition_failed("net sample count must be nonnegative");
  TowerSystem t(site, h, params);
  for (int n = 0; n < params.stages(); ++n) {
    std::vector<BlockPoint> target;
    BlockPoint canon;
    for (int third = 0; third < 3; ++third) {
      const BlockPoint c = canonical_stage_block(t, n);
      canon.insert(canon.end(), c.begin(), c.end());
    }
    target.push_back(std::move(canon));
    for (std::int64_t i = 0; i < net_sample; ++i) {
      BlockPoint cube;
      for (int third = 0; third < 3; ++third) {
        const BlockPoint s = sample_stage_block(t, n, rng);
        cube.insert(cube.end(), s.begin(), s.end());
      }
      target.push_back(std::move(cube));
    }
    t.stages.push_back(build_stage(params, n, periodic_net(site, h, target, mesh[std::size_t(n)])));
  }
  return t;
}

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t d) {
  std::int64_t q = a / d, r = a % d;
  return r != 0 && (r < 0) != (d < 0) ? q - 1 : q;
}

// Values on sites [-W, W] of a point whose stage-n windows sit on the grid
// l + k * span; every window is an independent stage sample.
inline std::vector<SiteValue> stage_window(const TowerSystem& t, int n, std::int64_t l,
                                           std::int64_t W, DetRng& rng) {
  const std::int64_t span = span_sites(t.params, n);
  std::vector<SiteValue> w(std::size_t(2 * W + 1));
  const std::int64_t first = floor_div(-W - l, span);
  const std::int64_t last = floor_div(W - l, span);
  for (std::int64_t k = first; k <= last; ++k) {
    const BlockPoint blk = sample_stage_block(t, n, rng);
    const std::int64_t base = l + k * span;
    for (std::int64_t j = 0; j < span; ++j) {
      const std::int64_t m = base + j;
      if (m >= -W && m <= W) w[std::size_t(m + W)] = blk[std::size_t(j)];
    }
  }
  return w;
}

inline std::vector<std::int64_t> find_occurrences(const std::vector<SiteValue>& w,
                                                  std::int64_t W, const BlockPoint& blk) {
  std::vector<std::int64_t> out;
  const std::int64_t len = std::int64_t(blk.size());
  for (std::int64_t q = -W; q + len - 1 <= W; ++q) {
    bool hit = true;
    for (std::int64_t j = 0; j < len && hit; ++j) hit = w[std::size_t(q + j + W)] == blk[std::size_t(j)];
    if (hit) out.push_back(q);
  }
  return out;
}

inline double site_diameter(const SiteSpace& site) {
  if (site.kind() == SiteSpace::Kind::alphabet) return 1.0;
  return double(site.q() / 2) / double(site.q());
}

inline double dyadic_weight(std::int64_t e) {
  return std::ldexp(1.0, -int(std::min<std::int64_t>(e, 1080)));
}

}  // namespace detail

struct MinimalityGapReport {
  int stage = 0;
  std::int64_t pairs = 0;
  std::int64_t alignments = 0;
  double bound = 0;
  double max_gap = 0;
  double max_anchor = 0;  // worst distance from a sampled window to its nearest net member
  bool ok = false;
};

// Recurrence gap of the stage-n refinement: a stage-n window and a
// stage-(n+1) window are sampled, the stage-(n+1) point is shifted so that a
// net block occurrence aligns with the stage-n grid, and the weighted-series
// distance is evaluated exactly on [-W_eval, W_eval] with the tail bounded by
// the site diameter. The minimum over alignments must beat 3/n + 2^{1-span}.
inline MinimalityGapReport minimality_gap_check(const TowerSystem& t, int n, std::int64_t pairs,
                                                DetRng& rng, int window_mult = 2) {
  validate_tower_params(t.params);
  if (n < 1) throw precondition_failed("gap bound needs stage n >= 1");
  if (int(t.stages.size()) < n + 1)
    throw precondition_failed("gap check needs stages up to n+1 built");
  if (window_mult < 1)
    throw precondition_failed("window too short for the proof's offset range");
  if (pairs < 1) throw precondition_failed("gap check needs at least one pair");
  if (!t.site.has_rational_distance())
    throw precondition_failed("gap check needs a rational site distance");
  const std::int64_t span_n = span_sites(t.params, n);
  const std::int64_t span_n1 = span_sites(t.params, n + 1);
  const std::int64_t W = window_mult * span_n1;
  const double diam = detail::site_diameter(t.site);
  const PeriodicNet& net = t.stages[std::size_t(n)].net;

  MinimalityGapReport rep;
  rep.stage = n;
  rep.pairs = pairs;
  rep.bound = 3.0 / n + detail::dyadic_weight(span_n - 1);
  for (std::int64_t it = 0; it < pairs; ++it) {
    const std::int64_t l1 = -rng.range(span_n, 2 * span_n - 1);
    const auto xw = detail::stage_window(t, n, l1, W, rng);
    const std::int64_t l2 = -rng.range(span_n1, 2 * span_n1 - 1);
    const auto yw = detail::stage_window(t, n + 1, l2, W, rng);

    Rational anchor(-1);
    for (const auto& m : net.members) {
      Rational d(0);
      for (std::int64_t j = 0; j < 3 * span_n; ++j) {
        const Rational s = t.site.distance(xw[std::size_t(l1 + j + W)], m[std::size_t(j)]);
        if (s > d) d = s;
      }
      if (anchor < Rational(0) || d < anchor) anchor = d;
    }
    rep.max_anchor = std::max(rep.max_anchor, anchor.to_double());

    double gap = std::numeric_limits<double>::infinity();
    std::int64_t found = 0;
    for (const auto& m : net.members)
      for (std::int64_t q : detail::find_occurrences(yw, W, m)) {
        const std::int64_t p = q - l1;
        const std::int64_t we = W - std::llabs(p);
        if (we < 3 * span_n) continue;
        ++found;
        double s = 0;
        for (std::int64_t i = -we; i <= we; ++i)
          s += detail::dyadic_weight(std::llabs(i)) *
               t.site.distance_double(xw[std::size_t(i + W)], yw[std::size_t(i + p + W)]);
        gap = std::min(gap, s + diam * detail::dyadic_weight(we - 1));
      }
    if (found == 0)
      throw precondition_failed("window too short for the proof's offset range");
    rep.alignments += found;
    rep.max_gap = std::max(rep.max_gap, gap);
  }
  rep.ok = rep.max_gap < rep.bound;
  return rep;
}

// Product variant: two towers over the same site and automorphism, moved by
// the pair action (p, e) . (z, w) = (sigma^p h^e z, sigma^{p+e} h^e w). The
// alignment scan moves e through the automorphism powers near a common net
// period and p through net block occurrences in either factor; the reported
// gap is the max of the two factor distances, minimized over alignments.
inline MinimalityGapReport minimality_gap_check(const TowerSystem& first,
                                                const TowerSystem& second, int n,
                                                std::int64_t pairs, DetRng& rng,
                                                int window_mult = 2) {
  validate_tower_params(first.params);
  validate_tower_params(second.params);
  if (first.params.variant != TowerVariant::sec6 ||
      second.params.variant != TowerVariant::sec6)
    throw precondition_failed("the product gap check is stated for sec6 towers");
  if (first.params.L != second.params.L)
    throw precondition_failed("product gap check needs matching window ladders");
  if (first.site.q() != second.site.q() || first.site.rank() != second.site.rank())
    throw precondition_failed("product gap check needs matching sites");
  if (n < 1) throw precondition_failed("gap bound needs stage n >= 1");
  if (int(first.stages.size()) < n + 1 || int(second.stages.size()) < n + 1)
    throw precondition_failed("gap check needs stages up to n+1 built");
  if (window_mult < 1)
    throw precondition_failed("window too short for the proof's offset range");
  if (pairs < 1) throw precondition_failed("gap check needs at least one pair");
  const std::int64_t span_n = span_sites(first.params, n);
  const std::int64_t span_n1 = span_sites(first.params, n + 1);
  const std::int64_t W = window_mult * span_n1;
  const double diam = detail::site_diameter(first.site);
  const std::int64_t q_mod = first.site.q();
  const int rank = first.site.rank();
  const std::int64_t a_n =
      std::max(first.params.a[std::size_t(n)], second.params.a[std::size_t(n)]);
  const std::int64_t e_range = a_n * a_n;
  std::map<std::int64_t, ToralAutomorphism::Matrix> powers;
  for (std::int64_t e = -e_range; e <= e_range; ++e)
    powers.emplace(e, first.h.power_mod(e, q_mod));

  const PeriodicNet& net1 = first.stages[std::size_t(n)].net;
  const PeriodicNet& net2 = second.stages[std::size_t(n)].net;

  MinimalityGapReport rep;
  rep.stage = n;
  rep.pairs = pairs;
  rep.bound = 3.0 / n + detail::dyadic_weight(span_n - 1);
  for (std::int64_t it = 0; it < pairs; ++it) {
    const std::int64_t l1 = -rng.range(span_n, 2 * span_n - 1);
    const std::int64_t l2 = -rng.range(span_n, 2 * span_n - 1);
    const auto xw = detail::stage_window(first, n, l1, W, rng);
    const auto yw = detail::stage_window(second, n, l2, W, rng);
    const auto zw = detail::stage_window(first, n + 1,
                                         -rng.range(span_n1, 2 * span_n1 - 1), W, rng);
    const auto ww = detail::stage_window(second, n + 1,
                                         -rng.range(span_n1, 2 * span_n1 - 1), W, rng);

    Rational anchor(0);
    for (int factor = 0; factor < 2; ++factor) {
      const PeriodicNet& net = factor == 0 ? net1 : net2;
      const auto& w = factor == 0 ? xw : yw;
      const std::int64_t l = factor == 0 ? l1 : l2;
      Rational best(-1);
      for (const auto& m : net.members) {
        Rational d(0);
        for (std::int64_t j = 0; j < 3 * span_n; ++j) {
          const Rational s = first.site.distance(w[std::size_t(l + j + W)], m[std::size_t(j)]);
          if (s > d) d = s;
        }
        if (best < Rational(0) || d < best) best = d;
      }
      if (best > anchor) anchor = best;
    }
    rep.max_anchor = std::max(rep.max_anchor, anchor.to_double());

    std::vector<std::pair<std::int64_t, std::int64_t>> cands;  // (p, e)
    for (const auto& m : net1.members)
      for (std::int64_t q : detail::find_occurrences(zw, W, m))
        for (std::int64_t e = -e_range; e <= e_range; ++e) cands.emplace_back(q - l1, e);
    for (const auto& m : net2.members)
      for (std::int64_t q : detail::find_occurrences(ww, W, m))
        for (std::int64_t e = -e_range; e <= e_range; ++e) cands.emplace_back(q - l2 - e, e);
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

    double gap = std::numeric_limits<double>::infinity();
    std::int64_t found = 0;
    for (const auto& [p, e] : cands) {
      const std::int64_t we = W - std::max(std::llabs(p), std::llabs(p + e));
      if (we < 3 * span_n) continue;
      ++found;
      const auto& pw = powers.at(e);
      double s1 = 0, s2 = 0;
      for (std::int64_t i = -we; i <= we; ++i) {
        const double wgt = detail::dyadic_weight(std::llabs(i));
        const SiteValue zv =
            ToralAutomorphism::apply_matrix(pw, zw[std::size_t(i + p + W)], q_mod, rank);
        const SiteValue wv =
            ToralAutomorphism::apply_matrix(pw, ww[std::size_t(i + p + e + W)], q_mod, rank);
        s1 += wgt * first.site.distance_double(xw[std::size_t(i + W)], zv);
        s2 += wgt * first.site.distance_double(yw[std::size_t(i + W)], wv);
      }
      const double tail = diam * detail::dyadic_weight(we - 1);
      gap = std::min(gap, std::max(s1 + tail, s2 + tail));
    }
    if (found == 0)
      throw precondition_failed("window too short for the proof's offset range");
    rep.alignments += found;
    rep.max_gap = std::max(rep.max_gap, gap);
  }
  rep.ok = rep.max_gap < rep.bound;
  return rep;
}

}  // namespace meandim
