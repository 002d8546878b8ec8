#pragma once

// Entropy and mean-dimension estimators over finite windows. Every limit in
// the underlying theory appears here as a bracketed finite-grid value with
// the grid recorded; nothing extrapolates beyond the computed cells.
//
// Counting conventions follow counting.hpp: a separated witness is pairwise
// >= eps, a cover set has diameter strictly < eps, so the separated count
// never exceeds the covering count at the same scale. Pattern counts are
// counts of locally legal patterns on the support box; for the bundled
// systems local legality coincides with extensibility.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "meandim/counting.hpp"
#include "meandim/expansive.hpp"
#include "meandim/frink.hpp"
#include "meandim/patterns.hpp"
#include "meandim/system.hpp"

namespace meandim {

// A sampled or computed quantity violated a property the estimator promised.
class check_failed : public std::runtime_error {
 public:
  explicit check_failed(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string rational_str(const Rational& r) {
  return r.den() == 1 ? std::to_string(r.num())
                      : std::to_string(r.num()) + "/" + std::to_string(r.den());
}

// Smallest box covering every cell a window shift can touch.
inline Box window_support_box(const System& sys, const std::vector<LatticeVector>& win) {
  if (win.empty()) throw precondition_failed("empty window has no support box");
  Box b;
  b.s = sys.s;
  bool first = true;
  for (const auto& u : win) {
    Cell a = sys.shift_of(u);
    for (int ax = 0; ax < sys.s; ++ax) {
      if (first || a[ax] < b.lo[ax]) b.lo[ax] = a[ax];
      if (first || a[ax] > b.hi[ax]) b.hi[ax] = a[ax];
    }
    first = false;
  }
  return b;
}

// Separated / covering counts for a single q-point quantized circle at scale
// eps > 1/q: points spaced ceil(eps q) units apart are pairwise >= eps, and
// arcs of ceil(eps q) consecutive points have diameter < eps.
inline std::pair<std::int64_t, std::int64_t> circle_counts(std::int64_t q, const Rational& eps) {
  std::int64_t t = (eps.num() * q + eps.den() - 1) / eps.den();  // ceil(eps q)
  if (t < 1) t = 1;
  std::int64_t s1 = std::max<std::int64_t>(1, q / t);
  std::int64_t c1 = t >= q ? 1 : (q + t - 1) / t;
  return {s1, c1};
}

}  // namespace detail

// One grid cell: the count bracket for #(X, d_window, eps) on the window
// [-N,N]^k, kept in log space (integer counts overflow well inside the grids
// the estimators want), with the integer bracket preserved when it fits.
struct EntropyCell {
  std::int64_t radius = 0;
  Rational eps{0};
  CountBracket counts;        // meaningful iff counts_valid
  bool counts_valid = false;
  double log_lb = 0;          // natural log of the count bracket
  double log_ub = 0;
  double norm_lb = 0;         // log bracket / (2N+1)^k
  double norm_ub = 0;
  bool exact = false;
};

struct EntropyTable {
  int k = 1;
  std::vector<Rational> ladder;      // strictly decreasing scales
  std::vector<std::int64_t> radii;   // strictly increasing box radii
  std::vector<std::vector<EntropyCell>> cells;  // cells[scale][radius]
};

// Count bracket for one (N, eps) cell. Three routes:
//   - eps at or below the site gap: distinct patterns are automatically
//     eps-separated and singletons cover, so the legal-pattern count is the
//     exact answer;
//   - plain shifts of a sup-norm quantized site: per-cell circle counts
//     multiply across window cells and coordinates;
//   - otherwise: enumerate the legal patterns (bounded) and bracket the
//     covering number of the window pseudometric directly.
inline EntropyCell entropy_cell(const System& sys, std::int64_t radius, const Rational& eps,
                                std::uint64_t enum_cap = (std::uint64_t(1) << 14)) {
  if (!(eps > Rational(0))) throw precondition_failed("entropy scale must be positive");
  if (radius < 0) throw precondition_failed("window radius must be nonnegative");
  EntropyCell cell;
  cell.radius = radius;
  cell.eps = eps;
  const auto win = window_points(Window::box(radius, sys.k));
  const double norm = double(win.size());
  const Box support = detail::window_support_box(sys, win);

  const bool rational = sys.site.has_rational_distance();
  if (rational && eps <= sys.site.gap()) {
    PatternCount pc = pattern_count(sys, support, enum_cap);
    cell.log_lb = cell.log_ub = pc.log_value;
    cell.exact = true;
    if (pc.exact && *pc.exact <= std::uint64_t(std::numeric_limits<std::int64_t>::max())) {
      cell.counts_valid = true;
      cell.counts.lb = cell.counts.ub = std::int64_t(*pc.exact);
      cell.counts.exact = true;
    }
  } else if (!sys.has_rule() && !sys.restriction && !sys.cell_map && rational) {
    std::int64_t s1 = 1, c1 = 1;
    if (sys.site.kind() == SiteSpace::Kind::alphabet) {
      if (eps <= Rational(1)) s1 = c1 = sys.site.count();
    } else {
      auto sc = detail::circle_counts(sys.site.q(), eps);
      s1 = sc.first;
      c1 = sc.second;
    }
    const std::uint64_t exponent =
        std::uint64_t(support.cells()) *
        std::uint64_t(sys.site.kind() == SiteSpace::Kind::torus ? sys.site.rank() : 1);
    cell.log_lb = double(exponent) * std::log(double(s1));
    cell.log_ub = double(exponent) * std::log(double(c1));
    cell.exact = s1 == c1;
    auto plo = detail::checked_pow_u64(std::uint64_t(s1), exponent);
    auto phi = detail::checked_pow_u64(std::uint64_t(c1), exponent);
    if (plo && phi && *phi <= std::uint64_t(std::numeric_limits<std::int64_t>::max())) {
      cell.counts_valid = true;
      cell.counts.lb = std::int64_t(*plo);
      cell.counts.ub = std::int64_t(*phi);
      cell.counts.exact = cell.exact;
    }
  } else {
    if (!rational)
      throw precondition_failed("covering counts need a rational site distance");
    auto pats = pattern_list(sys, support, enum_cap);
    const Eigen::Index n = Eigen::Index(pats.size());
    DistanceTable<Rational> table(n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        table.set(i, j, window_metric(sys, win, pats[size_t(i)], pats[size_t(j)]));
    cell.counts = covering_number_bracket(table, eps);
    cell.counts_valid = true;
    cell.exact = cell.counts.exact;
    cell.log_lb = std::log(double(std::max<std::int64_t>(1, cell.counts.lb)));
    cell.log_ub = std::log(double(std::max<std::int64_t>(1, cell.counts.ub)));
  }

  cell.norm_lb = cell.log_lb / norm;
  cell.norm_ub = cell.log_ub / norm;
  if (cell.norm_lb > cell.norm_ub + 1e-12)
    throw check_failed("entropy cell bracket inverted");
  return cell;
}

inline EntropyTable scale_entropy_table(const System& sys, std::vector<Rational> ladder,
                                        std::vector<std::int64_t> radii,
                                        std::uint64_t enum_cap = (std::uint64_t(1) << 14)) {
  if (ladder.empty() || radii.empty())
    throw precondition_failed("entropy table needs at least one scale and one radius");
  for (size_t i = 0; i + 1 < ladder.size(); ++i)
    if (!(ladder[i] > ladder[i + 1]))
      throw precondition_failed("scale ladder must strictly decrease");
  for (size_t i = 0; i + 1 < radii.size(); ++i)
    if (!(radii[i] < radii[i + 1]))
      throw precondition_failed("radius list must strictly increase");
  EntropyTable t;
  t.k = sys.k;
  t.ladder = std::move(ladder);
  t.radii = std::move(radii);
  t.cells.resize(t.ladder.size());
  for (size_t e = 0; e < t.ladder.size(); ++e)
    for (std::int64_t n : t.radii)
      t.cells[e].push_back(entropy_cell(sys, n, t.ladder[e], enum_cap));
  return t;
}

struct DimensionEstimate {
  enum class Kind {
    topological_entropy,
    scale_entropy,
    mdim_lower,
    mdim_metric_upper,
    mdim_metric_lower,
    directional_mdim,
  };
  Kind kind = Kind::scale_entropy;
  double lb = 0;
  double ub = 0;
  std::string witness;
  std::string grid;
};

inline DimensionEstimate make_estimate(DimensionEstimate::Kind kind, double lb, double ub,
                                       std::string witness, std::string grid) {
  if (lb > ub + 1e-12) throw check_failed("dimension estimate bracket inverted");
  DimensionEstimate e;
  e.kind = kind;
  e.lb = lb;
  e.ub = std::max(lb, ub);
  e.witness = std::move(witness);
  e.grid = std::move(grid);
  return e;
}

// S(eps) as the running infimum over the tested radii: the normalized counts
// converge to their infimum, so the bracket of the grid infimum is the
// honest finite-radius estimate.
inline std::vector<DimensionEstimate> scale_entropy_estimates(const EntropyTable& t) {
  std::vector<DimensionEstimate> out;
  for (size_t e = 0; e < t.ladder.size(); ++e) {
    double lb = std::numeric_limits<double>::infinity();
    double ub = std::numeric_limits<double>::infinity();
    for (const auto& cell : t.cells[e]) {
      lb = std::min(lb, cell.norm_lb);
      ub = std::min(ub, cell.norm_ub);
    }
    std::ostringstream grid;
    grid << "eps=" << detail::rational_str(t.ladder[e]) << " N=" << t.radii.front() << ".."
         << t.radii.back();
    out.push_back(make_estimate(DimensionEstimate::Kind::scale_entropy, lb, ub,
                                "running infimum of normalized window counts", grid.str()));
  }
  return out;
}

inline DimensionEstimate topological_entropy_estimate(const EntropyTable& t) {
  const auto per_scale = scale_entropy_estimates(t);
  double lb = 0;
  for (const auto& s : per_scale) lb = std::max(lb, s.lb);
  const double ub = per_scale.back().ub;  // smallest scale: S is monotone in eps
  std::ostringstream grid;
  grid << "eps=" << detail::rational_str(t.ladder.front()) << ".."
       << detail::rational_str(t.ladder.back()) << " N=" << t.radii.front() << ".."
       << t.radii.back();
  return make_estimate(DimensionEstimate::Kind::topological_entropy, lb, ub,
                       "max of scale estimates vs finest-scale cover", grid.str());
}

// Ratio S(eps)/log(1/eps) across the ladder, no extrapolation: the headline
// bracket is the ratio at the finest tested scale.
struct MetricMeanDimEstimate {
  std::vector<Rational> ladder;
  std::vector<double> ratio_lb;
  std::vector<double> ratio_ub;
  DimensionEstimate at_finest;
};

inline MetricMeanDimEstimate metric_mean_dim_estimate(const EntropyTable& t) {
  if (t.ladder.size() < 3) throw precondition_failed("metric mean dimension needs >= 3 scales");
  if (!(t.ladder.front() >= Rational(4) * t.ladder.back()))
    throw precondition_failed("scale ladder must span at least two octaves");
  MetricMeanDimEstimate out;
  out.ladder = t.ladder;
  const auto per_scale = scale_entropy_estimates(t);
  for (size_t e = 0; e < t.ladder.size(); ++e) {
    const double denom = -std::log(t.ladder[e].to_double());
    if (!(denom > 0)) throw precondition_failed("metric mean dimension needs scales below 1");
    out.ratio_lb.push_back(per_scale[e].lb / denom);
    out.ratio_ub.push_back(per_scale[e].ub / denom);
  }
  std::ostringstream grid;
  grid << "eps=" << detail::rational_str(t.ladder.front()) << ".."
       << detail::rational_str(t.ladder.back()) << " N<=" << t.radii.back();
  out.at_finest = make_estimate(DimensionEstimate::Kind::mdim_metric_upper,
                                out.ratio_lb.back(), out.ratio_ub.back(),
                                "count ratio at the finest tested scale", grid.str());
  return out;
}

// Fills a configuration from values on the free cells: background elsewhere,
// then one propagation sweep for a linear rule with a unit trailing
// coefficient (cells are written in row-major order, so the trailing cell of
// each placement only depends on already-written cells).
inline Config materialize_on(const System& sys, const Config& background,
                             const std::vector<Cell>& free_cells,
                             const std::vector<SiteValue>& values) {
  if (free_cells.size() != values.size())
    throw precondition_failed("one value per free cell");
  Config c = background;
  for (size_t i = 0; i < free_cells.size(); ++i) c.at(free_cells[i]) = values[i];
  if (sys.linear_rule) {
    if (sys.site.kind() != SiteSpace::Kind::torus || sys.site.rank() != 1)
      throw precondition_failed("linear propagation needs a rank-1 quantized site");
    const auto& rule = *sys.linear_rule;
    const std::int64_t cb = rule.coeffs.back();
    if (cb != 1 && cb != -1)
      throw precondition_failed("linear propagation needs a unit trailing coefficient");
    const Box b = c.box();
    const std::int64_t q = sys.site.q();
    const std::int64_t lo1 = b.s >= 2 ? b.lo[1] : 0;
    const std::int64_t hi1 = b.s >= 2 ? b.hi[1] : 0;
    for (std::int64_t p1 = lo1; p1 <= hi1; ++p1)
      for (std::int64_t p0 = b.lo[0]; p0 <= b.hi[0]; ++p0) {
        bool inside = true;
        for (const auto& sc : rule.shape) {
          Cell at{p0 + sc[0], b.s >= 2 ? p1 + sc[1] : 0};
          if (!b.contains(at)) inside = false;
        }
        if (!inside) continue;
        Cell target{p0 + rule.shape.back()[0], b.s >= 2 ? p1 + rule.shape.back()[1] : 0};
        if (std::find(free_cells.begin(), free_cells.end(), target) != free_cells.end())
          throw precondition_failed("free cell set intersects rule-determined cells");
        std::int64_t sum = 0;
        for (size_t i = 0; i + 1 < rule.shape.size(); ++i) {
          Cell at{p0 + rule.shape[i][0], b.s >= 2 ? p1 + rule.shape[i][1] : 0};
          sum += rule.coeffs[i] * c.at(at).c[0];
        }
        SiteValue v;
        v.c[0] = SiteSpace::mod(cb == 1 ? -sum : sum, q);
        c.at(target) = v;
      }
    if (!is_legal(sys, c)) throw check_failed("propagation produced an illegal configuration");
  }
  return c;
}

inline SiteValue random_site_value(const SiteSpace& site, DetRng& rng) {
  return site.value_at(std::int64_t(rng.below(std::uint64_t(site.count()))));
}

// Hard check of the embedding map: the sup distance over the free cells never
// exceeds the window pseudometric between the materialized configurations.
inline std::int64_t verify_embedding_witness(const System& sys, const std::vector<Cell>& free_cells,
                                             const std::vector<LatticeVector>& window,
                                             const Config& background, std::int64_t pairs,
                                             DetRng& rng) {
  if (free_cells.empty()) return 0;
  std::int64_t checked = 0;
  for (std::int64_t p = 0; p < pairs; ++p) {
    std::vector<SiteValue> va, vb;
    va.reserve(free_cells.size());
    vb.reserve(free_cells.size());
    for (size_t i = 0; i < free_cells.size(); ++i) {
      va.push_back(random_site_value(sys.site, rng));
      vb.push_back(random_site_value(sys.site, rng));
    }
    const Config ca = materialize_on(sys, background, free_cells, va);
    const Config cb = materialize_on(sys, background, free_cells, vb);
    Rational input(0);
    for (size_t i = 0; i < free_cells.size(); ++i)
      input = std::max(input, sys.site.distance(va[i], vb[i]));
    const Rational output = window_metric(sys, window, ca, cb);
    if (input > output)
      throw check_failed("embedding witness contracted a sampled pair");
    ++checked;
  }
  return checked;
}

struct EmbeddingCertificate {
  std::vector<Cell> free_cells;
  double per_site_dim = 0;
  std::int64_t window_size = 0;
  std::int64_t support_in_window = 0;
  std::int64_t pairs_checked = 0;
  double lower_bound = 0;
};

// Mean-dimension lower bound from carrying the free coordinates through the
// window: per-site dimension times |free set| / |window|. The upper end of
// the returned bracket is the ambient bound from the support cells alone.
inline std::pair<DimensionEstimate, EmbeddingCertificate> embedding_lower_bound(
    const System& sys, const std::vector<Cell>& free_cells,
    const std::vector<LatticeVector>& window, const Config& background, double per_site_dim,
    DetRng& rng, std::int64_t pairs = 1024) {
  if (window.empty()) throw precondition_failed("embedding needs a nonempty window");
  if (per_site_dim < 0) throw precondition_failed("per-site dimension must be nonnegative");
  if (!free_cells.empty() && pairs < 1000)
    throw precondition_failed("embedding witness needs at least 1000 sampled pairs");

  std::vector<Cell> window_cells;
  for (const auto& u : window) window_cells.push_back(sys.shift_of(u));
  for (const auto& c : free_cells)
    if (std::find(window_cells.begin(), window_cells.end(), c) == window_cells.end())
      throw precondition_failed("free cells must lie on the window support");

  std::int64_t offset = background.klass.value_or(0);
  std::int64_t on_support = 0;
  for (const auto& c : window_cells) {
    if (!sys.restriction || sys.restriction->lambda.contains(c[0] - offset)) ++on_support;
  }

  EmbeddingCertificate cert;
  cert.free_cells = free_cells;
  cert.per_site_dim = per_site_dim;
  cert.window_size = std::int64_t(window.size());
  cert.support_in_window = on_support;
  cert.pairs_checked = verify_embedding_witness(sys, free_cells, window, background, pairs, rng);
  cert.lower_bound = per_site_dim * double(free_cells.size()) / double(window.size());

  std::ostringstream wit;
  wit << free_cells.size() << " free cells carried through a " << window.size()
      << "-point window, " << cert.pairs_checked << " pairs checked";
  std::ostringstream grid;
  grid << "window=" << window.size() << " free=" << free_cells.size();
  const double ub = per_site_dim * double(on_support) / double(window.size());
  return {make_estimate(DimensionEstimate::Kind::mdim_lower, cert.lower_bound, ub, wit.str(),
                        grid.str()),
          cert};
}

struct DensityValue {
  Rational exact{0};
  bool is_exact = false;
  double lb = 0;
  double ub = 1;
};

// Upper Banach density of a decidable index set. Both supported kinds are
// eventually periodic, so the exact value is available; the Fekete bracket
// from best-window counts is computed alongside as a cross-check.
inline DensityValue banach_density(const IndexSpec& lambda, std::int64_t n_max = 256) {
  if (n_max < 1) throw precondition_failed("density window cap must be positive");
  DensityValue d;
  std::int64_t per_count = 0;
  if (lambda.kind == IndexSpec::Kind::periodic) {
    per_count = std::int64_t(lambda.residues.size());
    d.exact = Rational(per_count, lambda.period);
  } else {
    d.exact = Rational(0);
  }
  d.is_exact = true;

  // f(n) = best count over any length-n window; subadditive, so f(n)/n upper
  // bounds the density for every n, and f(n) <= n D + per-period slack gives
  // the lower tail.
  auto best_window = [&](std::int64_t n) {
    std::int64_t best = 0;
    const std::int64_t lo = lambda.kind == IndexSpec::Kind::periodic
                                ? 0
                                : (lambda.elements.empty() ? 0 : lambda.elements.front() - n);
    const std::int64_t hi = lambda.kind == IndexSpec::Kind::periodic
                                ? lambda.period - 1
                                : (lambda.elements.empty() ? 0 : lambda.elements.back());
    for (std::int64_t o = lo; o <= hi; ++o)
      best = std::max(best, lambda.count_in(o, o + n - 1));
    return best;
  };
  double ub = 1;
  for (std::int64_t n = 1; n <= n_max; n *= 2)
    ub = std::min(ub, double(best_window(n)) / double(n));
  const std::int64_t fn = best_window(n_max);
  const std::int64_t slack = lambda.kind == IndexSpec::Kind::periodic
                                 ? per_count
                                 : std::int64_t(lambda.elements.size());
  d.lb = std::max(0.0, double(fn - slack) / double(n_max));
  d.ub = ub;
  if (d.lb > d.exact.to_double() + 1e-12 || d.exact.to_double() > d.ub + 1e-12)
    throw check_failed("density bracket misses the exact value");
  return d;
}

struct PavlovPoint {
  std::int64_t width = 0;
  double lb = 0;  // running min over strip heights of log count / height
  double ub = 0;  // running max, per the no-collapse convention
};

// Projection entropy through vertical strips of the given widths: patterns
// on [0, width) x [-M, M], counted exactly, normalized per strip height and
// divided by the width. The bracket keeps the min and max of the normalized
// sequence rather than collapsing to one number.
inline std::vector<PavlovPoint> pavlov_projection_entropy(
    const System& sys, const std::vector<std::int64_t>& widths,
    const std::vector<std::int64_t>& heights, std::uint64_t cap = (std::uint64_t(1) << 22)) {
  if (sys.s != 2) throw precondition_failed("projection entropy needs a rank-2 domain");
  if (widths.empty() || heights.empty())
    throw precondition_failed("projection entropy needs widths and heights");
  std::vector<PavlovPoint> out;
  for (std::int64_t n : widths) {
    if (n < 1) throw precondition_failed("strip width must be positive");
    PavlovPoint pt;
    pt.width = n;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::int64_t m : heights) {
      const PatternCount pc = pattern_count(sys, box_rect(0, n - 1, -m, m), cap);
      const double v = pc.log_value / double(2 * m + 1);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    pt.lb = lo / double(n);
    pt.ub = hi / double(n);
    out.push_back(pt);
  }
  return out;
}

struct ProductEntropyReport {
  double target = 0;
  bool plane_ok = false;
  bool strip_ok = false;
};

// Checks that the plane entropy estimate and the strip projection sequence
// both meet the product target (site entropy times support density) within a
// relative tolerance. Disjointness is an estimator bug, reported hard.
inline ProductEntropyReport product_entropy_check(const DimensionEstimate& plane,
                                                  const PavlovPoint& strip, double site_entropy,
                                                  const Rational& density, double rel_tol) {
  if (rel_tol < 0) throw precondition_failed("tolerance must be nonnegative");
  ProductEntropyReport rep;
  rep.target = site_entropy * density.to_double();
  const double lo = rep.target * (1 - rel_tol);
  const double hi = rep.target * (1 + rel_tol);
  rep.plane_ok = plane.lb <= hi && plane.ub >= lo;
  rep.strip_ok = strip.lb <= hi && strip.ub >= lo;
  if (!rep.plane_ok || !rep.strip_ok)
    throw check_failed("product entropy brackets miss the target");
  return rep;
}

// Entropy bracket for a hyperbolic integral automorphism of the continuum
// 2-torus, euclidean metric. Lower end: growth rate of explicit separated
// grids laid along the eigendirections between radius 0 and radius N. Upper
// end: growth rate of square covers shrunk by the operator norm per step.
// Both ends are slopes, so the static eps-resolution term cancels and the
// bracket pinches the expanding eigenvalue.
inline DimensionEstimate toral_entropy_bracket(const ToralAutomorphism& h, double eps,
                                               std::int64_t n_radius) {
  if (h.rank() != 2) throw precondition_failed("entropy bracket needs a rank-2 automorphism");
  if (!(eps > 0)) throw precondition_failed("scale must be positive");
  if (n_radius < 1) throw precondition_failed("window radius must be at least 1");
  const auto& m = h.matrix();
  const double tr = double(m(0, 0) + m(1, 1));
  const double det = double(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0));
  const double disc = tr * tr - 4 * det;
  if (disc <= 0) throw precondition_failed("automorphism is not hyperbolic");
  const double l1 = (tr + std::sqrt(disc)) / 2;
  const double l2 = (tr - std::sqrt(disc)) / 2;
  if (std::abs(std::abs(l1) - 1) < 1e-9 || std::abs(std::abs(l2) - 1) < 1e-9)
    throw precondition_failed("automorphism is not hyperbolic");
  const double lam = std::max(std::abs(l1), std::abs(l2));

  auto eigvec = [&](double l) {
    double vx, vy;
    if (m(0, 1) != 0) {
      vx = double(m(0, 1));
      vy = l - double(m(0, 0));
    } else if (m(1, 0) != 0) {
      vx = l - double(m(1, 1));
      vy = double(m(1, 0));
    } else {
      vx = std::abs(double(m(0, 0)) - l) < 1e-12 ? 1 : 0;
      vy = 1 - vx;
    }
    const double n = std::hypot(vx, vy);
    return std::pair<double, double>{vx / n, vy / n};
  };
  const auto eu = eigvec(std::abs(l1) > std::abs(l2) ? l1 : l2);
  const auto es = eigvec(std::abs(l1) > std::abs(l2) ? l2 : l1);
  const double c = std::abs(eu.first * es.first + eu.second * es.second);
  const double f = std::sqrt(1 - c);
  if (!(eps <= f / (std::sqrt(1 + c) * 2 * lam)))
    throw precondition_failed("scale too coarse for the separated-grid construction");

  // Grid extent keeps every pair inside the band where the euclidean norm of
  // the difference is the torus distance at some window time.
  const double extent = 1 / (2 * std::sqrt((1 + c) * (lam * lam + 1 / (lam * lam))));
  const double pow_n = std::pow(lam, double(n_radius));
  const double per_dir_real = extent * f / eps;
  const std::int64_t m0 = std::int64_t(std::floor(per_dir_real));
  const std::int64_t mn = std::int64_t(std::floor(per_dir_real * pow_n));
  if (m0 < 1 || mn < 2)
    throw precondition_failed("scale too coarse for a nondegenerate grid");
  const double lb =
      (std::log(double(mn)) - std::log(per_dir_real)) / double(n_radius);

  const double a00 = double(m(0, 0)), a01 = double(m(0, 1));
  const double a10 = double(m(1, 0)), a11 = double(m(1, 1));
  const double frob = a00 * a00 + a01 * a01 + a10 * a10 + a11 * a11;
  const double opnorm = std::sqrt((frob + std::sqrt(frob * frob - 4 * det * det)) / 2);
  const double cov_real0 = std::sqrt(2.0) / eps;
  const double covn = std::ceil(cov_real0 * std::pow(opnorm, double(n_radius)));
  const double ub = (std::log(covn) - std::log(cov_real0)) / double(n_radius);

  std::ostringstream wit;
  wit << "eigendirection grid slope vs operator-norm cover slope, " << mn
      << " points per direction at radius " << n_radius;
  std::ostringstream grid;
  grid << "N=" << n_radius << " eps=" << eps;
  return make_estimate(DimensionEstimate::Kind::topological_entropy, lb, ub, wit.str(),
                       grid.str());
}

// Lattice window of a thickened line through the origin, clipped to the open
// box (-N, N)^2. Thickness must exceed 1/sqrt(2) so the window meets every
// unit cell the line crosses.
struct DirectionalWindowSpec {
  std::int64_t dir0 = 1;
  std::int64_t dir1 = 0;
  Rational thickness{1};
  std::int64_t n_radius = 1;
};

inline std::vector<Cell> directional_window(const DirectionalWindowSpec& w) {
  if (w.dir0 == 0 && w.dir1 == 0) throw precondition_failed("direction must be nonzero");
  if (std::gcd(w.dir0, w.dir1) != 1) throw precondition_failed("direction must be primitive");
  if (!(w.thickness * w.thickness > Rational(1, 2)))
    throw precondition_failed("thickness must exceed 1/sqrt(2)");
  if (w.n_radius < 1) throw precondition_failed("box radius must be positive");
  std::vector<Cell> out;
  const Rational bound = w.thickness * w.thickness *
                         Rational(w.dir0 * w.dir0 + w.dir1 * w.dir1);
  for (std::int64_t u0 = -(w.n_radius - 1); u0 <= w.n_radius - 1; ++u0)
    for (std::int64_t u1 = -(w.n_radius - 1); u1 <= w.n_radius - 1; ++u1) {
      const std::int64_t cross = u0 * w.dir1 - u1 * w.dir0;
      if (Rational(cross * cross) < bound) out.push_back(Cell{u0, u1});
    }
  return out;
}

inline double directional_segment_length(const DirectionalWindowSpec& w) {
  const double norm = std::hypot(double(w.dir0), double(w.dir1));
  const double major = double(std::max(std::abs(w.dir0), std::abs(w.dir1)));
  return 2 * double(w.n_radius) * norm / major;
}

// Mean dimension along a direction: free coordinates on the directional
// window over the segment length (lower), per-site covering ratio over the
// same cells (upper). Requires the site resolution to align with the scale
// so the per-site cover has at least 1/eps elements.
inline DimensionEstimate directional_mdim_estimate(const System& sys,
                                                   const DirectionalWindowSpec& w,
                                                   const Rational& eps, const Config& background,
                                                   DetRng& rng, std::int64_t pairs = 1024) {
  if (sys.k != 2 || sys.s != 2)
    throw precondition_failed("directional estimate needs a rank-2 lattice action");
  if (sys.has_rule() || sys.cell_map)
    throw precondition_failed("directional estimate implemented for plain shifts");
  const auto cells = directional_window(w);
  const double length = directional_segment_length(w);
  std::vector<LatticeVector> window;
  for (const auto& c : cells) {
    LatticeVector u = LatticeVector::Zero(2);
    u[0] = c[0];
    u[1] = c[1];
    window.push_back(u);
  }

  const std::int64_t offset = background.klass.value_or(0);
  std::vector<Cell> free_cells;
  for (const auto& c : cells)
    if (!sys.restriction || sys.restriction->lambda.contains(c[0] - offset))
      free_cells.push_back(c);

  double per_site_dim = 0;
  double per_site_log_cover = 0;
  if (sys.site.kind() == SiteSpace::Kind::torus) {
    per_site_dim = double(sys.site.rank());
    const auto sc = detail::circle_counts(sys.site.q(), eps);
    per_site_log_cover = double(sys.site.rank()) * std::log(double(sc.second));
  } else {
    per_site_log_cover = std::log(double(sys.site.count()));
  }

  std::int64_t checked = 0;
  if (!free_cells.empty()) {
    if (pairs < 1000)
      throw precondition_failed("directional witness needs at least 1000 sampled pairs");
    checked = verify_embedding_witness(sys, free_cells, window, background, pairs, rng);
  }

  const double denom = -std::log(eps.to_double());
  if (!(denom > 0)) throw precondition_failed("scale must be below 1");
  const double lb = per_site_dim * double(free_cells.size()) / length;
  const double ub = double(free_cells.size()) * per_site_log_cover / (length * denom);

  std::ostringstream wit;
  wit << free_cells.size() << " free cells on the thickened line, " << checked
      << " pairs checked";
  std::ostringstream grid;
  grid << "dir=(" << w.dir0 << "," << w.dir1 << ") r=" << detail::rational_str(w.thickness)
       << " N=" << w.n_radius << " eps=" << detail::rational_str(eps);
  return make_estimate(DimensionEstimate::Kind::directional_mdim, lb, ub, wit.str(), grid.str());
}

// A cellwise local rule: reads the sup-ball of the given radius around each
// cell, writes one site value. site_stretch certifies the sum-form
// sensitivity: d(rule(u), rule(v)) <= site_stretch * sum of input distances.
struct CellwiseMap {
  std::string name;
  int radius = 0;
  double site_stretch = 1;
  std::function<SiteValue(const System&, const Config&, const Cell&)> rule;
};

inline Config apply_cellwise(const System& sys, const CellwiseMap& f, const Config& x) {
  const Box& b = x.box();
  if (b.s == 0) {
    Config out = x;
    out.values()[0] = f.rule(sys, x, Cell{0, 0});
    return out;
  }
  Box nb = b;
  for (int ax = 0; ax < b.s; ++ax) {
    nb.lo[ax] += f.radius;
    nb.hi[ax] -= f.radius;
    if (nb.lo[ax] > nb.hi[ax])
      throw insufficient_margin("box too small for the rule radius");
  }
  Config out(nb);
  out.klass = x.klass;
  const std::int64_t lo1 = nb.s >= 2 ? nb.lo[1] : 0;
  const std::int64_t hi1 = nb.s >= 2 ? nb.hi[1] : 0;
  for (std::int64_t c1 = lo1; c1 <= hi1; ++c1)
    for (std::int64_t c0 = nb.lo[0]; c0 <= nb.hi[0]; ++c0)
      out.at(Cell{c0, nb.s >= 2 ? c1 : 0}) = f.rule(sys, x, Cell{c0, nb.s >= 2 ? c1 : 0});
  return out;
}

struct LipschitzEndoReport {
  double l_sampled = 0;
  double l_certified = 0;
  double h_lb = 0;
  double h_ub = 0;
  double rhs = 0;
  bool ok = false;
  std::int64_t commutation_checked = 0;
  std::int64_t quotients_sampled = 0;
};

// Checks the entropy-vs-mean-dimension inequality for a commuting cellwise
// map: h(T, f) space-time lower bound (zero at desk scale: no finite
// certificate of positive space-time growth is attempted) must not exceed
// log+ of the certified Lipschitz constant times the metric mean dimension
// upper estimate.
inline LipschitzEndoReport lipschitz_endo_check(const System& sys, const CellwiseMap& f,
                                                const DimensionEstimate& metric_estimate,
                                                const std::vector<std::int64_t>& space_radii,
                                                const std::vector<std::int64_t>& time_steps,
                                                DetRng& rng, std::int64_t samples = 64,
                                                double tol = 1e-9,
                                                std::uint64_t cap = (std::uint64_t(1) << 20)) {
  if (sys.has_rule() || sys.restriction)
    throw precondition_failed("endomorphism check implemented for full shifts");
  if (!f.rule) throw precondition_failed("cellwise map needs a rule");
  if (samples < 1) throw precondition_failed("need at least one sample");
  LipschitzEndoReport rep;

  const std::int64_t sample_radius = 6 + f.radius;
  auto random_config = [&](std::int64_t radius) {
    Config c(centered_box(sys.s, radius));
    for (auto& v : c.values()) v = random_site_value(sys.site, rng);
    return c;
  };

  // Commutation on the shift generators, compared on the common core.
  for (int g = 0; g < sys.k; ++g) {
    LatticeVector u = LatticeVector::Zero(sys.k);
    u[g] = 1;
    for (std::int64_t s = 0; s < samples; ++s) {
      const Config x = random_config(sample_radius);
      const Config a = apply_cellwise(sys, f, apply(sys, u, x));
      const Config b = apply(sys, u, apply_cellwise(sys, f, x));
      Box common = a.box();
      for (int ax = 0; ax < common.s; ++ax) {
        common.lo[ax] = std::max(common.lo[ax], b.box().lo[ax]);
        common.hi[ax] = std::min(common.hi[ax], b.box().hi[ax]);
      }
      if (!(detail::crop_to(a, common) == detail::crop_to(b, common)))
        throw check_failed("cellwise map does not commute with the action");
      ++rep.commutation_checked;
    }
  }

  // Certified Lipschitz constant: site stretch times the total weight gain a
  // difference can pick up moving across the rule ball.
  double weight_gain = 0;
  for (const auto& j : window_points(Window::box(f.radius, sys.s))) {
    std::int64_t sup = 0;
    for (auto v : j) sup = std::max(sup, std::abs(v));
    weight_gain += std::pow(2.0, double(sup));
  }
  rep.l_certified = f.site_stretch * weight_gain;

  // Sampled difference quotients in the weighted series metric, perturbing a
  // single cell at varying distances plus directed site perturbations.
  const std::int64_t depth = std::min<std::int64_t>(kDefaultSeriesDepth, sample_radius - f.radius);
  for (std::int64_t s = 0; s < samples; ++s) {
    Config x = random_config(sample_radius);
    Config y = x;
    const std::int64_t spot =
        std::int64_t(rng.below(std::uint64_t(2 * depth + 1))) - depth;
    Cell cell{spot, 0};
    if (sys.s >= 2) cell[1] = std::int64_t(rng.below(std::uint64_t(2 * depth + 1))) - depth;
    SiteValue v = y.at(cell);
    if (sys.site.kind() == SiteSpace::Kind::torus) {
      for (int i = 0; i < sys.site.rank(); ++i)
        v.c[i] = SiteSpace::mod(v.c[i] + std::int64_t(rng.below(3)) - 1, sys.site.q());
      if (v == y.at(cell)) v.c[0] = SiteSpace::mod(v.c[0] + 1, sys.site.q());
    } else {
      v = sys.site.value_at((sys.site.flat_index(v) + 1) % sys.site.count());
    }
    y.at(cell) = v;
    const Rational din = series_distance(sys, x, y, depth);
    if (!(din > Rational(0))) continue;
    const Rational dout =
        series_distance(sys, apply_cellwise(sys, f, x), apply_cellwise(sys, f, y), depth);
    rep.l_sampled = std::max(rep.l_sampled, dout.to_double() / din.to_double());
    ++rep.quotients_sampled;
  }
  if (rep.l_sampled > rep.l_certified + 1e-9)
    throw check_failed("sampled quotient exceeds the certified Lipschitz bound");

  // Space-time pattern counts: rows are f-iterates, everything determined by
  // row zero on a widened box.
  rep.h_ub = std::numeric_limits<double>::infinity();
  for (std::int64_t n : space_radii)
    for (std::int64_t steps : time_steps) {
      const std::int64_t wide = n + steps * f.radius;
      const Box seed_box = centered_box(sys.s, wide);
      const std::uint64_t total =
          detail::checked_pow_u64(std::uint64_t(sys.site.count()),
                                  std::uint64_t(seed_box.cells()))
              .value_or(std::numeric_limits<std::uint64_t>::max());
      if (total > cap) throw cap_exceeded("space-time enumeration cap exceeded");
      std::set<std::vector<std::int64_t>> blocks;
      for (const auto& seed : pattern_list(sys, seed_box, cap)) {
        std::vector<std::int64_t> key;
        Config row = seed;
        for (std::int64_t t = 0; t <= steps; ++t) {
          const Config central = detail::crop_to(row, centered_box(sys.s, n));
          for (const auto& v : central.values()) key.push_back(sys.site.flat_index(v));
          if (t < steps) row = apply_cellwise(sys, f, row);
        }
        blocks.insert(std::move(key));
      }
      const double cells_norm =
          double(centered_box(sys.s, n).cells()) * double(steps + 1);
      rep.h_ub = std::min(rep.h_ub, std::log(double(blocks.size())) / cells_norm);
    }
  rep.h_lb = 0;

  rep.rhs = std::max(0.0, std::log(std::max(1.0, rep.l_certified))) *
            std::max(0.0, metric_estimate.ub);
  rep.ok = rep.h_lb <= rep.rhs + tol;
  if (!rep.ok) throw check_failed("space-time entropy exceeds the Lipschitz bound");
  return rep;
}

struct LwReport {
  double lhs = 0;
  double rhs = 0;
  bool ok = false;
};

// Embedding lower bound must not exceed the metric mean dimension upper
// estimate; a violation is an estimator defect, reported hard.
inline LwReport lw_inequality_check(const DimensionEstimate& embedding,
                                    const DimensionEstimate& metric, double tol = 1e-9) {
  LwReport r;
  r.lhs = embedding.lb;
  r.rhs = metric.ub + tol;
  r.ok = r.lhs <= r.rhs;
  if (!r.ok) throw check_failed("embedding bound exceeds the metric mean dimension estimate");
  return r;
}

}  // namespace meandim
