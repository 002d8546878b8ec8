#pragma once

// Quasi-metrics and their metrization. A table satisfying the doubling axiom
// rho(x, z) <= 2 max(rho(x, y), rho(y, z)) admits a genuine metric D with
// rho / 4 <= D <= rho, obtained as the chain infimum; on a finite table the
// infimum is all-pairs shortest path. The dynamical quasi-metric comes from
// separation indices: rho = alpha^{-(first window radius that separates)}
// with alpha = 2^{1/(lag+1)} for a lag that refreshes separation from c/2
// back to c.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "meandim/counting.hpp"
#include "meandim/expansive.hpp"
#include "meandim/metric.hpp"

namespace meandim {

class unresolved_separation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- Quasi-metric verification and metrization -------------------------------

// Checks shape (zero diagonal, symmetry, nonnegativity) and the doubling
// axiom with the given coefficient; returns the first offending triple
// (i, j, k) meaning rho(i, k) > coeff * max(rho(i, j), rho(j, k)).
template <typename Scalar>
std::optional<std::array<Eigen::Index, 3>> verify_quasi_metric(const DistanceTable<Scalar>& t,
                                                               const Scalar& coeff = Scalar(2)) {
  const Eigen::Index n = t.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(t(i, i) == Scalar(0))) throw precondition_failed("quasi-metric: nonzero diagonal");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (t(i, j) < Scalar(0)) throw precondition_failed("quasi-metric: negative entry");
      if (!(t(i, j) == t(j, i))) throw precondition_failed("quasi-metric: asymmetric");
    }
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k) {
        Scalar cap = coeff * std::max(t(i, j), t(j, k)) + t.tolerance();
        if (t(i, k) > cap) return std::array<Eigen::Index, 3>{i, j, k};
      }
  return std::nullopt;
}

// Random doubling quasi-metric. A recursive random partition assigns each
// pair the depth at which it first splits, which is an ultrametric level
// L(i, k) >= min(L(i, j), L(j, k)); an independent one-step bump per pair
// keeps that inequality up to 1, so rho = 2^{-(L + bump)} satisfies the
// doubling axiom exactly while generically violating the triangle
// inequality.
inline DistanceTable<Rational> random_quasi_metric(Eigen::Index n, DetRng& rng,
                                                   int max_depth = 6) {
  if (n < 2) throw precondition_failed("need at least two points");
  if (max_depth < 1) throw precondition_failed("partition depth must be positive");
  std::vector<std::vector<int>> level(size_t(n), std::vector<int>(size_t(n), max_depth));
  std::vector<Eigen::Index> all;
  for (Eigen::Index i = 0; i < n; ++i) all.push_back(i);
  std::function<void(const std::vector<Eigen::Index>&, int)> split =
      [&](const std::vector<Eigen::Index>& group, int depth) {
        if (depth >= max_depth || group.size() <= 1) return;
        std::vector<Eigen::Index> a, b;
        for (Eigen::Index i : group) (rng.below(2) == 0 ? a : b).push_back(i);
        for (Eigen::Index i : a)
          for (Eigen::Index j : b) level[size_t(i)][size_t(j)] = level[size_t(j)][size_t(i)] = depth;
        split(a, depth + 1);
        split(b, depth + 1);
      };
  split(all, 0);
  DistanceTable<Rational> rho(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      rho.set(i, j, Rational::dyadic(-(level[size_t(i)][size_t(j)] + int(rng.below(2)))));
  return rho;
}

// Chain-infimum metric of a doubling quasi-metric, with the sandwich
// rho / 4 <= D <= rho checked on every pair.
template <typename Scalar>
DistanceTable<Scalar> frink_metrize(const DistanceTable<Scalar>& rho) {
  if (rho.size() > 512) throw cap_exceeded("metrization capped at 512 points");
  if (auto bad = verify_quasi_metric(rho))
    throw precondition_failed("table is not a doubling quasi-metric at triple (" +
                              std::to_string((*bad)[0]) + "," + std::to_string((*bad)[1]) + "," +
                              std::to_string((*bad)[2]) + ")");
  const Eigen::Index n = rho.size();
  DistanceTable<Scalar> d(n, rho.tolerance());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d.at(i, j) = rho(i, j);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        Scalar via = d(i, k) + d(k, j);
        if (via < d(i, j)) d.at(i, j) = via;
      }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (d(i, j) + d.tolerance() < rho(i, j) / Scalar(4))
        throw precondition_failed("chain infimum fell below rho / 4 at (" + std::to_string(i) +
                                  "," + std::to_string(j) + ")");
      if (d(i, j) > rho(i, j) + d.tolerance())
        throw precondition_failed("chain infimum exceeded rho");
    }
  return d;
}

// Chains z_0 ... z_m in a doubling quasi-metric satisfy
// rho(z_0, z_m) <= 2 rho(z_0, z_1) + 4 sum_middle + 2 rho(z_{m-1}, z_m).
template <typename Scalar>
bool chain_inequality_holds(const DistanceTable<Scalar>& rho,
                            const std::vector<Eigen::Index>& chain) {
  if (chain.size() < 3) throw precondition_failed("chain needs at least two edges");
  for (Eigen::Index i : chain)
    if (i < 0 || i >= rho.size()) throw precondition_failed("chain index out of range");
  const size_t m = chain.size() - 1;
  Scalar bound = Scalar(2) * rho(chain[0], chain[1]) + Scalar(2) * rho(chain[m - 1], chain[m]);
  for (size_t i = 1; i + 1 < m; ++i) bound = bound + Scalar(4) * rho(chain[i], chain[i + 1]);
  return !(rho(chain[0], chain[m]) > bound + rho.tolerance());
}

struct ChainCheckReport {
  std::int64_t chains_checked = 0;
  std::int64_t violations = 0;
};

template <typename Scalar>
ChainCheckReport chain_inequality_check(const DistanceTable<Scalar>& rho, std::int64_t chains,
                                        std::int64_t max_edges, DetRng& rng) {
  if (rho.size() < 2) throw precondition_failed("need at least two points");
  if (max_edges < 2) throw precondition_failed("need chains of at least two edges");
  ChainCheckReport rep;
  const std::uint64_t n = std::uint64_t(rho.size());
  for (std::int64_t t = 0; t < chains; ++t) {
    std::int64_t m = 2 + std::int64_t(rng.below(std::uint64_t(max_edges - 1)));
    std::vector<Eigen::Index> z;
    z.push_back(Eigen::Index(rng.below(n)));
    for (std::int64_t i = 0; i < m; ++i) {
      Eigen::Index next;
      do {
        next = Eigen::Index(rng.below(n));
      } while (next == z.back());
      z.push_back(next);
    }
    ++rep.chains_checked;
    if (!chain_inequality_holds(rho, z)) ++rep.violations;
  }
  return rep;
}

// ---- Separation indices and the dynamical quasi-metric -----------------------

struct SeparationIndex {
  std::optional<std::int64_t> index;  // empty: no separation seen (rho = 0)
  Rational sup_seen;
};

// First window radius l with sup_{|u| <= l} d(T^u x, T^u y) >= c under the
// truncated series metric. Identical configurations report the empty index;
// configurations that differ without ever reaching c within l_max cannot be
// classified and throw.
inline SeparationIndex separation_index(const System& sys, const Config& x, const Config& y,
                                        const Rational& c, std::int64_t l_max,
                                        std::int64_t depth = kDefaultSeriesDepth) {
  if (!(Rational(0) < c)) throw precondition_failed("separation threshold must be positive");
  SeparationIndex out;
  for (std::int64_t l = 0; l <= l_max; ++l) {
    auto pts = l == 0 ? window_points(Window::box(0, sys.k))
                      : window_points(Window::boundary(l, sys.k));
    Rational d = series_window_distance(sys, x, y, pts, depth);
    if (out.sup_seen < d) out.sup_seen = d;
    if (c <= out.sup_seen) {
      out.index = l;
      return out;
    }
  }
  if (x.box() == y.box() && x.values() == y.values()) return out;
  throw unresolved_separation("pair differs but never separated to c within l_max = " +
                              std::to_string(l_max));
}

// Certificate-backed flavor: the threshold is the certified constant.
inline SeparationIndex separation_index(const System& sys, const ExpansivityCertificate& cert,
                                        const Config& x, const Config& y, std::int64_t l_max,
                                        std::int64_t depth = kDefaultSeriesDepth) {
  if (!cert.certified())
    throw precondition_failed("separation index needs a certified expansivity constant");
  return separation_index(sys, x, y, cert.c, l_max, depth);
}

struct DynamicalRho {
  std::int64_t lag = 0;           // refresh lag l
  Rational alpha_exponent;        // alpha = 2^{alpha_exponent} = 2^{1/(lag+1)}
  double alpha = 0;
  DistanceTable<double> rho;      // alpha^{-sep}, 0 for inseparable pairs
  std::vector<std::vector<std::int64_t>> sep;  // -1 for inseparable
  std::int64_t pairs_inseparable = 0;
};

// Builds the quasi-metric rho = alpha^{-sep} on the sample. The lag is the
// smallest l >= 1 such that, on the sample, base distance >= c/2 separates
// to c within l, and separation indices satisfy the resulting triple bound
// sep(i, k) >= min(sep(i, j), sep(j, k)) - l.
inline DynamicalRho dynamical_rho(const System& sys, const std::vector<Config>& sample,
                                  const Rational& c, std::int64_t l_max,
                                  std::int64_t depth = kDefaultSeriesDepth) {
  const std::int64_t n = std::int64_t(sample.size());
  if (n < 2) throw precondition_failed("need at least two sample points");
  DynamicalRho out;
  out.sep.assign(size_t(n), std::vector<std::int64_t>(size_t(n), -1));
  std::vector<std::vector<Rational>> base(size_t(n), std::vector<Rational>(size_t(n), Rational(0)));
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j) {
      auto si = separation_index(sys, sample[size_t(i)], sample[size_t(j)], c, l_max, depth);
      std::int64_t v = si.index ? *si.index : -1;
      out.sep[size_t(i)][size_t(j)] = v;
      out.sep[size_t(j)][size_t(i)] = v;
      if (v < 0) ++out.pairs_inseparable;
      Rational d = series_distance(sys, sample[size_t(i)], sample[size_t(j)], depth);
      base[size_t(i)][size_t(j)] = d;
      base[size_t(j)][size_t(i)] = d;
    }

  const Rational half_c = c / Rational(2);
  auto inf_or = [](std::int64_t v, std::int64_t huge) { return v < 0 ? huge : v; };
  std::int64_t lag = 0;
  for (std::int64_t l = 1; l <= l_max && lag == 0; ++l) {
    bool ok = true;
    for (std::int64_t i = 0; i < n && ok; ++i)
      for (std::int64_t j = i + 1; j < n && ok; ++j)
        if (half_c <= base[size_t(i)][size_t(j)])
          ok = out.sep[size_t(i)][size_t(j)] >= 0 && out.sep[size_t(i)][size_t(j)] <= l;
    const std::int64_t huge = l_max + l + 2;
    for (std::int64_t i = 0; i < n && ok; ++i)
      for (std::int64_t j = 0; j < n && ok; ++j)
        for (std::int64_t k = 0; k < n && ok; ++k) {
          std::int64_t ik = inf_or(out.sep[size_t(i)][size_t(k)], huge);
          std::int64_t ij = inf_or(out.sep[size_t(i)][size_t(j)], huge);
          std::int64_t jk = inf_or(out.sep[size_t(j)][size_t(k)], huge);
          if (ik < std::min(ij, jk) - l) ok = false;
        }
    if (ok) lag = l;
  }
  if (lag == 0)
    throw not_found_within("no refresh lag within l_max = " + std::to_string(l_max));
  out.lag = lag;
  out.alpha_exponent = Rational(1, lag + 1);
  out.alpha = std::exp2(1.0 / double(lag + 1));
  out.rho = DistanceTable<double>(n, 1e-12);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j) {
      std::int64_t s = out.sep[size_t(i)][size_t(j)];
      out.rho.set(i, j, s < 0 ? 0.0 : std::exp2(-double(s) / double(lag + 1)));
    }
  return out;
}

// ---- Consequence checks -------------------------------------------------------

namespace detail {

// Copy of x on the sub-box nb; the cropped core is the default origin cell.
inline Config crop_to(const Config& x, const Box& nb) {
  if (!x.box().contains_box(nb)) throw precondition_failed("crop box not inside config box");
  Config y(nb);
  Cell c;
  for (std::int64_t i0 = nb.lo[0]; i0 <= nb.hi[0]; ++i0) {
    c[0] = i0;
    if (nb.s >= 2) {
      for (std::int64_t i1 = nb.lo[1]; i1 <= nb.hi[1]; ++i1) {
        c[1] = i1;
        y.at(c) = x.at(c);
      }
    } else {
      c[1] = 0;
      y.at(c) = x.at(c);
    }
  }
  y.klass = x.klass;
  return y;
}

}  // namespace detail

struct Lemma44Report {
  std::int64_t pairs_checked = 0;
  std::int64_t hypothesis_held = 0;
  std::int64_t violations = 0;
  std::int64_t closed_sample = 0;
};

// With D the metrization of rho: if max_{|u| < m} D(T^u x, T^u y) < 1/(4 alpha)
// then D(x, y) < alpha^{-m}. Verified for m <= n_max on the sample closed
// under the window of radius n_max - 1; shifted images are cropped to the
// common box so equal points coincide.
inline Lemma44Report lemma_4_4_check(const System& sys, const std::vector<Config>& sample,
                                     const Rational& c, std::int64_t n_max, std::int64_t l_max,
                                     std::int64_t depth = kDefaultSeriesDepth) {
  if (n_max < 1) throw precondition_failed("n_max must be at least 1");
  if (sample.empty()) throw precondition_failed("empty sample");
  auto pts = window_points(Window::box(n_max - 1, sys.k));
  Box common = sample[0].box();
  for (const auto& x : sample)
    if (!(x.box() == common)) throw precondition_failed("sample must share one box");
  for (int ax = 0; ax < common.s; ++ax) {
    common.lo[ax] += n_max - 1;
    common.hi[ax] -= n_max - 1;
    if (common.lo[ax] > common.hi[ax])
      throw precondition_failed("sample box too small for the closing window");
  }
  std::vector<Config> closed;
  std::vector<std::vector<size_t>> idx(pts.size(), std::vector<size_t>(sample.size()));
  for (size_t ui = 0; ui < pts.size(); ++ui)
    for (size_t i = 0; i < sample.size(); ++i) {
      Config img = detail::crop_to(apply(sys, pts[ui], sample[i]), common);
      size_t found = closed.size();
      for (size_t j = 0; j < closed.size(); ++j)
        if (closed[j].values() == img.values() && closed[j].klass == img.klass) {
          found = j;
          break;
        }
      if (found == closed.size()) closed.push_back(std::move(img));
      idx[ui][i] = found;
    }

  auto dr = dynamical_rho(sys, closed, c, l_max, depth);
  auto D = frink_metrize(dr.rho);
  const double hyp_cap = 1.0 / (4.0 * dr.alpha);

  Lemma44Report rep;
  rep.closed_sample = std::int64_t(closed.size());
  size_t origin_ui = 0;
  for (size_t ui = 0; ui < pts.size(); ++ui) {
    bool zero = true;
    for (int ax = 0; ax < sys.k; ++ax) zero = zero && pts[ui][ax] == 0;
    if (zero) origin_ui = ui;
  }
  for (size_t i = 0; i < sample.size(); ++i)
    for (size_t j = i + 1; j < sample.size(); ++j)
      for (std::int64_t m = 1; m <= n_max; ++m) {
        ++rep.pairs_checked;
        double hyp = 0;
        for (size_t ui = 0; ui < pts.size(); ++ui) {
          bool inside = true;
          for (int ax = 0; ax < sys.k; ++ax)
            if (std::abs(pts[ui][ax]) >= m) inside = false;
          if (!inside) continue;
          hyp = std::max(hyp, D(Eigen::Index(idx[ui][i]), Eigen::Index(idx[ui][j])));
        }
        if (!(hyp < hyp_cap)) continue;
        ++rep.hypothesis_held;
        double cap = std::exp2(-double(m) / double(dr.lag + 1));
        if (!(D(Eigen::Index(idx[origin_ui][i]), Eigen::Index(idx[origin_ui][j])) <
              cap + 1e-12))
          ++rep.violations;
      }
  return rep;
}

struct CoveringTransferReport {
  std::int64_t radius = 0;
  std::int64_t window_separated = 0;  // witness size at threshold c, window metric
  std::int64_t violations = 0;        // witness pairs with D below alpha^{-radius} / 4
};

// A set that is c-separated in the window metric of radius n is
// alpha^{-n}/4-separated in the metrized D: separation within radius n means
// rho >= alpha^{-n}, and D >= rho / 4.
inline std::vector<CoveringTransferReport> covering_transfer_check(
    const System& sys, const std::vector<Config>& sample, const DynamicalRho& dr,
    const Rational& c, const std::vector<std::int64_t>& radii,
    std::int64_t depth = kDefaultSeriesDepth) {
  const Eigen::Index n = Eigen::Index(sample.size());
  if (n != dr.rho.size()) throw precondition_failed("sample and rho table sizes differ");
  auto D = frink_metrize(dr.rho);
  std::vector<CoveringTransferReport> out;
  for (std::int64_t radius : radii) {
    auto pts = window_points(Window::box(radius, sys.k));
    DistanceTable<Rational> wt(n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        wt.set(i, j, series_window_distance(sys, sample[size_t(i)], sample[size_t(j)], pts, depth));
    auto witness = separated_prefix(farthest_point_traversal(wt), c);
    CoveringTransferReport rep;
    rep.radius = radius;
    rep.window_separated = std::int64_t(witness.size());
    const double floor =
        std::exp2(-double(radius) / double(dr.lag + 1)) / 4.0 - 1e-12;
    for (size_t a = 0; a < witness.size(); ++a)
      for (size_t b = a + 1; b < witness.size(); ++b)
        if (D(witness[a], witness[b]) < floor) ++rep.violations;
    out.push_back(rep);
  }
  return out;
}

// Upper bound 2 (K+1)^k h / log(alpha) for mean dimension from a coding
// constant K, an entropy bound h (natural log), and the scaling factor alpha.
inline double main_bound_evaluate(std::int64_t K, int k, double h_upper, double alpha) {
  if (K < 1) throw precondition_failed("coding constant must be at least 1");
  if (k < 1) throw precondition_failed("need at least one acting direction");
  if (h_upper < 0) throw precondition_failed("entropy bound must be nonnegative");
  if (!(alpha > 1)) throw precondition_failed("alpha must exceed 1");
  return 2.0 * std::pow(double(K + 1), double(k)) * h_upper / std::log(alpha);
}

}  // namespace meandim
