#pragma once

// Pattern enumeration and exact counting for the systems layer. Counts come
// back as a PatternCount: a natural log that is always present, plus the
// exact integer when it fits in 64 bits. Enumeration is backtracking with
// rule checks fired as soon as a placement is fully assigned; restricted
// systems enumerate per offset class and deduplicate.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "meandim/system.hpp"
#include "meandim/util.hpp"

namespace meandim {

struct PatternCount {
  double log_value = 0;  // natural log of the count
  std::optional<std::uint64_t> exact;

  static PatternCount from_exact(std::uint64_t v) {
    PatternCount p;
    p.exact = v;
    p.log_value = v == 0 ? -std::numeric_limits<double>::infinity() : std::log(double(v));
    return p;
  }
  static PatternCount from_log(double lg) {
    PatternCount p;
    p.log_value = lg;
    return p;
  }
};

namespace detail {

inline std::optional<std::uint64_t> checked_pow_u64(std::uint64_t base, std::uint64_t exp) {
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    acc *= base;
    if (acc > std::numeric_limits<std::uint64_t>::max()) return std::nullopt;
  }
  return std::uint64_t(acc);
}

inline PatternCount power_count(std::uint64_t base, std::uint64_t exp) {
  if (auto v = checked_pow_u64(base, exp)) return PatternCount::from_exact(*v);
  return PatternCount::from_log(double(exp) * std::log(double(base)));
}

// Signed sum of terms a^e * f^g, exact in __int128 when possible, else via
// log-space accumulation anchored at the largest term.
class SignedTermSum {
 public:
  void add(int sign, std::uint64_t a, std::uint64_t e, std::uint64_t f, std::uint64_t g) {
    long double lg = (long double)(e) * std::log((long double)a) +
                     (g == 0 ? 0.0L : (long double)(g) * std::log((long double)f));
    terms_.push_back({sign, lg});
    if (exact_ok_) {
      auto pa = checked_pow_u64(a, e);
      auto pf = checked_pow_u64(f, g);
      if (pa && pf) {
        unsigned __int128 prod = (unsigned __int128)(*pa) * (*pf);
        if (prod <= (unsigned __int128)1 << 126) {
          exact_acc_ += sign * (__int128)prod;
          return;
        }
      }
      exact_ok_ = false;
    }
  }

  PatternCount total() const {
    if (exact_ok_) {
      if (exact_acc_ < 0) throw std::logic_error("signed count collapsed below zero");
      if (exact_acc_ <= (__int128)std::numeric_limits<std::uint64_t>::max())
        return PatternCount::from_exact(std::uint64_t(exact_acc_));
    }
    auto sorted = terms_;
    std::sort(sorted.begin(), sorted.end(),
              [](const Term& x, const Term& y) { return x.lg > y.lg; });
    if (sorted.empty()) return PatternCount::from_exact(0);
    long double rel = 0;
    for (const auto& t : sorted) rel += t.sign * std::exp(t.lg - sorted.front().lg);
    if (rel <= 0) throw std::logic_error("signed count collapsed below zero");
    return PatternCount::from_log(double(sorted.front().lg + std::log(rel)));
  }

 private:
  struct Term {
    int sign;
    long double lg;
  };
  std::vector<Term> terms_;
  __int128 exact_acc_ = 0;
  bool exact_ok_ = true;
};

}  // namespace detail

// ---- Restricted systems: union over offset classes -----------------------

// Exact count on a box for a restricted system, by inclusion-exclusion over
// the offset classes: the class-l patterns form a product set (full site on
// support columns, frozen set elsewhere), and intersections of classes are
// again product sets over the intersected supports.
inline PatternCount restricted_pattern_count(const System& sys, const Box& box) {
  const Restriction& rest = *sys.restriction;
  const std::int64_t P = rest.lambda.period;
  if (P > 20) throw cap_exceeded("offset-class inclusion-exclusion capped at period 20");
  const std::int64_t rows = box.s >= 2 ? box.length(1) : 1;
  const std::int64_t cols = box.length(0);
  const std::uint64_t a = std::uint64_t(sys.site.count());
  const std::uint64_t f = std::uint64_t(rest.frozen.size());

  std::vector<std::int64_t> per_residue(size_t(P), 0);
  for (std::int64_t r = 0; r < P; ++r) {
    std::int64_t first = box.lo[0] + SiteSpace::mod(r - box.lo[0], P);
    if (first <= box.hi[0]) per_residue[size_t(r)] = (box.hi[0] - first) / P + 1;
  }

  detail::SignedTermSum sum;
  for (std::uint32_t mask = 1; mask < (1u << P); ++mask) {
    std::int64_t support_cols = 0;
    for (std::int64_t r = 0; r < P; ++r) {
      bool in_all = true;
      for (std::int64_t l = 0; l < P && in_all; ++l)
        if (mask & (1u << l)) in_all = rest.lambda.contains(r - l);
      if (in_all) support_cols += per_residue[size_t(r)];
    }
    int sign = (std::popcount(mask) % 2 == 1) ? 1 : -1;
    sum.add(sign, a, std::uint64_t(support_cols * rows), f,
            std::uint64_t((cols - support_cols) * rows));
  }
  return sum.total();
}

// ---- Enumeration ----------------------------------------------------------

namespace detail {

// Row-major order of cells inside a box.
inline std::vector<Cell> box_cells(const Box& box) {
  std::vector<Cell> cells;
  if (box.s == 0) {
    cells.push_back({0, 0});
    return cells;
  }
  for (std::int64_t i0 = box.lo[0]; i0 <= box.hi[0]; ++i0) {
    if (box.s >= 2)
      for (std::int64_t i1 = box.lo[1]; i1 <= box.hi[1]; ++i1) cells.push_back({i0, i1});
    else
      cells.push_back({i0, 0});
  }
  return cells;
}

inline std::uint64_t enumerate_rule_patterns(const System& sys, const Box& box,
                                             std::uint64_t cap,
                                             const std::function<void(const Config&)>& sink) {
  const auto cells = box_cells(box);
  const std::int64_t m = sys.site.count();

  // Placements of the rule shape fully inside the box, bucketed by the
  // row-major position of their last (largest) cell.
  std::vector<std::vector<Cell>> due(cells.size());
  if (sys.has_rule()) {
    const auto& shape = sys.linear_rule ? sys.linear_rule->shape : sys.forbidden_rule->shape;
    Cell ext_lo{0, 0}, ext_hi{0, 0};
    for (const auto& sc : shape)
      for (int ax = 0; ax < 2; ++ax) {
        ext_lo[ax] = std::min(ext_lo[ax], sc[ax]);
        ext_hi[ax] = std::max(ext_hi[ax], sc[ax]);
      }
    auto rank_of = [&](const Cell& c) {
      std::int64_t len1 = box.s >= 2 ? box.length(1) : 1;
      return (c[0] - box.lo[0]) * len1 + (box.s >= 2 ? c[1] - box.lo[1] : 0);
    };
    for (std::int64_t o0 = box.lo[0] - ext_lo[0]; o0 + ext_hi[0] <= box.hi[0]; ++o0) {
      std::int64_t lo1 = box.s >= 2 ? box.lo[1] - ext_lo[1] : 0;
      std::int64_t hi1 = box.s >= 2 ? box.hi[1] - ext_hi[1] : 0;
      for (std::int64_t o1 = lo1; o1 <= hi1; ++o1) {
        Cell last{o0, o1};
        for (const auto& sc : shape) {
          Cell cand{o0 + sc[0], o1 + sc[1]};
          if (cand > last) last = cand;
        }
        due[size_t(rank_of(last))].push_back({o0, o1});
      }
    }
  }

  Config work((box));
  std::uint64_t found = 0;
  std::function<void(size_t)> rec = [&](size_t idx) {
    if (idx == cells.size()) {
      if (++found > cap) throw cap_exceeded("pattern enumeration cap exceeded");
      if (sink) sink(work);
      return;
    }
    for (std::int64_t v = 0; v < m; ++v) {
      work.at(cells[idx]) = sys.site.value_at(v);
      bool ok = true;
      for (const auto& off : due[idx])
        if (!rule_holds_at(sys, work, off)) {
          ok = false;
          break;
        }
      if (ok) rec(idx + 1);
    }
  };
  rec(0);
  return found;
}

inline std::uint64_t enumerate_restricted_patterns(const System& sys, const Box& box,
                                                   std::uint64_t cap,
                                                   const std::function<void(const Config&)>& sink) {
  const Restriction& rest = *sys.restriction;
  const std::int64_t P = rest.lambda.period;
  const auto cells = box_cells(box);

  std::vector<SiteValue> full;
  for (std::int64_t v = 0; v < sys.site.count(); ++v) full.push_back(sys.site.value_at(v));

  std::set<std::vector<SiteValue>> seen;
  for (std::int64_t l = 0; l < P; ++l) {
    std::vector<const std::vector<SiteValue>*> choices;
    for (const auto& c : cells)
      choices.push_back(rest.lambda.contains(c[0] - l) ? &full : &rest.frozen);
    std::vector<size_t> idx(cells.size(), 0);
    while (true) {
      std::vector<SiteValue> vals(cells.size());
      for (size_t i = 0; i < cells.size(); ++i) vals[i] = (*choices[i])[idx[i]];
      if (seen.insert(std::move(vals)).second && seen.size() > cap)
        throw cap_exceeded("pattern enumeration cap exceeded");
      size_t pos = cells.size();
      while (pos > 0) {
        --pos;
        if (++idx[pos] < choices[pos]->size()) break;
        idx[pos] = 0;
        if (pos == 0) goto next_class;
      }
      if (cells.empty()) break;
    }
  next_class:;
  }

  if (sink) {
    for (const auto& vals : seen) {
      Config c((box));
      c.values() = vals;
      sink(c);
    }
  }
  return seen.size();
}

}  // namespace detail

// Enumerate the legal patterns on a box; returns the count and feeds each
// pattern to the sink (which may be empty for count-only use).
inline std::uint64_t enumerate_patterns(const System& sys, const Box& box, std::uint64_t cap,
                                        const std::function<void(const Config&)>& sink = {}) {
  if (sys.restriction) return detail::enumerate_restricted_patterns(sys, box, cap, sink);
  return detail::enumerate_rule_patterns(sys, box, cap, sink);
}

inline std::vector<Config> pattern_list(const System& sys, const Box& box, std::uint64_t cap) {
  std::vector<Config> out;
  enumerate_patterns(sys, box, cap, [&](const Config& c) { out.push_back(c); });
  return out;
}

// Exact transfer-matrix word count for rank-1 nearest-neighbour rules.
inline std::optional<PatternCount> transfer_word_count(const System& sys, std::int64_t n) {
  if (sys.k != 1 || sys.s != 1 || !sys.forbidden_rule || sys.restriction) return std::nullopt;
  const auto& shape = sys.forbidden_rule->shape;
  if (!(shape.size() == 2 && shape[0] == Cell{0, 0} && shape[1] == Cell{1, 0}))
    return std::nullopt;
  const std::int64_t m = sys.site.count();
  std::vector<std::vector<bool>> allowed(size_t(m), std::vector<bool>(size_t(m), true));
  for (const auto& w : sys.forbidden_rule->words)
    allowed[size_t(sys.site.flat_index(w[0]))][size_t(sys.site.flat_index(w[1]))] = false;

  std::vector<std::uint64_t> cnt(size_t(m), 1);
  std::vector<long double> lcnt(size_t(m), 1.0L);
  bool exact_ok = true;
  long double scale = 0;  // lcnt is the true count divided by exp(scale)
  for (std::int64_t step = 1; step < n; ++step) {
    std::vector<std::uint64_t> nxt(size_t(m), 0);
    std::vector<long double> lnxt(size_t(m), 0.0L);
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < m; ++j)
        if (allowed[size_t(i)][size_t(j)]) {
          lnxt[size_t(j)] += lcnt[size_t(i)];
          if (exact_ok) {
            unsigned __int128 s = (unsigned __int128)nxt[size_t(j)] + cnt[size_t(i)];
            if (s > std::numeric_limits<std::uint64_t>::max())
              exact_ok = false;
            else
              nxt[size_t(j)] = std::uint64_t(s);
          }
        }
    cnt = nxt;
    long double mx = 0;
    for (long double v : lnxt) mx = std::max(mx, v);
    if (mx > 1e300L) {
      for (auto& v : lnxt) v /= mx;
      scale += std::log(mx);
    }
    lcnt = lnxt;
  }
  if (exact_ok) {
    unsigned __int128 tot = 0;
    for (std::uint64_t v : cnt) tot += v;
    if (tot <= std::numeric_limits<std::uint64_t>::max())
      return PatternCount::from_exact(std::uint64_t(tot));
  }
  long double tot = 0;
  for (long double v : lcnt) tot += v;
  return PatternCount::from_log(double(scale + std::log(tot)));
}

// Count of legal patterns on a box, via the cheapest exact route available:
// inclusion-exclusion for restricted systems, the determined-cell formula for
// a single linear rule with unit trailing coefficient, transfer matrices for
// rank-1 nearest-neighbour rules, powers for free shifts, and bounded brute
// enumeration as the last resort.
inline PatternCount pattern_count(const System& sys, const Box& box,
                                  std::uint64_t brute_cap = (std::uint64_t(1) << 22)) {
  const std::uint64_t cells = std::uint64_t(box.cells());
  if (sys.restriction) return restricted_pattern_count(sys, box);
  if (!sys.has_rule()) return detail::power_count(std::uint64_t(sys.site.count()), cells);

  if (sys.linear_rule && sys.site.kind() == SiteSpace::Kind::torus && sys.site.rank() == 1) {
    const auto& r = *sys.linear_rule;
    size_t last = 0;
    for (size_t i = 1; i < r.shape.size(); ++i)
      if (r.shape[i] > r.shape[last]) last = i;
    if (std::gcd(std::abs(r.coeffs[last]), sys.site.q()) == 1) {
      Cell ext_lo{0, 0}, ext_hi{0, 0};
      for (const auto& sc : r.shape)
        for (int ax = 0; ax < 2; ++ax) {
          ext_lo[ax] = std::min(ext_lo[ax], sc[ax]);
          ext_hi[ax] = std::max(ext_hi[ax], sc[ax]);
        }
      std::int64_t placements = 1;
      for (int ax = 0; ax < box.s; ++ax)
        placements *= std::max<std::int64_t>(0, box.length(ax) - (ext_hi[ax] - ext_lo[ax]));
      return detail::power_count(std::uint64_t(sys.site.q()),
                                 cells - std::uint64_t(placements));
    }
  }

  if (auto t = transfer_word_count(sys, box.s >= 1 ? box.length(0) : 1)) return *t;

  return PatternCount::from_exact(enumerate_patterns(sys, box, brute_cap));
}

// ---- Linear-rule structure and sampling ------------------------------------

namespace detail {
inline std::int64_t inv_mod(std::int64_t a, std::int64_t q) {
  a = SiteSpace::mod(a, q);
  std::int64_t t = 0, new_t = 1, r = q, new_r = a;
  while (new_r != 0) {
    std::int64_t quo = r / new_r;
    t = std::exchange(new_t, t - quo * new_t);
    r = std::exchange(new_r, r - quo * new_r);
  }
  if (r != 1) throw precondition_failed("rule coefficient not invertible mod q");
  return SiteSpace::mod(t, q);
}
}  // namespace detail

// Free/determined classification of box cells under a single linear rule
// whose row-major-last shape cell has an invertible coefficient: each
// placement determines exactly its last cell from the earlier ones.
struct LinearStructure {
  std::vector<Cell> cells;           // row-major
  std::vector<Cell> offsets;         // placement origins, in order of their last cell
  std::vector<std::int64_t> determined_by;  // cell index -> placement index or -1
  std::vector<size_t> free_cells;    // indices into cells
};

inline LinearStructure linear_structure(const System& sys, const Box& box) {
  if (!sys.linear_rule) throw precondition_failed("system has no linear rule");
  const auto& r = *sys.linear_rule;
  size_t last = 0;
  for (size_t i = 1; i < r.shape.size(); ++i)
    if (r.shape[i] > r.shape[last]) last = i;
  if (std::gcd(std::abs(r.coeffs[last]), sys.site.q()) != 1)
    throw precondition_failed("trailing rule coefficient must be a unit mod q");

  LinearStructure st;
  st.cells = detail::box_cells(box);
  st.determined_by.assign(st.cells.size(), -1);
  auto rank_of = [&](const Cell& c) {
    std::int64_t len1 = box.s >= 2 ? box.length(1) : 1;
    return size_t((c[0] - box.lo[0]) * len1 + (box.s >= 2 ? c[1] - box.lo[1] : 0));
  };
  Cell ext_lo{0, 0}, ext_hi{0, 0};
  for (const auto& sc : r.shape)
    for (int ax = 0; ax < 2; ++ax) {
      ext_lo[ax] = std::min(ext_lo[ax], sc[ax]);
      ext_hi[ax] = std::max(ext_hi[ax], sc[ax]);
    }
  for (std::int64_t o0 = box.lo[0] - ext_lo[0]; o0 + ext_hi[0] <= box.hi[0]; ++o0) {
    std::int64_t lo1 = box.s >= 2 ? box.lo[1] - ext_lo[1] : 0;
    std::int64_t hi1 = box.s >= 2 ? box.hi[1] - ext_hi[1] : 0;
    for (std::int64_t o1 = lo1; o1 <= hi1; ++o1) {
      Cell last_cell{o0 + r.shape[last][0], o1 + r.shape[last][1]};
      st.determined_by[rank_of(last_cell)] = std::int64_t(st.offsets.size());
      st.offsets.push_back({o0, o1});
    }
  }
  for (size_t i = 0; i < st.cells.size(); ++i)
    if (st.determined_by[i] < 0) st.free_cells.push_back(i);
  return st;
}

// Solve all determined cells from the free ones, in row-major order.
inline void propagate_linear(const System& sys, const LinearStructure& st, Config& c) {
  const auto& r = *sys.linear_rule;
  size_t last = 0;
  for (size_t i = 1; i < r.shape.size(); ++i)
    if (r.shape[i] > r.shape[last]) last = i;
  const std::int64_t q = sys.site.q();
  const std::int64_t inv = detail::inv_mod(-r.coeffs[last], q);
  for (size_t ci = 0; ci < st.cells.size(); ++ci) {
    std::int64_t pi = st.determined_by[ci];
    if (pi < 0) continue;
    const Cell& o = st.offsets[size_t(pi)];
    std::int64_t acc = 0;
    for (size_t i = 0; i < r.shape.size(); ++i) {
      if (i == last) continue;
      acc += r.coeffs[i] * c.at({o[0] + r.shape[i][0], o[1] + r.shape[i][1]}).c[0];
    }
    c.at(st.cells[ci]) = site_value(SiteSpace::mod(acc * inv, q));
  }
}

// Free cells that any cell of the core box depends on, via the propagation
// order. Values assigned to the remaining free cells never reach the core.
inline std::vector<size_t> core_dependent_free_cells(const System& sys, const LinearStructure& st,
                                                     const Box& core) {
  if (st.free_cells.size() > 64)
    throw cap_exceeded("dependency analysis supports at most 64 free cells");
  const auto& r = *sys.linear_rule;
  size_t last = 0;
  for (size_t i = 1; i < r.shape.size(); ++i)
    if (r.shape[i] > r.shape[last]) last = i;
  std::map<Cell, size_t> free_slot;
  for (size_t s = 0; s < st.free_cells.size(); ++s)
    free_slot[st.cells[st.free_cells[s]]] = s;
  std::map<Cell, std::uint64_t> dep;
  for (size_t ci = 0; ci < st.cells.size(); ++ci) {
    const Cell& cell = st.cells[ci];
    std::int64_t pi = st.determined_by[ci];
    if (pi < 0) {
      dep[cell] = std::uint64_t(1) << free_slot[cell];
      continue;
    }
    const Cell& o = st.offsets[size_t(pi)];
    std::uint64_t mask = 0;
    for (size_t i = 0; i < r.shape.size(); ++i) {
      if (i == last) continue;
      mask |= dep.at({o[0] + r.shape[i][0], o[1] + r.shape[i][1]});
    }
    dep[cell] = mask;
  }
  std::uint64_t core_mask = 0;
  for (const auto& [cell, mask] : dep)
    if (core.contains(cell)) core_mask |= mask;
  std::vector<size_t> out;
  for (size_t s = 0; s < st.free_cells.size(); ++s)
    if (core_mask & (std::uint64_t(1) << s)) out.push_back(st.free_cells[s]);
  return out;
}

// Uniform-ish legal configuration on the box: free cells uniform for linear
// rules, randomized backtracking for forbidden rules, per-class filling for
// restricted systems.
inline Config sample_config(const System& sys, const Box& box, DetRng& rng) {
  Config c((box));
  const std::int64_t m = sys.site.count();
  if (sys.restriction) {
    const auto& rest = *sys.restriction;
    std::int64_t l = std::int64_t(rng.below(std::uint64_t(rest.lambda.period)));
    c.klass = l;
    for (const auto& cell : detail::box_cells(box))
      c.at(cell) = rest.lambda.contains(cell[0] - l)
                       ? sys.site.value_at(std::int64_t(rng.below(std::uint64_t(m))))
                       : rest.frozen[rng.below(rest.frozen.size())];
    return c;
  }
  if (sys.linear_rule) {
    auto st = linear_structure(sys, box);
    for (size_t fi : st.free_cells)
      c.at(st.cells[fi]) = sys.site.value_at(std::int64_t(rng.below(std::uint64_t(m))));
    propagate_linear(sys, st, c);
    return c;
  }
  if (sys.forbidden_rule) {
    auto cells = detail::box_cells(box);
    const auto& shape = sys.forbidden_rule->shape;
    auto placements_ending_at = [&](const Cell& cell) {
      std::vector<Cell> out;
      for (const auto& sc : shape) {
        Cell o{cell[0] - sc[0], cell[1] - sc[1]};
        bool inside = true, is_last = true;
        for (const auto& sc2 : shape) {
          Cell c2{o[0] + sc2[0], o[1] + sc2[1]};
          if (!box.contains(c2)) inside = false;
          if (c2 > cell) is_last = false;  // row-major order matches lex on Cell
        }
        if (inside && is_last) out.push_back(o);
      }
      return out;
    };
    std::function<bool(size_t)> rec = [&](size_t idx) {
      if (idx == cells.size()) return true;
      auto ending = placements_ending_at(cells[idx]);
      std::int64_t start = std::int64_t(rng.below(std::uint64_t(m)));
      for (std::int64_t t = 0; t < m; ++t) {
        c.at(cells[idx]) = sys.site.value_at((start + t) % m);
        bool ok = true;
        for (const auto& o : ending)
          if (!rule_holds_at(sys, c, o)) { ok = false; break; }
        if (ok && rec(idx + 1)) return true;
      }
      return false;
    };
    if (!rec(0)) throw precondition_failed("no legal configuration on the box");
    return c;
  }
  for (auto& v : c.values()) v = sys.site.value_at(std::int64_t(rng.below(std::uint64_t(m))));
  return c;
}

// Residue-wise sum of two configurations on the same box; legality is
// preserved for homogeneous linear rules.
inline Config add_configs(const System& sys, const Config& a, const Config& b) {
  if (!(a.box() == b.box())) throw precondition_failed("config sum needs matching boxes");
  if (sys.site.kind() != SiteSpace::Kind::torus)
    throw precondition_failed("config sum needs torus sites");
  Config out = a;
  for (size_t i = 0; i < out.values().size(); ++i) {
    SiteValue v;
    for (int r = 0; r < sys.site.rank(); ++r)
      v.c[r] = SiteSpace::mod(a.values()[i].c[r] + b.values()[i].c[r], sys.site.q());
    out.values()[i] = v;
  }
  return out;
}

// ---- Sublattice counting ---------------------------------------------------

struct SubgroupBoxCount {
  std::int64_t count = 0;
  Rational ratio;  // N^{k-1} / count
};

// Lattice points of the rank-1 subgroup generated by v inside [-N, N]^2.
inline SubgroupBoxCount subgroup_box_density(const LatticeVector& v, std::int64_t n) {
  if (v.size() != 2) throw precondition_failed("box density implemented for rank-1 subgroups of Z^2");
  if (v[0] == 0 && v[1] == 0) throw precondition_failed("basis vector must be nonzero");
  std::int64_t t_max = std::numeric_limits<std::int64_t>::max();
  for (int i = 0; i < 2; ++i)
    if (v[i] != 0) t_max = std::min(t_max, n / std::abs(v[i]));
  SubgroupBoxCount out;
  out.count = 2 * t_max + 1;
  out.ratio = Rational(n, out.count);
  return out;
}

}  // namespace meandim
