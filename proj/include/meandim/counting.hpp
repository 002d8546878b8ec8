#pragma once

// Covering and packing numbers on finite distance tables with certified,
// monotone witnesses.
//
// Lower bounds come from a farthest-point traversal: the selection order does
// not depend on eps, each selected point records its distance to the already
// selected prefix, and those radii are nonincreasing; the eps-separated
// witness is a prefix, so the count is monotone in eps by construction.
//
// Upper bounds come from complete-linkage merging: merge heights are
// nondecreasing, and cutting the merge sequence at eps yields nested covers
// whose elements have diameter < eps, so counts are monotone in eps too.
//
// For n <= kExactCoverCap an exact branch-and-bound replaces the bracket.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "meandim/metric.hpp"

namespace meandim {

struct CountBracket {
  std::int64_t lb = 0;
  std::int64_t ub = 0;
  bool exact = false;
  std::vector<int> separated_witness;  // pairwise distances >= eps
};

inline constexpr int kExactCoverCap = 24;

template <typename Scalar>
struct FarthestTraversal {
  std::vector<int> order;
  std::vector<Scalar> radii;  // radii[i] = d(order[i], {order[0..i-1]}) for i >= 1
};

template <typename Scalar>
FarthestTraversal<Scalar> farthest_point_traversal(const DistanceTable<Scalar>& m) {
  const int n = static_cast<int>(m.size());
  FarthestTraversal<Scalar> t;
  if (n == 0) return t;
  t.order.push_back(0);
  t.radii.push_back(Scalar(0));  // slot 0 unused
  std::vector<Scalar> dist(n);
  std::vector<char> used(n, 0);
  used[0] = 1;
  for (int i = 1; i < n; ++i) dist[i] = m(i, 0);
  for (int step = 1; step < n; ++step) {
    int best = -1;
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      if (best < 0 || dist[best] < dist[i]) best = i;
    }
    t.order.push_back(best);
    t.radii.push_back(dist[best]);
    used[best] = 1;
    for (int i = 0; i < n; ++i)
      if (!used[i] && m(i, best) < dist[i]) dist[i] = m(i, best);
  }
  return t;
}

template <typename Scalar>
std::vector<int> separated_prefix(const FarthestTraversal<Scalar>& t, const Scalar& eps) {
  std::vector<int> out;
  if (t.order.empty()) return out;
  out.push_back(t.order[0]);
  for (std::size_t i = 1; i < t.order.size(); ++i) {
    if (!(t.radii[i] >= eps)) break;  // radii nonincreasing
    out.push_back(t.order[i]);
  }
  return out;
}

template <typename Scalar>
struct MergeSequence {
  std::vector<Scalar> heights;              // merged-cluster diameter, nondecreasing
  std::vector<std::pair<int, int>> merges;  // representatives (absorber, absorbed)
};

template <typename Scalar>
MergeSequence<Scalar> complete_linkage(const DistanceTable<Scalar>& m) {
  const int n = static_cast<int>(m.size());
  MergeSequence<Scalar> seq;
  if (n <= 1) return seq;
  std::vector<std::vector<Scalar>> cross(n, std::vector<Scalar>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cross[i][j] = m(i, j);
  std::vector<int> alive;
  for (int i = 0; i < n; ++i) alive.push_back(i);
  while (alive.size() > 1) {
    int bi = -1, bj = -1;
    for (std::size_t a = 0; a < alive.size(); ++a)
      for (std::size_t b = a + 1; b < alive.size(); ++b) {
        const int i = alive[a], j = alive[b];
        if (bi < 0 || cross[i][j] < cross[bi][bj]) {
          bi = i;
          bj = j;
        }
      }
    seq.heights.push_back(cross[bi][bj]);
    seq.merges.emplace_back(bi, bj);
    for (int i : alive) {
      if (i == bi || i == bj) continue;
      const Scalar v = std::max(cross[i][bi], cross[i][bj]);
      cross[i][bi] = v;
      cross[bi][i] = v;
    }
    alive.erase(std::find(alive.begin(), alive.end(), bj));
  }
  return seq;
}

template <typename Scalar>
Cover linkage_cover_at(const DistanceTable<Scalar>& m, const MergeSequence<Scalar>& seq,
                       const Scalar& eps) {
  const int n = static_cast<int>(m.size());
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t t = 0; t < seq.heights.size(); ++t) {
    if (!(seq.heights[t] < eps)) break;  // heights nondecreasing
    parent[find(seq.merges[t].second)] = find(seq.merges[t].first);
  }
  std::vector<std::vector<int>> classes(n);
  for (int i = 0; i < n; ++i) classes[find(i)].push_back(i);
  Cover c;
  c.n_points = n;
  for (auto& cls : classes)
    if (!cls.empty()) c.sets.push_back(std::move(cls));
  return c;
}

namespace detail {

// Minimum number of diameter-<eps sets covering all points. Feasible sets are
// cliques of the "d < eps" graph; branch and bound over point-to-cluster
// assignments in index order.
template <typename Scalar>
class ExactCoverSolver {
 public:
  ExactCoverSolver(const DistanceTable<Scalar>& m, const Scalar& eps)
      : m_(m), eps_(eps), n_(static_cast<int>(m.size())) {}

  int solve(int initial_ub) {
    best_ = initial_ub;
    clusters_.clear();
    recurse(0);
    return best_;
  }

 private:
  void recurse(int p) {
    if (static_cast<int>(clusters_.size()) >= best_) return;
    if (p == n_) {
      best_ = static_cast<int>(clusters_.size());
      return;
    }
    // Index-based: the recursive call may reallocate clusters_.
    const std::size_t open = clusters_.size();
    for (std::size_t ci = 0; ci < open; ++ci) {
      bool compatible = true;
      for (int q : clusters_[ci])
        if (!(m_(p, q) < eps_)) {
          compatible = false;
          break;
        }
      if (compatible) {
        clusters_[ci].push_back(p);
        recurse(p + 1);
        clusters_[ci].pop_back();
      }
    }
    if (static_cast<int>(clusters_.size()) + 1 < best_) {
      clusters_.push_back({p});
      recurse(p + 1);
      clusters_.pop_back();
    }
  }

  const DistanceTable<Scalar>& m_;
  const Scalar eps_;
  const int n_;
  int best_ = std::numeric_limits<int>::max();
  std::vector<std::vector<int>> clusters_;
};

// Maximum eps-separated subset (max independent set of the "d < eps" graph),
// for n <= 31.
template <typename Scalar>
int exact_max_separated(const DistanceTable<Scalar>& m, const Scalar& eps) {
  const int n = static_cast<int>(m.size());
  std::vector<std::uint32_t> conflict(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && m(i, j) < eps) conflict[i] |= (1u << j);
  int best = 0;
  struct Frame {
    int p;
    std::uint32_t banned;
    int count;
  };
  std::vector<Frame> frames{{0, 0u, 0}};
  while (!frames.empty()) {
    const Frame f = frames.back();
    frames.pop_back();
    if (f.count + (n - f.p) <= best) continue;
    if (f.p == n) {
      best = std::max(best, f.count);
      continue;
    }
    frames.push_back({f.p + 1, f.banned, f.count});
    if (!(f.banned & (1u << f.p)))
      frames.push_back({f.p + 1, f.banned | conflict[f.p], f.count + 1});
  }
  return best;
}

}  // namespace detail

// Certified bracket on the minimum number of diameter-<eps sets covering the
// points; exact (lb == ub) when n <= exact_cap.
template <typename Scalar>
CountBracket covering_number_bracket(const DistanceTable<Scalar>& m, const Scalar& eps,
                                     int exact_cap = kExactCoverCap) {
  if (!(eps > Scalar(0))) throw std::invalid_argument("covering_number_bracket: eps <= 0");
  const int n = static_cast<int>(m.size());
  CountBracket out;
  if (n == 0) return out;
  if (n == 1) {
    out.lb = out.ub = 1;
    out.exact = true;
    out.separated_witness = {0};
    return out;
  }
  const auto traversal = farthest_point_traversal(m);
  out.separated_witness = separated_prefix(traversal, eps);
  out.lb = static_cast<std::int64_t>(out.separated_witness.size());
  out.ub = static_cast<std::int64_t>(
      linkage_cover_at(m, complete_linkage(m), eps).sets.size());
  if (n <= exact_cap) {
    detail::ExactCoverSolver<Scalar> solver(m, eps);
    const int exact = solver.solve(static_cast<int>(out.ub));
    out.lb = out.ub = exact;
    out.exact = true;
  }
  return out;
}

// Size of a maximal eps-separated subset; the true maximum for n <= exact_cap.
template <typename Scalar>
std::int64_t packing_number(const DistanceTable<Scalar>& m, const Scalar& eps,
                            int exact_cap = kExactCoverCap) {
  if (!(eps > Scalar(0))) throw std::invalid_argument("packing_number: eps <= 0");
  const int n = static_cast<int>(m.size());
  if (n == 0) return 0;
  if (n <= exact_cap && n <= 31) return detail::exact_max_separated(m, eps);
  const auto traversal = farthest_point_traversal(m);
  return static_cast<std::int64_t>(separated_prefix(traversal, eps).size());
}

}  // namespace meandim
