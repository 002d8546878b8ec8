#pragma once

// Finite metric tables and point-subset covers. A DistanceTable is the only
// representation of a metric space in this project: estimators sample a system
// into a table and run purely combinatorial computations on it.

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "meandim/rational.hpp"

namespace meandim {

template <typename Scalar>
class DistanceTable {
 public:
  DistanceTable() = default;
  explicit DistanceTable(Eigen::Index n, Scalar tolerance = Scalar(0))
      : d_(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, Scalar(0))),
        tol_(tolerance) {}

  Eigen::Index size() const { return d_.rows(); }
  const Scalar& operator()(Eigen::Index i, Eigen::Index j) const { return d_(i, j); }
  Scalar& at(Eigen::Index i, Eigen::Index j) { return d_(i, j); }
  void set(Eigen::Index i, Eigen::Index j, const Scalar& v) {
    d_(i, j) = v;
    d_(j, i) = v;
  }
  const Scalar& tolerance() const { return tol_; }
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& matrix() const { return d_; }

  Scalar diameter() const {
    Scalar m(0);
    for (Eigen::Index i = 0; i < size(); ++i)
      for (Eigen::Index j = i + 1; j < size(); ++j)
        if (m < d_(i, j)) m = d_(i, j);
    return m;
  }

 private:
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d_;
  Scalar tol_{0};
};

struct MetricViolation {
  enum class Kind { negative_entry, nonzero_diagonal, asymmetry, triangle } kind;
  Eigen::Index i = 0, j = 0, k = 0;
  std::string describe() const {
    switch (kind) {
      case Kind::negative_entry: return "negative entry";
      case Kind::nonzero_diagonal: return "nonzero diagonal";
      case Kind::asymmetry: return "asymmetric entry";
      case Kind::triangle: return "triangle inequality failure";
    }
    return "?";
  }
};

template <typename Scalar>
std::optional<MetricViolation> validate_metric(const DistanceTable<Scalar>& m) {
  const Eigen::Index n = m.size();
  using K = MetricViolation::Kind;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(m(i, i) == Scalar(0))) return MetricViolation{K::nonzero_diagonal, i, i, i};
    for (Eigen::Index j = 0; j < n; ++j) {
      if (m(i, j) < Scalar(0)) return MetricViolation{K::negative_entry, i, j, j};
      if (!(m(i, j) == m(j, i))) return MetricViolation{K::asymmetry, i, j, j};
    }
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k)
        if (m(i, k) > m(i, j) + m(j, k) + m.tolerance())
          return MetricViolation{K::triangle, i, j, k};
  return std::nullopt;
}

// Cover of {0,...,n_points-1} by index subsets (sorted, no duplicates inside a
// set). "mesh < eps" stands in for topological openness throughout.
struct Cover {
  std::vector<std::vector<int>> sets;
  int n_points = 0;

  static Cover trivial(int n_points) {
    Cover c;
    c.n_points = n_points;
    c.sets.emplace_back();
    for (int i = 0; i < n_points; ++i) c.sets.back().push_back(i);
    return c;
  }
  static Cover singletons(int n_points) {
    Cover c;
    c.n_points = n_points;
    for (int i = 0; i < n_points; ++i) c.sets.push_back({i});
    return c;
  }
};

inline void check_is_cover(const Cover& c) {
  if (c.sets.empty()) throw std::invalid_argument("cover: empty");
  std::vector<char> hit(c.n_points, 0);
  for (const auto& s : c.sets)
    for (int p : s) {
      if (p < 0 || p >= c.n_points) throw std::out_of_range("cover: point index");
      hit[p] = 1;
    }
  for (int p = 0; p < c.n_points; ++p)
    if (!hit[p]) throw std::invalid_argument("cover: point " + std::to_string(p) + " uncovered");
}

// Max over points of (#containing sets) - 1.
inline int cover_order(const Cover& c) {
  check_is_cover(c);
  std::vector<int> mult(c.n_points, 0);
  for (const auto& s : c.sets)
    for (int p : s) ++mult[p];
  int m = 0;
  for (int p = 0; p < c.n_points; ++p) m = std::max(m, mult[p]);
  return m - 1;
}

template <typename Scalar>
Scalar cover_mesh(const Cover& c, const DistanceTable<Scalar>& m) {
  check_is_cover(c);
  Scalar mesh(0);
  for (const auto& s : c.sets)
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t b = a + 1; b < s.size(); ++b)
        if (mesh < m(s[a], s[b])) mesh = m(s[a], s[b]);
  return mesh;
}

// All pairwise intersections, empties dropped.
inline Cover cover_join(const Cover& u, const Cover& v) {
  if (u.n_points != v.n_points)
    throw std::invalid_argument("cover_join: mismatched point sets");
  check_is_cover(u);
  check_is_cover(v);
  Cover out;
  out.n_points = u.n_points;
  for (const auto& a : u.sets)
    for (const auto& b : v.sets) {
      std::vector<int> inter;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                            std::back_inserter(inter));
      if (!inter.empty()) out.sets.push_back(std::move(inter));
    }
  return out;
}

// Split every cover element into chain components of the relation
// "consecutive distance < threshold". Point multiplicities are untouched, so
// the order is preserved exactly.
template <typename Scalar>
Cover chain_component_split(const Cover& c, const DistanceTable<Scalar>& m,
                            const Scalar& threshold) {
  if (!(threshold > Scalar(0)))
    throw std::invalid_argument("chain_component_split: threshold must be positive");
  check_is_cover(c);
  Cover out;
  out.n_points = c.n_points;
  for (const auto& s : c.sets) {
    const int sz = static_cast<int>(s.size());
    std::vector<int> parent(sz);
    for (int i = 0; i < sz; ++i) parent[i] = i;
    auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (int a = 0; a < sz; ++a)
      for (int b = a + 1; b < sz; ++b)
        if (m(s[a], s[b]) < threshold) parent[find(a)] = find(b);
    std::vector<std::vector<int>> classes(sz);
    for (int i = 0; i < sz; ++i) classes[find(i)].push_back(s[i]);
    for (auto& cls : classes)
      if (!cls.empty()) out.sets.push_back(std::move(cls));
  }
  return out;
}

}  // namespace meandim
