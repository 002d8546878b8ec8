#pragma once

// Lattice vectors u in Z^k with the sup norm |u| = max_i |u_i|, and the three
// window shapes every estimator iterates over: the box [-N,N]^k, its boundary,
// and explicit point sets.

#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace meandim {

using LatticeVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

inline LatticeVector lattice_vector(std::initializer_list<std::int64_t> coords) {
  LatticeVector u(static_cast<Eigen::Index>(coords.size()));
  Eigen::Index i = 0;
  for (auto c : coords) u[i++] = c;
  return u;
}

inline std::int64_t sup_norm(const LatticeVector& u) {
  std::int64_t m = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i) m = std::max(m, std::abs(u[i]));
  return m;
}

inline bool lattice_less(const LatticeVector& a, const LatticeVector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

class window_too_large : public std::length_error {
 public:
  explicit window_too_large(const std::string& what) : std::length_error(what) {}
};

struct Window {
  enum class Kind { box, boundary, explicit_set };

  Kind kind = Kind::box;
  std::int64_t N = 0;  // box / boundary radius
  int k = 1;           // lattice rank
  std::vector<LatticeVector> points;  // explicit_set only

  static Window box(std::int64_t N, int k) {
    if (N < 0 || k < 1) throw std::invalid_argument("Window::box: need N >= 0, k >= 1");
    Window w;
    w.kind = Kind::box;
    w.N = N;
    w.k = k;
    return w;
  }
  static Window boundary(std::int64_t N, int k) {
    if (N < 0 || k < 1) throw std::invalid_argument("Window::boundary: need N >= 0, k >= 1");
    Window w;
    w.kind = Kind::boundary;
    w.N = N;
    w.k = k;
    return w;
  }
  static Window explicit_set(std::vector<LatticeVector> pts) {
    if (pts.empty()) throw std::invalid_argument("Window::explicit_set: empty");
    Window w;
    w.kind = Kind::explicit_set;
    w.k = static_cast<int>(pts.front().size());
    w.points = std::move(pts);
    return w;
  }
};

namespace detail {
inline std::uint64_t checked_pow(std::uint64_t base, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) {
    if (base != 0 && r > UINT64_MAX / base)
      throw window_too_large("window size overflows 64 bits");
    r *= base;
  }
  return r;
}
}  // namespace detail

inline std::uint64_t window_size(const Window& w) {
  switch (w.kind) {
    case Window::Kind::box:
      return detail::checked_pow(std::uint64_t(2 * w.N + 1), w.k);
    case Window::Kind::boundary: {
      const std::uint64_t outer = detail::checked_pow(std::uint64_t(2 * w.N + 1), w.k);
      const std::uint64_t inner =
          w.N == 0 ? 0 : detail::checked_pow(std::uint64_t(2 * w.N - 1), w.k);
      return outer - inner;
    }
    case Window::Kind::explicit_set:
      return w.points.size();
  }
  throw std::logic_error("window_size: bad kind");
}

// Deterministic lexicographic enumeration. `cap` guards accidental blow-ups.
inline std::vector<LatticeVector> window_points(const Window& w,
                                                std::uint64_t cap = (1u << 22)) {
  const std::uint64_t size = window_size(w);
  if (size > cap) throw window_too_large("window_points: size exceeds cap");
  std::vector<LatticeVector> out;
  out.reserve(size);
  if (w.kind == Window::Kind::explicit_set) {
    out = w.points;
    return out;
  }
  LatticeVector u = LatticeVector::Constant(w.k, -w.N);
  while (true) {
    if (w.kind == Window::Kind::box || sup_norm(u) == w.N) out.push_back(u);
    int i = w.k - 1;
    while (i >= 0 && u[i] == w.N) {
      u[i] = -w.N;
      --i;
    }
    if (i < 0) break;
    ++u[i];
  }
  return out;
}

}  // namespace meandim
