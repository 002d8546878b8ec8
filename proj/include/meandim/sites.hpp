#pragma once

// Site spaces: the per-cell state spaces that configurations take values in.
// Two kinds are supported:
//   * quantized torus (Z/q)^r with the induced flat metric (sup or euclidean),
//     values stored as residue vectors a/q with 0 <= a < q;
//   * finite alphabet {0..m-1} with the discrete metric.
//
// Sup-norm and discrete distances are exact rationals; euclidean distances on
// r >= 2 are irrational, so the exact interface exposes the squared distance
// and the double interface takes the square root. Estimators that need exact
// arithmetic require a site whose distance is rational (sup or discrete).

#include <array>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "meandim/rational.hpp"
#include "meandim/util.hpp"

namespace meandim {

// One cell's value. Torus sites use the first r slots as residues mod q;
// alphabet sites use slot 0 as the symbol. Unused slots stay zero so that
// equality is plain memberwise comparison.
struct SiteValue {
  std::array<std::int64_t, 2> c{0, 0};

  friend bool operator==(const SiteValue& a, const SiteValue& b) { return a.c == b.c; }
  friend bool operator!=(const SiteValue& a, const SiteValue& b) { return !(a == b); }
  friend bool operator<(const SiteValue& a, const SiteValue& b) { return a.c < b.c; }
};

inline SiteValue site_value(std::int64_t a) { return SiteValue{{a, 0}}; }
inline SiteValue site_value(std::int64_t a, std::int64_t b) { return SiteValue{{a, b}}; }

enum class SiteNorm { sup, euclidean };

class SiteSpace {
 public:
  enum class Kind { torus, alphabet };

  static SiteSpace torus(int r, std::int64_t q, SiteNorm norm = SiteNorm::sup) {
    if (r < 1 || r > 2) throw precondition_failed("torus rank must be 1 or 2");
    if (q < 2) throw precondition_failed("torus quantization must have q >= 2");
    SiteSpace s;
    s.kind_ = Kind::torus;
    s.r_ = r;
    s.q_ = q;
    s.norm_ = norm;
    return s;
  }

  static SiteSpace alphabet(std::int64_t m) {
    if (m < 1) throw precondition_failed("alphabet must be nonempty");
    SiteSpace s;
    s.kind_ = Kind::alphabet;
    s.r_ = 1;
    s.q_ = m;
    s.norm_ = SiteNorm::sup;
    return s;
  }

  Kind kind() const { return kind_; }
  int rank() const { return r_; }
  std::int64_t q() const { return q_; }
  SiteNorm norm() const { return norm_; }

  std::int64_t count() const {
    if (kind_ == Kind::alphabet) return q_;
    std::int64_t n = q_;
    for (int i = 1; i < r_; ++i) n *= q_;
    return n;
  }

  // Exact distance is defined for discrete and sup-norm sites. Euclidean
  // r >= 2 callers must use distance_sq / distance_double.
  bool has_rational_distance() const {
    return kind_ == Kind::alphabet || norm_ == SiteNorm::sup || r_ == 1;
  }

  Rational distance(const SiteValue& a, const SiteValue& b) const {
    if (kind_ == Kind::alphabet) return a == b ? Rational(0) : Rational(1);
    if (!has_rational_distance())
      throw precondition_failed("euclidean torus distance is irrational; use distance_sq");
    std::int64_t m = 0;
    for (int i = 0; i < r_; ++i) m = std::max(m, circle_gap(a.c[i], b.c[i]));
    return Rational(m, q_);
  }

  // Squared euclidean distance, exact for any torus norm/rank.
  Rational distance_sq(const SiteValue& a, const SiteValue& b) const {
    if (kind_ == Kind::alphabet) return a == b ? Rational(0) : Rational(1);
    Rational s(0);
    for (int i = 0; i < r_; ++i) {
      Rational d(circle_gap(a.c[i], b.c[i]), q_);
      s = s + d * d;
    }
    return s;
  }

  double distance_double(const SiteValue& a, const SiteValue& b) const {
    if (kind_ == Kind::alphabet) return a == b ? 0.0 : 1.0;
    if (norm_ == SiteNorm::sup) return distance(a, b).to_double();
    return std::sqrt(distance_sq(a, b).to_double());
  }

  Rational diameter() const {
    if (kind_ == Kind::alphabet) return q_ > 1 ? Rational(1) : Rational(0);
    Rational half(q_ / 2, q_);
    if (norm_ == SiteNorm::sup || r_ == 1) return half;
    throw precondition_failed("euclidean torus diameter is irrational; use diameter_sq");
  }

  Rational diameter_sq() const {
    if (kind_ == Kind::alphabet) return diameter();
    Rational half(q_ / 2, q_);
    if (norm_ == SiteNorm::sup) return half * half;
    Rational s(0);
    for (int i = 0; i < r_; ++i) s = s + half * half;
    return s;
  }

  // Smallest nonzero distance between site values (sup / discrete flavors).
  Rational gap() const {
    if (kind_ == Kind::alphabet) return Rational(1);
    if (!has_rational_distance())
      throw precondition_failed("euclidean torus gap is irrational; compare squares");
    return Rational(1, q_);
  }

  SiteValue canonical(const SiteValue& v) const {
    SiteValue out;
    if (kind_ == Kind::alphabet) {
      out.c[0] = mod(v.c[0], q_);
      return out;
    }
    for (int i = 0; i < r_; ++i) out.c[i] = mod(v.c[i], q_);
    return out;
  }

  SiteValue value_at(std::int64_t flat) const {
    SiteValue v;
    if (kind_ == Kind::alphabet || r_ == 1) {
      v.c[0] = flat;
      return v;
    }
    v.c[0] = flat % q_;
    v.c[1] = flat / q_;
    return v;
  }

  std::int64_t flat_index(const SiteValue& v) const {
    if (kind_ == Kind::alphabet || r_ == 1) return v.c[0];
    return v.c[0] + q_ * v.c[1];
  }

  std::string describe(const SiteValue& v) const {
    if (kind_ == Kind::alphabet) return std::to_string(v.c[0]);
    std::string s = std::to_string(v.c[0]) + "/" + std::to_string(q_);
    if (r_ == 2) s += "," + std::to_string(v.c[1]) + "/" + std::to_string(q_);
    return s;
  }

  static std::int64_t mod(std::int64_t a, std::int64_t q) {
    std::int64_t m = a % q;
    return m < 0 ? m + q : m;
  }

 private:
  std::int64_t circle_gap(std::int64_t a, std::int64_t b) const {
    std::int64_t d = std::abs(mod(a, q_) - mod(b, q_));
    return std::min(d, q_ - d);
  }

  Kind kind_ = Kind::alphabet;
  int r_ = 1;
  std::int64_t q_ = 2;
  SiteNorm norm_ = SiteNorm::sup;
};

// Integer matrix acting on torus residues, with |det| = +-1 so that the
// action on (Z/q)^r is invertible for every q.
class ToralAutomorphism {
 public:
  using Matrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

  explicit ToralAutomorphism(Matrix m) : mat_(std::move(m)) {
    if (mat_.rows() != mat_.cols() || mat_.rows() < 1 || mat_.rows() > 2)
      throw precondition_failed("toral automorphism must be square of rank 1 or 2");
    std::int64_t d = det();
    if (d != 1 && d != -1) throw precondition_failed("toral automorphism needs |det| = 1");
    inv_ = adjugate() * d;  // A^-1 = adj(A)/det = adj(A)*det when det = +-1
  }

  static ToralAutomorphism identity(int r) {
    return ToralAutomorphism(Matrix::Identity(r, r));
  }

  int rank() const { return int(mat_.rows()); }
  const Matrix& matrix() const { return mat_; }
  const Matrix& inverse_matrix() const { return inv_; }

  std::int64_t det() const {
    if (mat_.rows() == 1) return mat_(0, 0);
    return mat_(0, 0) * mat_(1, 1) - mat_(0, 1) * mat_(1, 0);
  }

  Matrix adjugate() const {
    if (mat_.rows() == 1) return Matrix::Identity(1, 1);
    Matrix a(2, 2);
    a << mat_(1, 1), -mat_(0, 1), -mat_(1, 0), mat_(0, 0);
    return a;
  }

  // M^e mod q (e may be negative). Exponents stay small in practice, so plain
  // repeated multiplication is fine and keeps entries reduced.
  Matrix power_mod(std::int64_t e, std::int64_t q) const {
    Matrix base = e >= 0 ? mat_ : inv_;
    std::int64_t n = e >= 0 ? e : -e;
    Matrix acc = Matrix::Identity(mat_.rows(), mat_.cols());
    Matrix b = base.unaryExpr([q](std::int64_t v) { return SiteSpace::mod(v, q); });
    while (n > 0) {
      if (n & 1) acc = mul_mod(acc, b, q);
      b = mul_mod(b, b, q);
      n >>= 1;
    }
    return acc;
  }

  SiteValue apply(const SiteValue& v, std::int64_t q, std::int64_t e = 1) const {
    return apply_matrix(power_mod(e, q), v, q, rank());
  }

  static SiteValue apply_matrix(const Matrix& m, const SiteValue& v, std::int64_t q, int r) {
    SiteValue out;
    for (int i = 0; i < r; ++i) {
      std::int64_t s = 0;
      for (int j = 0; j < r; ++j) s += m(i, j) * v.c[j];
      out.c[i] = SiteSpace::mod(s, q);
    }
    return out;
  }

  // Sup-norm operator bound: a valid Lipschitz constant for the induced map
  // on the quantized torus, since a minimal lift of x maps to a lift of Mx.
  std::int64_t lipschitz_sup_bound() const {
    std::int64_t best = 0;
    for (Eigen::Index i = 0; i < mat_.rows(); ++i) {
      std::int64_t row = 0;
      for (Eigen::Index j = 0; j < mat_.cols(); ++j) row += std::abs(mat_(i, j));
      best = std::max(best, row);
    }
    return best;
  }

  bool is_hyperbolic(double margin = 1e-9) const {
    Eigen::MatrixXd md = mat_.cast<double>();
    Eigen::EigenSolver<Eigen::MatrixXd> es(md);
    for (Eigen::Index i = 0; i < md.rows(); ++i) {
      double a = std::abs(es.eigenvalues()[i]);
      if (std::abs(a - 1.0) <= margin) return false;
    }
    return true;
  }

  double spectral_radius() const {
    Eigen::EigenSolver<Eigen::MatrixXd> es(mat_.cast<double>());
    double r = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      r = std::max(r, std::abs(es.eigenvalues()[i]));
    return r;
  }

  // Multiplicative order of M mod q; needed to close sample sets under the
  // cellwise action. Throws if the order exceeds the cap.
  std::int64_t order_mod(std::int64_t q, std::int64_t cap = 1 << 20) const {
    Matrix id = Matrix::Identity(mat_.rows(), mat_.cols());
    Matrix acc = id;
    for (std::int64_t n = 1; n <= cap; ++n) {
      acc = mul_mod(acc, mat_, q);
      if (acc == id) return n;
    }
    throw cap_exceeded("order of matrix mod q exceeds cap");
  }

 private:
  static Matrix mul_mod(const Matrix& a, const Matrix& b, std::int64_t q) {
    Matrix c = a * b;
    return c.unaryExpr([q](std::int64_t v) { return SiteSpace::mod(v, q); });
  }

  Matrix mat_;
  Matrix inv_;
};

inline ToralAutomorphism toral_matrix(std::initializer_list<std::int64_t> entries) {
  int r = entries.size() == 1 ? 1 : 2;
  ToralAutomorphism::Matrix m(r, r);
  auto it = entries.begin();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) m(i, j) = *it++;
  return ToralAutomorphism(m);
}

}  // namespace meandim
