#pragma once

// Finite-dimensional bases: (M_d, Tr(h .)) and (L(G), tau) for a finite group G.
// Elements of a base are carried as coefficient vectors in a fixed linear basis:
// row-major matrix units E_ij for M_d, group elements lambda_g for L(G).

#include "taw/errors.hpp"
#include "taw/linalg.hpp"

#include <string>
#include <vector>

namespace taw {

class BaseAlgebra {
 public:
  static constexpr double kHermTol = 1e-12;
  static constexpr double kPosTol = 1e-12;

  BaseAlgebra() : BaseAlgebra(Mat::Identity(1, 1)) {}

  explicit BaseAlgebra(const Mat& h_in) {
    if (h_in.rows() != h_in.cols() || h_in.rows() == 0)
      throw Error(ErrorKind::DimensionMismatch, "density must be a non-empty square matrix");
    if (herm_defect(h_in) > kHermTol)
      throw Error(ErrorKind::NotHermitian, "density differs from its adjoint by more than 1e-12");
    d_ = static_cast<int>(h_in.rows());
    h_ = herm_part(h_in);
    HermEig e = herm_eig(h_);
    const double top = e.vals(d_ - 1);
    if (!(e.vals(0) > kPosTol * top) || top <= 0.0)
      throw Error(ErrorKind::NotPositiveDefinite, "density has an eigenvalue <= 1e-12 * max eigenvalue");
    evals_ = e.vals;
    evecs_ = e.vecs;
    h_half_ = power(0.5);
    h_mhalf_ = power(-0.5);
    log_h_ = herm_func(h_, [](double x) { return cd(std::log(x), 0.0); });
    h_inv_ = power(-1.0);
  }

  int d() const { return d_; }
  const Mat& h() const { return h_; }
  const Mat& h_half() const { return h_half_; }
  const Mat& h_mhalf() const { return h_mhalf_; }
  const Mat& h_inv() const { return h_inv_; }
  const Mat& log_h() const { return log_h_; }
  const RVec& h_eigenvalues() const { return evals_; }

  // h^{iz} = exp(i z log h), for complex z.
  Mat h_pow_i(cd z) const {
    Vec f(d_);
    for (int i = 0; i < d_; ++i) f(i) = std::exp(I_unit * z * std::log(evals_(i)));
    return evecs_ * f.asDiagonal() * evecs_.adjoint();
  }

  Mat power(double p) const {
    Vec f(d_);
    for (int i = 0; i < d_; ++i) f(i) = std::pow(evals_(i), p);
    return evecs_ * f.asDiagonal() * evecs_.adjoint();
  }

  // Matrix-level modular data.
  Mat lambda(const Mat& x) const { return x * h_half_; }
  Mat lambda_prime(const Mat& y) const { return h_half_ * y; }
  Mat sigma(cd z, const Mat& x) const { return h_pow_i(z) * x * h_pow_i(-z); }
  cd weight(const Mat& x) const { return (h_ * x).trace(); }

  // Generic base interface (coefficients = row-major vec of the matrix).
  int l2_dim() const { return d_ * d_; }
  int alg_dim() const { return d_ * d_; }
  bool is_factor() const { return true; }
  std::string name() const { return "M_" + std::to_string(d_); }

  Mat left_l2(int a) const {
    return kron(unit_matrix(d_, a / d_, a % d_), Mat::Identity(d_, d_));
  }
  Mat right_l2(int a) const {
    return kron(Mat::Identity(d_, d_), unit_matrix(d_, a / d_, a % d_).transpose());
  }
  Mat left_l2_elem(const Vec& c) const { return kron(to_matrix(c), Mat::Identity(d_, d_)); }
  Mat right_l2_elem(const Vec& c) const {
    return kron(Mat::Identity(d_, d_), to_matrix(c).transpose());
  }

  // X = x (x) 1 on L^2; the partial trace recovers x.
  Vec coeffs_of_left(const Mat& X) const {
    Mat x = Mat::Zero(d_, d_);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) {
        cd s = 0.0;
        for (int a = 0; a < d_; ++a) s += X(i * d_ + a, j * d_ + a);
        x(i, j) = s / static_cast<double>(d_);
      }
    return vec_rm(x);
  }

  // Column p: coefficients of y with Lambda'(y) = e_p.
  Mat lambda_prime_inv() const {
    const int D = l2_dim();
    Mat out = Mat::Zero(D, D);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j)
        for (int k = 0; k < d_; ++k) out(k * d_ + j, i * d_ + j) = h_mhalf_(k, i);
    return out;
  }

  // Column p: coefficients of x with Lambda(x) = e_p.
  Mat lambda_inv() const {
    const int D = l2_dim();
    Mat out = Mat::Zero(D, D);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j)
        for (int l = 0; l < d_; ++l) out(i * d_ + l, i * d_ + j) = h_mhalf_(j, l);
    return out;
  }

  // Coefficient map of sigma_z.
  Mat sigma_coeffs(cd z) const { return kron(h_pow_i(z), h_pow_i(-z).transpose()); }

  // coeffs(x*) = star_perm * conj(coeffs(x)).
  Mat star_perm() const { return flip(d_, d_); }

  Vec mul(const Vec& a, const Vec& b) const { return vec_rm(to_matrix(a) * to_matrix(b)); }
  Vec unit() const { return vec_rm(Mat::Identity(d_, d_)); }
  cd phi(const Vec& c) const { return weight(to_matrix(c)); }
  Vec vacuum() const { return vec_rm(h_half_); }
  Vec log_h_coeffs() const { return vec_rm(log_h_); }

  AntiLinear J_l2() const { return {flip(d_, d_)}; }
  Mat modular_l2(cd z) const { return kron(h_pow_i(z), h_pow_i(-z).transpose()); }
  // log Delta = log h (x) 1 - 1 (x) (log h)^T.
  Mat log_modular_l2() const {
    const Mat id = Mat::Identity(d_, d_);
    return kron(log_h_, id) - kron(id, log_h_.transpose());
  }

  Mat to_matrix(const Vec& c) const { return unvec_rm(c, d_, d_); }

 private:
  int d_ = 1;
  Mat h_, h_half_, h_mhalf_, h_inv_, log_h_;
  RVec evals_;
  Mat evecs_;
};

inline BaseAlgebra make_base(const Mat& h) { return BaseAlgebra(h); }

// Delta^{iz} xi = h^{iz} xi h^{-iz}.
inline Mat modular_apply(const BaseAlgebra& b, cd z, const Mat& xi) { return b.sigma(z, xi); }

// J xi = xi*.
inline Mat modular_conjugate(const BaseAlgebra&, const Mat& xi) { return xi.adjoint(); }

inline cd weight_value(const BaseAlgebra& b, const Mat& x) { return b.weight(x); }

// ---------------------------------------------------------------------------

struct FiniteGroup {
  std::vector<std::vector<int>> table;  // table[g][h] = g h
  int order() const { return static_cast<int>(table.size()); }
  int identity() const {
    for (int e = 0; e < order(); ++e) {
      bool ok = true;
      for (int g = 0; g < order() && ok; ++g) ok = table[e][g] == g && table[g][e] == g;
      if (ok) return e;
    }
    throw Error(ErrorKind::NotRepresentation, "multiplication table has no identity");
  }
  int inverse(int g) const {
    const int e = identity();
    for (int h = 0; h < order(); ++h)
      if (table[g][h] == e) return h;
    throw Error(ErrorKind::NotRepresentation, "element without inverse");
  }
  int mul(int g, int h) const { return table[g][h]; }
};

inline FiniteGroup cyclic_group(int n) {
  FiniteGroup g;
  g.table.assign(n, std::vector<int>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) g.table[a][b] = (a + b) % n;
  return g;
}

inline void validate_group(const FiniteGroup& g) {
  const int n = g.order();
  if (n == 0) throw Error(ErrorKind::NotRepresentation, "empty group");
  for (const auto& row : g.table) {
    if (static_cast<int>(row.size()) != n)
      throw Error(ErrorKind::NotRepresentation, "multiplication table is not square");
    for (int v : row)
      if (v < 0 || v >= n) throw Error(ErrorKind::NotRepresentation, "table entry out of range");
  }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (g.mul(g.mul(a, b), c) != g.mul(a, g.mul(b, c)))
          throw Error(ErrorKind::NotRepresentation, "multiplication table is not associative");
  for (int a = 0; a < n; ++a) (void)g.inverse(a);
}

// (L(G), tau) acting on l^2(G); tau is tracial, so the modular data is trivial.
class GroupAlgebra {
 public:
  GroupAlgebra() : GroupAlgebra(cyclic_group(1)) {}
  explicit GroupAlgebra(FiniteGroup g) : g_(std::move(g)) {
    validate_group(g_);
    e_ = g_.identity();
  }

  const FiniteGroup& group() const { return g_; }
  int l2_dim() const { return g_.order(); }
  int alg_dim() const { return g_.order(); }
  bool is_factor() const { return g_.order() == 1; }
  std::string name() const { return "L(G), |G|=" + std::to_string(g_.order()); }

  Mat left_l2(int g) const {
    const int n = g_.order();
    Mat m = Mat::Zero(n, n);
    for (int h = 0; h < n; ++h) m(g_.mul(g, h), h) = 1.0;
    return m;
  }
  Mat right_l2(int g) const {
    const int n = g_.order();
    Mat m = Mat::Zero(n, n);
    for (int h = 0; h < n; ++h) m(g_.mul(h, g), h) = 1.0;
    return m;
  }
  Mat left_l2_elem(const Vec& c) const {
    Mat m = Mat::Zero(l2_dim(), l2_dim());
    for (int g = 0; g < alg_dim(); ++g) m += c(g) * left_l2(g);
    return m;
  }
  Mat right_l2_elem(const Vec& c) const {
    Mat m = Mat::Zero(l2_dim(), l2_dim());
    for (int g = 0; g < alg_dim(); ++g) m += c(g) * right_l2(g);
    return m;
  }

  Vec coeffs_of_left(const Mat& X) const { return X.col(e_); }
  Mat lambda_prime_inv() const { return Mat::Identity(l2_dim(), l2_dim()); }
  Mat lambda_inv() const { return Mat::Identity(l2_dim(), l2_dim()); }
  Mat sigma_coeffs(cd) const { return Mat::Identity(alg_dim(), alg_dim()); }

  Mat star_perm() const {
    const int n = g_.order();
    Mat k = Mat::Zero(n, n);
    for (int g = 0; g < n; ++g) k(g_.inverse(g), g) = 1.0;
    return k;
  }

  Vec mul(const Vec& a, const Vec& b) const {
    Vec c = Vec::Zero(alg_dim());
    for (int g = 0; g < alg_dim(); ++g)
      for (int h = 0; h < alg_dim(); ++h) c(g_.mul(g, h)) += a(g) * b(h);
    return c;
  }
  Vec unit() const {
    Vec u = Vec::Zero(alg_dim());
    u(e_) = 1.0;
    return u;
  }
  cd phi(const Vec& c) const { return c(e_); }
  Vec vacuum() const { return unit(); }
  Vec log_h_coeffs() const { return Vec::Zero(alg_dim()); }
  AntiLinear J_l2() const { return {star_perm()}; }
  Mat modular_l2(cd) const { return Mat::Identity(l2_dim(), l2_dim()); }
  Mat log_modular_l2() const { return Mat::Zero(l2_dim(), l2_dim()); }

 private:
  FiniteGroup g_;
  int e_ = 0;
};

}  // namespace taw
