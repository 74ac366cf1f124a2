#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace taw {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr cd I_unit{0.0, 1.0};

inline Mat herm_part(const Mat& a) { return 0.5 * (a + a.adjoint()); }

inline double herm_defect(const Mat& a) {
  if (a.size() == 0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline double max_abs(const Mat& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

// Largest singular value.
inline double opnorm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() * a.cols() > 4096) {
    Eigen::BDCSVD<Mat> svd(a);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  }
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

struct HermEig {
  RVec vals;  // ascending
  Mat vecs;
};

inline HermEig herm_eig(const Mat& a) {
  HermEig out;
  if (a.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Mat> es(herm_part(a));
  out.vals = es.eigenvalues();
  out.vecs = es.eigenvectors();
  return out;
}

inline Mat herm_func(const Mat& a, const std::function<cd(double)>& f) {
  HermEig e = herm_eig(a);
  Vec fv(e.vals.size());
  for (int i = 0; i < e.vals.size(); ++i) fv(i) = f(e.vals(i));
  return e.vecs * fv.asDiagonal() * e.vecs.adjoint();
}

inline double min_eig(const Mat& a) { return a.rows() ? herm_eig(a).vals(0) : 0.0; }
inline double max_eig(const Mat& a) {
  return a.rows() ? herm_eig(a).vals(a.rows() - 1) : 0.0;
}

inline Mat kron(const Mat& a, const Mat& b) { return Eigen::kroneckerProduct(a, b).eval(); }

inline Mat kron_power(const Mat& a, int n) {
  Mat out = Mat::Identity(1, 1);
  for (int i = 0; i < n; ++i) out = kron(out, a);
  return out;
}

inline Mat expm(const Mat& a) {
  if (a.rows() == 0) return a;
  return a.exp();
}

// Quotient of a positive semi-definite Gram matrix: G = W D W*, B = D^{1/2}_{>eps} W*_{>eps}.
// The kernel threshold is relative to the largest eigenvalue.
struct Quotient {
  Mat B;      // rank x n
  Mat Bplus;  // n x rank, B * Bplus = 1
  int rank = 0;
  double min_eig = 0.0;
  double max_eig = 0.0;
};

inline Quotient psd_quotient(const Mat& g, double rel_tol = 1e-10) {
  Quotient q;
  const long n = g.rows();
  if (n == 0) {
    q.B = Mat(0, 0);
    q.Bplus = Mat(0, 0);
    return q;
  }
  HermEig e = herm_eig(g);
  q.min_eig = e.vals(0);
  q.max_eig = e.vals(n - 1);
  const double cut = rel_tol * std::max(q.max_eig, 0.0);
  std::vector<int> keep;
  for (int i = 0; i < static_cast<int>(n); ++i)
    if (e.vals(i) > cut && e.vals(i) > 0.0) keep.push_back(i);
  q.rank = static_cast<int>(keep.size());
  q.B = Mat(q.rank, n);
  q.Bplus = Mat(n, q.rank);
  for (int r = 0; r < q.rank; ++r) {
    const double s = std::sqrt(e.vals(keep[r]));
    q.B.row(r) = s * e.vecs.col(keep[r]).adjoint();
    q.Bplus.col(r) = e.vecs.col(keep[r]) / s;
  }
  return q;
}

// Orthonormal basis of the nullspace, singular values below tol * max(1, sigma_max).
inline Mat nullspace(const Mat& a, double tol = 1e-9) {
  const long n = a.cols();
  if (a.rows() == 0) return Mat::Identity(n, n);
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeFullV);
  const RVec& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  const double cut = tol * std::max(1.0, smax);
  long rank = 0;
  for (long i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

// Right inverse of a surjective matrix.
inline Mat right_inverse(const Mat& a) {
  if (a.rows() == 0) return Mat(a.cols(), 0);
  return a.adjoint() * (a * a.adjoint()).inverse();
}

// Anti-linear operator v -> M conj(v).
struct AntiLinear {
  Mat M;
  Vec apply(const Vec& v) const { return M * v.conjugate(); }
  Mat apply(const Mat& v) const { return M * v.conjugate(); }
};

// Anti-linear composed with anti-linear is linear: A(B v) = A.M conj(B.M) v.
inline Mat compose(const AntiLinear& a, const AntiLinear& b) { return a.M * b.M.conjugate(); }
// Anti-linear after linear: A(L v) = A.M conj(L) conj(v).
inline AntiLinear compose(const AntiLinear& a, const Mat& l) { return {a.M * l.conjugate()}; }
// Linear after anti-linear.
inline AntiLinear compose(const Mat& l, const AntiLinear& a) { return {l * a.M}; }
// Conjugation of a linear map by anti-linear maps: A X B as a linear map.
inline Mat sandwich(const AntiLinear& a, const Mat& x, const AntiLinear& b) {
  return a.M * x.conjugate() * b.M.conjugate();
}

// Row-major vectorization of a square matrix.
inline Vec vec_rm(const Mat& x) {
  Vec v(x.size());
  for (long i = 0; i < x.rows(); ++i)
    for (long j = 0; j < x.cols(); ++j) v(i * x.cols() + j) = x(i, j);
  return v;
}

inline Mat unvec_rm(const Vec& v, long rows, long cols) {
  Mat x(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) x(i, j) = v(i * cols + j);
  return x;
}

inline Mat unit_matrix(int d, int i, int j) {
  Mat e = Mat::Zero(d, d);
  e(i, j) = 1.0;
  return e;
}

inline long ipow(long b, int e) {
  long r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Permutation matrix reversing the order of n legs of dimension m (leg 1 slowest).
inline Mat leg_reversal(int m, int n) {
  const long dim = ipow(m, n);
  Mat p = Mat::Zero(dim, dim);
  std::vector<int> digits(n);
  for (long idx = 0; idx < dim; ++idx) {
    long r = idx;
    for (int l = n - 1; l >= 0; --l) {
      digits[l] = static_cast<int>(r % m);
      r /= m;
    }
    long out = 0;
    for (int l = n - 1; l >= 0; --l) out = out * m + digits[l];
    p(out, idx) = 1.0;
  }
  return p;
}

// Flip on C^a (x) C^b -> C^b (x) C^a.
inline Mat flip(int a, int b) {
  Mat p = Mat::Zero(a * b, a * b);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j) p(j * a + i, i * b + j) = 1.0;
  return p;
}

// Operator op acting on legs k, k+1 (1-based) of n legs of dimension m.
inline Mat embed_two_leg(const Mat& op, int m, int k, int n) {
  return kron(kron(Mat::Identity(ipow(m, k - 1), ipow(m, k - 1)), op),
              Mat::Identity(ipow(m, n - k - 1), ipow(m, n - k - 1)));
}

inline double commutator_norm(const Mat& a, const Mat& b) { return opnorm(a * b - b * a); }

}  // namespace taw
