#pragma once

// Relative tensor powers H^{(x)n} over the base, built left to right:
// U_{n+1} = H (x)_B U_n with quotient map Q_{n+1} on C^m (x) U_n.
// Psi_{n+1}: U_n (x) C^m -> U_{n+1} realizes the right-nested view, so both
// 1 (x) X and X (x) 1 are available without ever forming m^n representatives.

#include "taw/correspondence.hpp"

namespace taw {

struct BudgetGuard {
  long budget = 4096;
  void require(long dim, const std::string& what) const {
    if (dim > budget)
      throw Error(ErrorKind::BudgetExceeded,
                  what + ": estimated dimension " + std::to_string(dim) + " exceeds budget " + std::to_string(budget));
  }
};

inline constexpr long kDefaultBudget = 4096;

template <class Base>
class TensorPowers {
 public:
  struct Level {
    TomitaCorrespondence<Base> U;  // U.corr on C^{r_n}, J_n, generator a_n
    Quotient Q;                    // C^m (x) U_{n-1} -> U_n (n >= 2)
    Mat Psi, Psi_plus;             // U_{n-1} (x) C^m -> U_n and a right inverse
  };

  TensorPowers(const TomitaCorrespondence<Base>& tc, int N, long budget = kDefaultBudget)
      : tc_(tc), table_(inner_table(tc)) {
    BudgetGuard guard{budget};
    // fail before any work: the Gram at level N lives on C^m (x) U_{N-1}, dim U_n = D (m/D)^n
    // for multiplicity and group correspondences
    if (N >= 2 && tc.corr.m > 0) {
      const double D = tc.base.l2_dim(), ratio = tc.corr.m / D;
      const double est = tc.corr.m * D * std::pow(ratio, N - 1);
      if (est > static_cast<double>(budget))
        guard.require(est > 9e18 ? std::numeric_limits<long>::max() : static_cast<long>(est),
                      "tensor power level " + std::to_string(N));
    }
    levels_.resize(std::max(N, 1) + 1);
    levels_[1].U = tc;
    const int m = tc.corr.m;
    levels_[1].Q = {Mat::Identity(m, m), Mat::Identity(m, m), m, 1.0, 1.0};
    levels_[1].Psi = levels_[1].Psi_plus = Mat::Identity(m, m);
    for (int n = 2; n <= N; ++n) {
      const auto& prev = levels_[n - 1];
      guard.require(static_cast<long>(m) * prev.U.corr.m, "tensor power level " + std::to_string(n));
      Level L;
      L.Q = psd_quotient(rel_tensor_gram(table_, prev.U.corr), 1e-10);
      const int r = L.Q.rank, rp = prev.U.corr.m;
      double leak = 0.0;
      L.U = {tc.base, {}, {}, {}};
      L.U.corr.m = r;
      const Mat im = Mat::Identity(m, m), irp = Mat::Identity(rp, rp);
      for (std::size_t a = 0; a < tc.corr.left.size(); ++a) {
        L.U.corr.left.push_back(descend(L.Q, kron(tc.corr.left[a], irp), &leak));
        L.U.corr.right.push_back(descend(L.Q, kron(im, prev.U.corr.right[a]), &leak));
      }
      L.U.a = herm_part(descend(L.Q, kron(tc.a, irp) + kron(im, prev.U.a), &leak));
      // Psi_n (Q_{n-1} (x) 1) = Q_n (1 (x) Psi_{n-1})
      if (n == 2) {
        L.Psi = L.Q.B;
      } else {
        const Mat lhs = L.Q.B * kron(im, prev.Psi);
        const long w = lhs.cols();
        leak = std::max(leak, max_abs(lhs * (Mat::Identity(w, w) - kron(prev.Q.Bplus * prev.Q.B, im))));
        L.Psi = lhs * kron(prev.Q.Bplus, im);
      }
      L.Psi_plus = right_inverse(L.Psi);
      // J_n (xi (x) u) = J_{n-1} u (x) J xi
      const Mat rep = L.Psi * flip(m, rp) * kron(tc.J.M, prev.U.J.M);
      if (m * rp) {
        const Mat ker = Mat::Identity(m * rp, m * rp) - L.Q.Bplus * L.Q.B;
        leak = std::max(leak, max_abs(rep * ker.conjugate()));
      }
      L.U.J = {rep * L.Q.Bplus.conjugate()};
      leak_ = std::max(leak_, leak);
      levels_[n] = std::move(L);
    }
  }

  int N() const { return static_cast<int>(levels_.size()) - 1; }
  int dim(int n) const { return n == 0 ? tc_.base.l2_dim() : levels_.at(n).U.corr.m; }
  int m() const { return tc_.corr.m; }
  const Level& level(int n) const { return levels_.at(n); }
  const TomitaCorrespondence<Base>& tc() const { return tc_; }
  const Base& base() const { return tc_.base; }
  double leak() const { return leak_; }

  // 1 (x) X : U_{n+1} -> U_{n+1} for X on U_n.
  Mat left_pad(const Mat& X, int n) const {
    const auto& L = levels_.at(n + 1);
    const int m = tc_.corr.m;
    const Mat lift = kron(Mat::Identity(m, m), X);
    record_leak(L.Q.B * lift * (Mat::Identity(lift.rows(), lift.rows()) - L.Q.Bplus * L.Q.B));
    return L.Q.B * lift * L.Q.Bplus;
  }

  // X (x) 1 : U_{n+1} -> U_{n+1}.
  Mat right_pad(const Mat& X, int n) const {
    const auto& L = levels_.at(n + 1);
    const int m = tc_.corr.m;
    const Mat lift = kron(X, Mat::Identity(m, m));
    record_leak(L.Psi * lift * (Mat::Identity(lift.rows(), lift.rows()) - L.Psi_plus * L.Psi));
    return L.Psi * lift * L.Psi_plus;
  }

  // u -> xi (x) u as a map U_n -> U_{n+1}; level 0 is the left symbol.
  Mat insert_left(const Vec& xi, int n) const {
    if (n == 0) return left_symbol(tc_, xi);
    const auto& L = levels_.at(n + 1);
    return L.Q.B * kron(xi, Mat::Identity(dim(n), dim(n)));
  }

  // u -> u (x) eta as a map U_n -> U_{n+1}; level 0 is the right symbol.
  Mat insert_right(const Vec& eta, int n) const {
    if (n == 0) return right_symbol(tc_, eta);
    const auto& L = levels_.at(n + 1);
    return L.Psi * kron(Mat::Identity(dim(n), dim(n)), eta);
  }

  Mat flow(int n, cd z) const {
    if (n == 0) return tc_.base.modular_l2(z);
    return expm(I_unit * z * levels_.at(n).U.a);
  }
  AntiLinear J(int n) const { return n == 0 ? tc_.base.J_l2() : levels_.at(n).U.J; }

  Mat left_action(int n, const Vec& x) const {
    return n == 0 ? tc_.base.left_l2_elem(x) : levels_.at(n).U.corr.left_elem(x);
  }
  Mat right_action(int n, const Vec& y) const {
    return n == 0 ? tc_.base.right_l2_elem(y) : levels_.at(n).U.corr.right_elem(y);
  }

 private:
  void record_leak(const Mat& r) const { leak_ = std::max(leak_, max_abs(r)); }

  TomitaCorrespondence<Base> tc_;
  std::vector<std::vector<Vec>> table_;
  std::vector<Level> levels_;
  mutable double leak_ = 0.0;
};

// Plain tensor powers of C^k for multiplicity-level twists.
struct TensorGeometry {
  int k = 1;
  int dim(int n) const { return static_cast<int>(ipow(k, n)); }
  Mat left_pad(const Mat& X, int) const { return kron(Mat::Identity(k, k), X); }
  Mat right_pad(const Mat& X, int) const { return kron(X, Mat::Identity(k, k)); }
  double leak() const { return 0.0; }
};

}  // namespace taw
