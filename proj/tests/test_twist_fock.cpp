#include "taw/fock.hpp"
#include "taw/oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace taw;

namespace {

Mat diag(std::initializer_list<double> v) {
  Mat m = Mat::Zero(v.size(), v.size());
  int i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

Mat swap2() {
  Mat s = Mat::Zero(2, 2);
  s(0, 1) = s(1, 0) = 1.0;
  return s;
}

Mat random_q(Philox& r, int k) {
  Mat q(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) q(i, j) = q(j, i) = r.uniform(-0.7, 0.7);
  return q;
}

// Multiplicity Fock over base with the twist lifted to the bimodule level.
TwistedFock<BaseAlgebra> mult_fock(const BaseAlgebra& b, int k, const Mat& C, const Mat& a, const Twist& t, int N) {
  const auto tc = make_multiplicity_corr(b, k, C, a);
  TensorPowers<BaseAlgebra> pw(tc, std::max(N, 2));
  const Twist lifted = lift_twist(pw, t);
  return TwistedFock<BaseAlgebra>(std::move(pw), lifted.T, N);
}

TwistedFock<BaseAlgebra> scalar_fock(double q, int N) {
  return mult_fock(BaseAlgebra(), 1, Mat::Identity(1, 1), Mat::Zero(1, 1), make_q_twist(q, 1), N);
}

// Scalar Araki-Woods data: k=2, C=swap, a=diag(w,-w).
TwistedFock<BaseAlgebra> aw_fock(double q, int N, double w = 1.0) {
  return mult_fock(BaseAlgebra(), 2, swap2(), diag({w, -w}), make_q_twist(q, 2), N);
}

double binom(int n, int r) {
  if (r < 0 || r > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= r; ++i) b = b * (n - r + i) / i;
  return b;
}

// Touchard-Riordan: m_{2n}(q) = (1-q)^{-n} sum_{j=-n}^{n} (-1)^j q^{j(j-1)/2} C(2n, n+j)
double touchard_riordan(double q, int n) {
  double s = 0.0;
  for (int j = -n; j <= n; ++j) s += ((j % 2) ? -1.0 : 1.0) * std::pow(q, j * (j - 1) / 2) * binom(2 * n, n + j);
  return s / std::pow(1.0 - q, n);
}

// sum over S_n of T(sigma), each sigma through its bubble-sort reduced word
Mat permutation_sum(const Mat& T, int k, int n) {
  const long D = ipow(k, n);
  auto Ti = [&](int i) { return kron(kron(Mat::Identity(ipow(k, i), ipow(k, i)), T), Mat::Identity(ipow(k, n - i - 2), ipow(k, n - i - 2))); };
  std::vector<Mat> gens;
  for (int i = 0; i + 1 < n; ++i) gens.push_back(Ti(i));
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Mat S = Mat::Zero(D, D);
  do {
    std::vector<int> p = perm;
    Mat prod = Mat::Identity(D, D);
    for (int pass = 0; pass < n; ++pass)
      for (int i = 0; i + 1 < n; ++i)
        if (p[i] > p[i + 1]) {
          std::swap(p[i], p[i + 1]);
          prod = prod * gens[i];
        }
    S += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return S;
}

template <class Fn>
ErrorKind kind_of(Fn&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::ConfigParse;
}


}  // namespace

// ---------------------------------------------------------------------------
// twists

TEST(Twist, Kinds) {
  EXPECT_EQ(max_abs(make_q_twist(0.0, 3).T), 0.0);
  EXPECT_LT(max_abs(make_q_twist(-1.0, 2).T + flip(2, 2)), 1e-15);
  Mat q(2, 2);
  q << 0.3, -0.5, -0.5, 0.2;
  EXPECT_NEAR(make_mixed_q_twist(q).norm, 0.5, 1e-14);
  EXPECT_EQ(kind_of([] { make_q_twist(1.2, 2); }), ErrorKind::NormExceedsOne);
  Mat bad = q;
  bad(0, 1) = 0.1;
  EXPECT_EQ(kind_of([&] { make_mixed_q_twist(bad); }), ErrorKind::NotHermitian);
  Mat nh = Mat::Zero(4, 4);
  nh(0, 1) = 0.5;
  EXPECT_EQ(kind_of([&] { make_custom_twist(nh, 2); }), ErrorKind::NotHermitian);
}

// Hermitian but complex q_ij still gives a twist.
TEST(Twist, ComplexHermitianMixedQ) {
  Mat q(2, 2);
  q << 0.3, cd(0.1, 0.4), cd(0.1, -0.4), -0.2;
  const Twist t = make_mixed_q_twist(q);
  EXPECT_LT(herm_defect(t.T), 1e-15);
  EXPECT_GE(build_tower(t, 4).min_psd_margin(), -kPsdTol);
}

TEST(Twist, YangBaxter) {
  for (double q : {-1.0, -0.3, 0.0, 0.5, 1.0}) EXPECT_LT(ybe_residual(make_q_twist(q, 2)), 1e-14);
  Philox r(101);
  for (int s = 0; s < 5; ++s) EXPECT_LT(ybe_residual(make_mixed_q_twist(random_q(r, 3))), 1e-13);
  int generic = 0;
  for (int s = 0; s < 5; ++s) {
    Mat H = random_hermitian(r, 4);
    H /= opnorm(H);
    generic += ybe_residual(make_custom_twist(H, 2)) > 1e-3;
  }
  EXPECT_EQ(generic, 5);
}

TEST(Tower, QFactorialAnchors) {
  for (double q : {0.0, 0.25, 0.5, 0.9}) {
    const TwistTower tw = build_tower(make_q_twist(q, 1), 6);
    for (int n = 1; n <= 6; ++n) EXPECT_NEAR(std::real(tw.P(n)(0, 0)), q_factorial(q, n), 1e-12) << q << " " << n;
  }
  EXPECT_NEAR(std::real(build_tower(make_q_twist(0.5, 1), 4).P(4)(0, 0)), 4.921875, 1e-12);
}

TEST(Tower, FreeAndFermionic) {
  const TwistTower free = build_tower(make_q_twist(0.0, 2), 4);
  for (int n = 1; n <= 4; ++n) EXPECT_EQ(max_abs(free.P(n) - Mat::Identity(free.P(n).rows(), free.P(n).rows())), 0.0);
  const TwistTower f1 = build_tower(make_q_twist(-1.0, 1), 3);
  EXPECT_NEAR(std::abs(f1.P(2)(0, 0)), 0.0, 1e-15);
  EXPECT_EQ(f1.levels[2].kernel_rank, 1);
  const TwistTower f2 = build_tower(make_q_twist(-1.0, 2), 3);
  EXPECT_EQ(f2.levels[2].C.rank, 1);
  EXPECT_EQ(f2.levels[3].C.rank, 0);
}

TEST(Tower, MatchesPermutationSum) {
  Philox r(102);
  for (int s = 0; s < 3; ++s) {
    const int k = 2 + s % 2;
    const Twist t = make_mixed_q_twist(random_q(r, k));
    const TwistTower tw = build_tower(t, 4);
    for (int n = 2; n <= 4; ++n) EXPECT_LT(max_abs(tw.P(n) - permutation_sum(t.T, k, n)), 1e-10) << n;
  }
}

TEST(Tower, BraidedRecursionAndSandwich) {
  Philox r(103);
  for (int s = 0; s < 20; ++s) {
    const int k = 1 + static_cast<int>(r.next_u32() % 3);
    const Twist t = make_mixed_q_twist(random_q(r, k));
    const TwistTower tw = build_tower(t, 4);
    EXPECT_LT(ybe_residual(t), 1e-12);
    EXPECT_LT(tw.max_braided_diff(), 1e-10);
    EXPECT_GE(tw.min_psd_margin(), -kPsdTol);
    EXPECT_TRUE(sandwich_bounds_report(t, tw).pass());
    for (int n = 1; n <= 4; ++n) EXPECT_LT(herm_defect(tw.P(n)), 1e-12);
  }
}

TEST(Tower, NonPositiveTowerIsRejected) {
  const Twist t = make_custom_twist(diag({1, -1, -1, 1}), 2);
  EXPECT_EQ(kind_of([&] { build_tower(t, 3); }), ErrorKind::NotATwist);
  const auto tc = make_multiplicity_corr(BaseAlgebra(), 2, Mat::Identity(2, 2), Mat::Zero(2, 2));
  EXPECT_EQ(kind_of([&] { build_fock(tc, t.T, 3); }), ErrorKind::IncompatibleTwist);
}

TEST(Tower, Budget) {
  EXPECT_EQ(kind_of([] { build_tower(make_q_twist(0.1, 4), 8, 4096); }), ErrorKind::BudgetExceeded);
}

TEST(Sandwich, ScalarChainAndConstants) {
  EXPECT_NEAR(c_n(0.5, 2), 0.2, 1e-15);
  EXPECT_NEAR(d_n(0.5, 2), 1.75, 1e-15);
  for (double q : {0.0, 0.3, 0.7}) EXPECT_NEAR(c_n(q, 1), (1 - q) / (1 + q), 1e-15);
  const Twist t = make_q_twist(0.5, 1);
  const TwistTower tw = build_tower(t, 3);
  const double ratio = std::real(tw.P(3)(0, 0) / tw.P(2)(0, 0));
  EXPECT_GE(ratio, 0.2);
  EXPECT_LE(ratio, 1.75);
  const SandwichReport s = sandwich_bounds_report(t, tw);
  EXPECT_TRUE(s.pass());
  const SandwichReport free = sandwich_bounds_report(make_q_twist(0.0, 2), build_tower(make_q_twist(0.0, 2), 4));
  for (const auto& l : free.levels) {
    EXPECT_EQ(l.lower, 0.0);
    EXPECT_EQ(l.upper, 0.0);
  }
}

TEST(GapConstants, Anchors) {
  const GapConstants g = gap_constants(0.0, 6);
  EXPECT_EQ(g.c, 1.0);
  EXPECT_EQ(g.d, 1.0);
  EXPECT_EQ(g.f, 6);
  EXPECT_NEAR(g.kappa, std::sqrt(6.0) - 1.0 / std::sqrt(6.0) - 2.0, 1e-12);
  EXPECT_NEAR(gap_constants(0.0, 1).kappa, -2.0, 1e-15);
  EXPECT_LE(gap_constants(0.0, 5).kappa, 0.0);
  EXPECT_EQ(kind_of([] { gap_constants(1.0, 3); }), ErrorKind::QOutOfRange);
  EXPECT_EQ(kind_of([] { gap_constants(-0.1, 3); }), ErrorKind::QOutOfRange);
}

TEST(GapConstants, Monotonicity) {
  for (double q : {0.0, 0.3, 0.6, 0.9}) {
    const GapConstants g = gap_constants(q, 8, 30);
    for (int n = 1; n <= 30; ++n) {
      EXPECT_LE(g.c_n[n], g.c_n[n - 1] + 1e-16);
      EXPECT_LE(g.c, g.c_n[n] + 1e-15);
      EXPECT_LE(g.d_n[n], g.d + 1e-12);
    }
    double prev = -1e300;
    for (int m = 1; m < 60; ++m) {
      const double k = gap_kappa(g.c, g.d, m);
      EXPECT_GT(k, prev);
      prev = k;
    }
    if (g.f > 0) {
      EXPECT_GT(gap_kappa(g.c, g.d, static_cast<double>(g.f)), 0.0);
      EXPECT_LE(gap_kappa(g.c, g.d, static_cast<double>(g.f - 1)), 0.0);
    }
  }
  for (double q : {0.3, 0.9}) EXPECT_LT(gap_constants(q, 6).c_last_step, 1e-14);
  // independent product to high order
  double p = 1.0;
  for (int j = 1; j < 2000; ++j) p *= (1 - std::pow(0.9, j)) / (1 + std::pow(0.9, j));
  EXPECT_NEAR(gap_constants(0.9, 6).c, p, 1e-14);
}

// ---------------------------------------------------------------------------
// lifts and compatibility

TEST(Lift, ScalarBaseIsIdentity) {
  const auto tc = make_multiplicity_corr(BaseAlgebra(), 2, Mat::Identity(2, 2), Mat::Zero(2, 2));
  TensorPowers<BaseAlgebra> pw(tc, 2);
  Philox r(111);
  const Twist t = make_mixed_q_twist(random_q(r, 2));
  EXPECT_LT(max_abs(lift_twist(pw, t).T - t.T), 1e-12);
}

TEST(Lift, MatrixBaseCommutesWithActions) {
  const auto tc = make_trivial_corr(make_base(diag({2, 1})));
  TensorPowers<BaseAlgebra> pw(tc, 2);
  const Twist lifted = lift_twist(pw, make_q_twist(0.5, 1));
  const CompatibilityReport c = compatibility_residuals(pw, lifted.T);
  EXPECT_LT(c.bimodule, 1e-12);
  EXPECT_LT(c.max(), 1e-10);
  EXPECT_NEAR(lifted.norm, 0.5, 1e-10);
  // the square of a scalar q-twist is q^2 once lifted
  EXPECT_LT(max_abs(lifted.T * lifted.T - 0.25 * Mat::Identity(4, 4)), 1e-10);
}

TEST(Compatibility, Examples) {
  EXPECT_LT(compatibility_residuals(make_q_twist(0.4, 2), Mat::Identity(2, 2), diag({0.3, -1.1})).max(), 1e-12);
  Mat q(2, 2);
  q << 0.2, 0.6, 0.6, 0.2;
  EXPECT_LT(compatibility_residuals(make_mixed_q_twist(q), swap2(), diag({1.0, -1.0})).max(), 1e-12);
  // C = swap exchanges q_11 and q_22
  q(1, 1) = -0.4;
  EXPECT_GT(compatibility_residuals(make_mixed_q_twist(q), swap2(), diag({1.0, -1.0})).J, 0.5);
  // flip on a centered bimodule over M_2
  const auto tc = make_multiplicity_corr(make_base(diag({2, 1})), 2, swap2(), diag({0.5, -0.5}));
  TensorPowers<BaseAlgebra> pw(tc, 3);
  const Twist lifted = lift_twist(pw, make_flip_twist(2));
  const TwistTower tw = build_tower(pw, lifted.T, 3);
  EXPECT_LT(compatibility_residuals(pw, lifted.T, default_sample_ts(), &tw).max(), 1e-10);
  // a twist that breaks the flow
  Mat T = Mat::Zero(4, 4);
  T(0, 1) = T(1, 0) = 0.5;
  EXPECT_GT(compatibility_residuals(make_custom_twist(T, 2), Mat::Identity(2, 2), diag({1.0, -1.0})).U, 1e-2);
}

// ---------------------------------------------------------------------------
// Fock space

TEST(Fock, Dimensions) {
  const auto f = scalar_fock(0.0, 5);
  EXPECT_EQ(f.total_dim(), 6);
  for (int n = 0; n <= 5; ++n) EXPECT_EQ(f.dim(n), 1);
  const auto g = mult_fock(make_base(diag({2, 1})), 1, Mat::Identity(1, 1), Mat::Zero(1, 1), make_q_twist(0.5, 1), 3);
  for (int n = 0; n <= 3; ++n) EXPECT_EQ(g.dim(n), 4);
  EXPECT_EQ(g.total_dim(), 16);
  const auto h = mult_fock(BaseAlgebra(), 2, Mat::Identity(2, 2), Mat::Zero(2, 2), make_q_twist(-1.0, 2), 3);
  EXPECT_EQ(h.dim(2), 1);
  EXPECT_EQ(h.dim(3), 0);
}

TEST(Fock, GramAndDescent) {
  const auto f = mult_fock(make_base(diag({2, 1})), 2, swap2(), diag({0.4, -0.4}), make_q_twist(0.5, 2), 3);
  EXPECT_LT(f.descent(), 1e-10);
  EXPECT_LT(f.compatibility().max(), 1e-10);
  for (int n = 2; n <= 3; ++n) {
    const Quotient& c = f.quotient(n);
    const Mat& P = f.tower().P(n);
    EXPECT_LT(max_abs(c.B.adjoint() * c.B - P), 1e-10);
  }
}

TEST(Fock, CreationNorms) {
  const auto f = scalar_fock(0.0, 5);
  const Vec e = Vec::Ones(1);
  for (int n = 0; n < 5; ++n) EXPECT_NEAR(opnorm(f.creation_left_block(e, n)), 1.0, 1e-12);
  const auto g = scalar_fock(0.5, 4);
  const double s = opnorm(g.creation_left_block(e, 3));
  EXPECT_NEAR(s * s, 1.875, 1e-12);
  EXPECT_LE(s * s, d_n(0.5, 3) + 1e-12);
  Philox r(121);
  const auto h = mult_fock(make_base(diag({2, 1})), 2, swap2(), diag({0.4, -0.4}), make_q_twist(0.6, 2), 4);
  for (int t = 0; t < 3; ++t) h.creation_left(random_vector(r, h.tc().dim()));
  EXPECT_LE(h.norm_ratio(), 1.0 + 1e-10);
  EXPECT_GT(h.norm_ratio(), 0.0);
}

TEST(Fock, FieldOnVacuum) {
  Philox r(122);
  const auto f = mult_fock(make_base(diag({2, 1})), 2, swap2(), diag({0.4, -0.4}), make_q_twist(0.3, 2), 3);
  const Vec xi = random_vector(r, f.tc().dim());
  const Vec v = f.field_left(xi) * f.vacuum();
  // s(xi) Lambda(1) = L(xi) Lambda(1) = xi, sitting at level one
  const Vec want = f.embed(left_symbol(f.tc(), xi) * f.base().vacuum());
  EXPECT_LT((v - want).norm(), 1e-12);
  EXPECT_LT((left_symbol(f.tc(), xi) * f.base().vacuum() - xi).norm(), 1e-12);
}

TEST(Fock, FreeUnitaryAndAntiUnitary) {
  const auto f = aw_fock(0.5, 4);
  const AntiLinear J = f.F_J();
  const Mat I = Mat::Identity(f.total_dim(), f.total_dim());
  EXPECT_LT(max_abs(J.M * J.M.conjugate() - I), 1e-10);
  EXPECT_LT(max_abs(J.M.adjoint() * J.M - I), 1e-10);
  for (double t : default_sample_ts()) {
    const Mat U = f.F_U(t);
    EXPECT_LT(max_abs(U.adjoint() * U - I), 1e-10);
    EXPECT_LT(max_abs(J.M * U.conjugate() * J.M.conjugate() - U), 1e-10);
  }
}

TEST(Fock, CatalanMoments) {
  const auto f = scalar_fock(0.0, 10);
  const Vec e = Vec::Ones(1);
  const double catalan[] = {1, 2, 5, 14, 42};
  for (int m = 1; m <= 5; ++m) {
    const cd v = vacuum_moment(f, std::vector<Vec>(2 * m, e));
    EXPECT_NEAR(std::abs(v - catalan[m - 1]), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(vacuum_moment(f, std::vector<Vec>(2 * m - 1, e))), 0.0, 1e-14);
  }
}

TEST(Fock, QGaussianMoments) {
  for (double q : {-0.5, 0.5}) {
    const auto f = scalar_fock(q, 10);
    const Vec e = Vec::Ones(1);
    EXPECT_NEAR(std::abs(vacuum_moment(f, std::vector<Vec>(4, e)) - (2.0 + q)), 0.0, 1e-12);
    for (int n = 1; n <= 5; ++n) {
      const double m = std::real(vacuum_moment(f, std::vector<Vec>(2 * n, e)));
      EXPECT_NEAR(m, pair_partition_moment(q, 2 * n), 1e-10 * std::max(1.0, m));
      EXPECT_NEAR(m, touchard_riordan(q, n), 1e-9 * std::max(1.0, m));
    }
  }
}

TEST(Fock, MomentsDoNotDependOnCutoff) {
  Philox r(123);
  const auto a = aw_fock(0.4, 4), b = aw_fock(0.4, 5);
  for (int s = 0; s < 4; ++s) {
    std::vector<Vec> w;
    for (int i = 0; i < 4; ++i) w.push_back(random_vector(r, 2));
    EXPECT_LT(std::abs(vacuum_moment(a, w) - vacuum_moment(b, w)), 1e-12);
  }
}

// two-point function of mixed vectors: <xi, P eta> with the flat kernel at level one
TEST(Fock, ConditionalExpectation) {
  Philox r(124);
  const auto f = scalar_fock(0.3, 3);
  EXPECT_LT((f.conditional_expectation(Mat::Identity(f.total_dim(), f.total_dim())) - Vec::Ones(1)).norm(), 1e-15);
  const Vec e = Vec::Ones(1);
  EXPECT_LT(f.conditional_expectation(f.field_left(e)).norm(), 1e-15);
  const auto g = mult_fock(BaseAlgebra(), 3, Mat::Identity(3, 3), Mat::Zero(3, 3), make_q_twist(0.3, 3), 3);
  const Vec x = random_vector(r, 3), y = random_vector(r, 3);
  const Vec two = g.conditional_expectation(g.field_left(x) * g.field_left(y));
  EXPECT_LT(std::abs(two(0) - x.dot(y)), 1e-12);

  const auto h = mult_fock(make_base(random_density(r, 2)), 2, swap2(), diag({0.5, -0.5}), make_q_twist(0.4, 2), 3);
  const BaseAlgebra& b = h.base();
  for (int s = 0; s < 4; ++s) {
    const Vec c = random_vector(r, 4);
    EXPECT_LT((h.conditional_expectation(h.left_action(c)) - c).norm(), 1e-12);
    const Mat X = h.field_left(random_vector(r, h.tc().dim())) + h.left_action(random_vector(r, 4)) +
                  h.right_action(random_vector(r, 4));
    const Vec E = h.conditional_expectation(X);
    EXPECT_LT((h.conditional_expectation(h.left_action(E)) - E).norm(), 1e-12);
    EXPECT_GE(min_eig(herm_part(b.to_matrix(h.conditional_expectation(X.adjoint() * X)))), -1e-10);
  }
}

TEST(Fock, GnsConsistency) {
  Philox r(125);
  const auto f = aw_fock(0.5, 4);
  for (int s = 0; s < 4; ++s) {
    const Mat x = word_operator(f, {random_vector(r, 2), random_vector(r, 2)});
    const Mat y = word_operator(f, {random_vector(r, 2), random_vector(r, 2)});
    const Vec om = f.vacuum();
    EXPECT_LT(std::abs((x * om).dot(y * om) - f.phi_hat(x.adjoint() * y)), 1e-10);
  }
}

TEST(Fock, Errors) {
  const auto f = aw_fock(0.5, 3);
  EXPECT_EQ(kind_of([&] { f.field_left(Vec::Ones(3)); }), ErrorKind::VectorDimensionMismatch);
  EXPECT_EQ(kind_of([&] { vacuum_moment(f, std::vector<Vec>(4, Vec::Ones(2))); }), ErrorKind::WordTooLongForCutoff);
  EXPECT_EQ(kind_of([&] { kms_residual(f, std::vector<Vec>(3, Vec::Ones(2)), default_sample_ts()); }),
            ErrorKind::WordTooLongForCutoff);
  Philox r(126);
  const Vec junk = random_vector(r, 2);
  EXPECT_EQ(kind_of([&] { conj_intertwining_residual(f, junk); }), ErrorKind::RealityViolation);
  EXPECT_EQ(kind_of([&] { locality_residual(f, junk, project_real_right(f.tc(), junk)); }), ErrorKind::RealityViolation);
  const auto aw = make_multiplicity_corr(BaseAlgebra(), 2, swap2(), diag({1.0, -1.0}));
  EXPECT_EQ(kind_of([&] { build_fock(aw, make_q_twist(0.0, 2).T, 13); }), ErrorKind::BudgetExceeded);
  EXPECT_EQ(kind_of([&] { build_fock(aw, make_q_twist(0.0, 2).T, 6, 64); }), ErrorKind::BudgetExceeded);
  const auto pw = TensorPowers<BaseAlgebra>(make_multiplicity_corr(BaseAlgebra(), 2, Mat::Identity(2, 2), Mat::Zero(2, 2)), 2);
  EXPECT_EQ(kind_of([&] { TwistedFock<BaseAlgebra>(pw, make_q_twist(0.1, 2).T, 3); }), ErrorKind::LevelMismatch);
}

// ---------------------------------------------------------------------------
// modular theory

TEST(Modular, LevelOneAndKms) {
  Philox r(131);
  for (double q : {0.0, 0.5}) {
    const auto f = aw_fock(q, 5);
    EXPECT_LT(level_one_modular(f, default_sample_ts()).max(), 1e-9);
    for (int len = 1; len <= 3; ++len) {
      std::vector<Vec> w;
      for (int i = 0; i < len; ++i) w.push_back(project_real_left(f.tc(), random_vector(r, 2)));
      EXPECT_LT(kms_residual(f, w, default_sample_ts()).max(), 1e-9) << q << " " << len;
    }
  }
}

TEST(Modular, KmsDiscriminatesNonRealVectors) {
  const auto f = aw_fock(0.5, 3);
  // e_1 is not in the real subspace, so s(e_1) is outside the algebra
  const KmsReport k = kms_residual(f, {Vec::Unit(2, 0), Vec::Unit(2, 0)}, default_sample_ts());
  EXPECT_GT(k.kms, 0.1);
}

TEST(Modular, TracialKmsIsCyclicity) {
  Philox r(132);
  const auto f = mult_fock(BaseAlgebra(), 2, Mat::Identity(2, 2), Mat::Zero(2, 2), make_q_twist(0.7, 2), 4);
  for (int s = 0; s < 3; ++s) {
    std::vector<Vec> w;
    for (int i = 0; i < 3; ++i) w.push_back(project_real_left(f.tc(), random_vector(r, 2)));
    EXPECT_LT(kms_residual(f, w, default_sample_ts()).max(), 1e-12);
  }
}

TEST(Modular, ConjugationIntertwining) {
  Philox r(133);
  for (double q : {0.0, 0.5, 0.7}) {
    const auto f = aw_fock(q, 5);
    for (int s = 0; s < 3; ++s) {
      const Vec xi = project_real_left(f.tc(), random_vector(r, 2));
      EXPECT_LT(conj_intertwining_residual(f, xi), 1e-9);
      EXPECT_LT(conj_creation_residual(f, random_vector(r, 2)), 1e-9);
    }
  }
  // matrix base, nontrivial flow
  const auto g = mult_fock(make_base(diag({2, 1})), 2, swap2(), diag({0.6, -0.6}), make_q_twist(0.5, 2), 3);
  for (int s = 0; s < 3; ++s) EXPECT_LT(conj_creation_residual(g, random_vector(r, g.tc().dim())), 1e-9);
}

TEST(Modular, Locality) {
  Philox r(134);
  for (double q : {0.0, 0.5}) {
    const auto f = aw_fock(q, 5);
    for (int s = 0; s < 4; ++s) {
      const Vec xi = project_real_left(f.tc(), random_vector(r, 2));
      const Vec eta = project_real_right(f.tc(), random_vector(r, 2));
      EXPECT_LT(locality_residual(f, xi, eta), 1e-10);
    }
  }
  const auto g = mult_fock(make_base(diag({2, 1})), 2, swap2(), diag({0.6, -0.6}), make_q_twist(0.5, 2), 3);
  const Vec xi = project_real_left(g.tc(), random_vector(r, g.tc().dim()));
  const Vec eta = project_real_right(g.tc(), random_vector(r, g.tc().dim()));
  EXPECT_LT(locality_residual(g, xi, eta), 1e-10);
}

TEST(Modular, NonCompatibleTwistIsNotLocal) {
  Philox r(135);
  Mat H = random_hermitian(r, 4);
  H *= 0.3 / opnorm(H);
  const auto f = mult_fock(BaseAlgebra(), 2, Mat::Identity(2, 2), Mat::Zero(2, 2), make_custom_twist(H, 2), 4);
  double worst = 0.0;
  for (int s = 0; s < 4; ++s) {
    const Vec xi = project_real_left(f.tc(), random_vector(r, 2));
    const Vec eta = project_real_right(f.tc(), random_vector(r, 2));
    worst = std::max(worst, locality_residual(f, xi, eta));
  }
  EXPECT_GT(worst, 1e-2);
}

// ---------------------------------------------------------------------------
// structure theorems

TEST(TypeI, Factorization) {
  const BaseAlgebra b = make_base(diag({2, 1}));
  for (double q : {0.0, 0.5}) {
    EXPECT_LT(type_I_factorization_check(b, 1, Mat::Identity(1, 1), Mat::Zero(1, 1), make_q_twist(q, 1), 3).max(), 1e-9);
    EXPECT_LT(type_I_factorization_check(b, 2, swap2(), diag({0.7, -0.7}), make_q_twist(q, 2), 3).max(), 1e-9);
  }
  EXPECT_LT(type_I_factorization_check(BaseAlgebra(), 2, Mat::Identity(2, 2), Mat::Zero(2, 2), make_q_twist(0.5, 2), 3).max(),
            1e-12);
}

TEST(CrossedProduct, CyclicGroups) {
  const Mat one = Mat::Identity(1, 1), zero = Mat::Zero(1, 1);
  const FiniteGroup z2 = cyclic_group(2);
  EXPECT_LT(crossed_product_check(z2, {one, one}, one, zero, make_q_twist(0.3, 1), 3).max(), 1e-12);
  for (double q : {0.0, 0.3})
    EXPECT_LT(crossed_product_check(z2, {one, Mat(-one)}, one, zero, make_q_twist(q, 1), 3).max(), 1e-9);
  // chi + conj(chi) on C^2, exchanged by C
  const cd w = std::exp(cd(0.0, 2.0 * M_PI / 3.0));
  std::vector<Mat> rep;
  for (int g = 0; g < 3; ++g) {
    Mat p = Mat::Zero(2, 2);
    p(0, 0) = std::pow(w, g);
    p(1, 1) = std::pow(std::conj(w), g);
    rep.push_back(p);
  }
  EXPECT_LT(crossed_product_check(cyclic_group(3), rep, swap2(), Mat::Zero(2, 2), make_q_twist(0.0, 2), 3).max(), 1e-9);
}

TEST(CrossedProduct, NonEquivariantTwist) {
  const Mat s = diag({1, -1});
  Mat T = Mat::Zero(4, 4);
  T(0, 1) = T(1, 0) = 0.5;
  EXPECT_EQ(kind_of([&] {
              crossed_product_check(cyclic_group(2), {Mat::Identity(2, 2), s}, Mat::Identity(2, 2), Mat::Zero(2, 2),
                                    make_custom_twist(T, 2), 2);
            }),
            ErrorKind::EquivarianceViolation);
}

// ---------------------------------------------------------------------------
// spectral gap

TEST(Gap, FreeSixVectors) {
  const int m = 6;
  const auto f = mult_fock(BaseAlgebra(), m, Mat::Identity(m, m), Mat::Zero(m, m), make_q_twist(0.0, m), 3);
  std::vector<Vec> xis;
  for (int i = 0; i < m; ++i) xis.push_back(Vec::Unit(m, i));
  Philox r(141);
  std::vector<Mat> xs;
  for (int s = 0; s < 20; ++s) xs.push_back(random_centered_word(f, xis, r));
  const GapExperiment g = spectral_gap_experiment(f, xs, xis);
  EXPECT_TRUE(g.certified);
  EXPECT_NEAR(g.constants.kappa, 0.041241452319314753, 1e-12);
  EXPECT_GE(g.min_margin(), kGapFlag);
  EXPECT_EQ(g.flagged(), 0);
  // centered words have zero expectation
  for (const Mat& x : xs) EXPECT_LT(f.conditional_expectation(x).norm(), 1e-12);
}

TEST(Gap, NotCertifiedBelowThreshold) {
  const int m = 4;
  const auto f = mult_fock(BaseAlgebra(), m, Mat::Identity(m, m), Mat::Zero(m, m), make_q_twist(0.0, m), 3);
  std::vector<Vec> xis;
  for (int i = 0; i < m; ++i) xis.push_back(Vec::Unit(m, i));
  Philox r(142);
  const GapExperiment g = spectral_gap_experiment(f, {random_centered_word(f, xis, r)}, xis);
  EXPECT_FALSE(g.certified);
  EXPECT_EQ(g.flagged(), 0);
}

TEST(Gap, CentralElementGivesZero) {
  const int m = 6;
  const auto f = mult_fock(BaseAlgebra(), m, Mat::Identity(m, m), Mat::Zero(m, m), make_q_twist(0.0, m), 2);
  std::vector<Vec> xis;
  for (int i = 0; i < m; ++i) xis.push_back(Vec::Unit(m, i));
  const GapExperiment g = spectral_gap_experiment(f, {f.left_action(Vec::Constant(1, 2.5))}, xis);
  ASSERT_EQ(g.samples.size(), 1u);
  EXPECT_LT(std::abs(g.samples[0].lhs), 1e-20);
  EXPECT_LT(std::abs(g.samples[0].rhs), 1e-20);
}

TEST(Gap, HypothesisChecks) {
  const int m = 2;
  const auto f = mult_fock(BaseAlgebra(), m, Mat::Identity(m, m), Mat::Zero(m, m), make_q_twist(0.0, m), 2);
  // not orthonormal
  EXPECT_EQ(kind_of([&] { spectral_gap_experiment(f, {}, {Vec::Unit(2, 0), Vec::Unit(2, 0)}); }),
            ErrorKind::HypothesisViolation);
  // not J-fixed
  EXPECT_EQ(kind_of([&] { spectral_gap_experiment(f, {}, {Vec(I_unit * Vec::Unit(2, 0))}); }),
            ErrorKind::HypothesisViolation);
  // not in the centralizer under a nontrivial flow
  const auto g = aw_fock(0.0, 2);
  const Vec xi = project_real_left(g.tc(), Vec::Unit(2, 0));
  EXPECT_EQ(kind_of([&] { spectral_gap_experiment(g, {g.field_left(xi)}, {}); }), ErrorKind::HypothesisViolation);
}
