#pragma once

// Truncated twisted Fock bimodule over a base. Level 0 is L^2 of the base,
// level n is U_n / ker P_n in coordinates C_n (C_n* C_n = P_n). Operators are
// assembled with the level N -> N+1 block dropped.

#include "taw/rng.hpp"
#include "taw/twist.hpp"

namespace taw {

inline constexpr double kWellDefinedTol = 1e-8;
inline constexpr double kRealityTol = 1e-8;

template <class Base>
class TwistedFock {
 public:
  TwistedFock(TensorPowers<Base> pw, const Mat& T, int N, long budget = kDefaultBudget)
      : pw_(std::move(pw)), N_(N) {
    if (N < 1) throw Error(ErrorKind::DimensionMismatch, "cutoff must be at least 1");
    if (pw_.N() < N) throw Error(ErrorKind::LevelMismatch, "tensor powers do not reach the cutoff");
    try {
      tower_ = N >= 2 ? build_tower(pw_, T, N, budget) : build_tower(pw_, Mat::Zero(pw_.dim(2 > pw_.N() ? 1 : 2), 0), 1, budget);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NotATwist) throw Error(ErrorKind::IncompatibleTwist, e.what());
      throw;
    }
    T_ = T;
    C_.resize(N + 1);
    offset_.resize(N + 2);
    offset_[0] = 0;
    const int D = pw_.base().l2_dim();
    C_[0] = {Mat::Identity(D, D), Mat::Identity(D, D), D, 1.0, 1.0};
    const int m = pw_.m();
    C_[1] = {Mat::Identity(m, m), Mat::Identity(m, m), m, 1.0, 1.0};
    for (int n = 2; n <= N; ++n) C_[n] = tower_.levels[n].C;
    for (int n = 0; n <= N; ++n) offset_[n + 1] = offset_[n] + C_[n].rank;
    BudgetGuard{budget}.require(offset_[N + 1], "Fock space");
    if (N >= 2) compat_ = compatibility_residuals(pw_, T, default_sample_ts(), &tower_);
    // descent of J, U_t and the actions through ker P_n
    for (int n = 2; n <= N; ++n) {
      const Mat ker = kernel_proj(n);
      descent_ = std::max(descent_, max_abs(C_[n].B * pw_.J(n).M * ker.conjugate()));
      descent_ = std::max(descent_, max_abs(C_[n].B * pw_.flow(n, 1.0) * ker));
      for (const auto& l : pw_.level(n).U.corr.left) descent_ = std::max(descent_, max_abs(C_[n].B * l * ker));
      for (const auto& r : pw_.level(n).U.corr.right) descent_ = std::max(descent_, max_abs(C_[n].B * r * ker));
    }
  }

  int N() const { return N_; }
  int dim(int n) const { return C_.at(n).rank; }
  int total_dim() const { return offset_[N_ + 1]; }
  int offset(int n) const { return offset_.at(n); }
  const TensorPowers<Base>& powers() const { return pw_; }
  const TwistTower& tower() const { return tower_; }
  const Quotient& quotient(int n) const { return C_.at(n); }
  const Base& base() const { return pw_.base(); }
  const TomitaCorrespondence<Base>& tc() const { return pw_.tc(); }
  const Mat& twist() const { return T_; }
  const CompatibilityReport& compatibility() const { return compat_; }
  double descent() const { return descent_; }
  double well_defined() const { return well_defined_; }
  double norm_ratio() const { return norm_ratio_; }

  // Creation blocks level n -> n+1 in twisted coordinates.
  Mat creation_left_block(const Vec& xi, int n) const {
    check_vec(xi);
    const Mat X = pw_.insert_left(xi, n);
    return twisted_block(X, n);
  }
  Mat creation_right_block(const Vec& eta, int n) const {
    check_vec(eta);
    const Mat X = pw_.insert_right(eta, n);
    return twisted_block(X, n);
  }

  Mat creation_left(const Vec& xi) const {
    Mat A = Mat::Zero(total_dim(), total_dim());
    const double Lnorm = opnorm(left_symbol(tc(), xi));
    for (int n = 0; n < N_; ++n) {
      const Mat b = creation_left_block(xi, n);
      A.block(offset_[n + 1], offset_[n], b.rows(), b.cols()) = b;
      if (n >= 1 && Lnorm > 0.0)
        norm_ratio_ = std::max(norm_ratio_, opnorm(b) / (std::sqrt(d_n(tower_.norm, n)) * Lnorm));
    }
    return A;
  }
  Mat creation_right(const Vec& eta) const {
    Mat A = Mat::Zero(total_dim(), total_dim());
    for (int n = 0; n < N_; ++n) {
      const Mat b = creation_right_block(eta, n);
      A.block(offset_[n + 1], offset_[n], b.rows(), b.cols()) = b;
    }
    return A;
  }

  Mat field_left(const Vec& xi) const {
    const Mat A = creation_left(xi);
    return A + A.adjoint();
  }
  Mat field_right(const Vec& eta) const {
    const Mat A = creation_right(eta);
    return A + A.adjoint();
  }

  // Analytic continuation sigma_{-i}(s(xi)) = a*(U_{-i} xi) + a(U_{i} xi).
  Mat field_left_kms(const Vec& xi) const {
    const Vec up = tc().flow(cd(0.0, -1.0)) * xi;
    const Vec dn = tc().flow(cd(0.0, 1.0)) * xi;
    return creation_left(up) + creation_left(dn).adjoint();
  }

  Mat left_action(const Vec& x) const { return blockwise([&](int n) { return pw_.left_action(n, x); }); }
  Mat right_action(const Vec& y) const { return blockwise([&](int n) { return pw_.right_action(n, y); }); }
  Mat F_U(cd z) const { return blockwise([&](int n) { return pw_.flow(n, z); }); }

  AntiLinear F_J() const {
    Mat M = Mat::Zero(total_dim(), total_dim());
    for (int n = 0; n <= N_; ++n) {
      const Mat b = C_[n].B * pw_.J(n).M * C_[n].Bplus.conjugate();
      M.block(offset_[n], offset_[n], b.rows(), b.cols()) = b;
    }
    return {M};
  }

  // Lambda(1) at level 0.
  Vec vacuum() const {
    Vec v = Vec::Zero(total_dim());
    v.head(dim(0)) = base().vacuum();
    return v;
  }

  // Level-1 vector in twisted coordinates (C_1 = 1).
  Vec embed(const Vec& xi, int n = 1) const {
    Vec v = Vec::Zero(total_dim());
    v.segment(offset_[n], dim(n)) = C_[n].B * xi;
    return v;
  }

  // E_T(X) = iota* X iota, read back as an element of the base.
  Vec conditional_expectation(const Mat& X) const {
    return base().coeffs_of_left(X.topLeftCorner(dim(0), dim(0)));
  }
  cd phi_hat(const Mat& X) const {
    const Vec om = base().vacuum();
    return om.dot(X.topLeftCorner(dim(0), dim(0)) * om);
  }

  // Columns of levels <= max_level.
  long safe_cols(int max_level) const { return max_level < 0 ? 0 : offset_[std::min(max_level, N_) + 1]; }

  void check_vec(const Vec& v) const {
    if (v.size() != pw_.m()) throw Error(ErrorKind::VectorDimensionMismatch, "vector does not live in the correspondence");
  }

 private:
  Mat kernel_proj(int n) const {
    const long r = pw_.dim(n);
    return Mat::Identity(r, r) - C_[n].Bplus * C_[n].B;
  }

  Mat twisted_block(const Mat& X, int n) const {
    const Quotient& out = C_[n + 1];
    const Quotient& in = C_[n];
    if (n >= 1) well_defined_ = std::max(well_defined_, max_abs(out.B * X * kernel_proj(n)));
    return out.B * X * in.Bplus;
  }

  template <class F>
  Mat blockwise(F f) const {
    Mat M = Mat::Zero(total_dim(), total_dim());
    for (int n = 0; n <= N_; ++n) {
      const Mat b = C_[n].B * f(n) * C_[n].Bplus;
      M.block(offset_[n], offset_[n], b.rows(), b.cols()) = b;
    }
    return M;
  }

  TensorPowers<Base> pw_;
  int N_;
  Mat T_;
  TwistTower tower_;
  std::vector<Quotient> C_;
  std::vector<int> offset_;
  CompatibilityReport compat_;
  double descent_ = 0.0;
  mutable double well_defined_ = 0.0;
  mutable double norm_ratio_ = 0.0;
};

template <class Base>
TwistedFock<Base> build_fock(const TomitaCorrespondence<Base>& tc, const Mat& T, int N, long budget = kDefaultBudget) {
  return TwistedFock<Base>(TensorPowers<Base>(tc, std::max(N, 2), budget), T, N, budget);
}

// ---------------------------------------------------------------------------
// Moments and modular checks.

template <class Base>
cd vacuum_moment(const TwistedFock<Base>& F, const std::vector<Vec>& word) {
  if (static_cast<int>(word.size()) > F.N())
    throw Error(ErrorKind::WordTooLongForCutoff, "word of length " + std::to_string(word.size()) + " needs cutoff >= length");
  const Vec om = F.vacuum();
  Vec v = om;
  for (auto it = word.rbegin(); it != word.rend(); ++it) v = F.field_left(*it) * v;
  return om.dot(v);
}

template <class Base>
Mat word_operator(const TwistedFock<Base>& F, const std::vector<Vec>& word) {
  Mat X = Mat::Identity(F.total_dim(), F.total_dim());
  for (const Vec& v : word) X = X * F.field_left(v);
  return X;
}

struct KmsReport {
  double covariance = 0.0;  // |phi(sigma_t(s(xi)) w) - phi(s(U_t xi) w)|
  double kms = 0.0;         // |phi(s(xi) w) - phi(w sigma_{-i}(s(xi)))|
  double max() const { return std::max(covariance, kms); }
};

template <class Base>
KmsReport kms_residual(const TwistedFock<Base>& F, const std::vector<Vec>& word, const std::vector<double>& ts) {
  if (word.empty()) return {};
  if (static_cast<int>(word.size()) + 1 > F.N())
    throw Error(ErrorKind::WordTooLongForCutoff, "KMS check needs cutoff >= word length + 1");
  KmsReport r;
  const std::vector<Vec> rest(word.begin() + 1, word.end());
  const Mat W = word_operator(F, rest);
  const Mat s1 = F.field_left(word[0]);
  for (double t : ts) {
    const Mat U = F.F_U(t);
    const cd lhs = F.phi_hat(U * s1 * U.adjoint() * W);
    const cd rhs = F.phi_hat(F.field_left(F.tc().flow(t) * word[0]) * W);
    r.covariance = std::max(r.covariance, std::abs(lhs - rhs));
  }
  r.kms = std::abs(F.phi_hat(s1 * W) - F.phi_hat(W * F.field_left_kms(word[0])));
  return r;
}

template <class Base>
void require_real_left(const TwistedFock<Base>& F, const Vec& xi) {
  if (reality_defect_left(F.tc(), xi) > kRealityTol * std::max(1.0, xi.norm()))
    throw Error(ErrorKind::RealityViolation, "vector is not fixed by J U_{-i/2}");
}

template <class Base>
void require_real_right(const TwistedFock<Base>& F, const Vec& eta) {
  if (reality_defect_right(F.tc(), eta) > kRealityTol * std::max(1.0, eta.norm()))
    throw Error(ErrorKind::RealityViolation, "vector is not fixed by J U_{i/2}");
}

// F(J) s(xi) F(J) = d(J xi)
template <class Base>
double conj_intertwining_residual(const TwistedFock<Base>& F, const Vec& xi) {
  require_real_left(F, xi);
  const AntiLinear J = F.F_J();
  const Mat lhs = sandwich(J, F.field_left(xi), J);
  return opnorm(lhs - F.field_right(F.tc().J.apply(xi)));
}

// Creation-level version: J^(n+1) a*_n(xi) J^(n) = b*_n(J xi), all levels.
template <class Base>
double conj_creation_residual(const TwistedFock<Base>& F, const Vec& xi) {
  const AntiLinear J = F.F_J();
  return opnorm(sandwich(J, F.creation_left(xi), J) - F.creation_right(F.tc().J.apply(xi)));
}

template <class Base>
double locality_residual(const TwistedFock<Base>& F, const Vec& xi, const Vec& eta) {
  require_real_left(F, xi);
  require_real_right(F, eta);
  const Mat s = F.field_left(xi), d = F.field_right(eta);
  const long c = F.safe_cols(F.N() - 2);
  if (c == 0) return 0.0;
  return opnorm((s * d - d * s).leftCols(c));
}

// Tomita operator on level 1 from Lambda(s(xi_r)) = s(xi_r) Omega over a real
// basis; Delta = S* S compared with U_t. Scalar bases only, where Omega spans L^2.
struct LevelOneReport {
  double tomita = 0.0;   // |S - J U_{-i/2}|
  double modular = 0.0;  // max_t |Delta^{it} - U_t|
  double max() const { return std::max(tomita, modular); }
};

template <class Base>
LevelOneReport level_one_modular(const TwistedFock<Base>& F, const std::vector<double>& ts) {
  if (F.base().l2_dim() != 1) throw Error(ErrorKind::DimensionMismatch, "level-one check is for scalar bases");
  const auto& tc = F.tc();
  const int m = tc.corr.m;
  // real basis: projections of e_j and i e_j onto the real subspace span C^m over R
  std::vector<Vec> cand;
  for (int j = 0; j < m; ++j) {
    cand.push_back(project_real_left(tc, Vec::Unit(m, j)));
    cand.push_back(project_real_left(tc, Vec(I_unit * Vec::Unit(m, j))));
  }
  // pick m vectors that are independent over C
  Mat X(m, 0), Xs(m, 0);
  const Vec om = F.vacuum();
  for (const Vec& c : cand) {
    if (X.cols() == m) break;
    Mat trial(m, X.cols() + 1);
    trial << X, c;
    Eigen::JacobiSVD<Mat> svd(trial);
    if (svd.singularValues()(svd.singularValues().size() - 1) < 1e-6) continue;
    const Mat s = F.field_left(c);
    const Vec Ls = s * om, Lss = s.adjoint() * om;
    X = trial;
    Xs.conservativeResize(m, X.cols());
    Xs.col(X.cols() - 1) = Lss.segment(F.offset(1), m);
    (void)Ls;
  }
  LevelOneReport r;
  if (X.cols() < m) {
    r.tomita = r.modular = std::numeric_limits<double>::infinity();
    return r;
  }
  // S(sum c_r x_r) = sum conj(c_r) x*_r  =>  S = Xs conj(X^{-1}) conj(.)
  const Mat S = Xs * X.inverse().conjugate();
  const Mat ideal = tc.J.M * tc.flow(cd(0.0, -0.5)).conjugate();
  r.tomita = opnorm(S - ideal);
  const Mat Delta = herm_part(S.transpose() * S.conjugate());
  for (double t : ts) {
    const Mat Dit = herm_func(Delta, [t](double x) { return std::exp(I_unit * t * std::log(x)); });
    r.modular = std::max(r.modular, opnorm(Dit - tc.flow(t)));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Type-I factorization: F_T(L^2 (x) C^k) ~ L^2 (x) F_T(C^k).

struct TypeIReport {
  double identification = 0.0;  // W_n unitarity and kernel
  double P = 0.0;               // |W P W* - 1 (x) P_T|
  double unitary = 0.0;         // F(V) unitarity
  double creation_left = 0.0;   // a*(Lambda(x) (x) xi) vs F(V)* (x (x) a*_T(xi)) F(V)
  double creation_right = 0.0;  // b*(Lambda'(y) (x) eta) vs F(V)* (J y* J (x) b*_T(eta)) F(V)
  double expectation = 0.0;     // E of words vs scalar moments
  double max() const { return std::max({identification, P, unitary, creation_left, creation_right, expectation}); }
};

inline TypeIReport type_I_factorization_check(const BaseAlgebra& base, int k, const Mat& C, const Mat& a,
                                              const Twist& Tm, int N, std::uint64_t seed = 1,
                                              long budget = kDefaultBudget) {
  TypeIReport r;
  const auto tc = make_multiplicity_corr(base, k, C, a);
  TensorPowers<BaseAlgebra> pw(tc, std::max(N, 2), budget);
  const Twist lifted = lift_twist(pw, Tm);
  const TwistedFock<BaseAlgebra> F(pw, lifted.T, N, budget);
  const Identification id = multiplicity_identification(pw, k, N);
  r.identification = std::max(id.unitarity, id.kernel);
  const int D = base.l2_dim();

  // scalar side in plain tensor coordinates
  const TensorGeometry geo{k};
  const TwistTower ts = build_tower(geo, Tm.T, N, budget);
  std::vector<Quotient> Cs(N + 1);
  Cs[0] = {Mat::Identity(1, 1), Mat::Identity(1, 1), 1, 1.0, 1.0};
  for (int n = 1; n <= N; ++n) Cs[n] = ts.levels[n].C;
  Cs[1] = {Mat::Identity(k, k), Mat::Identity(k, k), k, 1.0, 1.0};

  std::vector<Mat> FV(N + 1);
  FV[0] = Mat::Identity(D, D);
  const Mat idD = Mat::Identity(D, D);
  for (int n = 1; n <= N; ++n) {
    const Mat& W = id.W[n];
    r.P = std::max(r.P, opnorm(W * F.tower().P(n) * W.adjoint() - kron(idD, ts.P(n))) /
                            std::max(1.0, ts.levels[n].max_eig));
    FV[n] = kron(idD, Cs[n].B) * W * F.quotient(n).Bplus;
    if (FV[n].rows() != FV[n].cols()) {
      r.unitary = std::numeric_limits<double>::infinity();
      return r;
    }
    r.unitary = std::max(r.unitary, max_abs(FV[n].adjoint() * FV[n] - Mat::Identity(FV[n].cols(), FV[n].cols())));
  }

  Philox rng(seed, 0x7e1);
  const Mat Xinv = base.lambda_inv();
  for (int trial = 0; trial < 3; ++trial) {
    const Vec xc = random_vector(rng, base.alg_dim());
    const Vec f = random_vector(rng, k);
    // Lambda(x) (x) f and Lambda'(x) (x) f
    const Mat x = base.to_matrix(xc);
    const Vec lam = vec_rm(x * base.h_half());
    const Vec lamp = vec_rm(base.h_half() * x);
    const Vec xi = kron(lam, f), eta = kron(lamp, f);
    const Mat Lx = base.left_l2_elem(xc);
    const Mat Rx = base.right_l2_elem(xc);
    for (int n = 0; n < N; ++n) {
      const Mat aT = Cs[n + 1].B * kron(f, Mat::Identity(ipow(k, n), ipow(k, n))) * Cs[n].Bplus;
      const Mat bT = Cs[n + 1].B * kron(Mat::Identity(ipow(k, n), ipow(k, n)), f) * Cs[n].Bplus;
      const Mat lhs = F.creation_left_block(xi, n);
      const Mat rhs = FV[n + 1].adjoint() * kron(Lx, aT) * FV[n];
      r.creation_left = std::max(r.creation_left, opnorm(lhs - rhs));
      const Mat lhs_r = F.creation_right_block(eta, n);
      const Mat rhs_r = FV[n + 1].adjoint() * kron(Rx, bT) * FV[n];
      r.creation_right = std::max(r.creation_right, opnorm(lhs_r - rhs_r));
    }
  }

  // E of words in s(Lambda(1) (x) f_i) against the scalar vacuum state
  const auto tcs = make_multiplicity_corr(BaseAlgebra(), k, C, a);
  const TwistedFock<BaseAlgebra> Fs = build_fock(tcs, Tm.T, N, budget);
  std::vector<Vec> reals;
  for (int j = 0; j < k; ++j) {
    Vec v = project_real_left(tcs, Vec::Unit(k, j));
    if (v.norm() < 1e-8) v = project_real_left(tcs, Vec(I_unit * Vec::Unit(k, j)));
    reals.push_back(v);
  }
  const Vec one = base.vacuum();
  for (int trial = 0; trial < 4; ++trial) {
    const int len = std::min(N, 1 + trial);
    std::vector<Vec> w, ws;
    for (int l = 0; l < len; ++l) {
      const Vec& f = reals[rng.next_u32() % reals.size()];
      ws.push_back(f);
      w.push_back(kron(one, f));
    }
    const Vec E = F.conditional_expectation(word_operator(F, w));
    const cd psi = vacuum_moment(Fs, ws);
    r.expectation = std::max(r.expectation, (E - psi * base.unit()).cwiseAbs().maxCoeff());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Crossed product by a finite group acting through pi.

struct CrossedProductReport {
  double identification = 0.0;
  double P = 0.0;
  double transport = 0.0;     // unitarity of the level maps to l^2(G) (x) H_{T,n}
  double V_unitary = 0.0;
  double covariance = 0.0;    // V lambda_g = (lambda_g (x) 1) V
  double field = 0.0;         // V s(delta_e (x) xi) = alpha(s_T(xi)) V
  double max() const { return std::max({identification, P, transport, V_unitary, covariance, field}); }
};

inline CrossedProductReport crossed_product_check(const FiniteGroup& G, const std::vector<Mat>& rep, const Mat& C,
                                                  const Mat& a, const Twist& Tm, int N, std::uint64_t seed = 1,
                                                  long budget = kDefaultBudget) {
  const int k = Tm.space_dim;
  for (const Mat& p : rep)
    if (max_abs(Tm.T * kron(p, p) - kron(p, p) * Tm.T) > 1e-10)
      throw Error(ErrorKind::EquivarianceViolation, "twist does not commute with pi(g) (x) pi(g)");
  const auto tc = make_group_corr(G, rep, C, a);
  TensorPowers<GroupAlgebra> pw(tc, std::max(N, 2), budget);
  const Twist lifted = lift_twist_group(pw, rep, Tm);
  const TwistedFock<GroupAlgebra> F(pw, lifted.T, N, budget);
  const Identification id = group_identification(pw, rep, N);
  CrossedProductReport r;
  r.identification = std::max(id.unitarity, id.kernel);
  const int g = G.order();
  const Mat idG = Mat::Identity(g, g);

  const TwistTower ts = build_tower(TensorGeometry{k}, Tm.T, N, budget);
  std::vector<Quotient> Cs(N + 1);
  Cs[0] = {Mat::Identity(1, 1), Mat::Identity(1, 1), 1, 1.0, 1.0};
  for (int n = 1; n <= N; ++n) Cs[n] = ts.levels[n].C;
  Cs[1] = {Mat::Identity(k, k), Mat::Identity(k, k), k, 1.0, 1.0};

  // scalar-side offsets inside l^2(G) (x) F_T(H)
  std::vector<int> off(N + 2, 0);
  for (int n = 0; n <= N; ++n) off[n + 1] = off[n] + g * Cs[n].rank;
  const int total = off[N + 1];
  if (total != F.total_dim()) {
    r.transport = std::numeric_limits<double>::infinity();
    return r;
  }

  // transport Psi and V, blockwise
  Mat Psi = Mat::Zero(total, total), V = Mat::Zero(total, total);
  Psi.topLeftCorner(g, g) = idG;
  V.topLeftCorner(g, g) = idG;
  // F(pi(g)) on H_{T,n}
  auto Fpi = [&](int x, int n) {
    Mat p = Mat::Identity(1, 1);
    for (int l = 0; l < n; ++l) p = kron(p, rep[x]);
    return Mat(Cs[n].B * p * Cs[n].Bplus);
  };
  for (int n = 1; n <= N; ++n) {
    const Mat& W = id.W[n];
    r.P = std::max(r.P, opnorm(W * F.tower().P(n) * W.adjoint() - kron(idG, ts.P(n))) /
                            std::max(1.0, ts.levels[n].max_eig));
    const Mat blk = kron(idG, Cs[n].B) * W * F.quotient(n).Bplus;
    if (blk.rows() != F.dim(n) || blk.cols() != F.dim(n)) {
      r.transport = std::numeric_limits<double>::infinity();
      return r;
    }
    Psi.block(off[n], F.offset(n), blk.rows(), blk.cols()) = blk;
    const int rn = Cs[n].rank;
    for (int x = 0; x < g; ++x)
      V.block(off[n] + x * rn, off[n] + x * rn, rn, rn) = Fpi(G.inverse(x), n);
  }
  r.transport = max_abs(Psi.adjoint() * Psi - Mat::Identity(total, total));
  r.V_unitary = max_abs(V.adjoint() * V - Mat::Identity(total, total));

  // alpha(x) = sum_gamma e_gamma e_gamma* (x) F(pi(gamma^-1)) x F(pi(gamma)) on each level pair
  auto scalar_block = [&](const Mat& legs, int n_out, int n_in, int x) {
    return Mat(Fpi(G.inverse(x), n_out) * legs * Fpi(x, n_in));
  };
  auto lambda_full = [&](int x) {
    Mat L = Mat::Zero(total, total);
    for (int n = 0; n <= N; ++n) {
      const int rn = Cs[n].rank;
      L.block(off[n], off[n], g * rn, g * rn) = kron(GroupAlgebra(G).left_l2(x), Mat::Identity(rn, rn));
    }
    return L;
  };
  for (int x = 0; x < g; ++x) {
    Vec e = Vec::Zero(g);
    e(x) = 1.0;
    const Mat lhs = V * Psi * F.left_action(e) * Psi.adjoint();
    r.covariance = std::max(r.covariance, opnorm(lhs - lambda_full(x) * V));
  }
  Philox rng(seed, 0xc905);
  for (int trial = 0; trial < 3; ++trial) {
    const Vec f = random_vector(rng, k);
    Vec xi = Vec::Zero(pw.m());
    xi.segment(G.identity() * k, k) = f;
    const Mat lhs = V * Psi * F.field_left(xi) * Psi.adjoint();
    Mat alpha = Mat::Zero(total, total);
    for (int n = 0; n < N; ++n) {
      const Mat aT = Cs[n + 1].B * kron(f, Mat::Identity(ipow(k, n), ipow(k, n))) * Cs[n].Bplus;
      const int ro = Cs[n + 1].rank, ri = Cs[n].rank;
      for (int y = 0; y < g; ++y) {
        const Mat b = scalar_block(aT, n + 1, n, y);
        alpha.block(off[n + 1] + y * ro, off[n] + y * ri, ro, ri) = b;
        alpha.block(off[n] + y * ri, off[n + 1] + y * ro, ri, ro) = b.adjoint();
      }
    }
    r.field = std::max(r.field, opnorm(lhs - alpha * V));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Spectral gap experiment.

struct GapSample {
  double lhs = 0.0, rhs = 0.0, margin = 0.0;
  bool flagged = false;
};

struct GapExperiment {
  GapConstants constants;
  bool certified = false;  // kappa > 0
  std::vector<GapSample> samples;
  double hypothesis = 0.0;
  double centralizer = 0.0;
  double min_margin() const {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) w = std::min(w, s.margin);
    return w;
  }
  int flagged() const {
    int c = 0;
    for (const auto& s : samples) c += s.flagged;
    return c;
  }
};

inline constexpr double kGapFlag = -1e-6;
inline constexpr double kHypothesisTol = 1e-8;

template <class Base>
double gap_hypothesis_residual(const TwistedFock<Base>& F, const std::vector<Vec>& xis) {
  const auto& tc = F.tc();
  const int D = F.base().l2_dim();
  double res = 0.0;
  std::vector<Mat> L, Lh;
  for (const Vec& x : xis) {
    res = std::max(res, (tc.J.apply(x) - x).norm());
    L.push_back(left_symbol(tc, x));
    Lh.push_back(left_symbol(tc, Vec(tc.flow(cd(0.0, 0.5)) * x)));
  }
  for (std::size_t i = 0; i < xis.size(); ++i)
    for (std::size_t j = 0; j < xis.size(); ++j) {
      const Mat g = L[i].adjoint() * L[j];
      res = std::max(res, max_abs(i == j ? Mat(g - Mat::Identity(D, D)) : g));
      const Mat p = Lh[i].adjoint() * Lh[j];
      if (i == j) {
        res = std::max(res, std::max(herm_defect(p), max_abs(p * p - p)));
      } else {
        res = std::max(res, max_abs(p));
      }
    }
  return res;
}

template <class Base>
GapExperiment spectral_gap_experiment(const TwistedFock<Base>& F, const std::vector<Mat>& xs,
                                      const std::vector<Vec>& xis, const std::vector<double>& ts = default_sample_ts()) {
  GapExperiment g;
  g.hypothesis = gap_hypothesis_residual(F, xis);
  if (g.hypothesis > kHypothesisTol)
    throw Error(ErrorKind::HypothesisViolation, "gap vectors fail J-fixedness or orthonormality of symbols");
  for (const Mat& x : xs)
    for (double t : ts) {
      const Mat U = F.F_U(t);
      g.centralizer = std::max(g.centralizer, opnorm(U * x * U.adjoint() - x));
    }
  if (g.centralizer > 1e-8) throw Error(ErrorKind::HypothesisViolation, "sample operator is not in the centralizer");
  g.constants = gap_constants(opnorm(F.twist()), static_cast<int>(xis.size()));
  g.certified = g.constants.kappa > 0.0;
  const AntiLinear J = F.F_J();
  const Vec om = F.vacuum();
  for (const Mat& x : xs) {
    GapSample s;
    const Mat xop = sandwich(J, Mat(x.adjoint()), J);
    for (const Vec& xi : xis) {
      const Vec v = F.embed(xi);
      s.lhs += (xop * v - x * v).squaredNorm();
    }
    const Mat y = x - F.left_action(F.conditional_expectation(x));
    s.rhs = g.constants.kappa * g.constants.kappa * (y * om).squaredNorm();
    s.margin = s.lhs - s.rhs;
    s.flagged = g.certified && s.margin < kGapFlag;
    g.samples.push_back(s);
  }
  return g;
}

// Random centered element of degree <= 2 in the fields s(xi_i).
template <class Base>
Mat random_centered_word(const TwistedFock<Base>& F, const std::vector<Vec>& xis, Philox& rng) {
  const int dim = F.total_dim();
  std::vector<Mat> s;
  for (const Vec& x : xis) s.push_back(F.field_left(x));
  Mat X = Mat::Zero(dim, dim);
  for (std::size_t i = 0; i < s.size(); ++i) {
    X += rng.complex_normal() * s[i];
    for (std::size_t j = 0; j < s.size(); ++j) X += rng.complex_normal() * s[i] * s[j];
  }
  return X - F.left_action(F.conditional_expectation(X));
}

}  // namespace taw
