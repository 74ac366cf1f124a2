#pragma once

// Finite-dimensional Tomita correspondences over a base, relative tensor
// products, and the Bohr-sector disintegration over M_d.

#include "taw/base_modular.hpp"
#include "taw/errors.hpp"
#include "taw/linalg.hpp"

#include <map>
#include <vector>

namespace taw {

// Bimodule on C^m: images of the base's linear basis under left and right actions.
struct Correspondence {
  int m = 0;
  std::vector<Mat> left, right;

  Mat left_elem(const Vec& c) const {
    Mat out = Mat::Zero(m, m);
    for (std::size_t a = 0; a < left.size(); ++a)
      if (c(a) != 0.0) out += c(a) * left[a];
    return out;
  }
  Mat right_elem(const Vec& c) const {
    Mat out = Mat::Zero(m, m);
    for (std::size_t a = 0; a < right.size(); ++a)
      if (c(a) != 0.0) out += c(a) * right[a];
    return out;
  }
};

template <class Base>
struct TomitaCorrespondence {
  Base base;
  Correspondence corr;
  AntiLinear J;  // xi -> J.M conj(xi)
  Mat a;         // U_t = exp(i t a); U_{-i} = exp(a)

  int dim() const { return corr.m; }
  Mat flow(cd z) const { return expm(I_unit * z * a); }
};

struct BimoduleReport {
  double homomorphism = 0.0;  // multiplicativity, unitality, *-preservation
  double commutation = 0.0;   // [left(x), right(y)]
  double max() const { return std::max(homomorphism, commutation); }
};

template <class Base>
BimoduleReport check_bimodule(const Base& base, const Correspondence& c) {
  BimoduleReport r;
  const int nb = base.alg_dim();
  const Mat K = base.star_perm();
  const Mat id = Mat::Identity(c.m, c.m);
  r.homomorphism = std::max(max_abs(c.left_elem(base.unit()) - id), max_abs(c.right_elem(base.unit()) - id));
  for (int a = 0; a < nb; ++a) {
    Vec ea = Vec::Zero(nb);
    ea(a) = 1.0;
    const Vec star = K * ea;
    r.homomorphism = std::max(r.homomorphism, max_abs(c.left[a].adjoint() - c.left_elem(star)));
    // the right action is an anti-homomorphism on the algebra but a *-map on adjoints
    r.homomorphism = std::max(r.homomorphism, max_abs(c.right[a].adjoint() - c.right_elem(star)));
    for (int b = 0; b < nb; ++b) {
      Vec eb = Vec::Zero(nb);
      eb(b) = 1.0;
      const Vec ab = base.mul(ea, eb);
      r.homomorphism = std::max(r.homomorphism, max_abs(c.left[a] * c.left[b] - c.left_elem(ab)));
      r.homomorphism = std::max(r.homomorphism, max_abs(c.right[b] * c.right[a] - c.right_elem(ab)));
      r.commutation = std::max(r.commutation, max_abs(c.left[a] * c.right[b] - c.right[b] * c.left[a]));
    }
  }
  return r;
}

struct TomitaReport {
  double involution = 0.0;      // J^2 = 1 and J anti-unitary
  double conj_bimodule = 0.0;   // J(x xi y) = y* (J xi) x*
  double flow_covariance = 0.0; // U_t(x xi y) = sigma_t(x) U_t xi sigma_t(y)
  double flow_conj = 0.0;       // [J, U_t] = 0
  double max() const {
    return std::max(std::max(involution, conj_bimodule), std::max(flow_covariance, flow_conj));
  }
};

template <class Base>
TomitaReport validate_tomita(const TomitaCorrespondence<Base>& tc, const std::vector<double>& ts) {
  TomitaReport r;
  const auto& c = tc.corr;
  const int nb = tc.base.alg_dim();
  if (c.m == 0) return r;
  const Mat id = Mat::Identity(c.m, c.m);
  const Mat K = tc.base.star_perm();
  const Mat& J = tc.J.M;
  r.involution = std::max(opnorm(J * J.conjugate() - id), opnorm(J.adjoint() * J - id));
  for (int a = 0; a < nb; ++a) {
    const Vec star = K.col(a);
    r.conj_bimodule = std::max(r.conj_bimodule, opnorm(J * c.left[a].conjugate() - c.right_elem(star) * J));
    r.conj_bimodule = std::max(r.conj_bimodule, opnorm(J * c.right[a].conjugate() - c.left_elem(star) * J));
  }
  for (double t : ts) {
    const Mat U = tc.flow(t);
    const Mat S = tc.base.sigma_coeffs(t);
    for (int a = 0; a < nb; ++a) {
      const Vec sa = S.col(a);
      r.flow_covariance = std::max(r.flow_covariance, opnorm(U * c.left[a] - c.left_elem(sa) * U));
      r.flow_covariance = std::max(r.flow_covariance, opnorm(U * c.right[a] - c.right_elem(sa) * U));
    }
    r.flow_conj = std::max(r.flow_conj, opnorm(J * U.conjugate() - U * J));
  }
  return r;
}

inline std::vector<double> default_sample_ts() { return {1.0, -1.0, 0.37, -0.37}; }

inline void check_conj_data(const Mat& C, const Mat& a, double tol = 1e-10) {
  const long k = C.rows();
  if (C.cols() != k || a.rows() != k || a.cols() != k)
    throw Error(ErrorKind::DimensionMismatch, "conjugation and generator must be square of equal size");
  if (k == 0) return;
  const Mat id = Mat::Identity(k, k);
  if (max_abs(C * C.conjugate() - id) > tol || max_abs(C.adjoint() * C - id) > tol)
    throw Error(ErrorKind::InvolutionViolation, "C conj(C) != 1 or C not unitary");
  if (herm_defect(a) > tol) throw Error(ErrorKind::NotHermitian, "flow generator is not Hermitian");
  // [J, U_t] = 0 with J = C conj(.) and U_t = exp(ita) forces C conj(a) = -a C.
  if (max_abs(C * a.conjugate() + a * C) > tol)
    throw Error(ErrorKind::FlowConjugationMismatch, "C conj(a) != -a C, so J does not commute with U_t");
}

// L^2(B) (x) C^k with actions on the first leg, J = J_phi (x) C conj, U_t = Delta^{it} (x) exp(ita).
template <class Base>
TomitaCorrespondence<Base> make_multiplicity_corr(const Base& base, int k, const Mat& C_mult, const Mat& a_mult) {
  if (k < 0 || C_mult.rows() != k) throw Error(ErrorKind::DimensionMismatch, "multiplicity mismatch");
  check_conj_data(C_mult, a_mult);
  TomitaCorrespondence<Base> tc{base, {}, {}, {}};
  const int D = base.l2_dim();
  const Mat idk = Mat::Identity(k, k);
  tc.corr.m = D * k;
  for (int a = 0; a < base.alg_dim(); ++a) {
    tc.corr.left.push_back(kron(base.left_l2(a), idk));
    tc.corr.right.push_back(kron(base.right_l2(a), idk));
  }
  tc.J = {kron(base.J_l2().M, C_mult)};
  tc.a = kron(base.log_modular_l2(), idk) + kron(Mat::Identity(D, D), herm_part(a_mult));
  return tc;
}

template <class Base>
TomitaCorrespondence<Base> make_trivial_corr(const Base& base) {
  return make_multiplicity_corr(base, 1, Mat::Identity(1, 1), Mat::Zero(1, 1));
}

// l^2(G) (x) H over L(G): lambda_g (delta_h (x) xi) = delta_{gh} (x) pi(g) xi,
// (delta_h (x) xi) lambda_g = delta_{hg} (x) xi, J(delta_g (x) xi) = delta_{g^-1} (x) pi(g^-1) J xi.
inline TomitaCorrespondence<GroupAlgebra> make_group_corr(const FiniteGroup& g, const std::vector<Mat>& rep,
                                                          const Mat& C, const Mat& a, double tol = 1e-10) {
  GroupAlgebra base(g);
  const int n = g.order();
  if (static_cast<int>(rep.size()) != n)
    throw Error(ErrorKind::NotRepresentation, "one matrix per group element required");
  const long k = C.rows();
  for (const Mat& p : rep) {
    if (p.rows() != k || p.cols() != k)
      throw Error(ErrorKind::DimensionMismatch, "representation matrices must match C");
    if (max_abs(p.adjoint() * p - Mat::Identity(k, k)) > tol)
      throw Error(ErrorKind::NotRepresentation, "pi(g) is not unitary");
  }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (max_abs(rep[x] * rep[y] - rep[g.mul(x, y)]) > tol)
        throw Error(ErrorKind::NotRepresentation, "pi(g) pi(h) != pi(gh)");
  check_conj_data(C, a, tol);
  for (const Mat& p : rep) {
    if (max_abs(p * C - C * p.conjugate()) > tol)
      throw Error(ErrorKind::EquivarianceViolation, "pi(g) does not commute with J");
    if (max_abs(p * a - a * p) > tol)
      throw Error(ErrorKind::EquivarianceViolation, "pi(g) does not commute with the flow");
  }
  TomitaCorrespondence<GroupAlgebra> tc{base, {}, {}, {}};
  tc.corr.m = n * static_cast<int>(k);
  for (int x = 0; x < n; ++x) {
    tc.corr.left.push_back(kron(base.left_l2(x), rep[x]));
    tc.corr.right.push_back(kron(base.right_l2(x), Mat::Identity(k, k)));
  }
  Mat J = Mat::Zero(tc.corr.m, tc.corr.m);
  for (int x = 0; x < n; ++x) {
    const int xi = g.inverse(x);
    J.block(xi * k, x * k, k, k) = rep[xi] * C;
  }
  tc.J = {J};
  tc.a = kron(Mat::Identity(n, n), herm_part(a));
  return tc;
}

// L(xi) Lambda'(y) = xi y, as an m x dim L^2 matrix.
template <class Base>
Mat left_symbol(const TomitaCorrespondence<Base>& tc, const Vec& xi) {
  const Mat Y = tc.base.lambda_prime_inv();
  const int D = tc.base.l2_dim();
  Mat L(tc.corr.m, D);
  for (int p = 0; p < D; ++p) L.col(p) = tc.corr.right_elem(Y.col(p)) * xi;
  return L;
}

// R(xi) Lambda(x) = x xi.
template <class Base>
Mat right_symbol(const TomitaCorrespondence<Base>& tc, const Vec& xi) {
  const Mat X = tc.base.lambda_inv();
  const int D = tc.base.l2_dim();
  Mat R(tc.corr.m, D);
  for (int p = 0; p < D; ++p) R.col(p) = tc.corr.left_elem(X.col(p)) * xi;
  return R;
}

// Base-valued inner product: L(xi)* L(eta) = pi(<xi, eta>) on L^2.
template <class Base>
Vec base_inner(const TomitaCorrespondence<Base>& tc, const Vec& xi, const Vec& eta) {
  return tc.base.coeffs_of_left(left_symbol(tc, xi).adjoint() * left_symbol(tc, eta));
}

// Inner product table <e_i, e_k>_B over the standard basis of C^m.
template <class Base>
std::vector<std::vector<Vec>> inner_table(const TomitaCorrespondence<Base>& tc) {
  const int m = tc.corr.m;
  std::vector<Mat> Ls(m);
  for (int i = 0; i < m; ++i) Ls[i] = left_symbol(tc, Vec::Unit(m, i));
  std::vector<std::vector<Vec>> t(m, std::vector<Vec>(m));
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) t[i][k] = tc.base.coeffs_of_left(Ls[i].adjoint() * Ls[k]);
  return t;
}

// Gram matrix of H1 (x)_B K on the product basis e_i (x) f_j, index i * dim K + j.
inline Mat rel_tensor_gram(const std::vector<std::vector<Vec>>& table, const Correspondence& K) {
  const int m1 = static_cast<int>(table.size());
  const int m2 = K.m;
  Mat G = Mat::Zero(m1 * m2, m1 * m2);
  for (int i = 0; i < m1; ++i)
    for (int k = 0; k < m1; ++k) G.block(i * m2, k * m2, m2, m2) = K.left_elem(table[i][k]);
  return G;
}

template <class Base>
struct RelTensor {
  Mat gram;
  Quotient q;  // q.B: representatives -> quotient coordinates
  Correspondence corr;
  Mat flow_gen;            // generator of U (x) U on the quotient
  bool tomita = false;     // set when the two factors coincide
  TomitaCorrespondence<Base> tc;  // valid when tomita
  double gram_min_eig = 0.0;
  double descent = 0.0;    // max |B X (1 - B^+ B)| over lifted maps
};

inline bool same_corr(const Correspondence& a, const Correspondence& b) {
  if (a.m != b.m || a.left.size() != b.left.size()) return false;
  for (std::size_t i = 0; i < a.left.size(); ++i)
    if (max_abs(a.left[i] - b.left[i]) > 0.0 || max_abs(a.right[i] - b.right[i]) > 0.0) return false;
  return true;
}

// Lift of X on representatives to the quotient; records the kernel leakage.
inline Mat descend(const Quotient& q, const Mat& X, double* leak) {
  const long n = q.B.cols();
  if (leak && n) {
    const Mat ker = Mat::Identity(n, n) - q.Bplus * q.B;
    *leak = std::max(*leak, max_abs(q.B * X * ker));
  }
  return q.B * X * q.Bplus;
}

template <class Base>
RelTensor<Base> rel_tensor(const TomitaCorrespondence<Base>& t1, const TomitaCorrespondence<Base>& t2,
                           double eps_ker = 1e-10) {
  if (t1.base.alg_dim() != t2.base.alg_dim() || t1.base.l2_dim() != t2.base.l2_dim())
    throw Error(ErrorKind::BaseMismatch, "relative tensor product needs a common base");
  RelTensor<Base> r;
  const int m1 = t1.corr.m, m2 = t2.corr.m;
  r.gram = rel_tensor_gram(inner_table(t1), t2.corr);
  r.q = psd_quotient(r.gram, eps_ker);
  r.gram_min_eig = r.q.min_eig;
  const int nb = t1.base.alg_dim();
  r.corr.m = r.q.rank;
  const Mat i1 = Mat::Identity(m1, m1), i2 = Mat::Identity(m2, m2);
  for (int a = 0; a < nb; ++a) {
    r.corr.left.push_back(descend(r.q, kron(t1.corr.left[a], i2), &r.descent));
    r.corr.right.push_back(descend(r.q, kron(i1, t2.corr.right[a]), &r.descent));
  }
  r.flow_gen = herm_part(descend(r.q, kron(t1.a, i2) + kron(i1, t2.a), &r.descent));
  r.tomita = same_corr(t1.corr, t2.corr) && max_abs(t1.J.M - t2.J.M) == 0.0 && max_abs(t1.a - t2.a) == 0.0;
  if (r.tomita) {
    // J^(2)(xi (x) eta) = J eta (x) J xi
    const Mat rep = flip(m1, m2) * kron(t1.J.M, t2.J.M);
    if (m1 * m2) {
      const Mat ker = Mat::Identity(m1 * m2, m1 * m2) - r.q.Bplus * r.q.B;
      r.descent = std::max(r.descent, max_abs(r.q.B * rep * ker.conjugate()));
    }
    r.tc = {t1.base, r.corr, {r.q.B * rep * r.q.Bplus.conjugate()}, r.flow_gen};
  }
  return r;
}

// Phi (x) Psi on the quotient, for a right-module map Phi on H1 and a left-module map Psi on H2.
template <class Base>
Mat lift_tensor_map(const RelTensor<Base>& r, const Mat& Phi, const Mat& Psi) {
  return r.q.B * kron(Phi, Psi) * r.q.Bplus;
}

// ---------------------------------------------------------------------------
// Real subspaces: J U_{-i/2} xi = xi (left), J U_{i/2} eta = eta (right).

template <class Base>
Vec project_real_left(const TomitaCorrespondence<Base>& tc, const Vec& xi) {
  return 0.5 * (xi + tc.J.apply(Vec(tc.flow(cd(0.0, -0.5)) * xi)));
}

template <class Base>
Vec project_real_right(const TomitaCorrespondence<Base>& tc, const Vec& eta) {
  return 0.5 * (eta + tc.J.apply(Vec(tc.flow(cd(0.0, 0.5)) * eta)));
}

template <class Base>
double reality_defect_left(const TomitaCorrespondence<Base>& tc, const Vec& xi) {
  return (tc.J.apply(Vec(tc.flow(cd(0.0, -0.5)) * xi)) - xi).norm();
}

template <class Base>
double reality_defect_right(const TomitaCorrespondence<Base>& tc, const Vec& eta) {
  return (tc.J.apply(Vec(tc.flow(cd(0.0, 0.5)) * eta)) - eta).norm();
}

// ---------------------------------------------------------------------------
// Disintegration into Bohr sectors.

struct Sector {
  double omega = 0.0;
  Mat basis;      // orthonormal columns spanning the eigenspace
  int dim = 0;
  int mult = 0;   // k_omega with dim = dim L^2 * k_omega
};

struct BohrDecomposition {
  std::vector<Sector> sectors;  // ascending omega
  Mat V;                        // H -> L^2 (x) K, K = sum of multiplicity spaces
  RVec omegas;                  // frequency of each multiplicity basis vector
  Mat C_mult;                   // J on K: J_K u = C_mult conj(u)
  Mat a_mult;                   // diag(omegas)
  double unitarity = 0.0;
  double J_residual = 0.0;      // |V J V* - J_phi (x) J_K|
  double U_residual = 0.0;      // max_t |V U_t V* - Delta^{it} (x) exp(i t a_mult)|
  double symmetry = 0.0;        // max mismatch between omega and -omega sectors
  double bimodule = 0.0;        // [A, actions]
};

inline constexpr double kBohrCluster = 1e-8;

// Groups ascending eigenvalues into clusters of consecutive gaps <= tol.
inline std::vector<std::pair<double, std::vector<int>>> cluster_eigenvalues(const RVec& vals, double tol) {
  std::vector<std::pair<double, std::vector<int>>> out;
  for (int i = 0; i < vals.size(); ++i) {
    if (out.empty() || vals(i) - vals(out.back().second.back()) > tol)
      out.push_back({0.0, {}});
    out.back().second.push_back(i);
  }
  for (auto& c : out) {
    double s = 0.0;
    for (int i : c.second) s += vals(i);
    c.first = s / static_cast<double>(c.second.size());
  }
  return out;
}

// Generator of V_t xi = U_t(h^{-it} xi h^{it}).
template <class Base>
Mat corrected_generator(const TomitaCorrespondence<Base>& tc) {
  const Vec lh = tc.base.log_h_coeffs();
  return herm_part(tc.a - tc.corr.left_elem(lh) + tc.corr.right_elem(lh));
}

template <class Base>
BohrDecomposition disintegrate(const TomitaCorrespondence<Base>& tc, double delta = kBohrCluster,
                               const std::vector<double>& ts = default_sample_ts()) {
  BohrDecomposition out;
  const int m = tc.corr.m;
  const int D = tc.base.l2_dim();
  const int nb = tc.base.alg_dim();
  const Mat A = corrected_generator(tc);
  for (int a = 0; a < nb; ++a) {
    out.bimodule = std::max(out.bimodule, max_abs(A * tc.corr.left[a] - tc.corr.left[a] * A));
    out.bimodule = std::max(out.bimodule, max_abs(A * tc.corr.right[a] - tc.corr.right[a] * A));
  }
  HermEig e = herm_eig(A);
  auto clusters = cluster_eigenvalues(e.vals, delta);
  for (auto& [w, idx] : clusters) {
    Sector s;
    s.omega = w;
    s.dim = static_cast<int>(idx.size());
    s.basis = Mat(m, s.dim);
    for (int j = 0; j < s.dim; ++j) s.basis.col(j) = e.vecs.col(idx[j]);
    out.sectors.push_back(s);
  }
  // omega <-> -omega with equal dimension
  for (const auto& s : out.sectors) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : out.sectors)
      if (t.dim == s.dim) best = std::min(best, std::abs(t.omega + s.omega));
    out.symmetry = std::max(out.symmetry, best);
  }
  if (out.symmetry > 10 * delta)
    throw Error(ErrorKind::SpectrumAsymmetric, "frequency multiset is not symmetric under negation");

  // Bimodule intertwiners L^2 -> H_omega, one stacked nullspace solve per sector.
  std::vector<Mat> Vstar_cols;
  std::vector<double> omegas;
  for (auto& s : out.sectors) {
    if (s.dim % D != 0)
      throw Error(ErrorKind::SectorNotInducedBimodule, "sector dimension not a multiple of dim L^2");
    s.mult = s.dim / D;
    const int n = s.dim;
    Mat sys(2 * nb * n * D, n * D);
    const Mat idD = Mat::Identity(D, D), idn = Mat::Identity(n, n);
    for (int a = 0; a < nb; ++a) {
      const Mat La = s.basis.adjoint() * tc.corr.left[a] * s.basis;
      const Mat Ra = s.basis.adjoint() * tc.corr.right[a] * s.basis;
      // column-major vec: vec(A S) = (1 (x) A) vec S, vec(S B) = (B^T (x) 1) vec S
      sys.block((2 * a) * n * D, 0, n * D, n * D) = kron(idD, La) - kron(tc.base.left_l2(a).transpose(), idn);
      sys.block((2 * a + 1) * n * D, 0, n * D, n * D) = kron(idD, Ra) - kron(tc.base.right_l2(a).transpose(), idn);
    }
    Mat ns = nullspace(sys, 1e-9);
    if (ns.cols() != s.mult)
      throw Error(ErrorKind::SectorNotInducedBimodule,
                  "intertwiner space has dimension " + std::to_string(ns.cols()) + ", expected " +
                      std::to_string(s.mult));
    Eigen::HouseholderQR<Mat> qr(ns);
    ns = qr.householderQ() * Mat::Identity(ns.rows(), ns.cols());
    for (int j = 0; j < s.mult; ++j) {
      Mat S(n, D);
      for (int c = 0; c < D; ++c) S.col(c) = ns.col(j).segment(c * n, n);
      Vstar_cols.push_back(std::sqrt(static_cast<double>(D)) * s.basis * S);
      omegas.push_back(s.omega);
    }
  }
  const int K = static_cast<int>(Vstar_cols.size());
  Mat Vstar(m, D * K);
  for (int p = 0; p < D; ++p)
    for (int j = 0; j < K; ++j) Vstar.col(p * K + j) = Vstar_cols[j].col(p);
  out.V = Vstar.adjoint();
  out.omegas = RVec(K);
  for (int j = 0; j < K; ++j) out.omegas(j) = omegas[j];
  out.a_mult = Mat::Zero(K, K);
  for (int j = 0; j < K; ++j) out.a_mult(j, j) = omegas[j];
  if (m) {
    out.unitarity = std::max(max_abs(out.V * Vstar - Mat::Identity(D * K, D * K)),
                             max_abs(Vstar * out.V - Mat::Identity(m, m)));
  }

  // V J V* as an anti-linear matrix; read off J_K on Omega (x) e_j since J_phi Omega = Omega.
  const Mat VJ = out.V * tc.J.M * Vstar.conjugate();
  const Vec om = tc.base.vacuum();
  const double om2 = om.squaredNorm();
  out.C_mult = Mat::Zero(K, K);
  for (int j = 0; j < K; ++j) {
    const Vec img = VJ * kron(om.conjugate(), Vec::Unit(K, j));
    for (int i = 0; i < K; ++i) {
      cd s = 0.0;
      for (int p = 0; p < D; ++p) s += std::conj(om(p)) * img(p * K + i);
      out.C_mult(i, j) = s / om2;
    }
  }
  if (m) out.J_residual = opnorm(VJ - kron(tc.base.J_l2().M, out.C_mult));
  for (double t : ts) {
    if (!m) break;
    const Mat lhs = out.V * tc.flow(t) * Vstar;
    const Mat rhs = kron(tc.base.modular_l2(t), expm(I_unit * t * out.a_mult));
    out.U_residual = std::max(out.U_residual, opnorm(lhs - rhs));
  }
  return out;
}

// Transport all structure along a unitary W: the result is isomorphic to tc via W.
template <class Base>
TomitaCorrespondence<Base> transport(const TomitaCorrespondence<Base>& tc, const Mat& W) {
  TomitaCorrespondence<Base> out = tc;
  for (auto& l : out.corr.left) l = W * l * W.adjoint();
  for (auto& r : out.corr.right) r = W * r * W.adjoint();
  out.J = {W * tc.J.M * W.transpose()};
  out.a = herm_part(W * tc.a * W.adjoint());
  return out;
}

}  // namespace taw
