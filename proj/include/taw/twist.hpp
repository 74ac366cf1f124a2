#pragma once

// Twists on tensor squares, the P_{T,n} tower, sandwich bounds and the
// spectral-gap constants.

#include "taw/tensor_powers.hpp"

#include <functional>
#include <optional>
#include <string>

namespace taw {

enum class TwistLevel { multiplicity, bimodule };

struct Twist {
  Mat T;
  int space_dim = 0;  // one leg: k for multiplicity twists, dim H for bimodule twists
  TwistLevel level = TwistLevel::multiplicity;
  double norm = 0.0;
  std::string kind;
};

inline constexpr double kTwistTol = 1e-12;

inline Twist finish_twist(Mat T, int k, std::string kind, TwistLevel level = TwistLevel::multiplicity) {
  if (T.rows() != T.cols() || T.rows() != static_cast<long>(k) * k)
    throw Error(ErrorKind::DimensionMismatch, "twist must act on the tensor square");
  if (herm_defect(T) > kTwistTol) throw Error(ErrorKind::NotHermitian, "twist is not self-adjoint");
  Twist t{herm_part(T), k, level, 0.0, std::move(kind)};
  t.norm = opnorm(t.T);
  if (t.norm > 1.0 + kTwistTol) throw Error(ErrorKind::NormExceedsOne, "twist norm " + std::to_string(t.norm));
  return t;
}

// T(e_i (x) e_j) = q_ij e_j (x) e_i
inline Twist make_mixed_q_twist(const Mat& q) {
  const int k = static_cast<int>(q.rows());
  if (q.cols() != k) throw Error(ErrorKind::DimensionMismatch, "q matrix must be square");
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (std::abs(q(i, j)) > 1.0 + kTwistTol) throw Error(ErrorKind::NormExceedsOne, "|q_ij| > 1");
      if (std::abs(q(i, j) - std::conj(q(j, i))) > kTwistTol)
        throw Error(ErrorKind::NotHermitian, "q_ij != conj(q_ji)");
    }
  Mat T = Mat::Zero(k * k, k * k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) T(j * k + i, i * k + j) = q(i, j);
  return finish_twist(T, k, "mixed_q");
}

inline Twist make_q_twist(double q, int k) {
  if (std::abs(q) > 1.0) throw Error(ErrorKind::NormExceedsOne, "|q| > 1");
  Twist t = make_mixed_q_twist(Mat::Constant(k, k, q));
  t.kind = "q";
  return t;
}

inline Twist make_flip_twist(int k, double scale = 1.0) {
  Twist t = make_q_twist(scale, k);
  t.kind = "flip";
  return t;
}

inline Twist make_custom_twist(const Mat& T, int k) { return finish_twist(T, k, "custom"); }

// ---------------------------------------------------------------------------

inline double ybe_residual(const Mat& T1, const Mat& T2) { return opnorm(T1 * T2 * T1 - T2 * T1 * T2); }

inline double ybe_residual(const Twist& t) {
  const Mat id = Mat::Identity(t.space_dim, t.space_dim);
  return ybe_residual(kron(t.T, id), kron(id, t.T));
}

template <class Base>
double ybe_residual(const TensorPowers<Base>& pw, const Mat& T) {
  return ybe_residual(pw.right_pad(T, 2), pw.left_pad(T, 2));
}

// ---------------------------------------------------------------------------

struct TowerLevel {
  std::vector<Mat> T;  // T[j] = T_{j,n}, j = 1..n-1 (T[0] unused)
  Mat R, Rt, P, P_braided;
  double asymmetry = 0.0;
  double braided_diff = 0.0;  // |P - P_braided| / max(1, |P|)
  double min_eig = 0.0, max_eig = 0.0;
  int kernel_rank = 0;
  Quotient C;
};

struct TwistTower {
  int N = 0;
  double norm = 0.0;
  double leak = 0.0;
  std::vector<TowerLevel> levels;  // index n = 1..N

  const Mat& P(int n) const { return levels.at(n).P; }
  double max_braided_diff() const {
    double r = 0.0;
    for (int n = 1; n <= N; ++n) r = std::max(r, levels[n].braided_diff);
    return r;
  }
  double min_psd_margin() const {
    double r = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= N; ++n) r = std::min(r, levels[n].min_eig / std::max(1.0, levels[n].max_eig));
    return r;
  }
};

inline constexpr double kPsdTol = 1e-10;

template <class Geometry>
TwistTower build_tower(const Geometry& geom, const Mat& T, int N, long budget = kDefaultBudget) {
  if (N < 1) throw Error(ErrorKind::DimensionMismatch, "cutoff must be at least 1");
  if (T.rows() != static_cast<long>(geom.dim(2)) && N >= 2)
    throw Error(ErrorKind::LevelMismatch, "twist does not act on the tensor square of this geometry");
  BudgetGuard{budget}.require(geom.dim(N), "twist tower");
  TwistTower tw;
  tw.N = N;
  tw.norm = opnorm(T);
  tw.levels.resize(N + 1);
  const int d1 = geom.dim(1);
  tw.levels[1].P = tw.levels[1].P_braided = tw.levels[1].R = tw.levels[1].Rt = Mat::Identity(d1, d1);
  for (int n = 1; n <= N; ++n) {
    auto& L = tw.levels[n];
    if (n >= 2) {
      const auto& prev = tw.levels[n - 1];
      L.T.resize(n);
      L.T[1] = n == 2 ? T : geom.right_pad(prev.T[1], n - 1);
      for (int j = 2; j < n; ++j) L.T[j] = geom.left_pad(prev.T[j - 1], n - 1);
      const long dn = L.T[1].rows();
      const Mat id = Mat::Identity(dn, dn);
      Mat X = id;
      for (int j = n - 1; j >= 1; --j) X = id + L.T[j] * X;
      L.R = X;
      X = id;
      for (int j = 1; j <= n - 1; ++j) X = id + L.T[j] * X;
      L.Rt = X;
      L.P = geom.left_pad(prev.P, n - 1) * L.R;
      L.P_braided = geom.right_pad(prev.P, n - 1) * L.Rt;
      L.asymmetry = herm_defect(L.P);
      L.braided_diff = max_abs(L.P - L.P_braided) / std::max(1.0, max_abs(L.P));
      L.P = herm_part(L.P);
    }
    HermEig e = herm_eig(L.P);
    L.min_eig = e.vals(0);
    L.max_eig = e.vals(e.vals.size() - 1);
    if (L.min_eig < -kPsdTol * std::max(1.0, L.max_eig))
      throw Error(ErrorKind::NotATwist, "P_" + std::to_string(n) + " has eigenvalue " + std::to_string(L.min_eig));
    L.C = psd_quotient(L.P, 1e-10);
    L.kernel_rank = static_cast<int>(L.P.rows()) - L.C.rank;
  }
  tw.leak = geom.leak();
  return tw;
}

inline TwistTower build_tower(const Twist& t, int N, long budget = kDefaultBudget) {
  return build_tower(TensorGeometry{t.space_dim}, t.T, N, budget);
}

// ---------------------------------------------------------------------------
// Sandwich bounds and gap constants.

inline double c_n(double q, int n) {
  double c = 1.0;
  for (int k = 1; k <= n; ++k) c *= (1.0 - std::pow(q, k)) / (1.0 + std::pow(q, k));
  return c;
}

inline double d_n(double q, int n) {
  double d = 0.0;
  for (int k = 0; k <= n; ++k) d += std::pow(q, k);
  return d;
}

struct SandwichLevel {
  int n = 0;
  double c = 0.0, d = 0.0;
  double lower = 0.0, upper = 0.0;                  // min eig of P_{n+1} - c (1 (x) P_n), d (1 (x) P_n) - P_{n+1}
  double lower_braided = 0.0, upper_braided = 0.0;  // with P_n (x) 1
  double scale = 1.0;
};

struct SandwichReport {
  std::vector<SandwichLevel> levels;
  double worst() const {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& l : levels)
      w = std::min({w, l.lower / l.scale, l.upper / l.scale, l.lower_braided / l.scale, l.upper_braided / l.scale});
    return w;
  }
  bool pass(double tol = kPsdTol) const { return levels.empty() || worst() >= -tol; }
};

template <class Geometry>
SandwichReport sandwich_bounds_report(const Geometry& geom, const TwistTower& tw) {
  SandwichReport r;
  const double q = tw.norm;
  for (int n = 1; n < tw.N; ++n) {
    SandwichLevel l;
    l.n = n;
    l.c = c_n(q, n);
    l.d = d_n(q, n);
    const Mat& P1 = tw.levels[n + 1].P;
    const Mat lp = herm_part(geom.left_pad(tw.levels[n].P, n));
    const Mat rp = herm_part(geom.right_pad(tw.levels[n].P, n));
    l.scale = std::max(1.0, tw.levels[n + 1].max_eig);
    l.lower = min_eig(P1 - l.c * lp);
    l.upper = min_eig(l.d * lp - P1);
    l.lower_braided = min_eig(P1 - l.c * rp);
    l.upper_braided = min_eig(l.d * rp - P1);
    r.levels.push_back(l);
  }
  return r;
}

inline SandwichReport sandwich_bounds_report(const Twist& t, const TwistTower& tw) {
  return sandwich_bounds_report(TensorGeometry{t.space_dim}, tw);
}

struct GapConstants {
  double q = 0.0;
  int m = 1;
  std::vector<double> c_n, d_n;  // n = 0..n_max
  double c = 1.0, d = 1.0;
  int c_terms = 0;
  double c_last_step = 0.0;  // |c_K - c_{K-1}| at truncation
  double kappa = 0.0;
  long f = -1;               // least m with kappa(q, m) > 0, -1 if none below 1e6
};

inline double gap_c(double q, int* terms = nullptr, double* last_step = nullptr) {
  double c = 1.0, prev = 1.0;
  int k = 0;
  for (k = 1; k < 100000; ++k) {
    const double qk = std::pow(q, k);
    const double f = (1.0 - qk) / (1.0 + qk);
    prev = c;
    c *= f;
    if (std::abs(f - 1.0) < 1e-16) break;
  }
  if (terms) *terms = k;
  if (last_step) *last_step = std::abs(c - prev);
  return c;
}

inline double gap_kappa(double c, double d, double m) {
  return std::sqrt(c * m) - std::sqrt(d / m) - 2.0 * std::sqrt(d);
}

inline GapConstants gap_constants(double q, int m, int n_max = 12) {
  if (!(q >= 0.0 && q < 1.0)) throw Error(ErrorKind::QOutOfRange, "gap constants need 0 <= q < 1");
  if (m < 1) throw Error(ErrorKind::DimensionMismatch, "m must be positive");
  GapConstants g;
  g.q = q;
  g.m = m;
  for (int n = 0; n <= n_max; ++n) {
    g.c_n.push_back(c_n(q, n));
    g.d_n.push_back(d_n(q, n));
  }
  g.c = gap_c(q, &g.c_terms, &g.c_last_step);
  g.d = 1.0 / (1.0 - q);
  g.kappa = gap_kappa(g.c, g.d, m);
  // kappa is increasing in m: double until positive, then bisect.
  const long cap = 1000000;
  long hi = 1;
  while (hi < cap && !(gap_kappa(g.c, g.d, static_cast<double>(hi)) > 0.0)) hi = std::min(cap, hi * 2);
  if (gap_kappa(g.c, g.d, static_cast<double>(hi)) > 0.0) {
    long lo = hi / 2;  // kappa(lo) <= 0 or lo == 0
    while (hi - lo > 1) {
      const long mid = (lo + hi) / 2;
      if (gap_kappa(g.c, g.d, static_cast<double>(mid)) > 0.0) hi = mid; else lo = mid;
    }
    g.f = hi;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Identification of tensor powers with an explicit product form.
//   multiplicity:   (L^2 (x) C^k)^{(x)n}  ~  L^2 (x) (C^k)^{(x)n}
//   group:          H_pi^{(x)n}           ~  l^2(G) (x) H^{(x)n}

struct Identification {
  int outer = 1;           // dim L^2 or |G|
  int k = 1;
  std::vector<Mat> W;      // W[n]: U_n -> outer (x) k^n
  double unitarity = 0.0;
  double kernel = 0.0;
};

template <class Base, class Multiply>
Identification build_identification(const TensorPowers<Base>& pw, int outer, int k, int N, Multiply mul) {
  Identification id;
  id.outer = outer;
  id.k = k;
  id.W.resize(N + 1);
  const int m = pw.m();
  if (m != outer * k) throw Error(ErrorKind::DimensionMismatch, "correspondence is not outer (x) C^k");
  id.W[1] = Mat::Identity(m, m);
  for (int n = 1; n < N && n < pw.N(); ++n) {
    const long kn = ipow(k, n);
    const long in_dim = static_cast<long>(outer) * kn;
    Mat Nm = Mat::Zero(outer * kn * k, static_cast<long>(m) * in_dim);
    for (int p = 0; p < outer; ++p)
      for (int i = 0; i < k; ++i)
        for (int q = 0; q < outer; ++q) {
          // mul(p, q, n) returns (outer vector, k^n x k^n leg transform)
          const auto [vec, legs] = mul(p, q, n);
          for (long f = 0; f < kn; ++f) {
            const long col = (static_cast<long>(p) * k + i) * in_dim + q * kn + f;
            for (int r = 0; r < outer; ++r) {
              if (vec(r) == 0.0) continue;
              for (long g = 0; g < kn; ++g) {
                if (legs(g, f) == 0.0) continue;
                Nm(r * kn * k + i * kn + g, col) += vec(r) * legs(g, f);
              }
            }
          }
        }
    const auto& Q = pw.level(n + 1).Q;
    const Mat full = Nm * kron(Mat::Identity(m, m), id.W[n]);
    const long w = full.cols();
    id.kernel = std::max(id.kernel, max_abs(full * (Mat::Identity(w, w) - Q.Bplus * Q.B)));
    id.W[n + 1] = full * Q.Bplus;
    const long r = id.W[n + 1].cols();
    if (id.W[n + 1].rows() != r)
      throw Error(ErrorKind::DimensionMismatch, "identification is not square at level " + std::to_string(n + 1));
    id.unitarity = std::max(id.unitarity, max_abs(id.W[n + 1].adjoint() * id.W[n + 1] - Mat::Identity(r, r)));
  }
  return id;
}

// (Lambda(x) (x) e_i) (x) (Lambda(y) (x) f) -> Lambda(xy) (x) e_i (x) f
template <class Base>
Identification multiplicity_identification(const TensorPowers<Base>& pw, int k, int N) {
  const Base& b = pw.base();
  const int D = b.l2_dim();
  const Mat X = b.lambda_inv();
  std::vector<Mat> Lp(D);
  for (int p = 0; p < D; ++p) Lp[p] = b.left_l2_elem(X.col(p));
  return build_identification(pw, D, k, N, [&](int p, int q, int n) {
    const long kn = ipow(k, n);
    return std::pair<Vec, Mat>(Lp[p].col(q), Mat::Identity(kn, kn));
  });
}

// (delta_g (x) xi) (x) (delta_h (x) f) -> delta_{gh} (x) xi (x) pi(g)^{(x)n} f
inline Identification group_identification(const TensorPowers<GroupAlgebra>& pw, const std::vector<Mat>& rep,
                                           int N) {
  const FiniteGroup& g = pw.base().group();
  const int G = g.order();
  const int k = static_cast<int>(rep.at(0).rows());
  std::vector<std::vector<Mat>> powers(G);
  for (int x = 0; x < G; ++x) {
    powers[x].push_back(Mat::Identity(1, 1));
    for (int n = 1; n <= N; ++n) powers[x].push_back(kron(powers[x].back(), rep[x]));
  }
  return build_identification(pw, G, k, N, [&](int p, int q, int n) {
    Vec v = Vec::Zero(G);
    v(g.mul(p, q)) = 1.0;
    return std::pair<Vec, Mat>(v, powers[p][n]);
  });
}

// 1 (x) T transported to the relative tensor square.
inline Mat lift_through(const Identification& id, const Twist& t) {
  if (t.space_dim != id.k) throw Error(ErrorKind::DimensionMismatch, "twist leg dimension differs from multiplicity");
  if (id.W.size() < 3 || id.W[2].size() == 0)
    throw Error(ErrorKind::DimensionMismatch, "identification needs level 2");
  return herm_part(id.W[2].adjoint() * kron(Mat::Identity(id.outer, id.outer), t.T) * id.W[2]);
}

template <class Base>
Twist lift_twist(const TensorPowers<Base>& pw, const Twist& t) {
  if (pw.N() < 2) throw Error(ErrorKind::DimensionMismatch, "tensor powers must reach level 2");
  const int D = pw.base().l2_dim();
  if (pw.m() != D * t.space_dim)
    throw Error(ErrorKind::DimensionMismatch, "correspondence dimension is not dim L^2 times the twist leg");
  const Identification id = multiplicity_identification(pw, t.space_dim, 2);
  Twist out{lift_through(id, t), pw.m(), TwistLevel::bimodule, 0.0, t.kind};
  out.norm = opnorm(out.T);
  return out;
}

inline Twist lift_twist_group(const TensorPowers<GroupAlgebra>& pw, const std::vector<Mat>& rep, const Twist& t) {
  const Identification id = group_identification(pw, rep, 2);
  Twist out{lift_through(id, t), pw.m(), TwistLevel::bimodule, 0.0, t.kind};
  out.norm = opnorm(out.T);
  return out;
}

// ---------------------------------------------------------------------------
// Compatibility: [T, J^(2)] = 0, [T, U_t^(2)] = 0, bimodule property, and the
// same for every P_n.

struct CompatibilityReport {
  double J = 0.0;
  double U = 0.0;
  double bimodule = 0.0;
  double P_J = 0.0;
  double P_U = 0.0;
  double max() const { return std::max({J, U, bimodule, P_J, P_U}); }
};

template <class Base>
CompatibilityReport compatibility_residuals(const TensorPowers<Base>& pw, const Mat& T,
                                            const std::vector<double>& ts = default_sample_ts(),
                                            const TwistTower* tower = nullptr) {
  if (pw.N() < 2 || T.rows() != pw.dim(2))
    throw Error(ErrorKind::LevelMismatch, "twist is not on the relative tensor square of this correspondence");
  CompatibilityReport r;
  const AntiLinear J2 = pw.J(2);
  r.J = opnorm(T - sandwich(J2, T, J2));
  for (double t : ts) r.U = std::max(r.U, commutator_norm(T, pw.flow(2, t)));
  const auto& U2 = pw.level(2).U.corr;
  for (std::size_t a = 0; a < U2.left.size(); ++a) {
    r.bimodule = std::max(r.bimodule, commutator_norm(T, U2.left[a]));
    r.bimodule = std::max(r.bimodule, commutator_norm(T, U2.right[a]));
  }
  if (tower) {
    for (int n = 1; n <= std::min(tower->N, pw.N()); ++n) {
      const Mat& P = tower->P(n);
      const AntiLinear Jn = pw.J(n);
      r.P_J = std::max(r.P_J, opnorm(P - sandwich(Jn, P, Jn)) / std::max(1.0, tower->levels[n].max_eig));
      for (double t : ts)
        r.P_U = std::max(r.P_U, commutator_norm(P, pw.flow(n, t)) / std::max(1.0, tower->levels[n].max_eig));
    }
  }
  return r;
}

// Multiplicity-level version: J^(2) = flip (C (x) C) conj, U^(2) = U (x) U.
inline CompatibilityReport compatibility_residuals(const Twist& t, const Mat& C, const Mat& a,
                                                   const std::vector<double>& ts = default_sample_ts()) {
  const int k = t.space_dim;
  if (C.rows() != k || a.rows() != k) throw Error(ErrorKind::LevelMismatch, "twist and conjugation differ in size");
  CompatibilityReport r;
  const AntiLinear J2{flip(k, k) * kron(C, C)};
  r.J = opnorm(t.T - sandwich(J2, t.T, J2));
  for (double s : ts) {
    const Mat U = expm(I_unit * s * a);
    r.U = std::max(r.U, commutator_norm(t.T, kron(U, U)));
  }
  return r;
}

}  // namespace taw
