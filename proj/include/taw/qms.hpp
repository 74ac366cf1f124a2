#pragma once

// Alicki-form Lindblad generators on M_n, their semigroups as superoperators on
// row-major vec(M_n), GNS symmetry and CP checks, and the Bohr spectrum.

#include "taw/correspondence.hpp"

#include <algorithm>

namespace taw {

struct Jump {
  Mat v;
  double omega = 0.0;
};

struct AlickiGenerator {
  BaseAlgebra base;
  std::vector<Jump> jumps;
  std::vector<int> pairing;     // j -> j*, v_{j*} = v_j^*
  std::vector<double> weights;  // e^{-omega_j / 2}; kept separate so probes can perturb one
  int n() const { return base.d(); }
};

inline constexpr double kAlickiTol = 1e-10;

inline AlickiGenerator make_alicki(const Mat& h, const std::vector<Jump>& jumps) {
  AlickiGenerator g{BaseAlgebra(h), jumps, {}, {}};
  const int n = g.n();
  const Mat hinv = g.base.h_inv();
  for (std::size_t j = 0; j < jumps.size(); ++j) {
    const Mat& v = jumps[j].v;
    if (v.rows() != n || v.cols() != n) throw Error(ErrorKind::DimensionMismatch, "jump operator has the wrong size");
    const double nv = max_abs(v);
    if (nv == 0.0) throw Error(ErrorKind::ZeroJump, "jump " + std::to_string(j) + " is zero");
    const double r = max_abs(h * v * hinv - std::exp(-jumps[j].omega) * v) / nv;
    if (r > kAlickiTol)
      throw Error(ErrorKind::EigenrelationViolated,
                  "h v_j h^-1 != e^{-omega_j} v_j for jump " + std::to_string(j) +
                      "; only Alicki-form generators are accepted (general GKLS input is out of scope)");
  }
  // nearest match within tolerance, lowest index on ties, each partner used once
  g.pairing.assign(jumps.size(), -1);
  for (std::size_t j = 0; j < jumps.size(); ++j) {
    if (g.pairing[j] >= 0) continue;
    const Mat vs = jumps[j].v.adjoint();
    const double tol = kAlickiTol * std::max(1.0, max_abs(vs));
    int best = -1;
    double bd = 0.0;
    for (std::size_t k = j; k < jumps.size(); ++k) {
      if (g.pairing[k] >= 0) continue;
      const double dist = max_abs(jumps[k].v - vs);
      if (dist <= tol && (best < 0 || dist < bd)) {
        best = static_cast<int>(k);
        bd = dist;
      }
    }
    if (best < 0)
      throw Error(ErrorKind::NotAdjointClosed, "adjoint of jump " + std::to_string(j) + " is not in the jump set");
    g.pairing[j] = best;
    g.pairing[best] = static_cast<int>(j);
  }
  for (std::size_t j = 0; j < jumps.size(); ++j) {
    if (std::abs(jumps[g.pairing[j]].omega + jumps[j].omega) > kAlickiTol)
      throw Error(ErrorKind::EigenrelationViolated, "paired frequencies are not negatives of each other");
    g.weights.push_back(std::exp(-jumps[j].omega / 2.0));
  }
  return g;
}

// L(x) = sum_j w_j (v_j^* [v_j, x] - [v_j^*, x] v_j)
inline Mat generator_apply(const AlickiGenerator& g, const Mat& x) {
  Mat out = Mat::Zero(g.n(), g.n());
  for (std::size_t j = 0; j < g.jumps.size(); ++j) {
    const Mat& v = g.jumps[j].v;
    const Mat vs = v.adjoint();
    out += g.weights[j] * (vs * (v * x - x * v) - (vs * x - x * vs) * v);
  }
  return out;
}

// Row-major superoperator: vec(A X B) = (A (x) B^T) vec(X).
inline Mat generator_superop(const AlickiGenerator& g) {
  const int n = g.n();
  const Mat id = Mat::Identity(n, n);
  Mat L = Mat::Zero(n * n, n * n);
  for (std::size_t j = 0; j < g.jumps.size(); ++j) {
    const Mat& v = g.jumps[j].v;
    const Mat vs = v.adjoint();
    const Mat vv = vs * v;
    L += g.weights[j] * (kron(vv, id) + kron(id, vv.transpose()) - 2.0 * kron(vs, v.transpose()));
  }
  return L;
}

inline Mat semigroup(const AlickiGenerator& g, double t) { return expm(Mat(-t * generator_superop(g))); }

inline Mat apply_superop(const Mat& S, const Mat& x) { return unvec_rm(S * vec_rm(x), x.rows(), x.cols()); }

// Gram of <x, y> = phi(x^* y) in row-major coordinates.
inline Mat gns_gram(const BaseAlgebra& b) {
  const int n = b.d();
  Mat G(n * n, n * n);
  for (int p = 0; p < n * n; ++p)
    for (int q = 0; q < n * n; ++q)
      G(p, q) = b.weight(unit_matrix(n, p / n, p % n).adjoint() * unit_matrix(n, q / n, q % n));
  return G;
}

// max |phi(P_t(x)^* y) - phi(x^* P_t(y))| over matrix units, i.e. |P^H G - G P|.
inline double gns_symmetry_residual(const AlickiGenerator& g, const std::vector<double>& ts) {
  const Mat G = gns_gram(g.base);
  double r = 0.0;
  for (double t : ts) {
    const Mat P = semigroup(g, t);
    r = std::max(r, max_abs(P.adjoint() * G - G * P));
  }
  return r;
}

inline Mat choi(const Mat& S, int n) {
  Mat C = Mat::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) C += kron(unit_matrix(n, i, j), apply_superop(S, unit_matrix(n, i, j)));
  return C;
}

inline double choi_min_eig(const Mat& S, int n) { return min_eig(herm_part(choi(S, n))); }

// Minimum Choi eigenvalue of P_t over the samples.
inline double cp_residual(const AlickiGenerator& g, const std::vector<double>& ts) {
  double r = std::numeric_limits<double>::infinity();
  for (double t : ts) r = std::min(r, choi_min_eig(semigroup(g, t), g.n()));
  return r;
}

inline double unitality_residual(const AlickiGenerator& g, double t) {
  const Mat one = Mat::Identity(g.n(), g.n());
  return max_abs(apply_superop(semigroup(g, t), one) - one);
}

inline double semigroup_law_residual(const AlickiGenerator& g, double s, double t) {
  return max_abs(semigroup(g, s) * semigroup(g, t) - semigroup(g, s + t));
}

// P_t sigma_s = sigma_s P_t with sigma_s(x) = h^{is} x h^{-is}.
inline double modular_covariance_residual(const AlickiGenerator& g, double s, double t) {
  const Mat S = kron(g.base.h_pow_i(s), g.base.h_pow_i(-s).transpose());
  const Mat P = semigroup(g, t);
  return max_abs(P * S - S * P);
}

// HS(C^n) (x) C^d over (M_n, h): J = J_phi (x) (pairing) conj, U_t = Delta^{it} (x) diag(e^{i omega_j t}).
inline TomitaCorrespondence<BaseAlgebra> qms_correspondence(const AlickiGenerator& g) {
  const int d = static_cast<int>(g.jumps.size());
  Mat C = Mat::Zero(d, d), a = Mat::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    C(g.pairing[j], j) = 1.0;
    a(j, j) = g.jumps[j].omega;
  }
  return make_multiplicity_corr(g.base, d, C, a);
}

struct BohrSpectrumReport {
  std::vector<double> raw;          // with multiplicities
  std::vector<double> frequencies;  // collapsed, ascending
  std::string source;
  bool symmetric = true;
  bool in_log_modular = true;  // containment in spec(log Delta_phi), reported only
};

inline std::vector<double> collapse(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  return out;
}

inline bool negation_symmetric(const std::vector<double>& sorted, double tol) {
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (std::abs(sorted[i] + sorted[sorted.size() - 1 - i]) > tol) return false;
  return true;
}

inline bool contained_in_log_modular(const BaseAlgebra& b, const std::vector<double>& freqs, double tol) {
  const RVec ev = b.h_eigenvalues();
  for (double w : freqs) {
    bool hit = false;
    for (int i = 0; i < ev.size() && !hit; ++i)
      for (int j = 0; j < ev.size() && !hit; ++j) hit = std::abs(std::log(ev(i)) - std::log(ev(j)) - w) <= tol;
    if (!hit) return false;
  }
  return true;
}

// Frequencies read off the jumps: h v h^-1 = e^{-omega} v, so omega = -log(<v, h v h^-1> / <v, v>).
inline BohrSpectrumReport bohr_from_jumps(const AlickiGenerator& g) {
  BohrSpectrumReport r;
  r.source = "from_jumps";
  const int n2 = g.n() * g.n();
  const Mat hinv = g.base.h_inv();
  for (const auto& j : g.jumps) {
    const cd ratio = (j.v.adjoint() * g.base.h() * j.v * hinv).trace() / (j.v.adjoint() * j.v).trace();
    for (int c = 0; c < n2; ++c) r.raw.push_back(-std::log(ratio.real()));
  }
  std::sort(r.raw.begin(), r.raw.end());
  r.frequencies = collapse(r.raw, kBohrCluster);
  r.symmetric = negation_symmetric(r.raw, kBohrCluster);
  r.in_log_modular = contained_in_log_modular(g.base, r.frequencies, 1e-8);
  return r;
}

inline BohrSpectrumReport bohr_from_disintegration(const AlickiGenerator& g) {
  BohrSpectrumReport r;
  r.source = "from_disintegration";
  const BohrDecomposition dec = disintegrate(qms_correspondence(g));
  for (const auto& s : dec.sectors)
    for (int c = 0; c < s.dim; ++c) r.raw.push_back(s.omega);
  r.frequencies = collapse(r.raw, kBohrCluster);
  r.symmetric = negation_symmetric(r.raw, kBohrCluster);
  r.in_log_modular = contained_in_log_modular(g.base, r.frequencies, 1e-8);
  return r;
}

inline double multiset_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

// Disintegration route, checked against the declared frequencies.
inline BohrSpectrumReport bohr_spectrum(const AlickiGenerator& g) {
  BohrSpectrumReport r = bohr_from_disintegration(g);
  std::vector<double> declared;
  const int n2 = g.n() * g.n();
  for (const auto& j : g.jumps)
    for (int c = 0; c < n2; ++c) declared.push_back(j.omega);
  std::sort(declared.begin(), declared.end());
  if (multiset_distance(r.raw, declared) > 1e-8)
    throw Error(ErrorKind::RoundTripMismatch, "disintegrated frequencies differ from the declared ones");
  return r;
}

// Two-level example: h = diag(1, e^{-beta}), jumps E_12 (omega = -beta) and E_21 (omega = beta).
inline AlickiGenerator two_level_alicki(double beta) {
  Mat h = Mat::Zero(2, 2);
  h(0, 0) = 1.0;
  h(1, 1) = std::exp(-beta);
  return make_alicki(h, {{unit_matrix(2, 0, 1), -beta}, {unit_matrix(2, 1, 0), beta}});
}

}  // namespace taw
