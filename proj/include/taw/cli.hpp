#pragma once

// Config-driven runner: JSON config in, ordered JSON (or CSV) report out.
// Everything random is drawn from Philox(seed, check index), so a report is a
// pure function of (config, seed).

#include "taw/fock.hpp"
#include "taw/oracles.hpp"
#include "taw/qms.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>

namespace taw {

using ojson = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Deterministic serialization: floats with 17 significant digits, fixed order.

inline std::string format_double(double x) {
  if (std::isnan(x)) return "\"nan\"";
  if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s = buf;
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

inline void dump_json(const ojson& j, std::ostringstream& os, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string pad_end(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case ojson::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{" << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << "," << nl;
        first = false;
        os << pad << ojson(it.key()).dump() << (indent > 0 ? ": " : ":");
        dump_json(it.value(), os, indent, depth + 1);
      }
      os << nl << pad_end << "}";
      return;
    }
    case ojson::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[" << nl;
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << "," << nl;
        first = false;
        os << pad;
        dump_json(v, os, indent, depth + 1);
      }
      os << nl << pad_end << "]";
      return;
    }
    case ojson::value_t::number_float:
      os << format_double(j.get<double>());
      return;
    default:
      os << j.dump();
  }
}

inline std::string dump_json(const ojson& j, int indent = 2) {
  std::ostringstream os;
  dump_json(j, os, indent, 0);
  return os.str();
}

inline std::string fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Config.

struct CheckSpec {
  std::string name;
  ojson params = ojson::object();
};

struct QmsSpec {
  Mat h;
  std::vector<Jump> jumps;
};

struct ExperimentConfig {
  ojson raw;
  Mat h;
  std::string kind = "multiplicity";
  int k = 1;
  Mat C, a;
  FiniteGroup group;
  std::vector<Mat> rep;
  Twist twist;
  int cutoff = 4;
  std::uint64_t seed = 1;
  long budget = kDefaultBudget;
  double tol = 1e-9;
  std::vector<CheckSpec> checks;
  std::optional<QmsSpec> qms;

  int d() const { return static_cast<int>(h.rows()); }
  bool scalar() const { return kind == "multiplicity" && d() == 1; }
  long outer() const { return kind == "group" ? group.order() : static_cast<long>(d()) * d(); }
  long estimated_dim() const { return outer() * ipow(k, cutoff); }
};

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::ConfigSchema, where + ": " + what);
}

inline cd parse_complex(const ojson& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  schema_error(where, "expected a number or an [re, im] pair");
}

inline Mat parse_matrix(const ojson& j, const std::string& where) {
  if (!j.is_array() || j.empty()) schema_error(where, "expected a non-empty row-major matrix");
  const long r = static_cast<long>(j.size());
  if (!j[0].is_array()) schema_error(where, "rows must be arrays");
  const long c = static_cast<long>(j[0].size());
  Mat M(r, c);
  for (long i = 0; i < r; ++i) {
    if (!j[i].is_array() || static_cast<long>(j[i].size()) != c) schema_error(where, "ragged matrix");
    for (long l = 0; l < c; ++l) M(i, l) = parse_complex(j[i][l], where);
  }
  return M;
}

inline Mat parse_square(const ojson& j, long n, const std::string& where) {
  Mat M = parse_matrix(j, where);
  if (M.rows() != n || M.cols() != n) schema_error(where, "expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
  return M;
}

inline const std::set<std::string>& known_checks() {
  static const std::set<std::string> names = {
      "tomita", "tower", "braided", "sandwich", "compatibility", "moments", "level_one", "kms", "conj_intertwining",
      "locality", "disintegration", "type_I", "crossed_product", "gap_constants", "gap_experiment", "qms", "bohr"};
  return names;
}

inline double get_number(const ojson& obj, const char* key, double dflt, const std::string& where) {
  if (!obj.contains(key)) return dflt;
  if (!obj[key].is_number()) schema_error(where + "." + key, "expected a number");
  return obj[key].get<double>();
}

inline long get_int(const ojson& obj, const char* key, long dflt, const std::string& where) {
  if (!obj.contains(key)) return dflt;
  if (!obj[key].is_number_integer()) schema_error(where + "." + key, "expected an integer");
  return obj[key].get<long>();
}

inline QmsSpec parse_qms(const ojson& q) {
  QmsSpec s;
  if (!q.is_object()) schema_error("qms", "expected an object");
  if (q.contains("beta")) {
    const double beta = get_number(q, "beta", 0.0, "qms");
    s.h = Mat::Zero(2, 2);
    s.h(0, 0) = 1.0;
    s.h(1, 1) = std::exp(-beta);
    s.jumps = {{unit_matrix(2, 0, 1), -beta}, {unit_matrix(2, 1, 0), beta}};
    return s;
  }
  if (!q.contains("h") || !q.contains("jumps")) schema_error("qms", "needs either beta or h and jumps");
  s.h = parse_matrix(q["h"], "qms.h");
  if (!q["jumps"].is_array() || q["jumps"].empty()) schema_error("qms.jumps", "expected a non-empty array");
  for (const auto& jj : q["jumps"]) {
    if (!jj.is_object() || !jj.contains("v") || !jj.contains("omega")) schema_error("qms.jumps", "each jump needs v and omega");
    s.jumps.push_back({parse_square(jj["v"], s.h.rows(), "qms.jumps.v"), get_number(jj, "omega", 0.0, "qms.jumps")});
  }
  return s;
}

inline Twist parse_twist(const ojson& t, int k) {
  if (!t.is_object()) schema_error("twist", "expected an object");
  const std::string kind = t.value("kind", std::string("q"));
  if (kind == "q" || kind == "none") {
    const double q = kind == "none" ? 0.0 : get_number(t, "q", 0.0, "twist");
    if (!(q >= -1.0 && q <= 1.0)) schema_error("twist.q", "q must lie in [-1, 1]");
    return make_q_twist(q, k);
  }
  if (kind == "mixed_q") {
    if (!t.contains("q")) schema_error("twist", "mixed_q needs a q matrix");
    const Mat q = parse_square(t["q"], k, "twist.q");
    if (q.cwiseAbs().maxCoeff() > 1.0) schema_error("twist.q", "entries must satisfy |q_ij| <= 1");
    return make_mixed_q_twist(q);
  }
  if (kind == "flip") {
    const double s = get_number(t, "scale", 1.0, "twist");
    if (!(std::abs(s) <= 1.0)) schema_error("twist.scale", "scale must lie in [-1, 1]");
    return make_flip_twist(k, s);
  }
  if (kind == "custom") {
    if (!t.contains("T")) schema_error("twist", "custom needs T");
    return make_custom_twist(parse_square(t["T"], static_cast<long>(k) * k, "twist.T"), k);
  }
  schema_error("twist.kind", "unknown twist kind '" + kind + "'");
}

inline ExperimentConfig parse_config(const ojson& j) {
  ExperimentConfig c;
  c.raw = j;
  if (!j.is_object()) schema_error("config", "top level must be an object");
  static const std::set<std::string> top = {"base", "correspondence", "twist", "cutoff", "seed", "budget",
                                            "tolerance", "checks", "qms"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!top.count(it.key())) schema_error("config", "unknown key '" + it.key() + "'");
  try {
    const ojson base = j.value("base", ojson::object());
    if (base.contains("h")) {
      c.h = parse_matrix(base["h"], "base.h");
      if (base.contains("d") && get_int(base, "d", 0, "base") != c.h.rows()) schema_error("base.d", "does not match h");
    } else {
      const long d = get_int(base, "d", 1, "base");
      if (d < 1) schema_error("base.d", "must be positive");
      c.h = Mat::Identity(d, d);
    }
    BaseAlgebra{c.h};

    const ojson corr = j.value("correspondence", ojson::object());
    c.kind = corr.value("kind", std::string("multiplicity"));
    if (c.kind != "multiplicity" && c.kind != "group") schema_error("correspondence.kind", "multiplicity or group");
    if (c.kind == "group") {
      if (c.d() != 1) schema_error("base", "group correspondences live over L(G); leave base unset");
      const ojson g = corr.value("group", ojson::object());
      if (g.contains("table")) {
        for (const auto& row : g["table"]) c.group.table.push_back(row.get<std::vector<int>>());
      } else {
        const long n = get_int(g, "cyclic", 2, "correspondence.group");
        if (n < 1) schema_error("correspondence.group.cyclic", "must be positive");
        c.group = cyclic_group(static_cast<int>(n));
      }
      validate_group(c.group);
    }
    c.k = static_cast<int>(get_int(corr, "k", corr.contains("C") ? static_cast<long>(corr["C"].size()) : 1, "correspondence"));
    if (c.k < 1) schema_error("correspondence.k", "must be positive");
    c.C = corr.contains("C") ? parse_square(corr["C"], c.k, "correspondence.C") : Mat(Mat::Identity(c.k, c.k));
    c.a = corr.contains("a") ? parse_square(corr["a"], c.k, "correspondence.a") : Mat(Mat::Zero(c.k, c.k));
    check_conj_data(c.C, c.a);
    if (c.kind == "group") {
      if (corr.contains("rep")) {
        if (!corr["rep"].is_array() || static_cast<int>(corr["rep"].size()) != c.group.order())
          schema_error("correspondence.rep", "one matrix per group element");
        for (const auto& m : corr["rep"]) c.rep.push_back(parse_square(m, c.k, "correspondence.rep"));
      } else {
        c.rep.assign(c.group.order(), Mat::Identity(c.k, c.k));
      }
      make_group_corr(c.group, c.rep, c.C, c.a);
    }

    c.twist = parse_twist(j.value("twist", ojson{{"kind", "q"}, {"q", 0.0}}), c.k);
    c.cutoff = static_cast<int>(get_int(j, "cutoff", 4, "config"));
    if (c.cutoff < 1) schema_error("cutoff", "must be at least 1");
    if (j.contains("seed") && !j["seed"].is_number_unsigned()) schema_error("seed", "expected a non-negative integer");
    c.seed = j.value("seed", std::uint64_t{1});
    c.budget = get_int(j, "budget", kDefaultBudget, "config");
    c.tol = get_number(j, "tolerance", 1e-9, "config");
    if (!(c.tol > 0.0)) schema_error("tolerance", "must be positive");
    if (j.contains("qms")) c.qms = parse_qms(j["qms"]);
    if (c.qms) make_alicki(c.qms->h, c.qms->jumps);

    const ojson checks = j.value("checks", ojson::array());
    if (!checks.is_array()) schema_error("checks", "expected an array");
    for (const auto& ch : checks) {
      CheckSpec s;
      if (ch.is_string()) {
        s.name = ch.get<std::string>();
      } else if (ch.is_object() && ch.contains("name") && ch["name"].is_string()) {
        s.name = ch["name"].get<std::string>();
        s.params = ch;
        s.params.erase("name");
      } else {
        schema_error("checks", "each check is a name or an object with a name");
      }
      if (!known_checks().count(s.name)) schema_error("checks", "unknown check '" + s.name + "'");
      c.checks.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    schema_error("config", e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigSchema) throw;
    schema_error("config", e.what());
  }
  // applicability
  for (const auto& s : c.checks) {
    if ((s.name == "qms" || s.name == "bohr") && !c.qms) schema_error("checks", s.name + " needs a qms section");
    if (s.name == "level_one" && !c.scalar()) schema_error("checks", "level_one needs a scalar base");
    if (s.name == "type_I" && c.kind != "multiplicity") schema_error("checks", "type_I needs a multiplicity correspondence");
    if (s.name == "crossed_product" && c.kind != "group") schema_error("checks", "crossed_product needs a group correspondence");
    if (s.name == "gap_experiment" && !c.scalar()) schema_error("checks", "gap_experiment needs a scalar base");
  }
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ConfigParse, e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Check records.

struct Record {
  ojson values = ojson::object();
  ojson info = ojson::object();
  bool pass = true;

  // residual judged as value <= tol
  void at_most(const std::string& key, double v, double tol) {
    const bool ok = v <= tol;
    values[key] = ojson{{"value", v}, {"bound", "<= tol"}, {"tol", tol}, {"pass", ok}};
    pass = pass && ok;
  }
  // margin judged as value >= -tol
  void at_least(const std::string& key, double v, double tol) {
    const bool ok = v >= -tol;
    values[key] = ojson{{"value", v}, {"bound", ">= -tol"}, {"tol", tol}, {"pass", ok}};
    pass = pass && ok;
  }
};

struct RunOptions {
  bool timing = false;
};

struct RunResult {
  ojson report;
  int exit_code = 0;
};

inline ojson real_list(const std::vector<double>& v) {
  ojson a = ojson::array();
  for (double x : v) a.push_back(x);
  return a;
}

inline ojson complex_value(cd z) { return ojson::array({z.real(), z.imag()}); }

template <class Base>
struct Context {
  const ExperimentConfig& cfg;
  TomitaCorrespondence<Base> tc;
  std::optional<TensorPowers<Base>> pw;
  std::optional<Twist> lifted;
  std::optional<TwistedFock<Base>> F;

  const TensorPowers<Base>& powers() {
    if (!pw) pw.emplace(tc, std::max(cfg.cutoff, 2), cfg.budget);
    return *pw;
  }
  const Twist& lifted_twist() {
    if (!lifted) {
      if constexpr (std::is_same_v<Base, GroupAlgebra>) {
        lifted = lift_twist_group(powers(), cfg.rep, cfg.twist);
      } else {
        lifted = lift_twist(powers(), cfg.twist);
      }
    }
    return *lifted;
  }
  const TwistedFock<Base>& fock() {
    if (!F) F.emplace(powers(), lifted_twist().T, cfg.cutoff, cfg.budget);
    return *F;
  }
};

template <class Base>
Vec random_real_left(const TomitaCorrespondence<Base>& tc, Philox& rng) {
  Vec v = project_real_left(tc, random_vector(rng, tc.corr.m));
  return v / std::max(v.norm(), 1e-300);
}

template <class Base>
Vec random_real_right(const TomitaCorrespondence<Base>& tc, Philox& rng) {
  Vec v = project_real_right(tc, random_vector(rng, tc.corr.m));
  return v / std::max(v.norm(), 1e-300);
}

template <class Base>
void run_check(const CheckSpec& spec, Context<Base>& ctx, Philox& rng, Record& rec) {
  const ExperimentConfig& cfg = ctx.cfg;
  const double tol = get_number(spec.params, "tol", cfg.tol, spec.name);
  const int N = cfg.cutoff;
  const std::string& name = spec.name;

  if (name == "tomita") {
    const TomitaReport r = validate_tomita(ctx.tc, default_sample_ts());
    const BimoduleReport b = check_bimodule(ctx.tc.base, ctx.tc.corr);
    rec.at_most("bimodule", b.max(), tol);
    rec.at_most("involution", r.involution, tol);
    rec.at_most("conj_bimodule", r.conj_bimodule, tol);
    rec.at_most("flow_covariance", r.flow_covariance, tol);
    rec.at_most("flow_conj", r.flow_conj, tol);
    rec.info["dim"] = ctx.tc.dim();
  } else if (name == "tower") {
    const TwistTower tw = build_tower(cfg.twist, N, cfg.budget);
    ojson levels = ojson::array();
    for (int n = 1; n <= N; ++n) {
      const auto& L = tw.levels[n];
      levels.push_back(ojson{{"n", n}, {"min_eig", L.min_eig}, {"max_eig", L.max_eig}, {"kernel_rank", L.kernel_rank}});
    }
    rec.info["levels"] = levels;
    rec.at_least("min_psd_margin", tw.min_psd_margin(), tol);
    if (cfg.twist.kind == "q" && cfg.k == 1) {
      const double q = std::real(cfg.twist.T(0, 0));
      double worst = 0.0;
      for (int n = 1; n <= N; ++n) worst = std::max(worst, std::abs(std::real(tw.P(n)(0, 0)) - q_factorial(q, n)));
      rec.at_most("q_factorial", worst, std::min(tol, 1e-12));
    }
    const TwistTower& bt = ctx.fock().tower();
    rec.at_least("bimodule_min_psd_margin", bt.min_psd_margin(), tol);
  } else if (name == "braided") {
    const double ybe = ybe_residual(cfg.twist);
    const bool braided = ybe <= 1e-12;
    const TwistTower tw = build_tower(cfg.twist, N, cfg.budget);
    rec.info["braided"] = braided;
    rec.info["ybe_residual"] = ybe;
    if (braided) rec.at_most("recursion_difference", tw.max_braided_diff(), tol);
  } else if (name == "sandwich") {
    const TwistTower tw = build_tower(cfg.twist, N, cfg.budget);
    const SandwichReport s = sandwich_bounds_report(cfg.twist, tw);
    ojson levels = ojson::array();
    for (const auto& l : s.levels)
      levels.push_back(ojson{{"n", l.n}, {"c_n", l.c}, {"d_n", l.d}, {"lower", l.lower}, {"upper", l.upper}});
    rec.info["levels"] = levels;
    rec.at_least("worst_margin", s.levels.empty() ? 0.0 : s.worst(), std::max(tol, kPsdTol));
  } else if (name == "compatibility") {
    const auto& F = ctx.fock();
    const CompatibilityReport c = F.compatibility();
    rec.at_most("J", c.J, tol);
    rec.at_most("U", c.U, tol);
    rec.at_most("bimodule", c.bimodule, tol);
    rec.at_most("P_J", c.P_J, tol);
    rec.at_most("P_U", c.P_U, tol);
    rec.at_most("descent", F.descent(), tol);
  } else if (name == "moments") {
    const auto& F = ctx.fock();
    const int max_order = static_cast<int>(get_int(spec.params, "max_order", N, name));
    if (max_order > N) throw Error(ErrorKind::WordTooLongForCutoff, "max_order exceeds the cutoff");
    Vec xi = project_real_left(ctx.tc, Vec::Unit(ctx.tc.corr.m, 0));
    if (xi.norm() < 1e-8) xi = project_real_left(ctx.tc, Vec(I_unit * Vec::Unit(ctx.tc.corr.m, 0)));
    xi /= xi.norm();
    const bool oracle = cfg.scalar() && cfg.twist.kind == "q";
    const double q = std::real(cfg.twist.T(0, 0));
    ojson table = ojson::array();
    double worst = 0.0;
    for (int n = 1; n <= max_order; ++n) {
      const cd m = vacuum_moment(F, std::vector<Vec>(n, xi));
      ojson row{{"order", n}, {"moment", complex_value(m)}};
      if (oracle) {
        const double o = pair_partition_moment(q, n);
        row["oracle"] = o;
        worst = std::max(worst, std::abs(m - o));
      }
      table.push_back(row);
    }
    rec.info["table"] = table;
    if (oracle) rec.at_most("oracle_difference", worst, tol);
  } else if (name == "level_one") {
    const LevelOneReport r = level_one_modular(ctx.fock(), default_sample_ts());
    rec.at_most("tomita_operator", r.tomita, tol);
    rec.at_most("modular_group", r.modular, tol);
  } else if (name == "kms") {
    const auto& F = ctx.fock();
    const int max_len = static_cast<int>(get_int(spec.params, "max_length", std::min(3, N - 1), name));
    const int count = static_cast<int>(get_int(spec.params, "words", 4, name));
    double cov = 0.0, kms = 0.0;
    for (int len = 1; len <= max_len; ++len)
      for (int w = 0; w < count; ++w) {
        std::vector<Vec> word;
        for (int l = 0; l < len; ++l) word.push_back(random_real_left(ctx.tc, rng));
        const KmsReport r = kms_residual(F, word, default_sample_ts());
        cov = std::max(cov, r.covariance);
        kms = std::max(kms, r.kms);
      }
    rec.at_most("covariance", cov, tol);
    rec.at_most("kms", kms, tol);
  } else if (name == "conj_intertwining") {
    const auto& F = ctx.fock();
    double r = 0.0, cr = 0.0;
    for (int s = 0; s < 3; ++s) {
      const Vec xi = random_real_left(ctx.tc, rng);
      r = std::max(r, conj_intertwining_residual(F, xi));
      cr = std::max(cr, conj_creation_residual(F, random_vector(rng, ctx.tc.corr.m)));
    }
    rec.at_most("field", r, tol);
    rec.at_most("creation", cr, tol);
  } else if (name == "locality") {
    const auto& F = ctx.fock();
    double r = 0.0;
    for (int s = 0; s < 3; ++s) r = std::max(r, locality_residual(F, random_real_left(ctx.tc, rng), random_real_right(ctx.tc, rng)));
    rec.at_most("commutator", r, tol);
    rec.info["safe_levels"] = N - 2;
  } else if (name == "disintegration") {
    const BohrDecomposition dec = disintegrate(ctx.tc);
    std::vector<double> om;
    for (int j = 0; j < dec.omegas.size(); ++j) om.push_back(dec.omegas(j));
    rec.info["frequencies"] = real_list(om);
    rec.at_most("unitarity", dec.unitarity, tol);
    rec.at_most("J", dec.J_residual, tol);
    rec.at_most("U", dec.U_residual, tol);
    rec.at_most("symmetry", dec.symmetry, tol);
    rec.at_most("bimodule", dec.bimodule, tol);
  } else if (name == "type_I") {
    if constexpr (std::is_same_v<Base, BaseAlgebra>) {
      const TypeIReport r = type_I_factorization_check(ctx.tc.base, cfg.k, cfg.C, cfg.a, cfg.twist, N, rng.next_u64(), cfg.budget);
      rec.at_most("identification", r.identification, tol);
      rec.at_most("P", r.P, tol);
      rec.at_most("unitary", r.unitary, tol);
      rec.at_most("creation_left", r.creation_left, tol);
      rec.at_most("creation_right", r.creation_right, tol);
      rec.at_most("expectation", r.expectation, tol);
    }
  } else if (name == "crossed_product") {
    if constexpr (std::is_same_v<Base, GroupAlgebra>) {
      const CrossedProductReport r = crossed_product_check(cfg.group, cfg.rep, cfg.C, cfg.a, cfg.twist, N, rng.next_u64(), cfg.budget);
      rec.at_most("identification", r.identification, tol);
      rec.at_most("P", r.P, tol);
      rec.at_most("transport", r.transport, tol);
      rec.at_most("V_unitary", r.V_unitary, tol);
      rec.at_most("covariance", r.covariance, tol);
      rec.at_most("field", r.field, tol);
    }
  } else if (name == "gap_constants") {
    const int m = static_cast<int>(get_int(spec.params, "m", cfg.k, name));
    const GapConstants g = gap_constants(cfg.twist.norm, m);
    rec.info["q"] = g.q;
    rec.info["m"] = m;
    rec.info["c"] = g.c;
    rec.info["d"] = g.d;
    rec.info["kappa"] = g.kappa;
    rec.info["f"] = g.f;
    rec.info["c_terms"] = g.c_terms;
    rec.at_most("c_last_step", g.c_last_step, 1e-14);
  } else if (name == "gap_experiment") {
    const auto& F = ctx.fock();
    const int samples = static_cast<int>(get_int(spec.params, "samples", 20, name));
    std::vector<Vec> xis;
    for (int j = 0; j < ctx.tc.corr.m; ++j) xis.push_back(Vec::Unit(ctx.tc.corr.m, j));
    std::vector<Mat> xs;
    for (int s = 0; s < samples; ++s) xs.push_back(random_centered_word(F, xis, rng));
    const GapExperiment g = spectral_gap_experiment(F, xs, xis);
    rec.info["kappa"] = g.constants.kappa;
    rec.info["certified"] = g.certified;
    rec.info["min_margin"] = g.min_margin();
    rec.info["flagged"] = g.flagged();
    rec.info["status"] = !g.certified ? "no certified gap" : (g.flagged() ? "flagged for review" : "consistent");
    rec.at_most("hypothesis", g.hypothesis, kHypothesisTol);
  } else if (name == "qms" || name == "bohr") {
    const AlickiGenerator g = make_alicki(cfg.qms->h, cfg.qms->jumps);
    if (name == "qms") {
      const std::vector<double> ts = {0.1, 1.0};
      rec.at_most("gns_symmetry", gns_symmetry_residual(g, ts), 1e-10);
      rec.at_least("choi_min_eig", cp_residual(g, ts), 1e-9);
      rec.at_most("unitality", unitality_residual(g, 1.0), 1e-10);
      rec.at_most("semigroup_law", semigroup_law_residual(g, 0.3, 0.7), 1e-10);
      rec.at_most("modular_covariance", modular_covariance_residual(g, 0.5, 1.0), 1e-10);
      rec.at_most("correspondence", validate_tomita(qms_correspondence(g), default_sample_ts()).max(), 1e-10);
    } else {
      const BohrSpectrumReport a = bohr_from_jumps(g);
      const BohrSpectrumReport b = bohr_spectrum(g);
      rec.info["from_jumps"] = real_list(a.frequencies);
      rec.info["from_disintegration"] = real_list(b.frequencies);
      rec.info["raw_multiplicity"] = static_cast<long>(b.raw.size());
      rec.info["in_log_modular_spectrum"] = b.in_log_modular;
      rec.at_most("route_difference", multiset_distance(a.raw, b.raw), 1e-8);
      rec.info["symmetric"] = a.symmetric && b.symmetric;
      rec.pass = rec.pass && a.symmetric && b.symmetric;
    }
  }
}

inline std::string inputs_digest(const ExperimentConfig& cfg, const CheckSpec& spec) {
  ojson in = ojson::object();
  for (const char* key : {"base", "correspondence", "twist", "cutoff", "seed", "budget", "tolerance", "qms"})
    if (cfg.raw.contains(key)) in[key] = cfg.raw[key];
  in["cutoff"] = cfg.cutoff;
  in["seed"] = cfg.seed;
  in["tolerance"] = cfg.tol;
  in["check"] = spec.name;
  in["params"] = spec.params;
  return fnv1a(dump_json(in, 0));
}

template <class Base>
RunResult run_with(const ExperimentConfig& cfg, TomitaCorrespondence<Base> tc, const RunOptions& opt) {
  RunResult out;
  Context<Base> ctx{cfg, std::move(tc), {}, {}, {}};
  ojson checks = ojson::array();
  int passed = 0, failed = 0;
  bool budget_hit = false;
  for (std::size_t i = 0; i < cfg.checks.size(); ++i) {
    const CheckSpec& spec = cfg.checks[i];
    Record rec;
    ojson entry;
    entry["name"] = spec.name;
    entry["inputs_digest"] = inputs_digest(cfg, spec);
    entry["tolerance"] = get_number(spec.params, "tol", cfg.tol, spec.name);
    const auto t0 = std::chrono::steady_clock::now();
    Philox rng(cfg.seed, i + 1);
    try {
      run_check(spec, ctx, rng, rec);
    } catch (const Error& e) {
      rec.pass = false;
      rec.info["error"] = error_name(e.kind());
      rec.info["message"] = e.what();
      if (e.kind() == ErrorKind::BudgetExceeded) budget_hit = true;
    }
    entry["values"] = rec.values;
    entry["info"] = rec.info;
    entry["pass"] = rec.pass;
    if (opt.timing)
      entry["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    (rec.pass ? passed : failed)++;
    checks.push_back(entry);
  }
  out.report["tool"] = "taw";
  out.report["version"] = kVersion;
  out.report["seed"] = cfg.seed;
  out.report["config_digest"] = fnv1a(dump_json(cfg.raw, 0));
  out.report["checks"] = checks;
  out.report["passed"] = passed;
  out.report["failed"] = failed;
  out.report["status"] = failed ? "fail" : "pass";
  out.exit_code = budget_hit ? 3 : (failed ? 1 : 0);
  return out;
}

// Budget pre-flight, then every check in declared order.
inline RunResult run(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const long est = cfg.estimated_dim();
  BudgetGuard{cfg.budget}.require(est, "top Fock level");
  if (cfg.kind == "group") return run_with(cfg, make_group_corr(cfg.group, cfg.rep, cfg.C, cfg.a), opt);
  return run_with(cfg, make_multiplicity_corr(BaseAlgebra(cfg.h), cfg.k, cfg.C, cfg.a), opt);
}

inline std::string report_csv(const ojson& report) {
  std::ostringstream os;
  os << "check,metric,value,tol,pass\n";
  for (const auto& c : report["checks"]) {
    for (auto it = c["values"].begin(); it != c["values"].end(); ++it)
      os << c["name"].get<std::string>() << "," << it.key() << "," << format_double(it.value()["value"].get<double>())
         << "," << format_double(it.value()["tol"].get<double>()) << "," << (it.value()["pass"].get<bool>() ? 1 : 0)
         << "\n";
    if (c["values"].empty()) os << c["name"].get<std::string>() << ",,,," << (c["pass"].get<bool>() ? 1 : 0) << "\n";
  }
  return os.str();
}

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigParse:
    case ErrorKind::ConfigSchema:
      return 2;
    case ErrorKind::BudgetExceeded:
      return 3;
    default:
      return 1;
  }
}

}  // namespace taw
