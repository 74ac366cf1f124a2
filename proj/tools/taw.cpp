// taw: check | moments | bohr | gap | tower

#include "taw/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace taw;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ConfigParse, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Error(ErrorKind::ConfigParse, "cannot write " + out);
  f << text;
  if (!text.empty() && text.back() != '\n') f << "\n";
}

struct Common {
  std::string config, out, format;  // empty: json, except moments which defaults to csv
  double tol = 0.0;
  int cutoff = 0;
  std::uint64_t seed = 0;
  bool has_seed = false;
  bool timing = false;
};

ExperimentConfig load(const Common& c, ojson fallback) {
  ojson j = c.config.empty() ? std::move(fallback) : ojson();
  if (!c.config.empty()) {
    try {
      j = ojson::parse(read_file(c.config));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::ConfigParse, e.what());
    }
  }
  if (c.tol > 0.0) j["tolerance"] = c.tol;
  if (c.cutoff > 0) j["cutoff"] = c.cutoff;
  if (c.has_seed) j["seed"] = c.seed;
  return parse_config(j);
}

std::string table_csv(const ojson& rows) {
  std::ostringstream os;
  if (rows.empty()) return "";
  bool first = true;
  for (auto it = rows[0].begin(); it != rows[0].end(); ++it) {
    os << (first ? "" : ",") << it.key();
    first = false;
  }
  os << "\n";
  for (const auto& r : rows) {
    first = true;
    for (auto it = r.begin(); it != r.end(); ++it) {
      os << (first ? "" : ",");
      first = false;
      if (it.value().is_number_float()) os << format_double(it.value().get<double>());
      else if (it.value().is_string()) os << it.value().get<std::string>();
      else os << it.value().dump();
    }
    os << "\n";
  }
  return os.str();
}

std::string render_table(const ojson& rows, const std::string& format, const std::string& key) {
  if (format == "csv") return table_csv(rows);
  ojson o;
  o[key] = rows;
  return dump_json(o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twisted Araki-Woods numerics"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", c.config, "JSON config");
    s->add_option("--out", c.out, "output path (stdout if omitted)");
    s->add_option("--tol", c.tol, "tolerance override");
    s->add_option("--cutoff", c.cutoff, "Fock cutoff override");
    s->add_option("--seed", c.seed, "seed override")->each([&](const std::string&) { c.has_seed = true; });
    s->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  };

  auto* check = app.add_subcommand("check", "run the checks listed in a config");
  add_common(check);
  check->add_flag("--timing", c.timing, "include wall time per check (breaks byte identity)");

  double q = 0.0;
  int max_order = 8;
  auto* moments = app.add_subcommand("moments", "vacuum moments of s(e)^n against the pair-partition oracle");
  add_common(moments);
  moments->add_option("--q", q, "scalar q when no config is given");
  moments->add_option("--max-order", max_order, "largest n");

  double beta = std::log(2.0);
  auto* bohr = app.add_subcommand("bohr", "Bohr spectrum of an Alicki generator");
  add_common(bohr);
  bohr->add_option("--beta", beta, "two-level example when no config is given");

  std::vector<double> qs;
  int m = 6;
  auto* gap = app.add_subcommand("gap", "spectral-gap constants over a q grid");
  add_common(gap);
  gap->add_option("--q", qs, "q values (default 0, 0.1, ..., 0.9)")->delimiter(',');
  gap->add_option("--m", m, "number of vectors");

  int k = 1;
  auto* tower = app.add_subcommand("tower", "P_n margins of a twist tower");
  add_common(tower);
  tower->add_option("--q", q, "scalar q when no config is given");
  tower->add_option("--k", k, "multiplicity when no config is given");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (check->parsed()) {
      if (c.config.empty()) throw Error(ErrorKind::ConfigParse, "check needs --config");
      const ExperimentConfig cfg = load(c, {});
      const RunResult r = run(cfg, {c.timing});
      emit(c.format == "csv" ? report_csv(r.report) : dump_json(r.report), c.out);
      return r.exit_code;
    }
    if (moments->parsed()) {
      ojson fb{{"twist", {{"kind", "q"}, {"q", q}}}, {"cutoff", max_order}};
      ExperimentConfig cfg = load(c, fb);
      if (!c.config.empty() && c.cutoff == 0) max_order = std::min(max_order, cfg.cutoff);
      cfg.checks = {{"moments", ojson{{"max_order", max_order}}}};
      const RunResult r = run(cfg);
      const ojson& rec = r.report["checks"][0];
      if (!rec["pass"].get<bool>() && rec["info"].contains("error"))
        throw Error(ErrorKind::ConfigSchema, rec["info"]["message"].get<std::string>());
      ojson rows = ojson::array();
      for (const auto& row : rec["info"]["table"]) {
        ojson o{{"order", row["order"]}, {"moment_re", row["moment"][0]}, {"moment_im", row["moment"][1]}};
        if (row.contains("oracle")) o["oracle"] = row["oracle"];
        rows.push_back(o);
      }
      emit(render_table(rows, c.format.empty() ? "csv" : c.format, "moments"), c.out);
      return r.exit_code;
    }
    if (bohr->parsed()) {
      ojson fb{{"qms", {{"beta", beta}}}};
      ExperimentConfig cfg = load(c, fb);
      if (!cfg.qms) throw Error(ErrorKind::ConfigSchema, "bohr needs a qms section");
      const AlickiGenerator g = make_alicki(cfg.qms->h, cfg.qms->jumps);
      const BohrSpectrumReport a = bohr_from_jumps(g), b = bohr_spectrum(g);
      ojson o;
      o["from_jumps"] = real_list(a.frequencies);
      o["from_disintegration"] = real_list(b.frequencies);
      o["raw_from_disintegration"] = real_list(b.raw);
      o["symmetric"] = a.symmetric && b.symmetric;
      o["in_log_modular_spectrum"] = b.in_log_modular;
      o["route_difference"] = multiset_distance(a.raw, b.raw);
      if (c.format == "csv") {
        std::ostringstream os;
        os << "source,frequency\n";
        for (double w : a.frequencies) os << "from_jumps," << format_double(w) << "\n";
        for (double w : b.frequencies) os << "from_disintegration," << format_double(w) << "\n";
        emit(os.str(), c.out);
      } else {
        emit(dump_json(o), c.out);
      }
      return multiset_distance(a.raw, b.raw) <= 1e-8 ? 0 : 1;
    }
    if (gap->parsed()) {
      if (qs.empty())
        for (int i = 0; i < 10; ++i) qs.push_back(0.1 * i);
      ojson rows = ojson::array();
      for (double qq : qs) {
        const GapConstants g = gap_constants(qq, m);
        rows.push_back(ojson{{"q", qq}, {"m", m}, {"c", g.c}, {"d", g.d}, {"kappa", g.kappa}, {"f", g.f},
                             {"c_terms", g.c_terms}, {"c_last_step", g.c_last_step}});
      }
      emit(render_table(rows, c.format, "gap"), c.out);
      return 0;
    }
    if (tower->parsed()) {
      ojson fb{{"correspondence", {{"k", k}}}, {"twist", {{"kind", "q"}, {"q", q}}}};
      const ExperimentConfig cfg = load(c, fb);
      BudgetGuard{cfg.budget}.require(ipow(cfg.k, cfg.cutoff), "twist tower");
      const TwistTower tw = build_tower(cfg.twist, cfg.cutoff, cfg.budget);
      const SandwichReport s = sandwich_bounds_report(cfg.twist, tw);
      ojson rows = ojson::array();
      for (int n = 1; n <= cfg.cutoff; ++n) {
        const auto& L = tw.levels[n];
        ojson r{{"n", n}, {"min_eig", L.min_eig}, {"max_eig", L.max_eig}, {"kernel_rank", L.kernel_rank},
                {"braided_diff", L.braided_diff}};
        if (n >= 2) {
          r["sandwich_lower"] = s.levels[n - 2].lower;
          r["sandwich_upper"] = s.levels[n - 2].upper;
        } else {
          r["sandwich_lower"] = nullptr;
          r["sandwich_upper"] = nullptr;
        }
        rows.push_back(r);
      }
      emit(render_table(rows, c.format, "tower"), c.out);
      return tw.min_psd_margin() >= -kPsdTol ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e.kind());
  }
  return 0;
}
