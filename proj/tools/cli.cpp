#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "carpetlab/carpet_io.hpp"
#include "carpetlab/dimension.hpp"
#include "carpetlab/errors.hpp"
#include "carpetlab/projection.hpp"
#include "carpetlab/rationality.hpp"
#include "carpetlab/separated.hpp"
#include "carpetlab/subsystem.hpp"
#include "carpetlab/svg.hpp"
#include "carpetlab/treecert.hpp"

namespace carpetlab::cli {

namespace {

using nlohmann::ordered_json;

struct RunConfig {
  std::string carpet_path;
  std::string out_path;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::size_t budget = 50'000'000;
  std::size_t node_cap = 1'000'000;

  // dim
  int starts = 16;
  // subsystem
  std::vector<int> ks{25, 50, 100, 200};
  std::string emit_maps_path;
  std::uint64_t map_cap = 100'000;
  // project / sweep
  std::optional<double> theta;
  std::optional<double> tau;
  bool tilde = false;
  std::string mode = "orthogonal";
  double delta_min = std::ldexp(1.0, -14);
  double delta_max = std::ldexp(1.0, -4);
  int drop = 2;
  int count = 64;
  double margin = 0.05;
  std::string plot_path;
  // separated / tree
  int k = 5;
  double epsilon = 0.04;
  int trials = 32;
  int angles = 180;
  std::string csv_path;
  int depth = -1;
  bool thin = false;
  std::string oracle = "empirical";
  int cells = 32;
  bool tables = false;
  // render
  std::optional<int> render_depth;
  std::optional<double> render_delta;
  double size = 512;
};

std::string shortest(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(cfg.out_path, std::ios::binary);
  if (!f) throw Error("cannot write " + cfg.out_path);
  f << text;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json violations_json(const std::vector<Violation>& vs) {
  ordered_json arr = ordered_json::array();
  for (const auto& v : vs) arr.push_back({{"code", v.code}, {"message", v.message}});
  return arr;
}

UniformFibreCarpet need_uniform(const Carpet& c) {
  if (const auto* u = std::get_if<UniformFibreCarpet>(&c)) return *u;
  throw PreconditionError(std::string("this subcommand needs a uniform carpet, got ") + type_name(c));
}

ordered_json pair_json(const std::optional<std::pair<std::size_t, std::size_t>>& p) {
  if (!p) return nullptr;
  return ordered_json::array({p->first, p->second});
}

int cmd_validate(const RunConfig& cfg, const Carpet& c, std::ostream& out) {
  auto rep = validate(c);
  ordered_json j{{"command", "validate"}, {"type", type_name(c)}, {"valid", rep.ok()},
                 {"violations", violations_json(rep.violations)}};
  emit(cfg, dump(j), out);
  return 0;
}

int cmd_dim(const RunConfig& cfg, const Carpet& c, std::ostream& out) {
  OptimizerOptions opt;
  opt.seed = cfg.seed;
  opt.jobs = cfg.jobs;
  opt.starts = cfg.starts;
  auto rep = dimension(c, opt);
  ordered_json j{{"command", "dim"}, {"type", type_name(c)}, {"value", rep.value}};
  j["maximizer"] = rep.maximizer.entries;
  j["t_of_p"] = rep.t_of_p ? ordered_json(*rep.t_of_p) : ordered_json(nullptr);
  j["d_x"] = rep.d_x ? ordered_json(*rep.d_x) : ordered_json(nullptr);
  j["d_y"] = rep.d_y ? ordered_json(*rep.d_y) : ordered_json(nullptr);
  j["diagnostics"] = {{"iterations", rep.diagnostics.iterations},
                      {"starts", rep.diagnostics.starts},
                      {"spread", rep.diagnostics.spread}};
  emit(cfg, dump(j), out);
  return 0;
}

int cmd_classify(const RunConfig& cfg, const Carpet& c, std::ostream& out) {
  auto cl = classify(c);
  bool verified = true;
  if (const auto* g = std::get_if<GLCarpet>(&c)) verified = verify_classification(cl, *g);
  if (const auto* b = std::get_if<BaranskiCarpet>(&c)) verified = verify_classification(cl, *b);
  if (const auto* u = std::get_if<UniformFibreCarpet>(&c)) verified = verify_classification(cl, to_gl(*u));
  ordered_json j{{"command", "classify"}, {"type", type_name(c)}, {"verdict", verdict_name(cl.verdict)}};
  j["irrational_pair"] = pair_json(cl.irrational_pair);
  j["other_row"] = cl.other_row ? ordered_json(*cl.other_row) : ordered_json(nullptr);
  if (cl.distinct_ratio_pairs) {
    j["distinct_ratio_pairs"] = ordered_json::array(
        {ordered_json::array({cl.distinct_ratio_pairs->first.first, cl.distinct_ratio_pairs->first.second}),
         ordered_json::array({cl.distinct_ratio_pairs->second.first, cl.distinct_ratio_pairs->second.second})});
  } else {
    j["distinct_ratio_pairs"] = nullptr;
  }
  j["verified"] = verified;
  emit(cfg, dump(j), out);
  return 0;
}

int cmd_subsystem(const RunConfig& cfg, const Carpet& c, std::ostream& out) {
  auto gl = subsystem_source(c);
  OptimizerOptions opt;
  opt.seed = cfg.seed;
  opt.jobs = cfg.jobs;
  opt.starts = cfg.starts;
  if (!cfg.emit_maps_path.empty() && cfg.ks.size() != 1) {
    throw PreconditionError("--emit-maps needs exactly one --k");
  }
  auto weights = optimal_weights(gl, opt);
  double dim_h = gl_dimension(gl, opt).value;
  ordered_json rows = ordered_json::array();
  for (int k : cfg.ks) {
    auto plan = build_subsystem(gl, weights, k);
    std::optional<AdjustedSubsystem> adj;
    if (classify_gl_type(gl).verdict != TypeVerdict::Rational) adj = irrationalize_subsystem(plan, gl);
    ordered_json r{{"k", k},
                   {"r_k", plan.r_k},
                   {"log_gamma_k", plan.log_gamma_k},
                   {"log_gamma_tilde_k", plan.log_gamma_tilde_k},
                   {"a_prime_log", log_of(plan.a_prime)},
                   {"b_prime_log", log_of(plan.b_prime)},
                   {"dim_k", plan.dim_k}};
    if (adj) {
      r["irrational"] = {{"map_index", adj->map_index ? ordered_json(*adj->map_index) : ordered_json(nullptr)},
                         {"power", adj->power},
                         {"certified", adj->certified_irrational},
                         {"dimension", adj->dimension}};
    } else {
      r["irrational"] = nullptr;
    }
    rows.push_back(std::move(r));
    if (!cfg.emit_maps_path.empty()) {
      auto composed = gl_from_maps(enumerate_subsystem_maps(plan, gl, cfg.map_cap));
      if (!composed) throw Error("composed maps do not form a GL carpet");
      save_carpet(cfg.emit_maps_path, Carpet(*composed));
    }
  }
  ordered_json j{{"command", "subsystem"}, {"type", type_name(c)}, {"dim_h", dim_h}, {"levels", rows}};
  emit(cfg, dump(j), out);
  return 0;
}

ProjectionParam param_of(const RunConfig& cfg, const Rational& a_ref) {
  if (cfg.theta.has_value() == cfg.tau.has_value()) throw PreconditionError("give exactly one of --theta and --tau");
  return cfg.theta ? ProjectionParam::from_theta(*cfg.theta, a_ref) : ProjectionParam::from_tau(*cfg.tau, a_ref, cfg.tilde);
}

int cmd_project(const RunConfig& cfg, const Carpet& c, std::ostream& out) {
  auto maps = as_maps(c);
  auto param = param_of(cfg, tau_reference(maps));
  EstimateOptions opt;
  opt.drop_coarsest = cfg.drop;
  opt.budget = cfg.budget;
  opt.jobs = cfg.jobs;
  opt.mode = cfg.mode == "pi_tau" ? ProjectionMode::pi_tau : ProjectionMode::orthogonal;
  auto curve = estimate_projection_dimension(maps, param, cfg.delta_min, cfg.delta_max, opt);
  ordered_json scales = ordered_json::array();
  for (const auto& [d, n] : curve.scales) scales.push_back({{"delta", d}, {"count", n}});
  ordered_json j{{"command", "project"},
                 {"theta", param.theta},
                 {"tau", std::isfinite(param.tau) ? ordered_json(param.tau) : ordered_json(nullptr)},
                 {"mode", cfg.mode},
                 {"slope", curve.slope},
                 {"scales", scales},
                 {"increments", curve.increments}};
  emit(cfg, dump(j), out);
  return 0;
}

std::string sweep_plot(const std::vector<SweepRow>& rows) {
  const double w = 640, h = 320, pad = 40;
  double lo = 1e300, hi = -1e300;
  for (const auto& r : rows) {
    lo = std::min(lo, r.slope);
    hi = std::max(hi, r.slope);
  }
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pi = std::acos(-1.0);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" data-points=\""
     << rows.size() << "\">\n";
  os << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << w - 2 * pad << "\" height=\"" << h - 2 * pad
     << "\" fill=\"none\" stroke=\"#999\"/>\n<polyline fill=\"none\" stroke=\"#1f4e79\" points=\"";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double x = pad + rows[i].theta / pi * (w - 2 * pad);
    double y = h - pad - (rows[i].slope - lo) / (hi - lo) * (h - 2 * pad);
    os << (i ? " " : "") << shortest(std::round(x * 100) / 100) << "," << shortest(std::round(y * 100) / 100);
  }
  os << "\"/>\n<text x=\"" << pad << "\" y=\"" << pad - 8 << "\" font-size=\"12\">slope " << shortest(lo) << " .. "
     << shortest(hi) << "</text>\n</svg>\n";
  return os.str();
}

int cmd_sweep(const RunConfig& cfg, const Carpet& c, std::ostream& out) {
  SweepOptions opt;
  opt.margin = cfg.margin;
  opt.drop_coarsest = cfg.drop;
  opt.budget = cfg.budget;
  opt.jobs = cfg.jobs;
  auto rows = sweep(c, theta_grid(static_cast<std::size_t>(cfg.count), cfg.margin), cfg.delta_min, cfg.delta_max, opt);
  emit(cfg, sweep_csv(rows), out);
  if (!cfg.plot_path.empty()) write_file(cfg.plot_path, sweep_plot(rows));
  return 0;
}

int cmd_separated(const RunConfig& cfg, const Carpet& c, std::ostream& out) {
  auto u = need_uniform(c);
  auto conf = default_config(u, cfg.k, cfg.epsilon);
  auto thetas = theta_grid(static_cast<std::size_t>(cfg.angles), cfg.margin);
  auto agg = per_xi_aggregate(u, cfg.k, conf, thetas, cfg.trials, cfg.seed, cfg.jobs);
  ordered_json J = ordered_json::array();
  for (const auto& [a, b] : agg.J) J.push_back(ordered_json::array({a, b}));
  ordered_json j{{"command", "separated"},
                 {"k", agg.k},
                 {"ell", agg.ell},
                 {"epsilon", cfg.epsilon},
                 {"rho", conf.rho},
                 {"gamma", conf.gamma},
                 {"angles", thetas.size()},
                 {"step", agg.step},
                 {"delta_hat", agg.delta_hat},
                 {"xi_delta_hat", agg.xi_delta_hat},
                 {"complement_measure", agg.complement_measure},
                 {"bound", agg.bound},
                 {"J", J},
                 {"hypotheses",
                  {{"ok", agg.hypotheses.ok()},
                   {"max_intersection_ratio", agg.hypotheses.max_intersection_ratio},
                   {"violations", violations_json(agg.hypotheses.violations)}}}};
  emit(cfg, dump(j), out);
  if (!cfg.csv_path.empty()) write_file(cfg.csv_path, xi_fraction_csv(agg));
  return 0;
}

int cmd_tree(const RunConfig& cfg, const Carpet& c, std::ostream& out) {
  auto u = need_uniform(c);
  ordered_json thin = nullptr;
  if (cfg.thin) {
    auto t = thin_to_subunit(u);
    thin = {{"iterate", t.iterate}, {"rows", t.rows}, {"cells", t.cells}, {"dimension", t.dimension}};
    u = t.carpet;
  }
  const double tau = cfg.tau.value_or(0.0);
  int ell = ell_of_k(u.a, u.b, cfg.k).ell;
  std::unique_ptr<GoodAngleOracle> oracle;
  if (cfg.oracle == "accept") {
    oracle = std::make_unique<AcceptAllOracle>(u.m, ell);
  } else if (cfg.oracle == "reject") {
    oracle = std::make_unique<RejectAllOracle>();
  } else {
    oracle = std::make_unique<EmpiricalTauOracle>(u, cfg.k, tau, cfg.epsilon, cfg.tilde, cfg.cells, cfg.trials,
                                                  cfg.seed);
  }
  int depth = cfg.depth;
  if (depth < 0) depth = choose_j0(rotation_schedule(u.a, u.b, cfg.k, 64)) + 4;
  TreeOptions topt;
  topt.jobs = cfg.jobs;
  auto tree = build_tree(u, tau, cfg.k, cfg.epsilon, depth, *oracle, topt, cfg.tilde);
  auto rep = verify_tree(tree, u, tau, cfg.node_cap);

  ordered_json levels = ordered_json::array();
  for (const auto& lv : tree.levels) {
    ordered_json l{{"j", lv.j}, {"t", lv.t}, {"good", lv.good}, {"count", lv.count},
                   {"keys", lv.entries.size()}, {"child_lists", lv.child_lists.size()}};
    if (cfg.tables) {
      ordered_json lists = ordered_json::array();
      for (const auto& list : lv.child_lists) {
        ordered_json pairs = ordered_json::array();
        for (const auto& ch : list) pairs.push_back(ordered_json::array({ch.nu, ch.nu_prime}));
        lists.push_back(std::move(pairs));
      }
      ordered_json entries = ordered_json::array();
      for (const auto& [key, id] : lv.entries) entries.push_back(ordered_json::array({key.first, key.second, id}));
      l["lists"] = std::move(lists);
      l["entries"] = std::move(entries);
    }
    levels.push_back(std::move(l));
  }
  ordered_json viol = ordered_json::array();
  for (const auto& v : rep.violations) {
    viol.push_back({{"property", std::string(1, v.property)}, {"level", v.level}, {"message", v.message}});
  }
  const auto& s = tree.schedule;
  ordered_json j{{"command", "tree"},
                 {"k", tree.k},
                 {"ell", s.ell},
                 {"tau", tau},
                 {"tilde", tree.tilde},
                 {"epsilon", tree.epsilon},
                 {"oracle", tree.oracle},
                 {"thinned", thin},
                 {"alpha", s.alpha},
                 {"e", s.e},
                 {"j0", tree.j0},
                 {"depth", tree.depth},
                 {"root_sigma", tree.root_sigma},
                 {"root_sigma_prime", tree.root_sigma_prime},
                 {"levels", levels},
                 {"verification",
                  {{"ok", rep.ok()},
                   {"violations", viol},
                   {"notes", rep.notes},
                   {"materialized_through", rep.materialized_through}}}};
  j["lower_bound"] = rep.ok() ? ordered_json(lower_bound(tree, u, cfg.node_cap)) : ordered_json(nullptr);
  emit(cfg, dump(j), out);
  return rep.ok() ? 0 : 1;
}

int cmd_render(const RunConfig& cfg, const Carpet& c, std::ostream& out) {
  RenderOptions opt;
  opt.depth = cfg.render_depth;
  opt.delta = cfg.render_delta;
  opt.theta = cfg.theta;
  opt.budget = std::min<std::size_t>(cfg.budget, 5'000'000);
  opt.size = cfg.size;
  auto res = render_svg(c, opt);
  emit(cfg, res.svg, out);
  return 0;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--carpet", cfg.carpet_path, "carpet spec (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", cfg.seed, "RNG seed");
  sub->add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", cfg.out_path, "output file (default: stdout)");
}

void error_json(std::ostream& err, const std::string& kind, const std::string& message, std::size_t line = 0,
                std::size_t column = 0) {
  ordered_json j{{"error", {{"kind", kind}, {"message", message}}}};
  if (line) {
    j["error"]["line"] = line;
    j["error"]["column"] = column;
  }
  err << j.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Self-affine carpet toolkit", "carpetlab"};
  app.require_subcommand(1, 1);

  auto* validate_cmd = app.add_subcommand("validate", "check a carpet spec");
  auto* dim_cmd = app.add_subcommand("dim", "Hausdorff dimension");
  auto* classify_cmd = app.add_subcommand("classify", "rational / irrational type");
  auto* subsystem_cmd = app.add_subcommand("subsystem", "inner approximating subsystems");
  auto* project_cmd = app.add_subcommand("project", "box-counting slope of one projection");
  auto* sweep_cmd = app.add_subcommand("sweep", "projection slopes over an angle grid (CSV)");
  auto* separated_cmd = app.add_subcommand("separated", "separated-subfamily harness on Q_k(ξ)");
  auto* tree_cmd = app.add_subcommand("tree", "build and verify a separated tree");
  auto* render_cmd = app.add_subcommand("render", "SVG of cylinders and a projected strip");
  for (auto* s : {validate_cmd, dim_cmd, classify_cmd, subsystem_cmd, project_cmd, sweep_cmd, separated_cmd, tree_cmd,
                  render_cmd}) {
    add_common(s, cfg);
  }
  for (auto* s : {dim_cmd, subsystem_cmd}) s->add_option("--starts", cfg.starts, "optimizer starts");
  subsystem_cmd->add_option("--k", cfg.ks, "word lengths")->expected(1, -1);
  subsystem_cmd->add_option("--emit-maps", cfg.emit_maps_path, "write the composed maps as a carpet spec");
  subsystem_cmd->add_option("--map-cap", cfg.map_cap, "largest |Γ_k| to enumerate");

  for (auto* s : {project_cmd, sweep_cmd}) {
    s->add_option("--delta-min", cfg.delta_min, "finest δ");
    s->add_option("--delta-max", cfg.delta_max, "coarsest δ");
    s->add_option("--drop", cfg.drop, "coarsest scales left out of the fit");
    s->add_option("--budget", cfg.budget, "cover size cap");
  }
  project_cmd->add_option("--theta", cfg.theta, "angle in (0, π)");
  project_cmd->add_option("--tau", cfg.tau, "τ-chart coordinate");
  project_cmd->add_flag("--tilde", cfg.tilde, "use the Π̃ branch with --tau");
  project_cmd->add_option("--mode", cfg.mode, "orthogonal or pi_tau")->check(CLI::IsMember({"orthogonal", "pi_tau"}));
  sweep_cmd->add_option("--count", cfg.count, "number of angles")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--margin", cfg.margin, "distance from principal directions");
  sweep_cmd->add_option("--plot", cfg.plot_path, "also write an SVG plot");

  separated_cmd->add_option("--k", cfg.k, "scale index")->check(CLI::PositiveNumber);
  separated_cmd->add_option("--epsilon", cfg.epsilon, "ε");
  separated_cmd->add_option("--angles", cfg.angles, "angle count")->check(CLI::PositiveNumber);
  separated_cmd->add_option("--margin", cfg.margin, "distance from principal directions");
  separated_cmd->add_option("--trials", cfg.trials, "random subfamilies per angle");
  separated_cmd->add_option("--csv", cfg.csv_path, "per-angle table");

  tree_cmd->add_option("--k", cfg.k, "scale index")->check(CLI::PositiveNumber);
  tree_cmd->add_option("--tau", cfg.tau, "τ");
  tree_cmd->add_option("--depth", cfg.depth, "last level (default j0 + 4)");
  tree_cmd->add_option("--epsilon", cfg.epsilon, "ε");
  tree_cmd->add_flag("--tilde", cfg.tilde, "Π̃ branch");
  tree_cmd->add_flag("--thin", cfg.thin, "thin to a subsystem with γ < 1 first");
  tree_cmd->add_option("--oracle", cfg.oracle, "empirical, accept or reject")
      ->check(CLI::IsMember({"empirical", "accept", "reject"}));
  tree_cmd->add_option("--cells", cfg.cells, "τ-cells of the empirical oracle")->check(CLI::PositiveNumber);
  tree_cmd->add_option("--trials", cfg.trials, "random subfamilies per cell");
  tree_cmd->add_option("--node-cap", cfg.node_cap, "global re-check node cap");
  tree_cmd->add_flag("--tables", cfg.tables, "include child tables");

  render_cmd->add_option("--depth", cfg.render_depth, "cylinder word length");
  render_cmd->add_option("--delta", cfg.render_delta, "or δ-cover");
  render_cmd->add_option("--theta", cfg.theta, "add a projected strip");
  render_cmd->add_option("--size", cfg.size, "pixels per unit");
  render_cmd->add_option("--budget", cfg.budget, "rectangle cap");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    Carpet carpet = load_carpet(cfg.carpet_path);
    if (validate_cmd->parsed()) return cmd_validate(cfg, carpet, out);
    if (dim_cmd->parsed()) return cmd_dim(cfg, carpet, out);
    if (classify_cmd->parsed()) return cmd_classify(cfg, carpet, out);
    if (subsystem_cmd->parsed()) return cmd_subsystem(cfg, carpet, out);
    if (project_cmd->parsed()) return cmd_project(cfg, carpet, out);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg, carpet, out);
    if (separated_cmd->parsed()) return cmd_separated(cfg, carpet, out);
    if (tree_cmd->parsed()) return cmd_tree(cfg, carpet, out);
    if (render_cmd->parsed()) return cmd_render(cfg, carpet, out);
  } catch (const ParseError& e) {
    error_json(err, e.kind(), e.what(), e.line(), e.column());
    return 1;
  } catch (const Error& e) {
    error_json(err, e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    error_json(err, "internal", e.what());
    return 1;
  }
  return 2;
}

}  // namespace carpetlab::cli
