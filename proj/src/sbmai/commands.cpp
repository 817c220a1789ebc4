#include "sbmai/commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sbmai/error.hpp"
#include "sbmai/verify.hpp"

namespace sbmai {
namespace {

struct Option {
  const char* key;
  Json def;  // null: absent unless given
  const char* help;
};

struct CommandSpec {
  const char* name;
  const char* summary;
  bool model;  // takes the model options
  std::vector<const char*> formats;
  std::vector<Option> options;
  const char* outputs;
};

std::vector<Option> model_options(int n_default) {
  return {
      {"n", n_default, "number of nodes"},
      {"r", 0.5, "prior weight of the minority group, in (0, 1/2]"},
      {"p_bar", 0.5, "mean edge probability (channel and delta sources)"},
      {"lambda", 1.5, "signal-to-noise ratio lambda_n (channel source)"},
      {"sign", 1, "+1 assortative, -1 disassortative (channel source)"},
      {"delta", nullptr, "edge bias; selects the delta source"},
      {"d_n", nullptr, "degree scale; with b_n selects the degree source"},
      {"b_n", nullptr, "cross-group degree factor (degree source)"},
  };
}

std::vector<Option> mcmc_options() {
  return {
      {"sweeps", 2000, "sweeps per chain, burn-in included"},
      {"burn_in", 500, "discarded sweeps per chain"},
      {"chains", 4, "independent chains per instance"},
      {"init", "planted", "chain start: planted, random or prior"},
      {"thin", 1, "keep every thin-th sweep"},
  };
}

std::vector<Option> path_options() {
  return {
      {"epsilon", 0.05, "initial side-channel SNR"},
      {"steps", 100, "Euler steps on [0, 1]"},
      {"instances", 200, "fresh planted instances per node"},
      {"estimator", "exact", "bracket estimator: exact or mcmc"},
      {"q_path", "solved", "rate path: solved, zero or constant"},
      {"q_const", 0.0, "rate of the constant path"},
      {"freeze_disorder", false, "reuse one instance batch at every node"},
  };
}

template <class... Lists>
std::vector<Option> join(std::vector<Option> first, const Lists&... rest) {
  (first.insert(first.end(), rest.begin(), rest.end()), ...);
  return first;
}

const std::vector<CommandSpec>& specs() {
  static const std::vector<CommandSpec> all = [] {
    const std::uint64_t one = 1;
    std::vector<CommandSpec> v;
    v.push_back({"generate", "sample one planted instance", true, {"json"},
                 join(model_options(8),
                      std::vector<Option>{{"t", 0.0, "interpolation time"},
                                          {"R", 0.0, "side-channel SNR"},
                                          {"seed", one, "master seed"},
                                          {"dump_brackets", false,
                                           "also write exact brackets and the <x_i x_j> matrix"}}),
                 "JSON instance record: labels as '+'/'-' codes, edges as base64 of the packed\n"
                 "upper-triangular bits. With dump_brackets, <output>.brackets.csv holds the\n"
                 "matrix <x_i x_j> with columns i,x0,...,x{n-1}."});
    v.push_back({"mi-exact", "per-node mutual information by full enumeration (n <= 5)", true,
                 {"json", "csv"},
                 join(model_options(4), std::vector<Option>{{"t", 0.0, "interpolation time"}}),
                 "CSV columns: mi_per_node,first_term"});
    v.push_back({"mi-mc", "per-node mutual information from sampled exact free energies", true,
                 {"json", "csv"},
                 join(model_options(8),
                      std::vector<Option>{{"samples", 2000, "planted instances"},
                                          {"seed", one, "master seed"}}),
                 "CSV columns: mi_per_node,stderr"});
    v.push_back({"ti", "thermodynamic-integration mutual information", true, {"csv", "json"},
                 join(model_options(24),
                      std::vector<Option>{{"intervals", 20, "t-grid intervals"},
                                          {"grid", "uniform", "t-grid: uniform or geometric"},
                                          {"ratio", 1.15, "step ratio of the geometric grid"},
                                          {"integrand", "overlap", "overlap or edge"},
                                          {"instances", 64, "planted instances per node"},
                                          {"exact_brackets", false,
                                           "brackets by enumeration instead of MCMC"},
                                          {"seed", one, "master seed"}},
                      mcmc_options()),
                 "CSV columns: t,q2_mean,q2_stderr,slope_mean,slope_stderr (slope is the\n"
                 "selected integrand). The other format is written to <output>.json or\n"
                 "<output>.csv. Non-mixing nodes make the run fail with exit 1 and\n"
                 "'.partial' outputs."});
    v.push_back({"replica", "minimize the replica potential", false, {"json", "csv"},
                 {{"lambda", 1.5, "signal-to-noise ratio"},
                  {"r", 0.5, "prior weight of the minority group"},
                  {"tol", 1e-9, "minimizer tolerance in q"},
                  {"quad_order", 61, "quadrature nodes"},
                  {"quad_rule", "panel", "panel or hermite"},
                  {"damping", 1.0, "state-evolution damping in (0, 1]"},
                  {"max_iter", 10000, "state-evolution iteration cap"}},
                 "CSV columns: lambda,r,q_star,psi_star,coexistence"});
    v.push_back({"phase-diagram", "transition scan of the replica minimizer", false, {"csv", "json"},
                 {{"lambda_min", 0.5, "first lambda"},
                  {"lambda_max", 2.0, "last lambda"},
                  {"lambda_step", 0.01, "lambda spacing"},
                  {"r_min", 0.05, "first r"},
                  {"r_max", 0.5, "last r"},
                  {"r_step", 0.05, "r spacing"},
                  {"tol", 1e-9, "minimizer tolerance in q"},
                  {"onset", 0.01, "q_star threshold defining lambda_c"},
                  {"jump_tol", 1e-4, "refined jump / lambda above which a transition is discontinuous"},
                  {"quad_order", 61, "quadrature nodes"}},
                 "CSV columns: r,lambda,q_star,psi_star,order (order classifies the whole r row)"});
    v.push_back({"interpolate", "follow the interpolation path R(t)", true, {"csv", "json"},
                 join(model_options(8), path_options(),
                      std::vector<Option>{{"liouville", false, "add the column dR_deps"},
                                          {"d_eps", 0.0, "finite-difference step; 0 means epsilon / 10"},
                                          {"seed", one, "master seed"}},
                      mcmc_options()),
                 "CSV columns: t,R,q,stderr (stderr of lambda_n E<Q> at the node), plus dR_deps\n"
                 "with liouville"});
    v.push_back({"sumrule", "audit the sum rule along a path", true, {"json", "csv"},
                 join(model_options(8), path_options(),
                      std::vector<Option>{{"lhs_samples", 20000, "instances for the independent MI"},
                                          {"epsilon_order", 8, "Gauss-Legendre nodes for the epsilon integral"},
                                          {"seed", one, "master seed"}},
                      mcmc_options()),
                 "CSV columns: t,R,q,r2,d1,d2,d3,cancellation,budget; totals as comments"});
    v.push_back({"concentration", "overlap or free-energy variance against n", false, {"csv", "json"},
                 {{"r", 0.5, "prior weight of the minority group"},
                  {"p_bar", 0.5, "mean edge probability"},
                  {"lambda", 1.0, "signal-to-noise ratio"},
                  {"sign", 1, "+1 assortative, -1 disassortative"},
                  {"n_grid", Json::array({8, 10, 12, 14}), "node counts"},
                  {"quantity", "overlap", "overlap or free_energy"},
                  {"t", 0.5, "interpolation time (overlap)"},
                  {"theta", 0.2, "s_n = n^-theta (overlap)"},
                  {"eps_points", 4, "epsilon midpoints on [s_n, 2 s_n] (overlap)"},
                  {"steps", 20, "Euler steps (overlap)"},
                  {"instances", 200, "instances per node (overlap)"},
                  {"samples", 2000, "instances per n (free_energy)"},
                  {"seed", one, "master seed"}},
                 "CSV columns: n,variance,bound_proxy,variance_stderr. bound_proxy is\n"
                 "(s_n^4 n)^(-1/3) for the overlap and 1/n for the free energy."});
    v.push_back({"verify", "desk-scale invariant suite", false, {"csv", "json"},
                 {{"seed", one, "master seed"}},
                 "CSV columns: module,check,status,value,relation,limit,limit_hi"});
    return v;
  }();
  return all;
}

const CommandSpec& spec_of(const std::string& command) {
  for (const CommandSpec& s : specs()) {
    if (command == s.name) return s;
  }
  fail(ErrorKind::kUnknownCommand, "unknown command '" + command + "'");
}

std::vector<Option> all_options(const CommandSpec& s) {
  std::vector<Option> out = s.options;
  out.push_back({"format", s.formats.front(), "output format"});
  return out;
}

Json checked_value(const Option& opt, const Json& v) {
  const std::string key = opt.key;
  auto bad = [&](const char* what) -> Json {
    fail(ErrorKind::kParameter, "option '" + key + "' must be " + what);
  };
  const Json& d = opt.def;
  if (d.is_null() || d.is_number_float()) {
    if (!v.is_number()) return bad("a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) return bad("finite");
    return x;
  }
  if (d.is_number_unsigned()) {
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 &&
                                   !v.is_number_unsigned())) {
      return bad("a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }
  if (d.is_number_integer()) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()) &&
        std::abs(v.get<double>()) < 1e15) {
      return static_cast<std::int64_t>(v.get<double>());
    }
    return bad("an integer");
  }
  if (d.is_boolean()) {
    if (!v.is_boolean()) return bad("true or false");
    return v;
  }
  if (d.is_string()) {
    if (!v.is_string()) return bad("a string");
    return v;
  }
  if (d.is_array()) {
    if (!v.is_array() || v.empty()) return bad("a nonempty list of integers");
    Json out = Json::array();
    for (const auto& x : v) {
      if (!x.is_number_integer()) return bad("a nonempty list of integers");
      out.push_back(x.get<std::int64_t>());
    }
    return out;
  }
  return v;
}

bool given(const Json& settings, const char* key) {
  return settings.contains(key) && !settings.at(key).is_null();
}

double num(const Json& c, const char* key) { return c.at(key).get<double>(); }
int integer(const Json& c, const char* key) {
  const std::int64_t v = c.at(key).get<std::int64_t>();
  if (v < -2147483647 || v > 2147483647) fail(ErrorKind::kParameter, std::string("option '") + key + "' out of range");
  return static_cast<int>(v);
}
std::size_t count(const Json& c, const char* key) {
  const std::int64_t v = c.at(key).get<std::int64_t>();
  if (v < 0) fail(ErrorKind::kParameter, std::string("option '") + key + "' must be >= 0");
  return static_cast<std::size_t>(v);
}
std::uint64_t seed_of(const Json& c) { return c.at("seed").get<std::uint64_t>(); }
std::string str(const Json& c, const char* key) { return c.at(key).get<std::string>(); }
bool flag(const Json& c, const char* key) { return c.at(key).get<bool>(); }

ModelParams model_from(const Json& c) {
  const int n = integer(c, "n");
  const double r = num(c, "r");
  if (c.contains("d_n")) return params_from_degrees(n, r, num(c, "d_n"), num(c, "b_n"));
  if (c.contains("delta")) return params_from_delta(n, r, num(c, "p_bar"), num(c, "delta"));
  const int sign = integer(c, "sign");
  if (sign != 1 && sign != -1) fail(ErrorKind::kParameter, "sign must be +1 or -1");
  return params_from_channel(n, r, num(c, "p_bar"), num(c, "lambda"), sign);
}

McmcConfig mcmc_from(const Json& c, std::uint64_t seed) {
  McmcConfig m;
  m.sweeps = integer(c, "sweeps");
  m.burn_in = integer(c, "burn_in");
  m.chains = integer(c, "chains");
  m.init = parse_chain_init(str(c, "init"));
  m.thin = integer(c, "thin");
  m.seed = seed;
  m.validate();
  return m;
}

PathConfig path_from(const Json& c) {
  PathConfig p;
  p.steps = integer(c, "steps");
  p.instances = count(c, "instances");
  p.estimator = parse_drift_estimator(str(c, "estimator"));
  p.seed = seed_of(c);
  p.mcmc = mcmc_from(c, p.seed);
  p.freeze_disorder = flag(c, "freeze_disorder");
  return p;
}

std::vector<double> grid_from(double lo, double hi, double step, const char* what) {
  if (!(step > 0.0) || !(hi >= lo)) {
    fail(ErrorKind::kParameter, std::string(what) + " grid needs step > 0 and max >= min");
  }
  const double span = (hi - lo) / step;
  if (span > 1e6) fail(ErrorKind::kParameter, std::string(what) + " grid too fine");
  const long points = std::lround(std::floor(span + 1e-9)) + 1;
  std::vector<double> g;
  for (long k = 0; k < points; ++k) g.push_back(lo + k * step);
  return g;
}

Json dense_json(const ModelParams& p) {
  const DenseDiagnostic d = check_dense_hypotheses(p);
  return Json{{"density_growth", d.density_growth},
              {"bias_ratio", d.bias_ratio},
              {"threshold", d.threshold},
              {"large_finite_size", d.large_finite_size}};
}

struct Context {
  std::string command;
  Json config;
  Json params = nullptr;
  Json diagnostic = nullptr;
};

Json document(const Context& ctx, const Json& result) {
  Json d{{"schema_version", kSchemaVersion},
         {"command", ctx.command},
         {"config", ctx.config},
         {"params", ctx.params}};
  if (!ctx.diagnostic.is_null()) d["dense_diagnostic"] = ctx.diagnostic;
  d["result"] = result;
  return d;
}

CsvWriter csv(const Context& ctx, std::vector<std::string> columns) {
  CsvWriter w(std::move(columns));
  w.comment("schema_version", kSchemaVersion);
  w.comment("command", ctx.command);
  w.comment("config", ctx.config);
  w.comment("params", ctx.params);
  return w;
}

bool is_json(const Context& ctx) { return str(ctx.config, "format") == "json"; }

CommandResult single(std::string content) {
  CommandResult r;
  r.artifacts.push_back({"", std::move(content)});
  return r;
}

CommandResult run_generate(const Context& ctx) {
  const Json& c = ctx.config;
  const ModelParams p = model_from(c);
  const double t = num(c, "t"), R = num(c, "R");
  const PlantedInstance inst = sample_instance(p, t, R, seed_of(c));
  Json res{{"instance", instance_json(inst, p.alphabet())}};
  CommandResult out;
  if (flag(c, "dump_brackets")) {
    const GibbsReport g = gibbs_report(inst, p, t, R, true);
    res["brackets"] = gibbs_json(g, false);
    std::vector<std::string> cols{"i"};
    for (int j = 0; j < p.n; ++j) cols.push_back("x" + std::to_string(j));
    CsvWriter w = csv(ctx, cols);
    for (int i = 0; i < p.n; ++i) {
      std::vector<std::string> cells{std::to_string(i)};
      for (int j = 0; j < p.n; ++j) cells.push_back(format_double(g.pair_xx[static_cast<std::size_t>(i) * p.n + j]));
      w.row(cells);
    }
    out.artifacts.push_back({"", dump_json(document(ctx, res))});
    out.artifacts.push_back({".brackets.csv", w.str()});
    return out;
  }
  return single(dump_json(document(ctx, res)));
}

CommandResult run_mi_exact(const Context& ctx) {
  const ModelParams p = model_from(ctx.config);
  const double t = num(ctx.config, "t");
  const double mi = exact_mi_tiny(p, t);
  const double first = mi_closed_form_first_term(p, t);
  if (is_json(ctx)) {
    return single(dump_json(document(ctx, Json{{"mi_per_node", mi}, {"first_term", first}})));
  }
  CsvWriter w = csv(ctx, {"mi_per_node", "first_term"});
  w.row(std::vector<double>{mi, first});
  return single(w.str());
}

CommandResult run_mi_mc(const Context& ctx) {
  const ModelParams p = model_from(ctx.config);
  const Estimate e = mi_via_free_energy(p, count(ctx.config, "samples"), seed_of(ctx.config));
  if (is_json(ctx)) {
    return single(dump_json(document(
        ctx, Json{{"mi_per_node", e.mean}, {"stderr", e.stderr_}, {"first_term", mi_closed_form_first_term(p)}})));
  }
  CsvWriter w = csv(ctx, {"mi_per_node", "stderr"});
  w.row(std::vector<double>{e.mean, e.stderr_});
  return single(w.str());
}

CommandResult run_ti(const Context& ctx) {
  const Json& c = ctx.config;
  const ModelParams p = model_from(c);
  TiConfig cfg;
  cfg.mcmc = mcmc_from(c, seed_of(c));
  cfg.instances = count(c, "instances");
  const std::string integrand = str(c, "integrand");
  if (integrand != "overlap" && integrand != "edge") {
    fail(ErrorKind::kParameter, "integrand must be overlap or edge");
  }
  cfg.integrand = integrand == "edge" ? TiIntegrand::kEdge : TiIntegrand::kOverlap;
  cfg.exact_brackets = flag(c, "exact_brackets");
  const std::string grid = str(c, "grid");
  if (grid != "uniform" && grid != "geometric") fail(ErrorKind::kParameter, "grid must be uniform or geometric");
  const std::vector<double> t_grid = make_t_grid(
      integer(c, "intervals"), grid == "geometric" ? TiGridKind::kGeometric : TiGridKind::kUniform,
      num(c, "ratio"));
  const TiEstimate est = ti_mutual_information(p, t_grid, cfg);

  CsvWriter w = csv(ctx, {"t", "q2_mean", "q2_stderr", "slope_mean", "slope_stderr"});
  w.comment("mi_per_node", est.mi_per_node.mean);
  w.comment("stderr", est.mi_per_node.stderr_);
  w.comment("unreliable", est.unreliable);
  Json nodes{{"t", Json::array()}, {"q2_mean", Json::array()}, {"q2_stderr", Json::array()},
             {"slope_mean", Json::array()}, {"slope_stderr", Json::array()}};
  for (std::size_t k = 0; k < est.t_grid.size(); ++k) {
    w.row(std::vector<double>{est.t_grid[k], est.q2_at_t[k].mean, est.q2_at_t[k].stderr_,
                              est.slope_at_t[k].mean, est.slope_at_t[k].stderr_});
    nodes["t"].push_back(est.t_grid[k]);
    nodes["q2_mean"].push_back(est.q2_at_t[k].mean);
    nodes["q2_stderr"].push_back(est.q2_at_t[k].stderr_);
    nodes["slope_mean"].push_back(est.slope_at_t[k].mean);
    nodes["slope_stderr"].push_back(est.slope_at_t[k].stderr_);
  }
  Json res = ti_json(est);
  res["nodes"] = nodes;
  const std::string json_text = dump_json(document(ctx, res));
  CommandResult out;
  if (is_json(ctx)) {
    out.artifacts.push_back({"", json_text});
    out.artifacts.push_back({".csv", w.str()});
  } else {
    out.artifacts.push_back({"", w.str()});
    out.artifacts.push_back({".json", json_text});
  }
  if (est.unreliable) {
    out.estimator_failure = true;
    out.failure_reason = "non-mixing chains at " + std::to_string(est.flagged_nodes.size()) + " t node(s)";
  }
  return out;
}

CommandResult run_replica(const Context& ctx) {
  const Json& c = ctx.config;
  const std::string rule = str(c, "quad_rule");
  if (rule != "panel" && rule != "hermite") fail(ErrorKind::kParameter, "quad_rule must be panel or hermite");
  const PsiQuadrature quad{integer(c, "quad_order"), rule == "panel" ? PsiRule::kPanel : PsiRule::kHermite};
  const double lambda = num(c, "lambda"), r = num(c, "r");
  const ReplicaSolution s = minimize_psi(lambda, r, num(c, "tol"), quad);
  const StateEvolution se =
      state_evolution(lambda, r, lambda, num(c, "damping"), integer(c, "max_iter"), 1e-10, quad);
  if (is_json(ctx)) {
    Json res = replica_json(s);
    res["state_evolution"] = state_evolution_json(se);
    return single(dump_json(document(ctx, res)));
  }
  CsvWriter w = csv(ctx, {"lambda", "r", "q_star", "psi_star", "coexistence"});
  w.row(std::vector<std::string>{format_double(lambda), format_double(r), format_double(s.q_star),
                                 format_double(s.psi_star), s.coexistence ? "true" : "false"});
  return single(w.str());
}

CommandResult run_phase_diagram(const Context& ctx) {
  const Json& c = ctx.config;
  const std::vector<double> lambdas =
      grid_from(num(c, "lambda_min"), num(c, "lambda_max"), num(c, "lambda_step"), "lambda");
  const std::vector<double> rs = grid_from(num(c, "r_min"), num(c, "r_max"), num(c, "r_step"), "r");
  PhaseOptions opt;
  opt.tol = num(c, "tol");
  opt.onset = num(c, "onset");
  opt.jump_tol = num(c, "jump_tol");
  opt.quad.order = integer(c, "quad_order");
  const PhaseDiagram d = phase_diagram(lambdas, rs, opt);
  if (is_json(ctx)) {
    Json rows = Json::array();
    for (const PhaseRow& row : d.rows) {
      Json q = Json::array(), ps = Json::array();
      for (const ReplicaSolution& s : row.sweep) {
        q.push_back(s.q_star);
        ps.push_back(s.psi_star);
      }
      rows.push_back(Json{{"r", row.r},
                          {"order", to_string(row.order)},
                          {"lambda_c", row.lambda_c},
                          {"max_jump", row.max_jump},
                          {"jump_lambda", row.jump_lambda},
                          {"refined_jump", row.refined_jump},
                          {"transition_lambda", row.transition_lambda},
                          {"metastable", row.metastable},
                          {"q_star", q},
                          {"psi_star", ps}});
    }
    Json lam = Json::array();
    for (double l : d.lambdas) lam.push_back(l);
    return single(dump_json(document(ctx, Json{{"lambda", lam},
                                              {"rows", rows},
                                              {"r_star", d.r_star_found ? Json(d.r_star) : Json(nullptr)},
                                              {"tricritical_r", tricritical_r()}})));
  }
  CsvWriter w = csv(ctx, {"r", "lambda", "q_star", "psi_star", "order"});
  w.comment("r_star", d.r_star_found ? Json(d.r_star) : Json(nullptr));
  for (const PhaseRow& row : d.rows) {
    for (std::size_t k = 0; k < row.sweep.size(); ++k) {
      w.row(std::vector<std::string>{format_double(row.r), format_double(d.lambdas[k]),
                                     format_double(row.sweep[k].q_star),
                                     format_double(row.sweep[k].psi_star), to_string(row.order)});
    }
  }
  return single(w.str());
}

CommandResult run_interpolate(const Context& ctx) {
  const Json& c = ctx.config;
  const ModelParams p = model_from(c);
  const PathConfig pc = path_from(c);
  const double eps = num(c, "epsilon");
  const QPathKind kind = parse_q_path(str(c, "q_path"));
  const InterpolationPath path = follow_path(p, eps, kind, num(c, "q_const"), pc);
  const bool liouville = flag(c, "liouville");
  LiouvilleReport lr;
  if (liouville) {
    if (kind != QPathKind::kSolved) fail(ErrorKind::kParameter, "liouville needs the solved path");
    lr = liouville_monotonicity(p, eps, num(c, "d_eps"), pc);
  }
  if (is_json(ctx)) {
    Json res = path_json(path);
    if (liouville) {
      Json s = Json::array();
      for (double v : lr.slope) s.push_back(v);
      res["dR_deps"] = s;
      res["min_dR_deps"] = lr.min_slope;
      res["d_eps"] = lr.d_eps;
    }
    return single(dump_json(document(ctx, res)));
  }
  std::vector<std::string> cols{"t", "R", "q", "stderr"};
  if (liouville) cols.push_back("dR_deps");
  CsvWriter w = csv(ctx, cols);
  w.comment("clamped", path.clamped);
  w.comment("noise_warning", path.noise_warning);
  for (std::size_t k = 0; k < path.t_grid.size(); ++k) {
    std::vector<double> row{path.t_grid[k], path.R_values[k], path.q_values[k],
                            p.lambda_n * path.nodes[k].overlap.stderr_};
    if (liouville) row.push_back(lr.slope[k]);
    w.row(row);
  }
  return single(w.str());
}

CommandResult run_sumrule(const Context& ctx) {
  const Json& c = ctx.config;
  const ModelParams p = model_from(c);
  SumRuleConfig sc;
  sc.path = path_from(c);
  sc.kind = parse_q_path(str(c, "q_path"));
  sc.q_const = num(c, "q_const");
  sc.lhs_samples = count(c, "lhs_samples");
  sc.epsilon_order = integer(c, "epsilon_order");
  const SumRuleReport r = sum_rule_audit(p, num(c, "epsilon"), sc);
  if (is_json(ctx)) return single(dump_json(document(ctx, sum_rule_json(r))));
  CsvWriter w = csv(ctx, {"t", "R", "q", "r2", "d1", "d2", "d3", "cancellation", "budget"});
  w.comment("lhs_mi_per_node", estimate_json(r.lhs_mi_per_node));
  w.comment("rhs_total", r.rhs_total);
  w.comment("residual", Json{{"mean", r.residual}, {"stderr", r.residual_stderr}});
  w.comment("psi_term", r.psi_term);
  w.comment("r1", r.r1);
  w.comment("r2_integral", r.r2_integral);
  w.comment("r3", r.r3);
  w.comment("closure_residual", Json{{"mean", r.closure_residual}, {"stderr", r.closure_stderr}});
  w.comment("cancellation_ok", r.cancellation_ok);
  for (std::size_t k = 0; k < r.t_grid.size(); ++k) {
    w.row(std::vector<double>{r.t_grid[k], r.R_values[k], r.q_values[k], r.r2_at_nodes[k],
                              r.d1_at_nodes[k], r.d2_at_nodes[k], r.d3_at_nodes[k],
                              r.cancellation[k], r.cancellation_budget[k]});
  }
  return single(w.str());
}

CommandResult run_concentration(const Context& ctx) {
  const Json& c = ctx.config;
  std::vector<int> ns;
  for (const auto& v : c.at("n_grid")) {
    const std::int64_t n = v.get<std::int64_t>();
    if (n < 2 || n > kMaxEnumerationCap) fail(ErrorKind::kParameter, "n_grid entries must lie in [2, 30]");
    ns.push_back(static_cast<int>(n));
  }
  const int sign = integer(c, "sign");
  if (sign != 1 && sign != -1) fail(ErrorKind::kParameter, "sign must be +1 or -1");
  const std::string quantity = str(c, "quantity");
  CsvWriter w = csv(ctx, {"n", "variance", "bound_proxy", "variance_stderr"});
  Json res;
  if (quantity == "overlap") {
    ConcentrationConfig cc;
    cc.t = num(c, "t");
    cc.theta = num(c, "theta");
    cc.eps_points = integer(c, "eps_points");
    cc.path.steps = integer(c, "steps");
    cc.path.instances = count(c, "instances");
    cc.path.seed = seed_of(c);
    const ConcentrationScan s =
        overlap_variance_scan(num(c, "r"), num(c, "p_bar"), num(c, "lambda"), sign, ns, cc);
    res = concentration_json(s);
    w.comment("slope", s.slope);
    w.comment("decreasing", s.decreasing);
    for (const ConcentrationRow& row : s.rows) {
      w.row(std::vector<std::string>{std::to_string(row.n), format_double(row.variance.mean),
                                     format_double(row.bound_proxy), format_double(row.variance.stderr_)});
    }
  } else if (quantity == "free_energy") {
    const FreeEnergyScan s = free_energy_variance(num(c, "r"), num(c, "p_bar"), num(c, "lambda"), sign,
                                                  ns, count(c, "samples"), seed_of(c));
    res = free_energy_scan_json(s);
    w.comment("slope", s.slope);
    for (const FreeEnergyRow& row : s.rows) {
      w.row(std::vector<std::string>{std::to_string(row.n), format_double(row.variance.mean),
                                     format_double(1.0 / row.n), format_double(row.variance.stderr_)});
    }
  } else {
    fail(ErrorKind::kParameter, "quantity must be overlap or free_energy");
  }
  if (is_json(ctx)) return single(dump_json(document(ctx, res)));
  return single(w.str());
}

std::string verify_table(const VerifyReport& rep) {
  std::ostringstream os;
  std::size_t width = 0;
  for (const VerifyRow& r : rep.rows) width = std::max(width, r.module.size() + r.check.size() + 3);
  int failed = 0;
  for (const VerifyRow& r : rep.rows) {
    std::string label = r.module + " | " + r.check;
    label.resize(width, ' ');
    std::string limit = format_double(r.limit);
    if (r.relation == "in") limit = "[" + limit + ", " + format_double(r.limit_hi) + "]";
    os << (r.pass ? "PASS  " : "FAIL  ") << label << "  " << format_double(r.value) << " "
       << r.relation << " " << limit << "\n";
    failed += !r.pass;
  }
  os << (rep.rows.size() - failed) << "/" << rep.rows.size() << " checks passed\n";
  return os.str();
}

CommandResult run_verify_command(const Context& ctx) {
  const VerifyReport rep = run_verify(seed_of(ctx.config));
  CommandResult out;
  if (is_json(ctx)) {
    Json rows = Json::array();
    for (const VerifyRow& r : rep.rows) {
      Json row{{"module", r.module}, {"check", r.check}, {"pass", r.pass},
               {"value", r.value},   {"relation", r.relation}, {"limit", r.limit}};
      if (r.relation == "in") row["limit_hi"] = r.limit_hi;
      rows.push_back(row);
    }
    out.artifacts.push_back({"", dump_json(document(ctx, Json{{"all_pass", rep.all_pass}, {"checks", rows}}))});
  } else {
    CsvWriter w = csv(ctx, {"module", "check", "status", "value", "relation", "limit", "limit_hi"});
    w.comment("all_pass", rep.all_pass);
    for (const VerifyRow& r : rep.rows) {
      w.row(std::vector<std::string>{r.module, "\"" + r.check + "\"", r.pass ? "pass" : "fail",
                                     format_double(r.value), r.relation, format_double(r.limit),
                                     r.relation == "in" ? format_double(r.limit_hi) : ""});
    }
    out.artifacts.push_back({"", w.str()});
  }
  out.console = verify_table(rep);
  if (!rep.all_pass) {
    out.estimator_failure = true;
    out.failure_reason = "some invariant checks failed";
  }
  return out;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const CommandSpec& s : specs()) v.emplace_back(s.name);
    return v;
  }();
  return names;
}

bool is_command(const std::string& name) {
  const auto& n = command_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

Json resolve_settings(const std::string& command, const Json& settings) {
  const CommandSpec& spec = spec_of(command);
  if (!settings.is_object()) fail(ErrorKind::kParameter, "settings must be a JSON object");
  const std::vector<Option> opts = all_options(spec);
  for (auto it = settings.begin(); it != settings.end(); ++it) {
    if (it.key() == "command") continue;
    const bool known = std::any_of(opts.begin(), opts.end(), [&](const Option& o) { return it.key() == o.key; });
    if (!known) fail(ErrorKind::kParameter, "unknown option '" + it.key() + "' for " + command);
  }
  if (given(settings, "command") &&
      (!settings.at("command").is_string() || settings.at("command").get<std::string>() != command)) {
    fail(ErrorKind::kParameter, "config was written for a different command");
  }
  Json out = Json::object();
  for (const Option& o : opts) {
    if (given(settings, o.key)) {
      out[o.key] = checked_value(o, settings.at(o.key));
    } else if (!o.def.is_null()) {
      out[o.key] = o.def;
    }
  }
  const std::string format = out.at("format").get<std::string>();
  if (std::find(spec.formats.begin(), spec.formats.end(), format) == spec.formats.end()) {
    fail(ErrorKind::kParameter, "format '" + format + "' not available for " + command);
  }
  if (spec.model) {
    const bool degrees = given(settings, "d_n") || given(settings, "b_n");
    const bool delta = given(settings, "delta");
    const bool channel = given(settings, "lambda") || given(settings, "sign");
    if (degrees + delta + channel > 1) {
      fail(ErrorKind::kParameter, "give one model source: lambda/sign, delta, or d_n/b_n");
    }
    if (degrees && !(given(settings, "d_n") && given(settings, "b_n"))) {
      fail(ErrorKind::kParameter, "the degree source needs both d_n and b_n");
    }
    if (degrees || delta) {
      out.erase("lambda");
      out.erase("sign");
    }
    if (degrees) out.erase("p_bar");
  }
  return out;
}

CommandResult run_command(const std::string& command, const Json& settings) {
  Context ctx;
  ctx.command = command;
  ctx.config = resolve_settings(command, settings);
  if (spec_of(command).model) {
    const ModelParams p = model_from(ctx.config);
    ctx.params = params_json(p);
    ctx.diagnostic = dense_json(p);
  }
  if (command == "generate") return run_generate(ctx);
  if (command == "mi-exact") return run_mi_exact(ctx);
  if (command == "mi-mc") return run_mi_mc(ctx);
  if (command == "ti") return run_ti(ctx);
  if (command == "replica") return run_replica(ctx);
  if (command == "phase-diagram") return run_phase_diagram(ctx);
  if (command == "interpolate") return run_interpolate(ctx);
  if (command == "sumrule") return run_sumrule(ctx);
  if (command == "concentration") return run_concentration(ctx);
  return run_verify_command(ctx);
}

Json command_options(const std::string& command) {
  const CommandSpec& spec = spec_of(command);
  Json out = Json::array();
  for (const Option& o : all_options(spec)) {
    Json item{{"key", o.key}, {"default", o.def}, {"help", o.help}};
    if (std::string(o.key) == "format") item["choices"] = spec.formats;
    out.push_back(item);
  }
  return out;
}

std::string command_help(const std::string& command) {
  const CommandSpec& spec = spec_of(command);
  std::ostringstream os;
  os << spec.summary << "\n\nOptions (flag --key or config-file key, default in brackets):\n";
  for (const Option& o : all_options(spec)) {
    std::string key = o.key;
    key.resize(16, ' ');
    os << "  " << key << o.help;
    if (!o.def.is_null()) os << " [" << dump_compact(o.def) << "]";
    os << "\n";
  }
  os << "  formats: ";
  for (std::size_t k = 0; k < spec.formats.size(); ++k) os << (k ? ", " : "") << spec.formats[k];
  os << "\n\nOutput:\n" << spec.outputs << "\n";
  return os.str();
}

ConfigSource parse_config_text(const std::string& text) {
  ConfigSource src;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const Json j = parse_json(text);
    if (j.contains("schema_version") && j.contains("config")) {
      src.settings = j.at("config");
      if (j.contains("command") && j.at("command").is_string()) src.command = j.at("command").get<std::string>();
    } else {
      src.settings = j;
      if (j.contains("command") && j.at("command").is_string()) src.command = j.at("command").get<std::string>();
    }
    return src;
  }
  std::istringstream is(text);
  std::string line;
  bool found = false;
  while (std::getline(is, line) && line.rfind("# ", 0) == 0) {
    const auto colon = line.find(": ");
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(2, colon - 2);
    const std::string value = line.substr(colon + 2);
    if (key == "config") {
      src.settings = parse_json(value);
      found = true;
    } else if (key == "command") {
      src.command = parse_json(value).get<std::string>();
    }
  }
  if (!found) fail(ErrorKind::kParameter, "no JSON object or embedded '# config:' line found");
  return src;
}

}  // namespace sbmai
