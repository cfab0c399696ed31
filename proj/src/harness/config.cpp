#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "rsgda/harness.hpp"

namespace rsgda::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_fail(const std::string& msg) { fail(ErrorKind::Config, msg); }

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) config_fail(where + ": expected a JSON object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, _] : obj.items()) {
    if (!allowed.count(k)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      config_fail(where + ": unknown key '" + k + "' (allowed: " + list + ")");
    }
  }
}

double num(const json& obj, const std::string& key, const std::string& where,
           std::optional<double> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    config_fail(where + ": missing required number '" + key + "'");
  }
  const auto& v = obj.at(key);
  if (!v.is_number()) config_fail(where + "." + key + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) config_fail(where + "." + key + ": must be finite");
  return d;
}

std::int64_t integer(const json& obj, const std::string& key, const std::string& where,
                     std::optional<std::int64_t> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    config_fail(where + ": missing required integer '" + key + "'");
  }
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) config_fail(where + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

bool boolean(const json& obj, const std::string& key, const std::string& where, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) config_fail(where + "." + key + ": expected true or false");
  return obj.at(key).get<bool>();
}

std::string str(const json& obj, const std::string& key, const std::string& where,
                std::optional<std::string> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    config_fail(where + ": missing required string '" + key + "'");
  }
  if (!obj.at(key).is_string()) config_fail(where + "." + key + ": expected a string");
  return obj.at(key).get<std::string>();
}

Vec vec(const json& v, const std::string& where) {
  if (!v.is_array()) config_fail(where + ": expected an array of numbers");
  Vec out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) config_fail(where + ": expected an array of numbers");
    out(static_cast<Index>(i)) = v[i].get<double>();
  }
  return out;
}

Mat mat(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty() || !v[0].is_array()) {
    config_fail(where + ": expected a non-empty array of rows");
  }
  const auto rows = static_cast<Index>(v.size());
  const auto cols = static_cast<Index>(v[0].size());
  Mat out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Vec row = vec(v[static_cast<std::size_t>(i)], where);
    if (row.size() != cols) config_fail(where + ": rows have different lengths");
    out.row(i) = row.transpose();
  }
  return out;
}

std::vector<int> layers(const json& v, const std::string& where) {
  if (!v.is_array()) config_fail(where + ": expected an array of layer sizes");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) config_fail(where + ": layer sizes must be integers");
    out.push_back(e.get<int>());
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() ? base / path : path;
}

ProblemPtr build_problem_unchecked(const json& spec, const fs::path& base) {
  allow_keys(spec, "problem", {"name", "params"});
  const std::string name = str(spec, "name", "problem");
  const json params = spec.value("params", json::object());
  const std::string where = "problem.params";

  if (name == "scsc_quadratic") {
    allow_keys(params, where, {"a", "B", "m", "n", "coupling_scale", "seed", "sigma"});
    const double a = num(params, "a", where, 1.0);
    const double sigma = num(params, "sigma", where, 0.0);
    if (params.contains("B")) return make_scsc_quadratic(a, mat(params.at("B"), where + ".B"), sigma);
    const auto m = integer(params, "m", where, 2);
    return make_random_scsc(m, integer(params, "n", where, m), a,
                            num(params, "coupling_scale", where, 1.0), sigma,
                            static_cast<std::uint64_t>(integer(params, "seed", where, 0)));
  }
  if (name == "bilinear") {
    allow_keys(params, where, {"m", "n", "sigma"});
    const auto m = integer(params, "m", where, 1);
    return make_bilinear(m, integer(params, "n", where, m), num(params, "sigma", where, 0.0));
  }
  if (name == "ncpl_quadratic") {
    allow_keys(params, where, {"Q", "c", "A", "B", "m", "n", "rank", "seed", "sigma"});
    const double sigma = num(params, "sigma", where, 0.0);
    if (params.contains("A")) {
      NcplSmoothPart g{mat(params.at("Q"), where + ".Q"), num(params, "c", where, 0.0)};
      return make_ncpl_quadratic(g, mat(params.at("A"), where + ".A"),
                                 mat(params.at("B"), where + ".B"), sigma);
    }
    const auto n = integer(params, "n", where, 3);
    return make_random_ncpl(integer(params, "m", where, 2), n, integer(params, "rank", where, n),
                            sigma, static_cast<std::uint64_t>(integer(params, "seed", where, 0)));
  }
  if (name == "gaussian_wgan") {
    allow_keys(params, where,
               {"mu_star", "sigma_star", "disc_layers", "activation", "batch", "init_scale",
                "disc_weight_decay", "quad_nodes", "l1", "mu", "sigma"});
    WganSpec w;
    w.mu_star = params.contains("mu_star") ? vec(params.at("mu_star"), where + ".mu_star")
                                           : Vec((Vec(2) << 0.5, -1.5).finished());
    w.sigma_star = params.contains("sigma_star") ? vec(params.at("sigma_star"), where + ".sigma_star")
                                                 : Vec((Vec(2) << 0.1, 0.3).finished());
    if (params.contains("disc_layers")) w.disc.layer_sizes = layers(params.at("disc_layers"), where);
    w.disc.activation = mlp::parse_activation(str(params, "activation", where, "tanh"));
    w.batch = static_cast<int>(integer(params, "batch", where, w.batch));
    w.init_scale = num(params, "init_scale", where, w.init_scale);
    w.disc_weight_decay = num(params, "disc_weight_decay", where, w.disc_weight_decay);
    w.quad_nodes = static_cast<int>(integer(params, "quad_nodes", where, w.quad_nodes));
    w.l1 = num(params, "l1", where, w.l1);
    w.mu = num(params, "mu", where, w.mu);
    w.sigma = num(params, "sigma", where, w.sigma);
    return make_gaussian_wgan(w);
  }
  if (name == "robust_regression") {
    allow_keys(params, where,
               {"data_csv", "n", "d", "noise", "data_seed", "model_layers", "activation", "lambda",
                "batch", "init_scale", "l1", "mu", "sigma"});
    RegressionData data =
        params.contains("data_csv")
            ? read_regression_csv(resolve(base, str(params, "data_csv", where)))
            : generate_regression_data(integer(params, "n", where, 1000), integer(params, "d", where, 500),
                                       num(params, "noise", where, 0.1),
                                       static_cast<std::uint64_t>(integer(params, "data_seed", where, 0)));
    RegressionSpec r;
    const int d = static_cast<int>(data.features.cols());
    r.model.layer_sizes = params.contains("model_layers") ? layers(params.at("model_layers"), where)
                                                          : std::vector<int>{d, 1};
    r.model.activation = mlp::parse_activation(str(params, "activation", where, "tanh"));
    r.lambda = num(params, "lambda", where, r.lambda);
    r.batch = static_cast<int>(integer(params, "batch", where, r.batch));
    r.init_scale = num(params, "init_scale", where, r.init_scale);
    r.l1 = num(params, "l1", where, r.l1);
    if (params.contains("mu")) r.mu = num(params, "mu", where);
    if (params.contains("sigma")) r.sigma = num(params, "sigma", where);
    return make_robust_regression(std::move(data), r);
  }
  config_fail("unknown problem '" + name +
              "' (valid: scsc_quadratic, bilinear, ncpl_quadratic, gaussian_wgan, robust_regression)");
}

DiagConfig parse_diag(const json& d) {
  allow_keys(d, "diag", {"interval", "h", "lyapunov", "inner_tol", "inner_budget"});
  DiagConfig diag;
  diag.interval = integer(d, "interval", "diag", 1);
  if (diag.interval < 1) config_fail("diag.interval must be >= 1");
  diag.h = boolean(d, "h", "diag", true);
  diag.lyapunov = boolean(d, "lyapunov", "diag", true);
  InnerConfig inner;
  inner.tol = num(d, "inner_tol", "diag", inner.tol);
  inner.max_iters = static_cast<int>(integer(d, "inner_budget", "diag", inner.max_iters));
  if (!(inner.tol > 0.0) || inner.max_iters < 0) {
    config_fail("diag: inner_tol must be > 0 and inner_budget >= 0");
  }
  diag.inner = inner;
  return diag;
}

std::string default_label(const json& raw) {
  const std::string kind = raw.value("kind", "");
  if (kind == "esgda") return "esgda(m=" + std::to_string(raw.value("m", 1)) + ")";
  if (kind == "rsgda") {
    if (raw.contains("p_schedule")) return "adarsgda";
    if (raw.contains("p") && raw.at("p").is_number()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "rsgda(p=%.4g)", raw.at("p").get<double>());
      return buf;
    }
    return "rsgda";
  }
  return kind;
}

}  // namespace

ProblemPtr build_problem(const json& spec, const fs::path& base_dir) {
  try {
    return build_problem_unchecked(spec, base_dir);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Io) throw;
    config_fail(std::string("problem: ") + e.what());
  }
}

OptKind build_optimizer(const json& spec) {
  if (!spec.is_object()) config_fail("optimizer: expected a JSON object");
  const std::string kind = str(spec, "kind", "optimizer");
  const std::string where = "optimizer(" + kind + ")";
  if (kind == "sgda") {
    allow_keys(spec, where, {"kind", "label", "steps", "problem", "strict"});
    return Sgda{boolean(spec, "strict", where, false)};
  }
  if (kind == "sgdmax") {
    allow_keys(spec, where, {"kind", "label", "steps", "problem", "delta", "inner_max_iters",
                             "inner_step", "stochastic_inner"});
    Sgdmax o;
    o.delta = num(spec, "delta", where, o.delta);
    o.inner_max_iters = static_cast<int>(integer(spec, "inner_max_iters", where, o.inner_max_iters));
    if (spec.contains("inner_step")) o.inner_step = num(spec, "inner_step", where);
    o.stochastic_inner = boolean(spec, "stochastic_inner", where, false);
    if (!(o.delta > 0.0)) config_fail(where + ".delta must be > 0");
    return o;
  }
  if (kind == "esgda") {
    allow_keys(spec, where, {"kind", "label", "steps", "problem", "m"});
    const auto m = integer(spec, "m", where, 1);
    if (m < 1) config_fail(where + ".m must be >= 1");
    return Esgda{static_cast<int>(m)};
  }
  if (kind == "rsgda") {
    allow_keys(spec, where, {"kind", "label", "steps", "problem", "p", "p_schedule"});
    if (spec.contains("p") && spec.contains("p_schedule")) {
      config_fail(where + ": give either p or p_schedule, not both");
    }
    return Rsgda{};
  }
  config_fail("unknown optimizer kind '" + kind + "' (valid: sgda, sgdmax, esgda, rsgda)");
}

StepPlan build_plan(const json& steps, const OptimizerSpec& opt, const Problem& problem) {
  const auto& c = problem.constants();
  const bool rsgda = std::holds_alternative<Rsgda>(opt.kind);
  const std::string where = "steps";
  try {
    // Descent probability for RSGDA: a number, "boundary" for l2/(9 l1 kappa^2 + l2),
    // or an adaptive schedule.
    double p = 0.5;
    std::optional<PScheduleAda> ada;
    if (rsgda && opt.raw.contains("p")) {
      const auto& pv = opt.raw.at("p");
      if (pv.is_string() && pv.get<std::string>() == "boundary") {
        p = p_boundary(c);
      } else if (pv.is_number()) {
        p = pv.get<double>();
      } else {
        config_fail(opt.label + ".p: expected a number or \"boundary\"");
      }
    }
    if (rsgda && opt.raw.contains("p_schedule")) {
      const json& ps = opt.raw.at("p_schedule");
      allow_keys(ps, opt.label + ".p_schedule", {"kind", "p0", "N1", "N2", "clamp_to_p0"});
      if (str(ps, "kind", "p_schedule", "adaptive") != "adaptive") {
        config_fail(opt.label + ".p_schedule.kind must be \"adaptive\"");
      }
      PScheduleAda s;
      s.p0 = ps.contains("p0") && ps.at("p0").is_string() && ps.at("p0") == "boundary"
                 ? p_boundary(c)
                 : num(ps, "p0", "p_schedule", s.p0);
      s.n1 = integer(ps, "N1", "p_schedule", 0);
      s.n2 = integer(ps, "N2", "p_schedule", 1);
      s.clamp_to_p0 = boolean(ps, "clamp_to_p0", "p_schedule", true);
      ada = s;
    }
    const double p_max = ada ? ada->p0 : p;

    const std::string kind = str(steps, "kind", where);
    std::optional<StepPlan> plan;
    if (kind == "constant") {
      allow_keys(steps, where, {"kind", "alpha", "eta"});
      plan = StepPlan::constant(num(steps, "alpha", where), num(steps, "eta", where, 0.0));
    } else if (kind == "polynomial") {
      allow_keys(steps, where, {"kind", "alpha0", "epsilon", "ratio", "clip_eta"});
      plan = StepPlan::polynomial(num(steps, "alpha0", where), num(steps, "epsilon", where, 0.1),
                                  num(steps, "ratio", where, 1.0));
      if (boolean(steps, "clip_eta", where, false)) plan->clip_eta_to(c);
    } else if (kind == "corollary") {
      allow_keys(steps, where, {"kind", "alpha_scale", "eta"});
      if (!rsgda) config_fail("steps.kind \"corollary\" is defined for rsgda only");
      if (!(p_max < 1.0)) config_fail("steps.kind \"corollary\" needs p < 1");
      const double scale = num(steps, "alpha_scale", where, 1.0);
      if (!(scale > 0.0 && scale <= 1.0)) config_fail("steps.alpha_scale must lie in (0, 1]");
      const StepBounds b = step_constraints(c, p_max);
      const double alpha = scale * b.alpha_max;
      const std::string eta_mode = str(steps, "eta", where, "lo");
      double eta = 0.0;
      if (eta_mode == "lo") {
        eta = b.eta_lo(alpha);
      } else if (eta_mode == "hi") {
        eta = b.eta_hi;
      } else {
        config_fail("steps.eta must be \"lo\" or \"hi\"");
      }
      plan = StepPlan::constant(alpha, eta);
    } else {
      config_fail("unknown steps.kind '" + kind + "' (valid: constant, polynomial, corollary)");
    }
    if (ada) {
      plan->with_adaptive_p(*ada);
    } else {
      plan->with_p(p);
    }
    return std::move(*plan);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    config_fail(opt.label + ": " + e.what());
  }
}

JointPoint build_init(const json& init, const Problem& problem, std::uint64_t seed,
                      const fs::path& base_dir) {
  RngStream rng(seed, kStreamInit);
  JointPoint u = problem.default_init(rng);
  if (init.is_null()) return u;
  allow_keys(init, "init", {"x", "y", "x_csv", "y_csv"});
  if (init.contains("x")) u.x = vec(init.at("x"), "init.x");
  if (init.contains("y")) u.y = vec(init.at("y"), "init.y");
  if (init.contains("x_csv")) u.x = mlp::load_params_csv(resolve(base_dir, str(init, "x_csv", "init")));
  if (init.contains("y_csv")) u.y = mlp::load_params_csv(resolve(base_dir, str(init, "y_csv", "init")));
  try {
    problem.check_point(u);
  } catch (const Error& e) {
    config_fail(std::string("init: ") + e.what());
  }
  return u;
}

RunConfig parse_config(const json& doc, const fs::path& base_dir, const CliOptions& cli) {
  allow_keys(doc, "config",
             {"description", "problem", "optimizer", "optimizers", "steps", "iters", "seeds",
              "diag", "output_dir", "waive_constraints", "init", "compare", "pselect", "check"});
  RunConfig cfg;
  cfg.base_dir = base_dir;
  if (!doc.contains("problem")) config_fail("config: missing 'problem'");
  cfg.problem = doc.at("problem");
  allow_keys(cfg.problem, "problem", {"name", "params"});
  str(cfg.problem, "name", "problem");

  if (doc.contains("optimizer") && doc.contains("optimizers")) {
    config_fail("config: give either 'optimizer' or 'optimizers', not both");
  }
  json entries = json::array();
  if (doc.contains("optimizer")) entries.push_back(doc.at("optimizer"));
  if (doc.contains("optimizers")) {
    if (!doc.at("optimizers").is_array()) config_fail("config.optimizers: expected an array");
    entries = doc.at("optimizers");
  }
  const json top_steps = doc.value("steps", json());
  std::set<std::string> labels;
  for (const auto& raw : entries) {
    OptimizerSpec spec;
    spec.kind = build_optimizer(raw);
    spec.raw = raw;
    if (raw.contains("problem") && raw.at("problem") != cfg.problem) {
      config_fail("optimizer entry '" + raw.value("label", default_label(raw)) +
                  "' names a different problem than the config; compare runs share one problem");
    }
    spec.label = raw.contains("label") ? str(raw, "label", "optimizer") : default_label(raw);
    if (labels.count(spec.label)) {
      std::string base = spec.label;
      for (int i = 2; labels.count(spec.label); ++i) spec.label = base + "#" + std::to_string(i);
    }
    labels.insert(spec.label);
    spec.steps = raw.contains("steps") ? raw.at("steps") : top_steps;
    if (spec.steps.is_null()) config_fail("optimizer '" + spec.label + "': no steps configured");
    cfg.optimizers.push_back(std::move(spec));
  }

  cfg.iters = integer(doc, "iters", "config", 0);
  if (cfg.iters < 0) config_fail("config.iters must be >= 0");

  if (cli.seeds) {
    cfg.seeds = *cli.seeds;
    cfg.seeds_source = "cli";
  } else if (doc.contains("seeds")) {
    const auto& s = doc.at("seeds");
    if (!s.is_array() || s.empty()) config_fail("config.seeds: expected a non-empty array");
    for (const auto& v : s) {
      if (!v.is_number_unsigned()) config_fail("config.seeds: entries must be non-negative integers");
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
    cfg.seeds_source = "config";
  } else {
    // Ten repetitions for the regression benchmark, one elsewhere; labeled as defaults.
    const std::size_t count = cfg.problem.at("name") == "robust_regression" ? 10 : 1;
    for (std::size_t i = 0; i < count; ++i) cfg.seeds.push_back(i);
    cfg.seeds_source = "default";
  }
  if (cfg.seeds.empty()) config_fail("seed list is empty");

  cfg.diag = parse_diag(doc.value("diag", json::object()));
  if (doc.contains("output_dir")) cfg.output_dir = fs::path(str(doc, "output_dir", "config"));
  cfg.waive_constraints = cli.waive_constraints || boolean(doc, "waive_constraints", "config", false);
  cfg.init = doc.value("init", json());
  if (cli.out_dir) cfg.output_dir = *cli.out_dir;
  cfg.extra = json::object();
  for (const char* key : {"compare", "pselect", "check"}) {
    if (doc.contains(key)) cfg.extra[key] = doc.at(key);
  }

  // The hash covers everything that determines results, not where they land.
  json canon = doc;
  canon.erase("output_dir");
  json seeds = json::array();
  for (auto s : cfg.seeds) seeds.push_back(s);
  canon["seeds"] = seeds;
  canon["waive_constraints"] = cfg.waive_constraints;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canon.dump())));
  cfg.hash = hex;
  return cfg;
}

RunConfig load_config(const fs::path& path, const CliOptions& cli) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    config_fail(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path().empty() ? fs::path(".") : path.parent_path(), cli);
}

fs::path resolve_out_dir(const RunConfig& cfg) {
  if (cfg.output_dir) return *cfg.output_dir;
  if (const char* env = std::getenv("RSGDA_OUT_DIR"); env && *env) return fs::path(env);
  return fs::path("rsgda_out");
}

}  // namespace rsgda::harness
