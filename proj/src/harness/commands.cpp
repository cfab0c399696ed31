#include <cctype>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "rsgda/harness.hpp"

namespace rsgda::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_json(const TraceRecord& r) {
  return {{"grad_x_norm", r.grad_x_norm}, {"grad_y_norm", r.grad_y_norm}, {"h", opt_json(r.h)},
          {"V", opt_json(r.V)},           {"dist", opt_json(r.dist)},     {"loss", opt_json(r.loss)},
          {"phi_uncertain", r.phi_uncertain}};
}

json counters_json(const Counters& c) {
  return {{"x_steps", c.x_steps}, {"y_steps", c.y_steps}, {"grad_evals", c.grad_evals}};
}

json constants_json(const Problem& p) {
  const auto& c = p.constants();
  return {{"l1", c.l1()},
          {"mu", c.mu()},
          {"sigma", c.sigma()},
          {"kappa", c.kappa()},
          {"l2", c.l2()},
          {"source", p.mlp_backed() ? "user-supplied estimates" : "derived from problem data"}};
}

json mean_std(const std::vector<double>& v) {
  if (v.empty()) return nullptr;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return {{"mean", mean}, {"std", sd}, {"count", v.size()}};
}

std::optional<double> trace_min_h(const std::vector<TraceRecord>& trace) {
  std::optional<double> best;
  for (const auto& r : trace) {
    if (r.h && (!best || *r.h < *best)) best = r.h;
  }
  return best;
}

// Fans seeds out over worker threads. Each job owns its outputs; the first
// failure (in seed order) is rethrown after all workers finish.
template <class Job>
void for_each_seed(std::size_t count, Job job) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct SeedRun {
  std::uint64_t seed = 0;
  RunResult result;
};

std::vector<SeedRun> run_all_seeds(const Problem& problem, const OptimizerSpec& opt,
                                   const StepPlan& plan, const RunConfig& cfg, std::int64_t iters,
                                   const DiagConfig& diag) {
  std::vector<SeedRun> runs(cfg.seeds.size());
  for_each_seed(cfg.seeds.size(), [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    const JointPoint init = build_init(cfg.init, problem, seed, cfg.base_dir);
    runs[i].seed = seed;
    // Constraints were checked once up front.
    runs[i].result =
        run(problem, opt.kind, plan, init, iters, diag, RngStream(seed, kStreamOptimizer), true);
  });
  return runs;
}

std::string params_csv(const Vec& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) out += format_double(v(i)) + "\n";
  return out;
}

std::string file_safe(const std::string& label) {
  std::string out;
  for (char ch : label) out += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  return out;
}

// Writes per-seed traces and final parameters and returns the per-seed summaries.
json write_seed_outputs(const fs::path& out, const std::string& prefix,
                        const std::vector<SeedRun>& runs, const RunConfig& cfg, bool exact) {
  json per_seed = json::array();
  for (const auto& r : runs) {
    const std::string tag = prefix + "seed" + std::to_string(r.seed);
    const std::string trace_name = "trace_" + tag + ".csv";
    write_text(out / trace_name, trace_csv(r.result.trace, cfg.hash, r.seed));
    write_text(out / ("final_x_" + tag + ".csv"), params_csv(r.result.final_point.x));
    write_text(out / ("final_y_" + tag + ".csv"), params_csv(r.result.final_point.y));

    json rate = nullptr;
    try {
      rate = rate_summary(r.result.trace, exact).to_json();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InsufficientData) throw;
    }
    std::int64_t uncertain = 0;
    for (const auto& t : r.result.trace) uncertain += t.phi_uncertain ? 1 : 0;
    per_seed.push_back({{"seed", r.seed},
                        {"trace", trace_name},
                        {"rows", r.result.trace.size()},
                        {"trace_min_h", opt_json(trace_min_h(r.result.trace))},
                        {"final", metrics_json(r.result.final_metrics)},
                        {"counters", counters_json(r.result.counters)},
                        {"inner_warnings", r.result.inner_warnings},
                        {"phi_uncertain_rows", uncertain},
                        {"rate", rate},
                        {"final_params",
                         {{"x", "final_x_" + tag + ".csv"}, {"y", "final_y_" + tag + ".csv"}}}});
  }
  return per_seed;
}

json aggregate(const std::vector<SeedRun>& runs) {
  std::vector<double> dist, h, loss, min_h;
  for (const auto& r : runs) {
    const auto& f = r.result.final_metrics;
    if (f.dist) dist.push_back(*f.dist);
    if (f.h) h.push_back(*f.h);
    if (f.loss) loss.push_back(*f.loss);
    if (auto m = trace_min_h(r.result.trace)) min_h.push_back(*m);
  }
  return {{"final_dist", mean_std(dist)},
          {"final_h", mean_std(h)},
          {"final_loss", mean_std(loss)},
          {"trace_min_h", mean_std(min_h)}};
}

json provenance(const RunConfig& cfg, const Problem& problem, const std::string& command) {
  json seeds = json::array();
  for (auto s : cfg.seeds) seeds.push_back(s);
  return {{"command", command},
          {"config_hash", cfg.hash},
          {"version", version()},
          {"seeds", seeds},
          {"seeds_source", cfg.seeds_source},
          {"problem", problem.describe()},
          {"constants", constants_json(problem)},
          {"nonsmooth", problem.nonsmooth()},
          {"waive_constraints", cfg.waive_constraints},
          {"diag",
           {{"interval", cfg.diag.interval},
            {"h", cfg.diag.h},
            {"lyapunov", cfg.diag.lyapunov},
            {"inner_tol", cfg.diag.inner->tol},
            {"inner_budget", cfg.diag.inner->max_iters}}}};
}

bool exact_gradients(const Problem& p) { return p.constants().sigma() == 0.0 && !p.mlp_backed(); }

std::int64_t lcm_all(const std::vector<std::int64_t>& v) {
  std::int64_t out = 1;
  for (auto c : v) out = std::lcm(out, c);
  return out;
}

}  // namespace

json cmd_run(const fs::path& config_path, const CliOptions& cli) {
  const RunConfig cfg = load_config(config_path, cli);
  if (cfg.optimizers.size() != 1) {
    fail(ErrorKind::Config, "run: config must name exactly one 'optimizer'");
  }
  const ProblemPtr problem = build_problem(cfg.problem, cfg.base_dir);
  const OptimizerSpec& opt = cfg.optimizers.front();
  const StepPlan plan = build_plan(opt.steps, opt, *problem);
  if (!cfg.waive_constraints) check_plan(*problem, opt.kind, plan, cfg.iters);

  const auto runs = run_all_seeds(*problem, opt, plan, cfg, cfg.iters, cfg.diag);
  const fs::path out = resolve_out_dir(cfg);
  fs::create_directories(out);

  json summary = provenance(cfg, *problem, "run");
  summary["optimizer"] = describe(opt.kind);
  summary["optimizer_label"] = opt.label;
  summary["steps"] = plan.describe();
  summary["iters"] = cfg.iters;
  summary["per_seed"] = write_seed_outputs(out, "", runs, cfg, exact_gradients(*problem));
  summary["aggregate"] = aggregate(runs);
  write_json(out / "summary.json", summary);
  return summary;
}

json cmd_compare(const fs::path& config_path, const CliOptions& cli) {
  const RunConfig cfg = load_config(config_path, cli);
  if (cfg.optimizers.size() < 2) {
    fail(ErrorKind::Config, "compare: config must list at least two entries in 'optimizers'");
  }
  const ProblemPtr problem = build_problem(cfg.problem, cfg.base_dir);

  std::vector<std::int64_t> costs;
  std::vector<StepPlan> plans;
  for (const auto& opt : cfg.optimizers) {
    const int c = grad_evals_per_step(opt.kind);
    if (c == 0) {
      fail(ErrorKind::Config, "compare: '" + opt.label +
                                  "' has a variable gradient cost per step (sgdmax) and cannot be "
                                  "aligned on a gradient-evaluation grid");
    }
    costs.push_back(c);
    plans.push_back(build_plan(opt.steps, opt, *problem));
  }
  // Grid spacing: every method reaches each multiple of delta exactly.
  const std::int64_t delta = lcm_all(costs);
  const std::int64_t max_cost = *std::max_element(costs.begin(), costs.end());
  const json section = cfg.extra.value("compare", json::object());
  std::int64_t budget = section.contains("grad_budget") ? section.at("grad_budget").get<std::int64_t>()
                                                        : cfg.iters * max_cost;
  budget -= budget % delta;
  const std::int64_t stride_evals = delta * cfg.diag.interval;

  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (!cfg.waive_constraints) {
      check_plan(*problem, cfg.optimizers[i].kind, plans[i], budget / costs[i]);
    }
  }

  const fs::path out = resolve_out_dir(cfg);
  fs::create_directories(out);
  const bool exact = exact_gradients(*problem);

  std::vector<std::vector<SeedRun>> all;
  json table = json::object();
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto& opt = cfg.optimizers[i];
    DiagConfig diag = cfg.diag;
    diag.interval = stride_evals / costs[i];
    const std::int64_t steps = budget / costs[i];
    auto runs = run_all_seeds(*problem, opt, plans[i], cfg, steps, diag);
    json entry;
    entry["optimizer"] = describe(opt.kind);
    entry["steps"] = plans[i].describe();
    entry["iters"] = steps;
    entry["grad_evals_per_step"] = costs[i];
    entry["per_seed"] = write_seed_outputs(out, file_safe(opt.label) + "_", runs, cfg, exact);
    entry["aggregate"] = aggregate(runs);
    table[opt.label] = std::move(entry);
    all.push_back(std::move(runs));
  }

  // Merged CSV of seed means at shared gradient-evaluation counts.
  const std::int64_t rows = budget / stride_evals + 1;
  std::ostringstream csv;
  csv << "# config_hash=" << cfg.hash << " version=" << version() << '\n' << "grad_evals";
  static const char* const kCols[] = {"k", "grad_x_norm", "grad_y_norm", "h", "V", "dist", "loss"};
  for (const auto& opt : cfg.optimizers) {
    for (const char* col : kCols) csv << ',' << opt.label << ':' << col;
  }
  csv << '\n';
  for (std::int64_t j = 0; j < rows; ++j) {
    const std::int64_t evals = j * stride_evals;
    csv << evals;
    for (std::size_t i = 0; i < all.size(); ++i) {
      std::vector<const TraceRecord*> recs;
      for (const auto& r : all[i]) {
        const auto& tr = r.result.trace;
        const auto jj = static_cast<std::size_t>(j);
        if (jj < tr.size()) {
          recs.push_back(&tr[jj]);
        } else if (evals == r.result.final_metrics.grad_evals) {
          recs.push_back(&r.result.final_metrics);
        }
      }
      if (recs.size() != all[i].size()) {
        for (std::size_t c = 0; c < std::size(kCols); ++c) csv << ',';
        continue;
      }
      for (const auto* rec : recs) {
        if (rec->grad_evals != evals) {
          fail(ErrorKind::Diagnostic, "compare: misaligned row for '" + cfg.optimizers[i].label + "'");
        }
      }
      auto mean_of = [&](auto get) -> std::optional<double> {
        double sum = 0.0;
        for (const auto* rec : recs) {
          const std::optional<double> v = get(*rec);
          if (!v) return std::nullopt;
          sum += *v;
        }
        return sum / static_cast<double>(recs.size());
      };
      csv << ',' << recs.front()->k;
      for (const auto& v :
           {mean_of([](const TraceRecord& r) { return std::optional<double>(r.grad_x_norm); }),
            mean_of([](const TraceRecord& r) { return std::optional<double>(r.grad_y_norm); }),
            mean_of([](const TraceRecord& r) { return r.h; }),
            mean_of([](const TraceRecord& r) { return r.V; }),
            mean_of([](const TraceRecord& r) { return r.dist; }),
            mean_of([](const TraceRecord& r) { return r.loss; })}) {
        csv << ',';
        if (v) csv << format_double(*v);
      }
    }
    csv << '\n';
  }
  write_text(out / "compare.csv", csv.str());

  json report = provenance(cfg, *problem, "compare");
  report["grad_budget"] = budget;
  report["grid_spacing"] = delta;
  report["row_spacing"] = stride_evals;
  report["merged_csv"] = "compare.csv";
  report["entries"] = std::move(table);
  write_json(out / "compare.json", report);
  return report;
}

json cmd_pselect(const fs::path& config_path, const CliOptions& cli) {
  const RunConfig cfg = load_config(config_path, cli);
  const ProblemPtr problem = build_problem(cfg.problem, cfg.base_dir);
  const auto& c = problem->constants();
  const json section = cfg.extra.value("pselect", json::object());
  for (const auto& [k, _] : section.items()) {
    if (k != "n_grid" && k != "probe_iters" && k != "phi_lower_bound" && k != "N2") {
      fail(ErrorKind::Config, "pselect: unknown key '" + k + "'");
    }
  }

  // Probe with the configured optimizer, or RSGDA at the boundary p with
  // constraint-saturating constant steps.
  OptimizerSpec probe_opt;
  if (!cfg.optimizers.empty()) {
    probe_opt = cfg.optimizers.front();
  } else {
    probe_opt.label = "probe";
    probe_opt.kind = Rsgda{};
    probe_opt.raw = {{"kind", "rsgda"}, {"p", "boundary"}};
    probe_opt.steps = {{"kind", "corollary"}};
  }
  const StepPlan plan = build_plan(probe_opt.steps, probe_opt, *problem);
  const std::int64_t probe_iters = section.value("probe_iters", std::int64_t{100});
  if (probe_iters < 1) fail(ErrorKind::Config, "pselect.probe_iters must be >= 1");
  if (!cfg.waive_constraints) check_plan(*problem, probe_opt.kind, plan, probe_iters);

  DiagConfig diag = cfg.diag;
  diag.interval = 1;
  diag.h = false;
  diag.lyapunov = true;
  const std::uint64_t seed = cfg.seeds.front();
  const RunResult probe =
      run(*problem, probe_opt.kind, plan, build_init(cfg.init, *problem, seed, cfg.base_dir),
          probe_iters, diag, RngStream(seed, kStreamOptimizer), true);

  std::vector<double> vs;
  for (const auto& r : probe.trace) {
    if (r.V) vs.push_back(*r.V);
  }
  if (probe.final_metrics.V) vs.push_back(*probe.final_metrics.V);
  if (vs.empty()) {
    fail(ErrorKind::Capability, "pselect: the probe cannot evaluate V on " + problem->name());
  }
  for (double v : vs) {
    if (!std::isfinite(v) || std::abs(v) > 1e12) {
      fail(ErrorKind::Diagnostic, "pselect: probe diverged (V = " + format_double(v) + ")");
    }
  }
  const double v_start = vs.front();
  const double v_min = *std::min_element(vs.begin(), vs.end());
  const bool configured_lb = section.contains("phi_lower_bound");
  const double lower = configured_lb ? section.at("phi_lower_bound").get<double>() : v_min;
  const double delta = std::max(0.0, v_start - lower);
  const double alpha = plan.alpha(0);

  std::vector<double> grid;
  if (section.contains("n_grid")) {
    for (const auto& n : section.at("n_grid")) grid.push_back(n.get<double>());
  } else {
    for (int e = 2; e <= 8; ++e) grid.push_back(std::pow(10.0, e));
  }
  std::ostringstream csv;
  csv << "# config_hash=" << cfg.hash << " version=" << version() << "\nn,p,p_sqrt_n\n";
  json curve = json::array();
  for (double n : grid) {
    const double p = optimal_p(c, delta, alpha, n);
    csv << format_double(n) << ',' << format_double(p) << ',' << format_double(p * std::sqrt(n)) << '\n';
    curve.push_back({{"n", n}, {"p", p}, {"p_sqrt_n", p * std::sqrt(n)}});
  }

  // The induced schedule holds the boundary p until the variance term takes
  // over, i.e. until p1(n) drops below p2.
  const double p2 = p_boundary(c);
  json schedule = {{"p0", p2}, {"clamp_to_p0", true}};
  if (c.sigma() > 0.0 && delta > 0.0) {
    const double k2 = c.kappa() * c.kappa();
    const double x_per_n = 648.0 * alpha * alpha * k2 * k2 * c.l1() * c.sigma() * c.sigma();
    const double r = 2.0 * delta / p2 - delta;
    const auto n1 = static_cast<std::int64_t>(std::ceil((r * r - delta * delta) / (delta * x_per_n)));
    const std::int64_t n1c = std::max<std::int64_t>(0, n1);
    schedule["N1"] = n1c;
    schedule["N2"] = section.value("N2", std::max<std::int64_t>(1, n1c));
  } else {
    schedule["N1"] = nullptr;
    schedule["N2"] = nullptr;
    schedule["note"] = "p stays at p0 for every horizon";
  }

  write_text(fs::path(resolve_out_dir(cfg)) / "pselect.csv", csv.str());
  json report = provenance(cfg, *problem, "pselect");
  report["delta"] = delta;
  report["alpha"] = alpha;
  report["p_boundary"] = p2;
  report["probe"] = {{"iters", probe_iters},
                     {"optimizer", describe(probe_opt.kind)},
                     {"steps", plan.describe()},
                     {"V_start", v_start},
                     {"V_min", v_min},
                     {"lower_bound", lower},
                     {"lower_bound_source", configured_lb ? "config" : "probe minimum of V"}};
  report["curve"] = std::move(curve);
  report["curve_csv"] = "pselect.csv";
  report["schedule"] = std::move(schedule);
  write_json(fs::path(resolve_out_dir(cfg)) / "pselect.json", report);
  return report;
}

json cmd_check(const fs::path& config_path, const CliOptions& cli) {
  const RunConfig cfg = load_config(config_path, cli);
  const ProblemPtr problem = build_problem(cfg.problem, cfg.base_dir);
  const json section = cfg.extra.value("check", json::object());
  for (const auto& [k, _] : section.items()) {
    static const std::set<std::string> keys{"trials", "points", "sweep_points", "p_grid",
                                            "alpha_fraction"};
    if (!keys.count(k)) fail(ErrorKind::Config, "check: unknown key '" + k + "'");
  }
  const std::uint64_t seed = cfg.seeds.front();
  RngStream rng(seed, kStreamCheck);

  OracleCheckOptions oo;
  oo.trials = section.value("trials", 1000);
  oo.points = section.value("points", 10);
  if (oo.trials < 100) fail(ErrorKind::Config, "check.trials must be >= 100");
  const OracleReport oracle = evaluate_oracle(*problem, oo, rng);

  json report = provenance(cfg, *problem, "check");
  report["oracle"] = oracle.to_json();
  bool passed = oracle.passed();
  const int sweep_points = section.value("sweep_points", 1000);

  if (problem->nash_point() && problem->pl_in_y()) {
    std::vector<double> grid = {0.1, 0.25, 0.4, 0.5, 0.75};
    if (section.contains("p_grid")) grid = section.at("p_grid").get<std::vector<double>>();
    const double frac = section.value("alpha_fraction", 0.5);
    const auto& k = problem->constants();
    json rows = json::array();
    bool all_hold = true;
    for (double p : grid) {
      const double alpha = p < 1.0 ? frac * 2.0 * p * k.mu() / ((1.0 - p) * k.l1() * k.l1()) : frac;
      int violations = 0;
      double worst = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < sweep_points; ++i) {
        const ContractionReport r = contraction_check(*problem, problem->sample_point(rng), alpha, p);
        worst = std::max(worst, r.measured_ratio - r.rho);
        if (!r.holds) ++violations;
      }
      all_hold = all_hold && violations == 0;
      rows.push_back({{"p", p}, {"alpha", alpha}, {"points", sweep_points},
                      {"violations", violations}, {"max_excess", worst}});
    }
    report["contraction"] = {{"passed", all_hold}, {"tolerance", 1e-12}, {"grid", rows}};
    passed = passed && all_hold;
  } else if (problem->has_closed_phi() && !problem->mlp_backed()) {
    // The descent inequality is an exact-gradient statement; sweep the
    // noise-free version of the configured problem.
    json spec = cfg.problem;
    spec["params"]["sigma"] = 0.0;
    const ProblemPtr exact = build_problem(spec, cfg.base_dir);
    const auto& k = exact->constants();
    const double p2 = p_boundary(k);
    int violations = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < sweep_points; ++i) {
      const double p = (0.01 + 0.99 * rng.uniform()) * p2;
      const StepBounds b = step_constraints(k, p);
      const double alpha = (0.01 + 0.99 * rng.uniform()) * b.alpha_max;
      const double eta = b.eta_lo(alpha) + rng.uniform() * (b.eta_hi - b.eta_lo(alpha));
      const DescentReport r = descent_check(*exact, exact->sample_point(rng), alpha, eta, p);
      worst = std::min(worst, r.residual);
      if (r.residual < -1e-10) ++violations;
    }
    report["descent"] = {{"passed", violations == 0}, {"points", sweep_points},
                         {"violations", violations}, {"min_residual", worst},
                         {"tolerance", 1e-10}};
    passed = passed && violations == 0;
  } else {
    report["sweep_skipped"] = problem->pl_in_y()
                                  ? "no closed-form phi or constants are estimates"
                                  : "problem is not PL in y";
  }
  report["passed"] = passed;
  write_json(fs::path(resolve_out_dir(cfg)) / "check.json", report);
  return report;
}

}  // namespace rsgda::harness
