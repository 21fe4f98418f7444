#include "app.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "curve_io.hpp"
#include "run_config.hpp"
#include "slasso/error.hpp"
#include "slasso/estimator.hpp"
#include "slasso/format.hpp"
#include "slasso/inference.hpp"
#include "slasso/selection.hpp"
#include "slasso/simlab.hpp"

namespace fof {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kNullTol = 1e-8;

struct CommonFlags {
  std::optional<std::string> config, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<int> k1, k2, M1, M2, ms, mt, K, memory, max_iters, surface_points;
  std::optional<double> k_se, gamma, tol_pg, tol_obj;
  std::optional<std::string> lambda_s, lambda_t, lambda_l;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "RunConfig JSON file");
  sub->add_option("--out", f.out, "output directory (default: output.dir or .)");
  sub->add_option("--seed", f.seed, "seed for every random draw");
  sub->add_option("--jobs", f.jobs, "worker threads (default: FOF_SLASSO_JOBS or 1)");
  sub->add_option("--k1", f.k1, "spline order along s");
  sub->add_option("--k2", f.k2, "spline order along t");
  sub->add_option("--M1", f.M1, "interior knots along s");
  sub->add_option("--M2", f.M2, "interior knots along t");
  sub->add_option("--ms", f.ms, "roughness penalty order along s");
  sub->add_option("--mt", f.mt, "roughness penalty order along t");
  sub->add_option("--lambda-s", f.lambda_s, "lambda_s value or comma-separated grid");
  sub->add_option("--lambda-t", f.lambda_t, "lambda_t value or comma-separated grid");
  sub->add_option("--lambda-l", f.lambda_l, "lambda_L value or comma-separated grid");
  sub->add_option("--K", f.K, "cross-validation folds");
  sub->add_option("--k-se", f.k_se, "standard-error multiplier of the selection rule");
  sub->add_option("--memory", f.memory, "L-BFGS memory");
  sub->add_option("--gamma", f.gamma, "line-search sufficient decrease constant");
  sub->add_option("--tol-pg", f.tol_pg, "pseudo-gradient tolerance");
  sub->add_option("--tol-obj", f.tol_obj, "relative objective tolerance");
  sub->add_option("--max-iters", f.max_iters, "solver iteration limit");
  sub->add_option("--surface-points", f.surface_points, "points per axis of the exported surface");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig cfg;
  if (f.config) apply_config_json(cfg, read_text(*f.config), *f.config);
  if (f.out) cfg.out_dir = *f.out;
  if (f.seed) cfg.seed = *f.seed;
  if (f.k1) cfg.bases.k1 = *f.k1;
  if (f.k2) cfg.bases.k2 = *f.k2;
  if (f.M1) cfg.bases.M1 = *f.M1;
  if (f.M2) cfg.bases.M2 = *f.M2;
  if (f.ms) cfg.bases.m_s = *f.ms;
  if (f.mt) cfg.bases.m_t = *f.mt;
  if (f.lambda_s) cfg.lambda_s = parse_lambda_list(*f.lambda_s, "--lambda-s");
  if (f.lambda_t) cfg.lambda_t = parse_lambda_list(*f.lambda_t, "--lambda-t");
  if (f.lambda_l) cfg.lambda_l = parse_lambda_list(*f.lambda_l, "--lambda-l");
  if (f.K) cfg.K = *f.K;
  if (f.k_se) cfg.k_se = *f.k_se;
  if (f.memory) cfg.solver.memory = *f.memory;
  if (f.gamma) cfg.solver.gamma = *f.gamma;
  if (f.tol_pg) cfg.solver.tol_pg = *f.tol_pg;
  if (f.tol_obj) cfg.solver.tol_obj = *f.tol_obj;
  if (f.max_iters) cfg.solver.max_iters = *f.max_iters;
  if (f.surface_points) cfg.surface_points = *f.surface_points;
  cfg.validate();
  return cfg;
}

int resolve_jobs(const CommonFlags& f) {
  if (f.jobs) {
    if (*f.jobs < 1) throw UsageError("--jobs must be >= 1");
    return *f.jobs;
  }
  if (const char* env = std::getenv("FOF_SLASSO_JOBS")) {
    const auto v = parse_double(env);
    if (!v || *v < 1 || *v != static_cast<int>(*v)) throw UsageError("FOF_SLASSO_JOBS must be a positive integer");
    return static_cast<int>(*v);
  }
  return 1;
}

ordered_json params_json(const slasso::PenaltyParams& p) {
  ordered_json j;
  j["lambda_s"] = p.lambda_s;
  j["lambda_t"] = p.lambda_t;
  j["lambda_l"] = p.lambda_l;
  j["k1"] = p.k1;
  j["k2"] = p.k2;
  j["M1"] = p.M1;
  j["M2"] = p.M2;
  j["ms"] = p.m_s;
  j["mt"] = p.m_t;
  return j;
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += slasso::format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

std::pair<slasso::FunctionalSample, slasso::FunctionalSample> read_pair(const std::string& x, const std::string& y) {
  slasso::FunctionalSample X = read_curve_file(x).sample;
  slasso::FunctionalSample Y = read_curve_file(y).sample;
  if (X.n() != Y.n())
    throw ParseError(x + " has " + std::to_string(X.n()) + " curves but " + y + " has " + std::to_string(Y.n()));
  return {std::move(X), std::move(Y)};
}

// --- fit -----------------------------------------------------------------

struct FitFlags {
  std::string x, y;
};

int cmd_fit(const CommonFlags& common, const FitFlags& ff, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve(common);
  const auto [X, Y] = read_pair(ff.x, ff.y);
  const slasso::PenaltyParams params = cfg.fixed_params();
  const slasso::FitResult fit = slasso::fit(X, Y, params, cfg.solver);

  const auto& bs = fit.surface.basis_s();
  const auto& bt = fit.surface.basis_t();
  const slasso::Grid gs = slasso::Grid::uniform(bs.lo(), bs.hi(), cfg.surface_points);
  const slasso::Grid gt = slasso::Grid::uniform(bt.lo(), bt.hi(), cfg.surface_points);
  const Eigen::MatrixXd values = fit.surface.eval_grid(gs, gt);
  std::string surface = "s,t,value\n";
  for (std::size_t i = 0; i < gs.size(); ++i)
    for (std::size_t j = 0; j < gt.size(); ++j)
      surface += slasso::format_double(gs[i]) + ',' + slasso::format_double(gt[j]) + ',' +
                 slasso::format_double(values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) + '\n';

  ordered_json meta;
  meta["estimator"] = params.lambda_l == 0.0 ? "smooth" : "slasso";
  meta["params"] = params_json(fit.params);
  meta["n"] = X.n();
  meta["dim_s"] = bs.dim();
  meta["dim_t"] = bt.dim();
  meta["domain_s"] = {bs.lo(), bs.hi()};
  meta["domain_t"] = {bt.lo(), bt.hi()};
  ordered_json solver;
  solver["iterations"] = fit.report.iterations;
  solver["reason"] = std::string(slasso::to_string(fit.report.reason));
  solver["pg_norm"] = fit.report.pg_norm;
  solver["objective"] = fit.report.objective_trace.empty() ? 0.0 : fit.report.objective_trace.back();
  solver["warning"] = fit.warning();
  meta["solver"] = solver;
  meta["surface_points"] = cfg.surface_points;
  meta["null_region_tol"] = kNullTol;
  meta["null_region_fraction"] = slasso::null_region_fraction(fit.surface, gs, gt, kNullTol);

  const fs::path dir = cfg.out_dir;
  write_text(dir / "coefficients.csv", matrix_csv(fit.surface.coefficients()));
  write_text(dir / "surface.csv", surface);
  write_json(dir / "fit.json", meta);
  if (fit.warning())
    err << "warning: solver stopped at the iteration limit (pg norm " << slasso::format_double(fit.report.pg_norm)
        << ")\n";
  out << "wrote " << (dir / "coefficients.csv").string() << ", " << (dir / "surface.csv").string() << ", "
      << (dir / "fit.json").string() << "\n";
  return 0;
}

// --- cv ------------------------------------------------------------------

int cmd_cv(const CommonFlags& common, const FitFlags& ff, std::ostream& out) {
  const RunConfig cfg = resolve(common);
  const auto [X, Y] = read_pair(ff.x, ff.y);
  const slasso::CvTable table =
      slasso::grid_search(X, Y, cfg.bases, cfg.grids(), cfg.K, cfg.seed, cfg.solver, resolve_jobs(common));
  const slasso::CvRow best = slasso::select_k_se(table, cfg.k_se);

  std::string csv = "lambda_s,lambda_t,lambda_l,cv_error,se\n";
  for (const auto& r : table)
    csv += slasso::format_double(r.lambda_s) + ',' + slasso::format_double(r.lambda_t) + ',' +
           slasso::format_double(r.lambda_l) + ',' + slasso::format_double(r.cv_error) + ',' +
           slasso::format_double(r.se) + '\n';
  ordered_json choice;
  choice["params"] = params_json(slasso::with_lambdas(cfg.bases, best));
  choice["cv_error"] = best.cv_error;
  choice["se"] = best.se;
  choice["K"] = cfg.K;
  choice["k_se"] = cfg.k_se;
  choice["seed"] = cfg.seed;
  choice["rows"] = table.size();

  const fs::path dir = cfg.out_dir;
  write_text(dir / "cv_table.csv", csv);
  write_json(dir / "cv_choice.json", choice);
  out << "chose lambda_s=" << slasso::format_double(best.lambda_s) << " lambda_t=" << slasso::format_double(best.lambda_t)
      << " lambda_l=" << slasso::format_double(best.lambda_l) << "\n";
  return 0;
}

// --- simulate / generate -------------------------------------------------

struct SimFlags {
  std::string scenario;
  int n = 150;
  int n_test = 1000;
  int reps = 1;
  double msn = 4.0;
  std::string estimators = "slasso,smooth";
  bool randomize_basis = false;
  std::optional<double> noise_scale;
};

slasso::SimConfig sim_config(const SimFlags& sf, std::uint64_t seed) {
  slasso::SimConfig sc;
  try {
    sc.scenario = slasso::parse_scenario(sf.scenario);
  } catch (const slasso::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  sc.n_train = sf.n;
  sc.n_test = sf.n_test;
  sc.seed = seed;
  sc.msn_target = sf.msn;
  sc.randomize_basis_counts = sf.randomize_basis;
  sc.noise_scale = sf.noise_scale;
  try {
    sc.validate();
  } catch (const slasso::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return sc;
}

int cmd_simulate(const CommonFlags& common, const SimFlags& sf, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve(common);
  const slasso::SimConfig sc = sim_config(sf, cfg.seed);
  if (sf.reps < 1) throw UsageError("--reps must be >= 1");
  std::vector<slasso::EstimatorKind> kinds;
  for (const std::string& name : split_csv_line(sf.estimators)) {
    if (name == "slasso")
      kinds.push_back(slasso::EstimatorKind::slasso);
    else if (name == "smooth")
      kinds.push_back(slasso::EstimatorKind::smooth);
    else
      throw UsageError("unknown estimator '" + name + "' (expected slasso or smooth)");
  }
  slasso::SelectionSpec sel;
  sel.base = cfg.bases;
  sel.grids = cfg.grids();
  sel.K = cfg.K;
  sel.k_se = cfg.k_se;
  sel.solver = cfg.solver;
  const auto rows = slasso::run_replications(sc, kinds, sf.reps, sel, resolve_jobs(common));
  int failed = 0;
  for (const auto& r : rows)
    if (!r.error.empty()) {
      ++failed;
      err << "replicate " << r.replicate << " (" << slasso::to_string(r.estimator) << "): " << r.error << "\n";
    }
  const fs::path path = fs::path(cfg.out_dir) / "replications.csv";
  write_text(path, slasso::replications_csv(rows));
  out << "wrote " << path.string() << " (" << rows.size() << " rows, " << failed << " failed)\n";
  return 0;
}

int cmd_generate(const CommonFlags& common, const SimFlags& sf, std::ostream& out) {
  const RunConfig cfg = resolve(common);
  const slasso::SimDataset ds = slasso::gen_dataset(sim_config(sf, cfg.seed));
  const fs::path dir = cfg.out_dir;
  write_text(dir / "X.csv", curve_csv(ds.X_train));
  write_text(dir / "Y.csv", curve_csv(ds.Y_train));
  write_text(dir / "X_test.csv", curve_csv(ds.X_test));
  write_text(dir / "Y_test.csv", curve_csv(ds.Y_test));
  out << "wrote " << ds.X_train.n() << " training and " << ds.X_test.n() << " test curves to " << dir.string()
      << " (noise scale " << slasso::format_double(ds.noise_k) << ")\n";
  return 0;
}

// --- permtest --------------------------------------------------------------

struct PermFlags {
  std::string x, y;
  int n_perm = 99;
  double percentile = 0.95;
};

int cmd_permtest(const CommonFlags& common, const PermFlags& pf, std::ostream& out) {
  const RunConfig cfg = resolve(common);
  if (pf.n_perm < 1) throw UsageError("--n-perm must be >= 1");
  if (!(pf.percentile >= 0.0 && pf.percentile <= 1.0)) throw UsageError("--percentile must lie in [0, 1]");
  const auto [X, Y] = read_pair(pf.x, pf.y);
  const slasso::PenaltyParams params = cfg.fixed_params();
  const slasso::PermutationTest res =
      slasso::permutation_test(X, Y, params, pf.n_perm, cfg.seed, cfg.solver, pf.percentile, resolve_jobs(common));

  ordered_json j;
  j["observed"] = res.global.observed;
  j["permuted"] = res.global.permuted;
  j["p_value"] = res.global.p_value;
  j["n_perm"] = res.global.n_perm;
  j["seed"] = res.global.seed;
  j["percentile"] = pf.percentile;
  j["params"] = params_json(params);
  std::size_t exceed = 0;
  for (bool b : res.pointwise.exceeds) exceed += b;
  j["exceedance_points"] = exceed;

  std::string csv = "t,observed,envelope,exceeds\n";
  const auto& pw = res.pointwise;
  for (std::size_t k = 0; k < pw.grid.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    csv += slasso::format_double(pw.grid[k]) + ',' + slasso::format_double(pw.observed[i]) + ',' +
           slasso::format_double(pw.envelope[i]) + ',' + (pw.exceeds[k] ? "1" : "0") + '\n';
  }
  const fs::path dir = cfg.out_dir;
  write_json(dir / "permtest.json", j);
  write_text(dir / "envelope.csv", csv);
  out << "global R2 " << slasso::format_double(res.global.observed) << ", p = " << slasso::format_double(res.global.p_value)
      << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Function-on-function regression with the S-LASSO estimator", "fof-slasso"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  CommonFlags common;
  FitFlags ff;
  SimFlags sf;
  PermFlags pf;

  CLI::App* fit = app.add_subcommand("fit", "fit one model and export B, the surface and metadata");
  add_common(fit, common);
  fit->add_option("--x", ff.x, "predictor CurveFile")->required();
  fit->add_option("--y", ff.y, "response CurveFile")->required();

  CLI::App* cv = app.add_subcommand("cv", "K-fold cross-validation over the lambda grids");
  add_common(cv, common);
  cv->add_option("--x", ff.x, "predictor CurveFile")->required();
  cv->add_option("--y", ff.y, "response CurveFile")->required();

  auto add_sim = [&](CLI::App* sub) {
    add_common(sub, common);
    sub->add_option("--scenario", sf.scenario, "I, II, III or IV")->required();
    sub->add_option("--n", sf.n, "training curves");
    sub->add_option("--n-test", sf.n_test, "test curves");
    sub->add_option("--msn", sf.msn, "target modified signal-to-noise ratio");
    sub->add_flag("--randomize-basis", sf.randomize_basis, "draw basis counts from [10, 50]");
    sub->add_option("--noise-scale", sf.noise_scale, "fixed noise scale instead of calibration");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "replicated simulation study");
  add_sim(simulate);
  simulate->add_option("--reps", sf.reps, "replicates");
  simulate->add_option("--estimators", sf.estimators, "comma-separated subset of slasso,smooth");

  CLI::App* generate = app.add_subcommand("generate", "write one simulated dataset as CurveFiles");
  add_sim(generate);

  CLI::App* permtest = app.add_subcommand("permtest", "permutation tests of global and pointwise R2");
  add_common(permtest, common);
  permtest->add_option("--x", pf.x, "predictor CurveFile")->required();
  permtest->add_option("--y", pf.y, "response CurveFile")->required();
  permtest->add_option("--n-perm", pf.n_perm, "number of permutations");
  permtest->add_option("--percentile", pf.percentile, "pointwise envelope percentile");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fit) return cmd_fit(common, ff, out, err);
    if (*cv) return cmd_cv(common, ff, out);
    if (*simulate) return cmd_simulate(common, sf, out, err);
    if (*generate) return cmd_generate(common, sf, out);
    if (*permtest) return cmd_permtest(common, pf, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const slasso::InvalidArgument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const slasso::ShapeError& e) {
    err << "shape error: " << e.what() << "\n";
    return 2;
  } catch (const slasso::DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const slasso::SolverStall& e) {
    err << "solver failure: " << e.what() << "\n";
    return 1;
  } catch (const slasso::NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace fof
