#include "slasso/simlab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "slasso/error.hpp"
#include "slasso/format.hpp"
#include "slasso/parallel.hpp"
#include "slasso/quadrature.hpp"

namespace slasso {

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::I: return "I";
    case Scenario::II: return "II";
    case Scenario::III: return "III";
    case Scenario::IV: return "IV";
  }
  return "?";
}

Scenario parse_scenario(std::string_view text) {
  std::string up(text);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "I" || up == "1") return Scenario::I;
  if (up == "II" || up == "2") return Scenario::II;
  if (up == "III" || up == "3") return Scenario::III;
  if (up == "IV" || up == "4") return Scenario::IV;
  throw InvalidArgument("unknown scenario '" + std::string(text) + "' (expected I, II, III or IV)");
}

double scenario_beta(Scenario scenario, double s, double t) {
  if (!(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0))
    throw DomainError("scenario_beta: (" + std::to_string(s) + ", " + std::to_string(t) + ") outside [0,1]^2");
  switch (scenario) {
    case Scenario::I:
      return 0.0;
    case Scenario::II: {
      // Paraboloid cap on the disc of radius 0.25 around the centre.
      const double r2 = std::pow((s - 0.5) / 0.25, 2) + std::pow((t - 0.5) / 0.25, 2);
      return r2 <= 1.0 ? 1.0 - r2 : 0.0;
    }
    case Scenario::III: {
      const double rs = std::sqrt(1.0 - (s - 0.5) * (s - 0.5));
      const double rt = std::sqrt(1.0 - (t - 0.5) * (t - 0.5));
      if (t <= 1.05 - rs) return 0.5 * (1.0 - t) * std::sin(10.0 * std::numbers::pi * (t - 1.05 + rs));
      // Never satisfied on [0,1]^2; kept as written.
      if (s <= -0.05 - rt) return 0.5 * std::sin(10.0 * std::numbers::pi * (s + 1.05 + rt));
      return 0.0;
    }
    case Scenario::IV: {
      const double a = (t - 0.5) / 0.5;
      const double b = (s - 0.5) / 0.5;
      return a * a * a + b * b * b + a * a + b * b + 5.0;
    }
  }
  return 0.0;
}

namespace {

struct SplineCurves {
  BSplineBasis basis;
  Eigen::MatrixXd coef;  // n x n_basis
};

SplineCurves draw_spline_curves(int n, int n_basis, double lo, double hi, const NormalDraw& draw) {
  if (n < 1) throw InvalidArgument("curve generation needs n >= 1");
  if (n_basis < 4) throw InvalidArgument("cubic B-spline generation needs at least 4 basis functions");
  BSplineBasis basis = make_basis(lo, hi, 4, n_basis - 4);
  Eigen::MatrixXd coef(n, n_basis);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n_basis; ++j) coef(i, j) = draw();
  return {std::move(basis), std::move(coef)};
}

FunctionalSample sample_curves(const SplineCurves& c, const Grid& grid) {
  return FunctionalSample(grid, c.coef * c.basis.eval_matrix(grid.points()).transpose());
}

NormalDraw normal_from(std::mt19937_64& rng) {
  return [&rng, dist = std::normal_distribution<double>(0.0, 1.0)]() mutable { return dist(rng); };
}

// G(j, l) = int psi_j(s) beta(s, t_l) ds by composite Gauss-Legendre.
Eigen::MatrixXd beta_kernel(const BSplineBasis& basis, Scenario scenario, const Grid& t_grid) {
  constexpr int kPanels = 1000;
  constexpr int kNodes = 4;
  const QuadratureRule ref = gauss_legendre(kNodes);
  std::vector<double> nodes;
  std::vector<double> weights;
  nodes.reserve(kPanels * kNodes);
  weights.reserve(kPanels * kNodes);
  const double h = (basis.hi() - basis.lo()) / kPanels;
  for (int p = 0; p < kPanels; ++p) {
    const double a = basis.lo() + p * h;
    for (int q = 0; q < kNodes; ++q) {
      nodes.push_back(a + 0.5 * h * (ref.nodes[q] + 1.0));
      weights.push_back(0.5 * h * ref.weights[q]);
    }
  }
  const Eigen::MatrixXd psi = basis.eval_matrix(nodes);  // nodes x n_basis
  Eigen::MatrixXd beta(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(t_grid.size()));
  for (std::size_t q = 0; q < nodes.size(); ++q)
    for (std::size_t l = 0; l < t_grid.size(); ++l)
      beta(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(l)) =
          weights[q] * scenario_beta(scenario, nodes[q], t_grid[l]);
  return psi.transpose() * beta;
}

Eigen::VectorXd pointwise_variance(const Eigen::MatrixXd& v) {
  const Eigen::Index n = v.rows();
  if (n < 2) throw CalibrationError("variance estimate needs at least two curves");
  const Eigen::RowVectorXd mean = v.colwise().mean();
  return ((v.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n - 1)).transpose();
}

FunctionalSample stack(const FunctionalSample& a, const FunctionalSample& b) {
  Eigen::MatrixXd v(a.n() + b.n(), a.values.cols());
  v << a.values, b.values;
  return FunctionalSample(a.grid, std::move(v));
}

}  // namespace

FunctionalSample gen_covariates(int n, int n_basis, const Grid& grid, const NormalDraw& draw) {
  return sample_curves(draw_spline_curves(n, n_basis, grid.lo(), grid.hi(), draw), grid);
}

FunctionalSample gen_covariates(int n, int n_basis, const Grid& grid, std::mt19937_64& rng) {
  return gen_covariates(n, n_basis, grid, normal_from(rng));
}

double msn_statistic(const FunctionalSample& signal, const FunctionalSample& noise) {
  if (!signal.grid.matches(noise.grid)) throw ShapeError("msn_statistic: signal and noise grids differ");
  const Eigen::VectorXd vs = pointwise_variance(signal.values);
  const Eigen::VectorXd ve = pointwise_variance(noise.values);
  const auto pts = signal.grid.points();
  const double int_vs = trapezoid(std::span<const double>(vs.data(), vs.size()), pts);
  const double int_ve = trapezoid(std::span<const double>(ve.data(), ve.size()), pts);
  if (!(int_ve > 0.0)) throw CalibrationError("msn_statistic: noise has zero variance");
  return (int_vs + vs.maxCoeff()) / int_ve;
}

NoiseCalibration calibrate_noise(const FunctionalSample& signal, const FunctionalSample& raw_errors,
                                 double msn_target) {
  if (!(msn_target > 0.0) || !std::isfinite(msn_target))
    throw InvalidArgument("calibrate_noise: target must be positive and finite");
  const double raw = msn_statistic(signal, raw_errors);
  if (!(raw > 0.0))
    throw CalibrationError("calibrate_noise: signal has zero variance, no noise scale reaches the target");
  const double k = std::sqrt(raw / msn_target);
  return NoiseCalibration{k, FunctionalSample(raw_errors.grid, k * raw_errors.values)};
}

void SimConfig::validate() const {
  if (n_train < 1 || n_test < 1) throw InvalidArgument("simulation sample sizes must be >= 1");
  if (!(msn_target > 0.0)) throw InvalidArgument("msn target must be positive");
  if (n_basis_x < 4 || n_basis_eps < 4) throw InvalidArgument("generation bases need at least 4 functions");
  if (grid_points < 2) throw InvalidArgument("simulation grid needs at least 2 points");
  if (noise_scale && !(*noise_scale >= 0.0)) throw InvalidArgument("noise scale must be non-negative");
}

SimDataset gen_dataset(const SimConfig& cfg) {
  cfg.validate();
  const auto lo32 = static_cast<std::uint32_t>(cfg.seed);
  const auto hi32 = static_cast<std::uint32_t>(cfg.seed >> 32);
  auto stream = [&](std::uint32_t id) {
    std::seed_seq seq{lo32, hi32, id};
    return std::mt19937_64(seq);
  };

  int nbx = cfg.n_basis_x;
  int nbe = cfg.n_basis_eps;
  if (cfg.randomize_basis_counts) {
    auto rng = stream(3);
    std::uniform_int_distribution<int> count(10, 50);
    nbx = count(rng);
    nbe = count(rng);
  }

  const Grid grid = Grid::uniform(0.0, 1.0, cfg.grid_points);
  auto rng_train = stream(1);
  auto rng_test = stream(2);
  const SplineCurves x_train = draw_spline_curves(cfg.n_train, nbx, 0.0, 1.0, normal_from(rng_train));
  const SplineCurves e_train = draw_spline_curves(cfg.n_train, nbe, 0.0, 1.0, normal_from(rng_train));
  const SplineCurves x_test = draw_spline_curves(cfg.n_test, nbx, 0.0, 1.0, normal_from(rng_test));
  const SplineCurves e_test = draw_spline_curves(cfg.n_test, nbe, 0.0, 1.0, normal_from(rng_test));

  const Eigen::MatrixXd kernel = beta_kernel(x_train.basis, cfg.scenario, grid);
  FunctionalSample sig_train(grid, x_train.coef * kernel);
  FunctionalSample sig_test(grid, x_test.coef * kernel);
  const FunctionalSample raw_train = sample_curves(e_train, grid);
  const FunctionalSample raw_test = sample_curves(e_test, grid);

  double k = 1.0;
  if (cfg.noise_scale) {
    k = *cfg.noise_scale;
  } else if (cfg.scenario != Scenario::I) {
    k = calibrate_noise(stack(sig_train, sig_test), stack(raw_train, raw_test), cfg.msn_target).k;
  }

  SimDataset ds;
  ds.scenario = cfg.scenario;
  ds.noise_k = k;
  ds.n_basis_x = nbx;
  ds.n_basis_eps = nbe;
  ds.X_train = sample_curves(x_train, grid);
  ds.X_test = sample_curves(x_test, grid);
  ds.Y_train = FunctionalSample(grid, sig_train.values + k * raw_train.values);
  ds.Y_test = FunctionalSample(grid, sig_test.values + k * raw_test.values);
  ds.signal_train = std::move(sig_train);
  ds.signal_test = std::move(sig_test);
  return ds;
}

namespace {

double region_ise(const CoefficientSurface& surface, Scenario scenario, const Grid& gs, const Grid& gt, bool null) {
  const Eigen::MatrixXd est = surface.eval_grid(gs, gt);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < gs.size(); ++i)
    for (std::size_t j = 0; j < gt.size(); ++j) {
      const double b = scenario_beta(scenario, gs[i], gt[j]);
      if ((b == 0.0) != null) continue;
      const double e = est(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - b;
      acc += e * e;
      ++count;
    }
  if (count == 0)
    throw UndefinedRegion(std::string(null ? "null" : "non-null") + " region of scenario " +
                          std::string(to_string(scenario)) + " is empty");
  return acc / static_cast<double>(count);
}

}  // namespace

double ise0(const CoefficientSurface& surface, Scenario scenario, const Grid& grid_s, const Grid& grid_t) {
  return region_ise(surface, scenario, grid_s, grid_t, true);
}

double ise1(const CoefficientSurface& surface, Scenario scenario, const Grid& grid_s, const Grid& grid_t) {
  return region_ise(surface, scenario, grid_s, grid_t, false);
}

Grid ise_grid() { return Grid::uniform(0.0, 1.0, 101); }

double pmse(const FitResult& fit, const FunctionalSample& X_test, const FunctionalSample& Y_test) {
  if (X_test.n() != Y_test.n()) throw ShapeError("pmse: test predictor and response sizes differ");
  if (!Y_test.grid.matches(fit.grid_y)) throw ShapeError("pmse: test response grid differs from training");
  const FunctionalSample yhat = predict(fit, X_test, Y_test.grid);
  const std::vector<double> w = trapezoid_weights(Y_test.grid.points());
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  const Eigen::VectorXd per_curve = (Y_test.values - yhat.values).array().square().matrix() * wv;
  return per_curve.mean();
}

std::string_view to_string(EstimatorKind e) { return e == EstimatorKind::slasso ? "slasso" : "smooth"; }

std::uint64_t replicate_seed(std::uint64_t base, int replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(replicate), 0x5eedu};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {

// ISE over an empty region is reported as NaN in the table.
template <class F>
double or_nan(F&& f) {
  try {
    return f();
  } catch (const UndefinedRegion&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

std::vector<ReplicationRow> run_one(const SimConfig& base_cfg, const std::vector<EstimatorKind>& estimators, int rep,
                                    const SelectionSpec& sel) {
  std::vector<ReplicationRow> rows;
  for (EstimatorKind e : estimators) {
    ReplicationRow row;
    row.replicate = rep;
    row.estimator = e;
    rows.push_back(row);
  }
  try {
    SimConfig cfg = base_cfg;
    cfg.seed = replicate_seed(base_cfg.seed, rep);
    const SimDataset ds = gen_dataset(cfg);
    const CvTable table = grid_search(ds.X_train, ds.Y_train, sel.base, sel.grids, sel.K, cfg.seed, sel.solver, 1);
    const Grid g = ise_grid();
    for (ReplicationRow& row : rows) {
      try {
        FitResult fitted = [&] {
          if (row.estimator == EstimatorKind::slasso) {
            const PenaltyParams p = with_lambdas(sel.base, select_k_se(table, sel.k_se));
            return fit(ds.X_train, ds.Y_train, p, sel.solver);
          }
          CvTable smooth_rows;
          for (const CvRow& r : table)
            if (r.lambda_l == 0.0) smooth_rows.push_back(r);
          if (smooth_rows.empty()) throw InvalidArgument("SMOOTH selection needs lambda_L = 0 in the grid");
          return fit(ds.X_train, ds.Y_train, with_lambdas(sel.base, select_k_se(smooth_rows, 0.0)), sel.solver);
        }();
        row.lambda_s = fitted.params.lambda_s;
        row.lambda_t = fitted.params.lambda_t;
        row.lambda_l = fitted.params.lambda_l;
        row.ise0 = or_nan([&] { return ise0(fitted.surface, cfg.scenario, g, g); });
        row.ise1 = or_nan([&] { return ise1(fitted.surface, cfg.scenario, g, g); });
        row.pmse = pmse(fitted, ds.X_test, ds.Y_test);
        row.null_fraction = null_region_fraction(fitted.surface, g, g, 1e-8);
      } catch (const std::exception& ex) {
        row.error = ex.what();
      }
    }
  } catch (const std::exception& ex) {
    for (ReplicationRow& row : rows) row.error = ex.what();
  }
  return rows;
}

}  // namespace

std::vector<ReplicationRow> run_replications(const SimConfig& cfg, const std::vector<EstimatorKind>& estimators,
                                             int n_reps, const SelectionSpec& selection, int jobs) {
  if (n_reps < 1) throw InvalidArgument("run_replications: need at least one replicate");
  if (estimators.empty()) throw InvalidArgument("run_replications: no estimators requested");
  cfg.validate();
  std::vector<std::vector<ReplicationRow>> per_rep(n_reps);
  parallel_for(n_reps, jobs, [&](std::size_t r) { per_rep[r] = run_one(cfg, estimators, static_cast<int>(r), selection); });
  std::vector<ReplicationRow> out;
  for (auto& rows : per_rep) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

std::string replications_csv(const std::vector<ReplicationRow>& rows) {
  std::ostringstream os;
  os << "replicate,estimator,ise0,ise1,pmse,lambda_s,lambda_t,lambda_l\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const ReplicationRow& r : rows) {
    const bool failed = !r.error.empty();
    os << r.replicate << ',' << to_string(r.estimator) << ',' << format_double(failed ? nan : r.ise0) << ','
       << format_double(failed ? nan : r.ise1) << ',' << format_double(failed ? nan : r.pmse) << ','
       << format_double(r.lambda_s) << ',' << format_double(r.lambda_t) << ',' << format_double(r.lambda_l) << '\n';
  }
  return os.str();
}

}  // namespace slasso
