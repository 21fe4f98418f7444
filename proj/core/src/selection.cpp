#include "slasso/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include "slasso/error.hpp"
#include "slasso/parallel.hpp"
#include "slasso/simlab.hpp"

namespace slasso {

LambdaGrids LambdaGrids::defaults() {
  LambdaGrids g;
  g.lambda_s = log_space(1e-6, 1e2, 7);
  g.lambda_t = log_space(1e-6, 1e2, 7);
  g.lambda_l = log_space(1e-4, 1e1, 7);
  g.lambda_l.insert(g.lambda_l.begin(), 0.0);
  return g;
}

std::vector<double> log_space(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi >= lo) || count < 1) throw InvalidArgument("log_space: need 0 < lo <= hi and count >= 1");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < count; ++i) out[i] = std::pow(10.0, a + (b - a) * i / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<std::vector<int>> kfold_split(int n, int K, std::uint64_t seed) {
  if (K < 2) throw InvalidArgument("kfold_split: need K >= 2");
  if (K > n) throw InvalidArgument("kfold_split: K=" + std::to_string(K) + " exceeds n=" + std::to_string(n));
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<int>> folds(K);
  const int base = n / K;
  const int extra = n % K;
  int pos = 0;
  for (int f = 0; f < K; ++f) {
    const int size = base + (f < extra ? 1 : 0);
    folds[f].assign(idx.begin() + pos, idx.begin() + pos + size);
    std::sort(folds[f].begin(), folds[f].end());
    pos += size;
  }
  return folds;
}

CvScore summarize_folds(const std::vector<double>& fold_errors) {
  const auto k = static_cast<double>(fold_errors.size());
  if (fold_errors.empty()) return {};
  const double mean = std::accumulate(fold_errors.begin(), fold_errors.end(), 0.0) / k;
  if (fold_errors.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double e : fold_errors) ss += (e - mean) * (e - mean);
  return {mean, std::sqrt(ss / (k - 1.0) / k)};
}

namespace {

struct Fold {
  PreparedData prepared;
  FunctionalSample X_hold;
  FunctionalSample Y_hold;
};

std::vector<int> complement(int n, const std::vector<int>& held) {
  std::vector<int> out;
  out.reserve(n - held.size());
  std::size_t h = 0;
  for (int i = 0; i < n; ++i) {
    if (h < held.size() && held[h] == i) {
      ++h;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

std::vector<Fold> make_folds(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& base, int K,
                             std::uint64_t seed, int jobs) {
  if (X.n() != Y.n()) throw ShapeError("predictor and response samples differ in size");
  const int n = static_cast<int>(X.n());
  const auto split = kfold_split(n, K, seed);
  std::vector<std::optional<Fold>> folds(K);
  parallel_for(K, jobs, [&](std::size_t f) {
    const std::vector<int> train = complement(n, split[f]);
    try {
      folds[f] = Fold{prepare(X.rows(train), Y.rows(train), base), X.rows(split[f]), Y.rows(split[f])};
    } catch (...) {
      rethrow_tagged("fold " + std::to_string(f) + ": ");
    }
  });
  std::vector<Fold> out;
  out.reserve(K);
  for (auto& f : folds) out.push_back(std::move(*f));
  return out;
}

FitResult as_fit(const PreparedData& prepared, const PenaltyParams& params, Eigen::MatrixXd B) {
  return FitResult{CoefficientSurface(std::move(B), prepared.setup.basis_s, prepared.setup.basis_t),
                   SolveReport{},
                   prepared.mean_X,
                   prepared.mean_Y,
                   prepared.grid_x,
                   prepared.grid_y,
                   params};
}

// Held-out errors for one fold and one (lambda_s, lambda_t) pair along the
// whole lambda_L grid, solved from the largest lambda_L down.
std::vector<double> fold_path(const Fold& fold, const PenaltyParams& base, double ls, double lt,
                              const std::vector<double>& lambda_l, const SolverConfig& cfg) {
  std::vector<std::size_t> order(lambda_l.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lambda_l[a] > lambda_l[b]; });
  std::vector<double> errors(lambda_l.size());
  std::optional<Eigen::MatrixXd> warm;
  for (std::size_t idx : order) {
    PenaltyParams p = base;
    p.lambda_s = ls;
    p.lambda_t = lt;
    p.lambda_l = lambda_l[idx];
    const ProblemData data = problem_for(fold.prepared, ls, lt, p.lambda_l);
    Eigen::MatrixXd B;
    bool solved = false;
    if (p.lambda_l == 0.0) {
      try {
        B = solve_smooth(data);
        solved = true;
      } catch (const RankDeficiency&) {
      }
    }
    if (!solved) {
      const SolveResult res = solve_slasso(data, cfg, warm);
      B = Eigen::Map<const Eigen::MatrixXd>(res.x.data(), data.dim_s(), data.dim_t());
    }
    warm = B;
    errors[idx] = pmse(as_fit(fold.prepared, p, std::move(B)), fold.X_hold, fold.Y_hold);
  }
  return errors;
}

}  // namespace

CvScore cv_error(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& params, int K,
                 std::uint64_t seed, const SolverConfig& cfg) {
  LambdaGrids g{{params.lambda_s}, {params.lambda_t}, {params.lambda_l}};
  const CvTable t = grid_search(X, Y, params, g, K, seed, cfg, 1);
  return {t.front().cv_error, t.front().se};
}

CvTable grid_search(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& base,
                    const LambdaGrids& grids, int K, std::uint64_t seed, const SolverConfig& cfg, int jobs) {
  if (grids.lambda_s.empty() || grids.lambda_t.empty() || grids.lambda_l.empty())
    throw InvalidArgument("grid_search: every lambda grid needs at least one value");
  base.validate();
  cfg.validate();
  const std::vector<Fold> folds = make_folds(X, Y, base, K, seed, jobs);
  const std::size_t ns = grids.lambda_s.size();
  const std::size_t nt = grids.lambda_t.size();
  const std::size_t nl = grids.lambda_l.size();
  // errors[(f * ns + is) * nt + it][il]
  std::vector<std::vector<double>> errors(static_cast<std::size_t>(K) * ns * nt);
  parallel_for(errors.size(), jobs, [&](std::size_t unit) {
    const std::size_t it = unit % nt;
    const std::size_t is = (unit / nt) % ns;
    const std::size_t f = unit / (nt * ns);
    try {
      errors[unit] = fold_path(folds[f], base, grids.lambda_s[is], grids.lambda_t[it], grids.lambda_l, cfg);
    } catch (...) {
      rethrow_tagged("fold " + std::to_string(f) + ": ");
    }
  });
  CvTable table;
  table.reserve(ns * nt * nl);
  for (std::size_t is = 0; is < ns; ++is)
    for (std::size_t it = 0; it < nt; ++it)
      for (std::size_t il = 0; il < nl; ++il) {
        std::vector<double> fold_errors(K);
        for (int f = 0; f < K; ++f) fold_errors[f] = errors[(f * ns + is) * nt + it][il];
        const CvScore score = summarize_folds(fold_errors);
        table.push_back({grids.lambda_s[is], grids.lambda_t[it], grids.lambda_l[il], score.mean, score.se});
      }
  return table;
}

CvRow select_k_se(const CvTable& table, double k) {
  if (table.empty()) throw InvalidArgument("select_k_se: empty CV table");
  if (!(k >= 0.0)) throw InvalidArgument("select_k_se: k must be non-negative");
  // Stage 1: best row per lambda_L; ties prefer larger lambda_s, then lambda_t.
  auto better = [](const CvRow& a, const CvRow& b) {
    if (a.cv_error != b.cv_error) return a.cv_error < b.cv_error;
    if (a.lambda_s != b.lambda_s) return a.lambda_s > b.lambda_s;
    return a.lambda_t > b.lambda_t;
  };
  std::vector<CvRow> best;
  for (const CvRow& r : table) {
    auto it = std::find_if(best.begin(), best.end(), [&](const CvRow& b) { return b.lambda_l == r.lambda_l; });
    if (it == best.end())
      best.push_back(r);
    else if (better(r, *it))
      *it = r;
  }
  // Stage 2: the sparsest model within k standard errors of the best.
  const CvRow star = *std::min_element(best.begin(), best.end(), [&](const CvRow& a, const CvRow& b) {
    if (a.cv_error != b.cv_error) return a.cv_error < b.cv_error;
    return a.lambda_l > b.lambda_l;
  });
  const double bound = star.cv_error + k * star.se;
  const CvRow* chosen = nullptr;
  for (const CvRow& r : best)
    if (r.cv_error <= bound && (!chosen || r.lambda_l > chosen->lambda_l)) chosen = &r;
  return *chosen;
}

PenaltyParams with_lambdas(PenaltyParams params, const CvRow& row) {
  params.lambda_s = row.lambda_s;
  params.lambda_t = row.lambda_t;
  params.lambda_l = row.lambda_l;
  return params;
}

}  // namespace slasso
