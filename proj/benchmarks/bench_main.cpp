#include <map>
#include <random>

#include <benchmark/benchmark.h>

#include "slasso/estimator.hpp"
#include "slasso/operators.hpp"
#include "slasso/simlab.hpp"

using namespace slasso;

namespace {

struct Fixture {
  PreparedData prepared;
  ProblemData data;
};

// Scenario II training data at the requested basis size.
const Fixture& fixture(int M, double lambda_l) {
  static std::map<std::pair<int, double>, Fixture> cache;
  const auto key = std::make_pair(M, lambda_l);
  auto it = cache.find(key);
  if (it == cache.end()) {
    SimConfig cfg;
    cfg.n_train = 150;
    cfg.n_test = 1;
    const SimDataset ds = gen_dataset(cfg);
    PenaltyParams p;
    p.M1 = p.M2 = M;
    PreparedData prep = prepare(ds.X_train, ds.Y_train, p);
    ProblemData data = problem_for(prep, 1e-4, 1e-4, lambda_l);
    it = cache.emplace(key, Fixture{std::move(prep), std::move(data)}).first;
  }
  return it->second;
}

void BM_apply_quadratic(benchmark::State& st) {
  const ProblemData& d = fixture(static_cast<int>(st.range(0)), 0.1).data;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd B(d.dim_s(), d.dim_t());
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = nd(rng);
  for (auto _ : st) benchmark::DoNotOptimize(apply_quadratic(d, B));
}
BENCHMARK(BM_apply_quadratic)->Arg(16)->Arg(56);

void BM_loss_and_gradient(benchmark::State& st) {
  const ProblemData& d = fixture(static_cast<int>(st.range(0)), 0.1).data;
  const Eigen::MatrixXd B = Eigen::MatrixXd::Constant(d.dim_s(), d.dim_t(), 0.01);
  Eigen::MatrixXd G;
  for (auto _ : st) benchmark::DoNotOptimize(smooth_loss_and_gradient(d, B, G));
}
BENCHMARK(BM_loss_and_gradient)->Arg(16)->Arg(56);

void BM_solve_slasso(benchmark::State& st) {
  const ProblemData& d = fixture(static_cast<int>(st.range(0)), 0.1).data;
  for (auto _ : st) benchmark::DoNotOptimize(solve_slasso(d, {}));
}
BENCHMARK(BM_solve_slasso)->Arg(16)->Arg(56)->Unit(benchmark::kMillisecond);

void BM_solve_smooth(benchmark::State& st) {
  const ProblemData& d = fixture(static_cast<int>(st.range(0)), 0.0).data;
  for (auto _ : st) benchmark::DoNotOptimize(solve_smooth(d));
}
BENCHMARK(BM_solve_smooth)->Arg(16)->Arg(56)->Unit(benchmark::kMillisecond);

void BM_solve_smooth_dense(benchmark::State& st) {
  const ProblemData& d = fixture(static_cast<int>(st.range(0)), 0.0).data;
  for (auto _ : st) benchmark::DoNotOptimize(solve_smooth(d, SmoothMethod::dense));
}
BENCHMARK(BM_solve_smooth_dense)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
