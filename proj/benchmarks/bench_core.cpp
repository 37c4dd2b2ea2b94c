#include <benchmark/benchmark.h>

#include "raincop/copula.hpp"
#include "raincop/diagnostics.hpp"
#include "raincop/estimation.hpp"
#include "raincop/numerics.hpp"
#include "raincop/spatial.hpp"
#include "raincop/synth.hpp"

using namespace raincop;

namespace {

SynthDataset fixture(Eigen::Index n, Eigen::Index days) {
  SynthSpec spec;
  spec.n_locations = n;
  spec.n_days = days;
  return simulate_dataset(spec);
}

void BM_MaternKernel(benchmark::State& state) {
  const MaternParams params{450.0, state.range(0) / 2.0};
  double d = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(matern_kernel(d, params));
    d = d > 2000.0 ? 0.0 : d + 0.37;
  }
}
BENCHMARK(BM_MaternKernel)->Arg(1)->Arg(7)->Arg(3);  // nu = 0.5, 3.5, 1.5

void BM_SpdFactorize(benchmark::State& state) {
  const SynthDataset data = fixture(state.range(0), 1);
  const Eigen::MatrixXd k = matern_matrix(data.distance.values, {450.0, 3.5});
  for (auto _ : state) benchmark::DoNotOptimize(numerics::spd_factorize(k));
}
BENCHMARK(BM_SpdFactorize)->Arg(50)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_EnergyScore(benchmark::State& state) {
  const auto m = state.range(0);
  const auto n = state.range(1);
  Stream s(1, StreamTag::kTest);
  const Eigen::MatrixXd samples = standard_normals(m, n, s);
  const Eigen::VectorXd obs = standard_normals(1, n, s).row(0).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(energy_score_unbiased(samples, obs));
}
BENCHMARK(BM_EnergyScore)->Args({30, 50})->Args({100, 50})->Args({30, 400});

void BM_SrObjective(benchmark::State& state) {
  const SynthDataset data = fixture(50, state.range(0));
  ScoreConfig cfg;
  cfg.seed = 2;
  const ScoreObjective objective(data.rain, data.field, data.distance, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(objective.evaluate(450.0));
}
BENCHMARK(BM_SrObjective)->Arg(64)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_JointForecast(benchmark::State& state) {
  const SynthDataset data = fixture(50, 1);
  const CovarianceMatrix cov = build_covariance(data.distance, {450.0, 3.5});
  for (auto _ : state) {
    Stream s(3, StreamTag::kForecast, 0);
    benchmark::DoNotOptimize(joint_forecast(cov, data.field, 0, state.range(0), s));
  }
}
BENCHMARK(BM_JointForecast)->Arg(50)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_CrpsSample(benchmark::State& state) {
  Stream s(4, StreamTag::kTest);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  for (auto& v : x) v = s.normal();
  for (auto _ : state) benchmark::DoNotOptimize(crps_sample(x, 0.1));
}
BENCHMARK(BM_CrpsSample)->Arg(50)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
