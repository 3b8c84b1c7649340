#include <benchmark/benchmark.h>

#include <numeric>

#include "bsa/basis.hpp"
#include "bsa/model.hpp"
#include "bsa/rng.hpp"
#include "bsa/sampler.hpp"
#include "bsa/simulate.hpp"

namespace {

using namespace bsa;

DataBundle paper_scale_bundle() {
  SimulationConfig sc;
  auto rng = make_stream(42, stream::truth);
  const SimulationTruth truth = simulate_truth(preset_sites(), sc, rng);
  auto rng2 = make_stream(42, stream::schedule);
  const SimulatedData sim = simulate_observations(truth, NoiseSpec{0.1},
                                                  ScheduleRule::per_pollutant, rng2);
  return DataBundle::build(sim.obs, truth.sites, truth.M);
}

void BM_LogPosteriorGrad(benchmark::State& state) {
  static const DataBundle data = paper_scale_bundle();
  const int K = static_cast<int>(state.range(0));
  HyperParams hyper;
  const ParamLayout layout = ParamLayout::make(
      {K, data.knots.num_basis, data.n_pollutants(), data.n_covariates(), data.n_sites()});
  auto rng = make_stream(7, stream::init);
  const Vec v = default_init(layout, hyper, rng);
  Vec grad(layout.size);
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_posterior_grad(v, data, hyper, layout, grad));
  }
}
BENCHMARK(BM_LogPosteriorGrad)->Arg(2)->Arg(10);

void BM_BasisMatrix(benchmark::State& state) {
  const KnotVector kv = build_knots(1, 365, 15);
  std::vector<double> grid(365);
  std::iota(grid.begin(), grid.end(), 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(basis_matrix(kv, grid));
  }
}
BENCHMARK(BM_BasisMatrix);

void BM_ExpCovChol(benchmark::State& state) {
  const Mat dist = distance_matrix(preset_sites());
  for (auto _ : state) {
    benchmark::DoNotOptimize(chol_psd(exp_cov(dist, 600.0)));
  }
}
BENCHMARK(BM_ExpCovChol);

struct StdNormal final : LogDensity {
  int n;
  explicit StdNormal(int n) : n(n) {}
  int dim() const override { return n; }
  double value_grad(const Vec& x, Vec& grad) const override {
    grad = -x;
    return -0.5 * x.squaredNorm();
  }
};

void BM_NutsTransition(benchmark::State& state) {
  StdNormal target(100);
  ChainState chain;
  chain.position = Vec::Zero(100);
  chain.step_size = 0.5;
  chain.mass_diag = Vec::Ones(100);
  chain.rng = make_stream(3, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hmc_transition(chain, target));
  }
}
BENCHMARK(BM_NutsTransition);

}  // namespace

BENCHMARK_MAIN();
