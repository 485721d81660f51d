#include <benchmark/benchmark.h>

#include <memory>

#include "esgd/dataset.hpp"
#include "esgd/net.hpp"
#include "esgd/objective.hpp"
#include "esgd/optimize.hpp"
#include "esgd/oracle.hpp"
#include "esgd/sampler.hpp"

namespace {

using namespace esgd;

std::shared_ptr<const Dataset> bench_dataset(int rows, int cols, int n) {
  SyntheticSpec spec;
  spec.rows = rows;
  spec.cols = cols;
  spec.count = n;
  spec.seed = 99;
  return std::make_shared<const Dataset>(make_synthetic_classification(spec));
}

void BM_SgldStepQuadratic(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  std::vector<double> eigs(dim);
  for (int i = 0; i < dim; ++i) eigs[i] = 0.5 + i * 0.01;
  const QuadraticObjective obj = QuadraticObjective::from_eigenvalues(eigs, 1);
  SgldConfig cfg;
  cfg.gamma = 1.0;
  cfg.epsilon = 1e-3;
  Rng rng(2);
  SgldState sgld;
  const ParamVector anchor = ParamVector::Ones(dim);
  sgld.reset(anchor);
  for (auto _ : state) {
    sgld_step(sgld, anchor, obj, cfg, 1, rng);
    benchmark::DoNotOptimize(sgld.x_prime.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SgldStepQuadratic)->Arg(10)->Arg(100)->Arg(1000);

void BM_MlpBatchGradient(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const auto data = bench_dataset(28, 28, 2048);
  MlpSpec spec;
  spec.layer_sizes = {784, 256, 10};
  MlpObjective obj(spec, data);
  Rng init(3);
  const ParamVector x = obj.initial_params(init);
  ParamVector grad(obj.dim());
  Rng rng(4);
  for (auto _ : state) {
    const MiniBatch mb = sample_minibatch(*data, batch, rng);
    obj.batch_loss_grad(x, mb, grad, rng);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpBatchGradient)->Arg(32)->Arg(128)->Arg(512);

void BM_EntropySgdStep(benchmark::State& state) {
  const int inner = static_cast<int>(state.range(0));
  const auto data = bench_dataset(12, 12, 1024);
  MlpSpec spec;
  spec.layer_sizes = {144, 32, 10};
  MlpObjective obj(spec, data);
  Rng init(5);
  OptimizerState opt;
  opt.reset(obj.initial_params(init));
  EntropySgdConfig cfg;
  cfg.L = inner;
  cfg.schedule.kind = ScopingSchedule::Kind::constant;
  cfg.schedule.gamma0 = 1e-3;
  cfg.lr.base = 0.1;
  cfg.rescale_gradient = true;
  Rng rng(6);
  for (auto _ : state) {
    entropy_sgd_step(opt, obj, cfg, 64, rng);
    benchmark::DoNotOptimize(opt.x.data());
  }
  state.SetItemsProcessed(state.iterations() * inner);
}
BENCHMARK(BM_EntropySgdStep)->Arg(5)->Arg(20);

void BM_LocalEntropyQuadrature(benchmark::State& state) {
  const int points = static_cast<int>(state.range(0));
  const Landscape1d land;
  const Grid1d grid{-35.0, 35.0, points};
  const GibbsSpec spec = make_gibbs_1d(0.1, -1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        local_entropy_quadrature([&](double t) { return land(t); }, spec, grid));
  }
}
BENCHMARK(BM_LocalEntropyQuadrature)->Arg(4001)->Arg(20001)->Arg(100001);

void BM_FiniteDifferenceHessian(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  const auto data = bench_dataset(8, 8, 256);
  MlpSpec spec;
  spec.layer_sizes = {64, hidden, 10};
  MlpObjective obj(spec, data);
  Rng init(7);
  const ParamVector x = obj.initial_params(init);
  for (auto _ : state) {
    const HessianResult h = finite_difference_hessian(obj, x);
    benchmark::DoNotOptimize(h.hessian.data());
  }
}
BENCHMARK(BM_FiniteDifferenceHessian)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
