#include <benchmark/benchmark.h>

#include "rapdb/instances.hpp"
#include "rapdb/kernels.hpp"
#include "rapdb/problem.hpp"

using namespace rapdb;

namespace {

struct Fixture {
  explicit Fixture(Eigen::Index n) : inst(random_qcqp(n, 5, 11)), x(Vector::Ones(n)) {}
  ProblemInstance inst;
  Vector x;
};

void BM_products(benchmark::State& state, kernels::Backend backend) {
  Fixture f(state.range(0));
  kernels::set_backend(backend);
  std::vector<Vector> out;
  for (auto _ : state) {
    kernels::symmetric_products(f.inst.Q(), f.x, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.inst.Q().size()));
}

void BM_evaluate_point(benchmark::State& state, kernels::Backend backend) {
  Fixture f(state.range(0));
  kernels::set_backend(backend);
  for (auto _ : state) {
    PointEval pe = evaluate_point(f.inst, f.x);
    benchmark::DoNotOptimize(pe.f);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_products, serial, kernels::Backend::Serial)->Arg(100)->Arg(400)->Arg(1000);
BENCHMARK_CAPTURE(BM_products, parallel, kernels::Backend::Parallel)->Arg(100)->Arg(400)->Arg(1000);
BENCHMARK_CAPTURE(BM_evaluate_point, serial, kernels::Backend::Serial)->Arg(100)->Arg(400);
BENCHMARK_CAPTURE(BM_evaluate_point, parallel, kernels::Backend::Parallel)->Arg(100)->Arg(400);

BENCHMARK_MAIN();
