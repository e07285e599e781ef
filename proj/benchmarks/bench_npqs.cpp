#include <benchmark/benchmark.h>

#include "npqs/ball_geometry.hpp"
#include "npqs/expr_parser.hpp"
#include "npqs/functionals.hpp"
#include "npqs/integrate.hpp"
#include "npqs/random.hpp"

namespace {

void BM_PhiloxBlock(benchmark::State& state) {
  npqs::Philox4x32::Counter ctr{0, 0, 0, 0};
  const npqs::Philox4x32::Key key{0x6e707173u, 0};
  for (auto _ : state) {
    ctr = npqs::Philox4x32::block(ctr, key);
    benchmark::DoNotOptimize(ctr);
  }
}
BENCHMARK(BM_PhiloxBlock);

void BM_SamplerDraw(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  npqs::CVector zeta(n);
  zeta[0] = 1.0;
  const npqs::BallSampler sampler(n, 0.5, zeta);
  std::uint64_t i = 0;
  for (auto _ : state) {
    npqs::SampleStream stream(7, i++, npqs::kTagOuter);
    benchmark::DoNotOptimize(sampler.draw(stream));
  }
}
BENCHMARK(BM_SamplerDraw)->Arg(1)->Arg(2)->Arg(3);

void BM_MobiusApply(benchmark::State& state) {
  const npqs::MobiusMap phi(npqs::BallPoint{0.3, npqs::Complex(0.1, 0.5)});
  const npqs::BallPoint z{npqs::Complex(-0.2, 0.4), 0.6};
  for (auto _ : state) benchmark::DoNotOptimize(phi.apply(z));
}
BENCHMARK(BM_MobiusApply);

void BM_EvalExpression(benchmark::State& state) {
  const npqs::HoloExpr f = npqs::parse("(1 - dot(z,[0.6, 0.8i]))^-1.5 + z1^3*z2 - log(1 - z1)", 2);
  const npqs::BallPoint z{npqs::Complex(0.2, 0.1), npqs::Complex(-0.3, 0.4)};
  for (auto _ : state) benchmark::DoNotOptimize(npqs::eval(f, z));
}
BENCHMARK(BM_EvalExpression);

void BM_Functional(benchmark::State& state) {
  const auto kind = npqs::kAllKinds[static_cast<std::size_t>(state.range(0))];
  const npqs::SpaceParams P(2, 7, 1, 1, 0.5);
  const npqs::HoloExpr f = npqs::parse("z1^2*z2 + z1", 2);
  npqs::FunctionalConfig cfg;
  cfg.sampler.n_samples = 1u << 14;
  cfg.inner_samples = 16;
  for (auto _ : state) {
    benchmark::DoNotOptimize(npqs::functional_at(f, P, npqs::BallPoint(2), kind, cfg));
  }
  state.SetLabel(npqs::to_string(kind));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.sampler.n_samples));
}
BENCHMARK(BM_Functional)->DenseRange(0, 7)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
