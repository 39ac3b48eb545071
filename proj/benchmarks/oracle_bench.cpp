#include <benchmark/benchmark.h>

#include "cpa/experiments.hpp"

namespace {

void BM_Oracle(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  cpa::OracleSpec spec;
  spec.params = cpa::ModelParams::make(1, cpa::AgeProfile{{0.0, 3.0}, 3.0}, 1.0);
  for (int i = 0; i < n; ++i) {
    cpa::Site x(1);
    x[0] = i - n / 2;
    spec.sites.push_back(x);
  }
  spec.age_cap = 2;
  const auto f = cpa::Config::single(cpa::Site::origin(1));
  for (auto _ : state) benchmark::DoNotOptimize(cpa::exact_small_oracle(spec, f, 1.0).p_nonempty);
  state.counters["states"] = static_cast<double>(spec.state_count());
}
BENCHMARK(BM_Oracle)->Arg(3)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

}  // namespace
