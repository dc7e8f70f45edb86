#include <benchmark/benchmark.h>

#include <vector>

#include "hawkes/kernels.hpp"
#include "hawkes/simulate.hpp"
#include "hawkes/tpp.hpp"

using namespace hawkes;

namespace {

constexpr HawkesParams kParams{0.2, 0.6, 1.5, 0.5};

struct Batch {
  std::vector<Session> sessions;
  std::vector<HawkesParams> params;
};

Batch make_batch(std::size_t count, double duration) {
  Batch b;
  for (std::size_t s = 0; s < count; ++s) {
    b.sessions.push_back(simulate_session_thinning(kParams, duration, SimSeed{17, s}));
    b.params.push_back(kParams);
  }
  return b;
}

Session session_with(std::size_t events) {
  const double duration = static_cast<double>(events) / (kParams.mu / (1.0 - kParams.alpha));
  for (std::uint64_t stream = 0;; ++stream) {
    Session s = simulate_session_thinning(kParams, 1.5 * duration, SimSeed{3, stream});
    if (s.size() >= events) {
      s.times.resize(events);
      s.duration = s.times.back() + 1.0;
      return s;
    }
  }
}

void BM_batch_parallel(benchmark::State& state) {
  const Batch b = make_batch(static_cast<std::size_t>(state.range(0)), 120.0);
  std::vector<double> out(b.sessions.size());
  std::vector<LikelihoodGradient> grad(b.sessions.size());
  for (auto _ : state) {
    kernels::batch_log_likelihood(b.sessions, b.params, out, grad);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_batch_serial(benchmark::State& state) {
  const Batch b = make_batch(static_cast<std::size_t>(state.range(0)), 120.0);
  std::vector<double> out(b.sessions.size());
  std::vector<LikelihoodGradient> grad(b.sessions.size());
  for (auto _ : state) {
    reference::batch_log_likelihood(b.sessions, b.params, out, grad);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_recursive_likelihood(benchmark::State& state) {
  const Session s = session_with(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(kParams, s));
  state.SetComplexityN(state.range(0));
}

void BM_direct_likelihood(benchmark::State& state) {
  const Session s = session_with(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::log_likelihood_direct(kParams, s));
  state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_batch_parallel)->RangeMultiplier(4)->Range(64, 4096)->UseRealTime();
BENCHMARK(BM_batch_serial)->RangeMultiplier(4)->Range(64, 4096)->UseRealTime();
BENCHMARK(BM_recursive_likelihood)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oN);
BENCHMARK(BM_direct_likelihood)->RangeMultiplier(4)->Range(64, 4096)->Complexity(benchmark::oNSquared);

BENCHMARK_MAIN();
