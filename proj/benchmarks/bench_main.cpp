#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <string>

#include "socrates/falsify.hpp"
#include "socrates/network.hpp"
#include "socrates/smc.hpp"
#include "socrates/task.hpp"

using namespace socrates;

namespace {

const task::VerificationTask& fixture(const char* name) {
  static std::map<std::string, task::VerificationTask> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, task::load_task(std::string(SOCRATES_FIXTURE_DIR) + "/" + name)).first;
  return it->second;
}

Tensor random_input(const nn::Network& net, std::mt19937_64& rng) {
  const auto box = net.feature_box();
  Tensor x({net.feature_count()});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::uniform_real_distribution<double>(box.lower[i], box.upper[i])(rng);
  return x;
}

void forward(benchmark::State& state, const char* name) {
  const auto& t = fixture(name);
  std::mt19937_64 rng(1);
  const auto x = random_input(t.network, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nn::network_forward(t.network, x));
}

void gradient(benchmark::State& state, const char* name) {
  const auto& t = fixture(name);
  std::mt19937_64 rng(1);
  const auto x = random_input(t.network, rng);
  const auto y = nn::network_forward(t.network, x);
  const auto seed = Tensor::filled(y.shape(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(nn::network_gradient(t.network, x, seed));
}

void sprt_census(benchmark::State& state) {
  const auto& t = fixture("census_sprt.json");
  auto c = smc::SprtConfig::from_params(t.solver.params);
  for (auto _ : state) {
    auto r = smc::sprt_run(t, c);
    benchmark::DoNotOptimize(r.samples_used);
    ++c.seed;
  }
}

void falsify_planted(benchmark::State& state) {
  const auto& t = fixture("planted/planted_0.json");
  falsify::FalsifyConfig c;
  for (auto _ : state) {
    auto r = falsify::falsify(t, c);
    benchmark::DoNotOptimize(r.verdict);
    ++c.seed;
  }
}

}  // namespace

BENCHMARK_CAPTURE(forward, mlp, "mnist_mlp.json");
BENCHMARK_CAPTURE(forward, conv, "conv_net.json");
BENCHMARK_CAPTURE(forward, lstm, "lstm_net.json");
BENCHMARK_CAPTURE(gradient, mlp, "mnist_mlp.json");
BENCHMARK_CAPTURE(gradient, conv, "conv_net.json");
BENCHMARK(sprt_census);
BENCHMARK(falsify_planted);
BENCHMARK_MAIN();
