#include <benchmark/benchmark.h>

#include "bench_data.hpp"
#include "pagpass/transformer.hpp"

namespace {

std::vector<pagpass::EncodedRule> batch(std::size_t n) {
  std::vector<pagpass::EncodedRule> out;
  for (const auto& pw : pagpass::bench::passwords(n)) out.push_back(pagpass::encode_rule(pw));
  return out;
}

void BM_TransformerLossAndGrad(benchmark::State& state) {
  const pagpass::TransformerModel model(pagpass::TransformerConfig{.embed = static_cast<std::size_t>(state.range(0))});
  const auto rules = batch(64);
  std::vector<double> grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.loss(rules, &grad));
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_TransformerLossAndGrad)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_TransformerDecodeStep(benchmark::State& state) {
  const pagpass::TransformerModel model(pagpass::TransformerConfig{});
  const auto rule = pagpass::encode_rule("dragon12");
  const auto prompt = rule.tokens().first(5);
  for (auto _ : state) {
    auto session = model.start(prompt);
    for (std::size_t i = 5; i < rule.length; ++i) {
      benchmark::DoNotOptimize(session->distribution().data());
      session->push(rule.ids[i]);
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rule.length - 5));
}
BENCHMARK(BM_TransformerDecodeStep);

}  // namespace
