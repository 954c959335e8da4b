#include <benchmark/benchmark.h>

#include "morevqa/eval.hpp"
#include "morevqa/mock_backend.hpp"

using namespace morevqa;

namespace {

const std::filesystem::path kOracle = std::filesystem::path(MOREVQA_DATA_DIR) / "oracle";

std::shared_ptr<const FixtureCorpus> corpus() {
  static auto c = std::make_shared<const FixtureCorpus>(FixtureCorpus::load_dir(kOracle / "fixtures"));
  return c;
}

}  // namespace

static void BM_MoReVQAItem(benchmark::State& state) {
  const auto items = load_dataset(kOracle / "dataset.jsonl");
  ToolSession session(std::make_shared<MockBackend>(corpus()));
  session.set_keep_trace(false);
  const auto& item = items[static_cast<std::size_t>(state.range(0))];
  const auto meta = corpus()->find(item.video_id)->meta();
  for (auto _ : state)
    benchmark::DoNotOptimize(run_morevqa(meta, item.qa, RunConfig{}, Planner::rule_based(), session));
}
BENCHMARK(BM_MoReVQAItem)->Arg(0)->Arg(11)->Arg(25);

static void BM_EvalOracleCorpus(benchmark::State& state) {
  const auto items = load_dataset(kOracle / "dataset.jsonl");
  ToolSession session(std::make_shared<MockBackend>(corpus()));
  session.set_keep_trace(false);
  EvalConfig cfg;
  cfg.workers = static_cast<int>(state.range(0));
  const auto resolve = resolver_for(corpus());
  for (auto _ : state) benchmark::DoNotOptimize(run_eval(items, SystemName::morevqa, cfg, resolve, session));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * items.size()));
}
BENCHMARK(BM_EvalOracleCorpus)->Arg(1)->Arg(4)->UseRealTime();
