#include <benchmark/benchmark.h>

#include "morevqa/program.hpp"

using namespace morevqa::lang;

namespace {

std::string nested_program(int repeats) {
  std::string text;
  for (int i = 0; i < repeats; ++i) {
    text += "hits = localize(\"dog running\", frames)\n";
    text += "for f in hits:\n";
    text += "    if verify_action(f, \"running\"):\n";
    text += "        notes = append(notes, vqa(f, \"what is \\\"it\\\" doing?\"))\n";
    text += "    else:\n";
    text += "        n = len(notes)\n";
  }
  return text + "return llm_query(question, notes)\n";
}

}  // namespace

static void BM_ParseExtended(benchmark::State& state) {
  const auto text = nested_program(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(parse(text, Mode::extended));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseExtended)->Range(1, 256);

static void BM_RenderRoundTrip(benchmark::State& state) {
  const auto program = parse(nested_program(32), Mode::extended);
  for (auto _ : state) benchmark::DoNotOptimize(parse(render(program), Mode::extended));
}
BENCHMARK(BM_RenderRoundTrip);
