#include <benchmark/benchmark.h>

#include "morevqa/interpreter.hpp"

using namespace morevqa::lang;

static void BM_InterpretLoops(benchmark::State& state) {
  const auto program = parse(
      "pairs = 0\n"
      "for a in xs:\n"
      "    for b in xs:\n"
      "        if a != b:\n"
      "            pairs = b\n"
      "return pairs\n",
      Mode::extended);
  List xs;
  for (std::int64_t i = 0; i < state.range(0); ++i) xs.emplace_back(i);
  Dispatch none = [](const std::string& name, const std::vector<Value>&) -> Value {
    throw std::runtime_error("no tool " + name);
  };
  for (auto _ : state) {
    Interpreter in(none, 1u << 24);
    benchmark::DoNotOptimize(in.run(program, {{"xs", xs}}));
  }
}
BENCHMARK(BM_InterpretLoops)->RangeMultiplier(4)->Range(4, 256);

static void BM_InterpretToolCalls(benchmark::State& state) {
  const auto program = parse(
      "notes = []\n"
      "for f in frames:\n"
      "    notes = append(notes, caption(f))\n"
      "return notes\n",
      Mode::extended);
  List frames;
  for (std::int64_t i = 0; i < state.range(0); ++i) frames.emplace_back(i);
  Dispatch tools = [](const std::string& name, const std::vector<Value>& args) -> Value {
    if (name == "append") {
      List l = args[0].list();
      l.push_back(args[1]);
      return l;
    }
    return std::string("frame caption");
  };
  for (auto _ : state) {
    Interpreter in(tools, 1u << 24);
    benchmark::DoNotOptimize(in.run(program, {{"frames", frames}}));
  }
}
BENCHMARK(BM_InterpretToolCalls)->RangeMultiplier(4)->Range(4, 256);
