#include <doctest.h>

#include "morevqa/interpreter.hpp"
#include "oracles.hpp"

using namespace morevqa::lang;

namespace {

Value run_text(const std::string& text, Dispatch d = nullptr, Environment env = {}) {
  if (!d) d = [](const std::string& name, const std::vector<Value>&) -> Value {
    throw std::runtime_error("no tool " + name);
  };
  Interpreter in(d);
  return in.run(parse(text, Mode::extended), std::move(env));
}

RuntimeError::Kind error_kind(const std::string& text, Environment env = {}) {
  try {
    run_text(text, oracle::stub_tool, std::move(env));
  } catch (const RuntimeError& e) {
    return e.kind();
  }
  FAIL("expected RuntimeError");
  return RuntimeError::Kind::type_error;
}

}  // namespace

TEST_CASE("return of a literal") { CHECK(run_text("return 2") == Value(2)); }

TEST_CASE("loop over localized frames") {
  Interpreter in([](const std::string& name, const std::vector<Value>&) -> Value {
    if (name == "localize") return List{Value(3), Value(8)};
    return true;
  });
  const auto p = parse("xs = localize(\"ball\")\nfor f in xs:\n    verify_action(f, \"throwing\")\nreturn xs",
                       Mode::extended);
  CHECK(in.run(p) == Value(List{Value(3), Value(8)}));
  REQUIRE(in.trace().size() == 3);
  CHECK(in.trace()[0].name == "localize");
  CHECK(in.trace()[1].args == std::vector<Value>{Value(3), Value("throwing")});
  CHECK(in.trace()[2].args[0] == Value(8));
}

TEST_CASE("false if without else keeps the previous value") {
  CHECK(run_text("x = 5\nif false:\n    x = 6") == Value(5));
  CHECK(run_text("x = 5\nif 0:\n    x = 6\nelse:\n    x = 7") == Value(7));
}

TEST_CASE("program value without return is the last statement's") {
  CHECK(run_text("x = [1, \"a\"]") == Value(List{Value(1), Value("a")}));
  CHECK(run_text("for x in []:\n    y = 1").is_none());
}

TEST_CASE("environment bindings and comparisons") {
  CHECK(run_text("return n >= 3", nullptr, {{"n", Value(3)}}) == Value(true));
  CHECK(run_text("return 1 == 1.0") == Value(true));
  CHECK(run_text("return \"b\" > \"a\"") == Value(true));
  CHECK(run_text("return [1] == [1]") == Value(true));
  CHECK(run_text("return \"1\" != 1") == Value(true));
}

TEST_CASE("runtime errors are typed") {
  CHECK(error_kind("return missing") == RuntimeError::Kind::unbound_variable);
  CHECK(error_kind("return [1] < 2") == RuntimeError::Kind::type_error);
  CHECK(error_kind("for x in 3:\n    noop()") == RuntimeError::Kind::type_error);
  CHECK(error_kind("boom()") == RuntimeError::Kind::dispatch_failure);
}

TEST_CASE("runtime errors report the statement line") {
  try {
    run_text("x = 1\n\ny = missing");
    FAIL("expected RuntimeError");
  } catch (const RuntimeError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("unbound_variable") == 0);
  }
}

TEST_CASE("step budget bounds execution") {
  Interpreter in(oracle::stub_tool, 20);
  const auto p = parse("for i in xs:\n    for j in xs:\n        count(i, j)", Mode::extended);
  Environment env{{"xs", Value(List(10, Value(1)))}};
  try {
    in.run(p, env);
    FAIL("expected step_budget");
  } catch (const RuntimeError& e) {
    CHECK(e.kind() == RuntimeError::Kind::step_budget);
  }
  CHECK(in.steps() == 21);
  CHECK_FALSE(in.trace().empty());
}

TEST_CASE("trace survives a dispatch failure") {
  Interpreter in(oracle::stub_tool);
  CHECK_THROWS_AS(in.run(parse("count(1)\nboom(2)", Mode::extended)), RuntimeError);
  REQUIRE(in.trace().size() == 2);
  CHECK(in.trace()[1].name == "boom");
  CHECK(in.trace()[1].result.is_none());
}

TEST_CASE("values convert to and from JSON") {
  const Value v(List{Value(), Value(true), Value(2), Value(2.5), Value("s"), Value(List{})});
  CHECK(from_json_value(to_json_value(v)) == v);
  CHECK(to_json_value(v).dump() == "[null,true,2,2.5,\"s\",[]]");
  CHECK(type_name(Value(1.0)) == "float");
}

TEST_CASE("interpreter agrees with the reference evaluator") {
  oracle::Rng rng(99);
  int errors = 0;
  for (int i = 0; i < 300; ++i) {
    const auto p = oracle::exec_program(rng, 2);
    INFO(render(p));
    Environment env;
    for (const auto& [k, v] : oracle::starting_env()) env[k] = v;
    Interpreter in(oracle::stub_tool);
    oracle::RefEvaluator ref(oracle::starting_env());
    const auto want = ref.run(p);
    std::optional<RuntimeError::Kind> got_error;
    Value got;
    try {
      got = in.run(p, env);
    } catch (const RuntimeError& e) {
      got_error = e.kind();
    }
    CHECK(got_error == want.error);
    if (!want.error) CHECK(got == want.value);
    CHECK(in.trace() == want.trace);
    errors += want.error ? 1 : 0;
  }
  CHECK(errors < 200);
}
