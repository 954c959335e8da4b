#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "morevqa/program.hpp"

namespace morevqa::lang {

struct Value;
using List = std::vector<Value>;

/// Runtime value of the program language.
struct Value {
  std::variant<std::monostate, bool, std::int64_t, double, std::string, List> data;

  Value() = default;
  Value(bool b) : data(b) {}                     // NOLINT(google-explicit-constructor)
  Value(int i) : data(std::int64_t{i}) {}        // NOLINT(google-explicit-constructor)
  Value(std::int64_t i) : data(i) {}             // NOLINT(google-explicit-constructor)
  Value(double d) : data(d) {}                   // NOLINT(google-explicit-constructor)
  Value(std::string s) : data(std::move(s)) {}   // NOLINT(google-explicit-constructor)
  Value(const char* s) : data(std::string(s)) {} // NOLINT(google-explicit-constructor)
  Value(List l) : data(std::move(l)) {}          // NOLINT(google-explicit-constructor)

  bool is_none() const { return std::holds_alternative<std::monostate>(data); }
  bool is_list() const { return std::holds_alternative<List>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
  bool is_number() const { return is_int() || std::holds_alternative<double>(data); }

  const List& list() const { return std::get<List>(data); }
  const std::string& str() const { return std::get<std::string>(data); }
  std::int64_t integer() const { return std::get<std::int64_t>(data); }
  double number() const;
  bool truthy() const;

  bool operator==(const Value&) const = default;
};

std::string_view type_name(const Value& v);
nlohmann::json to_json_value(const Value& v);
Value from_json_value(const nlohmann::json& j);

struct CallTrace {
  std::string name;
  std::vector<Value> args;
  Value result;
  bool operator==(const CallTrace&) const = default;
};

class RuntimeError : public std::runtime_error {
 public:
  enum class Kind { unbound_variable, type_error, dispatch_failure, step_budget };

  RuntimeError(Kind kind, int line, const std::string& message);
  Kind kind() const { return kind_; }
  int line() const { return line_; }

 private:
  Kind kind_;
  int line_;
};

std::string_view to_string(RuntimeError::Kind k);

using Dispatch = std::function<Value(const std::string& name, const std::vector<Value>& args)>;
using Environment = std::map<std::string, Value>;

inline constexpr std::size_t kDefaultStepBudget = 10'000;

/// Tree-walking evaluator. Statements and dispatched calls each consume one
/// step of the budget. The call trace survives a RuntimeError.
class Interpreter {
 public:
  explicit Interpreter(Dispatch dispatch, std::size_t step_budget = kDefaultStepBudget);

  /// Value of the executed Return, otherwise of the last executed statement.
  Value run(const Program& program, Environment env = {});

  const std::vector<CallTrace>& trace() const { return trace_; }
  std::size_t steps() const { return steps_; }

 private:
  struct ReturnSignal {
    Value value;
  };

  void exec_block(const Program& p, Value& last);
  void exec(const Stmt& s, Value& last);
  Value eval(const Expr& e);
  void tick();

  Dispatch dispatch_;
  std::size_t budget_;
  std::size_t steps_ = 0;
  int line_ = 0;
  Environment env_;
  std::vector<CallTrace> trace_;
};

/// Numbers compare numerically, strings lexicographically, == / != on anything.
bool compare_values(CompareOp op, const Value& lhs, const Value& rhs, int line);

}  // namespace morevqa::lang
