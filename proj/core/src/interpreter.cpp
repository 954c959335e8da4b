#include "morevqa/interpreter.hpp"

namespace morevqa::lang {

double Value::number() const {
  if (is_int()) return static_cast<double>(integer());
  return std::get<double>(data);
}

bool Value::truthy() const {
  return std::visit(
      [](const auto& v) -> bool {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return false;
        else if constexpr (std::is_same_v<T, bool>) return v;
        else if constexpr (std::is_same_v<T, std::int64_t>) return v != 0;
        else if constexpr (std::is_same_v<T, double>) return v != 0.0;
        else return !v.empty();
      },
      data);
}

std::string_view type_name(const Value& v) {
  switch (v.data.index()) {
    case 0: return "none";
    case 1: return "bool";
    case 2: return "int";
    case 3: return "float";
    case 4: return "string";
    default: return "list";
  }
}

nlohmann::json to_json_value(const Value& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, List>) {
          auto arr = nlohmann::json::array();
          for (const auto& item : x) arr.push_back(to_json_value(item));
          return arr;
        } else {
          return x;
        }
      },
      v.data);
}

Value from_json_value(const nlohmann::json& j) {
  if (j.is_null()) return {};
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) {
    List l;
    for (const auto& item : j) l.push_back(from_json_value(item));
    return l;
  }
  return j.dump();
}

RuntimeError::RuntimeError(Kind kind, int line, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " (line " + std::to_string(line) + "): " + message),
      kind_(kind),
      line_(line) {}

std::string_view to_string(RuntimeError::Kind k) {
  switch (k) {
    case RuntimeError::Kind::unbound_variable: return "unbound_variable";
    case RuntimeError::Kind::type_error: return "type_error";
    case RuntimeError::Kind::dispatch_failure: return "dispatch_failure";
    case RuntimeError::Kind::step_budget: return "step_budget";
  }
  return "?";
}

bool compare_values(CompareOp op, const Value& lhs, const Value& rhs, int line) {
  if (lhs.is_number() && rhs.is_number()) {
    const bool both_int = lhs.is_int() && rhs.is_int();
    const auto cmp = [&](auto a, auto b) {
      switch (op) {
        case CompareOp::eq: return a == b;
        case CompareOp::ne: return a != b;
        case CompareOp::lt: return a < b;
        case CompareOp::le: return a <= b;
        case CompareOp::gt: return a > b;
        case CompareOp::ge: return a >= b;
      }
      return false;
    };
    return both_int ? cmp(lhs.integer(), rhs.integer()) : cmp(lhs.number(), rhs.number());
  }
  if (op == CompareOp::eq) return lhs == rhs;
  if (op == CompareOp::ne) return !(lhs == rhs);
  if (lhs.is_string() && rhs.is_string()) {
    const int c = lhs.str().compare(rhs.str());
    switch (op) {
      case CompareOp::lt: return c < 0;
      case CompareOp::le: return c <= 0;
      case CompareOp::gt: return c > 0;
      default: return c >= 0;
    }
  }
  throw RuntimeError(RuntimeError::Kind::type_error, line,
                     "cannot order " + std::string(type_name(lhs)) + " and " + std::string(type_name(rhs)));
}

Interpreter::Interpreter(Dispatch dispatch, std::size_t step_budget)
    : dispatch_(std::move(dispatch)), budget_(step_budget) {}

Value Interpreter::run(const Program& program, Environment env) {
  env_ = std::move(env);
  trace_.clear();
  steps_ = 0;
  line_ = 0;
  Value last;
  try {
    exec_block(program, last);
  } catch (ReturnSignal& r) {
    return std::move(r.value);
  }
  return last;
}

void Interpreter::tick() {
  if (++steps_ > budget_)
    throw RuntimeError(RuntimeError::Kind::step_budget, line_,
                       "step budget of " + std::to_string(budget_) + " exceeded");
}

void Interpreter::exec_block(const Program& p, Value& last) {
  for (const auto& s : p.statements) exec(s, last);
}

void Interpreter::exec(const Stmt& s, Value& last) {
  line_ = s.line;
  tick();
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, CallStmt>) {
          last = eval(Expr{n.call});
        } else if constexpr (std::is_same_v<T, Assign>) {
          Value v = eval(n.value);
          env_[n.var] = v;
          last = std::move(v);
        } else if constexpr (std::is_same_v<T, If>) {
          if (eval(n.cond).truthy()) exec_block(n.then_body, last);
          else exec_block(n.else_body, last);
        } else if constexpr (std::is_same_v<T, For>) {
          Value iterable = eval(n.iterable);
          if (!iterable.is_list())
            throw RuntimeError(RuntimeError::Kind::type_error, s.line,
                               "for loop needs a list, got " + std::string(type_name(iterable)));
          for (const auto& item : iterable.list()) {
            env_[n.var] = item;
            exec_block(n.body, last);
          }
        } else {
          throw ReturnSignal{eval(n.value)};
        }
      },
      s.node);
}

Value Interpreter::eval(const Expr& e) {
  return std::visit(
      [&](const auto& n) -> Value {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, StringLit>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, IntLit>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, FloatLit>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, BoolLit>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, Var>) {
          auto it = env_.find(n.name);
          if (it == env_.end())
            throw RuntimeError(RuntimeError::Kind::unbound_variable, line_, "'" + n.name + "' is not bound");
          return it->second;
        } else if constexpr (std::is_same_v<T, CallExpr>) {
          std::vector<Value> args;
          args.reserve(n.args.size());
          for (const auto& a : n.args) args.push_back(eval(a));
          tick();
          Value result;
          try {
            result = dispatch_(n.name, args);
          } catch (const RuntimeError&) {
            throw;
          } catch (const std::exception& ex) {
            trace_.push_back({n.name, args, Value{}});
            throw RuntimeError(RuntimeError::Kind::dispatch_failure, line_, n.name + ": " + ex.what());
          }
          trace_.push_back({n.name, std::move(args), result});
          return result;
        } else if constexpr (std::is_same_v<T, Compare>) {
          Value lhs = eval(*n.lhs);
          Value rhs = eval(*n.rhs);
          return compare_values(n.op, lhs, rhs, line_);
        } else {
          List items;
          items.reserve(n.items.size());
          for (const auto& item : n.items) items.push_back(eval(item));
          return items;
        }
      },
      e.node);
}

}  // namespace morevqa::lang
