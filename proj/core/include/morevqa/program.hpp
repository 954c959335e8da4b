#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace morevqa::lang {

/// Heap-allocated value with deep copy and structural equality, used to
/// break recursion in the AST.
template <typename T>
class Box {
 public:
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT(google-explicit-constructor)
  Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;
  ~Box() = default;

  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) { return *a.ptr_ == *b.ptr_; }

 private:
  std::unique_ptr<T> ptr_;
};

enum class CompareOp { eq, ne, lt, le, gt, ge };
std::string_view to_string(CompareOp op);

struct Expr;

struct StringLit {
  std::string value;
  bool operator==(const StringLit&) const = default;
};
struct IntLit {
  std::int64_t value = 0;
  bool operator==(const IntLit&) const = default;
};
struct FloatLit {
  double value = 0.0;
  bool operator==(const FloatLit&) const = default;
};
struct BoolLit {
  bool value = false;
  bool operator==(const BoolLit&) const = default;
};
struct Var {
  std::string name;
  bool operator==(const Var&) const = default;
};
struct CallExpr {
  std::string name;
  std::vector<Expr> args;
  bool operator==(const CallExpr&) const;
};
struct Compare {
  CompareOp op = CompareOp::eq;
  Box<Expr> lhs;
  Box<Expr> rhs;
  bool operator==(const Compare&) const;
};
struct ListLit {
  std::vector<Expr> items;
  bool operator==(const ListLit&) const;
};

struct Expr {
  std::variant<StringLit, IntLit, FloatLit, BoolLit, Var, CallExpr, Compare, ListLit> node;
  bool operator==(const Expr&) const = default;
};

struct Stmt;

struct Program {
  std::vector<Stmt> statements;
  bool operator==(const Program&) const;
};

struct CallStmt {
  CallExpr call;
  bool operator==(const CallStmt&) const = default;
};
struct Assign {
  std::string var;
  Expr value;
  bool operator==(const Assign&) const = default;
};
struct If {
  Expr cond;
  Program then_body;
  Program else_body;
  bool operator==(const If&) const = default;
};
struct For {
  std::string var;
  Expr iterable;
  Program body;
  bool operator==(const For&) const = default;
};
struct Return {
  Expr value;
  bool operator==(const Return&) const = default;
};

struct Stmt {
  std::variant<CallStmt, Assign, If, For, Return> node;
  int line = 0;  // source line, 0 when built programmatically; ignored by ==
  bool operator==(const Stmt& other) const { return node == other.node; }
};

enum class Mode { flat, extended };
std::string_view to_string(Mode m);

inline constexpr int kMaxDepth = 16;

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int col, std::string message, std::string snippet);

  int line() const { return line_; }
  int col() const { return col_; }
  const std::string& message() const { return message_; }
  const std::string& snippet() const { return snippet_; }

 private:
  int line_;
  int col_;
  std::string message_;
  std::string snippet_;
};

/// Parses program text. Blank lines and lines starting with '#' are ignored.
/// Throws ParseError.
Program parse(std::string_view text, Mode mode);

/// Canonical text; parse(render(p), mode) == p for any grammar-valid p.
std::string render(const Program& program);
std::string render(const Expr& expr);

bool is_keyword(std::string_view word);

/// A `.mvp` file: first line `#mode=flat` or `#mode=extended`.
struct ProgramFile {
  Mode mode = Mode::flat;
  std::string source;
  Program program;
};

ProgramFile parse_program_file(std::string_view contents);
ProgramFile load_program_file(const std::filesystem::path& path);

// Convenience constructors.
Expr str(std::string s);
Expr integer(std::int64_t v);
Expr var(std::string name);
Expr call(std::string name, std::vector<Expr> args);
Stmt call_stmt(std::string name, std::vector<Expr> args);

}  // namespace morevqa::lang
