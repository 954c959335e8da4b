#include "morevqa/program.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace morevqa::lang {

bool CallExpr::operator==(const CallExpr& o) const { return name == o.name && args == o.args; }
bool Compare::operator==(const Compare& o) const { return op == o.op && lhs == o.lhs && rhs == o.rhs; }
bool ListLit::operator==(const ListLit& o) const { return items == o.items; }
bool Program::operator==(const Program& o) const { return statements == o.statements; }

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::eq: return "==";
    case CompareOp::ne: return "!=";
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
  }
  return "?";
}

std::string_view to_string(Mode m) { return m == Mode::flat ? "flat" : "extended"; }

ParseError::ParseError(int line, int col, std::string message, std::string snippet)
    : std::runtime_error("line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + message),
      line_(line),
      col_(col),
      message_(std::move(message)),
      snippet_(std::move(snippet)) {}

bool is_keyword(std::string_view word) {
  static constexpr std::array<std::string_view, 7> kKeywords = {"if",     "else", "for", "in",
                                                                "return", "true", "false"};
  for (auto k : kKeywords)
    if (k == word) return true;
  return false;
}

namespace {

enum class Tok { ident, string, integer, floating, lparen, rparen, lbracket, rbracket, comma, colon, assign, cmp, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;  // identifier name, decoded string, or numeric spelling
  CompareOp op = CompareOp::eq;
  int col = 0;  // 1-based
};

struct Line {
  int number = 0;
  int indent = 0;
  std::string_view raw;
  std::vector<Token> tokens;
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  Lexer(std::string_view raw, int line_no, int start) : raw_(raw), line_(line_no), pos_(start) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      while (pos_ < raw_.size() && raw_[pos_] == ' ') ++pos_;
      if (pos_ >= raw_.size()) break;
      out.push_back(next());
    }
    out.push_back(Token{Tok::end, "", CompareOp::eq, static_cast<int>(raw_.size()) + 1});
    return out;
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& msg) const {
    throw ParseError(line_, static_cast<int>(at) + 1, msg, std::string(raw_));
  }

  Token next() {
    const std::size_t start = pos_;
    const int col = static_cast<int>(start) + 1;
    const char c = raw_[pos_];
    auto single = [&](Tok k) {
      ++pos_;
      return Token{k, std::string(1, c), CompareOp::eq, col};
    };
    switch (c) {
      case '(': return single(Tok::lparen);
      case ')': return single(Tok::rparen);
      case '[': return single(Tok::lbracket);
      case ']': return single(Tok::rbracket);
      case ',': return single(Tok::comma);
      case ':': return single(Tok::colon);
      case '"': return string_literal();
      default: break;
    }
    if (c == '=' || c == '!' || c == '<' || c == '>') {
      const bool has_eq = pos_ + 1 < raw_.size() && raw_[pos_ + 1] == '=';
      Token t{Tok::cmp, "", CompareOp::eq, col};
      if (c == '=') {
        if (!has_eq) {
          ++pos_;
          return Token{Tok::assign, "=", CompareOp::eq, col};
        }
        t.op = CompareOp::eq;
      } else if (c == '!') {
        if (!has_eq) fail(start, "unknown token '!'");
        t.op = CompareOp::ne;
      } else if (c == '<') {
        t.op = has_eq ? CompareOp::le : CompareOp::lt;
      } else {
        t.op = has_eq ? CompareOp::ge : CompareOp::gt;
      }
      pos_ += has_eq ? 2 : 1;
      t.text = std::string(to_string(t.op));
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < raw_.size() && std::isdigit(static_cast<unsigned char>(raw_[pos_ + 1])))) {
      return number();
    }
    if (is_ident_start(c)) {
      while (pos_ < raw_.size() && is_ident_char(raw_[pos_])) ++pos_;
      return Token{Tok::ident, std::string(raw_.substr(start, pos_ - start)), CompareOp::eq, col};
    }
    if (c == '\t') fail(start, "tab characters are not allowed");
    fail(start, std::string("unknown token '") + c + "'");
  }

  Token number() {
    const std::size_t start = pos_;
    if (raw_[pos_] == '-') ++pos_;
    auto digits = [&] {
      const std::size_t s = pos_;
      while (pos_ < raw_.size() && std::isdigit(static_cast<unsigned char>(raw_[pos_]))) ++pos_;
      return pos_ > s;
    };
    digits();
    bool is_float = false;
    if (pos_ < raw_.size() && raw_[pos_] == '.') {
      is_float = true;
      ++pos_;
      if (!digits()) fail(pos_, "expected digits after decimal point");
    }
    if (pos_ < raw_.size() && (raw_[pos_] == 'e' || raw_[pos_] == 'E')) {
      is_float = true;
      ++pos_;
      if (pos_ < raw_.size() && (raw_[pos_] == '+' || raw_[pos_] == '-')) ++pos_;
      if (!digits()) fail(pos_, "expected exponent digits");
    }
    if (pos_ < raw_.size() && is_ident_char(raw_[pos_])) fail(pos_, "malformed number");
    return Token{is_float ? Tok::floating : Tok::integer, std::string(raw_.substr(start, pos_ - start)),
                 CompareOp::eq, static_cast<int>(start) + 1};
  }

  Token string_literal() {
    const std::size_t start = pos_;
    ++pos_;
    std::string value;
    while (true) {
      if (pos_ >= raw_.size()) fail(start, "unterminated string literal");
      const char c = raw_[pos_++];
      if (c == '"') break;
      if (c != '\\') {
        value.push_back(c);
        continue;
      }
      if (pos_ >= raw_.size()) fail(start, "unterminated string literal");
      const char e = raw_[pos_++];
      switch (e) {
        case '"': value.push_back('"'); break;
        case '\\': value.push_back('\\'); break;
        case 'n': value.push_back('\n'); break;
        case 't': value.push_back('\t'); break;
        case 'r': value.push_back('\r'); break;
        default: fail(pos_ - 2, std::string("unknown escape '\\") + e + "'");
      }
    }
    return Token{Tok::string, std::move(value), CompareOp::eq, static_cast<int>(start) + 1};
  }

  std::string_view raw_;
  int line_;
  std::size_t pos_;
};

class Parser {
 public:
  Parser(std::vector<Line> lines, Mode mode) : lines_(std::move(lines)), mode_(mode) {}

  Program run() {
    Program p = block(0, 0);
    if (idx_ < lines_.size()) fail_line(lines_[idx_], 1, "unexpected indentation");
    return p;
  }

 private:
  [[noreturn]] void fail_line(const Line& l, int col, const std::string& msg) const {
    throw ParseError(l.number, col, msg, std::string(l.raw));
  }
  [[noreturn]] void fail(const std::string& msg) const { fail_line(*line_, tok().col, msg); }

  const Token& tok() const { return line_->tokens[tpos_]; }
  const Token& advance() { return line_->tokens[tpos_++]; }
  bool at(Tok k) const { return tok().kind == k; }
  bool at_word(std::string_view w) const { return tok().kind == Tok::ident && tok().text == w; }
  void expect(Tok k, std::string_view what) {
    if (!at(k)) fail("expected " + std::string(what));
    ++tpos_;
  }
  void expect_end() {
    if (!at(Tok::end)) fail("unexpected token '" + tok().text + "'");
  }

  Program block(int indent, int depth) {
    if (depth > kMaxDepth) fail_line(lines_[idx_], 1, "block nesting exceeds depth bound");
    Program p;
    while (idx_ < lines_.size()) {
      const Line& l = lines_[idx_];
      if (l.indent < indent) break;
      if (l.indent > indent) fail_line(l, 1, "unexpected indentation");
      p.statements.push_back(statement(indent, depth));
    }
    return p;
  }

  Program child_block(int indent, int depth, const Line& header) {
    if (idx_ >= lines_.size() || lines_[idx_].indent <= indent)
      fail_line(header, static_cast<int>(header.raw.size()) + 1, "expected an indented block");
    if (lines_[idx_].indent != indent + 4) fail_line(lines_[idx_], 1, "indentation must be 4 spaces per level");
    return block(indent + 4, depth + 1);
  }

  void begin_line(const Line& l) {
    line_ = &l;
    tpos_ = 0;
    expr_depth_ = 0;
  }

  void require_extended(std::string_view construct) {
    if (mode_ == Mode::flat) fail("'" + std::string(construct) + "' is not allowed in flat mode");
  }

  Stmt statement(int indent, int depth) {
    const Line& l = lines_[idx_++];
    begin_line(l);
    Stmt s;
    s.line = l.number;
    if (at_word("if")) {
      require_extended("if");
      advance();
      If node;
      node.cond = expr();
      expect(Tok::colon, "':' after if condition");
      expect_end();
      node.then_body = child_block(indent, depth, l);
      if (idx_ < lines_.size() && lines_[idx_].indent == indent) {
        const Line& el = lines_[idx_];
        begin_line(el);
        if (at_word("else")) {
          ++idx_;
          advance();
          expect(Tok::colon, "':' after else");
          expect_end();
          node.else_body = child_block(indent, depth, el);
        }
      }
      s.node = std::move(node);
      return s;
    }
    if (at_word("else")) fail("'else' without matching 'if'");
    if (at_word("for")) {
      require_extended("for");
      advance();
      For node;
      node.var = identifier("loop variable");
      if (!at_word("in")) fail("expected 'in'");
      advance();
      node.iterable = expr();
      expect(Tok::colon, "':' after for header");
      expect_end();
      node.body = child_block(indent, depth, l);
      s.node = std::move(node);
      return s;
    }
    if (at_word("return")) {
      require_extended("return");
      advance();
      s.node = Return{expr()};
      expect_end();
      return s;
    }
    if (!at(Tok::ident) || is_keyword(tok().text)) fail("expected a statement");
    if (line_->tokens[tpos_ + 1].kind == Tok::assign) {
      Assign a;
      a.var = identifier("variable");
      advance();
      a.value = expr();
      expect_end();
      s.node = std::move(a);
      return s;
    }
    Expr e = expr();
    expect_end();
    auto* c = std::get_if<CallExpr>(&e.node);
    if (c == nullptr) fail_line(l, 1, "statement must be a call or an assignment");
    s.node = CallStmt{std::move(*c)};
    return s;
  }

  std::string identifier(std::string_view what) {
    if (!at(Tok::ident) || is_keyword(tok().text)) fail("expected " + std::string(what));
    return advance().text;
  }

  void enter() {
    if (++expr_depth_ > kMaxDepth) fail("expression nesting exceeds depth bound");
  }
  void leave() { --expr_depth_; }

  Expr expr() {
    Expr lhs = operand();
    if (!at(Tok::cmp)) return lhs;
    const CompareOp op = advance().op;
    Expr rhs = operand();
    if (at(Tok::cmp)) fail("chained comparisons are not supported");
    return Expr{Compare{op, std::move(lhs), std::move(rhs)}};
  }

  std::vector<Expr> list_until(Tok close, std::string_view what) {
    std::vector<Expr> items;
    if (at(close)) {
      advance();
      return items;
    }
    while (true) {
      items.push_back(expr());
      if (at(Tok::comma)) {
        advance();
        continue;
      }
      expect(close, what);
      return items;
    }
  }

  Expr operand() {
    const Token& t = tok();
    switch (t.kind) {
      case Tok::string: return Expr{StringLit{advance().text}};
      case Tok::integer: {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{} || p != t.text.data() + t.text.size()) fail("integer literal out of range");
        advance();
        return Expr{IntLit{v}};
      }
      case Tok::floating: {
        double v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{} || p != t.text.data() + t.text.size()) fail("float literal out of range");
        advance();
        return Expr{FloatLit{v}};
      }
      case Tok::lbracket: {
        advance();
        enter();
        ListLit l{list_until(Tok::rbracket, "']' or ','")};
        leave();
        return Expr{std::move(l)};
      }
      case Tok::lparen: {
        advance();
        enter();
        Expr inner = expr();
        expect(Tok::rparen, "')'");
        leave();
        return inner;
      }
      case Tok::ident: {
        if (t.text == "true" || t.text == "false") {
          const bool v = t.text == "true";
          advance();
          return Expr{BoolLit{v}};
        }
        if (is_keyword(t.text)) fail("unexpected keyword '" + t.text + "'");
        std::string name = advance().text;
        if (!at(Tok::lparen)) return Expr{Var{std::move(name)}};
        advance();
        enter();
        CallExpr c{std::move(name), list_until(Tok::rparen, "')' or ','")};
        leave();
        return Expr{std::move(c)};
      }
      case Tok::end: fail("unexpected end of line");
      default: fail("unexpected token '" + t.text + "'");
    }
  }

  std::vector<Line> lines_;
  Mode mode_;
  std::size_t idx_ = 0;
  const Line* line_ = nullptr;
  std::size_t tpos_ = 0;
  int expr_depth_ = 0;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    ++number;
    start = end + 1;

    std::size_t indent = 0;
    while (indent < raw.size() && raw[indent] == ' ') ++indent;
    if (indent < raw.size() && raw[indent] == '\t')
      throw ParseError(number, static_cast<int>(indent) + 1, "tab characters are not allowed", std::string(raw));
    if (indent == raw.size() || raw[indent] == '#') {
      if (end == text.size()) break;
      continue;
    }
    if (indent % 4 != 0)
      throw ParseError(number, 1, "indentation must be a multiple of 4 spaces", std::string(raw));
    Line l;
    l.number = number;
    l.indent = static_cast<int>(indent);
    l.raw = raw;
    l.tokens = Lexer(raw, number, static_cast<int>(indent)).run();
    lines.push_back(std::move(l));
    if (end == text.size()) break;
  }
  return lines;
}

// ---------------------------------------------------------------------------
// Rendering

void render_string(std::string& out, const std::string& s) {
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
}

void render_float(std::string& out, double v) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string s(buf.data(), p);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  out += s;
}

void render_expr(std::string& out, const Expr& e);

void render_args(std::string& out, const std::vector<Expr>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    render_expr(out, args[i]);
  }
}

void render_operand(std::string& out, const Expr& e) {
  if (std::holds_alternative<Compare>(e.node)) {
    out.push_back('(');
    render_expr(out, e);
    out.push_back(')');
  } else {
    render_expr(out, e);
  }
}

void render_expr(std::string& out, const Expr& e) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, StringLit>) {
          render_string(out, n.value);
        } else if constexpr (std::is_same_v<T, IntLit>) {
          out += std::to_string(n.value);
        } else if constexpr (std::is_same_v<T, FloatLit>) {
          render_float(out, n.value);
        } else if constexpr (std::is_same_v<T, BoolLit>) {
          out += n.value ? "true" : "false";
        } else if constexpr (std::is_same_v<T, Var>) {
          out += n.name;
        } else if constexpr (std::is_same_v<T, CallExpr>) {
          out += n.name;
          out.push_back('(');
          render_args(out, n.args);
          out.push_back(')');
        } else if constexpr (std::is_same_v<T, Compare>) {
          render_operand(out, *n.lhs);
          out.push_back(' ');
          out += to_string(n.op);
          out.push_back(' ');
          render_operand(out, *n.rhs);
        } else {
          out.push_back('[');
          render_args(out, n.items);
          out.push_back(']');
        }
      },
      e.node);
}

void render_block(std::string& out, const Program& p, int level) {
  const std::string pad(static_cast<std::size_t>(level) * 4, ' ');
  for (const auto& s : p.statements) {
    out += pad;
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, CallStmt>) {
            render_expr(out, Expr{n.call});
            out.push_back('\n');
          } else if constexpr (std::is_same_v<T, Assign>) {
            out += n.var + " = ";
            render_expr(out, n.value);
            out.push_back('\n');
          } else if constexpr (std::is_same_v<T, If>) {
            out += "if ";
            render_expr(out, n.cond);
            out += ":\n";
            render_block(out, n.then_body, level + 1);
            if (!n.else_body.statements.empty()) {
              out += pad + "else:\n";
              render_block(out, n.else_body, level + 1);
            }
          } else if constexpr (std::is_same_v<T, For>) {
            out += "for " + n.var + " in ";
            render_expr(out, n.iterable);
            out += ":\n";
            render_block(out, n.body, level + 1);
          } else {
            out += "return ";
            render_expr(out, n.value);
            out.push_back('\n');
          }
        },
        s.node);
  }
}

}  // namespace

Program parse(std::string_view text, Mode mode) {
  auto lines = split_lines(text);
  if (lines.empty()) throw ParseError(1, 1, "empty program", "");
  return Parser(std::move(lines), mode).run();
}

std::string render(const Program& program) {
  std::string out;
  render_block(out, program, 0);
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string render(const Expr& expr) {
  std::string out;
  render_expr(out, expr);
  return out;
}

ProgramFile parse_program_file(std::string_view contents) {
  const auto nl = contents.find('\n');
  std::string_view header = contents.substr(0, nl);
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  ProgramFile f;
  if (header == "#mode=flat") {
    f.mode = Mode::flat;
  } else if (header == "#mode=extended") {
    f.mode = Mode::extended;
  } else {
    throw ParseError(1, 1, "program file must start with '#mode=flat' or '#mode=extended'", std::string(header));
  }
  f.source = std::string(contents);
  f.program = parse(contents, f.mode);
  return f;
}

ProgramFile load_program_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open program file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_program_file(ss.str());
}

Expr str(std::string s) { return Expr{StringLit{std::move(s)}}; }
Expr integer(std::int64_t v) { return Expr{IntLit{v}}; }
Expr var(std::string name) { return Expr{Var{std::move(name)}}; }
Expr call(std::string name, std::vector<Expr> args) { return Expr{CallExpr{std::move(name), std::move(args)}}; }
Stmt call_stmt(std::string name, std::vector<Expr> args) {
  return Stmt{CallStmt{CallExpr{std::move(name), std::move(args)}}, 0};
}

}  // namespace morevqa::lang
