#include "eqdisc/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>

#include "eqdisc/error.hpp"

namespace eqdisc {

namespace {

constexpr int kMaxNesting = 256;

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, comma, end };

struct Token {
  Tok kind = Tok::end;
  std::size_t pos = 0;
  std::string_view text;
  double number = 0.0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    Token t;
    t.pos = pos_;
    if (pos_ >= src_.size()) return t;
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return lex_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      t.kind = Tok::ident;
      t.text = src_.substr(start, pos_ - start);
      return t;
    }
    ++pos_;
    switch (c) {
      case '+': t.kind = Tok::plus; break;
      case '-': t.kind = Tok::minus; break;
      case '/': t.kind = Tok::slash; break;
      case '^': t.kind = Tok::caret; break;
      case '(': t.kind = Tok::lparen; break;
      case ')': t.kind = Tok::rparen; break;
      case ',': t.kind = Tok::comma; break;
      case '*':
        if (pos_ < src_.size() && src_[pos_] == '*') {
          ++pos_;
          t.kind = Tok::caret;
        } else {
          t.kind = Tok::star;
        }
        break;
      default:
        throw SyntaxError(t.pos, std::string("unexpected character '") + c + "'");
    }
    t.text = src_.substr(t.pos, pos_ - t.pos);
    return t;
  }

 private:
  Token lex_number() {
    Token t;
    t.pos = pos_;
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) throw SyntaxError(start, "malformed number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;
    }
    t.kind = Tok::number;
    t.text = src_.substr(start, pos_ - start);
    // from_chars rejects a leading '.', so pad it.
    std::string buf = t.text.front() == '.' ? "0" + std::string(t.text) : std::string(t.text);
    auto [ptr, ec] = std::from_chars(buf.data(), buf.data() + buf.size(), t.number);
    if (ec != std::errc() || ptr != buf.data() + buf.size() || !std::isfinite(t.number))
      throw SyntaxError(start, "number out of range: " + buf);
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

// Parameter slots before re-indexing: explicit pN tokens keep their N,
// promoted literals get keys past any explicit slot.
struct SlotKey {
  bool promoted;
  std::size_t id;
  auto operator<=>(const SlotKey&) const = default;
};

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>* vars, const ParseOptions& opts)
      : lexer_(src), vars_(vars), opts_(opts) {
    if (!vars_) free_mode_ = true;
    advance();
  }

  NodePtr parse_all() {
    auto root = expr();
    if (cur_.kind != Tok::end) throw SyntaxError(cur_.pos, "unexpected '" + std::string(cur_.text) + "'");
    return root;
  }

  std::vector<std::string> discovered_vars() const { return free_vars_; }

 private:
  void advance() { cur_ = lexer_.next(); }

  bool accept(Tok k) {
    if (cur_.kind != k) return false;
    advance();
    return true;
  }

  void expect(Tok k, const char* what) {
    if (cur_.kind != k) {
      const std::string got = cur_.kind == Tok::end ? "end of input" : "'" + std::string(cur_.text) + "'";
      throw SyntaxError(cur_.pos, std::string("expected ") + what + ", got " + got);
    }
    advance();
  }

  struct NestGuard {
    explicit NestGuard(Parser& p) : p_(p) {
      if (++p_.nesting_ > kMaxNesting) throw SyntaxError(p_.cur_.pos, "expression nested too deeply");
    }
    ~NestGuard() { --p_.nesting_; }
    Parser& p_;
  };

  NodePtr expr() {
    NestGuard guard(*this);
    auto lhs = term();
    for (;;) {
      if (accept(Tok::plus)) {
        lhs = Node::make_binary(BinaryOp::add, lhs, term());
      } else if (accept(Tok::minus)) {
        lhs = Node::make_binary(BinaryOp::sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (accept(Tok::star)) {
        lhs = Node::make_binary(BinaryOp::mul, lhs, unary());
      } else if (accept(Tok::slash)) {
        lhs = Node::make_binary(BinaryOp::div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    NestGuard guard(*this);
    if (accept(Tok::minus)) return Node::make_neg(unary());
    if (accept(Tok::plus)) return unary();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    if (accept(Tok::caret)) return Node::make_binary(BinaryOp::pow, base, exponent());
    return base;
  }

  NodePtr exponent() {
    NestGuard guard(*this);
    if (accept(Tok::minus)) return Node::make_neg(exponent());
    if (accept(Tok::plus)) return exponent();
    return power();
  }

  NodePtr primary() {
    const Token t = cur_;
    switch (t.kind) {
      case Tok::number:
        advance();
        if (opts_.promote_literals) return slot({true, promoted_++});
        return Node::make_constant(t.number);
      case Tok::lparen: {
        advance();
        auto inner = expr();
        expect(Tok::rparen, "')'");
        return inner;
      }
      case Tok::ident:
        advance();
        return identifier(t);
      case Tok::end:
        throw SyntaxError(t.pos, "unexpected end of input");
      default:
        throw SyntaxError(t.pos, "unexpected '" + std::string(t.text) + "'");
    }
  }

  NodePtr identifier(const Token& t) {
    const std::string name(t.text);
    if (cur_.kind == Tok::lparen) {
      advance();
      std::vector<NodePtr> args;
      if (cur_.kind != Tok::rparen) {
        args.push_back(expr());
        while (accept(Tok::comma)) args.push_back(expr());
      }
      expect(Tok::rparen, "')'");
      if (name == "pow") {
        if (args.size() != 2) throw ValidationError("pow takes 2 arguments, got " + std::to_string(args.size()));
        return Node::make_binary(BinaryOp::pow, args[0], args[1]);
      }
      auto f = find_function(name);
      if (!f) throw ValidationError("unknown function '" + name + "' at " + std::to_string(t.pos));
      if (args.size() != function_arity(*f))
        throw ValidationError("function " + name + " takes " + std::to_string(function_arity(*f)) +
                              " argument(s), got " + std::to_string(args.size()));
      return Node::make_call(*f, args[0]);
    }
    if (is_param_token(name)) {
      std::size_t n = 0;
      std::from_chars(name.data() + 1, name.data() + name.size(), n);
      return slot({false, n});
    }
    if (find_function(name) || name == "pow")
      throw ValidationError("function '" + name + "' used without arguments at " + std::to_string(t.pos));
    if (free_mode_) {
      auto it = std::find(free_vars_.begin(), free_vars_.end(), name);
      if (it == free_vars_.end()) {
        free_vars_.push_back(name);
        return Node::make_var(free_vars_.size() - 1);
      }
      return Node::make_var(static_cast<std::size_t>(it - free_vars_.begin()));
    }
    auto it = std::find(vars_->begin(), vars_->end(), name);
    if (it == vars_->end())
      throw ValidationError("unknown variable '" + name + "' at " + std::to_string(t.pos));
    return Node::make_var(static_cast<std::size_t>(it - vars_->begin()));
  }

  NodePtr slot(SlotKey key) {
    auto [it, inserted] = slots_.try_emplace(key, slots_.size());
    return Node::make_param(it->second);
  }

  Lexer lexer_;
  Token cur_;
  const std::vector<std::string>* vars_;
  ParseOptions opts_;
  bool free_mode_ = false;
  std::vector<std::string> free_vars_;
  std::map<SlotKey, std::size_t> slots_;
  std::size_t promoted_ = 0;
  int nesting_ = 0;
};

// Binding strength used by the serializer; higher binds tighter.
int precedence(const Node& n) noexcept {
  switch (n.kind) {
    case NodeKind::binary:
      switch (n.binary_op) {
        case BinaryOp::add:
        case BinaryOp::sub: return 1;
        case BinaryOp::mul:
        case BinaryOp::div: return 2;
        case BinaryOp::pow: return 4;
      }
      return 0;
    case NodeKind::unary: return 3;
    default: return 5;
  }
}

void write(const Node& n, std::span<const std::string> vars, std::string& out);

void write_wrapped(const Node& n, bool parens, std::span<const std::string> vars, std::string& out) {
  if (parens) out += '(';
  write(n, vars, out);
  if (parens) out += ')';
}

void write(const Node& n, std::span<const std::string> vars, std::string& out) {
  switch (n.kind) {
    case NodeKind::constant:
      out += format_number(n.value);
      return;
    case NodeKind::param:
      out += 'p';
      out += std::to_string(n.index);
      return;
    case NodeKind::var:
      if (n.index < vars.size()) {
        out += vars[n.index];
      } else {
        out += "v" + std::to_string(n.index);
      }
      return;
    case NodeKind::unary:
      out += '-';
      write_wrapped(*n.children[0], precedence(*n.children[0]) < 3, vars, out);
      return;
    case NodeKind::call:
      out += function_name(n.function);
      out += '(';
      write(*n.children[0], vars, out);
      out += ')';
      return;
    case NodeKind::binary: {
      const Node& lhs = *n.children[0];
      const Node& rhs = *n.children[1];
      const int p = precedence(n);
      if (n.binary_op == BinaryOp::pow) {
        write_wrapped(lhs, precedence(lhs) <= 4, vars, out);
        out += '^';
        write_wrapped(rhs, precedence(rhs) < 3, vars, out);
        return;
      }
      write_wrapped(lhs, precedence(lhs) < p, vars, out);
      if (p == 1) {
        out += ' ';
        out += binary_symbol(n.binary_op);
        out += ' ';
      } else {
        out += binary_symbol(n.binary_op);
      }
      write_wrapped(rhs, precedence(rhs) <= p, vars, out);
      return;
    }
  }
}


}  // namespace

Expression parse(std::string_view text, const std::vector<std::string>& var_names,
                 const ParseOptions& options) {
  Parser parser(text, &var_names, options);
  // Slots are numbered by first appearance, so "p3 + p7" becomes p0 + p1.
  auto root = parser.parse_all();
  return Expression(std::move(root), var_names, std::string(text));
}

Expression parse(std::string_view text, const ProblemSpec& spec, const ParseOptions& options) {
  return parse(text, spec.var_names, options);
}

Expression parse_free(std::string_view text, const ParseOptions& options) {
  Parser parser(text, nullptr, options);
  auto root = parser.parse_all();
  return Expression(std::move(root), parser.discovered_vars(), std::string(text));
}

std::string serialize(const Node& root, std::span<const std::string> var_names) {
  std::string out;
  write(root, var_names, out);
  return out;
}

std::string serialize(const Expression& e) { return serialize(e.root(), e.var_names()); }

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

const std::string& grammar_reference() {
  static const std::string text =
      "Expression grammar (one expression, no statements):\n"
      "- operators: + - * / ^ (also **); precedence ^ > unary - > * / > + -; ^ is right-associative\n"
      "- parentheses group sub-expressions\n"
      "- functions (one argument each): sin cos tan tanh exp log sqrt abs gamma sigmoid clip01;\n"
      "  pow(a, b) is the same as a^b; log is the natural logarithm; sigmoid(z) = 1/(1+exp(-z));\n"
      "  clip01(z) limits z to [0, 1]\n"
      "- learnable parameters are written p0, p1, p2, ... and are fitted to the data\n"
      "- decimal literals (e.g. 2, 0.5, 1e-3) are fixed constants\n"
      "- only the listed input variables may appear\n";
  return text;
}

// ---------------------------------------------------------------------------

bool is_identifier(const std::string& s) noexcept {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

bool is_param_token(const std::string& s) noexcept {
  return s.size() >= 2 && s[0] == 'p' &&
         std::all_of(s.begin() + 1, s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

void ProblemSpec::validate() const {
  if (var_names.empty()) throw ValidationError("problem '" + name + "' declares no input variables");
  std::set<std::string> seen;
  for (const auto& v : var_names) {
    if (!is_identifier(v)) throw ValidationError("'" + v + "' is not a valid identifier");
    if (is_param_token(v)) throw ValidationError("variable '" + v + "' collides with a parameter token");
    if (find_function(v) || v == "pow") throw ValidationError("variable '" + v + "' collides with a function name");
    if (!seen.insert(v).second) throw ValidationError("duplicate variable '" + v + "'");
  }
  if (domain_tag.empty()) throw ValidationError("problem '" + name + "' has an empty domain tag");
}

}  // namespace eqdisc
