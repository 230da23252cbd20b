#include "ptx/rule.hpp"

#include <cctype>
#include <limits>

namespace ptx {

namespace {

constexpr std::array<std::string_view, kVariableCount> kNames{"x0", "x1", "x2", "y0", "y1", "y2", "y3", "w"};

std::optional<FactorKind> lookup_variable(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<FactorKind>(i);
  }
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  RuleExpr parse() {
    skip_space();
    if (at_end()) fail("empty rule");
    std::vector<ProductTerm> terms;
    int sign = 1;
    if (peek() == '-') {
      sign = -1;
      advance();
    }
    terms.push_back(parse_term(sign));
    while (true) {
      skip_space();
      if (at_end()) break;
      const char op = peek();
      if (op != '+' && op != '-') fail(std::string("expected '+' or '-', found '") + op + "'");
      advance();
      terms.push_back(parse_term(op == '-' ? -1 : 1));
    }
    return RuleExpr(std::move(terms), std::string(text_));
  }

 private:
  ProductTerm parse_term(int sign) {
    ProductTerm term;
    term.sign = sign;
    std::size_t w_count = 0;
    while (true) {
      skip_space();
      const std::size_t start = pos_;
      Factor f = parse_factor();
      if (f.kind == FactorKind::W && ++w_count > 1) {
        throw RuleSyntaxError("term contains more than one w factor", start);
      }
      term.factors.push_back(f);
      skip_space();
      if (at_end() || peek() != '*') break;
      advance();
    }
    return term;
  }

  Factor parse_factor() {
    if (at_end()) fail("expected a factor, found end of input");
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c))) return Factor::literal(parse_int());
    if (c == '(') {
      advance();
      skip_space();
      const FactorKind kind = parse_variable();
      skip_space();
      if (at_end() || (peek() != '+' && peek() != '-')) fail("expected '+' or '-' inside parentheses");
      const bool minus = peek() == '-';
      advance();
      skip_space();
      if (at_end() || !std::isdigit(static_cast<unsigned char>(peek()))) fail("expected an integer offset");
      const std::int64_t value = parse_int();
      skip_space();
      if (at_end() || peek() != ')') fail("expected ')'");
      advance();
      return Factor::variable(kind, minus ? -value : value);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return Factor::variable(parse_variable());
    fail(std::string("unexpected character '") + c + "'");
  }

  FactorKind parse_variable() {
    const std::size_t start = pos_;
    while (!at_end() && std::isalnum(static_cast<unsigned char>(peek()))) advance();
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name.empty()) throw RuleSyntaxError("expected a variable name", start);
    const auto kind = lookup_variable(name);
    if (!kind) throw RuleSyntaxError("unknown variable '" + std::string(name) + "'", start);
    return *kind;
  }

  std::int64_t parse_int() {
    const std::size_t start = pos_;
    std::int64_t value = 0;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
      const int digit = peek() - '0';
      if (value > (std::numeric_limits<std::int64_t>::max() - digit) / 10) {
        throw RuleSyntaxError("integer literal too large", start);
      }
      value = value * 10 + digit;
      advance();
    }
    return value;
  }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  void advance() { ++pos_; }
  [[noreturn]] void fail(const std::string& message) const { throw RuleSyntaxError(message, pos_); }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("evaluate_rule: integer overflow");
  return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("evaluate_rule: integer overflow");
  return r;
}

}  // namespace

std::string_view factor_name(FactorKind kind) {
  if (kind == FactorKind::Constant) return "constant";
  return kNames[static_cast<std::size_t>(kind)];
}

bool is_spike(FactorKind kind) noexcept { return kind == FactorKind::X0 || kind == FactorKind::Y0; }

Factor Factor::variable(FactorKind kind, std::int64_t offset) {
  if (kind == FactorKind::Constant) throw std::invalid_argument("Factor::variable: constant kind");
  return Factor{kind, offset, 0};
}

Factor Factor::literal(std::int64_t value) { return Factor{FactorKind::Constant, 0, value}; }

RuleSyntaxError::RuleSyntaxError(const std::string& message, std::size_t position)
    : std::invalid_argument("rule syntax error at position " + std::to_string(position) + ": " + message),
      position_(position) {}

RuleExpr::RuleExpr(std::vector<ProductTerm> terms, std::string source_text)
    : terms_(std::move(terms)), source_(std::move(source_text)) {
  if (terms_.empty()) throw std::invalid_argument("RuleExpr: no terms");
  for (const auto& term : terms_) {
    if (term.sign != 1 && term.sign != -1) throw std::invalid_argument("RuleExpr: sign must be +1 or -1");
    if (term.factors.empty()) throw std::invalid_argument("RuleExpr: empty product term");
    std::size_t w = 0;
    for (const auto& f : term.factors) {
      if (f.kind == FactorKind::W) ++w;
      if (f.kind == FactorKind::Constant && f.offset != 0) {
        throw std::invalid_argument("RuleExpr: constant factor with an offset");
      }
      if (f.kind == FactorKind::Constant && f.constant < 0) {
        throw std::invalid_argument("RuleExpr: negative constant; use the term sign");
      }
    }
    if (w > 1) throw std::invalid_argument("RuleExpr: term contains more than one w factor");
  }
}

bool RuleExpr::references(FactorKind kind) const {
  for (const auto& term : terms_)
    for (const auto& f : term.factors)
      if (f.kind == kind) return true;
  return false;
}

RuleExpr parse_rule(std::string_view text) { return Parser(text).parse(); }

std::string render(const RuleExpr& rule) {
  std::string out;
  bool first = true;
  for (const auto& term : rule.terms()) {
    if (first) {
      if (term.sign < 0) out += "-";
    } else {
      out += term.sign < 0 ? " - " : " + ";
    }
    first = false;
    bool first_factor = true;
    for (const auto& f : term.factors) {
      if (!first_factor) out += " * ";
      first_factor = false;
      if (f.kind == FactorKind::Constant) {
        out += std::to_string(f.constant);
      } else if (f.offset == 0) {
        out += factor_name(f.kind);
      } else {
        out += "(";
        out += factor_name(f.kind);
        out += f.offset < 0 ? " - " : " + ";
        // Negate in unsigned arithmetic so INT64_MIN renders correctly.
        const auto magnitude = f.offset < 0 ? 0 - static_cast<std::uint64_t>(f.offset) : static_cast<std::uint64_t>(f.offset);
        out += std::to_string(magnitude);
        out += ")";
      }
    }
  }
  return out;
}

template <class T>
FactorBinding<T>& FactorBinding<T>::set(FactorKind kind, T value) {
  if (kind == FactorKind::Constant) throw std::invalid_argument("FactorBinding: cannot bind a constant");
  values_[static_cast<std::size_t>(kind)] = value;
  return *this;
}

template <class T>
std::optional<T> FactorBinding<T>::get(FactorKind kind) const {
  if (kind == FactorKind::Constant) return std::nullopt;
  return values_[static_cast<std::size_t>(kind)];
}

template <class T>
T evaluate_rule(const RuleExpr& rule, const FactorBinding<T>& binding) {
  T dw{};
  for (const auto& term : rule.terms()) {
    T product = static_cast<T>(term.sign);
    for (const auto& f : term.factors) {
      T value{};
      if (f.kind == FactorKind::Constant) {
        value = static_cast<T>(f.constant);
      } else {
        const auto bound = binding.get(f.kind);
        if (!bound) throw std::invalid_argument("evaluate_rule: unbound variable " + std::string(factor_name(f.kind)));
        if constexpr (std::is_integral_v<T>) {
          value = checked_add(*bound, f.offset);
        } else {
          value = *bound + static_cast<T>(f.offset);
        }
      }
      if constexpr (std::is_integral_v<T>) {
        product = checked_mul(product, value);
      } else {
        product *= value;
      }
    }
    if constexpr (std::is_integral_v<T>) {
      dw = checked_add(dw, product);
    } else {
      dw += product;
    }
  }
  return dw;
}

template class FactorBinding<std::int64_t>;
template class FactorBinding<double>;
template std::int64_t evaluate_rule(const RuleExpr&, const FactorBinding<std::int64_t>&);
template double evaluate_rule(const RuleExpr&, const FactorBinding<double>&);

}  // namespace ptx
