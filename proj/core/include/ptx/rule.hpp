#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ptx {

// Sum-of-products plasticity rules in the style of the Loihi 2 learning
// engine. Grammar:
//
//   expr   := ['-'] term (('+' | '-') term)*
//   term   := factor ('*' factor)*
//   factor := INT | VAR | '(' VAR ('+' | '-') INT ')'
//   VAR    := x0 | x1 | x2 | y0 | y1 | y2 | y3 | w

enum class FactorKind : std::uint8_t { X0, X1, X2, Y0, Y1, Y2, Y3, W, Constant };

inline constexpr std::size_t kVariableCount = 8;

std::string_view factor_name(FactorKind kind);
bool is_spike(FactorKind kind) noexcept;

struct Factor {
  FactorKind kind = FactorKind::Constant;
  /// Additive offset, e.g. -64 in "(x1 - 64)". Always 0 for constants.
  std::int64_t offset = 0;
  /// Value of a constant factor.
  std::int64_t constant = 0;

  static Factor variable(FactorKind kind, std::int64_t offset = 0);
  static Factor literal(std::int64_t value);

  bool operator==(const Factor&) const = default;
};

struct ProductTerm {
  int sign = 1;
  std::vector<Factor> factors;

  bool operator==(const ProductTerm&) const = default;
};

class RuleSyntaxError : public std::invalid_argument {
 public:
  RuleSyntaxError(const std::string& message, std::size_t position);
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class RuleExpr {
 public:
  /// Throws std::invalid_argument if a term is empty, holds two w factors, or
  /// a constant carries an offset.
  explicit RuleExpr(std::vector<ProductTerm> terms, std::string source_text = {});

  const std::vector<ProductTerm>& terms() const noexcept { return terms_; }
  const std::string& source_text() const noexcept { return source_; }
  bool references(FactorKind kind) const;

  /// Structural equality; the source text is not compared.
  friend bool operator==(const RuleExpr& a, const RuleExpr& b) { return a.terms_ == b.terms_; }

 private:
  std::vector<ProductTerm> terms_;
  std::string source_;
};

RuleExpr parse_rule(std::string_view text);
/// Canonical text form: factors joined by " * ", terms by " + " / " - ".
std::string render(const RuleExpr& rule);

/// Two-factor keys rule: row := decoded x1 on a post-synaptic y0 trigger.
inline constexpr std::string_view kKeysRule = "2 * y0 * (x1 - 64) - y0 * w";
/// Three-factor values rule: column := y2 - y3 on a pre-synaptic x0 trigger.
inline constexpr std::string_view kValuesRule = "x0 * y2 - x0 * y3 - x0 * y1 * w";

template <class T>
class FactorBinding {
 public:
  FactorBinding& set(FactorKind kind, T value);
  std::optional<T> get(FactorKind kind) const;

 private:
  std::array<std::optional<T>, kVariableCount> values_{};
};

/// dw = sum over terms of sign * product of factor values. Integer evaluation
/// is exact and throws std::overflow_error rather than wrapping. Throws
/// std::invalid_argument for a variable the binding does not set.
template <class T>
T evaluate_rule(const RuleExpr& rule, const FactorBinding<T>& binding);

extern template class FactorBinding<std::int64_t>;
extern template class FactorBinding<double>;
extern template std::int64_t evaluate_rule(const RuleExpr&, const FactorBinding<std::int64_t>&);
extern template double evaluate_rule(const RuleExpr&, const FactorBinding<double>&);

}  // namespace ptx
