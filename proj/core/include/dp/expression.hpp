#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dp::expr {

// Compiled arithmetic expression over named variables.
//
// Grammar: numbers, variables, constants `pi` and `e`, binary + - * / ^
// (^ is right-associative), unary +/-, parentheses and the functions
// sin cos tan asin acos atan sinh cosh tanh exp log sqrt abs sign,
// pow(a, b), min(a, b), max(a, b).
//
// Evaluation is const and allocation-free apart from a small stack, so one
// instance may be shared across threads.
class Expression {
 public:
  // Throws ConfigError with the offending position on a syntax error or an
  // unknown identifier.
  static Expression parse(std::string_view source, const std::vector<std::string>& variables);

  // `values` are matched positionally with the variable list given to parse().
  [[nodiscard]] double evaluate(std::span<const double> values) const;

  [[nodiscard]] const std::string& source() const { return source_; }
  [[nodiscard]] const std::vector<std::string>& variables() const { return variables_; }
  // True if the variable at `index` appears in the expression.
  [[nodiscard]] bool uses(std::size_t index) const;

 private:
  enum class Op : unsigned char {
    Constant, Variable, Add, Sub, Mul, Div, Pow, Neg,
    Sin, Cos, Tan, Asin, Acos, Atan, Sinh, Cosh, Tanh, Exp, Log, Sqrt, Abs, Sign,
    Pow2, Min, Max
  };
  struct Instr {
    Op op;
    double value = 0.0;
    std::size_t index = 0;
  };
  friend class Parser;

  std::string source_;
  std::vector<std::string> variables_;
  std::vector<Instr> program_;
  std::size_t max_stack_ = 0;
};

}  // namespace dp::expr
