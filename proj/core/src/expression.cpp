#include "dp/expression.hpp"

#include "dp/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <utility>

namespace dp::expr {

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& vars, Expression& out)
      : src_(src), vars_(vars), out_(out) {}

  void run() {
    parse_sum();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected character");
    // Simulate the stack depth.
    long depth = 0, max_depth = 0;
    for (const auto& ins : out_.program_) {
      depth += stack_effect(ins.op);
      max_depth = std::max(max_depth, depth);
    }
    out_.max_stack_ = static_cast<std::size_t>(max_depth);
  }

 private:
  using Op = Expression::Op;

  static long stack_effect(Op op) {
    switch (op) {
      case Op::Constant:
      case Op::Variable:
        return 1;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
      case Op::Pow:
      case Op::Pow2:
      case Op::Min:
      case Op::Max:
        return -1;
      default:
        return 0;
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + std::string(src_) + "': " + what + " at position " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void emit(Op op, double value = 0.0, std::size_t index = 0) { out_.program_.push_back({op, value, index}); }

  void parse_sum() {
    parse_product();
    for (;;) {
      if (accept('+')) {
        parse_product();
        emit(Op::Add);
      } else if (accept('-')) {
        parse_product();
        emit(Op::Sub);
      } else {
        return;
      }
    }
  }

  void parse_product() {
    parse_unary();
    for (;;) {
      if (accept('*')) {
        parse_unary();
        emit(Op::Mul);
      } else if (accept('/')) {
        parse_unary();
        emit(Op::Div);
      } else {
        return;
      }
    }
  }

  // Unary minus binds looser than ^, so -x^2 = -(x^2).
  void parse_unary() {
    if (accept('-')) {
      parse_unary();
      emit(Op::Neg);
    } else if (accept('+')) {
      parse_unary();
    } else {
      parse_power();
    }
  }

  void parse_power() {
    parse_atom();
    if (accept('^')) {
      parse_unary();
      emit(Op::Pow);
    }
  }

  void parse_atom() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of expression");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::string rest(src_.substr(pos_));
      char* end = nullptr;
      const double v = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str()) fail("invalid number");
      pos_ += static_cast<std::size_t>(end - rest.c_str());
      emit(Op::Constant, v);
      return;
    }
    if (accept('(')) {
      parse_sum();
      if (!accept(')')) fail("expected ')'");
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      const std::string name(src_.substr(start, pos_ - start));
      if (accept('(')) {
        parse_call(name);
        return;
      }
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == name) {
          emit(Op::Variable, 0.0, i);
          return;
        }
      }
      if (name == "pi") {
        emit(Op::Constant, std::numbers::pi);
      } else if (name == "e") {
        emit(Op::Constant, std::numbers::e);
      } else {
        pos_ = start;
        fail("unknown identifier '" + name + "'");
      }
      return;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  void parse_call(const std::string& name) {
    static const std::array<std::pair<const char*, Op>, 14> unary{{{"sin", Op::Sin},
                                                                   {"cos", Op::Cos},
                                                                   {"tan", Op::Tan},
                                                                   {"asin", Op::Asin},
                                                                   {"acos", Op::Acos},
                                                                   {"atan", Op::Atan},
                                                                   {"sinh", Op::Sinh},
                                                                   {"cosh", Op::Cosh},
                                                                   {"tanh", Op::Tanh},
                                                                   {"exp", Op::Exp},
                                                                   {"log", Op::Log},
                                                                   {"sqrt", Op::Sqrt},
                                                                   {"abs", Op::Abs},
                                                                   {"sign", Op::Sign}}};
    static const std::array<std::pair<const char*, Op>, 3> binary{
        {{"pow", Op::Pow2}, {"min", Op::Min}, {"max", Op::Max}}};
    for (const auto& [fname, op] : unary) {
      if (name == fname) {
        parse_sum();
        if (!accept(')')) fail("expected ')' after argument of " + name);
        emit(op);
        return;
      }
    }
    for (const auto& [fname, op] : binary) {
      if (name == fname) {
        parse_sum();
        if (!accept(',')) fail("expected ',' in " + name);
        parse_sum();
        if (!accept(')')) fail("expected ')' after arguments of " + name);
        emit(op);
        return;
      }
    }
    fail("unknown function '" + name + "'");
  }

  std::string_view src_;
  const std::vector<std::string>& vars_;
  Expression& out_;
  std::size_t pos_ = 0;
};

Expression Expression::parse(std::string_view source, const std::vector<std::string>& variables) {
  Expression e;
  e.source_ = std::string(source);
  e.variables_ = variables;
  Parser(e.source_, e.variables_, e).run();
  return e;
}

bool Expression::uses(std::size_t index) const {
  return std::any_of(program_.begin(), program_.end(),
                     [&](const Instr& i) { return i.op == Op::Variable && i.index == index; });
}

double Expression::evaluate(std::span<const double> values) const {
  if (values.size() < variables_.size()) throw ConfigError("expression '" + source_ + "': too few variable values");
  constexpr std::size_t kInline = 32;
  std::array<double, kInline> inline_stack{};
  std::vector<double> heap_stack;
  double* stack = inline_stack.data();
  if (max_stack_ > kInline) {
    heap_stack.resize(max_stack_);
    stack = heap_stack.data();
  }
  std::size_t top = 0;
  for (const auto& ins : program_) {
    switch (ins.op) {
      case Op::Constant: stack[top++] = ins.value; break;
      case Op::Variable: stack[top++] = values[ins.index]; break;
      case Op::Add: --top; stack[top - 1] += stack[top]; break;
      case Op::Sub: --top; stack[top - 1] -= stack[top]; break;
      case Op::Mul: --top; stack[top - 1] *= stack[top]; break;
      case Op::Div: --top; stack[top - 1] /= stack[top]; break;
      case Op::Pow:
      case Op::Pow2: --top; stack[top - 1] = std::pow(stack[top - 1], stack[top]); break;
      case Op::Min: --top; stack[top - 1] = std::min(stack[top - 1], stack[top]); break;
      case Op::Max: --top; stack[top - 1] = std::max(stack[top - 1], stack[top]); break;
      case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
      case Op::Sin: stack[top - 1] = std::sin(stack[top - 1]); break;
      case Op::Cos: stack[top - 1] = std::cos(stack[top - 1]); break;
      case Op::Tan: stack[top - 1] = std::tan(stack[top - 1]); break;
      case Op::Asin: stack[top - 1] = std::asin(stack[top - 1]); break;
      case Op::Acos: stack[top - 1] = std::acos(stack[top - 1]); break;
      case Op::Atan: stack[top - 1] = std::atan(stack[top - 1]); break;
      case Op::Sinh: stack[top - 1] = std::sinh(stack[top - 1]); break;
      case Op::Cosh: stack[top - 1] = std::cosh(stack[top - 1]); break;
      case Op::Tanh: stack[top - 1] = std::tanh(stack[top - 1]); break;
      case Op::Exp: stack[top - 1] = std::exp(stack[top - 1]); break;
      case Op::Log: stack[top - 1] = std::log(stack[top - 1]); break;
      case Op::Sqrt: stack[top - 1] = std::sqrt(stack[top - 1]); break;
      case Op::Abs: stack[top - 1] = std::abs(stack[top - 1]); break;
      case Op::Sign: {
        const double v = stack[top - 1];
        stack[top - 1] = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        break;
      }
    }
  }
  return stack[0];
}

}  // namespace dp::expr
