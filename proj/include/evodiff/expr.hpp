#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace evodiff {

/// A parsed arithmetic expression over a fixed list of variables.
///
/// Grammar: +, -, *, /, ^ (right-associative power), unary minus,
/// parentheses, floating literals, named constants bound at parse time, and
/// the usual scalar functions exp, log, sin, cos, sqrt, abs, tanh.
/// Expressions compile to a flat postfix program, so evaluation in node
/// loops costs no recursion and no allocation.
class Expression {
public:
    /// Parses `text`.  `variables` fixes the evaluation signature (for
    /// reaction terms: {"u1",...,"um"}; for growth laws: {"t"}; for initial
    /// data: {"x","y","z"}).  Unknown identifiers that are not variables,
    /// constants, or functions are reported with their column.
    static Expression parse(const std::string& text,
                            const std::vector<std::string>& variables,
                            const std::map<std::string, double>& constants = {});

    /// Evaluates with `values[i]` bound to `variables[i]`.  Throws EvalError
    /// (echoing the inputs) if the result is not finite.
    double eval(std::span<const double> values) const;

    /// Like eval() but returns the raw value, finite or not.  Used by
    /// admissibility samplers that want to classify the failure themselves.
    double eval_unchecked(std::span<const double> values) const;

    const std::string& text() const { return text_; }
    std::size_t arity() const { return arity_; }

private:
    enum class Op : unsigned char { PushConst, PushVar, Add, Sub, Mul, Div, Pow, Neg, Call };

    struct Instr {
        Op op;
        unsigned idx = 0; // constant slot, variable slot, or function id
    };

    std::string text_;
    std::size_t arity_ = 0;
    std::vector<Instr> program_;
    std::vector<double> pool_;   // literal and named-constant values
    std::size_t stack_need_ = 1;

    friend class ExprParser;
};

} // namespace evodiff
