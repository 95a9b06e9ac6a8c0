#include "evodiff/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>

#include "evodiff/common.hpp"

namespace evodiff {

namespace {

struct Fn {
    const char* name;
    double (*call)(double);
};

const Fn kFunctions[] = {
    {"exp", [](double x) { return std::exp(x); }},
    {"log", [](double x) { return std::log(x); }},
    {"sin", [](double x) { return std::sin(x); }},
    {"cos", [](double x) { return std::cos(x); }},
    {"sqrt", [](double x) { return std::sqrt(x); }},
    {"abs", [](double x) { return std::fabs(x); }},
    {"tanh", [](double x) { return std::tanh(x); }},
};

int function_id(const std::string& name) {
    for (std::size_t i = 0; i < std::size(kFunctions); ++i)
        if (name == kFunctions[i].name) return static_cast<int>(i);
    return -1;
}

// x^k for integral k, by repeated multiplication.  Keeps small monomial
// powers exact and fast; non-integral exponents fall back to std::pow.
double power(double base, double expo) {
    const double r = std::nearbyint(expo);
    if (r == expo && std::fabs(r) <= 64.0) {
        long k = static_cast<long>(r);
        const bool inv = k < 0;
        k = std::labs(k);
        double acc = 1.0;
        double b = base;
        while (k > 0) {
            if (k & 1) acc *= b;
            b *= b;
            k >>= 1;
        }
        return inv ? 1.0 / acc : acc;
    }
    return std::pow(base, expo);
}

} // namespace

class ExprParser {
public:
    ExprParser(const std::string& text,
               const std::vector<std::string>& variables,
               const std::map<std::string, double>& constants)
        : text_(text), vars_(variables), consts_(constants) {}

    Expression run() {
        Expression e;
        e.text_ = text_;
        e.arity_ = vars_.size();
        out_ = &e;
        pos_ = 0;
        depth_ = 0;
        max_depth_ = 0;
        parse_sum();
        skip_ws();
        if (pos_ != text_.size())
            fail(strfmt("unexpected character '%c'", text_[pos_]));
        e.stack_need_ = std::max<std::size_t>(1, max_depth_);
        return e;
    }

private:
    const std::string& text_;
    const std::vector<std::string>& vars_;
    const std::map<std::string, double>& consts_;
    Expression* out_ = nullptr;
    std::size_t pos_ = 0;
    std::size_t depth_ = 0, max_depth_ = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw EvalError(strfmt("parse error at column %zu in \"%s\": %s",
                               pos_ + 1, text_.c_str(), why.c_str()));
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void emit(Expression::Op op, unsigned idx = 0) {
        out_->program_.push_back({op, idx});
        switch (op) {
        case Expression::Op::PushConst:
        case Expression::Op::PushVar:
            ++depth_;
            max_depth_ = std::max(max_depth_, depth_);
            break;
        case Expression::Op::Neg:
        case Expression::Op::Call:
            break;
        default:
            --depth_; // binary ops pop two, push one
        }
    }

    unsigned pool_slot(double v) {
        out_->pool_.push_back(v);
        return static_cast<unsigned>(out_->pool_.size() - 1);
    }

    void parse_sum() {
        parse_term();
        for (;;) {
            if (accept('+')) {
                parse_term();
                emit(Expression::Op::Add);
            } else if (accept('-')) {
                parse_term();
                emit(Expression::Op::Sub);
            } else {
                return;
            }
        }
    }

    void parse_term() {
        parse_factor();
        for (;;) {
            if (accept('*')) {
                parse_factor();
                emit(Expression::Op::Mul);
            } else if (accept('/')) {
                parse_factor();
                emit(Expression::Op::Div);
            } else {
                return;
            }
        }
    }

    // factor := unary ('^' factor)?   -- '^' binds tighter than unary minus
    // on its left operand and is right-associative.
    void parse_factor() {
        skip_ws();
        if (accept('-')) {
            parse_factor();
            emit(Expression::Op::Neg);
            return;
        }
        parse_primary();
        if (accept('^')) {
            parse_factor();
            emit(Expression::Op::Pow);
        }
    }

    void parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            parse_sum();
            if (!accept(')')) fail("expected ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* start = text_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(start, &end);
            if (end == start) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - start);
            emit(Expression::Op::PushConst, pool_slot(v));
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            const std::string name = text_.substr(start, pos_ - start);
            for (std::size_t i = 0; i < vars_.size(); ++i) {
                if (name == vars_[i]) {
                    emit(Expression::Op::PushVar, static_cast<unsigned>(i));
                    return;
                }
            }
            if (auto it = consts_.find(name); it != consts_.end()) {
                emit(Expression::Op::PushConst, pool_slot(it->second));
                return;
            }
            if (const int fid = function_id(name); fid >= 0) {
                if (!accept('(')) fail(strfmt("function '%s' needs '('", name.c_str()));
                parse_sum();
                if (!accept(')')) fail("expected ')'");
                emit(Expression::Op::Call, static_cast<unsigned>(fid));
                return;
            }
            pos_ = start;
            fail(strfmt("unknown symbol '%s'", name.c_str()));
        }
        fail(strfmt("unexpected character '%c'", c));
    }
};

Expression Expression::parse(const std::string& text,
                             const std::vector<std::string>& variables,
                             const std::map<std::string, double>& constants) {
    return ExprParser(text, variables, constants).run();
}

double Expression::eval_unchecked(std::span<const double> values) const {
    double stack[64];
    double* heap = nullptr;
    double* sp = stack;
    std::vector<double> big;
    if (stack_need_ > std::size(stack)) {
        big.resize(stack_need_);
        heap = big.data();
        sp = heap;
    }
    double* top = sp; // one past the last pushed value
    for (const Instr& in : program_) {
        switch (in.op) {
        case Op::PushConst: *top++ = pool_[in.idx]; break;
        case Op::PushVar: *top++ = values[in.idx]; break;
        case Op::Add: top[-2] += top[-1]; --top; break;
        case Op::Sub: top[-2] -= top[-1]; --top; break;
        case Op::Mul: top[-2] *= top[-1]; --top; break;
        case Op::Div: top[-2] /= top[-1]; --top; break;
        case Op::Pow: top[-2] = power(top[-2], top[-1]); --top; break;
        case Op::Neg: top[-1] = -top[-1]; break;
        case Op::Call: top[-1] = kFunctions[in.idx].call(top[-1]); break;
        }
    }
    return top[-1];
}

double Expression::eval(std::span<const double> values) const {
    if (values.size() != arity_)
        throw EvalError(strfmt("expression \"%s\" expects %zu values, got %zu",
                               text_.c_str(), arity_, values.size()));
    const double v = eval_unchecked(values);
    if (!std::isfinite(v)) {
        std::string at = "(";
        for (std::size_t i = 0; i < values.size(); ++i)
            at += strfmt("%s%.17g", i ? ", " : "", values[i]);
        at += ")";
        throw EvalError(strfmt("expression \"%s\" is non-finite at %s", text_.c_str(), at.c_str()));
    }
    return v;
}

} // namespace evodiff
