#include "doctest.h"

#include <cmath>
#include <vector>

#include "evodiff/common.hpp"
#include "evodiff/expr.hpp"

using namespace evodiff;

namespace {
double eval1(const std::string& text, double x,
             const std::map<std::string, double>& constants = {}) {
    Expression e = Expression::parse(text, {"x"}, constants);
    const std::vector<double> v = {x};
    return e.eval(v);
}
} // namespace

TEST_CASE("arithmetic precedence and grouping") {
    CHECK(eval1("2 + 3*4", 0.0) == doctest::Approx(14.0));
    CHECK(eval1("(2 + 3)*4", 0.0) == doctest::Approx(20.0));
    CHECK(eval1("7 - 4 - 2", 0.0) == doctest::Approx(1.0)); // left associative
    CHECK(eval1("12 / 4 / 3", 0.0) == doctest::Approx(1.0));
    CHECK(eval1("2^3^2", 0.0) == doctest::Approx(512.0)); // right associative
    CHECK(eval1("-x^2", 3.0) == doctest::Approx(-9.0));   // unary minus binds loosely
    CHECK(eval1("(-x)^2", 3.0) == doctest::Approx(9.0));
}

TEST_CASE("scalar functions") {
    CHECK(eval1("exp(x)", 1.0) == doctest::Approx(std::exp(1.0)));
    CHECK(eval1("log(exp(x))", 2.5) == doctest::Approx(2.5));
    CHECK(eval1("sin(x)^2 + cos(x)^2", 0.7) == doctest::Approx(1.0));
    CHECK(eval1("sqrt(x)", 16.0) == doctest::Approx(4.0));
    CHECK(eval1("abs(-x)", 3.25) == doctest::Approx(3.25));
    CHECK(eval1("tanh(x)", 0.5) == doctest::Approx(std::tanh(0.5)));
}

TEST_CASE("named constants bind at parse time") {
    const std::map<std::string, double> c = {{"alpha", 2.5}, {"beta", -1.0}};
    CHECK(eval1("alpha*x + beta", 2.0, c) == doctest::Approx(4.0));
    // constants and variables may mix freely
    Expression e = Expression::parse("kf*u1*u2 - kr*u3", {"u1", "u2", "u3"},
                                     {{"kf", 2.0}, {"kr", 0.5}});
    const std::vector<double> z = {1.0, 3.0, 4.0};
    CHECK(e.eval(z) == doctest::Approx(4.0));
}

TEST_CASE("multi-variable evaluation order") {
    Expression e = Expression::parse("x + 10*y + 100*z", {"x", "y", "z"});
    const std::vector<double> v = {1.0, 2.0, 3.0};
    CHECK(e.eval(v) == doctest::Approx(321.0));
}

TEST_CASE("unknown identifiers are reported with their column") {
    CHECK_THROWS_AS(Expression::parse("2*bogus + 1", {"x"}), EvalError);
    try {
        Expression::parse("2*bogus + 1", {"x"});
    } catch (const EvalError& e) {
        const std::string what = e.what();
        CHECK(what.find("bogus") != std::string::npos);
        CHECK(what.find("column") != std::string::npos);
    }
}

TEST_CASE("malformed expressions throw") {
    CHECK_THROWS_AS(Expression::parse("2 +", {"x"}), EvalError);
    CHECK_THROWS_AS(Expression::parse("(1 + 2", {"x"}), EvalError);
    CHECK_THROWS_AS(Expression::parse("", {"x"}), EvalError);
    CHECK_THROWS_AS(Expression::parse("sin()", {"x"}), EvalError);
}

TEST_CASE("non-finite results raise EvalError with the inputs echoed") {
    Expression e = Expression::parse("1/x", {"x"});
    const std::vector<double> zero = {0.0};
    CHECK_THROWS_AS(e.eval(zero), EvalError);
    // eval_unchecked lets admissibility samplers classify the failure
    CHECK(std::isinf(e.eval_unchecked(zero)));
}

TEST_CASE("arity mismatch is rejected") {
    Expression e = Expression::parse("x", {"x"});
    const std::vector<double> two = {1.0, 2.0};
    CHECK_THROWS_AS(e.eval(two), EvalError);
}
