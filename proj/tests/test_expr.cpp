#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gfh/expr.hpp"

using namespace gfh;

namespace {

double eval_at(const Expr& e, double x, double y = 0.0) { return evaluate(e, {{"x", x}, {"y", y}}); }

double central_difference(const Expr& e, const std::string& var, std::map<std::string, double> env, double h = 1e-5) {
    env[var] += h;
    const double up = evaluate(e, env);
    env[var] -= 2 * h;
    const double dn = evaluate(e, env);
    return (up - dn) / (2 * h);
}

}  // namespace

TEST(Smoothstep, ValuesAndClamping) {
    EXPECT_EQ(smoothstep(-1.0), 0.0);
    EXPECT_EQ(smoothstep(2.0), 1.0);
    EXPECT_DOUBLE_EQ(smoothstep(0.5), 0.5);
    EXPECT_DOUBLE_EQ(smoothstep(0.25), 6 * std::pow(0.25, 5) - 15 * std::pow(0.25, 4) + 10 * std::pow(0.25, 3));
    for (int k = 1; k <= kSmoothMaxOrder; ++k) EXPECT_EQ(smoothstep(1.5, k), 0.0);
}

TEST(Smoothstep, DerivativesMatchFiniteDifferences) {
    for (int k = 0; k < kSmoothMaxOrder; ++k)
        for (double t : {0.1, 0.3, 0.55, 0.8}) {
            const double h = 1e-6;
            const double fd = (smoothstep(t + h, k) - smoothstep(t - h, k)) / (2 * h);
            EXPECT_NEAR(smoothstep(t, k + 1), fd, 1e-4 * std::max(1.0, std::abs(fd))) << "k=" << k << " t=" << t;
        }
}

TEST(Parse, PrecedenceAndAssociativity) {
    EXPECT_DOUBLE_EQ(eval_at(parse_expr("1 + 2*3^2"), 0), 19.0);
    EXPECT_DOUBLE_EQ(eval_at(parse_expr("8 - 3 - 2"), 0), 3.0);
    EXPECT_DOUBLE_EQ(eval_at(parse_expr("8/4/2"), 0), 1.0);
    EXPECT_DOUBLE_EQ(eval_at(parse_expr("-x^2"), 3.0), -9.0);
    EXPECT_DOUBLE_EQ(eval_at(parse_expr("(x - 1)*(y + 2)"), 3.0, 1.0), 6.0);
    EXPECT_DOUBLE_EQ(eval_at(parse_expr("sqrt(x^2 + y^2)"), 3.0, 4.0), 5.0);
    EXPECT_DOUBLE_EQ(eval_at(parse_expr("smoothstep(x)"), 0.5), 0.5);
    EXPECT_DOUBLE_EQ(eval_at(parse_expr("smoothstep_d1(x)"), 0.5), smoothstep(0.5, 1));
    EXPECT_DOUBLE_EQ(eval_at(parse_expr("2.5e-1*x"), 4.0), 1.0);
}

TEST(Parse, ErrorsCarryColumn) {
    for (const char* bad : {"1 +", "x * (y", "foo(x)", "x ^ y", "3 $ 4", "smoothstep_d9(x)", ""}) {
        try {
            parse_expr(bad);
            FAIL() << bad;
        } catch (const ValidationError& e) {
            EXPECT_EQ(e.where().rfind("column ", 0), 0u) << bad << " -> " << e.where();
        }
    }
}

TEST(Print, RoundTripsThroughParser) {
    const char* cases[] = {"e1 - 3*smoothstep(0.6*(1 - (x1 - 3)^2/4))*(smoothstep((e1 + 3)/2) - smoothstep((e1 - 1)/2))",
                           "x^3 - 3*x*y", "-(x + y)", "x - (y - 1)", "x/(y*2)", "(-2)*x", "sqrt(x)^3", "0.1 + x"};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.2, 2.0);
    for (auto src : cases) {
        auto e = parse_expr(src);
        auto printed = to_string(e);
        auto again = parse_expr(printed);
        EXPECT_EQ(to_string(again), printed) << src;
        for (int t = 0; t < 5; ++t) {
            std::map<std::string, double> env{{"x", u(rng)}, {"y", u(rng)}, {"x1", 3 * u(rng)}, {"e1", u(rng) - 1}};
            EXPECT_DOUBLE_EQ(evaluate(e, env), evaluate(again, env)) << src;
        }
    }
}

TEST(Simplify, SmartConstructorsFold) {
    auto x = Expr::variable("x");
    EXPECT_TRUE((Expr(2.0) * Expr(3.0)).is_const(6.0));
    EXPECT_EQ(to_string(x + 0.0), "x");
    EXPECT_EQ(to_string(x * 1.0), "x");
    EXPECT_TRUE((x * 0.0).is_const(0.0));
    EXPECT_EQ(variables(x * Expr::variable("y") + 1.0), (std::set<std::string>{"x", "y"}));
}

TEST(Diff, MatchesFiniteDifferences) {
    auto e = parse_expr("x^3*y - 2*sqrt(x^2 + y^2) + smoothstep(x*y)/(1 + y^2)");
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.1, 1.2);
    for (int t = 0; t < 20; ++t) {
        std::map<std::string, double> env{{"x", u(rng)}, {"y", u(rng)}};
        for (const char* v : {"x", "y"}) {
            const double fd = central_difference(e, v, env);
            EXPECT_NEAR(evaluate(diff(e, v), env), fd, 1e-5 * std::max(1.0, std::abs(fd)));
        }
        const double fd2 = central_difference(diff(e, "x"), "y", env);
        EXPECT_NEAR(evaluate(diff(diff(e, "x"), "y"), env), fd2, 1e-4 * std::max(1.0, std::abs(fd2)));
    }
    EXPECT_TRUE(diff(e, "z").is_const(0.0));
}

TEST(Substitute, ReplacesVariables) {
    auto e = parse_expr("x^2 + y");
    auto s = substitute(e, {{"x", parse_expr("y + 1")}});
    EXPECT_DOUBLE_EQ(eval_at(s, 0.0, 2.0), 11.0);
    EXPECT_EQ(variables(s), (std::set<std::string>{"y"}));
}

TEST(Tape, MatchesTreeEvaluation) {
    auto e = parse_expr("x^3*y - 2*sqrt(x^2 + y^2) + smoothstep(x*y)/(1 + y^2)");
    std::vector<Expr> outs{e, diff(e, "x"), diff(e, "y")};
    Tape t(outs, {"x", "y"});
    std::vector<double> scratch, out(3);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> p{u(rng), u(rng)};
        t.eval(p.data(), out.data(), scratch);
        for (int k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(out[k], evaluate(outs[k], {{"x", p[0]}, {"y", p[1]}}));
    }
    EXPECT_THROW(Tape({e}, {"x"}), ValidationError);
}

TEST(Tape, SqrtDerivativeVanishesWhereFactorIsZero) {
    // at the origin the smoothstep factor is zero and the sqrt factor is 0/0
    auto e = parse_expr("smoothstep(2 - sqrt(x^2 + y^2))");
    Tape t({diff(e, "x")}, {"x", "y"});
    EXPECT_EQ(t.eval1({0.0, 0.0}), 0.0);
}
