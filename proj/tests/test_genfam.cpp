#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "gfh/families.hpp"
#include "gfh/genfam.hpp"

using namespace gfh;

namespace {

GenFamSpec load(const std::string& name) {
    std::ifstream in(std::string(GFH_SPECS_DIR) + "/" + name + ".json");
    return spec_from_json(nlohmann::json::parse(in));
}

// bypasses validate() for families that are not linear at infinity
GenFamSpec raw_spec(const std::string& expr, Box box) {
    GenFamSpec s;
    s.name = "raw";
    s.expr = parse_expr(expr);
    s.linear_direction = {1.0};
    s.computation_box = box;
    s.support_box = box;
    return s;
}

std::string where_of(const nlohmann::json& j) {
    try {
        spec_from_json(j);
    } catch (const ValidationError& e) {
        return e.where();
    }
    return "accepted";
}

// single-linkage clusters of front points in (x, z, e)
std::size_t clusters(const std::vector<FrontPoint>& pts, double radius) {
    std::vector<std::size_t> parent(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) parent[i] = i;
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double d = std::hypot(pts[i].x[0] - pts[j].x[0], pts[i].z - pts[j].z, pts[i].e[0] - pts[j].e[0]);
            if (d < radius) parent[find(i)] = find(j);
        }
    std::size_t n = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) n += find(i) == i;
    return n;
}

}  // namespace

TEST(Spec, BundledSpecsValidate) {
    for (const char* name : {"unknot", "empty", "two_component"}) EXPECT_NO_THROW(load(name)) << name;
}

TEST(Spec, SchemaErrorsCiteJsonPath) {
    auto good = nlohmann::json::parse(R"({"n":1,"N":1,"expr":"e1","linear_direction":[1],
        "computation_box":[[-2,2],[-3,3]],"support_box":[[-1,1],[-2,2]]})");
    EXPECT_EQ(where_of(good), "accepted");
    auto j = good;
    j.erase("expr");
    EXPECT_EQ(where_of(j), "$.expr");
    j = good;
    j["expr"] = "e1 +";
    EXPECT_EQ(where_of(j).rfind("$.expr column", 0), 0u);
    j = good;
    j["computation_box"][1] = {1};
    EXPECT_EQ(where_of(j), "$.computation_box[1]");
    j = good;
    j["linear_direction"] = {0};
    EXPECT_EQ(where_of(j), "linear_direction");
    j = good;
    j["expr"] = "e1 + z";
    EXPECT_EQ(where_of(j), "z");
    j = good;
    j["support_box"][0] = {-3, 1};
    EXPECT_EQ(where_of(j), "support_box[0]");
}

TEST(Spec, RejectsFamiliesThatAreNotLinearAtInfinity) {
    auto j = nlohmann::json::parse(R"({"n":1,"N":1,"expr":"e1 + 0.1*x1^2","linear_direction":[1],
        "computation_box":[[-2,2],[-3,3]],"support_box":[[-1,1],[-2,2]]})");
    EXPECT_THROW(spec_from_json(j), ValidationError);
}

TEST(Spec, JsonRoundTrip) {
    auto s = load("unknot");
    nlohmann::json j = s;
    auto back = spec_from_json(j);
    EXPECT_EQ(to_string(back.expr), to_string(s.expr));
    EXPECT_EQ(back.computation_box, s.computation_box);
}

TEST(Difference, IsUpperMinusLower) {
    auto s = load("unknot");
    auto d = difference(s);
    EXPECT_EQ(d.vars, (std::vector<std::string>{"x1", "e1", "et1"}));
    EXPECT_EQ(d.box.size(), 3u);
    EXPECT_EQ(d.box[2], s.computation_box[1]);
    const double x = 3.1, e = -1.2, et = 2.0;
    const double expect = evaluate(s.expr, {{"x1", x}, {"e1", et}}) - evaluate(s.expr, {{"x1", x}, {"e1", e}});
    EXPECT_DOUBLE_EQ(evaluate(d.delta, {{"x1", x}, {"e1", e}, {"et1", et}}), expect);
    auto big = difference(s, 2.0);
    EXPECT_DOUBLE_EQ(big.box[0].first, -3.0);
    EXPECT_DOUBLE_EQ(big.box[0].second, 9.0);
}

TEST(FiberIndex, CountsNegativeFiberHessianEigenvalues) {
    auto s = raw_spec("e1^3 - 3*x1*e1", {{-1, 1}, {-2, 2}});
    EXPECT_EQ(fiber_index(s, {1.0}, {1.0}), 0);
    EXPECT_EQ(fiber_index(s, {1.0}, {-1.0}), 1);
}

TEST(Front, CuspParametrization) {
    auto s = raw_spec("e1^3 - 3*x1*e1", {{-1, 1}, {-2, 2}});
    auto pts = legendrian_front(s, 41);
    ASSERT_GT(pts.size(), 20u);
    for (auto& p : pts) {
        const double eta = p.e[0];
        EXPECT_NEAR(p.x[0], eta * eta, 1e-9);
        EXPECT_NEAR(p.z, -2 * eta * eta * eta, 1e-9);
        EXPECT_NEAR(p.p[0], -3 * eta, 1e-9);
        EXPECT_EQ(p.fiber_index, eta < 0 ? 1 : 0);
    }
    for (auto& p : pts) EXPECT_GE(p.x[0], 0.0);
}

TEST(Front, QuadraticGivesZeroSection) {
    auto s = raw_spec("e1^2", {{-1, 1}, {-2, 2}});
    auto pts = legendrian_front(s, 11);
    ASSERT_EQ(pts.size(), 11u);
    for (auto& p : pts) {
        EXPECT_NEAR(p.e[0], 0.0, 1e-12);
        EXPECT_NEAR(p.z, 0.0, 1e-12);
        EXPECT_NEAR(p.p[0], 0.0, 1e-12);
    }
}

TEST(Front, RejectsSingularFiberDerivative) {
    // the fiber grid has a vertex at e1 = 0, where d_e f = 3 e1^2 touches zero
    auto s = raw_spec("e1^3", {{-1, 1}, {-2, 3}});
    EXPECT_THROW(legendrian_front(s, 4), ValidationError);
}

TEST(Front, TwoComponentSpecHasTwoComponents) {
    auto s = load("two_component");
    auto pts = legendrian_front(s, 121);
    EXPECT_EQ(clusters(pts, 0.6), 2u);
}

TEST(Front, CsvHeader) {
    auto s = load("unknot");
    std::ostringstream os;
    write_front_csv(os, s, legendrian_front(s, 9));
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "x1,p1,z,e1,fiber_index");
}

TEST(GH, Unknot) {
    auto r = gh(load("unknot"));
    EXPECT_EQ(r.table, (GHTable{{{1, 1}}}));
    EXPECT_EQ(r.shift, -2);
    ASSERT_EQ(r.chords.size(), 1u);
    EXPECT_EQ(r.chords[0].lower_fiber_index, 0);
    EXPECT_EQ(r.chords[0].upper_fiber_index, 1);
    EXPECT_EQ(r.chords[0].point.morse_index, 3);
    EXPECT_LT(r.eps, r.chords[0].point.value);
    EXPECT_GT(r.omega, r.chords[0].point.value);
    EXPECT_NE(std::find(r.flags.begin(), r.flags.end(), "heuristic box validation"), r.flags.end());
    nlohmann::json j = r;
    EXPECT_EQ(j["table"], nlohmann::json::parse(R"({"1":1})"));
    EXPECT_TRUE(j["critical_report"].contains("chords"));
}

TEST(GH, EmptyFamilyHasNoChords) {
    auto r = gh(load("empty"));
    EXPECT_TRUE(r.table.empty());
    EXPECT_NE(std::find(r.flags.begin(), r.flags.end(), "no positive critical values: no Reeb chords in the box"),
              r.flags.end());
}

TEST(GH, TwoComponents) {
    auto r = gh(load("two_component"));
    EXPECT_EQ(r.table, (GHTable{{{1, 2}}}));
    EXPECT_EQ(r.chords.size(), 2u);
}

TEST(GH, TranslationInvariance) {
    auto s = load("unknot");
    for (double t : {0.3, -0.45}) EXPECT_EQ(gh(translate(s, {t})).table, gh(s).table) << t;
}

TEST(GH, UndersizedBoxShowsInStability) {
    auto s = load("unknot");
    GHOptions small;
    small.box_scale = 0.5;
    auto rep = stability(s, small);
    EXPECT_FALSE(rep.ok);
    EXPECT_FALSE(rep.discrepancies.empty());
    small.validate_box = false;
    auto r = gh(s, small);
    EXPECT_NE(std::find(r.flags.begin(), r.flags.end(), "box validation skipped"), r.flags.end());
}

TEST(GH, ExplicitWindowMustBeOrdered) {
    GHOptions o;
    o.eps = 1.0;
    o.omega = 0.5;
    EXPECT_THROW(gh(load("unknot"), o), ValidationError);
}

TEST(Spin, SubstitutesRadius) {
    auto s = load("unknot");
    auto sp = spin_spec(s, 1);
    EXPECT_EQ(sp.n, 2u);
    EXPECT_EQ(sp.vars(), (std::vector<std::string>{"x1", "x2", "e1"}));
    for (auto [a, b, e] : {std::tuple{2.0, 1.5, -1.0}, std::tuple{-3.0, 0.2, 0.5}, std::tuple{0.0, -4.0, 2.0}}) {
        const double r = std::hypot(a, b);
        EXPECT_NEAR(evaluate(sp.expr, {{"x1", a}, {"x2", b}, {"e1", e}}), evaluate(s.expr, {{"x1", r}, {"e1", e}}), 1e-12);
    }
    EXPECT_THROW(spin_spec(load("two_component"), 1), ValidationError);
}

TEST(Spin, FrontIsSurfaceOfRevolution) {
    auto s = load("unknot");
    auto sp = spin_spec(s, 1);
    auto pts = legendrian_front(sp, 15);
    ASSERT_FALSE(pts.empty());
    auto de = diff(s.expr, "e1");
    for (auto& p : pts) {
        const double r = std::hypot(p.x[0], p.x[1]);
        EXPECT_NEAR(evaluate(de, {{"x1", r}, {"e1", p.e[0]}}), 0.0, 1e-9);
        EXPECT_NEAR(evaluate(s.expr, {{"x1", r}, {"e1", p.e[0]}}), p.z, 1e-9);
    }
}

TEST(Spin, GHTableFormula) { EXPECT_EQ(spin_gh(GHTable{{{1, 1}}}, 1), (GHTable{{{1, 1}, {2, 1}}})); }
