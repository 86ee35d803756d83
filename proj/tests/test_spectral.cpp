#include <gtest/gtest.h>

#include "gfh/families.hpp"
#include "gfh/random.hpp"
#include "gfh/spectral.hpp"
#include "support/oracles.hpp"

using namespace gfh;

namespace {

GradedComplex point_fiber(int degree) { return GradedComplex({{"x", degree}}, std::vector<Z2Vec>(1)); }

// circle with two maxima and two minima
GradedComplex circle_morse() {
    return GradedComplex({{"m0", 0}, {"m1", 0}, {"M0", 1}, {"M1", 1}}, Differential{{"M0", {"m0", "m1"}}, {"M1", {"m0", "m1"}}});
}

// family over [-1,1] x S^m assembled from random homotopic ends
FilteredComplex random_homotopy_family(Rng& rng, int m) {
    auto rc = random_complex(rng);
    const auto& F = rc.complex;
    const int shift = m == 1 ? 0 : m - 1;
    auto th0 = random_chain_map(rng, rc, shift, m == 1);
    auto h = m == 1 ? random_homotopy(rng, rc, 1) : random_linear_map(rng, F, m);
    auto th1 = add(th0, boundary_of(F, h));
    auto f0 = sphere_family(F, m, contract(F, th0, shift));
    auto f1 = sphere_family(F, m, contract(F, th1, shift));
    auto chk = verify_homotopy(f0, f1, contract(F, h, m));
    EXPECT_TRUE(chk.ok);
    return chk.assembled;
}

void expect_pages_match_oracle(const FilteredComplex& fc, int r_max) {
    auto p = pages(fc, r_max);
    oracle::PagesOracle ref(fc);
    auto [lmin, lmax] = fc.base_degree_range();
    std::set<int> totals;
    for (auto& g : fc.generators()) totals.insert(g.total_degree());
    for (auto& [r, pg] : p.pages)
        for (int nu : totals)
            for (int l = lmin; l <= lmax; ++l) ASSERT_EQ(pg.rank(l, nu - l), ref.rank(r, l, nu)) << "r=" << r << " l=" << l << " nu=" << nu;
}

}  // namespace

TEST(FilteredComplex, RejectsWrongBidegreeShift) {
    auto base = BaseDescriptor::sphere(1);
    std::vector<FamilyGenerator> gens{{"a:x", "a", "x", 1, 0}, {"b:x", "b", "x", 0, 0}};
    try {
        FilteredComplex(base, gens, {{1, {{"a:x", {"b:x"}}}}});
        SUCCEED();
    } catch (...) {
        FAIL() << "valid d1 rejected";
    }
    try {
        FilteredComplex(base, gens, {{2, {{"a:x", {"b:x"}}}}});
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.where(), "a:x -> b:x");
    }
    std::vector<FamilyGenerator> wrong{{"a:x", "a", "x", 0, 0}};
    EXPECT_THROW(FilteredComplex(base, wrong, {}), ValidationError);
    std::vector<FamilyGenerator> unknown{{"c:x", "c", "x", 0, 0}};
    EXPECT_THROW(FilteredComplex(base, unknown, {}), ValidationError);
}

TEST(Pages, ProductOverCircleHasTwoClassesAtE2) {
    auto fc = product_family(point_fiber(1), circle_morse(), "S1");
    auto p = pages(fc, 3);
    EXPECT_EQ(p.pages.at(2).rank(0, 1), 1u);
    EXPECT_EQ(p.pages.at(2).rank(1, 1), 1u);
    EXPECT_EQ(p.pages.at(1).rank(0, 1), 2u);
    EXPECT_TRUE(collapse_check(p));
    EXPECT_TRUE(convergence_check(p, total_homology(fc)).ok);
}

TEST(Pages, OnlyD0MeansE1IsEInfinity) {
    Rng rng(4);
    auto rc = random_complex(rng);
    auto fc = product_family(rc.complex, GradedComplex({{"p", 0}, {"q", 2}}, std::vector<Z2Vec>(2)), "S2");
    auto p = pages(fc, 2);
    EXPECT_EQ(p.pages.at(1).ranks, p.e_infinity.ranks);
    EXPECT_TRUE(convergence_check(p, total_homology(fc)).ok);
}

TEST(Pages, RejectsNonzeroDSquared) {
    auto base = BaseDescriptor::sphere(1);
    std::vector<FamilyGenerator> gens{{"a:x", "a", "x", 1, 1}, {"a:y", "a", "y", 1, 0}, {"b:y", "b", "y", 0, 0}};
    FilteredComplex fc(base, gens, {{0, {{"a:x", {"a:y"}}}}, {1, {{"a:y", {"b:y"}}}}});
    EXPECT_THROW(pages(fc), ValidationError);
}

TEST(Pages, MatchDefinitionOracleOnSphereFamilies) {
    Rng rng(8);
    for (int m : {1, 2, 3})
        for (int t = 0; t < 8; ++t) expect_pages_match_oracle(random_sphere_family(rng, m), 4);
}

TEST(Pages, MatchDefinitionOracleOnHomotopyFamilies) {
    Rng rng(9);
    for (int m : {1, 2})
        for (int t = 0; t < 6; ++t) expect_pages_match_oracle(random_homotopy_family(rng, m), 4);
}

TEST(Pages, DifferentialRanksGiveNextPage) {
    Rng rng(10);
    for (int t = 0; t < 10; ++t) {
        auto fc = random_homotopy_family(rng, 1);
        auto p = pages(fc, 4);
        for (auto& [r, pg] : p.pages) {
            auto next = p.pages.find(r + 1);
            if (next == p.pages.end()) continue;
            for (auto& [bd, n] : pg.ranks) {
                std::size_t out = 0, in = 0;
                if (auto it = pg.differentials.find(bd); it != pg.differentials.end()) out = rank(it->second);
                const Bidegree src{bd.first + r, bd.second - r + 1};
                if (auto it = pg.differentials.find(src); it != pg.differentials.end()) in = rank(it->second);
                EXPECT_EQ(next->second.rank(bd.first, bd.second), n - out - in);
            }
        }
    }
}

TEST(Pages, ConvergenceOnRandomFamilies) {
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
        auto fc = t % 2 ? random_sphere_family(rng, 1) : random_homotopy_family(rng, 2);
        auto p = pages(fc);
        EXPECT_TRUE(convergence_check(p, total_homology(fc)).ok);
        EXPECT_EQ(p.stabilized_at, fc.base_degree_range().second - fc.base_degree_range().first + 1);
    }
}

TEST(Pages, SphereFamilyE2IsLocalSystemHomology) {
    Rng rng(13);
    for (int t = 0; t < 20; ++t) {
        auto rc = random_complex(rng);
        auto mu = random_chain_map(rng, rc, 0, true);
        auto fc = sphere_family(rc.complex, 1, contract(rc.complex, mu, 0));
        auto p = pages(fc);
        auto ps = psi(fc);
        for (auto& [j, mat] : ps.map.matrices) {
            const auto r = rank(mat + Z2Matrix::identity(mat.n_cols()));
            EXPECT_EQ(p.pages.at(2).rank(0, j), mat.n_cols() - r);
            EXPECT_EQ(p.pages.at(2).rank(1, j), mat.n_cols() - r);
        }
    }
}

TEST(Pages, ConvergenceCheckReportsFailingDegree) {
    auto fc = product_family(point_fiber(0), circle_morse(), "S1");
    auto p = pages(fc);
    GHTable wrong;
    wrong.add(0, 1);
    auto res = convergence_check(p, wrong);
    EXPECT_FALSE(res.ok);
    EXPECT_EQ(*res.failing_degree, 1);
}

TEST(FilteredComplex, JsonRoundTrip) {
    Rng rng(14);
    auto fc = random_homotopy_family(rng, 1);
    nlohmann::json j = fc;
    auto back = family_from_json(j);
    EXPECT_EQ(back.component_map(), fc.component_map());
    EXPECT_EQ(back.base().points.size(), 6u);
    EXPECT_EQ(pages_to_json(pages(back)), pages_to_json(pages(fc)));
    auto bad = j;
    bad["generators"][0].erase("base_degree");
    try {
        family_from_json(bad);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.where(), "$.generators[0].base_degree");
    }
}

TEST(Pages, JsonKeys) {
    auto fc = product_family(point_fiber(1), circle_morse(), "S1");
    auto j = pages_to_json(pages(fc));
    EXPECT_EQ(j["pages"]["2/0/1"], 1);
    EXPECT_EQ(j["e_infinity"]["1/1"], 1);
    EXPECT_EQ(j["stabilized_at"], 2);
}
