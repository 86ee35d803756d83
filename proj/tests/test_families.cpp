#include <gtest/gtest.h>

#include "gfh/families.hpp"
#include "gfh/random.hpp"
#include "support/oracles.hpp"

using namespace gfh;

namespace {

FilteredComplex dumbbell_family(int copies = 2) {
    auto db = dumbbell(2, 4, copies);
    return sphere_family(db.complex, 1, db.monodromy);
}

FiberMap identity_monodromy(const GradedComplex& c) {
    return contract(c, identity_map(c.size()), 0);
}

GradedComplex table_complex(const GHTable& t) {
    std::vector<Generator> gens;
    for (auto& [k, r] : t.ranks)
        for (std::size_t i = 0; i < r; ++i) gens.push_back({"g" + std::to_string(k) + "_" + std::to_string(i), k});
    return GradedComplex(gens, std::vector<Z2Vec>(gens.size()));
}

Z2Matrix swap2() { return Z2Matrix::from_dense({{0, 1}, {1, 0}}); }

}  // namespace

TEST(SphereFamily, ConstantFamilyHasIdentityPsi) {
    Rng rng(1);
    auto rc = random_complex(rng);
    auto fc = sphere_family(rc.complex, 1, identity_monodromy(rc.complex));
    EXPECT_TRUE(verify_d_squared(fc).ok);
    EXPECT_TRUE(fc.component(1) == nullptr);
    auto p = psi(fc);
    EXPECT_TRUE(is_identity(p));
    EXPECT_FALSE(certificate(p).nontrivial);
    EXPECT_EQ(certificate(p).claim, "no obstruction detected");
}

TEST(SphereFamily, RejectsBadData) {
    auto db = dumbbell(2, 4, 2);
    FiberMap singular = db.monodromy;
    singular.blocks.at(4) = Z2Matrix::from_dense({{1, 1}, {1, 1}});
    EXPECT_THROW(sphere_family(db.complex, 1, singular), ValidationError);
    FiberMap wrong_shape = db.monodromy;
    wrong_shape.blocks.at(4) = Z2Matrix::identity(3);
    EXPECT_THROW(sphere_family(db.complex, 1, wrong_shape), ValidationError);
    EXPECT_THROW(sphere_family(db.complex, 2, db.monodromy), ValidationError);
    // theta must commute with d
    GradedComplex c({{"x", 1}, {"y", 0}, {"z", 1}}, Differential{{"x", {"y"}}});
    FiberMap theta{1, {}};
    theta.blocks.emplace(0, Z2Matrix::from_dense({{1}, {0}}));  // y -> x
    EXPECT_THROW(sphere_family(c, 2, theta), ValidationError);
}

TEST(Psi, DumbbellIsSwap) {
    auto p = psi(dumbbell_family());
    EXPECT_EQ(p.degree_shift, 0);
    EXPECT_EQ(p.map.matrices.at(4), swap2());
    EXPECT_EQ(p.map.matrices.at(-3), swap2());
    EXPECT_EQ(p.map.matrices.at(2), Z2Matrix::identity(1));
    EXPECT_EQ(p.map.source_basis.at(4), (std::vector<std::string>{"beta_L", "beta_R"}));
    auto c = certificate(p);
    EXPECT_TRUE(c.nontrivial);
    EXPECT_EQ(c.order_lower_bound, 2u);
    EXPECT_EQ(c.basis, "beta_L,beta_R");
    EXPECT_EQ(*c.degree, 4);
}

TEST(Psi, OrderOfRotation) {
    for (int copies : {3, 6, 7}) {
        auto c = certificate(psi(dumbbell_family(copies)));
        EXPECT_EQ(c.order_lower_bound, static_cast<std::size_t>(copies));
    }
}

TEST(Psi, HomomorphismLawCircle) {
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        auto rc = random_complex(rng);
        auto mu1 = random_chain_map(rng, rc, 0, true);
        auto mu2 = random_chain_map(rng, rc, 0, true);
        auto fam = [&](const ChainMap& m) { return sphere_family(rc.complex, 1, contract(rc.complex, m, 0)); };
        EXPECT_EQ(psi(fam(compose(mu1, mu2))).map.matrices, compose(psi(fam(mu1)), psi(fam(mu2))).map.matrices);
    }
}

TEST(Psi, AdditivityForHigherSpheres) {
    Rng rng(3);
    for (int m : {2, 3})
        for (int t = 0; t < 10; ++t) {
            auto rc = random_complex(rng);
            auto th1 = random_chain_map(rng, rc, m - 1, false);
            auto th2 = random_chain_map(rng, rc, m - 1, false);
            auto fam = [&](const ChainMap& th) { return sphere_family(rc.complex, m, contract(rc.complex, th, m - 1)); };
            auto p = psi(fam(add(th1, th2)));
            EXPECT_EQ(p.degree_shift, m - 1);
            EXPECT_EQ(p.map.matrices, compose(psi(fam(th1)), psi(fam(th2))).map.matrices);
        }
}

TEST(Psi, ComposeRejectsMismatch) {
    auto p1 = psi(dumbbell_family());
    Rng rng(4);
    auto p2 = psi(random_sphere_family(rng, 2));
    EXPECT_THROW(compose(p1, p2), ValidationError);
}

TEST(Psi, JsonRoundTrip) {
    auto p = psi(dumbbell_family());
    nlohmann::json j = p;
    auto back = psi_from_json(j);
    EXPECT_EQ(back.map.matrices, p.map.matrices);
    EXPECT_EQ(back.map.source_basis, p.map.source_basis);
    EXPECT_EQ(certificate(back).order_lower_bound, 2u);
    j["degree_shift"] = 3;
    EXPECT_THROW(psi_from_json(j), ValidationError);
}

TEST(Homotopy, BoundaryPerturbationIsAccepted) {
    Rng rng(5);
    for (int m : {1, 2}) {
        int accepted = 0;
        for (int t = 0; t < 10; ++t) {
            auto rc = random_complex(rng);
            const auto& F = rc.complex;
            const int shift = m == 1 ? 0 : m - 1;
            auto th0 = random_chain_map(rng, rc, shift, m == 1);
            auto h = m == 1 ? random_homotopy(rng, rc, 1) : random_linear_map(rng, F, m);
            auto th1 = add(th0, boundary_of(F, h));
            FilteredComplex f1;
            try {
                f1 = sphere_family(F, m, contract(F, th1, shift));
            } catch (const ValidationError& e) {
                ADD_FAILURE() << e.what();
                continue;
            }
            auto f0 = sphere_family(F, m, contract(F, th0, shift));
            auto chk = verify_homotopy(f0, f1, contract(F, h, m));
            EXPECT_TRUE(chk.ok) << (chk.witness ? *chk.witness : "");
            EXPECT_TRUE(verify_d_squared(chk.assembled).ok);
            EXPECT_EQ(psi(f0).map.matrices, psi(f1).map.matrices);
            ++accepted;
        }
        EXPECT_EQ(accepted, 10);
    }
}

TEST(Homotopy, CorruptedHomotopyIsRejected) {
    Rng rng(6);
    int rejected = 0;
    for (int t = 0; t < 20; ++t) {
        auto rc = random_complex(rng);
        const auto& F = rc.complex;
        auto th = random_chain_map(rng, rc, 1, false);
        auto f = sphere_family(F, 2, contract(F, th, 1));
        auto h = random_linear_map(rng, F, 2);
        if (boundary_of(F, h) == ChainMap(F.size())) continue;
        auto chk = verify_homotopy(f, f, contract(F, h, 2));
        EXPECT_FALSE(chk.ok);
        EXPECT_TRUE(chk.witness.has_value());
        ++rejected;
    }
    EXPECT_GT(rejected, 5);
}

TEST(Homotopy, RejectsMismatchedInputs) {
    Rng rng(7);
    auto f1 = random_sphere_family(rng, 1);
    auto f2 = random_sphere_family(rng, 2);
    EXPECT_THROW(verify_homotopy(f1, f2, FiberMap{1, {}}), ValidationError);
    EXPECT_THROW(verify_homotopy(f1, f1, FiberMap{0, {}}), ValidationError);
}

TEST(Cover, PullbackRaisesMonodromyToPower) {
    auto fc = dumbbell_family(3);
    auto p = psi(fc);
    auto p2 = psi(cover_pullback(fc, 2));
    EXPECT_EQ(p2.map.matrices, compose(p, p).map.matrices);
    EXPECT_TRUE(is_identity(psi(cover_pullback(fc, 3))));
    EXPECT_THROW(cover_pullback(fc, 0), ValidationError);
}

TEST(Continuation, ConstantIsotopyInducesIdentity) {
    Rng rng(8);
    auto rc = random_complex(rng);
    auto c = continuation(interval_family(rc.complex, rc.complex, identity_map(rc.complex.size())));
    EXPECT_TRUE(c.chain_map);
    EXPECT_TRUE(c.quasi_isomorphism);
    for (auto& [j, m] : c.induced.matrices) EXPECT_EQ(m, Z2Matrix::identity(m.n_cols()));
}

TEST(Continuation, BasisChangeIsReported) {
    GradedComplex left({{"u", 1}, {"v", 1}}, std::vector<Z2Vec>(2));
    GradedComplex right({{"p", 1}, {"q", 1}}, std::vector<Z2Vec>(2));
    ChainMap alpha{{0, 1}, {1}};  // u -> p + q, v -> q
    auto c = continuation(interval_family(left, right, alpha));
    EXPECT_TRUE(c.quasi_isomorphism);
    EXPECT_EQ(c.induced.matrices.at(1), Z2Matrix::from_dense({{1, 0}, {1, 1}}));
}

TEST(Continuation, NonInvertibleMapIsFlagged) {
    GradedComplex left({{"u", 1}, {"v", 1}}, std::vector<Z2Vec>(2));
    ChainMap alpha{{0}, {0}};
    auto c = continuation(interval_family(left, left, alpha));
    EXPECT_TRUE(c.chain_map);
    EXPECT_FALSE(c.quasi_isomorphism);
    ASSERT_FALSE(c.flags.empty());
}

TEST(Continuation, NonChainMapIsRejected) {
    GradedComplex left({{"x", 1}, {"y", 0}}, Differential{{"x", {"y"}}});
    GradedComplex right({{"p", 1}, {"q", 0}}, std::vector<Z2Vec>(2));
    EXPECT_THROW(interval_family(left, right, ChainMap{{}, {1}}), ValidationError);
}

TEST(Kunneth, Examples) {
    GHTable unknot{{{1, 1}}};
    EXPECT_EQ(kunneth(unknot, {1, 1}), (GHTable{{{1, 1}, {2, 1}}}));
    EXPECT_EQ(kunneth(unknot, {1}), unknot);
    GHTable a{{{1, 1}, {2, 1}, {-1, 1}, {0, 1}}}, b{{{1, 2}, {0, 2}}};
    EXPECT_EQ(a.total(), b.total());
    EXPECT_NE(kunneth(a, {1, 2, 1}), kunneth(b, {1, 2, 1}));
}

TEST(Kunneth, MatchesTensorOracleAndProductFamily) {
    Rng rng(9);
    const GradedComplex s1({{"m0", 0}, {"m1", 0}, {"M0", 1}, {"M1", 1}}, Differential{{"M0", {"m0", "m1"}}, {"M1", {"m0", "m1"}}});
    const GradedComplex t2({{"p", 0}, {"a", 1}, {"b", 1}, {"c", 1}, {"q", 0}, {"top", 2}}, Differential{{"c", {"p", "q"}}});
    for (int t = 0; t < 10; ++t) {
        auto fiber = random_complex(rng).complex;
        auto gh = homology(fiber);
        for (auto& [base, betti] : std::vector<std::pair<GradedComplex, std::vector<std::size_t>>>{{s1, {1, 1}}, {t2, {1, 2, 1}}}) {
            auto expect = oracle::tensor_homology(fiber, base);
            EXPECT_EQ(oracle::nonzero(kunneth(gh, betti)), expect);
            auto fc = product_family(fiber, base);
            EXPECT_EQ(oracle::nonzero(total_homology(fc)), expect);
            EXPECT_TRUE(collapse_check(pages(fc)));
        }
    }
}

TEST(SpinGH, Examples) {
    EXPECT_EQ(spin_gh(GHTable{{{2, 1}, {4, 2}, {-3, 2}}}, 1),
              (GHTable{{{-3, 2}, {-2, 2}, {2, 1}, {3, 1}, {4, 2}, {5, 2}}}));
    EXPECT_TRUE(spin_gh(GHTable{}, 2).empty());
    EXPECT_THROW(spin_gh(GHTable{}, 0), ValidationError);
}

TEST(SpinGH, OrderOfSpinsDoesNotMatter) {
    Rng rng(10);
    for (int t = 0; t < 20; ++t) {
        auto gh = homology(random_complex(rng).complex);
        const int a = 1 + t % 3, b = 1 + t % 2;
        EXPECT_EQ(spin_gh(spin_gh(gh, a), b), spin_gh(spin_gh(gh, b), a));
    }
}

TEST(TwistSpin, DumbbellSwapDiffersFromPlainSpin) {
    auto fc = dumbbell_family();
    auto sd = sphere_data(fc);
    auto t = twist_spin(sd.fiber, psi(fc), 1);
    EXPECT_EQ(t.rank(4), 1u);
    EXPECT_EQ(t.rank(5), 1u);
    auto plain = spin_gh(homology(sd.fiber), 1);
    EXPECT_EQ(plain.rank(4), 2u);
    EXPECT_EQ(plain.rank(5), 2u);
}

TEST(TwistSpin, IdentityAndZeroReduceToPlainSpin) {
    Rng rng(11);
    for (int t = 0; t < 10; ++t) {
        auto rc = random_complex(rng);
        auto gh = homology(rc.complex);
        auto constant = sphere_family(rc.complex, 1, identity_monodromy(rc.complex));
        EXPECT_EQ(twist_spin(rc.complex, psi(constant), 1), spin_gh(gh, 1));
        auto zero = sphere_family(rc.complex, 2, FiberMap{1, {}});
        EXPECT_EQ(twist_spin(rc.complex, psi(zero), 2), spin_gh(gh, 2));
    }
}

TEST(TwistSpin, RejectsShiftMismatch) {
    auto fc = dumbbell_family();
    EXPECT_THROW(twist_spin(sphere_data(fc).fiber, psi(fc), 2), ValidationError);
}

TEST(TwistSpin, MatchesTotalHomologyOfFamilyForMinimalFibers) {
    // with zero fiber differential the two-column complex is the family complex
    Rng rng(12);
    for (int t = 0; t < 10; ++t) {
        GHTable tab;
        for (int k = -1; k <= 2; ++k) tab.add(k, rng() % 3);
        auto fiber = table_complex(tab);
        RandomComplex rc{fiber, std::vector<bool>(fiber.size(), true), std::vector<int>(fiber.size(), -1), identity_map(fiber.size()), identity_map(fiber.size())};
        auto mu = random_chain_map(rng, rc, 0, true);
        auto fc = sphere_family(fiber, 1, contract(fiber, mu, 0));
        EXPECT_EQ(twist_spin(fiber, psi(fc), 1), total_homology(fc));
    }
}

TEST(SpinFamily, BlockStructureAndFactoring) {
    Rng rng(13);
    std::vector<FilteredComplex> fams{dumbbell_family()};
    for (int t = 0; t < 10; ++t) fams.push_back(random_sphere_family(rng, 1));
    for (auto& fc : fams) {
        auto spun = spin_family(fc);
        EXPECT_TRUE(verify_d_squared(spun).ok);
        EXPECT_TRUE(validate_spin_blocks(fc, spun).ok);
        auto f = factor_check(fc, spun);
        EXPECT_TRUE(f.ok) << f.reason;
    }
}

TEST(SpinFamily, ConstantFamilyTotalHomology) {
    Rng rng(14);
    auto rc = random_complex(rng);
    auto gh = homology(rc.complex);
    auto spun = spin_family(sphere_family(rc.complex, 1, identity_monodromy(rc.complex)));
    EXPECT_EQ(total_homology(spun), kunneth(spin_gh(gh, 1), {1, 1}));
}

TEST(SpinFamily, DumbbellPsiIsBlockSwap) {
    auto p = psi(spin_family(dumbbell_family()));
    EXPECT_EQ(p.map.matrices.at(4), swap2());
    EXPECT_EQ(p.map.matrices.at(5), swap2());
    EXPECT_EQ(p.map.source_basis.at(5), (std::vector<std::string>{"beta_L[+]", "beta_R[+]"}));
}

TEST(SpinFamily, CrossBlockEntryFailsValidator) {
    // fiber with classes in degrees 0 and 1 so that [-] of degree 1 meets [+] of degree 0
    GradedComplex fiber({{"u", 0}, {"w", 1}}, std::vector<Z2Vec>(2));
    auto fc = sphere_family(fiber, 1, identity_monodromy(fiber));
    auto spun = spin_family(fc);
    auto comps = spun.component_map();
    comps[1]["a:w[-]"].push_back("b:u[+]");
    FilteredComplex bad(spun.base(), spun.generators(), comps);
    auto v = validate_spin_blocks(fc, bad);
    EXPECT_FALSE(v.ok);
    EXPECT_NE(v.reason.find("cross-block"), std::string::npos);
    EXPECT_FALSE(factor_check(fc, bad).ok);
}

TEST(Dumbbell, Tables) {
    auto db = dumbbell(2, 4, 2);
    EXPECT_EQ(homology(db.complex), (GHTable{{{2, 1}, {4, 2}, {-3, 2}}}));
    auto six = dumbbell(2, 4, 6);
    EXPECT_EQ(homology(six.complex), (GHTable{{{2, 1}, {4, 6}, {-3, 6}}}));
    try {
        dumbbell(2, 3, 2);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(std::string(e.what()), "r >= n+2 required");
    }
    EXPECT_THROW(dumbbell(2, 4, 1), ValidationError);
    EXPECT_FALSE(db.notes.empty());
}

TEST(Dumbbell, ConvergenceAndCollapse) {
    auto fc = dumbbell_family();
    auto p = pages(fc);
    EXPECT_TRUE(convergence_check(p, total_homology(fc)).ok);
    EXPECT_EQ(total_homology(fc), twist_spin(sphere_data(fc).fiber, psi(fc), 1));
}

TEST(FiberMap, JsonRoundTrip) {
    auto db = dumbbell(2, 4, 2);
    nlohmann::json j = db.monodromy;
    EXPECT_EQ(j["degrees"]["4"], nlohmann::json::parse("[[0,1],[1,0]]"));
    auto back = fiber_map_from_json(j);
    EXPECT_EQ(back.blocks, db.monodromy.blocks);
    j["degrees"]["4"][0][0] = 2;
    try {
        fiber_map_from_json(j);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.where(), "$.degrees.4");
    }
}
