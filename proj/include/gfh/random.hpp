#pragma once

// Seeded random fixtures: complexes with d^2 = 0, chain automorphisms,
// degree-raising chain maps and homotopies. Everything is built in a
// standard form (homology generators plus acyclic pairs x -> y) and then
// conjugated by a random chain isomorphism, so the matrices are dense
// but all invariants are known by construction.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gfh/complex.hpp"
#include "gfh/families.hpp"

namespace gfh {

using Rng = std::mt19937_64;

struct RandomComplexOptions {
    int min_degree = -2;
    int max_degree = 3;
    int max_homology = 2;  // per degree
    int max_pairs = 2;     // acyclic pairs per degree (source degree)
    int mixing_ops = 24;   // elementary basis changes
};

/// Complex together with the chain isomorphism P from standard form and its inverse.
struct RandomComplex {
    GradedComplex complex;
    std::vector<bool> homology_generator;  // in standard form
    std::vector<int> partner;              // x <-> y of an acyclic pair, -1 for homology generators
    ChainMap to_standard;                  // P^{-1}
    ChainMap from_standard;                // P
};

namespace detail {

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline GradedComplex conjugate(const std::vector<Generator>& gens, const std::vector<Z2Vec>& d, const ChainMap& P,
                               const ChainMap& Pinv) {
    std::vector<Z2Vec> out(gens.size());
    for (std::size_t i = 0; i < gens.size(); ++i) {
        Z2Vec v;
        for (auto g : P[i]) z2_add_into(v, d[g]);
        out[i] = image(Pinv, v);
    }
    return GradedComplex(gens, std::move(out));
}

}  // namespace detail

inline RandomComplex random_complex(Rng& rng, const RandomComplexOptions& opt = {}) {
    std::vector<Generator> gens;
    std::vector<Z2Vec> d;
    std::vector<bool> hom;
    std::vector<int> partner;
    for (int k = opt.min_degree; k <= opt.max_degree; ++k) {
        const int h = detail::uniform(rng, 0, opt.max_homology);
        for (int i = 0; i < h; ++i) {
            gens.push_back({"h" + std::to_string(k) + "_" + std::to_string(i), k});
            d.emplace_back();
            hom.push_back(true);
            partner.push_back(-1);
        }
        if (k == opt.min_degree) continue;
        const int p = detail::uniform(rng, 0, opt.max_pairs);
        for (int i = 0; i < p; ++i) {
            const auto y = static_cast<std::uint32_t>(gens.size());
            gens.push_back({"y" + std::to_string(k - 1) + "_" + std::to_string(i), k - 1});
            d.emplace_back();
            hom.push_back(false);
            partner.push_back(static_cast<int>(y) + 1);
            gens.push_back({"x" + std::to_string(k) + "_" + std::to_string(i), k});
            d.push_back({y});
            hom.push_back(false);
            partner.push_back(static_cast<int>(y));
        }
    }
    RandomComplex rc;
    rc.homology_generator = hom;
    rc.partner = partner;
    rc.from_standard = identity_map(gens.size());
    rc.to_standard = identity_map(gens.size());
    if (gens.size() >= 2) {
        for (int op = 0; op < opt.mixing_ops; ++op) {
            const auto a = static_cast<std::uint32_t>(detail::uniform(rng, 0, static_cast<int>(gens.size()) - 1));
            const auto b = static_cast<std::uint32_t>(detail::uniform(rng, 0, static_cast<int>(gens.size()) - 1));
            if (a == b || gens[a].degree != gens[b].degree) continue;
            // E: x_b -> x_b + x_a, an involution
            z2_add_into(rc.from_standard[b], rc.from_standard[a]);
            for (auto& img : rc.to_standard)
                if (z2_contains(img, b)) z2_add_into(img, Z2Vec{a});
        }
    }
    rc.complex = detail::conjugate(gens, d, rc.from_standard, rc.to_standard);
    return rc;
}

/// Random invertible square matrix.
inline Z2Matrix random_invertible(Rng& rng, std::size_t n) {
    for (;;) {
        Z2Matrix m(n, n);
        for (std::size_t c = 0; c < n; ++c) {
            Z2Vec col;
            for (std::size_t r = 0; r < n; ++r)
                if (detail::uniform(rng, 0, 1)) col.push_back(static_cast<std::uint32_t>(r));
            m.set_column(c, col);
        }
        if (rank(m) == n) return m;
    }
}

/// Chain map of the given degree shift, nonzero only between homology
/// generators of the standard form, conjugated to the complex's basis.
/// With invertible = true (shift 0) it is a chain automorphism.
inline ChainMap random_chain_map(Rng& rng, const RandomComplex& rc, int shift, bool invertible) {
    const auto& c = rc.complex;
    ChainMap std_map(c.size());
    for (int k : c.degrees()) {
        std::vector<std::uint32_t> src, dst;
        for (auto i : c.in_degree(k))
            if (rc.homology_generator[i]) src.push_back(i);
        for (auto i : c.in_degree(k + shift))
            if (rc.homology_generator[i]) dst.push_back(i);
        Z2Matrix m(dst.size(), src.size());
        if (invertible) {
            m = random_invertible(rng, src.size());
        } else {
            for (std::size_t col = 0; col < src.size(); ++col) {
                Z2Vec v;
                for (std::size_t r = 0; r < dst.size(); ++r)
                    if (detail::uniform(rng, 0, 1)) v.push_back(static_cast<std::uint32_t>(r));
                m.set_column(col, v);
            }
        }
        for (std::size_t col = 0; col < src.size(); ++col) {
            Z2Vec v;
            for (auto r : m.column(col)) v.push_back(dst[r]);
            std::sort(v.begin(), v.end());
            std_map[src[col]] = v;
        }
        if (invertible)
            for (auto i : c.in_degree(k))
                if (!rc.homology_generator[i]) std_map[i] = {i};
    }
    return compose(rc.to_standard, compose(std_map, rc.from_standard));
}

/// Arbitrary linear map raising degree by `shift` (not a chain map).
inline ChainMap random_linear_map(Rng& rng, const GradedComplex& c, int shift) {
    ChainMap out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        Z2Vec v;
        for (auto t : c.in_degree(c.generator(i).degree + shift))
            if (detail::uniform(rng, 0, 2) == 0) v.push_back(t);
        out[i] = v;
    }
    return out;
}

/// Map of degree `shift` built in standard form: homology generators and
/// pair targets go to pair sources, pair sources go to zero. For shift 1
/// the pair-to-pair part is strictly triangular, so id + dh + hd is a
/// chain automorphism.
inline ChainMap random_homotopy(Rng& rng, const RandomComplex& rc, int shift) {
    const auto& c = rc.complex;
    auto is_source = [&](std::size_t i) {
        return rc.partner[i] >= 0 && c.generator(i).degree == c.generator(static_cast<std::size_t>(rc.partner[i])).degree + 1;
    };
    ChainMap std_map(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (is_source(i)) continue;
        Z2Vec v;
        for (auto t : c.in_degree(c.generator(i).degree + shift)) {
            if (!is_source(t)) continue;
            if (shift == 1 && !rc.homology_generator[i] && rc.partner[t] >= static_cast<int>(i)) continue;
            if (detail::uniform(rng, 0, 1)) v.push_back(t);
        }
        std_map[i] = v;
    }
    return compose(rc.to_standard, compose(std_map, rc.from_standard));
}

/// dh + hd for a linear map h of degree `shift`.
inline ChainMap boundary_of(const GradedComplex& c, const ChainMap& h) {
    ChainMap out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = z2_add(c.apply_d(h[i]), image(h, c.d(i)));
    return out;
}

inline ChainMap add(const ChainMap& a, const ChainMap& b) {
    ChainMap out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = z2_add(a[i], b[i]);
    return out;
}

/// Random admissible family over S^m: a random fiber with a random
/// automorphism (m = 1) or a random degree m - 1 chain map.
inline FilteredComplex random_sphere_family(Rng& rng, int m, const RandomComplexOptions& opt = {}) {
    auto rc = random_complex(rng, opt);
    auto map = random_chain_map(rng, rc, m == 1 ? 0 : m - 1, m == 1);
    return sphere_family(rc.complex, m, contract(rc.complex, map, m == 1 ? 0 : m - 1));
}

}  // namespace gfh
