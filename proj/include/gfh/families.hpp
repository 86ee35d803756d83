#pragma once

// Family complexes over spheres, intervals and products, the monodromy
// morphism Psi read off from d_m, and the constructions built on it:
// composition, homotopy checks, covers, continuation maps, Kunneth,
// spinning, twist spinning and the dumbbell model.
//
// A family over S^m has generators (a, x) at base degree m and (b, x) at
// base degree 0 for every fiber generator x. For m = 1 the family is
// determined by a monodromy mu and d_1(a, x) = (b, x + mu x); for m >= 2 by a
// chain map theta raising fiber degree by m - 1 with d_m(a, x) = (b, theta x).

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gfh/complex.hpp"
#include "gfh/error.hpp"
#include "gfh/spectral.hpp"
#include "gfh/z2.hpp"

namespace gfh {

/// Linear map between chain groups given degree by degree. Block j has
/// rows indexed by the generators of degree j + shift and columns by those
/// of degree j, both in construction order. Column c is the image of the
/// c-th source generator.
struct FiberMap {
    int shift = 0;
    std::map<int, Z2Matrix> blocks;
};

using ChainMap = std::vector<Z2Vec>;  // generator index -> image (generator indices)

/// Expands a FiberMap into images of individual generators. Missing degrees
/// are the identity when shift = 0 and zero otherwise.
inline ChainMap expand(const GradedComplex& c, const FiberMap& f) {
    ChainMap out(c.size());
    for (auto& [j, m] : f.blocks) {
        if (c.in_degree(j).size() != m.n_cols() || c.in_degree(j + f.shift).size() != m.n_rows())
            throw ValidationError("map block has the wrong shape for the complex", "degree " + std::to_string(j));
    }
    for (int j : c.degrees()) {
        auto src = c.in_degree(j);
        auto dst = c.in_degree(j + f.shift);
        auto it = f.blocks.find(j);
        for (std::size_t col = 0; col < src.size(); ++col) {
            Z2Vec img;
            if (it != f.blocks.end()) {
                for (auto r : it->second.column(col)) img.push_back(dst[r]);
                std::sort(img.begin(), img.end());
            } else if (f.shift == 0) {
                img = {src[col]};
            }
            out[src[col]] = img;
        }
    }
    return out;
}

inline FiberMap contract(const GradedComplex& c, const ChainMap& m, int shift) {
    FiberMap f{shift, {}};
    for (int j : c.degrees()) {
        auto src = c.in_degree(j);
        auto dst = c.in_degree(j + shift);
        std::map<std::uint32_t, std::uint32_t> local;
        for (std::size_t i = 0; i < dst.size(); ++i) local[dst[i]] = static_cast<std::uint32_t>(i);
        Z2Matrix b(dst.size(), src.size());
        for (std::size_t col = 0; col < src.size(); ++col) {
            Z2Vec v;
            for (auto g : m.at(src[col])) v.push_back(local.at(g));
            std::sort(v.begin(), v.end());
            b.set_column(col, v);
        }
        f.blocks.emplace(j, std::move(b));
    }
    return f;
}

inline Z2Vec image(const ChainMap& m, const Z2Vec& v) {
    Z2Vec out;
    for (auto i : v) z2_add_into(out, m.at(i));
    return out;
}

inline ChainMap compose(const ChainMap& outer, const ChainMap& inner) {
    ChainMap out(inner.size());
    for (std::size_t i = 0; i < inner.size(); ++i) out[i] = image(outer, inner[i]);
    return out;
}

inline ChainMap identity_map(std::size_t n) {
    ChainMap out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {static_cast<std::uint32_t>(i)};
    return out;
}

/// First generator x (as id) with d(mx) != m(dx), if any.
inline std::optional<std::string> chain_map_witness(const GradedComplex& src, const GradedComplex& dst,
                                                    const ChainMap& m) {
    for (std::size_t i = 0; i < src.size(); ++i)
        if (dst.apply_d(m.at(i)) != image(m, src.d(i))) return src.generator(i).id;
    return std::nullopt;
}

inline void require_chain_map(const GradedComplex& src, const GradedComplex& dst, const ChainMap& m, int shift) {
    for (std::size_t i = 0; i < src.size(); ++i)
        for (auto t : m.at(i))
            if (dst.generator(t).degree != src.generator(i).degree + shift)
                throw ValidationError("map does not have the declared degree shift", src.generator(i).id);
    if (auto w = chain_map_witness(src, dst, m)) throw ValidationError("map does not commute with the differential", *w);
}

// ---- induced maps on homology --------------------------------------------------

struct InducedMap {
    int shift = 0;
    std::map<int, Z2Matrix> matrices;                     // source degree -> matrix
    std::map<int, std::vector<std::string>> source_basis; // representative labels
    std::map<int, std::vector<std::string>> target_basis;
};

inline InducedMap induced(const GradedComplex& src, const GradedComplex& dst, const ChainMap& m, int shift) {
    require_chain_map(src, dst, m, shift);
    InducedMap out;
    out.shift = shift;
    std::vector<int> degs = src.degrees();
    for (int j : dst.degrees()) degs.push_back(j - shift);
    std::sort(degs.begin(), degs.end());
    degs.erase(std::unique(degs.begin(), degs.end()), degs.end());
    for (int j : degs) {
        HomologyBasis hs(src, j), ht(dst, j + shift);
        if (hs.size() == 0 && ht.size() == 0) continue;
        Z2Matrix mat(ht.size(), hs.size());
        for (std::size_t c = 0; c < hs.size(); ++c) mat.set_column(c, ht.coordinates(image(m, hs.representative(c))));
        out.matrices.emplace(j, std::move(mat));
        out.source_basis[j] = hs.labels();
        out.target_basis[j + shift] = ht.labels();
    }
    return out;
}

// ---- sphere families ----------------------------------------------------------------

inline std::string family_id(const std::string& point, const std::string& fiber) { return point + ":" + fiber; }

/// Family over S^m. For m = 1 `data` is the monodromy (shift 0, invertible
/// chain automorphism); for m >= 2 a chain map with shift m - 1.
inline FilteredComplex sphere_family(const GradedComplex& fiber, int m, const FiberMap& data) {
    require_d_squared(fiber);
    if (m < 1) throw ValidationError("sphere families need m >= 1");
    const int want = m == 1 ? 0 : m - 1;
    if (data.shift != want)
        throw ValidationError("family data must raise fiber degree by " + std::to_string(want),
                              "shift " + std::to_string(data.shift));
    ChainMap theta = expand(fiber, data);
    require_chain_map(fiber, fiber, theta, want);
    if (m == 1) {
        for (auto& [j, b] : data.blocks)
            if (b.n_rows() != b.n_cols() || rank(b) != b.n_cols())
                throw ValidationError("monodromy is not invertible", "degree " + std::to_string(j));
        for (std::size_t i = 0; i < theta.size(); ++i) z2_add_into(theta[i], Z2Vec{static_cast<std::uint32_t>(i)});
    }
    auto base = BaseDescriptor::sphere(m);
    std::vector<FamilyGenerator> gens;
    for (const char* p : {"a", "b"})
        for (auto& g : fiber.generators())
            gens.push_back({family_id(p, g.id), p, g.id, std::string(p) == "a" ? m : 0, g.degree});
    ComponentMap comps;
    for (std::size_t i = 0; i < fiber.size(); ++i) {
        const auto& x = fiber.generator(i).id;
        for (const char* p : {"a", "b"}) {
            auto& t = comps[0][family_id(p, x)];
            for (auto y : fiber.d(i)) t.push_back(family_id(p, fiber.generator(y).id));
        }
        auto& t = comps[m][family_id("a", x)];
        for (auto y : theta[i]) t.push_back(family_id("b", fiber.generator(y).id));
    }
    return FilteredComplex(base, std::move(gens), comps);
}

/// Fiber complex read from the generators over base point `point`, with d_0.
inline GradedComplex fiber_over(const FilteredComplex& fc, const std::string& point) {
    std::vector<Generator> gens;
    std::vector<std::size_t> idx;
    std::map<std::size_t, std::uint32_t> local;
    for (std::size_t i = 0; i < fc.size(); ++i) {
        auto& g = fc.generator(i);
        if (g.base_point != point) continue;
        local[i] = static_cast<std::uint32_t>(gens.size());
        gens.push_back({g.fiber, g.fiber_degree});
        idx.push_back(i);
    }
    const Z2Matrix* d0 = fc.component(0);
    std::vector<Z2Vec> d(gens.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (!d0) break;
        std::vector<std::uint32_t> v;
        for (auto t : d0->column(idx[k])) {
            auto it = local.find(t);
            if (it == local.end())
                throw ValidationError("d_0 leaves the fiber over a base point", fc.generator(idx[k]).id);
            v.push_back(it->second);
        }
        std::sort(v.begin(), v.end());
        d[k] = v;
    }
    return GradedComplex(std::move(gens), std::move(d));
}

struct SphereData {
    int m = 1;
    GradedComplex fiber;
    ChainMap psi;  // chain-level psi on the fiber
};

/// Reads psi(x) = <d_m(a, x), b> (+ x when m = 1) and checks it is a chain map.
inline SphereData sphere_data(const FilteredComplex& fc) {
    if (fc.base().kind != BaseDescriptor::Kind::Sphere) throw ValidationError("family is not over a sphere");
    SphereData sd;
    sd.m = fc.base().m;
    sd.fiber = fiber_over(fc, "b");
    auto top = fiber_over(fc, "a");
    if (top.size() != sd.fiber.size()) throw ValidationError("fibers over a and b differ");
    for (std::size_t i = 0; i < top.size(); ++i) {
        auto& g = top.generator(i);
        auto j = sd.fiber.find(g.id);
        if (!j || sd.fiber.generator(*j).degree != g.degree) throw ValidationError("fibers over a and b differ", g.id);
        Z2Vec mapped;
        for (auto t : top.d(i)) mapped.push_back(static_cast<std::uint32_t>(sd.fiber.index_of(top.generator(t).id)));
        std::sort(mapped.begin(), mapped.end());
        if (mapped != sd.fiber.d(*j)) throw ValidationError("fibers over a and b have different differentials", g.id);
    }
    sd.psi.assign(sd.fiber.size(), {});
    const Z2Matrix* dm = fc.component(sd.m);
    for (std::size_t i = 0; i < fc.size(); ++i) {
        auto& g = fc.generator(i);
        if (g.base_point != "a") continue;
        const auto src = sd.fiber.index_of(g.fiber);
        Z2Vec img;
        if (dm)
            for (auto t : dm->column(i)) img.push_back(static_cast<std::uint32_t>(sd.fiber.index_of(fc.generator(t).fiber)));
        std::sort(img.begin(), img.end());
        if (sd.m == 1) z2_add_into(img, Z2Vec{static_cast<std::uint32_t>(src)});
        sd.psi[src] = img;
    }
    require_chain_map(sd.fiber, sd.fiber, sd.psi, sd.m - 1);
    return sd;
}

struct PsiMap {
    int m = 1;
    int degree_shift = 0;  // m - 1
    InducedMap map;
};

inline PsiMap psi(const FilteredComplex& fc) {
    auto sd = sphere_data(fc);
    PsiMap p{sd.m, sd.m - 1, induced(sd.fiber, sd.fiber, sd.psi, sd.m - 1)};
    if (p.m == 1)
        for (auto& [j, mat] : p.map.matrices)
            if (mat.n_rows() != mat.n_cols() || rank(mat) != mat.n_cols())
                throw ValidationError("Psi is not invertible; the family is inadmissible", "degree " + std::to_string(j));
    return p;
}

/// p1 after p2: product for m = 1, sum for m > 1.
inline PsiMap compose(const PsiMap& p1, const PsiMap& p2) {
    if (p1.m != p2.m) throw ValidationError("cannot compose Psi maps of different m");
    if (p1.map.source_basis != p2.map.source_basis || p1.map.target_basis != p2.map.target_basis)
        throw ValidationError("Psi maps use different homology bases");
    PsiMap out = p1;
    for (auto& [j, a] : p1.map.matrices) {
        const Z2Matrix& b = p2.map.matrices.at(j);
        out.map.matrices.at(j) = p1.m == 1 ? a * b : a + b;
    }
    return out;
}

inline bool is_identity(const PsiMap& p) {
    for (auto& [j, mat] : p.map.matrices)
        if (!(mat == Z2Matrix::identity(mat.n_cols()))) return false;
    return true;
}

inline bool is_zero(const PsiMap& p) {
    for (auto& [j, mat] : p.map.matrices)
        if (!mat.is_zero()) return false;
    return true;
}

struct Certificate {
    bool nontrivial = false;
    std::size_t order_lower_bound = 1;
    int m = 1;
    std::optional<int> degree;  // highest degree where Psi is nontrivial
    std::string basis;
    std::string claim;
    std::vector<std::string> notes;
};

inline Certificate certificate(const PsiMap& p, std::size_t max_order = 100000) {
    Certificate c;
    c.m = p.m;
    for (auto& [j, mat] : p.map.matrices) {
        const bool trivial = p.m == 1 ? mat == Z2Matrix::identity(mat.n_cols()) : mat.is_zero();
        if (!trivial) c.degree = j;
        else if (p.m == 1) c.notes.push_back("Psi is the identity in degree " + std::to_string(j));
    }
    c.nontrivial = c.degree.has_value();
    if (c.nontrivial && p.m == 1) {
        PsiMap power = p;
        std::size_t k = 1;
        while (!is_identity(power)) {
            if (++k > max_order) throw InternalError("Psi order exceeds the search bound");
            power = compose(power, p);
        }
        c.order_lower_bound = k;
    }
    if (c.degree) {
        auto& labels = p.map.source_basis.at(*c.degree);
        for (std::size_t i = 0; i < labels.size(); ++i) c.basis += (i ? "," : "") + labels[i];
    }
    c.claim = c.nontrivial ? (p.m == 1 ? "loop not contractible in Legendrian category"
                                       : "sphere not contractible in Legendrian category")
                           : "no obstruction detected";
    return c;
}

/// Family over S^1 whose monodromy is the k-th power of the original.
inline FilteredComplex cover_pullback(const FilteredComplex& fc, int k) {
    if (fc.base().kind != BaseDescriptor::Kind::Sphere || fc.base().m != 1)
        throw ValidationError("circle covers need a family over S^1");
    if (k < 1) throw ValidationError("cover degree must be positive");
    auto sd = sphere_data(fc);
    ChainMap mu = identity_map(sd.fiber.size());
    for (int i = 0; i < k; ++i) mu = compose(sd.psi, mu);
    return sphere_family(sd.fiber, 1, contract(sd.fiber, mu, 0));
}

// ---- interval families ------------------------------------------------------------

/// Family over [-1, 1] (minima at +-1, maximum at 0): the fiber over 0 and
/// over -1 is `left`, over 1 is `right`; d_1(0, x) = (-1, x) + (1, alpha x).
inline FilteredComplex interval_family(const GradedComplex& left, const GradedComplex& right, const ChainMap& alpha) {
    require_chain_map(left, right, alpha, 0);
    std::vector<FamilyGenerator> gens;
    ComponentMap comps;
    auto add_column = [&](const std::string& p, const GradedComplex& f, int base_degree) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            gens.push_back({family_id(p, f.generator(i).id), p, f.generator(i).id, base_degree, f.generator(i).degree});
            auto& t = comps[0][family_id(p, f.generator(i).id)];
            for (auto y : f.d(i)) t.push_back(family_id(p, f.generator(y).id));
        }
    };
    add_column("-1", left, 0);
    add_column("0", left, 1);
    add_column("1", right, 0);
    for (std::size_t i = 0; i < left.size(); ++i) {
        auto& t = comps[1][family_id("0", left.generator(i).id)];
        t.push_back(family_id("-1", left.generator(i).id));
        for (auto y : alpha[i]) t.push_back(family_id("1", right.generator(y).id));
    }
    return FilteredComplex(BaseDescriptor::interval(), std::move(gens), comps);
}

struct Continuation {
    ChainMap alpha;
    InducedMap induced;
    bool chain_map = true;
    bool quasi_isomorphism = true;
    std::vector<std::string> flags;
};

/// alpha(x) = <d_1(0, x), 1>, its induced map, and a quasi-isomorphism check.
inline Continuation continuation(const FilteredComplex& fc) {
    if (fc.base().kind != BaseDescriptor::Kind::Interval) throw ValidationError("continuation needs an interval family");
    require_d_squared(fc.total_complex());
    auto src = fiber_over(fc, "0");
    auto dst = fiber_over(fc, "1");
    Continuation c;
    c.alpha.assign(src.size(), {});
    const Z2Matrix* d1 = fc.component(1);
    for (std::size_t i = 0; i < fc.size(); ++i) {
        auto& g = fc.generator(i);
        if (g.base_point != "0" || !d1) continue;
        Z2Vec img;
        for (auto t : d1->column(i))
            if (fc.generator(t).base_point == "1")
                img.push_back(static_cast<std::uint32_t>(dst.index_of(fc.generator(t).fiber)));
        std::sort(img.begin(), img.end());
        c.alpha[src.index_of(g.fiber)] = img;
    }
    if (auto w = chain_map_witness(src, dst, c.alpha)) {
        c.chain_map = false;
        c.quasi_isomorphism = false;
        c.flags.push_back("continuation is not a chain map at " + *w + ": inadmissible input");
        return c;
    }
    c.induced = induced(src, dst, c.alpha, 0);
    for (auto& [j, mat] : c.induced.matrices) {
        if (mat.n_rows() != mat.n_cols() || rank(mat) != mat.n_cols()) {
            c.quasi_isomorphism = false;
            c.flags.push_back("induced map not invertible in degree " + std::to_string(j) +
                              ": violates the groupoid property");
        }
    }
    return c;
}

// ---- homotopies over [-1, 1] x S^m -------------------------------------------------

struct HomotopyCheck {
    bool ok = true;
    std::optional<std::string> witness;
    FilteredComplex assembled;
};

/// Assembles the family over [-1, 1] x S^m from f0 (slices -1 and 0), f1
/// (slice 1) and H with d_{m+1}((0,a), x) = ((1,b), H x), then checks total
/// d^2 = 0 and psi_f0 + psi_f1 = dH + Hd.
inline HomotopyCheck verify_homotopy(const FilteredComplex& f0, const FilteredComplex& f1, const FiberMap& htpy) {
    auto s0 = sphere_data(f0);
    auto s1 = sphere_data(f1);
    if (s0.m != s1.m) throw ValidationError("homotopy ends are over different spheres");
    const int m = s0.m;
    if (s0.fiber.generators().size() != s1.fiber.generators().size())
        throw ValidationError("homotopy ends have different fibers");
    for (std::size_t i = 0; i < s0.fiber.size(); ++i)
        if (s0.fiber.generator(i).id != s1.fiber.generator(i).id ||
            s0.fiber.generator(i).degree != s1.fiber.generator(i).degree || s0.fiber.d(i) != s1.fiber.d(i))
            throw ValidationError("homotopy ends have different fibers", s0.fiber.generator(i).id);
    if (htpy.shift != m) throw ValidationError("homotopy must raise fiber degree by m", "shift " + std::to_string(htpy.shift));
    const GradedComplex& F = s0.fiber;
    ChainMap H = expand(F, htpy);

    auto theta = [&](const SphereData& s) {
        ChainMap t = s.psi;
        if (m == 1)
            for (std::size_t i = 0; i < t.size(); ++i) z2_add_into(t[i], Z2Vec{static_cast<std::uint32_t>(i)});
        return t;
    };
    const ChainMap th0 = theta(s0), th1 = theta(s1);

    auto base = BaseDescriptor::interval_sphere(m);
    std::vector<FamilyGenerator> gens;
    ComponentMap comps;
    auto pid = [](const char* n, const char* c) { return std::string("(") + n + "," + c + ")"; };
    for (const char* n : {"-1", "0", "1"}) {
        for (const char* c : {"a", "b"}) {
            const int deg = (std::string(n) == "0" ? 1 : 0) + (std::string(c) == "a" ? m : 0);
            for (std::size_t i = 0; i < F.size(); ++i) {
                const auto& x = F.generator(i).id;
                gens.push_back({family_id(pid(n, c), x), pid(n, c), x, deg, F.generator(i).degree});
                auto& t = comps[0][family_id(pid(n, c), x)];
                for (auto y : F.d(i)) t.push_back(family_id(pid(n, c), F.generator(y).id));
            }
        }
    }
    for (std::size_t i = 0; i < F.size(); ++i) {
        const auto& x = F.generator(i).id;
        for (const char* c : {"a", "b"}) {
            auto& t = comps[1][family_id(pid("0", c), x)];
            t.push_back(family_id(pid("-1", c), x));
            t.push_back(family_id(pid("1", c), x));
        }
        for (const char* n : {"-1", "0", "1"}) {
            const ChainMap& th = std::string(n) == "1" ? th1 : th0;
            auto& t = comps[m][family_id(pid(n, "a"), x)];
            for (auto y : th[i]) t.push_back(family_id(pid(n, "b"), F.generator(y).id));
        }
        auto& t = comps[m + 1][family_id(pid("0", "a"), x)];
        for (auto y : H[i]) t.push_back(family_id(pid("1", "b"), F.generator(y).id));
    }
    HomotopyCheck out;
    out.assembled = FilteredComplex(base, std::move(gens), comps);
    auto d2 = verify_d_squared(out.assembled);
    if (!d2.ok) {
        out.ok = false;
        out.witness = *d2.witness;
        return out;
    }
    for (std::size_t i = 0; i < F.size(); ++i) {
        Z2Vec lhs = z2_add(s0.psi[i], s1.psi[i]);
        Z2Vec rhs = z2_add(F.apply_d(H[i]), image(H, F.d(i)));
        if (lhs != rhs) {
            out.ok = false;
            out.witness = F.generator(i).id;
            return out;
        }
    }
    return out;
}

// ---- GH-level formulas -------------------------------------------------------------

/// rank_k = sum_l rank_l(gh) * betti_{k - l}.
inline GHTable kunneth(const GHTable& gh, const std::vector<std::size_t>& base_betti) {
    GHTable out;
    for (auto& [l, r] : gh.ranks)
        for (std::size_t i = 0; i < base_betti.size(); ++i) out.add(l + static_cast<int>(i), r * base_betti[i]);
    return out;
}

/// rank_k = rank_k(gh) + rank_{k-m}(gh).
inline GHTable spin_gh(const GHTable& gh, int m) {
    if (m < 1) throw ValidationError("spin needs m >= 1");
    return direct_sum(gh, gh.shifted(m));
}

/// Homology of GH (column b) plus GH shifted up by m (column a) with
/// d(a, x) = (b, Psi x), plus x when m = 1.
inline GHTable twist_spin(const GradedComplex& fiber, const PsiMap& p, int m) {
    if (p.m != m) throw ValidationError("Psi was computed for a different m");
    if (p.degree_shift != m - 1) throw ValidationError("Psi degree shift does not match m");
    std::vector<Generator> gens;
    std::vector<Z2Vec> d;
    std::map<int, std::uint32_t> b_start, a_start;
    std::map<int, std::size_t> dims;
    for (int j : fiber.degrees()) {
        HomologyBasis hb(fiber, j);
        if (hb.size()) dims[j] = hb.size();
    }
    for (auto& [j, n] : dims) {
        b_start[j] = static_cast<std::uint32_t>(gens.size());
        for (std::size_t i = 0; i < n; ++i) gens.push_back({"b:" + std::to_string(j) + ":" + std::to_string(i), j});
    }
    for (auto& [j, n] : dims) {
        a_start[j] = static_cast<std::uint32_t>(gens.size());
        for (std::size_t i = 0; i < n; ++i) gens.push_back({"a:" + std::to_string(j) + ":" + std::to_string(i), j + m});
    }
    d.assign(gens.size(), {});
    for (auto& [j, n] : dims) {
        auto it = p.map.matrices.find(j);
        if (it != p.map.matrices.end() && it->second.n_cols() != n)
            throw ValidationError("Psi basis does not match the fiber homology", "degree " + std::to_string(j));
        for (std::size_t i = 0; i < n; ++i) {
            Z2Vec img;
            if (it != p.map.matrices.end())
                for (auto r : it->second.column(i)) img.push_back(b_start.at(j + m - 1) + r);
            if (m == 1) z2_add_into(img, Z2Vec{static_cast<std::uint32_t>(b_start.at(j) + i)});
            std::sort(img.begin(), img.end());
            d[a_start[j] + i] = img;
        }
    }
    return homology(GradedComplex(std::move(gens), std::move(d)));
}

// ---- spinning families ---------------------------------------------------------------

inline std::string minus_id(const std::string& s) { return s + "[-]"; }
inline std::string plus_id(const std::string& s) { return s + "[+]"; }

/// Doubles every generator c into c[-] (same bidegree) and c[+] (fiber
/// degree + 1), with every component block-diagonal and equal on both blocks.
inline FilteredComplex spin_family(const FilteredComplex& fc) {
    if (fc.base().kind != BaseDescriptor::Kind::Sphere || fc.base().m != 1)
        throw ValidationError("spin_family needs a family over S^1");
    require_d_squared(fc.total_complex());
    std::vector<FamilyGenerator> gens;
    for (auto& g : fc.generators()) gens.push_back({minus_id(g.id), g.base_point, minus_id(g.fiber), g.base_degree, g.fiber_degree});
    for (auto& g : fc.generators())
        gens.push_back({plus_id(g.id), g.base_point, plus_id(g.fiber), g.base_degree, g.fiber_degree + 1});
    ComponentMap comps;
    for (auto& [n, dm] : fc.component_map())
        for (auto& [src, tg] : dm) {
            auto& lo = comps[n][minus_id(src)];
            auto& hi = comps[n][plus_id(src)];
            for (auto& t : tg) {
                lo.push_back(minus_id(t));
                hi.push_back(plus_id(t));
            }
        }
    return FilteredComplex(fc.base(), std::move(gens), comps);
}

struct CheckResult {
    bool ok = true;
    std::string reason;
};

/// Block structure of a spun family: generators pair up as c[-], c[+] with
/// the [+] fiber degree one higher, no component mixes blocks, and both
/// diagonal blocks reproduce the original components.
inline CheckResult validate_spin_blocks(const FilteredComplex& fc, const FilteredComplex& spun) {
    if (spun.size() != 2 * fc.size()) return {false, "spun family must have twice as many generators"};
    for (auto& g : fc.generators()) {
        auto lo = spun.find(minus_id(g.id));
        auto hi = spun.find(plus_id(g.id));
        if (!lo || !hi) return {false, "missing block copy of " + g.id};
        auto& a = spun.generator(*lo);
        auto& b = spun.generator(*hi);
        if (a.base_point != g.base_point || b.base_point != g.base_point || a.base_degree != g.base_degree ||
            b.base_degree != g.base_degree)
            return {false, "block copy over the wrong base point: " + g.id};
        if (a.fiber_degree != g.fiber_degree) return {false, "[-] copy changes fiber degree: " + g.id};
        if (b.fiber_degree != g.fiber_degree + 1) return {false, "[+] copy must raise fiber degree by 1: " + g.id};
    }
    auto block_of = [](const std::string& id) { return id.size() >= 3 ? id.substr(id.size() - 3) : std::string(); };
    auto strip = [](const std::string& id) { return id.substr(0, id.size() - 3); };
    const auto orig = fc.component_map();
    const auto cm = spun.component_map();
    for (auto& [n, dm] : cm)
        for (auto& [src, tg] : dm)
            for (auto& t : tg)
                if (block_of(t) != block_of(src)) return {false, "cross-block entry in d" + std::to_string(n) + ": " + src + " -> " + t};
    for (const char* blk : {"[-]", "[+]"}) {
        ComponentMap seen;
        for (auto& [n, dm] : cm)
            for (auto& [src, tg] : dm) {
                if (block_of(src) != blk) continue;
                auto& v = seen[n][strip(src)];
                for (auto& t : tg) v.push_back(strip(t));
                std::sort(v.begin(), v.end());
            }
        ComponentMap want;
        for (auto& [n, dm] : orig)
            for (auto& [src, tg] : dm) {
                auto v = tg;
                std::sort(v.begin(), v.end());
                want[n][src] = v;
            }
        if (seen != want) return {false, std::string("diagonal block ") + blk + " differs from the original components"};
    }
    return {};
}

/// Pr_+- o Psi_spun = Psi_fc o Pr_+- on homology classes of the spun fiber.
inline CheckResult factor_check(const FilteredComplex& fc, const FilteredComplex& spun) {
    if (auto v = validate_spin_blocks(fc, spun); !v.ok) return v;
    auto base = sphere_data(fc);
    auto sp = sphere_data(spun);
    const GradedComplex& F = base.fiber;
    const GradedComplex& S = sp.fiber;
    for (const char* blk : {"[-]", "[+]"}) {
        const std::string tag = blk;
        ChainMap pr(S.size());
        for (std::size_t i = 0; i < S.size(); ++i) {
            const auto& id = S.generator(i).id;
            if (id.size() >= 3 && id.substr(id.size() - 3) == tag)
                pr[i] = {static_cast<std::uint32_t>(F.index_of(id.substr(0, id.size() - 3)))};
        }
        const int shift = tag == "[+]" ? -1 : 0;
        require_chain_map(S, F, pr, shift);
        for (int j : S.degrees()) {
            HomologyBasis hs(S, j);
            HomologyBasis hf(F, j + shift);
            for (std::size_t c = 0; c < hs.size(); ++c) {
                auto rep = hs.representative(c);
                Z2Vec lhs = image(pr, image(sp.psi, rep));
                Z2Vec rhs = image(base.psi, image(pr, rep));
                if (hf.coordinates(lhs) != hf.coordinates(rhs))
                    return {false, "square does not commute for " + tag + " on class " + hs.labels()[c]};
            }
        }
    }
    return {};
}

// ---- products and the dumbbell ------------------------------------------------------

/// Trivial family fiber x B over a base with Morse complex `base`:
/// d_0 = 1 (x) d_fiber, d_1 = d_base (x) 1.
inline FilteredComplex product_family(const GradedComplex& fiber, const GradedComplex& base, const std::string& name = "B") {
    require_d_squared(base);
    std::vector<BasePoint> pts;
    for (auto& g : base.generators()) pts.push_back({g.id, g.degree});
    std::vector<FamilyGenerator> gens;
    ComponentMap comps;
    for (std::size_t p = 0; p < base.size(); ++p)
        for (std::size_t i = 0; i < fiber.size(); ++i) {
            const auto& pid = base.generator(p).id;
            const auto& x = fiber.generator(i).id;
            gens.push_back({family_id(pid, x), pid, x, base.generator(p).degree, fiber.generator(i).degree});
            auto& t0 = comps[0][family_id(pid, x)];
            for (auto y : fiber.d(i)) t0.push_back(family_id(pid, fiber.generator(y).id));
            auto& t1 = comps[1][family_id(pid, x)];
            for (auto q : base.d(p)) t1.push_back(family_id(base.generator(q).id, x));
        }
    return FilteredComplex(BaseDescriptor::closed(name, std::move(pts)), std::move(gens), comps);
}

struct Dumbbell {
    GradedComplex complex;
    FiberMap monodromy;
    std::vector<std::string> notes;
};

/// Zero-differential model with one class in degree n and `copies` classes
/// in degrees r and 1 - r; mu fixes the degree-n class and cyclically
/// permutes the others (a swap for copies = 2).
inline Dumbbell dumbbell(int n, int r, int copies) {
    if (r < n + 2) throw ValidationError("r >= n+2 required", "r = " + std::to_string(r) + ", n = " + std::to_string(n));
    if (copies < 2) throw ValidationError("copies >= 2 required", "copies = " + std::to_string(copies));
    if (n < 1) throw ValidationError("n >= 1 required", "n = " + std::to_string(n));
    auto label = [&](int i) {
        if (copies == 2) return std::string(i == 0 ? "L" : "R");
        return std::to_string(i + 1);
    };
    std::vector<Generator> gens{{"center", n}};
    for (int i = 0; i < copies; ++i) gens.push_back({"beta_" + label(i), r});
    for (int i = 0; i < copies; ++i) gens.push_back({"betabar_" + label(i), 1 - r});
    Dumbbell db;
    db.complex = GradedComplex(std::move(gens), std::vector<Z2Vec>(1 + 2 * copies));
    db.monodromy.shift = 0;
    db.monodromy.blocks.emplace(n, Z2Matrix::identity(1));
    Z2Matrix cyc(copies, copies);
    for (int i = 0; i < copies; ++i) cyc.set_column(i, {static_cast<std::uint32_t>((i + 1) % copies)});
    db.monodromy.blocks.emplace(r, cyc);
    db.monodromy.blocks.emplace(1 - r, cyc);
    db.notes.push_back("monodromy fixes the degree-" + std::to_string(n) + " class by choice of model");
    return db;
}

// ---- JSON ------------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const FiberMap& f) {
    j = nlohmann::json::object();
    j["shift"] = f.shift;
    j["degrees"] = nlohmann::json::object();
    for (auto& [d, m] : f.blocks) j["degrees"][std::to_string(d)] = m.to_dense();
}

inline FiberMap fiber_map_from_json(const nlohmann::json& j, const std::string& path = "$") {
    if (!j.is_object() || !j.contains("degrees") || !j["degrees"].is_object())
        throw ValidationError("map needs a \"degrees\" object", path + ".degrees");
    FiberMap f;
    f.shift = j.value("shift", 0);
    for (auto& [k, v] : j["degrees"].items()) {
        const std::string p = path + ".degrees." + k;
        int d = 0;
        try {
            d = std::stoi(k);
        } catch (const std::exception&) {
            throw ValidationError("degree key must be an integer", p);
        }
        if (!v.is_array()) throw ValidationError("matrix must be an array of rows", p);
        std::vector<std::vector<int>> rows;
        for (auto& row : v) {
            if (!row.is_array()) throw ValidationError("matrix row must be an array", p);
            std::vector<int> r;
            for (auto& e : row) {
                if (!e.is_number_integer() || (e.get<int>() != 0 && e.get<int>() != 1))
                    throw ValidationError("matrix entries must be 0 or 1", p);
                r.push_back(e.get<int>());
            }
            rows.push_back(std::move(r));
        }
        f.blocks.emplace(d, Z2Matrix::from_dense(rows));
    }
    return f;
}

inline nlohmann::json to_json(const InducedMap& m) {
    nlohmann::json j = nlohmann::json::object();
    for (auto& [d, mat] : m.matrices) {
        j[std::to_string(d)] = {{"matrix", mat.to_dense()},
                                {"basis", m.source_basis.at(d)},
                                {"target_basis", m.target_basis.at(d + m.shift)}};
    }
    return j;
}

inline void to_json(nlohmann::json& j, const PsiMap& p) {
    j = {{"m", p.m}, {"degree_shift", p.degree_shift}, {"degrees", to_json(p.map)}};
}

inline PsiMap psi_from_json(const nlohmann::json& j, const std::string& path = "$") {
    if (!j.is_object() || !j.contains("m") || !j.contains("degrees") || !j["degrees"].is_object())
        throw ValidationError("Psi map needs \"m\" and \"degrees\"", path);
    PsiMap p;
    p.m = j["m"].get<int>();
    p.degree_shift = j.value("degree_shift", p.m - 1);
    if (p.degree_shift != p.m - 1) throw ValidationError("degree_shift must equal m - 1", path + ".degree_shift");
    p.map.shift = p.degree_shift;
    for (auto& [k, v] : j["degrees"].items()) {
        const std::string at = path + ".degrees." + k;
        int d = 0;
        try {
            d = std::stoi(k);
        } catch (const std::exception&) {
            throw ValidationError("degree key must be an integer", at);
        }
        for (const char* key : {"matrix", "basis", "target_basis"})
            if (!v.contains(key) || !v[key].is_array()) throw ValidationError(std::string("missing \"") + key + "\"", at);
        auto mat = Z2Matrix::from_dense(v["matrix"].get<std::vector<std::vector<int>>>());
        auto src = v["basis"].get<std::vector<std::string>>();
        auto dst = v["target_basis"].get<std::vector<std::string>>();
        if ((mat.n_rows() != dst.size() && !(mat.n_rows() == 0 && mat.n_cols() == 0)) || (mat.n_rows() && mat.n_cols() != src.size()))
            throw ValidationError("matrix shape does not match the bases", at);
        if (mat.n_rows() == 0) mat = Z2Matrix(dst.size(), src.size());
        p.map.matrices.emplace(d, std::move(mat));
        p.map.source_basis[d] = std::move(src);
        p.map.target_basis[d + p.degree_shift] = std::move(dst);
    }
    return p;
}

inline void to_json(nlohmann::json& j, const Certificate& c) {
    j = {{"nontrivial", c.nontrivial},
         {"order_lower_bound", c.order_lower_bound},
         {"basis", c.basis},
         {"claim", c.claim},
         {"m", c.m},
         {"notes", c.notes}};
    j["degree"] = c.degree ? nlohmann::json(*c.degree) : nlohmann::json(nullptr);
}

}  // namespace gfh
