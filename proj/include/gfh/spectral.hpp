#pragma once

// Bigraded family complexes, filtered by base degree, and their spectral
// sequences.
//
// A generator sits at bidegree (l, j): l is the Morse index of its base
// critical point and j its fiber degree, already normalized to GH degree.
// The component d_n maps (l, j) to (l - n, j + n - 1), so the total degree
// l + j drops by one and the filtration F_p = span{l <= p} is preserved.
//
// Pages use the subspace recursion
//   Z^r_p = { x in F_p : dx in F_{p-r} },
//   E^r_p = Z^r_p / (Z^{r-1}_{p-1} + d Z^{r-1}_{p+r-1}),
// with explicit representatives so that d^r is available as a matrix.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gfh/complex.hpp"
#include "gfh/error.hpp"
#include "gfh/z2.hpp"

namespace gfh {

struct BasePoint {
    std::string id;
    int degree = 0;
};

/// Base manifold together with the critical points of its Morse function.
struct BaseDescriptor {
    enum class Kind { Sphere, Interval, IntervalSphere, Closed };

    Kind kind = Kind::Closed;
    int m = 0;
    std::string name;
    std::vector<BasePoint> points;

    /// S^m with maximum a (index m) and minimum b (index 0).
    static BaseDescriptor sphere(int m) {
        if (m < 1) throw ValidationError("sphere base needs m >= 1");
        return {Kind::Sphere, m, "S" + std::to_string(m), {{"a", m}, {"b", 0}}};
    }

    /// [-1, 1] with the double-well Morse function: minima at -1 and 1, maximum at 0.
    static BaseDescriptor interval() {
        return {Kind::Interval, 0, "I", {{"-1", 0}, {"0", 1}, {"1", 0}}};
    }

    /// [-1, 1] x S^m; point (n, c) has index ind_I(n) + ind_S(c).
    static BaseDescriptor interval_sphere(int m) {
        if (m < 1) throw ValidationError("sphere base needs m >= 1");
        BaseDescriptor b{Kind::IntervalSphere, m, "IxS" + std::to_string(m), {}};
        for (const char* n : {"-1", "0", "1"}) {
            const int in = std::string(n) == "0" ? 1 : 0;
            b.points.push_back({std::string("(") + n + ",a)", in + m});
            b.points.push_back({std::string("(") + n + ",b)", in});
        }
        return b;
    }

    static BaseDescriptor closed(std::string name, std::vector<BasePoint> points) {
        return {Kind::Closed, 0, std::move(name), std::move(points)};
    }

    std::optional<int> degree_of(const std::string& id) const {
        for (auto& p : points)
            if (p.id == id) return p.degree;
        return std::nullopt;
    }
};

inline std::string to_string(BaseDescriptor::Kind k) {
    switch (k) {
        case BaseDescriptor::Kind::Sphere: return "sphere";
        case BaseDescriptor::Kind::Interval: return "interval";
        case BaseDescriptor::Kind::IntervalSphere: return "interval_sphere";
        case BaseDescriptor::Kind::Closed: return "closed";
    }
    return "closed";
}

struct FamilyGenerator {
    std::string id;
    std::string base_point;
    std::string fiber;  // id of the fiber generator this pairs with
    int base_degree = 0;
    int fiber_degree = 0;

    int total_degree() const { return base_degree + fiber_degree; }
};

/// Component map: n -> (source id -> target ids).
using ComponentMap = std::map<int, std::map<std::string, std::vector<std::string>>>;

class FilteredComplex {
public:
    FilteredComplex() = default;

    /// Validates that every generator's base degree matches its base point and
    /// that each entry of d_n has bidegree shift exactly (-n, n-1).
    FilteredComplex(BaseDescriptor base, std::vector<FamilyGenerator> gens, const ComponentMap& comps)
        : base_(std::move(base)), gens_(std::move(gens)) {
        for (std::size_t i = 0; i < gens_.size(); ++i) {
            auto& g = gens_[i];
            if (!index_.emplace(g.id, i).second) throw ValidationError("duplicate generator id", g.id);
            auto deg = base_.degree_of(g.base_point);
            if (!deg) throw ValidationError("generator sits over an unknown base point", g.id);
            if (*deg != g.base_degree)
                throw ValidationError("base degree disagrees with base point index", g.id);
        }
        for (auto& [n, diff] : comps) {
            if (n < 0) throw ValidationError("component index must be non-negative", std::to_string(n));
            std::vector<Z2Vec> cols(gens_.size());
            for (auto& [src, targets] : diff) {
                auto s = index_.find(src);
                if (s == index_.end())
                    throw ValidationError("component source is not a generator", "d" + std::to_string(n) + ":" + src);
                std::vector<std::uint32_t> idx;
                for (auto& t : targets) {
                    auto it = index_.find(t);
                    if (it == index_.end())
                        throw ValidationError("component target is not a generator",
                                              "d" + std::to_string(n) + ":" + src + " -> " + t);
                    const auto& a = gens_[s->second];
                    const auto& b = gens_[it->second];
                    if (b.base_degree != a.base_degree - n || b.fiber_degree != a.fiber_degree + n - 1)
                        throw ValidationError("component d" + std::to_string(n) + " breaks the bidegree shift (-n, n-1)",
                                              src + " -> " + t);
                    idx.push_back(static_cast<std::uint32_t>(it->second));
                }
                cols[s->second] = z2_from_indices(std::move(idx));
            }
            Z2Matrix m(gens_.size(), gens_.size());
            for (std::size_t c = 0; c < cols.size(); ++c) m.set_column(c, std::move(cols[c]));
            if (!m.is_zero()) comps_[n] = std::move(m);
        }
    }

    const BaseDescriptor& base() const { return base_; }
    const std::vector<FamilyGenerator>& generators() const { return gens_; }
    const FamilyGenerator& generator(std::size_t i) const { return gens_.at(i); }
    std::size_t size() const { return gens_.size(); }

    std::optional<std::size_t> find(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// Generator over `base_point` paired with fiber generator `fiber`.
    std::optional<std::size_t> find(const std::string& base_point, const std::string& fiber) const {
        for (std::size_t i = 0; i < gens_.size(); ++i)
            if (gens_[i].base_point == base_point && gens_[i].fiber == fiber) return i;
        return std::nullopt;
    }

    const std::map<int, Z2Matrix>& components() const { return comps_; }

    const Z2Matrix* component(int n) const {
        auto it = comps_.find(n);
        return it == comps_.end() ? nullptr : &it->second;
    }

    Z2Vec apply_d(const Z2Vec& v) const {
        Z2Vec out;
        for (auto& [n, m] : comps_) z2_add_into(out, m.apply(v));
        return out;
    }

    /// Totalized complex graded by l + j, generator ids unchanged.
    GradedComplex total_complex() const {
        std::vector<Generator> g;
        std::vector<Z2Vec> d;
        for (std::size_t i = 0; i < gens_.size(); ++i) {
            g.push_back({gens_[i].id, gens_[i].total_degree()});
            d.push_back(apply_d(Z2Vec{static_cast<std::uint32_t>(i)}));
        }
        return GradedComplex(std::move(g), std::move(d));
    }

    ComponentMap component_map() const {
        ComponentMap out;
        for (auto& [n, m] : comps_) {
            auto& dm = out[n];
            for (std::size_t c = 0; c < m.n_cols(); ++c) {
                if (m.column(c).empty()) continue;
                auto& v = dm[gens_[c].id];
                for (auto r : m.column(c)) v.push_back(gens_[r].id);
            }
        }
        return out;
    }

    std::pair<int, int> base_degree_range() const {
        if (gens_.empty()) return {0, 0};
        int lo = gens_.front().base_degree, hi = lo;
        for (auto& g : gens_) {
            lo = std::min(lo, g.base_degree);
            hi = std::max(hi, g.base_degree);
        }
        return {lo, hi};
    }

private:
    BaseDescriptor base_;
    std::vector<FamilyGenerator> gens_;
    std::unordered_map<std::string, std::size_t> index_;
    std::map<int, Z2Matrix> comps_;
};

inline DSquaredCheck verify_d_squared(const FilteredComplex& fc) {
    return verify_d_squared(fc.total_complex());
}

inline GHTable total_homology(const FilteredComplex& fc) { return homology(fc.total_complex()); }

using Bidegree = std::pair<int, int>;  // (l, j)

struct Page {
    std::map<Bidegree, std::size_t> ranks;
    /// d^r out of E^r_{l,j}: rows index the target's basis, columns the source's.
    std::map<Bidegree, Z2Matrix> differentials;
    /// Representative labels of the chosen basis of each E^r_{l,j}.
    std::map<Bidegree, std::vector<std::string>> basis;

    std::size_t rank(int l, int j) const {
        auto it = ranks.find({l, j});
        return it == ranks.end() ? 0 : it->second;
    }
};

struct SpectralPages {
    std::map<int, Page> pages;  // r -> E^r
    Page e_infinity;
    int stabilized_at = 1;      // E^r = E^inf for all r >= stabilized_at
};

namespace detail {

class PageEngine {
public:
    explicit PageEngine(const FilteredComplex& fc) : fc_(fc) {
        for (std::size_t i = 0; i < fc.size(); ++i) {
            auto& g = fc.generator(i);
            auto& lst = by_total_[g.total_degree()];
            local_[i] = static_cast<std::uint32_t>(lst.size());
            lst.push_back(static_cast<std::uint32_t>(i));
        }
        std::tie(lmin_, lmax_) = fc.base_degree_range();
        spread_ = lmax_ - lmin_;
    }

    int spread() const { return spread_; }
    int lmin() const { return lmin_; }
    int lmax() const { return lmax_; }

    std::vector<int> totals() const {
        std::vector<int> out;
        for (auto& [nu, v] : by_total_) out.push_back(nu);
        return out;
    }

    /// Z^r_p in total degree nu, as local vectors of C_nu.
    const std::vector<Z2Vec>& cycles(int r, int p, int nu) {
        r = std::clamp(r, 0, spread_ + 1);
        auto key = std::make_tuple(r, p, nu);
        auto it = z_cache_.find(key);
        if (it != z_cache_.end()) return it->second;

        std::vector<Z2Vec> out;
        auto src = gens_of(nu);
        std::vector<std::uint32_t> cols;
        for (auto g : src)
            if (fc_.generator(g).base_degree <= p) cols.push_back(g);
        if (r == 0) {
            for (auto g : cols) out.push_back({local_.at(g)});
        } else {
            auto dst = gens_of(nu - 1);
            std::unordered_map<std::uint32_t, std::uint32_t> row_of;
            for (auto g : dst)
                if (fc_.generator(g).base_degree > p - r) row_of.emplace(g, static_cast<std::uint32_t>(row_of.size()));
            Z2Matrix m(row_of.size(), cols.size());
            for (std::size_t c = 0; c < cols.size(); ++c) {
                std::vector<std::uint32_t> rows;
                for (auto t : fc_.apply_d({cols[c]})) {
                    auto rit = row_of.find(t);
                    if (rit != row_of.end()) rows.push_back(rit->second);
                }
                std::sort(rows.begin(), rows.end());
                m.set_column(c, rows);
            }
            for (auto& k : reduce(m).kernel_basis) {
                std::vector<std::uint32_t> v;
                for (auto c : k) v.push_back(local_.at(cols[c]));
                std::sort(v.begin(), v.end());
                out.push_back(v);
            }
        }
        return z_cache_.emplace(key, std::move(out)).first->second;
    }

    /// d applied to a local vector of C_nu, returned as a local vector of C_{nu-1}.
    Z2Vec d_local(const Z2Vec& v, int nu) const {
        auto src = gens_of(nu);
        Z2Vec global;
        for (auto l : v) global.push_back(src.at(l));
        std::sort(global.begin(), global.end());
        std::vector<std::uint32_t> out;
        for (auto g : fc_.apply_d(global)) out.push_back(local_.at(g));
        std::sort(out.begin(), out.end());
        return out;
    }

    std::string label(const Z2Vec& v, int nu) const {
        auto src = gens_of(nu);
        std::string s;
        for (auto l : v) {
            if (!s.empty()) s += "+";
            s += fc_.generator(src.at(l)).id;
        }
        return s;
    }

    struct Slot {
        Z2Echelon echelon;          // W first (untagged), then tagged representatives
        std::vector<Z2Vec> reps;
    };

    /// E^r_p in total degree nu.
    const Slot& slot(int r, int p, int nu) {
        auto key = std::make_tuple(r, p, nu);
        auto it = slots_.find(key);
        if (it != slots_.end()) return it->second;
        Slot s;
        if (p >= lmin_ && p <= lmax_ && by_total_.count(nu)) {
            for (auto& w : cycles(r - 1, p - 1, nu)) s.echelon.insert(w);
            for (auto& z : cycles(r - 1, p + r - 1, nu + 1)) s.echelon.insert(d_local(z, nu + 1));
            std::uint32_t tag = 0;
            for (auto& z : cycles(r, p, nu)) {
                if (s.echelon.insert(z, tag)) {
                    s.reps.push_back(z);
                    ++tag;
                }
            }
        }
        return slots_.emplace(key, std::move(s)).first->second;
    }

private:
    const std::vector<std::uint32_t>& gens_of(int nu) const {
        static const std::vector<std::uint32_t> empty;
        auto it = by_total_.find(nu);
        return it == by_total_.end() ? empty : it->second;
    }

    const FilteredComplex& fc_;
    std::map<int, std::vector<std::uint32_t>> by_total_;
    std::unordered_map<std::size_t, std::uint32_t> local_;
    int lmin_ = 0, lmax_ = 0, spread_ = 0;
    std::map<std::tuple<int, int, int>, std::vector<Z2Vec>> z_cache_;
    std::map<std::tuple<int, int, int>, Slot> slots_;
};

}  // namespace detail

/// Pages E^1 .. E^max(r_max, stabilization) and E^inf. Rejects complexes
/// whose total differential does not square to zero.
inline SpectralPages pages(const FilteredComplex& fc, int r_max = 2) {
    auto chk = verify_d_squared(fc);
    if (!chk.ok) throw ValidationError("family differential does not square to zero", *chk.witness);

    detail::PageEngine eng(fc);
    SpectralPages out;
    out.stabilized_at = eng.spread() + 1;
    const int last = std::max({r_max, out.stabilized_at, 2});
    for (int r = 1; r <= last; ++r) {
        Page pg;
        for (int nu : eng.totals()) {
            for (int p = eng.lmin(); p <= eng.lmax(); ++p) {
                const auto& s = eng.slot(r, p, nu);
                if (s.reps.empty()) continue;
                const Bidegree bd{p, nu - p};
                pg.ranks[bd] = s.reps.size();
                auto& labels = pg.basis[bd];
                for (auto& z : s.reps) labels.push_back(eng.label(z, nu));

                const auto& tgt = eng.slot(r, p - r, nu - 1);
                Z2Matrix dr(tgt.reps.size(), s.reps.size());
                for (std::size_t c = 0; c < s.reps.size(); ++c) {
                    auto y = eng.d_local(s.reps[c], nu);
                    Z2Vec combo;
                    auto residual = tgt.echelon.reduce(y, &combo);
                    if (!residual.empty()) throw InternalError("d^r image escaped Z^r of the target");
                    dr.set_column(c, combo);
                }
                if (!dr.is_zero()) pg.differentials.emplace(bd, std::move(dr));
            }
        }
        out.pages.emplace(r, std::move(pg));
    }
    out.e_infinity = out.pages.at(out.stabilized_at);
    return out;
}

struct ConvergenceResult {
    bool ok = true;
    std::optional<int> failing_degree;
};

/// Sum over l of rank E^inf_{l, nu - l} equals rank H_nu of the total complex.
inline ConvergenceResult convergence_check(const SpectralPages& p, const GHTable& total) {
    std::map<int, std::size_t> lhs;
    for (auto& [bd, r] : p.e_infinity.ranks) lhs[bd.first + bd.second] += r;
    std::map<int, std::size_t> rhs = total.ranks;
    std::vector<int> nus;
    for (auto& [k, v] : lhs) nus.push_back(k);
    for (auto& [k, v] : rhs) nus.push_back(k);
    std::sort(nus.begin(), nus.end());
    for (int nu : nus) {
        const std::size_t a = lhs.count(nu) ? lhs[nu] : 0;
        const std::size_t b = rhs.count(nu) ? rhs[nu] : 0;
        if (a != b) return {false, nu};
    }
    return {};
}

/// True iff E^r = E^2 for every r >= 2.
inline bool collapse_check(const SpectralPages& p) {
    auto e2 = p.pages.find(2);
    if (e2 == p.pages.end()) throw ValidationError("pages were not computed through E^2");
    for (auto& [r, pg] : p.pages)
        if (r >= 2 && pg.ranks != e2->second.ranks) return false;
    return p.e_infinity.ranks == e2->second.ranks;
}

// ---- JSON -------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const BaseDescriptor& b) {
    j = {{"kind", to_string(b.kind)}, {"m", b.m}, {"name", b.name}, {"points", nlohmann::json::array()}};
    for (auto& p : b.points) j["points"].push_back({{"id", p.id}, {"degree", p.degree}});
}

inline BaseDescriptor base_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw ValidationError("base needs a string \"kind\"", path + ".kind");
    const auto kind = j["kind"].get<std::string>();
    const int m = j.value("m", 0);
    if (kind == "sphere") return BaseDescriptor::sphere(m);
    if (kind == "interval") return BaseDescriptor::interval();
    if (kind == "interval_sphere") return BaseDescriptor::interval_sphere(m);
    if (kind == "closed") {
        if (!j.contains("points") || !j["points"].is_array())
            throw ValidationError("closed base needs \"points\"", path + ".points");
        std::vector<BasePoint> pts;
        for (auto& p : j["points"]) pts.push_back({p.at("id").get<std::string>(), p.at("degree").get<int>()});
        return BaseDescriptor::closed(j.value("name", std::string("B")), std::move(pts));
    }
    throw ValidationError("unknown base kind \"" + kind + "\"", path + ".kind");
}

inline void to_json(nlohmann::json& j, const FilteredComplex& fc) {
    j = nlohmann::json::object();
    j["base"] = fc.base();
    j["generators"] = nlohmann::json::array();
    for (auto& g : fc.generators())
        j["generators"].push_back({{"id", g.id},
                                   {"base_point", g.base_point},
                                   {"fiber", g.fiber},
                                   {"base_degree", g.base_degree},
                                   {"fiber_degree", g.fiber_degree}});
    j["components"] = nlohmann::json::object();
    for (auto& [n, dm] : fc.component_map()) j["components"][std::to_string(n)] = dm;
}

inline FilteredComplex family_from_json(const nlohmann::json& j, const std::string& path = "$") {
    if (!j.is_object()) throw ValidationError("family complex must be an object", path);
    if (!j.contains("base")) throw ValidationError("family complex needs \"base\"", path + ".base");
    auto base = base_from_json(j["base"], path + ".base");
    if (!j.contains("generators") || !j["generators"].is_array())
        throw ValidationError("family complex needs a \"generators\" array", path + ".generators");
    std::vector<FamilyGenerator> gens;
    std::size_t i = 0;
    for (auto& g : j["generators"]) {
        const std::string p = path + ".generators[" + std::to_string(i++) + "]";
        for (const char* key : {"id", "base_point"})
            if (!g.contains(key) || !g[key].is_string())
                throw ValidationError(std::string("generator needs string \"") + key + "\"", p + "." + key);
        for (const char* key : {"base_degree", "fiber_degree"})
            if (!g.contains(key) || !g[key].is_number_integer())
                throw ValidationError(std::string("generator needs integer \"") + key + "\"", p + "." + key);
        FamilyGenerator fg;
        fg.id = g["id"].get<std::string>();
        fg.base_point = g["base_point"].get<std::string>();
        fg.fiber = g.contains("fiber") ? g["fiber"].get<std::string>() : fg.id;
        fg.base_degree = g["base_degree"].get<int>();
        fg.fiber_degree = g["fiber_degree"].get<int>();
        gens.push_back(std::move(fg));
    }
    ComponentMap comps;
    if (j.contains("components")) {
        if (!j["components"].is_object())
            throw ValidationError("\"components\" must be an object", path + ".components");
        for (auto& [k, v] : j["components"].items()) {
            int n = 0;
            try {
                n = std::stoi(k);
            } catch (const std::exception&) {
                throw ValidationError("component key must be an integer", path + ".components." + k);
            }
            if (!v.is_object()) throw ValidationError("component must be an object", path + ".components." + k);
            for (auto& [src, t] : v.items()) {
                if (!t.is_array())
                    throw ValidationError("component entry must be an array", path + ".components." + k + "." + src);
                comps[n][src] = t.get<std::vector<std::string>>();
            }
        }
    }
    return FilteredComplex(std::move(base), std::move(gens), comps);
}

inline nlohmann::json pages_to_json(const SpectralPages& p) {
    nlohmann::json j;
    j["pages"] = nlohmann::json::object();
    for (auto& [r, pg] : p.pages)
        for (auto& [bd, rk] : pg.ranks)
            j["pages"][std::to_string(r) + "/" + std::to_string(bd.first) + "/" + std::to_string(bd.second)] = rk;
    j["e_infinity"] = nlohmann::json::object();
    for (auto& [bd, rk] : p.e_infinity.ranks)
        j["e_infinity"][std::to_string(bd.first) + "/" + std::to_string(bd.second)] = rk;
    j["differentials"] = nlohmann::json::object();
    for (auto& [r, pg] : p.pages)
        for (auto& [bd, m] : pg.differentials)
            j["differentials"][std::to_string(r) + "/" + std::to_string(bd.first) + "/" + std::to_string(bd.second)] =
                m.to_dense();
    j["stabilized_at"] = p.stabilized_at;
    return j;
}

}  // namespace gfh
