#pragma once

// Finite graded chain complexes over Z/2 and their homology.

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gfh/error.hpp"
#include "gfh/z2.hpp"

namespace gfh {

/// Ranks of a graded Z/2 vector space. Absent degrees have rank 0.
struct GHTable {
    std::map<int, std::size_t> ranks;

    std::size_t rank(int degree) const {
        auto it = ranks.find(degree);
        return it == ranks.end() ? 0 : it->second;
    }

    void add(int degree, std::size_t r) {
        if (r == 0) return;
        ranks[degree] += r;
    }

    std::size_t total() const {
        std::size_t t = 0;
        for (auto& [k, r] : ranks) t += r;
        return t;
    }

    bool empty() const { return total() == 0; }

    GHTable shifted(int by) const {
        GHTable out;
        for (auto& [k, r] : ranks) out.add(k + by, r);
        return out;
    }

    friend bool operator==(const GHTable& a, const GHTable& b) {
        auto strip = [](const GHTable& t) {
            std::map<int, std::size_t> m;
            for (auto& [k, r] : t.ranks)
                if (r) m[k] = r;
            return m;
        };
        return strip(a) == strip(b);
    }
};

inline GHTable direct_sum(const GHTable& a, const GHTable& b) {
    GHTable out = a;
    for (auto& [k, r] : b.ranks) out.add(k, r);
    return out;
}

inline std::string to_string(const GHTable& t) {
    std::string s = "{";
    bool first = true;
    for (auto& [k, r] : t.ranks) {
        if (!r) continue;
        if (!first) s += ", ";
        s += std::to_string(k) + ": " + std::to_string(r);
        first = false;
    }
    return s + "}";
}

inline void to_json(nlohmann::json& j, const GHTable& t) {
    j = nlohmann::json::object();
    for (auto& [k, r] : t.ranks)
        if (r) j[std::to_string(k)] = r;
}

inline void from_json(const nlohmann::json& j, GHTable& t) {
    t.ranks.clear();
    if (!j.is_object()) throw ValidationError("GH table must be an object", "$");
    for (auto& [k, v] : j.items()) {
        int deg = 0;
        try {
            std::size_t used = 0;
            deg = std::stoi(k, &used);
            if (used != k.size()) throw std::invalid_argument(k);
        } catch (const std::exception&) {
            throw ValidationError("GH table key is not an integer degree", "$." + k);
        }
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ValidationError("GH rank must be a non-negative integer", "$." + k);
        t.add(deg, v.get<std::size_t>());
    }
}

struct Generator {
    std::string id;
    int degree = 0;
};

/// Differential by id: source -> targets.
using Differential = std::map<std::string, std::vector<std::string>>;

/// Z/2 chain complex whose differential lowers degree by one. Construction
/// checks ids and degrees but not d∘d, so malformed complexes can be
/// inspected by verify_d_squared.
class GradedComplex {
public:
    GradedComplex() = default;

    GradedComplex(std::vector<Generator> gens,
                  const Differential& differential)
        : gens_(std::move(gens)), d_(gens_.size()) {
        for (std::size_t i = 0; i < gens_.size(); ++i) {
            if (!index_.emplace(gens_[i].id, i).second)
                throw ValidationError("duplicate generator id", gens_[i].id);
        }
        for (auto& [src, targets] : differential) {
            auto s = index_.find(src);
            if (s == index_.end())
                throw ValidationError("differential source is not a generator", src);
            std::vector<std::uint32_t> idx;
            for (auto& t : targets) {
                auto it = index_.find(t);
                if (it == index_.end())
                    throw ValidationError("differential target is not a generator", src + " -> " + t);
                if (gens_[it->second].degree != gens_[s->second].degree - 1)
                    throw ValidationError("differential target must have degree one less", src + " -> " + t);
                idx.push_back(static_cast<std::uint32_t>(it->second));
            }
            d_[s->second] = z2_from_indices(std::move(idx));
        }
    }

    /// Index-based constructor used by internal builders.
    GradedComplex(std::vector<Generator> gens, std::vector<Z2Vec> d)
        : gens_(std::move(gens)), d_(std::move(d)) {
        if (d_.size() != gens_.size()) throw InternalError("differential size mismatch");
        for (std::size_t i = 0; i < gens_.size(); ++i) {
            if (!index_.emplace(gens_[i].id, i).second)
                throw ValidationError("duplicate generator id", gens_[i].id);
            for (auto t : d_[i]) {
                if (t >= gens_.size() || gens_[t].degree != gens_[i].degree - 1)
                    throw ValidationError("differential target must have degree one less", gens_[i].id);
            }
        }
    }

    std::size_t size() const { return gens_.size(); }
    const std::vector<Generator>& generators() const { return gens_; }
    const Generator& generator(std::size_t i) const { return gens_.at(i); }
    const Z2Vec& d(std::size_t i) const { return d_.at(i); }

    std::optional<std::size_t> find(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t index_of(const std::string& id) const {
        auto i = find(id);
        if (!i) throw ValidationError("unknown generator", id);
        return *i;
    }

    Z2Vec apply_d(const Z2Vec& v) const {
        Z2Vec out;
        for (auto i : v) z2_add_into(out, d_.at(i));
        return out;
    }

    /// Generator indices of the given degree, in construction order.
    std::vector<std::uint32_t> in_degree(int k) const {
        std::vector<std::uint32_t> out;
        for (std::size_t i = 0; i < gens_.size(); ++i)
            if (gens_[i].degree == k) out.push_back(static_cast<std::uint32_t>(i));
        return out;
    }

    std::vector<int> degrees() const {
        std::vector<int> out;
        for (auto& g : gens_) out.push_back(g.degree);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    /// Matrix of d restricted to degree k -> k-1 in local (per-degree) indices.
    Z2Matrix d_matrix(int k) const {
        auto cols = in_degree(k);
        auto rows = in_degree(k - 1);
        std::unordered_map<std::uint32_t, std::uint32_t> local;
        for (std::size_t i = 0; i < rows.size(); ++i) local[rows[i]] = static_cast<std::uint32_t>(i);
        Z2Matrix m(rows.size(), cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c) {
            std::vector<std::uint32_t> idx;
            for (auto t : d_[cols[c]]) idx.push_back(local.at(t));
            std::sort(idx.begin(), idx.end());
            m.set_column(c, std::move(idx));
        }
        return m;
    }

    std::map<std::string, std::vector<std::string>> differential_map() const {
        std::map<std::string, std::vector<std::string>> out;
        for (std::size_t i = 0; i < gens_.size(); ++i) {
            if (d_[i].empty()) continue;
            auto& v = out[gens_[i].id];
            for (auto t : d_[i]) v.push_back(gens_[t].id);
        }
        return out;
    }

private:
    std::vector<Generator> gens_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<Z2Vec> d_;
};

struct DSquaredCheck {
    bool ok = true;
    std::optional<std::string> witness;
};

/// d∘d = 0 over Z/2; the witness is the first generator (in order) violating it.
inline DSquaredCheck verify_d_squared(const GradedComplex& c) {
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!c.apply_d(c.d(i)).empty()) return {false, c.generator(i).id};
    }
    return {};
}

inline void require_d_squared(const GradedComplex& c) {
    auto chk = verify_d_squared(c);
    if (!chk.ok) throw ValidationError("d∘d != 0", *chk.witness);
}

inline GHTable homology(const GradedComplex& c) {
    require_d_squared(c);
    GHTable out;
    auto degs = c.degrees();
    std::map<int, std::size_t> rk;
    for (int k : degs) rk[k] = rank(c.d_matrix(k));
    for (int k : degs) {
        std::size_t n = c.in_degree(k).size();
        std::size_t im_in = rk.count(k + 1) ? rk[k + 1] : 0;
        out.add(k, n - rk[k] - im_in);
    }
    return out;
}

/// Representative cycles for H_k, chosen deterministically, plus the
/// machinery to read the class of an arbitrary k-cycle in that basis.
class HomologyBasis {
public:
    HomologyBasis() = default;

    HomologyBasis(const GradedComplex& c, int k) : degree_(k) {
        auto cols = c.in_degree(k);
        for (auto g : cols) local_.emplace(g, static_cast<std::uint32_t>(local_.size()));
        globals_ = cols;
        // boundaries first, untagged
        auto above = c.in_degree(k + 1);
        for (auto g : above) echelon_.insert(to_local(c.d(g)));
        auto red = reduce(c.d_matrix(k));
        std::uint32_t tag = 0;
        for (auto& z : red.kernel_basis) {
            if (echelon_.insert(z, tag)) {
                reps_.push_back(z);
                ++tag;
            }
        }
        for (auto& z : reps_) {
            std::string label;
            for (auto i : z) {
                if (!label.empty()) label += "+";
                label += c.generator(globals_[i]).id;
            }
            labels_.push_back(label);
        }
    }

    int degree() const { return degree_; }
    std::size_t size() const { return reps_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }

    /// Representative as a vector of global generator indices.
    Z2Vec representative(std::size_t i) const {
        Z2Vec out;
        for (auto l : reps_.at(i)) out.push_back(globals_[l]);
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Class of a cycle (global indices) as coordinates over the representatives.
    Z2Vec coordinates(const Z2Vec& cycle) const {
        Z2Vec combo;
        Z2Vec residual = echelon_.reduce(to_local(cycle), &combo);
        if (!residual.empty()) throw ValidationError("vector is not a cycle of this degree");
        return combo;
    }

    bool is_boundary(const Z2Vec& cycle) const { return coordinates(cycle).empty(); }

private:
    Z2Vec to_local(const Z2Vec& v) const {
        std::vector<std::uint32_t> out;
        for (auto g : v) {
            auto it = local_.find(g);
            if (it == local_.end()) throw ValidationError("vector has entries outside the degree");
            out.push_back(it->second);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    int degree_ = 0;
    std::unordered_map<std::uint32_t, std::uint32_t> local_;
    std::vector<std::uint32_t> globals_;
    Z2Echelon echelon_;
    std::vector<Z2Vec> reps_;
    std::vector<std::string> labels_;
};

inline GradedComplex direct_sum(const GradedComplex& a, const GradedComplex& b,
                                const std::string& prefix_a = "L:", const std::string& prefix_b = "R:") {
    std::vector<Generator> gens;
    std::vector<Z2Vec> d;
    for (auto& g : a.generators()) gens.push_back({prefix_a + g.id, g.degree});
    for (auto& g : b.generators()) gens.push_back({prefix_b + g.id, g.degree});
    for (std::size_t i = 0; i < a.size(); ++i) d.push_back(a.d(i));
    const auto off = static_cast<std::uint32_t>(a.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        Z2Vec v;
        for (auto t : b.d(i)) v.push_back(t + off);
        d.push_back(v);
    }
    return GradedComplex(std::move(gens), std::move(d));
}

// Interchange format:
// {"generators":[{"id":"x","degree":1},...],"differential":{"x":["y"],...}}

inline void to_json(nlohmann::json& j, const GradedComplex& c) {
    j = nlohmann::json::object();
    j["generators"] = nlohmann::json::array();
    for (auto& g : c.generators()) j["generators"].push_back({{"id", g.id}, {"degree", g.degree}});
    j["differential"] = nlohmann::json::object();
    for (auto& [src, t] : c.differential_map()) j["differential"][src] = t;
}

inline GradedComplex complex_from_json(const nlohmann::json& j, const std::string& path = "$") {
    if (!j.is_object() || !j.contains("generators") || !j["generators"].is_array())
        throw ValidationError("complex needs a \"generators\" array", path + ".generators");
    std::vector<Generator> gens;
    std::size_t i = 0;
    for (auto& g : j["generators"]) {
        const std::string p = path + ".generators[" + std::to_string(i++) + "]";
        if (!g.is_object() || !g.contains("id") || !g["id"].is_string())
            throw ValidationError("generator needs a string \"id\"", p + ".id");
        if (!g.contains("degree") || !g["degree"].is_number_integer())
            throw ValidationError("generator needs an integer \"degree\"", p + ".degree");
        gens.push_back({g["id"].get<std::string>(), g["degree"].get<int>()});
    }
    std::map<std::string, std::vector<std::string>> diff;
    if (j.contains("differential")) {
        if (!j["differential"].is_object())
            throw ValidationError("\"differential\" must be an object", path + ".differential");
        for (auto& [k, v] : j["differential"].items()) {
            if (!v.is_array()) throw ValidationError("differential entry must be an array", path + ".differential." + k);
            for (auto& t : v)
                if (!t.is_string())
                    throw ValidationError("differential target must be a string", path + ".differential." + k);
            diff[k] = v.get<std::vector<std::string>>();
        }
    }
    return GradedComplex(std::move(gens), diff);
}

}  // namespace gfh
