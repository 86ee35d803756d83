#pragma once

// Closed-form generating families f(x, e) on R^n x R^N, their difference
// functions, fronts, and numerically computed generating family homology.
//
// GH_k(f) = H_{N+1+k}(delta^omega, delta^eps; Z/2) where
// delta(x, e, et) = f(x, et) - f(x, e). Variables are named x1..xn, e1..eN
// and, inside delta, et1..etN; grids always use that axis order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gfh/complex.hpp"
#include "gfh/cubical.hpp"
#include "gfh/error.hpp"
#include "gfh/expr.hpp"
#include "gfh/parallel.hpp"

namespace gfh {

inline std::vector<std::string> numbered(const std::string& stem, std::size_t count) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= count; ++i) out.push_back(stem + std::to_string(i));
    return out;
}

struct GenFamSpec {
    std::string name;
    std::size_t n = 1;  // base dimension
    std::size_t N = 1;  // fiber dimension
    Expr expr;
    std::vector<double> linear_direction;
    Box computation_box;  // n + N axes: x then e
    Box support_box;

    std::vector<std::string> base_vars() const { return numbered("x", n); }
    std::vector<std::string> fiber_vars() const { return numbered("e", N); }
    std::vector<std::string> vars() const {
        auto v = base_vars();
        for (auto& e : fiber_vars()) v.push_back(e);
        return v;
    }

    Expr linear_part() const {
        Expr out(0.0);
        auto fv = fiber_vars();
        for (std::size_t i = 0; i < N; ++i) out = out + Expr(linear_direction[i]) * Expr::variable(fv[i]);
        return out;
    }
};

/// Checks dimensions, variable names, box nesting, and that f agrees with
/// A.e outside the support box on a sampled shell (9 points per axis).
inline void validate(const GenFamSpec& s) {
    if (s.n < 1 || s.N < 1) throw ValidationError("n and N must be at least 1", s.name);
    if (s.linear_direction.size() != s.N) throw ValidationError("linear_direction must have N entries", "linear_direction");
    if (std::all_of(s.linear_direction.begin(), s.linear_direction.end(), [](double a) { return a == 0.0; }))
        throw ValidationError("linear_direction must be nonzero", "linear_direction");
    if (s.computation_box.size() != s.n + s.N) throw ValidationError("computation_box must have n + N axes", "computation_box");
    if (s.support_box.size() != s.n + s.N) throw ValidationError("support_box must have n + N axes", "support_box");
    const auto names = s.vars();
    for (auto& v : variables(s.expr))
        if (std::find(names.begin(), names.end(), v) == names.end())
            throw ValidationError("expression uses a variable outside x1..xn, e1..eN", v);
    for (std::size_t k = 0; k < s.n + s.N; ++k) {
        auto& c = s.computation_box[k];
        auto& p = s.support_box[k];
        if (!(c.first < c.second) || !(p.first < p.second))
            throw ValidationError("box axis must have lo < hi", "axis " + std::to_string(k));
        if (p.first < c.first || p.second > c.second)
            throw ValidationError("support_box must lie inside computation_box", "support_box[" + std::to_string(k) + "]");
    }
    Tape f({s.expr - s.linear_part()}, names);
    Grid g(s.computation_box, std::vector<std::uint32_t>(s.n + s.N, 9));
    std::vector<double> scratch;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        auto p = g.point(idx);
        bool inside = true;
        for (std::size_t k = 0; k < p.size(); ++k)
            if (p[k] < s.support_box[k].first || p[k] > s.support_box[k].second) inside = false;
        if (inside) continue;
        double r = 0.0;
        f.eval(p.data(), &r, scratch);
        if (!(std::abs(r) < 1e-9))
            throw ValidationError("f differs from the linear function outside support_box", format_point(p));
    }
}

inline void to_json(nlohmann::json& j, const GenFamSpec& s) {
    j = {{"name", s.name},
         {"n", s.n},
         {"N", s.N},
         {"expr", to_string(s.expr)},
         {"linear_direction", s.linear_direction},
         {"computation_box", s.computation_box},
         {"support_box", s.support_box}};
}

inline Box box_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array()) throw ValidationError("box must be an array of [lo, hi] pairs", path);
    Box b;
    for (std::size_t i = 0; i < j.size(); ++i) {
        auto& a = j[i];
        if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
            throw ValidationError("box axis must be [lo, hi]", path + "[" + std::to_string(i) + "]");
        b.emplace_back(a[0].get<double>(), a[1].get<double>());
    }
    return b;
}

inline GenFamSpec spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("spec must be a JSON object", "$");
    for (const char* key : {"n", "N"})
        if (!j.contains(key) || !j[key].is_number_unsigned())
            throw ValidationError(std::string("spec needs a non-negative integer \"") + key + "\"", std::string("$.") + key);
    if (!j.contains("expr") || !j["expr"].is_string()) throw ValidationError("spec needs a string \"expr\"", "$.expr");
    if (!j.contains("linear_direction") || !j["linear_direction"].is_array())
        throw ValidationError("spec needs a \"linear_direction\" array", "$.linear_direction");
    for (const char* key : {"computation_box", "support_box"})
        if (!j.contains(key)) throw ValidationError(std::string("spec needs \"") + key + "\"", std::string("$.") + key);
    GenFamSpec s;
    s.name = j.value("name", std::string("spec"));
    s.n = j["n"].get<std::size_t>();
    s.N = j["N"].get<std::size_t>();
    try {
        s.expr = parse_expr(j["expr"].get<std::string>());
    } catch (const ValidationError& e) {
        throw ValidationError(e.what(), "$.expr " + e.where());
    }
    for (std::size_t i = 0; i < j["linear_direction"].size(); ++i) {
        if (!j["linear_direction"][i].is_number())
            throw ValidationError("linear_direction entries must be numbers", "$.linear_direction[" + std::to_string(i) + "]");
        s.linear_direction.push_back(j["linear_direction"][i].get<double>());
    }
    s.computation_box = box_from_json(j["computation_box"], "$.computation_box");
    s.support_box = box_from_json(j["support_box"], "$.support_box");
    validate(s);
    return s;
}

/// Shifts the base coordinates: the new family is f(x + t, e) on the shifted boxes.
inline GenFamSpec translate(const GenFamSpec& s, const std::vector<double>& t) {
    if (t.size() != s.n) throw ValidationError("translation must have n entries");
    GenFamSpec out = s;
    std::map<std::string, Expr> sub;
    auto xv = s.base_vars();
    for (std::size_t i = 0; i < s.n; ++i) {
        sub.emplace(xv[i], Expr::variable(xv[i]) + Expr(t[i]));
        out.computation_box[i] = {s.computation_box[i].first - t[i], s.computation_box[i].second - t[i]};
        out.support_box[i] = {s.support_box[i].first - t[i], s.support_box[i].second - t[i]};
    }
    out.expr = substitute(s.expr, sub);
    out.name = s.name + "_translated";
    return out;
}

// ---- difference function ----------------------------------------------------

struct DifferenceFunction {
    std::size_t n = 1, N = 1;
    Expr delta;
    std::vector<std::string> vars;  // x1..xn, e1..eN, et1..etN
    Box box;
};

inline DifferenceFunction difference(const GenFamSpec& s, double box_scale = 1.0) {
    if (!(box_scale > 0.0)) throw ValidationError("box scale must be positive");
    auto fv = s.fiber_vars();
    auto tv = numbered("et", s.N);
    auto used = variables(s.expr);
    for (auto& t : tv)
        if (used.count(t)) throw ValidationError("variable name collides with the difference-function copy", t);
    std::map<std::string, Expr> sub;
    for (std::size_t i = 0; i < s.N; ++i) sub.emplace(fv[i], Expr::variable(tv[i]));
    DifferenceFunction d;
    d.n = s.n;
    d.N = s.N;
    d.delta = substitute(s.expr, sub) - s.expr;
    d.vars = s.vars();
    for (auto& t : tv) d.vars.push_back(t);
    auto scaled = [&](std::pair<double, double> a) {
        const double c = 0.5 * (a.first + a.second), h = 0.5 * (a.second - a.first) * box_scale;
        return std::make_pair(c - h, c + h);
    };
    for (std::size_t k = 0; k < s.n + s.N; ++k) d.box.push_back(scaled(s.computation_box[k]));
    for (std::size_t k = 0; k < s.N; ++k) d.box.push_back(scaled(s.computation_box[s.n + k]));
    return d;
}

/// Number of negative eigenvalues of the fiber Hessian of f at (x, e).
inline int fiber_index(const GenFamSpec& s, const std::vector<double>& x, const std::vector<double>& e) {
    auto fv = s.fiber_vars();
    std::vector<Expr> outs;
    for (std::size_t i = 0; i < s.N; ++i)
        for (std::size_t j = 0; j < s.N; ++j) outs.push_back(diff(diff(s.expr, fv[i]), fv[j]));
    Tape t(outs, s.vars());
    std::vector<double> p = x, out(outs.size()), scratch;
    p.insert(p.end(), e.begin(), e.end());
    t.eval(p.data(), out.data(), scratch);
    Eigen::MatrixXd h(s.N, s.N);
    for (std::size_t i = 0; i < s.N; ++i)
        for (std::size_t j = 0; j < s.N; ++j) h(i, j) = out[i * s.N + j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    return static_cast<int>((es.eigenvalues().array() < 0.0).count());
}

// ---- front --------------------------------------------------------------------

struct FrontPoint {
    std::vector<double> x;
    std::vector<double> e;
    std::vector<double> p;  // d f / d x
    double z = 0.0;         // f
    int fiber_index = 0;
};

/// Smallest singular value of the Jacobian of d_e f accepted at a front point.
inline constexpr double kRegularMargin = 1e-4;

/// Samples the fiber critical set over a resolution^n grid of base points
/// (n <= 2). Roots of d_e f are seeded from a 4x finer fiber grid and refined
/// by Newton's method; each root is checked for the regular-value property.
inline std::vector<FrontPoint> legendrian_front(const GenFamSpec& s, std::uint32_t resolution) {
    if (s.n > 2) throw ValidationError("front export needs n <= 2");
    const auto names = s.vars();
    auto fv = s.fiber_vars();
    auto xv = s.base_vars();
    std::vector<Expr> de, outs{s.expr};
    for (auto& e : fv) de.push_back(diff(s.expr, e));
    for (auto& x : xv) outs.push_back(diff(s.expr, x));
    for (auto& g : de) outs.push_back(g);
    // Jacobian of d_e f with respect to (x, e)
    for (auto& g : de)
        for (auto& v : names) outs.push_back(diff(g, v));
    Tape tape(outs, names);
    Tape grad_e(de, names);

    Box xbox(s.computation_box.begin(), s.computation_box.begin() + s.n);
    Box ebox(s.computation_box.begin() + s.n, s.computation_box.end());
    Grid xg(xbox, std::vector<std::uint32_t>(s.n, resolution));
    Grid eg(ebox, std::vector<std::uint32_t>(s.N, 4 * resolution));

    std::vector<std::vector<FrontPoint>> per_x(xg.size());
    parallel_for(xg.size(), [&](std::size_t lo, std::size_t hi, std::size_t) {
        std::vector<double> scratch, out(outs.size()), ge(s.N * eg.size());
        for (std::size_t xi = lo; xi < hi; ++xi) {
            const auto x = xg.point(xi);
            std::vector<double> pt(names.size());
            std::copy(x.begin(), x.end(), pt.begin());
            for (std::size_t ei = 0; ei < eg.size(); ++ei) {
                auto e = eg.point(ei);
                std::copy(e.begin(), e.end(), pt.begin() + s.n);
                grad_e.eval(pt.data(), &ge[ei * s.N], scratch);
            }
            std::vector<std::vector<double>> roots;
            std::vector<std::uint32_t> ii(s.N);
            for (std::size_t ei = 0; ei < eg.size(); ++ei) {
                eg.unravel(ei, ii.data());
                bool interior = true;
                for (std::size_t k = 0; k < s.N; ++k)
                    if (ii[k] + 1 >= eg.resolution()[k]) interior = false;
                if (!interior) continue;
                bool all = true;
                for (std::size_t k = 0; k < s.N && all; ++k) {
                    double mn = 1e300, mx = -1e300;
                    for (std::size_t mask = 0; mask < (std::size_t{1} << s.N); ++mask) {
                        std::size_t off = 0;
                        for (std::size_t a = 0; a < s.N; ++a)
                            if (mask >> a & 1) off += eg.stride(a);
                        const double v = ge[(ei + off) * s.N + k];
                        mn = std::min(mn, v);
                        mx = std::max(mx, v);
                    }
                    all = mn <= 0.0 && mx >= 0.0 && mn < mx;
                }
                if (!all) continue;
                std::vector<double> e(s.N);
                for (std::size_t k = 0; k < s.N; ++k) e[k] = eg.coordinate(k, ii[k]) + 0.5 * eg.spacing(k);
                bool ok = false;
                for (int it = 0; it < 50; ++it) {
                    std::copy(e.begin(), e.end(), pt.begin() + s.n);
                    tape.eval(pt.data(), out.data(), scratch);
                    Eigen::VectorXd g(s.N);
                    Eigen::MatrixXd h(s.N, s.N);
                    for (std::size_t i = 0; i < s.N; ++i) {
                        g[i] = out[1 + s.n + i];
                        for (std::size_t j = 0; j < s.N; ++j) h(i, j) = out[1 + s.n + s.N + i * names.size() + s.n + j];
                    }
                    if (g.norm() < 1e-12) {
                        ok = true;
                        break;
                    }
                    Eigen::VectorXd step = h.completeOrthogonalDecomposition().solve(g);
                    for (std::size_t k = 0; k < s.N; ++k) e[k] -= step[k];
                }
                if (!ok) continue;
                bool dup = false;
                for (auto& r : roots) {
                    double dist = 0.0;
                    for (std::size_t k = 0; k < s.N; ++k) dist = std::max(dist, std::abs(r[k] - e[k]));
                    if (dist < 1e-8) dup = true;
                }
                bool inside = true;
                for (std::size_t k = 0; k < s.N; ++k)
                    if (e[k] < ebox[k].first || e[k] > ebox[k].second) inside = false;
                if (!dup && inside) roots.push_back(e);
            }
            std::sort(roots.begin(), roots.end());
            for (auto& e : roots) {
                std::copy(e.begin(), e.end(), pt.begin() + s.n);
                tape.eval(pt.data(), out.data(), scratch);
                Eigen::MatrixXd jac(s.N, names.size());
                for (std::size_t i = 0; i < s.N; ++i)
                    for (std::size_t j = 0; j < names.size(); ++j) jac(i, j) = out[1 + s.n + s.N + i * names.size() + j];
                Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
                if (!(svd.singularValues().minCoeff() > kRegularMargin))
                    throw ValidationError("0 is not a regular value of the fiber derivative; not a generating family",
                                          format_point(pt));
                FrontPoint fp;
                fp.x = x;
                fp.e = e;
                fp.z = out[0];
                for (std::size_t k = 0; k < s.n; ++k) fp.p.push_back(out[1 + k]);
                fp.fiber_index = fiber_index(s, x, e);
                per_x[xi].push_back(std::move(fp));
            }
        }
    }, 1);
    std::vector<FrontPoint> all;
    for (auto& v : per_x)
        for (auto& p : v) all.push_back(std::move(p));
    return all;
}

inline void write_front_csv(std::ostream& os, const GenFamSpec& s, const std::vector<FrontPoint>& pts) {
    for (auto& x : s.base_vars()) os << x << ",";
    for (std::size_t k = 1; k <= s.n; ++k) os << "p" << k << ",";
    os << "z";
    for (auto& e : s.fiber_vars()) os << "," << e;
    os << ",fiber_index\n";
    os.precision(12);
    for (auto& p : pts) {
        for (double v : p.x) os << v << ",";
        for (double v : p.p) os << v << ",";
        os << p.z;
        for (double v : p.e) os << "," << v;
        os << "," << p.fiber_index << "\n";
    }
}

// ---- GH pipeline -----------------------------------------------------------------

struct GHOptions {
    std::uint32_t resolution = 65;
    double box_scale = 1.0;
    std::optional<double> eps;
    std::optional<double> omega;
    bool validate_box = true;
    int box_k = 1;
    double zero_tol = 1e-6;  // |delta| below this is the Morse-Bott diagonal level
    CriticalOptions critical;
};

struct Chord {
    CriticalPoint point;
    int lower_fiber_index = 0;  // at e (lower strand)
    int upper_fiber_index = 0;  // at et (upper strand)
};

struct GHResult {
    GHTable table;      // GH degrees
    GHTable raw_table;  // cubical degrees
    int shift = 0;
    double eps = 0.0;
    double omega = 0.0;
    std::uint32_t resolution = 0;
    Box box;
    std::vector<Chord> chords;               // positive critical values
    std::vector<CriticalPoint> other_points; // negative values and unconverged seeds
    std::size_t zero_level_points = 0;
    std::vector<std::string> warnings;
    std::vector<std::string> flags;
};

inline GHResult gh(const GenFamSpec& s, const GHOptions& opt = {}) {
    validate(s);
    auto d = difference(s, opt.box_scale);
    GHResult r;
    r.shift = -static_cast<int>(s.N + 1);
    r.resolution = opt.resolution;
    r.box = d.box;
    const std::vector<std::uint32_t> res(d.vars.size(), opt.resolution);

    auto report = critical_values(d.delta, d.vars, d.box, res, opt.critical);
    std::size_t degenerate = 0;
    for (auto& p : report.points)
        if (p.converged && p.degenerate && std::abs(p.value) > opt.zero_tol) ++degenerate;
    for (auto& w : report.warnings)
        if (w.find("Hessian margin") == std::string::npos) r.warnings.push_back(w);
    if (degenerate) r.warnings.push_back(degenerate_warning(degenerate, opt.critical));
    std::vector<double> positive;
    for (auto& p : report.points) {
        if (p.converged && std::abs(p.value) <= opt.zero_tol) {
            ++r.zero_level_points;
            continue;
        }
        if (p.converged && p.value > 0.0) {
            Chord c{p, 0, 0};
            std::vector<double> x(p.location.begin(), p.location.begin() + s.n);
            std::vector<double> e(p.location.begin() + s.n, p.location.begin() + s.n + s.N);
            std::vector<double> et(p.location.begin() + s.n + s.N, p.location.end());
            c.lower_fiber_index = fiber_index(s, x, e);
            c.upper_fiber_index = fiber_index(s, x, et);
            r.chords.push_back(std::move(c));
            positive.push_back(p.value);
            continue;
        }
        r.other_points.push_back(p);
    }
    if (r.zero_level_points)
        r.flags.push_back("critical points at value 0 (Morse-Bott diagonal) excluded: " +
                          std::to_string(r.zero_level_points));
    if (positive.empty() && !(opt.eps && opt.omega)) {
        r.flags.push_back("no positive critical values: no Reeb chords in the box");
        return r;
    }
    const double vmin = positive.empty() ? 0.0 : *std::min_element(positive.begin(), positive.end());
    const double vmax = positive.empty() ? 0.0 : *std::max_element(positive.begin(), positive.end());
    r.eps = opt.eps ? *opt.eps : 0.5 * vmin;
    r.omega = opt.omega ? *opt.omega : vmax + 0.1 * vmax;
    if (!(r.eps > 0.0) || !(r.eps < r.omega)) throw ValidationError("need 0 < eps < omega");
    for (double v : positive)
        if (v <= r.eps || v >= r.omega) r.flags.push_back("critical value " + std::to_string(v) + " outside (eps, omega)");

    auto field = sample(d.delta, d.vars, d.box, res);
    if (opt.validate_box) {
        Derivatives D(d.delta, d.vars);
        auto chk = validate_box(D, field, r.eps, r.omega, opt.box_k);
        if (!chk.ok)
            throw ValidationError("box validation failed: |grad delta| = " + std::to_string(chk.gradient_norm) +
                                      " <= tau = " + std::to_string(chk.tau) + " on the box boundary",
                                  chk.witness);
        r.flags.push_back("heuristic box validation");
    } else {
        r.flags.push_back("box validation skipped");
    }
    r.raw_table = relative_homology(field, r.eps, r.omega);
    r.table = r.raw_table.shifted(r.shift);
    return r;
}

inline void to_json(nlohmann::json& j, const CriticalPoint& p) {
    j = {{"location", p.location},
         {"value", p.value},
         {"morse_index", p.morse_index},
         {"hessian_min_singular_value", p.hessian_min_singular_value},
         {"converged", p.converged},
         {"degenerate", p.degenerate}};
}

inline void to_json(nlohmann::json& j, const GHResult& r) {
    j = nlohmann::json::object();
    j["table"] = r.table;
    j["raw_table"] = r.raw_table;
    j["shift"] = r.shift;
    j["eps"] = r.eps;
    j["omega"] = r.omega;
    j["resolution"] = r.resolution;
    j["box"] = r.box;
    auto& cr = j["critical_report"];
    cr["chords"] = nlohmann::json::array();
    for (auto& c : r.chords) {
        nlohmann::json cj = c.point;
        cj["lower_fiber_index"] = c.lower_fiber_index;
        cj["upper_fiber_index"] = c.upper_fiber_index;
        cr["chords"].push_back(cj);
    }
    cr["other_points"] = r.other_points;
    cr["zero_level_points"] = r.zero_level_points;
    cr["warnings"] = r.warnings;
    j["flags"] = r.flags;
}

// ---- stability -----------------------------------------------------------------------

struct StabilityRun {
    std::string name;
    GHResult result;
    bool matches = true;
};

struct StabilityReport {
    GHResult base;
    std::vector<StabilityRun> runs;
    bool ok = true;
    std::vector<std::string> discrepancies;
};

/// Reruns gh at resolution 2R - 1, on the doubled box at resolution 2R - 1
/// (same spacing), and with eps' = 0.75 min, omega' = 1.5 max.
inline StabilityReport stability(const GenFamSpec& s, const GHOptions& opt = {}) {
    StabilityReport rep;
    rep.base = gh(s, opt);
    std::vector<std::pair<std::string, GHOptions>> variants;
    GHOptions fine = opt;
    fine.resolution = 2 * opt.resolution - 1;
    variants.emplace_back("doubled_resolution", fine);
    GHOptions big = opt;
    big.resolution = 2 * opt.resolution - 1;
    big.box_scale = 2.0 * opt.box_scale;
    variants.emplace_back("doubled_box", big);
    GHOptions alt = opt;
    if (!rep.base.chords.empty()) {
        double vmin = rep.base.chords.front().point.value, vmax = vmin;
        for (auto& c : rep.base.chords) {
            vmin = std::min(vmin, c.point.value);
            vmax = std::max(vmax, c.point.value);
        }
        alt.eps = 0.75 * vmin;
        alt.omega = 1.5 * vmax;
    }
    variants.emplace_back("alternate_window", alt);
    for (auto& [name, o] : variants) {
        StabilityRun run{name, gh(s, o), true};
        run.matches = run.result.table == rep.base.table;
        if (!run.matches) {
            rep.ok = false;
            rep.discrepancies.push_back(name + ": " + to_string(run.result.table) + " vs " + to_string(rep.base.table));
        }
        rep.runs.push_back(std::move(run));
    }
    return rep;
}

inline void to_json(nlohmann::json& j, const StabilityReport& r) {
    j = nlohmann::json::object();
    j["ok"] = r.ok;
    j["discrepancies"] = r.discrepancies;
    j["runs"] = nlohmann::json::array();
    for (auto& run : r.runs)
        j["runs"].push_back({{"name", run.name},
                             {"table", run.result.table},
                             {"eps", run.result.eps},
                             {"omega", run.result.omega},
                             {"resolution", run.result.resolution},
                             {"box", run.result.box},
                             {"matches", run.matches}});
}

// ---- spinning --------------------------------------------------------------------------

/// Front m-spinning: x_n := sqrt(x_n^2 + ... + x_{n+m}^2). The support must
/// lie in {x_n > 1/2} so the substitution is smooth wherever f is not linear.
inline GenFamSpec spin_spec(const GenFamSpec& s, std::size_t m) {
    validate(s);
    if (m < 1) throw ValidationError("spin needs m >= 1");
    const std::size_t last = s.n - 1;
    if (!(s.support_box[last].first > 0.5)) {
        std::vector<double> w;
        for (auto& a : s.support_box) w.push_back(a.first);
        throw ValidationError("support must lie in the half-space x" + std::to_string(s.n) + " > 1/2", format_point(w));
    }
    GenFamSpec out;
    out.name = s.name + "_spun" + std::to_string(m);
    out.n = s.n + m;
    out.N = s.N;
    out.linear_direction = s.linear_direction;
    auto xv = numbered("x", out.n);
    Expr r2(0.0);
    for (std::size_t k = last; k < out.n; ++k) r2 = r2 + pow(Expr::variable(xv[k]), 2);
    // rename fibers untouched; base x1..x_{n-1} keep their names
    out.expr = substitute(s.expr, {{xv[last], sqrt(r2)}});
    const double chi = std::max(std::abs(s.computation_box[last].first), std::abs(s.computation_box[last].second));
    const double shi = std::max(std::abs(s.support_box[last].first), std::abs(s.support_box[last].second));
    for (std::size_t k = 0; k < last; ++k) {
        out.computation_box.push_back(s.computation_box[k]);
        out.support_box.push_back(s.support_box[k]);
    }
    for (std::size_t k = last; k < out.n; ++k) {
        out.computation_box.emplace_back(-chi, chi);
        out.support_box.emplace_back(-shi, shi);
    }
    for (std::size_t k = 0; k < s.N; ++k) {
        out.computation_box.push_back(s.computation_box[s.n + k]);
        out.support_box.push_back(s.support_box[s.n + k]);
    }
    validate(out);
    return out;
}

}  // namespace gfh
