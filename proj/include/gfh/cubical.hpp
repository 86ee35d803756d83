#pragma once

// Scalar fields sampled on rectangular grids, their critical points, and the
// relative homology of sublevel-set pairs of the vertex-based lower-star
// cubical complex.
//
// Cells are addressed in doubled coordinates: along an axis with R samples a
// cell coordinate runs over [0, 2R - 2], even values are vertices and odd
// values are edges. Relative homology is computed on the quotient complex of
// lower stars of vertices with value in (eps, omega]. That complex is first
// collapsed by a discrete gradient built one lower star at a time, and the
// small Morse complex that remains is reduced with z2core.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gfh/complex.hpp"
#include "gfh/error.hpp"
#include "gfh/expr.hpp"
#include "gfh/parallel.hpp"

namespace gfh {

using Box = std::vector<std::pair<double, double>>;

/// Regular grid of sample points; the last axis varies fastest.
class Grid {
public:
    Grid() = default;

    Grid(Box box, std::vector<std::uint32_t> res) : box_(std::move(box)), res_(std::move(res)) {
        if (box_.size() != res_.size()) throw ValidationError("box and resolution dimensions differ");
        if (box_.empty()) throw ValidationError("grid needs at least one axis");
        stride_.assign(res_.size(), 1);
        for (std::size_t k = 0; k < res_.size(); ++k) {
            if (res_[k] < 2) throw ValidationError("resolution must be at least 2 per axis", "axis " + std::to_string(k));
            if (!(box_[k].first < box_[k].second))
                throw ValidationError("box axis must have lo < hi", "axis " + std::to_string(k));
        }
        for (std::size_t k = res_.size() - 1; k > 0; --k) stride_[k - 1] = stride_[k] * res_[k];
        size_ = stride_[0] * res_[0];
        if (size_ > std::numeric_limits<std::uint32_t>::max() / 16)
            throw ValidationError("grid too large");
    }

    std::size_t dim() const { return res_.size(); }
    std::size_t size() const { return size_; }
    const Box& box() const { return box_; }
    const std::vector<std::uint32_t>& resolution() const { return res_; }
    std::size_t stride(std::size_t k) const { return stride_[k]; }

    double spacing(std::size_t k) const { return (box_[k].second - box_[k].first) / (res_[k] - 1); }

    double coordinate(std::size_t k, std::uint32_t i) const {
        if (i + 1 == res_[k]) return box_[k].second;
        return box_[k].first + spacing(k) * i;
    }

    void unravel(std::size_t idx, std::uint32_t* out) const {
        for (std::size_t k = 0; k < res_.size(); ++k) {
            out[k] = static_cast<std::uint32_t>(idx / stride_[k]);
            idx %= stride_[k];
        }
    }

    std::vector<double> point(std::size_t idx) const {
        std::vector<std::uint32_t> ii(dim());
        unravel(idx, ii.data());
        std::vector<double> p(dim());
        for (std::size_t k = 0; k < dim(); ++k) p[k] = coordinate(k, ii[k]);
        return p;
    }

private:
    Box box_;
    std::vector<std::uint32_t> res_;
    std::vector<std::size_t> stride_;
    std::size_t size_ = 0;
};

inline std::string format_point(const std::vector<double>& p) {
    std::ostringstream os;
    os.precision(10);
    os << "(";
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << ")";
    return os.str();
}

struct ScalarField {
    Grid grid;
    std::vector<std::string> axes;
    std::vector<double> values;
};

/// Evaluates `e` at every grid vertex; `vars` fixes the axis order.
inline ScalarField sample(const Expr& e, const std::vector<std::string>& vars, const Box& box,
                          const std::vector<std::uint32_t>& resolution) {
    ScalarField f{Grid(box, resolution), vars, {}};
    if (vars.size() != box.size()) throw ValidationError("expression variables do not match the box dimension");
    Tape tape({e}, vars);
    f.values.resize(f.grid.size());
    const std::size_t d = f.grid.dim();
    parallel_for(f.grid.size(), [&](std::size_t lo, std::size_t hi, std::size_t) {
        std::vector<double> scratch, x(d);
        std::vector<std::uint32_t> ii(d);
        for (std::size_t idx = lo; idx < hi; ++idx) {
            f.grid.unravel(idx, ii.data());
            for (std::size_t k = 0; k < d; ++k) x[k] = f.grid.coordinate(k, ii[k]);
            tape.eval(x.data(), &f.values[idx], scratch);
        }
    });
    for (std::size_t idx = 0; idx < f.values.size(); ++idx)
        if (!std::isfinite(f.values[idx]))
            throw ValidationError("expression is not finite at a grid vertex", format_point(f.grid.point(idx)));
    return f;
}

inline ScalarField sample(const Expr& e, const std::vector<std::string>& vars, const Box& box, std::uint32_t resolution) {
    return sample(e, vars, box, std::vector<std::uint32_t>(box.size(), resolution));
}

/// CSV export: a '#'-prefixed JSON header line, then one row per vertex.
inline void write_field_csv(std::ostream& os, const ScalarField& f) {
    nlohmann::json h;
    h["box"] = f.grid.box();
    h["resolution"] = f.grid.resolution();
    h["axes"] = f.axes;
    os << "# " << h.dump() << "\n";
    for (std::size_t k = 0; k < f.axes.size(); ++k) os << f.axes[k] << ",";
    os << "value\n";
    os.precision(17);
    for (std::size_t idx = 0; idx < f.values.size(); ++idx) {
        for (double c : f.grid.point(idx)) os << c << ",";
        os << f.values[idx] << "\n";
    }
}

// ---- critical points ---------------------------------------------------------

struct CriticalPoint {
    std::vector<double> location;
    double value = 0.0;
    int morse_index = 0;
    double hessian_min_singular_value = 0.0;
    bool converged = true;
    bool degenerate = false;
};

struct CriticalPointReport {
    std::vector<CriticalPoint> points;  // ascending value
    std::vector<std::string> warnings;

    std::vector<double> positive_values(double zero_tol) const {
        std::vector<double> out;
        for (auto& p : points)
            if (p.converged && p.value > zero_tol) out.push_back(p.value);
        return out;
    }
};

struct CriticalOptions {
    double dedup_tol = 1e-8;
    double degeneracy_tol = 1e-3;  // smallest |Hessian eigenvalue| of a nondegenerate point
    double gradient_tol = 1e-9;
    int max_iterations = 60;
};

/// Value, gradient and Hessian of one expression compiled together.
class Derivatives {
public:
    Derivatives(const Expr& e, const std::vector<std::string>& vars) : d_(vars.size()) {
        std::vector<Expr> grad, outs{e};
        for (auto& v : vars) grad.push_back(diff(e, v));
        for (auto& g : grad) outs.push_back(g);
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = i; j < d_; ++j) outs.push_back(diff(grad[i], vars[j]));
        full_ = std::make_unique<Tape>(outs, vars);
        gradient_ = std::make_unique<Tape>(grad, vars);
    }

    std::size_t dim() const { return d_; }
    const Tape& gradient_tape() const { return *gradient_; }

    void eval(const double* x, double& value, Eigen::VectorXd& g, Eigen::MatrixXd& h,
              std::vector<double>& scratch) const {
        std::vector<double> out(full_->n_outputs());
        full_->eval(x, out.data(), scratch);
        value = out[0];
        g.resize(d_);
        h.resize(d_, d_);
        for (std::size_t i = 0; i < d_; ++i) g[i] = out[1 + i];
        std::size_t o = 1 + d_;
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = i; j < d_; ++j) h(i, j) = h(j, i) = out[o++];
    }

private:
    std::size_t d_;
    std::unique_ptr<Tape> full_;
    std::unique_ptr<Tape> gradient_;
};

inline std::string degenerate_warning(std::size_t count, const CriticalOptions& opt) {
    return std::to_string(count) + " critical point(s) with Hessian margin below " + std::to_string(opt.degeneracy_tol);
}

namespace detail {

inline CriticalPoint newton_refine(const Derivatives& D, const Grid& grid, std::vector<double> x,
                                   const CriticalOptions& opt, std::vector<double>& scratch) {
    const std::size_t d = D.dim();
    double cell = 0.0;
    for (std::size_t k = 0; k < d; ++k) cell = std::max(cell, grid.spacing(k));
    const std::vector<double> seed = x;
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    double value = 0.0;
    bool ok = false;
    for (int it = 0; it < opt.max_iterations; ++it) {
        D.eval(x.data(), value, g, h, scratch);
        if (!g.allFinite() || !h.allFinite()) break;
        if (g.norm() <= opt.gradient_tol) {
            ok = true;
            break;
        }
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(h);
        cod.setThreshold(1e-12);
        Eigen::VectorXd step = cod.solve(g);
        const double len = step.norm();
        if (!std::isfinite(len)) break;
        if (len > cell) step *= cell / len;
        double moved = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            x[k] -= step[k];
            moved = std::max(moved, std::abs(x[k] - seed[k]));
        }
        if (moved > 3.0 * cell) break;
    }
    CriticalPoint p;
    p.location = x;
    D.eval(x.data(), value, g, h, scratch);
    p.value = value;
    for (std::size_t k = 0; k < d; ++k) {
        const double slack = 1e-9 * (grid.box()[k].second - grid.box()[k].first);
        if (x[k] < grid.box()[k].first - slack || x[k] > grid.box()[k].second + slack) ok = false;
    }
    p.converged = ok && g.norm() <= opt.gradient_tol;
    if (h.allFinite()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();
        p.morse_index = static_cast<int>((ev.array() < 0.0).count());
        p.hessian_min_singular_value = ev.cwiseAbs().minCoeff();
    } else {
        p.hessian_min_singular_value = std::numeric_limits<double>::quiet_NaN();
    }
    p.degenerate = !(p.hessian_min_singular_value >= opt.degeneracy_tol);
    return p;
}

}  // namespace detail

/// Seeds Newton refinement at every grid cell on which each gradient
/// component takes both signs (or vanishes), then deduplicates.
inline CriticalPointReport critical_values(const Expr& e, const std::vector<std::string>& vars, const Box& box,
                                           const std::vector<std::uint32_t>& resolution,
                                           const CriticalOptions& opt = {}) {
    Grid grid(box, resolution);
    if (vars.size() != grid.dim()) throw ValidationError("expression variables do not match the box dimension");
    Derivatives D(e, vars);
    const std::size_t d = grid.dim();
    const std::size_t nv = grid.size();

    std::vector<double> grad(nv * d);
    parallel_for(nv, [&](std::size_t lo, std::size_t hi, std::size_t) {
        std::vector<double> scratch, x(d);
        for (std::size_t idx = lo; idx < hi; ++idx) {
            auto p = grid.point(idx);
            D.gradient_tape().eval(p.data(), &grad[idx * d], scratch);
        }
    });

    // cells are indexed by their lowest corner
    std::vector<std::size_t> corner_offsets;
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < d; ++k)
            if (mask >> k & 1) off += grid.stride(k);
        corner_offsets.push_back(off);
    }
    std::vector<std::vector<std::size_t>> seeds_per_chunk(thread_count() + 1);
    std::vector<std::uint8_t> is_seed(nv, 0);
    parallel_for(nv, [&](std::size_t lo, std::size_t hi, std::size_t) {
        std::vector<std::uint32_t> ii(d);
        for (std::size_t idx = lo; idx < hi; ++idx) {
            grid.unravel(idx, ii.data());
            bool interior = true;
            for (std::size_t k = 0; k < d; ++k)
                if (ii[k] + 1 >= grid.resolution()[k]) interior = false;
            if (!interior) continue;
            bool all = true;
            for (std::size_t k = 0; k < d && all; ++k) {
                double mn = std::numeric_limits<double>::infinity(), mx = -mn;
                for (auto off : corner_offsets) {
                    const double v = grad[(idx + off) * d + k];
                    mn = std::min(mn, v);
                    mx = std::max(mx, v);
                }
                all = mn <= 0.0 && mx >= 0.0;
            }
            if (all) is_seed[idx] = 1;
        }
    });
    std::vector<std::size_t> seeds;
    for (std::size_t idx = 0; idx < nv; ++idx)
        if (is_seed[idx]) seeds.push_back(idx);

    std::vector<CriticalPoint> raw(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t lo, std::size_t hi, std::size_t) {
        std::vector<double> scratch;
        std::vector<std::uint32_t> ii(d);
        for (std::size_t s = lo; s < hi; ++s) {
            grid.unravel(seeds[s], ii.data());
            std::vector<double> x(d);
            for (std::size_t k = 0; k < d; ++k) x[k] = grid.coordinate(k, ii[k]) + 0.5 * grid.spacing(k);
            raw[s] = detail::newton_refine(D, grid, std::move(x), opt, scratch);
        }
    }, 16);

    CriticalPointReport rep;
    std::size_t unconverged = 0, degenerate = 0;
    for (auto& p : raw) {
        if (!p.converged) {
            ++unconverged;
            continue;
        }
        bool dup = false;
        for (auto& q : rep.points) {
            double dist = 0.0;
            for (std::size_t k = 0; k < d; ++k) dist = std::max(dist, std::abs(p.location[k] - q.location[k]));
            if (dist <= opt.dedup_tol) {
                dup = true;
                break;
            }
        }
        if (!dup) rep.points.push_back(p);
    }
    for (auto& p : rep.points)
        if (p.degenerate) ++degenerate;
    // unconverged seeds are kept, one per seed cell, after the converged points
    for (auto& p : raw)
        if (!p.converged) rep.points.push_back(p);
    std::stable_sort(rep.points.begin(), rep.points.end(),
                     [](const CriticalPoint& a, const CriticalPoint& b) { return a.value < b.value; });
    if (unconverged)
        rep.warnings.push_back("newton did not converge from " + std::to_string(unconverged) + " seed cell(s)");
    if (degenerate) rep.warnings.push_back(degenerate_warning(degenerate, opt));
    return rep;
}

// ---- relative homology ----------------------------------------------------------

namespace detail {

inline constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();
inline constexpr std::uint32_t kCritical = kUnset - 1;

/// Cell indexing in doubled coordinates.
class CellGrid {
public:
    explicit CellGrid(const Grid& g) : d_(g.dim()), ext_(g.dim()), stride_(g.dim(), 1) {
        for (std::size_t k = 0; k < d_; ++k) ext_[k] = 2 * g.resolution()[k] - 1;
        for (std::size_t k = d_ - 1; k > 0; --k) stride_[k - 1] = stride_[k] * ext_[k];
        size_ = stride_[0] * ext_[0];
        if (size_ >= kCritical) throw ValidationError("cell complex too large");
        vstride_.resize(d_);
        for (std::size_t k = 0; k < d_; ++k) vstride_[k] = g.stride(k);
    }

    std::size_t dim() const { return d_; }
    std::size_t size() const { return size_; }
    std::size_t stride(std::size_t k) const { return stride_[k]; }
    std::uint32_t extent(std::size_t k) const { return ext_[k]; }

    void unravel(std::size_t id, std::uint32_t* c) const {
        for (std::size_t k = 0; k < d_; ++k) {
            c[k] = static_cast<std::uint32_t>(id / stride_[k]);
            id %= stride_[k];
        }
    }

    int cell_dim(std::size_t id) const {
        int n = 0;
        for (std::size_t k = 0; k < d_; ++k) {
            n += (id / stride_[k]) & 1;
            id %= stride_[k];
        }
        return n;
    }

    std::size_t cell_of_vertex(std::size_t v) const {
        std::size_t id = 0;
        for (std::size_t k = 0; k < d_; ++k) {
            id += 2 * (v / vstride_[k]) * stride_[k];
            v %= vstride_[k];
        }
        return id;
    }

    std::size_t vertex_stride(std::size_t k) const { return vstride_[k]; }

private:
    std::size_t d_;
    std::vector<std::uint32_t> ext_;
    std::vector<std::size_t> stride_;
    std::vector<std::size_t> vstride_;
    std::size_t size_ = 0;
};

/// Discrete gradient restricted to the lower star of one vertex.
class LowerStar {
public:
    LowerStar(const Grid& grid, const CellGrid& cells, const std::vector<std::uint32_t>& rank)
        : grid_(grid), cells_(cells), rank_(rank), d_(grid.dim()) {
        n_local_ = 1;
        for (std::size_t k = 0; k < d_; ++k) n_local_ *= 3;
        pow3_.resize(d_);
        std::size_t p = 1;
        for (std::size_t k = d_; k-- > 0;) {
            pow3_[k] = p;
            p *= 3;
        }
        offsets_.resize(n_local_ * d_);
        for (std::size_t l = 0; l < n_local_; ++l) {
            std::size_t r = l;
            for (std::size_t k = 0; k < d_; ++k) {
                offsets_[l * d_ + k] = static_cast<int>(r / pow3_[k]) - 1;
                r %= pow3_[k];
            }
        }
        in_.resize(n_local_);
        state_.resize(n_local_);
        keys_.resize(n_local_);
        global_.resize(n_local_);
        ldim_.resize(n_local_);
    }

    /// Writes pairings of the lower star of vertex v into `partner`.
    void process(std::size_t v, std::vector<std::uint32_t>& partner) {
        std::vector<std::uint32_t> vi(d_);
        grid_.unravel(v, vi.data());
        const std::uint32_t rv = rank_[v];
        const std::size_t center = (n_local_ - 1) / 2;
        for (std::size_t l = 0; l < n_local_; ++l) {
            in_[l] = false;
            state_[l] = kUnset;
            const int* o = &offsets_[l * d_];
            bool ok = true;
            std::size_t gid = 0;
            int dim = 0;
            for (std::size_t k = 0; k < d_ && ok; ++k) {
                const long c = 2L * vi[k] + o[k];
                if (c < 0 || c >= static_cast<long>(cells_.extent(k))) ok = false;
                gid += static_cast<std::size_t>(c) * cells_.stride(k);
                dim += o[k] != 0;
            }
            if (!ok) continue;
            // vertices of the cell: v + s with s_k in {0, o_k}
            auto& key = keys_[l];
            key.clear();
            const std::size_t nvert = std::size_t{1} << dim;
            for (std::size_t mask = 0; mask < nvert && ok; ++mask) {
                std::size_t u = v;
                std::size_t bit = 0;
                for (std::size_t k = 0; k < d_; ++k) {
                    if (o[k] == 0) continue;
                    if (mask >> bit & 1) {
                        u = o[k] > 0 ? u + grid_.stride(k) : u - grid_.stride(k);
                    }
                    ++bit;
                }
                const std::uint32_t r = rank_[u];
                if (r > rv) ok = false;
                key.push_back(r);
            }
            if (!ok) continue;
            std::sort(key.begin(), key.end(), std::greater<>());
            in_[l] = true;
            global_[l] = static_cast<std::uint32_t>(gid);
            ldim_[l] = dim;
        }

        auto cmp = [&](std::size_t a, std::size_t b) {
            if (keys_[a] != keys_[b]) return keys_[a] < keys_[b];
            return a < b;
        };
        std::set<std::size_t, decltype(cmp)> pq_zero(cmp), pq_one(cmp);

        auto faces = [&](std::size_t l, auto&& fn) {
            for (std::size_t k = 0; k < d_; ++k) {
                const int ok = offsets_[l * d_ + k];
                if (ok == 0) continue;
                const std::size_t f = ok > 0 ? l - pow3_[k] : l + pow3_[k];
                if (in_[f]) fn(f);
            }
        };
        auto cofaces = [&](std::size_t l, auto&& fn) {
            for (std::size_t k = 0; k < d_; ++k) {
                if (offsets_[l * d_ + k] != 0) continue;
                for (std::size_t c : {l - pow3_[k], l + pow3_[k]})
                    if (in_[c]) fn(c);
            }
        };
        auto unclassified_faces = [&](std::size_t l, std::size_t* last) {
            int n = 0;
            faces(l, [&](std::size_t f) {
                if (state_[f] == kUnset) {
                    ++n;
                    if (last) *last = f;
                }
            });
            return n;
        };
        auto pair = [&](std::size_t lo, std::size_t hi) {
            state_[lo] = static_cast<std::uint32_t>(hi);
            state_[hi] = static_cast<std::uint32_t>(lo);
        };
        auto push_ready_cofaces = [&](std::size_t l) {
            cofaces(l, [&](std::size_t c) {
                if (state_[c] == kUnset && unclassified_faces(c, nullptr) == 1) pq_one.insert(c);
            });
        };

        // edges in the lower star are the local cells of dimension 1
        std::size_t best = n_local_;
        for (std::size_t l = 0; l < n_local_; ++l)
            if (in_[l] && ldim_[l] == 1 && (best == n_local_ || cmp(l, best))) best = l;
        if (best == n_local_) {
            state_[center] = kCritical;
        } else {
            pair(center, best);
            for (std::size_t l = 0; l < n_local_; ++l)
                if (in_[l] && ldim_[l] == 1 && l != best) pq_zero.insert(l);
            push_ready_cofaces(best);
            while (!pq_one.empty() || !pq_zero.empty()) {
                while (!pq_one.empty()) {
                    const std::size_t a = *pq_one.begin();
                    pq_one.erase(pq_one.begin());
                    if (state_[a] != kUnset) continue;
                    std::size_t f = n_local_;
                    const int n = unclassified_faces(a, &f);
                    if (n == 0) {
                        pq_zero.insert(a);
                    } else if (n == 1) {
                        pair(f, a);
                        pq_zero.erase(f);
                        push_ready_cofaces(a);
                        push_ready_cofaces(f);
                    }
                }
                if (!pq_zero.empty()) {
                    const std::size_t g = *pq_zero.begin();
                    pq_zero.erase(pq_zero.begin());
                    if (state_[g] != kUnset) continue;
                    state_[g] = kCritical;
                    push_ready_cofaces(g);
                }
            }
        }
        for (std::size_t l = 0; l < n_local_; ++l) {
            if (!in_[l]) continue;
            if (state_[l] == kUnset) throw InternalError("lower star cell left unclassified");
            partner[global_[l]] = state_[l] == kCritical ? kCritical : global_[state_[l]];
        }
    }

private:
    const Grid& grid_;
    const CellGrid& cells_;
    const std::vector<std::uint32_t>& rank_;
    std::size_t d_;
    std::size_t n_local_;
    std::vector<std::size_t> pow3_;
    std::vector<int> offsets_;
    std::vector<bool> in_;
    std::vector<std::uint32_t> state_;
    std::vector<std::vector<std::uint32_t>> keys_;
    std::vector<std::uint32_t> global_;
    std::vector<int> ldim_;
};

}  // namespace detail

/// Rank order of the vertices by (value, index).
inline std::vector<std::uint32_t> vertex_ranks(const ScalarField& f) {
    std::vector<std::uint32_t> order(f.values.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (f.values[a] != f.values[b]) return f.values[a] < f.values[b];
        return a < b;
    });
    std::vector<std::uint32_t> rank(order.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
    return rank;
}

/// Morse complex of the quotient lower-star complex for the window (eps, omega].
/// Generators are the critical cells, graded by cell dimension.
inline GradedComplex morse_complex(const ScalarField& f, double eps, double omega) {
    if (!(eps < omega)) throw ValidationError("eps must be smaller than omega");
    const Grid& grid = f.grid;
    detail::CellGrid cells(grid);
    auto rank = vertex_ranks(f);

    std::vector<std::uint32_t> window;
    for (std::size_t v = 0; v < f.values.size(); ++v)
        if (f.values[v] > eps && f.values[v] <= omega) window.push_back(static_cast<std::uint32_t>(v));

    std::vector<std::uint32_t> partner(cells.size(), detail::kUnset);
    parallel_for(window.size(), [&](std::size_t lo, std::size_t hi, std::size_t) {
        detail::LowerStar ls(grid, cells, rank);
        for (std::size_t i = lo; i < hi; ++i) ls.process(window[i], partner);
    }, 256);

    // critical cells in cell-id order
    std::vector<std::uint32_t> critical;
    std::unordered_map<std::uint32_t, std::uint32_t> crit_index;
    for (std::size_t c = 0; c < cells.size(); ++c)
        if (partner[c] == detail::kCritical) {
            crit_index.emplace(static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(critical.size()));
            critical.push_back(static_cast<std::uint32_t>(c));
        }

    // flow(tau): critical cells reached from face tau along gradient paths
    constexpr std::uint32_t kUnvisited = detail::kUnset;
    constexpr std::uint32_t kInProgress = detail::kUnset - 1;
    std::unordered_map<std::uint32_t, std::uint32_t> flow_id;
    std::vector<Z2Vec> pool{Z2Vec{}};
    std::map<Z2Vec, std::uint32_t> pool_index{{Z2Vec{}, 0}};
    auto intern = [&](Z2Vec v) {
        auto it = pool_index.find(v);
        if (it != pool_index.end()) return it->second;
        const auto id = static_cast<std::uint32_t>(pool.size());
        pool.push_back(v);
        pool_index.emplace(std::move(v), id);
        return id;
    };

    const std::size_t d = cells.dim();
    auto for_each_face = [&](std::uint32_t cell, auto&& fn) {
        std::vector<std::uint32_t> c(d);
        cells.unravel(cell, c.data());
        for (std::size_t k = 0; k < d; ++k) {
            if ((c[k] & 1) == 0) continue;
            fn(static_cast<std::uint32_t>(cell - cells.stride(k)));
            fn(static_cast<std::uint32_t>(cell + cells.stride(k)));
        }
    };
    auto lookup = [&](std::uint32_t t) {
        auto it = flow_id.find(t);
        return it == flow_id.end() ? kUnvisited : it->second;
    };

    auto flow = [&](std::uint32_t start) -> std::uint32_t {
        struct Frame {
            std::uint32_t cell;
            std::vector<std::uint32_t> faces;
            std::size_t next = 0;
            Z2Vec acc;
        };
        auto resolve_leaf = [&](std::uint32_t t, bool& leaf) -> std::uint32_t {
            leaf = true;
            const std::uint32_t p = partner[t];
            if (p == detail::kUnset) return 0;  // outside the window
            if (p == detail::kCritical) return intern(Z2Vec{crit_index.at(t)});
            if (cells.cell_dim(p) < cells.cell_dim(t)) return 0;  // head of a pair
            leaf = false;
            return 0;
        };
        bool leaf = false;
        std::uint32_t r = resolve_leaf(start, leaf);
        if (leaf) return r;
        if (auto m = lookup(start); m != kUnvisited) {
            if (m == kInProgress) throw InternalError("cycle in discrete gradient");
            return m;
        }
        std::vector<Frame> stack;
        auto open = [&](std::uint32_t t) {
            Frame fr{t, {}, 0, {}};
            for_each_face(partner[t], [&](std::uint32_t f) {
                if (f != t) fr.faces.push_back(f);
            });
            flow_id[t] = kInProgress;
            stack.push_back(std::move(fr));
        };
        open(start);
        std::uint32_t result = 0;
        while (!stack.empty()) {
            Frame& fr = stack.back();
            if (fr.next == fr.faces.size()) {
                const std::uint32_t id = intern(std::move(fr.acc));
                flow_id[fr.cell] = id;
                stack.pop_back();
                if (stack.empty()) result = id;
                else z2_add_into(stack.back().acc, pool[id]);
                continue;
            }
            const std::uint32_t t = fr.faces[fr.next++];
            bool lf = false;
            const std::uint32_t v = resolve_leaf(t, lf);
            if (lf) {
                if (v) z2_add_into(fr.acc, pool[v]);
                continue;
            }
            const std::uint32_t m = lookup(t);
            if (m == kInProgress) throw InternalError("cycle in discrete gradient");
            if (m != kUnvisited) {
                z2_add_into(fr.acc, pool[m]);
                continue;
            }
            open(t);
        }
        return result;
    };

    std::vector<Generator> gens;
    std::vector<Z2Vec> diff(critical.size());
    for (std::size_t i = 0; i < critical.size(); ++i) {
        gens.push_back({"c" + std::to_string(critical[i]), cells.cell_dim(critical[i])});
        Z2Vec acc;
        for_each_face(critical[i], [&](std::uint32_t t) {
            const std::uint32_t id = flow(t);
            if (id) z2_add_into(acc, pool[id]);
        });
        diff[i] = std::move(acc);
    }
    return GradedComplex(std::move(gens), std::move(diff));
}

/// Ranks of H_*(sublevel(omega), sublevel(eps); Z/2) in raw cubical degrees.
inline GHTable relative_homology(const ScalarField& f, double eps, double omega) {
    return homology(morse_complex(f, eps, omega));
}

// ---- box adequacy -----------------------------------------------------------------

struct BoxCheck {
    bool ok = true;
    std::string witness;  // boundary vertex location when not ok
    double gradient_norm = 0.0;
    double tau = 0.0;
    std::size_t checked = 0;  // boundary vertices inside the value slab
};

/// Boundary vertices whose value lies in [eps/2, 2 omega] must have
/// |grad| > tau = k h H_loc, where h is the largest grid spacing and H_loc the
/// largest Hessian Frobenius norm sampled within k cells of the vertex.
inline BoxCheck validate_box(const Derivatives& D, const ScalarField& f, double eps, double omega, int k = 1) {
    const Grid& grid = f.grid;
    const std::size_t d = grid.dim();
    double h = 0.0;
    for (std::size_t a = 0; a < d; ++a) h = std::max(h, grid.spacing(a));
    std::unordered_map<std::size_t, double> hess_norm;
    std::vector<double> scratch;
    auto hnorm = [&](std::size_t idx) {
        auto it = hess_norm.find(idx);
        if (it != hess_norm.end()) return it->second;
        auto p = grid.point(idx);
        double val = 0.0;
        Eigen::VectorXd g;
        Eigen::MatrixXd H;
        D.eval(p.data(), val, g, H, scratch);
        const double n = H.norm();
        hess_norm.emplace(idx, n);
        return n;
    };
    BoxCheck out;
    std::vector<std::uint32_t> ii(d);
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        grid.unravel(idx, ii.data());
        bool boundary = false;
        for (std::size_t a = 0; a < d; ++a)
            if (ii[a] == 0 || ii[a] + 1 == grid.resolution()[a]) boundary = true;
        if (!boundary) continue;
        const double v = f.values[idx];
        if (v < 0.5 * eps || v > 2.0 * omega) continue;
        ++out.checked;
        auto p = grid.point(idx);
        double val = 0.0;
        Eigen::VectorXd g;
        Eigen::MatrixXd H;
        D.eval(p.data(), val, g, H, scratch);
        // local Hessian bound over the (2k+1)^d neighbourhood
        double hloc = 0.0;
        std::vector<int> off(d, -k);
        for (;;) {
            bool inside = true;
            std::size_t nb = 0;
            for (std::size_t a = 0; a < d; ++a) {
                const long c = static_cast<long>(ii[a]) + off[a];
                if (c < 0 || c >= static_cast<long>(grid.resolution()[a])) inside = false;
                nb += static_cast<std::size_t>(std::max(0L, c)) * grid.stride(a);
            }
            if (inside) hloc = std::max(hloc, hnorm(nb));
            std::size_t a = 0;
            while (a < d && ++off[a] > k) off[a++] = -k;
            if (a == d) break;
        }
        const double tau = k * h * hloc;
        const double gn = g.norm();
        if (!(gn > tau)) {
            out.ok = false;
            out.witness = format_point(p);
            out.gradient_norm = gn;
            out.tau = tau;
            return out;
        }
    }
    return out;
}

}  // namespace gfh
