#pragma once

// Sparse linear algebra over Z/2.
//
// Vectors are sorted lists of the coordinates holding a 1. All elimination
// uses the smallest nonzero coordinate of a vector as its pivot, so every
// result depends only on the input and never on iteration order of hashes.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gfh/error.hpp"

namespace gfh {

using Z2Vec = std::vector<std::uint32_t>;

inline Z2Vec z2_add(const Z2Vec& a, const Z2Vec& b) {
    Z2Vec out;
    out.reserve(a.size() + b.size());
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(),
                                  std::back_inserter(out));
    return out;
}

inline void z2_add_into(Z2Vec& a, const Z2Vec& b) { a = z2_add(a, b); }

/// Normalizes an arbitrary index list into a Z/2 vector (pairs cancel).
inline Z2Vec z2_from_indices(std::vector<std::uint32_t> idx) {
    std::sort(idx.begin(), idx.end());
    Z2Vec out;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && idx[j] == idx[i]) ++j;
        if ((j - i) % 2 == 1) out.push_back(idx[i]);
        i = j;
    }
    return out;
}

inline bool z2_contains(const Z2Vec& v, std::uint32_t i) {
    return std::binary_search(v.begin(), v.end(), i);
}

/// Column-major sparse matrix over Z/2.
class Z2Matrix {
public:
    Z2Matrix() = default;
    Z2Matrix(std::size_t n_rows, std::size_t n_cols) : n_rows_(n_rows), cols_(n_cols) {}

    static Z2Matrix from_entries(std::size_t n_rows, std::size_t n_cols,
                                 const std::set<std::pair<std::size_t, std::size_t>>& entries) {
        Z2Matrix m(n_rows, n_cols);
        for (auto [r, c] : entries) {
            if (r >= n_rows || c >= n_cols)
                throw ValidationError("matrix entry out of bounds");
            m.cols_[c].push_back(static_cast<std::uint32_t>(r));
        }
        for (auto& col : m.cols_) std::sort(col.begin(), col.end());
        return m;
    }

    static Z2Matrix from_dense(const std::vector<std::vector<int>>& rows) {
        const std::size_t nr = rows.size();
        const std::size_t nc = nr == 0 ? 0 : rows.front().size();
        Z2Matrix m(nr, nc);
        for (std::size_t r = 0; r < nr; ++r) {
            if (rows[r].size() != nc) throw ValidationError("ragged matrix rows");
            for (std::size_t c = 0; c < nc; ++c)
                if (rows[r][c] & 1) m.cols_[c].push_back(static_cast<std::uint32_t>(r));
        }
        return m;
    }

    static Z2Matrix identity(std::size_t n) {
        Z2Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.cols_[i] = {static_cast<std::uint32_t>(i)};
        return m;
    }

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return cols_.size(); }

    const Z2Vec& column(std::size_t c) const { return cols_.at(c); }

    void set_column(std::size_t c, Z2Vec v) {
        if (!v.empty() && v.back() >= n_rows_) throw ValidationError("column entry out of bounds");
        cols_.at(c) = std::move(v);
    }

    bool get(std::size_t r, std::size_t c) const {
        return z2_contains(cols_.at(c), static_cast<std::uint32_t>(r));
    }

    void flip(std::size_t r, std::size_t c) {
        if (r >= n_rows_) throw ValidationError("row out of bounds");
        z2_add_into(cols_.at(c), Z2Vec{static_cast<std::uint32_t>(r)});
    }

    std::set<std::pair<std::size_t, std::size_t>> entries() const {
        std::set<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t c = 0; c < cols_.size(); ++c)
            for (auto r : cols_[c]) out.emplace(r, c);
        return out;
    }

    bool is_zero() const {
        return std::all_of(cols_.begin(), cols_.end(), [](const Z2Vec& c) { return c.empty(); });
    }

    Z2Vec apply(const Z2Vec& v) const {
        Z2Vec out;
        for (auto c : v) z2_add_into(out, cols_.at(c));
        return out;
    }

    std::vector<std::vector<int>> to_dense() const {
        std::vector<std::vector<int>> rows(n_rows_, std::vector<int>(cols_.size(), 0));
        for (std::size_t c = 0; c < cols_.size(); ++c)
            for (auto r : cols_[c]) rows[r][c] = 1;
        return rows;
    }

    friend Z2Matrix operator*(const Z2Matrix& a, const Z2Matrix& b) {
        if (a.n_cols() != b.n_rows()) throw ValidationError("matrix product shape mismatch");
        Z2Matrix out(a.n_rows(), b.n_cols());
        for (std::size_t c = 0; c < b.n_cols(); ++c) out.cols_[c] = a.apply(b.cols_[c]);
        return out;
    }

    friend Z2Matrix operator+(const Z2Matrix& a, const Z2Matrix& b) {
        if (a.n_rows() != b.n_rows() || a.n_cols() != b.n_cols())
            throw ValidationError("matrix sum shape mismatch");
        Z2Matrix out(a.n_rows(), a.n_cols());
        for (std::size_t c = 0; c < a.n_cols(); ++c) out.cols_[c] = z2_add(a.cols_[c], b.cols_[c]);
        return out;
    }

    friend bool operator==(const Z2Matrix& a, const Z2Matrix& b) {
        return a.n_rows_ == b.n_rows_ && a.cols_ == b.cols_;
    }

private:
    std::size_t n_rows_ = 0;
    std::vector<Z2Vec> cols_;
};

struct Reduction {
    std::size_t rank = 0;
    std::vector<Z2Vec> kernel_basis;  // vectors over columns
    std::vector<Z2Vec> image_basis;   // reduced columns, vectors over rows
};

/// Column reduction with pivot = lowest row index. Kernel vectors come from
/// tracking the column operations.
inline Reduction reduce(const Z2Matrix& m) {
    Reduction out;
    std::unordered_map<std::uint32_t, std::size_t> owner;
    std::vector<Z2Vec> reduced;
    std::vector<Z2Vec> ops;
    reduced.reserve(m.n_cols());
    ops.reserve(m.n_cols());
    for (std::size_t j = 0; j < m.n_cols(); ++j) {
        Z2Vec col = m.column(j);
        Z2Vec op{static_cast<std::uint32_t>(j)};
        while (!col.empty()) {
            auto it = owner.find(col.front());
            if (it == owner.end()) break;
            z2_add_into(col, reduced[it->second]);
            z2_add_into(op, ops[it->second]);
        }
        if (col.empty()) {
            out.kernel_basis.push_back(op);
        } else {
            owner.emplace(col.front(), reduced.size());
            out.image_basis.push_back(col);
        }
        reduced.push_back(std::move(col));
        ops.push_back(std::move(op));
    }
    out.rank = out.image_basis.size();
    return out;
}

inline std::size_t rank(const Z2Matrix& m) {
    std::unordered_map<std::uint32_t, Z2Vec> pivots;
    std::size_t r = 0;
    for (std::size_t j = 0; j < m.n_cols(); ++j) {
        Z2Vec col = m.column(j);
        while (!col.empty()) {
            auto it = pivots.find(col.front());
            if (it == pivots.end()) break;
            z2_add_into(col, it->second);
        }
        if (!col.empty()) {
            pivots.emplace(col.front(), std::move(col));
            ++r;
        }
    }
    return r;
}

/// Incrementally built echelon basis of a subspace, with optional tags that
/// let callers read off coordinates of a vector in terms of inserted ones.
class Z2Echelon {
public:
    static constexpr std::uint32_t kNoTag = std::numeric_limits<std::uint32_t>::max();

    /// Returns true when `v` was independent of everything inserted so far.
    bool insert(const Z2Vec& v, std::uint32_t tag = kNoTag) {
        Z2Vec combo;
        Z2Vec r = reduce(v, &combo);
        if (r.empty()) return false;
        if (tag != kNoTag) z2_add_into(combo, Z2Vec{tag});
        owner_.emplace(r.front(), rows_.size());
        rows_.push_back(std::move(r));
        combos_.push_back(std::move(combo));
        return true;
    }

    /// Residual of `v` modulo the span; `combo` receives the tags used.
    Z2Vec reduce(Z2Vec v, Z2Vec* combo = nullptr) const {
        if (combo) combo->clear();
        std::size_t lead = 0;
        while (lead < v.size()) {
            auto it = owner_.find(v[lead]);
            if (it == owner_.end()) {
                ++lead;
                continue;
            }
            const std::uint32_t pivot = v[lead];
            z2_add_into(v, rows_[it->second]);
            if (combo) z2_add_into(*combo, combos_[it->second]);
            lead = static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), pivot) - v.begin());
        }
        return v;
    }

    bool contains(const Z2Vec& v) const { return reduce(v).empty(); }
    std::size_t rank() const { return rows_.size(); }

private:
    std::unordered_map<std::uint32_t, std::size_t> owner_;
    std::vector<Z2Vec> rows_;
    std::vector<Z2Vec> combos_;
};

}  // namespace gfh
