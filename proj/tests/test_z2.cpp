#include <random>

#include <gtest/gtest.h>

#include "gfh/z2.hpp"
#include "support/oracles.hpp"

using namespace gfh;

namespace {

Z2Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, int density = 2) {
    Z2Matrix m(rows, cols);
    for (std::size_t c = 0; c < cols; ++c) {
        Z2Vec v;
        for (std::size_t r = 0; r < rows; ++r)
            if (rng() % density == 0) v.push_back(static_cast<std::uint32_t>(r));
        m.set_column(c, v);
    }
    return m;
}

oracle::Dense columns(const Z2Matrix& m) {
    oracle::Dense out;
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        oracle::Row row(m.n_rows(), 0);
        for (auto r : m.column(c)) row[r] = 1;
        out.push_back(row);
    }
    return out;
}

}  // namespace

TEST(Z2Vec, AddIsSymmetricDifference) {
    EXPECT_EQ(z2_add({0, 2, 5}, {2, 3}), (Z2Vec{0, 3, 5}));
    EXPECT_TRUE(z2_add({1, 4}, {1, 4}).empty());
    EXPECT_EQ(z2_from_indices({3, 1, 3, 3, 2, 1}), (Z2Vec{2, 3}));
}

TEST(Z2Matrix, DenseRoundTrip) {
    std::vector<std::vector<int>> rows{{1, 0, 1}, {0, 1, 1}};
    auto m = Z2Matrix::from_dense(rows);
    EXPECT_EQ(m.n_rows(), 2u);
    EXPECT_EQ(m.n_cols(), 3u);
    EXPECT_EQ(m.to_dense(), rows);
    EXPECT_TRUE(m.get(0, 2));
    EXPECT_FALSE(m.get(1, 0));
    EXPECT_THROW(Z2Matrix::from_dense({{1, 0}, {1}}), ValidationError);
}

TEST(Z2Matrix, ProductAndSum) {
    auto swap = Z2Matrix::from_dense({{0, 1}, {1, 0}});
    EXPECT_EQ(swap * swap, Z2Matrix::identity(2));
    EXPECT_TRUE((swap + swap).is_zero());
    EXPECT_THROW(swap * Z2Matrix(3, 3), ValidationError);
    EXPECT_THROW(swap + Z2Matrix(2, 3), ValidationError);
}

TEST(Z2Matrix, FlipAndEntries) {
    Z2Matrix m(3, 2);
    m.flip(2, 1);
    m.flip(0, 1);
    EXPECT_EQ(m.entries().size(), 2u);
    m.flip(2, 1);
    EXPECT_EQ(m.column(1), (Z2Vec{0}));
    EXPECT_THROW(m.flip(3, 0), ValidationError);
}

TEST(Z2Rank, MatchesDenseOracleOnRandomMatrices) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
        const std::size_t rows = 1 + rng() % 12, cols = 1 + rng() % 12;
        auto m = random_matrix(rng, rows, cols, 2 + static_cast<int>(rng() % 3));
        EXPECT_EQ(rank(m), oracle::rank(columns(m)));
        EXPECT_EQ(reduce(m).rank, rank(m));
    }
}

TEST(Z2Reduce, KernelVectorsAreKernelAndComplete) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t) {
        auto m = random_matrix(rng, 1 + rng() % 8, 1 + rng() % 10);
        auto red = reduce(m);
        EXPECT_EQ(red.kernel_basis.size() + red.rank, m.n_cols());
        for (auto& k : red.kernel_basis) EXPECT_TRUE(m.apply(k).empty());
        // kernel vectors are independent
        Z2Echelon e;
        for (auto& k : red.kernel_basis) EXPECT_TRUE(e.insert(k));
    }
}

TEST(Z2Echelon, CoordinatesRecoverTaggedCombination) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        Z2Echelon e;
        std::vector<Z2Vec> basis;
        for (std::uint32_t tag = 0; tag < 6; ++tag) {
            Z2Vec v;
            for (std::uint32_t i = 0; i < 10; ++i)
                if (rng() % 2) v.push_back(i);
            if (e.insert(v, static_cast<std::uint32_t>(basis.size()))) basis.push_back(v);
        }
        Z2Vec pick, sum;
        for (std::uint32_t i = 0; i < basis.size(); ++i)
            if (rng() % 2) {
                pick.push_back(i);
                z2_add_into(sum, basis[i]);
            }
        Z2Vec combo;
        EXPECT_TRUE(e.reduce(sum, &combo).empty());
        EXPECT_EQ(combo, pick);
        EXPECT_EQ(e.rank(), basis.size());
    }
}

TEST(Z2Echelon, RejectsDependentVectors) {
    Z2Echelon e;
    EXPECT_TRUE(e.insert({0, 1}));
    EXPECT_TRUE(e.insert({1, 2}));
    EXPECT_FALSE(e.insert({0, 2}));
    EXPECT_TRUE(e.contains({0, 2}));
    EXPECT_FALSE(e.contains({3}));
}
