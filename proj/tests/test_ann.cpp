#include <gtest/gtest.h>

#include <set>

#include "lsrom/ann_index.hpp"
#include "lsrom/kdtree.hpp"
#include "oracles.hpp"

using namespace lsrom;

namespace {

double recall_at(const AnnIndex& index, const Matrix& pts, const Matrix& queries, std::size_t k, std::size_t ef) {
    std::size_t hit = 0;
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        const auto want = oracle::knn(pts, oracle::row(queries, q), k);
        const std::set<std::size_t> truth(want.begin(), want.end());
        for (const auto& nb : index.knn(queries.row(q), k, ef)) hit += truth.count(nb.id);
    }
    return static_cast<double>(hit) / static_cast<double>(k * queries.rows());
}

}  // namespace

TEST(AnnIndex, RecallOnUniformPoints) {
    const auto pts = oracle::uniform_points(5000, 2, 1);
    const auto queries = oracle::uniform_points(100, 2, 2);
    const auto index = AnnIndex::build(pts);
    EXPECT_GE(recall_at(index, pts, queries, 10, 64), 0.9);
}

TEST(AnnIndex, RecallGrowsWithEf) {
    const auto pts = oracle::uniform_points(5000, 8, 3);
    const auto queries = oracle::uniform_points(100, 8, 4);
    AnnParams p;
    p.max_degree = 4;
    p.ef_construction = 16;
    const auto index = AnnIndex::build(pts, p);
    EXPECT_GE(recall_at(index, pts, queries, 10, 128), recall_at(index, pts, queries, 10, 16));
}

TEST(AnnIndex, SingletonAndTooManyRequested) {
    AnnIndex index(2);
    const std::vector<double> p{0.3, 0.4};
    index.add(p, 42);
    const auto got = index.knn(std::vector<double>{0.0, 0.0}, 1);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].id, 42u);
    EXPECT_NEAR(got[0].sqdist, 0.25, 1e-15);
    EXPECT_THROW(index.knn(p, 2), InvalidInput);
}

TEST(AnnIndex, DuplicatePointsAllReturned) {
    Matrix pts(10, 2);
    for (std::size_t i = 0; i < 10; ++i) pts(i, 0) = 0.5, pts(i, 1) = 0.5;
    const auto index = AnnIndex::build(pts);
    const auto got = index.knn(std::vector<double>{0.5, 0.5}, 10);
    std::set<std::uint64_t> ids;
    for (const auto& nb : got) {
        ids.insert(nb.id);
        EXPECT_EQ(nb.sqdist, 0.0);
    }
    EXPECT_EQ(ids.size(), 10u);
}

TEST(AnnIndex, FullSizeQueryIsExact) {
    const auto pts = oracle::uniform_points(300, 3, 5);
    const auto index = AnnIndex::build(pts);
    const std::vector<double> q{0.2, 0.7, 0.1};
    const auto got = index.knn(q, 300);
    const auto want = oracle::knn(pts, q, 300);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t a = 0; a < want.size(); ++a) EXPECT_EQ(got[a].id, want[a]);
}

TEST(AnnIndex, LevelOneSizeIsPlausible) {
    const auto pts = oracle::uniform_points(1000, 2, 6);
    const auto index = AnnIndex::build(pts);
    ASSERT_GE(index.level_count(), 2u);
    EXPECT_GE(index.level_size(1), 1000u / 32);
    EXPECT_LE(index.level_size(1), 1000u / 2);
    EXPECT_EQ(index.level_size(0), 1000u);
}

TEST(AnnIndex, LinksAreWithinCapacity) {
    const auto pts = oracle::uniform_points(2000, 2, 7);
    AnnParams p;
    p.max_degree = 6;
    const auto index = AnnIndex::build(pts, p);
    for (std::size_t node = 0; node < index.size(); ++node) {
        for (std::size_t level = 0; level <= static_cast<std::size_t>(index.node_level(node)); ++level) {
            const auto l = index.links(node, level);
            EXPECT_LE(l.size(), level == 0 ? 12u : 6u);
            for (auto o : l) EXPECT_NE(o, node);
        }
    }
}

TEST(AnnIndex, BuildIsDeterministic) {
    const auto pts = oracle::uniform_points(2000, 4, 8);
    AnnParams p;
    p.seed = 9;
    const auto a = AnnIndex::build(pts, p), b = AnnIndex::build(pts, p);
    ASSERT_EQ(a.level_count(), b.level_count());
    for (std::size_t node = 0; node < a.size(); ++node) {
        ASSERT_EQ(a.node_level(node), b.node_level(node));
        EXPECT_EQ(a.links(node, 0), b.links(node, 0));
    }
    const std::vector<double> q{0.1, 0.2, 0.3, 0.4};
    EXPECT_EQ(a.knn(q, 10), b.knn(q, 10));
}

TEST(AnnIndex, RejectsBadInput) {
    EXPECT_THROW(AnnIndex(0), InvalidInput);
    AnnIndex index(2);
    EXPECT_THROW(index.add(std::vector<double>{1.0}, 0), InvalidInput);
}

TEST(ExactKnn, TiesResolveToLowerIndex) {
    const auto pts = Matrix::from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {2, 0}});
    const auto got = exact_knn(pts, std::vector<double>{0.0, 0.0}, 3);
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0].id, 0u);
    EXPECT_EQ(got[1].id, 1u);
    EXPECT_EQ(got[2].id, 2u);
}

TEST(ExactKnn, Collinear) {
    const auto pts = Matrix::from_rows({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}});
    const auto got = exact_knn(pts, std::vector<double>{2.4}, 3);
    EXPECT_EQ(got[0].id, 2u);
    EXPECT_EQ(got[1].id, 3u);
    EXPECT_EQ(got[2].id, 1u);
    EXPECT_NEAR(got[1].sqdist, 0.36, 1e-12);
}

TEST(KdTree, MatchesExhaustiveSearch) {
    for (unsigned f : {1u, 2u, 5u}) {
        const auto pts = oracle::uniform_points(1500, f, 10 + f);
        const KdTree tree(pts, 8);
        const auto queries = oracle::uniform_points(50, f, 20 + f);
        for (std::size_t q = 0; q < queries.rows(); ++q) {
            const auto query = queries.row(q);
            EXPECT_EQ(tree.knn(query, 12), exact_knn(pts, query, 12));
        }
    }
}

TEST(KdTree, LeafOrderIsPermutation) {
    const auto pts = oracle::uniform_points(777, 3, 30);
    const KdTree tree(pts);
    std::set<std::uint32_t> ids(tree.leaf_order().begin(), tree.leaf_order().end());
    EXPECT_EQ(ids.size(), 777u);
    EXPECT_EQ(*ids.rbegin(), 776u);
}

TEST(KdTree, FilteredSearchMatchesOracle) {
    const auto pts = oracle::uniform_points(1000, 2, 31);
    const KdTree tree(pts);
    const std::vector<double> q{0.5, 0.5};
    const auto got = tree.knn_if(q, 7, [](std::size_t r) { return r % 3 == 0; });
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < 1000; i += 3) all.emplace_back(oracle::sqdist(oracle::row(pts, i), q), i);
    std::sort(all.begin(), all.end());
    ASSERT_EQ(got.size(), 7u);
    for (std::size_t a = 0; a < 7; ++a) EXPECT_EQ(got[a].id, all[a].second);

    const auto few = tree.knn_if(q, 5, [](std::size_t r) { return r < 2; });
    EXPECT_EQ(few.size(), 2u);
}

TEST(KdTree, DuplicateRows) {
    Matrix pts(40, 2);
    const KdTree tree(pts, 4);
    const auto got = tree.knn(std::vector<double>{0.0, 0.0}, 5);
    for (std::size_t a = 0; a < 5; ++a) EXPECT_EQ(got[a].id, a);
}
