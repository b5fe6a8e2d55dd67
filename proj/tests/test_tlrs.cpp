#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "lsrom/serialize.hpp"
#include "lsrom/tlrs.hpp"
#include "oracles.hpp"

using namespace lsrom;

namespace {

DataChunk two_cluster_base(std::size_t small, std::size_t large) {
    return make_gaussian_base({{{0, 0}, {1, 1}, small}, {{10, 0}, {1, 1}, large}}, 3);
}

DataChunk four_cluster_base() {
    return make_gaussian_base(
        {{{0, 0}, {1, 1}, 50}, {{10, 0}, {1, 1}, 200}, {{0, 10}, {1, 1}, 400}, {{10, 10}, {1, 1}, 993}}, 11);
}

// First chunk index whose single ratio draw equals `draw`.
std::pair<DataChunk, ChunkRecipe> chunk_with_draw(const TlrsSpec& spec, std::size_t draw) {
    for (std::size_t t = 0; t < 1000; ++t) {
        auto out = generate_chunk(spec, t);
        if (out.second.ir_draws.at(0) == draw) return out;
    }
    throw std::runtime_error("no chunk with the requested draw");
}

std::vector<std::size_t> counts_by_label(const DataChunk& c) {
    std::map<std::int64_t, std::size_t> m;
    for (auto l : *c.labels) ++m[l];
    std::vector<std::size_t> out;
    for (const auto& [l, n] : m) out.push_back(n);
    return out;
}

}  // namespace

TEST(GenerateChunk, AnchoredToSmallestCluster) {
    TlrsSpec spec;
    spec.base = two_cluster_base(100, 1000);
    spec.ir = 5;
    const auto [chunk, recipe] = chunk_with_draw(spec, 3);
    EXPECT_EQ(recipe.kt, 2u);
    EXPECT_EQ(recipe.sizes, (std::vector<std::size_t>{100, 300}));
    EXPECT_FALSE(recipe.clamped);
    EXPECT_EQ(chunk.size(), 400u);
    EXPECT_EQ(counts_by_label(chunk), (std::vector<std::size_t>{100, 300}));
}

TEST(GenerateChunk, ClampedByAvailability) {
    TlrsSpec spec;
    spec.base = two_cluster_base(100, 150);
    spec.ir = 5;
    const auto [chunk, recipe] = chunk_with_draw(spec, 4);
    EXPECT_EQ(recipe.sizes, (std::vector<std::size_t>{100, 150}));
    EXPECT_TRUE(recipe.clamped);
}

TEST(GenerateChunk, TwoClusterBaseAlwaysTwo) {
    TlrsSpec spec;
    spec.base = two_cluster_base(100, 1000);
    spec.ir = 7;
    for (std::size_t t = 0; t < 40; ++t) EXPECT_EQ(generate_chunk(spec, t).second.kt, 2u);
}

TEST(GenerateChunk, RecipeInvariantsAndNoDuplicateRows) {
    TlrsSpec spec;
    spec.base = four_cluster_base();
    spec.ir = 10;
    spec.seed = 5;
    for (std::size_t t = 0; t < 60; ++t) {
        const auto [chunk, r] = generate_chunk(spec, t);
        EXPECT_GE(r.kt, 2u);
        EXPECT_LE(r.kt, 4u);
        ASSERT_EQ(r.ir_draws.size(), r.kt - 1);
        EXPECT_TRUE(std::is_sorted(r.ir_draws.begin(), r.ir_draws.end()));
        for (auto d : r.ir_draws) EXPECT_TRUE(d >= 2 && d <= 10);
        EXPECT_TRUE(std::is_sorted(r.sizes.begin(), r.sizes.end()));
        if (!r.clamped) {
            EXPECT_LE(static_cast<double>(r.sizes.back()) / static_cast<double>(r.sizes.front()), 10.0);
        }
        // The kt smallest base clusters take part, smallest first.
        EXPECT_EQ(r.source_clusters[0], 0);
        std::set<std::vector<double>> rows;
        for (std::size_t i = 0; i < chunk.size(); ++i) rows.insert(oracle::row(chunk.objects, i));
        EXPECT_EQ(rows.size(), chunk.size());
    }
}

TEST(GenerateStream, KtRoughlyUniform) {
    TlrsSpec spec;
    spec.base = four_cluster_base();
    spec.ir = 10;
    spec.chunk_count = 50;
    spec.seed = 17;
    std::map<std::size_t, int> hist;
    for (const auto& [chunk, r] : generate_stream(spec)) ++hist[r.kt];
    for (std::size_t k = 2; k <= 4; ++k) EXPECT_NEAR(hist[k], 50.0 / 3.0, 10.0) << "kt = " << k;
}

TEST(GenerateStream, DeterministicAndReplayable) {
    TlrsSpec spec;
    spec.base = four_cluster_base();
    spec.ir = 6;
    spec.chunk_count = 5;
    spec.seed = 23;
    const auto a = generate_stream(spec), b = generate_stream(spec);
    ASSERT_EQ(a.size(), 5u);
    for (std::size_t t = 0; t < a.size(); ++t) {
        EXPECT_EQ(a[t].first.objects, b[t].first.objects);
        EXPECT_EQ(a[t].first.labels, b[t].first.labels);
        const auto replay = generate_chunk_with_seed(spec, t, a[t].second.seed);
        EXPECT_EQ(replay.first.objects, a[t].first.objects);
        EXPECT_EQ(replay.first.labels, a[t].first.labels);
    }
    spec.chunk_count = 1;
    EXPECT_EQ(generate_stream(spec)[0].first.objects, generate_chunk(spec, 0).first.objects);
}

TEST(GenerateChunk, SizeCapScalesDown) {
    TlrsSpec spec;
    spec.base = two_cluster_base(100, 1000);
    spec.ir = 5;
    spec.chunk_size_cap = 40;
    const auto [chunk, r] = chunk_with_draw(spec, 3);
    EXPECT_TRUE(r.capped);
    EXPECT_EQ(r.sizes, (std::vector<std::size_t>{10, 30}));
    EXPECT_EQ(chunk.size(), 40u);
}

TEST(GenerateChunk, RejectsBadSpecs) {
    TlrsSpec spec;
    spec.base = two_cluster_base(10, 20);
    spec.ir = 1.5;
    EXPECT_THROW(generate_chunk(spec, 0), InvalidInput);
    spec.ir = 5;
    spec.base.labels.reset();
    EXPECT_THROW(generate_chunk(spec, 0), InvalidInput);
    spec.base = two_cluster_base(10, 20);
    for (auto& l : *spec.base.labels) l = 0;
    EXPECT_THROW(generate_chunk(spec, 0), InvalidInput);
}

TEST(RecipeJson, RoundTrip) {
    TlrsSpec spec;
    spec.base = four_cluster_base();
    spec.ir = 10;
    const auto r = generate_chunk(spec, 3).second;
    const auto back = recipe_from_json(to_json(r));
    EXPECT_EQ(back.index, r.index);
    EXPECT_EQ(back.seed, r.seed);
    EXPECT_EQ(back.kt, r.kt);
    EXPECT_EQ(back.ir_draws, r.ir_draws);
    EXPECT_EQ(back.sizes, r.sizes);
    EXPECT_EQ(back.source_clusters, r.source_clusters);
    EXPECT_EQ(back.clamped, r.clamped);
    EXPECT_EQ(back.capped, r.capped);
}

TEST(GaussianBase, CountsAndMeans) {
    const auto base = make_gaussian_base({{{0, 0}, {1, 1}, 1000}, {{10, 10}, {1, 1}, 5000}}, 2);
    const auto sizes = counts_by_label(base);
    EXPECT_EQ(sizes, (std::vector<std::size_t>{1000, 5000}));
    EXPECT_DOUBLE_EQ(imbalance_ratio(sizes), 5.0);
    const double want[2] = {0.0, 10.0};
    for (std::int64_t c = 0; c < 2; ++c) {
        for (std::size_t d = 0; d < 2; ++d) {
            double sum = 0.0;
            for (std::size_t i = 0; i < base.size(); ++i)
                if ((*base.labels)[i] == c) sum += base.objects(i, d);
            const double n = static_cast<double>(sizes[static_cast<std::size_t>(c)]);
            EXPECT_NEAR(sum / n, want[c], 4.0 / std::sqrt(n));
        }
    }
    EXPECT_THROW(make_gaussian_base({{{0}, {0.0}, 10}, {{1}, {1.0}, 10}}, 1), InvalidInput);
    EXPECT_THROW(make_gaussian_base({{{0}, {1.0}, 0}, {{1}, {1.0}, 10}}, 1), InvalidInput);
}

TEST(GaussianBase, FourBlobProfile) {
    const std::vector<std::size_t> sizes{5000, 20000, 40000, 99350};
    EXPECT_NEAR(imbalance_ratio(sizes), 19.87, 1e-12);
}

TEST(TwoMoons, CountsAndGeometry) {
    const auto moons = make_two_moons_base(2400, 5.0, 0.0, 9);
    const auto sizes = counts_by_label(moons);
    EXPECT_EQ(sizes, (std::vector<std::size_t>{2000, 400}));
    EXPECT_DOUBLE_EQ(imbalance_ratio(sizes), 5.0);
    for (std::size_t i = 0; i < moons.size(); ++i) {
        const double x = moons.objects(i, 0), y = moons.objects(i, 1);
        // Upper arc: unit circle about (0, 0), y >= 0. Lower arc: about (1, 0.5), y <= 0.5.
        const bool upper = std::abs(x * x + y * y - 1.0) < 1e-12 && y >= 0.0;
        const bool lower = std::abs((x - 1) * (x - 1) + (y - 0.5) * (y - 0.5) - 1.0) < 1e-12 && y <= 0.5;
        EXPECT_TRUE(upper || lower);
        const std::int64_t from_geometry = upper ? 0 : 1;
        EXPECT_EQ((*moons.labels)[i], from_geometry);
    }
    EXPECT_THROW(make_two_moons_base(5, 2.0, 0.0, 1), InvalidInput);
    EXPECT_THROW(make_two_moons_base(100, 0.5, 0.0, 1), InvalidInput);
}
