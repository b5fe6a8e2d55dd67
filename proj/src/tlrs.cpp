#include "lsrom/tlrs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "lsrom/rng.hpp"

namespace lsrom {
namespace {

struct BaseCluster {
    std::int64_t label;
    std::vector<std::size_t> rows;
};

// Base clusters in ascending size order (label breaks ties).
std::vector<BaseCluster> sorted_clusters(const DataChunk& base) {
    std::map<std::int64_t, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < base.size(); ++i) by_label[(*base.labels)[i]].push_back(i);
    std::vector<BaseCluster> out;
    for (auto& [label, rows] : by_label) out.push_back({label, std::move(rows)});
    std::stable_sort(out.begin(), out.end(),
                     [](const BaseCluster& a, const BaseCluster& b) { return a.rows.size() < b.rows.size(); });
    return out;
}

}  // namespace

std::size_t TlrsSpec::cluster_count() const {
    if (!base.labels) return 0;
    std::vector<std::int64_t> l = *base.labels;
    std::sort(l.begin(), l.end());
    return static_cast<std::size_t>(std::unique(l.begin(), l.end()) - l.begin());
}

void TlrsSpec::validate() const {
    base.validate();
    if (!base.labels) throw InvalidInput("tlrs: base dataset needs labels");
    if (cluster_count() < 2) throw InvalidInput("tlrs: base dataset needs at least two labels");
    if (!(ir >= 2.0) || !std::isfinite(ir)) throw InvalidInput("tlrs: IR must be a finite value of at least 2");
    if (chunk_count == 0) throw InvalidInput("tlrs: chunk count must be positive");
    if (chunk_size_cap && *chunk_size_cap == 0) throw InvalidInput("tlrs: chunk size cap must be positive");
}

std::uint64_t chunk_seed(const TlrsSpec& spec, std::size_t t) { return derive_seed(spec.seed, 0x7000 + t); }

std::pair<DataChunk, ChunkRecipe> generate_chunk(const TlrsSpec& spec, std::size_t t) {
    return generate_chunk_with_seed(spec, t, chunk_seed(spec, t));
}

std::pair<DataChunk, ChunkRecipe> generate_chunk_with_seed(const TlrsSpec& spec, std::size_t t,
                                                           std::uint64_t seed) {
    spec.validate();
    const auto clusters = sorted_clusters(spec.base);
    const auto k = clusters.size();
    Rng rng(seed);

    ChunkRecipe recipe;
    recipe.index = t;
    recipe.seed = seed;
    recipe.kt = uniform_int(rng, 2, k);
    const auto ir_max = static_cast<std::uint64_t>(std::floor(spec.ir));
    for (std::size_t i = 0; i + 1 < recipe.kt; ++i) recipe.ir_draws.push_back(uniform_int(rng, 2, ir_max));
    std::sort(recipe.ir_draws.begin(), recipe.ir_draws.end());

    // Cluster i >= 2 asks for IR_{i-1} times the smallest cluster, capped by
    // what the base cluster holds.
    const auto smallest = clusters[0].rows.size();
    recipe.sizes.push_back(smallest);
    recipe.source_clusters.push_back(clusters[0].label);
    for (std::size_t i = 1; i < recipe.kt; ++i) {
        const auto want = recipe.ir_draws[i - 1] * smallest;
        const auto have = clusters[i].rows.size();
        if (want > have) recipe.clamped = true;
        recipe.sizes.push_back(std::min(want, have));
        recipe.source_clusters.push_back(clusters[i].label);
    }

    std::size_t total = 0;
    for (auto s : recipe.sizes) total += s;
    if (spec.chunk_size_cap && total > *spec.chunk_size_cap) {
        const double scale = static_cast<double>(*spec.chunk_size_cap) / static_cast<double>(total);
        for (auto& s : recipe.sizes) {
            s = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(s) * scale)));
        }
        recipe.capped = true;
    }

    DataChunk chunk;
    chunk.timestamp = t;
    chunk.objects = Matrix(0, spec.base.features());
    chunk.labels.emplace();
    for (std::size_t i = 0; i < recipe.kt; ++i) {
        auto rows = clusters[i].rows;
        portable_shuffle(rows.begin(), rows.end(), rng);
        for (std::size_t r = 0; r < recipe.sizes[i]; ++r) {
            chunk.objects.append_row(spec.base.objects.row(rows[r]));
            chunk.labels->push_back(clusters[i].label);
        }
    }
    return {std::move(chunk), std::move(recipe)};
}

std::vector<std::pair<DataChunk, ChunkRecipe>> generate_stream(const TlrsSpec& spec) {
    spec.validate();
    std::vector<std::pair<DataChunk, ChunkRecipe>> out;
    out.reserve(spec.chunk_count);
    for (std::size_t t = 0; t < spec.chunk_count; ++t) out.push_back(generate_chunk(spec, t));
    return out;
}

DataChunk make_gaussian_base(const std::vector<GaussianCluster>& clusters, std::uint64_t seed) {
    if (clusters.size() < 2) throw InvalidInput("gaussian base needs at least two clusters");
    const auto f = clusters[0].mean.size();
    if (f == 0) throw InvalidInput("gaussian base needs at least one feature");
    std::size_t n = 0;
    for (const auto& c : clusters) {
        if (c.mean.size() != f || c.variance.size() != f) throw InvalidInput("gaussian base: dimension mismatch");
        if (c.count == 0) throw InvalidInput("gaussian base: cluster counts must be positive");
        for (double v : c.variance) {
            if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("gaussian base: variances must be positive");
        }
        n += c.count;
    }
    Rng rng(derive_seed(seed, 0x6A));
    DataChunk out;
    out.objects = Matrix(n, f);
    out.labels.emplace();
    out.labels->reserve(n);
    std::size_t row = 0;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        std::vector<double> sd(f);
        for (std::size_t d = 0; d < f; ++d) sd[d] = std::sqrt(clusters[c].variance[d]);
        for (std::size_t i = 0; i < clusters[c].count; ++i, ++row) {
            for (std::size_t d = 0; d < f; ++d) out.objects(row, d) = clusters[c].mean[d] + sd[d] * standard_normal(rng);
            out.labels->push_back(static_cast<std::int64_t>(c));
        }
    }
    return out;
}

DataChunk make_two_moons_base(std::size_t n, double imbalance, double noise, std::uint64_t seed) {
    if (n < 10) throw InvalidInput("two moons needs n >= 10");
    if (!(imbalance >= 1.0) || !std::isfinite(imbalance)) throw InvalidInput("two moons imbalance must be >= 1");
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw InvalidInput("two moons noise must be non-negative");
    const auto major = static_cast<std::size_t>(std::llround(static_cast<double>(n) * imbalance / (imbalance + 1.0)));
    if (major == 0 || major >= n) throw InvalidInput("two moons imbalance leaves a class empty");
    Rng rng(derive_seed(seed, 0x3A));
    DataChunk out;
    out.objects = Matrix(n, 2);
    out.labels.emplace();
    for (std::size_t i = 0; i < n; ++i) {
        const bool upper = i < major;
        const double theta = std::numbers::pi * uniform01(rng);
        double x = upper ? std::cos(theta) : 1.0 - std::cos(theta);
        double y = upper ? std::sin(theta) : 0.5 - std::sin(theta);
        if (noise > 0.0) {
            x += noise * standard_normal(rng);
            y += noise * standard_normal(rng);
        }
        out.objects(i, 0) = x;
        out.objects(i, 1) = y;
        out.labels->push_back(upper ? 0 : 1);
    }
    return out;
}

}  // namespace lsrom
