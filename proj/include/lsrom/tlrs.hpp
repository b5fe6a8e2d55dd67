#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "lsrom/core.hpp"

namespace lsrom {

struct TlrsSpec {
    DataChunk base;  // must carry labels
    double ir = 10.0;
    std::size_t chunk_count = 1;
    std::optional<std::size_t> chunk_size_cap;
    std::uint64_t seed = 0;

    // Distinct labels in the base dataset.
    std::size_t cluster_count() const;
    void validate() const;
};

struct ChunkRecipe {
    std::size_t index = 0;
    std::uint64_t seed = 0;  // sub-seed the chunk was drawn with
    std::size_t kt = 0;
    std::vector<std::size_t> ir_draws;          // ascending, length kt - 1
    std::vector<std::size_t> sizes;             // realised per-cluster counts
    std::vector<std::int64_t> source_clusters;  // base labels, smallest cluster first
    bool clamped = false;                       // some request exceeded its cluster
    bool capped = false;                        // sizes scaled down to the size cap
};

// Sub-seed of chunk t.
std::uint64_t chunk_seed(const TlrsSpec& spec, std::size_t t);

std::pair<DataChunk, ChunkRecipe> generate_chunk(const TlrsSpec& spec, std::size_t t);

// Draws the chunk from an explicit sub-seed; generate_chunk(spec, t) equals
// generate_chunk_with_seed(spec, t, chunk_seed(spec, t)).
std::pair<DataChunk, ChunkRecipe> generate_chunk_with_seed(const TlrsSpec& spec, std::size_t t, std::uint64_t seed);

std::vector<std::pair<DataChunk, ChunkRecipe>> generate_stream(const TlrsSpec& spec);

struct GaussianCluster {
    std::vector<double> mean;
    std::vector<double> variance;  // diagonal covariance
    std::size_t count = 0;
};

// Labelled Gaussian mixture; label c for rows drawn from clusters[c].
DataChunk make_gaussian_base(const std::vector<GaussianCluster>& clusters, std::uint64_t seed);

// Two interleaved half circles. Label 0 is the upper arc with
// round(n * imbalance / (imbalance + 1)) points; label 1 the lower arc.
DataChunk make_two_moons_base(std::size_t n, double imbalance, double noise, std::uint64_t seed);

}  // namespace lsrom
