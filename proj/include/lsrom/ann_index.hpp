#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "lsrom/core.hpp"

namespace lsrom {

struct Neighbor {
    std::uint64_t id = 0;
    double sqdist = 0.0;

    friend bool operator<(const Neighbor& a, const Neighbor& b) {
        return a.sqdist < b.sqdist || (a.sqdist == b.sqdist && a.id < b.id);
    }
    bool operator==(const Neighbor&) const = default;
};

struct AnnParams {
    std::size_t max_degree = 16;  // per node and level; level 0 allows twice this
    std::size_t ef_construction = 100;
    std::size_t ef_search = 64;
    std::uint64_t seed = 0;
};

// Hierarchical proximity graph for approximate k-nearest-neighbour search
// (squared Euclidean). Points are inserted one at a time; each draws a top
// level geometrically with factor 1/ln(max_degree). Queries are const and may
// run concurrently once insertion has finished.
class AnnIndex {
public:
    AnnIndex(std::size_t dim, AnnParams params = {});
    AnnIndex(AnnIndex&&) noexcept;
    AnnIndex& operator=(AnnIndex&&) noexcept;
    ~AnnIndex();

    // Indexes every row; row i gets id i.
    static AnnIndex build(const Matrix& points, AnnParams params = {});

    void add(std::span<const double> point, std::uint64_t id);

    // k nearest ids ordered by (distance, id). Throws when k > size().
    std::vector<Neighbor> knn(std::span<const double> query, std::size_t k) const;
    std::vector<Neighbor> knn(std::span<const double> query, std::size_t k, std::size_t ef) const;

    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return dim_; }
    const AnnParams& params() const { return params_; }
    void set_ef_search(std::size_t ef) { params_.ef_search = ef; }

    // Introspection: levels are numbered from 0 (all nodes) upward.
    std::size_t level_count() const { return static_cast<std::size_t>(max_level_ + 1); }
    std::size_t level_size(std::size_t level) const;
    int node_level(std::size_t node) const { return levels_[node]; }
    std::uint64_t node_id(std::size_t node) const { return ids_[node]; }
    std::vector<std::uint32_t> links(std::size_t node, std::size_t level) const;

private:
    struct VisitedPool;
    using Candidate = std::pair<double, std::uint32_t>;

    const double* coords(std::uint32_t node) const { return coords_.data() + std::size_t{node} * dim_; }
    double dist(const double* a, const double* b) const;
    std::uint32_t* link_block(std::uint32_t node, int level);
    const std::uint32_t* link_block(std::uint32_t node, int level) const;
    std::size_t capacity(int level) const { return level == 0 ? 2 * params_.max_degree : params_.max_degree; }

    std::uint32_t greedy_descent(const double* q, std::uint32_t entry, int from_level, int to_level) const;
    std::vector<Candidate> search_layer(const double* q, std::uint32_t entry, std::size_t ef, int level) const;
    std::vector<Candidate> select_neighbors(std::vector<Candidate> sorted, std::size_t m) const;
    void connect(std::uint32_t node, std::uint32_t other, int level);
    int draw_level();

    std::size_t dim_;
    AnnParams params_;
    double level_mult_;
    std::uint64_t rng_state_;
    std::vector<double> coords_;
    std::vector<std::uint64_t> ids_;
    std::vector<int> levels_;
    std::vector<std::uint32_t> links0_;                 // node * (cap0 + 1): count then ids
    std::vector<std::vector<std::uint32_t>> links_up_;  // per node: (level-1) * (cap + 1)
    std::uint32_t entry_ = 0;
    int max_level_ = -1;
    std::unique_ptr<VisitedPool> visited_;
};

// Exhaustive scan; ties resolve to the lower row index.
std::vector<Neighbor> exact_knn(const Matrix& points, std::span<const double> query, std::size_t k);

}  // namespace lsrom
