#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lsrom/ann_index.hpp"
#include "lsrom/core.hpp"

namespace lsrom {

// Exact k-nearest-neighbour search (squared Euclidean) over a fixed point
// set. Results are ordered by (distance, row index), matching exact_knn.
class KdTree {
public:
    explicit KdTree(const Matrix& points, std::size_t leaf_size = 16);

    std::size_t size() const { return ids_.size(); }

    // Row indices in leaf order; consecutive rows are spatially close.
    const std::vector<std::uint32_t>& leaf_order() const { return ids_; }

    std::vector<Neighbor> knn(std::span<const double> query, std::size_t k) const;

    // Same, restricted to rows for which `allowed(row)` holds. Returns fewer
    // than k neighbours when fewer rows qualify.
    std::vector<Neighbor> knn_if(std::span<const double> query, std::size_t k,
                                 const std::function<bool(std::size_t)>& allowed) const;

private:
    struct Node {
        double split = 0.0;
        std::uint32_t dim = 0;
        std::uint32_t left = 0, right = 0;  // children; 0 marks a leaf (the root is never a child)
        std::uint32_t begin = 0, end = 0;   // slice of ids_ for leaves
    };

    std::uint32_t build(std::uint32_t begin, std::uint32_t end, std::size_t leaf_size);
    template <typename Allowed>
    void search(std::uint32_t node, const double* q, std::size_t k, std::vector<Neighbor>& best,
                const Allowed& allowed) const;

    std::size_t dim_;
    std::vector<double> coords_;  // rows permuted into tree order
    std::vector<std::uint32_t> ids_;
    std::vector<Node> nodes_;
};

}  // namespace lsrom
