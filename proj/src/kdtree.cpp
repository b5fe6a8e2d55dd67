#include "lsrom/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace lsrom {

KdTree::KdTree(const Matrix& points, std::size_t leaf_size) : dim_(points.cols()) {
    if (points.rows() >= std::numeric_limits<std::uint32_t>::max()) throw InvalidInput("kd-tree: too many points");
    if (dim_ == 0) throw InvalidInput("kd-tree: points need at least one dimension");
    ids_.resize(points.rows());
    std::iota(ids_.begin(), ids_.end(), 0u);
    coords_ = points.values();
    nodes_.reserve(2 * points.rows() / std::max<std::size_t>(leaf_size, 1) + 2);
    if (!ids_.empty()) build(0, static_cast<std::uint32_t>(ids_.size()), std::max<std::size_t>(leaf_size, 1));

    // Lay coordinates out in leaf order so leaf scans are contiguous.
    std::vector<double> ordered(coords_.size());
    for (std::size_t p = 0; p < ids_.size(); ++p) {
        std::copy_n(coords_.begin() + static_cast<std::ptrdiff_t>(ids_[p] * dim_), dim_,
                    ordered.begin() + static_cast<std::ptrdiff_t>(p * dim_));
    }
    coords_ = std::move(ordered);
}

std::uint32_t KdTree::build(std::uint32_t begin, std::uint32_t end, std::size_t leaf_size) {
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    if (end - begin <= leaf_size) {
        nodes_[index].begin = begin;
        nodes_[index].end = end;
        return index;
    }
    // Split the widest dimension at the median.
    std::uint32_t best_dim = 0;
    double best_spread = -1.0;
    for (std::size_t d = 0; d < dim_; ++d) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (auto p = begin; p < end; ++p) {
            const double v = coords_[ids_[p] * dim_ + d];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo > best_spread) {
            best_spread = hi - lo;
            best_dim = static_cast<std::uint32_t>(d);
        }
    }
    const auto mid = begin + (end - begin) / 2;
    auto key = [&](std::uint32_t id) { return coords_[id * dim_ + best_dim]; };
    std::nth_element(ids_.begin() + begin, ids_.begin() + mid, ids_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return key(a) < key(b); });
    const double split = key(ids_[mid]);
    const auto left = build(begin, mid, leaf_size);
    const auto right = build(mid, end, leaf_size);
    nodes_[index].split = split;
    nodes_[index].dim = best_dim;
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
}

template <typename Allowed>
void KdTree::search(std::uint32_t node_index, const double* q, std::size_t k, std::vector<Neighbor>& best,
                    const Allowed& allowed) const {
    const auto& node = nodes_[node_index];
    if (node.left == 0) {
        for (auto p = node.begin; p < node.end; ++p) {
            const double* x = coords_.data() + std::size_t{p} * dim_;
            double d = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) {
                const double t = x[j] - q[j];
                d += t * t;
            }
            const Neighbor cand{ids_[p], d};
            if (best.size() == k && !(cand < best.back())) continue;
            if (!allowed(ids_[p])) continue;
            best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
            if (best.size() > k) best.pop_back();
        }
        return;
    }
    const double diff = q[node.dim] - node.split;
    const auto near = diff < 0.0 ? node.left : node.right;
    const auto far = diff < 0.0 ? node.right : node.left;
    search(near, q, k, best, allowed);
    // Equal distances still need the far side for the lower-index tie-break.
    if (best.size() < k || diff * diff <= best.back().sqdist) search(far, q, k, best, allowed);
}

std::vector<Neighbor> KdTree::knn(std::span<const double> query, std::size_t k) const {
    if (query.size() != dim_) throw InvalidInput("kd-tree: query dimension mismatch");
    if (k > size()) throw InvalidInput("kd-tree: k exceeds the number of points");
    std::vector<Neighbor> best;
    if (k == 0) return best;
    best.reserve(k + 1);
    search(0, query.data(), k, best, [](std::size_t) { return true; });
    return best;
}

std::vector<Neighbor> KdTree::knn_if(std::span<const double> query, std::size_t k,
                                     const std::function<bool(std::size_t)>& allowed) const {
    if (query.size() != dim_) throw InvalidInput("kd-tree: query dimension mismatch");
    std::vector<Neighbor> best;
    if (k == 0 || size() == 0) return best;
    best.reserve(k + 1);
    search(0, query.data(), k, best, allowed);
    return best;
}

}  // namespace lsrom
