#include "lsrom/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace lsrom {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw InvalidInput("matrix data size does not match its shape");
    }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols()) throw InvalidInput("ragged rows");
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
}

void Matrix::append_row(std::span<const double> r) {
    if (rows_ == 0 && cols_ == 0) cols_ = r.size();
    if (r.size() != cols_) throw InvalidInput("row width mismatch");
    data_.insert(data_.end(), r.begin(), r.end());
    ++rows_;
}

void DataChunk::validate() const {
    if (objects.rows() < 1 || objects.cols() < 1) {
        throw InvalidInput("chunk must hold at least one object with at least one feature");
    }
    for (std::size_t i = 0; i < objects.rows(); ++i) {
        for (std::size_t j = 0; j < objects.cols(); ++j) {
            if (!std::isfinite(objects(i, j))) {
                std::ostringstream msg;
                msg << "non-finite feature value at row " << i << ", column " << j;
                throw InvalidInput(msg.str());
            }
        }
    }
    if (labels && labels->size() != objects.rows()) {
        throw InvalidInput("label vector length differs from object count");
    }
    if (labels) {
        for (auto l : *labels) {
            if (l < 0) throw InvalidInput("labels must be non-negative");
        }
    }
}

Partition Partition::from_assignment(const Matrix& objects, std::vector<std::size_t> assignment) {
    if (assignment.size() != objects.rows()) throw InvalidInput("assignment length mismatch");
    std::vector<std::size_t> relabel;
    std::vector<std::size_t> map;
    for (auto& a : assignment) {
        if (a >= map.size()) map.resize(a + 1, std::numeric_limits<std::size_t>::max());
        if (map[a] == std::numeric_limits<std::size_t>::max()) map[a] = relabel.size(), relabel.push_back(a);
        a = map[a];
    }
    Partition p;
    p.k = relabel.size();
    p.assignment = std::move(assignment);
    p.sizes.assign(p.k, 0);
    p.centers = Matrix(p.k, objects.cols());
    for (std::size_t i = 0; i < objects.rows(); ++i) {
        auto c = p.assignment[i];
        ++p.sizes[c];
        auto dst = p.centers.row(c);
        auto src = objects.row(i);
        for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += src[d];
    }
    for (std::size_t c = 0; c < p.k; ++c) {
        for (auto& v : p.centers.row(c)) v /= static_cast<double>(p.sizes[c]);
    }
    return p;
}

std::vector<std::size_t> TopologyModel::neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < adjacency[i].size(); ++j) {
        if (adjacency[i][j]) out.push_back(j);
    }
    return out;
}

std::size_t TopologyModel::degree(std::size_t i) const {
    return static_cast<std::size_t>(std::count(adjacency[i].begin(), adjacency[i].end(), 1));
}

std::size_t TopologyModel::edge_count() const {
    std::size_t e = 0;
    for (std::size_t i = 0; i < adjacency.size(); ++i) e += degree(i);
    return e / 2;
}

std::vector<std::pair<std::size_t, std::size_t>> TopologyModel::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < adjacency.size(); ++i) {
        for (std::size_t j = i + 1; j < adjacency.size(); ++j) {
            if (adjacency[i][j]) out.emplace_back(i, j);
        }
    }
    return out;
}

TopologyModel TopologyModel::subgraph(const std::vector<bool>& keep) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (keep[i]) idx.push_back(i);
    }
    TopologyModel out;
    out.centers = Matrix(idx.size(), centers.cols());
    out.grid_positions = Matrix(idx.size(), grid_positions.cols());
    out.adjacency.assign(idx.size(), std::vector<std::uint8_t>(idx.size(), 0));
    if (radii) out.radii = std::vector<double>();
    for (std::size_t a = 0; a < idx.size(); ++a) {
        std::copy_n(centers.row(idx[a]).begin(), centers.cols(), out.centers.row(a).begin());
        if (!grid_positions.empty()) {
            std::copy_n(grid_positions.row(idx[a]).begin(), grid_positions.cols(),
                        out.grid_positions.row(a).begin());
        }
        if (radii) out.radii->push_back((*radii)[idx[a]]);
        for (std::size_t b = 0; b < idx.size(); ++b) {
            out.adjacency[a][b] = adjacency[idx[a]][idx[b]];
        }
    }
    return out;
}

std::vector<std::vector<std::uint8_t>> adjacency_from_edges(
    std::size_t nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::vector<std::vector<std::uint8_t>> adj(nodes, std::vector<std::uint8_t>(nodes, 0));
    for (auto [i, j] : edges) {
        if (i == j) continue;
        adj[i][j] = adj[j][i] = 1;
    }
    return adj;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidInput("dimension mismatch in squared_distance");
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

DataChunk normalize_min_max(const DataChunk& chunk) {
    chunk.validate();
    DataChunk out = chunk;
    const auto n = chunk.size();
    const auto f = chunk.features();
    for (std::size_t j = 0; j < f; ++j) {
        double lo = chunk.objects(0, j);
        double hi = lo;
        for (std::size_t i = 1; i < n; ++i) {
            lo = std::min(lo, chunk.objects(i, j));
            hi = std::max(hi, chunk.objects(i, j));
        }
        const double range = hi - lo;
        for (std::size_t i = 0; i < n; ++i) {
            // constant columns collapse to 0
            out.objects(i, j) = range > 0.0 ? (chunk.objects(i, j) - lo) / range : 0.0;
        }
    }
    return out;
}

double imbalance_ratio(std::span<const std::size_t> sizes) {
    if (sizes.size() < 2) throw InvalidInput("imbalance ratio needs at least two clusters");
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    if (*lo == 0) throw InvalidInput("imbalance ratio undefined for an empty cluster");
    return static_cast<double>(*hi) / static_cast<double>(*lo);
}

double ssq(const DataChunk& chunk, const Partition& partition) {
    if (partition.assignment.size() != chunk.size()) {
        throw InvalidInput("partition does not cover the chunk");
    }
    if (partition.centers.cols() != chunk.features()) {
        throw InvalidInput("center dimension differs from chunk dimension");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < chunk.size(); ++i) {
        const auto c = partition.assignment[i];
        if (c >= partition.centers.rows()) throw InvalidInput("assignment refers to a missing center");
        total += squared_distance(chunk.objects.row(i), partition.centers.row(c));
    }
    return total;
}

std::size_t connected_components(const std::vector<std::vector<std::uint8_t>>& adjacency) {
    const auto n = adjacency.size();
    std::vector<bool> seen(n, false);
    std::size_t comps = 0;
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < n; ++s) {
        if (seen[s]) continue;
        ++comps;
        seen[s] = true;
        stack.push_back(s);
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            for (std::size_t w = 0; w < n; ++w) {
                if (adjacency[v][w] && !seen[w]) {
                    seen[w] = true;
                    stack.push_back(w);
                }
            }
        }
    }
    return comps;
}

}  // namespace lsrom
