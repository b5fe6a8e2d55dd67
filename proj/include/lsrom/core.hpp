#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsrom {

// Raised for malformed input (maps to CLI exit code 2).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& values() const { return data_; }
    std::vector<double>& values() { return data_; }
    const double* data() const { return data_.data(); }

    void append_row(std::span<const double> r);

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

using Labels = std::vector<std::int64_t>;

// One timestamped chunk of the stream: n objects x f features, optional labels.
struct DataChunk {
    std::uint64_t timestamp = 0;
    Matrix objects;
    std::optional<Labels> labels;

    std::size_t size() const { return objects.rows(); }
    std::size_t features() const { return objects.cols(); }

    // Throws InvalidInput when n, f, finiteness or label length are violated.
    void validate() const;
};

// Hard assignment of n objects to k clusters with per-cluster statistics.
struct Partition {
    std::vector<std::size_t> assignment;
    std::size_t k = 0;
    Matrix centers;
    std::vector<std::size_t> sizes;

    // Recomputes k, sizes and centers (as member means) from `assignment`,
    // relabelling clusters densely in order of first appearance.
    static Partition from_assignment(const Matrix& objects, std::vector<std::size_t> assignment);
};

// Map of neurons / micro-cluster centers with their 2-D grid layout and
// binary undirected adjacency.
struct TopologyModel {
    Matrix centers;
    Matrix grid_positions;
    std::vector<std::vector<std::uint8_t>> adjacency;
    std::optional<std::vector<double>> radii;

    std::size_t size() const { return centers.rows(); }
    std::vector<std::size_t> neighbors(std::size_t i) const;
    std::size_t degree(std::size_t i) const;
    std::size_t edge_count() const;
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;

    // Keeps only the nodes flagged in `keep`; incident edges of dropped nodes vanish.
    TopologyModel subgraph(const std::vector<bool>& keep) const;
};

std::vector<std::vector<std::uint8_t>> adjacency_from_edges(
    std::size_t nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

double squared_distance(std::span<const double> a, std::span<const double> b);

DataChunk normalize_min_max(const DataChunk& chunk);

double imbalance_ratio(std::span<const std::size_t> sizes);

double ssq(const DataChunk& chunk, const Partition& partition);

// Number of connected components of an adjacency matrix.
std::size_t connected_components(const std::vector<std::vector<std::uint8_t>>& adjacency);

}  // namespace lsrom
