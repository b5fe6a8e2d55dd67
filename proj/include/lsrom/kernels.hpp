#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lsrom/core.hpp"

// Data-parallel inner loops. Each kernel has a serial reference version and an
// OpenMP version; both produce bit-identical per-object results (ties resolve
// to the lowest center index in either).
namespace lsrom::kernels {

namespace serial {

// For every point: index of the nearest center and its squared distance.
void nearest_center(const Matrix& points, const Matrix& centers,
                    std::span<std::size_t> index, std::span<double> sqdist);

// Squared distance of each point to its assigned center.
void assigned_sqdist(const Matrix& points, const Matrix& centers,
                     std::span<const std::size_t> assignment, std::span<double> sqdist);

}  // namespace serial

namespace omp {

void nearest_center(const Matrix& points, const Matrix& centers,
                    std::span<std::size_t> index, std::span<double> sqdist);

void assigned_sqdist(const Matrix& points, const Matrix& centers,
                     std::span<const std::size_t> assignment, std::span<double> sqdist);

}  // namespace omp

// Production entry points (OpenMP when available).
inline void nearest_center(const Matrix& points, const Matrix& centers,
                           std::span<std::size_t> index, std::span<double> sqdist) {
    omp::nearest_center(points, centers, index, sqdist);
}

inline void assigned_sqdist(const Matrix& points, const Matrix& centers,
                            std::span<const std::size_t> assignment, std::span<double> sqdist) {
    omp::assigned_sqdist(points, centers, assignment, sqdist);
}

// Nearest-center assignment for repeated calls with moving centers. Keeps an
// upper bound on the distance to the assigned center and a lower bound on the
// distance to every other center, and rescans a point only when the bounds,
// widened by a small safety margin, do not prove its assignment unchanged.
// Results equal nearest_center exactly.
class BoundedAssigner {
public:
    void assign(const Matrix& points, const Matrix& centers, std::span<std::size_t> index,
                std::span<double> sqdist);
    // Forgets the bounds; the next call scans every point.
    void reset() { valid_ = false; }
    std::size_t last_rescans() const { return rescans_; }

private:
    Matrix prev_centers_;
    std::vector<double> upper_, lower_;
    bool valid_ = false;
    std::size_t rescans_ = 0;
};

// Sum in index order, so the total does not depend on the thread count.
double ordered_sum(std::span<const double> values);

int max_threads();

}  // namespace lsrom::kernels
