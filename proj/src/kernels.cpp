#include "lsrom/kernels.hpp"

#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lsrom::kernels {
namespace {

void check(const Matrix& points, const Matrix& centers, std::size_t out_a, std::size_t out_b) {
    if (centers.rows() == 0) throw InvalidInput("nearest_center: empty center set");
    if (points.cols() != centers.cols()) throw InvalidInput("nearest_center: dimension mismatch");
    if (out_a != points.rows() || out_b != points.rows()) {
        throw InvalidInput("nearest_center: output size mismatch");
    }
}

inline void nearest_one(const double* x, const double* c, std::size_t k, std::size_t f,
                        std::size_t& best, double& best_d) {
    best = 0;
    best_d = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < k; ++q, c += f) {
        double d = 0.0;
        for (std::size_t j = 0; j < f; ++j) {
            const double diff = x[j] - c[j];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = q;
        }
    }
}

// Nearest and second-nearest squared distances; ties keep the lower index.
inline void nearest_two(const double* x, const double* c, std::size_t k, std::size_t f,
                        std::size_t& best, double& best_d, double& second_d) {
    best = 0;
    best_d = std::numeric_limits<double>::infinity();
    second_d = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < k; ++q, c += f) {
        double d = 0.0;
        for (std::size_t j = 0; j < f; ++j) {
            const double diff = x[j] - c[j];
            d += diff * diff;
        }
        if (d < best_d) {
            second_d = best_d;
            best_d = d;
            best = q;
        } else if (d < second_d) {
            second_d = d;
        }
    }
}

inline double sqdist_one(const double* x, const double* c, std::size_t f) {
    double d = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
        const double diff = x[j] - c[j];
        d += diff * diff;
    }
    return d;
}

}  // namespace

namespace serial {

void nearest_center(const Matrix& points, const Matrix& centers,
                    std::span<std::size_t> index, std::span<double> sqdist) {
    check(points, centers, index.size(), sqdist.size());
    const auto f = points.cols();
    const auto k = centers.rows();
    for (std::size_t i = 0; i < points.rows(); ++i) {
        nearest_one(points.data() + i * f, centers.data(), k, f, index[i], sqdist[i]);
    }
}

void assigned_sqdist(const Matrix& points, const Matrix& centers,
                     std::span<const std::size_t> assignment, std::span<double> sqdist) {
    check(points, centers, assignment.size(), sqdist.size());
    const auto f = points.cols();
    for (std::size_t i = 0; i < points.rows(); ++i) {
        sqdist[i] = sqdist_one(points.data() + i * f, centers.data() + assignment[i] * f, f);
    }
}

}  // namespace serial

namespace omp {

void nearest_center(const Matrix& points, const Matrix& centers,
                    std::span<std::size_t> index, std::span<double> sqdist) {
    check(points, centers, index.size(), sqdist.size());
    const auto f = points.cols();
    const auto k = centers.rows();
    const auto n = static_cast<std::ptrdiff_t>(points.rows());
    const double* px = points.data();
    const double* pc = centers.data();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        nearest_one(px + i * f, pc, k, f, index[i], sqdist[i]);
    }
}

void assigned_sqdist(const Matrix& points, const Matrix& centers,
                     std::span<const std::size_t> assignment, std::span<double> sqdist) {
    check(points, centers, assignment.size(), sqdist.size());
    const auto f = points.cols();
    const auto n = static_cast<std::ptrdiff_t>(points.rows());
    const double* px = points.data();
    const double* pc = centers.data();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        sqdist[i] = sqdist_one(px + i * f, pc + assignment[i] * f, f);
    }
}

}  // namespace omp

void BoundedAssigner::assign(const Matrix& points, const Matrix& centers, std::span<std::size_t> index,
                             std::span<double> sqdist) {
    check(points, centers, index.size(), sqdist.size());
    const auto f = points.cols();
    const auto k = centers.rows();
    const auto n = static_cast<std::ptrdiff_t>(points.rows());
    const double* px = points.data();
    const double* pc = centers.data();
    if (valid_ && (prev_centers_.rows() != k || prev_centers_.cols() != f || upper_.size() != points.rows())) {
        valid_ = false;
    }
    upper_.resize(points.rows());
    lower_.resize(points.rows());

    // How far each center moved, and the two largest moves.
    std::vector<double> drift(k, 0.0);
    double max1 = 0.0, max2 = 0.0;
    std::size_t arg1 = 0;
    if (valid_) {
        for (std::size_t q = 0; q < k; ++q) {
            drift[q] = std::sqrt(sqdist_one(pc + q * f, prev_centers_.data() + q * f, f));
            if (drift[q] > max1) {
                max2 = max1;
                max1 = drift[q];
                arg1 = q;
            } else if (drift[q] > max2) {
                max2 = drift[q];
            }
        }
    }

    std::size_t rescans = 0;
    const bool valid = valid_;
#pragma omp parallel for schedule(static) reduction(+ : rescans)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double* x = px + i * f;
        if (valid) {
            const auto a = index[i];
            const double da = sqdist_one(x, pc + a * f, f);
            const double u = std::sqrt(da);
            const double l = lower_[i] - (a == arg1 ? max2 : max1);
            if (u + 1e-9 * (1.0 + u) < l) {
                sqdist[i] = da;
                upper_[i] = u;
                lower_[i] = l;
                continue;
            }
        }
        double second = 0.0;
        nearest_two(x, pc, k, f, index[i], sqdist[i], second);
        upper_[i] = std::sqrt(sqdist[i]);
        lower_[i] = std::sqrt(second);
        ++rescans;
    }
    rescans_ = rescans;
    prev_centers_ = centers;
    valid_ = true;
}

double ordered_sum(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace lsrom::kernels
