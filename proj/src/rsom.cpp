#include "lsrom/rsom.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lsrom/delaunay.hpp"
#include "lsrom/kernels.hpp"
#include "lsrom/rng.hpp"

namespace lsrom {
namespace {

constexpr std::uint64_t kStreamPoisson = 1;
constexpr std::uint64_t kStreamDiscard = 2;
constexpr std::uint64_t kStreamNeurons = 3;
constexpr std::uint64_t kStreamShuffle = 4;

// Neighbourhood weights below exp(-kKernelCutoff) are skipped; such updates
// are far below double resolution of any coordinate in [0, 1].
constexpr double kKernelCutoff = 50.0;

// Bridson's algorithm in [0,1]^2 with k = 30 candidates per active point.
std::vector<std::array<double, 2>> bridson(double r, Rng& rng) {
    constexpr int kCandidates = 30;
    const double cell = r / std::sqrt(2.0);
    const auto side = static_cast<std::size_t>(std::ceil(1.0 / cell));
    std::vector<std::ptrdiff_t> grid(side * side, -1);
    std::vector<std::array<double, 2>> pts;
    std::vector<std::size_t> active;

    auto cell_of = [&](double v) {
        return std::min(side - 1, static_cast<std::size_t>(v / cell));
    };
    auto insert = [&](std::array<double, 2> p) {
        grid[cell_of(p[1]) * side + cell_of(p[0])] = static_cast<std::ptrdiff_t>(pts.size());
        active.push_back(pts.size());
        pts.push_back(p);
    };
    auto fits = [&](std::array<double, 2> p) {
        if (p[0] < 0.0 || p[0] > 1.0 || p[1] < 0.0 || p[1] > 1.0) return false;
        const auto cx = static_cast<std::ptrdiff_t>(cell_of(p[0]));
        const auto cy = static_cast<std::ptrdiff_t>(cell_of(p[1]));
        const auto s = static_cast<std::ptrdiff_t>(side);
        for (auto y = std::max<std::ptrdiff_t>(0, cy - 2); y <= std::min(s - 1, cy + 2); ++y) {
            for (auto x = std::max<std::ptrdiff_t>(0, cx - 2); x <= std::min(s - 1, cx + 2); ++x) {
                const auto id = grid[y * s + x];
                if (id < 0) continue;
                const double dx = pts[id][0] - p[0];
                const double dy = pts[id][1] - p[1];
                if (dx * dx + dy * dy < r * r) return false;
            }
        }
        return true;
    };

    insert({uniform01(rng), uniform01(rng)});
    while (!active.empty()) {
        const auto slot = uniform_int(rng, 0, active.size() - 1);
        const auto& base = pts[active[slot]];
        bool placed = false;
        for (int c = 0; c < kCandidates; ++c) {
            const double radius = r * (1.0 + uniform01(rng));
            const double angle = 6.283185307179586 * uniform01(rng);
            std::array<double, 2> cand{base[0] + radius * std::cos(angle),
                                       base[1] + radius * std::sin(angle)};
            if (fits(cand)) {
                insert(cand);
                placed = true;
                break;
            }
        }
        if (!placed) {
            active[slot] = active.back();
            active.pop_back();
        }
    }
    return pts;
}

// Clips a convex polygon by the half-plane n.x <= c.
std::vector<double> clip(const std::vector<double>& poly, double nx, double ny, double c) {
    std::vector<double> out;
    const auto m = poly.size() / 2;
    for (std::size_t i = 0; i < m; ++i) {
        const double ax = poly[2 * i], ay = poly[2 * i + 1];
        const double bx = poly[2 * ((i + 1) % m)], by = poly[2 * ((i + 1) % m) + 1];
        const double da = nx * ax + ny * ay - c;
        const double db = nx * bx + ny * by - c;
        if (da <= 0.0) {
            out.push_back(ax);
            out.push_back(ay);
        }
        if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
            const double t = da / (da - db);
            out.push_back(ax + t * (bx - ax));
            out.push_back(ay + t * (by - ay));
        }
    }
    return out;
}

}  // namespace

void RsomParams::validate() const {
    if (grid_side < 2) throw InvalidInput("grid side Q must be at least 2");
    if (epochs < 1) throw InvalidInput("epochs must be positive");
    if (lloyd_iterations < 1) throw InvalidInput("lloyd iterations must be positive");
    if (!(learning_rate_end > 0.0) || !(learning_rate_end < learning_rate_start)) {
        throw InvalidInput("learning rate schedule must satisfy 0 < end < start");
    }
    if (!(sigma_end > 0.0) || !(sigma_end < sigma_start)) {
        throw InvalidInput("sigma schedule must satisfy 0 < end < start");
    }
}

PoissonSample poisson_disk_init(std::size_t grid_side, std::uint64_t seed) {
    if (grid_side < 2) throw InvalidInput("grid side Q must be at least 2");
    const auto target = grid_side * grid_side;
    Rng rng(derive_seed(seed, kStreamPoisson));
    double r = 0.85 / static_cast<double>(grid_side);
    PoissonSample out;
    std::vector<std::array<double, 2>> pts;
    while (true) {
        ++out.attempts;
        pts = bridson(r, rng);
        if (pts.size() >= target) break;
        r *= 0.9;
    }
    if (pts.size() > target) {
        Rng drop(derive_seed(seed, kStreamDiscard));
        portable_shuffle(pts.begin(), pts.end(), drop);
        pts.resize(target);
    }
    out.radius = r;
    out.positions = Matrix(target, 2);
    for (std::size_t i = 0; i < target; ++i) {
        out.positions(i, 0) = pts[i][0];
        out.positions(i, 1) = pts[i][1];
    }
    return out;
}

std::vector<double> voronoi_cell(const Matrix& positions, std::size_t i) {
    std::vector<double> poly{0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0};
    const double px = positions(i, 0), py = positions(i, 1);
    for (std::size_t j = 0; j < positions.rows() && !poly.empty(); ++j) {
        if (j == i) continue;
        const double qx = positions(j, 0), qy = positions(j, 1);
        if (qx == px && qy == py) continue;
        // |x-p|^2 <= |x-q|^2  <=>  (q-p).x <= (|q|^2 - |p|^2)/2
        poly = clip(poly, qx - px, qy - py, 0.5 * ((qx * qx + qy * qy) - (px * px + py * py)));
    }
    return poly;
}

Matrix lloyd_relax(const Matrix& positions, std::size_t iterations) {
    if (positions.cols() != 2) throw InvalidInput("lloyd_relax expects 2-D positions");
    Matrix cur = positions;
    for (std::size_t it = 0; it < iterations; ++it) {
        Matrix next = cur;
        for (std::size_t i = 0; i < cur.rows(); ++i) {
            const auto poly = voronoi_cell(cur, i);
            const auto m = poly.size() / 2;
            double area = 0.0, cx = 0.0, cy = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                const auto b = (a + 1) % m;
                const double cross = poly[2 * a] * poly[2 * b + 1] - poly[2 * b] * poly[2 * a + 1];
                area += cross;
                cx += (poly[2 * a] + poly[2 * b]) * cross;
                cy += (poly[2 * a + 1] + poly[2 * b + 1]) * cross;
            }
            if (std::abs(area) <= 0.0) continue;
            next(i, 0) = std::clamp(cx / (3.0 * area), 0.0, 1.0);
            next(i, 1) = std::clamp(cy / (3.0 * area), 0.0, 1.0);
        }
        cur = std::move(next);
    }
    return cur;
}

double cvt_energy(const Matrix& positions, std::size_t samples) {
    double e = 0.0;
    for (std::size_t sy = 0; sy < samples; ++sy) {
        for (std::size_t sx = 0; sx < samples; ++sx) {
            const double x = (static_cast<double>(sx) + 0.5) / static_cast<double>(samples);
            const double y = (static_cast<double>(sy) + 0.5) / static_cast<double>(samples);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < positions.rows(); ++i) {
                const double dx = positions(i, 0) - x, dy = positions(i, 1) - y;
                best = std::min(best, dx * dx + dy * dy);
            }
            e += best;
        }
    }
    return e;
}

std::size_t find_bmu(std::span<const double> x, const Matrix& centers) {
    if (centers.rows() == 0) throw InvalidInput("find_bmu: empty center set");
    if (centers.cols() != x.size()) throw InvalidInput("find_bmu: dimension mismatch");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < centers.rows(); ++q) {
        const double d = squared_distance(x, centers.row(q));
        if (d < best_d) {
            best_d = d;
            best = q;
        }
    }
    return best;
}

double decay_schedule(double start, double end, double step, double total) {
    if (total <= 0.0) return start;
    return start * std::pow(end / start, step / total);
}

std::vector<std::vector<std::uint8_t>> build_adjacency(const Matrix& grid_positions) {
    return adjacency_from_edges(grid_positions.rows(), delaunay_edges(grid_positions));
}

double quantization_error(const Matrix& objects, const Matrix& centers) {
    std::vector<std::size_t> idx(objects.rows());
    std::vector<double> d(objects.rows());
    kernels::nearest_center(objects, centers, idx, d);
    return kernels::ordered_sum(d) / static_cast<double>(objects.rows());
}

Matrix initial_neurons(const DataChunk& chunk, std::size_t count, std::uint64_t seed) {
    const auto f = chunk.features();
    std::vector<double> lo(f), hi(f);
    for (std::size_t j = 0; j < f; ++j) {
        lo[j] = hi[j] = chunk.objects(0, j);
        for (std::size_t i = 1; i < chunk.size(); ++i) {
            lo[j] = std::min(lo[j], chunk.objects(i, j));
            hi[j] = std::max(hi[j], chunk.objects(i, j));
        }
    }
    Rng rng(derive_seed(seed, kStreamNeurons));
    Matrix z(count, f);
    for (std::size_t q = 0; q < count; ++q) {
        for (std::size_t j = 0; j < f; ++j) z(q, j) = lo[j] + (hi[j] - lo[j]) * uniform01(rng);
    }
    return z;
}

TrainedSom train(const DataChunk& chunk, const RsomParams& params) {
    params.validate();
    chunk.validate();
    const auto q2 = params.neurons();
    const auto n = chunk.size();
    const auto f = chunk.features();
    if (n < q2) {
        throw InvalidInput("chunk has " + std::to_string(n) + " objects but the map needs at least Q*Q = " +
                           std::to_string(q2) + "; lower Q");
    }

    TrainedSom som;
    som.params = params;
    auto sample = poisson_disk_init(params.grid_side, params.seed);
    som.poisson_radius = sample.radius;
    som.topology.grid_positions = lloyd_relax(sample.positions, params.lloyd_iterations);
    som.topology.adjacency = build_adjacency(som.topology.grid_positions);

    Matrix z = initial_neurons(chunk, q2, params.seed);
    som.initial_quantization_error = quantization_error(chunk.objects, z);

    // Squared map-space distances between neurons.
    const auto& grid = som.topology.grid_positions;
    std::vector<double> map_d2(q2 * q2);
    for (std::size_t a = 0; a < q2; ++a) {
        for (std::size_t b = 0; b < q2; ++b) map_d2[a * q2 + b] = squared_distance(grid.row(a), grid.row(b));
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(params.seed, kStreamShuffle));
    const double total = static_cast<double>(params.epochs) * static_cast<double>(n);
    const double log_eps = std::log(params.learning_rate_end / params.learning_rate_start);
    const double log_sigma = std::log(params.sigma_end / params.sigma_start);
    double* zd = z.values().data();
    const double* xd = chunk.objects.data();

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        portable_shuffle(order.begin(), order.end(), rng);
        for (std::size_t pos = 0; pos < n; ++pos, ++step) {
            const double frac = static_cast<double>(step) / total;
            const double eps = params.learning_rate_start * std::exp(frac * log_eps);
            const double sigma = params.sigma_start * std::exp(frac * log_sigma);
            const double inv_two_s2 = 1.0 / (2.0 * sigma * sigma);
            const double* x = xd + order[pos] * f;

            std::size_t b = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t q = 0; q < q2; ++q) {
                const double* zq = zd + q * f;
                double d = 0.0;
                for (std::size_t j = 0; j < f; ++j) {
                    const double diff = x[j] - zq[j];
                    d += diff * diff;
                }
                if (d < best) {
                    best = d;
                    b = q;
                }
            }

            const double* row = map_d2.data() + b * q2;
            for (std::size_t q = 0; q < q2; ++q) {
                const double a = row[q] * inv_two_s2;
                if (a > kKernelCutoff) continue;
                const double w = eps * std::exp(-a);
                double* zq = zd + q * f;
                for (std::size_t j = 0; j < f; ++j) zq[j] += w * (x[j] - zq[j]);
            }
        }
    }

    for (double v : z.values()) {
        if (!std::isfinite(v)) throw std::runtime_error("SOM training produced a non-finite neuron");
    }
    som.topology.centers = std::move(z);
    som.quantization_error = quantization_error(chunk.objects, som.topology.centers);
    return som;
}

}  // namespace lsrom
