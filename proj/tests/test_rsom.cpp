#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "lsrom/delaunay.hpp"
#include "lsrom/rsom.hpp"
#include "lsrom/tlrs.hpp"
#include "oracles.hpp"

using namespace lsrom;

namespace {

double min_pairwise(const Matrix& p) {
    double best = INFINITY;
    for (std::size_t i = 0; i < p.rows(); ++i)
        for (std::size_t j = i + 1; j < p.rows(); ++j) best = std::min(best, std::sqrt(oracle::sqdist(oracle::row(p, i), oracle::row(p, j))));
    return best;
}

// Circumcircle test in long double, independent of the library predicate.
bool strictly_inside_circumcircle(const Matrix& p, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    const long double ax = p(a, 0), ay = p(a, 1), bx = p(b, 0), by = p(b, 1), cx = p(c, 0), cy = p(c, 1);
    const long double dd = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    const long double ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / dd;
    const long double uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / dd;
    const long double r2 = (ax - ux) * (ax - ux) + (ay - uy) * (ay - uy);
    const long double d2 = (p(d, 0) - ux) * (p(d, 0) - ux) + (p(d, 1) - uy) * (p(d, 1) - uy);
    return d2 < r2 * (1 - 1e-9L);
}

DataChunk two_blobs(std::size_t n, std::uint64_t seed) {
    return normalize_min_max(make_gaussian_base({{{0.0, 0.0}, {1.0, 1.0}, n / 2}, {{10.0, 10.0}, {1.0, 1.0}, n - n / 2}}, seed));
}

}  // namespace

TEST(PoissonDisk, CountDistinctnessAndDeterminism) {
    const auto s2 = poisson_disk_init(2, 3);
    ASSERT_EQ(s2.positions.rows(), 4u);
    EXPECT_GT(min_pairwise(s2.positions), 0.0);

    const auto a = poisson_disk_init(10, 7);
    ASSERT_EQ(a.positions.rows(), 100u);
    EXPECT_GE(min_pairwise(a.positions), a.radius);
    EXPECT_GE(min_pairwise(a.positions), 0.5 / 10.0);
    for (double v : a.positions.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_EQ(poisson_disk_init(10, 7).positions, a.positions);
    EXPECT_NE(poisson_disk_init(10, 8).positions, a.positions);
}

TEST(LloydRelax, SinglePointGoesToCentre) {
    const auto out = lloyd_relax(Matrix::from_rows({{0.1, 0.9}}), 1);
    EXPECT_NEAR(out(0, 0), 0.5, 1e-12);
    EXPECT_NEAR(out(0, 1), 0.5, 1e-12);
}

TEST(LloydRelax, ZeroIterationsIsIdentity) {
    const auto p = poisson_disk_init(4, 1).positions;
    EXPECT_EQ(lloyd_relax(p, 0), p);
}

TEST(LloydRelax, FourPointsEnergyNonIncreasingAndSymmetric) {
    auto p = Matrix::from_rows({{0.1, 0.1}, {0.2, 0.8}, {0.7, 0.3}, {0.9, 0.95}});
    double prev = cvt_energy(p, 200);
    for (int it = 0; it < 60; ++it) {
        p = lloyd_relax(p, 1);
        const double e = cvt_energy(p, 200);
        EXPECT_LE(e, prev * (1 + 1e-12)) << "iteration " << it;
        prev = e;
        for (double v : p.values()) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
    // Near the symmetric 2x2 layout: every site close to a quarter centre.
    for (std::size_t i = 0; i < 4; ++i) {
        const double dx = std::min(std::abs(p(i, 0) - 0.25), std::abs(p(i, 0) - 0.75));
        const double dy = std::min(std::abs(p(i, 1) - 0.25), std::abs(p(i, 1) - 0.75));
        EXPECT_LT(dx + dy, 0.05);
    }
}

TEST(LloydRelax, EnergyNonIncreasingOnPoissonLayout) {
    auto p = poisson_disk_init(6, 11).positions;
    double prev = cvt_energy(p, 200);
    for (int it = 0; it < 10; ++it) {
        p = lloyd_relax(p, 1);
        const double e = cvt_energy(p, 200);
        EXPECT_LE(e, prev * (1 + 1e-12));
        prev = e;
    }
}

TEST(CvtEnergy, MatchesGridOracle) {
    const auto p = poisson_disk_init(3, 2).positions;
    double e = 0.0;
    const std::size_t s = 50;
    for (std::size_t a = 0; a < s; ++a) {
        for (std::size_t b = 0; b < s; ++b) {
            const std::vector<double> q{(a + 0.5) / s, (b + 0.5) / s};
            double best = INFINITY;
            for (std::size_t i = 0; i < p.rows(); ++i) best = std::min(best, oracle::sqdist(oracle::row(p, i), q));
            e += best;
        }
    }
    EXPECT_NEAR(cvt_energy(p, s), e, 1e-9 * e);
}

TEST(FindBmu, ExamplesAndOracle) {
    const auto centers = Matrix::from_rows({{0, 0}, {1, 0}, {5, 5}, {2, 2}, {-1, 0}});
    EXPECT_EQ(find_bmu(std::vector<double>{2, 2}, centers), 3u);
    // Equidistant from centers 1 and 4.
    EXPECT_EQ(find_bmu(std::vector<double>{0, 3}, Matrix::from_rows({{9, 9}, {1, 3}, {9, 8}, {8, 9}, {-1, 3}})), 1u);
    EXPECT_THROW(find_bmu(std::vector<double>{0, 0}, Matrix(0, 2)), InvalidInput);

    const auto many = oracle::uniform_points(50, 3, 5);
    const auto queries = oracle::uniform_points(200, 3, 6);
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        const auto q = oracle::row(queries, i);
        EXPECT_EQ(find_bmu(q, many), oracle::knn(many, q, 1)[0]);
    }
}

TEST(Schedule, EndpointsAndMonotone) {
    EXPECT_DOUBLE_EQ(decay_schedule(0.5, 0.01, 0, 100), 0.5);
    EXPECT_NEAR(decay_schedule(0.5, 0.01, 100, 100), 0.01, 1e-15);
    double prev = 1.0;
    for (int t = 0; t <= 100; ++t) {
        const double v = decay_schedule(0.5, 0.01, t, 100);
        EXPECT_LT(v, prev);
        prev = v;
    }
    // Late-training kernel is winner-takes-all.
    const double s = 0.01;
    EXPECT_LT(std::exp(-0.01 / (2 * s * s)), 1e-20);
}

TEST(Delaunay, SmallCases) {
    EXPECT_EQ(delaunay_edges(Matrix::from_rows({{0, 0}, {1, 0}, {0, 1}})).size(), 3u);
    EXPECT_EQ(delaunay_edges(Matrix::from_rows({{0, 0}, {1, 0}, {0, 1}, {1, 1}})).size(), 5u);
    EXPECT_EQ(delaunay_edges(Matrix::from_rows({{0, 0}, {1, 1}})).size(), 1u);
}

TEST(Delaunay, EmptyCircumcircleBruteForce) {
    for (unsigned seed = 0; seed < 20; ++seed) {
        const auto p = oracle::uniform_points(25 + seed, 2, 100 + seed);
        const auto edges = delaunay_edges(p);
        std::set<std::pair<std::size_t, std::size_t>> e(edges.begin(), edges.end());
        // Every triangle of the edge graph whose circumcircle is empty is a
        // Delaunay triangle; each edge must lie on one such triangle.
        const auto n = p.rows();
        std::set<std::pair<std::size_t, std::size_t>> supported;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                for (std::size_t c = b + 1; c < n; ++c) {
                    if (!e.count({a, b}) || !e.count({b, c}) || !e.count({a, c})) continue;
                    bool empty = true;
                    for (std::size_t d = 0; d < n && empty; ++d) {
                        if (d == a || d == b || d == c) continue;
                        if (strictly_inside_circumcircle(p, a, b, c, d)) empty = false;
                    }
                    if (empty) supported.insert({a, b}), supported.insert({b, c}), supported.insert({a, c});
                }
        EXPECT_EQ(supported, e) << "seed " << seed;
        EXPECT_LE(edges.size(), 3 * n - 6);
        // Brute-force count: a triangulation of n points with h hull vertices has 3n - 3 - h edges.
        std::size_t hull = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                bool all_left = true;
                for (std::size_t k = 0; k < n && all_left; ++k) {
                    if (k == i || k == j) continue;
                    const double cr = (p(j, 0) - p(i, 0)) * (p(k, 1) - p(i, 1)) - (p(j, 1) - p(i, 1)) * (p(k, 0) - p(i, 0));
                    if (cr <= 0) all_left = false;
                }
                if (all_left) ++hull;
            }
        }
        EXPECT_EQ(edges.size(), 3 * n - 3 - hull) << "seed " << seed;
    }
}

TEST(BuildAdjacency, SymmetricConnectedDegreeAtLeastTwo) {
    for (std::size_t q : {2u, 5u, 10u}) {
        const auto grid = lloyd_relax(poisson_disk_init(q, 3).positions, 10);
        const auto a = build_adjacency(grid);
        const auto n = q * q;
        std::size_t edges = 0;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_EQ(a[i][i], 0);
            std::size_t deg = 0;
            for (std::size_t j = 0; j < n; ++j) {
                EXPECT_EQ(a[i][j], a[j][i]);
                deg += a[i][j];
            }
            EXPECT_GE(deg, 2u);
            edges += deg;
        }
        EXPECT_LE(edges / 2, 3 * n - 6);
        EXPECT_EQ(connected_components(a), 1u);
    }
}

TEST(Train, ReducesQuantizationErrorAndStaysInBox) {
    const auto chunk = two_blobs(2000, 4);
    RsomParams p;
    p.grid_side = 4;
    p.seed = 9;
    const auto som = train(chunk, p);
    EXPECT_EQ(som.topology.size(), 16u);
    EXPECT_LT(som.quantization_error, som.initial_quantization_error);
    EXPECT_NEAR(som.quantization_error, quantization_error(chunk.objects, som.topology.centers), 1e-15);
    // Data box is [0,1]^2 after normalisation; allowed slack eps0 * diagonal.
    const double slack = p.learning_rate_start * std::sqrt(2.0);
    for (double v : som.topology.centers.values()) {
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_GE(v, -slack);
        EXPECT_LE(v, 1.0 + slack);
    }
}

TEST(Train, DeterministicGivenSeed) {
    const auto chunk = two_blobs(600, 2);
    RsomParams p;
    p.grid_side = 5;
    p.seed = 17;
    const auto a = train(chunk, p), b = train(chunk, p);
    EXPECT_EQ(a.topology.centers, b.topology.centers);
    EXPECT_EQ(a.topology.grid_positions, b.topology.grid_positions);
    EXPECT_EQ(a.topology.adjacency, b.topology.adjacency);
    p.seed = 18;
    EXPECT_NE(train(chunk, p).topology.centers, a.topology.centers);
}

TEST(Train, RejectsTooFewObjectsAndBadParams) {
    const auto chunk = two_blobs(50, 1);
    RsomParams p;
    EXPECT_THROW(train(chunk, p), InvalidInput);
    p.grid_side = 1;
    EXPECT_THROW(p.validate(), InvalidInput);
    p = RsomParams{};
    p.learning_rate_end = 0.9;
    EXPECT_THROW(p.validate(), InvalidInput);
    p = RsomParams{};
    p.sigma_end = 0.0;
    EXPECT_THROW(p.validate(), InvalidInput);
}
