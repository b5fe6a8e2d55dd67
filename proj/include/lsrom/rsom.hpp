#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lsrom/core.hpp"

namespace lsrom {

struct RsomParams {
    std::size_t grid_side = 10;  // Q; the map holds Q*Q neurons
    std::size_t epochs = 10;
    double learning_rate_start = 0.5;
    double learning_rate_end = 0.01;
    double sigma_start = 0.5;  // neighbourhood width in map units
    double sigma_end = 0.01;
    std::size_t lloyd_iterations = 10;
    std::uint64_t seed = 0;

    std::size_t neurons() const { return grid_side * grid_side; }
    void validate() const;
};

struct PoissonSample {
    Matrix positions;     // Q*Q x 2, in [0,1]^2
    double radius = 0.0;  // radius at which sampling reached the requested count
    std::size_t attempts = 0;
};

struct TrainedSom {
    TopologyModel topology;
    double quantization_error = 0.0;
    double initial_quantization_error = 0.0;
    double poisson_radius = 0.0;
    RsomParams params;
};

// Bridson sampling in the unit square. Starts at r = 0.85/Q, shrinks r by 0.9
// until at least Q*Q samples exist, then discards uniformly down to Q*Q.
PoissonSample poisson_disk_init(std::size_t grid_side, std::uint64_t seed);

// Moves each point to the centroid of its Voronoi cell clipped to [0,1]^2.
Matrix lloyd_relax(const Matrix& positions, std::size_t iterations);

// Clipped Voronoi cell of point i as a ccw polygon (flattened x,y pairs).
std::vector<double> voronoi_cell(const Matrix& positions, std::size_t i);

// Sum over a samples x samples grid of cell-centre points of the squared
// distance to the nearest site.
double cvt_energy(const Matrix& positions, std::size_t samples = 200);

// argmin_q |z_q - x|^2, lowest index on ties.
std::size_t find_bmu(std::span<const double> x, const Matrix& centers);

// Geometric decay from `start` at step 0 to `end` at step `total`.
double decay_schedule(double start, double end, double step, double total);

// Delaunay adjacency over the grid positions.
std::vector<std::vector<std::uint8_t>> build_adjacency(const Matrix& grid_positions);

// Mean squared distance from each object to its BMU.
double quantization_error(const Matrix& objects, const Matrix& centers);

// Initial neuron positions: uniform in the data bounding box.
Matrix initial_neurons(const DataChunk& chunk, std::size_t count, std::uint64_t seed);

TrainedSom train(const DataChunk& chunk, const RsomParams& params);

}  // namespace lsrom
