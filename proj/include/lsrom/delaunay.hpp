#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "lsrom/core.hpp"

namespace lsrom {

// Edges of the Delaunay triangulation of 2-D points (rows of `points`).
// Built by an x-sorted sweep triangulation followed by Lawson edge flips, so
// cocircular inputs keep whichever diagonal the sweep produced. All-collinear
// inputs degrade to the sorted path; fewer than three points give the
// complete graph. Pairs are (i, j) with i < j, sorted.
std::vector<std::pair<std::size_t, std::size_t>> delaunay_edges(const Matrix& points);

// Positive when (a, b, c) turn counter-clockwise.
double orient2d(const double* a, const double* b, const double* c);

// Positive when d lies strictly inside the circumcircle of ccw triangle (a, b, c).
double in_circle(const double* a, const double* b, const double* c, const double* d);

}  // namespace lsrom
