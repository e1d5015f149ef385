#pragma once

#include "plom/types.hpp"

namespace plom {

/// Squared Euclidean distances between the columns of `points`. Built from
/// the Gram matrix and mirrored, so the result is bit-symmetric with an
/// exactly zero diagonal; cancellation-induced negatives are clamped.
Matrix pairwise_squared_distances(const Matrix& points);

/// Median of the strict upper triangle (the N(N-1)/2 pair entries).
double median_offdiagonal(const Matrix& pairwise);

}  // namespace plom
