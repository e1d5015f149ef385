#include "plom/kernels.hpp"

#include <algorithm>
#include <vector>

namespace plom {

Matrix pairwise_squared_distances(const Matrix& points) {
  const Index N = points.cols();
  if (N < 1) throw InvalidParameter("need at least one point");
  const Vector sq = points.colwise().squaredNorm();
  Matrix gram(N, N);
  gram.noalias() = points.transpose() * points;
  Matrix d2(N, N);
  for (Index j = 0; j < N; ++j) {
    d2(j, j) = 0.0;
    for (Index i = 0; i < j; ++i) {
      const double v = std::max(0.0, sq(i) + sq(j) - 2.0 * gram(i, j));
      d2(i, j) = v;
      d2(j, i) = v;
    }
  }
  return d2;
}

double median_offdiagonal(const Matrix& pairwise) {
  const Index N = pairwise.rows();
  if (N < 2) throw InvalidParameter("need at least two points for a median");
  std::vector<double> entries;
  entries.reserve(std::size_t(N) * std::size_t(N - 1) / 2);
  for (Index j = 0; j < N; ++j)
    for (Index i = 0; i < j; ++i) entries.push_back(pairwise(i, j));

  const std::size_t mid = entries.size() / 2;
  std::nth_element(entries.begin(), entries.begin() + mid, entries.end());
  double median = entries[mid];
  if (entries.size() % 2 == 0) {
    const double below =
        *std::max_element(entries.begin(), entries.begin() + mid);
    median = 0.5 * (median + below);
  }
  return median;
}

}  // namespace plom
