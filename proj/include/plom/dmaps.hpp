#pragma once

#include "plom/types.hpp"

#include <utility>
#include <vector>

namespace plom {

enum class MedianConvention {
  squared_distances,       // median of squared pairwise distances
  distances_then_square,   // (median of pairwise distances)^2
};

enum class KernelDenominator { four_eps, two_eps };

/// Eq.-literal scaling of the diffusion coordinates uses the row sums of the
/// raw kernel; the similarity-consistent alternative uses the row sums of
/// the density-normalized kernel.
enum class CoordinateScaling { b_diag, d_diag };

struct SelectionStrategy {
  enum class Kind { top_m, ratio_threshold };
  Kind kind = Kind::ratio_threshold;
  Index m = 0;
  double theta = 0.5;

  static SelectionStrategy top(Index m) {
    return {Kind::top_m, m, 0.0};
  }
  static SelectionStrategy ratio(double theta) {
    return {Kind::ratio_threshold, 0, theta};
  }
};

struct DmapsConfig {
  double epsilon_multiplier = 15.0;
  double epsilon_override = 0.0;  // > 0: skip the median rule
  MedianConvention median_convention = MedianConvention::squared_distances;
  KernelDenominator denominator = KernelDenominator::four_eps;
  double alpha_norm = 1.0;  // density-normalization exponent, in {0, 0.5, 1}
  int kappa = 1;
  Index m_max = 10;
  CoordinateScaling coord_scaling = CoordinateScaling::b_diag;
  double regression_bandwidth_factor = 1.0 / 3.0;
  SelectionStrategy selection{};
};

/// Everything derived from the kernel row sums: the density-normalized
/// kernel, the row-stochastic operator and its symmetric conjugate.
struct MarkovOperators {
  Matrix ktilde;
  Matrix p;    // row-stochastic
  Matrix ps;   // symmetric, same spectrum as p
  Vector b_diag;
  Vector d_diag;
};

struct DmapsModel {
  double epsilon = 0.0;
  DmapsConfig config;
  Vector b_diag;
  Vector d_diag;
  Vector eigenvalues;    // length m, descending, leading value 1
  Matrix eigenvectors;   // N x m, orthonormal (eigenvectors of ps)
  Matrix coordinates;    // N x m, lambda^kappa * scale^{-1/2} * phi
  Vector residuals;      // length m; [0] = 0 (trivial direction), [1] = 1
  std::vector<Index> selected;  // column indices, never 0

  Index sample_count() const { return eigenvectors.rows(); }
  Index mode_count() const { return eigenvalues.size(); }
  /// Selected coordinate block, N x m_selected.
  Matrix selected_coordinates() const;
};

double epsilon_from_median(
    const Matrix& points, double multiplier,
    MedianConvention convention = MedianConvention::squared_distances);

/// K_ij = exp(-|p_i - p_j|^2 / c) with c = 4*eps or 2*eps; unit diagonal,
/// bit-symmetric.
Matrix kernel_matrix(const Matrix& points, double epsilon,
                     KernelDenominator denominator = KernelDenominator::four_eps);

MarkovOperators normalize_markov(const Matrix& kernel, double alpha_norm = 1.0);

/// Top m_max eigenpairs of the symmetric operator, descending, each
/// eigenvector flipped so its largest-magnitude entry is positive.
std::pair<Vector, Matrix> spectral_decompose(const Matrix& ps, Index m_max);

Matrix diffusion_coordinates(const Vector& eigenvalues,
                             const Matrix& eigenvectors,
                             const Vector& scale_diag, int kappa);

/// Leave-one-out locally weighted linear regression residuals of each
/// non-trivial eigenvector on its predecessors (Gaussian weights, bandwidth
/// = factor * median predictor distance, 1e-10 ridge on the local normal
/// equations). Input holds the non-trivial eigenvectors only; the first
/// residual is 1 by convention. Small r_k means column k is a harmonic of
/// the earlier columns.
Vector parsimonious_residuals(const Matrix& eigvecs, double bandwidth_factor);

/// Indices into the residual vector (ascending, i.e. eigenvalue order).
std::vector<Index> select_nonharmonic(const Vector& residuals,
                                      const SelectionStrategy& strategy);

DmapsModel fit_dmaps(const Matrix& points, const DmapsConfig& config);

}  // namespace plom
