#pragma once

#include "plom/types.hpp"

namespace plom {

/// Kernel-eigenfunction interpolant: functions sampled on the training set
/// are projected onto the eigenvectors of K*_ij = exp(-|g_i-g_j|^2/(2 eps2))
/// whose eigenvalues stay above delta * sigma_1, then extended to new points
/// with the Nystrom formula. The threshold bounds the condition number
/// sigma_1 / sigma_min by 1/delta.
struct GhInterpolant {
  Matrix inputs;   // N x m training latent coordinates
  double eps2 = 0.0;
  double delta = 0.0;
  Vector sigma;    // retained eigenvalues, descending, all >= delta*sigma(0)
  Matrix psi;      // N x |S|, orthonormal columns
  Matrix coeffs;   // |S| x p projection coefficients <f_p, psi_a>

  bool fitted() const { return sigma.size() > 0; }
  Index sample_count() const { return inputs.rows(); }
  Index input_dim() const { return inputs.cols(); }
  Index retained() const { return sigma.size(); }
  Index output_dim() const { return coeffs.cols(); }
};

/// inputs: N x m (rows are points); outputs: N x p (one column per output
/// dimension). One eigendecomposition serves every output column.
GhInterpolant fit_gh(const Matrix& inputs, const Matrix& outputs, double eps2,
                     double delta);

/// Values of the retained eigenfunctions at a new point,
/// Psi_a(g) = sigma_a^{-1} sum_i K*(g, g_i) psi_a(i).
Vector nystrom_extend(const GhInterpolant& interp, const Vector& g_new);

/// Extended function value, sum_a c_{a,p} Psi_a(g_new).
Vector evaluate(const GhInterpolant& interp, const Vector& g_new);

/// Column-wise evaluation: queries m x Q in, values p x Q out.
Matrix evaluate_batch(const GhInterpolant& interp, const Matrix& queries);

/// Projection of the training outputs onto the retained eigenspace
/// (P_delta f), N x p.
Matrix projected_outputs(const GhInterpolant& interp);

/// Lift fit: latent coordinates (N x m) to ambient rows (n x N), with
/// eps2 = eps2_factor * median squared pairwise latent distance.
GhInterpolant fit_lift(const Matrix& latents, const Matrix& ambient,
                       double eps2_factor, double delta);

}  // namespace plom
