#include "plom/gh.hpp"

#include "plom/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace plom {

GhInterpolant fit_gh(const Matrix& inputs, const Matrix& outputs, double eps2,
                     double delta) {
  const Index N = inputs.rows();
  if (N < 2) throw InvalidParameter("GH needs at least two training points");
  if (outputs.rows() != N)
    throw DimensionMismatch("inputs and outputs disagree on sample count");
  if (eps2 <= 0.0) throw InvalidParameter("eps2 must be > 0");
  if (delta <= 0.0 || delta >= 1.0)
    throw InvalidParameter("delta must lie in (0, 1)");

  Matrix kstar = pairwise_squared_distances(inputs.transpose());
  kstar = (-kstar.array() / (2.0 * eps2)).exp();
  kstar.diagonal().setOnes();

  Eigen::SelfAdjointEigenSolver<Matrix> solver(kstar);
  if (solver.info() != Eigen::Success)
    throw NumericalFailure("GH kernel eigendecomposition failed");

  const Vector values = solver.eigenvalues().reverse();
  if (values(0) <= 0.0)
    throw NumericalFailure("GH kernel has no positive eigenvalue");

  Index retained = 0;
  while (retained < N && values(retained) >= delta * values(0)) ++retained;

  GhInterpolant interp;
  interp.inputs = inputs;
  interp.eps2 = eps2;
  interp.delta = delta;
  interp.sigma = values.head(retained);
  interp.psi = solver.eigenvectors().rowwise().reverse().leftCols(retained);
  for (Index k = 0; k < retained; ++k) {
    Index at = 0;
    interp.psi.col(k).cwiseAbs().maxCoeff(&at);
    if (interp.psi(at, k) < 0.0) interp.psi.col(k) = -interp.psi.col(k);
  }
  interp.coeffs.noalias() = interp.psi.transpose() * outputs;
  return interp;
}

namespace {

void require_fitted(const GhInterpolant& interp) {
  if (!interp.fitted()) throw NotFitted("GH interpolant has not been fitted");
}

}  // namespace

Vector nystrom_extend(const GhInterpolant& interp, const Vector& g_new) {
  require_fitted(interp);
  if (g_new.size() != interp.input_dim())
    throw DimensionMismatch("query dimension mismatch");
  const Vector sq =
      (interp.inputs.rowwise() - g_new.transpose()).rowwise().squaredNorm();
  const Vector k_new = (-sq.array() / (2.0 * interp.eps2)).exp();
  return interp.sigma.cwiseInverse().asDiagonal() *
         (interp.psi.transpose() * k_new);
}

Vector evaluate(const GhInterpolant& interp, const Vector& g_new) {
  return interp.coeffs.transpose() * nystrom_extend(interp, g_new);
}

Matrix evaluate_batch(const GhInterpolant& interp, const Matrix& queries) {
  require_fitted(interp);
  if (queries.rows() != interp.input_dim())
    throw DimensionMismatch("query dimension mismatch");

  // K_new (Q x N) built from the expanded squared distance, one GEMM.
  const Vector train_sq = interp.inputs.rowwise().squaredNorm();
  Matrix logits(queries.cols(), interp.sample_count());
  logits.noalias() = 2.0 * (queries.transpose() * interp.inputs.transpose());
  logits.rowwise() -= train_sq.transpose();
  logits.colwise() -= queries.colwise().squaredNorm().transpose();
  logits = (logits.array() / (2.0 * interp.eps2)).exp();

  Matrix extended(queries.cols(), interp.retained());  // Psi_a at queries
  extended.noalias() = logits * interp.psi;
  extended = extended * interp.sigma.cwiseInverse().asDiagonal();
  return (extended * interp.coeffs).transpose();
}

Matrix projected_outputs(const GhInterpolant& interp) {
  require_fitted(interp);
  return interp.psi * interp.coeffs;
}

GhInterpolant fit_lift(const Matrix& latents, const Matrix& ambient,
                       double eps2_factor, double delta) {
  if (eps2_factor <= 0.0)
    throw InvalidParameter("eps2 factor must be > 0");
  if (ambient.cols() != latents.rows())
    throw DimensionMismatch("ambient sample count does not match latents");
  const Matrix d2 = pairwise_squared_distances(latents.transpose());
  const double med2 = median_offdiagonal(d2);
  if (med2 <= 0.0)
    throw NumericalFailure("latent points coincide; lift scale undefined");
  return fit_gh(latents, ambient.transpose(), eps2_factor * med2, delta);
}

}  // namespace plom
