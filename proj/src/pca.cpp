#include "plom/pca.hpp"

#include <Eigen/Eigenvalues>

namespace plom {

Vector PcaModel::explained_variance_ratio() const {
  const double total = eigenvalues.sum();
  return eigenvalues / total;
}

namespace {

void fix_sign(Eigen::Ref<Vector> v) {
  Index at = 0;
  v.cwiseAbs().maxCoeff(&at);
  if (v(at) < 0.0) v = -v;
}

}  // namespace

PcaModel fit_pca(const Matrix& data, const PcaRetention& retention) {
  const Index n = data.rows();
  const Index N = data.cols();
  if (N < 2) throw InvalidParameter("PCA needs at least two samples");
  if (!data.allFinite())
    throw InvalidParameter("PCA input contains non-finite entries");
  if (retention.count < 0 || retention.count > n)
    throw InvalidParameter("retention count out of range");
  if (retention.count == 0 &&
      (retention.energy <= 0.0 || retention.energy > 1.0))
    throw InvalidParameter("retention energy must lie in (0, 1]");

  PcaModel model;
  model.mean = data.rowwise().mean();
  const Matrix centered = data.colwise() - model.mean;
  const Matrix cov =
      (centered * centered.transpose()) / double(N - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success)
    throw NumericalFailure("covariance eigendecomposition did not converge");

  // Eigen sorts ascending; flip to descending.
  const Vector all_values = solver.eigenvalues().reverse();
  Matrix all_vectors = solver.eigenvectors().rowwise().reverse();

  const double floor = 1e-12 * std::max(all_values(0), 0.0);
  Index usable = 0;
  while (usable < n && all_values(usable) > floor) ++usable;
  if (usable == 0)
    throw NumericalFailure("no positive covariance eigenvalues");

  Index nu = usable;
  if (retention.count > 0) {
    nu = std::min(retention.count, usable);
  } else {
    const double total = all_values.head(usable).sum();
    double cumulative = 0.0;
    for (nu = 0; nu < usable; ) {
      cumulative += all_values(nu);
      ++nu;
      if (cumulative >= retention.energy * total) break;
    }
  }

  model.eigenvalues = all_values.head(nu);
  model.eigenvectors = all_vectors.leftCols(nu);
  for (Index k = 0; k < nu; ++k) fix_sign(model.eigenvectors.col(k));
  return model;
}

Matrix project(const PcaModel& model, const Matrix& data) {
  if (data.rows() != model.ambient_dim())
    throw DimensionMismatch("PCA model expects " +
                            std::to_string(model.ambient_dim()) +
                            " features, got " + std::to_string(data.rows()));
  const Vector inv_sqrt = model.eigenvalues.cwiseSqrt().cwiseInverse();
  return inv_sqrt.asDiagonal() *
         (model.eigenvectors.transpose() * (data.colwise() - model.mean));
}

Matrix reconstruct(const PcaModel& model, const Matrix& eta) {
  if (eta.rows() != model.nu())
    throw DimensionMismatch("PCA model retains " +
                            std::to_string(model.nu()) +
                            " components, got " + std::to_string(eta.rows()));
  return (model.eigenvectors *
          (model.eigenvalues.cwiseSqrt().asDiagonal() * eta))
             .colwise() +
         model.mean;
}

}  // namespace plom
