#pragma once

#include "plom/types.hpp"

#include <utility>

namespace plom {

/// Closed-form Gaussian KDE bandwidths for N standardized samples in
/// dimension nu:
///   s    = { 4 / (N (2 + nu)) }^{1/(nu+4)}
///   shat = s / sqrt(s^2 + (N-1)/N)
/// With the shat/s center shrinkage this keeps the mixture mean at zero and
/// its second moment at identity for standardized centers.
std::pair<double, double> kde_bandwidths(Index n_samples, Index dim);

/// Gaussian mixture centered on shrunk data points. Queries are evaluated in
/// log space with a max shift, so large N (tiny shat) does not underflow.
struct KdeModel {
  Matrix centers;  // nu x N, standardized coordinates
  double s = 0.0;
  double s_hat = 0.0;

  Index dim() const { return centers.rows(); }
  Index count() const { return centers.cols(); }
};

KdeModel fit_kde(const Matrix& centers);

double log_pdf(const KdeModel& model, const Vector& point);
double pdf(const KdeModel& model, const Vector& point);

/// Gradient of log q at u, where q is the mixture with the normalization
/// constants dropped: a softmax-weighted pull toward the shrunk centers,
///   force(u) = ((shat/s) * sum_j w_j eta_j - u) / shat^2.
Vector force(const KdeModel& model, const Vector& point);

/// Column-wise force for a batch of query points (nu x Q in, nu x Q out).
Matrix force_batch(const KdeModel& model, const Matrix& points);

/// Reusable buffers for the per-step force evaluations inside a sampler.
class KdeForceWorkspace {
 public:
  void apply(const KdeModel& model, const Matrix& points, Matrix& out);

 private:
  Matrix logits_;   // N x Q
  Vector center_sq_;
  const KdeModel* cached_model_ = nullptr;
};

/// Sum of log pdf over the columns of a sample matrix (i.i.d. product form).
double joint_log_density(const KdeModel& model, const Matrix& samples);

/// Analytic first moment and second moment of the mixture, from the
/// empirical mean/covariance of the centers (no sampling).
struct KdeMoments {
  Vector mean;
  Matrix second_moment;
};
KdeMoments analytic_moments(const KdeModel& model);

}  // namespace plom
