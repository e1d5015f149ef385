#include "plom/density.hpp"

#include <cmath>

namespace plom {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::pair<double, double> kde_bandwidths(Index n_samples, Index dim) {
  if (n_samples < 2) throw InvalidParameter("KDE needs at least two samples");
  if (dim < 1) throw InvalidParameter("KDE dimension must be >= 1");
  const double N = double(n_samples);
  const double nu = double(dim);
  const double s = std::pow(4.0 / (N * (2.0 + nu)), 1.0 / (nu + 4.0));
  const double s_hat = s / std::sqrt(s * s + (N - 1.0) / N);
  return {s, s_hat};
}

KdeModel fit_kde(const Matrix& centers) {
  if (!centers.allFinite())
    throw InvalidParameter("KDE centers contain non-finite entries");
  KdeModel model;
  model.centers = centers;
  std::tie(model.s, model.s_hat) =
      kde_bandwidths(centers.cols(), centers.rows());
  return model;
}

double log_pdf(const KdeModel& model, const Vector& point) {
  if (point.size() != model.dim())
    throw DimensionMismatch("KDE query dimension mismatch");
  const double shrink = model.s_hat / model.s;
  const double inv_two_hh = 1.0 / (2.0 * model.s_hat * model.s_hat);
  const Vector sq =
      ((model.centers * shrink).colwise() - point).colwise().squaredNorm();
  const Vector logits = -sq * inv_two_hh;
  const double shift = logits.maxCoeff();
  const double lse = shift + std::log((logits.array() - shift).exp().sum());
  return lse - std::log(double(model.count())) -
         0.5 * double(model.dim()) *
             std::log(kTwoPi * model.s_hat * model.s_hat);
}

double pdf(const KdeModel& model, const Vector& point) {
  return std::exp(log_pdf(model, point));
}

void KdeForceWorkspace::apply(const KdeModel& model, const Matrix& points,
                              Matrix& out) {
  const double shrink = model.s_hat / model.s;
  const double inv_two_hh = 1.0 / (2.0 * model.s_hat * model.s_hat);

  // logits(j, l) = -|shrink*eta_j - u_l|^2 / (2 shat^2), expanded so the
  // cross term is a single GEMM.
  if (cached_model_ != &model) {
    center_sq_ = (model.centers * shrink).colwise().squaredNorm();
    cached_model_ = &model;
  }
  logits_.noalias() = (2.0 * shrink) * (model.centers.transpose() * points);
  logits_.colwise() -= center_sq_;
  logits_.rowwise() -= points.colwise().squaredNorm();
  logits_ *= inv_two_hh;

  // Column-wise softmax with max shift, then the weighted center average.
  for (Index l = 0; l < points.cols(); ++l) {
    auto col = logits_.col(l).array();
    col = (col - col.maxCoeff()).exp();
    col /= col.sum();
  }
  out.noalias() = (shrink * model.centers) * logits_;
  out -= points;
  out *= 1.0 / (model.s_hat * model.s_hat);
}

Matrix force_batch(const KdeModel& model, const Matrix& points) {
  if (points.rows() != model.dim())
    throw DimensionMismatch("KDE query dimension mismatch");
  KdeForceWorkspace ws;
  Matrix out(points.rows(), points.cols());
  ws.apply(model, points, out);
  return out;
}

Vector force(const KdeModel& model, const Vector& point) {
  return force_batch(model, point);
}

double joint_log_density(const KdeModel& model, const Matrix& samples) {
  double total = 0.0;
  for (Index l = 0; l < samples.cols(); ++l)
    total += log_pdf(model, samples.col(l));
  return total;
}

KdeMoments analytic_moments(const KdeModel& model) {
  const Index N = model.count();
  const double shrink = model.s_hat / model.s;
  const Vector center_mean = model.centers.rowwise().mean();
  const Matrix centered = model.centers.colwise() - center_mean;
  const Matrix center_cov =
      (centered * centered.transpose()) / double(N - 1);

  KdeMoments moments;
  moments.mean = shrink * center_mean;
  moments.second_moment =
      model.s_hat * model.s_hat *
          Matrix::Identity(model.dim(), model.dim()) +
      (shrink * shrink) * (double(N - 1) / double(N)) * center_cov +
      moments.mean * moments.mean.transpose();
  return moments;
}

}  // namespace plom
