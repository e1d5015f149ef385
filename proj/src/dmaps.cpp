#include "plom/dmaps.hpp"

#include "plom/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace plom {

Matrix DmapsModel::selected_coordinates() const {
  Matrix out(coordinates.rows(), Index(selected.size()));
  for (Index k = 0; k < out.cols(); ++k)
    out.col(k) = coordinates.col(selected[std::size_t(k)]);
  return out;
}

double epsilon_from_median(const Matrix& points, double multiplier,
                           MedianConvention convention) {
  if (multiplier <= 0.0) throw InvalidParameter("multiplier must be > 0");
  if (points.cols() < 2)
    throw InvalidParameter("need at least two points");
  const Matrix d2 = pairwise_squared_distances(points);
  const double med2 = median_offdiagonal(d2);
  if (med2 <= 0.0)
    throw InvalidParameter("all points coincide; kernel scale undefined");
  if (convention == MedianConvention::distances_then_square) {
    // Multiplier acts on the distance scale before squaring.
    const double scaled = multiplier * std::sqrt(med2);
    return scaled * scaled;
  }
  return multiplier * med2;
}

Matrix kernel_matrix(const Matrix& points, double epsilon,
                     KernelDenominator denominator) {
  if (epsilon <= 0.0) throw InvalidParameter("epsilon must be > 0");
  const double c =
      (denominator == KernelDenominator::four_eps ? 4.0 : 2.0) * epsilon;
  Matrix k = pairwise_squared_distances(points);
  k = (-k.array() / c).exp();
  k.diagonal().setOnes();
  return k;
}

MarkovOperators normalize_markov(const Matrix& kernel, double alpha_norm) {
  const Index N = kernel.rows();
  if (kernel.cols() != N) throw InvalidParameter("kernel must be square");
  if (alpha_norm < 0.0 || alpha_norm > 1.0)
    throw InvalidParameter("alpha_norm must lie in [0, 1]");

  MarkovOperators ops;
  ops.b_diag = kernel.rowwise().sum();
  if ((ops.b_diag.array() <= 0.0).any())
    throw NumericalFailure("kernel has a non-positive row sum");

  if (alpha_norm == 0.0) {
    ops.ktilde = kernel;
  } else {
    const Vector w = ops.b_diag.array().pow(alpha_norm);
    ops.ktilde.resize(N, N);
    for (Index j = 0; j < N; ++j) {
      for (Index i = 0; i <= j; ++i) {
        const double v = kernel(i, j) / (w(i) * w(j));
        ops.ktilde(i, j) = v;
        ops.ktilde(j, i) = v;
      }
    }
  }

  ops.d_diag = ops.ktilde.rowwise().sum();
  if ((ops.d_diag.array() <= 0.0).any())
    throw NumericalFailure("normalized kernel has a non-positive row sum");

  ops.p = ops.d_diag.cwiseInverse().asDiagonal() * ops.ktilde;
  const Vector sd = ops.d_diag.cwiseSqrt();
  ops.ps.resize(N, N);
  for (Index j = 0; j < N; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const double v = ops.ktilde(i, j) / (sd(i) * sd(j));
      ops.ps(i, j) = v;
      ops.ps(j, i) = v;
    }
  }
  return ops;
}

namespace {

void fix_sign(Eigen::Ref<Matrix> vectors) {
  for (Index k = 0; k < vectors.cols(); ++k) {
    Index at = 0;
    vectors.col(k).cwiseAbs().maxCoeff(&at);
    if (vectors(at, k) < 0.0) vectors.col(k) = -vectors.col(k);
  }
}

double int_pow(double x, int n) {
  double out = 1.0;
  for (int i = 0; i < n; ++i) out *= x;
  return out;
}

}  // namespace

std::pair<Vector, Matrix> spectral_decompose(const Matrix& ps, Index m_max) {
  if (m_max < 1) throw InvalidParameter("m_max must be >= 1");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(ps);
  if (solver.info() != Eigen::Success)
    throw NumericalFailure("eigendecomposition of the Markov operator failed");
  const Index m = std::min(m_max, ps.rows());
  Vector values = solver.eigenvalues().tail(m).reverse();
  Matrix vectors = solver.eigenvectors().rightCols(m).rowwise().reverse();
  fix_sign(vectors);
  return {std::move(values), std::move(vectors)};
}

Matrix diffusion_coordinates(const Vector& eigenvalues,
                             const Matrix& eigenvectors,
                             const Vector& scale_diag, int kappa) {
  if (kappa < 0) throw InvalidParameter("kappa must be >= 0");
  if (eigenvectors.rows() != scale_diag.size())
    throw DimensionMismatch("scale diagonal length mismatch");
  if ((scale_diag.array() <= 0.0).any())
    throw NumericalFailure("non-positive scaling diagonal");
  Matrix g = scale_diag.array().rsqrt().matrix().asDiagonal() * eigenvectors;
  for (Index k = 0; k < g.cols(); ++k)
    g.col(k) *= int_pow(eigenvalues(k), kappa);
  return g;
}

Vector parsimonious_residuals(const Matrix& eigvecs,
                              double bandwidth_factor) {
  const Index N = eigvecs.rows();
  const Index K = eigvecs.cols();
  if (K < 1) throw InvalidParameter("need at least one eigenvector");
  if (K > 1 && N < 3)
    throw InvalidParameter("need at least three samples to regress");
  if (bandwidth_factor <= 0.0)
    throw InvalidParameter("bandwidth factor must be > 0");

  constexpr double kRidge = 1e-10;
  Vector r(K);
  r(0) = 1.0;  // first non-trivial direction is new by convention

  Matrix dist2 = Matrix::Zero(N, N);
  Matrix weights(N, N);
  Vector errors(N);
  Vector supported(N);

  for (Index p = 1; p < K; ++p) {
    // Predictor space gains one coordinate per step.
    const Vector& added = eigvecs.col(p - 1);
    for (Index j = 0; j < N; ++j) {
      for (Index i = 0; i < j; ++i) {
        const double diff = added(i) - added(j);
        const double v = dist2(i, j) + diff * diff;
        dist2(i, j) = v;
        dist2(j, i) = v;
      }
    }

    const double med2 = median_offdiagonal(dist2);
    if (med2 <= 0.0)
      throw NumericalFailure("predictor coordinates have zero spread");
    const double h = bandwidth_factor * std::sqrt(med2);
    weights = (-dist2.array() / (h * h)).exp();

    const Index q = p + 1;  // intercept + p predictors
    Matrix design(N, q);
    design.col(0).setOnes();
    design.rightCols(p) = eigvecs.leftCols(p);
    const Vector& target = eigvecs.col(p);
    // A point whose neighborhood cannot support a q-coefficient fit gets no
    // meaningful leave-one-out estimate (isolated points in the sampling
    // tails); such points are excluded from both cross-validation sums.
    const double min_ess = double(q) + 1.0;

#pragma omp parallel
    {
      Matrix weighted(N, q);
      Matrix normal(q, q);
      Vector rhs(q), beta(q);
#pragma omp for schedule(static)
      for (Index i = 0; i < N; ++i) {
        // Effective neighborhood size, leaving i itself out (w_ii = 1).
        const auto& w = weights.col(i);
        const double w_sum = w.sum() - 1.0;
        const double w_sq = w.squaredNorm() - 1.0;
        supported(i) =
            (w_sq > 0.0 && w_sum * w_sum / w_sq >= min_ess) ? 1.0 : 0.0;
        if (supported(i) == 0.0) {
          errors(i) = 0.0;
          continue;
        }
        weighted = w.asDiagonal() * design;
        normal.noalias() = design.transpose() * weighted;
        rhs.noalias() = weighted.transpose() * target;
        normal.noalias() -= design.row(i).transpose() * design.row(i);
        rhs.noalias() -= design.row(i).transpose() * target(i);
        normal.diagonal().array() += kRidge;
        beta = normal.ldlt().solve(rhs);
        errors(i) = target(i) - design.row(i).dot(beta);
      }
    }
    const double denom =
        (target.array().square() * supported.array()).sum();
    if (denom <= 0.0)
      throw NumericalFailure(
          "no supported points left in residual computation");
    r(p) = std::sqrt(errors.squaredNorm() / denom);
  }
  return r;
}

std::vector<Index> select_nonharmonic(const Vector& residuals,
                                      const SelectionStrategy& strategy) {
  const Index K = residuals.size();
  if (K < 1) throw InvalidParameter("empty residual vector");

  std::vector<Index> picked;
  if (strategy.kind == SelectionStrategy::Kind::top_m) {
    if (strategy.m < 1 || strategy.m > K)
      throw InvalidParameter("top_m = " + std::to_string(strategy.m) +
                             " outside [1, " + std::to_string(K) + "]");
    std::vector<Index> order(static_cast<std::size_t>(K), Index(0));
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return residuals(a) > residuals(b);
    });
    picked.assign(order.begin(), order.begin() + strategy.m);
    std::sort(picked.begin(), picked.end());
  } else {
    if (strategy.theta <= 0.0 || strategy.theta > 1.0)
      throw InvalidParameter("ratio threshold must lie in (0, 1]");
    const double cut = strategy.theta * residuals.maxCoeff();
    for (Index k = 0; k < K; ++k)
      if (residuals(k) >= cut) picked.push_back(k);
  }
  return picked;
}

DmapsModel fit_dmaps(const Matrix& points, const DmapsConfig& config) {
  if (points.cols() < 2)
    throw InvalidParameter("diffusion maps needs at least two samples");
  if (config.m_max < 2) throw InvalidParameter("m_max must be >= 2");

  DmapsModel model;
  model.config = config;
  model.epsilon =
      config.epsilon_override > 0.0
          ? config.epsilon_override
          : epsilon_from_median(points, config.epsilon_multiplier,
                                config.median_convention);

  const Matrix kernel =
      kernel_matrix(points, model.epsilon, config.denominator);
  MarkovOperators ops = normalize_markov(kernel, config.alpha_norm);
  model.b_diag = std::move(ops.b_diag);
  model.d_diag = std::move(ops.d_diag);

  const Index m = std::min(config.m_max, points.cols());
  std::tie(model.eigenvalues, model.eigenvectors) =
      spectral_decompose(ops.ps, m);
  const Vector& scale = config.coord_scaling == CoordinateScaling::b_diag
                            ? model.b_diag
                            : model.d_diag;
  model.coordinates = diffusion_coordinates(model.eigenvalues,
                                            model.eigenvectors, scale,
                                            config.kappa);

  const Vector nontrivial = parsimonious_residuals(
      model.eigenvectors.rightCols(m - 1), config.regression_bandwidth_factor);
  model.residuals.resize(m);
  model.residuals(0) = 0.0;
  model.residuals.tail(m - 1) = nontrivial;

  model.selected.clear();
  for (Index k : select_nonharmonic(nontrivial, config.selection))
    model.selected.push_back(k + 1);
  return model;
}

}  // namespace plom
