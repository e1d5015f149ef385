#include "plom/pipeline.hpp"

#include "plom/kernels.hpp"
#include "plom/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace plom {

namespace {

template <typename F>
decltype(auto) stage(const char* name, F&& f) {
  try {
    return std::forward<F>(f)();
  } catch (Error& e) {
    e.set_stage(name);
    throw;
  }
}

std::vector<Index> resolve_input_rows(const DataMatrix& data,
                                      const FitConfig& config) {
  std::vector<Index> rows = config.input_rows;
  if (rows.empty() && config.detect_input_rows)
    rows = input_row_indices(data);
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  for (Index r : rows)
    if (r < 0 || r >= data.features())
      throw InvalidParameter("input row " + std::to_string(r) +
                             " out of range");
  if (Index(rows.size()) >= data.features())
    throw InvalidParameter("every row is marked as an input; nothing left "
                           "to embed");
  return rows;
}

Matrix select_rows(const Matrix& values, const std::vector<Index>& rows) {
  Matrix out(Index(rows.size()), values.cols());
  for (Index i = 0; i < out.rows(); ++i)
    out.row(i) = values.row(rows[std::size_t(i)]);
  return out;
}

Vector r_squared(const Matrix& truth, const Matrix& predicted) {
  Vector r2(truth.rows());
  for (Index p = 0; p < truth.rows(); ++p) {
    const double mean = truth.row(p).mean();
    const double total = (truth.row(p).array() - mean).square().sum();
    const double resid =
        (truth.row(p) - predicted.row(p)).array().square().sum();
    r2(p) = total > 0.0 ? 1.0 - resid / total : 1.0;
  }
  return r2;
}

}  // namespace

std::vector<Index> GhPlomModel::embedded_rows() const {
  std::vector<Index> rows;
  for (Index i = 0; i < training.features(); ++i)
    if (std::find(input_rows.begin(), input_rows.end(), i) ==
        input_rows.end())
      rows.push_back(i);
  return rows;
}

LatentWhitening fit_whitening(const Matrix& columns) {
  const Index N = columns.cols();
  if (N < 2) throw InvalidParameter("whitening needs at least two samples");

  LatentWhitening w;
  w.mean = columns.rowwise().mean();
  const Matrix centered = columns.colwise() - w.mean;

  // SVD of the centered data rather than an eigensolve of the covariance:
  // the whitened sample covariance is then orthonormal-exact even when the
  // coordinates differ in scale by orders of magnitude.
  Eigen::BDCSVD<Matrix> svd(centered,
                            Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector sv = svd.singularValues();
  if (sv.size() < columns.rows() ||
      sv.minCoeff() <= 1e-14 * sv.maxCoeff())
    throw NumericalFailure(
        "latent covariance is singular; a selected coordinate has no spread");
  const double scale = std::sqrt(double(N - 1));
  w.forward = scale * sv.cwiseInverse().asDiagonal() *
              svd.matrixU().transpose();
  w.inverse = svd.matrixU() * (sv / scale).asDiagonal();
  return w;
}

Matrix whiten(const LatentWhitening& w, const Matrix& columns) {
  if (columns.rows() != w.mean.size())
    throw DimensionMismatch("whitening dimension mismatch");
  return w.forward * (columns.colwise() - w.mean);
}

Matrix unwhiten(const LatentWhitening& w, const Matrix& columns) {
  if (columns.rows() != w.mean.size())
    throw DimensionMismatch("whitening dimension mismatch");
  return (w.inverse * columns).colwise() + w.mean;
}

GhPlomModel fit(const DataMatrix& data, const FitConfig& config) {
  validate(data);
  if (data.samples() < 10)
    throw InvalidParameter("fit needs at least 10 samples");

  GhPlomModel model;
  model.variant = ModelVariant::gh_plom;
  model.training = data;
  model.config = config;
  model.input_rows = resolve_input_rows(data, config);

  DataMatrix scaled;
  stage("scaling", [&] {
    std::tie(scaled, model.scaling) = minmax_scale(data, config.eps_s);
  });

  const Matrix embedded =
      select_rows(scaled.values, model.embedded_rows());
  Matrix points = embedded;
  if (config.use_pca) {
    stage("pca", [&] {
      model.pca = fit_pca(embedded, config.pca_retention);
      points = project(*model.pca, embedded);
    });
  }

  stage("dmaps", [&] { model.dmaps = fit_dmaps(points, config.dmaps); });
  if (model.dmaps.selected.empty())
    throw NumericalFailure("no non-harmonic coordinate was selected");

  const Matrix latents = model.dmaps.selected_coordinates();  // N x m
  const Matrix latent_cols = latents.transpose();             // m x N

  stage("latent_whitening", [&] {
    if (config.whiten_latents) {
      model.whitening = fit_whitening(latent_cols);
    } else {
      const Index m = latent_cols.rows();
      model.whitening.mean = Vector::Zero(m);
      model.whitening.forward = Matrix::Identity(m, m);
      model.whitening.inverse = Matrix::Identity(m, m);
    }
  });

  stage("kde", [&] {
    model.kde = fit_kde(whiten(model.whitening, latent_cols));
  });

  // Lift target: the scaled rows directly, or the PCA coordinates with the
  // scaled input rows appended when PCA preprocessing is active.
  Matrix lift_outputs;
  if (config.use_pca) {
    const Matrix eta = points;
    lift_outputs.resize(eta.rows() + Index(model.input_rows.size()),
                        eta.cols());
    lift_outputs.topRows(eta.rows()) = eta;
    lift_outputs.bottomRows(Index(model.input_rows.size())) =
        select_rows(scaled.values, model.input_rows);
  } else {
    lift_outputs = scaled.values;
  }

  stage("lift", [&] {
    model.lift = fit_lift(latents, lift_outputs, config.gh_eps2_factor,
                          config.gh_delta);
  });

  model.summary.selected = model.dmaps.selected;
  for (auto& idx : model.summary.selected) idx += 1;  // 1-based, matches CLI
  model.summary.epsilon = model.dmaps.epsilon;
  model.summary.eigenvalues = model.dmaps.eigenvalues;
  model.summary.residuals =
      model.dmaps.residuals.tail(model.dmaps.mode_count() - 1);

  stage("lift_validation", [&] {
    model.summary.gh_r2_train = r_squared(
        lift_outputs, evaluate_batch(model.lift, latent_cols));
    const Index N = data.samples();
    const Index n_test = Index(std::floor(config.gh_validation_fraction *
                                          double(N)));
    if (n_test >= 3 && N - n_test >= 3) {
      std::vector<Index> order(static_cast<std::size_t>(N), Index(0));
      std::iota(order.begin(), order.end(), Index(0));
      RngStream shuffle(config.seed, "gh.split");
      for (Index i = N - 1; i > 0; --i) {
        const Index j = Index(shuffle.next_u64() % std::uint64_t(i + 1));
        std::swap(order[std::size_t(i)], order[std::size_t(j)]);
      }
      Matrix train_in(N - n_test, latents.cols());
      Matrix train_out(N - n_test, lift_outputs.rows());
      Matrix test_in(n_test, latents.cols());
      Matrix test_out(lift_outputs.rows(), n_test);
      for (Index i = 0; i < N - n_test; ++i) {
        train_in.row(i) = latents.row(order[std::size_t(i)]);
        train_out.row(i) =
            lift_outputs.col(order[std::size_t(i)]).transpose();
      }
      for (Index i = 0; i < n_test; ++i) {
        test_in.row(i) = latents.row(order[std::size_t(N - n_test + i)]);
        test_out.col(i) = lift_outputs.col(order[std::size_t(N - n_test + i)]);
      }
      const Matrix d2 = pairwise_squared_distances(train_in.transpose());
      const double med2 = median_offdiagonal(d2);
      GhInterpolant held_out = fit_gh(train_in, train_out,
                                      config.gh_eps2_factor * med2,
                                      config.gh_delta);
      model.summary.gh_r2_test =
          r_squared(test_out, evaluate_batch(held_out, test_in.transpose()));
    }
  });

  return model;
}

GhPlomModel fit_classic(const DataMatrix& data, const FitConfig& config) {
  validate(data);
  if (data.samples() < 10)
    throw InvalidParameter("fit needs at least 10 samples");

  GhPlomModel model;
  model.variant = ModelVariant::classic;
  model.training = data;
  model.config = config;
  model.input_rows = resolve_input_rows(data, config);

  DataMatrix scaled;
  stage("scaling", [&] {
    std::tie(scaled, model.scaling) = minmax_scale(data, config.eps_s);
  });

  Matrix eta;
  stage("pca", [&] {
    model.pca = fit_pca(scaled.values, config.pca_retention);
    eta = project(*model.pca, scaled.values);
  });

  stage("kde", [&] { model.kde = fit_kde(eta); });

  stage("dmaps", [&] { model.dmaps = fit_dmaps(eta, config.dmaps); });

  stage("basis", [&] {
    Index m = config.classic_m;
    if (m <= 0) {
      // Keep leading coordinates while the spectrum is above the decay
      // threshold relative to the first non-trivial eigenvalue.
      const Vector& lambda = model.dmaps.eigenvalues;
      m = 1;
      if (lambda.size() > 1) {
        const double cut = config.classic_decay * lambda(1);
        for (Index k = 1; k < lambda.size() && lambda(k) >= cut; ++k) ++m;
      }
    }
    m = std::min(m, model.dmaps.mode_count());
    model.basis =
        ReducedBasis::from_g(model.dmaps.coordinates.leftCols(m));
  });

  model.summary.selected = model.dmaps.selected;
  for (auto& idx : model.summary.selected) idx += 1;
  model.summary.epsilon = model.dmaps.epsilon;
  model.summary.eigenvalues = model.dmaps.eigenvalues;
  model.summary.residuals =
      model.dmaps.residuals.tail(model.dmaps.mode_count() - 1);
  return model;
}

namespace {

IsdeConfig sampling_config(const GhPlomModel& model, Index n_mc,
                           std::uint64_t seed, const IsdeConfig* overrides) {
  IsdeConfig cfg = overrides ? *overrides : IsdeConfig{};
  cfg.n_mc = n_mc;
  cfg.seed = seed;
  (void)model;
  return cfg;
}

DataMatrix finish_sample(const GhPlomModel& model, const Matrix& scaled_rows) {
  DataMatrix out;
  out.values = invert_scaling(model.scaling, scaled_rows);
  out.feature_labels = model.training.feature_labels;
  return out;
}

}  // namespace

namespace {

// Moment-identity gate: with whitened centers the mixture must have zero
// mean and identity second moment before any sampling starts.
void require_kde_moments(const KdeModel& kde) {
  const KdeMoments moments = analytic_moments(kde);
  const double mean_err = moments.mean.cwiseAbs().maxCoeff();
  const double cov_err =
      (moments.second_moment - Matrix::Identity(kde.dim(), kde.dim()))
          .cwiseAbs()
          .maxCoeff();
  if (mean_err > 1e-10 || cov_err > 1e-8)
    throw NumericalFailure(
        "latent KDE moment identities violated (mean " +
        std::to_string(mean_err) + ", second moment " +
        std::to_string(cov_err) + ")");
}

}  // namespace

std::vector<DataMatrix> generate(const GhPlomModel& model, Index n_mc,
                                 std::uint64_t seed,
                                 const IsdeConfig* overrides) {
  if (model.variant != ModelVariant::gh_plom)
    throw InvalidParameter("model is a classic baseline; use generate_classic");
  if (!model.lift.fitted()) throw NotFitted("model has no fitted lift");
  if (model.config.whiten_latents)
    stage("moment_gate", [&] { require_kde_moments(model.kde); });

  const IsdeConfig cfg = sampling_config(model, n_mc, seed, overrides);
  const auto latent_samples = stage("isde", [&] {
    return simulate_full(model.kde, cfg);
  });

  std::vector<DataMatrix> out;
  out.reserve(latent_samples.size());
  const Index n = model.training.features();
  for (const Matrix& whitened : latent_samples) {
    const Matrix latents = unwhiten(model.whitening, whitened);  // m x N
    const Matrix lifted = evaluate_batch(model.lift, latents);
    Matrix scaled_rows;
    if (model.pca) {
      const Index nu = model.pca->nu();
      const auto embedded = model.embedded_rows();
      scaled_rows.resize(n, lifted.cols());
      const Matrix recon = reconstruct(*model.pca, lifted.topRows(nu));
      for (Index i = 0; i < Index(embedded.size()); ++i)
        scaled_rows.row(embedded[std::size_t(i)]) = recon.row(i);
      for (Index i = 0; i < Index(model.input_rows.size()); ++i)
        scaled_rows.row(model.input_rows[std::size_t(i)]) =
            lifted.row(nu + i);
    } else {
      scaled_rows = lifted;
    }
    out.push_back(finish_sample(model, scaled_rows));
  }
  return out;
}

std::vector<DataMatrix> generate_classic(const GhPlomModel& model, Index n_mc,
                                         std::uint64_t seed,
                                         const IsdeConfig* overrides) {
  if (model.variant != ModelVariant::classic)
    throw InvalidParameter("model is not a classic baseline");
  if (!model.pca) throw NotFitted("classic model has no PCA stage");

  const IsdeConfig cfg = sampling_config(model, n_mc, seed, overrides);
  const auto reduced = stage("isde", [&] {
    return simulate_reduced(model.kde, model.basis, cfg);
  });

  std::vector<DataMatrix> out;
  out.reserve(reduced.size());
  for (const Matrix& z : reduced) {
    const Matrix eta = z * model.basis.g.transpose();
    out.push_back(finish_sample(model, reconstruct(*model.pca, eta)));
  }
  return out;
}

Matrix conditional_expectation(const std::vector<DataMatrix>& samples,
                               const std::vector<Index>& input_rows,
                               const Matrix& grid, double bandwidth) {
  if (samples.empty()) throw InvalidParameter("no sample matrices given");
  if (bandwidth <= 0.0) throw InvalidParameter("bandwidth must be > 0");
  if (input_rows.empty()) throw InvalidParameter("no conditioning rows");
  if (grid.rows() != Index(input_rows.size()))
    throw DimensionMismatch("grid dimension does not match input rows");

  const Index n = samples.front().features();
  for (const auto& s : samples)
    if (s.features() != n)
      throw DimensionMismatch("sample matrices disagree on feature count");

  std::vector<Index> output_rows;
  for (Index i = 0; i < n; ++i)
    if (std::find(input_rows.begin(), input_rows.end(), i) ==
        input_rows.end())
      output_rows.push_back(i);

  Index total = 0;
  for (const auto& s : samples) total += s.samples();
  Matrix cond(Index(input_rows.size()), total);
  Matrix values(Index(output_rows.size()), total);
  Index at = 0;
  for (const auto& s : samples) {
    for (Index i = 0; i < Index(input_rows.size()); ++i)
      cond.row(i).segment(at, s.samples()) =
          s.values.row(input_rows[std::size_t(i)]);
    for (Index i = 0; i < Index(output_rows.size()); ++i)
      values.row(i).segment(at, s.samples()) =
          s.values.row(output_rows[std::size_t(i)]);
    at += s.samples();
  }

  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  Matrix out(values.rows(), grid.cols());
  Index failed_at = grid.cols();
#pragma omp parallel for schedule(static)
  for (Index q = 0; q < grid.cols(); ++q) {
    const Eigen::RowVectorXd sq =
        (cond.colwise() - grid.col(q)).colwise().squaredNorm();
    const Vector w = (-sq.transpose().array() * inv).exp();
    const double sum = w.sum();
    if (sum < 1e-12) {
#pragma omp critical
      failed_at = std::min(failed_at, q);
      continue;
    }
    out.col(q) = (values * w) / sum;
  }
  if (failed_at < grid.cols())
    throw InsufficientSupport("no kernel mass at grid point " +
                              std::to_string(failed_at));
  return out;
}

double ks_statistic(const Vector& a, const Vector& b) {
  if (a.size() == 0 || b.size() == 0)
    throw InvalidParameter("empty sample in KS statistic");
  std::vector<double> sa(a.data(), a.data() + a.size());
  std::vector<double> sb(b.data(), b.data() + b.size());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  double sup = 0.0;
  std::size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    sup = std::max(sup, std::abs(double(i) / double(sa.size()) -
                                 double(j) / double(sb.size())));
  }
  return sup;
}

DiagnosticsReport diagnose(const GhPlomModel& model,
                           const std::vector<DataMatrix>& generated) {
  if (generated.empty()) throw InvalidParameter("no generated samples");
  const Index n = model.training.features();
  for (const auto& s : generated)
    if (s.features() != n)
      throw DimensionMismatch("generated sample feature count mismatch");

  Index total = 0;
  for (const auto& s : generated) total += s.samples();
  Matrix pooled(n, total);
  Index at = 0;
  for (const auto& s : generated) {
    pooled.middleCols(at, s.samples()) = s.values;
    at += s.samples();
  }

  DiagnosticsReport report;
  const Matrix& train = model.training.values;
  report.data_mean = train.rowwise().mean();
  report.gen_mean = pooled.rowwise().mean();
  report.data_variance =
      (train.colwise() - report.data_mean).rowwise().squaredNorm() /
      double(train.cols() - 1);
  report.gen_variance =
      (pooled.colwise() - report.gen_mean).rowwise().squaredNorm() /
      double(pooled.cols() - 1);

  report.ks.resize(n);
  for (Index i = 0; i < n; ++i)
    report.ks(i) =
        ks_statistic(train.row(i).transpose(), pooled.row(i).transpose());

  const KdeMoments moments = analytic_moments(model.kde);
  report.latent_mean_error = moments.mean.cwiseAbs().maxCoeff();
  report.latent_cov_error =
      (moments.second_moment -
       Matrix::Identity(model.kde.dim(), model.kde.dim()))
          .cwiseAbs()
          .maxCoeff();

  report.gh_r2_train = model.summary.gh_r2_train;
  report.gh_r2_test = model.summary.gh_r2_test;
  return report;
}

}  // namespace plom
