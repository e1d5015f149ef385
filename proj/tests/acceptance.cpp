// Acceptance suite: one line per criterion, each run at its stated
// tolerance and wall-clock budget. Returns the number of failed criteria.

#include "plom/kernels.hpp"
#include "plom/pipeline.hpp"
#include "plom/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace plom;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

struct Check {
  std::string label;
  bool ok;
};

class Criterion {
 public:
  Criterion(std::string name, double time_limit_s)
      : name_(std::move(name)), limit_(time_limit_s) {}

  void expect(bool ok, const std::string& label) {
    checks_.push_back({label, ok});
  }

  template <typename T>
  void expect_le(T value, T bound, const std::string& label) {
    std::ostringstream text;
    text << label << " (" << value << " <= " << bound << ")";
    expect(value <= bound, text.str());
  }

  template <typename T>
  void expect_ge(T value, T bound, const std::string& label) {
    std::ostringstream text;
    text << label << " (" << value << " >= " << bound << ")";
    expect(value >= bound, text.str());
  }

  bool finish(double elapsed_s) {
    bool ok = true;
    std::string first_failure;
    for (const auto& check : checks_) {
      if (!check.ok && ok) {
        ok = false;
        first_failure = check.label;
      }
    }
    if (limit_ > 0.0 && elapsed_s > limit_) {
      ok = false;
      first_failure = "time limit exceeded (" + std::to_string(elapsed_s) +
                      "s > " + std::to_string(limit_) + "s)";
    }
    std::printf("%s %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", name_.c_str(),
                elapsed_s, ok ? "" : " -- ",
                ok ? "" : first_failure.c_str());
    std::fflush(stdout);
    return ok;
  }

 private:
  std::string name_;
  double limit_;
  std::vector<Check> checks_;
};

int failures = 0;

void run_criterion(const std::string& name, double limit_s,
                   const std::function<void(Criterion&)>& body) {
  Criterion criterion(name, limit_s);
  const auto start = clock_type::now();
  try {
    body(criterion);
  } catch (const std::exception& e) {
    criterion.expect(false, std::string("exception: ") + e.what());
  }
  const double elapsed =
      std::chrono::duration<double>(clock_type::now() - start).count();
  if (!criterion.finish(elapsed)) ++failures;
}

DataMatrix hermite(HermiteDataset id, Index n, double noise,
                   std::uint64_t seed) {
  return generate_hermite_dataset({id, n, noise, seed});
}

// Embedding stages shared by criteria 1-2: scale, embed the feature rows,
// and return the fitted diffusion model.
DmapsModel embed(const DataMatrix& data, const DmapsConfig& config) {
  auto [scaled, record] = minmax_scale(data, 1e-9);
  const auto inputs = input_row_indices(data);
  Matrix points(data.features() - Index(inputs.size()), data.samples());
  Index at = 0;
  for (Index i = 0; i < data.features(); ++i) {
    if (std::find(inputs.begin(), inputs.end(), i) == inputs.end())
      points.row(at++) = scaled.values.row(i);
  }
  return fit_dmaps(points, config);
}

KdeModel latent_kde(const DmapsModel& model) {
  const Matrix latents = model.selected_coordinates().transpose();
  return fit_kde(whiten(fit_whitening(latents), latents));
}

std::vector<double> sorted_desc(const Vector& v) {
  std::vector<double> out(v.data(), v.data() + v.size());
  std::sort(out.rbegin(), out.rend());
  return out;
}

void check_kde_moments(Criterion& criterion, const KdeModel& kde,
                       const std::string& label) {
  const KdeMoments moments = analytic_moments(kde);
  criterion.expect_le(moments.mean.cwiseAbs().maxCoeff(), 1e-10,
                      label + " mixture mean");
  criterion.expect_le(
      (moments.second_moment -
       Matrix::Identity(kde.dim(), kde.dim())).cwiseAbs().maxCoeff(),
      1e-8, label + " second moment vs identity");
}

// Fit configuration used by the D7 lift criteria: the spectrum/residual
// settings are the library defaults; the lift needs the tighter spectral
// threshold and a wider latent kernel at these sample sizes.
FitConfig d7_fit_config() {
  FitConfig config;
  config.dmaps.m_max = 10;
  config.gh_delta = 1e-6;
  config.gh_eps2_factor = 2.0;
  config.gh_validation_fraction = 0.2;
  config.seed = 1;
  return config;
}

// Normalized tensor-product basis values for a family at given inputs.
Matrix analytic_basis(HermiteDataset id, const Matrix& inputs /* 2 x Q */) {
  const auto basis = hermite_basis_indices(id);
  Matrix values(Index(basis.size()), inputs.cols());
  for (Index q = 0; q < inputs.cols(); ++q)
    for (std::size_t k = 0; k < basis.size(); ++k)
      values(Index(k), q) =
          normalized_hermite(basis[k][0], inputs(0, q)) *
          normalized_hermite(basis[k][1], inputs(1, q));
  return values;
}

double rmse(const Matrix& a, const Matrix& b) {
  return std::sqrt((a - b).squaredNorm() / double(a.size()));
}

// Shared artifacts between criteria.
std::vector<KdeModel> fitted_kdes;
std::vector<std::string> fitted_labels;
GhPlomModel d7_model;  // criterion 4 fit, reused nowhere else

}  // namespace

int main() {
  std::printf("acceptance suite\n");

  run_criterion("criterion 1: D0 intrinsic dimension = 1", 120.0,
                [](Criterion& c) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const DmapsModel model =
          embed(hermite(HermiteDataset::d0, 2000, 0.05, seed), DmapsConfig{});
      const std::string tag = "seed " + std::to_string(seed);
      c.expect(model.selected.size() == 1,
               tag + ": exactly one selected coordinate (got " +
                   std::to_string(model.selected.size()) + ")");
      const auto r = sorted_desc(model.residuals.tail(9));
      c.expect_ge(r[0] / r[1], 3.0, tag + ": r_max / r_second");
      fitted_kdes.push_back(latent_kde(model));
      fitted_labels.push_back("D0 " + tag);
    }
  });

  run_criterion("criterion 2: D1-D3 intrinsic dimension = 2", 300.0,
                [](Criterion& c) {
    for (auto id : {HermiteDataset::d1, HermiteDataset::d2,
                    HermiteDataset::d3}) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const DmapsModel model =
            embed(hermite(id, 2000, 0.05, seed), DmapsConfig{});
        const std::string tag =
            hermite_dataset_name(id) + " seed " + std::to_string(seed);
        const auto r = sorted_desc(model.residuals.tail(9));
        c.expect_ge(r[0] / r[2], 2.0, tag + ": top residual vs third");
        c.expect_ge(r[1] / r[2], 2.0, tag + ": second residual vs third");
        fitted_kdes.push_back(latent_kde(model));
        fitted_labels.push_back(hermite_dataset_name(id) + " " + tag);
      }
    }
  });

  run_criterion("criterion 3: PCA non-reducibility of D7", 30.0,
                [](Criterion& c) {
    const DataMatrix data = hermite(HermiteDataset::d7, 10000, 0.05, 1);
    // Per-feature standardization first: the claim is about correlation
    // structure, and the heavy-tailed quartic rows otherwise let a single
    // extreme draw dominate the raw covariance.
    Matrix features = data.values.topRows(9);
    for (Index i = 0; i < features.rows(); ++i) {
      features.row(i).array() -= features.row(i).mean();
      features.row(i) /= std::sqrt(features.row(i).squaredNorm() /
                                   double(features.cols() - 1));
    }
    const PcaModel pca = fit_pca(features, PcaRetention{9, 1.0});
    const Vector ratios = pca.explained_variance_ratio();
    for (Index k = 0; k < ratios.size(); ++k) {
      c.expect(ratios(k) >= 0.05 && ratios(k) <= 0.20,
               "explained-variance ratio " + std::to_string(k + 1) + " in "
               "[0.05, 0.20] (got " + std::to_string(ratios(k)) + ")");
    }
    fitted_kdes.push_back(fit_kde(project(pca, features)));
    fitted_labels.push_back("D7 PCA coordinates");
  });

  run_criterion("criterion 4: GH lift accuracy on D7", 180.0,
                [](Criterion& c) {
    const DataMatrix data = hermite(HermiteDataset::d7, 4000, 0.05, 1);
    d7_model = fit(data, d7_fit_config());
    c.expect(d7_model.summary.gh_r2_test.size() >= 9,
             "held-out split evaluated");
    for (Index k = 0; k < 9; ++k)
      c.expect_ge(d7_model.summary.gh_r2_test(k), 0.95,
                  "test R^2, output " + std::to_string(k + 1));
    fitted_kdes.push_back(d7_model.kde);
    fitted_labels.push_back("D7 lift model");
  });

  run_criterion("criterion 5: KDE moment identities for fitted models", 0.0,
                [](Criterion& c) {
    for (std::size_t k = 0; k < fitted_kdes.size(); ++k)
      check_kde_moments(c, fitted_kdes[k], fitted_labels[k]);
  });

  run_criterion("criterion 6: full-order sampler stationarity", 120.0,
                [](Criterion& c) {
    Matrix cloud = RngStream(1, "acceptance.cloud").normal_matrix(2, 500);
    const KdeModel kde = fit_kde(whiten(fit_whitening(cloud), cloud));

    IsdeConfig config;
    config.n_mc = 100;
    config.seed = 1;
    const auto samples = simulate_full(kde, config);

    Matrix pooled(2, Index(samples.size()) * 500);
    for (std::size_t k = 0; k < samples.size(); ++k)
      pooled.middleCols(Index(k) * 500, 500) = samples[k];
    const Vector mean = pooled.rowwise().mean();
    const Matrix centered = pooled.colwise() - mean;
    const Matrix cov =
        (centered * centered.transpose()) / double(pooled.cols() - 1);

    c.expect_le(mean.cwiseAbs().maxCoeff(), 0.1, "pooled |mean|");
    c.expect_le((cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 0.15,
                "pooled covariance vs analytic");
  });

  run_criterion("criterion 7: denoising by ensemble conditioning", 600.0,
                [](Criterion& c) {
    const DataMatrix data = hermite(HermiteDataset::d7, 2000, 0.1, 1);
    const GhPlomModel model = fit(data, d7_fit_config());
    const auto samples = generate(model, 100, 2);

    // 21 x 21 grid over [-2, 2]^2.
    Matrix grid(2, 441);
    Index at = 0;
    for (int i = 0; i <= 20; ++i)
      for (int j = 0; j <= 20; ++j)
        grid.col(at++) << -2.0 + 0.2 * i, -2.0 + 0.2 * j;

    const std::vector<Index> inputs{9, 10};
    const double bandwidth = 0.2;
    const Matrix cond_gen =
        conditional_expectation(samples, inputs, grid, bandwidth);
    const Matrix cond_raw =
        conditional_expectation({data}, inputs, grid, bandwidth);
    const Matrix truth = analytic_basis(HermiteDataset::d7, grid);

    const double rmse_gen = rmse(cond_gen, truth);
    const double rmse_raw = rmse(cond_raw, truth);
    std::printf("  conditional RMSE: generated ensemble %.4f, raw data %.4f"
                " (pointwise raw noise level %.4f)\n",
                rmse_gen, rmse_raw, 0.1);
    c.expect(rmse_gen < rmse_raw,
             "ensemble conditional RMSE below the raw-data RMSE (" +
                 std::to_string(rmse_gen) + " vs " +
                 std::to_string(rmse_raw) + ")");
  });

  run_criterion("criterion 8: oracle equivalences", 0.0, [](Criterion& c) {
    {  // 2-point Markov normalization closed form
      Matrix points(1, 2);
      points << 0.0, 2.0;
      const double eps = 1.0;
      const double a = std::exp(-4.0 / (4.0 * eps));
      const Matrix kernel = kernel_matrix(points, eps);
      const MarkovOperators ops = normalize_markov(kernel, 1.0);
      const auto [lambda, phi] = spectral_decompose(ops.ps, 2);
      c.expect_le(std::abs(lambda(0) - 1.0), 1e-12, "2-point lambda_1");
      c.expect_le(std::abs(lambda(1) - (1.0 - a) / (1.0 + a)), 1e-12,
                  "2-point lambda_2 vs closed form");
    }
    {  // force vs central finite differences
      RngStream rng(3, "acceptance.fd");
      const KdeModel kde = fit_kde(rng.normal_matrix(2, 30));
      double worst = 0.0;
      for (int t = 0; t < 100; ++t) {
        Vector u(2);
        u << 1.5 * rng.normal(), 1.5 * rng.normal();
        Vector fd(2);
        Vector probe = u;
        for (Index i = 0; i < 2; ++i) {
          probe(i) = u(i) + 1e-5;
          const double above = log_pdf(kde, probe);
          probe(i) = u(i) - 1e-5;
          const double below = log_pdf(kde, probe);
          probe(i) = u(i);
          fd(i) = (above - below) / 2e-5;
        }
        worst = std::max(worst,
                         (force(kde, u) - fd).cwiseAbs().maxCoeff());
      }
      c.expect_le(worst, 1e-6, "force vs finite differences, 100 queries");
    }
    {  // reduced ISDE with the identity basis matches the full sampler
      RngStream rng(4, "acceptance.identity");
      Matrix centers = rng.normal_matrix(2, 60);
      centers.colwise() -= Vector(centers.rowwise().mean());
      const KdeModel kde = fit_kde(centers);
      IsdeConfig config;
      config.burn_in = 25;
      config.stride = 10;
      config.n_mc = 5;
      config.seed = 11;
      const auto full = simulate_full(kde, config);
      const auto reduced = simulate_reduced(
          kde, ReducedBasis::from_g(Matrix::Identity(60, 60)), config);
      bool identical = full.size() == reduced.size();
      for (std::size_t k = 0; identical && k < full.size(); ++k)
        identical = full[k] == reduced[k];
      c.expect(identical, "identity-basis reduced sampler bit-equal to full");
    }
  });

  run_criterion("criterion 9: structural invariant suite", 0.0,
                [](Criterion& c) {
    const DataMatrix data = hermite(HermiteDataset::d1, 300, 0.05, 7);
    auto [scaled, record] = minmax_scale(data, 1e-9);

    {  // scaling round trip
      const Matrix back = invert_scaling(record, scaled.values);
      const double rel = (back - data.values).cwiseAbs().maxCoeff() /
                         data.values.cwiseAbs().maxCoeff();
      c.expect_le(rel, 1e-9, "scaling round trip");
    }
    {  // PCA round trip at full rank
      const PcaModel pca =
          fit_pca(data.values, PcaRetention{data.features(), 1.0});
      const Matrix back = reconstruct(pca, project(pca, data.values));
      const double rel = (back - data.values).cwiseAbs().maxCoeff() /
                         data.values.cwiseAbs().maxCoeff();
      c.expect_le(rel, 1e-9, "PCA round trip");
    }

    const Matrix points = scaled.values.topRows(3);
    const Matrix kernel =
        kernel_matrix(points, epsilon_from_median(points, 15.0));
    const MarkovOperators ops = normalize_markov(kernel, 1.0);
    c.expect_le((ops.p.rowwise().sum().array() - 1.0).abs().maxCoeff(),
                1e-12, "row stochasticity");
    c.expect_le((ops.ps - ops.ps.transpose()).cwiseAbs().maxCoeff(), 1e-12,
                "P_S symmetry");
    const auto [lambda, phi] = spectral_decompose(ops.ps, 8);
    c.expect_le(std::abs(lambda(0) - 1.0), 1e-10, "lambda_1 = 1");

    {  // Nystrom consistency and projection idempotence
      RngStream rng(5, "acceptance.gh");
      const Matrix inputs = rng.normal_matrix(40, 2);
      const Matrix outputs = rng.normal_matrix(40, 3);
      const GhInterpolant interp = fit_gh(inputs, outputs, 0.5, 1e-4);
      double worst = 0.0;
      for (Index i = 0; i < 40; ++i) {
        const Vector extended =
            nystrom_extend(interp, inputs.row(i).transpose());
        for (Index k = 0; k < interp.retained(); ++k)
          worst = std::max(worst, std::abs(extended(k) - interp.psi(i, k)));
      }
      c.expect_le(worst, 1e-8, "Nystrom training-point consistency");

      const GhInterpolant twice =
          fit_gh(inputs, projected_outputs(interp), 0.5, 1e-4);
      c.expect_le((interp.coeffs - twice.coeffs).cwiseAbs().maxCoeff(),
                  1e-10, "GH projection idempotence");
    }

    {  // persistence round trip reproduces generation bit for bit
      FitConfig config;
      config.dmaps.m_max = 8;
      config.gh_delta = 1e-6;
      config.gh_eps2_factor = 2.0;
      const GhPlomModel model = fit(data, config);
      const fs::path path =
          fs::temp_directory_path() / "ghplom_acceptance_model.ghpm";
      save_model(model, path);
      const GhPlomModel loaded = load_model(path);
      IsdeConfig isde;
      isde.burn_in = 30;
      isde.stride = 10;
      const auto before = generate(model, 2, 3, &isde);
      const auto after = generate(loaded, 2, 3, &isde);
      bool identical = before.size() == after.size();
      for (std::size_t k = 0; identical && k < before.size(); ++k)
        identical = before[k].values == after[k].values;
      c.expect(identical, "persistence round trip generation");
      fs::remove(path);
    }
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
