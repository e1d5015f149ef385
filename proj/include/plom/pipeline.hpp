#pragma once

#include "plom/data.hpp"
#include "plom/dmaps.hpp"
#include "plom/gh.hpp"
#include "plom/isde.hpp"
#include "plom/pca.hpp"
#include "plom/types.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace plom {

enum class ModelVariant { gh_plom, classic };

/// Affine whitening of the selected latent coordinates, so the closed-form
/// KDE bandwidths apply; the inverse restores the lift's native scale.
struct LatentWhitening {
  Vector mean;
  Matrix forward;  // y = forward * (x - mean)
  Matrix inverse;  // x = inverse * y + mean
};

LatentWhitening fit_whitening(const Matrix& columns);
Matrix whiten(const LatentWhitening& w, const Matrix& columns);
Matrix unwhiten(const LatentWhitening& w, const Matrix& columns);

struct FitConfig {
  double eps_s = 1e-9;
  std::vector<Index> input_rows;  // rows excluded from the embedding
  bool detect_input_rows = true;  // also exclude rows labelled x1/x2
  bool use_pca = false;
  PcaRetention pca_retention{};
  DmapsConfig dmaps{};
  bool whiten_latents = true;
  double gh_eps2_factor = 1.0;
  double gh_delta = 1e-3;
  /// Fraction held out for the reported lift test R-squared; the production
  /// lift is always fitted on all samples. 0 disables the check.
  double gh_validation_fraction = 0.2;
  std::uint64_t seed = 0;
  /// Classic baseline: diffusion basis size (0 derives it from the
  /// eigenvalue decay past the given ratio of the first non-trivial one).
  Index classic_m = 0;
  double classic_decay = 0.1;
};

struct FitSummary {
  std::vector<Index> selected;  // 1-based eigenvector indices
  double epsilon = 0.0;
  Vector eigenvalues;
  Vector residuals;       // non-trivial residuals, eigenvalue order
  Vector gh_r2_train;     // per output row
  Vector gh_r2_test;      // per output row (empty when no validation split)
};

struct GhPlomModel {
  std::uint32_t format_version = 1;
  ModelVariant variant = ModelVariant::gh_plom;
  DataMatrix training;  // raw input data, kept for diagnostics
  ScalingRecord scaling;
  std::vector<Index> input_rows;
  std::optional<PcaModel> pca;
  DmapsModel dmaps;
  LatentWhitening whitening;   // gh_plom only
  KdeModel kde;                // gh_plom: whitened latents; classic: eta_d
  GhInterpolant lift;          // gh_plom only
  ReducedBasis basis;          // classic only
  FitConfig config;
  FitSummary summary;

  Index latent_dim() const { return Index(dmaps.selected.size()); }
  /// Rows fed to the embedding (all rows minus input rows), in order.
  std::vector<Index> embedded_rows() const;
};

/// GH-PLoM fit: scale, embed, select non-harmonic coordinates, whiten,
/// build the latent KDE, and learn the lift back to all scaled rows.
/// Errors are tagged with the failing stage.
GhPlomModel fit(const DataMatrix& data, const FitConfig& config);

/// Classic baseline fit: scale, PCA-whiten, KDE on the PCA coordinates, and
/// a diffusion basis for the reduced-order sampler.
GhPlomModel fit_classic(const DataMatrix& data, const FitConfig& config);

/// Full-order sampling in the latent space, unwhitened, lifted, unscaled;
/// one n x N realization per retained sample. Deterministic in the seed.
std::vector<DataMatrix> generate(const GhPlomModel& model, Index n_mc,
                                 std::uint64_t seed,
                                 const IsdeConfig* overrides = nullptr);

/// Reduced-order baseline sampling: ISDE on the diffusion basis, eta
/// reconstructed as Z g^T, inverse PCA, inverse scaling.
std::vector<DataMatrix> generate_classic(const GhPlomModel& model, Index n_mc,
                                         std::uint64_t seed,
                                         const IsdeConfig* overrides = nullptr);

/// Nadaraya-Watson conditional mean of the non-input rows over the pooled
/// sample columns, conditioned on the input rows near each grid point
/// (Gaussian weights). grid is d x Q with d = input_rows.size(); the result
/// is (n - d) x Q. Throws InsufficientSupport when the total weight at a
/// grid point falls below 1e-12.
Matrix conditional_expectation(const std::vector<DataMatrix>& samples,
                               const std::vector<Index>& input_rows,
                               const Matrix& grid, double bandwidth);

struct DiagnosticsReport {
  Vector data_mean, data_variance;  // per feature, training data
  Vector gen_mean, gen_variance;    // per feature, pooled generated
  Vector ks;                        // per-feature two-sample KS statistic
  double latent_mean_error = 0.0;   // |analytic mixture mean|_inf
  double latent_cov_error = 0.0;    // |analytic second moment - I|_inf
  Vector gh_r2_train, gh_r2_test;   // copied from the fit summary
};

/// Two-sample Kolmogorov-Smirnov statistic, sup |F1 - F2|.
double ks_statistic(const Vector& a, const Vector& b);

DiagnosticsReport diagnose(const GhPlomModel& model,
                           const std::vector<DataMatrix>& generated);

/// Versioned container: magic + version, a JSON header with the scalar
/// state, then every matrix as a plom-bin block. Round trips reproduce
/// generation bit-for-bit.
void save_model(const GhPlomModel& model, const std::filesystem::path& path);
GhPlomModel load_model(const std::filesystem::path& path);

}  // namespace plom
