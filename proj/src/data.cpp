#include "plom/data.hpp"

#include "plom/rng.hpp"

namespace plom {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_parameter: return "InvalidParameter";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::degenerate_feature: return "DegenerateFeature";
    case ErrorCode::numerical_failure: return "NumericalFailure";
    case ErrorCode::numerical_blowup: return "NumericalBlowup";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::version_mismatch: return "VersionMismatch";
    case ErrorCode::not_fitted: return "NotFitted";
    case ErrorCode::insufficient_support: return "InsufficientSupport";
  }
  return "Error";
}

void validate(const DataMatrix& data) {
  if (data.features() < 1 || data.samples() < 2)
    throw InvalidParameter("data matrix must be at least 1x2, got " +
                           std::to_string(data.features()) + "x" +
                           std::to_string(data.samples()));
  if (!data.values.allFinite())
    throw InvalidParameter("data matrix contains non-finite entries");
  if (!data.feature_labels.empty() &&
      Index(data.feature_labels.size()) != data.features())
    throw InvalidParameter("label count does not match feature count");
}

namespace {

// Table rows (a1, a2) in family order; families are nested prefixes except
// d0, which keeps only the x2-dependent columns.
constexpr std::array<std::array<int, 2>, 4> kD0 = {
    {{0, 1}, {0, 2}, {0, 3}, {0, 4}}};
constexpr std::array<std::array<int, 2>, 9> kFull = {{{0, 1},
                                                      {1, 0},
                                                      {0, 2},
                                                      {1, 1},
                                                      {0, 3},
                                                      {1, 2},
                                                      {0, 4},
                                                      {1, 3},
                                                      {2, 2}}};

}  // namespace

std::optional<HermiteDataset> parse_hermite_dataset(std::string_view name) {
  if (name.size() == 2 && (name[0] == 'D' || name[0] == 'd') &&
      name[1] >= '0' && name[1] <= '7')
    return static_cast<HermiteDataset>(name[1] - '0');
  return std::nullopt;
}

std::string hermite_dataset_name(HermiteDataset dataset) {
  return "D" + std::to_string(static_cast<int>(dataset));
}

std::span<const std::array<int, 2>> hermite_basis_indices(
    HermiteDataset dataset) {
  if (dataset == HermiteDataset::d0) return kD0;
  const std::size_t count = 2 + static_cast<std::size_t>(dataset);
  return std::span(kFull).first(count);
}

DataMatrix generate_hermite_dataset(const HermiteDatasetSpec& spec) {
  if (spec.n_samples < 2)
    throw InvalidParameter("n_samples must be >= 2, got " +
                           std::to_string(spec.n_samples));
  if (spec.noise_std < 0.0)
    throw InvalidParameter("noise_std must be >= 0");

  const auto basis = hermite_basis_indices(spec.dataset);
  const Index n_basis = Index(basis.size());
  const Index n = n_basis + 2;
  const Index cols = spec.n_samples;

  RngStream inputs(spec.seed, "hermite.inputs");
  RngStream noise(spec.seed, "hermite.noise");

  DataMatrix out;
  out.values.resize(n, cols);
  for (Index j = 0; j < cols; ++j) {
    const double x1 = inputs.normal();
    const double x2 = inputs.normal();
    for (Index k = 0; k < n_basis; ++k) {
      double value = normalized_hermite(basis[k][0], x1) *
                     normalized_hermite(basis[k][1], x2);
      if (spec.noise_std > 0.0) value += spec.noise_std * noise.normal();
      out.values(k, j) = value;
    }
    out.values(n_basis, j) = x1;
    out.values(n_basis + 1, j) = x2;
  }

  out.feature_labels.reserve(n);
  for (const auto& alpha : basis)
    out.feature_labels.push_back("Psi_" + std::to_string(alpha[0]) + "_" +
                                 std::to_string(alpha[1]));
  out.feature_labels.push_back(kInputLabelX1);
  out.feature_labels.push_back(kInputLabelX2);
  return out;
}

std::vector<Index> input_row_indices(const DataMatrix& data) {
  std::vector<Index> rows;
  for (Index i = 0; i < Index(data.feature_labels.size()); ++i) {
    const auto& label = data.feature_labels[i];
    if (label == kInputLabelX1 || label == kInputLabelX2) rows.push_back(i);
  }
  return rows;
}

std::pair<DataMatrix, ScalingRecord> minmax_scale(const DataMatrix& data,
                                                  double eps_s) {
  validate(data);
  if (eps_s < 0.0) throw InvalidParameter("eps_s must be >= 0");

  ScalingRecord record;
  record.min = data.values.rowwise().minCoeff();
  record.max = data.values.rowwise().maxCoeff();
  record.eps_s = eps_s;
  for (Index i = 0; i < data.features(); ++i) {
    if (record.max(i) - record.min(i) <= 0.0)
      throw DegenerateFeature("feature row " + std::to_string(i) +
                              " has zero range (constant feature)");
  }

  DataMatrix scaled;
  scaled.values = apply_scaling(record, data.values);
  scaled.feature_labels = data.feature_labels;
  return {std::move(scaled), std::move(record)};
}

Matrix apply_scaling(const ScalingRecord& record, const Matrix& values) {
  if (values.rows() != record.min.size())
    throw DimensionMismatch("scaling record covers " +
                            std::to_string(record.min.size()) +
                            " features, data has " +
                            std::to_string(values.rows()));
  const Vector range = record.max - record.min;
  return ((values.colwise() - record.min).array().colwise() /
          range.array())
             .matrix()
             .array() +
         record.eps_s;
}

Matrix invert_scaling(const ScalingRecord& record, const Matrix& values) {
  if (values.rows() != record.min.size())
    throw DimensionMismatch("scaling record covers " +
                            std::to_string(record.min.size()) +
                            " features, data has " +
                            std::to_string(values.rows()));
  const Vector range = record.max - record.min;
  return ((values.array() - record.eps_s).colwise() * range.array())
             .matrix()
             .colwise() +
         record.min;
}

}  // namespace plom
