#pragma once

#include "plom/types.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace plom {

// ---------------------------------------------------------------------------
// Hermite benchmark families
// ---------------------------------------------------------------------------

inline constexpr int kMaxHermiteDegree = 20;

/// Probabilists' Hermite value h_n(x) via the three-term recursion
/// h_{n+1} = x h_n - n h_{n-1}. Degrees above kMaxHermiteDegree are rejected
/// (the recursion coefficients overflow usefulness well before then).
template <typename Scalar>
Scalar hermite_polynomial(int degree, Scalar x) {
  if (degree < 0 || degree > kMaxHermiteDegree)
    throw InvalidParameter("hermite degree must be in [0, " +
                           std::to_string(kMaxHermiteDegree) + "], got " +
                           std::to_string(degree));
  Scalar prev = Scalar(1);  // h_0
  if (degree == 0) return prev;
  Scalar curr = x;  // h_1
  for (int n = 1; n < degree; ++n) {
    const Scalar next = x * curr - Scalar(n) * prev;
    prev = curr;
    curr = next;
  }
  return curr;
}

/// h_n(x) / sqrt(n!), orthonormal with respect to the standard normal weight.
template <typename Scalar>
Scalar normalized_hermite(int degree, Scalar x) {
  Scalar norm = Scalar(1);
  for (int n = 2; n <= degree; ++n) norm *= Scalar(n);
  return hermite_polynomial(degree, x) / std::sqrt(norm);
}

enum class HermiteDataset { d0, d1, d2, d3, d4, d5, d6, d7 };

std::optional<HermiteDataset> parse_hermite_dataset(std::string_view name);
std::string hermite_dataset_name(HermiteDataset dataset);

/// Tensor-product index pairs (a1, a2) of the basis columns for one family.
std::span<const std::array<int, 2>> hermite_basis_indices(
    HermiteDataset dataset);

struct HermiteDatasetSpec {
  HermiteDataset dataset = HermiteDataset::d7;
  Index n_samples = 0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

/// Row labels "x1"/"x2" mark the raw input draws, which are appended after
/// the basis rows and kept noise-free; generation is deterministic in the
/// seed.
inline constexpr const char* kInputLabelX1 = "x1";
inline constexpr const char* kInputLabelX2 = "x2";

DataMatrix generate_hermite_dataset(const HermiteDatasetSpec& spec);

/// Indices of rows labelled as raw inputs (empty when none are labelled).
std::vector<Index> input_row_indices(const DataMatrix& data);

// ---------------------------------------------------------------------------
// Min-max scaling
// ---------------------------------------------------------------------------

/// Per-feature affine map x -> (x - min) / (max - min) + eps_s and its
/// inverse.
struct ScalingRecord {
  Vector min;
  Vector max;
  double eps_s = 0.0;
};

/// Throws DegenerateFeature naming the first zero-range row.
std::pair<DataMatrix, ScalingRecord> minmax_scale(const DataMatrix& data,
                                                  double eps_s);

Matrix apply_scaling(const ScalingRecord& record, const Matrix& values);
Matrix invert_scaling(const ScalingRecord& record, const Matrix& values);

// ---------------------------------------------------------------------------
// Matrix persistence
// ---------------------------------------------------------------------------

enum class MatrixFormat { csv, plom_bin };

/// plom-bin layout: "PLOM", u32 version = 1, u64 rows, u64 cols, then
/// rows*cols little-endian f64 in column-major order. Lossless.
void save_matrix(const DataMatrix& data, const std::filesystem::path& path,
                 MatrixFormat format);

/// CSV sources hold one sample per line (features as columns, optional
/// header naming them); `transpose` flips that interpretation for sources
/// that store one feature per line. Ignored for plom-bin.
DataMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format,
                       bool transpose = false);

/// Bare-Matrix helpers used by the model container.
void write_plom_bin(std::ostream& out, const Matrix& values);
Matrix read_plom_bin(std::istream& in, const std::string& context);

}  // namespace plom
