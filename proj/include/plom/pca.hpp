#pragma once

#include "plom/types.hpp"

namespace plom {

/// Whitening PCA: project() yields zero-mean, identity-covariance
/// coordinates; reconstruct() is the exact inverse on the retained span.
struct PcaModel {
  Vector mean;         // length n
  Vector eigenvalues;  // length nu, strictly positive, descending
  Matrix eigenvectors; // n x nu, orthonormal columns

  Index ambient_dim() const { return mean.size(); }
  Index nu() const { return eigenvalues.size(); }
  Vector explained_variance_ratio() const;
};

struct PcaRetention {
  Index count = 0;                 // > 0: keep exactly this many
  double energy = 1.0 - 1e-9;     // otherwise: smallest nu reaching this
};

/// Unbiased covariance (N-1 divisor), symmetric eigendecomposition,
/// descending order. Components below 1e-12 of the leading eigenvalue are
/// always dropped; each eigenvector is flipped so its largest-magnitude
/// entry is positive.
PcaModel fit_pca(const Matrix& data, const PcaRetention& retention);

/// eta = mu^{-1/2} Phi^T (x - mean), columns are samples.
Matrix project(const PcaModel& model, const Matrix& data);

/// x = mean + Phi mu^{1/2} eta.
Matrix reconstruct(const PcaModel& model, const Matrix& eta);

}  // namespace plom
