#pragma once

// Test-only oracles, independent of the library's solver paths.

#include "plom/types.hpp"

#include <array>
#include <cmath>

namespace oracles {

/// Eigenvalues of a symmetric 3x3 matrix by the trigonometric solution of
/// the characteristic polynomial (no iterative solver). Descending order.
inline std::array<double, 3> symmetric3_eigenvalues(const plom::Matrix& a) {
  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) +
                    a(1, 2) * a(1, 2);
  const double q = a.trace() / 3.0;
  if (p1 == 0.0) {
    std::array<double, 3> diag{a(0, 0), a(1, 1), a(2, 2)};
    std::sort(diag.begin(), diag.end(), std::greater<>());
    return diag;
  }
  const double p2 = (a(0, 0) - q) * (a(0, 0) - q) +
                    (a(1, 1) - q) * (a(1, 1) - q) +
                    (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  plom::Matrix b = (a - q * plom::Matrix::Identity(3, 3)) / p;
  const double detb = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) -
                      b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
                      b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
  const double r = std::clamp(detb / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2.0 * p * std::cos(phi);
  const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
  return {e1, 3.0 * q - e1 - e3, e3};
}

/// Central finite difference of a scalar function of a vector argument.
template <typename F>
plom::Vector finite_difference_gradient(F&& f, const plom::Vector& x,
                                        double step) {
  plom::Vector grad(x.size());
  plom::Vector probe = x;
  for (plom::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + step;
    const double above = f(probe);
    probe(i) = x(i) - step;
    const double below = f(probe);
    probe(i) = x(i);
    grad(i) = (above - below) / (2.0 * step);
  }
  return grad;
}

/// Ordinary least squares fit of y on [1, x, x^2], returning R^2.
inline double quadratic_fit_r2(const plom::Vector& x, const plom::Vector& y) {
  plom::Matrix design(x.size(), 3);
  design.col(0).setOnes();
  design.col(1) = x;
  design.col(2) = x.array().square();
  const plom::Vector beta =
      (design.transpose() * design).ldlt().solve(design.transpose() * y);
  const double resid = (y - design * beta).squaredNorm();
  const double total = (y.array() - y.mean()).square().sum();
  return 1.0 - resid / total;
}

}  // namespace oracles
