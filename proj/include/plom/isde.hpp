#pragma once

#include "plom/density.hpp"
#include "plom/types.hpp"

#include <cstdint>
#include <vector>

namespace plom {

/// Dissipative-Hamiltonian sampler parameters. A non-positive step size
/// requests the bandwidth-scaled default 0.25 * s_hat of the target KDE.
/// f0 * dr must stay below 4 so the velocity update remains contractive.
struct IsdeConfig {
  double f0 = 4.0;       // damping
  double dr = 0.0;       // step size
  Index burn_in = 200;   // steps before the first retained sample
  Index stride = 50;     // steps between retained samples
  Index n_mc = 1;        // number of retained sample matrices
  std::uint64_t seed = 0;
};

struct IsdeState {
  Matrix u;  // positions, nu x N
  Matrix v;  // velocities, nu x N
  Index step = 0;
};

/// Diffusion basis g together with its pseudo-inverse factor
/// a = g (g^T g)^{-1}, so that g^T a = I.
struct ReducedBasis {
  Matrix g;  // N x m
  Matrix a;  // N x m

  static ReducedBasis from_g(const Matrix& g);
};

/// One Stormer-Verlet step of the damped system, with b = f0 dr / 4:
///   U_half = U + (dr/2) V
///   V      = [(1-b) V + dr L(U_half) + sqrt(f0 dr) noise] / (1+b)
///   U      = U_half + (dr/2) V
/// Reduces to velocity Verlet at f0 = 0. Throws NumericalBlowup when an
/// entry passes 1e8 in magnitude.
void verlet_step(IsdeState& state, const KdeModel& kde, double f0, double dr,
                 const Matrix& noise, KdeForceWorkspace& workspace);

/// Full-order sampler targeting the KDE: starts at the KDE centers with
/// standard-normal velocities, discards burn_in steps, then emits a position
/// matrix every stride steps until n_mc are collected. Deterministic in the
/// seed.
std::vector<Matrix> simulate_full(const KdeModel& kde,
                                  const IsdeConfig& config);

/// Galerkin-reduced sampler on the basis columns: evolves Z, Y in
/// M_{nu,m} with force L(Z g^T) a and noise dW a, starting from
/// Z(0) = centers * a. Emits the reduced matrices (nu x m). With g = I it
/// reproduces simulate_full exactly under a shared seed.
std::vector<Matrix> simulate_reduced(const KdeModel& kde,
                                     const ReducedBasis& basis,
                                     const IsdeConfig& config);

/// States at steps burn_in, burn_in + stride, ... from a recorded
/// trajectory whose entry i is the state after i steps.
std::vector<Matrix> extract_samples(const std::vector<Matrix>& trajectory,
                                    Index burn_in, Index stride, Index n_mc);

}  // namespace plom
