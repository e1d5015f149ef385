#include "plom/isde.hpp"

#include "plom/rng.hpp"

#include <cmath>
#include <string>

namespace plom {

namespace {

constexpr double kBlowupLimit = 1e8;

double resolve_step(const IsdeConfig& config, const KdeModel& kde) {
  const double dr = config.dr > 0.0 ? config.dr : 0.25 * kde.s_hat;
  if (config.f0 <= 0.0) throw InvalidParameter("f0 must be > 0");
  if (dr <= 0.0) throw InvalidParameter("step size must be > 0");
  if (config.f0 * dr >= 4.0)
    throw InvalidParameter(
        "f0 * dr must stay below 4 to keep the velocity update contractive");
  if (config.burn_in < 1) throw InvalidParameter("burn_in must be >= 1");
  if (config.stride < 1) throw InvalidParameter("stride must be >= 1");
  if (config.n_mc < 0) throw InvalidParameter("n_mc must be >= 0");
  return dr;
}

// Shared stepping loop; `advance` performs one integrator step on the fresh
// noise draw, `positions` tracks the evolving state to snapshot.
template <typename Advance>
std::vector<Matrix> run_chain(const Matrix& positions, Index noise_rows,
                              Index noise_cols, const IsdeConfig& config,
                              Advance&& advance) {
  std::vector<Matrix> samples;
  if (config.n_mc == 0) return samples;
  samples.reserve(std::size_t(config.n_mc));

  RngStream noise_stream(config.seed, "isde.noise");
  Matrix noise(noise_rows, noise_cols);

  Index step = 0;
  for (Index k = 0; k < config.n_mc; ++k) {
    const Index target = config.burn_in + k * config.stride;
    while (step < target) {
      for (Index j = 0; j < noise_cols; ++j)
        for (Index i = 0; i < noise_rows; ++i)
          noise(i, j) = noise_stream.normal();
      ++step;
      advance(noise, step);
    }
    samples.push_back(positions);
  }
  return samples;
}

}  // namespace

ReducedBasis ReducedBasis::from_g(const Matrix& g) {
  if (g.rows() < g.cols() || g.cols() < 1)
    throw InvalidParameter("basis must be N x m with m <= N");
  ReducedBasis basis;
  basis.g = g;
  const Matrix gram = g.transpose() * g;
  basis.a = gram.ldlt().solve(g.transpose()).transpose();
  const double err =
      (g.transpose() * basis.a - Matrix::Identity(g.cols(), g.cols()))
          .cwiseAbs()
          .maxCoeff();
  if (!(err <= 1e-10))
    throw NumericalFailure("basis pseudo-inverse identity violated (" +
                           std::to_string(err) + ")");
  return basis;
}

// The kick is written as a fixed sequence of elementwise updates on plain
// matrices; the reduced-order path repeats the same sequence, which keeps
// the two integrators bit-identical when the basis is the identity.
void verlet_step(IsdeState& state, const KdeModel& kde, double f0, double dr,
                 const Matrix& noise, KdeForceWorkspace& workspace) {
  const double b = f0 * dr / 4.0;
  state.u += (dr / 2.0) * state.v;
  static thread_local Matrix force_buf;
  workspace.apply(kde, state.u, force_buf);
  state.v *= (1.0 - b);
  state.v += dr * force_buf;
  state.v += std::sqrt(f0 * dr) * noise;
  state.v /= (1.0 + b);
  state.u += (dr / 2.0) * state.v;
  ++state.step;
  const double mag = std::max(state.u.cwiseAbs().maxCoeff(),
                              state.v.cwiseAbs().maxCoeff());
  if (!(mag <= kBlowupLimit))
    throw NumericalBlowup("trajectory exceeded 1e8 at step " +
                          std::to_string(state.step) +
                          " (reduce dr or increase f0)");
}

std::vector<Matrix> simulate_full(const KdeModel& kde,
                                  const IsdeConfig& config) {
  const double dr = resolve_step(config, kde);
  const Index nu = kde.dim();
  const Index N = kde.count();

  IsdeState state;
  state.u = kde.centers;
  state.v = RngStream(config.seed, "isde.init").normal_matrix(nu, N);

  KdeForceWorkspace workspace;
  return run_chain(state.u, nu, N, config,
                   [&](const Matrix& noise, Index) {
                     verlet_step(state, kde, config.f0, dr, noise, workspace);
                   });
}

std::vector<Matrix> simulate_reduced(const KdeModel& kde,
                                     const ReducedBasis& basis,
                                     const IsdeConfig& config) {
  const double dr = resolve_step(config, kde);
  const Index nu = kde.dim();
  const Index N = kde.count();
  if (basis.g.rows() != N)
    throw DimensionMismatch("basis rows must match the KDE sample count");

  const double f0 = config.f0;
  const double b = f0 * dr / 4.0;

  Matrix z = kde.centers * basis.a;
  Matrix y = RngStream(config.seed, "isde.init").normal_matrix(nu, N) *
             basis.a;

  KdeForceWorkspace workspace;
  Matrix force_full(nu, N);
  Matrix lifted(nu, N);
  Matrix force_reduced(nu, basis.g.cols());
  Matrix noise_reduced(nu, basis.g.cols());

  return run_chain(z, nu, N, config, [&](const Matrix& noise, Index step) {
    z += (dr / 2.0) * y;
    lifted.noalias() = z * basis.g.transpose();
    workspace.apply(kde, lifted, force_full);
    force_reduced.noalias() = force_full * basis.a;
    noise_reduced.noalias() = noise * basis.a;
    y *= (1.0 - b);
    y += dr * force_reduced;
    y += std::sqrt(f0 * dr) * noise_reduced;
    y /= (1.0 + b);
    z += (dr / 2.0) * y;
    const double mag =
        std::max(z.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff());
    if (!(mag <= kBlowupLimit))
      throw NumericalBlowup("reduced trajectory exceeded 1e8 at step " +
                            std::to_string(step));
  });
}

std::vector<Matrix> extract_samples(const std::vector<Matrix>& trajectory,
                                    Index burn_in, Index stride, Index n_mc) {
  if (burn_in < 1 || stride < 1)
    throw InvalidParameter("burn_in and stride must be >= 1");
  if (n_mc < 0) throw InvalidParameter("n_mc must be >= 0");
  std::vector<Matrix> samples;
  samples.reserve(std::size_t(n_mc));
  for (Index k = 0; k < n_mc; ++k) {
    const Index at = burn_in + k * stride;
    if (at >= Index(trajectory.size()))
      throw InvalidParameter(
          "requested more samples than the trajectory provides (step " +
          std::to_string(at) + " of " + std::to_string(trajectory.size()) +
          ")");
    samples.push_back(trajectory[std::size_t(at)]);
  }
  return samples;
}

}  // namespace plom
