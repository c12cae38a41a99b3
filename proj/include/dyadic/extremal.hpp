#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dyadic/operators.hpp"

namespace dyadic {

struct NormEstimate {
  enum class Kind : std::uint8_t { exact, lower_bound };

  double value = 0.0;
  Kind kind = Kind::lower_bound;
  /// Maximizing input (unit norm in its domain space).
  GridFunction f;
  /// Maximizing second argument for bilinear problems.
  std::optional<GridFunction> g;
  int iterations = 0;
  double residual = 0.0;
  std::string diagnostic;
  /// Per-iteration objective values (power iteration only).
  std::vector<double> history;
};

struct PowerOptions {
  int max_iter = 200000;
  /// Stop once ||A^T u - s v|| <= tol * s.
  double tol = 1e-11;
  bool keep_history = false;
};

struct AscentOptions {
  int restarts = 16;
  int max_iter = 400;
  /// Initial step of the normalized gradient move, relative to ||f||_2.
  double step = 1.0;
  /// Relative improvement below which an ascent run stops.
  double tol = 1e-13;
  std::uint64_t seed = 0;
  /// Ascend from every indicator seed when the grid has at most this many cubes;
  /// otherwise only from the best `polished_seeds` of them.
  std::size_t full_seed_limit = 256;
  std::size_t polished_seeds = 8;
  /// At p = q = 2 return the power-iteration value instead of ascending.
  bool route_exact_22 = true;
  PowerOptions power;
};

/// ||T(sigma .)||_{L^2(sigma) -> L^2(omega)}: the top singular value of the
/// leaf kernel sqrt(sigma_x) K(x,y) sqrt(omega_y), by alternating power
/// iteration where each half-step is one pass of T.
NormEstimate exact_norm_22(const CubeWeights& tau, const Measure& sigma,
                           const Measure& omega, const PowerOptions& opts = {});

/// Lower bound for ||T(sigma .)||_{L^p(sigma) -> L^q(omega)} by ascent over
/// nonnegative f on the unit sphere of L^p(sigma).
NormEstimate strong_norm_lower(const CubeWeights& tau, const Measure& sigma,
                               const Measure& omega, const Exponents& exps,
                               const AscentOptions& opts = {});

/// Lower bound for the L^p(sigma) -> L^{q,infty}(omega) quasinorm, maximized
/// over the same candidate pool as strong_norm_lower.
NormEstimate weak_norm_lower(const CubeWeights& tau, const Measure& sigma,
                             const Measure& omega, const Exponents& exps,
                             const AscentOptions& opts = {});

/// Lower bound for the Carleson embedding constant
///   sup_{||f||_p = 1} [sum_Q tau_Q |E_Q f|^p]^{1/p}   (Lebesgue measure).
NormEstimate cet_constant(const CubeWeights& tau, double p,
                          const AscentOptions& opts = {});
/// Weighted variant: averages and the norm of f are taken against mu.
NormEstimate cet_constant(const CubeWeights& tau, const Measure& mu, double p,
                          const AscentOptions& opts = {});

/// ||T(f sigma)||_{L^q(omega)} / ||f||_{L^p(sigma)} (0 when f vanishes).
double strong_objective(const CubeWeights& tau, const Measure& sigma,
                        const Measure& omega, const Exponents& exps,
                        const GridFunction& f);
/// sup_lambda lambda * omega({T(f sigma) > lambda})^{1/q} / ||f||_{L^p(sigma)}.
double weak_objective(const CubeWeights& tau, const Measure& sigma,
                      const Measure& omega, const Exponents& exps,
                      const GridFunction& f);
/// [sum_Q tau_Q |E^mu_Q f|^p]^{1/p} / ||f||_{L^p(mu)}.
double cet_objective(const CubeWeights& tau, const Measure& mu, double p,
                     const GridFunction& f);

}  // namespace dyadic
