#pragma once

#include <optional>

#include "dyadic/operators.hpp"

namespace dyadic {

/// A supremum over cubes together with the cube attaining it. Ties go to the
/// smallest canonical index.
struct TestingValue {
  double value = 0.0;
  std::optional<CubeIndex> argmax;
  /// Some cube has zero normalizing mass but a positive numerator; the
  /// constant is +infinity and `argmax` names the first such cube.
  bool degenerate = false;
  /// The equivalence with the norm is not claimed for these exponents.
  bool advisory = false;
};

/// sup_Q |Q|^{-1} sum_{R inside Q} tau_R.
TestingValue carleson_norm(const CubeWeights& tau);

/// sup over omega(Q) > 0 of omega(Q)^{-1} sum_{R inside Q} tau_R.
TestingValue weighted_carleson_norm(const CubeWeights& tau, const Measure& omega);

/// Local testing constant:
///   sup_R omega(R)^{-1/q'} || T^in_R(omega 1_R) ||_{L^{p'}(sigma)}.
/// The dual constant is local_testing(tau, omega, sigma, exps.dual()).
TestingValue local_testing(const CubeWeights& tau, const Measure& sigma,
                           const Measure& omega, const Exponents& exps);
/// The quantity inside the local supremum for one cube (0 when omega(R) = 0).
double local_testing_at(const CubeWeights& tau, const Measure& sigma,
                        const Measure& omega, const Exponents& exps, CubeIndex cube);

/// Global testing constant:
///   sup_R omega(R)^{-1/q'} || T^out_R(omega 1_R) ||_{L^{p'}(sigma)}.
/// Marked advisory when p = q.
TestingValue global_testing(const CubeWeights& tau, const Measure& sigma,
                            const Measure& omega, const Exponents& exps);
double global_testing_at(const CubeWeights& tau, const Measure& sigma,
                         const Measure& omega, const Exponents& exps, CubeIndex cube);

struct SntvConstants {
  /// C1^2 = sup_R sigma(R)^{-1} int [sum_{Q in R} tau_Q 1_Q E_Q sigma]^2 d omega.
  TestingValue c1;
  /// C2^2 = sup_R omega(R)^{-1} int [sum_{Q in R} tau_Q 1_Q E_Q omega]^2 d sigma.
  TestingValue c2;
};

/// The two L^2 testing constants, computed from their defining integrals.
SntvConstants sntv_constants(const CubeWeights& tau, const Measure& sigma,
                             const Measure& omega);

struct TestingReport {
  Exponents exps;
  TestingValue local;        // [sigma, omega]^Loc_{p,q}
  TestingValue local_dual;   // [omega, sigma]^Loc_{q',p'}
  TestingValue global;       // [sigma, omega]^Glo_{p,q}
  TestingValue global_dual;  // [omega, sigma]^Glo_{q',p'}
};

TestingReport testing_report(const CubeWeights& tau, const Measure& sigma,
                             const Measure& omega, const Exponents& exps);

}  // namespace dyadic
