#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "dyadic/operators.hpp"

namespace dyadic {

/// Maximal dyadic cubes inside {v > lambda}. With `meet_double` only those
/// cubes that also meet {v > 2 lambda} are kept.
std::vector<CubeIndex> superlevel_maximal_cubes(const DyadicGrid& grid,
                                                const GridFunction& v,
                                                double lambda,
                                                bool meet_double = false);

/// True when v(x) > 2^k (ties are outside).
inline bool above_level(double value, int k) { return value > std::ldexp(1.0, k); }

struct WhitneyLayer {
  int k = 0;
  /// Whitney cubes of Omega_k = {v > 2^k}, ascending canonical index.
  std::vector<CubeIndex> cubes;
  /// Omega_k is the whole root; the layer is {root} by convention.
  bool saturated = false;
  /// Leaves of Omega_k whose Whitney cube would be finer than a leaf.
  std::vector<LeafIndex> uncovered;
};

/// Whitney cubes of every nonempty level set Omega_k = {v > 2^k}.
///
/// Layers run over consecutive k from `k_min()` to `k_max()`. Below the
/// floor the level sets stop changing once 2^k drops under the smallest
/// positive value of v, so the window starts `floor_margin` levels under it.
class WhitneyDecomposition {
 public:
  GridPtr grid;
  GridFunction v;
  int rho = 1;
  std::vector<WhitneyLayer> layers;

  bool empty() const { return layers.empty(); }
  int k_min() const { return layers.front().k; }
  int k_max() const { return layers.back().k; }
  const WhitneyLayer* layer(int k) const;
  bool in_level_set(LeafIndex x, int k) const { return above_level(v[x], k); }
  /// Layers k whose cube list contains the cube, ascending.
  std::vector<int> layers_containing(CubeIndex cube) const;
  bool contains(int k, CubeIndex cube) const;
  std::size_t saturated_layers() const;

  // cube -> layers containing it
  std::map<CubeIndex, std::vector<int>> membership;
};

WhitneyDecomposition whitney_layers(GridPtr grid, const GridFunction& v,
                                    int rho = 1, int floor_margin = 5);

struct WhitneyAudit {
  std::size_t cover_violations = 0;    // disjoint cover of Omega_k
  std::size_t whitney_violations = 0;  // Q^(rho) inside, Q^(rho+1) escapes
  std::size_t nested_violations = 0;   // Q strictly inside Q' forces k > l
  std::size_t overlap_max = 0;         // max_x sum_Q 1_{Q^(rho)}(x)
  std::size_t overlap_bound = 0;       // 8 * 2^{(rho+1) d}
  std::size_t crowd_max = 0;           // max_Q #{Q' : Q' meets Q^(rho)}
  std::size_t crowd_cap = 0;           // 2^{rho+2} * 2^{rho d}
  std::size_t saturated_layers = 0;

  bool ok() const {
    return cover_violations == 0 && whitney_violations == 0 &&
           nested_violations == 0 && overlap_max <= overlap_bound &&
           crowd_max <= crowd_cap;
  }
};

/// Rechecks every Whitney condition leafwise. Saturated layers are exempt
/// from the conditions that need a real (rho+1)-fold parent.
WhitneyAudit audit_whitney(const WhitneyDecomposition& w);

/// One (k, Q) pair with Q a Whitney cube of layer k.
struct LayerCube {
  int k = 0;
  CubeIndex cube = 0;
  /// E_k(Q) = Q cap (Omega_{k+m-1} \ Omega_{k+m}), ascending leaves.
  std::vector<LeafIndex> corridor;
  double corridor_mass = 0.0;  // omega(E_k(Q))
  double cube_mass = 0.0;      // omega(Q)
  int cls = 0;                 // 1, 2, 3 once classified
  double alpha = 0.0;
  double beta = 0.0;
};

struct ClassifiedLayers {
  int m = 5;
  double eta = 0.25;
  /// Sorted by (k, cube).
  std::vector<LayerCube> entries;
  /// Indices into `entries` where 2^k omega(E_k(Q)) > alpha + beta.
  std::vector<std::size_t> key_violations;

  const LayerCube* find(int k, CubeIndex cube) const;
};

ClassifiedLayers corridor_sets(const WhitneyDecomposition& w, int m = 5);

/// Corridor sets plus alpha_k(Q), beta_k(Q) and the class of each pair.
///
/// With u = T^in_{Q^(1)}(1_{E_k(Q)} omega), alpha integrates f u against
/// sigma over Q^(1) outside Omega_{k+m} and beta over Q^(1) inside it.
/// Class 1: omega(E_k(Q)) <= eta omega(Q). Otherwise class 2 if alpha > beta,
/// else class 3. A saturated root layer uses the whole grid for Q^(1).
ClassifiedLayers classify_cubes(const WhitneyDecomposition& w, const GridFunction& f,
                                const Measure& sigma, const Measure& omega,
                                const CubeWeights& tau, double eta, int m = 5);

struct CorridorAudit {
  std::size_t overlap_violations = 0;  // E_k(Q) meeting across Q in one layer
  std::size_t union_violations = 0;    // union over Q differs from the band
  std::size_t disjoint_in_k_violations = 0;
  std::size_t max_unsmall_count = 0;   // max_Q #{k : Q in layer k, class != 1}
  double unsmall_bound = 0.0;          // 1 / eta
  std::size_t key_violations = 0;

  bool ok() const {
    return overlap_violations == 0 && union_violations == 0 &&
           disjoint_in_k_violations == 0 &&
           static_cast<double>(max_unsmall_count) <= unsmall_bound &&
           key_violations == 0;
  }
};

CorridorAudit audit_corridors(const WhitneyDecomposition& w, const ClassifiedLayers& c);

struct Neighborhood {
  /// N_k(Q): cubes of layer k meeting Q^(1).
  std::vector<CubeIndex> neighbors;
  /// R_k(Q): cubes of layer k + m meeting Q^(1).
  std::vector<CubeIndex> reach;
  /// Members of R_k(Q) not contained in Q^(1).
  std::size_t containment_violations = 0;
  /// Members of R_k(Q) on which T^in_{Q^(1)}(1_{E_k(Q)} omega) is not constant.
  std::size_t constancy_violations = 0;
};

/// Throws ArgumentError unless Q belongs to layer k.
Neighborhood neighbor_sets(const WhitneyDecomposition& w, const CubeWeights& tau,
                           const Measure& omega, CubeIndex cube, int k, int m = 5);

struct OccurrenceAudit {
  /// R -> number of distinct (Q, k) with Q of class 3 in layer k and R in R_k(Q).
  std::map<CubeIndex, std::size_t> counts;
  std::size_t max_count = 0;
  double cap = 0.0;
  bool ok() const { return static_cast<double>(max_count) <= cap; }
};

/// Default cap: 64 * 2^{rho d} * (m + 2) / eta.
OccurrenceAudit occurrence_audit(const WhitneyDecomposition& w,
                                 const ClassifiedLayers& c, double cap_base = 64.0);

/// Q_0 = top; Q_{j+1} is the largest cube containing x inside Q_j with
/// omega(Q_{j+1}) <= omega(Q_j) / 2. Throws ArgumentError when omega(top) = 0
/// or x lies outside top.
std::vector<CubeIndex> halving_chain(const Measure& omega, LeafIndex x, CubeIndex top);

struct HalvingCheck {
  std::size_t halving_violations = 0;      // omega(Q_{j+1}) > omega(Q_j) / 2
  std::size_t parent_mass_violations = 0;  // omega(parent(Q_{j+1})) < omega(Q_j) / 2
  bool ok() const { return halving_violations == 0 && parent_mass_violations == 0; }
};

HalvingCheck check_halving_chain(const Measure& omega, std::span<const CubeIndex> chain);

struct MaxPrincipleViolation {
  enum class Part : std::uint8_t { outer, complement, inner_lower_bound };
  Part part = Part::outer;
  int k = 0;
  CubeIndex cube = 0;
  LeafIndex leaf = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// For Q in layer k and x in Q, with A = Q^(rho) and B = Q^(rho+1):
///   sum_{P containing B} tau_P E_P(f 1_B sigma) <= 2^k,
///   T(1_{B^c} f sigma)(x) <= 2^k,
/// and on E_k(Q):  T^in_A(1_A f sigma)(x) >= 2^k.
std::vector<MaxPrincipleViolation> max_principle_audit(const WhitneyDecomposition& w,
                                                       const GridFunction& f,
                                                       const Measure& sigma,
                                                       const CubeWeights& tau,
                                                       int m = 5);

struct PrincipalForest {
  /// Principal cubes, ascending canonical index.
  std::vector<CubeIndex> members;
  /// Seed -> minimal principal cube containing it.
  std::map<CubeIndex, CubeIndex> gamma;
  /// Principal cube -> sigma-average of f.
  std::map<CubeIndex, double> average;
  /// Seeds with sigma(Q) = 0.
  std::vector<CubeIndex> skipped;

  bool is_member(CubeIndex cube) const { return average.contains(cube); }
};

/// Stopping-time family: maximal seeds start it; under G, the maximal seeds
/// whose sigma-average of f exceeds twice that of G join.
PrincipalForest principal_cubes(const GridFunction& f, const Measure& sigma,
                                std::span<const CubeIndex> seeds);

struct PrincipalAudit {
  std::size_t domination_violations = 0;  // E_Q f > 2 E_{Gamma(Q)} f
  std::size_t doubling_violations = 0;    // G strictly inside G' with 2 E_G' >= E_G
  bool ok() const { return domination_violations == 0 && doubling_violations == 0; }
};

PrincipalAudit audit_principal(const PrincipalForest& forest, const GridFunction& f,
                               const Measure& sigma);

/// sup_x sum_{G containing x} E^sigma_G f / M_sigma f(x).
double geometric_sum_audit(const PrincipalForest& forest, const GridFunction& f,
                           const Measure& sigma);

/// sum_G sigma(G) (E^sigma_G f)^p / ||f||^p_{L^p(sigma)} (0 when f = 0).
double carleson_of_principal(const PrincipalForest& forest, const GridFunction& f,
                             const Measure& sigma, double p);

}  // namespace dyadic
