#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dyadic/measure.hpp"

namespace dyadic {

/// Nonnegative coefficient tau_Q for every real cube.
class CubeWeights {
 public:
  enum class Rule : std::uint8_t { explicit_values, fractional, sparse_random };

  static CubeWeights explicit_values(GridPtr grid, std::vector<double> tau);
  /// tau_Q = |Q|^{alpha/d}, 0 < alpha < d.
  static CubeWeights fractional(GridPtr grid, double alpha);
  /// Each cube independently active with the given probability; active
  /// cubes get tau_Q = |Q| times a lognormal(0, 1) factor.
  static CubeWeights sparse_random(GridPtr grid, double density, std::uint64_t seed);
  static CubeWeights zero(GridPtr grid);
  static CubeWeights root_only(GridPtr grid, double value = 1.0);

  const DyadicGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  Rule rule() const { return rule_; }
  double alpha() const { return alpha_; }
  std::uint64_t seed() const { return seed_; }

  double operator[](CubeIndex cube) const { return tau_[cube]; }
  std::span<const double> values() const { return tau_; }

  CubeWeights scaled(double c) const;
  /// Same coefficients with tau zeroed on the finest `levels` levels.
  CubeWeights without_finest_levels(int levels) const;

 private:
  CubeWeights(GridPtr grid, std::vector<double> tau, Rule rule);

  GridPtr grid_;
  std::vector<double> tau_;
  Rule rule_ = Rule::explicit_values;
  double alpha_ = 0.0;
  std::uint64_t seed_ = 0;
};

/// Disjoint leaf sets E(Q) contained in their cubes Q.
struct Selection {
  std::vector<std::pair<CubeIndex, std::vector<LeafIndex>>> sets;
};

enum class Evaluation : std::uint8_t { prefix_pass, ancestor_loop };
enum class Localization : std::uint8_t { inside, outside };

/// T nu(x) = sum over cubes Q containing x of tau_Q * E_Q nu.
///
/// The default evaluation is one top-down pass accumulating the sum along
/// root-to-leaf paths. `ancestor_loop` recomputes each leaf independently and
/// exists as a cross-check.
GridFunction apply_T(const CubeWeights& tau, const Measure& nu,
                     Evaluation how = Evaluation::prefix_pass);

/// In-mode sums cubes Q contained in R; out-mode sums cubes Q containing R.
GridFunction apply_T_restricted(const CubeWeights& tau, const Measure& nu,
                                CubeIndex cube, Localization mode);
/// Virtual R: in-mode is the full operator, out-mode is zero.
GridFunction apply_T_restricted(const CubeWeights& tau, const Measure& nu,
                                const CubeRef& cube, Localization mode);

/// sum_Q tau_Q E_Q(f sigma) E_Q(g omega) |Q|.
double bilinear_form(const CubeWeights& tau, const GridFunction& f,
                     const Measure& sigma, const GridFunction& g,
                     const Measure& omega);

/// Integral of g * h against mu.
double integrate(const GridFunction& g, const GridFunction& h, const Measure& mu);

/// Dyadic maximal function: sup over cubes Q containing x with mu(Q) > 0 of
/// the mu-average of |f|.
GridFunction maximal(const GridFunction& f, const Measure& mu);

/// L f = sum_Q 1_{E(Q)} * E^mu_Q f. Cubes of zero mu-mass contribute zero.
GridFunction linearized_maximal(const GridFunction& f, const Measure& mu,
                                const Selection& selection);

struct LocalizedMaximal {
  GridFunction values;
  /// Leaves of Q0 that no cube of positive omega-mass inside Q0 covers.
  std::vector<LeafIndex> uncovered;
};

/// sup over Q inside Q0 containing x of [omega(Q)^{-1} int_Q f^p dsigma]^{1/p}.
LocalizedMaximal localized_two_weight_maximal(const GridFunction& f,
                                              const Measure& sigma,
                                              const Measure& omega,
                                              CubeIndex top, double p);

}  // namespace dyadic
