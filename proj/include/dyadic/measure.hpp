#pragma once

#include <span>
#include <vector>

#include "dyadic/grid.hpp"

namespace dyadic {

/// Real value per leaf, in canonical leaf order.
struct GridFunction {
  std::vector<double> values;

  GridFunction() = default;
  explicit GridFunction(std::vector<double> v) : values(std::move(v)) {}
  static GridFunction constant(const DyadicGrid& grid, double c) {
    return GridFunction(std::vector<double>(grid.leaf_count(), c));
  }
  static GridFunction zero(const DyadicGrid& grid) { return constant(grid, 0.0); }
  static GridFunction indicator(const DyadicGrid& grid, CubeIndex cube);

  std::size_t size() const { return values.size(); }
  double operator[](LeafIndex x) const { return values[x]; }
  double& operator[](LeafIndex x) { return values[x]; }
};

/// Leaf masses with cached per-cube totals.
///
/// Weight measures are nonnegative. Signed measures only arise as products
/// f*sigma through `Measure::product`.
class Measure {
 public:
  /// Nonnegative weight; throws ArgumentError on negative or non-finite mass.
  static Measure weight(GridPtr grid, std::vector<double> leaf_mass);
  static Measure lebesgue(GridPtr grid);
  static Measure zero(GridPtr grid);
  /// The (possibly signed) measure f*base.
  static Measure product(const GridFunction& f, const Measure& base);

  const DyadicGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  bool is_weight() const { return is_weight_; }

  double leaf_mass(LeafIndex x) const { return leaf_mass_[x]; }
  std::span<const double> leaf_masses() const { return leaf_mass_; }
  /// Total mass of a real cube, accumulated bottom-up over children.
  double mass(CubeIndex cube) const { return cube_mass_[cube]; }
  std::span<const double> cube_masses() const { return cube_mass_; }
  double total() const { return cube_mass_[0]; }

  /// This measure times the indicator of a cube.
  Measure restricted(CubeIndex cube) const;
  /// Multiplies every mass by c (c >= 0 keeps a weight a weight).
  Measure scaled(double c) const;

 private:
  Measure(GridPtr grid, std::vector<double> leaf_mass, bool is_weight);
  void accumulate();

  GridPtr grid_;
  std::vector<double> leaf_mass_;
  std::vector<double> cube_mass_;
  bool is_weight_ = true;
};

/// Exponent pair with 1 < p <= q < infinity and their conjugates.
class Exponents {
 public:
  Exponents(double p, double q);

  double p() const { return p_; }
  double q() const { return q_; }
  double p_dual() const { return p_dual_; }
  double q_dual() const { return q_dual_; }
  /// The pair (q', p') governing the dual inequality.
  Exponents dual() const { return Exponents(q_dual_, p_dual_); }

 private:
  double p_, q_, p_dual_, q_dual_;
};

double conjugate_exponent(double p);

/// E_Q nu = nu(Q)/|Q|.
double measure_avg(const Measure& nu, CubeIndex cube);
/// Virtual cubes average to zero: nothing lives outside the root.
double measure_avg(const Measure& nu, const CubeRef& cube);

/// mu-weighted mean of f over a cube; throws UndefinedAverage when mu(Q) = 0.
double weighted_avg(const GridFunction& f, const Measure& mu, CubeIndex cube);

/// (sum_x |f_x|^p mu_x)^{1/p} for p >= 1.
double lp_norm(const GridFunction& f, const Measure& mu, double p);

/// Throws ArgumentError unless f has one value per leaf of the grid.
void require_same_grid(const GridFunction& f, const DyadicGrid& grid);
void require_same_grid(const Measure& a, const Measure& b);

}  // namespace dyadic
