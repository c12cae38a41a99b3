#include "dyadic/measure.hpp"

#include <cmath>

#include "dyadic/error.hpp"

namespace dyadic {

GridFunction GridFunction::indicator(const DyadicGrid& grid, CubeIndex cube) {
  GridFunction f = zero(grid);
  for (LeafIndex x : grid.leaves(cube)) f[x] = 1.0;
  return f;
}

Measure::Measure(GridPtr grid, std::vector<double> leaf_mass, bool is_weight)
    : grid_(std::move(grid)), leaf_mass_(std::move(leaf_mass)),
      is_weight_(is_weight) {
  if (!grid_) throw ArgumentError("measure needs a grid");
  if (leaf_mass_.size() != grid_->leaf_count()) {
    throw ArgumentError("leaf mass vector does not match the grid");
  }
  accumulate();
}

void Measure::accumulate() {
  const DyadicGrid& g = *grid_;
  cube_mass_.assign(g.cube_count(), 0.0);
  const std::size_t leaf0 = g.level_offset(g.depth());
  for (LeafIndex x = 0; x < g.leaf_count(); ++x) cube_mass_[leaf0 + x] = leaf_mass_[x];
  for (int l = g.depth() - 1; l >= 0; --l) {
    const std::size_t begin = g.level_offset(l);
    const std::size_t end = begin + g.level_size(l);
    for (CubeIndex q = begin; q < end; ++q) {
      double sum = 0.0;
      for (CubeIndex c : g.children(q)) sum += cube_mass_[c];
      cube_mass_[q] = sum;
    }
  }
}

Measure Measure::weight(GridPtr grid, std::vector<double> leaf_mass) {
  for (double m : leaf_mass) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw ArgumentError("weight masses must be finite and nonnegative");
    }
  }
  return Measure(std::move(grid), std::move(leaf_mass), true);
}

Measure Measure::lebesgue(GridPtr grid) {
  const double v = grid->volume_at_level(grid->depth());
  std::vector<double> mass(grid->leaf_count(), v);
  return Measure(std::move(grid), std::move(mass), true);
}

Measure Measure::zero(GridPtr grid) {
  std::vector<double> mass(grid->leaf_count(), 0.0);
  return Measure(std::move(grid), std::move(mass), true);
}

Measure Measure::product(const GridFunction& f, const Measure& base) {
  require_same_grid(f, base.grid());
  std::vector<double> mass(f.size());
  bool nonnegative = base.is_weight();
  for (LeafIndex x = 0; x < f.size(); ++x) {
    mass[x] = f[x] * base.leaf_mass_[x];
    if (mass[x] < 0.0) nonnegative = false;
  }
  return Measure(base.grid_, std::move(mass), nonnegative);
}

Measure Measure::restricted(CubeIndex cube) const {
  std::vector<double> mass(leaf_mass_.size(), 0.0);
  for (LeafIndex x : grid_->leaves(cube)) mass[x] = leaf_mass_[x];
  return Measure(grid_, std::move(mass), is_weight_);
}

Measure Measure::scaled(double c) const {
  std::vector<double> mass(leaf_mass_);
  for (double& m : mass) m *= c;
  return Measure(grid_, std::move(mass), is_weight_ && c >= 0.0);
}

double conjugate_exponent(double p) { return p / (p - 1.0); }

Exponents::Exponents(double p, double q) : p_(p), q_(q) {
  if (!(p > 1.0) || !(p <= q) || !std::isfinite(q)) {
    throw ArgumentError("exponents must satisfy 1 < p <= q < infinity");
  }
  p_dual_ = conjugate_exponent(p);
  q_dual_ = conjugate_exponent(q);
}

double measure_avg(const Measure& nu, CubeIndex cube) {
  return nu.mass(cube) / nu.grid().volume(cube);
}

double measure_avg(const Measure& nu, const CubeRef& cube) {
  if (cube.is_virtual()) return 0.0;
  return measure_avg(nu, nu.grid().index(cube));
}

double weighted_avg(const GridFunction& f, const Measure& mu, CubeIndex cube) {
  require_same_grid(f, mu.grid());
  const double m = mu.mass(cube);
  if (!(m > 0.0)) throw UndefinedAverage("weighted average over a cube of zero mass");
  double sum = 0.0;
  for (LeafIndex x : mu.grid().leaves(cube)) sum += f[x] * mu.leaf_mass(x);
  return sum / m;
}

double lp_norm(const GridFunction& f, const Measure& mu, double p) {
  require_same_grid(f, mu.grid());
  if (!(p >= 1.0)) throw ArgumentError("lp_norm needs p >= 1");
  double sum = 0.0;
  for (LeafIndex x = 0; x < f.size(); ++x) {
    const double m = mu.leaf_mass(x);
    if (m == 0.0) continue;
    sum += std::pow(std::abs(f[x]), p) * m;
  }
  return std::pow(sum, 1.0 / p);
}

void require_same_grid(const GridFunction& f, const DyadicGrid& grid) {
  if (f.size() != grid.leaf_count()) {
    throw ArgumentError("grid function does not match the grid");
  }
}

void require_same_grid(const Measure& a, const Measure& b) {
  const DyadicGrid& ga = a.grid();
  const DyadicGrid& gb = b.grid();
  if (&ga != &gb &&
      (ga.dimension() != gb.dimension() || ga.depth() != gb.depth())) {
    throw ArgumentError("measures live on different grids");
  }
}

}  // namespace dyadic
