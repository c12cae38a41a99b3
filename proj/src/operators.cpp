#include "dyadic/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dyadic/error.hpp"
#include "dyadic/random.hpp"

namespace dyadic {

namespace {

void require_tau_grid(const CubeWeights& tau, const Measure& nu) {
  const DyadicGrid& a = tau.grid();
  const DyadicGrid& b = nu.grid();
  if (&a != &b && (a.dimension() != b.dimension() || a.depth() != b.depth())) {
    throw ArgumentError("weights and measure live on different grids");
  }
}

}  // namespace

CubeWeights::CubeWeights(GridPtr grid, std::vector<double> tau, Rule rule)
    : grid_(std::move(grid)), tau_(std::move(tau)), rule_(rule) {
  if (tau_.size() != grid_->cube_count()) {
    throw ArgumentError("tau vector does not match the cube count");
  }
  for (double t : tau_) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw ArgumentError("tau must be finite and nonnegative");
    }
  }
}

CubeWeights CubeWeights::explicit_values(GridPtr grid, std::vector<double> tau) {
  return CubeWeights(std::move(grid), std::move(tau), Rule::explicit_values);
}

CubeWeights CubeWeights::fractional(GridPtr grid, double alpha) {
  const int d = grid->dimension();
  if (!(alpha > 0.0) || !(alpha < d)) {
    throw ArgumentError("fractional rule needs 0 < alpha < d");
  }
  std::vector<double> tau(grid->cube_count());
  for (CubeIndex q = 0; q < tau.size(); ++q) {
    tau[q] = std::pow(grid->volume(q), alpha / d);
  }
  CubeWeights w(std::move(grid), std::move(tau), Rule::fractional);
  w.alpha_ = alpha;
  return w;
}

CubeWeights CubeWeights::sparse_random(GridPtr grid, double density,
                                       std::uint64_t seed) {
  if (!(density >= 0.0 && density <= 1.0)) {
    throw ArgumentError("sparse density must lie in [0, 1]");
  }
  Rng rng(seed);
  std::vector<double> tau(grid->cube_count(), 0.0);
  for (CubeIndex q = 0; q < tau.size(); ++q) {
    const bool active = rng.uniform() < density;
    const double factor = rng.lognormal(0.0, 1.0);
    if (active) tau[q] = grid->volume(q) * factor;
  }
  CubeWeights w(std::move(grid), std::move(tau), Rule::sparse_random);
  w.seed_ = seed;
  return w;
}

CubeWeights CubeWeights::zero(GridPtr grid) {
  std::vector<double> tau(grid->cube_count(), 0.0);
  return CubeWeights(std::move(grid), std::move(tau), Rule::explicit_values);
}

CubeWeights CubeWeights::root_only(GridPtr grid, double value) {
  std::vector<double> tau(grid->cube_count(), 0.0);
  tau[0] = value;
  return CubeWeights(std::move(grid), std::move(tau), Rule::explicit_values);
}

CubeWeights CubeWeights::scaled(double c) const {
  std::vector<double> tau(tau_);
  for (double& t : tau) t *= c;
  return CubeWeights(grid_, std::move(tau), Rule::explicit_values);
}

CubeWeights CubeWeights::without_finest_levels(int levels) const {
  if (levels <= 0) return *this;
  std::vector<double> tau(tau_);
  const int first = std::max(0, grid_->depth() - levels + 1);
  for (CubeIndex q = grid_->level_offset(first); q < tau.size(); ++q) tau[q] = 0.0;
  return CubeWeights(grid_, std::move(tau), Rule::explicit_values);
}

GridFunction apply_T(const CubeWeights& tau, const Measure& nu, Evaluation how) {
  require_tau_grid(tau, nu);
  const DyadicGrid& g = nu.grid();
  GridFunction out = GridFunction::zero(g);
  if (how == Evaluation::ancestor_loop) {
    for (LeafIndex x = 0; x < g.leaf_count(); ++x) {
      const CubeIndex leaf = g.leaf_cube(x);
      double sum = 0.0;
      for (int l = 0; l <= g.depth(); ++l) {
        const CubeIndex q = g.ancestor_at_level(leaf, l);
        sum += tau[q] * (nu.mass(q) / g.volume(q));
      }
      out[x] = sum;
    }
    return out;
  }
  std::vector<double> acc(g.cube_count());
  acc[0] = tau[0] * (nu.mass(0) / g.volume(0));
  for (CubeIndex q = 1; q < g.cube_count(); ++q) {
    acc[q] = acc[g.parent(q)] + tau[q] * (nu.mass(q) / g.volume(q));
  }
  const std::size_t leaf0 = g.level_offset(g.depth());
  std::copy(acc.begin() + static_cast<std::ptrdiff_t>(leaf0), acc.end(),
            out.values.begin());
  return out;
}

GridFunction apply_T_restricted(const CubeWeights& tau, const Measure& nu,
                                CubeIndex cube, Localization mode) {
  require_tau_grid(tau, nu);
  const DyadicGrid& g = nu.grid();
  GridFunction out = GridFunction::zero(g);
  if (mode == Localization::inside) {
    std::vector<std::pair<CubeIndex, double>> stack;
    stack.emplace_back(cube, tau[cube] * (nu.mass(cube) / g.volume(cube)));
    while (!stack.empty()) {
      const auto [q, acc] = stack.back();
      stack.pop_back();
      if (g.is_leaf_cube(q)) {
        out[g.leaf_of(q)] = acc;
        continue;
      }
      for (CubeIndex c : g.children(q)) {
        stack.emplace_back(c, acc + tau[c] * (nu.mass(c) / g.volume(c)));
      }
    }
    return out;
  }
  // Out-mode: a leaf x sees the ancestors of R that also contain x, i.e. the
  // chain from the root down to the lowest common ancestor of x and R.
  const int top = g.level(cube);
  std::vector<CubeIndex> chain(top + 1);
  for (int l = top; l >= 0; --l) chain[l] = g.ancestor_at_level(cube, l);
  double acc = 0.0;
  for (int l = 0; l <= top; ++l) {
    const CubeIndex q = chain[l];
    acc += tau[q] * (nu.mass(q) / g.volume(q));
    for (LeafIndex x : g.leaves(q)) out[x] = acc;
  }
  return out;
}

GridFunction apply_T_restricted(const CubeWeights& tau, const Measure& nu,
                                const CubeRef& cube, Localization mode) {
  if (!cube.is_virtual()) {
    return apply_T_restricted(tau, nu, nu.grid().index(cube), mode);
  }
  if (mode == Localization::inside) return apply_T(tau, nu);
  return GridFunction::zero(nu.grid());
}

double bilinear_form(const CubeWeights& tau, const GridFunction& f,
                     const Measure& sigma, const GridFunction& g,
                     const Measure& omega) {
  require_same_grid(sigma, omega);
  require_tau_grid(tau, sigma);
  const Measure fs = Measure::product(f, sigma);
  const Measure go = Measure::product(g, omega);
  const DyadicGrid& grid = sigma.grid();
  double sum = 0.0;
  for (CubeIndex q = 0; q < grid.cube_count(); ++q) {
    if (tau[q] == 0.0) continue;
    sum += tau[q] * fs.mass(q) * go.mass(q) / grid.volume(q);
  }
  return sum;
}

double integrate(const GridFunction& g, const GridFunction& h, const Measure& mu) {
  require_same_grid(g, mu.grid());
  require_same_grid(h, mu.grid());
  double sum = 0.0;
  for (LeafIndex x = 0; x < g.size(); ++x) sum += g[x] * h[x] * mu.leaf_mass(x);
  return sum;
}

GridFunction maximal(const GridFunction& f, const Measure& mu) {
  require_same_grid(f, mu.grid());
  if (!(mu.total() > 0.0)) throw UndefinedAverage("maximal function of a null measure");
  const DyadicGrid& g = mu.grid();
  GridFunction abs_f = f;
  for (double& v : abs_f.values) v = std::abs(v);
  const Measure fm = Measure::product(abs_f, mu);
  std::vector<double> best(g.cube_count());
  best[0] = fm.mass(0) / mu.mass(0);
  for (CubeIndex q = 1; q < g.cube_count(); ++q) {
    best[q] = best[g.parent(q)];
    if (mu.mass(q) > 0.0) best[q] = std::max(best[q], fm.mass(q) / mu.mass(q));
  }
  GridFunction out = GridFunction::zero(g);
  for (LeafIndex x = 0; x < g.leaf_count(); ++x) out[x] = best[g.leaf_cube(x)];
  return out;
}

GridFunction linearized_maximal(const GridFunction& f, const Measure& mu,
                                const Selection& selection) {
  require_same_grid(f, mu.grid());
  const DyadicGrid& g = mu.grid();
  std::vector<char> claimed(g.leaf_count(), 0);
  GridFunction out = GridFunction::zero(g);
  for (const auto& [cube, leaves] : selection.sets) {
    if (cube >= g.cube_count()) throw SelectionError("selection names an unknown cube");
    for (LeafIndex x : leaves) {
      if (x >= g.leaf_count() || !g.contains_leaf(cube, x)) {
        throw SelectionError("selected set is not contained in its cube");
      }
      if (claimed[x]) throw SelectionError("selected sets are not disjoint");
      claimed[x] = 1;
    }
    const double avg = mu.mass(cube) > 0.0 ? weighted_avg(f, mu, cube) : 0.0;
    for (LeafIndex x : leaves) out[x] = avg;
  }
  return out;
}

LocalizedMaximal localized_two_weight_maximal(const GridFunction& f,
                                              const Measure& sigma,
                                              const Measure& omega,
                                              CubeIndex top, double p) {
  require_same_grid(sigma, omega);
  require_same_grid(f, sigma.grid());
  if (!(p >= 1.0)) throw ArgumentError("localized maximal function needs p >= 1");
  const DyadicGrid& g = sigma.grid();
  GridFunction fp = f;
  for (double& v : fp.values) {
    if (v < 0.0) throw ArgumentError("localized maximal function needs f >= 0");
    v = std::pow(v, p);
  }
  const Measure fps = Measure::product(fp, sigma);
  constexpr double none = -std::numeric_limits<double>::infinity();

  LocalizedMaximal result{GridFunction::zero(g), {}};
  std::vector<std::pair<CubeIndex, double>> stack;
  auto value_at = [&](CubeIndex q, double inherited) {
    if (!(omega.mass(q) > 0.0)) return inherited;
    return std::max(inherited, std::pow(fps.mass(q) / omega.mass(q), 1.0 / p));
  };
  stack.emplace_back(top, value_at(top, none));
  while (!stack.empty()) {
    const auto [q, best] = stack.back();
    stack.pop_back();
    if (g.is_leaf_cube(q)) {
      const LeafIndex x = g.leaf_of(q);
      if (best == none) {
        result.uncovered.push_back(x);
      } else {
        result.values[x] = best;
      }
      continue;
    }
    for (CubeIndex c : g.children(q)) stack.emplace_back(c, value_at(c, best));
  }
  std::sort(result.uncovered.begin(), result.uncovered.end());
  return result;
}

}  // namespace dyadic
