#include "dyadic/constants.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "dyadic/error.hpp"

namespace dyadic {

namespace {

void require_compatible(const CubeWeights& tau, const Measure& sigma,
                        const Measure& omega) {
  require_same_grid(sigma, omega);
  const DyadicGrid& a = tau.grid();
  const DyadicGrid& b = sigma.grid();
  if (&a != &b && (a.dimension() != b.dimension() || a.depth() != b.depth())) {
    throw ArgumentError("weights and measures live on different grids");
  }
}

void offer(TestingValue& best, double value, CubeIndex cube) {
  if (!best.argmax || value > best.value) {
    best.value = value;
    best.argmax = cube;
  }
}

std::vector<double> subtree_tau(const CubeWeights& tau) {
  const DyadicGrid& g = tau.grid();
  std::vector<double> sums(g.cube_count());
  for (CubeIndex q = g.cube_count(); q-- > 0;) {
    double s = tau[q];
    for (CubeIndex c : g.children(q)) s += sums[c];
    sums[q] = s;
  }
  return sums;
}

// sum over leaves x of R of weight_x * (T^in_R(nu 1_R)(x))^r, by a
// depth-first pass over the subtree of R.
double inside_power_integral(const CubeWeights& tau, const Measure& nu,
                             const Measure& weight, CubeIndex cube, double r) {
  const DyadicGrid& g = nu.grid();
  double total = 0.0;
  std::vector<std::pair<CubeIndex, double>> stack;
  stack.emplace_back(cube, tau[cube] * (nu.mass(cube) / g.volume(cube)));
  while (!stack.empty()) {
    const auto [q, acc] = stack.back();
    stack.pop_back();
    if (g.is_leaf_cube(q)) {
      const double w = weight.leaf_mass(g.leaf_of(q));
      if (w != 0.0 && acc != 0.0) total += w * std::pow(acc, r);
      continue;
    }
    for (CubeIndex c : g.children(q)) {
      stack.emplace_back(c, acc + tau[c] * (nu.mass(c) / g.volume(c)));
    }
  }
  return total;
}

}  // namespace

TestingValue carleson_norm(const CubeWeights& tau) {
  const DyadicGrid& g = tau.grid();
  const std::vector<double> sums = subtree_tau(tau);
  TestingValue best;
  for (CubeIndex q = 0; q < g.cube_count(); ++q) offer(best, sums[q] / g.volume(q), q);
  return best;
}

TestingValue weighted_carleson_norm(const CubeWeights& tau, const Measure& omega) {
  const DyadicGrid& g = tau.grid();
  if (!(omega.total() > 0.0)) {
    throw ArgumentError("weighted Carleson norm needs omega(root) > 0");
  }
  const std::vector<double> sums = subtree_tau(tau);
  TestingValue best;
  for (CubeIndex q = 0; q < g.cube_count(); ++q) {
    const double w = omega.mass(q);
    if (w > 0.0) {
      if (!best.degenerate) offer(best, sums[q] / w, q);
    } else if (sums[q] > 0.0 && !best.degenerate) {
      best.degenerate = true;
      best.value = std::numeric_limits<double>::infinity();
      best.argmax = q;
    }
  }
  return best;
}

double local_testing_at(const CubeWeights& tau, const Measure& sigma,
                        const Measure& omega, const Exponents& exps, CubeIndex cube) {
  require_compatible(tau, sigma, omega);
  const double w = omega.mass(cube);
  if (!(w > 0.0)) return 0.0;
  const double r = exps.p_dual();
  const double integral = inside_power_integral(tau, omega, sigma, cube, r);
  return std::pow(w, -1.0 / exps.q_dual()) * std::pow(integral, 1.0 / r);
}

TestingValue local_testing(const CubeWeights& tau, const Measure& sigma,
                           const Measure& omega, const Exponents& exps) {
  require_compatible(tau, sigma, omega);
  TestingValue best;
  for (CubeIndex q = 0; q < sigma.grid().cube_count(); ++q) {
    if (!(omega.mass(q) > 0.0)) continue;
    offer(best, local_testing_at(tau, sigma, omega, exps, q), q);
  }
  return best;
}

double global_testing_at(const CubeWeights& tau, const Measure& sigma,
                         const Measure& omega, const Exponents& exps, CubeIndex cube) {
  require_compatible(tau, sigma, omega);
  const DyadicGrid& g = sigma.grid();
  const double w = omega.mass(cube);
  if (!(w > 0.0)) return 0.0;
  const int top = g.level(cube);
  std::vector<CubeIndex> chain(top + 1);
  for (int l = top; l >= 0; --l) chain[l] = g.ancestor_at_level(cube, l);

  // T^out_R(omega 1_R) equals omega(R) * B_j on the ring of leaves whose
  // lowest common ancestor with R sits at level j.
  const double r = exps.p_dual();
  double coefficient = 0.0;
  double integral = 0.0;
  for (int l = 0; l <= top; ++l) {
    const CubeIndex q = chain[l];
    coefficient += tau[q] / g.volume(q);
    double ring = 0.0;
    if (l == top) {
      ring = sigma.mass(q);
    } else {
      for (CubeIndex c : g.children(q)) {
        if (c != chain[l + 1]) ring += sigma.mass(c);
      }
    }
    if (ring != 0.0 && coefficient != 0.0) integral += ring * std::pow(coefficient, r);
  }
  return std::pow(w, 1.0 - 1.0 / exps.q_dual()) * std::pow(integral, 1.0 / r);
}

TestingValue global_testing(const CubeWeights& tau, const Measure& sigma,
                            const Measure& omega, const Exponents& exps) {
  require_compatible(tau, sigma, omega);
  TestingValue best;
  best.advisory = exps.p() == exps.q();
  for (CubeIndex q = 0; q < sigma.grid().cube_count(); ++q) {
    if (!(omega.mass(q) > 0.0)) continue;
    offer(best, global_testing_at(tau, sigma, omega, exps, q), q);
  }
  return best;
}

SntvConstants sntv_constants(const CubeWeights& tau, const Measure& sigma,
                             const Measure& omega) {
  require_compatible(tau, sigma, omega);
  const DyadicGrid& g = sigma.grid();
  auto side = [&](const Measure& inner, const Measure& outer) {
    TestingValue best;
    for (CubeIndex q = 0; q < g.cube_count(); ++q) {
      const double m = inner.mass(q);
      if (!(m > 0.0)) continue;
      const GridFunction h =
          apply_T_restricted(tau, inner.restricted(q), q, Localization::inside);
      offer(best, std::sqrt(integrate(h, h, outer) / m), q);
    }
    return best;
  };
  return SntvConstants{side(sigma, omega), side(omega, sigma)};
}

TestingReport testing_report(const CubeWeights& tau, const Measure& sigma,
                             const Measure& omega, const Exponents& exps) {
  const Exponents dual = exps.dual();
  TestingReport report{exps, {}, {}, {}, {}};
  report.local = local_testing(tau, sigma, omega, exps);
  report.local_dual = local_testing(tau, omega, sigma, dual);
  report.global = global_testing(tau, sigma, omega, exps);
  report.global_dual = global_testing(tau, omega, sigma, dual);
  // The dual pair (q', p') has q' = p' exactly when p = q.
  report.global_dual.advisory = report.global.advisory;
  return report;
}

}  // namespace dyadic
