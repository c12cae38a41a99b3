#include "doctest.h"

#include <cmath>

#include "dyadic/error.hpp"
#include "dyadic/operators.hpp"
#include "dyadic/random.hpp"
#include "oracles.hpp"

using namespace dyadic;

namespace {

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_SUITE("operators") {

TEST_CASE("single-term operator") {
  auto g = build_grid(1, 2);
  const auto tau = CubeWeights::root_only(g);
  const Measure nu = Measure::product(GridFunction({1, 3, 5, 7}), Measure::lebesgue(g));
  const GridFunction t = apply_T(tau, nu);
  for (double v : t.values) CHECK(v == doctest::Approx(4.0));
  const GridFunction z = apply_T(CubeWeights::zero(g), nu);
  for (double v : z.values) CHECK(v == 0.0);
}

TEST_CASE("tau equal to volume against the enumeration") {
  auto g = build_grid(1, 2);
  std::vector<double> tau(g->cube_count());
  for (CubeIndex q = 0; q < g->cube_count(); ++q) tau[q] = g->volume(q);
  const auto w = CubeWeights::explicit_values(g, tau);
  const GridFunction t = apply_T(w, Measure::lebesgue(g));
  const auto brute = oracle::apply_T(*g, tau, std::vector<double>(4, 0.25));
  for (LeafIndex x = 0; x < 4; ++x) {
    CHECK(t[x] == doctest::Approx(brute[x]).epsilon(1e-14));
    CHECK(t[x] == doctest::Approx(1.75));
  }
  // Bilinear form at f = g = 1 is sum_Q tau_Q |Q| here.
  const Measure leb = Measure::lebesgue(g);
  const auto one = GridFunction::constant(*g, 1.0);
  CHECK(bilinear_form(w, one, leb, one, leb) == doctest::Approx(1.75));
  double direct = 0.0;
  for (CubeIndex q = 0; q < g->cube_count(); ++q) direct += tau[q] * g->volume(q);
  CHECK(bilinear_form(w, one, leb, one, leb) == doctest::Approx(direct));
}

TEST_CASE("prefix pass, ancestor loop and brute force agree") {
  Rng rng(3);
  for (auto [d, depth] : {std::pair{1, 6}, {2, 3}, {1, 0}}) {
    auto g = build_grid(d, depth);
    const auto tau = CubeWeights::sparse_random(g, 0.6, rng.below(1000));
    const Measure nu = Measure::weight(g, oracle::lognormal_leaves(rng, g->leaf_count()));
    const auto fast = apply_T(tau, nu);
    const auto loop = apply_T(tau, nu, Evaluation::ancestor_loop);
    const auto brute = oracle::apply_T(*g, vec(tau.values()), vec(nu.leaf_masses()));
    for (LeafIndex x = 0; x < g->leaf_count(); ++x) {
      CHECK(fast[x] == doctest::Approx(brute[x]).epsilon(1e-12));
      CHECK(loop[x] == doctest::Approx(brute[x]).epsilon(1e-12));
    }
  }
}

TEST_CASE("self adjointness") {
  Rng rng(4);
  auto g = build_grid(1, 6);
  const auto tau = CubeWeights::fractional(g, 0.5);
  const Measure sigma = Measure::weight(g, oracle::lognormal_leaves(rng, g->leaf_count()));
  const Measure omega = Measure::weight(g, oracle::lognormal_leaves(rng, g->leaf_count()));
  std::vector<double> fv(g->leaf_count()), gv(g->leaf_count());
  for (auto& x : fv) x = rng.normal();
  for (auto& x : gv) x = rng.normal();
  const GridFunction f(fv), h(gv);
  const double a = integrate(h, apply_T(tau, Measure::product(f, sigma)), omega);
  const double b = integrate(f, apply_T(tau, Measure::product(h, omega)), sigma);
  const double c = bilinear_form(tau, f, sigma, h, omega);
  CHECK(a == doctest::Approx(b).epsilon(1e-10));
  CHECK(a == doctest::Approx(c).epsilon(1e-10));
}

TEST_CASE("in and out localizations") {
  Rng rng(5);
  auto g = build_grid(2, 3);
  const auto tau = CubeWeights::sparse_random(g, 0.7, 9);
  const Measure nu = Measure::weight(g, oracle::lognormal_leaves(rng, g->leaf_count()));
  const auto full = apply_T(tau, nu);
  const auto tv = vec(tau.values());

  SUBCASE("leaf in-mode and root out-mode") {
    const CubeIndex leaf = g->leaf_cube(5);
    const auto in = apply_T_restricted(tau, nu, leaf, Localization::inside);
    for (LeafIndex x = 0; x < g->leaf_count(); ++x) {
      const double expect = x == 5 ? tau[leaf] * nu.mass(leaf) / g->volume(leaf) : 0.0;
      CHECK(in[x] == doctest::Approx(expect));
    }
    const auto out = apply_T_restricted(tau, nu, g->root(), Localization::outside);
    for (double v : out.values) CHECK(v == doctest::Approx(tau[0] * nu.total()));
  }

  SUBCASE("virtual cubes") {
    const auto in = apply_T_restricted(tau, nu, CubeRef::virtual_at(1), Localization::inside);
    const auto out = apply_T_restricted(tau, nu, CubeRef::virtual_at(2), Localization::outside);
    for (LeafIndex x = 0; x < g->leaf_count(); ++x) {
      CHECK(in[x] == full[x]);
      CHECK(out[x] == 0.0);
    }
  }

  SUBCASE("T = in at R plus out at the parent of R") {
    for (CubeIndex r = 1; r < g->cube_count(); ++r) {
      const auto in = apply_T_restricted(tau, nu, r, Localization::inside);
      const auto out = apply_T_restricted(tau, nu, g->parent(r), Localization::outside);
      for (LeafIndex x : g->leaves(r)) {
        CHECK(in[x] + out[x] == doctest::Approx(full[x]).epsilon(1e-12));
      }
    }
  }

  SUBCASE("against brute force restrictions") {
    const auto masses = oracle::cube_masses(*g, vec(nu.leaf_masses()));
    for (CubeIndex r : {CubeIndex{0}, CubeIndex{3}, CubeIndex{10}, g->leaf_cube(17)}) {
      const auto in = apply_T_restricted(tau, nu, r, Localization::inside);
      const auto out = apply_T_restricted(tau, nu, r, Localization::outside);
      for (LeafIndex x = 0; x < g->leaf_count(); ++x) {
        double ei = 0.0, eo = 0.0;
        for (CubeIndex q = 0; q < g->cube_count(); ++q) {
          if (!oracle::cube_has_leaf(*g, q, x)) continue;
          const double term = tv[q] * masses[q] / oracle::volume(*g, q);
          if (oracle::cube_inside(*g, q, r)) ei += term;
          if (oracle::cube_inside(*g, r, q)) eo += term;
        }
        CHECK(in[x] == doctest::Approx(ei).epsilon(1e-12));
        CHECK(out[x] == doctest::Approx(eo).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("weights") {
  auto g = build_grid(2, 2);
  const auto frac = CubeWeights::fractional(g, 1.0);
  CHECK(frac[0] == doctest::Approx(1.0));
  CHECK(frac[1] == doctest::Approx(std::pow(0.25, 0.5)));
  CHECK_THROWS_AS(CubeWeights::fractional(g, 2.0), ArgumentError);
  CHECK_THROWS_AS(CubeWeights::explicit_values(g, std::vector<double>(21, -1.0)), ArgumentError);
  const auto a = CubeWeights::sparse_random(g, 0.5, 42);
  const auto b = CubeWeights::sparse_random(g, 0.5, 42);
  CHECK(vec(a.values()) == vec(b.values()));
  const auto cut = frac.without_finest_levels(1);
  for (CubeIndex q = 0; q < g->cube_count(); ++q) {
    CHECK(cut[q] == (g->level(q) == 2 ? 0.0 : frac[q]));
  }
}

TEST_CASE("maximal function") {
  auto g = build_grid(1, 2);
  const Measure leb = Measure::lebesgue(g);
  const auto m = maximal(GridFunction({1, 3, 5, 7}), leb);
  CHECK(m[3] == doctest::Approx(7.0));
  CHECK(maximal(GridFunction({8, 0, 0, 0}), leb)[1] == doctest::Approx(4.0));
  for (double v : maximal(GridFunction::constant(*g, -2.0), leb).values) {
    CHECK(v == doctest::Approx(2.0));
  }
  CHECK_THROWS_AS(maximal(GridFunction({1, 1, 1, 1}), Measure::zero(g)), UndefinedAverage);
}

TEST_CASE("maximal function bound on random data") {
  Rng rng(6);
  auto g = build_grid(1, 6);
  for (int trial = 0; trial < 30; ++trial) {
    const double p = 1.2 + 3.0 * rng.uniform();
    const Measure w = Measure::weight(g, oracle::lognormal_leaves(rng, g->leaf_count(), 1.5));
    GridFunction f(oracle::lognormal_leaves(rng, g->leaf_count(), 2.0));
    const double ratio = lp_norm(maximal(f, w), w, p) / lp_norm(f, w, p);
    CHECK(ratio >= 1.0 - 1e-12);
    CHECK(ratio <= p / (p - 1.0) + 1e-6);
  }
}

TEST_CASE("linearized maximal function") {
  auto g = build_grid(1, 2);
  const Measure leb = Measure::lebesgue(g);
  const GridFunction f({1, 3, 5, 7});
  Selection empty;
  CHECK(max_abs(linearized_maximal(f, leb, empty).values) == 0.0);
  Selection all{{{0, {0, 1, 2, 3}}}};
  for (double v : linearized_maximal(f, leb, all).values) CHECK(v == doctest::Approx(4.0));
  Selection leaves{{{3, {0}}, {4, {1}}, {5, {2}}, {6, {3}}}};
  const auto l = linearized_maximal(f, leb, leaves);
  for (LeafIndex x = 0; x < 4; ++x) CHECK(l[x] == doctest::Approx(f[x]));

  Selection overlap{{{0, {0, 1}}, {1, {1}}}};
  CHECK_THROWS_AS(linearized_maximal(f, leb, overlap), SelectionError);
  Selection outside{{{1, {2}}}};
  CHECK_THROWS_AS(linearized_maximal(f, leb, outside), SelectionError);

  // Dominated by the maximal function for any selection.
  Rng rng(8);
  auto h = build_grid(2, 3);
  const Measure w = Measure::weight(h, oracle::lognormal_leaves(rng, h->leaf_count()));
  GridFunction u(oracle::lognormal_leaves(rng, h->leaf_count()));
  Selection s;
  std::vector<char> used(h->leaf_count());
  for (CubeIndex q = 0; q < h->cube_count(); ++q) {
    std::vector<LeafIndex> pick;
    for (LeafIndex x : h->leaves(q)) {
      if (!used[x] && rng.uniform() < 0.2) {
        used[x] = 1;
        pick.push_back(x);
      }
    }
    if (!pick.empty()) s.sets.emplace_back(q, pick);
  }
  const auto lin = linearized_maximal(u, w, s);
  const auto mx = maximal(u, w);
  for (LeafIndex x = 0; x < h->leaf_count(); ++x) CHECK(lin[x] <= mx[x] * (1 + 1e-12));
}

TEST_CASE("localized two-weight maximal function") {
  Rng rng(10);
  auto g = build_grid(1, 4);
  const Measure w = Measure::weight(g, oracle::lognormal_leaves(rng, g->leaf_count()));
  GridFunction f(oracle::lognormal_leaves(rng, g->leaf_count()));
  const CubeIndex top = 1;

  // sigma = omega and p = 1 is the maximal function restricted to Q0.
  const auto red = localized_two_weight_maximal(f, w, w, top, 1.0);
  for (LeafIndex x : g->leaves(top)) {
    double best = 0.0;
    for (CubeIndex a = g->leaf_cube(x); a != DyadicGrid::npos && g->contains(top, a); a = g->parent(a)) {
      best = std::max(best, weighted_avg(f, w, a));
    }
    CHECK(red.values[x] == doctest::Approx(best));
  }

  const Measure s = Measure::weight(g, oracle::lognormal_leaves(rng, g->leaf_count()));
  const auto zero = localized_two_weight_maximal(GridFunction::zero(*g), s, w, top, 2.0);
  for (double v : zero.values.values) CHECK(v == 0.0);

  const auto one = localized_two_weight_maximal(GridFunction::constant(*g, 1.0), s, w, top, 3.0);
  for (LeafIndex x : g->leaves(top)) {
    double best = 0.0;
    for (CubeIndex a = g->leaf_cube(x); a != DyadicGrid::npos && g->contains(top, a); a = g->parent(a)) {
      best = std::max(best, std::cbrt(s.mass(a) / w.mass(a)));
    }
    CHECK(one.values[x] == doctest::Approx(best));
  }
}

}
