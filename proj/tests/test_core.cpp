#include "doctest.h"

#include <cmath>
#include <set>

#include "dyadic/error.hpp"
#include "dyadic/measure.hpp"
#include "dyadic/random.hpp"
#include "oracles.hpp"

using namespace dyadic;

TEST_SUITE("core") {

TEST_CASE("cube and leaf counts") {
  auto g = build_grid(1, 2);
  CHECK(g->leaf_count() == 4);
  CHECK(g->cube_count() == 7);
  auto h = build_grid(2, 1);
  CHECK(h->leaf_count() == 4);
  CHECK(h->cube_count() == 5);
  auto z = build_grid(1, 0);
  CHECK(z->leaf_count() == 1);
  CHECK(z->cube_count() == 1);
  CHECK(z->is_leaf_cube(z->root()));
}

TEST_CASE("leaf budget") {
  CHECK_THROWS_AS(build_grid(2, 6, 1000), SizeError);
  CHECK_THROWS_AS(build_grid(0, 2), ArgumentError);
  CHECK_NOTHROW(build_grid(2, 5, 1024));
}

TEST_CASE("tree structure on several shapes") {
  for (auto [d, depth] : {std::pair{1, 5}, {2, 3}, {3, 2}}) {
    auto g = build_grid(d, depth);
    std::size_t expected = 0;
    for (int l = 0; l <= depth; ++l) expected += std::size_t{1} << (d * l);
    CHECK(g->cube_count() == expected);
    for (CubeIndex q = 0; q < g->cube_count(); ++q) {
      CHECK(g->index(g->ref(q)) == q);
      CHECK(g->volume(q) == std::ldexp(1.0, -d * g->level(q)));
      if (q != g->root()) {
        const CubeIndex p = g->parent(q);
        auto kids = g->children(p);
        CHECK(std::count(kids.begin(), kids.end(), q) == 1);
      }
      if (!g->is_leaf_cube(q)) CHECK(g->children(q).size() == g->children_per_cube());
      // The Morton run of a cube is exactly the set of leaves it contains.
      std::set<LeafIndex> run(g->leaves(q).begin(), g->leaves(q).end());
      CHECK(run.size() == g->leaves_per_cube(q));
      for (LeafIndex x = 0; x < g->leaf_count(); ++x) {
        CHECK(run.contains(x) == oracle::cube_has_leaf(*g, q, x));
      }
    }
  }
}

TEST_CASE("parents, including virtual ones") {
  auto g = build_grid(1, 2);
  const CubeRef left_quarter = g->ref(3);
  CHECK(left_quarter.level == 2);
  CHECK(left_quarter.coords[0] == 0);
  CHECK(g->index(parent(*g, left_quarter, 1)) == 1);
  CHECK(g->index(parent(*g, left_quarter, 2)) == 0);
  const CubeRef up = parent(*g, g->ref(0), 1);
  CHECK(up.is_virtual());
  CHECK(up.height_above_root() == 1);
  CHECK(parent(*g, left_quarter, 5).height_above_root() == 3);
  CHECK(g->parent(g->root()) == DyadicGrid::npos);
  CHECK(g->contains(0, 6));
  CHECK_FALSE(g->contains(1, 5));
}

TEST_CASE("row-major canonical order in two dimensions") {
  auto g = build_grid(2, 1);
  // First coordinate varies fastest.
  CHECK(g->ref(1).coords[0] == 0);
  CHECK(g->ref(2).coords[0] == 1);
  CHECK(g->ref(2).coords[1] == 0);
  CHECK(g->ref(3).coords[1] == 1);
}

TEST_CASE("averages") {
  auto g = build_grid(1, 2);
  const Measure leb = Measure::lebesgue(g);
  CHECK(measure_avg(leb, 1) == doctest::Approx(1.0));
  const Measure point = Measure::weight(g, {1, 0, 0, 0});
  CHECK(measure_avg(point, 0) == doctest::Approx(1.0));
  CHECK(measure_avg(point, 3) == doctest::Approx(4.0));
  CHECK(measure_avg(point, CubeRef::virtual_at(1)) == 0.0);

  const GridFunction f({1, 3, 5, 7});
  CHECK(weighted_avg(f, leb, 0) == doctest::Approx(4.0));
  CHECK(weighted_avg(GridFunction::constant(*g, 2.5), point, 0) == doctest::Approx(2.5));
  CHECK(weighted_avg(f, Measure::weight(g, {1, 0, 0, 1}), 0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(weighted_avg(f, point, 6), UndefinedAverage);
}

TEST_CASE("lp norms") {
  auto g = build_grid(1, 2);
  const Measure leb = Measure::lebesgue(g);
  CHECK(lp_norm(GridFunction::constant(*g, 1.0), leb, 2.0) == doctest::Approx(1.0));
  CHECK(lp_norm(GridFunction({2, 0, 0, 0}), leb, 2.0) == doctest::Approx(1.0));
  CHECK(lp_norm(GridFunction({1, 3, 5, 7}), leb, 1.0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(lp_norm(GridFunction({1, 3, 5, 7}), leb, 0.5), ArgumentError);
}

TEST_CASE("measure invariants on random weights") {
  Rng rng(11);
  auto g = build_grid(2, 3);
  const Measure m = Measure::weight(g, oracle::lognormal_leaves(rng, g->leaf_count()));
  const auto brute = oracle::cube_masses(*g, {m.leaf_masses().begin(), m.leaf_masses().end()});
  for (CubeIndex q = 0; q < g->cube_count(); ++q) {
    CHECK(m.mass(q) == doctest::Approx(brute[q]).epsilon(1e-13));
    if (!g->is_leaf_cube(q)) {
      double s = 0.0;
      for (CubeIndex c : g->children(q)) s += m.mass(c);
      CHECK(m.mass(q) == s);
      double additive = 0.0;
      for (CubeIndex c : g->children(q)) additive += g->volume(c) * measure_avg(m, c);
      CHECK(g->volume(q) * measure_avg(m, q) == doctest::Approx(additive).epsilon(1e-13));
    }
  }
  GridFunction f(oracle::lognormal_leaves(rng, g->leaf_count()));
  for (CubeIndex q = 0; q < g->cube_count(); ++q) {
    double lo = INFINITY, hi = -INFINITY;
    for (LeafIndex x : g->leaves(q)) {
      lo = std::min(lo, f[x]);
      hi = std::max(hi, f[x]);
    }
    const double a = weighted_avg(f, m, q);
    CHECK(a >= lo * (1 - 1e-12));
    CHECK(a <= hi * (1 + 1e-12));
  }
}

TEST_CASE("weights reject negative mass, products may be signed") {
  auto g = build_grid(1, 1);
  CHECK_THROWS_AS(Measure::weight(g, {1.0, -1.0}), ArgumentError);
  CHECK_THROWS_AS(Measure::weight(g, {1.0}), ArgumentError);
  const Measure s = Measure::product(GridFunction({1.0, -3.0}), Measure::lebesgue(g));
  CHECK_FALSE(s.is_weight());
  CHECK(s.total() == doctest::Approx(-1.0));
}

TEST_CASE("exponents") {
  const Exponents e(1.5, 3.0);
  CHECK(1.0 / e.p() + 1.0 / e.p_dual() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(1.0 / e.q() + 1.0 / e.q_dual() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.dual().p() == doctest::Approx(1.5));
  CHECK(e.dual().q() == doctest::Approx(3.0));
  CHECK_THROWS_AS(Exponents(3.0, 2.0), ArgumentError);
  CHECK_THROWS_AS(Exponents(1.0, 2.0), ArgumentError);
}

TEST_CASE("seed mixing is stable") {
  CHECK(mix_seed(7, 0) != mix_seed(7, 1));
  CHECK(mix_seed(7, 3) == mix_seed(7, 3));
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a.normal() == b.normal());
}

}
