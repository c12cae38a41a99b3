#include "dyadic/prooflab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "dyadic/error.hpp"

namespace dyadic {

namespace {

constexpr CubeIndex npos = DyadicGrid::npos;
constexpr double kRelTol = 1e-9;

// j-fold parent, npos once we climb past the root.
CubeIndex ancestor(const DyadicGrid& g, CubeIndex q, int j) {
  for (int i = 0; i < j && q != npos; ++i) q = g.parent(q);
  return q;
}

bool meets(const DyadicGrid& g, CubeIndex a, CubeIndex b) {
  return g.contains(a, b) || g.contains(b, a);
}

std::vector<double> cube_sums(const DyadicGrid& g, std::span<const double> leaf_mass) {
  std::vector<double> mass(g.cube_count());
  const std::size_t leaf0 = g.level_offset(g.depth());
  for (LeafIndex x = 0; x < g.leaf_count(); ++x) mass[leaf0 + x] = leaf_mass[x];
  for (CubeIndex q = leaf0; q-- > 0;) {
    double s = 0.0;
    for (CubeIndex c : g.children(q)) s += mass[c];
    mass[q] = s;
  }
  return mass;
}

// T^in_top(nu) on every leaf (zero outside top); top == npos means the whole
// operator, which is how virtual cubes behave.
std::vector<double> inside_values(const CubeWeights& tau, const std::vector<double>& mass,
                                  CubeIndex top) {
  const DyadicGrid& g = tau.grid();
  std::vector<double> out(g.leaf_count(), 0.0);
  const CubeIndex start = top == npos ? g.root() : top;
  std::vector<std::pair<CubeIndex, double>> stack;
  stack.emplace_back(start, tau[start] * (mass[start] / g.volume(start)));
  while (!stack.empty()) {
    const auto [q, acc] = stack.back();
    stack.pop_back();
    if (g.is_leaf_cube(q)) {
      out[g.leaf_of(q)] = acc;
      continue;
    }
    for (CubeIndex c : g.children(q)) {
      stack.emplace_back(c, acc + tau[c] * (mass[c] / g.volume(c)));
    }
  }
  return out;
}

// in[q] = every leaf of q lies in {v > 2^k}
std::vector<char> inside_flags(const DyadicGrid& g, const GridFunction& v, int k) {
  std::vector<char> in(g.cube_count());
  const std::size_t leaf0 = g.level_offset(g.depth());
  for (LeafIndex x = 0; x < g.leaf_count(); ++x) in[leaf0 + x] = above_level(v[x], k);
  for (CubeIndex q = leaf0; q-- > 0;) {
    bool all = true;
    for (CubeIndex c : g.children(q)) all = all && in[c];
    in[q] = all;
  }
  return in;
}

bool leq(double lhs, double rhs) { return lhs <= rhs + kRelTol * std::abs(rhs); }

bool band_member(double value, int k, int m) {
  return above_level(value, k + m - 1) && !above_level(value, k + m);
}

}  // namespace

std::vector<CubeIndex> superlevel_maximal_cubes(const DyadicGrid& grid,
                                                const GridFunction& v, double lambda,
                                                bool meet_double) {
  if (v.size() != grid.leaf_count()) throw ArgumentError("function size does not match grid");
  std::vector<char> in(grid.cube_count());
  std::vector<char> hit(grid.cube_count());
  const std::size_t leaf0 = grid.level_offset(grid.depth());
  for (LeafIndex x = 0; x < grid.leaf_count(); ++x) {
    in[leaf0 + x] = v[x] > lambda;
    hit[leaf0 + x] = v[x] > 2.0 * lambda;
  }
  for (CubeIndex q = leaf0; q-- > 0;) {
    bool all = true;
    bool any = false;
    for (CubeIndex c : grid.children(q)) {
      all = all && in[c];
      any = any || hit[c];
    }
    in[q] = all;
    hit[q] = any;
  }
  std::vector<CubeIndex> out;
  for (CubeIndex q = 0; q < grid.cube_count(); ++q) {
    if (!in[q]) continue;
    const CubeIndex p = grid.parent(q);
    if (p != npos && in[p]) continue;
    if (meet_double && !hit[q]) continue;
    out.push_back(q);
  }
  return out;
}

const WhitneyLayer* WhitneyDecomposition::layer(int k) const {
  if (layers.empty() || k < k_min() || k > k_max()) return nullptr;
  return &layers[static_cast<std::size_t>(k - k_min())];
}

std::vector<int> WhitneyDecomposition::layers_containing(CubeIndex cube) const {
  auto it = membership.find(cube);
  return it == membership.end() ? std::vector<int>{} : it->second;
}

bool WhitneyDecomposition::contains(int k, CubeIndex cube) const {
  const WhitneyLayer* l = layer(k);
  return l != nullptr && std::binary_search(l->cubes.begin(), l->cubes.end(), cube);
}

std::size_t WhitneyDecomposition::saturated_layers() const {
  return static_cast<std::size_t>(
      std::count_if(layers.begin(), layers.end(), [](const WhitneyLayer& l) { return l.saturated; }));
}

WhitneyDecomposition whitney_layers(GridPtr grid, const GridFunction& v, int rho,
                                    int floor_margin) {
  if (rho < 1) throw ArgumentError("rho must be at least 1");
  if (floor_margin < 1) throw ArgumentError("floor margin must be at least 1");
  const DyadicGrid& g = *grid;
  if (v.size() != g.leaf_count()) throw ArgumentError("function size does not match grid");

  WhitneyDecomposition w;
  w.grid = grid;
  w.v = v;
  w.rho = rho;

  double vmax = 0.0;
  double vmin = std::numeric_limits<double>::infinity();
  for (double x : v.values) {
    if (!std::isfinite(x)) throw ArgumentError("function must be finite");
    if (x > 0.0) {
      vmax = std::max(vmax, x);
      vmin = std::min(vmin, x);
    }
  }
  if (!(vmax > 0.0)) return w;

  // Largest k with 2^k < vmax, and a floor a few levels below min positive v.
  int e = 0;
  const double mant = std::frexp(vmax, &e);
  const int k_hi = mant == 0.5 ? e - 2 : e - 1;
  std::frexp(vmin, &e);
  const int k_lo = (e - 1) - floor_margin;

  for (int k = k_lo; k <= k_hi; ++k) {
    WhitneyLayer layer;
    layer.k = k;
    const std::vector<char> in = inside_flags(g, v, k);
    if (in[g.root()]) {
      layer.saturated = true;
      layer.cubes.push_back(g.root());
    } else {
      for (CubeIndex q = 0; q < g.cube_count(); ++q) {
        const CubeIndex a = ancestor(g, q, rho);
        if (a == npos || !in[a]) continue;
        const CubeIndex b = g.parent(a);
        if (b != npos && in[b]) continue;
        layer.cubes.push_back(q);
      }
      std::vector<char> covered(g.leaf_count());
      for (CubeIndex q : layer.cubes) {
        for (LeafIndex x : g.leaves(q)) covered[x] = 1;
      }
      for (LeafIndex x = 0; x < g.leaf_count(); ++x) {
        if (above_level(v[x], k) && !covered[x]) layer.uncovered.push_back(x);
      }
    }
    for (CubeIndex q : layer.cubes) w.membership[q].push_back(k);
    w.layers.push_back(std::move(layer));
  }
  return w;
}

WhitneyAudit audit_whitney(const WhitneyDecomposition& w) {
  WhitneyAudit audit;
  if (!w.grid) return audit;
  const DyadicGrid& g = *w.grid;
  const int d = g.dimension();
  audit.overlap_bound = std::size_t{8} << ((w.rho + 1) * d);
  audit.crowd_cap = (std::size_t{1} << (w.rho + 2)) << (w.rho * d);
  audit.saturated_layers = w.saturated_layers();

  auto all_inside = [&](CubeIndex q, int k) {
    for (LeafIndex x : g.leaves(q)) {
      if (!w.in_level_set(x, k)) return false;
    }
    return true;
  };

  for (const WhitneyLayer& layer : w.layers) {
    const int k = layer.k;
    std::vector<int> cover(g.leaf_count(), 0);
    for (CubeIndex q : layer.cubes) {
      for (LeafIndex x : g.leaves(q)) {
        if (!w.in_level_set(x, k) || cover[x] > 0) ++audit.cover_violations;
        ++cover[x];
      }
    }
    for (LeafIndex x = 0; x < g.leaf_count(); ++x) {
      if (w.in_level_set(x, k) && cover[x] == 0) ++audit.cover_violations;
    }
    if (layer.saturated) continue;

    std::vector<std::size_t> overlap(g.leaf_count(), 0);
    for (CubeIndex q : layer.cubes) {
      const CubeIndex a = ancestor(g, q, w.rho);
      const CubeIndex b = a == npos ? npos : g.parent(a);
      if (a == npos || !all_inside(a, k) || (b != npos && all_inside(b, k))) {
        ++audit.whitney_violations;
      }
      if (a == npos) continue;
      for (LeafIndex x : g.leaves(a)) ++overlap[x];
      std::size_t crowd = 0;
      for (CubeIndex other : layer.cubes) crowd += meets(g, other, a) ? 1 : 0;
      audit.crowd_max = std::max(audit.crowd_max, crowd);
    }
    for (std::size_t c : overlap) audit.overlap_max = std::max(audit.overlap_max, c);
  }

  for (const auto& [q, ks] : w.membership) {
    for (CubeIndex a = g.parent(q); a != npos; a = g.parent(a)) {
      for (int l : w.layers_containing(a)) {
        for (int k : ks) {
          if (!(k > l)) ++audit.nested_violations;
        }
      }
    }
  }
  return audit;
}

const LayerCube* ClassifiedLayers::find(int k, CubeIndex cube) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), std::make_pair(k, cube),
                             [](const LayerCube& e, const std::pair<int, CubeIndex>& key) {
                               return std::make_pair(e.k, e.cube) < key;
                             });
  if (it == entries.end() || it->k != k || it->cube != cube) return nullptr;
  return &*it;
}

ClassifiedLayers corridor_sets(const WhitneyDecomposition& w, int m) {
  if (m < 1) throw ArgumentError("corridor offset m must be at least 1");
  ClassifiedLayers out;
  out.m = m;
  if (!w.grid) return out;
  const DyadicGrid& g = *w.grid;
  for (const WhitneyLayer& layer : w.layers) {
    for (CubeIndex q : layer.cubes) {
      LayerCube e;
      e.k = layer.k;
      e.cube = q;
      for (LeafIndex x : g.leaves(q)) {
        if (band_member(w.v[x], layer.k, m)) e.corridor.push_back(x);
      }
      std::sort(e.corridor.begin(), e.corridor.end());
      out.entries.push_back(std::move(e));
    }
  }
  return out;
}

ClassifiedLayers classify_cubes(const WhitneyDecomposition& w, const GridFunction& f,
                                const Measure& sigma, const Measure& omega,
                                const CubeWeights& tau, double eta, int m) {
  if (!(eta > 0.0 && eta < 1.0)) throw ArgumentError("eta must lie in (0, 1)");
  ClassifiedLayers out = corridor_sets(w, m);
  out.eta = eta;
  if (!w.grid) return out;
  const DyadicGrid& g = *w.grid;
  if (f.size() != g.leaf_count()) throw ArgumentError("function size does not match grid");

  std::vector<double> leaf_mass(g.leaf_count());
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    LayerCube& e = out.entries[i];
    e.cube_mass = omega.mass(e.cube);
    std::fill(leaf_mass.begin(), leaf_mass.end(), 0.0);
    double em = 0.0;
    for (LeafIndex x : e.corridor) {
      leaf_mass[x] = omega.leaf_mass(x);
      em += leaf_mass[x];
    }
    e.corridor_mass = em;

    const CubeIndex top = g.parent(e.cube);
    if (em > 0.0) {
      const std::vector<double> u = inside_values(tau, cube_sums(g, leaf_mass), top);
      auto tally = [&](LeafIndex x) {
        const double term = f[x] * sigma.leaf_mass(x) * u[x];
        if (above_level(w.v[x], e.k + m)) {
          e.beta += term;
        } else {
          e.alpha += term;
        }
      };
      if (top == npos) {
        for (LeafIndex x = 0; x < g.leaf_count(); ++x) tally(x);
      } else {
        for (LeafIndex x : g.leaves(top)) tally(x);
      }
    }

    if (em <= eta * e.cube_mass) {
      e.cls = 1;
    } else if (e.alpha > e.beta) {
      e.cls = 2;
    } else {
      e.cls = 3;
    }
    if (!leq(std::ldexp(em, e.k), e.alpha + e.beta)) out.key_violations.push_back(i);
  }
  return out;
}

CorridorAudit audit_corridors(const WhitneyDecomposition& w, const ClassifiedLayers& c) {
  CorridorAudit audit;
  audit.unsmall_bound = 1.0 / c.eta;
  audit.key_violations = c.key_violations.size();
  if (!w.grid) return audit;
  const DyadicGrid& g = *w.grid;

  for (const WhitneyLayer& layer : w.layers) {
    std::vector<int> seen(g.leaf_count(), 0);
    for (CubeIndex q : layer.cubes) {
      const LayerCube* e = c.find(layer.k, q);
      if (e == nullptr) continue;
      for (LeafIndex x : e->corridor) {
        if (!g.contains_leaf(q, x) || seen[x] > 0) ++audit.overlap_violations;
        ++seen[x];
      }
    }
    for (LeafIndex x = 0; x < g.leaf_count(); ++x) {
      const bool band = w.in_level_set(x, layer.k) && band_member(w.v[x], layer.k, c.m);
      if (band != (seen[x] > 0)) ++audit.union_violations;
    }
  }

  std::map<CubeIndex, std::vector<const LayerCube*>> by_cube;
  for (const LayerCube& e : c.entries) by_cube[e.cube].push_back(&e);
  for (const auto& [q, list] : by_cube) {
    std::set<LeafIndex> used;
    std::size_t unsmall = 0;
    for (const LayerCube* e : list) {
      for (LeafIndex x : e->corridor) {
        if (!used.insert(x).second) ++audit.disjoint_in_k_violations;
      }
      if (e->cls != 1) ++unsmall;
    }
    audit.max_unsmall_count = std::max(audit.max_unsmall_count, unsmall);
  }
  return audit;
}

Neighborhood neighbor_sets(const WhitneyDecomposition& w, const CubeWeights& tau,
                           const Measure& omega, CubeIndex cube, int k, int m) {
  if (!w.contains(k, cube)) throw ArgumentError("cube is not in the requested layer");
  const DyadicGrid& g = *w.grid;
  Neighborhood out;
  const CubeIndex top = g.parent(cube);
  auto touches = [&](CubeIndex r) { return top == npos || meets(g, top, r); };

  for (CubeIndex q : w.layer(k)->cubes) {
    if (touches(q)) out.neighbors.push_back(q);
  }
  const WhitneyLayer* upper = w.layer(k + m);
  if (upper == nullptr) return out;
  for (CubeIndex r : upper->cubes) {
    if (touches(r)) out.reach.push_back(r);
  }
  if (out.reach.empty()) return out;

  std::vector<double> leaf_mass(g.leaf_count(), 0.0);
  for (LeafIndex x : g.leaves(cube)) {
    if (band_member(w.v[x], k, m)) leaf_mass[x] = omega.leaf_mass(x);
  }
  const std::vector<double> u = inside_values(tau, cube_sums(g, leaf_mass), top);
  for (CubeIndex r : out.reach) {
    if (top != npos && !g.contains(top, r)) ++out.containment_violations;
    const auto leaves = g.leaves(r);
    const double first = u[leaves.front()];
    for (LeafIndex x : leaves) {
      if (u[x] != first) {
        ++out.constancy_violations;
        break;
      }
    }
  }
  return out;
}

OccurrenceAudit occurrence_audit(const WhitneyDecomposition& w, const ClassifiedLayers& c,
                                 double cap_base) {
  OccurrenceAudit audit;
  const int d = w.grid ? w.grid->dimension() : 0;
  audit.cap = cap_base * std::ldexp(1.0, w.rho * d) * (c.m + 2) / c.eta;
  if (!w.grid) return audit;
  const DyadicGrid& g = *w.grid;
  for (const LayerCube& e : c.entries) {
    if (e.cls != 3) continue;
    const WhitneyLayer* upper = w.layer(e.k + c.m);
    if (upper == nullptr) continue;
    const CubeIndex top = g.parent(e.cube);
    for (CubeIndex r : upper->cubes) {
      if (top == npos || meets(g, top, r)) ++audit.counts[r];
    }
  }
  for (const auto& [r, n] : audit.counts) audit.max_count = std::max(audit.max_count, n);
  return audit;
}

std::vector<CubeIndex> halving_chain(const Measure& omega, LeafIndex x, CubeIndex top) {
  const DyadicGrid& g = omega.grid();
  if (top >= g.cube_count() || x >= g.leaf_count()) throw ArgumentError("index out of range");
  if (!g.contains_leaf(top, x)) throw ArgumentError("point lies outside the starting cube");
  if (!(omega.mass(top) > 0.0)) throw ArgumentError("starting cube has zero mass");

  const CubeIndex leaf = g.leaf_cube(x);
  std::vector<CubeIndex> chain{top};
  for (;;) {
    const CubeIndex cur = chain.back();
    const double half = 0.5 * omega.mass(cur);
    CubeIndex next = npos;
    for (int l = g.level(cur) + 1; l <= g.depth(); ++l) {
      const CubeIndex q = g.ancestor_at_level(leaf, l);
      if (omega.mass(q) <= half) {
        next = q;
        break;
      }
    }
    if (next == npos) break;
    chain.push_back(next);
  }
  return chain;
}

HalvingCheck check_halving_chain(const Measure& omega, std::span<const CubeIndex> chain) {
  const DyadicGrid& g = omega.grid();
  HalvingCheck check;
  for (std::size_t j = 1; j < chain.size(); ++j) {
    const double half = 0.5 * omega.mass(chain[j - 1]);
    if (!g.contains(chain[j - 1], chain[j]) || chain[j] == chain[j - 1] ||
        omega.mass(chain[j]) > half) {
      ++check.halving_violations;
    }
    const CubeIndex p = g.parent(chain[j]);
    if (p == npos || omega.mass(p) < half) ++check.parent_mass_violations;
  }
  return check;
}

std::vector<MaxPrincipleViolation> max_principle_audit(const WhitneyDecomposition& w,
                                                       const GridFunction& f,
                                                       const Measure& sigma,
                                                       const CubeWeights& tau, int m) {
  std::vector<MaxPrincipleViolation> out;
  if (!w.grid) return out;
  const DyadicGrid& g = *w.grid;
  const Measure fs = Measure::product(f, sigma);
  using Part = MaxPrincipleViolation::Part;

  for (const WhitneyLayer& layer : w.layers) {
    const int k = layer.k;
    const double bound = std::ldexp(1.0, k);
    for (CubeIndex q : layer.cubes) {
      const CubeIndex a = ancestor(g, q, w.rho);
      const CubeIndex b = a == npos ? npos : g.parent(a);
      const LeafIndex first = g.leaves(q).front();

      if (b != npos) {
        // Both parts are constant on B, hence on Q.
        double outer = 0.0;
        double complement = 0.0;
        double ring = 0.0;  // (f sigma)(P \ B) along the chain above B
        CubeIndex below = b;
        outer += tau[b] * fs.mass(b) / g.volume(b);
        for (CubeIndex p = g.parent(b); p != npos; below = p, p = g.parent(p)) {
          for (CubeIndex c : g.children(p)) {
            if (c != below) ring += fs.mass(c);
          }
          outer += tau[p] * fs.mass(b) / g.volume(p);
          complement += tau[p] * ring / g.volume(p);
        }
        if (!leq(outer, bound)) out.push_back({Part::outer, k, q, first, outer, bound});
        if (!leq(complement, bound)) {
          out.push_back({Part::complement, k, q, first, complement, bound});
        }
      }

      bool any = false;
      for (LeafIndex x : g.leaves(q)) any = any || band_member(w.v[x], k, m);
      if (!any) continue;
      const std::vector<double> inner =
          inside_values(tau, std::vector<double>(fs.cube_masses().begin(), fs.cube_masses().end()), a);
      for (LeafIndex x : g.leaves(q)) {
        if (!band_member(w.v[x], k, m)) continue;
        if (!leq(bound, inner[x])) {
          out.push_back({Part::inner_lower_bound, k, q, x, inner[x], bound});
        }
      }
    }
  }
  return out;
}

PrincipalForest principal_cubes(const GridFunction& f, const Measure& sigma,
                                std::span<const CubeIndex> seeds) {
  const DyadicGrid& g = sigma.grid();
  if (f.size() != g.leaf_count()) throw ArgumentError("function size does not match grid");
  std::vector<CubeIndex> order(seeds.begin(), seeds.end());
  for (CubeIndex q : order) {
    if (q >= g.cube_count()) throw ArgumentError("seed cube out of range");
  }
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());

  PrincipalForest forest;
  // Canonical order is level-major, so every ancestor seed comes first.
  for (CubeIndex q : order) {
    if (!(sigma.mass(q) > 0.0)) {
      forest.skipped.push_back(q);
      continue;
    }
    const double avg = weighted_avg(f, sigma, q);
    CubeIndex governor = npos;
    for (CubeIndex a = g.parent(q); a != npos; a = g.parent(a)) {
      if (forest.is_member(a)) {
        governor = a;
        break;
      }
    }
    if (governor == npos || avg > 2.0 * forest.average.at(governor)) {
      forest.members.push_back(q);
      forest.average[q] = avg;
      forest.gamma[q] = q;
    } else {
      forest.gamma[q] = governor;
    }
  }
  return forest;
}

PrincipalAudit audit_principal(const PrincipalForest& forest, const GridFunction& f,
                               const Measure& sigma) {
  const DyadicGrid& g = sigma.grid();
  PrincipalAudit audit;
  for (const auto& [q, governor] : forest.gamma) {
    if (!g.contains(governor, q) ||
        weighted_avg(f, sigma, q) > 2.0 * forest.average.at(governor)) {
      ++audit.domination_violations;
    }
  }
  for (const auto& [inner, avg] : forest.average) {
    for (CubeIndex a = g.parent(inner); a != npos; a = g.parent(a)) {
      auto it = forest.average.find(a);
      if (it != forest.average.end() && !(2.0 * it->second < avg)) ++audit.doubling_violations;
    }
  }
  return audit;
}

double geometric_sum_audit(const PrincipalForest& forest, const GridFunction& f,
                           const Measure& sigma) {
  const DyadicGrid& g = sigma.grid();
  if (!(sigma.total() > 0.0)) return 0.0;
  const GridFunction mf = maximal(f, sigma);
  double worst = 0.0;
  for (LeafIndex x = 0; x < g.leaf_count(); ++x) {
    double sum = 0.0;
    for (CubeIndex a = g.leaf_cube(x); a != npos; a = g.parent(a)) {
      auto it = forest.average.find(a);
      if (it != forest.average.end()) sum += it->second;
    }
    if (sum == 0.0) continue;
    if (!(mf[x] > 0.0)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, sum / mf[x]);
  }
  return worst;
}

double carleson_of_principal(const PrincipalForest& forest, const GridFunction& f,
                             const Measure& sigma, double p) {
  if (!(p > 1.0)) throw ArgumentError("p must exceed 1");
  const double norm = std::pow(lp_norm(f, sigma, p), p);
  if (!(norm > 0.0)) return 0.0;
  double sum = 0.0;
  for (const auto& [q, avg] : forest.average) sum += sigma.mass(q) * std::pow(avg, p);
  return sum / norm;
}

}  // namespace dyadic
