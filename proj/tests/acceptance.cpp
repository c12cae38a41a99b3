// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 3 7        run only criteria 3 and 7
//
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "dyadic/harness.hpp"
#include "oracles.hpp"

using namespace dyadic;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s > 0.0 ? std::abs(a - b) / s : 0.0;
}

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

const std::vector<std::pair<int, int>> kDeskShapes{{1, 2}, {1, 3}, {1, 4}, {1, 5}, {1, 6},
                                                   {2, 1}, {2, 2}, {2, 3}};

SuiteConfig two_weight_suite() {
  SuiteConfig c;
  c.name = "two-weight";
  c.count = 200;
  c.seed = 101;
  c.shapes = kDeskShapes;
  c.exponents = {{2.0, 2.0}};
  c.compute_norms = false;
  c.run_prooflab = false;
  return c;
}

const SuiteReport& two_weight_report() {
  static const SuiteReport r = run_suite(two_weight_suite());
  return r;
}

Outcome necessity() {
  const SuiteReport& r = two_weight_report();
  std::size_t bad = 0;
  double worst = 0.0;
  for (const SuiteRow& row : r.rows) {
    const double c = std::max(row.c1, row.c2);
    if (c > row.c3 * (1.0 + 1e-8)) ++bad;
    if (row.c3 > 0.0) worst = std::max(worst, c / row.c3);
  }
  return {bad == 0, fmt("%zu instances, max max(C1,C2)/C3 = %.12f, %zu violations", r.rows.size(), worst, bad)};
}

Outcome sufficiency() {
  const SuiteReport& r = two_weight_report();
  std::size_t over = 0;
  for (const SuiteRow& row : r.rows) over += row.ratio_sum > 16.0;
  return {over == 0, fmt("max C3/(C1+C2) = %.6f over %zu instances (cap 16), %zu above cap",
                         r.max_ratio_sum, r.rows.size(), over)};
}

Outcome sntv_identity() {
  const SuiteConfig c = two_weight_suite();
  const Exponents two(2.0, 2.0);
  double worst = 0.0;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < c.count; ++i) {
    const Instance inst = suite_instance(c, i);
    const SntvConstants s = sntv_constants(inst.tau, inst.sigma, inst.omega);
    const double a = rel(s.c1.value, local_testing(inst.tau, inst.omega, inst.sigma, two).value);
    const double b = rel(s.c2.value, local_testing(inst.tau, inst.sigma, inst.omega, two).value);
    worst = std::max({worst, a, b});
    bad += a > 1e-10 || b > 1e-10;
  }
  return {bad == 0, fmt("%zu instances, max relative deviation %.3e", c.count, worst)};
}

Outcome embedding_sandwich() {
  SuiteConfig c = two_weight_suite();
  c.seed = 404;
  const double ps[] = {1.5, 2.0, 3.0};
  std::size_t lower = 0, upper = 0;
  double min_low = std::numeric_limits<double>::infinity(), max_up = 0.0;
  AscentOptions opts;
  opts.restarts = 4;
  for (std::size_t i = 0; i < c.count; ++i) {
    const Instance inst = suite_instance(c, i);
    const double p = ps[i % 3];
    const double pd = p / (p - 1.0);
    const double car = std::pow(carleson_norm(inst.tau).value, 1.0 / p);
    const double cp = cet_constant(inst.tau, p, opts).value;
    const double wcar = std::pow(weighted_carleson_norm(inst.tau, inst.omega).value, 1.0 / p);
    const double wcp = cet_constant(inst.tau, inst.omega, p, opts).value;
    for (auto [k, cst] : {std::pair{car, cp}, std::pair{wcar, wcp}}) {
      if (k > cst * (1.0 + 1e-12)) ++lower;
      if (cst > 2.0 * pd * k * (1.0 + 1e-12)) ++upper;
      if (cst > 0.0) min_low = std::min(min_low, cst / k);
      if (k > 0.0) max_up = std::max(max_up, cst / (pd * k));
    }
  }
  return {lower == 0 && upper == 0,
          fmt("%zu tau x 2 (plain, weighted); min C_p/Car^(1/p) = %.6f, max C_p/(p' Car^(1/p)) = %.4f; "
              "%zu lower, %zu upper violations",
              c.count, min_low, max_up, lower, upper)};
}

Outcome maximal_bound() {
  Rng rng(505);
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t bad = 0;
  for (int i = 0; i < 500; ++i) {
    const auto [d, depth] = kDeskShapes[rng.below(kDeskShapes.size())];
    auto g = build_grid(d, depth);
    std::vector<double> w = oracle::lognormal_leaves(rng, g->leaf_count(), 0.5 + 1.5 * rng.uniform());
    if (i % 4 == 0) {
      for (double& x : w) x = rng.uniform() < 0.3 ? 0.0 : x;
    }
    const Measure omega = Measure::weight(g, w);
    GridFunction f(oracle::lognormal_leaves(rng, g->leaf_count(), 2.0));
    if (i % 3 == 0) {
      for (double& x : f.values) x *= rng.uniform() < 0.5 ? -1.0 : 1.0;
    }
    const double p = 1.1 + 3.9 * rng.uniform();
    const double nf = lp_norm(f, omega, p);
    if (!(nf > 0.0)) continue;
    const double ratio = lp_norm(maximal(f, omega), omega, p) / nf;
    const double pd = p / (p - 1.0);
    worst = std::max(worst, ratio - pd);
    bad += ratio > pd + 1e-6;
  }
  return {bad == 0, fmt("500 triples, max (ratio - p') = %.4f, %zu violations", worst, bad)};
}

/// Instance whose every partial sum is exactly representable.
Instance dyadic_rational_instance(Rng& rng, int d, int depth) {
  GridPtr g = build_grid(d, depth);
  std::vector<double> s(g->leaf_count()), w(g->leaf_count()), t(g->cube_count());
  for (double& x : s) x = static_cast<double>(rng.below(16));
  for (double& x : w) x = static_cast<double>(rng.below(16));
  for (CubeIndex q = 0; q < t.size(); ++q) t[q] = g->volume(q) * static_cast<double>(rng.below(8));
  return Instance{g, Measure::weight(g, s), Measure::weight(g, w), CubeWeights::explicit_values(g, t),
                  Exponents(2.0, 2.0), 0, "dyadic-rational", std::nullopt};
}

Outcome operator_correctness() {
  SuiteConfig c = two_weight_suite();
  c.seed = 606;
  c.count = 60;
  c.shapes = {{1, 6}, {1, 10}, {1, 12}, {2, 3}, {2, 5}, {2, 6}, {3, 2}, {3, 4}};
  double apply_dev = 0.0, adj_dev = 0.0;
  std::size_t apply_bad = 0, adj_bad = 0;
  Rng rng(607);
  for (std::size_t i = 0; i < c.count; ++i) {
    const Instance inst = suite_instance(c, i);
    const std::size_t n = inst.grid->leaf_count();
    const GridFunction fast = apply_T(inst.tau, inst.sigma);
    const GridFunction slow = apply_T(inst.tau, inst.sigma, Evaluation::ancestor_loop);
    double dev = 0.0;
    for (LeafIndex x = 0; x < n; ++x) dev = std::max(dev, rel(fast[x], slow[x]));
    apply_dev = std::max(apply_dev, dev);
    apply_bad += dev > 1e-12;

    const GridFunction f(oracle::lognormal_leaves(rng, n));
    const GridFunction h(oracle::lognormal_leaves(rng, n));
    const double lhs = integrate(apply_T(inst.tau, Measure::product(f, inst.sigma)), h, inst.omega);
    const double rhs = integrate(f, apply_T(inst.tau, Measure::product(h, inst.omega)), inst.sigma);
    adj_dev = std::max(adj_dev, rel(lhs, rhs));
    adj_bad += rel(lhs, rhs) > 1e-10;
  }

  // T = T^in_R + T^out_{parent(R)} on every (R, leaf in R); exact arithmetic
  // is guaranteed by integer masses and tau_Q in |Q| Z.
  std::size_t pairs = 0, split_bad = 0;
  for (int i = 0; i < 50; ++i) {
    const auto [d, depth] = kDeskShapes[rng.below(kDeskShapes.size())];
    const Instance inst = dyadic_rational_instance(rng, d, depth);
    const GridFunction full = apply_T(inst.tau, inst.sigma);
    for (CubeIndex r = 0; r < inst.grid->cube_count(); ++r) {
      const GridFunction in = apply_T_restricted(inst.tau, inst.sigma, r, Localization::inside);
      const GridFunction out =
          r == 0 ? apply_T_restricted(inst.tau, inst.sigma, CubeRef::virtual_at(1), Localization::outside)
                 : apply_T_restricted(inst.tau, inst.sigma, inst.grid->parent(r), Localization::outside);
      for (LeafIndex x : inst.grid->leaves(r)) {
        ++pairs;
        split_bad += in[x] + out[x] != full[x];
      }
    }
  }
  return {apply_bad == 0 && adj_bad == 0 && split_bad == 0,
          fmt("apply_T vs ancestor loop max dev %.2e on %zu instances (<= 4096 leaves); "
              "adjoint max dev %.2e; in/out split exact on %zu/%zu pairs",
              apply_dev, c.count, adj_dev, pairs - split_bad, pairs)};
}

Outcome power_and_ascent() {
  SuiteConfig c = two_weight_suite();
  c.seed = 707;
  double svd_dev = 0.0;
  std::size_t svd_bad = 0, svd_count = 0;
  auto svd_check = [&](const Instance& inst) {
    const double dense = oracle::top_singular(*inst.grid, vec(inst.tau.values()),
                                              vec(inst.sigma.leaf_masses()), vec(inst.omega.leaf_masses()));
    const double dev = rel(exact_norm_22(inst.tau, inst.sigma, inst.omega).value, dense);
    svd_dev = std::max(svd_dev, dev);
    svd_bad += dev > 1e-8;
    ++svd_count;
  };
  AscentOptions opts;
  opts.route_exact_22 = false;
  std::size_t reached = 0;
  double worst_gap = 0.0;
  for (std::size_t i = 0; i < c.count; ++i) {
    const Instance inst = suite_instance(c, i);
    svd_check(inst);
    const double exact = exact_norm_22(inst.tau, inst.sigma, inst.omega).value;
    const double lower = strong_norm_lower(inst.tau, inst.sigma, inst.omega, Exponents(2.0, 2.0), opts).value;
    const double gap = exact > 0.0 ? (exact - lower) / exact : 0.0;
    worst_gap = std::max(worst_gap, gap);
    reached += gap <= 1e-6;
  }
  SuiteConfig big = c;
  big.count = 12;
  big.shapes = {{1, 8}, {1, 10}, {2, 4}, {2, 5}, {3, 3}};
  for (std::size_t i = 0; i < big.count; ++i) svd_check(suite_instance(big, i));

  const double share = static_cast<double>(reached) / static_cast<double>(c.count);
  return {svd_bad == 0 && share >= 0.95,
          fmt("dense SVD max dev %.2e on %zu instances (<= 1024 leaves); ascent within 1e-6 on %zu/%zu "
              "(%.1f%%), largest gap %.2e, %zu flagged",
              svd_dev, svd_count, reached, c.count, 100.0 * share, worst_gap, c.count - reached)};
}

Outcome prooflab_audits() {
  SuiteConfig c;
  c.name = "prooflab";
  c.count = 200;
  c.seed = 808;
  c.shapes = {{1, 4}, {1, 5}, {1, 6}, {2, 2}, {2, 3}};
  c.exponents = {{2.0, 2.0}, {1.5, 1.5}, {3.0, 3.0}, {1.5, 3.0}};
  c.compute_norms = false;
  c.run_prooflab = true;
  const SuiteReport r = run_suite(c);
  std::set<std::string> kinds;
  std::size_t layers = 0, overlap = 0, crowd = 0, occ = 0;
  double geo = 0.0, pc = 0.0;
  for (const SuiteRow& row : r.rows) {
    kinds.insert(row.violations.begin(), row.violations.end());
    layers += row.layers;
    overlap = std::max(overlap, row.whitney_overlap);
    crowd = std::max(crowd, row.whitney_crowd);
    occ = std::max(occ, row.occurrence_max);
    geo = std::max(geo, row.geometric_sum);
    pc = std::max(pc, row.principal_carleson);
  }
  std::string which;
  for (const auto& k : kinds) which += " " + k;
  return {r.pass(), fmt("%zu instances, %zu layers; max overlap %zu, crowd %zu, occurrences %zu, "
                        "geometric sum %.4f, principal Carleson %.4f; %zu failing instances%s",
                        r.rows.size(), layers, overlap, crowd, occ, geo, pc, r.violation_count,
                        which.c_str())};
}

Outcome weak_strong_order() {
  SuiteConfig c;
  c.name = "norms";
  c.count = 200;
  c.seed = 909;
  c.shapes = kDeskShapes;
  c.exponents = {{2.0, 2.0}, {1.5, 3.0}, {3.0, 3.0}, {1.5, 2.0}};
  c.compute_norms = true;
  c.run_prooflab = false;
  AscentOptions& o = c.ascent;
  o.restarts = 6;
  const SuiteReport r = run_suite(c);
  std::size_t order_bad = 0, testing_bad = 0, pointwise_bad = 0, checked = 0;
  for (const SuiteRow& row : r.rows) {
    order_bad += row.weak_lower > row.strong_lower * (1.0 + 1e-12);
    if (row.p == 2.0 && row.q == 2.0) {
      const double t = std::max({row.local, row.local_dual, row.global, row.global_dual});
      testing_bad += t > row.c3 * (1.0 + 1e-8);
    }
  }
  Rng rng(910);
  for (std::size_t i = 0; i < c.count; i += 4) {
    const Instance inst = suite_instance(c, i);
    const NormEstimate weak = weak_norm_lower(inst.tau, inst.sigma, inst.omega, inst.exps, c.ascent);
    std::vector<GridFunction> fs{weak.f};
    for (int k = 0; k < 5; ++k) fs.emplace_back(oracle::lognormal_leaves(rng, inst.grid->leaf_count(), 1.5));
    for (const GridFunction& f : fs) {
      const double w = weak_objective(inst.tau, inst.sigma, inst.omega, inst.exps, f);
      const double s = strong_objective(inst.tau, inst.sigma, inst.omega, inst.exps, f);
      pointwise_bad += w > s * (1.0 + 1e-12);
      ++checked;
    }
  }
  return {order_bad == 0 && testing_bad == 0 && pointwise_bad == 0,
          fmt("%zu instances: weak > strong %zu times, testing > exact norm %zu times; "
              "pointwise weak <= strong on %zu/%zu functions",
              r.rows.size(), order_bad, testing_bad, checked - pointwise_bad, checked)};
}

Outcome determinism() {
  SuiteConfig c;
  c.name = "determinism";
  c.count = 30;
  c.seed = 1010;
  c.shapes = kDeskShapes;
  c.exponents = {{2.0, 2.0}, {1.5, 3.0}};
  c.ascent.restarts = 4;
  c.threads = 1;
  const SuiteReport a = run_suite(c);
  c.threads = 2;
  const SuiteReport b = run_suite(c);
  const std::string ja = report_jsonl(a, false), jb = report_jsonl(b, false);
  const bool same = ja == jb && report_csv(a) == report_csv(b) && summary_csv(a) == summary_csv(b);
  SuiteConfig other = c;
  other.seed = 1011;
  const bool differs = report_jsonl(run_suite(other), false) != ja;
  return {same && differs, fmt("%zu rows, %zu bytes of rows identical across runs: %s; other seed differs: %s",
                               a.rows.size(), ja.size(), same ? "yes" : "no", differs ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"necessity", necessity},
      {"sufficiency ratio", sufficiency},
      {"L2 testing identity", sntv_identity},
      {"embedding sandwich", embedding_sandwich},
      {"maximal function", maximal_bound},
      {"operator correctness", operator_correctness},
      {"power iteration and ascent", power_and_ascent},
      {"decomposition audits", prooflab_audits},
      {"weak vs strong", weak_strong_order},
      {"determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  bool all_pass = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
