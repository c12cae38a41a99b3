#include "dyadic/extremal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "dyadic/error.hpp"
#include "dyadic/random.hpp"
#include "tree_kernel.hpp"

namespace dyadic {

namespace {

using Vec = std::vector<double>;

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Maximize ||A f||_{l^q(nu)} / ||f||_{l^p(sigma)} over f >= 0 for a
// nonnegative linear map A with an adjoint A* satisfying
// <A f, z>_nu = <f, A* z>_sigma.
struct RatioProblem {
  Vec domain_weight;
  Vec target_weight;
  double p = 2.0;
  double q = 2.0;
  std::function<void(std::span<const double>, std::span<double>)> forward;
  std::function<void(std::span<const double>, std::span<double>)> adjoint;
};

struct AscentOutcome {
  Vec best;
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;
  std::vector<Vec> pool;
};

class RatioAscent {
 public:
  RatioAscent(const RatioProblem& problem, const AscentOptions& opts)
      : pr_(problem), opts_(opts), y_(problem.target_weight.size()),
        z_(problem.target_weight.size()), w_(problem.domain_weight.size()) {}

  double lp_norm(std::span<const double> f) const {
    double s = 0.0;
    for (std::size_t x = 0; x < f.size(); ++x) {
      if (pr_.domain_weight[x] > 0.0 && f[x] != 0.0) {
        s += pr_.domain_weight[x] * std::pow(std::abs(f[x]), pr_.p);
      }
    }
    return std::pow(s, 1.0 / pr_.p);
  }

  // Zeroes f off the support of sigma and rescales to unit L^p(sigma) norm.
  // Returns false when nothing is left.
  bool normalize(Vec& f) const {
    for (std::size_t x = 0; x < f.size(); ++x) {
      if (!(pr_.domain_weight[x] > 0.0) || f[x] < 0.0) f[x] = 0.0;
    }
    const double n = lp_norm(f);
    if (!(n > 0.0) || !std::isfinite(n)) return false;
    for (double& v : f) v /= n;
    return true;
  }

  double value(std::span<const double> f) {
    const double n = lp_norm(f);
    if (!(n > 0.0)) return 0.0;
    pr_.forward(f, y_);
    double s = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
      if (pr_.target_weight[i] != 0.0 && y_[i] != 0.0) {
        s += pr_.target_weight[i] * std::pow(std::abs(y_[i]), pr_.q);
      }
    }
    return std::pow(s, 1.0 / pr_.q) / n;
  }

  // Climbs from a normalized start. Each iteration tries the dual-map step
  // (the unit vector maximizing the linearized objective) and a normalized
  // projected gradient step with backtracking, keeping the better one.
  double ascend(Vec& f, int& iterations, double& residual) {
    double current = value(f);
    double step = opts_.step;
    int stalls = 0;
    Vec candidate(f.size());
    Vec trial(f.size());
    for (int it = 0; it < opts_.max_iter; ++it) {
      ++iterations;
      pr_.forward(f, y_);
      for (std::size_t i = 0; i < y_.size(); ++i) {
        z_[i] = y_[i] > 0.0 ? std::pow(y_[i], pr_.q - 1.0) : 0.0;
      }
      pr_.adjoint(z_, w_);

      double best = current;
      bool moved = false;

      const double dual_power = 1.0 / (pr_.p - 1.0);
      for (std::size_t x = 0; x < f.size(); ++x) {
        candidate[x] = w_[x] > 0.0 ? std::pow(w_[x], dual_power) : 0.0;
      }
      if (normalize(candidate)) {
        const double v = value(candidate);
        if (v > best) {
          best = v;
          trial = candidate;
          moved = true;
        }
      }

      Vec direction(f.size());
      for (std::size_t x = 0; x < f.size(); ++x) {
        direction[x] = pr_.domain_weight[x] * w_[x];
      }
      const double dn = norm2(direction);
      const double fn = norm2(f);
      if (dn > 0.0 && fn > 0.0) {
        double t = std::min(step * 2.0, 1e3);
        for (int back = 0; back < 30; ++back, t *= 0.5) {
          for (std::size_t x = 0; x < f.size(); ++x) {
            candidate[x] = std::max(0.0, f[x] + t * fn * direction[x] / dn);
          }
          if (!normalize(candidate)) continue;
          const double v = value(candidate);
          if (v > current) {
            step = t;
            if (v > best) {
              best = v;
              trial = candidate;
              moved = true;
            }
            break;
          }
        }
      }

      if (!moved) {
        residual = 0.0;
        break;
      }
      residual = (best - current) / best;
      f = trial;
      current = best;
      stalls = residual < opts_.tol ? stalls + 1 : 0;
      if (stalls >= 3) break;
    }
    return current;
  }

 private:
  const RatioProblem& pr_;
  const AscentOptions& opts_;
  Vec y_, z_, w_;
};

AscentOutcome maximize_ratio(const RatioProblem& problem, const DyadicGrid& grid,
                             const AscentOptions& opts) {
  RatioAscent ascent(problem, opts);
  AscentOutcome out;
  out.best.assign(grid.leaf_count(), 0.0);

  auto consider = [&](const Vec& f, double v) {
    if (v > out.value) {
      out.value = v;
      out.best = f;
    }
  };

  // Indicator seeds for every cube carrying domain mass.
  struct Seed {
    double value;
    CubeIndex cube;
  };
  std::vector<Seed> seeds;
  for (CubeIndex q = 0; q < grid.cube_count(); ++q) {
    Vec f(grid.leaf_count(), 0.0);
    for (LeafIndex x : grid.leaves(q)) f[x] = 1.0;
    if (!ascent.normalize(f)) continue;
    const double v = ascent.value(f);
    seeds.push_back({v, q});
    consider(f, v);
    out.pool.push_back(std::move(f));
  }
  if (seeds.empty()) return out;

  std::vector<Vec> starts;
  std::vector<Seed> order = seeds;
  std::stable_sort(order.begin(), order.end(),
                   [](const Seed& a, const Seed& b) { return a.value > b.value; });
  const std::size_t take = grid.cube_count() <= opts.full_seed_limit
                               ? order.size()
                               : std::min(order.size(), opts.polished_seeds);
  for (std::size_t i = 0; i < take; ++i) {
    Vec f(grid.leaf_count(), 0.0);
    for (LeafIndex x : grid.leaves(order[i].cube)) f[x] = 1.0;
    ascent.normalize(f);
    starts.push_back(std::move(f));
  }
  for (int r = 0; r < opts.restarts; ++r) {
    Rng rng(mix_seed(opts.seed, static_cast<std::uint64_t>(r)));
    Vec f(grid.leaf_count());
    for (double& v : f) v = rng.exponential();
    if (!ascent.normalize(f)) continue;
    consider(f, ascent.value(f));
    out.pool.push_back(f);
    starts.push_back(std::move(f));
  }

  for (Vec& f : starts) {
    double residual = 0.0;
    const double v = ascent.ascend(f, out.iterations, residual);
    if (v > out.value) out.residual = residual;
    consider(f, v);
    out.pool.push_back(std::move(f));
  }
  return out;
}

RatioProblem strong_problem(const Measure& sigma,
                            const Measure& omega, const Exponents& exps,
                            std::shared_ptr<detail::TreeKernel> kernel) {
  RatioProblem pr;
  pr.domain_weight.assign(sigma.leaf_masses().begin(), sigma.leaf_masses().end());
  pr.target_weight.assign(omega.leaf_masses().begin(), omega.leaf_masses().end());
  pr.p = exps.p();
  pr.q = exps.q();
  const std::size_t n = sigma.grid().leaf_count();
  auto buffer = std::make_shared<Vec>(n);
  Vec s = pr.domain_weight;
  Vec w = pr.target_weight;
  pr.forward = [kernel, buffer, s](std::span<const double> f, std::span<double> y) {
    for (std::size_t x = 0; x < f.size(); ++x) (*buffer)[x] = f[x] * s[x];
    kernel->apply(*buffer, y);
  };
  pr.adjoint = [kernel, buffer, w](std::span<const double> z, std::span<double> out) {
    for (std::size_t x = 0; x < z.size(); ++x) (*buffer)[x] = z[x] * w[x];
    kernel->apply(*buffer, out);
  };
  return pr;
}

RatioProblem cet_problem(const CubeWeights& tau, const Measure& mu, double p,
                         std::shared_ptr<detail::TreeKernel> kernel) {
  const DyadicGrid& g = mu.grid();
  RatioProblem pr;
  pr.domain_weight.assign(mu.leaf_masses().begin(), mu.leaf_masses().end());
  pr.target_weight.assign(tau.values().begin(), tau.values().end());
  for (CubeIndex q = 0; q < g.cube_count(); ++q) {
    if (!(mu.mass(q) > 0.0)) pr.target_weight[q] = 0.0;
  }
  pr.p = p;
  pr.q = p;
  Vec m(mu.cube_masses().begin(), mu.cube_masses().end());
  Vec t = pr.target_weight;
  auto buffer = std::make_shared<Vec>(g.leaf_count());
  Vec leaf_mass = pr.domain_weight;
  pr.forward = [kernel, buffer, m, leaf_mass](std::span<const double> f,
                                              std::span<double> y) {
    for (std::size_t x = 0; x < f.size(); ++x) (*buffer)[x] = f[x] * leaf_mass[x];
    const auto sums = kernel->accumulate(*buffer);
    for (std::size_t q = 0; q < y.size(); ++q) y[q] = m[q] > 0.0 ? sums[q] / m[q] : 0.0;
  };
  const DyadicGrid* grid = &g;
  pr.adjoint = [grid, m, t](std::span<const double> z, std::span<double> out) {
    // (A* z)(x) = sum over Q containing x of tau_Q z_Q / mu(Q).
    Vec acc(grid->cube_count());
    auto term = [&](CubeIndex q) { return m[q] > 0.0 ? t[q] * z[q] / m[q] : 0.0; };
    acc[0] = term(0);
    for (CubeIndex q = 1; q < grid->cube_count(); ++q) {
      acc[q] = acc[grid->parent(q)] + term(q);
    }
    for (LeafIndex x = 0; x < grid->leaf_count(); ++x) out[x] = acc[grid->leaf_cube(x)];
  };
  return pr;
}

GridFunction to_function(Vec v) { return GridFunction(std::move(v)); }

double weak_value(std::span<const double> h, const Measure& omega, double q) {
  std::vector<std::pair<double, double>> level;  // (value, omega mass)
  double scale = 0.0;
  for (LeafIndex x = 0; x < h.size(); ++x) {
    const double w = omega.leaf_mass(x);
    if (w > 0.0 && h[x] > 0.0) {
      level.emplace_back(h[x], w);
      scale = std::max(scale, h[x]);
    }
  }
  if (level.empty()) return 0.0;
  std::sort(level.begin(), level.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  const double offset = std::ldexp(scale, -40);
  double best = 0.0;
  double mass = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < level.size(); ++i) {
    if (i > 0 && level[i].first == level[i - 1].first) continue;
    const double lambda = level[i].first - offset;
    if (!(lambda > 0.0)) continue;
    while (next < level.size() && level[next].first > lambda) mass += level[next++].second;
    best = std::max(best, lambda * std::pow(mass, 1.0 / q));
  }
  return best;
}

}  // namespace

NormEstimate exact_norm_22(const CubeWeights& tau, const Measure& sigma,
                           const Measure& omega, const PowerOptions& opts) {
  require_same_grid(sigma, omega);
  const DyadicGrid& g = sigma.grid();
  const std::size_t n = g.leaf_count();
  Vec rs(n), rw(n);
  for (LeafIndex x = 0; x < n; ++x) {
    rs[x] = std::sqrt(sigma.leaf_mass(x));
    rw[x] = std::sqrt(omega.leaf_mass(x));
  }
  detail::TreeKernel kernel(tau);
  Vec buffer(n), tmp(n), u(n), v(n), w(n);

  // A v = sqrt(sigma) * T(sqrt(omega) v),  A^T u = sqrt(omega) * T(sqrt(sigma) u).
  auto apply_a = [&](const Vec& in, Vec& out) {
    for (LeafIndex x = 0; x < n; ++x) buffer[x] = rw[x] * in[x];
    kernel.apply(buffer, tmp);
    for (LeafIndex x = 0; x < n; ++x) out[x] = rs[x] * tmp[x];
  };
  auto apply_at = [&](const Vec& in, Vec& out) {
    for (LeafIndex x = 0; x < n; ++x) buffer[x] = rs[x] * in[x];
    kernel.apply(buffer, tmp);
    for (LeafIndex x = 0; x < n; ++x) out[x] = rw[x] * tmp[x];
  };

  NormEstimate est;
  est.kind = NormEstimate::Kind::exact;
  est.f = GridFunction::zero(g);
  est.g = GridFunction::zero(g);

  v = rw;
  double vn = norm2(v);
  if (!(vn > 0.0)) return est;
  for (double& x : v) x /= vn;

  double value = 0.0;
  double residual = 1.0;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    apply_a(v, u);
    const double su = norm2(u);
    if (!(su > 0.0)) {
      value = 0.0;
      residual = 0.0;
      break;
    }
    for (double& x : u) x /= su;
    apply_at(u, w);
    const double sw = norm2(w);
    double gap = 0.0;
    for (LeafIndex x = 0; x < n; ++x) gap += (w[x] - su * v[x]) * (w[x] - su * v[x]);
    residual = std::sqrt(gap) / su;
    value = std::max(value, sw);
    if (opts.keep_history) est.history.push_back(sw);
    for (LeafIndex x = 0; x < n; ++x) v[x] = w[x] / sw;
    if (residual <= opts.tol) {
      ++it;
      break;
    }
  }
  // Report the pair (f, g) with B(f, g) = <u, A v> for the final unit vectors.
  apply_a(v, u);
  const double su = norm2(u);
  if (su > 0.0) {
    for (double& x : u) x /= su;
    value = std::max(value, su);
  }
  for (LeafIndex x = 0; x < n; ++x) {
    est.f[x] = rs[x] > 0.0 ? u[x] / rs[x] : 0.0;
    (*est.g)[x] = rw[x] > 0.0 ? v[x] / rw[x] : 0.0;
  }
  est.value = su > 0.0 ? su : value;
  est.iterations = it;
  est.residual = residual;
  if (residual > opts.tol) {
    est.kind = NormEstimate::Kind::lower_bound;
    est.diagnostic = "power iteration stopped before reaching the residual tolerance";
  }
  return est;
}

namespace {

AscentOutcome strong_outcome(const CubeWeights& tau, const Measure& sigma,
                             const Measure& omega, const Exponents& exps,
                             const AscentOptions& opts) {
  require_same_grid(sigma, omega);
  auto kernel = std::make_shared<detail::TreeKernel>(tau);
  const RatioProblem pr = strong_problem(sigma, omega, exps, kernel);
  return maximize_ratio(pr, sigma.grid(), opts);
}

}  // namespace

NormEstimate strong_norm_lower(const CubeWeights& tau, const Measure& sigma,
                               const Measure& omega, const Exponents& exps,
                               const AscentOptions& opts) {
  if (opts.route_exact_22 && exps.p() == 2.0 && exps.q() == 2.0) {
    NormEstimate est = exact_norm_22(tau, sigma, omega, opts.power);
    est.g.reset();
    return est;
  }
  AscentOutcome out = strong_outcome(tau, sigma, omega, exps, opts);
  NormEstimate est;
  est.kind = NormEstimate::Kind::lower_bound;
  est.value = out.value;
  est.f = to_function(std::move(out.best));
  est.iterations = out.iterations;
  est.residual = out.residual;
  return est;
}

NormEstimate weak_norm_lower(const CubeWeights& tau, const Measure& sigma,
                             const Measure& omega, const Exponents& exps,
                             const AscentOptions& opts) {
  AscentOutcome out = strong_outcome(tau, sigma, omega, exps, opts);
  NormEstimate est;
  est.kind = NormEstimate::Kind::lower_bound;
  est.f = GridFunction::zero(sigma.grid());
  est.iterations = out.iterations;
  if (opts.route_exact_22 && exps.p() == 2.0 && exps.q() == 2.0) {
    // Include the power-iteration maximizer so the pool matches the strong one.
    NormEstimate exact = exact_norm_22(tau, sigma, omega, opts.power);
    out.pool.push_back(exact.f.values);
  }
  for (auto& f : out.pool) {
    const double v = weak_objective(tau, sigma, omega, exps, GridFunction(f));
    if (v > est.value) {
      est.value = v;
      est.f = GridFunction(f);
    }
  }
  return est;
}

NormEstimate cet_constant(const CubeWeights& tau, double p, const AscentOptions& opts) {
  return cet_constant(tau, Measure::lebesgue(tau.grid_ptr()), p, opts);
}

NormEstimate cet_constant(const CubeWeights& tau, const Measure& mu, double p,
                          const AscentOptions& opts) {
  if (!(p > 1.0)) throw ArgumentError("embedding constant needs p > 1");
  auto kernel = std::make_shared<detail::TreeKernel>(tau);
  const RatioProblem pr = cet_problem(tau, mu, p, kernel);
  AscentOutcome out = maximize_ratio(pr, mu.grid(), opts);
  NormEstimate est;
  est.kind = NormEstimate::Kind::lower_bound;
  est.value = out.value;
  est.f = to_function(std::move(out.best));
  est.iterations = out.iterations;
  est.residual = out.residual;
  return est;
}

double strong_objective(const CubeWeights& tau, const Measure& sigma,
                        const Measure& omega, const Exponents& exps,
                        const GridFunction& f) {
  const double n = lp_norm(f, sigma, exps.p());
  if (!(n > 0.0)) return 0.0;
  const GridFunction h = apply_T(tau, Measure::product(f, sigma));
  return lp_norm(h, omega, exps.q()) / n;
}

double weak_objective(const CubeWeights& tau, const Measure& sigma,
                      const Measure& omega, const Exponents& exps,
                      const GridFunction& f) {
  const double n = lp_norm(f, sigma, exps.p());
  if (!(n > 0.0)) return 0.0;
  const GridFunction h = apply_T(tau, Measure::product(f, sigma));
  return weak_value(h.values, omega, exps.q()) / n;
}

double cet_objective(const CubeWeights& tau, const Measure& mu, double p,
                     const GridFunction& f) {
  const double n = lp_norm(f, mu, p);
  if (!(n > 0.0)) return 0.0;
  const Measure fm = Measure::product(f, mu);
  const DyadicGrid& g = mu.grid();
  double s = 0.0;
  for (CubeIndex q = 0; q < g.cube_count(); ++q) {
    if (tau[q] == 0.0 || !(mu.mass(q) > 0.0)) continue;
    s += tau[q] * std::pow(std::abs(fm.mass(q) / mu.mass(q)), p);
  }
  return std::pow(s, 1.0 / p) / n;
}

}  // namespace dyadic
