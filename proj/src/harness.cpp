#include "dyadic/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "dyadic/error.hpp"
#include "dyadic/random.hpp"

namespace dyadic {

namespace {

const char* mass_name(MassModel::Kind k) {
  switch (k) {
    case MassModel::Kind::lognormal: return "lognormal";
    case MassModel::Kind::uniform: return "uniform";
    case MassModel::Kind::lebesgue: return "lebesgue";
    case MassModel::Kind::spike: return "spike";
  }
  return "?";
}

const char* tau_name(TauModel::Kind k) {
  switch (k) {
    case TauModel::Kind::root_only: return "root_only";
    case TauModel::Kind::lognormal: return "lognormal";
    case TauModel::Kind::fractional: return "fractional";
    case TauModel::Kind::sparse: return "sparse";
  }
  return "?";
}

MassModel::Kind mass_kind(const std::string& s) {
  if (s == "lognormal") return MassModel::Kind::lognormal;
  if (s == "uniform") return MassModel::Kind::uniform;
  if (s == "lebesgue") return MassModel::Kind::lebesgue;
  if (s == "spike") return MassModel::Kind::spike;
  throw ConfigError("unknown mass kind '" + s + "'");
}

TauModel::Kind tau_kind(const std::string& s) {
  if (s == "root_only") return TauModel::Kind::root_only;
  if (s == "lognormal") return TauModel::Kind::lognormal;
  if (s == "fractional") return TauModel::Kind::fractional;
  if (s == "sparse") return TauModel::Kind::sparse;
  throw ConfigError("unknown tau kind '" + s + "'");
}

void validate(const MassModel& m, const char* which) {
  const std::string w = which;
  if (!(m.s >= 0.0) || !std::isfinite(m.mu)) throw ConfigError(w + ": bad lognormal parameters");
  if (!(m.lo >= 0.0) || !(m.hi >= m.lo)) throw ConfigError(w + ": uniform needs 0 <= lo <= hi");
  if (m.spikes < 0 || !(m.spike_mass >= 0.0) || !(m.floor >= 0.0)) {
    throw ConfigError(w + ": bad spike parameters");
  }
  if (!(m.zero_fraction >= 0.0 && m.zero_fraction < 1.0)) {
    throw ConfigError(w + ": zero_fraction must lie in [0, 1)");
  }
}

void validate(const GeneratorModel& model) {
  if (model.d < 1 || model.d > kMaxDimension) throw ConfigError("dimension out of range");
  if (model.depth < 0) throw ConfigError("depth must be nonnegative");
  if (model.d * model.depth > 20) throw ConfigError("grid too large for the generator");
  validate(model.sigma, "sigma");
  validate(model.omega, "omega");
  if (model.tau.kind == TauModel::Kind::fractional &&
      !(model.tau.alpha > 0.0 && model.tau.alpha < model.d)) {
    throw ConfigError("fractional tau needs 0 < alpha < d");
  }
  if (!(model.tau.density >= 0.0 && model.tau.density <= 1.0)) {
    throw ConfigError("tau density must lie in [0, 1]");
  }
  if (model.tau.zero_finest < 0) throw ConfigError("zero_finest must be nonnegative");
  if (!(model.p > 1.0 && model.p <= model.q && std::isfinite(model.q))) {
    throw ConfigError("exponents must satisfy 1 < p <= q < infinity");
  }
}

std::vector<double> draw_masses(const MassModel& m, const DyadicGrid& g, Rng& rng) {
  const double vol = g.volume_at_level(g.depth());
  std::vector<double> out(g.leaf_count());
  switch (m.kind) {
    case MassModel::Kind::lognormal:
      for (double& x : out) x = vol * rng.lognormal(m.mu, m.s);
      break;
    case MassModel::Kind::uniform:
      for (double& x : out) x = vol * rng.uniform(m.lo, m.hi);
      break;
    case MassModel::Kind::lebesgue:
      std::fill(out.begin(), out.end(), vol);
      break;
    case MassModel::Kind::spike:
      std::fill(out.begin(), out.end(), vol * m.floor);
      for (int i = 0; i < m.spikes; ++i) out[rng.below(out.size())] += vol * m.spike_mass;
      break;
  }
  if (m.zero_fraction > 0.0) {
    std::vector<double> kept = out;
    bool any = false;
    for (double& x : out) {
      if (rng.uniform() < m.zero_fraction) {
        x = 0.0;
      } else {
        any = any || x > 0.0;
      }
    }
    if (!any) out[0] = kept[0];
  }
  return out;
}

CubeWeights draw_tau(const TauModel& t, const GridPtr& grid, Rng& rng) {
  const DyadicGrid& g = *grid;
  std::optional<CubeWeights> w;
  switch (t.kind) {
    case TauModel::Kind::root_only:
      w = CubeWeights::root_only(grid);
      break;
    case TauModel::Kind::lognormal: {
      std::vector<double> v(g.cube_count());
      for (CubeIndex q = 0; q < v.size(); ++q) v[q] = g.volume(q) * rng.lognormal(0.0, t.s);
      w = CubeWeights::explicit_values(grid, std::move(v));
      break;
    }
    case TauModel::Kind::fractional:
      w = CubeWeights::fractional(grid, t.alpha);
      break;
    case TauModel::Kind::sparse:
      w = CubeWeights::sparse_random(grid, t.density, rng.below(std::uint64_t{1} << 62));
      break;
  }
  if (t.zero_finest > 0) w = w->without_finest_levels(t.zero_finest);
  if (t.zero_root && (*w)[0] != 0.0) {
    std::vector<double> v(w->values().begin(), w->values().end());
    v[0] = 0.0;
    w = CubeWeights::explicit_values(grid, std::move(v));
  }
  return *w;
}

double get_number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

int get_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ConfigError(std::string("'") + key + "' must be an integer");
  return j.at(key).get<int>();
}

bool get_bool(const json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(std::string("'") + key + "' must be a boolean");
  return j.at(key).get<bool>();
}

std::vector<double> get_array(const json& j, const char* key, std::size_t n) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw ConfigError(std::string("instance needs an array '") + key + "'");
  }
  auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != n) throw ConfigError(std::string("'") + key + "' has the wrong length");
  return v;
}

json mass_json(const MassModel& m) {
  return {{"kind", mass_name(m.kind)}, {"mu", m.mu}, {"s", m.s}, {"lo", m.lo}, {"hi", m.hi},
          {"spikes", m.spikes}, {"spike_mass", m.spike_mass}, {"floor", m.floor},
          {"zero_fraction", m.zero_fraction}};
}

MassModel mass_from(const json& j) {
  MassModel m;
  if (!j.is_object()) throw ConfigError("mass model must be an object");
  if (j.contains("kind")) m.kind = mass_kind(j.at("kind").get<std::string>());
  m.mu = get_number(j, "mu", m.mu);
  m.s = get_number(j, "s", m.s);
  m.lo = get_number(j, "lo", m.lo);
  m.hi = get_number(j, "hi", m.hi);
  m.spikes = get_int(j, "spikes", m.spikes);
  m.spike_mass = get_number(j, "spike_mass", m.spike_mass);
  m.floor = get_number(j, "floor", m.floor);
  m.zero_fraction = get_number(j, "zero_fraction", m.zero_fraction);
  return m;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double safe_ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return json(x).dump();
}

}  // namespace

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 15];
  return s;
}

Instance gen_instance(const GeneratorModel& model, std::uint64_t seed) {
  validate(model);
  GridPtr grid = build_grid(model.d, model.depth);
  Rng rng(seed);
  Measure sigma = Measure::weight(grid, draw_masses(model.sigma, *grid, rng));
  Measure omega = Measure::weight(grid, draw_masses(model.omega, *grid, rng));
  CubeWeights tau = draw_tau(model.tau, grid, rng);
  std::optional<GridFunction> probe;
  if (model.probe) {
    GridFunction f = GridFunction::zero(*grid);
    for (double& x : f.values) x = rng.lognormal(0.0, 1.5);
    if (model.depth > 0) {
      const CubeIndex hole = 1 + rng.below(grid->children_per_cube());
      for (LeafIndex x : grid->leaves(hole)) f[x] = 0.0;
    }
    probe = std::move(f);
  }
  return Instance{grid, std::move(sigma), std::move(omega), std::move(tau),
                  Exponents(model.p, model.q), seed, model.tag, std::move(probe)};
}

json to_json(const Instance& inst) {
  json j;
  j["format"] = kInstanceFormat;
  j["d"] = inst.grid->dimension();
  j["depth"] = inst.grid->depth();
  j["p"] = inst.exps.p();
  j["q"] = inst.exps.q();
  j["seed"] = inst.seed;
  j["generator"] = inst.generator;
  j["sigma"] = std::vector<double>(inst.sigma.leaf_masses().begin(), inst.sigma.leaf_masses().end());
  j["omega"] = std::vector<double>(inst.omega.leaf_masses().begin(), inst.omega.leaf_masses().end());
  if (inst.tau.rule() == CubeWeights::Rule::fractional) {
    j["tau"] = {{"rule", "fractional"}, {"alpha", inst.tau.alpha()}};
  } else {
    j["tau"] = std::vector<double>(inst.tau.values().begin(), inst.tau.values().end());
  }
  if (inst.probe) j["probe"] = inst.probe->values;
  return j;
}

Instance instance_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("format", std::string()) != kInstanceFormat) {
      throw ConfigError(std::string("instance format tag must be '") + kInstanceFormat + "'");
    }
    GridPtr grid = build_grid(get_int(j, "d", 0), get_int(j, "depth", -1));
    const std::size_t n = grid->leaf_count();
    Measure sigma = Measure::weight(grid, get_array(j, "sigma", n));
    Measure omega = Measure::weight(grid, get_array(j, "omega", n));
    const json& t = j.at("tau");
    std::optional<CubeWeights> tau;
    if (t.is_object()) {
      if (t.value("rule", std::string()) != "fractional") throw ConfigError("unknown tau rule");
      tau = CubeWeights::fractional(grid, get_number(t, "alpha", 0.0));
    } else {
      tau = CubeWeights::explicit_values(grid, get_array(j, "tau", grid->cube_count()));
    }
    std::optional<GridFunction> probe;
    if (j.contains("probe")) probe = GridFunction(get_array(j, "probe", n));
    return Instance{grid, std::move(sigma), std::move(omega), std::move(*tau),
                    Exponents(get_number(j, "p", 2.0), get_number(j, "q", 2.0)),
                    j.value("seed", std::uint64_t{0}), j.value("generator", std::string()),
                    std::move(probe)};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed instance: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("invalid instance: ") + e.what());
  } catch (const SizeError& e) {
    throw ConfigError(std::string("invalid instance: ") + e.what());
  }
}

std::uint64_t instance_hash(const Instance& inst) { return fnv1a(to_json(inst).dump()); }

json to_json(const GeneratorModel& model) {
  return {{"d", model.d},
          {"depth", model.depth},
          {"sigma", mass_json(model.sigma)},
          {"omega", mass_json(model.omega)},
          {"tau",
           {{"kind", tau_name(model.tau.kind)},
            {"alpha", model.tau.alpha},
            {"density", model.tau.density},
            {"s", model.tau.s},
            {"zero_finest", model.tau.zero_finest},
            {"zero_root", model.tau.zero_root}}},
          {"p", model.p},
          {"q", model.q},
          {"probe", model.probe},
          {"tag", model.tag}};
}

GeneratorModel generator_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("generator model must be an object");
    GeneratorModel s;
    s.d = get_int(j, "d", s.d);
    s.depth = get_int(j, "depth", s.depth);
    if (j.contains("sigma")) s.sigma = mass_from(j.at("sigma"));
    if (j.contains("omega")) s.omega = mass_from(j.at("omega"));
    if (j.contains("tau")) {
      const json& t = j.at("tau");
      if (t.contains("kind")) s.tau.kind = tau_kind(t.at("kind").get<std::string>());
      s.tau.alpha = get_number(t, "alpha", s.tau.alpha);
      s.tau.density = get_number(t, "density", s.tau.density);
      s.tau.s = get_number(t, "s", s.tau.s);
      s.tau.zero_finest = get_int(t, "zero_finest", s.tau.zero_finest);
      s.tau.zero_root = get_bool(t, "zero_root", s.tau.zero_root);
    }
    s.p = get_number(j, "p", s.p);
    s.q = get_number(j, "q", s.q);
    s.probe = get_bool(j, "probe", s.probe);
    s.tag = j.value("tag", s.tag);
    validate(s);
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed generator model: ") + e.what());
  }
}

json to_json(const TestingValue& v) {
  json j{{"value", number(v.value)}, {"degenerate", v.degenerate}, {"advisory", v.advisory}};
  j["argmax"] = v.argmax ? json(*v.argmax) : json(nullptr);
  return j;
}

json to_json(const TestingReport& r) {
  return {{"p", r.exps.p()},
          {"q", r.exps.q()},
          {"local", to_json(r.local)},
          {"local_dual", to_json(r.local_dual)},
          {"global", to_json(r.global)},
          {"global_dual", to_json(r.global_dual)}};
}

json to_json(const NormEstimate& e) {
  json j{{"value", number(e.value)},
         {"kind", e.kind == NormEstimate::Kind::exact ? "exact" : "lower_bound"},
         {"iterations", e.iterations},
         {"residual", number(e.residual)},
         {"f", e.f.values}};
  if (e.g) j["g"] = e.g->values;
  if (!e.diagnostic.empty()) j["diagnostic"] = e.diagnostic;
  return j;
}

json to_json(const WhitneyDecomposition& w, const ClassifiedLayers* classes) {
  json layers = json::array();
  for (const WhitneyLayer& layer : w.layers) {
    json cubes = json::array();
    for (CubeIndex q : layer.cubes) {
      json c{{"cube", q}};
      if (classes != nullptr) {
        if (const LayerCube* e = classes->find(layer.k, q)) {
          c["class"] = e->cls;
          c["corridor"] = e->corridor;
          c["alpha"] = e->alpha;
          c["beta"] = e->beta;
          c["corridor_mass"] = e->corridor_mass;
        }
      }
      cubes.push_back(std::move(c));
    }
    layers.push_back({{"k", layer.k},
                      {"saturated", layer.saturated},
                      {"uncovered", layer.uncovered},
                      {"cubes", std::move(cubes)}});
  }
  json j{{"rho", w.rho}, {"layers", std::move(layers)}};
  if (classes != nullptr) {
    j["eta"] = classes->eta;
    j["m"] = classes->m;
    j["key_violations"] = classes->key_violations.size();
  }
  return j;
}

json to_json(const PrincipalForest& forest) {
  json members = json::array();
  for (CubeIndex g : forest.members) members.push_back({{"cube", g}, {"average", forest.average.at(g)}});
  json gamma = json::object();
  for (const auto& [q, g] : forest.gamma) gamma[std::to_string(q)] = g;
  return {{"members", std::move(members)}, {"gamma", std::move(gamma)}, {"skipped", forest.skipped}};
}

json to_json(const SuiteConfig& c) {
  json shapes = json::array();
  for (auto [d, depth] : c.shapes) shapes.push_back({d, depth});
  json exps = json::array();
  for (auto [p, q] : c.exponents) exps.push_back({p, q});
  return {{"name", c.name},
          {"count", c.count},
          {"seed", c.seed},
          {"generator", to_json(c.generator)},
          {"shapes", std::move(shapes)},
          {"exponents", std::move(exps)},
          {"mix_generators", c.mix_generators},
          {"compute_norms", c.compute_norms},
          {"run_prooflab", c.run_prooflab},
          {"eta", c.eta},
          {"rho", c.rho},
          {"m", c.m},
          {"ratio_cap", c.ratio_cap},
          {"tol", c.tol},
          {"ascent", {{"restarts", c.ascent.restarts},
                      {"max_iter", c.ascent.max_iter},
                      {"route_exact_22", c.ascent.route_exact_22}}},
          {"threads", c.threads}};
}

SuiteConfig suite_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("suite config must be an object");
    SuiteConfig c;
    c.name = j.value("name", c.name);
    if (j.contains("count")) {
      if (!j.at("count").is_number_unsigned() && !(j.at("count").is_number_integer() && j.at("count").get<long long>() >= 0)) {
        throw ConfigError("'count' must be a nonnegative integer");
      }
      c.count = j.at("count").get<std::size_t>();
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("generator")) c.generator = generator_from_json(j.at("generator"));
    if (j.contains("shapes")) {
      c.shapes.clear();
      for (const json& s : j.at("shapes")) {
        const int d = s.at(0).get<int>();
        const int depth = s.at(1).get<int>();
        if (d < 1 || d > kMaxDimension || depth < 0 || d * depth > 20) {
          throw ConfigError("shape out of range");
        }
        c.shapes.emplace_back(d, depth);
      }
      if (c.shapes.empty()) throw ConfigError("at least one shape is required");
    }
    if (j.contains("exponents")) {
      c.exponents.clear();
      for (const json& e : j.at("exponents")) {
        const double p = e.at(0).get<double>();
        const double q = e.at(1).get<double>();
        if (!(p > 1.0 && p <= q && std::isfinite(q))) throw ConfigError("bad exponent pair");
        c.exponents.emplace_back(p, q);
      }
      if (c.exponents.empty()) throw ConfigError("at least one exponent pair is required");
    }
    c.mix_generators = get_bool(j, "mix_generators", c.mix_generators);
    c.compute_norms = get_bool(j, "compute_norms", c.compute_norms);
    c.run_prooflab = get_bool(j, "run_prooflab", c.run_prooflab);
    c.eta = get_number(j, "eta", c.eta);
    c.rho = get_int(j, "rho", c.rho);
    c.m = get_int(j, "m", c.m);
    c.ratio_cap = get_number(j, "ratio_cap", c.ratio_cap);
    c.tol = get_number(j, "tol", c.tol);
    c.threads = get_int(j, "threads", c.threads);
    if (j.contains("ascent")) {
      const json& a = j.at("ascent");
      c.ascent.restarts = get_int(a, "restarts", c.ascent.restarts);
      c.ascent.max_iter = get_int(a, "max_iter", c.ascent.max_iter);
      c.ascent.route_exact_22 = get_bool(a, "route_exact_22", c.ascent.route_exact_22);
    }
    if (!(c.eta > 0.0 && c.eta < 1.0)) throw ConfigError("eta must lie in (0, 1)");
    if (c.rho < 1) throw ConfigError("rho must be at least 1");
    if (c.m < 1) throw ConfigError("m must be at least 1");
    if (!(c.ratio_cap > 0.0)) throw ConfigError("ratio_cap must be positive");
    if (!(c.tol >= 0.0)) throw ConfigError("tol must be nonnegative");
    if (c.threads < 0) throw ConfigError("threads must be nonnegative");
    if (c.ascent.restarts < 0 || c.ascent.max_iter < 1) throw ConfigError("bad ascent options");
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed suite config: ") + e.what());
  }
}

Instance suite_instance(const SuiteConfig& config, std::size_t i) {
  Rng rng(mix_seed(config.seed, i));
  GeneratorModel model = config.generator;
  const auto [d, depth] = config.shapes[rng.below(config.shapes.size())];
  const auto [p, q] = config.exponents[rng.below(config.exponents.size())];
  model.d = d;
  model.depth = depth;
  model.p = p;
  model.q = q;
  if (config.mix_generators) {
    auto pick_mass = [&](MassModel& m) {
      const double u = rng.uniform();
      m = MassModel{};
      if (u < 0.6) {
        m.kind = MassModel::Kind::lognormal;
        m.s = 0.5 + 1.5 * rng.uniform();
      } else if (u < 0.8) {
        m.kind = MassModel::Kind::uniform;
      } else {
        m.kind = MassModel::Kind::spike;
        m.spikes = 1 + static_cast<int>(rng.below(3));
      }
    };
    pick_mass(model.sigma);
    pick_mass(model.omega);
    const double u = rng.uniform();
    model.tau = TauModel{};
    if (u < 0.4) {
      model.tau.kind = TauModel::Kind::lognormal;
    } else if (u < 0.7) {
      model.tau.kind = TauModel::Kind::fractional;
      model.tau.alpha = d * (0.1 + 0.8 * rng.uniform());
    } else {
      model.tau.kind = TauModel::Kind::sparse;
      model.tau.density = 0.3 + 0.6 * rng.uniform();
    }
    model.tag = std::string("mixed/") + tau_name(model.tau.kind);
    if (config.run_prooflab) {
      model.probe = true;
      model.tau.zero_root = true;
      model.tau.zero_finest = config.rho;
    }
  }
  return gen_instance(model, mix_seed(config.seed ^ 0x5DEECE66DULL, i));
}

SuiteRow evaluate_instance(const Instance& inst, const SuiteConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  SuiteRow row;
  row.seed = inst.seed;
  row.generator = inst.generator;
  row.hash = hex64(instance_hash(inst));
  row.d = inst.grid->dimension();
  row.depth = inst.grid->depth();
  row.p = inst.exps.p();
  row.q = inst.exps.q();
  const double slack = 1.0 + config.tol;
  auto fail = [&](const std::string& what) { row.violations.push_back(what); };

  const CubeWeights& tau = inst.tau;
  const Measure& sigma = inst.sigma;
  const Measure& omega = inst.omega;
  const Exponents two(2.0, 2.0);
  const bool p22 = inst.exps.p() == 2.0 && inst.exps.q() == 2.0;

  const SntvConstants sntv = sntv_constants(tau, sigma, omega);
  row.c1 = sntv.c1.value;
  row.c2 = sntv.c2.value;
  const NormEstimate c3 = exact_norm_22(tau, sigma, omega, config.ascent.power);
  row.c3 = c3.value;
  row.c3_exact = c3.kind == NormEstimate::Kind::exact;
  if (!row.c3_exact) row.flags.push_back("c3-not-converged");
  if (std::max(row.c1, row.c2) > row.c3 * slack) fail("necessity");
  row.ratio_sum = safe_ratio(row.c3, row.c1 + row.c2);
  row.ratio_max = safe_ratio(row.c3, std::max(row.c1, row.c2));
  if (row.ratio_sum > config.ratio_cap) fail("ratio-cap");
  const double id1 = local_testing(tau, omega, sigma, two).value;
  const double id2 = local_testing(tau, sigma, omega, two).value;
  if (std::abs(id1 - row.c1) > 1e-10 * std::max(id1, 1e-300) ||
      std::abs(id2 - row.c2) > 1e-10 * std::max(id2, 1e-300)) {
    fail("sntv-identity");
  }

  const TestingReport rep = testing_report(tau, sigma, omega, inst.exps);
  row.local = rep.local.value;
  row.local_dual = rep.local_dual.value;
  row.global = rep.global.value;
  row.global_dual = rep.global_dual.value;
  row.carleson = carleson_norm(tau).value;
  const double testing_max =
      std::max({row.local, row.local_dual, row.global, row.global_dual});
  if (p22 && testing_max > row.c3 * slack) fail("testing-above-norm");

  if (config.compute_norms) {
    const NormEstimate strong = strong_norm_lower(tau, sigma, omega, inst.exps, config.ascent);
    const NormEstimate weak = weak_norm_lower(tau, sigma, omega, inst.exps, config.ascent);
    row.strong_lower = strong.value;
    row.weak_lower = weak.value;
    if (weak.value > strong.value * (1.0 + 1e-12)) fail("weak-above-strong");
    if (!p22 && testing_max > strong.value * slack) row.flags.push_back("testing-above-lower-bound");
    const double p = inst.exps.p();
    const NormEstimate cet = cet_constant(tau, p, config.ascent);
    row.cet = cet.value;
    const double car_root = std::pow(row.carleson, 1.0 / p);
    if (car_root > row.cet * (1.0 + 1e-12)) fail("embedding-lower");
    if (row.cet > 2.0 * (p / (p - 1.0)) * car_root * (1.0 + 1e-12)) fail("embedding-cap");
  }

  if (config.run_prooflab && inst.probe) {
    const GridFunction& f = *inst.probe;
    const GridFunction v = apply_T(tau, Measure::product(f, sigma));
    const WhitneyDecomposition w = whitney_layers(inst.grid, v, config.rho);
    row.layers = w.layers.size();
    const WhitneyAudit wa = audit_whitney(w);
    row.whitney_overlap = wa.overlap_max;
    row.whitney_crowd = wa.crowd_max;
    if (wa.cover_violations) fail("whitney-cover");
    if (wa.whitney_violations) fail("whitney-condition");
    if (wa.nested_violations) fail("whitney-nested");
    if (wa.overlap_max > wa.overlap_bound) fail("whitney-overlap");
    if (wa.crowd_max > wa.crowd_cap) fail("whitney-crowd");
    if (!max_principle_audit(w, f, sigma, tau, config.m).empty()) fail("max-principle");

    const ClassifiedLayers cl = classify_cubes(w, f, sigma, omega, tau, config.eta, config.m);
    const CorridorAudit ca = audit_corridors(w, cl);
    if (ca.overlap_violations || ca.union_violations || ca.disjoint_in_k_violations) {
      fail("corridor-disjointness");
    }
    if (static_cast<double>(ca.max_unsmall_count) > ca.unsmall_bound) fail("many-bound");
    if (ca.key_violations) fail("key-inequality");
    std::size_t constancy = 0;
    std::size_t containment = 0;
    for (const LayerCube& e : cl.entries) {
      const Neighborhood n = neighbor_sets(w, tau, omega, e.cube, e.k, config.m);
      constancy += n.constancy_violations;
      containment += n.containment_violations;
    }
    if (constancy) fail("constancy");
    if (containment) fail("reach-containment");
    const OccurrenceAudit occ = occurrence_audit(w, cl);
    row.occurrence_max = occ.max_count;
    if (!occ.ok()) fail("occurrence-cap");

    if (omega.total() > 0.0) {
      std::size_t halving = 0;
      for (LeafIndex x = 0; x < inst.grid->leaf_count(); ++x) {
        if (!(omega.leaf_mass(x) > 0.0)) continue;
        const auto chain = halving_chain(omega, x, inst.grid->root());
        if (!check_halving_chain(omega, chain).ok()) ++halving;
      }
      if (halving) fail("halving-chain");
    }

    std::vector<CubeIndex> seeds(inst.grid->cube_count());
    for (CubeIndex q = 0; q < seeds.size(); ++q) seeds[q] = q;
    const PrincipalForest forest = principal_cubes(f, sigma, seeds);
    if (!audit_principal(forest, f, sigma).ok()) fail("principal-cubes");
    row.geometric_sum = geometric_sum_audit(forest, f, sigma);
    if (row.geometric_sum > 2.0 * (1.0 + 1e-12)) fail("geometric-sum");
    const double p = inst.exps.p();
    row.principal_carleson = carleson_of_principal(forest, f, sigma, p);
    if (row.principal_carleson > std::pow(p / (p - 1.0), p) * (1.0 + 1e-12)) {
      fail("principal-carleson");
    }
  }

  if (!row.violations.empty()) {
    row.counterexample = json{{"instance", to_json(inst)}, {"violations", row.violations}};
  }
  row.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

int default_thread_count() {
  if (const char* env = std::getenv("DYADIC_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SuiteReport run_suite(const SuiteConfig& config) {
  SuiteReport report;
  report.name = config.name;
  report.rows.resize(config.count);
  std::vector<std::exception_ptr> errors(config.count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < config.count; i = next++) {
      try {
        const Instance inst = suite_instance(config, i);
        report.rows[i] = evaluate_instance(inst, config);
        report.rows[i].index = i;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(config.threads > 0 ? config.threads : default_thread_count(),
                                                static_cast<int>(std::max<std::size_t>(config.count, 1))));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  report.min_ratio_max = report.rows.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const SuiteRow& r : report.rows) {
    report.max_ratio_sum = std::max(report.max_ratio_sum, r.ratio_sum);
    report.max_ratio_max = std::max(report.max_ratio_max, r.ratio_max);
    report.min_ratio_max = std::min(report.min_ratio_max, r.ratio_max);
    if (!r.pass()) ++report.violation_count;
    if (!r.flags.empty()) ++report.flagged_count;
  }
  return report;
}

json to_json(const SuiteRow& r, bool timing) {
  json j{{"index", r.index},
         {"seed", r.seed},
         {"generator", r.generator},
         {"hash", r.hash},
         {"d", r.d},
         {"depth", r.depth},
         {"p", r.p},
         {"q", r.q},
         {"C1", number(r.c1)},
         {"C2", number(r.c2)},
         {"C3", number(r.c3)},
         {"C3_exact", r.c3_exact},
         {"local", number(r.local)},
         {"local_dual", number(r.local_dual)},
         {"global", number(r.global)},
         {"global_dual", number(r.global_dual)},
         {"carleson", number(r.carleson)},
         {"cet", number(r.cet)},
         {"strong_lower", number(r.strong_lower)},
         {"weak_lower", number(r.weak_lower)},
         {"ratio_sum", number(r.ratio_sum)},
         {"ratio_max", number(r.ratio_max)},
         {"layers", r.layers},
         {"whitney_overlap", r.whitney_overlap},
         {"whitney_crowd", r.whitney_crowd},
         {"occurrence_max", r.occurrence_max},
         {"geometric_sum", number(r.geometric_sum)},
         {"principal_carleson", number(r.principal_carleson)},
         {"pass", r.pass()},
         {"violations", r.violations},
         {"flags", r.flags}};
  if (timing) j["elapsed_ms"] = r.elapsed_ms;
  if (r.counterexample) j["counterexample"] = *r.counterexample;
  return j;
}

std::string report_csv(const SuiteReport& report) {
  std::ostringstream out;
  out << "index,seed,generator,hash,d,depth,p,q,C1,C2,C3,local,local_dual,global,global_dual,"
         "carleson,cet,strong_lower,weak_lower,ratio_sum,ratio_max,layers,whitney_overlap,"
         "whitney_crowd,occurrence_max,geometric_sum,principal_carleson,pass\n";
  for (const SuiteRow& r : report.rows) {
    out << r.index << ',' << r.seed << ',' << r.generator << ',' << r.hash << ',' << r.d << ','
        << r.depth << ',' << csv_number(r.p) << ',' << csv_number(r.q);
    for (double x : {r.c1, r.c2, r.c3, r.local, r.local_dual, r.global, r.global_dual, r.carleson,
                     r.cet, r.strong_lower, r.weak_lower, r.ratio_sum, r.ratio_max}) {
      out << ',' << csv_number(x);
    }
    out << ',' << r.layers << ',' << r.whitney_overlap << ',' << r.whitney_crowd << ','
        << r.occurrence_max << ',' << csv_number(r.geometric_sum) << ','
        << csv_number(r.principal_carleson) << ',' << (r.pass() ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string report_jsonl(const SuiteReport& report, bool timing) {
  std::string out;
  for (const SuiteRow& r : report.rows) {
    out += to_json(r, timing).dump();
    out += '\n';
  }
  return out;
}

std::string summary_csv(const SuiteReport& report) {
  std::ostringstream out;
  out << "name,instances,violations,flagged,max_ratio_sum,min_ratio_max,max_ratio_max\n";
  out << report.name << ',' << report.rows.size() << ',' << report.violation_count << ','
      << report.flagged_count << ',' << csv_number(report.max_ratio_sum) << ','
      << csv_number(report.min_ratio_max) << ',' << csv_number(report.max_ratio_max) << '\n';
  return out.str();
}

void write_report(const SuiteReport& report, const std::string& directory) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  fs::create_directories(dir);
  auto put = [&](const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write " + p.string());
    f << text;
  };
  put(dir / "summary.csv", summary_csv(report));
  put(dir / "rows.csv", report_csv(report));
  put(dir / "rows.jsonl", report_jsonl(report));
  for (const SuiteRow& r : report.rows) {
    if (r.counterexample) {
      put(dir / ("counterexample_" + std::to_string(r.index) + ".json"), r.counterexample->dump(2) + "\n");
    }
  }
}

}  // namespace dyadic
