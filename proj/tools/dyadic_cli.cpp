// dyadic: command line front end for the harness.
//
// Exit status: 0 when everything checked passes, 1 when a check failed,
// 2 for unusable input (bad flags, malformed JSON, invalid configuration).

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dyadic/error.hpp"
#include "dyadic/harness.hpp"

using namespace dyadic;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void emit(const json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + out);
  f << text;
}

GridFunction probe_or_one(const Instance& inst) {
  return inst.probe ? *inst.probe : GridFunction::constant(*inst.grid, 1.0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dyadic positive operator toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  double tol = 1e-8;
  double eta = 0.25;
  int rho = 1;
  int threads = 0;
  std::string out;
  std::string instance_path;
  std::string config_path;

  auto* gen = app.add_subcommand("gen", "Generate an instance from a generator model");
  gen->add_option("--config", config_path, "Generator model (JSON); defaults apply when omitted");
  gen->add_option("--seed", seed, "Instance seed");
  gen->add_option("--out", out, "Output file (stdout by default)");

  auto* apply = app.add_subcommand("apply", "Evaluate T(f sigma) on the leaves");
  apply->add_option("instance", instance_path, "Instance file")->required();
  apply->add_option("--out", out, "Output file");

  auto* testing = app.add_subcommand("testing", "Testing constants and the two L2 constants");
  testing->add_option("instance", instance_path, "Instance file")->required();
  testing->add_option("--out", out, "Output file");

  auto* norm = app.add_subcommand("norm", "Operator norm estimates");
  norm->add_option("instance", instance_path, "Instance file")->required();
  norm->add_option("--seed", seed, "Ascent seed");
  norm->add_option("--out", out, "Output file");

  auto* decompose = app.add_subcommand("decompose", "Whitney layers, corridors and classes of T(f sigma)");
  decompose->add_option("instance", instance_path, "Instance file")->required();
  decompose->add_option("--eta", eta, "Small-corridor threshold")->check(CLI::Range(0.0, 1.0));
  decompose->add_option("--rho", rho, "Whitney parent offset")->check(CLI::PositiveNumber);
  decompose->add_option("--out", out, "Output file");

  auto* verify = app.add_subcommand("verify", "Run a suite and report violations");
  verify->add_option("--config", config_path, "Suite config (JSON)");
  verify->add_option("--seed", seed, "Suite seed");
  verify->add_option("--tol", tol, "Relative tolerance for exact-direction checks");
  verify->add_option("--eta", eta, "Small-corridor threshold");
  verify->add_option("--rho", rho, "Whitney parent offset");
  verify->add_option("--threads", threads, "Worker threads (0: automatic)");
  verify->add_option("--out", out, "Report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const GeneratorModel model = config_path.empty() ? GeneratorModel{} : generator_from_json(read_json(config_path));
      emit(to_json(gen_instance(model, seed)), out);
      return 0;
    }

    if (*verify) {
      SuiteConfig config = config_path.empty() ? SuiteConfig{} : suite_from_json(read_json(config_path));
      if (verify->count("--seed")) config.seed = seed;
      if (verify->count("--tol")) config.tol = tol;
      if (verify->count("--eta")) config.eta = eta;
      if (verify->count("--rho")) config.rho = rho;
      if (verify->count("--threads")) config.threads = threads;
      config = suite_from_json(to_json(config));
      const SuiteReport report = run_suite(config);
      if (!out.empty()) write_report(report, out);
      std::cout << summary_csv(report);
      for (const SuiteRow& r : report.rows) {
        if (r.pass()) continue;
        std::cout << "instance " << r.index << " (" << r.hash << "):";
        for (const auto& v : r.violations) std::cout << ' ' << v;
        std::cout << '\n';
      }
      return report.pass() ? 0 : 1;
    }

    const Instance inst = instance_from_json(read_json(instance_path));

    if (*apply) {
      const GridFunction f = probe_or_one(inst);
      const GridFunction v = apply_T(inst.tau, Measure::product(f, inst.sigma));
      emit(json{{"hash", hex64(instance_hash(inst))}, {"values", v.values}}, out);
      return 0;
    }

    if (*testing) {
      const SntvConstants s = sntv_constants(inst.tau, inst.sigma, inst.omega);
      emit(json{{"hash", hex64(instance_hash(inst))},
                {"report", to_json(testing_report(inst.tau, inst.sigma, inst.omega, inst.exps))},
                {"C1", to_json(s.c1)},
                {"C2", to_json(s.c2)},
                {"carleson", to_json(carleson_norm(inst.tau))}},
           out);
      return 0;
    }

    if (*norm) {
      AscentOptions opts;
      opts.seed = seed;
      json j{{"hash", hex64(instance_hash(inst))}};
      j["C3"] = to_json(exact_norm_22(inst.tau, inst.sigma, inst.omega, opts.power));
      j["strong"] = to_json(strong_norm_lower(inst.tau, inst.sigma, inst.omega, inst.exps, opts));
      j["weak"] = to_json(weak_norm_lower(inst.tau, inst.sigma, inst.omega, inst.exps, opts));
      emit(j, out);
      return 0;
    }

    if (*decompose) {
      const GridFunction f = probe_or_one(inst);
      const GridFunction v = apply_T(inst.tau, Measure::product(f, inst.sigma));
      const WhitneyDecomposition w = whitney_layers(inst.grid, v, rho);
      const ClassifiedLayers cl = classify_cubes(w, f, inst.sigma, inst.omega, inst.tau, eta);
      const WhitneyAudit wa = audit_whitney(w);
      const CorridorAudit ca = audit_corridors(w, cl);
      json j{{"hash", hex64(instance_hash(inst))}, {"decomposition", to_json(w, &cl)}};
      j["whitney_audit"] = {{"cover", wa.cover_violations},
                            {"whitney", wa.whitney_violations},
                            {"nested", wa.nested_violations},
                            {"overlap_max", wa.overlap_max},
                            {"overlap_bound", wa.overlap_bound},
                            {"crowd_max", wa.crowd_max},
                            {"crowd_cap", wa.crowd_cap},
                            {"saturated", wa.saturated_layers}};
      j["corridor_audit"] = {{"overlap", ca.overlap_violations},
                             {"union", ca.union_violations},
                             {"disjoint_in_k", ca.disjoint_in_k_violations},
                             {"max_unsmall", ca.max_unsmall_count},
                             {"unsmall_bound", ca.unsmall_bound},
                             {"key", ca.key_violations}};
      emit(j, out);
      return wa.ok() && ca.ok() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const SizeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
