#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dyadic/constants.hpp"
#include "dyadic/extremal.hpp"
#include "dyadic/prooflab.hpp"

namespace dyadic {

using json = nlohmann::json;

inline constexpr const char* kInstanceFormat = "dyadic-instance/1";

struct MassModel {
  enum class Kind : std::uint8_t { lognormal, uniform, lebesgue, spike };
  Kind kind = Kind::lognormal;
  double mu = 0.0;         // lognormal location
  double s = 1.0;          // lognormal scale
  double lo = 0.5;         // uniform range
  double hi = 1.5;
  int spikes = 1;          // spike: this many heavy leaves over a light floor
  double spike_mass = 50.0;
  double floor = 1e-3;
  /// Fraction of leaves set to exactly zero (0 keeps every weight positive).
  double zero_fraction = 0.0;
};

struct TauModel {
  enum class Kind : std::uint8_t { root_only, lognormal, fractional, sparse };
  Kind kind = Kind::lognormal;
  double alpha = 0.5;     // fractional
  double density = 0.6;   // sparse
  double s = 1.0;         // lognormal factor scale; tau_Q = |Q| * factor
  /// Zero tau on the finest levels (keeps Whitney layers resolvable).
  int zero_finest = 0;
  bool zero_root = false;
};

struct GeneratorModel {
  int d = 1;
  int depth = 3;
  MassModel sigma;
  MassModel omega;
  TauModel tau;
  double p = 2.0;
  double q = 2.0;
  /// Also draw a nonnegative test function vanishing on one child of the root.
  bool probe = false;
  std::string tag = "custom";
};

struct Instance {
  GridPtr grid;
  Measure sigma;
  Measure omega;
  CubeWeights tau;
  Exponents exps;
  std::uint64_t seed = 0;
  std::string generator;
  std::optional<GridFunction> probe;
};

/// Deterministic in (model, seed); throws ConfigError on an invalid model.
Instance gen_instance(const GeneratorModel& model, std::uint64_t seed);

json to_json(const Instance& inst);
Instance instance_from_json(const json& j);
/// FNV-1a over the serialized instance.
std::uint64_t instance_hash(const Instance& inst);
std::string hex64(std::uint64_t v);

json to_json(const GeneratorModel& model);
GeneratorModel generator_from_json(const json& j);

json to_json(const TestingValue& v);
json to_json(const TestingReport& r);
json to_json(const NormEstimate& e);
json to_json(const WhitneyDecomposition& w, const ClassifiedLayers* classes = nullptr);
json to_json(const PrincipalForest& forest);

struct SuiteConfig {
  std::string name = "suite";
  std::size_t count = 10;
  std::uint64_t seed = 1;
  /// Template for every instance; d, depth and exponents are overridden below.
  GeneratorModel generator;
  /// (d, depth) pairs drawn uniformly per instance.
  std::vector<std::pair<int, int>> shapes{{1, 3}, {1, 4}, {1, 5}, {1, 6}, {2, 2}, {2, 3}};
  /// Exponent pairs drawn uniformly per instance.
  std::vector<std::pair<double, double>> exponents{{2.0, 2.0}};
  /// Draw tau kinds and mass kinds at random instead of using the template.
  bool mix_generators = true;

  bool compute_norms = true;  // ascent estimates (strong, weak, embedding)
  bool run_prooflab = true;
  double eta = 0.25;
  int rho = 1;
  int m = 5;
  double ratio_cap = 16.0;
  double tol = 1e-8;
  AscentOptions ascent;
  int threads = 0;  // 0: DYADIC_THREADS or hardware concurrency
};

json to_json(const SuiteConfig& c);
SuiteConfig suite_from_json(const json& j);

struct SuiteRow {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string generator;
  std::string hash;
  int d = 0;
  int depth = 0;
  double p = 0.0;
  double q = 0.0;

  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  bool c3_exact = false;
  double local = 0.0;
  double local_dual = 0.0;
  double global = 0.0;
  double global_dual = 0.0;
  double carleson = 0.0;
  double cet = 0.0;
  double strong_lower = 0.0;
  double weak_lower = 0.0;
  double ratio_sum = 0.0;  // C3 / (C1 + C2)
  double ratio_max = 0.0;  // C3 / max(C1, C2)

  // prooflab
  std::size_t layers = 0;
  std::size_t whitney_overlap = 0;
  std::size_t whitney_crowd = 0;
  std::size_t occurrence_max = 0;
  double geometric_sum = 0.0;
  double principal_carleson = 0.0;

  std::vector<std::string> violations;  // exact-direction failures
  std::vector<std::string> flags;       // advisory notes
  bool pass() const { return violations.empty(); }
  double elapsed_ms = 0.0;
  std::optional<json> counterexample;
};

struct SuiteReport {
  std::string name;
  std::vector<SuiteRow> rows;
  double max_ratio_sum = 0.0;
  double min_ratio_max = 0.0;
  double max_ratio_max = 0.0;
  std::size_t violation_count = 0;
  std::size_t flagged_count = 0;
  bool pass() const { return violation_count == 0; }
};

/// Evaluates one instance: constants, norms and audits.
SuiteRow evaluate_instance(const Instance& inst, const SuiteConfig& config);
/// The i-th instance of a suite.
Instance suite_instance(const SuiteConfig& config, std::size_t i);
SuiteReport run_suite(const SuiteConfig& config);

json to_json(const SuiteRow& row, bool timing = true);
std::string report_csv(const SuiteReport& report);
std::string report_jsonl(const SuiteReport& report, bool timing = true);
std::string summary_csv(const SuiteReport& report);
/// Writes summary.csv, rows.csv, rows.jsonl and one JSON file per counterexample.
void write_report(const SuiteReport& report, const std::string& directory);

int default_thread_count();

}  // namespace dyadic
