// SPDX-License-Identifier: Apache-2.0
//
// Seeded benchmark suites: generate a scene per seed, fill the history
// buffer with its first L frames, then score the final frame both clean and
// with an injected object. Scenarios run on a bounded worker pool; results
// are ordered by seed so the output does not depend on the job count.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tempo_guard/attacksim.hpp"
#include "tempo_guard/detector.hpp"

namespace tempo_guard {

struct SuiteConfig {
  std::uint64_t seed = 0;  // scenarios use seeds seed .. seed + scenarios - 1
  int scenarios = 100;
  AttackKind attack = AttackKind::kDense;
  std::vector<ObjectClass> classes{ObjectClass::kPedestrian, ObjectClass::kCyclist, ObjectClass::kCar};
  int point_count = 0;  // 0 = the kind's budget
  bool benign = true;
  bool poisoned = true;
  ScenarioOptions scene;
  DetectorConfig detector;
  int jobs = 1;
};

void validate(const SuiteConfig& config);

/// Dense suite at (17, 0.25) or sparse car suite at (9, 0.75), threshold 15.
SuiteConfig default_suite(AttackKind kind);

/// TEMPO_GUARD_SEED when set and numeric, otherwise `fallback`.
std::uint64_t seed_from_env(std::uint64_t fallback = 0);

/// JSON document <-> config. Unknown keys are rejected.
SuiteConfig parse_suite_config(const std::string& json_text);
SuiteConfig load_suite_config(const std::string& path);
std::string to_json(const SuiteConfig& config);

struct ScenarioRow {
  std::uint64_t seed = 0;
  std::string label;  // "benign" or an attack label such as D.PED
  bool poisoned = false;
  double score = 0.0;
  Decision decision = Decision::kBenign;
  double wall_ms = 0.0;
  double flow_variance = 0.0;
  double baseline_cd = 0.0;  // normalized Chamfer comparator on the same warp
  std::size_t injected = 0;

  std::string scenario_id() const;
};

struct BenchmarkResult {
  std::vector<ScenarioRow> rows;
  std::optional<double> fpr;
  std::optional<double> tpr;                           // over all poisoned rows
  std::map<std::string, std::optional<double>> tpr_by_label;

  double balanced_accuracy() const;
};

/// FPR = FP / (FP + TN) over benign rows, TPR = TP / (TP + FN) over poisoned rows.
BenchmarkResult aggregate(std::vector<ScenarioRow> rows);

/// The scene, attack and frames of one seeded scenario.
struct Scenario {
  SceneSpec spec;
  Scene scene;
  AttackSpec attack;
  Injection injection;  // final frame with the attack applied
};

Scenario build_scenario(const SuiteConfig& config, std::uint64_t seed);

BenchmarkResult run_suite(const SuiteConfig& config);

/// Detection products kept for re-scoring under other clustering parameters.
struct ScenarioTrace {
  ScenarioRow row;
  MergedCloud merged;
};

std::vector<ScenarioTrace> trace_suite(const SuiteConfig& config);

struct SweepPoint {
  ClusterParams params;
  std::optional<double> fpr;
  std::optional<double> tpr;
  double distance = 0.0;  // to the ideal corner (FPR 0, TPR 1)
};

/// sqrt(FPR^2 + (1 - TPR)^2); an undefined rate counts as its worst value.
double distance_to_ideal(std::optional<double> fpr, std::optional<double> tpr);

std::vector<ClusterParams> default_sweep_grid();

/// Warps once per scenario, then re-clusters the merged clouds at every grid point.
std::vector<SweepPoint> run_sweep(const SuiteConfig& config, const std::vector<ClusterParams>& grid);
/// As run_sweep, over traces already produced by trace_suite(config).
std::vector<SweepPoint> sweep_traces(const std::vector<ScenarioTrace>& traces, const SuiteConfig& config,
                                     const std::vector<ClusterParams>& grid);

/// Lowest distance; ties keep the earlier grid point.
std::size_t sweep_argmin(const std::vector<SweepPoint>& points);

struct AblationSetting {
  double beta = 0.0;
  BenchmarkResult result;
  double mean_flow_variance = 0.0;  // over poisoned rows
};

struct AblationResult {
  AblationSetting with_coherence;
  AblationSetting without_coherence;
  double lower_variance_fraction = 0.0;  // poisoned scenarios where beta>0 gives the lower variance
};

AblationResult run_ablation(const SuiteConfig& config, double beta = 2.0);
/// Pairs two finished runs of the same suite by seed.
AblationResult compare_ablation(BenchmarkResult with_coherence, double beta, BenchmarkResult without_coherence);

void write_benchmark_csv(std::ostream& out, const BenchmarkResult& result);
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points);
void write_ablation_csv(std::ostream& out, const AblationResult& result);

/// Empty string for an undefined rate.
std::string format_rate(std::optional<double> rate);

}  // namespace tempo_guard
