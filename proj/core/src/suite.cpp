// SPDX-License-Identifier: Apache-2.0
#include "tempo_guard/suite.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "tempo_guard/errors.hpp"

namespace tempo_guard {
namespace {

constexpr std::uint64_t kPlacementStream = 0x5851f42d4c957f2dULL;
constexpr std::uint64_t kInjectionStream = 0x14057b7ef767814fULL;

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

struct SeedOutcome {
  std::vector<ScenarioTrace> traces;
};

SeedOutcome run_seed(const SuiteConfig& config, std::uint64_t seed, bool keep_merged) {
  const Scenario scenario = build_scenario(config, seed);
  const auto& frames = scenario.scene.frames;
  const std::size_t history = config.detector.synthesis.history_length;

  HistoryBuffer buffer(config.detector.synthesis);
  buffer.start(frames[0]);
  for (std::size_t f = 1; f < history; ++f) buffer.advance(frames[f]);

  SeedOutcome out;
  auto score = [&](const Frame& incoming, bool poisoned) {
    const auto t0 = std::chrono::steady_clock::now();
    DetectionTrace trace = detect_traced(buffer, incoming, config.detector);
    const auto t1 = std::chrono::steady_clock::now();
    ScenarioTrace st;
    st.row.seed = seed;
    st.row.poisoned = poisoned;
    st.row.label = poisoned ? attack_label(scenario.attack.kind, scenario.attack.cls) : "benign";
    st.row.score = trace.report.anomaly_score;
    st.row.decision = trace.report.decision;
    st.row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    st.row.flow_variance = trace.report.cluster_flow_variance;
    st.row.baseline_cd = trace.report.baseline_cd;
    st.row.injected = poisoned ? scenario.injection.injected_indices.size() : 0;
    if (keep_merged) st.merged = std::move(trace.merged);
    out.traces.push_back(std::move(st));
  };
  if (config.benign) score(frames[history], false);
  if (config.poisoned) score(scenario.injection.frame, true);
  return out;
}

std::vector<ScenarioTrace> run_all(const SuiteConfig& config, bool keep_merged) {
  validate(config);
  const auto n = static_cast<std::size_t>(config.scenarios);
  std::vector<SeedOutcome> outcomes(n);
  parallel_for(n, config.jobs, [&](std::size_t i) { outcomes[i] = run_seed(config, config.seed + i, keep_merged); });
  std::vector<ScenarioTrace> traces;
  for (auto& o : outcomes) {
    for (auto& t : o.traces) traces.push_back(std::move(t));
  }
  return traces;
}

std::optional<double> rate(std::size_t hits, std::size_t total) {
  if (total == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

void validate(const SuiteConfig& config) {
  if (config.scenarios < 0) throw InvalidArgument("scenario count must be >= 0");
  if (config.jobs < 1) throw InvalidArgument("jobs must be >= 1");
  if (config.classes.empty()) throw InvalidArgument("suite needs at least one attack class");
  const int budget = config.attack == AttackKind::kDense ? kDenseBudget : kSparseBudget;
  if (config.point_count < 0 || config.point_count > budget) {
    throw InvalidArgument("point count outside the " + std::string(to_string(config.attack)) + " budget");
  }
  validate(config.scene);
  validate(config.detector);
}

SuiteConfig default_suite(AttackKind kind) {
  SuiteConfig config;
  config.attack = kind;
  if (kind == AttackKind::kSparse) {
    config.classes = {ObjectClass::kCar};
    apply_preset(config.detector, ClusterParams::sparse());
  } else {
    apply_preset(config.detector, ClusterParams::dense());
  }
  return config;
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* value = std::getenv("TEMPO_GUARD_SEED");
  if (value == nullptr || *value == '\0') return fallback;
  char* end = nullptr;
  const unsigned long long parsed = std::strtoull(value, &end, 10);
  if (end == nullptr || *end != '\0' || *value == '-') return fallback;
  return parsed;
}

std::string ScenarioRow::scenario_id() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06llu", static_cast<unsigned long long>(seed));
  return std::string(buf) + (poisoned ? "-poisoned" : "-benign");
}

double BenchmarkResult::balanced_accuracy() const {
  const double specificity = fpr ? 1.0 - *fpr : 0.0;
  const double sensitivity = tpr.value_or(0.0);
  return 0.5 * (specificity + sensitivity);
}

BenchmarkResult aggregate(std::vector<ScenarioRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ScenarioRow& a, const ScenarioRow& b) {
    return a.seed != b.seed ? a.seed < b.seed : a.poisoned < b.poisoned;
  });
  BenchmarkResult result;
  std::size_t fp = 0, benign = 0, tp = 0, poisoned = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_label;
  for (const auto& r : rows) {
    const bool flagged = r.decision == Decision::kAttacked;
    if (r.poisoned) {
      ++poisoned;
      tp += flagged;
      auto& [hits, total] = per_label[r.label];
      hits += flagged;
      ++total;
    } else {
      ++benign;
      fp += flagged;
    }
  }
  result.fpr = rate(fp, benign);
  result.tpr = rate(tp, poisoned);
  for (const auto& [label, counts] : per_label) result.tpr_by_label[label] = rate(counts.first, counts.second);
  result.rows = std::move(rows);
  return result;
}

Scenario build_scenario(const SuiteConfig& config, std::uint64_t seed) {
  Scenario s;
  ScenarioOptions options = config.scene;
  options.duration_frames = static_cast<int>(config.detector.synthesis.history_length) + 1;
  s.spec = random_scene_spec(seed, options);
  s.scene = generate_scene(s.spec);
  if (options.ground_filter > 0.0) s.scene = remove_ground(s.scene, options.ground_filter);

  const ObjectClass cls = config.classes[seed % config.classes.size()];
  std::mt19937_64 rng(seed ^ kPlacementStream);
  s.attack.kind = config.attack;
  s.attack.cls = cls;
  s.attack.point_count = config.point_count > 0
                             ? config.point_count
                             : (config.attack == AttackKind::kDense ? kDenseBudget : kSparseBudget);
  s.attack.placement = choose_attack_placement(s.scene, config.attack, cls, rng);
  s.attack.target_frame = s.scene.frames.back().index;
  s.injection = inject(s.scene.frames.back(), s.attack, seed ^ kInjectionStream);
  return s;
}

BenchmarkResult run_suite(const SuiteConfig& config) {
  std::vector<ScenarioRow> rows;
  for (auto& t : run_all(config, false)) rows.push_back(std::move(t.row));
  return aggregate(std::move(rows));
}

std::vector<ScenarioTrace> trace_suite(const SuiteConfig& config) { return run_all(config, true); }

double distance_to_ideal(std::optional<double> fpr, std::optional<double> tpr) {
  const double f = fpr.value_or(1.0);
  const double miss = 1.0 - tpr.value_or(0.0);
  return std::sqrt(f * f + miss * miss);
}

std::vector<ClusterParams> default_sweep_grid() {
  std::vector<ClusterParams> grid;
  for (int min_pts : {5, 9, 13, 17, 21}) {
    for (double eps : {0.25, 0.5, 0.75, 1.0}) grid.push_back({eps, min_pts});
  }
  return grid;
}

std::vector<SweepPoint> run_sweep(const SuiteConfig& config, const std::vector<ClusterParams>& grid) {
  if (grid.empty()) throw InvalidArgument("sweep grid is empty");
  for (const auto& p : grid) validate(p);
  return sweep_traces(trace_suite(config), config, grid);
}

std::vector<SweepPoint> sweep_traces(const std::vector<ScenarioTrace>& traces, const SuiteConfig& config,
                                     const std::vector<ClusterParams>& grid) {
  if (grid.empty()) throw InvalidArgument("sweep grid is empty");
  for (const auto& p : grid) validate(p);
  std::vector<SweepPoint> points(grid.size());
  parallel_for(grid.size(), config.jobs, [&](std::size_t g) {
    std::vector<ScenarioRow> rows;
    rows.reserve(traces.size());
    for (const auto& t : traces) {
      ScenarioRow row = t.row;
      const DetectionReport r =
          rescore(t.merged, 0, grid[g], config.detector.decision_threshold, config.detector.score_mode);
      row.score = r.anomaly_score;
      row.decision = r.decision;
      rows.push_back(std::move(row));
    }
    const BenchmarkResult result = aggregate(std::move(rows));
    points[g] = {grid[g], result.fpr, result.tpr, distance_to_ideal(result.fpr, result.tpr)};
  });
  return points;
}

std::size_t sweep_argmin(const std::vector<SweepPoint>& points) {
  if (points.empty()) throw InvalidArgument("sweep_argmin: no points");
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].distance < points[best].distance) best = i;
  }
  return best;
}

namespace {

AblationSetting ablation_setting(double beta, BenchmarkResult result) {
  AblationSetting s;
  s.beta = beta;
  s.result = std::move(result);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : s.result.rows) {
    if (!r.poisoned) continue;
    sum += r.flow_variance;
    ++n;
  }
  s.mean_flow_variance = n ? sum / static_cast<double>(n) : 0.0;
  return s;
}

}  // namespace

AblationResult compare_ablation(BenchmarkResult with_coherence, double beta, BenchmarkResult without_coherence) {
  AblationResult out;
  out.with_coherence = ablation_setting(beta, std::move(with_coherence));
  out.without_coherence = ablation_setting(0.0, std::move(without_coherence));

  std::map<std::uint64_t, double> baseline;
  for (const auto& r : out.without_coherence.result.rows) {
    if (r.poisoned) baseline[r.seed] = r.flow_variance;
  }
  std::size_t lower = 0, paired = 0;
  for (const auto& r : out.with_coherence.result.rows) {
    auto it = baseline.find(r.seed);
    if (!r.poisoned || it == baseline.end()) continue;
    ++paired;
    lower += r.flow_variance <= it->second;
  }
  out.lower_variance_fraction = paired ? static_cast<double>(lower) / static_cast<double>(paired) : 0.0;
  return out;
}

AblationResult run_ablation(const SuiteConfig& config, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("ablation needs a positive coherence weight");
  SuiteConfig with = config;
  with.detector.synthesis.sfe.beta = beta;
  SuiteConfig without = config;
  without.detector.synthesis.sfe.beta = 0.0;
  return compare_ablation(run_suite(with), beta, run_suite(without));
}

std::string format_rate(std::optional<double> rate) { return rate ? format_number(*rate) : std::string(); }

void write_benchmark_csv(std::ostream& out, const BenchmarkResult& result) {
  out << "scenario,label,score,decision,wall_ms\n";
  for (const auto& r : result.rows) {
    char wall[32];
    std::snprintf(wall, sizeof wall, "%.3f", r.wall_ms);
    out << r.scenario_id() << ',' << r.label << ',' << format_number(r.score) << ',' << to_string(r.decision) << ','
        << wall << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "min_pts,eps,fpr,tpr,distance\n";
  for (const auto& p : points) {
    out << p.params.min_pts << ',' << format_number(p.params.eps) << ',' << format_rate(p.fpr) << ','
        << format_rate(p.tpr) << ',' << format_number(p.distance) << '\n';
  }
}

void write_ablation_csv(std::ostream& out, const AblationResult& result) {
  out << "beta,fpr,tpr,flow_variance\n";
  for (const auto* s : {&result.with_coherence, &result.without_coherence}) {
    out << format_number(s->beta) << ',' << format_rate(s->result.fpr) << ',' << format_rate(s->result.tpr) << ','
        << format_number(s->mean_flow_variance) << '\n';
  }
}

}  // namespace tempo_guard
