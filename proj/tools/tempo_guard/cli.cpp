// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tempo_guard/attacksim.hpp"
#include "tempo_guard/errors.hpp"
#include "tempo_guard/frame_io.hpp"
#include "tempo_guard/suite.hpp"

namespace tempo_guard::cli {
namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> scenarios;
  std::optional<int> jobs;
  std::optional<std::string> attack;
  std::optional<int> points;
  std::optional<std::string> preset;
  std::optional<int> min_pts;
  std::optional<double> eps;
  std::optional<double> threshold;
  std::optional<std::string> score_mode;
  std::optional<std::size_t> history;
  std::optional<double> downsample;
  std::optional<bool> downsample_incoming;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> learning_rate;
  std::optional<int> iterations;
  std::optional<std::string> optimizer;
  std::optional<double> max_correspondence;

  // command specific
  std::string frames;
  std::string grid;
  std::string truth;
  std::optional<std::string> object_class;
  std::optional<int> frame_count;
  bool keep_ground = false;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_detector_options(CLI::App* app, Options& o) {
  app->add_option("--config", o.config, "Suite/run config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--out", o.out, "Output path (default: stdout)");
  app->add_option("--preset", o.preset, "Cluster preset")->check(CLI::IsMember({"dense", "sparse"}));
  app->add_option("--min-pts", o.min_pts, "DBSCAN count threshold");
  app->add_option("--eps", o.eps, "DBSCAN distance threshold (m)");
  app->add_option("--threshold", o.threshold, "Decision threshold on the anomaly score");
  app->add_option("--score-mode", o.score_mode, "Anomaly score")
      ->check(CLI::IsMember({"point_count", "cluster_count"}));
  app->add_option("--history", o.history, "History length L");
  app->add_option("--downsample", o.downsample, "History voxel side (m), 0 keeps frames raw");
  app->add_option("--downsample-incoming", o.downsample_incoming, "Downsample the incoming frame too");
  app->add_option("--alpha", o.alpha, "Chamfer weight");
  app->add_option("--beta", o.beta, "Coherence weight");
  app->add_option("--lr", o.learning_rate, "Scene flow learning rate");
  app->add_option("--iterations", o.iterations, "Scene flow iterations");
  app->add_option("--optimizer", o.optimizer, "Scene flow optimizer")->check(CLI::IsMember({"adam", "gd"}));
  app->add_option("--max-correspondence", o.max_correspondence, "Chamfer truncation distance (m), 0 = off");
}

void add_suite_options(CLI::App* app, Options& o) {
  add_detector_options(app, o);
  app->add_option("--seed", o.seed, "First scenario seed (default: $TEMPO_GUARD_SEED or config)");
  app->add_option("--scenarios", o.scenarios, "Number of seeds");
  app->add_option("--jobs", o.jobs, "Parallel scenarios")->check(CLI::PositiveNumber);
  app->add_option("--attack", o.attack, "Attack kind")->check(CLI::IsMember({"dense", "sparse"}));
  app->add_option("--points", o.points, "Injected points per attack (0 = budget)");
}

AttackKind kind_from_flag(const std::string& s) { return s == "sparse" ? AttackKind::kSparse : AttackKind::kDense; }

SuiteConfig build_config(const Options& o) {
  SuiteConfig c = o.config.empty() ? default_suite(o.attack ? kind_from_flag(*o.attack) : AttackKind::kDense)
                                   : load_suite_config(o.config);
  if (o.attack && !o.config.empty()) {
    c.attack = kind_from_flag(*o.attack);
    if (c.attack == AttackKind::kSparse) c.classes = {ObjectClass::kCar};
  }
  c.seed = o.seed.value_or(seed_from_env(c.seed));
  if (o.scenarios) c.scenarios = *o.scenarios;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.points) c.point_count = *o.points;

  DetectorConfig& d = c.detector;
  if (o.preset) apply_preset(d, *o.preset == "sparse" ? ClusterParams::sparse() : ClusterParams::dense());
  if (o.min_pts || o.eps) {
    ClusterParams p = d.cluster_params;
    if (o.min_pts) p.min_pts = *o.min_pts;
    if (o.eps) p.eps = *o.eps;
    apply_preset(d, p);
  }
  if (o.threshold) d.decision_threshold = *o.threshold;
  if (o.score_mode) d.score_mode = *o.score_mode == "cluster_count" ? ScoreMode::kClusterCount : ScoreMode::kPointCount;
  if (o.history) d.synthesis.history_length = *o.history;
  if (o.downsample) d.synthesis.downsample_side = *o.downsample;
  if (o.downsample_incoming) d.downsample_incoming = *o.downsample_incoming;
  SfeConfig& sfe = d.synthesis.sfe;
  if (o.alpha) sfe.alpha = *o.alpha;
  if (o.beta) sfe.beta = *o.beta;
  if (o.learning_rate) sfe.learning_rate = *o.learning_rate;
  if (o.iterations) sfe.iterations = *o.iterations;
  if (o.optimizer) sfe.optimizer = *o.optimizer == "gd" ? Optimizer::kGradientDescent : Optimizer::kAdam;
  if (o.max_correspondence) sfe.max_correspondence = *o.max_correspondence;
  validate(c);
  return c;
}

// Writes to --out when given, otherwise to `fallback`.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback), path_(path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw ParseError(ParseErrorKind::kIo, "cannot write '" + path + "'");
    stream_ = file_.get();
  }

  std::ostream& stream() { return *stream_; }
  bool to_file() const { return file_ != nullptr; }

  void close() {
    stream_->flush();
    if (!*stream_) throw ParseError(ParseErrorKind::kIo, "write failed for '" + path_ + "'");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
  std::string path_;
};

std::string summary(const BenchmarkResult& r) {
  std::ostringstream os;
  os << "FPR=" << format_rate(r.fpr) << " TPR=" << format_rate(r.tpr);
  for (const auto& [label, tpr] : r.tpr_by_label) os << ' ' << label << "=" << format_rate(tpr);
  os << " rows=" << r.rows.size();
  return os.str();
}

int cmd_detect(const Options& o, std::ostream& out, std::ostream& err) {
  const SuiteConfig c = build_config(o);
  const DetectorConfig& config = c.detector;
  const std::vector<Frame> frames = load_frames(o.frames);
  const std::size_t history = config.synthesis.history_length;
  if (frames.size() < history + 1) {
    throw UsageError("detect needs at least L+1 = " + std::to_string(history + 1) + " frames, got " +
                     std::to_string(frames.size()));
  }

  Sink sink(o.out, out);
  HistoryBuffer buffer(config.synthesis);
  buffer.start(frames[0]);
  for (std::size_t f = 1; f < history; ++f) buffer.advance(frames[f]);
  bool attacked = false;
  for (std::size_t f = history; f < frames.size(); ++f) {
    const DetectionReport report = detect(buffer, frames[f], config);
    attacked = attacked || report.decision == Decision::kAttacked;
    sink.stream() << to_json_line(report) << '\n';
    if (f + 1 < frames.size()) buffer.advance(frames[f]);
  }
  sink.close();
  if (sink.to_file()) err << (attacked ? "ATTACKED" : "BENIGN") << '\n';
  return attacked ? kExitAttack : kExitBenign;
}

int cmd_benchmark(const Options& o, std::ostream& out, std::ostream& err) {
  const SuiteConfig c = build_config(o);
  const BenchmarkResult result = run_suite(c);
  Sink sink(o.out, out);
  write_benchmark_csv(sink.stream(), result);
  sink.close();
  (sink.to_file() ? out : err) << summary(result) << '\n';
  return kExitBenign;
}

std::vector<ClusterParams> parse_grid(const std::string& text) {
  if (text.empty()) return default_sweep_grid();
  std::vector<ClusterParams> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("grid entries look like min_pts:eps, got '" + item + "'");
    try {
      std::size_t used = 0;
      ClusterParams p;
      p.min_pts = std::stoi(item.substr(0, colon), &used);
      if (used != colon) throw std::invalid_argument(item);
      const std::string eps = item.substr(colon + 1);
      p.eps = std::stod(eps, &used);
      if (used != eps.size()) throw std::invalid_argument(item);
      validate(p);
      grid.push_back(p);
    } catch (const std::logic_error&) {
      throw UsageError("bad grid entry '" + item + "'");
    }
  }
  if (grid.empty()) throw UsageError("sweep grid is empty");
  return grid;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const std::vector<ClusterParams> grid = parse_grid(o.grid);
  const SuiteConfig c = build_config(o);
  const auto points = run_sweep(c, grid);
  Sink sink(o.out, out);
  write_sweep_csv(sink.stream(), points);
  sink.close();
  const auto& best = points[sweep_argmin(points)];
  (sink.to_file() ? out : err) << "best min_pts=" << best.params.min_pts << " eps=" << best.params.eps
                               << " distance=" << best.distance << '\n';
  return kExitBenign;
}

int cmd_ablate(const Options& o, std::ostream& out, std::ostream& err) {
  SuiteConfig c = build_config(o);
  const double beta = c.detector.synthesis.sfe.beta;
  if (!(beta > 0.0)) throw UsageError("ablate compares beta > 0 against beta = 0; got beta = 0");
  const AblationResult result = run_ablation(c, beta);
  Sink sink(o.out, out);
  write_ablation_csv(sink.stream(), result);
  sink.close();
  (sink.to_file() ? out : err) << "beta>0 lower-or-equal flow variance on " << result.lower_variance_fraction * 100.0
                               << "% of poisoned scenarios\n";
  return kExitBenign;
}

int cmd_gen(const Options& o, std::ostream& out, std::ostream&) {
  if (o.out.empty() || o.out == "-") throw UsageError("gen needs --out <frames file>");
  const SuiteConfig c = build_config(o);
  ScenarioOptions options = c.scene;
  options.duration_frames = o.frame_count.value_or(static_cast<int>(c.detector.synthesis.history_length) + 1);
  if (options.duration_frames < 2) throw UsageError("gen needs at least 2 frames");

  const SceneSpec spec = random_scene_spec(c.seed, options);
  Scene scene = generate_scene(spec);
  if (!o.keep_ground && options.ground_filter > 0.0) scene = remove_ground(scene, options.ground_filter);

  std::optional<AttackSpec> attack;
  std::vector<std::size_t> injected;
  if (o.attack) {
    AttackSpec a;
    a.kind = kind_from_flag(*o.attack);
    a.cls = o.object_class ? object_class_from_string(*o.object_class)
                           : (a.kind == AttackKind::kSparse ? ObjectClass::kCar : ObjectClass::kPedestrian);
    a.point_count = c.point_count > 0 ? c.point_count : (a.kind == AttackKind::kDense ? kDenseBudget : kSparseBudget);
    std::mt19937_64 rng(c.seed);
    a.placement = choose_attack_placement(scene, a.kind, a.cls, rng);
    a.target_frame = scene.frames.back().index;
    Injection inj = inject(scene.frames.back(), a, c.seed);
    scene.frames.back() = std::move(inj.frame);
    injected = std::move(inj.injected_indices);
    scene.truth.back().point_labels.resize(scene.frames.back().cloud.size(), kInjectedLabel);
    attack = a;
  }

  save_frames(scene.frames, o.out);
  const std::string truth_path = o.truth.empty() ? o.out + ".truth.json" : o.truth;
  std::ofstream truth(truth_path, std::ios::trunc);
  truth << ground_truth_json(spec, scene, attack, injected) << '\n';
  if (!truth) throw ParseError(ParseErrorKind::kIo, "cannot write '" + truth_path + "'");
  out << "wrote " << scene.frames.size() << " frames to " << o.out << " and ground truth to " << truth_path << '\n';
  return kExitBenign;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal-consistency LiDAR spoofing detector", "tempo_guard"};
  app.require_subcommand(1);
  Options o;

  auto* detect = app.add_subcommand("detect", "Slide the history buffer over a frame file, one report per frame");
  add_detector_options(detect, o);
  detect->add_option("--frames", o.frames, "Frame file")->required();

  auto* benchmark = app.add_subcommand("benchmark", "Run a seeded benign/poisoned suite, write scenario CSV");
  add_suite_options(benchmark, o);

  auto* sweep = app.add_subcommand("sweep", "Re-score a suite over a (min_pts, eps) grid");
  add_suite_options(sweep, o);
  sweep->add_option("--grid", o.grid, "Comma list of min_pts:eps (default: 5..21 x 0.25..1.0)");

  auto* ablate = app.add_subcommand("ablate", "Compare coherence weight beta against beta = 0");
  add_suite_options(ablate, o);

  auto* gen = app.add_subcommand("gen", "Generate one seeded scene (optionally attacked) as a frame file");
  add_suite_options(gen, o);
  gen->add_option("--truth", o.truth, "Ground-truth sidecar path (default: <out>.truth.json)");
  gen->add_option("--class", o.object_class, "Injected template")
      ->check(CLI::IsMember({"CAR", "CYCLIST", "PEDESTRIAN"}));
  gen->add_option("--frames", o.frame_count, "Frames to generate (default: L+1)");
  gen->add_flag("--keep-ground", o.keep_ground, "Skip the ground filter");

  std::vector<const char*> argv{"tempo_guard"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitBenign;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitBenign;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (detect->parsed()) return cmd_detect(o, out, err);
    if (benchmark->parsed()) return cmd_benchmark(o, out, err);
    if (sweep->parsed()) return cmd_sweep(o, out, err);
    if (ablate->parsed()) return cmd_ablate(o, out, err);
    if (gen->parsed()) return cmd_gen(o, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace tempo_guard::cli
