// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "tempo_guard/errors.hpp"
#include "tempo_guard/suite.hpp"

namespace tempo_guard {
namespace {

using nlohmann::json;

void only_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InvalidArgument(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw InvalidArgument(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config key '") + key + "': " + e.what());
  }
}

ClusterParams preset_by_name(const std::string& name) {
  if (name == "dense") return ClusterParams::dense();
  if (name == "sparse") return ClusterParams::sparse();
  throw InvalidArgument("unknown cluster preset '" + name + "'");
}

void read_sfe(const json& j, SfeConfig& sfe) {
  only_keys(j, "sfe",
            {"alpha", "beta", "learning_rate", "iterations", "hidden_width", "num_layers", "pair_weight", "optimizer",
             "seed", "zero_output", "max_correspondence"});
  read(j, "alpha", sfe.alpha);
  read(j, "beta", sfe.beta);
  read(j, "learning_rate", sfe.learning_rate);
  read(j, "iterations", sfe.iterations);
  read(j, "hidden_width", sfe.hidden_width);
  read(j, "num_layers", sfe.num_layers);
  read(j, "pair_weight", sfe.pair_weight);
  read(j, "seed", sfe.seed);
  read(j, "zero_output", sfe.zero_output);
  read(j, "max_correspondence", sfe.max_correspondence);
  if (j.contains("optimizer")) {
    std::string name;
    read(j, "optimizer", name);
    if (name == "adam") {
      sfe.optimizer = Optimizer::kAdam;
    } else if (name == "gd") {
      sfe.optimizer = Optimizer::kGradientDescent;
    } else {
      throw InvalidArgument("unknown optimizer '" + name + "'");
    }
  }
}

void read_detector(const json& j, DetectorConfig& d) {
  only_keys(j, "detector",
            {"preset", "min_pts", "eps", "threshold", "score_mode", "keep_stale", "downsample_incoming",
             "history_length", "downsample_side", "propagation_side", "warp_fit_side", "sfe"});
  if (j.contains("preset")) {
    std::string name;
    read(j, "preset", name);
    apply_preset(d, preset_by_name(name));
  }
  if (j.contains("min_pts") || j.contains("eps")) {
    ClusterParams p = d.cluster_params;
    read(j, "min_pts", p.min_pts);
    read(j, "eps", p.eps);
    apply_preset(d, p);
  }
  read(j, "threshold", d.decision_threshold);
  if (j.contains("score_mode")) {
    std::string mode;
    read(j, "score_mode", mode);
    if (mode == "point_count") {
      d.score_mode = ScoreMode::kPointCount;
    } else if (mode == "cluster_count") {
      d.score_mode = ScoreMode::kClusterCount;
    } else {
      throw InvalidArgument("unknown score mode '" + mode + "'");
    }
  }
  read(j, "keep_stale", d.keep_stale);
  read(j, "downsample_incoming", d.downsample_incoming);
  read(j, "history_length", d.synthesis.history_length);
  read(j, "downsample_side", d.synthesis.downsample_side);
  read(j, "propagation_side", d.synthesis.propagation_side);
  read(j, "warp_fit_side", d.synthesis.warp_fit_side);
  if (j.contains("sfe")) read_sfe(j.at("sfe"), d.synthesis.sfe);
}

}  // namespace

SuiteConfig parse_suite_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(j, "suite",
            {"seed", "scenarios", "attack", "classes", "point_count", "benign", "poisoned", "scene", "detector",
             "jobs"});

  AttackKind kind = AttackKind::kDense;
  if (j.contains("attack")) {
    std::string name;
    read(j, "attack", name);
    kind = attack_kind_from_string(name);
  }
  SuiteConfig c = default_suite(kind);
  read(j, "seed", c.seed);
  read(j, "scenarios", c.scenarios);
  read(j, "point_count", c.point_count);
  read(j, "benign", c.benign);
  read(j, "poisoned", c.poisoned);
  read(j, "jobs", c.jobs);
  if (j.contains("classes")) {
    std::vector<std::string> names;
    read(j, "classes", names);
    c.classes.clear();
    for (const auto& n : names) c.classes.push_back(object_class_from_string(n));
  }
  if (j.contains("scene")) {
    const json& s = j.at("scene");
    only_keys(s, "scene", {"min_objects", "max_objects", "clutter_rate", "noise_sigma", "ground_points", "ground_filter",
                        "moving_fraction"});
    read(s, "min_objects", c.scene.min_objects);
    read(s, "max_objects", c.scene.max_objects);
    read(s, "clutter_rate", c.scene.clutter_rate);
    read(s, "noise_sigma", c.scene.noise_sigma);
    read(s, "ground_points", c.scene.ground_points);
    read(s, "ground_filter", c.scene.ground_filter);
    read(s, "moving_fraction", c.scene.moving_fraction);
  }
  if (j.contains("detector")) read_detector(j.at("detector"), c.detector);
  validate(c);
  return c;
}

SuiteConfig load_suite_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(ParseErrorKind::kMissingFile, "cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  if (in.bad()) throw ParseError(ParseErrorKind::kIo, "failed reading config '" + path + "'");
  return parse_suite_config(text.str());
}

std::string to_json(const SuiteConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["scenarios"] = c.scenarios;
  j["attack"] = to_string(c.attack);
  std::vector<std::string> classes;
  for (auto cls : c.classes) classes.emplace_back(to_string(cls));
  j["classes"] = classes;
  j["point_count"] = c.point_count;
  j["benign"] = c.benign;
  j["poisoned"] = c.poisoned;
  j["scene"] = {{"min_objects", c.scene.min_objects},
                {"max_objects", c.scene.max_objects},
                {"clutter_rate", c.scene.clutter_rate},
                {"noise_sigma", c.scene.noise_sigma},
                {"ground_points", c.scene.ground_points},
                {"ground_filter", c.scene.ground_filter},
                {"moving_fraction", c.scene.moving_fraction}};
  const auto& d = c.detector;
  const auto& sfe = d.synthesis.sfe;
  nlohmann::ordered_json det;
  det["min_pts"] = d.cluster_params.min_pts;
  det["eps"] = d.cluster_params.eps;
  det["threshold"] = d.decision_threshold;
  det["score_mode"] = to_string(d.score_mode);
  det["keep_stale"] = d.keep_stale;
  det["downsample_incoming"] = d.downsample_incoming;
  det["history_length"] = d.synthesis.history_length;
  det["downsample_side"] = d.synthesis.downsample_side;
  det["propagation_side"] = d.synthesis.propagation_side;
  det["warp_fit_side"] = d.synthesis.warp_fit_side;
  det["sfe"] = {{"alpha", sfe.alpha},
                {"beta", sfe.beta},
                {"learning_rate", sfe.learning_rate},
                {"iterations", sfe.iterations},
                {"hidden_width", sfe.hidden_width},
                {"num_layers", sfe.num_layers},
                {"pair_weight", sfe.pair_weight},
                {"optimizer", sfe.optimizer == Optimizer::kAdam ? "adam" : "gd"},
                {"seed", sfe.seed},
                {"zero_output", sfe.zero_output},
                {"max_correspondence", sfe.max_correspondence}};
  j["detector"] = std::move(det);
  j["jobs"] = c.jobs;
  return j.dump(2);
}

}  // namespace tempo_guard
