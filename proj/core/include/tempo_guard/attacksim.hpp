// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale scene generator and point-injection attacks.
//
// Objects are oriented boxes standing on a ground plane. Each frame samples
// the box faces that face a fixed sensor at (0, 0, sensor_height), a disk of
// ground points, and optional transient clutter blobs (foliage, dust) that
// exist for a single frame only. All sampling is seeded.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tempo_guard/point_cloud.hpp"

namespace tempo_guard {

enum class ObjectClass { kCar, kCyclist, kPedestrian };

const char* to_string(ObjectClass cls) noexcept;
ObjectClass object_class_from_string(const std::string& name);

struct ObjectTemplate {
  ObjectClass cls = ObjectClass::kCar;
  double length = 4.5;  // along the heading
  double width = 1.8;
  double height = 1.5;
  double clearance = 0.35;  // lowest sampled height; returns below it merge with the ground
};

const ObjectTemplate& object_template(ObjectClass cls);

/// Ground-plane pose of a box's bottom centre.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

struct SceneObject {
  ObjectClass cls = ObjectClass::kCar;
  Pose2 pose;
  double vx = 0.0;  // m/s
  double vy = 0.0;
  int points_per_frame = 250;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  int duration_frames = 11;
  double frame_rate = 10.0;
  double ground_radius = 25.0;
  int ground_points = 150;
  double sensor_height = 1.8;
  double noise_sigma = 0.02;
  double clutter_rate = 0.0;  // mean blobs per frame
  int clutter_min_points = 3;
  int clutter_max_points = 8;
  double clutter_spread = 0.08;
  std::vector<SceneObject> objects;
};

void validate(const SceneSpec& spec);

inline constexpr std::int32_t kGroundLabel = -1;
inline constexpr std::int32_t kClutterLabel = -2;
inline constexpr std::int32_t kInjectedLabel = -3;

struct FrameTruth {
  std::vector<Pose2> object_poses;
  std::vector<std::int32_t> point_labels;  // object id, or one of the k*Label values
};

struct Scene {
  std::vector<Frame> frames;
  std::vector<FrameTruth> truth;
};

Scene generate_scene(const SceneSpec& spec);

/// Height-threshold ground segmentation: keeps points with z above `height`, truth labels stay aligned.
Scene remove_ground(const Scene& scene, double height);

/// True when `p` lies in the template box of `cls` at `pose`, widened by `margin`.
bool inside_box(const Point3& p, ObjectClass cls, const Pose2& pose, double margin = 1e-4);

enum class AttackKind { kDense, kSparse };

const char* to_string(AttackKind kind) noexcept;
AttackKind attack_kind_from_string(const std::string& name);

inline constexpr int kDenseBudget = 200;
inline constexpr int kSparseBudget = 64;

/// Horizontal extent of the face a dense injection can cover.
inline constexpr double kDenseWindow = 1.2;
/// Height band of a sparse injection.
inline constexpr double kSparseBandLow = 0.85;
inline constexpr double kSparseBandHigh = 0.95;

struct AttackSpec {
  AttackKind kind = AttackKind::kDense;
  ObjectClass cls = ObjectClass::kPedestrian;
  int point_count = kDenseBudget;
  Pose2 placement;
  std::uint32_t target_frame = 0;  // inject() refuses any other frame
};

struct Injection {
  Frame frame;
  std::vector<std::size_t> injected_indices;
};

/// Appends the spoofed points to a copy of `frame`. Throws on budget violations.
Injection inject(const Frame& frame, const AttackSpec& attack, std::uint64_t seed);

/// Label used in benchmark tables: D.PED, D.CYL, D.CAR, S.CAR, ...
std::string attack_label(AttackKind kind, ObjectClass cls);

/// Options for the randomized benchmark scenes.
struct ScenarioOptions {
  int duration_frames = 11;
  int min_objects = 3;
  int max_objects = 6;
  double clutter_rate = 0.3;
  double noise_sigma = 0.02;
  int ground_points = 150;
  double ground_filter = 0.15;  // frames keep points above this height; <= 0 keeps the ground
  double moving_fraction = 0.6;  // share of objects given a velocity
};

void validate(const ScenarioOptions& options);
SceneSpec random_scene_spec(std::uint64_t seed, const ScenarioOptions& options);

/// Free-space placement at least `clearance` meters from every object at every frame.
/// Sparse placements turn the long side toward the sensor.
Pose2 choose_attack_placement(const Scene& scene, AttackKind kind, ObjectClass cls, std::mt19937_64& rng,
                              double clearance = 3.0);

/// Placement `gap` meters beside object `object_id` at `frame` (the attached failure case).
Pose2 attached_placement(const Scene& scene, std::size_t object_id, std::size_t frame, ObjectClass cls,
                         double gap);

/// Ground-truth sidecar as pretty-printed JSON.
std::string ground_truth_json(const SceneSpec& spec, const Scene& scene,
                              const std::optional<AttackSpec>& attack,
                              const std::vector<std::size_t>& injected_indices);

}  // namespace tempo_guard
