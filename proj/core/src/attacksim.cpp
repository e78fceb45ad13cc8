// SPDX-License-Identifier: Apache-2.0
#include "tempo_guard/attacksim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "tempo_guard/errors.hpp"

namespace tempo_guard {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const std::array<ObjectTemplate, 3> kTemplates{{
    {ObjectClass::kCar, 4.5, 1.8, 1.5, 0.35},
    {ObjectClass::kCyclist, 1.8, 0.6, 1.7, 0.35},
    {ObjectClass::kPedestrian, 0.6, 0.6, 1.7, 0.35},
}};

struct Local {
  double x, y, z;
};

Point3 to_world(const Local& p, const Pose2& pose) {
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  return {static_cast<float>(pose.x + c * p.x - s * p.y), static_cast<float>(pose.y + s * p.x + c * p.y),
          static_cast<float>(p.z)};
}

Local to_local(double wx, double wy, double wz, const Pose2& pose) {
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  const double dx = wx - pose.x, dy = wy - pose.y;
  return {c * dx + s * dy, -s * dx + c * dy, wz};
}

// One planar face of the box in local coordinates: centre + u*a + v*b with u, v in [-1/2, 1/2].
struct Face {
  Local centre, a, b, normal;
  double area;
};

std::array<Face, 5> box_faces(const ObjectTemplate& t) {
  const double l = t.length, w = t.width, h = t.height, c = t.clearance;
  const double zc = 0.5 * (c + h), zh = h - c;
  return {{
      {{0.5 * l, 0, zc}, {0, w, 0}, {0, 0, zh}, {1, 0, 0}, w * zh},
      {{-0.5 * l, 0, zc}, {0, w, 0}, {0, 0, zh}, {-1, 0, 0}, w * zh},
      {{0, 0.5 * w, zc}, {l, 0, 0}, {0, 0, zh}, {0, 1, 0}, l * zh},
      {{0, -0.5 * w, zc}, {l, 0, 0}, {0, 0, zh}, {0, -1, 0}, l * zh},
      {{0, 0, h}, {l, 0, 0}, {0, w, 0}, {0, 0, 1}, l * w},
  }};
}

// Cosine between a face normal and the direction to the sensor.
double facing(const Face& f, const Local& sensor) {
  const double dx = sensor.x - f.centre.x, dy = sensor.y - f.centre.y, dz = sensor.z - f.centre.z;
  const double n = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (n == 0.0) return 0.0;
  return (f.normal.x * dx + f.normal.y * dy + f.normal.z * dz) / n;
}

Local on_face(const Face& f, double u, double v) {
  return {f.centre.x + u * f.a.x + v * f.b.x, f.centre.y + u * f.a.y + v * f.b.y,
          f.centre.z + u * f.a.z + v * f.b.z};
}

// The side face turned most toward the sensor.
const Face& frontal_face(const std::array<Face, 5>& faces, const Local& sensor) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < 4; ++k) {
    if (facing(faces[k], sensor) > facing(faces[best], sensor)) best = k;
  }
  return faces[best];
}

Pose2 pose_at(const SceneObject& o, double t) {
  return {o.pose.x + o.vx * t, o.pose.y + o.vy * t, o.pose.yaw};
}

double half_diagonal(ObjectClass cls) {
  const auto& t = object_template(cls);
  return 0.5 * std::hypot(t.length, t.width);
}

Point3 jitter(Point3 p, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return p;
  std::normal_distribution<double> n(0.0, sigma);
  p.x = static_cast<float>(p.x + n(rng));
  p.y = static_cast<float>(p.y + n(rng));
  p.z = static_cast<float>(p.z + n(rng));
  return p;
}

}  // namespace

const char* to_string(ObjectClass cls) noexcept {
  switch (cls) {
    case ObjectClass::kCar:
      return "CAR";
    case ObjectClass::kCyclist:
      return "CYCLIST";
    case ObjectClass::kPedestrian:
      return "PEDESTRIAN";
  }
  return "?";
}

ObjectClass object_class_from_string(const std::string& name) {
  for (const auto& t : kTemplates) {
    if (name == to_string(t.cls)) return t.cls;
  }
  throw InvalidArgument("unknown object class '" + name + "'");
}

const ObjectTemplate& object_template(ObjectClass cls) {
  return kTemplates[static_cast<std::size_t>(cls)];
}

const char* to_string(AttackKind kind) noexcept { return kind == AttackKind::kSparse ? "SPARSE" : "DENSE"; }

AttackKind attack_kind_from_string(const std::string& name) {
  if (name == "DENSE") return AttackKind::kDense;
  if (name == "SPARSE") return AttackKind::kSparse;
  throw InvalidArgument("unknown attack kind '" + name + "'");
}

std::string attack_label(AttackKind kind, ObjectClass cls) {
  std::string s = kind == AttackKind::kSparse ? "S." : "D.";
  switch (cls) {
    case ObjectClass::kCar:
      return s + "CAR";
    case ObjectClass::kCyclist:
      return s + "CYL";
    case ObjectClass::kPedestrian:
      return s + "PED";
  }
  return s;
}

void validate(const SceneSpec& spec) {
  if (spec.duration_frames < 2) throw InvalidArgument("scene needs at least 2 frames");
  if (!(spec.frame_rate > 0.0) || !std::isfinite(spec.frame_rate)) throw InvalidArgument("frame rate must be positive");
  if (!(spec.ground_radius > 0.0)) throw InvalidArgument("ground radius must be positive");
  if (spec.ground_points < 0) throw InvalidArgument("ground point count must be >= 0");
  if (!(spec.noise_sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  if (!(spec.clutter_rate >= 0.0)) throw InvalidArgument("clutter rate must be >= 0");
  if (spec.clutter_min_points < 1 || spec.clutter_max_points < spec.clutter_min_points) {
    throw InvalidArgument("clutter point range is empty");
  }
  if (!(spec.clutter_spread >= 0.0)) throw InvalidArgument("clutter spread must be >= 0");
  for (const auto& o : spec.objects) {
    if (o.points_per_frame <= 0) throw InvalidArgument("object point budget must be positive");
    if (!std::isfinite(o.pose.x) || !std::isfinite(o.pose.y) || !std::isfinite(o.pose.yaw) ||
        !std::isfinite(o.vx) || !std::isfinite(o.vy)) {
      throw InvalidArgument("object pose and velocity must be finite");
    }
  }
}

Scene generate_scene(const SceneSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> centred(-0.5, 0.5);

  Scene scene;
  scene.frames.reserve(static_cast<std::size_t>(spec.duration_frames));
  scene.truth.reserve(static_cast<std::size_t>(spec.duration_frames));
  for (int f = 0; f < spec.duration_frames; ++f) {
    const double t = f / spec.frame_rate;
    Frame frame{static_cast<std::uint32_t>(f), t, {}};
    FrameTruth truth;

    for (std::size_t id = 0; id < spec.objects.size(); ++id) {
      const SceneObject& o = spec.objects[id];
      const Pose2 pose = pose_at(o, t);
      truth.object_poses.push_back(pose);
      const auto faces = box_faces(object_template(o.cls));
      const Local sensor = to_local(0.0, 0.0, spec.sensor_height, pose);
      // Foreshortened area: faces seen edge-on get almost no returns.
      std::array<double, 5> weight{};
      for (std::size_t k = 0; k < faces.size(); ++k) {
        weight[k] = faces[k].area * std::max(0.0, facing(faces[k], sensor));
      }
      if (std::all_of(weight.begin(), weight.end(), [](double w) { return w == 0.0; })) continue;
      std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
      // A static object is hit at the same surface spots every frame.
      const bool moving = o.vx != 0.0 || o.vy != 0.0;
      std::mt19937_64 surface_rng(spec.seed ^ (0x2545f4914f6cdd1dULL * (id + 1)) ^
                                  (moving ? 0xbf58476d1ce4e5b9ULL * (static_cast<std::uint64_t>(f) + 1) : 0));
      for (int n = 0; n < o.points_per_frame; ++n) {
        const Face& face = faces[pick(surface_rng)];
        const double u = centred(surface_rng), v = centred(surface_rng);
        frame.cloud.push_back(jitter(to_world(on_face(face, u, v), pose), spec.noise_sigma, rng));
        truth.point_labels.push_back(static_cast<std::int32_t>(id));
      }
    }

    // A fixed sensor hits the ground at the same spots every frame.
    std::mt19937_64 ground_rng(spec.seed ^ 0xd1b54a32d192ed03ULL);
    for (int n = 0; n < spec.ground_points; ++n) {
      const double r = spec.ground_radius * std::sqrt(unit(ground_rng));
      const double a = kTwoPi * unit(ground_rng);
      const Point3 p{static_cast<float>(r * std::cos(a)), static_cast<float>(r * std::sin(a)), 0.0f};
      frame.cloud.push_back(jitter(p, spec.noise_sigma, rng));
      truth.point_labels.push_back(kGroundLabel);
    }

    if (spec.clutter_rate > 0.0) {
      const int blobs = std::poisson_distribution<int>(spec.clutter_rate)(rng);
      std::uniform_int_distribution<int> count(spec.clutter_min_points, spec.clutter_max_points);
      std::normal_distribution<double> spread(0.0, spec.clutter_spread);
      for (int b = 0; b < blobs; ++b) {
        const double r = 0.8 * spec.ground_radius * std::sqrt(unit(rng));
        const double a = kTwoPi * unit(rng);
        const double cx = r * std::cos(a), cy = r * std::sin(a), cz = 0.5 + 1.5 * unit(rng);
        const int n = count(rng);
        for (int k = 0; k < n; ++k) {
          frame.cloud.push_back({static_cast<float>(cx + spread(rng)), static_cast<float>(cy + spread(rng)),
                                 static_cast<float>(cz + spread(rng))});
          truth.point_labels.push_back(kClutterLabel);
        }
      }
    }

    scene.frames.push_back(std::move(frame));
    scene.truth.push_back(std::move(truth));
  }
  return scene;
}

Scene remove_ground(const Scene& scene, double height) {
  if (!std::isfinite(height)) throw InvalidArgument("ground filter height must be finite");
  Scene out;
  out.frames.reserve(scene.frames.size());
  out.truth.reserve(scene.truth.size());
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    const Frame& in = scene.frames[f];
    const FrameTruth& truth = scene.truth.at(f);
    Frame frame{in.index, in.timestamp, {}};
    FrameTruth kept{truth.object_poses, {}};
    for (std::size_t i = 0; i < in.cloud.size(); ++i) {
      if (!(in.cloud[i].z > height)) continue;
      frame.cloud.push_back(in.cloud[i]);
      kept.point_labels.push_back(truth.point_labels.at(i));
    }
    out.frames.push_back(std::move(frame));
    out.truth.push_back(std::move(kept));
  }
  return out;
}

bool inside_box(const Point3& p, ObjectClass cls, const Pose2& pose, double margin) {
  const auto& t = object_template(cls);
  const Local q = to_local(p.x, p.y, p.z, pose);
  return std::abs(q.x) <= 0.5 * t.length + margin && std::abs(q.y) <= 0.5 * t.width + margin &&
         q.z >= -margin && q.z <= t.height + margin;
}

Injection inject(const Frame& frame, const AttackSpec& attack, std::uint64_t seed) {
  const int budget = attack.kind == AttackKind::kDense ? kDenseBudget : kSparseBudget;
  if (attack.point_count < 0 || attack.point_count > budget) {
    throw InvalidArgument(std::string(to_string(attack.kind)) + " injection allows 0.." + std::to_string(budget) +
                          " points, got " + std::to_string(attack.point_count));
  }
  if (frame.index != attack.target_frame) {
    throw InvalidArgument("injection targets frame " + std::to_string(attack.target_frame) + ", got frame " +
                          std::to_string(frame.index));
  }
  if (!std::isfinite(attack.placement.x) || !std::isfinite(attack.placement.y) ||
      !std::isfinite(attack.placement.yaw)) {
    throw InvalidArgument("injection placement must be finite");
  }

  Injection out{frame, {}};
  if (attack.point_count == 0) return out;

  const ObjectTemplate& t = object_template(attack.cls);
  const auto faces = box_faces(t);
  // Only the horizontal bearing matters for picking a side face.
  const Local sensor = to_local(0.0, 0.0, 0.5 * (t.clearance + t.height), attack.placement);
  const Face& face = frontal_face(faces, sensor);
  const double face_width = std::sqrt(face.a.x * face.a.x + face.a.y * face.a.y);
  const double face_height = t.height - t.clearance;

  double u_half = 0.5, v_lo = -0.5, v_hi = 0.5;
  if (attack.kind == AttackKind::kDense) {
    u_half = 0.5 * std::min(face_width, kDenseWindow) / face_width;
  } else {
    v_lo = (kSparseBandLow - t.clearance) / face_height - 0.5;
    v_hi = (kSparseBandHigh - t.clearance) / face_height - 0.5;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-u_half, u_half);
  std::uniform_real_distribution<double> v(v_lo, v_hi);
  out.frame.cloud.reserve(frame.cloud.size() + static_cast<std::size_t>(attack.point_count));
  for (int n = 0; n < attack.point_count; ++n) {
    // Sparse returns land at a fixed azimuth step, like one scan line.
    const double a = attack.kind == AttackKind::kSparse ? (n + 0.5) / attack.point_count - 0.5 : u(rng);
    const double b = v(rng);
    out.injected_indices.push_back(out.frame.cloud.size());
    out.frame.cloud.push_back(to_world(on_face(face, a, b), attack.placement));
  }
  return out;
}

void validate(const ScenarioOptions& options) {
  if (options.min_objects < 0 || options.max_objects < options.min_objects) {
    throw InvalidArgument("object count range is empty");
  }
  if (!(options.moving_fraction >= 0.0 && options.moving_fraction <= 1.0)) {
    throw InvalidArgument("moving fraction must lie in [0, 1]");
  }
}

SceneSpec random_scene_spec(std::uint64_t seed, const ScenarioOptions& options) {
  validate(options);
  SceneSpec spec;
  spec.seed = seed;
  spec.duration_frames = options.duration_frames;
  spec.clutter_rate = options.clutter_rate;
  spec.noise_sigma = options.noise_sigma;
  spec.ground_points = options.ground_points;

  // The layout stream is separate from the sampling stream seeded by spec.seed.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int count = std::uniform_int_distribution<int>(options.min_objects, options.max_objects)(rng);
  const double duration = (options.duration_frames - 1) / spec.frame_rate;

  for (int n = 0; n < count; ++n) {
    const double roll = unit(rng);
    SceneObject o;
    double top_speed = 5.0;
    if (roll < 0.5) {
      o.cls = ObjectClass::kCar;
      o.points_per_frame = 250;
    } else if (roll < 0.75) {
      o.cls = ObjectClass::kCyclist;
      o.points_per_frame = 120;
      top_speed = 3.0;
    } else {
      o.cls = ObjectClass::kPedestrian;
      o.points_per_frame = 100;
      top_speed = 1.5;
    }
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double r = 6.0 + 14.0 * unit(rng);
      const double bearing = kTwoPi * unit(rng);
      o.pose = {r * std::cos(bearing), r * std::sin(bearing), kTwoPi * unit(rng)};
      const double speed = unit(rng) < options.moving_fraction ? top_speed * (0.2 + 0.8 * unit(rng)) : 0.0;
      o.vx = speed * std::cos(o.pose.yaw);
      o.vy = speed * std::sin(o.pose.yaw);

      bool clear = true;
      for (int f = 0; f < options.duration_frames && clear; ++f) {
        const double t = std::min(duration, f / spec.frame_rate);
        const Pose2 p = pose_at(o, t);
        if (std::hypot(p.x, p.y) < 4.0 + half_diagonal(o.cls)) clear = false;
        for (const auto& other : spec.objects) {
          const Pose2 q = pose_at(other, t);
          if (std::hypot(p.x - q.x, p.y - q.y) < half_diagonal(o.cls) + half_diagonal(other.cls) + 1.0) {
            clear = false;
          }
        }
      }
      if (clear) {
        spec.objects.push_back(o);
        break;
      }
    }
  }
  return spec;
}

Pose2 choose_attack_placement(const Scene& scene, AttackKind kind, ObjectClass cls, std::mt19937_64& rng,
                              double clearance) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double r = 6.0 + 12.0 * unit(rng);
    const double bearing = kTwoPi * unit(rng);
    Pose2 pose{r * std::cos(bearing), r * std::sin(bearing), kTwoPi * unit(rng)};
    if (kind == AttackKind::kSparse) pose.yaw = bearing + 0.5 * std::numbers::pi;

    bool clear = r >= 4.0 + half_diagonal(cls);
    for (std::size_t f = 0; f < scene.truth.size() && clear; ++f) {
      const auto& poses = scene.truth[f].object_poses;
      for (std::size_t id = 0; id < poses.size() && clear; ++id) {
        // Object classes are not in the truth; the car diagonal bounds every template.
        const double gap = std::hypot(pose.x - poses[id].x, pose.y - poses[id].y) - half_diagonal(cls) -
                           half_diagonal(ObjectClass::kCar);
        if (gap < clearance) clear = false;
      }
    }
    if (clear) return pose;
  }
  throw InvalidArgument("no free placement found for the attack");
}

Pose2 attached_placement(const Scene& scene, std::size_t object_id, std::size_t frame, ObjectClass cls,
                         double gap) {
  if (frame >= scene.truth.size()) throw InvalidArgument("attached_placement: frame out of range");
  const auto& poses = scene.truth[frame].object_poses;
  if (object_id >= poses.size()) throw InvalidArgument("attached_placement: object out of range");
  const Pose2& host = poses[object_id];
  // Host class is unknown here; a car host is assumed, matching the failure case.
  const double offset = 0.5 * object_template(ObjectClass::kCar).length + gap + 0.5 * object_template(cls).length;
  return {host.x + offset * std::cos(host.yaw), host.y + offset * std::sin(host.yaw), host.yaw};
}

std::string ground_truth_json(const SceneSpec& spec, const Scene& scene, const std::optional<AttackSpec>& attack,
                              const std::vector<std::size_t>& injected_indices) {
  nlohmann::ordered_json j;
  j["seed"] = spec.seed;
  j["frame_rate"] = spec.frame_rate;
  j["noise_sigma"] = spec.noise_sigma;
  nlohmann::ordered_json objects = nlohmann::ordered_json::array();
  for (std::size_t id = 0; id < spec.objects.size(); ++id) {
    const auto& o = spec.objects[id];
    objects.push_back({{"id", id},
                       {"class", to_string(o.cls)},
                       {"velocity", {o.vx, o.vy, 0.0}},
                       {"points_per_frame", o.points_per_frame}});
  }
  j["objects"] = std::move(objects);
  nlohmann::ordered_json frames = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    nlohmann::ordered_json poses = nlohmann::ordered_json::array();
    for (std::size_t id = 0; id < scene.truth[f].object_poses.size(); ++id) {
      const auto& p = scene.truth[f].object_poses[id];
      poses.push_back({{"id", id}, {"x", p.x}, {"y", p.y}, {"yaw", p.yaw}});
    }
    frames.push_back({{"index", scene.frames[f].index},
                      {"timestamp", scene.frames[f].timestamp},
                      {"poses", std::move(poses)},
                      {"point_labels", scene.truth[f].point_labels}});
  }
  j["frames"] = std::move(frames);
  if (attack) {
    j["attack"] = {{"kind", to_string(attack->kind)},
                   {"class", to_string(attack->cls)},
                   {"label", attack_label(attack->kind, attack->cls)},
                   {"point_count", attack->point_count},
                   {"placement", {{"x", attack->placement.x}, {"y", attack->placement.y}, {"yaw", attack->placement.yaw}}},
                   {"target_frame", attack->target_frame},
                   {"injected_indices", injected_indices}};
  } else {
    j["attack"] = nullptr;
  }
  return j.dump(2);
}

}  // namespace tempo_guard
