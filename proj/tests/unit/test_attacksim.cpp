// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>
#include <random>

#include "tempo_guard/attacksim.hpp"
#include "tempo_guard/errors.hpp"
#include "tempo_guard/kd_tree.hpp"

using namespace tempo_guard;

namespace {

SceneSpec one_car(double vx, double vy, double sigma) {
  SceneSpec spec;
  spec.seed = 42;
  spec.duration_frames = 3;
  spec.noise_sigma = sigma;
  spec.objects.push_back({ObjectClass::kCar, {10, 5, 0.3}, vx, vy, 250});
  return spec;
}

PointCloud object_points(const Scene& s, std::size_t f, std::int32_t id) {
  PointCloud c;
  for (std::size_t i = 0; i < s.frames[f].cloud.size(); ++i) {
    if (s.truth[f].point_labels[i] == id) c.push_back(s.frames[f].cloud[i]);
  }
  return c;
}

}  // namespace

TEST(Templates, Dimensions) {
  const auto& car = object_template(ObjectClass::kCar);
  EXPECT_EQ(std::tie(car.length, car.width, car.height), std::make_tuple(4.5, 1.8, 1.5));
  const auto& cyc = object_template(ObjectClass::kCyclist);
  EXPECT_EQ(std::tie(cyc.length, cyc.width, cyc.height), std::make_tuple(1.8, 0.6, 1.7));
  const auto& ped = object_template(ObjectClass::kPedestrian);
  EXPECT_EQ(std::tie(ped.length, ped.width, ped.height), std::make_tuple(0.6, 0.6, 1.7));
  EXPECT_EQ(object_class_from_string("CYCLIST"), ObjectClass::kCyclist);
  EXPECT_THROW(object_class_from_string("TRUCK"), InvalidArgument);
  EXPECT_EQ(attack_label(AttackKind::kDense, ObjectClass::kPedestrian), "D.PED");
  EXPECT_EQ(attack_label(AttackKind::kDense, ObjectClass::kCyclist), "D.CYL");
  EXPECT_EQ(attack_label(AttackKind::kDense, ObjectClass::kCar), "D.CAR");
  EXPECT_EQ(attack_label(AttackKind::kSparse, ObjectClass::kCar), "S.CAR");
}

TEST(GenerateScene, StaticCarWithoutNoiseRepeats) {
  const Scene s = generate_scene(one_car(0, 0, 0.0));
  ASSERT_EQ(s.frames.size(), 3u);
  EXPECT_EQ(s.frames[0].cloud, s.frames[1].cloud);
  EXPECT_EQ(s.frames[1].cloud, s.frames[2].cloud);
  EXPECT_DOUBLE_EQ(s.frames[1].timestamp, 0.1);
}

TEST(GenerateScene, SeededDeterminism) {
  SceneSpec spec = random_scene_spec(7, ScenarioOptions{});
  spec.clutter_rate = 2.0;
  const Scene a = generate_scene(spec);
  const Scene b = generate_scene(spec);
  for (std::size_t f = 0; f < a.frames.size(); ++f) {
    EXPECT_EQ(a.frames[f], b.frames[f]);
    EXPECT_EQ(a.truth[f].point_labels, b.truth[f].point_labels);
  }
  spec.seed = 8;
  EXPECT_NE(generate_scene(spec).frames[0].cloud, a.frames[0].cloud);
}

TEST(GenerateScene, VelocityMovesCentroid) {
  SceneSpec spec = one_car(2.0, 0.0, 0.02);
  spec.duration_frames = 11;
  spec.objects[0].points_per_frame = 2000;
  spec.objects[0].pose.yaw = 0.0;
  const Scene s = generate_scene(spec);
  const Point3 c0 = object_points(s, 0, 0).centroid();
  const Point3 c10 = object_points(s, 10, 0).centroid();
  EXPECT_NEAR((c10.x - c0.x) / 10.0, 0.2, 0.02);
  EXPECT_NEAR((c10.y - c0.y) / 10.0, 0.0, 0.02);
  EXPECT_NEAR((c10.z - c0.z) / 10.0, 0.0, 0.01);
  EXPECT_NEAR(s.truth[10].object_poses[0].x - s.truth[0].object_poses[0].x, 2.0, 1e-9);
}

TEST(GenerateScene, ObjectPointsLieOnTheirBox) {
  const Scene s = generate_scene(one_car(1.0, 0.5, 0.0));
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    for (std::size_t i = 0; i < s.frames[f].cloud.size(); ++i) {
      if (s.truth[f].point_labels[i] != 0) continue;
      EXPECT_TRUE(inside_box(s.frames[f].cloud[i], ObjectClass::kCar, s.truth[f].object_poses[0]));
    }
  }
}

TEST(GenerateScene, RejectsInvalidSpec) {
  SceneSpec spec = one_car(0, 0, 0);
  spec.duration_frames = 1;
  EXPECT_THROW(generate_scene(spec), InvalidArgument);
  spec = one_car(0, 0, -1.0);
  EXPECT_THROW(generate_scene(spec), InvalidArgument);
  spec = one_car(0, 0, 0);
  spec.objects[0].points_per_frame = 0;
  EXPECT_THROW(generate_scene(spec), InvalidArgument);
}

TEST(RemoveGround, DropsLowPointsAndKeepsLabelsAligned) {
  SceneSpec spec = one_car(0, 0, 0.02);
  const Scene s = generate_scene(spec);
  const Scene g = remove_ground(s, 0.15);
  for (std::size_t f = 0; f < g.frames.size(); ++f) {
    ASSERT_EQ(g.frames[f].cloud.size(), g.truth[f].point_labels.size());
    for (std::size_t i = 0; i < g.frames[f].cloud.size(); ++i) {
      EXPECT_GT(g.frames[f].cloud[i].z, 0.15f);
      EXPECT_NE(g.truth[f].point_labels[i], kGroundLabel);
    }
    EXPECT_EQ(g.frames[f].cloud.size(), object_points(s, f, 0).size());
  }
}

TEST(Inject, ZeroPointsLeavesFrameUnchanged) {
  const Scene s = generate_scene(one_car(0, 0, 0.02));
  AttackSpec a;
  a.point_count = 0;
  a.target_frame = 2;
  const Injection inj = inject(s.frames[2], a, 1);
  EXPECT_EQ(inj.frame, s.frames[2]);
  EXPECT_TRUE(inj.injected_indices.empty());
}

TEST(Inject, DensePedestrianIsAdditiveAndContained) {
  const Scene s = generate_scene(one_car(0, 0, 0.02));
  AttackSpec a;
  a.cls = ObjectClass::kPedestrian;
  a.point_count = 200;
  a.placement = {-6, 3, 1.0};
  a.target_frame = 2;
  const Frame& f = s.frames[2];
  const Injection inj = inject(f, a, 3);
  ASSERT_EQ(inj.frame.cloud.size(), f.cloud.size() + 200);
  for (std::size_t i = 0; i < f.cloud.size(); ++i) EXPECT_EQ(inj.frame.cloud[i], f.cloud[i]);
  ASSERT_EQ(inj.injected_indices.size(), 200u);
  for (std::size_t k = 0; k < 200; ++k) {
    EXPECT_EQ(inj.injected_indices[k], f.cloud.size() + k);
    EXPECT_TRUE(inside_box(inj.frame.cloud[inj.injected_indices[k]], a.cls, a.placement));
  }
}

TEST(Inject, SparseCarIsAThinBand) {
  AttackSpec a;
  a.kind = AttackKind::kSparse;
  a.cls = ObjectClass::kCar;
  a.point_count = 64;
  a.placement = {0, 12, 0.0};
  const Injection inj = inject(Frame{}, a, 5);
  ASSERT_EQ(inj.frame.cloud.size(), 64u);
  for (const auto& p : inj.frame.cloud) {
    EXPECT_TRUE(inside_box(p, a.cls, a.placement));
    EXPECT_GE(p.z, kSparseBandLow - 1e-5);
    EXPECT_LE(p.z, kSparseBandHigh + 1e-5);
    EXPECT_NEAR(p.y, 12 - 0.9, 1e-4);  // the long side facing the sensor
  }
}

TEST(Inject, BudgetAndFrameChecks) {
  AttackSpec a;
  a.point_count = 201;
  EXPECT_THROW(inject(Frame{}, a, 1), InvalidArgument);
  a.kind = AttackKind::kSparse;
  a.point_count = 65;
  EXPECT_THROW(inject(Frame{}, a, 1), InvalidArgument);
  a.point_count = -1;
  EXPECT_THROW(inject(Frame{}, a, 1), InvalidArgument);
  a.point_count = 64;
  a.target_frame = 3;
  EXPECT_THROW(inject(Frame{}, a, 1), InvalidArgument);
  a.target_frame = 0;
  a.placement.x = std::nan("");
  EXPECT_THROW(inject(Frame{}, a, 1), InvalidArgument);
}

TEST(Inject, AttachedSparseCarTouchesTheRealCar) {
  SceneSpec spec = one_car(0, 0, 0.02);
  spec.objects[0].pose = {3, 12, 0.0};
  const Scene s = generate_scene(spec);
  AttackSpec a;
  a.kind = AttackKind::kSparse;
  a.cls = ObjectClass::kCar;
  a.point_count = 64;
  a.placement = attached_placement(s, 0, 2, ObjectClass::kCar, 0.3);
  a.target_frame = 2;
  EXPECT_NEAR(std::hypot(a.placement.x - 3, a.placement.y - 12), 4.5 + 0.3, 1e-9);
  const Injection inj = inject(s.frames[2], a, 9);
  const PointCloud real = object_points(s, 2, 0);
  const KdTree tree(real);
  double nearest = INFINITY;
  for (auto i : inj.injected_indices) {
    nearest = std::min(nearest, std::sqrt(tree.nearest(inj.frame.cloud[i]).squared_distance));
  }
  EXPECT_LT(nearest, 0.5);
}

TEST(RandomScene, ObjectsKeepApartAndPlacementHasClearance) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SceneSpec spec = random_scene_spec(seed, ScenarioOptions{});
    EXPECT_GE(spec.objects.size(), 3u);
    EXPECT_LE(spec.objects.size(), 6u);
    const Scene s = generate_scene(spec);
    std::mt19937_64 rng(seed);
    const Pose2 p = choose_attack_placement(s, AttackKind::kDense, ObjectClass::kPedestrian, rng);
    for (const auto& truth : s.truth) {
      for (std::size_t id = 0; id < truth.object_poses.size(); ++id) {
        const auto& q = truth.object_poses[id];
        const auto& t = object_template(spec.objects[id].cls);
        const double reach = 0.5 * std::hypot(t.length, t.width) + 0.5 * std::hypot(0.6, 0.6);
        EXPECT_GE(std::hypot(p.x - q.x, p.y - q.y) - reach, 3.0 - 1e-9);
      }
    }
  }
}

TEST(GroundTruth, JsonSidecar) {
  const Scene s = generate_scene(one_car(1, 0, 0.02));
  AttackSpec a;
  a.target_frame = 2;
  const auto j = nlohmann::json::parse(ground_truth_json(one_car(1, 0, 0.02), s, a, {7, 8}));
  EXPECT_EQ(j["seed"], 42);
  EXPECT_EQ(j["objects"][0]["class"], "CAR");
  EXPECT_EQ(j["frames"].size(), 3u);
  EXPECT_EQ(j["attack"]["label"], "D.PED");
  EXPECT_EQ(j["attack"]["injected_indices"][1], 8);
  const auto none = nlohmann::json::parse(ground_truth_json(one_car(1, 0, 0.02), s, std::nullopt, {}));
  EXPECT_TRUE(none["attack"].is_null());
}
