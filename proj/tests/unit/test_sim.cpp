#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "motionnet/geometry.hpp"
#include "motionnet/nn/binary_io.hpp"
#include "motionnet/sim/clip.hpp"
#include "motionnet/sim/clip_io.hpp"
#include "motionnet/sim/labels.hpp"
#include "motionnet/sim/lidar.hpp"
#include "motionnet/sim/scenario.hpp"

using namespace motionnet;
using namespace motionnet::sim;

namespace {

// Distance from a point to an oriented rectangle (0 inside).
double distance_to_box(double px, double py, const BoxPose& b, const BoxSize& s) {
  const double dx = px - b.x, dy = py - b.y;
  const double u = std::cos(b.yaw) * dx + std::sin(b.yaw) * dy;
  const double v = -std::sin(b.yaw) * dx + std::cos(b.yaw) * dy;
  const double ou = std::max(0.0, std::abs(u) - s.length / 2), ov = std::max(0.0, std::abs(v) - s.width / 2);
  return std::hypot(ou, ov);
}

BoxTrack single_track(BoxPose current, BoxPose future, BoxSize size = {3.0, 3.0, 1.5}) {
  BoxTrack t;
  t.id = 1;
  t.size = size;
  t.current = current;
  t.future = {future};
  return t;
}

}  // namespace

TEST(Geometry, RigidInverseAndYaw) {
  const auto p = geometry::planar_pose(1.0, -2.0, 0.5, 0.7);
  EXPECT_TRUE(geometry::is_rigid(p));
  EXPECT_TRUE((p * geometry::rigid_inverse(p)).isApprox(geometry::Mat4::Identity(), 1e-12));
  EXPECT_NEAR(geometry::yaw_of(p), 0.7, 1e-12);
  EXPECT_NEAR(geometry::wrap_angle(3 * std::numbers::pi), std::numbers::pi, 1e-12);
  geometry::Mat4 bad = p;
  bad(0, 0) *= 1.01;
  EXPECT_FALSE(geometry::is_rigid(bad));
}

TEST(Trajectory, ProfilesFollowClosedForms) {
  Trajectory straight{MotionProfile::straight, {1, 2, 0, std::numbers::pi / 2}, 4.0};
  const auto p = straight.pose_at(0.5);
  EXPECT_NEAR(p.x, 1.0, 1e-12);
  EXPECT_NEAR(p.y, 4.0, 1e-12);

  Trajectory turn{MotionProfile::constant_turn, {0, 0, 0, 0}, 2.0, 0.5};
  const double t = 1.3;
  const auto q = turn.pose_at(t);
  EXPECT_NEAR(q.yaw, 0.65, 1e-12);
  EXPECT_NEAR(std::hypot(q.x, q.y - 4.0), 4.0, 1e-12);  // circle of radius v / w about (0, 4)

  Trajectory still{MotionProfile::stationary, {3, 3, 0, 1}};
  EXPECT_EQ(still.pose_at(-2.0).x, 3.0);

  Trajectory sg{MotionProfile::stop_and_go, {0, 0, 0, 0}, 3.0, 0.0, 4.0, 0.3};
  double last = sg.pose_at(-1.0).x;
  for (double s = -0.9; s < 3.0; s += 0.1) {
    const double x = sg.pose_at(s).x;
    EXPECT_GE(x, last - 1e-12);  // never reverses
    last = x;
  }
}

TEST(Scenario, DeterministicAndDisjoint) {
  ScenarioConfig cfg;
  cfg.categories[0].min_count = 3;
  cfg.categories[0].max_count = 4;
  const Scenario a = generate_scenario(cfg, 7), b = generate_scenario(cfg, 7), c = generate_scenario(cfg, 8);
  ASSERT_EQ(a.actors.size(), b.actors.size());
  for (std::size_t i = 0; i < a.actors.size(); ++i) {
    EXPECT_EQ(a.actors[i].trajectory.origin.x, b.actors[i].trajectory.origin.x);
    EXPECT_GE(a.actors[i].id, 1);
  }
  bool differs = a.actors.size() != c.actors.size();
  for (std::size_t i = 0; !differs && i < a.actors.size(); ++i)
    differs = a.actors[i].trajectory.origin.x != c.actors[i].trajectory.origin.x;
  EXPECT_TRUE(differs);
  for (std::size_t i = 0; i < a.actors.size(); ++i)
    for (std::size_t j = i + 1; j < a.actors.size(); ++j)
      EXPECT_FALSE(boxes_overlap(a.actors[i].trajectory.origin, a.actors[i].size, a.actors[j].trajectory.origin,
                                 a.actors[j].size));
}

TEST(Scenario, ImpossiblePlacementThrows) {
  ScenarioConfig cfg;
  cfg.region_half_extent = 1.0;
  cfg.categories[0].min_count = 20;
  cfg.categories[0].max_count = 20;
  cfg.max_placement_retries = 20;
  EXPECT_THROW(generate_scenario(cfg, 1), std::runtime_error);
}

TEST(BoxOverlap, SeparatingAxis) {
  const BoxSize s{2, 1, 1};
  EXPECT_TRUE(boxes_overlap({0, 0, 0, 0}, s, {1.5, 0, 0, 0}, s));
  EXPECT_FALSE(boxes_overlap({0, 0, 0, 0}, s, {2.5, 0, 0, 0}, s));
  EXPECT_FALSE(boxes_overlap({0, 0, 0, 0}, s, {0, 1.2, 0, 0}, s));
  EXPECT_TRUE(boxes_overlap({0, 0, 0, 0}, s, {0, 1.2, 0, std::numbers::pi / 2}, s));
}

TEST(Lidar, BoxSurfacePointsLieOnTheBox) {
  LidarConfig cfg;
  cfg.noise_sigma = 0.0;
  const BoxPose pose{5.0, 1.0, -1.0, 0.4};
  const BoxSize size{4.0, 2.0, 1.6};
  const auto pts = sample_box_surface(pose, size, cfg, 3);
  ASSERT_GT(pts.size(), 20u);
  for (const auto& p : pts) {
    ASSERT_TRUE(p.allFinite());
    EXPECT_LT(distance_to_box(p.x(), p.y(), pose, {size.length + 1e-9, size.width + 1e-9, size.height}), 1e-9);
    EXPECT_GE(p.z(), pose.z - size.height / 2 - 1e-9);
    EXPECT_LE(p.z(), pose.z + size.height / 2 + 1e-9);
  }
  EXPECT_EQ(sample_box_surface(pose, size, cfg, 3), pts);
}

TEST(Clip, TimestampsPosesAndQuantisation) {
  ScenarioConfig cfg;
  cfg.ego_speed_min = cfg.ego_speed_max = 6.0;
  const Scenario sc = generate_scenario(cfg, 4);
  const Clip clip = make_clip(sc, 0.0, ClipSpec{}, LidarConfig{}, 9);
  ASSERT_EQ(clip.frames.size(), 9u);
  EXPECT_EQ(clip.current_index(), 4u);
  EXPECT_EQ(clip.future_frame_count(), 4u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(clip.frames[i].timestamp, -0.2 * static_cast<double>(4 - i), 1e-7);
    EXPECT_FALSE(clip.frames[i].points.empty());
  }
  for (std::size_t i = 5; i < 9; ++i) {
    EXPECT_NEAR(clip.frames[i].timestamp, 0.25 * static_cast<double>(i - 4), 1e-7);
    EXPECT_TRUE(clip.frames[i].points.empty());
  }
  for (const auto& f : clip.frames) EXPECT_TRUE(geometry::is_rigid(f.ego_pose, 1e-6));
  for (const auto& p : clip.frames[4].points)
    for (int k = 0; k < 3; ++k) EXPECT_EQ(p[k], static_cast<double>(static_cast<float>(p[k])));
}

TEST(Clip, RelativeEgoTransformMapsCurrentToShifted) {
  ScenarioConfig cfg;
  cfg.ego_speed_min = cfg.ego_speed_max = 10.0;
  Scenario sc = generate_scenario(cfg, 5);
  sc.ego = Trajectory{MotionProfile::straight, {0, 0, 0, 0}, 10.0};
  const ClipPair pair = make_clip_pair(sc, 0.0, ClipSpec{}, LidarConfig{}, 1, 0.05);
  // A static point at x = 1 in the current frame sits 0.5 m closer in the shifted frame.
  const geometry::Vec3 p = geometry::apply(pair.relative_ego, geometry::Vec3(1.0, 0.0, 0.0));
  EXPECT_NEAR(p.x(), 0.5, 1e-6);
  EXPECT_NEAR(pair.relative_ego(0, 3), -0.5, 1e-6);
  EXPECT_TRUE(pair.relative_ego.isApprox(relative_ego_transform(pair.current, pair.shifted), 1e-9));
}

TEST(ClipIo, RoundTripIsBitExact) {
  const Scenario sc = generate_scenario(ScenarioConfig{}, 6);
  const Clip clip = make_clip(sc, 0.0, ClipSpec{}, LidarConfig{}, 2);
  const auto bytes = encode_clip(clip);
  ASSERT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "MNCLIP01");
  const Clip back = decode_clip(bytes);
  EXPECT_EQ(encode_clip(back), bytes);
  ASSERT_EQ(back.frames.size(), clip.frames.size());
  EXPECT_EQ(back.frames[4].points, clip.frames[4].points);
  EXPECT_EQ(io::fnv1a64(encode_clip(back)), io::fnv1a64(bytes));
}

TEST(ClipIo, RejectsMalformedFiles) {
  const Scenario sc = generate_scenario(ScenarioConfig{}, 6);
  const auto bytes = encode_clip(make_clip(sc, 0.0, ClipSpec{}, LidarConfig{}, 2));
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  EXPECT_THROW(decode_clip(truncated), io::FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_clip(trailing), io::FormatError);
  auto magic = bytes;
  magic[3] = 'X';
  EXPECT_THROW(decode_clip(magic), io::FormatError);
  auto nan_dt = bytes;
  const float nan = std::nanf("");
  std::memcpy(nan_dt.data() + 16, &nan, 4);
  EXPECT_THROW(decode_clip(nan_dt), io::FormatError);
}

TEST(Labels, ClosedFormCases) {
  bev::GridSpec grid;
  // Row 36, column 32 has centre (1.125, 0.125); the box centre sits at (0.125, 0.125).
  const BoxPose c{0.125, 0.125, 0.0, 0.0};
  const std::size_t cell = 36 * grid.cols() + 32;

  const auto pure_shift = derive_cell_gt(std::vector{single_track(c, {0.625, 0.125, 0, 0})}, 1, 0.25, grid, {});
  EXPECT_NEAR(pure_shift.motion_at(0, cell, 0), 0.5, 1e-12);
  EXPECT_NEAR(pure_shift.motion_at(0, cell, 1), 0.0, 1e-12);

  const auto quarter_turn = derive_cell_gt(
      std::vector{single_track(c, {0.625, 0.125, 0, std::numbers::pi / 2})}, 1, 0.25, grid, {});
  EXPECT_NEAR(quarter_turn.motion_at(0, cell, 0), -0.5, 1e-12);
  EXPECT_NEAR(quarter_turn.motion_at(0, cell, 1), 1.0, 1e-12);
  EXPECT_EQ(quarter_turn.instance[cell], 1);
  EXPECT_EQ(quarter_turn.category[cell], static_cast<std::uint8_t>(Category::vehicle));
  EXPECT_EQ(quarter_turn.state[cell], static_cast<std::uint8_t>(MotionState::moving));

  const auto parked = derive_cell_gt(std::vector{single_track(c, c)}, 1, 0.25, grid, {});
  EXPECT_EQ(parked.motion_at(0, cell, 0), 0.0);
  EXPECT_EQ(parked.state[cell], static_cast<std::uint8_t>(MotionState::stationary));

  const std::size_t outside = 10 * grid.cols() + 10;
  EXPECT_EQ(quarter_turn.category[outside], 0);
  EXPECT_EQ(quarter_turn.motion_at(0, outside, 0), 0.0);
}

TEST(Labels, EmptyCellsStayBackground) {
  bev::GridSpec grid;
  std::vector<std::uint8_t> mask(grid.cells(), 0);
  const auto g = derive_cell_gt(std::vector{single_track({0.125, 0.125, 0, 0}, {2, 0, 0, 0})}, 1, 0.25, grid, mask);
  for (std::size_t i = 0; i < grid.cells(); ++i) {
    EXPECT_EQ(g.category[i], 0);
    EXPECT_EQ(g.instance[i], 0);
  }
  EXPECT_THROW(derive_cell_gt(std::vector{single_track({0, 0, 0, 0}, {0, 0, 0, 0})}, 1, 0.25, grid,
                              std::vector<std::uint8_t>(5, 1)),
               std::invalid_argument);
}

TEST(Labels, HorizonMotionLandsInTheFutureBox) {
  bev::GridSpec grid;
  const double half_diag = 0.5 * std::hypot(grid.dx, grid.dy);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(-5, 5), yaw(-3, 3), dpos(-3, 3), dyaw(-1, 1), len(1, 5);
  for (int trial = 0; trial < 100; ++trial) {
    const BoxPose cur{pos(rng), pos(rng), 0, yaw(rng)};
    const BoxPose fut{cur.x + dpos(rng), cur.y + dpos(rng), 0, cur.yaw + dyaw(rng)};
    const BoxSize size{len(rng), len(rng), 1.5};
    const auto g = derive_cell_gt(std::vector{single_track(cur, fut, size)}, 1, 1.0, grid, {});
    for (std::size_t r = 0; r < g.rows; ++r)
      for (std::size_t c = 0; c < g.cols; ++c) {
        const std::size_t cell = r * g.cols + c;
        if (g.instance[cell] != 1) continue;
        const double x = grid.cell_center_x(r) + g.motion_at(0, cell, 0);
        const double y = grid.cell_center_y(c) + g.motion_at(0, cell, 1);
        EXPECT_LE(distance_to_box(x, y, fut, size), half_diag);
      }
  }
}

TEST(Labels, RelativeMotionIsTheStepIncrement) {
  LabelGrids g;
  g.rows = 1;
  g.cols = 1;
  g.steps = 3;
  g.motion = {1, 2, 3, 5, 6, 9};
  EXPECT_EQ(g.relative_motion(), (std::vector<double>{1, 2, 2, 3, 3, 4}));
}

TEST(Labels, ClipAndScenarioLabelsAgree) {
  ScenarioConfig cfg;
  const Scenario sc = generate_scenario(cfg, 12);
  const Clip clip = make_clip(sc, 0.0, ClipSpec{}, LidarConfig{}, 3);
  bev::GridSpec grid;
  const auto a = derive_cell_gt(clip, grid, {});
  const auto b = derive_cell_gt(sc, 0.0, 4, 0.25, grid, {});
  EXPECT_EQ(a.instance, b.instance);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.motion.size(); ++i) worst = std::max(worst, std::abs(a.motion[i] - b.motion[i]));
  EXPECT_LT(worst, 1e-4);  // clip poses are stored in single precision
}
