#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "support.hpp"
#include "vtformer/datahub/synthetic.hpp"
#include "vtformer/datahub/tracks.hpp"
#include "vtformer/datahub/windows.hpp"
#include "vtformer/errors.hpp"

using namespace vtformer;
using namespace vtformer::data;

namespace {

TrackTable parse(const std::string& text, SourceFormat format) {
  std::istringstream in(text);
  return parse_tracks(in, format, default_columns(format));
}

// One recording, `vehicles` vehicles present on frames [first, first + frames).
std::vector<TrackPoint> grid_tracks(std::int64_t vehicles, std::int64_t first, std::int64_t frames) {
  std::vector<TrackPoint> pts;
  for (std::int64_t v = 0; v < vehicles; ++v)
    for (std::int64_t f = first; f < first + frames; ++f)
      pts.push_back({0, v, f, static_cast<double>(f), static_cast<double>(v)});
  return pts;
}

}  // namespace

TEST(Tracks, NgsimFeetBecomeMeters) {
  const TrackTable t = parse(
      "Vehicle_ID,Frame_ID,Total_Frames,Local_X,Local_Y\n"
      "7,12,100,10.0,100.0\n"
      "7,11,100,10.0,90.0\n",
      SourceFormat::kNgsim);
  EXPECT_EQ(t.unit, Unit::kMeters);
  ASSERT_EQ(t.points.size(), 2u);
  EXPECT_EQ(t.points[0].frame, 11);
  EXPECT_DOUBLE_EQ(t.points[0].x, 10.0 * kFeetToMeters);
  EXPECT_DOUBLE_EQ(t.points[1].y, 100.0 * kFeetToMeters);
}

TEST(Tracks, WhitespaceSeparatedNgsim) {
  const TrackTable t = parse("Vehicle_ID Frame_ID Local_X Local_Y\n1 1 1.0 2.0\n1 2 1.5 2.5\n",
                             SourceFormat::kNgsim);
  EXPECT_EQ(t.points.size(), 2u);
}

TEST(Tracks, ChdStaysInPixels) {
  const TrackTable t = parse("track_id,frame,center_x,center_y\n3,0,640.5,360.25\n", SourceFormat::kChd);
  EXPECT_EQ(t.unit, Unit::kPixels);
  EXPECT_DOUBLE_EQ(t.points[0].x, 640.5);
}

TEST(Tracks, CanonicalRoundTrip) {
  TrackTable t{Unit::kMeters, {{0, 1, 0, 0.1, 1.0 / 3.0}, {2, 5, 9, -1e-300, 12345.678}}};
  std::ostringstream out;
  write_canonical_csv(out, t);
  const TrackTable back = parse(out.str(), SourceFormat::kCanonical);
  EXPECT_EQ(back.unit, Unit::kMeters);
  EXPECT_EQ(back.points, t.points);
}

TEST(Tracks, ErrorsCarryLineNumbers) {
  try {
    parse("Vehicle_ID,Frame_ID,Local_X,Local_Y\n1,1,1.0,2.0\n1,2,oops,2.0\n", SourceFormat::kNgsim);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse("Vehicle_ID,Frame_ID,Local_X\n1,1,1.0\n", SourceFormat::kNgsim), ParseError);
  EXPECT_THROW(parse("Vehicle_ID,Frame_ID,Local_X,Local_Y\n1,1,1,1\n1,1,2,2\n", SourceFormat::kNgsim),
               ParseError);
  EXPECT_THROW(parse("scene_id,vehicle_id,frame,x,y,unit\n0,1,1,1,1,meters\n0,1,2,1,1,pixels\n",
                     SourceFormat::kCanonical),
               ParseError);
  EXPECT_THROW(parse_unit("furlongs"), ParseError);
}

TEST(Downsample, TenToFiveKeepsEveryOtherFrame) {
  const auto pts = grid_tracks(2, 100, 10);
  const auto out = downsample(pts, 10, 5);
  ASSERT_EQ(out.size(), 10u);
  for (const auto& p : out) {
    // Original frames 100, 102, ... renumbered 100, 101, ...
    EXPECT_EQ(p.x, 100.0 + 2.0 * static_cast<double>(p.frame - 100));
  }
}

TEST(Downsample, PhaseIsSharedWithinRecording) {
  std::vector<TrackPoint> pts = grid_tracks(1, 0, 10);
  for (std::int64_t f = 3; f < 10; ++f) pts.push_back({0, 9, f, static_cast<double>(f), 9.0});
  const auto out = downsample(pts, 10, 5);
  for (const auto& p : out) EXPECT_EQ(static_cast<std::int64_t>(p.x) % 2, 0) << "vehicle " << p.vehicle_id;
}

TEST(Downsample, IdentityAndInvalidRates) {
  const auto pts = grid_tracks(2, 5, 4);
  EXPECT_EQ(downsample(pts, 5, 5), pts);
  EXPECT_THROW(downsample(pts, 10, 3), ConfigError);
}

TEST(Windows, ScanWithStride) {
  DatasetConfig cfg;
  cfg.t_oh = 3;
  cfg.t_ph = 2;
  cfg.stride = 2;
  const auto pts = grid_tracks(2, 0, 9);
  const auto windows = window_scenes(pts, cfg);
  // Starts 0, 2, 4; a start of 6 would need frames through 10.
  ASSERT_EQ(windows.size(), 3u);
  EXPECT_EQ(windows[1].t0, 2);
  EXPECT_EQ(windows[1].scene_id, "0/2");
  EXPECT_EQ(windows[1].vehicles.size(), 2u);
  EXPECT_EQ(windows[1].t_oh(), 3u);
  EXPECT_EQ(windows[1].t_ph(), 2u);
  EXPECT_EQ(windows[1].vehicles[0].observed(0, 0), 2.0);
  EXPECT_EQ(windows[1].vehicles[0].future(1, 0), 6.0);
}

TEST(Windows, VehiclesMustCoverTheWholeSpan) {
  DatasetConfig cfg;
  cfg.t_oh = 3;
  cfg.t_ph = 2;
  std::vector<TrackPoint> pts = grid_tracks(1, 0, 5);
  for (std::int64_t f = 1; f < 5; ++f) pts.push_back({0, 1, f, 0.0, 0.0});
  // Vehicle 1 has a gap at frame 2 and misses frame 0.
  pts.erase(std::remove_if(pts.begin(), pts.end(), [](const TrackPoint& p) { return p.vehicle_id == 1 && p.frame == 2; }),
            pts.end());
  const auto windows = window_scenes(pts, cfg);
  ASSERT_EQ(windows.size(), 1u);
  EXPECT_EQ(windows[0].vehicles.size(), 1u);
}

TEST(Windows, DefaultStrideIsPredictionHorizon) {
  DatasetConfig cfg;
  EXPECT_EQ(cfg.effective_stride(), 25);
  EXPECT_TRUE(cfg.canonical());
  cfg.t_oh = 7;
  EXPECT_FALSE(cfg.canonical());
}

TEST(Split, DeterministicDisjointAndComplete) {
  const SplitIndices a = split_indices(10, 0.8, 3);
  const SplitIndices b = split_indices(10, 0.8, 3);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.train.size(), 8u);
  EXPECT_EQ(a.eval.size(), 2u);
  std::set<std::size_t> all(a.train.begin(), a.train.end());
  all.insert(a.eval.begin(), a.eval.end());
  EXPECT_EQ(all.size(), 10u);
  EXPECT_THROW(split_indices(10, 1.0, 0), ConfigError);
  EXPECT_THROW(split_indices(10, 0.0, 0), ConfigError);
}

TEST(Synthetic, ClosedFormKinematics) {
  VehicleMotion m;
  m.kind = Scenario::kConstantAcceleration;
  m.x0 = 1;
  m.vx = 2;
  m.ax = 1;
  const KinematicState s = state_at(m, 3.0);
  EXPECT_DOUBLE_EQ(s.x, 1 + 2 * 3 + 0.5 * 9);
  EXPECT_DOUBLE_EQ(s.vx, 5.0);

  VehicleMotion c;
  c.kind = Scenario::kCurve;
  c.vx = 10;
  c.curve_radius = 100;
  // Quarter circle after pi/2 * R / v seconds ends at (R, R).
  const KinematicState q = state_at(c, M_PI / 2 * 100 / 10);
  EXPECT_NEAR(q.x, 100.0, 1e-9);
  EXPECT_NEAR(q.y, 100.0, 1e-9);
  EXPECT_NEAR(std::hypot(q.vx, q.vy), 10.0, 1e-9);

  VehicleMotion l;
  l.kind = Scenario::kLaneChange;
  l.vx = 20;
  l.lateral_offset = 3.7;
  l.maneuver_time = 4;
  l.maneuver_scale = 0.5;
  EXPECT_NEAR(state_at(l, 4).y, 3.7 / 2, 1e-12);
  EXPECT_NEAR(state_at(l, 60).y, 3.7, 1e-9);
}

TEST(Synthetic, ShapesAndDeterminism) {
  SyntheticConfig cfg;
  cfg.n_scenes = 10;
  cfg.vehicles_per_scene = 3;
  cfg.seed = 4;
  const auto a = generate_synthetic(cfg);
  const auto b = generate_synthetic(cfg);
  ASSERT_EQ(a.size(), 10u);
  for (std::size_t s = 0; s < a.size(); ++s) {
    EXPECT_EQ(a[s].vehicles.size(), 3u);
    EXPECT_EQ(a[s].t_oh(), 15u);
    EXPECT_EQ(a[s].t_ph(), 25u);
    EXPECT_NO_THROW(validate(a[s]));
    for (std::size_t v = 0; v < 3; ++v) EXPECT_EQ(a[s].vehicles[v].future, b[s].vehicles[v].future);
  }
}

TEST(Synthetic, ConstantVelocityHasConstantSteps) {
  SyntheticConfig cfg;
  cfg.n_scenes = 3;
  for (const auto& w : generate_synthetic(cfg)) {
    for (const auto& v : w.vehicles) {
      const double dx = v.observed(1, 0) - v.observed(0, 0);
      EXPECT_NEAR(v.future(24, 0) - v.future(23, 0), dx, 1e-9);
      EXPECT_GE(dx, cfg.speed_min / cfg.rate_hz - 1e-12);
      EXPECT_LE(dx, cfg.speed_max / cfg.rate_hz + 1e-12);
    }
  }
}

TEST(Synthetic, CarFollowingKeepsPositiveGaps) {
  SyntheticConfig cfg;
  cfg.scenario = Scenario::kCarFollowing;
  cfg.n_scenes = 20;
  cfg.vehicles_per_scene = 4;
  cfg.seed = 9;
  for (const auto& w : generate_synthetic(cfg)) {
    for (std::size_t k = 1; k < w.vehicles.size(); ++k) {
      const auto& lead = w.vehicles[k - 1];
      const auto& follow = w.vehicles[k];
      for (std::size_t i = 0; i < 15; ++i) EXPECT_GT(lead.observed(i, 0) - follow.observed(i, 0), 0.0);
      for (std::size_t i = 0; i < 25; ++i) EXPECT_GT(lead.future(i, 0) - follow.future(i, 0), 0.0);
    }
  }
}

TEST(Synthetic, UnknownScenario) {
  EXPECT_THROW(parse_scenario("teleport"), ConfigError);
  EXPECT_EQ(parse_scenario("lane_change"), Scenario::kLaneChange);
}

TEST(Synthetic, FlattenAndRewindow) {
  SyntheticConfig cfg;
  cfg.n_scenes = 4;
  const auto windows = generate_synthetic(cfg);
  const TrackTable table = tracks_from_windows(windows);
  DatasetConfig dc;
  const auto again = window_scenes(table.points, dc, table.unit);
  ASSERT_EQ(again.size(), windows.size());
  std::set<std::string> ids;
  for (const auto& w : again) {
    EXPECT_EQ(w.vehicles.size(), 3u);
    ids.insert(w.scene_id);
  }
  EXPECT_EQ(ids.size(), 4u);
}
