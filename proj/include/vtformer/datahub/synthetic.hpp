#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vtformer/datahub/windows.hpp"

namespace vtformer::data {

enum class Scenario {
  kConstantVelocity,
  kConstantAcceleration,
  kLaneChange,
  kCurve,
  kCarFollowing,
};

std::string_view to_string(Scenario scenario);
// Throws ConfigError on an unknown name.
Scenario parse_scenario(std::string_view name);

// Closed-form motion of one vehicle. Which fields matter depends on the kind:
//   constant_velocity      p(t) = p0 + v t
//   constant_acceleration  p(t) = p0 + v t + a t^2 / 2
//   lane_change            constant velocity plus a logistic lateral shift of
//                          `lateral_offset`, centred at `maneuver_time` with
//                          time scale `maneuver_scale`
//   curve                  circular arc of signed radius `curve_radius`
//                          (positive turns left) starting along v at speed |v|
// Car-following platoons are built from a constant_acceleration leader.
struct VehicleMotion {
  Scenario kind = Scenario::kConstantVelocity;
  double x0 = 0.0, y0 = 0.0;
  double vx = 0.0, vy = 0.0;
  double ax = 0.0, ay = 0.0;
  double lateral_offset = 0.0;
  double maneuver_time = 0.0;
  double maneuver_scale = 1.0;
  double curve_radius = 0.0;
};

// Position and velocity at time t (seconds).
struct KinematicState {
  double x, y, vx, vy;
};
KinematicState state_at(const VehicleMotion& motion, double t);

// `steps` x 2 positions sampled at k / rate_hz, k = 0 .. steps-1.
num::Tensor sample_positions(const VehicleMotion& motion, std::size_t steps, int rate_hz);

struct SyntheticConfig {
  Scenario scenario = Scenario::kConstantVelocity;
  std::size_t n_scenes = 10;
  std::size_t vehicles_per_scene = 3;
  int rate_hz = 5;
  std::uint64_t seed = 0;
  double noise_std = 0.0;
  int t_oh = 15;
  int t_ph = 25;

  // Sampling ranges (meters, seconds).
  double speed_min = 20.0;
  double speed_max = 35.0;
  double lateral_speed_max = 0.3;
  double lane_width = 3.7;
  std::size_t lanes = 4;
  double spawn_range = 60.0;
  double accel_max = 1.5;
  double curve_radius_min = 150.0;
  double curve_radius_max = 400.0;
  double min_gap = 8.0;        // car following standstill gap
  double time_headway = 1.2;   // car following gap per unit speed
};

nlohmann::json to_json(const SyntheticConfig& cfg);

// Deterministic in (cfg, seed). Scene k gets scene_id "k/0", t0 = 0 and
// vehicle ids 0 .. vehicles_per_scene-1; noise is zero-mean Gaussian added to
// every coordinate after the kinematics are sampled.
std::vector<SceneWindow> generate_synthetic(const SyntheticConfig& cfg);

}  // namespace vtformer::data
