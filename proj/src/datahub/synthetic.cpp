#include "vtformer/datahub/synthetic.hpp"

#include <cmath>
#include <random>
#include <string>

#include "vtformer/errors.hpp"
#include "vtformer/numkit/random.hpp"

namespace vtformer::data {

std::string_view to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::kConstantVelocity: return "constant_velocity";
    case Scenario::kConstantAcceleration: return "constant_acceleration";
    case Scenario::kLaneChange: return "lane_change";
    case Scenario::kCurve: return "curve";
    case Scenario::kCarFollowing: return "car_following";
  }
  return "constant_velocity";
}

Scenario parse_scenario(std::string_view name) {
  for (Scenario s : {Scenario::kConstantVelocity, Scenario::kConstantAcceleration,
                     Scenario::kLaneChange, Scenario::kCurve, Scenario::kCarFollowing}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

KinematicState state_at(const VehicleMotion& m, double t) {
  switch (m.kind) {
    case Scenario::kConstantVelocity:
    case Scenario::kCarFollowing:
      return {m.x0 + m.vx * t, m.y0 + m.vy * t, m.vx, m.vy};
    case Scenario::kConstantAcceleration:
      return {m.x0 + m.vx * t + 0.5 * m.ax * t * t, m.y0 + m.vy * t + 0.5 * m.ay * t * t,
              m.vx + m.ax * t, m.vy + m.ay * t};
    case Scenario::kLaneChange: {
      const double z = (t - m.maneuver_time) / m.maneuver_scale;
      const double s = 1.0 / (1.0 + std::exp(-z));
      return {m.x0 + m.vx * t, m.y0 + m.vy * t + m.lateral_offset * s, m.vx,
              m.vy + m.lateral_offset * s * (1.0 - s) / m.maneuver_scale};
    }
    case Scenario::kCurve: {
      if (m.curve_radius == 0.0) return {m.x0 + m.vx * t, m.y0 + m.vy * t, m.vx, m.vy};
      const double speed = std::hypot(m.vx, m.vy);
      const double heading0 = std::atan2(m.vy, m.vx);
      const double heading = heading0 + speed / m.curve_radius * t;
      const double r = m.curve_radius;
      return {m.x0 + r * (std::sin(heading) - std::sin(heading0)),
              m.y0 + r * (std::cos(heading0) - std::cos(heading)), speed * std::cos(heading),
              speed * std::sin(heading)};
    }
  }
  return {m.x0, m.y0, m.vx, m.vy};
}

num::Tensor sample_positions(const VehicleMotion& motion, std::size_t steps, int rate_hz) {
  num::Tensor out({steps, 2});
  for (std::size_t k = 0; k < steps; ++k) {
    const KinematicState s = state_at(motion, static_cast<double>(k) / rate_hz);
    out(k, 0) = s.x;
    out(k, 1) = s.y;
  }
  return out;
}

nlohmann::json to_json(const SyntheticConfig& cfg) {
  return {
      {"scenario", std::string(to_string(cfg.scenario))},
      {"n_scenes", cfg.n_scenes},
      {"vehicles_per_scene", cfg.vehicles_per_scene},
      {"rate_hz", cfg.rate_hz},
      {"seed", cfg.seed},
      {"noise_std", cfg.noise_std},
      {"t_oh", cfg.t_oh},
      {"t_ph", cfg.t_ph},
      {"speed_min", cfg.speed_min},
      {"speed_max", cfg.speed_max},
      {"lateral_speed_max", cfg.lateral_speed_max},
      {"lane_width", cfg.lane_width},
      {"lanes", cfg.lanes},
      {"spawn_range", cfg.spawn_range},
      {"accel_max", cfg.accel_max},
      {"curve_radius_min", cfg.curve_radius_min},
      {"curve_radius_max", cfg.curve_radius_max},
      {"min_gap", cfg.min_gap},
      {"time_headway", cfg.time_headway},
      {"unit", "meters"},
  };
}

namespace {

VehicleMotion sample_motion(const SyntheticConfig& cfg, std::size_t vehicle, double duration,
                            num::Rng& rng) {
  VehicleMotion m;
  m.kind = cfg.scenario;
  const std::size_t lane = vehicle % std::max<std::size_t>(cfg.lanes, 1);
  m.x0 = num::uniform(rng, 0.0, cfg.spawn_range);
  m.y0 = static_cast<double>(lane) * cfg.lane_width;
  m.vx = num::uniform(rng, cfg.speed_min, cfg.speed_max);
  switch (cfg.scenario) {
    case Scenario::kConstantVelocity:
      m.vy = num::uniform(rng, -cfg.lateral_speed_max, cfg.lateral_speed_max);
      break;
    case Scenario::kConstantAcceleration:
      m.vy = num::uniform(rng, -cfg.lateral_speed_max, cfg.lateral_speed_max);
      m.ax = num::uniform(rng, -cfg.accel_max, cfg.accel_max);
      break;
    case Scenario::kLaneChange: {
      // Move toward the interior so the target lane exists.
      const bool left = lane == 0 || (lane + 1 < cfg.lanes && num::uniform01(rng) < 0.5);
      m.lateral_offset = left ? cfg.lane_width : -cfg.lane_width;
      m.maneuver_time = num::uniform(rng, 0.3, 0.8) * duration;
      m.maneuver_scale = num::uniform(rng, 0.4, 0.8);
      break;
    }
    case Scenario::kCurve: {
      const double r = num::uniform(rng, cfg.curve_radius_min, cfg.curve_radius_max);
      m.curve_radius = num::uniform01(rng) < 0.5 ? r : -r;
      break;
    }
    case Scenario::kCarFollowing:
      break;
  }
  return m;
}

}  // namespace

std::vector<SceneWindow> generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_scenes < 1) throw ConfigError("n_scenes must be at least 1");
  if (cfg.vehicles_per_scene < 1) throw ConfigError("vehicles_per_scene must be at least 1");
  if (cfg.rate_hz < 1) throw ConfigError("rate_hz must be positive");
  if (cfg.t_oh < 1 || cfg.t_ph < 1) throw ConfigError("horizons must be positive");
  if (cfg.noise_std < 0.0) throw ConfigError("noise_std must be non-negative");

  const auto t_oh = static_cast<std::size_t>(cfg.t_oh);
  const auto t_ph = static_cast<std::size_t>(cfg.t_ph);
  const std::size_t steps = t_oh + t_ph;
  const double duration = static_cast<double>(steps - 1) / cfg.rate_hz;

  num::Rng rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_std > 0.0 ? cfg.noise_std : 1.0);

  std::vector<SceneWindow> scenes;
  scenes.reserve(cfg.n_scenes);
  for (std::size_t s = 0; s < cfg.n_scenes; ++s) {
    std::vector<num::Tensor> paths;
    if (cfg.scenario == Scenario::kCarFollowing) {
      VehicleMotion leader;
      leader.kind = Scenario::kConstantAcceleration;
      leader.x0 = num::uniform(rng, 0.0, cfg.spawn_range) + cfg.vehicles_per_scene * 60.0;
      leader.y0 = static_cast<double>(s % std::max<std::size_t>(cfg.lanes, 1)) * cfg.lane_width;
      leader.vx = num::uniform(rng, cfg.speed_min, cfg.speed_max);
      // Keep the leader moving forward over the whole window.
      const double a_limit = std::min(cfg.accel_max, 0.5 * cfg.speed_min / std::max(duration, 1e-9));
      leader.ax = num::uniform(rng, -a_limit, a_limit);
      for (std::size_t k = 0; k < cfg.vehicles_per_scene; ++k) {
        num::Tensor path({steps, 2});
        for (std::size_t i = 0; i < steps; ++i) {
          const KinematicState st = state_at(leader, static_cast<double>(i) / cfg.rate_hz);
          const double gap = cfg.min_gap + cfg.time_headway * st.vx;
          path(i, 0) = st.x - static_cast<double>(k) * gap;
          path(i, 1) = st.y;
        }
        paths.push_back(std::move(path));
      }
    } else {
      for (std::size_t k = 0; k < cfg.vehicles_per_scene; ++k) {
        paths.push_back(sample_positions(sample_motion(cfg, k, duration, rng), steps, cfg.rate_hz));
      }
    }

    SceneWindow scene;
    scene.scene_id = std::to_string(s) + "/0";
    scene.t0 = 0;
    scene.unit = Unit::kMeters;
    scene.rate_hz = cfg.rate_hz;
    for (std::size_t k = 0; k < paths.size(); ++k) {
      num::Tensor& path = paths[k];
      if (cfg.noise_std > 0.0) {
        for (double& v : path.data()) v += noise(rng);
      }
      VehicleWindow v;
      v.vehicle_id = static_cast<std::int64_t>(k);
      v.observed = num::Tensor({t_oh, 2}, std::vector<double>(path.data().begin(),
                                                              path.data().begin() + 2 * t_oh));
      v.future = num::Tensor({t_ph, 2}, std::vector<double>(path.data().begin() + 2 * t_oh,
                                                            path.data().end()));
      scene.vehicles.push_back(std::move(v));
    }
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

}  // namespace vtformer::data
