#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "vtformer/datahub/windows.hpp"
#include "vtformer/numkit/random.hpp"
#include "vtformer/numkit/tensor.hpp"

namespace vtformer::testing {

inline num::Tensor random_tensor(num::Shape shape, num::Rng& rng, double lo = -1.0, double hi = 1.0) {
  num::Tensor t(std::move(shape));
  for (double& v : t.data()) v = num::uniform(rng, lo, hi);
  return t;
}

// Scene of `vehicles` vehicles on roughly parallel lanes with jittered motion.
inline data::SceneWindow random_scene(num::Rng& rng, std::size_t vehicles, std::size_t t_oh,
                                      std::size_t t_ph, int rate_hz = 5) {
  data::SceneWindow w;
  w.scene_id = "rand/0";
  w.rate_hz = rate_hz;
  for (std::size_t i = 0; i < vehicles; ++i) {
    data::VehicleWindow v;
    v.vehicle_id = static_cast<std::int64_t>(i);
    v.observed = num::Tensor({t_oh, 2});
    v.future = num::Tensor({t_ph, 2});
    double x = num::uniform(rng, -20, 20), y = 3.7 * static_cast<double>(i) + num::uniform(rng, -1, 1);
    const double vx = num::uniform(rng, 3, 6), vy = num::uniform(rng, -0.2, 0.2);
    for (std::size_t k = 0; k < t_oh + t_ph; ++k) {
      x += vx + num::uniform(rng, -0.3, 0.3);
      y += vy + num::uniform(rng, -0.05, 0.05);
      num::Tensor& dst = k < t_oh ? v.observed : v.future;
      const std::size_t r = k < t_oh ? k : k - t_oh;
      dst(r, 0) = x;
      dst(r, 1) = y;
    }
    w.vehicles.push_back(std::move(v));
  }
  return w;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("vtformer_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace vtformer::testing
