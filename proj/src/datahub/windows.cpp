#include "vtformer/datahub/windows.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "vtformer/errors.hpp"
#include "vtformer/numkit/random.hpp"

namespace vtformer::data {

void validate(const SceneWindow& window) {
  if (window.vehicles.empty()) {
    throw ConfigError("scene window " + window.scene_id + " has no vehicles");
  }
  const std::size_t t_oh = window.t_oh();
  const std::size_t t_ph = window.t_ph();
  for (const VehicleWindow& v : window.vehicles) {
    if (v.observed.shape() != num::Shape{t_oh, 2} || v.future.shape() != num::Shape{t_ph, 2}) {
      throw ConfigError("scene window " + window.scene_id + ": vehicle " +
                        std::to_string(v.vehicle_id) + " has inconsistent horizons");
    }
    if (!v.observed.all_finite() || !v.future.all_finite()) {
      throw ConfigError("scene window " + window.scene_id + ": non-finite coordinates");
    }
  }
}

bool DatasetConfig::canonical() const {
  return (t_oh == 5 || t_oh == 10 || t_oh == 15) && t_ph == 25;
}

void validate(const DatasetConfig& cfg) {
  if (cfg.native_rate_hz <= 0 || cfg.target_rate_hz <= 0 ||
      cfg.native_rate_hz % cfg.target_rate_hz != 0) {
    throw ConfigError("native rate " + std::to_string(cfg.native_rate_hz) +
                      " Hz is not divisible by target rate " +
                      std::to_string(cfg.target_rate_hz) + " Hz");
  }
  if (cfg.t_oh < 1 || cfg.t_ph < 1) throw ConfigError("horizons must be positive");
  if (cfg.stride < 0) throw ConfigError("stride must be non-negative");
  if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0)) {
    throw ConfigError("split fraction must lie in (0, 1)");
  }
}

std::vector<SceneWindow> window_scenes(std::span<const TrackPoint> tracks, const DatasetConfig& cfg,
                                       Unit unit) {
  validate(cfg);
  const auto t_oh = static_cast<std::int64_t>(cfg.t_oh);
  const auto length = t_oh + cfg.t_ph;
  const std::int64_t stride = cfg.effective_stride();

  // recording -> vehicle -> frame-sorted points
  std::map<std::int64_t, std::map<std::int64_t, std::vector<TrackPoint>>> recordings;
  for (const TrackPoint& p : tracks) recordings[p.scene][p.vehicle_id].push_back(p);

  std::vector<SceneWindow> windows;
  for (auto& [scene, vehicles] : recordings) {
    std::int64_t first = INT64_MAX, last = INT64_MIN;
    for (auto& [id, points] : vehicles) {
      std::sort(points.begin(), points.end(),
                [](const TrackPoint& a, const TrackPoint& b) { return a.frame < b.frame; });
      first = std::min(first, points.front().frame);
      last = std::max(last, points.back().frame);
    }
    for (std::int64_t t0 = first; t0 + length - 1 <= last; t0 += stride) {
      SceneWindow window;
      window.scene_id = std::to_string(scene) + "/" + std::to_string(t0);
      window.t0 = t0;
      window.unit = unit;
      window.rate_hz = cfg.target_rate_hz;
      for (const auto& [id, points] : vehicles) {
        auto it = std::lower_bound(points.begin(), points.end(), t0,
                                   [](const TrackPoint& p, std::int64_t f) { return p.frame < f; });
        const auto begin = static_cast<std::size_t>(it - points.begin());
        if (begin + static_cast<std::size_t>(length) > points.size()) continue;
        if (points[begin].frame != t0 || points[begin + length - 1].frame != t0 + length - 1) {
          continue;
        }
        VehicleWindow v;
        v.vehicle_id = id;
        v.observed = num::Tensor({static_cast<std::size_t>(t_oh), 2});
        v.future = num::Tensor({static_cast<std::size_t>(cfg.t_ph), 2});
        for (std::int64_t k = 0; k < length; ++k) {
          const TrackPoint& p = points[begin + static_cast<std::size_t>(k)];
          num::Tensor& dst = k < t_oh ? v.observed : v.future;
          const auto row = static_cast<std::size_t>(k < t_oh ? k : k - t_oh);
          dst(row, 0) = p.x;
          dst(row, 1) = p.y;
        }
        window.vehicles.push_back(std::move(v));
      }
      if (!window.vehicles.empty()) windows.push_back(std::move(window));
    }
  }
  std::stable_sort(windows.begin(), windows.end(),
                   [](const SceneWindow& a, const SceneWindow& b) { return a.t0 < b.t0; });
  return windows;
}

SplitIndices split_indices(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
  num::Rng rng(seed);
  const std::vector<std::size_t> order = num::permutation(n, rng);
  // Guard against 0.8 * 10 landing a hair above 8.
  auto n_train = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  n_train = std::min(n_train, n);
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.eval.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return out;
}

Split split(std::span<const SceneWindow> windows, double fraction, std::uint64_t seed) {
  const SplitIndices idx = split_indices(windows.size(), fraction, seed);
  Split out;
  for (std::size_t i : idx.train) out.train.push_back(windows[i]);
  for (std::size_t i : idx.eval) out.eval.push_back(windows[i]);
  return out;
}

TrackTable tracks_from_windows(std::span<const SceneWindow> windows) {
  TrackTable table;
  if (!windows.empty()) table.unit = windows.front().unit;
  for (std::size_t s = 0; s < windows.size(); ++s) {
    for (const VehicleWindow& v : windows[s].vehicles) {
      const std::size_t t_oh = v.observed.rows();
      for (std::size_t k = 0; k < t_oh + v.future.rows(); ++k) {
        const num::Tensor& src = k < t_oh ? v.observed : v.future;
        const std::size_t row = k < t_oh ? k : k - t_oh;
        table.points.push_back({static_cast<std::int64_t>(s), v.vehicle_id,
                                static_cast<std::int64_t>(k), src(row, 0), src(row, 1)});
      }
    }
  }
  sort_tracks(table.points);
  return table;
}

}  // namespace vtformer::data
