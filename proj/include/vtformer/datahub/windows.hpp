#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vtformer/datahub/tracks.hpp"
#include "vtformer/numkit/tensor.hpp"

namespace vtformer::data {

struct VehicleWindow {
  std::int64_t vehicle_id = 0;
  num::Tensor observed;  // T_OH x 2
  num::Tensor future;    // T_PH x 2
};

// All vehicles co-present over one observation + prediction span.
struct SceneWindow {
  std::string scene_id;
  std::int64_t t0 = 0;
  Unit unit = Unit::kMeters;
  int rate_hz = 5;
  std::vector<VehicleWindow> vehicles;

  std::size_t t_oh() const { return vehicles.empty() ? 0 : vehicles.front().observed.rows(); }
  std::size_t t_ph() const { return vehicles.empty() ? 0 : vehicles.front().future.rows(); }
};

// Throws ConfigError when a window breaks the SceneWindow invariants.
void validate(const SceneWindow& window);

struct DatasetConfig {
  SourceFormat source_format = SourceFormat::kCanonical;
  int native_rate_hz = 5;
  int target_rate_hz = 5;
  int t_oh = 15;
  int t_ph = 25;
  // Steps between successive window starts; 0 means "use t_ph".
  int stride = 0;
  double split_fraction = 0.8;
  std::uint64_t seed = 0;
  ColumnMap columns = default_columns(SourceFormat::kCanonical);

  int effective_stride() const { return stride > 0 ? stride : t_ph; }
  int downsample_factor() const { return native_rate_hz / target_rate_hz; }
  // T_OH in {5, 10, 15} with T_PH = 25.
  bool canonical() const;
};

void validate(const DatasetConfig& cfg);

// Slides a (t_oh + t_ph)-step window with the configured stride over each
// recording. A vehicle joins a window only if present at every step; windows
// without vehicles are dropped. Output is ordered by (t0, recording).
std::vector<SceneWindow> window_scenes(std::span<const TrackPoint> tracks, const DatasetConfig& cfg,
                                       Unit unit = Unit::kMeters);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
};

// Seeded shuffle, then the first ceil(fraction * n) indices go to train.
SplitIndices split_indices(std::size_t n, double fraction, std::uint64_t seed);

struct Split {
  std::vector<SceneWindow> train;
  std::vector<SceneWindow> eval;
};

Split split(std::span<const SceneWindow> windows, double fraction, std::uint64_t seed);

// Flattens windows back into canonical tracks: one recording per window,
// frames 0 .. t_oh + t_ph - 1.
TrackTable tracks_from_windows(std::span<const SceneWindow> windows);

}  // namespace vtformer::data
