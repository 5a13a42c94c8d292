#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vtformer::data {

enum class Unit { kMeters, kPixels };
enum class SourceFormat { kNgsim, kChd, kCanonical };

std::string_view to_string(Unit unit);
Unit parse_unit(std::string_view name);
std::string_view to_string(SourceFormat format);
SourceFormat parse_source_format(std::string_view name);

inline constexpr double kFeetToMeters = 0.3048;

// One observed bounding-box centre. `scene` separates independent recordings;
// (scene, vehicle_id, frame) is unique within a table.
struct TrackPoint {
  std::int64_t scene = 0;
  std::int64_t vehicle_id = 0;
  std::int64_t frame = 0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

struct TrackTable {
  Unit unit = Unit::kMeters;
  std::vector<TrackPoint> points;
};

// Source column names. An empty `scene` means the whole file is one recording.
struct ColumnMap {
  std::string scene;
  std::string vehicle_id;
  std::string frame;
  std::string x;
  std::string y;
};

ColumnMap default_columns(SourceFormat format);

// NGSIM: Vehicle_ID, Frame_ID, Local_X, Local_Y in feet, converted to meters.
// CHD: track_id, frame, center_x, center_y in pixels.
// Canonical: scene_id,vehicle_id,frame,x,y,unit.
// Points are returned sorted by (scene, vehicle_id, frame). Malformed rows and
// duplicated keys raise ParseError carrying the 1-based line number.
TrackTable parse_tracks(std::istream& in, SourceFormat format, const ColumnMap& columns,
                        std::string_view source_name = "<stream>");
TrackTable load_tracks(const std::filesystem::path& path, SourceFormat format);
TrackTable load_tracks(const std::filesystem::path& path, SourceFormat format,
                       const ColumnMap& columns);

// Canonical CSV with shortest round-trip number formatting.
void write_canonical_csv(std::ostream& out, const TrackTable& table);
void save_canonical_csv(const std::filesystem::path& path, const TrackTable& table);

// Keeps every (native/target)-th frame of each recording, counted from the
// recording's first frame f0, and renumbers kept frames f0, f0+1, f0+2, ...
// All vehicles of a recording share the same phase so co-present vehicles
// stay time-aligned.
std::vector<TrackPoint> downsample(std::span<const TrackPoint> tracks, int native_rate_hz,
                                   int target_rate_hz);

void sort_tracks(std::vector<TrackPoint>& points);

}  // namespace vtformer::data
