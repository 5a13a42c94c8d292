#include "vtformer/datahub/tracks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include "vtformer/errors.hpp"
#include "vtformer/numkit/format.hpp"

namespace vtformer::data {

std::string_view to_string(Unit unit) { return unit == Unit::kMeters ? "meters" : "pixels"; }

Unit parse_unit(std::string_view name) {
  if (name == "meters") return Unit::kMeters;
  if (name == "pixels") return Unit::kPixels;
  throw ParseError("unknown unit '" + std::string(name) + "'");
}

std::string_view to_string(SourceFormat format) {
  switch (format) {
    case SourceFormat::kNgsim: return "ngsim";
    case SourceFormat::kChd: return "chd";
    case SourceFormat::kCanonical: return "canonical";
  }
  return "canonical";
}

SourceFormat parse_source_format(std::string_view name) {
  if (name == "ngsim") return SourceFormat::kNgsim;
  if (name == "chd") return SourceFormat::kChd;
  if (name == "canonical") return SourceFormat::kCanonical;
  throw ConfigError("unknown source format '" + std::string(name) + "'");
}

ColumnMap default_columns(SourceFormat format) {
  switch (format) {
    case SourceFormat::kNgsim: return {"", "Vehicle_ID", "Frame_ID", "Local_X", "Local_Y"};
    case SourceFormat::kChd: return {"", "track_id", "frame", "center_x", "center_y"};
    case SourceFormat::kCanonical: return {"scene_id", "vehicle_id", "frame", "x", "y"};
  }
  return {};
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line, bool comma) {
  std::vector<std::string_view> fields;
  if (comma) {
    std::size_t start = 0;
    while (true) {
      const std::size_t pos = line.find(',', start);
      fields.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  } else {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
      if (i > start) fields.push_back(line.substr(start, i - start));
    }
  }
  return fields;
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& what) {
  throw ParseError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

std::int64_t parse_int(std::string_view s, std::string_view source, std::size_t line) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    // Some exports write integral ids as "12.0".
    double d = 0.0;
    auto [dptr, dec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (dec == std::errc() && dptr == s.data() + s.size() && d == static_cast<double>(static_cast<std::int64_t>(d))) {
      return static_cast<std::int64_t>(d);
    }
    fail(source, line, "expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

double parse_double(std::string_view s, std::string_view source, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    fail(source, line, "expected a finite number, got '" + std::string(s) + "'");
  }
  return v;
}

std::size_t find_column(const std::vector<std::string_view>& header, const std::string& name,
                        std::string_view source) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) fail(source, 1, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

void sort_tracks(std::vector<TrackPoint>& points) {
  std::sort(points.begin(), points.end(), [](const TrackPoint& a, const TrackPoint& b) {
    return std::tie(a.scene, a.vehicle_id, a.frame) < std::tie(b.scene, b.vehicle_id, b.frame);
  });
}

TrackTable parse_tracks(std::istream& in, SourceFormat format, const ColumnMap& columns,
                        std::string_view source_name) {
  std::string line;
  if (!std::getline(in, line)) fail(source_name, 1, "empty file");
  const bool comma = line.find(',') != std::string::npos;
  std::vector<std::string> header_copy;
  for (std::string_view field : split_fields(line, comma)) header_copy.emplace_back(field);
  std::vector<std::string_view> header_views(header_copy.begin(), header_copy.end());

  const std::size_t c_vehicle = find_column(header_views, columns.vehicle_id, source_name);
  const std::size_t c_frame = find_column(header_views, columns.frame, source_name);
  const std::size_t c_x = find_column(header_views, columns.x, source_name);
  const std::size_t c_y = find_column(header_views, columns.y, source_name);
  std::optional<std::size_t> c_scene;
  if (!columns.scene.empty()) c_scene = find_column(header_views, columns.scene, source_name);
  std::optional<std::size_t> c_unit;
  if (format == SourceFormat::kCanonical) c_unit = find_column(header_views, "unit", source_name);

  TrackTable table;
  table.unit = format == SourceFormat::kChd ? Unit::kPixels : Unit::kMeters;
  const double scale = format == SourceFormat::kNgsim ? kFeetToMeters : 1.0;
  std::optional<Unit> file_unit;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, comma);
    if (fields.size() != header_views.size()) {
      fail(source_name, line_no,
           "expected " + std::to_string(header_views.size()) + " fields, got " +
               std::to_string(fields.size()));
    }
    TrackPoint p;
    p.scene = c_scene ? parse_int(fields[*c_scene], source_name, line_no) : 0;
    p.vehicle_id = parse_int(fields[c_vehicle], source_name, line_no);
    p.frame = parse_int(fields[c_frame], source_name, line_no);
    p.x = parse_double(fields[c_x], source_name, line_no) * scale;
    p.y = parse_double(fields[c_y], source_name, line_no) * scale;
    if (c_unit) {
      Unit u;
      try {
        u = parse_unit(fields[*c_unit]);
      } catch (const ParseError& e) {
        fail(source_name, line_no, e.what());
      }
      if (file_unit && *file_unit != u) fail(source_name, line_no, "mixed units in one file");
      file_unit = u;
    }
    table.points.push_back(p);
  }
  if (file_unit) table.unit = *file_unit;

  sort_tracks(table.points);
  for (std::size_t i = 1; i < table.points.size(); ++i) {
    const TrackPoint& a = table.points[i - 1];
    const TrackPoint& b = table.points[i];
    if (a.scene == b.scene && a.vehicle_id == b.vehicle_id && a.frame == b.frame) {
      throw ParseError(std::string(source_name) + ": duplicated (vehicle_id, frame) = (" +
                       std::to_string(b.vehicle_id) + ", " + std::to_string(b.frame) + ")");
    }
  }
  return table;
}

TrackTable load_tracks(const std::filesystem::path& path, SourceFormat format) {
  return load_tracks(path, format, default_columns(format));
}

TrackTable load_tracks(const std::filesystem::path& path, SourceFormat format,
                       const ColumnMap& columns) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_tracks(in, format, columns, path.string());
}

void write_canonical_csv(std::ostream& out, const TrackTable& table) {
  out << "scene_id,vehicle_id,frame,x,y,unit\n";
  const std::string_view unit = to_string(table.unit);
  for (const TrackPoint& p : table.points) {
    out << p.scene << ',' << p.vehicle_id << ',' << p.frame << ',' << num::format_double(p.x) << ','
        << num::format_double(p.y) << ',' << unit << '\n';
  }
}

void save_canonical_csv(const std::filesystem::path& path, const TrackTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_canonical_csv(out, table);
}

std::vector<TrackPoint> downsample(std::span<const TrackPoint> tracks, int native_rate_hz,
                                   int target_rate_hz) {
  if (native_rate_hz <= 0 || target_rate_hz <= 0 || native_rate_hz % target_rate_hz != 0) {
    throw ConfigError("native rate " + std::to_string(native_rate_hz) +
                      " Hz is not divisible by target rate " + std::to_string(target_rate_hz) + " Hz");
  }
  const std::int64_t stride = native_rate_hz / target_rate_hz;
  std::map<std::int64_t, std::int64_t> first_frame;
  for (const TrackPoint& p : tracks) {
    auto [it, inserted] = first_frame.emplace(p.scene, p.frame);
    if (!inserted) it->second = std::min(it->second, p.frame);
  }
  std::vector<TrackPoint> out;
  out.reserve(tracks.size() / static_cast<std::size_t>(stride) + 1);
  for (const TrackPoint& p : tracks) {
    const std::int64_t offset = p.frame - first_frame[p.scene];
    if (offset % stride != 0) continue;
    TrackPoint q = p;
    q.frame = first_frame[p.scene] + offset / stride;
    out.push_back(q);
  }
  sort_tracks(out);
  return out;
}

}  // namespace vtformer::data
