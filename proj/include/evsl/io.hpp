#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evsl/frames.hpp"
#include "evsl/geometry.hpp"
#include "evsl/patterns.hpp"
#include "evsl/simulator.hpp"
#include "evsl/tagger.hpp"

namespace evsl::io {

namespace fs = std::filesystem;

inline constexpr std::array<char, 8> kEventMagic{'E', 'V', 'R', 'G', 'B', 'D', 'E', 'V'};
inline constexpr std::array<char, 8> kTaggedMagic{'E', 'V', 'R', 'G', 'B', 'D', 'T', 'G'};
inline constexpr std::uint16_t kFormatVersion = 1;

enum class RecordKind : std::uint8_t { Event = 0, TriggerRising = 1, TriggerFalling = 2 };

// Event stream file. Triggers and events share one time-ordered record list;
// at equal timestamps triggers come first.
void write_events(const fs::path& path, const EventStream& stream);
EventStream read_events(const fs::path& path);
void write_events_csv(const fs::path& path, const EventStream& stream);
EventStream read_events_csv(const fs::path& path);

struct TaggedFile {
  int width = 0;
  int height = 0;
  std::uint64_t start_time = 0;
  std::vector<TaggedEvent> events;

  bool operator==(const TaggedFile&) const = default;
};

void write_tagged(const fs::path& path, const TaggedFile& file);
TaggedFile read_tagged(const fs::path& path);
void write_tagged_csv(const fs::path& path, const TaggedFile& file);
TaggedFile read_tagged_csv(const fs::path& path);

// Images.
void write_depth_png(const fs::path& path, const DepthFrame& frame);  ///< 16-bit, mm
DepthFrame read_depth_png(const fs::path& path);
void write_color_png(const fs::path& path, const ColorFrame& frame);  ///< 8-bit RGB
ColorFrame read_color_png(const fs::path& path);  ///< mask = any channel nonzero
void write_temporal_png(const fs::path& path, const TemporalMap& map, int max_index);
TemporalMap read_temporal_png(const fs::path& path);
void write_pattern_png(const fs::path& path, const PatternImage& pattern);  ///< 1-bit
PatternImage read_pattern_png(const fs::path& path);

void write_ply(const fs::path& path, const PointCloud& cloud);
PointCloud read_ply(const fs::path& path);

// JSON documents.
CalibrationBundle parse_calibration(const std::string& json_text);
CalibrationBundle load_calibration(const fs::path& path);
std::string calibration_to_json(const CalibrationBundle& calib);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace evsl::io
