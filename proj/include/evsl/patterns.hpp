#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace evsl {

enum class Role : std::uint8_t { Id = 0, Depth = 1, Color = 2 };

/// Wire values are stable: 0 none, 1 red, 2 green, 3 blue.
enum class Channel : std::uint8_t { None = 0, R = 1, G = 2, B = 3 };

std::string_view to_string(Role role);
std::string_view to_string(Channel channel);

inline constexpr std::uint32_t kDefaultExposureUs = 235;
inline constexpr std::array<std::uint32_t, 4> kIdExposureUs{250, 260, 270, 280};

/// ID pulse width that announces `mode` (1..4).
std::uint32_t id_exposure_us(int mode);

/// Binary bitmap on the orthogonal logical projector grid, one byte per pixel.
class PatternImage {
 public:
  PatternImage() = default;
  PatternImage(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool on = true);
  std::size_t on_pixel_count() const { return on_count_; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool operator==(const PatternImage& other) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::size_t on_count_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Projector column (logical grid, pixel-center convention) carried by each
/// depth pattern. Line centers may be half-integer for even line widths.
struct ColumnTable {
  std::vector<double> columns;

  std::size_t size() const { return columns.size(); }
  bool empty() const { return columns.empty(); }
  double operator[](std::size_t i) const { return columns[i]; }

  /// Throws PatternError unless non-empty, strictly increasing, and in [0, width - 1].
  void validate(int projector_width) const;
};

struct GridSize {
  int width = 912;
  int height = 1140;
};

/// Inclusive column range [first, last]; its width for coverage is last - first.
struct Span {
  int first = 56;
  int last = 856;

  int width() const { return last - first; }
};

struct PatternSet {
  std::vector<PatternImage> patterns;
  ColumnTable columns;
};

/// n vertical lines of `line_width` columns, equally spaced so that the first
/// and last line centers sit on the span ends (n == 1: span center).
PatternSet generate_line_pattern(int n, int line_width, Span span, GridSize grid = {});

/// Dot variant: each pattern carries `rows` square dots on one column.
PatternSet generate_dot_pattern(int n, int rows, int dot_size, Span span, GridSize grid = {});

/// Pattern with every column of the span lit (first..last-1), full height.
PatternImage solid_pattern(Span span, GridSize grid = {});

/// Logical position of one sequence entry within a mode's structure.
struct EntrySlot {
  Role role = Role::Id;
  Channel channel = Channel::None;
  int column_index = -1;  ///< 0-based into the ColumnTable, -1 when none
};

/// Entry structure of a sequence mode: ID first, then
///   mode 1: R G B
///   mode 2: D1..Dn
///   mode 3: D1..Dn R G B
///   mode 4: (D1..Dn) tinted red, then green, then blue.
std::vector<EntrySlot> mode_layout(int mode, int n);

struct SequenceEntry {
  Role role = Role::Id;
  std::uint32_t exposure_us = kDefaultExposureUs;
  Channel channel = Channel::None;
  int column_index = -1;
  std::size_t pattern = 0;  ///< index into PatternSequence::patterns
};

struct PatternSequence {
  int mode = 0;
  int n = 0;  ///< depth patterns per channel block (0 for mode 1)
  std::uint32_t exposure_us = kDefaultExposureUs;
  double blank_us = 0.0;
  ColumnTable columns;
  std::vector<SequenceEntry> entries;
  /// Distinct bitmaps; entries reference them by index. Index 0 is the blank ID frame.
  std::vector<PatternImage> patterns;

  const PatternImage& pattern_of(const SequenceEntry& e) const { return patterns.at(e.pattern); }
};

/// Assembles a sequence for `mode`. Modes 2-4 need depth patterns; modes 1 and
/// 3 need a color pattern. Throws PatternError otherwise.
PatternSequence build_sequence(int mode, const PatternSet& depth,
                               const std::optional<PatternImage>& color,
                               std::uint32_t exposure_us = kDefaultExposureUs,
                               double blank_us = 0.0);

/// Nominal duration: every entry occupies one pattern period of the base
/// exposure plus the blank padding, i.e. entries * (exposure + blank).
double sequence_duration(const PatternSequence& seq);

/// Length of the trigger timeline: each entry's own exposure (ID pulses are
/// 250-280 us) plus the blank padding after each entry.
double sequence_span(const PatternSequence& seq);

/// Onset time of each entry relative to the sequence start.
std::vector<double> entry_onsets(const PatternSequence& seq);

/// Blank padding that stretches the nominal duration of `seq` to `total_us`.
double blank_for_total(const PatternSequence& seq, double total_us);

struct CoverageReport {
  double cp = 0.0;       ///< percent
  int active_span = 0;   ///< columns between first and last line
};

/// ON-pixel union of the patterns relative to the span area, in percent.
CoverageReport coverage_percentage(const std::vector<PatternImage>& patterns, Span span);

/// Remaps a logical pattern onto the diamond DMD so that it renders as the
/// logical pattern rotated by 45 degrees about the grid center. Logical
/// pixels with no native cell are dropped (see diamond_representable).
///
/// Display model: native cell (r, c) lights the surface point
///   (c + 0.5 * (r mod 2), r / 2).
/// Logical pixel (x, y), relative to the anchor (A_x, A_y), maps to
///   r = A_y + dx + dy,  c = A_x + floor((dx - dy) / 2).
PatternImage diamond_compensate(const PatternImage& logical);

/// True if logical pixel (x, y) has a native cell under diamond_compensate.
bool diamond_representable(int x, int y, GridSize grid);

/// Anchor (shared by logical and native grids) of the 45 degree remap.
struct DiamondAnchor {
  int x = 0;
  int y = 0;  ///< always even so row parity is preserved
};
DiamondAnchor diamond_anchor(GridSize grid);

}  // namespace evsl
