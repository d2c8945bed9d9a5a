#include "evsl/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evsl/errors.hpp"

namespace evsl {

namespace {

int floor_div2(int a) { return a >= 0 ? a / 2 : -((1 - a) / 2); }

void check_grid(GridSize grid) {
  if (grid.width <= 0 || grid.height <= 0) {
    throw PatternError("pattern grid must have positive dimensions");
  }
}

void check_span(Span span, GridSize grid) {
  if (span.first < 0 || span.last >= grid.width || span.first > span.last) {
    throw PatternError("span [" + std::to_string(span.first) + ", " + std::to_string(span.last) +
                       "] outside the projector width " + std::to_string(grid.width));
  }
}

// Start column of each of the n groups of `group_width` columns; centers are
// evenly spaced from span.first to span.last.
std::vector<int> group_starts(int n, int group_width, Span span, GridSize grid) {
  if (n < 1) {
    throw PatternError("pattern count must be at least 1");
  }
  if (group_width < 1) {
    throw PatternError("line / dot width must be at least 1");
  }
  check_grid(grid);
  check_span(span, grid);
  if (n > 1 && span.first == span.last) {
    throw PatternError("span too small for more than one line");
  }
  std::vector<int> starts(static_cast<std::size_t>(n));
  const double half = (group_width - 1) / 2.0;
  for (int k = 0; k < n; ++k) {
    const double center =
        n == 1 ? (span.first + span.last) / 2.0
               : span.first + k * static_cast<double>(span.last - span.first) / (n - 1);
    const int start = static_cast<int>(std::lround(center - half));
    if (start < 0 || start + group_width > grid.width) {
      throw PatternError("line " + std::to_string(k) + " falls outside the projector grid");
    }
    starts[static_cast<std::size_t>(k)] = start;
  }
  for (std::size_t k = 1; k < starts.size(); ++k) {
    if (starts[k] - (starts[k - 1] + group_width) < 1) {
      throw PatternError("span of " + std::to_string(span.width()) + " px too small for " +
                         std::to_string(n) + " lines of width " + std::to_string(group_width) +
                         " with unit gaps");
    }
  }
  return starts;
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Id: return "ID";
    case Role::Depth: return "DEPTH";
    case Role::Color: return "COLOR";
  }
  return "?";
}

std::string_view to_string(Channel channel) {
  switch (channel) {
    case Channel::None: return "NONE";
    case Channel::R: return "R";
    case Channel::G: return "G";
    case Channel::B: return "B";
  }
  return "?";
}

std::uint32_t id_exposure_us(int mode) {
  if (mode < 1 || mode > 4) {
    throw PatternError("sequence mode must be 1..4, got " + std::to_string(mode));
  }
  return kIdExposureUs[static_cast<std::size_t>(mode - 1)];
}

PatternImage::PatternImage(int width, int height)
    : width_(width),
      height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), 0) {
  if (width <= 0 || height <= 0) {
    throw PatternError("pattern dimensions must be positive");
  }
}

void PatternImage::set(int x, int y, bool on) {
  auto& cell = bits_[index(x, y)];
  if (cell == 0 && on) {
    ++on_count_;
  } else if (cell != 0 && !on) {
    --on_count_;
  }
  cell = on ? 1 : 0;
}

void ColumnTable::validate(int projector_width) const {
  if (columns.empty()) {
    throw PatternError("column table is empty");
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (!(columns[i] >= 0.0 && columns[i] <= projector_width - 1)) {
      throw PatternError("column " + std::to_string(columns[i]) + " outside the projector");
    }
    if (i > 0 && !(columns[i] > columns[i - 1])) {
      throw PatternError("column table must be strictly increasing");
    }
  }
}

PatternSet generate_line_pattern(int n, int line_width, Span span, GridSize grid) {
  const auto starts = group_starts(n, line_width, span, grid);
  PatternSet set;
  set.patterns.reserve(starts.size());
  for (int start : starts) {
    PatternImage img(grid.width, grid.height);
    for (int y = 0; y < grid.height; ++y) {
      for (int x = start; x < start + line_width; ++x) {
        img.set(x, y);
      }
    }
    set.patterns.push_back(std::move(img));
    set.columns.columns.push_back(start + (line_width - 1) / 2.0);
  }
  return set;
}

PatternSet generate_dot_pattern(int n, int rows, int dot_size, Span span, GridSize grid) {
  if (rows < 1) {
    throw PatternError("dot rows must be at least 1");
  }
  const auto starts = group_starts(n, dot_size, span, grid);
  const double pitch = static_cast<double>(grid.height) / rows;
  if (dot_size > grid.height || (rows > 1 && pitch < dot_size + 1)) {
    throw PatternError("too many dot rows for the projector height");
  }
  std::vector<int> row_starts;
  for (int j = 0; j < rows; ++j) {
    const int top = static_cast<int>(std::lround((j + 0.5) * pitch - (dot_size - 1) / 2.0));
    row_starts.push_back(std::clamp(top, 0, grid.height - dot_size));
  }
  PatternSet set;
  for (int start : starts) {
    PatternImage img(grid.width, grid.height);
    for (int top : row_starts) {
      for (int y = top; y < top + dot_size; ++y) {
        for (int x = start; x < start + dot_size; ++x) {
          img.set(x, y);
        }
      }
    }
    set.patterns.push_back(std::move(img));
    set.columns.columns.push_back(start + (dot_size - 1) / 2.0);
  }
  return set;
}

PatternImage solid_pattern(Span span, GridSize grid) {
  check_grid(grid);
  check_span(span, grid);
  PatternImage img(grid.width, grid.height);
  for (int y = 0; y < grid.height; ++y) {
    for (int x = span.first; x < std::max(span.last, span.first + 1); ++x) {
      img.set(x, y);
    }
  }
  return img;
}

std::vector<EntrySlot> mode_layout(int mode, int n) {
  id_exposure_us(mode);
  if (mode != 1 && n < 1) {
    throw PatternError("modes 2-4 need at least one depth pattern");
  }
  std::vector<EntrySlot> slots;
  slots.push_back({Role::Id, Channel::None, -1});
  const auto depth_block = [&](Channel tint) {
    for (int m = 0; m < n; ++m) {
      slots.push_back({Role::Depth, tint, m});
    }
  };
  const auto color_triplet = [&] {
    for (Channel c : {Channel::R, Channel::G, Channel::B}) {
      slots.push_back({Role::Color, c, -1});
    }
  };
  switch (mode) {
    case 1:
      color_triplet();
      break;
    case 2:
      depth_block(Channel::None);
      break;
    case 3:
      depth_block(Channel::None);
      color_triplet();
      break;
    case 4:
      for (Channel c : {Channel::R, Channel::G, Channel::B}) {
        depth_block(c);
      }
      break;
  }
  return slots;
}

PatternSequence build_sequence(int mode, const PatternSet& depth,
                               const std::optional<PatternImage>& color,
                               std::uint32_t exposure_us, double blank_us) {
  const std::uint32_t id_us = id_exposure_us(mode);
  if (exposure_us == 0) {
    throw PatternError("exposure must be positive");
  }
  if (!(blank_us >= 0.0) || !std::isfinite(blank_us)) {
    throw PatternError("blank padding must be a non-negative duration");
  }
  const bool needs_depth = mode != 1;
  const bool needs_color = mode == 1 || mode == 3;
  if (needs_depth && depth.patterns.empty()) {
    throw PatternError("mode " + std::to_string(mode) + " needs depth patterns");
  }
  if (needs_depth && depth.patterns.size() != depth.columns.size()) {
    throw PatternError("depth patterns and column table differ in length");
  }
  if (needs_color && !color) {
    throw PatternError("mode " + std::to_string(mode) + " needs a color pattern");
  }

  PatternSequence seq;
  seq.mode = mode;
  seq.exposure_us = exposure_us;
  seq.blank_us = blank_us;

  int width = 0;
  int height = 0;
  if (needs_depth) {
    width = depth.patterns.front().width();
    height = depth.patterns.front().height();
  } else {
    width = color->width();
    height = color->height();
  }
  seq.patterns.emplace_back(width, height);  // blank ID frame

  std::size_t first_depth = 0;
  if (needs_depth) {
    depth.columns.validate(width);
    seq.columns = depth.columns;
    seq.n = static_cast<int>(depth.patterns.size());
    first_depth = seq.patterns.size();
    for (const auto& p : depth.patterns) {
      if (p.width() != width || p.height() != height) {
        throw PatternError("depth patterns differ in size");
      }
      seq.patterns.push_back(p);
    }
  }
  std::size_t color_index = 0;
  if (needs_color) {
    if (color->width() != width || color->height() != height) {
      throw PatternError("color pattern size differs from the depth patterns");
    }
    color_index = seq.patterns.size();
    seq.patterns.push_back(*color);
  }

  for (const EntrySlot& slot : mode_layout(mode, seq.n)) {
    SequenceEntry e;
    e.role = slot.role;
    e.channel = slot.channel;
    e.column_index = slot.column_index;
    switch (slot.role) {
      case Role::Id:
        e.exposure_us = id_us;
        e.pattern = 0;
        break;
      case Role::Depth:
        e.exposure_us = exposure_us;
        e.pattern = first_depth + static_cast<std::size_t>(slot.column_index);
        break;
      case Role::Color:
        e.exposure_us = exposure_us;
        e.pattern = color_index;
        break;
    }
    seq.entries.push_back(e);
  }
  return seq;
}

double sequence_duration(const PatternSequence& seq) {
  const double count = static_cast<double>(seq.entries.size());
  return count * seq.exposure_us + count * seq.blank_us;
}

double sequence_span(const PatternSequence& seq) {
  double total = 0.0;
  for (const auto& e : seq.entries) {
    total += e.exposure_us + seq.blank_us;
  }
  return total;
}

std::vector<double> entry_onsets(const PatternSequence& seq) {
  std::vector<double> onsets;
  onsets.reserve(seq.entries.size());
  double t = 0.0;
  for (const auto& e : seq.entries) {
    onsets.push_back(t);
    t += e.exposure_us + seq.blank_us;
  }
  return onsets;
}

double blank_for_total(const PatternSequence& seq, double total_us) {
  if (seq.entries.empty()) {
    throw PatternError("empty sequence");
  }
  const double count = static_cast<double>(seq.entries.size());
  const double blank = (total_us - count * seq.exposure_us) / count;
  if (blank < 0.0) {
    throw PatternError("target duration is shorter than the unpadded sequence");
  }
  return blank;
}

CoverageReport coverage_percentage(const std::vector<PatternImage>& patterns, Span span) {
  if (patterns.empty()) {
    throw PatternError("coverage needs at least one pattern");
  }
  if (span.width() <= 0) {
    throw PatternError("coverage span has zero width");
  }
  const int w = patterns.front().width();
  const int h = patterns.front().height();
  std::vector<std::uint8_t> uni(static_cast<std::size_t>(w) * h, 0);
  for (const auto& p : patterns) {
    if (p.width() != w || p.height() != h) {
      throw PatternError("coverage patterns differ in size");
    }
    const auto& bits = p.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      uni[i] |= bits[i];
    }
  }
  const auto on = static_cast<double>(std::count(uni.begin(), uni.end(), std::uint8_t{1}));
  const double area = static_cast<double>(span.width()) * h;
  return {std::min(100.0, 100.0 * on / area), span.width()};
}

DiamondAnchor diamond_anchor(GridSize grid) { return {grid.width / 2, (grid.height / 2) & ~1}; }

namespace {

bool native_cell(int x, int y, GridSize grid, int& r, int& c) {
  const DiamondAnchor a = diamond_anchor(grid);
  const int dx = x - a.x;
  const int dy = y - a.y;
  r = a.y + dx + dy;
  c = a.x + floor_div2(dx - dy);
  return r >= 0 && r < grid.height && c >= 0 && c < grid.width;
}

}  // namespace

bool diamond_representable(int x, int y, GridSize grid) {
  int r = 0;
  int c = 0;
  return native_cell(x, y, grid, r, c);
}

PatternImage diamond_compensate(const PatternImage& logical) {
  const GridSize grid{logical.width(), logical.height()};
  PatternImage native(grid.width, grid.height);
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      int r = 0;
      int c = 0;
      if (logical.at(x, y) && native_cell(x, y, grid, r, c)) {
        native.set(c, r);
      }
    }
  }
  return native;
}

}  // namespace evsl
