#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace evsl {

/// Half-open time window [t0, t1) in microseconds.
struct TimeWindow {
  std::uint64_t t0 = 0;
  std::uint64_t t1 = 0;

  bool contains(std::uint64_t t) const { return t >= t0 && t < t1; }
  std::uint64_t length() const { return t1 - t0; }
};

/// Per-pixel depth in millimeters; 0 means no data.
struct DepthFrame {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  TimeWindow window;

  DepthFrame() = default;
  DepthFrame(int w, int h) : width(w), height(h), depth(static_cast<std::size_t>(w) * h, 0.0) {}

  double& at(int x, int y) { return depth[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return depth[static_cast<std::size_t>(y) * width + x]; }
  std::size_t data_pixel_count() const;
};

using Rgb8 = std::array<std::uint8_t, 3>;

/// 8-bit RGB with a validity mask; masked-off pixels hold (0, 0, 0).
struct ColorFrame {
  int width = 0;
  int height = 0;
  std::vector<Rgb8> rgb;
  std::vector<std::uint8_t> mask;
  TimeWindow window;

  ColorFrame() = default;
  ColorFrame(int w, int h)
      : width(w),
        height(h),
        rgb(static_cast<std::size_t>(w) * h, Rgb8{0, 0, 0}),
        mask(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  std::size_t valid_pixel_count() const;
};

/// Per-pixel 1-based projector column index of the latest depth event (0 = none).
struct TemporalMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> index;
  TimeWindow window;

  TemporalMap() = default;
  TemporalMap(int w, int h) : width(w), height(h), index(static_cast<std::size_t>(w) * h, 0) {}

  std::uint16_t at(int x, int y) const { return index[static_cast<std::size_t>(y) * width + x]; }
};

struct ColoredPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  Rgb8 color{255, 255, 255};
};

struct PointCloud {
  std::vector<ColoredPoint> points;
};

inline std::size_t DepthFrame::data_pixel_count() const {
  std::size_t n = 0;
  for (double d : depth) n += d != 0.0 ? 1 : 0;
  return n;
}

inline std::size_t ColorFrame::valid_pixel_count() const {
  std::size_t n = 0;
  for (auto m : mask) n += m != 0 ? 1 : 0;
  return n;
}

}  // namespace evsl
