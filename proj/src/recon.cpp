#include "evsl/recon.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evsl/errors.hpp"

namespace evsl {

CombinePolicy parse_policy(std::string_view name) {
  if (name == "last") return CombinePolicy::Last;
  if (name == "mean") return CombinePolicy::Mean;
  if (name == "median") return CombinePolicy::Median;
  throw DataError("unknown combine policy '" + std::string(name) + "'");
}

std::string_view to_string(CombinePolicy policy) {
  switch (policy) {
    case CombinePolicy::Last: return "last";
    case CombinePolicy::Mean: return "mean";
    case CombinePolicy::Median: return "median";
  }
  return "?";
}

namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) throw DataError("frame dimensions must be positive");
}

bool in_frame(const TaggedEvent& e, int width, int height) {
  return e.x < width && e.y < height;
}

}  // namespace

DepthFrame accumulate_depth(const std::vector<TaggedEvent>& events, const TimeWindow& window,
                            CombinePolicy policy, int width, int height) {
  check_dims(width, height);
  DepthFrame frame(width, height);
  frame.window = window;
  const auto count = frame.depth.size();

  if (policy == CombinePolicy::Last) {
    for (const auto& e : events) {
      if (e.depth > 0.0f && window.contains(e.t) && in_frame(e, width, height)) {
        frame.at(e.x, e.y) = e.depth;
      }
    }
    return frame;
  }

  if (policy == CombinePolicy::Mean) {
    std::vector<double> sum(count, 0.0);
    std::vector<std::uint32_t> n(count, 0);
    for (const auto& e : events) {
      if (e.depth > 0.0f && window.contains(e.t) && in_frame(e, width, height)) {
        const std::size_t i = static_cast<std::size_t>(e.y) * width + e.x;
        sum[i] += e.depth;
        ++n[i];
      }
    }
    for (std::size_t i = 0; i < count; ++i) {
      if (n[i] > 0) frame.depth[i] = sum[i] / n[i];
    }
    return frame;
  }

  // Median: bucket samples per pixel (counting sort by pixel index).
  std::vector<std::uint32_t> offset(count + 1, 0);
  for (const auto& e : events) {
    if (e.depth > 0.0f && window.contains(e.t) && in_frame(e, width, height)) {
      ++offset[static_cast<std::size_t>(e.y) * width + e.x + 1];
    }
  }
  for (std::size_t i = 0; i < count; ++i) offset[i + 1] += offset[i];
  std::vector<double> samples(offset[count]);
  std::vector<std::uint32_t> fill(offset.begin(), offset.end() - 1);
  for (const auto& e : events) {
    if (e.depth > 0.0f && window.contains(e.t) && in_frame(e, width, height)) {
      samples[fill[static_cast<std::size_t>(e.y) * width + e.x]++] = e.depth;
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    const auto begin = samples.begin() + offset[i];
    const auto end = samples.begin() + offset[i + 1];
    const auto n = static_cast<std::size_t>(end - begin);
    if (n == 0) continue;
    std::sort(begin, end);
    frame.depth[i] = n % 2 == 1 ? begin[n / 2] : 0.5 * (begin[n / 2 - 1] + begin[n / 2]);
  }
  return frame;
}

ColorFrame accumulate_color(const std::vector<TaggedEvent>& events, const TimeWindow& window,
                            int k_max, int width, int height) {
  check_dims(width, height);
  if (k_max < 1) throw DataError("k_max must be positive");
  ColorFrame frame(width, height);
  frame.window = window;
  std::vector<std::array<std::uint32_t, 3>> counts(frame.rgb.size(), {0, 0, 0});
  for (const auto& e : events) {
    if (e.channel == Channel::None || !window.contains(e.t) || !in_frame(e, width, height)) {
      continue;
    }
    ++counts[frame.index(e.x, e.y)][static_cast<std::size_t>(e.channel) - 1];
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto& c = counts[i];
    if (c[0] + c[1] + c[2] == 0) continue;
    frame.mask[i] = 1;
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double ratio = std::min(static_cast<double>(c[ch]) / k_max, 1.0);
      frame.rgb[i][ch] = static_cast<std::uint8_t>(std::floor(255.0 * ratio + 0.5));
    }
  }
  return frame;
}

TemporalMap temporal_map(const std::vector<TaggedEvent>& events, const TimeWindow& window,
                         int width, int height) {
  check_dims(width, height);
  TemporalMap map(width, height);
  map.window = window;
  for (const auto& e : events) {
    if (e.column == 0 || !window.contains(e.t) || !in_frame(e, width, height)) continue;
    map.index[static_cast<std::size_t>(e.y) * width + e.x] = e.column;
  }
  return map;
}

PointCloud build_point_cloud(const DepthFrame& depth, const ColorFrame& color,
                             const RectifiedRig& rig, const CameraIntrinsics& cam) {
  if (depth.width != color.width || depth.height != color.height) {
    throw DataError("depth and color frames differ in size");
  }
  if (depth.width != cam.width || depth.height != cam.height) {
    throw DataError("frames do not match the camera resolution");
  }
  const Eigen::Vector3d axis = rig.depth_axis();
  PointCloud cloud;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const double z = depth.at(x, y);
      if (!(z > 0.0)) continue;
      const Eigen::Vector3d d = cam.unproject({static_cast<double>(x), static_cast<double>(y)});
      const double along = d.dot(axis);
      if (!(along > 0.0)) continue;
      const Eigen::Vector3d p = d * (z / along);
      ColoredPoint pt{p.x(), p.y(), p.z()};
      const auto idx = color.index(x, y);
      if (color.mask[idx]) pt.color = color.rgb[idx];
      cloud.points.push_back(pt);
    }
  }
  return cloud;
}

std::vector<TimeWindow> frame_windows(std::uint64_t start, std::uint64_t end,
                                      std::uint64_t window_us) {
  if (window_us == 0) throw DataError("window length must be positive");
  std::vector<TimeWindow> out;
  for (std::uint64_t t0 = start; t0 <= end; t0 += window_us) {
    out.push_back({t0, t0 + window_us});
  }
  return out;
}

}  // namespace evsl
