#pragma once

#include <string_view>
#include <vector>

#include "evsl/frames.hpp"
#include "evsl/geometry.hpp"
#include "evsl/tagger.hpp"

namespace evsl {

enum class CombinePolicy { Last, Mean, Median };

CombinePolicy parse_policy(std::string_view name);
std::string_view to_string(CombinePolicy policy);

/// Depth per pixel from the depth-carrying events inside `window`.
DepthFrame accumulate_depth(const std::vector<TaggedEvent>& events, const TimeWindow& window,
                            CombinePolicy policy, int width, int height);

/// Color per pixel: 255 * min(count / k_max, 1) per channel, rounded half up.
ColorFrame accumulate_color(const std::vector<TaggedEvent>& events, const TimeWindow& window,
                            int k_max, int width, int height);

/// Column index of the latest depth event per pixel.
TemporalMap temporal_map(const std::vector<TaggedEvent>& events, const TimeWindow& window,
                         int width, int height);

/// Back-projects every nonzero depth pixel. Depth is measured along
/// rig.depth_axis(); colors come from `color` or default to white.
PointCloud build_point_cloud(const DepthFrame& depth, const ColorFrame& color,
                             const RectifiedRig& rig, const CameraIntrinsics& cam);

/// Fixed windows [start + kW, start + (k + 1)W) covering [start, end].
std::vector<TimeWindow> frame_windows(std::uint64_t start, std::uint64_t end,
                                      std::uint64_t window_us);

}  // namespace evsl
