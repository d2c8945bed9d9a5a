#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evsl/frames.hpp"

namespace evsl {

struct MetricsReport {
  double fill_rate = 0.0;  ///< percent
  double rmse = 0.0;
  double psnr = 0.0;  ///< dB, +inf for a perfect match
  std::size_t pixel_count_evaluated = 0;
  std::uint64_t window = 0;  ///< us

  std::string to_json() const;
  std::string to_text() const;
};

/// 100 * |frame and gt data| / |gt data|. Throws DataError on an empty gt.
double fill_rate(const DepthFrame& frame, const DepthFrame& gt);

/// RMS difference over pixels where both frames carry data.
double rmse(const DepthFrame& frame, const DepthFrame& gt);

/// Pixels where both frames carry data.
std::size_t overlap_count(const DepthFrame& frame, const DepthFrame& gt);

/// RMS difference over all channels of pixels valid in both frames.
double color_rmse(const ColorFrame& frame, const ColorFrame& gt);

/// 20 log10(255 / rmse) with the MSE averaged across channels; +inf at rmse 0.
double psnr(const ColorFrame& frame, const ColorFrame& gt);

/// Per-pixel mean over the scans that carry data there.
DepthFrame average_ground_truth(const std::vector<DepthFrame>& scans);

MetricsReport evaluate_depth(const DepthFrame& frame, const DepthFrame& gt);

}  // namespace evsl
