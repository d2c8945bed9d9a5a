#include "evsl/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "evsl/errors.hpp"

namespace evsl {

namespace {

void same_dims(int w0, int h0, int w1, int h1) {
  if (w0 != w1 || h0 != h1) throw DataError("frame dimensions differ");
}

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

double fill_rate(const DepthFrame& frame, const DepthFrame& gt) {
  same_dims(frame.width, frame.height, gt.width, gt.height);
  std::size_t gt_count = 0;
  std::size_t both = 0;
  for (std::size_t i = 0; i < gt.depth.size(); ++i) {
    if (gt.depth[i] == 0.0) continue;
    ++gt_count;
    if (frame.depth[i] != 0.0) ++both;
  }
  if (gt_count == 0) throw DataError("ground truth has no data pixels");
  return 100.0 * static_cast<double>(both) / static_cast<double>(gt_count);
}

std::size_t overlap_count(const DepthFrame& frame, const DepthFrame& gt) {
  same_dims(frame.width, frame.height, gt.width, gt.height);
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.depth.size(); ++i) {
    if (gt.depth[i] != 0.0 && frame.depth[i] != 0.0) ++n;
  }
  return n;
}

double rmse(const DepthFrame& frame, const DepthFrame& gt) {
  same_dims(frame.width, frame.height, gt.width, gt.height);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.depth.size(); ++i) {
    if (gt.depth[i] == 0.0 || frame.depth[i] == 0.0) continue;
    const double d = frame.depth[i] - gt.depth[i];
    sum += d * d;
    ++n;
  }
  if (n == 0) throw DataError("no overlapping data pixels");
  return std::sqrt(sum / static_cast<double>(n));
}

double color_rmse(const ColorFrame& frame, const ColorFrame& gt) {
  same_dims(frame.width, frame.height, gt.width, gt.height);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.rgb.size(); ++i) {
    if (!gt.mask[i] || !frame.mask[i]) continue;
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = static_cast<double>(frame.rgb[i][c]) - gt.rgb[i][c];
      sum += d * d;
    }
    ++n;
  }
  if (n == 0) throw DataError("no overlapping valid pixels");
  return std::sqrt(sum / (3.0 * static_cast<double>(n)));
}

double psnr(const ColorFrame& frame, const ColorFrame& gt) {
  const double e = color_rmse(frame, gt);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(255.0 / e);
}

DepthFrame average_ground_truth(const std::vector<DepthFrame>& scans) {
  if (scans.empty()) throw DataError("no scans to average");
  const auto& first = scans.front();
  for (const auto& s : scans) same_dims(first.width, first.height, s.width, s.height);
  DepthFrame out(first.width, first.height);
  out.window = first.window;
  std::vector<std::uint32_t> n(out.depth.size(), 0);
  for (const auto& s : scans) {
    for (std::size_t i = 0; i < s.depth.size(); ++i) {
      if (s.depth[i] == 0.0) continue;
      out.depth[i] += s.depth[i];
      ++n[i];
    }
    out.window.t0 = std::min(out.window.t0, s.window.t0);
    out.window.t1 = std::max(out.window.t1, s.window.t1);
  }
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] > 0) out.depth[i] /= n[i];
  }
  return out;
}

MetricsReport evaluate_depth(const DepthFrame& frame, const DepthFrame& gt) {
  MetricsReport r;
  r.fill_rate = fill_rate(frame, gt);
  r.pixel_count_evaluated = overlap_count(frame, gt);
  r.rmse = r.pixel_count_evaluated > 0 ? rmse(frame, gt) : 0.0;
  r.window = frame.window.length();
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["fill_rate"] = fill_rate;
  j["rmse"] = rmse;
  if (std::isfinite(psnr)) {
    j["psnr"] = psnr;
  } else {
    j["psnr"] = number(psnr);
  }
  j["pixel_count_evaluated"] = pixel_count_evaluated;
  j["window"] = window;
  return j.dump(2);
}

std::string MetricsReport::to_text() const {
  std::ostringstream os;
  os << "fill_rate: " << number(fill_rate) << "\n"
     << "rmse: " << number(rmse) << "\n"
     << "psnr: " << number(psnr) << "\n"
     << "pixel_count_evaluated: " << pixel_count_evaluated << "\n"
     << "window: " << window << "\n";
  return os.str();
}

}  // namespace evsl
