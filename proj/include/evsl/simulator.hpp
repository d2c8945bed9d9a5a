#pragma once

#include <cstdint>
#include <vector>

#include "evsl/frames.hpp"
#include "evsl/geometry.hpp"
#include "evsl/patterns.hpp"
#include "evsl/scene.hpp"

namespace evsl {

enum class Polarity : std::uint8_t { Off = 0, On = 1 };
enum class Edge : std::uint8_t { Rising = 0, Falling = 1 };

struct EventRecord {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint64_t t = 0;
  Polarity polarity = Polarity::On;

  bool operator==(const EventRecord&) const = default;
};

struct TriggerRecord {
  std::uint64_t t = 0;
  Edge edge = Edge::Rising;

  bool operator==(const TriggerRecord&) const = default;
};

struct NoiseConfig {
  double background_rate = 0.0;  ///< events/s over the whole sensor
  double latency_mean = 200.0;   ///< us
  double latency_jitter = 50.0;  ///< us, uniform +/- jitter
  double drop_probability = 0.0;
  double bus_cap = 0.0;  ///< max events per millisecond, 0 = unlimited
  std::uint64_t seed = 1;

  void validate() const;

  static NoiseConfig noiseless() {
    NoiseConfig n;
    n.latency_jitter = 0.0;
    return n;
  }
};

struct EventStream {
  int width = 0;
  int height = 0;
  std::uint64_t start_time = 0;
  std::vector<EventRecord> events;
  std::vector<TriggerRecord> triggers;

  /// Throws DataError if either list is out of order or an event is out of bounds.
  void validate() const;
  /// Time of the last record (events or triggers), or start_time when empty.
  std::uint64_t end_time() const;

  bool operator==(const EventStream&) const = default;
};

struct SimulationOptions {
  int k_max = 4;
  int repetitions = 1;
  std::uint64_t start_time = 0;
  bool emit_off = true;
  int subsamples = 4;                ///< sub-rays per pixel axis
  double coverage_threshold = 0.375;  ///< lit share of a pixel needed to fire
};

/// Light transport from projector pixels to camera pixels.
///
/// Each camera pixel is sampled with S x S sub-rays. A sub-ray that reaches
/// an unshadowed surface point is credited to the projector pixel nearest to
/// that point's projection. A camera pixel fires for a pattern when the share
/// of its sub-rays landing on ON projector pixels reaches the coverage threshold.
/// Sub-rays only count when they land on the surface seen through the pixel
/// center (depth within kSurfaceTolerance), so silhouette pixels stay unmixed.
inline constexpr double kSurfaceTolerance = 0.005;

class IlluminationMap {
 public:
  IlluminationMap() = default;

  int width() const { return width_; }
  int height() const { return height_; }
  int projector_width() const { return projector_width_; }
  int projector_height() const { return projector_height_; }
  int samples_per_pixel() const { return subsamples_ * subsamples_; }

  /// Albedo seen through the pixel center ((0, 0, 0) on a miss).
  const Albedo& albedo(std::size_t pixel) const { return albedo_[pixel]; }

  /// Sub-ray hits per camera pixel landing on ON pixels of `pattern`.
  std::vector<std::uint16_t> coverage(const PatternImage& pattern) const;

  /// Camera pixels whose coverage reaches `threshold` * samples_per_pixel.
  std::vector<std::uint32_t> lit_pixels(const PatternImage& pattern, double threshold) const;

  friend IlluminationMap compute_illumination(const SceneModel&, const CameraIntrinsics&,
                                              const ProjectorModel&, const Extrinsics&, int);

 private:
  int width_ = 0;
  int height_ = 0;
  int projector_width_ = 0;
  int projector_height_ = 0;
  int subsamples_ = 1;
  std::vector<Albedo> albedo_;
  std::vector<std::uint32_t> offsets_;  ///< per projector pixel, into camera_
  std::vector<std::uint32_t> camera_;   ///< camera pixel per credited sub-ray
};

IlluminationMap compute_illumination(const SceneModel& scene, const CameraIntrinsics& cam,
                                     const ProjectorModel& proj, const Extrinsics& ext,
                                     int subsamples = 4);

/// Number of ON events a pixel fires for one entry under the count transfer model.
int events_per_entry(const SequenceEntry& entry, const Albedo& albedo, int k_max);

EventStream render_events(const SceneModel& scene, const CalibrationBundle& calib,
                          const PatternSequence& seq, const NoiseConfig& noise,
                          const SimulationOptions& options = {});

/// Same as render_events but reuses a precomputed illumination map.
EventStream render_events(const IlluminationMap& illum, const PatternSequence& seq,
                          const NoiseConfig& noise, const SimulationOptions& options = {});

/// First-hit depth per camera pixel along `axis` (camera frame), 0 where the
/// ray misses. Pass rig.depth_axis() to match rectified depth.
DepthFrame ground_truth_depth(const SceneModel& scene, const CameraIntrinsics& cam,
                              const Eigen::Vector3d& axis = Eigen::Vector3d::UnitZ());

/// First-hit albedo as round(255 * a); masked where the ray misses. With
/// k_max > 0 the albedo is first quantized to the k_max + 1 levels that the
/// event counts can express: round(255 * round(a * k_max) / k_max).
ColorFrame ground_truth_color(const SceneModel& scene, const CameraIntrinsics& cam, int k_max = 0);

/// 1 where some depth entry of `seq` makes the pixel fire.
std::vector<std::uint8_t> depth_support(const IlluminationMap& illum, const PatternSequence& seq,
                                        double coverage_threshold = 0.375);

/// Keeps only the pixels of `frame` flagged in `mask`.
DepthFrame masked(const DepthFrame& frame, const std::vector<std::uint8_t>& mask);

}  // namespace evsl
