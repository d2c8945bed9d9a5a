#include "evsl/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "evsl/errors.hpp"

namespace evsl {

void NoiseConfig::validate() const {
  if (!(background_rate >= 0.0) || !(latency_mean >= 0.0) || !(latency_jitter >= 0.0) ||
      !(bus_cap >= 0.0)) {
    throw DataError("noise parameters must be non-negative");
  }
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) {
    throw DataError("drop_probability must lie in [0, 1]");
  }
}

void EventStream::validate() const {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.x >= width || e.y >= height) throw DataError("event outside sensor bounds");
    if (i > 0 && e.t < events[i - 1].t) throw DataError("events are not time-ordered");
  }
  for (std::size_t i = 1; i < triggers.size(); ++i) {
    if (triggers[i].t < triggers[i - 1].t) throw DataError("triggers are not time-ordered");
  }
}

std::uint64_t EventStream::end_time() const {
  std::uint64_t t = start_time;
  if (!events.empty()) t = std::max(t, events.back().t);
  if (!triggers.empty()) t = std::max(t, triggers.back().t);
  return t;
}

IlluminationMap compute_illumination(const SceneModel& scene, const CameraIntrinsics& cam,
                                     const ProjectorModel& proj, const Extrinsics& ext,
                                     int subsamples) {
  cam.validate();
  proj.validate();
  ext.validate();
  if (subsamples < 1 || subsamples > 16) throw DataError("subsamples must lie in [1, 16]");

  IlluminationMap map;
  map.width_ = cam.width;
  map.height_ = cam.height;
  map.projector_width_ = proj.intrinsics.width;
  map.projector_height_ = proj.intrinsics.height;
  map.subsamples_ = subsamples;
  map.albedo_.assign(static_cast<std::size_t>(cam.width) * cam.height, Albedo{0.0, 0.0, 0.0});

  const Eigen::Vector3d center = ext.projector_center();
  const int pw = proj.intrinsics.width;
  const int ph = proj.intrinsics.height;
  const auto proj_count = static_cast<std::size_t>(pw) * ph;

  // (projector pixel, camera pixel) per credited sub-ray, bucketed afterwards.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> credits;
  credits.reserve(map.albedo_.size() * static_cast<std::size_t>(subsamples) * subsamples / 2);

  const auto credit = [&](double px, double py, std::uint32_t pixel, double center_z) {
    const Ray ray{Eigen::Vector3d::Zero(), cam.unproject({px, py}).normalized()};
    const auto hit = intersect(scene, ray);
    if (!hit || std::abs(hit->point.z() - center_z) > kSurfaceTolerance * center_z) return;
    const Eigen::Vector3d in_proj = ext.rotation * hit->point + ext.translation;
    if (!(in_proj.z() > 0.0)) return;
    const Eigen::Vector3d to_point = hit->point - center;
    const double dist = to_point.norm();
    const auto blocker = intersect(scene, Ray{center, to_point / dist});
    if (blocker && blocker->t < dist - (1e-6 * dist + 1e-6)) return;
    const PixelCoord uv = proj.intrinsics.project(in_proj);
    const long iu = std::lround(uv.x);
    const long iv = std::lround(uv.y);
    if (iu < 0 || iv < 0 || iu >= pw || iv >= ph) return;
    credits.emplace_back(static_cast<std::uint32_t>(iv * pw + iu), pixel);
  };

  const double step = 1.0 / subsamples;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const auto pixel = static_cast<std::uint32_t>(y * cam.width + x);
      const auto hit = intersect(scene, cast_camera_ray(cam, {double(x), double(y)}));
      if (!hit) continue;
      map.albedo_[pixel] = hit->albedo;
      for (int j = 0; j < subsamples; ++j) {
        for (int i = 0; i < subsamples; ++i) {
          credit(x - 0.5 + (i + 0.5) * step, y - 0.5 + (j + 0.5) * step, pixel, hit->point.z());
        }
      }
    }
  }

  map.offsets_.assign(proj_count + 1, 0);
  for (const auto& c : credits) ++map.offsets_[c.first + 1];
  for (std::size_t i = 0; i < proj_count; ++i) map.offsets_[i + 1] += map.offsets_[i];
  map.camera_.resize(credits.size());
  std::vector<std::uint32_t> fill(map.offsets_.begin(), map.offsets_.end() - 1);
  for (const auto& c : credits) map.camera_[fill[c.first]++] = c.second;
  return map;
}

std::vector<std::uint16_t> IlluminationMap::coverage(const PatternImage& pattern) const {
  if (pattern.width() != projector_width_ || pattern.height() != projector_height_) {
    throw PatternError("pattern does not match the projector grid");
  }
  std::vector<std::uint16_t> count(albedo_.size(), 0);
  const auto& bits = pattern.bits();
  for (std::size_t p = 0; p < bits.size(); ++p) {
    if (!bits[p]) continue;
    for (std::uint32_t k = offsets_[p]; k < offsets_[p + 1]; ++k) ++count[camera_[k]];
  }
  return count;
}

std::vector<std::uint32_t> IlluminationMap::lit_pixels(const PatternImage& pattern,
                                                       double threshold) const {
  const auto count = coverage(pattern);
  const double need = std::max(1.0, std::ceil(threshold * samples_per_pixel() - 1e-9));
  std::vector<std::uint32_t> lit;
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (count[i] >= need) lit.push_back(static_cast<std::uint32_t>(i));
  }
  return lit;
}

int events_per_entry(const SequenceEntry& entry, const Albedo& albedo, int k_max) {
  if (entry.role == Role::Id) return 0;
  if (entry.channel == Channel::None) return k_max;
  const double a = albedo[static_cast<std::size_t>(entry.channel) - 1];
  return static_cast<int>(std::lround(std::clamp(a, 0.0, 1.0) * k_max));
}

namespace {

void apply_bus_cap(std::vector<EventRecord>& events, double cap, std::uint64_t start,
                   std::mt19937_64& rng) {
  if (cap <= 0.0 || events.empty()) return;
  const auto limit = static_cast<std::size_t>(std::floor(cap));
  std::vector<EventRecord> kept;
  kept.reserve(events.size());
  std::size_t begin = 0;
  std::vector<std::size_t> order;
  while (begin < events.size()) {
    const std::uint64_t bucket = (events[begin].t - std::min(events[begin].t, start)) / 1000;
    std::size_t end = begin;
    while (end < events.size() &&
           (events[end].t - std::min(events[end].t, start)) / 1000 == bucket) {
      ++end;
    }
    const std::size_t n = end - begin;
    if (n <= limit) {
      kept.insert(kept.end(), events.begin() + static_cast<std::ptrdiff_t>(begin),
                  events.begin() + static_cast<std::ptrdiff_t>(end));
    } else {
      order.resize(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      order.resize(limit);
      std::sort(order.begin(), order.end());
      for (std::size_t i : order) kept.push_back(events[begin + i]);
    }
    begin = end;
  }
  events = std::move(kept);
}

}  // namespace

EventStream render_events(const IlluminationMap& illum, const PatternSequence& seq,
                          const NoiseConfig& noise, const SimulationOptions& options) {
  noise.validate();
  if (seq.entries.empty()) throw PatternError("sequence has no entries");
  if (options.k_max < 1 || options.repetitions < 1) {
    throw DataError("k_max and repetitions must be positive");
  }

  EventStream stream;
  stream.width = illum.width();
  stream.height = illum.height();
  stream.start_time = options.start_time;

  std::mt19937_64 rng(noise.seed);
  std::uniform_real_distribution<double> jitter(-noise.latency_jitter, noise.latency_jitter);
  const auto latency = [&]() {
    return noise.latency_jitter > 0.0 ? noise.latency_mean + jitter(rng) : noise.latency_mean;
  };
  const auto emit = [&](std::size_t pixel, double t, Polarity pol) {
    const auto w = static_cast<std::size_t>(illum.width());
    stream.events.push_back({static_cast<std::uint16_t>(pixel % w),
                             static_cast<std::uint16_t>(pixel / w),
                             static_cast<std::uint64_t>(std::max(0.0, std::round(t))), pol});
  };

  std::vector<std::vector<std::uint32_t>> lit(seq.patterns.size());
  std::vector<bool> done(seq.patterns.size(), false);
  for (const auto& entry : seq.entries) {
    if (entry.role == Role::Id || done[entry.pattern]) continue;
    lit[entry.pattern] = illum.lit_pixels(seq.pattern_of(entry), options.coverage_threshold);
    done[entry.pattern] = true;
  }

  const auto onsets = entry_onsets(seq);
  const double span = sequence_span(seq);
  const auto base = static_cast<double>(options.start_time);
  for (int rep = 0; rep < options.repetitions; ++rep) {
    for (std::size_t e = 0; e < seq.entries.size(); ++e) {
      const auto& entry = seq.entries[e];
      const double onset = base + rep * span + onsets[e];
      const auto rising = static_cast<std::uint64_t>(std::llround(onset));
      stream.triggers.push_back({rising, Edge::Rising});
      stream.triggers.push_back({rising + entry.exposure_us, Edge::Falling});
      if (entry.role == Role::Id) continue;

      for (std::uint32_t pixel : lit[entry.pattern]) {
        const int k = events_per_entry(entry, illum.albedo(pixel), options.k_max);
        for (int i = 0; i < k; ++i) emit(pixel, onset + latency(), Polarity::On);
        if (options.emit_off) {
          for (int i = 0; i < k; ++i) emit(pixel, onset + entry.exposure_us + latency(), Polarity::Off);
        }
      }
    }
  }

  if (noise.background_rate > 0.0) {
    const double t_end = base + options.repetitions * span + noise.latency_mean +
                         noise.latency_jitter;
    const double duration = t_end - base;
    std::poisson_distribution<std::uint64_t> count(noise.background_rate * duration * 1e-6);
    std::uniform_real_distribution<double> when(base, t_end);
    std::uniform_int_distribution<std::size_t> where(
        0, static_cast<std::size_t>(illum.width()) * illum.height() - 1);
    std::bernoulli_distribution on(0.5);
    const std::uint64_t n = count(rng);
    for (std::uint64_t i = 0; i < n; ++i) {
      const double t = when(rng);
      const std::size_t pixel = where(rng);
      emit(pixel, t, on(rng) ? Polarity::On : Polarity::Off);
    }
  }

  if (noise.drop_probability > 0.0) {
    std::bernoulli_distribution drop(noise.drop_probability);
    std::vector<EventRecord> kept;
    kept.reserve(stream.events.size());
    for (const auto& ev : stream.events) {
      if (!drop(rng)) kept.push_back(ev);
    }
    stream.events = std::move(kept);
  }

  std::stable_sort(stream.events.begin(), stream.events.end(),
                   [](const EventRecord& a, const EventRecord& b) { return a.t < b.t; });
  apply_bus_cap(stream.events, noise.bus_cap, options.start_time, rng);
  return stream;
}

EventStream render_events(const SceneModel& scene, const CalibrationBundle& calib,
                          const PatternSequence& seq, const NoiseConfig& noise,
                          const SimulationOptions& options) {
  scene.validate(&calib.extrinsics);
  const auto illum = compute_illumination(scene, calib.camera, calib.projector, calib.extrinsics,
                                          options.subsamples);
  return render_events(illum, seq, noise, options);
}

DepthFrame ground_truth_depth(const SceneModel& scene, const CameraIntrinsics& cam,
                              const Eigen::Vector3d& axis) {
  cam.validate();
  DepthFrame frame(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const auto hit =
          intersect(scene, cast_camera_ray(cam, {static_cast<double>(x), static_cast<double>(y)}));
      if (hit) frame.at(x, y) = std::max(0.0, hit->point.dot(axis));
    }
  }
  return frame;
}

ColorFrame ground_truth_color(const SceneModel& scene, const CameraIntrinsics& cam, int k_max) {
  cam.validate();
  if (k_max < 0) throw DataError("k_max must be non-negative");
  ColorFrame frame(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const auto hit =
          intersect(scene, cast_camera_ray(cam, {static_cast<double>(x), static_cast<double>(y)}));
      if (!hit) continue;
      const auto idx = frame.index(x, y);
      for (std::size_t c = 0; c < 3; ++c) {
        const double a = std::clamp(hit->albedo[c], 0.0, 1.0);
        const double level =
            k_max > 0 ? static_cast<double>(std::lround(a * k_max)) / k_max : a;
        frame.rgb[idx][c] = static_cast<std::uint8_t>(std::floor(level * 255.0 + 0.5));
      }
      frame.mask[idx] = 1;
    }
  }
  return frame;
}

std::vector<std::uint8_t> depth_support(const IlluminationMap& illum, const PatternSequence& seq,
                                        double coverage_threshold) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(illum.width()) * illum.height(), 0);
  std::vector<bool> done(seq.patterns.size(), false);
  for (const auto& e : seq.entries) {
    if (e.role != Role::Depth || done[e.pattern]) continue;
    done[e.pattern] = true;
    for (std::uint32_t p : illum.lit_pixels(seq.patterns[e.pattern], coverage_threshold)) {
      mask[p] = 1;
    }
  }
  return mask;
}

DepthFrame masked(const DepthFrame& frame, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != frame.depth.size()) throw DataError("mask size does not match frame");
  DepthFrame out = frame;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) out.depth[i] = 0.0;
  }
  return out;
}

}  // namespace evsl
