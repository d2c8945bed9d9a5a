#pragma once

#include "evsl/geometry.hpp"
#include "evsl/patterns.hpp"
#include "evsl/scene.hpp"
#include "evsl/simulator.hpp"
#include "evsl/tagger.hpp"

namespace evsl::testing {

inline CalibrationBundle default_rig() { return CalibrationBundle{}; }

inline SceneModel plane_scene(double z, Albedo albedo = {1.0, 1.0, 1.0}) {
  SceneModel s;
  Plane p;
  p.point = {0.0, 0.0, z};
  p.normal = {0.0, 0.0, -1.0};
  p.albedo = albedo;
  s.primitives.emplace_back(p);
  return s;
}

inline SceneModel sphere_scene() {
  SceneModel s;
  s.primitives.emplace_back(Sphere{{0.0, 0.0, 1300.0}, 250.0, {1.0, 1.0, 1.0}});
  Plane back;
  back.point = {0.0, 0.0, 1800.0};
  s.background = back;
  return s;
}

/// Two boxes whose front faces sit at 1200 mm and 1400 mm over a 1700 mm wall.
inline SceneModel staircase_scene() {
  SceneModel s;
  Box near;
  near.min = {-400.0, -400.0, 1200.0};
  near.max = {0.0, 400.0, 1500.0};
  near.set_albedo({1.0, 1.0, 1.0});
  Box far;
  far.min = {0.0, -400.0, 1400.0};
  far.max = {400.0, 400.0, 1600.0};
  far.set_albedo({1.0, 1.0, 1.0});
  s.primitives.emplace_back(near);
  s.primitives.emplace_back(far);
  Plane back;
  back.point = {0.0, 0.0, 1700.0};
  s.background = back;
  return s;
}

inline PatternSequence line_sequence(int mode, int n, double blank = 0.0) {
  const auto depth = n > 0 ? generate_line_pattern(n, 2, Span{}) : PatternSet{};
  std::optional<PatternImage> color;
  if (mode == 1 || mode == 3) color = solid_pattern(Span{});
  return build_sequence(mode, depth, color, kDefaultExposureUs, blank);
}

inline TaggerConfig tagger_config_for(const NoiseConfig& noise, const PatternSequence& seq) {
  TaggerConfig c;
  c.event_delay = recommended_event_delay(noise.latency_mean, seq.exposure_us);
  return c;
}

}  // namespace evsl::testing
