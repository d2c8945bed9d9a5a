#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "evsl/errors.hpp"
#include "evsl/simulator.hpp"
#include "fixtures.hpp"

using namespace evsl;
using namespace evsl::testing;

namespace {

double ray_depth(const SceneModel& scene, const CameraIntrinsics& cam, int x, int y) {
  const auto hit = intersect(scene, cast_camera_ray(cam, {double(x), double(y)}));
  return hit ? hit->point.z() : 0.0;
}

}  // namespace

TEST(Scene, RayHitsPlaneSphereAndBox) {
  const Ray axis{};
  EXPECT_NEAR(intersect(plane_scene(1500.0), axis)->t, 1500.0, 1e-9);
  EXPECT_NEAR(intersect(sphere_scene(), axis)->t, 1050.0, 1e-9);
  const auto stairs = staircase_scene();
  const auto h = intersect(stairs, Ray{{}, Eigen::Vector3d(-0.1, 0.0, 1.0).normalized()});
  ASSERT_TRUE(h.has_value());
  EXPECT_NEAR(h->point.z(), 1200.0, 1e-9);
}

TEST(Scene, MissReturnsNothing) {
  const Ray away{{}, {0.0, 0.0, -1.0}};
  EXPECT_FALSE(intersect(plane_scene(1500.0), away).has_value());
}

TEST(Scene, BoxFaceAlbedo) {
  SceneModel s;
  Box b;
  b.min = {-10, -10, 100};
  b.max = {10, 10, 120};
  b.set_albedo({0.0, 0.0, 0.0});
  b.face_albedo[4] = {0.2, 0.4, 0.6};
  s.primitives.emplace_back(b);
  const auto h = intersect(s, Ray{});
  ASSERT_TRUE(h);
  EXPECT_DOUBLE_EQ(h->albedo[1], 0.4);
}

TEST(Scene, ValidateRejectsBadScenes) {
  EXPECT_THROW(SceneModel{}.validate(), DataError);
  EXPECT_THROW(plane_scene(1500.0, {1.2, 0.0, 0.0}).validate(), DataError);
  EXPECT_THROW(plane_scene(-100.0).validate(), DataError);
  const auto rig = default_rig();
  EXPECT_NO_THROW(staircase_scene().validate(&rig.extrinsics));
}

TEST(Scene, JsonRoundTrip) {
  auto s = staircase_scene();
  Plane chart;
  chart.point = {0, 0, 1000};
  chart.patches = PatchGrid{{-60, -40, 1000}, Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                            20.0, 6, 4, std::vector<Albedo>(24, Albedo{0.25, 0.5, 0.75})};
  s.primitives.emplace_back(chart);
  s.primitives.emplace_back(Sphere{{1, 2, 900}, 30.0, {0.1, 0.2, 0.3}});
  const auto text = scene_to_json(s);
  const auto back = parse_scene(text);
  EXPECT_EQ(scene_to_json(back), text);
}

TEST(Scene, ParserRejectsMalformedInput) {
  EXPECT_THROW(parse_scene("{"), FormatError);
  EXPECT_THROW(parse_scene(R"({"primitives":[{"type":"cone"}]})"), FormatError);
  EXPECT_THROW(parse_scene(R"({"primitives":[{"type":"sphere","center":[0,0,1]}]})"),
               FormatError);
  EXPECT_THROW(parse_scene(R"({"primitives":[{"type":"plane","point":[0,0]}]})"), FormatError);
}

TEST(RenderEvents, PlaneSingleLineLiesOnOneCurveAtTrueDepth) {
  const auto rig = default_rig();
  const auto scene = plane_scene(1500.0);
  const auto seq = line_sequence(2, 1);
  const auto stream = render_events(scene, rig, seq, NoiseConfig::noiseless());
  ASSERT_FALSE(stream.events.empty());

  std::map<int, std::set<int>> columns_per_row;
  for (const auto& e : stream.events) {
    columns_per_row[e.y].insert(e.x);
    EXPECT_NEAR(ray_depth(scene, rig.camera, e.x, e.y), 1500.0, 1e-6);
  }
  int lo = 1 << 30, hi = -1;
  for (const auto& [row, xs] : columns_per_row) {
    EXPECT_LE(*xs.rbegin() - *xs.begin(), 1) << "row " << row;
    lo = std::min(lo, *xs.begin());
    hi = std::max(hi, *xs.rbegin());
  }
  EXPECT_LE(hi - lo, 2);
}

TEST(RenderEvents, ColorCountsFollowAlbedo) {
  const auto rig = default_rig();
  const auto seq = line_sequence(1, 0);
  SimulationOptions opt;
  opt.emit_off = false;
  const auto stream = render_events(plane_scene(1500.0, {1.0, 0.5, 0.0}), rig, seq,
                                    NoiseConfig::noiseless(), opt);

  const auto onsets = entry_onsets(seq);
  std::map<std::pair<int, int>, std::array<int, 3>> counts;
  const double latency = NoiseConfig::noiseless().latency_mean;
  for (const auto& e : stream.events) {
    const double t = e.t - latency;
    int entry = 0;
    for (std::size_t i = 0; i < onsets.size(); ++i) {
      if (t >= onsets[i]) entry = static_cast<int>(i);
    }
    ASSERT_GE(entry, 1);
    ++counts[{e.x, e.y}][static_cast<std::size_t>(entry - 1)];
  }
  ASSERT_FALSE(counts.empty());
  for (const auto& [px, c] : counts) {
    EXPECT_EQ(c[0], 4);
    EXPECT_EQ(c[1], 2);
    EXPECT_EQ(c[2], 0);
  }
}

TEST(RenderEvents, BusCapBoundsEveryMillisecond) {
  NoiseConfig noise;
  noise.bus_cap = 100;
  noise.background_rate = 2e6;
  const auto stream =
      render_events(plane_scene(1500.0), default_rig(), line_sequence(2, 23), noise);
  std::map<std::uint64_t, int> buckets;
  for (const auto& e : stream.events) ++buckets[e.t / 1000];
  ASSERT_FALSE(buckets.empty());
  for (const auto& [b, n] : buckets) EXPECT_LE(n, 100) << "bucket " << b;
}

TEST(RenderEvents, DeterministicForSeed) {
  NoiseConfig noise;
  noise.background_rate = 1e5;
  noise.drop_probability = 0.1;
  noise.seed = 42;
  const auto rig = default_rig();
  const auto seq = line_sequence(3, 23);
  const auto a = render_events(sphere_scene(), rig, seq, noise);
  const auto b = render_events(sphere_scene(), rig, seq, noise);
  EXPECT_EQ(a, b);
  noise.seed = 43;
  EXPECT_NE(a, render_events(sphere_scene(), rig, seq, noise));
}

TEST(RenderEvents, TriggersMatchEntries) {
  const auto seq = line_sequence(4, 23, 11.142857);
  SimulationOptions opt;
  opt.repetitions = 2;
  opt.start_time = 1000;
  const auto stream =
      render_events(plane_scene(1500.0), default_rig(), seq, NoiseConfig::noiseless(), opt);
  ASSERT_EQ(stream.triggers.size(), 2 * 2 * seq.entries.size());
  for (std::size_t i = 0; i < stream.triggers.size(); i += 2) {
    EXPECT_EQ(stream.triggers[i].edge, Edge::Rising);
    EXPECT_EQ(stream.triggers[i + 1].edge, Edge::Falling);
    const auto& entry = seq.entries[(i / 2) % seq.entries.size()];
    EXPECT_EQ(stream.triggers[i + 1].t - stream.triggers[i].t, entry.exposure_us);
  }
  EXPECT_EQ(stream.triggers.front().t, 1000u);
  EXPECT_NO_THROW(stream.validate());
}

TEST(RenderEvents, EntriesStayOrderedWithJitter) {
  const auto seq = line_sequence(2, 23);
  NoiseConfig noise;
  SimulationOptions opt;
  opt.emit_off = false;
  const auto stream = render_events(plane_scene(1500.0), default_rig(), seq, noise, opt);
  const auto onsets = entry_onsets(seq);
  // Each event comes from the entry whose window [onset+150, onset+250] contains it.
  for (const auto& e : stream.events) {
    int owners = 0;
    for (double o : onsets) owners += (e.t >= o + 150 && e.t <= o + 250) ? 1 : 0;
    EXPECT_EQ(owners, 1);
  }
}

TEST(RenderEvents, EmptyWhenNothingVisible) {
  SceneModel s;
  s.primitives.emplace_back(Sphere{{5000.0, 0.0, 1500.0}, 10.0, {1, 1, 1}});
  const auto stream =
      render_events(s, default_rig(), line_sequence(2, 23), NoiseConfig::noiseless());
  EXPECT_TRUE(stream.events.empty());
  EXPECT_EQ(stream.triggers.size(), 48u);
}

TEST(RenderEvents, OccludedPointsStayDark) {
  // A thin post close to the projector shadows part of the wall behind it.
  SceneModel s = plane_scene(1500.0);
  Box post;
  post.min = {-180.0, -500.0, 400.0};
  post.max = {-160.0, 500.0, 420.0};
  post.set_albedo({1, 1, 1});
  s.primitives.emplace_back(post);
  const auto rig = default_rig();
  const auto illum = compute_illumination(s, rig.camera, rig.projector, rig.extrinsics);
  PatternImage white(rig.projector.intrinsics.width, rig.projector.intrinsics.height);
  for (int y = 0; y < white.height(); ++y) {
    for (int x = 0; x < white.width(); ++x) white.set(x, y);
  }
  const auto cover = illum.coverage(white);
  const Eigen::Vector3d c = rig.extrinsics.projector_center();
  const auto shadowed = [&](double x, double y) {
    const auto hit = intersect(s, cast_camera_ray(rig.camera, {x, y}));
    if (hit->point.z() < 1499.0) return false;
    const Eigen::Vector3d d = hit->point - c;
    return intersect(s, Ray{c, d.normalized()})->t < d.norm() - 1e-3;
  };
  const auto in_beam = [&](int x, int y) {
    for (double dx : {-0.5, 0.5}) {
      for (double dy : {-0.5, 0.5}) {
        const auto hit = intersect(s, cast_camera_ray(rig.camera, {x + dx, y + dy}));
        if (hit->point.z() < 1499.0) return false;
        const auto uv = rig.projector.intrinsics.project(rig.extrinsics.rotation * hit->point +
                                                         rig.extrinsics.translation);
        if (uv.x < 1.0 || uv.y < 1.0 || uv.x > 910.0 || uv.y > 1138.0) return false;
      }
    }
    return true;
  };
  std::size_t dark = 0;
  for (int y = 1; y < rig.camera.height - 1; y += 3) {
    for (int x = 1; x < rig.camera.width - 1; x += 3) {
      const bool all = shadowed(x - 0.5, y) && shadowed(x + 0.5, y) && shadowed(x, y);
      const bool none = !shadowed(x - 0.5, y) && !shadowed(x + 0.5, y) && !shadowed(x, y);
      const auto got = cover[std::size_t(y) * illum.width() + x];
      if (all) {
        EXPECT_EQ(got, 0) << x << "," << y;
        ++dark;
      } else if (none && in_beam(x, y)) {
        EXPECT_EQ(got, illum.samples_per_pixel()) << x << "," << y;
      }
    }
  }
  EXPECT_GT(dark, 100u);
}

TEST(RenderEvents, RejectsInvalidInput) {
  NoiseConfig noise;
  noise.drop_probability = 1.5;
  EXPECT_THROW(render_events(plane_scene(1500), default_rig(), line_sequence(2, 3), noise),
               DataError);
  auto rig = default_rig();
  rig.extrinsics.translation = Eigen::Vector3d::Zero();
  rig.camera.focal_x = -1;
  EXPECT_THROW(render_events(plane_scene(1500), rig, line_sequence(2, 3), NoiseConfig{}),
               GeometryError);
}

TEST(GroundTruth, PlaneReadsConstantDepth) {
  const auto gt = ground_truth_depth(plane_scene(1500.0), default_rig().camera);
  for (double d : gt.depth) EXPECT_NEAR(d, 1500.0, 1e-9);
}

TEST(GroundTruth, SphereCenterPixel) {
  CameraIntrinsics cam;
  cam.principal_x = 320;
  cam.principal_y = 240;
  SceneModel s;
  s.primitives.emplace_back(Sphere{{0, 0, 1300}, 250.0, {1, 1, 1}});
  const auto gt = ground_truth_depth(s, cam);
  EXPECT_NEAR(gt.at(320, 240), 1050.0, 1e-9);
  EXPECT_EQ(gt.at(0, 0), 0.0);
}

TEST(GroundTruth, StaircaseHasTwoPlateaus) {
  const auto cam = default_rig().camera;
  const auto gt = ground_truth_depth(staircase_scene(), cam);
  // Independent construction: the box fronts cover |y| <= 400 at their own depth.
  std::size_t near = 0, far = 0;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const double nx = (x - cam.principal_x) / cam.focal_x;
      const double ny = (y - cam.principal_y) / cam.focal_y;
      double expect = 1700.0;
      if (nx * 1200.0 >= -400.0 && nx <= 0.0 && std::abs(ny * 1200.0) <= 400.0) {
        expect = 1200.0;
      } else if (nx >= 0.0 && nx * 1400.0 <= 400.0 && std::abs(ny * 1400.0) <= 400.0) {
        expect = 1400.0;
      }
      if (std::abs(gt.at(x, y) - expect) > 1e-6) {
        // Rays grazing a face edge may land either side of it.
        EXPECT_TRUE(std::abs(nx) < 2e-3 || std::abs(std::abs(ny * expect) - 400.0) < 3.0)
            << x << "," << y << " got " << gt.at(x, y) << " want " << expect;
        continue;
      }
      near += expect == 1200.0;
      far += expect == 1400.0;
    }
  }
  EXPECT_GT(near, 1000u);
  EXPECT_GT(far, 1000u);
}

TEST(GroundTruth, WhitePlaneColor) {
  const auto gt = ground_truth_color(plane_scene(1500.0), default_rig().camera);
  for (std::size_t i = 0; i < gt.rgb.size(); ++i) {
    ASSERT_TRUE(gt.mask[i]);
    EXPECT_EQ(gt.rgb[i], (Rgb8{255, 255, 255}));
  }
}

TEST(GroundTruth, SplitPlaneTwoRegions) {
  Plane p;
  p.point = {0, 0, 1000};
  p.patches = PatchGrid{{-4000, -2000, 1000}, Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                        4000.0, 2, 1, {{1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}}};
  SceneModel s;
  s.primitives.emplace_back(p);
  const auto cam = default_rig().camera;
  const auto gt = ground_truth_color(s, cam);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Rgb8 want = x < cam.principal_x ? Rgb8{255, 0, 0} : Rgb8{0, 0, 255};
      EXPECT_EQ(gt.rgb[gt.index(x, y)], want);
    }
  }
}

TEST(GroundTruth, ChartPatchesMatchConstruction) {
  std::vector<Albedo> albedo;
  for (int i = 0; i < 24; ++i) {
    albedo.push_back({(i % 5) / 4.0, ((i / 5) % 5) / 4.0, ((i * 7) % 5) / 4.0});
  }
  Plane chart;
  chart.point = {0, 0, 1000};
  chart.albedo = {0, 0, 0};
  chart.patches = PatchGrid{{-300, -200, 1000}, Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                            100.0, 6, 4, albedo};
  SceneModel s;
  s.primitives.emplace_back(chart);
  const auto cam = default_rig().camera;
  const auto gt = ground_truth_color(s, cam);
  for (int i = 0; i < 24; ++i) {
    const int col = i % 6, row = i / 6;
    // Patch center in pixels.
    const int px = static_cast<int>(std::lround(cam.principal_x + (-250.0 + 100.0 * col) * 0.6));
    const int py = static_cast<int>(std::lround(cam.principal_y + (-150.0 + 100.0 * row) * 0.6));
    const auto& got = gt.rgb[gt.index(px, py)];
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(got[c], static_cast<int>(std::lround(albedo[i][c] * 255.0))) << "patch " << i;
    }
  }
}

TEST(GroundTruth, DepthSupportCoversLitPixelsOnly) {
  const auto rig = default_rig();
  const auto illum = compute_illumination(plane_scene(1500.0), rig.camera, rig.projector,
                                          rig.extrinsics);
  const auto mask = depth_support(illum, line_sequence(3, 23));
  SimulationOptions opt;
  opt.emit_off = false;
  const auto stream = render_events(illum, line_sequence(2, 23), NoiseConfig::noiseless(), opt);
  std::set<std::size_t> hit;
  for (const auto& e : stream.events) hit.insert(std::size_t(e.y) * illum.width() + e.x);
  std::size_t on = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    EXPECT_EQ(mask[i] != 0, hit.count(i) == 1);
    on += mask[i];
  }
  EXPECT_GT(on, 0u);
}

TEST(Illumination, EveryLineReachesEveryRowOfAPlane) {
  const auto rig = default_rig();
  const auto illum = compute_illumination(plane_scene(1500.0), rig.camera, rig.projector,
                                          rig.extrinsics);
  const auto set = generate_line_pattern(45, 2, Span{});
  for (const auto& pattern : set.patterns) {
    std::vector<int> per_row(rig.camera.height, 0);
    for (auto p : illum.lit_pixels(pattern, 0.375)) ++per_row[p / illum.width()];
    for (int y = 0; y < rig.camera.height; ++y) {
      ASSERT_GE(per_row[y], 1) << "row " << y;
      ASSERT_LE(per_row[y], 2) << "row " << y;
    }
  }
}
