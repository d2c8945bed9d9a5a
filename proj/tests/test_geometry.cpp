#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <thread>

#include "evsl/errors.hpp"
#include "evsl/geometry.hpp"

using namespace evsl;

namespace {

CameraIntrinsics pinhole() { return {600.0, 600.0, 319.5, 239.5, {0.0, 0.0}, 640, 480}; }

ProjectorModel projector_like(const CameraIntrinsics& cam) {
  ProjectorModel p;
  p.native_width = cam.width;
  p.native_height = cam.height;
  p.diamond_layout = false;
  p.intrinsics = cam;
  return p;
}

Extrinsics rotated_rig(double yaw_deg) {
  Extrinsics e;
  e.rotation = Eigen::AngleAxisd(yaw_deg * M_PI / 180.0, Eigen::Vector3d::UnitY()).toRotationMatrix();
  e.translation = {100.0, 0.0, 0.0};
  return e;
}

// Point projected through the original (unrectified) models, then through the
// rectifying homographies. Independent of the dense tables.
PixelCoord via_homography_cam(const RectifiedRig& rig, const CameraIntrinsics& cam,
                              const Eigen::Vector3d& p) {
  return apply_homography(rig.camera_homography, cam.project(p));
}

PixelCoord via_homography_proj(const RectifiedRig& rig, const ProjectorModel& proj,
                               const Extrinsics& ext, const Eigen::Vector3d& p) {
  return apply_homography(rig.projector_homography,
                          proj.intrinsics.project(ext.rotation * p + ext.translation));
}

}  // namespace

TEST(Rectification, IdentityRigYieldsIdentityMaps) {
  const auto cam = pinhole();
  const auto proj = projector_like(cam);
  Extrinsics ext;
  ext.translation = {100.0, 0.0, 0.0};
  const auto r = build_rectification(cam, proj, ext);
  EXPECT_DOUBLE_EQ(r.rig.baseline, 100.0);
  EXPECT_DOUBLE_EQ(r.rig.focal, 600.0);
  for (int y = 0; y < cam.height; y += 7) {
    for (int x = 0; x < cam.width; x += 5) {
      const auto c = r.lut.camera_at(x, y);
      EXPECT_NEAR(c.x, x, 1e-9);
      EXPECT_NEAR(c.y, y, 1e-9);
      const auto p = r.lut.projector({double(x), double(y)});
      EXPECT_NEAR(p.x, x, 1e-9);
      EXPECT_NEAR(p.y, y, 1e-9);
    }
  }
}

TEST(Rectification, RotatedRigAlignsRowsOfFrontoParallelGrid) {
  const auto cam = pinhole();
  const auto proj = projector_like(cam);
  const auto ext = rotated_rig(2.0);
  const auto r = build_rectification(cam, proj, ext);
  int checked = 0;
  for (double X = -400; X <= 400; X += 50) {
    for (double Y = -300; Y <= 300; Y += 50) {
      const Eigen::Vector3d p{X, Y, 1500.0};
      const auto pc = cam.project(p);
      const auto pp = proj.intrinsics.project(ext.rotation * p + ext.translation);
      if (!cam.contains(pc.x, pc.y) || !proj.intrinsics.contains(pp.x, pp.y)) continue;
      const auto rc = via_homography_cam(r.rig, cam, p);
      const auto rp = via_homography_proj(r.rig, proj, ext, p);
      EXPECT_NEAR(rc.y, rp.y, 0.1);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Rectification, DegenerateExtrinsicsAreRejected) {
  const auto cam = pinhole();
  const auto proj = projector_like(cam);
  Extrinsics zero;
  zero.translation = Eigen::Vector3d::Zero();
  EXPECT_THROW(build_rectification(cam, proj, zero), GeometryError);

  Extrinsics skew;
  skew.rotation(0, 1) = 0.01;
  EXPECT_THROW(build_rectification(cam, proj, skew), GeometryError);

  Extrinsics vertical;
  vertical.translation = {10.0, 100.0, 0.0};
  EXPECT_THROW(build_rectification(cam, proj, vertical), GeometryError);
}

TEST(Rectification, InvalidIntrinsicsAreRejected) {
  auto cam = pinhole();
  cam.focal_x = 0.0;
  EXPECT_THROW(build_rectification(cam, projector_like(pinhole()), Extrinsics{}), GeometryError);
  cam = pinhole();
  cam.principal_x = 900.0;
  EXPECT_THROW(cam.validate(), GeometryError);
}

TEST(RectifyCameraPixel, IdentityAndBounds) {
  const auto cam = pinhole();
  Extrinsics ext;
  ext.translation = {100.0, 0.0, 0.0};
  const auto r = build_rectification(cam, projector_like(cam), ext);
  const auto p = rectify_camera_pixel(r.lut, {320.0, 240.0});
  EXPECT_DOUBLE_EQ(p.x, 320.0);
  EXPECT_DOUBLE_EQ(p.y, 240.0);
  EXPECT_THROW(rectify_camera_pixel(r.lut, {700.0, 100.0}), RangeError);
  EXPECT_THROW(rectify_camera_pixel(r.lut, {-0.5, 100.0}), RangeError);
}

TEST(RectifyCameraPixel, MatchesAnalyticHomographyOnRotatedRig) {
  const auto cam = pinhole();
  const auto r = build_rectification(cam, projector_like(cam), rotated_rig(2.0));
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ux(0.0, cam.width - 1.0);
  std::uniform_real_distribution<double> uy(0.0, cam.height - 1.0);
  for (int i = 0; i < 500; ++i) {
    // Table entries reproduce the homography exactly; sub-pixel reads carry
    // the bilinear interpolation error of a projective map (well under 1e-4 px).
    const PixelCoord grid{std::round(ux(rng)), std::round(uy(rng))};
    const auto lut = rectify_camera_pixel(r.lut, grid);
    const auto direct = apply_homography(r.rig.camera_homography, grid);
    EXPECT_NEAR(lut.x, direct.x, 1e-6);
    EXPECT_NEAR(lut.y, direct.y, 1e-6);

    const PixelCoord sub{ux(rng), uy(rng)};
    const auto lut_sub = rectify_camera_pixel(r.lut, sub);
    const auto direct_sub = apply_homography(r.rig.camera_homography, sub);
    EXPECT_NEAR(lut_sub.x, direct_sub.x, 1e-4);
    EXPECT_NEAR(lut_sub.y, direct_sub.y, 1e-4);
  }
}

TEST(DepthFromDisparity, Arithmetic) {
  RectifiedRig rig;
  rig.focal = 600.0;
  rig.baseline = 100.0;
  EXPECT_DOUBLE_EQ(depth_from_disparity(rig, 40.0), 1500.0);
  EXPECT_THROW(depth_from_disparity(rig, 0.0), InvalidDisparity);
  EXPECT_THROW(depth_from_disparity(rig, -3.0), InvalidDisparity);
}

TEST(DepthFromDisparity, RoundTripAndMonotonicity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uf(100.0, 3000.0);
  std::uniform_real_distribution<double> ub(10.0, 500.0);
  std::uniform_real_distribution<double> uz(50.0, 20000.0);
  for (int i = 0; i < 1000; ++i) {
    RectifiedRig rig;
    rig.focal = uf(rng);
    rig.baseline = ub(rng);
    const double z = uz(rng);
    const double d = rig.focal * rig.baseline / z;
    EXPECT_NEAR(depth_from_disparity(rig, d), z, 1e-9 * z);
    EXPECT_NEAR(disparity_from_depth(rig, depth_from_disparity(rig, d)), d, 1e-9 * d);
    EXPECT_GT(depth_from_disparity(rig, d), depth_from_disparity(rig, d * 1.001));
  }
}

TEST(CastCameraRay, OpticalAxisAndFortyFiveDegrees) {
  const auto cam = pinhole();
  const auto axis = cast_camera_ray(cam, {cam.principal_x, cam.principal_y});
  EXPECT_NEAR(axis.direction.x(), 0.0, 1e-15);
  EXPECT_NEAR(axis.direction.y(), 0.0, 1e-15);
  EXPECT_NEAR(axis.direction.z(), 1.0, 1e-15);
  auto wide = cam;
  wide.focal_x = 300.0;
  const auto diag = cast_camera_ray(wide, {wide.principal_x + wide.focal_x, wide.principal_y});
  EXPECT_NEAR(diag.direction.x(), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(diag.direction.y(), 0.0, 1e-12);
  EXPECT_NEAR(diag.direction.z(), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(diag.direction.norm(), 1.0, 1e-12);
  EXPECT_THROW(cast_camera_ray(cam, {640.0, 10.0}), RangeError);
}

TEST(CastCameraRay, ForwardProjectionRoundTripWithDistortion) {
  auto cam = pinhole();
  cam.radial = {-0.12, 0.03};
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ux(0.0, cam.width - 1.0);
  std::uniform_real_distribution<double> uy(0.0, cam.height - 1.0);
  std::uniform_real_distribution<double> ut(10.0, 5000.0);
  for (int i = 0; i < 1000; ++i) {
    const PixelCoord p{ux(rng), uy(rng)};
    const auto ray = cast_camera_ray(cam, p);
    const auto back = cam.project(ray.at(ut(rng)));
    EXPECT_NEAR(back.x, p.x, 1e-6);
    EXPECT_NEAR(back.y, p.y, 1e-6);
  }
}

// Random scene points visible to both devices land on equal rectified rows
// through the dense tables, including camera lens distortion.
TEST(Rectification, EpipolarAlignmentProperty) {
  auto cam = pinhole();
  cam.radial = {-0.08, 0.01};
  ProjectorModel proj;
  proj.diamond_layout = false;
  Extrinsics ext;
  ext.rotation =
      Eigen::AngleAxisd(-4.0 * M_PI / 180.0, Eigen::Vector3d::UnitY()).toRotationMatrix() *
      Eigen::AngleAxisd(0.5 * M_PI / 180.0, Eigen::Vector3d::UnitX()).toRotationMatrix();
  ext.translation = -ext.rotation * Eigen::Vector3d{-200.0, 5.0, 8.0};
  const auto r = build_rectification(cam, proj, ext);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(-900.0, 900.0);
  std::uniform_real_distribution<double> uz(500.0, 3000.0);
  int visible = 0;
  double worst = 0.0;
  while (visible < 1500) {
    const double z = uz(rng);
    const Eigen::Vector3d p{ux(rng) * z / 1500.0, ux(rng) * z / 2000.0, z};
    const auto pc = cam.project(p);
    const Eigen::Vector3d in_proj = ext.rotation * p + ext.translation;
    if (in_proj.z() <= 0.0) continue;
    const auto pp = proj.intrinsics.project(in_proj);
    if (!cam.contains(pc.x, pc.y) || !proj.intrinsics.contains(pp.x, pp.y)) continue;
    const auto rc = r.lut.camera(pc);
    const auto rp = r.lut.projector(pp);
    worst = std::max(worst, std::abs(rc.y - rp.y));
    ++visible;
  }
  EXPECT_LT(worst, kEpsilonRect);
}

TEST(Rectification, DisparityRecoversRectifiedDepth) {
  const auto cam = pinhole();
  ProjectorModel proj;
  proj.diamond_layout = false;
  Extrinsics ext;
  ext.rotation = Eigen::AngleAxisd(-3.0 * M_PI / 180.0, Eigen::Vector3d::UnitY()).toRotationMatrix();
  ext.translation = -ext.rotation * Eigen::Vector3d{-200.0, 0.0, 0.0};
  const auto r = build_rectification(cam, proj, ext);
  const Eigen::Vector3d p{120.0, -80.0, 1400.0};
  const auto rc = rectified_camera_projection(r.rig, p);
  const auto rp = rectified_projector_projection(r.rig, ext, p);
  EXPECT_NEAR(rc.y, rp.y, 1e-9);
  const double z_rect = r.rig.depth_axis().dot(p);
  EXPECT_NEAR(depth_from_disparity(r.rig, rp.x - rc.x), z_rect, 1e-9 * z_rect);
}

TEST(Rectification, TablesAreSafeForConcurrentReaders) {
  const auto cam = pinhole();
  const auto r = build_rectification(cam, projector_like(cam), rotated_rig(2.0));
  const auto reference = r.lut.camera_map();
  std::vector<std::thread> readers;
  std::vector<int> mismatches(4, 0);
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&, t] {
      for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
          const auto& v = r.lut.camera_at(x, y);
          const auto& ref = reference[static_cast<std::size_t>(y) * cam.width + x];
          if (v.x != ref.x || v.y != ref.y) ++mismatches[t];
        }
      }
    });
  }
  for (auto& th : readers) th.join();
  for (int m : mismatches) EXPECT_EQ(m, 0);
}
