#include "evsl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "evsl/errors.hpp"

namespace evsl {

namespace {

bool finite(PixelCoord p) { return std::isfinite(p.x) && std::isfinite(p.y); }

PixelCoord dehomogenize(const Eigen::Vector3d& v) { return {v.x() / v.z(), v.y() / v.z()}; }

PixelCoord bilinear(const std::vector<PixelCoord>& table, int stride, int max_x, int max_y,
                    PixelCoord p) {
  const int x0 = std::min(static_cast<int>(std::floor(p.x)), max_x);
  const int y0 = std::min(static_cast<int>(std::floor(p.y)), max_y);
  const double fx = p.x - x0;
  const double fy = p.y - y0;
  const auto at = [&](int x, int y) -> const PixelCoord& {
    return table[static_cast<std::size_t>(y) * stride + x];
  };
  if (fx == 0.0 && fy == 0.0) {
    return at(x0, y0);
  }
  const int x1 = std::min(x0 + 1, max_x);
  const int y1 = std::min(y0 + 1, max_y);
  const PixelCoord& a = at(x0, y0);
  const PixelCoord& b = at(x1, y0);
  const PixelCoord& c = at(x0, y1);
  const PixelCoord& d = at(x1, y1);
  const double w00 = (1 - fx) * (1 - fy);
  const double w10 = fx * (1 - fy);
  const double w01 = (1 - fx) * fy;
  const double w11 = fx * fy;
  return {w00 * a.x + w10 * b.x + w01 * c.x + w11 * d.x,
          w00 * a.y + w10 * b.y + w01 * c.y + w11 * d.y};
}

}  // namespace

void CameraIntrinsics::validate() const {
  if (!(focal_x > 0.0) || !(focal_y > 0.0)) {
    throw GeometryError("intrinsics: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw GeometryError("intrinsics: image dimensions must be positive");
  }
  if (!(principal_x >= 0.0 && principal_x <= width) ||
      !(principal_y >= 0.0 && principal_y <= height)) {
    throw GeometryError("intrinsics: principal point outside the image");
  }
  if (!std::isfinite(radial[0]) || !std::isfinite(radial[1])) {
    throw GeometryError("intrinsics: distortion coefficients must be finite");
  }
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << focal_x, 0.0, principal_x, 0.0, focal_y, principal_y, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Vector2d CameraIntrinsics::distort_normalized(const Eigen::Vector2d& u) const {
  const double r2 = u.squaredNorm();
  return u * (1.0 + radial[0] * r2 + radial[1] * r2 * r2);
}

Eigen::Vector2d CameraIntrinsics::undistort_normalized(const Eigen::Vector2d& d) const {
  if (radial[0] == 0.0 && radial[1] == 0.0) {
    return d;
  }
  const double rd = d.norm();
  if (rd == 0.0) {
    return d;
  }
  // Newton on g(r) = r (1 + k1 r^2 + k2 r^4) - rd.
  const double k1 = radial[0];
  const double k2 = radial[1];
  double r = rd;
  for (int it = 0; it < 50; ++it) {
    const double r2 = r * r;
    const double g = r * (1.0 + k1 * r2 + k2 * r2 * r2) - rd;
    const double dg = 1.0 + 3.0 * k1 * r2 + 5.0 * k2 * r2 * r2;
    if (dg <= 0.0) {
      break;
    }
    const double step = g / dg;
    r -= step;
    if (std::abs(step) < 1e-15) {
      break;
    }
  }
  return d * (r / rd);
}

PixelCoord CameraIntrinsics::project(const Eigen::Vector3d& point) const {
  const Eigen::Vector2d n = distort_normalized(point.head<2>() / point.z());
  return {focal_x * n.x() + principal_x, focal_y * n.y() + principal_y};
}

Eigen::Vector3d CameraIntrinsics::unproject(PixelCoord pixel) const {
  const Eigen::Vector2d d{(pixel.x - principal_x) / focal_x, (pixel.y - principal_y) / focal_y};
  const Eigen::Vector2d u = undistort_normalized(d);
  return {u.x(), u.y(), 1.0};
}

void ProjectorModel::validate() const {
  if (native_width <= 0 || native_height <= 0) {
    throw GeometryError("projector: native dimensions must be positive");
  }
  intrinsics.validate();
  if (intrinsics.width != native_width || intrinsics.height != native_height) {
    throw GeometryError("projector: logical grid must match the native resolution");
  }
}

void Extrinsics::validate() const {
  const Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  if (!rotation.allFinite() || err.cwiseAbs().maxCoeff() > 1e-9 || rotation.determinant() < 0.0) {
    throw GeometryError("extrinsics: rotation is not orthonormal");
  }
  if (!translation.allFinite()) {
    throw GeometryError("extrinsics: translation must be finite");
  }
}

RectificationLut::RectificationLut(int camera_width, int camera_height,
                                   std::vector<PixelCoord> camera_map, int projector_width,
                                   int projector_height, std::vector<PixelCoord> projector_map)
    : camera_width_(camera_width),
      camera_height_(camera_height),
      projector_width_(projector_width),
      projector_height_(projector_height),
      camera_map_(std::move(camera_map)),
      projector_map_(std::move(projector_map)) {
  if (camera_map_.size() != static_cast<std::size_t>(camera_width_) * camera_height_ ||
      projector_map_.size() !=
          static_cast<std::size_t>(projector_width_ + 1) * (projector_height_ + 1)) {
    throw GeometryError("rectification tables do not cover the device resolution");
  }
  const auto all_finite = [](const std::vector<PixelCoord>& m) {
    return std::all_of(m.begin(), m.end(), finite);
  };
  if (!all_finite(camera_map_) || !all_finite(projector_map_)) {
    throw GeometryError("rectification tables contain non-finite coordinates");
  }
}

PixelCoord RectificationLut::camera(PixelCoord p) const {
  if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= camera_width_ - 1 && p.y <= camera_height_ - 1)) {
    throw RangeError("camera pixel (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                     ") outside the sensor");
  }
  return bilinear(camera_map_, camera_width_, camera_width_ - 1, camera_height_ - 1, p);
}

PixelCoord RectificationLut::projector(PixelCoord p) const {
  if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= projector_width_ && p.y <= projector_height_)) {
    throw RangeError("projector coordinate (" + std::to_string(p.x) + ", " +
                     std::to_string(p.y) + ") outside the projector plane");
  }
  return bilinear(projector_map_, projector_width_ + 1, projector_width_, projector_height_, p);
}

Rectification build_rectification(const CameraIntrinsics& cam, const ProjectorModel& proj,
                                  const Extrinsics& ext) {
  cam.validate();
  proj.validate();
  ext.validate();

  const Eigen::Vector3d proj_center = ext.projector_center();
  const double baseline = proj_center.norm();
  if (!(baseline > 1e-9)) {
    throw GeometryError("extrinsics: zero baseline");
  }
  const Eigen::Vector3d a = proj_center.cwiseAbs();
  if (!(a.x() > a.y() && a.x() > a.z())) {
    throw GeometryError("extrinsics: rig is not a horizontal stereo pair");
  }

  // Rectified x-axis runs from the projector center to the camera center.
  const Eigen::Vector3d e1 = -proj_center / baseline;
  const Eigen::Vector3d e2 = Eigen::Vector3d::UnitZ().cross(e1).normalized();
  const Eigen::Vector3d e3 = e1.cross(e2);
  Eigen::Matrix3d rect;
  rect.row(0) = e1.transpose();
  rect.row(1) = e2.transpose();
  rect.row(2) = e3.transpose();

  Eigen::Matrix3d k_new = Eigen::Matrix3d::Identity();
  k_new(0, 0) = cam.focal_x;
  k_new(1, 1) = cam.focal_y;
  k_new(0, 2) = cam.principal_x;
  k_new(1, 2) = cam.principal_y;

  const Eigen::Matrix3d cam_to_rect = k_new * rect;
  const Eigen::Matrix3d proj_to_rect = k_new * rect * ext.rotation.transpose();
  const CameraIntrinsics& pin = proj.intrinsics;

  RectifiedRig rig;
  rig.focal = cam.focal_x;
  rig.baseline = baseline;
  rig.principal_x = cam.principal_x;
  rig.principal_y = cam.principal_y;
  rig.camera_width = cam.width;
  rig.camera_height = cam.height;
  rig.rect_rotation = rect;
  rig.rectified_matrix = k_new;
  rig.camera_homography = cam_to_rect * cam.matrix().inverse();
  rig.projector_homography = proj_to_rect * pin.matrix().inverse();

  std::vector<PixelCoord> camera_map(static_cast<std::size_t>(cam.width) * cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Eigen::Vector3d v = cam_to_rect * cam.unproject({double(x), double(y)});
      if (!(v.z() > 0.0)) {
        throw GeometryError("rectification maps a camera pixel behind the rectified plane");
      }
      camera_map[static_cast<std::size_t>(y) * cam.width + x] = dehomogenize(v);
    }
  }

  const int pw = proj.native_width;
  const int ph = proj.native_height;
  std::vector<PixelCoord> projector_map(static_cast<std::size_t>(pw + 1) * (ph + 1));
  double min_x = std::numeric_limits<double>::infinity();
  double max_x = -min_x;
  double min_y = min_x;
  double max_y = -min_x;
  for (int y = 0; y <= ph; ++y) {
    for (int x = 0; x <= pw; ++x) {
      const Eigen::Vector3d v = proj_to_rect * pin.unproject({double(x), double(y)});
      if (!(v.z() > 0.0)) {
        throw GeometryError("rectification maps a projector pixel behind the rectified plane");
      }
      const PixelCoord p = dehomogenize(v);
      projector_map[static_cast<std::size_t>(y) * (pw + 1) + x] = p;
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  }
  rig.projector_width = static_cast<int>(std::ceil(max_x - min_x));
  rig.projector_height = static_cast<int>(std::ceil(max_y - min_y));

  return {rig, RectificationLut(cam.width, cam.height, std::move(camera_map), pw, ph,
                                std::move(projector_map))};
}

PixelCoord rectify_camera_pixel(const RectificationLut& lut, PixelCoord p) {
  return lut.camera(p);
}

double depth_from_disparity(const RectifiedRig& rig, double disparity) {
  if (!(disparity > 0.0)) {
    throw InvalidDisparity("disparity must be positive, got " + std::to_string(disparity));
  }
  return rig.focal * rig.baseline / disparity;
}

double disparity_from_depth(const RectifiedRig& rig, double depth) {
  if (!(depth > 0.0)) {
    throw InvalidDisparity("depth must be positive");
  }
  return rig.focal * rig.baseline / depth;
}

Ray cast_camera_ray(const CameraIntrinsics& cam, PixelCoord p) {
  if (!cam.contains(p.x, p.y)) {
    throw RangeError("pixel outside the camera image");
  }
  return {Eigen::Vector3d::Zero(), cam.unproject(p).normalized()};
}

PixelCoord apply_homography(const Eigen::Matrix3d& h, PixelCoord p) {
  return dehomogenize(h * Eigen::Vector3d{p.x, p.y, 1.0});
}

PixelCoord rectified_camera_projection(const RectifiedRig& rig, const Eigen::Vector3d& point) {
  return dehomogenize(rig.rectified_matrix * rig.rect_rotation * point);
}

PixelCoord rectified_projector_projection(const RectifiedRig& rig, const Extrinsics& ext,
                                          const Eigen::Vector3d& point) {
  return dehomogenize(rig.rectified_matrix * rig.rect_rotation *
                      (point - ext.projector_center()));
}

}  // namespace evsl
