#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <vector>

namespace evsl {

/// Row-alignment tolerance (pixels) between rectified camera and projector images.
inline constexpr double kEpsilonRect = 0.5;

struct PixelCoord {
  double x = 0.0;
  double y = 0.0;
};

/// Pinhole intrinsics with a two-coefficient radial distortion model.
///
/// Pixel centers sit at integer coordinates. Distortion is applied on the
/// normalized image plane: x_d = x_u * (1 + k1 r^2 + k2 r^4).
struct CameraIntrinsics {
  double focal_x = 600.0;
  double focal_y = 600.0;
  double principal_x = 319.5;
  double principal_y = 239.5;
  std::array<double, 2> radial{0.0, 0.0};
  int width = 640;
  int height = 480;

  void validate() const;

  Eigen::Matrix3d matrix() const;

  bool contains(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1;
  }

  /// Projects a point in the device frame to (distorted) pixel coordinates.
  /// The point must be in front of the device (z > 0).
  PixelCoord project(const Eigen::Vector3d& point) const;

  /// Undistorted normalized coordinates (x, y, 1) for a distorted pixel.
  Eigen::Vector3d unproject(PixelCoord pixel) const;

  Eigen::Vector2d distort_normalized(const Eigen::Vector2d& undistorted) const;
  Eigen::Vector2d undistort_normalized(const Eigen::Vector2d& distorted) const;
};

/// DMD projector. The intrinsics describe the orthogonal logical grid the
/// patterns are authored on; `diamond_layout` only affects how bitmaps are
/// remapped before upload (see patterns.hpp).
struct ProjectorModel {
  int native_width = 912;
  int native_height = 1140;
  bool diamond_layout = true;
  CameraIntrinsics intrinsics{1400.0, 1400.0, 455.5, 569.5, {0.0, 0.0}, 912, 1140};

  void validate() const;
};

/// Rigid transform taking camera-frame points into the projector frame:
/// X_p = rotation * X_c + translation (millimeters).
struct Extrinsics {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation{200.0, 0.0, 0.0};

  void validate() const;

  /// Projector optical center expressed in the camera frame.
  Eigen::Vector3d projector_center() const { return -rotation.transpose() * translation; }
};

struct CalibrationBundle {
  CameraIntrinsics camera;
  ProjectorModel projector;
  Extrinsics extrinsics;
};

/// Shared rectified geometry of the camera/projector pair.
///
/// Both rectified images use the camera's pinhole matrix (so `focal` is the
/// camera's horizontal focal length) and a common rotation whose x-axis
/// points from the projector center to the camera center. With that choice
/// disparity = x_projector - x_camera is positive for points in front.
struct RectifiedRig {
  double focal = 0.0;
  double baseline = 0.0;
  double principal_x = 0.0;
  double principal_y = 0.0;
  int camera_width = 0;
  int camera_height = 0;
  int projector_width = 0;
  int projector_height = 0;
  /// Maps undistorted camera pixels to rectified camera pixels.
  Eigen::Matrix3d camera_homography = Eigen::Matrix3d::Identity();
  /// Maps undistorted projector pixels to rectified projector pixels.
  Eigen::Matrix3d projector_homography = Eigen::Matrix3d::Identity();
  /// Rotation from the camera frame into the rectified frame (rows e1, e2, e3).
  Eigen::Matrix3d rect_rotation = Eigen::Matrix3d::Identity();
  /// Pinhole matrix shared by both rectified images.
  Eigen::Matrix3d rectified_matrix = Eigen::Matrix3d::Identity();

  /// Unit vector (camera frame) along which rectified depth is measured.
  Eigen::Vector3d depth_axis() const { return rect_rotation.row(2).transpose(); }
};

/// Dense per-pixel rectification tables.
///
/// The camera table holds one entry per camera pixel center. The projector
/// table is sampled on the inclusive lattice [0, W] x [0, H] so that line
/// endpoints at row H are addressable without extrapolation.
class RectificationLut {
 public:
  RectificationLut() = default;
  RectificationLut(int camera_width, int camera_height, std::vector<PixelCoord> camera_map,
                   int projector_width, int projector_height,
                   std::vector<PixelCoord> projector_map);

  int camera_width() const { return camera_width_; }
  int camera_height() const { return camera_height_; }
  int projector_width() const { return projector_width_; }
  int projector_height() const { return projector_height_; }

  /// Direct table read for an integer camera pixel. No bounds checking.
  const PixelCoord& camera_at(int x, int y) const {
    return camera_map_[static_cast<std::size_t>(y) * camera_width_ + x];
  }

  /// Camera table lookup with bilinear interpolation; throws RangeError outside.
  PixelCoord camera(PixelCoord p) const;

  /// Projector table lookup on [0, W] x [0, H] with bilinear interpolation.
  PixelCoord projector(PixelCoord p) const;

  const std::vector<PixelCoord>& camera_map() const { return camera_map_; }
  const std::vector<PixelCoord>& projector_map() const { return projector_map_; }

 private:
  int camera_width_ = 0;
  int camera_height_ = 0;
  int projector_width_ = 0;
  int projector_height_ = 0;
  std::vector<PixelCoord> camera_map_;
  std::vector<PixelCoord> projector_map_;
};

struct Ray {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();

  Eigen::Vector3d at(double t) const { return origin + t * direction; }
};

struct Rectification {
  RectifiedRig rig;
  RectificationLut lut;
};

/// Builds the rectified rig and both lookup tables. Throws GeometryError on a
/// degenerate or non-horizontal rig.
Rectification build_rectification(const CameraIntrinsics& cam, const ProjectorModel& proj,
                                  const Extrinsics& ext);

/// Camera table read for a (possibly sub-pixel) camera coordinate.
PixelCoord rectify_camera_pixel(const RectificationLut& lut, PixelCoord p);

/// Z = f * B / disparity. Throws InvalidDisparity for disparity <= 0.
double depth_from_disparity(const RectifiedRig& rig, double disparity);

/// Inverse of depth_from_disparity.
double disparity_from_depth(const RectifiedRig& rig, double depth);

/// Ray through the camera center and the back-projection of `p` (camera frame).
Ray cast_camera_ray(const CameraIntrinsics& cam, PixelCoord p);

/// Rectified coordinates of a camera-frame point as seen by each device.
/// Used by tests and the simulator; applies the homographies analytically.
PixelCoord rectified_camera_projection(const RectifiedRig& rig, const Eigen::Vector3d& point);
PixelCoord rectified_projector_projection(const RectifiedRig& rig, const Extrinsics& ext,
                                          const Eigen::Vector3d& point);

/// Applies a homography to a 2D point.
PixelCoord apply_homography(const Eigen::Matrix3d& h, PixelCoord p);

}  // namespace evsl
