#pragma once

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "evsl/geometry.hpp"

namespace evsl {

/// Diffuse reflectance per color channel, each in [0, 1].
using Albedo = std::array<double, 3>;

/// Rectangular grid of albedo patches painted on a plane (color charts,
/// split planes). Points outside the grid use the plane's own albedo.
struct PatchGrid {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d u_axis = Eigen::Vector3d::UnitX();
  Eigen::Vector3d v_axis = Eigen::Vector3d::UnitY();
  double patch_size = 1.0;
  int cols = 0;
  int rows = 0;
  std::vector<Albedo> albedo;  ///< row-major, rows * cols
};

struct Plane {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = -Eigen::Vector3d::UnitZ();
  Albedo albedo{1.0, 1.0, 1.0};
  std::optional<PatchGrid> patches;
};

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.0;
  Albedo albedo{1.0, 1.0, 1.0};
};

/// Axis-aligned box. Face order: -x, +x, -y, +y, -z, +z.
struct Box {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Ones();
  std::array<Albedo, 6> face_albedo{};

  void set_albedo(const Albedo& a) { face_albedo.fill(a); }
};

using Primitive = std::variant<Plane, Sphere, Box>;

/// Scene geometry in the camera frame, millimeters.
struct SceneModel {
  std::vector<Primitive> primitives;
  std::optional<Plane> background;

  /// Throws DataError unless the scene has a primitive, albedos lie in [0, 1]
  /// and every primitive sits in front of the camera (and the projector when given).
  void validate(const Extrinsics* ext = nullptr) const;
};

struct Hit {
  double t = 0.0;  ///< distance along the (unit) ray direction
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Albedo albedo{0.0, 0.0, 0.0};
};

/// Nearest intersection with t > 1e-9, if any.
std::optional<Hit> intersect(const SceneModel& scene, const Ray& ray);

SceneModel parse_scene(const std::string& json_text);
SceneModel load_scene(const std::filesystem::path& path);
std::string scene_to_json(const SceneModel& scene);

}  // namespace evsl
