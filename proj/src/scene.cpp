#include "evsl/scene.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "evsl/errors.hpp"

namespace evsl {

namespace {

using json = nlohmann::json;

constexpr double kMinT = 1e-9;

bool albedo_ok(const Albedo& a) {
  for (double v : a) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return true;
}

Albedo patch_albedo(const Plane& plane, const Eigen::Vector3d& p) {
  if (!plane.patches) return plane.albedo;
  const PatchGrid& g = *plane.patches;
  const Eigen::Vector3d local = p - g.origin;
  const double a = local.dot(g.u_axis) / g.patch_size;
  const double b = local.dot(g.v_axis) / g.patch_size;
  if (a < 0.0 || b < 0.0 || a >= g.cols || b >= g.rows) return plane.albedo;
  const auto col = static_cast<std::size_t>(a);
  const auto row = static_cast<std::size_t>(b);
  return g.albedo[row * static_cast<std::size_t>(g.cols) + col];
}

std::optional<Hit> hit_plane(const Plane& plane, const Ray& ray) {
  const double denom = plane.normal.dot(ray.direction);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = plane.normal.dot(plane.point - ray.origin) / denom;
  if (!(t > kMinT)) return std::nullopt;
  const Eigen::Vector3d p = ray.at(t);
  return Hit{t, p, patch_albedo(plane, p)};
}

std::optional<Hit> hit_sphere(const Sphere& s, const Ray& ray) {
  const Eigen::Vector3d oc = ray.origin - s.center;
  const double b = oc.dot(ray.direction);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  double t = -b - root;
  if (!(t > kMinT)) t = -b + root;
  if (!(t > kMinT)) return std::nullopt;
  return Hit{t, ray.at(t), s.albedo};
}

std::optional<Hit> hit_box(const Box& box, const Ray& ray) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int near_face = -1;
  int far_face = -1;
  for (int axis = 0; axis < 3; ++axis) {
    const double o = ray.origin[axis];
    const double d = ray.direction[axis];
    if (std::abs(d) < 1e-15) {
      if (o < box.min[axis] || o > box.max[axis]) return std::nullopt;
      continue;
    }
    double t0 = (box.min[axis] - o) / d;
    double t1 = (box.max[axis] - o) / d;
    int f0 = 2 * axis;
    int f1 = 2 * axis + 1;
    if (t0 > t1) {
      std::swap(t0, t1);
      std::swap(f0, f1);
    }
    if (t0 > t_near) {
      t_near = t0;
      near_face = f0;
    }
    if (t1 < t_far) {
      t_far = t1;
      far_face = f1;
    }
    if (t_near > t_far) return std::nullopt;
  }
  double t = t_near;
  int face = near_face;
  if (!(t > kMinT)) {
    t = t_far;
    face = far_face;
  }
  if (!(t > kMinT) || face < 0) return std::nullopt;
  return Hit{t, ray.at(t), box.face_albedo[static_cast<std::size_t>(face)]};
}

std::optional<Hit> hit_primitive(const Primitive& prim, const Ray& ray) {
  return std::visit(
      [&](const auto& p) -> std::optional<Hit> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Plane>) {
          return hit_plane(p, ray);
        } else if constexpr (std::is_same_v<T, Sphere>) {
          return hit_sphere(p, ray);
        } else {
          return hit_box(p, ray);
        }
      },
      prim);
}

// Signed depth of the nearest point of a primitive along `axis`, measured from `origin`.
double nearest_depth(const Primitive& prim, const Eigen::Vector3d& origin,
                     const Eigen::Matrix3d& to_device) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Plane>) {
          return (to_device * (p.point - origin)).z();
        } else if constexpr (std::is_same_v<T, Sphere>) {
          return (to_device * (p.center - origin)).z() - p.radius;
        } else {
          double best = std::numeric_limits<double>::infinity();
          for (int i = 0; i < 8; ++i) {
            const Eigen::Vector3d corner{(i & 1) ? p.max.x() : p.min.x(),
                                         (i & 2) ? p.max.y() : p.min.y(),
                                         (i & 4) ? p.max.z() : p.min.z()};
            best = std::min(best, (to_device * (corner - origin)).z());
          }
          return best;
        }
      },
      prim);
}

Eigen::Vector3d vec3(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("scene: missing field '") + key + "'");
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) {
    throw FormatError(std::string("scene: field '") + key + "' must be a 3-vector");
  }
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

Albedo albedo_of(const json& j, const char* key = "albedo") {
  if (!j.contains(key)) return {1.0, 1.0, 1.0};
  const auto v = vec3(j, key);
  return {v.x(), v.y(), v.z()};
}

json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
json to_json(const Albedo& a) { return json::array({a[0], a[1], a[2]}); }

Plane parse_plane(const json& j) {
  Plane p;
  p.point = vec3(j, "point");
  p.normal = vec3(j, "normal");
  if (!(p.normal.norm() > 0.0)) throw FormatError("scene: plane normal must be non-zero");
  p.normal.normalize();
  p.albedo = albedo_of(j);
  if (j.contains("patches")) {
    const auto& g = j.at("patches");
    PatchGrid grid;
    grid.origin = vec3(g, "origin");
    grid.u_axis = vec3(g, "u").normalized();
    grid.v_axis = vec3(g, "v").normalized();
    grid.patch_size = g.at("size").get<double>();
    grid.cols = g.at("cols").get<int>();
    grid.rows = g.at("rows").get<int>();
    for (const auto& a : g.at("albedo")) {
      grid.albedo.push_back({a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()});
    }
    if (grid.cols <= 0 || grid.rows <= 0 || !(grid.patch_size > 0.0) ||
        grid.albedo.size() != static_cast<std::size_t>(grid.cols * grid.rows)) {
      throw FormatError("scene: patch grid needs rows * cols albedo entries and a positive size");
    }
    p.patches = std::move(grid);
  }
  return p;
}

json plane_json(const Plane& p) {
  json j{{"type", "plane"},
         {"point", to_json(p.point)},
         {"normal", to_json(p.normal)},
         {"albedo", to_json(p.albedo)}};
  if (p.patches) {
    json albedo = json::array();
    for (const auto& a : p.patches->albedo) albedo.push_back(to_json(a));
    j["patches"] = {{"origin", to_json(p.patches->origin)}, {"u", to_json(p.patches->u_axis)},
                    {"v", to_json(p.patches->v_axis)},      {"size", p.patches->patch_size},
                    {"cols", p.patches->cols},              {"rows", p.patches->rows},
                    {"albedo", albedo}};
  }
  return j;
}

}  // namespace

void SceneModel::validate(const Extrinsics* ext) const {
  if (primitives.empty()) {
    throw DataError("scene needs at least one primitive");
  }
  const auto check = [&](const Primitive& prim, bool is_background) {
    const bool albedo_valid = std::visit(
        [](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Box>) {
            for (const auto& a : p.face_albedo) {
              if (!albedo_ok(a)) return false;
            }
            return true;
          } else if constexpr (std::is_same_v<T, Plane>) {
            if (p.patches) {
              for (const auto& a : p.patches->albedo) {
                if (!albedo_ok(a)) return false;
              }
            }
            return albedo_ok(p.albedo);
          } else {
            return albedo_ok(p.albedo) && p.radius > 0.0;
          }
        },
        prim);
    if (!albedo_valid) {
      throw DataError("scene: albedo components must lie in [0, 1]");
    }
    if (is_background) return;
    if (!(nearest_depth(prim, Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity()) > 0.0)) {
      throw DataError("scene: primitive is not in front of the camera");
    }
    if (ext && !(nearest_depth(prim, ext->projector_center(), ext->rotation) > 0.0)) {
      throw DataError("scene: primitive is not in front of the projector");
    }
  };
  for (const auto& prim : primitives) check(prim, false);
  if (background) check(*background, true);
}

std::optional<Hit> intersect(const SceneModel& scene, const Ray& ray) {
  std::optional<Hit> best;
  for (const auto& prim : scene.primitives) {
    auto h = hit_primitive(prim, ray);
    if (h && (!best || h->t < best->t)) best = h;
  }
  if (scene.background) {
    auto h = hit_plane(*scene.background, ray);
    if (h && (!best || h->t < best->t)) best = h;
  }
  return best;
}

SceneModel parse_scene(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("scene: ") + e.what());
  }
  SceneModel scene;
  try {
    for (const auto& j : root.at("primitives")) {
      const auto type = j.at("type").get<std::string>();
      if (type == "plane") {
        scene.primitives.emplace_back(parse_plane(j));
      } else if (type == "sphere") {
        Sphere s;
        s.center = vec3(j, "center");
        s.radius = j.at("radius").get<double>();
        s.albedo = albedo_of(j);
        scene.primitives.emplace_back(s);
      } else if (type == "box") {
        Box b;
        b.min = vec3(j, "min");
        b.max = vec3(j, "max");
        b.set_albedo(albedo_of(j));
        if (j.contains("face_albedo")) {
          const auto& faces = j.at("face_albedo");
          if (faces.size() != 6) throw FormatError("scene: face_albedo needs 6 entries");
          for (std::size_t i = 0; i < 6; ++i) {
            b.face_albedo[i] = {faces[i].at(0).get<double>(), faces[i].at(1).get<double>(),
                                faces[i].at(2).get<double>()};
          }
        }
        if ((b.max - b.min).minCoeff() <= 0.0) throw FormatError("scene: box max must exceed min");
        scene.primitives.emplace_back(b);
      } else {
        throw FormatError("scene: unknown primitive type '" + type + "'");
      }
    }
    if (root.contains("background")) {
      scene.background = parse_plane(root.at("background"));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("scene: ") + e.what());
  }
  return scene;
}

SceneModel load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open scene file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str());
}

std::string scene_to_json(const SceneModel& scene) {
  json prims = json::array();
  for (const auto& prim : scene.primitives) {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Plane>) {
            prims.push_back(plane_json(p));
          } else if constexpr (std::is_same_v<T, Sphere>) {
            prims.push_back({{"type", "sphere"},
                             {"center", to_json(p.center)},
                             {"radius", p.radius},
                             {"albedo", to_json(p.albedo)}});
          } else {
            json faces = json::array();
            for (const auto& a : p.face_albedo) faces.push_back(to_json(a));
            prims.push_back({{"type", "box"},
                             {"min", to_json(p.min)},
                             {"max", to_json(p.max)},
                             {"face_albedo", faces}});
          }
        },
        prim);
  }
  json root{{"primitives", prims}};
  if (scene.background) root["background"] = plane_json(*scene.background);
  return root.dump(2);
}

}  // namespace evsl
