#include "absplat/camera.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <stdexcept>

namespace absplat {

void Camera::validate() const {
  const Mat3 r = rotation();
  if ((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6)
    throw std::runtime_error("camera rotation block is not orthonormal");
  if (fx <= 0 || fy <= 0) throw std::runtime_error("camera focal lengths must be positive");
  if (width < 1 || height < 1) throw std::runtime_error("camera viewport must be at least 1x1");
}

std::vector<CameraView> load_cameras(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open camera file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed camera json: " + std::string(e.what()));
  }
  if (!doc.is_array()) throw std::runtime_error("camera file must be a json array");

  std::vector<CameraView> views;
  views.reserve(doc.size());
  for (const auto& entry : doc) {
    CameraView view;
    view.id = entry.at("id").get<int>();
    view.image_path = entry.value("image_path", std::string{});
    Camera& cam = view.camera;
    cam.width = entry.at("width").get<int>();
    cam.height = entry.at("height").get<int>();
    cam.fx = entry.at("fx").get<Scalar>();
    cam.fy = entry.at("fy").get<Scalar>();
    cam.cx = entry.at("cx").get<Scalar>();
    cam.cy = entry.at("cy").get<Scalar>();
    cam.near = entry.value("near", 0.2);
    const auto& m = entry.at("world_to_camera");
    if (!m.is_array() || m.size() != 16)
      throw std::runtime_error("world_to_camera must hold 16 numbers");
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) cam.world_to_camera(r, c) = m[r * 4 + c].get<Scalar>();
    cam.validate();
    views.push_back(std::move(view));
  }
  return views;
}

void save_cameras(const std::vector<CameraView>& views, const std::string& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& view : views) {
    nlohmann::json entry;
    entry["id"] = view.id;
    entry["width"] = view.camera.width;
    entry["height"] = view.camera.height;
    entry["fx"] = view.camera.fx;
    entry["fy"] = view.camera.fy;
    entry["cx"] = view.camera.cx;
    entry["cy"] = view.camera.cy;
    entry["near"] = view.camera.near;
    std::vector<Scalar> m(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m[r * 4 + c] = view.camera.world_to_camera(r, c);
    entry["world_to_camera"] = m;
    entry["image_path"] = view.image_path;
    doc.push_back(std::move(entry));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write camera file: " + path);
  out << doc.dump(2) << "\n";
}

Camera make_lookat_camera(const Vec3& eye, const Vec3& target, const Vec3& up, Scalar fx,
                          Scalar fy, int width, int height) {
  const Vec3 fwd = (target - eye).normalized();
  Vec3 right = fwd.cross(up).normalized();
  const Vec3 down = fwd.cross(right);

  Camera cam;
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = fwd.transpose();
  cam.world_to_camera.setIdentity();
  cam.world_to_camera.topLeftCorner<3, 3>() = r;
  cam.world_to_camera.topRightCorner<3, 1>() = -r * eye;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.width = width;
  cam.height = height;
  return cam;
}

}  // namespace absplat
