#include "absplat/ply.hpp"

#include "absplat/sh.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace absplat {

namespace {

[[noreturn]] void fail(const std::string& what, const std::string& path) {
  throw std::runtime_error(what + ": " + path);
}

int degree_for_rest_count(std::size_t rest) {
  for (int degree = 0; degree <= kMaxShDegree; ++degree) {
    if (rest == std::size_t(3 * (degree + 1) * (degree + 1) - 3)) return degree;
  }
  return -1;
}

}  // namespace

void save_ply(const GaussianCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write ply", path);

  const std::size_t n = cloud.size();
  const int bases = (cloud.sh_degree + 1) * (cloud.sh_degree + 1);
  const int n_rest = 3 * bases - 3;

  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n";
  header << "element vertex " << n << "\n";
  const char* base_props[] = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
  for (const char* p : base_props) header << "property float " << p << "\n";
  for (int i = 0; i < n_rest; ++i) header << "property float f_rest_" << i << "\n";
  header << "property float opacity\n";
  for (int i = 0; i < 3; ++i) header << "property float scale_" << i << "\n";
  for (int i = 0; i < 4; ++i) header << "property float rot_" << i << "\n";
  header << "end_header\n";
  out << header.str();

  std::vector<float> row(std::size_t(14 + 3 * bases));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (int k = 0; k < 3; ++k) row[c++] = float(cloud.positions[i][k]);
    for (int k = 0; k < 3; ++k) row[c++] = 0.0f;  // normals, unused
    const auto coeffs = cloud.coeffs(i);
    for (int ch = 0; ch < 3; ++ch) row[c++] = float(coeffs[std::size_t(ch)]);
    // f_rest is channel-major: all R rest coefficients, then G, then B.
    for (int ch = 0; ch < 3; ++ch)
      for (int k = 1; k < bases; ++k) row[c++] = float(coeffs[std::size_t(k) * 3 + ch]);
    row[c++] = float(cloud.opacity_logits[i]);
    for (int k = 0; k < 3; ++k) row[c++] = float(cloud.log_scales[i][k]);
    for (int k = 0; k < 4; ++k) row[c++] = float(cloud.rotations[i][k]);
    out.write(reinterpret_cast<const char*>(row.data()),
              std::streamsize(row.size() * sizeof(float)));
  }
  if (!out) fail("ply write failed", path);
}

GaussianCloud load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ply", path);

  std::string line;
  if (!std::getline(in, line) || line != "ply") fail("malformed ply header", path);
  if (!std::getline(in, line) || line != "format binary_little_endian 1.0")
    fail("unsupported ply format", path);

  std::size_t n_vertices = 0;
  std::vector<std::string> props;
  bool in_vertex_element = false;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    if (token == "comment") continue;
    if (token == "element") {
      std::string name;
      ls >> name >> n_vertices;
      in_vertex_element = name == "vertex";
      if (!in_vertex_element) fail("unexpected ply element", path);
    } else if (token == "property") {
      if (!in_vertex_element) fail("property outside vertex element", path);
      std::string type, name;
      ls >> type >> name;
      if (type != "float") fail("non-float ply property", path);
      props.push_back(name);
    } else {
      fail("malformed ply header", path);
    }
    if (in.eof()) fail("malformed ply header", path);
  }
  if (line != "end_header") fail("malformed ply header", path);

  auto index_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < props.size(); ++i)
      if (props[i] == name) return std::ptrdiff_t(i);
    return std::ptrdiff_t(-1);
  };

  std::size_t n_rest = 0;
  for (const auto& p : props)
    if (p.rfind("f_rest_", 0) == 0) ++n_rest;
  const int degree = degree_for_rest_count(n_rest);
  if (degree < 0) fail("rest-coefficient count matches no sh degree", path);

  const char* required[] = {"x",      "y",       "z",       "f_dc_0", "f_dc_1",
                            "f_dc_2", "opacity", "scale_0", "scale_1", "scale_2",
                            "rot_0",  "rot_1",   "rot_2",   "rot_3"};
  std::ptrdiff_t idx[14];
  for (int i = 0; i < 14; ++i) {
    idx[i] = index_of(required[i]);
    if (idx[i] < 0) fail(std::string("missing ply attribute ") + required[i], path);
  }
  std::vector<std::ptrdiff_t> rest_idx(n_rest);
  for (std::size_t i = 0; i < n_rest; ++i) {
    rest_idx[i] = index_of("f_rest_" + std::to_string(i));
    if (rest_idx[i] < 0) fail("non-contiguous f_rest attributes", path);
  }

  GaussianCloud cloud;
  cloud.sh_degree = degree;
  cloud.resize(n_vertices);
  const int bases = (degree + 1) * (degree + 1);

  std::vector<float> row(props.size());
  for (std::size_t i = 0; i < n_vertices; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            std::streamsize(row.size() * sizeof(float)));
    if (!in) fail("truncated ply payload", path);
    for (int k = 0; k < 3; ++k) cloud.positions[i][k] = row[std::size_t(idx[k])];
    auto coeffs = cloud.coeffs(i);
    for (int ch = 0; ch < 3; ++ch) coeffs[std::size_t(ch)] = row[std::size_t(idx[3 + ch])];
    for (int ch = 0; ch < 3; ++ch)
      for (int k = 1; k < bases; ++k)
        coeffs[std::size_t(k) * 3 + ch] =
            row[std::size_t(rest_idx[std::size_t(ch) * (bases - 1) + k - 1])];
    cloud.opacity_logits[i] = row[std::size_t(idx[6])];
    for (int k = 0; k < 3; ++k) cloud.log_scales[i][k] = row[std::size_t(idx[7 + k])];
    for (int k = 0; k < 4; ++k) cloud.rotations[i][k] = row[std::size_t(idx[10 + k])];
  }
  // Reject files with trailing garbage only if they are short; extra bytes
  // after the payload are tolerated (some writers append padding).
  return cloud;
}

}  // namespace absplat
