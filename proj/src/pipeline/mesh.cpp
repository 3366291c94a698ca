// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/pipeline/mesh.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <unordered_map>

namespace dnf {

double default_iso_level(double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("default_iso_level: spacing must be > 0");
  return std::log(2.0) / spacing;
}

namespace {

// Kuhn decomposition of the unit cube along the 0-7 diagonal. Corner bits:
// x = 1, y = 2, z = 4.
constexpr std::array<std::array<int, 4>, 6> kTets{{
    {0, 1, 3, 7},
    {0, 1, 5, 7},
    {0, 2, 3, 7},
    {0, 2, 6, 7},
    {0, 4, 5, 7},
    {0, 4, 6, 7},
}};

class Builder {
 public:
  Builder(const std::vector<Vec3>& points, const std::vector<double>& values, double iso)
      : points_(points), values_(values), iso_(iso) {}

  void tet(const std::array<std::size_t, 4>& v) {
    std::array<int, 4> in{};
    std::array<int, 4> out{};
    int n_in = 0;
    int n_out = 0;
    for (int i = 0; i < 4; ++i) {
      if (values_[v[static_cast<std::size_t>(i)]] > iso_) {
        in[static_cast<std::size_t>(n_in++)] = i;
      } else {
        out[static_cast<std::size_t>(n_out++)] = i;
      }
    }
    if (n_in == 0 || n_in == 4) return;

    Vec3 c_in;
    Vec3 c_out;
    for (int i = 0; i < n_in; ++i) c_in = c_in + points_[v[static_cast<std::size_t>(in[static_cast<std::size_t>(i)])]];
    for (int i = 0; i < n_out; ++i) c_out = c_out + points_[v[static_cast<std::size_t>(out[static_cast<std::size_t>(i)])]];
    const Vec3 outward = c_out * (1.0 / n_out) - c_in * (1.0 / n_in);

    auto e = [&](int a, int b) {
      return edge_vertex(v[static_cast<std::size_t>(a)], v[static_cast<std::size_t>(b)]);
    };
    if (n_in == 1) {
      const int a = in[0];
      emit(e(a, out[0]), e(a, out[1]), e(a, out[2]), outward);
    } else if (n_in == 3) {
      const int a = out[0];
      emit(e(in[0], a), e(in[1], a), e(in[2], a), outward);
    } else {
      const int q0 = e(in[0], out[0]);
      const int q1 = e(in[0], out[1]);
      const int q2 = e(in[1], out[1]);
      const int q3 = e(in[1], out[0]);
      emit(q0, q1, q2, outward);
      emit(q0, q2, q3, outward);
    }
  }

  TriangleMesh take() { return std::move(mesh_); }

 private:
  int edge_vertex(std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
    const auto it = edges_.find(key);
    if (it != edges_.end()) return it->second;
    const double da = values_[a];
    const double db = values_[b];
    const double t = std::clamp((iso_ - da) / (db - da), 0.0, 1.0);
    mesh_.vertices.push_back(points_[a] + (points_[b] - points_[a]) * t);
    const int id = static_cast<int>(mesh_.vertices.size()) - 1;
    edges_.emplace(key, id);
    return id;
  }

  void emit(int a, int b, int c, const Vec3& outward) {
    const auto& vs = mesh_.vertices;
    const Vec3 n = cross(vs[static_cast<std::size_t>(b)] - vs[static_cast<std::size_t>(a)],
                         vs[static_cast<std::size_t>(c)] - vs[static_cast<std::size_t>(a)]);
    if (dot(n, outward) < 0.0) std::swap(b, c);
    mesh_.triangles.push_back({a, b, c});
  }

  const std::vector<Vec3>& points_;
  const std::vector<double>& values_;
  double iso_;
  std::unordered_map<std::uint64_t, int> edges_;
  TriangleMesh mesh_;
};

}  // namespace

TriangleMesh extract_mesh(const VolumeField& field, int resolution, double iso_level,
                          const Aabb& box) {
  if (resolution < 8) throw std::invalid_argument("extract_mesh: resolution must be >= 8");
  const auto n = static_cast<std::size_t>(resolution) + 1;
  std::vector<Vec3> points(n * n * n);
  std::vector<double> values(points.size());
  auto id = [n](std::size_t i, std::size_t j, std::size_t k) { return (k * n + j) * n + i; };
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3 p{box.lo.x + (box.hi.x - box.lo.x) * static_cast<double>(i) / resolution,
                     box.lo.y + (box.hi.y - box.lo.y) * static_cast<double>(j) / resolution,
                     box.lo.z + (box.hi.z - box.lo.z) * static_cast<double>(k) / resolution};
        points[id(i, j, k)] = p;
        values[id(i, j, k)] = field.query(p).density;
      }
    }
  }

  Builder builder(points, values, iso_level);
  const auto r = static_cast<std::size_t>(resolution);
  for (std::size_t k = 0; k < r; ++k) {
    for (std::size_t j = 0; j < r; ++j) {
      for (std::size_t i = 0; i < r; ++i) {
        std::array<std::size_t, 8> corner{};
        for (std::size_t c = 0; c < 8; ++c) corner[c] = id(i + (c & 1), j + ((c >> 1) & 1), k + (c >> 2));
        for (const auto& t : kTets) {
          builder.tet({corner[static_cast<std::size_t>(t[0])], corner[static_cast<std::size_t>(t[1])],
                       corner[static_cast<std::size_t>(t[2])], corner[static_cast<std::size_t>(t[3])]});
        }
      }
    }
  }
  return builder.take();
}

void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  out << std::setprecision(9);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_obj(out, mesh);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace dnf
