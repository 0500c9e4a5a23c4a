#include "smc/geo/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/core.h>

#include "smc/error.hpp"
#include "smc/io.hpp"

namespace smc {

namespace {

constexpr int kLeafSize = 4;

// Slab test; true when [t0, t1] meets the box.
bool ray_hits_box(const Aabb& box, const Vec3& o, const Vec3& d, double t0, double t1) {
  for (int i = 0; i < 3; ++i) {
    if (d[i] == 0.0) {
      if (o[i] < box.min()[i] || o[i] > box.max()[i]) return false;
      continue;
    }
    const double inv = 1.0 / d[i];
    double a = (box.min()[i] - o[i]) * inv;
    double b = (box.max()[i] - o[i]) * inv;
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return false;
  }
  return true;
}

Aabb face_box(const TriMesh& m, Eigen::Index f) {
  Aabb b(m.vertex(f, 0));
  b.extend(m.vertex(f, 1));
  b.extend(m.vertex(f, 2));
  return b;
}

}  // namespace

TriMesh::TriMesh(VertexMatrix vertices, FaceMatrix faces) : v_(std::move(vertices)) {
  if (!v_.allFinite()) throw Error(ErrorKind::InvalidArgument, "mesh has non-finite vertices");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < faces.rows(); ++i) {
    for (int c = 0; c < 3; ++c) {
      if (faces(i, c) < 0 || faces(i, c) >= v_.rows()) {
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("face {} references vertex {} of {}", i, faces(i, c), v_.rows()));
      }
    }
    const Vec3 a = v_.row(faces(i, 0)), b = v_.row(faces(i, 1)), c = v_.row(faces(i, 2));
    if (0.5 * (b - a).cross(c - a).norm() > kMinTriangleArea) keep.push_back(i);
  }
  if (keep.empty()) throw Error(ErrorKind::InvalidArgument, "mesh has no non-degenerate faces");
  f_.resize(static_cast<Eigen::Index>(keep.size()), 3);
  for (std::size_t i = 0; i < keep.size(); ++i) f_.row(static_cast<Eigen::Index>(i)) = faces.row(keep[i]);

  order_.resize(keep.size());
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
  nodes_.reserve(2 * keep.size());
  build(0, static_cast<int>(order_.size()));
}

int TriMesh::build(int start, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Aabb box, centroids;
  for (int i = start; i < end; ++i) {
    const Aabb fb = face_box(*this, order_[i]);
    box.extend(fb);
    centroids.extend(fb.center());
  }
  nodes_[id].box = box;
  if (end - start <= kLeafSize) {
    nodes_[id].start = start;
    nodes_[id].count = end - start;
    return id;
  }
  int axis = 0;
  centroids.sizes().maxCoeff(&axis);
  const int mid = start + (end - start) / 2;
  std::nth_element(order_.begin() + start, order_.begin() + mid, order_.begin() + end,
                   [&](Eigen::Index a, Eigen::Index b) {
                     const double ca = face_box(*this, a).center()[axis];
                     const double cb = face_box(*this, b).center()[axis];
                     return ca != cb ? ca < cb : a < b;
                   });
  const int left = build(start, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

Vec3 TriMesh::normal(Eigen::Index face) const {
  return (vertex(face, 1) - vertex(face, 0)).cross(vertex(face, 2) - vertex(face, 0)).normalized();
}

double TriMesh::area(Eigen::Index face) const {
  return 0.5 * (vertex(face, 1) - vertex(face, 0)).cross(vertex(face, 2) - vertex(face, 0)).norm();
}

std::optional<double> TriMesh::intersect_ray(const Vec3& origin, const Vec3& dir,
                                             double t_min) const {
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (!ray_hits_box(n.box, origin, dir, t_min, best)) continue;
    if (n.left < 0) {
      for (int i = n.start; i < n.start + n.count; ++i) {
        const Eigen::Index f = order_[i];
        if (auto t = ray_triangle(origin, dir, vertex(f, 0), vertex(f, 1), vertex(f, 2));
            t && *t > t_min && *t < best) {
          best = *t;
        }
      }
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  if (std::isinf(best)) return std::nullopt;
  return best;
}

int TriMesh::count_crossings(const Vec3& origin, const Vec3& dir, double t_min) const {
  int hits = 0;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (!ray_hits_box(n.box, origin, dir, t_min, inf)) continue;
    if (n.left < 0) {
      for (int i = n.start; i < n.start + n.count; ++i) {
        const Eigen::Index f = order_[i];
        if (auto t = ray_triangle(origin, dir, vertex(f, 0), vertex(f, 1), vertex(f, 2));
            t && *t > t_min) {
          ++hits;
        }
      }
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  return hits;
}

std::vector<Eigen::Index> TriMesh::faces_overlapping(const Aabb& box) const {
  std::vector<Eigen::Index> out;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (!n.box.intersects(box)) continue;
    if (n.left < 0) {
      for (int i = n.start; i < n.start + n.count; ++i) {
        if (face_box(*this, order_[i]).intersects(box)) out.push_back(order_[i]);
      }
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

TriMesh TriMesh::transformed(const Rotation& r, const Vec3& t) const {
  VertexMatrix v = (v_ * r.transpose()).rowwise() + t.transpose();
  return TriMesh(std::move(v), f_);
}

std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                   const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  const double scale = e1.norm() * e2.norm() * dir.norm();
  if (std::abs(det) <= 1e-14 * scale) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  return e2.dot(q) * inv;
}

bool triangles_intersect(const std::array<Vec3, 3>& t1, const std::array<Vec3, 3>& t2,
                         double tol) {
  const Vec3 n1 = (t1[1] - t1[0]).cross(t1[2] - t1[0]);
  const Vec3 n2 = (t2[1] - t2[0]).cross(t2[2] - t2[0]);
  std::array<Vec3, 17> axes;
  int k = 0;
  axes[k++] = n1;
  axes[k++] = n2;
  for (int i = 0; i < 3; ++i) {
    const Vec3 e1 = t1[(i + 1) % 3] - t1[i];
    const Vec3 e2 = t2[(i + 1) % 3] - t2[i];
    for (int j = 0; j < 3; ++j) axes[k++] = e1.cross(t2[(j + 1) % 3] - t2[j]);
    axes[k++] = n1.cross(e1);
    axes[k++] = n2.cross(e2);
  }
  for (const Vec3& raw : axes) {
    const double len = raw.norm();
    if (len < 1e-15) continue;
    const Vec3 axis = raw / len;
    double lo1 = axis.dot(t1[0]), hi1 = lo1, lo2 = axis.dot(t2[0]), hi2 = lo2;
    for (int i = 1; i < 3; ++i) {
      lo1 = std::min(lo1, axis.dot(t1[i]));
      hi1 = std::max(hi1, axis.dot(t1[i]));
      lo2 = std::min(lo2, axis.dot(t2[i]));
      hi2 = std::max(hi2, axis.dot(t2[i]));
    }
    // Distance either interval must move to clear the other; zero-width
    // intervals (a triangle along its own normal) still register.
    if (std::min(hi1 - lo2, hi2 - lo1) <= tol) return false;
  }
  return true;
}

bool coplanar_triangles_overlap(const std::array<Vec3, 3>& t1, const std::array<Vec3, 3>& t2,
                                double tol) {
  const Vec3 n = (t1[1] - t1[0]).cross(t1[2] - t1[0]);
  for (const auto* t : {&t1, &t2}) {
    for (int i = 0; i < 3; ++i) {
      const Vec3 raw = n.cross((*t)[(i + 1) % 3] - (*t)[i]);
      if (raw.norm() < 1e-15) continue;
      const Vec3 axis = raw.normalized();
      double lo1 = axis.dot(t1[0]), hi1 = lo1, lo2 = axis.dot(t2[0]), hi2 = lo2;
      for (int k = 1; k < 3; ++k) {
        lo1 = std::min(lo1, axis.dot(t1[k]));
        hi1 = std::max(hi1, axis.dot(t1[k]));
        lo2 = std::min(lo2, axis.dot(t2[k]));
        hi2 = std::max(hi2, axis.dot(t2[k]));
      }
      if (std::min(hi1 - lo2, hi2 - lo1) <= tol) return false;
    }
  }
  return true;
}

bool solid_faces_collide(const std::array<Vec3, 3>& t1, const std::array<Vec3, 3>& t2,
                         double tol) {
  const Vec3 n1 = (t1[1] - t1[0]).cross(t1[2] - t1[0]).normalized();
  const Vec3 n2 = (t2[1] - t2[0]).cross(t2[2] - t2[0]).normalized();
  const double c = n1.dot(n2);
  if (std::abs(c) > 1.0 - 1e-12) {
    double spread = 0;
    for (const Vec3& p : t2) spread = std::max(spread, std::abs(n1.dot(p - t1[0])));
    if (spread <= tol) return c > 0 && coplanar_triangles_overlap(t1, t2, tol);
  }
  return triangles_intersect(t1, t2, tol);
}

TriMesh make_box_mesh(const Vec3& half_size) {
  VertexMatrix v(8, 3);
  for (int i = 0; i < 8; ++i) {
    v.row(i) << (i & 1 ? 1 : -1) * half_size.x(), (i & 2 ? 1 : -1) * half_size.y(),
        (i & 4 ? 1 : -1) * half_size.z();
  }
  FaceMatrix f(12, 3);
  f << 0, 4, 6, 0, 6, 2,  // -x
      1, 3, 7, 1, 7, 5,   // +x
      0, 1, 5, 0, 5, 4,   // -y
      2, 6, 7, 2, 7, 3,   // +y
      0, 2, 3, 0, 3, 1,   // -z
      4, 5, 7, 4, 7, 6;   // +z
  return TriMesh(std::move(v), std::move(f));
}

TriMesh parse_obj(const std::string& text, const std::string& source) {
  std::vector<Vec3> verts;
  std::vector<Eigen::Vector3i> faces;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::Parse, fmt::format("{}:{}: {}", source, n, why));
  };
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z()) || !p.allFinite()) fail("malformed vertex");
      verts.push_back(p);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        int i = 0;
        try {
          std::size_t used = 0;
          i = std::stoi(tok.substr(0, tok.find('/')), &used);
        } catch (const std::exception&) {
          fail("malformed face index '" + tok + "'");
        }
        // 1-based; negative indices count back from the latest vertex.
        const int resolved = i > 0 ? i - 1 : static_cast<int>(verts.size()) + i;
        if (i == 0 || resolved < 0 || resolved >= static_cast<int>(verts.size())) {
          fail("face index out of range '" + tok + "'");
        }
        idx.push_back(resolved);
      }
      if (idx.size() < 3) fail("face with fewer than 3 vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) faces.emplace_back(idx[0], idx[k], idx[k + 1]);
    }
  }
  if (faces.empty()) throw Error(ErrorKind::Parse, source + ": no faces");
  VertexMatrix v(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = verts[i];
  FaceMatrix f(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) f.row(static_cast<Eigen::Index>(i)) = faces[i];
  try {
    return TriMesh(std::move(v), std::move(f));
  } catch (const Error& e) {
    throw Error(ErrorKind::Parse, source + ": " + e.what());
  }
}

TriMesh load_obj(const std::filesystem::path& path) {
  return parse_obj(read_text_file(path), path.string());
}

std::string to_obj(const std::vector<ObjGroup>& groups) {
  std::string out;
  int base = 1;
  for (const auto& g : groups) {
    out += "o " + g.name + "\n";
    const auto& v = g.mesh->vertices();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      out += fmt::format("v {:.9g} {:.9g} {:.9g}\n", v(i, 0), v(i, 1), v(i, 2));
    }
    const auto& f = g.mesh->faces();
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      out += fmt::format("f {} {} {}\n", f(i, 0) + base, f(i, 1) + base, f(i, 2) + base);
    }
    base += static_cast<int>(v.rows());
  }
  return out;
}

}  // namespace smc
