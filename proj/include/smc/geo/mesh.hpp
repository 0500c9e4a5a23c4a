#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "smc/scene/types.hpp"

namespace smc {

using VertexMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using FaceMatrix = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

inline constexpr double kMinTriangleArea = 1e-12;

/// Indexed triangle mesh with a bounding-volume hierarchy for ray and box
/// queries. Immutable after construction.
class TriMesh {
 public:
  /// Drops triangles with area <= kMinTriangleArea. Throws InvalidArgument on
  /// out-of-range indices, non-finite vertices or when nothing remains.
  TriMesh(VertexMatrix vertices, FaceMatrix faces);

  const VertexMatrix& vertices() const { return v_; }
  const FaceMatrix& faces() const { return f_; }
  Eigen::Index num_faces() const { return f_.rows(); }
  const Aabb& bounds() const { return nodes_.front().box; }

  Vec3 vertex(Eigen::Index face, int corner) const { return v_.row(f_(face, corner)).transpose(); }
  /// Unit normal by the right-hand rule over the face's corners.
  Vec3 normal(Eigen::Index face) const;
  double area(Eigen::Index face) const;

  /// Nearest hit with t > t_min along `dir` (any length; t is in units of
  /// `dir`). Uses the hierarchy.
  std::optional<double> intersect_ray(const Vec3& origin, const Vec3& dir,
                                      double t_min = 0.0) const;

  /// Number of faces crossed by the ray at t > t_min.
  int count_crossings(const Vec3& origin, const Vec3& dir, double t_min = 0.0) const;

  /// Faces whose bounds overlap `box`.
  std::vector<Eigen::Index> faces_overlapping(const Aabb& box) const;

  /// Copy with every vertex mapped to r * v + t.
  TriMesh transformed(const Rotation& r, const Vec3& t) const;

 private:
  struct Node {
    Aabb box;
    int left = -1, right = -1;  // children; -1 for leaves
    int start = 0, count = 0;   // range in order_ for leaves
  };

  int build(int start, int end);

  VertexMatrix v_;
  FaceMatrix f_;
  std::vector<Node> nodes_;
  std::vector<Eigen::Index> order_;
};

/// Möller–Trumbore; returns t when the ray meets the closed triangle.
std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                   const Vec3& b, const Vec3& c);

/// True when the closed triangles overlap by more than `tol` along every
/// candidate separating axis. Touching triangles do not count.
bool triangles_intersect(const std::array<Vec3, 3>& t1, const std::array<Vec3, 3>& t2,
                         double tol = 1e-9);

/// Overlap of two coplanar triangles by more than `tol` along every in-plane
/// edge normal of either triangle.
bool coplanar_triangles_overlap(const std::array<Vec3, 3>& t1, const std::array<Vec3, 3>& t2,
                                double tol = 1e-9);

/// Whether two faces of closed outward-wound meshes show overlapping solids.
/// Transversal crossings count; coplanar faces count only when they face the
/// same way (opposite-facing coplanar faces are a resting contact).
bool solid_faces_collide(const std::array<Vec3, 3>& t1, const std::array<Vec3, 3>& t2,
                         double tol = 1e-9);

/// Axis-aligned box mesh (12 triangles, outward winding) centred at the origin.
TriMesh make_box_mesh(const Vec3& half_size);

/// Wavefront OBJ subset: `v` and `f` records only (see docs/mesh_format.md).
/// Throws Io when unreadable, Parse on malformed records.
TriMesh load_obj(const std::filesystem::path& path);
TriMesh parse_obj(const std::string& text, const std::string& source = "<string>");

/// OBJ text for one or more named meshes; vertex indices continue across
/// groups.
struct ObjGroup {
  std::string name;
  const TriMesh* mesh;
};
std::string to_obj(const std::vector<ObjGroup>& groups);

}  // namespace smc
