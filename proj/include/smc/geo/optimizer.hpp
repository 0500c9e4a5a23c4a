#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smc/geo/mesh.hpp"
#include "smc/scene/types.hpp"

namespace smc {

/// A scene object bound to a mesh whose local frame is centred on the
/// object's box: world = rotation * local + position.
struct PlacedMesh {
  SceneObject object;
  std::shared_ptr<const TriMesh> mesh;
  /// Source mesh file frame to the local frame:
  /// local = source_linear * v + source_offset.
  Eigen::Matrix3d source_linear = Eigen::Matrix3d::Identity();
  Vec3 source_offset = Vec3::Zero();
  /// Half extents of the (scaled) source mesh in its own frame.
  Vec3 source_half_size = Vec3::Ones();

  Vec3 to_world(const Vec3& local) const { return object.rotation * local + object.position; }
  Aabb world_bounds() const;
  std::array<Vec3, 3> world_face(Eigen::Index face) const;
  Vec3 world_normal(Eigen::Index face) const { return object.rotation * mesh->normal(face); }
  /// Lowest world y over all vertices.
  double lowest_y() const;
  /// Source mesh coordinates to world.
  Eigen::Matrix4d source_to_world() const;
  /// The object re-expressed for the source mesh: the retrieval orientation
  /// is folded into the rotation and half_size is the source mesh's.
  SceneObject source_pose() const;
};

/// Binds `mesh` (canonical pose) to `obj`: applies `orientation`, centres the
/// result on its bounds and sets half_size to the bound's half extents. With
/// `rescale`, the mesh is uniformly scaled to fit inside the object's box.
PlacedMesh bind_mesh(const SceneObject& obj, const TriMesh& mesh,
                     const Rotation& orientation = Rotation::Identity(), bool rescale = false);

/// Placed box mesh matching the object's box exactly.
PlacedMesh box_placement(const SceneObject& obj);

struct GeoConfig {
  double contact_eps = 0.002;
  double margin = 0.002;
  int max_contact_iters = 10;
  int n_surface_rays = 64;
  int n_support_rays = 16;
  double ground_y = 0.0;
  int max_resolve_steps = 32;
  /// Slack for floating-point comparisons against contact_eps.
  double tolerance = 1e-9;

  void validate() const;
};

/// Centroids closer than this count as coincident (separation falls back
/// to +y); absorbs sub-millimetre noise in example coordinates.
inline constexpr double kCoincidentCentroids = 1e-4;

struct Penetration {
  double depth = 0;
  Vec3 direction = Vec3::UnitY();  // move `a` along this to separate
};

/// Nearest positive hit over all targets; `dir` must be unit length.
std::optional<double> ray_mesh_intersect(const Vec3& origin, const Vec3& dir,
                                         const std::vector<const PlacedMesh*>& targets);

/// True when the solids overlap: faces cross or overlap coplanar with the
/// same facing, or one mesh encloses the other. Touching does not count.
bool meshes_intersect(const PlacedMesh& a, const PlacedMesh& b);

/// Separation estimate along the centroid direction, or nothing when the
/// meshes do not intersect.
std::optional<Penetration> mesh_penetration(const PlacedMesh& a, const PlacedMesh& b);

/// Translation needed to separate `a`'s world bounds from `b`'s along `dir`.
double aabb_separation_along(const Aabb& a, const Aabb& b, const Vec3& dir);

/// Pushes `moving` out of every fixed mesh, never below the ground. Throws
/// OptimizationFailed after cfg.max_resolve_steps.
SceneObject resolve_intersection(const PlacedMesh& moving,
                                 const std::vector<const PlacedMesh*>& fixed,
                                 const GeoConfig& cfg);

/// Damped ray-cast approach towards `neighbor` until the gap is within
/// contact_eps. Returns the pose unchanged when no surface faces the
/// neighbour.
SceneObject approach_until_contact(const PlacedMesh& moving, const PlacedMesh& neighbor,
                                   const GeoConfig& cfg);

/// Vertical gap below `moving`: distance it can drop before touching another
/// mesh or the ground.
double support_gap(const PlacedMesh& moving, const std::vector<const PlacedMesh*>& others,
                   const GeoConfig& cfg);

/// Drops `moving` onto the nearest mesh below or onto the ground unless it is
/// already supported within contact_eps.
SceneObject settle_support(const PlacedMesh& moving, const std::vector<const PlacedMesh*>& others,
                           const GeoConfig& cfg);

struct OptimizeFailure {
  std::size_t index;
  std::string object_id;
  std::string message;
};

struct OptimizeResult {
  std::vector<PlacedMesh> placed;
  std::vector<OptimizeFailure> failures;

  /// Objects in their source poses.
  Arrangement arrangement(std::string description = {}) const;
};

/// Incremental placement in creation order: each new object is resolved
/// against the settled ones, optionally brought into contact with its nearest
/// settled neighbour, then settled. Settled poses never change.
OptimizeResult optimize_arrangement(std::vector<PlacedMesh> placed, bool touch,
                                    const GeoConfig& cfg = {});

/// Deterministic Halton value for index i >= 1 in `base`.
double halton(std::uint64_t i, std::uint64_t base);

/// Area-weighted low-discrepancy surface points (world frame) on faces whose
/// world normal has a positive dot product with `facing`.
std::vector<Vec3> surface_samples(const PlacedMesh& pm, const Vec3& facing, int n);

}  // namespace smc
