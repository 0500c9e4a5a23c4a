#include "smc/geo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "smc/error.hpp"

namespace smc {

namespace {

// Irrational-ish directions keep parity rays off edges and vertices.
const Vec3 kParityDirA = Vec3(0.5773, 0.6211, 0.5301).normalized();
const Vec3 kParityDirB = Vec3(-0.4127, 0.3319, -0.8483).normalized();

Vec3 to_local(const PlacedMesh& pm, const Vec3& world) {
  return pm.object.rotation.transpose() * (world - pm.object.position);
}

// Nearest hit against one placed mesh, accepting hits that start just behind
// the origin (touching surfaces) and clamping them to zero.
std::optional<double> touching_hit(const PlacedMesh& pm, const Vec3& origin, const Vec3& dir,
                                   double tol) {
  const Rotation& r = pm.object.rotation;
  auto t = pm.mesh->intersect_ray(to_local(pm, origin), r.transpose() * dir, -tol);
  if (t) *t = std::max(*t, 0.0);
  return t;
}

bool point_inside(const PlacedMesh& pm, const Vec3& world) {
  const Vec3 p = to_local(pm, world);
  if (!pm.mesh->bounds().contains(p)) return false;
  return pm.mesh->count_crossings(p, kParityDirA) % 2 == 1 &&
         pm.mesh->count_crossings(p, kParityDirB) % 2 == 1;
}

// A point just inside `pm`'s own surface, below its first face.
Vec3 interior_probe(const PlacedMesh& pm) {
  const TriMesh& m = *pm.mesh;
  const Vec3 c = (m.vertex(0, 0) + m.vertex(0, 1) + m.vertex(0, 2)) / 3.0;
  return pm.to_world(c - 1e-6 * m.normal(0));
}

bool faces_intersect(const PlacedMesh& a, const PlacedMesh& b, const Aabb& region) {
  // Candidate faces of b inside the overlap region, tested against a's BVH
  // in a's local frame.
  Aabb local_region;
  for (int i = 0; i < 8; ++i) {
    local_region.extend(to_local(b, region.corner(static_cast<Aabb::CornerType>(i))));
  }
  for (const Eigen::Index fb : b.mesh->faces_overlapping(local_region)) {
    std::array<Vec3, 3> tb;
    Aabb box;
    for (int c = 0; c < 3; ++c) {
      tb[c] = to_local(a, b.to_world(b.mesh->vertex(fb, c)));
      box.extend(tb[c]);
    }
    for (const Eigen::Index fa : a.mesh->faces_overlapping(box)) {
      if (solid_faces_collide({a.mesh->vertex(fa, 0), a.mesh->vertex(fa, 1), a.mesh->vertex(fa, 2)},
                              tb)) {
        return true;
      }
    }
  }
  return false;
}

std::vector<std::size_t> facing_faces(const PlacedMesh& pm, const Vec3& facing,
                                      std::vector<double>& cdf) {
  std::vector<std::size_t> faces;
  cdf.clear();
  double total = 0;
  for (Eigen::Index f = 0; f < pm.mesh->num_faces(); ++f) {
    if (pm.world_normal(f).dot(facing) > 1e-9) {
      total += pm.mesh->area(f);
      faces.push_back(static_cast<std::size_t>(f));
      cdf.push_back(total);
    }
  }
  return faces;
}

bool intersects_any(const PlacedMesh& pm, const std::vector<const PlacedMesh*>& others) {
  return std::any_of(others.begin(), others.end(),
                     [&](const PlacedMesh* o) { return meshes_intersect(pm, *o); });
}

}  // namespace

Aabb PlacedMesh::world_bounds() const {
  const VertexMatrix w = (mesh->vertices() * object.rotation.transpose()).rowwise() +
                         object.position.transpose();
  return Aabb(w.colwise().minCoeff().transpose(), w.colwise().maxCoeff().transpose());
}

std::array<Vec3, 3> PlacedMesh::world_face(Eigen::Index face) const {
  return {to_world(mesh->vertex(face, 0)), to_world(mesh->vertex(face, 1)),
          to_world(mesh->vertex(face, 2))};
}

double PlacedMesh::lowest_y() const {
  return (mesh->vertices() * object.rotation.row(1).transpose()).minCoeff() + object.position.y();
}

PlacedMesh bind_mesh(const SceneObject& obj, const TriMesh& mesh, const Rotation& orientation,
                     bool rescale) {
  const TriMesh oriented = mesh.transformed(orientation, Vec3::Zero());
  const Vec3 center = oriented.bounds().center();
  double s = 1.0;
  if (rescale) s = (2.0 * obj.half_size.array() / oriented.bounds().sizes().array()).minCoeff();
  PlacedMesh pm;
  pm.object = obj;
  pm.mesh = std::make_shared<const TriMesh>(mesh.transformed(s * orientation, -s * center));
  pm.object.half_size = pm.mesh->bounds().sizes() / 2.0;
  pm.source_linear = s * orientation;
  pm.source_offset = -s * center;
  pm.source_half_size = s * mesh.bounds().sizes() / 2.0;
  return pm;
}

Eigen::Matrix4d PlacedMesh::source_to_world() const {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topLeftCorner<3, 3>() = object.rotation * source_linear;
  t.topRightCorner<3, 1>() = object.rotation * source_offset + object.position;
  return t;
}

SceneObject PlacedMesh::source_pose() const {
  SceneObject o = object;
  o.rotation = object.rotation * source_linear / std::cbrt(source_linear.determinant());
  o.half_size = source_half_size;
  return o;
}

PlacedMesh box_placement(const SceneObject& obj) {
  return bind_mesh(obj, make_box_mesh(obj.half_size));
}

void GeoConfig::validate() const {
  if (!(contact_eps > 0) || !(margin > 0) || max_contact_iters < 1 || n_surface_rays < 1 ||
      n_support_rays < 1 || max_resolve_steps < 1 || !(tolerance >= 0) ||
      !std::isfinite(ground_y)) {
    throw Error(ErrorKind::Config, "geometry settings must be positive");
  }
}

std::optional<double> ray_mesh_intersect(const Vec3& origin, const Vec3& dir,
                                         const std::vector<const PlacedMesh*>& targets) {
  if (std::abs(dir.norm() - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidArgument, "ray direction must be unit length");
  }
  std::optional<double> best;
  for (const PlacedMesh* pm : targets) {
    const Rotation& r = pm->object.rotation;
    if (auto t = pm->mesh->intersect_ray(to_local(*pm, origin), r.transpose() * dir);
        t && (!best || *t < *best)) {
      best = t;
    }
  }
  return best;
}

bool meshes_intersect(const PlacedMesh& a, const PlacedMesh& b) {
  constexpr double kTol = 1e-9;
  const Aabb wa = a.world_bounds(), wb = b.world_bounds();
  const Aabb overlap = wa.intersection(wb);
  if (overlap.isEmpty() || (overlap.sizes().array() <= kTol).any()) return false;
  if (faces_intersect(a, b, overlap)) return true;
  // No crossing faces: either one encloses the other or they are apart.
  // Bounds containment is not required; flush faces differ by rounding.
  return point_inside(b, interior_probe(a)) || point_inside(a, interior_probe(b));
}

double aabb_separation_along(const Aabb& a, const Aabb& b, const Vec3& dir) {
  const Vec3 ha = a.sizes() / 2.0, hb = b.sizes() / 2.0;
  const Vec3 ad = dir.cwiseAbs();
  const double lo_a = a.center().dot(dir) - ha.dot(ad);
  const double hi_b = b.center().dot(dir) + hb.dot(ad);
  return std::max(0.0, hi_b - lo_a);
}

std::optional<Penetration> mesh_penetration(const PlacedMesh& a, const PlacedMesh& b) {
  if (!meshes_intersect(a, b)) return std::nullopt;
  Penetration p;
  const Vec3 d = a.object.position - b.object.position;
  if (d.norm() > kCoincidentCentroids) p.direction = d.normalized();
  p.depth = aabb_separation_along(a.world_bounds(), b.world_bounds(), p.direction);
  return p;
}

SceneObject resolve_intersection(const PlacedMesh& moving,
                                 const std::vector<const PlacedMesh*>& fixed,
                                 const GeoConfig& cfg) {
  PlacedMesh cur = moving;
  for (int step = 0; step < cfg.max_resolve_steps; ++step) {
    std::optional<Penetration> worst;
    const PlacedMesh* against = nullptr;
    for (const PlacedMesh* f : fixed) {
      if (auto p = mesh_penetration(cur, *f); p && (!worst || p->depth > worst->depth)) {
        worst = p;
        against = f;
      }
    }
    if (!worst) return cur.object;
    Vec3 delta = worst->direction * (worst->depth + cfg.margin);
    if (delta.y() < 0 && cur.lowest_y() + delta.y() < cfg.ground_y - cfg.tolerance) {
      // The ground is a hard floor: climb over the obstacle instead.
      delta = Vec3::UnitY() *
              (aabb_separation_along(cur.world_bounds(), against->world_bounds(), Vec3::UnitY()) +
               cfg.margin);
    }
    cur.object.position += delta;
  }
  if (!intersects_any(cur, fixed)) return cur.object;
  throw Error(ErrorKind::OptimizationFailed,
              fmt::format("object {} still intersects after {} resolution steps", moving.object.id,
                          cfg.max_resolve_steps));
}

std::vector<Vec3> surface_samples(const PlacedMesh& pm, const Vec3& facing, int n) {
  std::vector<double> cdf;
  const auto faces = facing_faces(pm, facing, cdf);
  std::vector<Vec3> out;
  if (faces.empty()) return out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const double u = halton(static_cast<std::uint64_t>(i), 2) * cdf.back();
    const std::size_t k = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()),
        faces.size() - 1);
    const auto tri = pm.world_face(static_cast<Eigen::Index>(faces[k]));
    const double s = std::sqrt(halton(static_cast<std::uint64_t>(i), 3));
    const double r2 = halton(static_cast<std::uint64_t>(i), 5);
    out.push_back((1 - s) * tri[0] + s * (1 - r2) * tri[1] + s * r2 * tri[2]);
  }
  return out;
}

SceneObject approach_until_contact(const PlacedMesh& moving, const PlacedMesh& neighbor,
                                   const GeoConfig& cfg) {
  PlacedMesh cur = moving;
  for (int k = 0; k < cfg.max_contact_iters; ++k) {
    Vec3 u = neighbor.object.position - cur.object.position;
    if (u.norm() < 1e-12) break;
    u.normalize();
    const auto samples = surface_samples(cur, u, cfg.n_surface_rays);
    if (samples.empty()) break;
    std::optional<double> d;
    for (const Vec3& p : samples) {
      if (auto t = touching_hit(neighbor, p, u, cfg.tolerance); t && (!d || *t < *d)) d = t;
    }
    if (!d || *d <= cfg.contact_eps) break;
    double step = *d / (1.0 + k);
    if (u.y() < 0) step = std::min(step, (cur.lowest_y() - cfg.ground_y) / -u.y());
    if (step <= 0) break;
    cur.object.position += step * u;
  }
  if (meshes_intersect(cur, neighbor)) return resolve_intersection(cur, {&neighbor}, cfg);
  return cur.object;
}

double support_gap(const PlacedMesh& moving, const std::vector<const PlacedMesh*>& others,
                   const GeoConfig& cfg) {
  double best = std::max(0.0, moving.lowest_y() - cfg.ground_y);
  const Vec3 down = -Vec3::UnitY();
  std::vector<Vec3> origins = surface_samples(moving, down, cfg.n_support_rays);
  for (Eigen::Index i = 0; i < moving.mesh->vertices().rows(); ++i) {
    origins.push_back(moving.to_world(moving.mesh->vertices().row(i).transpose()));
  }
  const Aabb mb = moving.world_bounds();
  for (const PlacedMesh* o : others) {
    const Aabb ob = o->world_bounds();
    if (ob.min().y() > mb.max().y() || ob.max().x() < mb.min().x() || ob.min().x() > mb.max().x() ||
        ob.max().z() < mb.min().z() || ob.min().z() > mb.max().z()) {
      continue;
    }
    for (const Vec3& p : origins) {
      if (auto t = touching_hit(*o, p, down, cfg.tolerance)) best = std::min(best, *t);
    }
    // Vertices of the other mesh rising into this one catch edge contacts.
    for (Eigen::Index i = 0; i < o->mesh->vertices().rows(); ++i) {
      const Vec3 p = o->to_world(o->mesh->vertices().row(i).transpose());
      if (auto t = touching_hit(moving, p, Vec3::UnitY(), cfg.tolerance)) best = std::min(best, *t);
    }
  }
  return best;
}

SceneObject settle_support(const PlacedMesh& moving, const std::vector<const PlacedMesh*>& others,
                           const GeoConfig& cfg) {
  const double gap = support_gap(moving, others, cfg);
  // A gap of exactly contact_eps (left by a margin push) drops to contact so
  // rounding cannot leave it just outside.
  if (gap <= cfg.contact_eps - cfg.tolerance) return moving.object;
  PlacedMesh cur = moving;
  cur.object.position.y() -= gap;
  if (!intersects_any(cur, others)) return cur.object;
  // A contact the rays missed: bisect for the deepest clear drop.
  double lo = 0, hi = gap;
  for (int i = 0; i < 48 && hi - lo > cfg.tolerance; ++i) {
    const double mid = 0.5 * (lo + hi);
    cur.object.position.y() = moving.object.position.y() - mid;
    (intersects_any(cur, others) ? hi : lo) = mid;
  }
  cur.object.position.y() = moving.object.position.y() - lo;
  return cur.object;
}

Arrangement OptimizeResult::arrangement(std::string description) const {
  Arrangement a;
  a.description = std::move(description);
  for (const auto& pm : placed) a.objects.push_back(pm.source_pose());
  return a;
}

OptimizeResult optimize_arrangement(std::vector<PlacedMesh> placed, bool touch,
                                    const GeoConfig& cfg) {
  cfg.validate();
  OptimizeResult result;
  result.placed.reserve(placed.size());
  for (std::size_t j = 0; j < placed.size(); ++j) {
    PlacedMesh cur = std::move(placed[j]);
    std::vector<const PlacedMesh*> settled;
    for (const auto& s : result.placed) settled.push_back(&s);

    if (const double low = cur.lowest_y(); low < cfg.ground_y) {
      cur.object.position.y() += cfg.ground_y - low;
    }
    try {
      if (!settled.empty()) {
        cur.object = resolve_intersection(cur, settled, cfg);
        if (touch) {
          const PlacedMesh* nearest = settled.front();
          for (const PlacedMesh* s : settled) {
            if ((s->object.position - cur.object.position).norm() <
                (nearest->object.position - cur.object.position).norm()) {
              nearest = s;
            }
          }
          cur.object = approach_until_contact(cur, *nearest, cfg);
          if (intersects_any(cur, settled)) cur.object = resolve_intersection(cur, settled, cfg);
        }
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::OptimizationFailed) throw;
      result.failures.push_back({j, cur.object.id, e.what()});
      // Fallback: lift clear of everything settled.
      double top = cfg.ground_y;
      for (const PlacedMesh* s : settled) top = std::max(top, s->world_bounds().max().y());
      cur.object.position.y() += top + cfg.margin - cur.lowest_y();
    }
    cur.object = settle_support(cur, settled, cfg);
    result.placed.push_back(std::move(cur));
  }
  return result;
}

double halton(std::uint64_t i, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

}  // namespace smc
