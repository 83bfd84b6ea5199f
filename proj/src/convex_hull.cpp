#include "rover/convex_hull.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace rover
{

namespace
{

struct Face
{
  std::array<int, 3> v;
  Eigen::Vector3d normal;  // unit, outward
  double offset;           // normal . x = offset on the plane
  bool alive{true};
};

Face make_face(const std::vector<Eigen::Vector3d> & pts, int a, int b, int c)
{
  Face f{{a, b, c}, Eigen::Vector3d::Zero(), 0.0};
  const Eigen::Vector3d n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
  const double len = n.norm();
  f.normal = len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::Zero();
  f.offset = f.normal.dot(pts[a]);
  return f;
}

}  // namespace

double ConvexHull3::volume() const
{
  if (faces.empty()) {
    return 0.0;
  }
  Eigen::Vector3d ref = Eigen::Vector3d::Zero();
  for (const auto & f : faces) {
    ref += points[f[0]];
  }
  ref /= static_cast<double>(faces.size());
  double v = 0.0;
  for (const auto & f : faces) {
    v += (points[f[0]] - ref).dot((points[f[1]] - ref).cross(points[f[2]] - ref));
  }
  return std::abs(v) / 6.0;
}

ConvexHull3 convex_hull(std::span<const Eigen::Vector3d> input)
{
  ConvexHull3 hull;
  hull.points.assign(input.begin(), input.end());
  const auto & pts = hull.points;
  const int n = static_cast<int>(pts.size());
  if (n < 4) {
    return hull;
  }

  Eigen::Vector3d lo = pts[0];
  Eigen::Vector3d hi = pts[0];
  for (const auto & p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double scale = (hi - lo).norm();
  if (!(scale > 0.0)) {
    return hull;
  }
  const double eps = 1e-10 * scale;

  // Initial simplex from extreme points.
  int i0 = 0;
  int i1 = 0;
  for (int i = 0; i < n; ++i) {
    if ((pts[i] - pts[i0]).squaredNorm() > (pts[i1] - pts[i0]).squaredNorm()) {
      i1 = i;
    }
  }
  const Eigen::Vector3d axis = (pts[i1] - pts[i0]).normalized();
  int i2 = -1;
  double best = eps;
  for (int i = 0; i < n; ++i) {
    const double d = (pts[i] - pts[i0]).cross(axis).norm();
    if (d > best) {
      best = d;
      i2 = i;
    }
  }
  if (i2 < 0) {
    return hull;
  }
  const Eigen::Vector3d plane_n = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  int i3 = -1;
  best = eps;
  for (int i = 0; i < n; ++i) {
    const double d = std::abs(plane_n.dot(pts[i] - pts[i0]));
    if (d > best) {
      best = d;
      i3 = i;
    }
  }
  if (i3 < 0) {
    return hull;
  }

  std::vector<Face> faces;
  faces.push_back(make_face(pts, i0, i1, i2));
  faces.push_back(make_face(pts, i0, i3, i1));
  faces.push_back(make_face(pts, i1, i3, i2));
  faces.push_back(make_face(pts, i2, i3, i0));
  const Eigen::Vector3d centroid = 0.25 * (pts[i0] + pts[i1] + pts[i2] + pts[i3]);
  for (auto & f : faces) {
    if (f.normal.dot(centroid) - f.offset > 0.0) {
      f = make_face(pts, f.v[0], f.v[2], f.v[1]);
    }
  }

  std::vector<int> visible;
  std::map<std::pair<int, int>, int> edge_owner;
  for (int p = 0; p < n; ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) {
      continue;
    }
    visible.clear();
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
      if (faces[f].alive && faces[f].normal.dot(pts[p]) - faces[f].offset > eps) {
        visible.push_back(f);
      }
    }
    if (visible.empty()) {
      continue;
    }
    edge_owner.clear();
    for (int f : visible) {
      const auto & v = faces[f].v;
      for (int e = 0; e < 3; ++e) {
        edge_owner[{v[e], v[(e + 1) % 3]}] = f;
      }
    }
    std::vector<std::pair<int, int>> horizon;
    for (const auto & [edge, owner] : edge_owner) {
      if (edge_owner.find({edge.second, edge.first}) == edge_owner.end()) {
        horizon.push_back(edge);
      }
    }
    for (int f : visible) {
      faces[f].alive = false;
    }
    for (const auto & [a, b] : horizon) {
      faces.push_back(make_face(pts, a, b, p));
    }
  }

  for (const auto & f : faces) {
    if (f.alive) {
      hull.faces.push_back(f.v);
    }
  }
  return hull;
}

double convex_hull_volume(std::span<const Eigen::Vector3d> points)
{
  return convex_hull(points).volume();
}

}  // namespace rover
