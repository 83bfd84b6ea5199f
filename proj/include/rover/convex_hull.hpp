#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <vector>

namespace rover
{

/// Triangulated convex hull; faces are counter-clockwise seen from outside.
struct ConvexHull3
{
  std::vector<Eigen::Vector3d> points;
  std::vector<std::array<int, 3>> faces;

  double volume() const;
};

/// Incremental hull. Points within a relative tolerance of a face plane count
/// as inside, so coplanar input (prism caps) is handled. Fewer than four
/// affinely independent points give an empty hull with zero volume.
ConvexHull3 convex_hull(std::span<const Eigen::Vector3d> points);

double convex_hull_volume(std::span<const Eigen::Vector3d> points);

}  // namespace rover
