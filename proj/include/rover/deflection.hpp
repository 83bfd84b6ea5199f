#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <optional>
#include <span>
#include <vector>

#include "rover/errors.hpp"

namespace rover
{

/// Wheel as three coaxial circles in the wheel frame (z along the axle,
/// pointing from the inboard face to the outboard face, origin at mid-width):
/// inboard perimeter at z = -width/2, outboard perimeter at z = +width/2 and
/// the hub plate (radius hub_radius) on the inboard face.
struct WheelModel3D
{
  double radius{0.15};
  double width{0.12};
  double hub_radius{0.05};
};

WheelModel3D validate_wheel_model(const WheelModel3D & model);

enum class WheelCircle : std::size_t { Inboard = 0, Outboard = 1, Hub = 2 };

/// Radius and axial offset of one of the model's circles.
struct CircleGeometry
{
  double radius;
  double z;
};
CircleGeometry circle_geometry(const WheelModel3D & model, WheelCircle circle);

/// Pinhole camera, x right, y down, z forward, no distortion.
struct CameraIntrinsics
{
  double fx{800.0};
  double fy{800.0};
  double cx{640.0};
  double cy{480.0};
  int width{1280};
  int height{960};
};

CameraIntrinsics validate_camera(const CameraIntrinsics & cam);

/// Wheel frame expressed in the camera frame: x_cam = rotation * x_wheel + translation.
struct WheelPose
{
  Eigen::Matrix3d rotation{Eigen::Matrix3d::Identity()};
  Eigen::Vector3d translation{0.0, 0.0, 1.0};

  static WheelPose from_rotation_vector(const Eigen::Vector3d & rotation_vector, const Eigen::Vector3d & translation);
  Eigen::Vector3d rotation_vector() const;
  /// Axle direction (wheel z) in the camera frame.
  Eigen::Vector3d axle() const {return rotation.col(2);}
};

using ImageLoop = std::vector<Eigen::Vector2d>;
using WheelLoops = std::array<ImageLoop, 3>;  ///< indexed by WheelCircle

/// Projects `samples_per_circle` points of each circle, parameter angle
/// 2 pi k / n. Throws NumericalError("wheel behind camera") if any sampled
/// point has non-positive depth.
WheelLoops project_wheel(
  const WheelModel3D & model, const WheelPose & pose, const CameraIntrinsics & cam, int samples_per_circle);

Eigen::Vector2d project_point(const CameraIntrinsics & cam, const Eigen::Vector3d & p_cam);

struct PoseFitOptions
{
  int max_iterations{200};
  double relative_tolerance{1e-12};  ///< on the cost decrease
};

struct PoseFit
{
  WheelPose pose;
  double rms{0.0};  ///< RMS point-to-curve distance [px]
  int iterations{0};
};

/// Non-convergence: carries the best pose found and its residual.
class PoseFitError : public NumericalError
{
public:
  PoseFitError(const std::string & what, WheelPose best, double rms)
  : NumericalError(what), best_(std::move(best)), rms_(rms) {}

  const WheelPose & best_pose() const {return best_;}
  double rms() const {return rms_;}

private:
  WheelPose best_;
  double rms_;
};

/**
 * Levenberg-Marquardt fit of the wheel pose to observed image loops,
 * minimizing point-to-projected-curve distance. Each observed point carries
 * its own curve parameter as a nuisance variable. The spin about the axle is
 * unobservable from circles and is not updated.
 *
 * Needs >= 8 points per loop. Convergence basin: about +/-20 deg rotation and
 * +/-20 % depth around the truth.
 */
PoseFit fit_wheel_pose(
  const WheelLoops & observed, const WheelModel3D & model, const CameraIntrinsics & cam,
  const WheelPose & initial_guess, const PoseFitOptions & options = {});

struct Circle2
{
  Eigen::Vector2d center{0.0, 0.0};
  double radius{1.0};
};

/// Line through `a` and `b` against a circle: 0, 1 (tangent within 1e-12
/// relative) or 2 points, ordered along a -> b. Throws ConfigError for a == b.
std::vector<Eigen::Vector2d> chord_circle_intersections(
  const Circle2 & circle, const Eigen::Vector2d & a, const Eigen::Vector2d & b);

/// Image line (two endpoints, px) marking where the tyre is flattened.
struct ChordAnnotation
{
  Eigen::Vector2d p1;
  Eigen::Vector2d p2;
};

struct DeflectionEstimate
{
  int frame{0};
  double volume{0.0};    ///< [m^3]
  double fraction{0.0};  ///< of pi r^2 width
  bool implausible{false};  ///< fraction > 0.5
};

struct DeflectionOptions
{
  double arc_step_deg{1.0};
};

/**
 * Back-projects the chord onto the inboard perimeter plane, intersects it
 * with the perimeter, mirrors the cut onto the outboard perimeter, samples
 * both arcs on the deflected side (the side holding the lowest image point of
 * the perimeter) and takes the convex hull volume of the resulting points.
 * No chord, or a chord missing/tangent to the perimeter, gives fraction 0.
 */
DeflectionEstimate deflected_volume_fraction(
  const WheelModel3D & model, const WheelPose & pose, const CameraIntrinsics & cam,
  const std::optional<ChordAnnotation> & chord, int frame = 0, const DeflectionOptions & options = {});

/// Centred moving average over `window` frames (odd, >= 1), truncated at the
/// ends. Volume and fraction are smoothed together.
std::vector<DeflectionEstimate> smooth_deflection_series(std::span<const DeflectionEstimate> raw, int window);

/// Angle between the axle directions of two poses [rad].
double axle_angle_error(const WheelPose & a, const WheelPose & b);

}  // namespace rover
