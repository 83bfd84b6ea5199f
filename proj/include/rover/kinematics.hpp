#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rover/rover_model.hpp"

namespace rover
{

/// Instantaneous centre of rotation. `point` is empty for pure translation
/// (all wheel axes parallel).
struct IcrResult
{
  std::optional<Point2> point;
  double residual{0.0};  ///< RMS distance from `point` to the wheel axes [m]

  bool at_infinity() const {return !point.has_value();}
};

/**
 * Body twist to per-wheel drive speed and steering angle.
 *
 * Every wheel's rolling direction is aligned with the contact-point velocity
 * v + wz x p of the mode's realizable twist:
 *  - SkidSteer: steering fixed at 0, left/right speeds (vx -/+ wz W/2)/r; vy ignored.
 *  - Crab: common steering atan2(vy, vx); wz ignored.
 *  - PointTurn: rotation about the body centre; vx, vy ignored.
 *  - Ackermann: vy must be zero; all axes meet at the ICR (0, vx/wz).
 *
 * Angles outside +/-steering_limit are folded by pi with a negated drive speed.
 * Throws KinematicsError for Ackermann with vy != 0 or an unreachable angle.
 */
WheelCommands inverse_kinematics(const BodyTwist & twist, LocomotionMode mode, const RoverConfig & config);

/// Least-squares twist reproducing the measured wheel contact velocities
/// without slip. SkidSteer uses rolling-direction speeds only (vy = 0).
BodyTwist forward_odometry(const WheelCommands & commands, LocomotionMode mode, const RoverConfig & config);

/// Least-squares intersection of the four wheel axes.
IcrResult icr_of(const WheelCommands & commands, const RoverConfig & config);

/// The part of `twist` the mode can execute (e.g. Crab drops wz).
BodyTwist realizable_twist(const BodyTwist & twist, LocomotionMode mode, const RoverConfig & config);

/// Steering angles a mode holds independent of the commanded magnitude:
/// PointTurn tangent angles (normalized), zero for every other mode.
SteeringAngles canonical_steering(LocomotionMode mode, const RoverConfig & config);

SteeringAngles steering_of(const WheelCommands & commands);

struct Pose2D
{
  double x{0.0};
  double y{0.0};
  double heading{0.0};  ///< [rad], not wrapped
};

/// Exact rigid-body motion under a constant body twist for `dt` seconds.
Pose2D integrate_twist(const Pose2D & pose, const BodyTwist & twist, double dt);

Point2 body_to_world(const Pose2D & pose, const Point2 & body_point);

double wrap_angle(double angle);

struct TwistSegment
{
  double duration{0.0};  ///< [s]
  BodyTwist twist;
  LocomotionMode mode{LocomotionMode::SkidSteer};
};

struct TrackSample
{
  double t{0.0};
  Point2 marker;         ///< marker position, world frame
  double heading{0.0};   ///< body heading [rad], unwrapped
};

/// Slip-free planar track of a marker rigidly attached at `marker_offset`
/// (body frame). Samples at t=0 and after every integration step; the last
/// step of a segment is shortened to land on the segment end.
/// Throws ConfigError for non-positive durations or step.
std::vector<TrackSample> simulate_pose_track(
  std::span<const TwistSegment> profile, const RoverConfig & config,
  const Point2 & marker_offset, double step = 0.01);

/// Splits `duration` into steps of at most `step`, the last one shortened.
/// Returns the number of steps; zero only for zero duration.
std::size_t step_count(double duration, double step);

}  // namespace rover
