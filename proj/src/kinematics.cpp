#include "rover/kinematics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "rover/errors.hpp"

namespace rover
{

namespace
{

constexpr double kAngleEps = 1e-12;

bool is_left(WheelId id) {return id == WheelId::FL || id == WheelId::RL;}

// Folds an angle into the steering range by the (angle +/- pi, -speed) equivalence.
void normalize_into_limit(double & angle, double & speed, double limit)
{
  if (std::abs(angle) <= limit + kAngleEps) {
    return;
  }
  angle += angle > 0.0 ? -kPi : kPi;
  speed = -speed;
  if (std::abs(angle) > limit + kAngleEps) {
    throw KinematicsError("steering limit exceeded");
  }
}

WheelCommands commands_from_contact_velocities(
  const BodyTwist & twist, const RoverConfig & config)
{
  const auto positions = wheel_positions(config);
  WheelCommands out{};
  for (auto id : kWheels) {
    const auto & p = positions[static_cast<std::size_t>(id)];
    const double ux = twist.vx - twist.wz * p.y;
    const double uy = twist.vy + twist.wz * p.x;
    double speed = std::hypot(ux, uy) / config.wheel_radius;
    double angle = (ux == 0.0 && uy == 0.0) ? 0.0 : std::atan2(uy, ux);
    normalize_into_limit(angle, speed, config.steering_limit);
    out[static_cast<std::size_t>(id)] = {id, speed, angle};
  }
  return out;
}

}  // namespace

BodyTwist realizable_twist(const BodyTwist & twist, LocomotionMode mode, const RoverConfig &)
{
  switch (mode) {
    case LocomotionMode::SkidSteer: return {twist.vx, 0.0, twist.wz};
    case LocomotionMode::Crab: return {twist.vx, twist.vy, 0.0};
    case LocomotionMode::PointTurn: return {0.0, 0.0, twist.wz};
    case LocomotionMode::Ackermann:
      if (twist.vy != 0.0) {
        throw KinematicsError("lateral velocity unsupported in Ackermann");
      }
      return twist;
  }
  return twist;
}

WheelCommands inverse_kinematics(const BodyTwist & twist, LocomotionMode mode, const RoverConfig & config)
{
  const BodyTwist t = realizable_twist(twist, mode, config);
  if (mode != LocomotionMode::SkidSteer) {
    return commands_from_contact_velocities(t, config);
  }
  const double half_track = 0.5 * config.wheel_lateral_separation;
  WheelCommands out{};
  for (auto id : kWheels) {
    const double v = is_left(id) ? t.vx - t.wz * half_track : t.vx + t.wz * half_track;
    out[static_cast<std::size_t>(id)] = {id, v / config.wheel_radius, 0.0};
  }
  return out;
}

BodyTwist forward_odometry(const WheelCommands & commands, LocomotionMode mode, const RoverConfig & config)
{
  const auto positions = wheel_positions(config);
  const double r = config.wheel_radius;

  if (mode == LocomotionMode::SkidSteer) {
    Eigen::Matrix<double, 4, 2> a;
    Eigen::Vector4d b;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto & c = commands[i];
      const auto & p = positions[static_cast<std::size_t>(c.wheel_id)];
      a(i, 0) = 1.0;
      a(i, 1) = -p.y;
      b(i) = c.drive_speed * r * std::cos(c.steering_angle);
    }
    const Eigen::Vector2d x = a.colPivHouseholderQr().solve(b);
    return {x(0), 0.0, x(1)};
  }

  Eigen::Matrix<double, 8, 3> a = Eigen::Matrix<double, 8, 3>::Zero();
  Eigen::Matrix<double, 8, 1> b;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto & c = commands[i];
    const auto & p = positions[static_cast<std::size_t>(c.wheel_id)];
    const double v = c.drive_speed * r;
    a(2 * i, 0) = 1.0;
    a(2 * i, 2) = -p.y;
    a(2 * i + 1, 1) = 1.0;
    a(2 * i + 1, 2) = p.x;
    b(2 * i) = v * std::cos(c.steering_angle);
    b(2 * i + 1) = v * std::sin(c.steering_angle);
  }
  const Eigen::Vector3d x = a.colPivHouseholderQr().solve(b);
  return {x(0), x(1), x(2)};
}

IcrResult icr_of(const WheelCommands & commands, const RoverConfig & config)
{
  const auto positions = wheel_positions(config);
  // Axis of wheel i: { q : n_i . q = n_i . p_i }, n_i the rolling direction.
  Eigen::Matrix2d normal = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  std::array<Eigen::Vector2d, 4> n;
  std::array<double, 4> d{};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto & c = commands[i];
    const auto & p = positions[static_cast<std::size_t>(c.wheel_id)];
    n[i] = {std::cos(c.steering_angle), std::sin(c.steering_angle)};
    d[i] = n[i].dot(Eigen::Vector2d(p.x, p.y));
    normal += n[i] * n[i].transpose();
    rhs += n[i] * d[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(normal);
  if (eig.eigenvalues()(0) <= 1e-12 * normal.trace()) {
    return {};
  }
  const Eigen::Vector2d q = normal.ldlt().solve(rhs);
  double sq = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double dist = n[i].dot(q) - d[i];
    sq += dist * dist;
  }
  return {Point2{q.x(), q.y()}, std::sqrt(sq / 4.0)};
}

SteeringAngles canonical_steering(LocomotionMode mode, const RoverConfig & config)
{
  if (mode != LocomotionMode::PointTurn) {
    return {0.0, 0.0, 0.0, 0.0};
  }
  return steering_of(inverse_kinematics({0.0, 0.0, 1.0}, LocomotionMode::PointTurn, config));
}

SteeringAngles steering_of(const WheelCommands & commands)
{
  SteeringAngles out{};
  for (const auto & c : commands) {
    out[static_cast<std::size_t>(c.wheel_id)] = c.steering_angle;
  }
  return out;
}

Pose2D integrate_twist(const Pose2D & pose, const BodyTwist & twist, double dt)
{
  const double dtheta = twist.wz * dt;
  double dx = 0.0;
  double dy = 0.0;
  if (std::abs(dtheta) < 1e-9) {
    // Second-order series of the exact expressions below.
    dx = (twist.vx - 0.5 * twist.vy * dtheta) * dt;
    dy = (twist.vy + 0.5 * twist.vx * dtheta) * dt;
  } else {
    const double s = std::sin(dtheta);
    const double c = 1.0 - std::cos(dtheta);
    dx = (twist.vx * s - twist.vy * c) / twist.wz;
    dy = (twist.vx * c + twist.vy * s) / twist.wz;
  }
  const double ch = std::cos(pose.heading);
  const double sh = std::sin(pose.heading);
  return {pose.x + ch * dx - sh * dy, pose.y + sh * dx + ch * dy, pose.heading + dtheta};
}

Point2 body_to_world(const Pose2D & pose, const Point2 & body_point)
{
  const double ch = std::cos(pose.heading);
  const double sh = std::sin(pose.heading);
  return {pose.x + ch * body_point.x - sh * body_point.y, pose.y + sh * body_point.x + ch * body_point.y};
}

double wrap_angle(double angle)
{
  double a = std::remainder(angle, 2.0 * kPi);
  if (a <= -kPi) {
    a += 2.0 * kPi;
  }
  return a;
}

std::size_t step_count(double duration, double step)
{
  if (duration <= 0.0) {
    return 0;
  }
  return static_cast<std::size_t>(std::ceil(duration / step - 1e-9));
}

std::vector<TrackSample> simulate_pose_track(
  std::span<const TwistSegment> profile, const RoverConfig & config,
  const Point2 & marker_offset, double step)
{
  if (!(step > 0.0)) {
    throw ConfigError("non-positive integration step");
  }
  for (const auto & seg : profile) {
    if (!(seg.duration > 0.0)) {
      throw ConfigError("non-positive segment duration");
    }
  }

  Pose2D pose;
  double t0 = 0.0;
  std::vector<TrackSample> out;
  out.push_back({0.0, body_to_world(pose, marker_offset), pose.heading});
  for (const auto & seg : profile) {
    const BodyTwist twist = realizable_twist(seg.twist, seg.mode, config);
    // Validates the twist against the steering limits.
    (void)inverse_kinematics(twist, seg.mode, config);
    const std::size_t n = step_count(seg.duration, step);
    const Pose2D start = pose;
    for (std::size_t k = 1; k <= n; ++k) {
      const double elapsed = std::min(static_cast<double>(k) * step, seg.duration);
      const double dt = elapsed - std::min(static_cast<double>(k - 1) * step, seg.duration);
      pose = integrate_twist(pose, twist, dt);
      pose.heading = start.heading + twist.wz * elapsed;
      out.push_back({t0 + elapsed, body_to_world(pose, marker_offset), pose.heading});
    }
    t0 += seg.duration;
  }
  return out;
}

}  // namespace rover
