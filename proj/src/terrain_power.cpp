#include "rover/terrain_power.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "rover/errors.hpp"

namespace rover
{

TerrainParams validate_terrain(const TerrainParams & terrain)
{
  auto in_unit = [](double v) {return v > 0.0 && v <= 1.0;};
  if (!in_unit(terrain.skid_rotation_efficiency) || !in_unit(terrain.point_turn_efficiency)) {
    throw ConfigError("rotation efficiency outside (0, 1]");
  }
  if (!(terrain.slope_deg >= 0.0 && terrain.slope_deg < 90.0)) {
    throw ConfigError("slope outside [0, 90)");
  }
  if (!(terrain.longitudinal_slip_ratio >= 0.0 && terrain.longitudinal_slip_ratio < 1.0)) {
    throw ConfigError("longitudinal slip ratio outside [0, 1)");
  }
  if (!(terrain.noise_std >= 0.0)) {
    throw ConfigError("negative noise_std");
  }
  return terrain;
}

PowerModelParams validate_power(const PowerModelParams & power)
{
  const double fields[] = {power.idle_power_per_drive, power.rolling_resistance_coeff,
    power.steering_hold_power, power.steering_move_power, power.speed_quadratic_coeff,
    power.lateral_scrub_coeff, power.drawbar_force};
  for (double f : fields) {
    if (!(f >= 0.0) || !std::isfinite(f)) {
      throw ConfigError("power model parameters must be finite and non-negative");
    }
  }
  if (!(power.drivetrain_efficiency > 0.0 && power.drivetrain_efficiency <= 1.0)) {
    throw ConfigError("drivetrain efficiency outside (0, 1]");
  }
  return power;
}

BodyTwist apply_slip(const BodyTwist & commanded, LocomotionMode mode, const TerrainParams & terrain, Rng * rng)
{
  const double linear = 1.0 - terrain.longitudinal_slip_ratio;
  double yaw = 1.0;
  if (mode == LocomotionMode::SkidSteer) {
    yaw = terrain.skid_rotation_efficiency;
  } else if (mode == LocomotionMode::PointTurn) {
    yaw = terrain.point_turn_efficiency;
  }
  BodyTwist out{commanded.vx * linear, commanded.vy * linear, commanded.wz * yaw};
  if (rng != nullptr && terrain.noise_std > 0.0) {
    std::normal_distribution<double> gauss(0.0, terrain.noise_std);
    out.vx *= 1.0 + gauss(*rng);
    out.vy *= 1.0 + gauss(*rng);
    out.wz *= 1.0 + gauss(*rng);
  }
  return out;
}

double ActuatorPower::total() const
{
  double sum = 0.0;
  for (double p : drive) {
    sum += p;
  }
  for (double p : steering) {
    sum += p;
  }
  return sum;
}

ActuatorPower drive_power(
  const WheelCommands & commands, const BodyTwist & achieved, const TerrainParams & terrain,
  const RoverConfig & config, const PowerModelParams & power, const std::array<bool, 4> & steering_moving)
{
  const double slope = deg2rad(terrain.slope_deg);
  const double wheel_load = 0.25 * config.mass * config.gravity;
  const double traction = (power.rolling_resistance_coeff * std::cos(slope) + std::sin(slope)) * wheel_load;
  const double normal_load = wheel_load * std::cos(slope);
  const auto positions = wheel_positions(config);

  ActuatorPower out;
  for (const auto & c : commands) {
    const auto i = static_cast<std::size_t>(c.wheel_id);
    const double v = std::abs(c.drive_speed) * config.wheel_radius;
    const auto & p = positions[i];
    const double ux = achieved.vx - achieved.wz * p.y;
    const double uy = achieved.vy + achieved.wz * p.x;
    const double v_lat = -std::sin(c.steering_angle) * ux + std::cos(c.steering_angle) * uy;
    const double mechanical = std::max(traction, 0.0) * v +
      power.speed_quadratic_coeff * v * v +
      power.lateral_scrub_coeff * normal_load * std::abs(v_lat) +
      0.25 * power.drawbar_force * v;
    out.drive[i] = power.idle_power_per_drive + mechanical / power.drivetrain_efficiency;
    out.steering[i] = steering_moving[i] ? power.steering_move_power : power.steering_hold_power;
  }
  return out;
}

ActuatorPower drive_power(
  const WheelCommands & commands, const BodyTwist & achieved, const TerrainParams & terrain,
  const RoverConfig & config, const PowerModelParams & power, bool steering_in_motion)
{
  const std::array<bool, 4> moving{steering_in_motion, steering_in_motion, steering_in_motion,
    steering_in_motion};
  return drive_power(commands, achieved, terrain, config, power, moving);
}

RepositionCost steering_reposition_energy(
  const SteeringAngles & from, const SteeringAngles & to,
  const RoverConfig & config, const PowerModelParams & power)
{
  double max_delta = 0.0;
  int moving = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double delta = std::abs(to[i] - from[i]);
    if (delta > 1e-12) {
      ++moving;
      max_delta = std::max(max_delta, delta);
    }
  }
  if (moving == 0) {
    return {};
  }
  const double duration = max_delta / config.steering_rate;
  return {power.steering_move_power * moving * duration, duration, moving};
}

RepositionCost steering_reposition_energy(
  LocomotionMode from, LocomotionMode to, const RoverConfig & config, const PowerModelParams & power)
{
  return steering_reposition_energy(canonical_steering(from, config), canonical_steering(to, config), config, power);
}

double TelemetryRecord::power() const
{
  double sum = 0.0;
  for (const auto & a : actuators) {
    sum += a.voltage * a.current;
  }
  return sum;
}

namespace
{

TelemetryRecord make_record(
  double t, const Pose2D & pose, const Point2 & marker_offset, LocomotionMode mode,
  const WheelCommands & commands, const BodyTwist & commanded, const BodyTwist & odo,
  const ActuatorPower & power)
{
  TelemetryRecord rec;
  rec.t = t;
  const Point2 marker = body_to_world(pose, marker_offset);
  rec.pose = {marker.x, marker.y, wrap_angle(pose.heading)};
  rec.mode = mode;
  rec.commanded_twist = commanded;
  rec.odo_twist = odo;
  for (const auto & c : commands) {
    const auto i = static_cast<std::size_t>(c.wheel_id);
    rec.drive_speed[i] = c.drive_speed;
    rec.steering_angle[i] = c.steering_angle;
    rec.actuators[i] = {kBusVoltage, power.drive[i] / kBusVoltage};
    rec.actuators[4 + i] = {kBusVoltage, power.steering[i] / kBusVoltage};
  }
  return rec;
}

WheelCommands with_steering(const SteeringAngles & angles)
{
  WheelCommands out{};
  for (auto id : kWheels) {
    const auto i = static_cast<std::size_t>(id);
    out[i] = {id, 0.0, angles[i]};
  }
  return out;
}

}  // namespace

std::vector<TelemetryRecord> simulate_traverse(const Scenario & scenario)
{
  const RoverConfig config = validate_config(scenario.config);
  const TerrainParams terrain = validate_terrain(scenario.terrain);
  const PowerModelParams power = validate_power(scenario.power);
  if (!(scenario.step > 0.0)) {
    throw ConfigError("non-positive integration step");
  }
  for (const auto & seg : scenario.profile) {
    if (seg.duration < 0.0 || !std::isfinite(seg.duration)) {
      throw ConfigError("negative segment duration");
    }
  }

  Rng rng(terrain.rng_seed);
  std::vector<TelemetryRecord> out;
  Pose2D pose;
  double t = 0.0;
  SteeringAngles steering{0.0, 0.0, 0.0, 0.0};
  const BodyTwist zero{};
  WheelCommands last = with_steering(steering);
  LocomotionMode last_mode = scenario.profile.empty() ? LocomotionMode::SkidSteer : scenario.profile.front().mode;
  BodyTwist last_cmd;

  for (const auto & seg : scenario.profile) {
    if (seg.duration == 0.0) {
      continue;
    }
    const BodyTwist commanded = realizable_twist(seg.twist, seg.mode, config);
    const WheelCommands commands = inverse_kinematics(commanded, seg.mode, config);
    const SteeringAngles target = steering_of(commands);

    const RepositionCost repos = steering_reposition_energy(steering, target, config, power);
    if (repos.moving_units > 0) {
      std::array<bool, 4> moving{};
      for (std::size_t i = 0; i < 4; ++i) {
        moving[i] = std::abs(target[i] - steering[i]) > 1e-12;
      }
      const WheelCommands idle_wheels = with_steering(steering);
      const ActuatorPower p = drive_power(idle_wheels, zero, terrain, config, power, moving);
      const std::size_t n = step_count(repos.duration, scenario.step);
      for (std::size_t k = 0; k < n; ++k) {
        const double frac = static_cast<double>(k) * scenario.step / repos.duration;
        SteeringAngles now{};
        for (std::size_t i = 0; i < 4; ++i) {
          now[i] = steering[i] + (target[i] - steering[i]) * frac;
        }
        out.push_back(make_record(t + static_cast<double>(k) * scenario.step, pose,
          scenario.marker_offset, seg.mode, with_steering(now), zero, zero, p));
      }
      t += repos.duration;
      steering = target;
    }

    const BodyTwist odo = forward_odometry(commands, seg.mode, config);
    const std::size_t n = step_count(seg.duration, scenario.step);
    for (std::size_t k = 0; k < n; ++k) {
      const double start = static_cast<double>(k) * scenario.step;
      const double dt = std::min(start + scenario.step, seg.duration) - start;
      const BodyTwist achieved = apply_slip(commanded, seg.mode, terrain, &rng);
      const ActuatorPower p = drive_power(commands, achieved, terrain, config, power, false);
      out.push_back(make_record(t + start, pose, scenario.marker_offset, seg.mode, commands, commanded, odo, p));
      pose = integrate_twist(pose, achieved, dt);
    }
    t += seg.duration;
    last = commands;
    last_mode = seg.mode;
    last_cmd = commanded;
  }

  if (!out.empty()) {
    const ActuatorPower p = drive_power(last, apply_slip(last_cmd, last_mode, terrain), terrain, config, power, false);
    out.push_back(make_record(t, pose, scenario.marker_offset, last_mode, last, last_cmd,
      forward_odometry(last, last_mode, config), p));
  }
  return out;
}

double model_cot(double slope_deg, double velocity, const RoverConfig & config, const PowerModelParams & power)
{
  const WheelCommands commands = inverse_kinematics({velocity, 0.0, 0.0}, LocomotionMode::SkidSteer, config);
  TerrainParams terrain;
  terrain.slope_deg = slope_deg;
  const double p = drive_power(commands, {velocity, 0.0, 0.0}, terrain, config, power, false).total();
  return p / (config.mass * config.gravity * velocity);
}

CalibrationResult calibrate_power(
  std::span<const CotRow> rows, const RoverConfig & config, const PowerModelParams & fixed)
{
  constexpr int kParams = 3;
  if (rows.size() < static_cast<std::size_t>(kParams)) {
    throw ConfigError("underdetermined calibration");
  }
  validate_power(fixed);
  const double mg = config.mass * config.gravity;
  const double eta = fixed.drivetrain_efficiency;

  // CoT = 4 idle/(m g v) + cos(slope) Crr/eta + 4 k v/(m g eta) + known terms.
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd a(n, kParams);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto & row = rows[static_cast<std::size_t>(i)];
    if (!(row.velocity > 0.0)) {
      throw ConfigError("calibration row with non-positive velocity");
    }
    const double slope = deg2rad(row.slope_deg);
    const double v = row.velocity;
    a(i, 0) = 4.0 / (mg * v);
    a(i, 1) = std::cos(slope);
    a(i, 2) = 4.0 * v / (mg * eta);
    const double known = 4.0 * fixed.steering_hold_power / (mg * v) + std::sin(slope) / eta +
      fixed.drawbar_force / (mg * eta);
    b(i) = row.cot - known;
  }
  if (a.colPivHouseholderQr().rank() < kParams) {
    throw NumericalError("degenerate calibration rows (need distinct velocities)");
  }

  // Exact NNLS for three unknowns: the optimum is the unconstrained solution
  // on one of the 2^3 supports.
  Eigen::Vector3d best = Eigen::Vector3d::Zero();
  double best_ssr = b.squaredNorm();
  for (int mask = 1; mask < (1 << kParams); ++mask) {
    std::vector<Eigen::Index> cols;
    for (int j = 0; j < kParams; ++j) {
      if (mask & (1 << j)) {
        cols.push_back(j);
      }
    }
    Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      sub.col(static_cast<Eigen::Index>(j)) = a.col(cols[j]);
    }
    const Eigen::VectorXd x = sub.colPivHouseholderQr().solve(b);
    if ((x.array() < 0.0).any()) {
      continue;
    }
    const double ssr = (sub * x - b).squaredNorm();
    if (ssr < best_ssr) {
      best_ssr = ssr;
      best.setZero();
      for (std::size_t j = 0; j < cols.size(); ++j) {
        best(cols[j]) = x(static_cast<Eigen::Index>(j));
      }
    }
  }

  CalibrationResult result;
  result.params = fixed;
  result.params.idle_power_per_drive = best(0);
  result.params.rolling_resistance_coeff = best(1) * eta;
  result.params.speed_quadratic_coeff = best(2);
  const Eigen::VectorXd residual = a * best - b;
  for (Eigen::Index i = 0; i < n; ++i) {
    result.residuals.push_back(residual(i));
    result.max_abs_residual = std::max(result.max_abs_residual, std::abs(residual(i)));
  }
  return result;
}

std::vector<CotRow> reference_cot_table()
{
  return {
    {"Excavator", 0.0, 0.03, 0.553},
    {"Nominal", 0.0, 0.03, 0.646},
    {"Nominal", 0.0, 0.06, 1.10},
    {"Nominal", 0.0, 0.08, 1.39},
    {"Slope up", 10.0, 0.06, 0.891},
    {"Slope up", 15.0, 0.06, 0.769},
    {"Slope up", 20.0, 0.06, 0.591},
    {"Slope up", 25.0, 0.06, 0.694},
  };
}

}  // namespace rover
