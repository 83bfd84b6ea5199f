#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rover/kinematics.hpp"
#include "rover/rover_model.hpp"

namespace rover
{

struct TerrainParams
{
  double slope_deg{0.0};                 ///< ramp inclination, [0, 90)
  double skid_rotation_efficiency{0.75}; ///< achieved/commanded yaw rate in SkidSteer
  double point_turn_efficiency{1.0};     ///< achieved/commanded yaw rate in PointTurn
  double longitudinal_slip_ratio{0.05};  ///< linear speed loss, every mode
  double noise_std{0.0};                 ///< relative, per twist component
  std::uint64_t rng_seed{0};

  bool operator==(const TerrainParams &) const = default;
};

TerrainParams validate_terrain(const TerrainParams & terrain);

/// Electrical power model. Per drive unit:
///   P = idle + [(Crr cos(slope) + sin(slope)) (m g / 4) v + k v^2
///               + mu_lat (m g / 4) cos(slope) |v_lat| + F_drawbar v / 4] / eta
/// with v = |drive_speed| r and v_lat the sideways scrub speed of the contact
/// point under the achieved twist. Steering units draw the move or hold power.
struct PowerModelParams
{
  double idle_power_per_drive{0.0};        ///< [W]
  double rolling_resistance_coeff{0.1407}; ///< Crr
  double drivetrain_efficiency{0.7};       ///< eta in (0, 1]
  double steering_hold_power{0.0};         ///< [W] per unit
  double steering_move_power{8.0};         ///< [W] per unit
  double speed_quadratic_coeff{2148.6843}; ///< k [W s^2/m^2]
  double lateral_scrub_coeff{0.6};         ///< mu_lat
  double drawbar_force{0.0};               ///< payload/tool resistance [N], off by default

  bool operator==(const PowerModelParams &) const = default;
};

PowerModelParams validate_power(const PowerModelParams & power);

using Rng = std::mt19937_64;

/// Commanded twist to achieved twist. Linear components lose
/// `longitudinal_slip_ratio`; yaw is scaled by the mode's rotation efficiency
/// (SkidSteer, PointTurn). With noise_std > 0 and an `rng`, every component is
/// further multiplied by (1 + noise_std N(0,1)).
BodyTwist apply_slip(
  const BodyTwist & commanded, LocomotionMode mode, const TerrainParams & terrain, Rng * rng = nullptr);

struct ActuatorPower
{
  std::array<double, 4> drive{};     ///< indexed by WheelId
  std::array<double, 4> steering{};  ///< indexed by WheelId

  double total() const;
};

ActuatorPower drive_power(
  const WheelCommands & commands, const BodyTwist & achieved, const TerrainParams & terrain,
  const RoverConfig & config, const PowerModelParams & power, const std::array<bool, 4> & steering_moving);

ActuatorPower drive_power(
  const WheelCommands & commands, const BodyTwist & achieved, const TerrainParams & terrain,
  const RoverConfig & config, const PowerModelParams & power, bool steering_in_motion);

struct RepositionCost
{
  double energy{0.0};    ///< [J]
  double duration{0.0};  ///< [s]
  int moving_units{0};
};

/// All units move together and finish at max |delta| / steering_rate.
RepositionCost steering_reposition_energy(
  const SteeringAngles & from, const SteeringAngles & to,
  const RoverConfig & config, const PowerModelParams & power);

/// Mode overload over canonical_steering() of each mode.
RepositionCost steering_reposition_energy(
  LocomotionMode from, LocomotionMode to, const RoverConfig & config, const PowerModelParams & power);

/// Bus voltage used to split synthesized power into voltage and current.
inline constexpr double kBusVoltage = 24.0;

/// Actuator order in telemetry: drives FL, FR, RL, RR then steering FL, FR, RL, RR.
inline constexpr std::size_t kActuatorCount = 8;

struct ActuatorSample
{
  double voltage{0.0};  ///< [V]
  double current{0.0};  ///< [A]
};

struct TelemetryRecord
{
  double t{0.0};
  Pose2D pose;            ///< marker position and body heading (wrapped), ground truth
  bool pose_valid{true};  ///< false inside ground-truth dropouts
  LocomotionMode mode{LocomotionMode::SkidSteer};
  BodyTwist odo_twist;
  BodyTwist commanded_twist;
  std::array<ActuatorSample, kActuatorCount> actuators{};
  std::array<double, 4> drive_speed{};     ///< [rad/s]
  std::array<double, 4> steering_angle{};  ///< [rad]

  double power() const;
};

struct Scenario
{
  std::vector<TwistSegment> profile;
  TerrainParams terrain;
  RoverConfig config;
  PowerModelParams power;
  Point2 marker_offset;
  double step{0.01};
};

/**
 * Synthesizes campaign-like telemetry. Per segment: a steering reposition
 * phase when the wheels must turn (zero body motion, steering power only),
 * then the motion phase. Records are emitted at the start of every step
 * plus one terminal record; each record's power holds until the next one.
 * Odometry reflects the commanded wheel speeds; the pose follows the
 * slipped twist.
 */
std::vector<TelemetryRecord> simulate_traverse(const Scenario & scenario);

struct CotRow
{
  std::string label;
  double slope_deg{0.0};
  double velocity{0.0};  ///< [m/s]
  double cot{0.0};
};

/// Cost of transport the power model predicts for a straight drive at `velocity`.
double model_cot(double slope_deg, double velocity, const RoverConfig & config, const PowerModelParams & power);

struct CalibrationResult
{
  PowerModelParams params;
  std::vector<double> residuals;  ///< model - measured, per row
  double max_abs_residual{0.0};
};

/// Non-negative least squares for (idle_power_per_drive, rolling_resistance_coeff,
/// speed_quadratic_coeff) minimizing squared CoT residuals. Every other field of
/// `fixed` (efficiency, steering powers, drawbar) is held. Needs >= 3 rows.
CalibrationResult calibrate_power(
  std::span<const CotRow> rows, const RoverConfig & config, const PowerModelParams & fixed = {});

/// The eight rows of the breadboard's cost-of-transport campaign.
std::vector<CotRow> reference_cot_table();

}  // namespace rover
