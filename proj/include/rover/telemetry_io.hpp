#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rover/deflection.hpp"
#include "rover/kinematics.hpp"
#include "rover/terrain_power.hpp"

namespace rover
{

// ---- mocap / actuator logs --------------------------------------------------

struct MocapRecord
{
  double t{0.0};
  double x{0.0};
  double y{0.0};
  double z{0.0};
  double qw{1.0};
  double qx{0.0};
  double qy{0.0};
  double qz{0.0};
  std::string marker_id;

  double yaw() const;
};

/// Header `t,x,y,z,qw,qx,qy,qz,marker`. Throws DataError with the line number
/// on malformed rows, non-unit quaternions (1e-6) and decreasing time.
std::vector<MocapRecord> parse_mocap_csv(std::istream & in);
std::vector<MocapRecord> load_mocap_csv(const std::string & path);

/// Telemetry actuator order; see kActuatorCount.
inline constexpr std::array<const char *, kActuatorCount> kActuatorNames{
  "drive_FL", "drive_FR", "drive_RL", "drive_RR", "steer_FL", "steer_FR", "steer_RL", "steer_RR"};

struct ActuatorRecord
{
  double t{0.0};
  std::size_t actuator{0};  ///< index into kActuatorNames
  double voltage{0.0};
  double current{0.0};
  double measurement{0.0};  ///< drive speed [rad/s] or steering angle [rad]
};

/// Header `t,actuator,voltage,current,measurement`; time non-decreasing per actuator.
std::vector<ActuatorRecord> parse_actuator_csv(std::istream & in);
std::vector<ActuatorRecord> load_actuator_csv(const std::string & path);

/**
 * Joins the logs on the actuator clock (distinct actuator timestamps).
 * Actuator channels are sample-and-hold; mocap position and yaw are
 * linearly interpolated. A timestamp outside the mocap span, or bracketed by
 * mocap samples more than `max_gap` apart, becomes a hole (pose_valid false).
 * Odometry is recomputed from the measured wheel speeds and angles.
 * Throws DataError("no temporal overlap") for disjoint time ranges.
 */
std::vector<TelemetryRecord> align_series(
  const std::vector<MocapRecord> & mocap, const std::vector<ActuatorRecord> & actuators,
  double max_gap, LocomotionMode mode, const RoverConfig & config);

// ---- telemetry CSV ------------------------------------------------------------

std::string telemetry_header();
/// Fixed 6-decimal columns; see telemetry_header().
void write_telemetry_csv(std::ostream & out, const std::vector<TelemetryRecord> & records);
std::vector<TelemetryRecord> parse_telemetry_csv(std::istream & in);
std::vector<TelemetryRecord> load_telemetry_csv(const std::string & path);

// ---- twist profiles and scenarios ---------------------------------------------

/// Header `duration_s,vx,vy,wz,mode`.
std::vector<TwistSegment> parse_twist_profile(std::istream & in, int line_offset = 0);

struct ScenarioFile
{
  std::string name;
  std::string label;  ///< report row label, e.g. "Nominal"
  Scenario scenario;
};

/// `key = value` lines (`name`, `label`, `rover.*`, `terrain.*`, `power.*`,
/// `marker.x`, `marker.y`, `sim.step`) followed by `[profile]` and the twist
/// profile CSV. Unknown keys are errors.
ScenarioFile parse_scenario(std::istream & in);
ScenarioFile load_scenario(const std::string & path);
void write_scenario(std::ostream & out, const ScenarioFile & file);

/// `key = value` with PowerModelParams field names.
PowerModelParams parse_power_params(std::istream & in);
void write_power_params(std::ostream & out, const PowerModelParams & power);

// ---- calibration table --------------------------------------------------------

/// Header `mode,slope_deg,velocity_m_s,cot`.
std::vector<CotRow> parse_cot_table(std::istream & in);
std::vector<CotRow> load_cot_table(const std::string & path);
void write_cot_table(std::ostream & out, const std::vector<CotRow> & rows);

// ---- deflection ---------------------------------------------------------------

struct AnnotationFrame
{
  int frame{0};
  std::string cam_id;
  WheelLoops loops;
  std::optional<ChordAnnotation> chord;
};

/// Header `frame,cam_id,loops,chord_x1,chord_y1,chord_x2,chord_y2`. The loops
/// field holds three loops (inboard|outboard|hub) of `u v` points separated by
/// `;`. Empty chord fields mean no annotation (wheel airborne).
std::vector<AnnotationFrame> parse_annotations(std::istream & in);
std::vector<AnnotationFrame> load_annotations(const std::string & path);
void write_annotations(std::ostream & out, const std::vector<AnnotationFrame> & frames);

/// `radius`, `width`, `hub_radius` and the initial pose guess
/// `guess_rx, guess_ry, guess_rz` (rotation vector) `guess_tx, guess_ty, guess_tz`.
struct WheelModelFile
{
  WheelModel3D model;
  WheelPose initial_guess;
};
WheelModelFile parse_wheel_model(std::istream & in);
void write_wheel_model(std::ostream & out, const WheelModelFile & file);

/// `fx, fy, cx, cy, width, height`.
CameraIntrinsics parse_camera(std::istream & in);
void write_camera(std::ostream & out, const CameraIntrinsics & cam);

/// Header `frame,volume_m3,fraction`.
void write_deflection_csv(std::ostream & out, const std::vector<DeflectionEstimate> & series);

}  // namespace rover
