#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <numbers>
#include <string>
#include <string_view>

namespace rover
{

inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) {return deg * kPi / 180.0;}
constexpr double rad2deg(double rad) {return rad * 180.0 / kPi;}

/// Physical description of the four-wheel breadboard. Body frame: x forward,
/// y left, z up, origin at the centre of the wheel contact rectangle.
struct RoverConfig
{
  double mass{84.0};                           ///< [kg]
  double gravity{9.81};                        ///< [m/s^2]
  double wheel_longitudinal_separation{0.980}; ///< front/rear axle distance L [m]
  double wheel_lateral_separation{0.830};      ///< track width W [m]
  double wheel_radius{0.15};                   ///< [m]
  double wheel_width{0.12};                    ///< [m]
  double ground_clearance{0.250};              ///< [m]
  double drive_motor_rated_power{13.0};        ///< [W]
  double steering_motor_rated_power{16.0};     ///< [W]
  double steering_rate{deg2rad(10.0)};         ///< [rad/s]
  double steering_limit{deg2rad(95.0)};        ///< symmetric range [rad]

  bool operator==(const RoverConfig &) const = default;
};

/// Gravity on the lunar surface, for configs that override the Earth default.
inline constexpr double kLunarGravity = 1.62;

enum class LocomotionMode { Ackermann, SkidSteer, Crab, PointTurn };

std::string_view to_string(LocomotionMode mode);
/// Accepts the canonical names ("Ackermann", "SkidSteer", "Crab", "PointTurn"),
/// case-insensitively. Throws ConfigError for anything else.
LocomotionMode parse_mode(std::string_view text);

struct BodyTwist
{
  double vx{0.0};  ///< forward [m/s]
  double vy{0.0};  ///< left [m/s]
  double wz{0.0};  ///< yaw rate [rad/s]

  bool operator==(const BodyTwist &) const = default;
};

enum class WheelId : std::size_t { FL = 0, FR = 1, RL = 2, RR = 3 };

inline constexpr std::array<WheelId, 4> kWheels{WheelId::FL, WheelId::FR, WheelId::RL, WheelId::RR};
std::string_view to_string(WheelId id);

struct WheelCommand
{
  WheelId wheel_id{WheelId::FL};
  double drive_speed{0.0};     ///< wheel angular speed [rad/s]
  double steering_angle{0.0};  ///< CCW about the wheel's vertical axis [rad]

  bool operator==(const WheelCommand &) const = default;
};

using WheelCommands = std::array<WheelCommand, 4>;
using SteeringAngles = std::array<double, 4>;

struct Point2
{
  double x{0.0};
  double y{0.0};

  bool operator==(const Point2 &) const = default;
  double norm() const {return std::hypot(x, y);}
};

/// Returns `raw` unchanged when every invariant holds; otherwise throws
/// ConfigError naming the first violation.
RoverConfig validate_config(const RoverConfig & raw);

/// Contact points in the body frame, indexed by WheelId.
std::array<Point2, 4> wheel_positions(const RoverConfig & config);

/// Parses a `key = value` file (SI units, `#` comments). Keys are the field
/// names of RoverConfig; unspecified keys keep their defaults, unknown keys
/// are an error. The result is validated.
RoverConfig parse_config(std::istream & in);
RoverConfig load_config(const std::string & path);

/// Applies a single `key = value` pair. Returns false if the key is unknown.
bool set_config_field(RoverConfig & config, std::string_view key, double value);

void write_config(std::ostream & out, const RoverConfig & config);

}  // namespace rover
