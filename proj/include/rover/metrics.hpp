#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rover/rover_model.hpp"
#include "rover/terrain_power.hpp"

namespace rover
{

/// epsilon = P / (m g v). Throws ConfigError for v <= 0 ("undefined at zero
/// velocity") and for non-positive m or g.
double cost_of_transport(double power, double mass, double gravity, double velocity);

struct CotReport
{
  std::string mode_label;
  double slope_deg{0.0};
  double mean_velocity{0.0};  ///< [m/s], from wheel encoders
  double mean_power{0.0};     ///< [W]
  double cost_of_transport{0.0};
};

/// Time-weighted (zero-order hold) means of sum(V I) and encoder speed over
/// the series, then cost_of_transport on the means.
CotReport mean_cot(std::span<const TelemetryRecord> telemetry, const RoverConfig & config);

struct YawEnergyPoint
{
  double yaw_deg{0.0};   ///< cumulative |yaw|
  double energy{0.0};    ///< cumulative [J]
};

struct YawEnergyCurve
{
  std::string mode_label;
  std::vector<YawEnergyPoint> points;

  /// Energy at the first point where cumulative yaw reaches `yaw_deg`
  /// (linear interpolation). Returns nullopt beyond the curve.
  std::optional<double> energy_at(double yaw_deg) const;
};

/// Cumulative electrical energy against cumulative absolute ground-truth yaw.
/// Intervals touching a ground-truth hole contribute neither yaw nor energy.
YawEnergyCurve energy_vs_yaw(std::span<const TelemetryRecord> telemetry);

struct HeadingSample
{
  double t{0.0};
  double heading{0.0};  ///< [rad], may be wrapped
  bool valid{true};
};

struct TimedTwist
{
  double t{0.0};
  BodyTwist twist;
};

struct RatioSample
{
  double t{0.0};
  std::optional<double> raw;   ///< empty inside gaps
  std::optional<double> clamped;
};

struct EfficiencyOptions
{
  double smoothing_window{0.5};       ///< [s], central difference span
  double min_odometry_rate{1e-3};     ///< [rad/s], below -> gap
  double clamp{5.0};
};

/// Ground-truth yaw rate (central difference over the smoothing window,
/// truncated at the ends) divided by odometry yaw rate, sample by sample.
/// Both series must share timestamps.
std::vector<RatioSample> angular_speed_efficiency(
  std::span<const HeadingSample> ground_truth, std::span<const TimedTwist> odometry,
  const EfficiencyOptions & options = {});

/// Median of the non-gap raw ratios; nullopt if there are none.
std::optional<double> median_ratio(std::span<const RatioSample> ratios);

/// (encoder - mocap) / encoder per sample; encoder <= 0 gives a gap.
std::vector<std::optional<double>> longitudinal_slip(
  std::span<const double> encoder_speed, std::span<const double> mocap_speed);

// Convenience extraction from telemetry.
std::vector<HeadingSample> heading_series(std::span<const TelemetryRecord> telemetry);
std::vector<TimedTwist> odometry_series(std::span<const TelemetryRecord> telemetry);
/// Encoder speed: |odometry linear velocity|.
std::vector<double> encoder_speed_series(std::span<const TelemetryRecord> telemetry);
/// Ground-truth planar speed by central differences of the marker track
/// (0 where a neighbour is a hole).
std::vector<double> mocap_speed_series(std::span<const TelemetryRecord> telemetry);

}  // namespace rover
