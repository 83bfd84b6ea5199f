#include "rover/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "rover/errors.hpp"

namespace rover
{

double cost_of_transport(double power, double mass, double gravity, double velocity)
{
  if (!(mass > 0.0) || !(gravity > 0.0)) {
    throw ConfigError("non-positive mass or gravity");
  }
  if (!(velocity > 0.0)) {
    throw ConfigError("undefined at zero velocity");
  }
  return power / (mass * gravity * velocity);
}

CotReport mean_cot(std::span<const TelemetryRecord> telemetry, const RoverConfig & config)
{
  if (telemetry.size() < 2) {
    throw DataError("insufficient samples");
  }
  double energy = 0.0;
  double distance = 0.0;
  for (std::size_t k = 0; k + 1 < telemetry.size(); ++k) {
    const auto & r = telemetry[k];
    const double dt = telemetry[k + 1].t - r.t;
    energy += r.power() * dt;
    distance += std::hypot(r.odo_twist.vx, r.odo_twist.vy) * dt;
  }
  const double span = telemetry.back().t - telemetry.front().t;
  if (!(span > 0.0)) {
    throw DataError("telemetry spans no time");
  }
  CotReport report;
  report.mode_label = std::string(to_string(telemetry.front().mode));
  report.mean_power = energy / span;
  report.mean_velocity = distance / span;
  if (!(report.mean_velocity > 0.0)) {
    throw DataError("no motion in telemetry (zero mean velocity)");
  }
  report.cost_of_transport = cost_of_transport(report.mean_power, config.mass, config.gravity, report.mean_velocity);
  return report;
}

std::optional<double> YawEnergyCurve::energy_at(double yaw_deg) const
{
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].yaw_deg >= yaw_deg) {
      if (i == 0) {
        return points[0].energy;
      }
      const auto & a = points[i - 1];
      const auto & b = points[i];
      const double span = b.yaw_deg - a.yaw_deg;
      const double w = span > 0.0 ? (yaw_deg - a.yaw_deg) / span : 1.0;
      return a.energy + w * (b.energy - a.energy);
    }
  }
  return std::nullopt;
}

YawEnergyCurve energy_vs_yaw(std::span<const TelemetryRecord> telemetry)
{
  YawEnergyCurve curve;
  if (telemetry.empty()) {
    return curve;
  }
  curve.mode_label = std::string(to_string(telemetry.front().mode));
  double yaw = 0.0;
  double energy = 0.0;
  curve.points.push_back({0.0, 0.0});
  for (std::size_t k = 0; k + 1 < telemetry.size(); ++k) {
    const auto & a = telemetry[k];
    const auto & b = telemetry[k + 1];
    if (!a.pose_valid || !b.pose_valid) {
      continue;
    }
    energy += a.power() * (b.t - a.t);
    yaw += std::abs(wrap_angle(b.pose.heading - a.pose.heading));
    curve.points.push_back({rad2deg(yaw), energy});
  }
  return curve;
}

std::vector<RatioSample> angular_speed_efficiency(
  std::span<const HeadingSample> ground_truth, std::span<const TimedTwist> odometry,
  const EfficiencyOptions & options)
{
  if (ground_truth.size() != odometry.size()) {
    throw DataError("ground truth and odometry series differ in length");
  }
  const std::size_t n = ground_truth.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(ground_truth[k].t - odometry[k].t) > 1e-9) {
      throw DataError("ground truth and odometry series are not time-aligned");
    }
  }

  // Unwrap within each run of valid samples.
  std::vector<double> heading(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && ground_truth[k].valid && ground_truth[k - 1].valid) {
      heading[k] = heading[k - 1] + wrap_angle(ground_truth[k].heading - ground_truth[k - 1].heading);
    } else {
      heading[k] = ground_truth[k].heading;
    }
  }

  const double half = 0.5 * options.smoothing_window;
  std::vector<RatioSample> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k].t = ground_truth[k].t;
    const double odo = odometry[k].twist.wz;
    if (!ground_truth[k].valid || std::abs(odo) < options.min_odometry_rate) {
      continue;
    }
    std::size_t lo = k;
    while (lo > 0 && ground_truth[lo - 1].valid && ground_truth[k].t - ground_truth[lo - 1].t <= half + 1e-12) {
      --lo;
    }
    std::size_t hi = k;
    while (hi + 1 < n && ground_truth[hi + 1].valid && ground_truth[hi + 1].t - ground_truth[k].t <= half + 1e-12) {
      ++hi;
    }
    const double dt = ground_truth[hi].t - ground_truth[lo].t;
    if (hi == lo || !(dt > 0.0)) {
      continue;
    }
    const double rate = (heading[hi] - heading[lo]) / dt;
    const double ratio = rate / odo;
    out[k].raw = ratio;
    out[k].clamped = std::clamp(ratio, -options.clamp, options.clamp);
  }
  return out;
}

std::optional<double> median_ratio(std::span<const RatioSample> ratios)
{
  std::vector<double> values;
  for (const auto & r : ratios) {
    if (r.raw) {
      values.push_back(*r.raw);
    }
  }
  if (values.empty()) {
    return std::nullopt;
  }
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) {
    return *mid;
  }
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

std::vector<std::optional<double>> longitudinal_slip(
  std::span<const double> encoder_speed, std::span<const double> mocap_speed)
{
  if (encoder_speed.size() != mocap_speed.size()) {
    throw DataError("encoder and mocap speed series differ in length");
  }
  std::vector<std::optional<double>> out(encoder_speed.size());
  for (std::size_t k = 0; k < encoder_speed.size(); ++k) {
    if (encoder_speed[k] > 0.0) {
      out[k] = (encoder_speed[k] - mocap_speed[k]) / encoder_speed[k];
    }
  }
  return out;
}

std::vector<HeadingSample> heading_series(std::span<const TelemetryRecord> telemetry)
{
  std::vector<HeadingSample> out;
  out.reserve(telemetry.size());
  for (const auto & r : telemetry) {
    out.push_back({r.t, r.pose.heading, r.pose_valid});
  }
  return out;
}

std::vector<TimedTwist> odometry_series(std::span<const TelemetryRecord> telemetry)
{
  std::vector<TimedTwist> out;
  out.reserve(telemetry.size());
  for (const auto & r : telemetry) {
    out.push_back({r.t, r.odo_twist});
  }
  return out;
}

std::vector<double> encoder_speed_series(std::span<const TelemetryRecord> telemetry)
{
  std::vector<double> out;
  out.reserve(telemetry.size());
  for (const auto & r : telemetry) {
    out.push_back(std::hypot(r.odo_twist.vx, r.odo_twist.vy));
  }
  return out;
}

std::vector<double> mocap_speed_series(std::span<const TelemetryRecord> telemetry)
{
  const std::size_t n = telemetry.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k > 0 ? k - 1 : k;
    const std::size_t hi = k + 1 < n ? k + 1 : k;
    if (lo == hi || !telemetry[lo].pose_valid || !telemetry[hi].pose_valid || !telemetry[k].pose_valid) {
      continue;
    }
    const double dt = telemetry[hi].t - telemetry[lo].t;
    if (dt > 0.0) {
      out[k] = std::hypot(telemetry[hi].pose.x - telemetry[lo].pose.x,
        telemetry[hi].pose.y - telemetry[lo].pose.y) / dt;
    }
  }
  return out;
}

}  // namespace rover
