#include "rover/deflection_synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace rover
{

double segment_fraction(double depth_ratio)
{
  const double x = std::clamp(depth_ratio, -1.0, 1.0);
  return (std::acos(x) - x * std::sqrt(1.0 - x * x)) / std::numbers::pi;
}

double depth_ratio_for_fraction(double fraction)
{
  if (!(fraction >= 0.0 && fraction <= 0.5)) {
    throw ConfigError("segment fraction outside [0, 0.5]");
  }
  // segment_fraction decreases on [0, 1].
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (segment_fraction(mid) > fraction) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double contact_angle(const WheelModel3D & model, const WheelPose & pose, const CameraIntrinsics & cam)
{
  const CircleGeometry inboard = circle_geometry(model, WheelCircle::Inboard);
  auto image_v = [&](double a) {
      const Eigen::Vector3d p = pose.rotation *
        Eigen::Vector3d(inboard.radius * std::cos(a), inboard.radius * std::sin(a), inboard.z) + pose.translation;
      return project_point(cam, p).y();
    };
  constexpr int kProbe = 3600;
  double best = 0.0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < kProbe; ++k) {
    const double a = 2.0 * std::numbers::pi * k / kProbe;
    const double v = image_v(a);
    if (v > best_v) {
      best_v = v;
      best = a;
    }
  }
  // Golden-section refinement around the probe maximum.
  const double h = 2.0 * std::numbers::pi / kProbe;
  double lo = best - h;
  double hi = best + h;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 80; ++i) {
    const double a = hi - g * (hi - lo);
    const double b = lo + g * (hi - lo);
    if (image_v(a) > image_v(b)) {
      hi = b;
    } else {
      lo = a;
    }
  }
  return 0.5 * (lo + hi);
}

ChordAnnotation chord_for_depth(
  const WheelModel3D & model, const WheelPose & pose, const CameraIntrinsics & cam, double depth_ratio)
{
  const CircleGeometry inboard = circle_geometry(model, WheelCircle::Inboard);
  const double a = contact_angle(model, pose, cam);
  const Eigen::Vector2d dir(std::cos(a), std::sin(a));
  const Eigen::Vector2d perp(-dir.y(), dir.x());
  const Eigen::Vector2d foot = depth_ratio * inboard.radius * dir;
  const double reach = 1.25 * inboard.radius;
  auto to_image = [&](const Eigen::Vector2d & q) {
      return project_point(cam, pose.rotation * Eigen::Vector3d(q.x(), q.y(), inboard.z) + pose.translation);
    };
  return {to_image(foot - reach * perp), to_image(foot + reach * perp)};
}

std::vector<double> obstacle_run_fractions()
{
  constexpr double kPct = 0.01;
  std::vector<double> out;
  out.reserve(220);
  for (int f = 1; f <= 220; ++f) {
    double pct = 0.0;
    if (f <= 90) {
      pct = 4.3 + 0.4 * std::sin(2.0 * std::numbers::pi * f / 37.0);
    } else if (f <= 124) {
      const double start = 4.3 + 0.4 * std::sin(2.0 * std::numbers::pi * 90.0 / 37.0);
      pct = start + (0.3 - start) * (f - 90) / 34.0;
    } else if (f <= 137) {
      pct = 0.0;
    } else if (f <= 150) {
      pct = 4.4 + 1.8 * std::exp(-(f - 138) / 3.0);
    } else {
      pct = 4.4 + 0.35 * std::sin(2.0 * std::numbers::pi * (f - 150) / 29.0);
    }
    out.push_back(pct * kPct);
  }
  return out;
}

CameraIntrinsics fixture_camera()
{
  return {800.0, 800.0, 640.0, 480.0, 1280, 960};
}

WheelModel3D fixture_wheel()
{
  return {0.15, 0.12, 0.05};
}

WheelPose fixture_pose(int frame)
{
  const double f = static_cast<double>(frame);
  return WheelPose::from_rotation_vector(
    {0.15 + 0.02 * std::sin(f / 20.0), -0.45, 0.05},
    {0.03, 0.06 + 0.005 * std::sin(f / 15.0), 0.65});
}

std::vector<SyntheticFrame> synthesize_frames(
  const WheelModel3D & model, const CameraIntrinsics & cam, const std::vector<double> & fractions,
  const SynthOptions & options)
{
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, options.noise_px);
  std::vector<SyntheticFrame> out;
  out.reserve(fractions.size());
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    SyntheticFrame fr;
    fr.frame = static_cast<int>(i) + 1;
    fr.pose = fixture_pose(fr.frame);
    fr.loops = project_wheel(model, fr.pose, cam, options.samples_per_circle);
    if (options.noise_px > 0.0) {
      for (auto & loop : fr.loops) {
        for (auto & p : loop) {
          p.x() += noise(rng);
          p.y() += noise(rng);
        }
      }
    }
    fr.target_fraction = fractions[i];
    if (fractions[i] > 0.0) {
      fr.chord = chord_for_depth(model, fr.pose, cam, depth_ratio_for_fraction(fractions[i]));
    }
    out.push_back(std::move(fr));
  }
  return out;
}

}  // namespace rover
