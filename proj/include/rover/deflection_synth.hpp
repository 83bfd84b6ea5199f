#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rover/deflection.hpp"

namespace rover
{

/// Circular-segment area over circle area for a chord at distance
/// depth_ratio * r from the centre: (acos(x) - x sqrt(1 - x^2)) / pi.
double segment_fraction(double depth_ratio);

/// Inverse of segment_fraction on [0, 0.5] by bisection.
double depth_ratio_for_fraction(double fraction);

/// Parameter angle of the inboard-perimeter point lowest in the image.
double contact_angle(const WheelModel3D & model, const WheelPose & pose, const CameraIntrinsics & cam);

/// Image chord cutting the inboard perimeter at distance depth_ratio * r from
/// the centre, perpendicular to the contact direction. Endpoints extend past
/// the perimeter.
ChordAnnotation chord_for_depth(
  const WheelModel3D & model, const WheelPose & pose, const CameraIntrinsics & cam, double depth_ratio);

struct SyntheticFrame
{
  int frame{0};
  WheelPose pose;
  WheelLoops loops;
  std::optional<ChordAnnotation> chord;
  double target_fraction{0.0};
};

/// Deflection over an obstacle run, frames 1..220: stable on the obstacle
/// (1-90), relaxing to zero (91-124), airborne without annotation (125-137),
/// impact peak at 138 decaying back, stable again (151-220).
std::vector<double> obstacle_run_fractions();

struct SynthOptions
{
  int samples_per_circle{36};
  double noise_px{0.3};
  std::uint64_t seed{7};
};

/// Camera and wheel geometry the bundled fixture uses.
CameraIntrinsics fixture_camera();
WheelModel3D fixture_wheel();
WheelPose fixture_pose(int frame);

/// Frames for `fractions` (index i is frame i + 1); zero fractions get no chord.
std::vector<SyntheticFrame> synthesize_frames(
  const WheelModel3D & model, const CameraIntrinsics & cam, const std::vector<double> & fractions,
  const SynthOptions & options = {});

}  // namespace rover
