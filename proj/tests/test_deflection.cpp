#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <random>

#include "rover/convex_hull.hpp"
#include "rover/deflection.hpp"
#include "rover/deflection_synth.hpp"
#include "rover/errors.hpp"

using namespace rover;

namespace
{

const WheelModel3D kWheel{};
const CameraIntrinsics kCam{};

double segment_oracle(double h)
{
  return (std::acos(h) - h * std::sqrt(1.0 - h * h)) / M_PI;
}

WheelPose fronto_parallel(double depth = 0.8)
{
  return {Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.0, 0.0, depth)};
}

// Image chord across a fronto-parallel wheel at wheel-plane height y = h r
// (image y points down, so this cuts the bottom of the wheel).
ChordAnnotation horizontal_chord(const WheelPose & pose, double h)
{
  const double z = -0.5 * kWheel.width;
  const double y = h * kWheel.radius;
  return {project_point(kCam, pose.rotation * Eigen::Vector3d(-0.3, y, z) + pose.translation),
    project_point(kCam, pose.rotation * Eigen::Vector3d(0.3, y, z) + pose.translation)};
}

std::vector<Eigen::Vector3d> cube(double side)
{
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 8; ++i) {
    pts.emplace_back(side * (i & 1), side * ((i >> 1) & 1), side * ((i >> 2) & 1));
  }
  return pts;
}

WheelPose random_pose(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::Vector3d rv(0.5 * u(rng), 0.6 * u(rng), 0.3 * u(rng));
  const Eigen::Vector3d t(0.08 * u(rng), 0.08 * u(rng), 0.6 + 0.2 * u(rng));
  return WheelPose::from_rotation_vector(rv, t);
}

WheelPose perturb(const WheelPose & truth, std::mt19937_64 & rng, double max_deg, double max_depth_frac)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Vector3d axis(u(rng), u(rng), u(rng));
  axis.normalize();
  const double angle = max_deg * M_PI / 180.0 * u(rng);
  WheelPose g;
  g.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix() * truth.rotation;
  g.translation = truth.translation * (1.0 + max_depth_frac * u(rng));
  return g;
}

}  // namespace

TEST(ConvexHull, CubeAndTetrahedron)
{
  EXPECT_NEAR(convex_hull_volume(cube(2.0)), 8.0, 1e-12);
  const std::vector<Eigen::Vector3d> tet{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  EXPECT_NEAR(convex_hull_volume(tet), 1.0 / 6.0, 1e-15);
}

TEST(ConvexHull, InteriorAndDuplicatePointsIgnored)
{
  auto pts = cube(1.0);
  pts.emplace_back(0.5, 0.5, 0.5);
  pts.emplace_back(0.2, 0.7, 0.1);
  pts.push_back(pts[0]);
  pts.emplace_back(0.5, 0.0, 0.5);  // on a face
  EXPECT_NEAR(convex_hull_volume(pts), 1.0, 1e-12);
}

TEST(ConvexHull, DegenerateInputsHaveZeroVolume)
{
  EXPECT_EQ(convex_hull_volume(std::vector<Eigen::Vector3d>{}), 0.0);
  const std::vector<Eigen::Vector3d> planar{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.3, 0.2, 0}};
  EXPECT_EQ(convex_hull_volume(planar), 0.0);
}

TEST(ConvexHull, CylinderPrismApproachesAnalytic)
{
  std::vector<Eigen::Vector3d> pts;
  const int n = 720;
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * M_PI * k / n;
    pts.emplace_back(std::cos(a), std::sin(a), 0.0);
    pts.emplace_back(std::cos(a), std::sin(a), 0.5);
  }
  const double polygon = 0.5 * n * std::sin(2.0 * M_PI / n);
  EXPECT_NEAR(convex_hull_volume(pts), 0.5 * polygon, 1e-9);
}

TEST(ConvexHull, RigidMotionInvariance)
{
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 200; ++i) {
    pts.emplace_back(g(rng), g(rng), 0.3 * g(rng));
  }
  const double base = convex_hull_volume(pts);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Matrix3d r = Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng)).normalized().toRotationMatrix();
    const Eigen::Vector3d t(5.0 * g(rng), 5.0 * g(rng), 5.0 * g(rng));
    std::vector<Eigen::Vector3d> moved;
    for (const auto & p : pts) {
      moved.push_back(r * p + t);
    }
    EXPECT_NEAR(convex_hull_volume(moved), base, 1e-9 * base);
  }
}

TEST(ConvexHull, FacesOrientedOutward)
{
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 100; ++i) {
    pts.emplace_back(u(rng), u(rng), u(rng));
  }
  const ConvexHull3 hull = convex_hull(pts);
  for (const auto & f : hull.faces) {
    const Eigen::Vector3d & a = hull.points[static_cast<std::size_t>(f[0])];
    const Eigen::Vector3d n = (hull.points[static_cast<std::size_t>(f[1])] - a).cross(
      hull.points[static_cast<std::size_t>(f[2])] - a);
    for (const auto & p : pts) {
      EXPECT_LE(n.dot(p - a), 1e-9);
    }
  }
}

TEST(ChordCircle, Diameter)
{
  const auto p = chord_circle_intersections({}, {-2.0, 0.0}, {2.0, 0.0});
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(p[0].x(), -1.0, 1e-15);
  EXPECT_NEAR(p[1].x(), 1.0, 1e-15);
}

TEST(ChordCircle, Tangent)
{
  const auto p = chord_circle_intersections({}, {-3.0, 1.0}, {5.0, 1.0});
  ASSERT_EQ(p.size(), 1u);
  EXPECT_NEAR(p[0].x(), 0.0, 1e-15);
  EXPECT_NEAR(p[0].y(), 1.0, 1e-15);
}

TEST(ChordCircle, ThreeFourFive)
{
  const auto p = chord_circle_intersections({}, {-1.0, 0.8}, {1.0, 0.8});
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(p[0].x(), -0.6, 1e-15);
  EXPECT_NEAR(p[1].x(), 0.6, 1e-15);
  EXPECT_NEAR(p[0].y(), 0.8, 1e-15);
}

TEST(ChordCircle, MissAndCoincidentEndpoints)
{
  EXPECT_TRUE(chord_circle_intersections({}, {-1.0, 1.5}, {1.0, 1.5}).empty());
  EXPECT_THROW(chord_circle_intersections({}, {0.2, 0.2}, {0.2, 0.2}), ConfigError);
  const auto shifted = chord_circle_intersections({{3.0, -1.0}, 2.0}, {3.0, -10.0}, {3.0, 10.0});
  ASSERT_EQ(shifted.size(), 2u);
  EXPECT_NEAR(shifted[0].y(), -3.0, 1e-14);
  EXPECT_NEAR(shifted[1].y(), 1.0, 1e-14);
}

TEST(ProjectWheel, FrontoParallelCircle)
{
  const WheelPose pose = fronto_parallel(1.0);
  const auto loops = project_wheel(kWheel, pose, kCam, 64);
  const double z = 1.0 - 0.5 * kWheel.width;
  for (const auto & p : loops[0]) {
    EXPECT_NEAR((p - Eigen::Vector2d(kCam.cx, kCam.cy)).norm(), kCam.fx * kWheel.radius / z, 1e-9);
  }
  const double z_out = 1.0 + 0.5 * kWheel.width;
  for (const auto & p : loops[1]) {
    EXPECT_NEAR((p - Eigen::Vector2d(kCam.cx, kCam.cy)).norm(), kCam.fx * kWheel.radius / z_out, 1e-9);
  }
}

TEST(ProjectWheel, EdgeOnDegeneratesToSegment)
{
  // Axle along camera x, inboard face through the optical centre.
  WheelPose pose = WheelPose::from_rotation_vector({0.0, M_PI / 2.0, 0.0}, {0.5 * kWheel.width, 0.0, 1.0});
  const auto loops = project_wheel(kWheel, pose, kCam, 72);
  double min_u = 1e9;
  double max_u = -1e9;
  double min_v = 1e9;
  double max_v = -1e9;
  for (const auto & p : loops[0]) {
    min_u = std::min(min_u, p.x());
    max_u = std::max(max_u, p.x());
    min_v = std::min(min_v, p.y());
    max_v = std::max(max_v, p.y());
  }
  EXPECT_LT((max_u - min_u) / (max_v - min_v), 1e-9);
}

TEST(ProjectWheel, BehindCamera)
{
  try {
    project_wheel(kWheel, fronto_parallel(0.05), kCam, 36);
    FAIL();
  } catch (const NumericalError & e) {
    EXPECT_STREQ(e.what(), "wheel behind camera");
  }
}

TEST(PoseFit, NoiselessRoundTrip)
{
  std::mt19937_64 rng(23);
  for (int k = 0; k < 20; ++k) {
    const WheelPose truth = random_pose(rng);
    const auto loops = project_wheel(kWheel, truth, kCam, 36);
    const PoseFit fit = fit_wheel_pose(loops, kWheel, kCam, perturb(truth, rng, 20.0, 0.2));
    EXPECT_LT((fit.pose.translation - truth.translation).norm(), 1e-4);
    EXPECT_LT(axle_angle_error(fit.pose, truth) * 180.0 / M_PI, 0.01);
    EXPECT_LT(fit.rms, 1e-6);
  }
}

TEST(PoseFit, HalfPixelNoise)
{
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 0.5);
  const WheelPose truth = fixture_pose(10);
  auto loops = project_wheel(kWheel, truth, kCam, 90);
  for (auto & loop : loops) {
    for (auto & p : loop) {
      p += Eigen::Vector2d(noise(rng), noise(rng));
    }
  }
  const PoseFit fit = fit_wheel_pose(loops, kWheel, kCam, perturb(truth, rng, 10.0, 0.1));
  // Point-to-curve distance keeps one of two noise components.
  EXPECT_GT(fit.rms, 0.25);
  EXPECT_LT(fit.rms, 0.6);
  EXPECT_LT((fit.pose.translation - truth.translation).norm(), 5e-3);
  EXPECT_LT(axle_angle_error(fit.pose, truth) * 180.0 / M_PI, 1.0);
}

TEST(PoseFit, GuessBehindCamera)
{
  const auto loops = project_wheel(kWheel, fixture_pose(1), kCam, 36);
  WheelPose behind = fixture_pose(1);
  behind.translation.z() = -0.5;
  try {
    fit_wheel_pose(loops, kWheel, kCam, behind);
    FAIL();
  } catch (const PoseFitError & e) {
    EXPECT_EQ(e.best_pose().translation, behind.translation);
  }
}

TEST(PoseFit, TooFewPointsAndIterationBudget)
{
  const auto few = project_wheel(kWheel, fixture_pose(1), kCam, 6);
  EXPECT_THROW(fit_wheel_pose(few, kWheel, kCam, fixture_pose(1)), ConfigError);
  std::mt19937_64 rng(4);
  const auto loops = project_wheel(kWheel, fixture_pose(1), kCam, 36);
  PoseFitOptions opt;
  opt.max_iterations = 1;
  try {
    fit_wheel_pose(loops, kWheel, kCam, perturb(fixture_pose(1), rng, 20.0, 0.2), opt);
    FAIL();
  } catch (const PoseFitError & e) {
    EXPECT_TRUE(std::isfinite(e.rms()));
  }
}

TEST(Deflection, NoChordOrTangentChordIsZero)
{
  const WheelPose pose = fronto_parallel();
  EXPECT_EQ(deflected_volume_fraction(kWheel, pose, kCam, std::nullopt).fraction, 0.0);
  const auto tangent = deflected_volume_fraction(kWheel, pose, kCam, horizontal_chord(pose, 1.0));
  EXPECT_EQ(tangent.fraction, 0.0);
  EXPECT_EQ(tangent.volume, 0.0);
  const auto miss = deflected_volume_fraction(kWheel, pose, kCam, horizontal_chord(pose, 1.2));
  EXPECT_EQ(miss.fraction, 0.0);
}

TEST(Deflection, FrontoParallelSegmentOracle)
{
  const WheelPose pose = fronto_parallel();
  const auto est = deflected_volume_fraction(kWheel, pose, kCam, horizontal_chord(pose, 0.8));
  const double oracle = segment_oracle(0.8);
  EXPECT_NEAR(oracle, 0.0520, 5e-4);
  EXPECT_NEAR(est.fraction, oracle, 0.01 * oracle);
  EXPECT_NEAR(est.volume, est.fraction * M_PI * 0.15 * 0.15 * 0.12, 1e-15);
  EXPECT_FALSE(est.implausible);
}

TEST(Deflection, MonotoneInPenetration)
{
  const WheelPose pose = fronto_parallel();
  double prev = 0.0;
  for (double h = 0.99; h >= -0.5; h -= 0.05) {
    const double f = deflected_volume_fraction(kWheel, pose, kCam, horizontal_chord(pose, h)).fraction;
    EXPECT_GT(f, prev);
    prev = f;
  }
}

TEST(Deflection, DeepChordFlaggedImplausible)
{
  const WheelPose pose = fronto_parallel();
  const auto est = deflected_volume_fraction(kWheel, pose, kCam, horizontal_chord(pose, -0.3));
  EXPECT_TRUE(est.implausible);
  EXPECT_NEAR(est.fraction, segment_oracle(-0.3), 0.01);
}

TEST(Deflection, TiltedPoseRoundTrip)
{
  for (int frame : {1, 40, 77, 160, 200}) {
    const WheelPose pose = fixture_pose(frame);
    for (double target : {0.035, 0.045, 0.062}) {
      const auto chord = chord_for_depth(kWheel, pose, kCam, depth_ratio_for_fraction(target));
      const double f = deflected_volume_fraction(kWheel, pose, kCam, chord).fraction;
      EXPECT_NEAR(f, target, 1e-3);
    }
  }
}

TEST(Deflection, SyntheticPipelineWithinTenthOfPoint)
{
  SynthOptions opt;
  opt.noise_px = 0.0;
  const std::vector<double> fractions{0.035, 0.0, 0.05, 0.062, 0.044};
  const auto frames = synthesize_frames(kWheel, kCam, fractions, opt);
  WheelPose guess = fixture_pose(1);
  for (const auto & f : frames) {
    const PoseFit fit = fit_wheel_pose(f.loops, kWheel, kCam, guess);
    const double est = deflected_volume_fraction(kWheel, fit.pose, kCam, f.chord, f.frame).fraction;
    EXPECT_NEAR(100.0 * est, 100.0 * f.target_fraction, 0.1);
  }
}

TEST(Deflection, SegmentInverse)
{
  for (double f : {0.0, 0.01, 0.052, 0.3, 0.5}) {
    EXPECT_NEAR(segment_fraction(depth_ratio_for_fraction(f)), f, 1e-12);
  }
  EXPECT_NEAR(segment_fraction(0.8), segment_oracle(0.8), 1e-15);
  EXPECT_THROW(depth_ratio_for_fraction(0.6), ConfigError);
}

TEST(Smoothing, Examples)
{
  std::vector<DeflectionEstimate> raw;
  for (double v : {0.0, 0.0, 6.0, 0.0, 0.0}) {
    raw.push_back({static_cast<int>(raw.size()), v, v, false});
  }
  const auto id = smooth_deflection_series(raw, 1);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    EXPECT_EQ(id[i].fraction, raw[i].fraction);
  }
  const auto s = smooth_deflection_series(raw, 3);
  const double want[] = {0.0, 2.0, 2.0, 2.0, 0.0};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(s[i].fraction, want[i], 1e-15);
    EXPECT_NEAR(s[i].volume, want[i], 1e-15);
    EXPECT_EQ(s[i].frame, raw[i].frame);
  }
  std::vector<DeflectionEstimate> flat(7, {0, 0.01, 0.04, false});
  for (const auto & e : smooth_deflection_series(flat, 5)) {
    EXPECT_NEAR(e.fraction, 0.04, 1e-15);
  }
  EXPECT_TRUE(smooth_deflection_series(std::vector<DeflectionEstimate>{}, 3).empty());
  EXPECT_THROW(smooth_deflection_series(raw, 2), ConfigError);
}

TEST(Validation, WheelAndCamera)
{
  EXPECT_THROW(validate_wheel_model({0.15, 0.12, 0.2}), ConfigError);
  EXPECT_THROW(validate_wheel_model({0.15, 0.0, 0.05}), ConfigError);
  CameraIntrinsics cam;
  cam.cx = 2000.0;
  EXPECT_THROW(validate_camera(cam), ConfigError);
}
