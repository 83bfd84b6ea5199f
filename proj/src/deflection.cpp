#include "rover/deflection.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rover/convex_hull.hpp"

namespace rover
{

namespace
{

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::Matrix3d skew(const Eigen::Vector3d & v)
{
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d & w)
{
  const double angle = w.norm();
  if (angle < 1e-15) {
    return Eigen::Matrix3d::Identity() + skew(w);
  }
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

Eigen::Vector3d circle_point(const CircleGeometry & c, double phi)
{
  return {c.radius * std::cos(phi), c.radius * std::sin(phi), c.z};
}

constexpr std::array<WheelCircle, 3> kCircles{WheelCircle::Inboard, WheelCircle::Outboard, WheelCircle::Hub};

// Residuals of all observed points for a pose and per-point curve parameters.
struct Problem
{
  const WheelLoops & observed;
  const WheelModel3D & model;
  const CameraIntrinsics & cam;

  std::size_t count() const
  {
    return observed[0].size() + observed[1].size() + observed[2].size();
  }

  // Returns false if any point is not in front of the camera.
  bool residuals(const WheelPose & pose, const std::vector<double> & phi, Eigen::VectorXd & r) const
  {
    r.resize(static_cast<Eigen::Index>(2 * count()));
    std::size_t j = 0;
    for (auto c : kCircles) {
      const CircleGeometry geo = circle_geometry(model, c);
      for (const auto & obs : observed[static_cast<std::size_t>(c)]) {
        const Eigen::Vector3d p = pose.rotation * circle_point(geo, phi[j]) + pose.translation;
        if (!(p.z() > 0.0)) {
          return false;
        }
        const Eigen::Vector2d uv = project_point(cam, p);
        r.segment<2>(static_cast<Eigen::Index>(2 * j)) = uv - obs;
        ++j;
      }
    }
    return true;
  }
};

double wrap_2pi(double a)
{
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

}  // namespace

WheelModel3D validate_wheel_model(const WheelModel3D & model)
{
  if (!(model.radius > 0.0) || !(model.width > 0.0)) {
    throw ConfigError("wheel radius and width must be positive");
  }
  if (!(model.hub_radius > 0.0 && model.hub_radius < model.radius)) {
    throw ConfigError("hub radius must lie in (0, radius)");
  }
  return model;
}

CircleGeometry circle_geometry(const WheelModel3D & model, WheelCircle circle)
{
  switch (circle) {
    case WheelCircle::Inboard: return {model.radius, -0.5 * model.width};
    case WheelCircle::Outboard: return {model.radius, 0.5 * model.width};
    case WheelCircle::Hub: return {model.hub_radius, -0.5 * model.width};
  }
  return {model.radius, 0.0};
}

CameraIntrinsics validate_camera(const CameraIntrinsics & cam)
{
  if (!(cam.fx > 0.0) || !(cam.fy > 0.0)) {
    throw ConfigError("focal lengths must be positive");
  }
  if (cam.width <= 0 || cam.height <= 0) {
    throw ConfigError("image size must be positive");
  }
  if (!(cam.cx >= 0.0 && cam.cx <= cam.width && cam.cy >= 0.0 && cam.cy <= cam.height)) {
    throw ConfigError("principal point outside the image");
  }
  return cam;
}

WheelPose WheelPose::from_rotation_vector(const Eigen::Vector3d & rotation_vector, const Eigen::Vector3d & translation)
{
  return {exp_so3(rotation_vector), translation};
}

Eigen::Vector3d WheelPose::rotation_vector() const
{
  const Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

Eigen::Vector2d project_point(const CameraIntrinsics & cam, const Eigen::Vector3d & p)
{
  return {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
}

WheelLoops project_wheel(
  const WheelModel3D & model, const WheelPose & pose, const CameraIntrinsics & cam, int samples_per_circle)
{
  if (samples_per_circle < 1) {
    throw ConfigError("samples_per_circle must be positive");
  }
  WheelLoops loops;
  for (auto c : kCircles) {
    const CircleGeometry geo = circle_geometry(model, c);
    auto & loop = loops[static_cast<std::size_t>(c)];
    loop.reserve(static_cast<std::size_t>(samples_per_circle));
    for (int k = 0; k < samples_per_circle; ++k) {
      const double phi = kTwoPi * k / samples_per_circle;
      const Eigen::Vector3d p = pose.rotation * circle_point(geo, phi) + pose.translation;
      if (!(p.z() > 0.0)) {
        throw NumericalError("wheel behind camera");
      }
      loop.push_back(project_point(cam, p));
    }
  }
  return loops;
}

PoseFit fit_wheel_pose(
  const WheelLoops & observed, const WheelModel3D & model, const CameraIntrinsics & cam,
  const WheelPose & initial_guess, const PoseFitOptions & options)
{
  for (const auto & loop : observed) {
    if (loop.size() < 8) {
      throw ConfigError("pose fit needs at least 8 points per loop");
    }
  }
  const Problem problem{observed, model, cam};
  const std::size_t m = problem.count();

  // Initial curve parameters: nearest of a dense sampling under the guess.
  constexpr int kDense = 720;
  std::vector<double> phi;
  phi.reserve(m);
  for (auto c : kCircles) {
    const CircleGeometry geo = circle_geometry(model, c);
    std::array<Eigen::Vector2d, kDense> dense;
    for (int k = 0; k < kDense; ++k) {
      const Eigen::Vector3d p = initial_guess.rotation * circle_point(geo, kTwoPi * k / kDense) +
        initial_guess.translation;
      if (!(p.z() > 0.0)) {
        throw PoseFitError("wheel behind camera in initial guess", initial_guess,
                std::numeric_limits<double>::infinity());
      }
      dense[static_cast<std::size_t>(k)] = project_point(cam, p);
    }
    for (const auto & obs : observed[static_cast<std::size_t>(c)]) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < kDense; ++k) {
        const double d = (dense[static_cast<std::size_t>(k)] - obs).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      phi.push_back(kTwoPi * best / kDense);
    }
  }

  WheelPose pose = initial_guess;
  Eigen::VectorXd r;
  problem.residuals(pose, phi, r);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  const auto rms_of = [m](double c) {return std::sqrt(c / static_cast<double>(m));};

  constexpr int kPoseDof = 5;  // rotation about wheel x, y; translation
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    // Jacobian blocks: pose (2 x 5 per point) and curve parameter (2 x 1 per point).
    Eigen::Matrix<double, kPoseDof, kPoseDof> hpp = Eigen::Matrix<double, kPoseDof, kPoseDof>::Zero();
    Eigen::Matrix<double, kPoseDof, 1> gp = Eigen::Matrix<double, kPoseDof, 1>::Zero();
    std::vector<Eigen::Matrix<double, kPoseDof, 1>> hpf(m);
    std::vector<double> hff(m);
    std::vector<double> gf(m);

    std::size_t j = 0;
    for (auto c : kCircles) {
      const CircleGeometry geo = circle_geometry(model, c);
      for (std::size_t q = 0; q < observed[static_cast<std::size_t>(c)].size(); ++q, ++j) {
        const Eigen::Vector3d x = circle_point(geo, phi[j]);
        const Eigen::Vector3d p = pose.rotation * x + pose.translation;
        Eigen::Matrix<double, 2, 3> dproj;
        dproj << cam.fx / p.z(), 0.0, -cam.fx * p.x() / (p.z() * p.z()),
          0.0, cam.fy / p.z(), -cam.fy * p.y() / (p.z() * p.z());
        // Right-perturbation R exp(w): dp/dw = -R [x]x, keep w_x, w_y.
        const Eigen::Matrix3d drot = -pose.rotation * skew(x);
        Eigen::Matrix<double, 2, kPoseDof> jp;
        jp.leftCols<2>() = dproj * drot.leftCols<2>();
        jp.rightCols<3>() = dproj;
        const Eigen::Vector3d dx_dphi(-geo.radius * std::sin(phi[j]), geo.radius * std::cos(phi[j]), 0.0);
        const Eigen::Vector2d jf = dproj * (pose.rotation * dx_dphi);
        const Eigen::Vector2d rj = r.segment<2>(static_cast<Eigen::Index>(2 * j));
        hpp += jp.transpose() * jp;
        gp += jp.transpose() * rj;
        hpf[j] = jp.transpose() * jf;
        hff[j] = jf.squaredNorm();
        gf[j] = jf.dot(rj);
      }
    }

    bool accepted = false;
    while (!accepted) {
      // Damped normal equations, curve parameters eliminated by Schur complement.
      Eigen::Matrix<double, kPoseDof, kPoseDof> s = hpp;
      for (int d = 0; d < kPoseDof; ++d) {
        s(d, d) += lambda * std::max(hpp(d, d), 1e-12);
      }
      Eigen::Matrix<double, kPoseDof, 1> rhs = -gp;
      std::vector<double> dinv(m);
      for (std::size_t k = 0; k < m; ++k) {
        dinv[k] = 1.0 / (hff[k] * (1.0 + lambda) + 1e-12);
        s -= hpf[k] * hpf[k].transpose() * dinv[k];
        rhs += hpf[k] * gf[k] * dinv[k];
      }
      const Eigen::Matrix<double, kPoseDof, 1> dp = s.ldlt().solve(rhs);

      WheelPose trial = pose;
      trial.rotation = pose.rotation * exp_so3(Eigen::Vector3d(dp(0), dp(1), 0.0));
      trial.translation = pose.translation + dp.tail<3>();
      std::vector<double> trial_phi(m);
      for (std::size_t k = 0; k < m; ++k) {
        trial_phi[k] = phi[k] + dinv[k] * (-gf[k] - hpf[k].dot(dp));
      }
      Eigen::VectorXd trial_r;
      const bool in_front = problem.residuals(trial, trial_phi, trial_r);
      const double trial_cost = in_front ? trial_r.squaredNorm() : std::numeric_limits<double>::infinity();

      if (trial_cost < cost) {
        const double decrease = cost - trial_cost;
        pose = trial;
        phi = std::move(trial_phi);
        r = std::move(trial_r);
        cost = trial_cost;
        lambda = std::max(lambda * 0.2, 1e-12);
        accepted = true;
        if (decrease <= options.relative_tolerance * cost || rms_of(cost) < 1e-10) {
          for (auto & a : phi) {
            a = wrap_2pi(a);
          }
          return {pose, rms_of(cost), iter};
        }
      } else {
        lambda *= 10.0;
        if (lambda > 1e12) {
          // No descent direction left: at a minimum within numerical precision.
          return {pose, rms_of(cost), iter};
        }
      }
    }
  }
  throw PoseFitError("pose fit did not converge", pose, rms_of(cost));
}

std::vector<Eigen::Vector2d> chord_circle_intersections(
  const Circle2 & circle, const Eigen::Vector2d & a, const Eigen::Vector2d & b)
{
  const Eigen::Vector2d d = b - a;
  const double len = d.norm();
  if (!(len > 0.0)) {
    throw ConfigError("chord endpoints coincide");
  }
  const Eigen::Vector2d u = d / len;
  const Eigen::Vector2d f = a - circle.center;
  // Foot of the perpendicular from the centre: a + s u.
  const double s = -f.dot(u);
  const Eigen::Vector2d foot = a + s * u;
  const double dist2 = (foot - circle.center).squaredNorm();
  const double r2 = circle.radius * circle.radius;
  const double disc = r2 - dist2;
  if (std::abs(disc) <= 1e-12 * r2) {
    return {foot};
  }
  if (disc < 0.0) {
    return {};
  }
  const double half = std::sqrt(disc);
  return {foot - half * u, foot + half * u};
}

DeflectionEstimate deflected_volume_fraction(
  const WheelModel3D & model, const WheelPose & pose, const CameraIntrinsics & cam,
  const std::optional<ChordAnnotation> & chord, int frame, const DeflectionOptions & options)
{
  DeflectionEstimate est;
  est.frame = frame;
  if (!chord) {
    return est;
  }
  const CircleGeometry inboard = circle_geometry(model, WheelCircle::Inboard);

  // Chord endpoints onto the inboard perimeter plane (wheel frame).
  const Eigen::Vector3d origin = -pose.rotation.transpose() * pose.translation;
  auto to_plane = [&](const Eigen::Vector2d & px) {
      const Eigen::Vector3d ray_cam((px.x() - cam.cx) / cam.fx, (px.y() - cam.cy) / cam.fy, 1.0);
      const Eigen::Vector3d ray = pose.rotation.transpose() * ray_cam;
      if (std::abs(ray.z()) < 1e-12) {
        throw NumericalError("chord ray parallel to the wheel plane");
      }
      const double s = (inboard.z - origin.z()) / ray.z();
      const Eigen::Vector3d hit = origin + s * ray;
      return Eigen::Vector2d(hit.x(), hit.y());
    };
  const Eigen::Vector2d q1 = to_plane(chord->p1);
  const Eigen::Vector2d q2 = to_plane(chord->p2);
  const auto cuts = chord_circle_intersections({Eigen::Vector2d::Zero(), inboard.radius}, q1, q2);
  if (cuts.size() < 2) {
    return est;
  }

  // Lowest image point of the perimeter marks the contact side.
  constexpr int kProbe = 3600;
  double contact_phi = 0.0;
  double max_v = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < kProbe; ++k) {
    const double a = kTwoPi * k / kProbe;
    const Eigen::Vector3d p = pose.rotation * circle_point(inboard, a) + pose.translation;
    const double v = project_point(cam, p).y();
    if (v > max_v) {
      max_v = v;
      contact_phi = a;
    }
  }

  const double a1 = wrap_2pi(std::atan2(cuts[0].y(), cuts[0].x()));
  const double a2 = wrap_2pi(std::atan2(cuts[1].y(), cuts[1].x()));
  // Counter-clockwise arc a1 -> a2 or a2 -> a1, whichever holds the contact point.
  double start = a1;
  double span = wrap_2pi(a2 - a1);
  if (wrap_2pi(contact_phi - a1) > span) {
    start = a2;
    span = wrap_2pi(a1 - a2);
  }

  const double step = options.arc_step_deg * std::numbers::pi / 180.0;
  const int segments = std::max(1, static_cast<int>(std::ceil(span / step - 1e-9)));
  std::vector<Eigen::Vector3d> points;
  points.reserve(static_cast<std::size_t>(2 * (segments + 1)));
  for (int k = 0; k <= segments; ++k) {
    const double a = start + span * k / segments;
    for (double z : {inboard.z, -inboard.z}) {
      const Eigen::Vector3d w(inboard.radius * std::cos(a), inboard.radius * std::sin(a), z);
      points.push_back(pose.rotation * w + pose.translation);
    }
  }
  // The cut endpoints are the exact intersections rather than their angle samples.
  for (const auto & cut : cuts) {
    for (double z : {inboard.z, -inboard.z}) {
      points.push_back(pose.rotation * Eigen::Vector3d(cut.x(), cut.y(), z) + pose.translation);
    }
  }

  est.volume = convex_hull_volume(points);
  est.fraction = est.volume / (std::numbers::pi * model.radius * model.radius * model.width);
  est.implausible = est.fraction > 0.5;
  return est;
}

std::vector<DeflectionEstimate> smooth_deflection_series(std::span<const DeflectionEstimate> raw, int window)
{
  if (window < 1 || window % 2 == 0) {
    throw ConfigError("smoothing window must be odd and >= 1");
  }
  const auto n = static_cast<std::ptrdiff_t>(raw.size());
  const std::ptrdiff_t half = window / 2;
  std::vector<DeflectionEstimate> out(raw.begin(), raw.end());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    double vol = 0.0;
    double frac = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) {
      vol += raw[static_cast<std::size_t>(k)].volume;
      frac += raw[static_cast<std::size_t>(k)].fraction;
    }
    const double count = static_cast<double>(hi - lo + 1);
    auto & o = out[static_cast<std::size_t>(i)];
    o.volume = vol / count;
    o.fraction = frac / count;
    o.implausible = o.fraction > 0.5;
  }
  return out;
}

double axle_angle_error(const WheelPose & a, const WheelPose & b)
{
  return std::atan2(a.axle().cross(b.axle()).norm(), a.axle().dot(b.axle()));
}

}  // namespace rover
