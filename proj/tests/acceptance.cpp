// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// the number of failures.

#include <Eigen/Geometry>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rover/cli.hpp"
#include "rover/deflection.hpp"
#include "rover/deflection_synth.hpp"
#include "rover/errors.hpp"
#include "rover/kinematics.hpp"
#include "rover/metrics.hpp"
#include "rover/telemetry_io.hpp"
#include "rover/terrain_power.hpp"

using namespace rover;
namespace fs = std::filesystem;

namespace
{

const std::string kData = ROVER_DATA_DIR;

struct Check
{
  bool ok{true};
  std::string detail;

  void require(bool cond, const std::string & what)
  {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string fmt(const char * f, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double round_sig3(double x)
{
  if (x == 0.0) {
    return 0.0;
  }
  const double scale = std::pow(10.0, 2 - std::floor(std::log10(std::abs(x))));
  return std::round(x * scale) / scale;
}

int run_cli_args(const std::vector<std::string> & args, std::string * captured = nullptr)
{
  std::vector<std::string> owned{"rover"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char *> argv;
  for (const auto & a : owned) {
    argv.push_back(a.c_str());
  }
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (captured) {
    *captured = out.str();
  }
  return code;
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> snapshot(const fs::path & dir)
{
  std::map<std::string, std::string> files;
  for (const auto & e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) {
      files[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
  }
  return files;
}

std::vector<std::pair<int, double>> read_series(const fs::path & p, std::size_t column)
{
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<int, double>> out;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) {
      cols.push_back(c);
    }
    out.emplace_back(std::stoi(cols[0]), std::stod(cols.at(column)));
  }
  return out;
}

// ---------------------------------------------------------------------------

Check cot_identity()
{
  Check c;
  const double e = cost_of_transport(54.39, 84.0, 9.81, 0.06);
  c.require(std::abs(e - 1.100) <= 1e-3, "cot(54.39 W) = " + fmt("%.5f", e));
  const RoverConfig cfg;
  for (const auto & row : reference_cot_table()) {
    const double p = row.cot * cfg.mass * cfg.gravity * row.velocity;
    const double back = cost_of_transport(p, cfg.mass, cfg.gravity, row.velocity);
    c.require(round_sig3(back) == round_sig3(row.cot), row.label + " row round trip " + fmt("%.6f", back));
  }
  if (c.ok) {
    c.detail = "cot=" + fmt("%.4f", e) + ", 8 rows round-trip";
  }
  return c;
}

Check calibration()
{
  Check c;
  const RoverConfig cfg;
  std::vector<CotRow> flat;
  for (const auto & r : reference_cot_table()) {
    if (r.label == "Nominal") {
      flat.push_back(r);
    }
  }
  c.require(flat.size() == 3, "expected three flat nominal rows");
  const auto fit = calibrate_power(flat, cfg);
  c.require(fit.max_abs_residual <= 0.15, "flat-row residual " + fmt("%.4f", fit.max_abs_residual));

  PowerModelParams truth;
  truth.idle_power_per_drive = 1.75;
  truth.rolling_resistance_coeff = 0.12;
  truth.speed_quadratic_coeff = 1500.0;
  std::vector<CotRow> synthetic;
  for (double slope : {0.0, 5.0, 12.0}) {
    for (double v : {0.02, 0.05, 0.09}) {
      synthetic.push_back({"synthetic", slope, v, model_cot(slope, v, cfg, truth)});
    }
  }
  const auto rt = calibrate_power(synthetic, cfg);
  auto rel = [](double a, double b) {return std::abs(a - b) / std::abs(b);};
  const double worst = std::max({rel(rt.params.idle_power_per_drive, truth.idle_power_per_drive),
        rel(rt.params.rolling_resistance_coeff, truth.rolling_resistance_coeff),
        rel(rt.params.speed_quadratic_coeff, truth.speed_quadratic_coeff)});
  c.require(worst <= 1e-6, "synthetic round trip relative error " + fmt("%.2e", worst));

  std::string slope_rows;
  for (const auto & r : reference_cot_table()) {
    if (r.slope_deg > 0.0) {
      slope_rows += " " + fmt("%.0f", r.slope_deg) + "deg:" +
        fmt("%+.3f", model_cot(r.slope_deg, r.velocity, cfg, fit.params) - r.cot);
    }
  }
  if (c.ok) {
    c.detail = "max flat residual " + fmt("%.4f", fit.max_abs_residual) + ", round trip " + fmt("%.1e", worst) +
      "; slope residuals (reported only)" + slope_rows;
  }
  return c;
}

std::vector<TelemetryRecord> rotation(LocomotionMode mode, double yaw_rad)
{
  Scenario s;
  s.profile = {{yaw_rad / 0.05, {0.0, 0.0, 0.05}, mode}};
  s.marker_offset = {0.2, 0.1};
  return simulate_traverse(s);
}

Check steering_efficiency()
{
  Check c;
  const auto skid = rotation(LocomotionMode::SkidSteer, kPi);
  const auto pt = rotation(LocomotionMode::PointTurn, kPi);
  const auto e_skid = median_ratio(angular_speed_efficiency(heading_series(skid), odometry_series(skid)));
  const auto e_pt = median_ratio(angular_speed_efficiency(heading_series(pt), odometry_series(pt)));
  c.require(e_skid && std::abs(*e_skid - 0.75) <= 0.01, "skid efficiency " + fmt("%.4f", e_skid.value_or(NAN)));
  c.require(e_pt && std::abs(*e_pt - 1.0) <= 0.01, "point-turn efficiency " + fmt("%.4f", e_pt.value_or(NAN)));
  if (c.ok) {
    c.detail = "skid " + fmt("%.4f", *e_skid) + ", point turn " + fmt("%.4f", *e_pt);
  }
  return c;
}

Check yaw_energy_crossover()
{
  Check c;
  const auto skid = energy_vs_yaw(simulate_traverse(load_scenario(kData + "/presets/rotation_skid.scn").scenario));
  const auto pt = energy_vs_yaw(simulate_traverse(
        load_scenario(kData + "/presets/rotation_point_turn.scn").scenario));
  c.require(skid.points.back().yaw_deg >= 360.0 && pt.points.back().yaw_deg >= 360.0, "curves stop short of 360 deg");
  if (!c.ok) {
    return c;
  }
  const double eps = 1e-6;
  const double pt0 = *pt.energy_at(eps);
  const double skid0 = *skid.energy_at(eps);
  c.require(pt0 > 0.0, "point-turn energy at 0+ is " + fmt("%.4f", pt0));
  c.require(std::abs(skid0) < 1e-3, "skid energy at 0+ is " + fmt("%.4f", skid0));

  // Sign of (point turn - skid) on a fine grid over (0, 360].
  int changes = 0;
  double crossing = NAN;
  int prev = pt0 > skid0 ? 1 : -1;
  for (int k = 1; k <= 36000; ++k) {
    const double yaw = 0.01 * k;
    const double d = *pt.energy_at(yaw) - *skid.energy_at(yaw);
    const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : prev);
    if (s != prev) {
      ++changes;
      crossing = yaw;
    }
    prev = s;
  }
  c.require(changes == 1, "sign changes: " + std::to_string(changes));
  c.require(prev < 0, "point turn not lower after the crossing");
  if (c.ok) {
    c.detail = "point turn starts at " + fmt("%.1f", pt0) + " J, skid at " + fmt("%.3f", skid0) +
      " J, single crossing at " + fmt("%.2f", crossing) + " deg";
  }
  return c;
}

Check kinematics_suite()
{
  Check c;
  const auto start = std::chrono::steady_clock::now();
  const RoverConfig cfg;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> v(-0.3, 0.3);
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  double worst_icr = 0.0;
  double worst_id = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const LocomotionMode mode = k % 2 == 0 ? LocomotionMode::Ackermann : LocomotionMode::PointTurn;
    BodyTwist t{v(rng), mode == LocomotionMode::Ackermann ? 0.0 : v(rng), w(rng)};
    if (std::abs(t.wz) < 1e-3) {
      t.wz = 1e-3;
    }
    const auto cmd = inverse_kinematics(t, mode, cfg);
    const auto icr = icr_of(cmd, cfg);
    worst_icr = std::max(worst_icr, icr.residual);
    const BodyTwist want = realizable_twist(t, mode, cfg);
    const BodyTwist got = forward_odometry(cmd, mode, cfg);
    worst_id = std::max({worst_id, std::abs(got.vx - want.vx), std::abs(got.vy - want.vy),
        std::abs(got.wz - want.wz)});
  }
  for (auto mode : {LocomotionMode::SkidSteer, LocomotionMode::Crab}) {
    for (int k = 0; k < 500; ++k) {
      const BodyTwist t{v(rng), v(rng), w(rng)};
      const BodyTwist want = realizable_twist(t, mode, cfg);
      const BodyTwist got = forward_odometry(inverse_kinematics(t, mode, cfg), mode, cfg);
      worst_id = std::max({worst_id, std::abs(got.vx - want.vx), std::abs(got.vy - want.vy),
          std::abs(got.wz - want.wz)});
    }
  }
  c.require(worst_icr < 1e-9, "ICR residual " + fmt("%.2e", worst_icr));
  c.require(worst_id < 1e-9, "forward(inverse) error " + fmt("%.2e", worst_id));

  const std::vector<TwistSegment> crab{{30.0, {0.1, 0.07, 0.0}, LocomotionMode::Crab},
    {20.0, {-0.05, 0.2, 0.3}, LocomotionMode::Crab}};
  double drift = 0.0;
  for (const auto & s : simulate_pose_track(crab, cfg, {0.2, 0.1})) {
    drift = std::max(drift, std::abs(s.heading));
  }
  c.require(drift == 0.0, "crab heading drift " + fmt("%.3e", drift));

  const Point2 marker{0.2, 0.1};
  const std::vector<TwistSegment> spin{{2.0 * kPi / 0.3, {0.0, 0.0, 0.3}, LocomotionMode::PointTurn}};
  double radius_err = 0.0;
  for (const auto & s : simulate_pose_track(spin, cfg, marker, 0.01)) {
    radius_err = std::max(radius_err, std::abs(std::hypot(s.marker.x, s.marker.y) - std::hypot(marker.x, marker.y)));
  }
  c.require(radius_err < 1e-4, "point-turn radius error " + fmt("%.2e", radius_err));

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.require(secs < 10.0, "took " + fmt("%.1f", secs) + " s");
  if (c.ok) {
    c.detail = "ICR " + fmt("%.1e", worst_icr) + " m, identity " + fmt("%.1e", worst_id) + ", crab drift 0, radius " +
      fmt("%.1e", radius_err) + " m, " + fmt("%.2f", secs) + " s";
  }
  return c;
}

Check deflection_oracle()
{
  Check c;
  const WheelModel3D wheel;
  const CameraIntrinsics cam;
  const WheelPose pose{Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.0, 0.0, 0.8)};
  auto chord_at = [&](double h) {
      const double z = -0.5 * wheel.width;
      return ChordAnnotation{project_point(cam, {-0.3, h * wheel.radius, z + 0.8}),
        project_point(cam, {0.3, h * wheel.radius, z + 0.8})};
    };
  auto oracle = [](double h) {return (std::acos(h) - h * std::sqrt(1.0 - h * h)) / kPi;};
  double worst = 0.0;
  for (double h : {0.99, 0.95, 0.9, 0.8, 0.6}) {
    const double f = deflected_volume_fraction(wheel, pose, cam, chord_at(h)).fraction;
    const double rel = std::abs(f - oracle(h)) / oracle(h);
    worst = std::max(worst, rel);
    c.require(rel <= 0.01, "h/r " + fmt("%.2f", h) + " relative error " + fmt("%.4f", rel));
  }
  double prev = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double h = 1.0 - 0.01 * k;
    const double f = deflected_volume_fraction(wheel, pose, cam, chord_at(h)).fraction;
    c.require(f > prev, "not monotone at h/r " + fmt("%.2f", h));
    prev = f;
  }
  const double tangent = deflected_volume_fraction(wheel, pose, cam, chord_at(1.0)).fraction;
  c.require(tangent == 0.0, "tangent chord gives " + fmt("%.3e", tangent));
  if (c.ok) {
    c.detail = "max relative error " + fmt("%.4f", worst) + ", monotone, tangent 0";
  }
  return c;
}

Check deflection_fixture(const fs::path & work)
{
  Check c;
  const std::string f = kData + "/fixtures/";
  const fs::path out = work / "deflection.csv";
  const int code = run_cli_args({"deflect", "--annotations", f + "obstacle_annotations.csv", "--model",
        f + "obstacle_wheel.model", "--camera", f + "obstacle_camera.cfg", "--out", out.string()});
  c.require(code == 0, "deflect exited " + std::to_string(code));
  if (!c.ok) {
    return c;
  }
  const auto series = read_series(out, 2);
  const auto oracle = read_series(f + "obstacle_oracle.csv", 1);
  c.require(series.size() == 220 && oracle.size() == 220, "expected 220 frames");
  if (!c.ok) {
    return c;
  }
  double peak = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const int frame = series[i].first;
    const double pct = 100.0 * series[i].second;
    peak = std::max(peak, pct);
    worst = std::max(worst, std::abs(pct - 100.0 * oracle[i].second));
    const bool stable = frame <= 90 || frame >= 151;
    if (stable) {
      c.require(pct >= 3.5 && pct <= 5.0, "frame " + std::to_string(frame) + " at " + fmt("%.3f", pct) + "%");
    }
    if (frame >= 125 && frame <= 137) {
      c.require(pct == 0.0, "airborne frame " + std::to_string(frame) + " at " + fmt("%.3f", pct) + "%");
    }
  }
  c.require(peak < 6.5, "peak " + fmt("%.3f", peak) + "%");
  c.require(worst <= 0.2, "max deviation from oracle " + fmt("%.3f", worst) + " pp");
  if (c.ok) {
    c.detail = "peak " + fmt("%.2f", peak) + "%, max deviation " + fmt("%.3f", worst) + " pp";
  }
  return c;
}

Check pose_fit_round_trip()
{
  Check c;
  const WheelModel3D wheel;
  const CameraIntrinsics cam;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_t = 0.0;
  double worst_r = 0.0;
  int failures = 0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector3d rv(0.5 * u(rng), 0.6 * u(rng), 0.3 * u(rng));
    const WheelPose truth = WheelPose::from_rotation_vector(rv,
        {0.08 * u(rng), 0.08 * u(rng), 0.6 + 0.2 * u(rng)});
    Eigen::Vector3d axis(u(rng), u(rng), u(rng));
    axis.normalize();
    WheelPose guess;
    guess.rotation = Eigen::AngleAxisd(deg2rad(20.0) * u(rng), axis).toRotationMatrix() * truth.rotation;
    guess.translation = truth.translation * (1.0 + 0.2 * u(rng));
    try {
      const PoseFit fit = fit_wheel_pose(project_wheel(wheel, truth, cam, 36), wheel, cam, guess);
      worst_t = std::max(worst_t, (fit.pose.translation - truth.translation).norm());
      worst_r = std::max(worst_r, rad2deg(axle_angle_error(fit.pose, truth)));
    } catch (const NumericalError &) {
      ++failures;
    }
  }
  c.require(failures == 0, std::to_string(failures) + " fits did not converge");
  c.require(worst_t < 1e-4, "translation error " + fmt("%.2e", worst_t) + " m");
  c.require(worst_r < 0.01, "rotation error " + fmt("%.2e", worst_r) + " deg");
  if (c.ok) {
    c.detail = "100 poses, max " + fmt("%.1e", worst_t) + " m, " + fmt("%.1e", worst_r) + " deg";
  }
  return c;
}

Check determinism(const fs::path & work)
{
  Check c;
  const std::string p = kData + "/presets/";
  const std::string f = kData + "/fixtures/";
  auto pipelines = [&](const fs::path & dir, const std::string & jobs, std::string & log) {
      fs::create_directories(dir);
      std::string s;
      int code = 0;
      code |= run_cli_args({"simulate", "--scenario", p + "rotation_skid.scn", "--scenario",
          p + "cot_5_slope_10.scn", "--out", (dir / "sim").string(), "-j", jobs}, &s);
      log += s;
      code |= run_cli_args({"analyze", "yaw-energy", "--scenario", p + "rotation_skid.scn", "--scenario",
          p + "rotation_point_turn.scn", "--out", (dir / "yaw").string(), "-j", jobs}, &s);
      log += s;
      code |= run_cli_args({"analyze", "cot", "--telemetry", (dir / "sim" / "cot_5_slope_10_telemetry.csv").string()},
          &s);
      log += s;
      code |= run_cli_args({"deflect", "--annotations", f + "obstacle_annotations.csv", "--model", f + "obstacle_wheel.model",
          "--camera", f + "obstacle_camera.cfg", "--smooth", "5", "--out", (dir / "deflect.csv").string()}, &s);
      log += s;
      code |= run_cli_args({"calibrate", "--table", kData + "/tables/cot_campaign.csv", "--out",
          (dir / "power.cfg").string()}, &s);
      log += s;
      code |= run_cli_args({"synth-fixture", "--out", (dir / "synth").string(), "--seed", "11"}, &s);
      log += s;
      code |= run_cli_args({"report", "--presets", p, "--fixtures", f, "--out", (dir / "report").string(), "-j",
          jobs}, &s);
      log += s;
      return code;
    };
  std::string log_a;
  std::string log_b;
  c.require(pipelines(work / "run_a", "1", log_a) == 0, "a pipeline failed in the first run");
  c.require(pipelines(work / "run_b", "4", log_b) == 0, "a pipeline failed in the second run");
  c.require(log_a == log_b, "standard output differs");
  const auto a = snapshot(work / "run_a");
  const auto b = snapshot(work / "run_b");
  c.require(a.size() == b.size(), "different file sets");
  for (const auto & [name, bytes] : a) {
    const auto it = b.find(name);
    c.require(it != b.end() && it->second == bytes, name + " differs");
  }
  if (c.ok) {
    c.detail = std::to_string(a.size()) + " files byte-identical across runs (-j 1 vs -j 4)";
  }
  return c;
}

}  // namespace

int main()
{
  const fs::path work = fs::temp_directory_path() / "rover_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
    {"cost-of-transport identity", cot_identity},
    {"power model calibration", calibration},
    {"steering-mode efficiency", steering_efficiency},
    {"yaw-energy crossover", yaw_energy_crossover},
    {"kinematics invariants", kinematics_suite},
    {"deflection hull vs segment oracle", deflection_oracle},
    {"deflection fixture reproduction", [&] {return deflection_fixture(work);}},
    {"pose-fit round trip", pose_fit_round_trip},
    {"pipeline determinism", [&] {return determinism(work);}},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception & e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %zu %s: %s\n", c.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), c.detail.c_str());
    failed += c.ok ? 0 : 1;
  }
  fs::remove_all(work);
  return failed;
}
