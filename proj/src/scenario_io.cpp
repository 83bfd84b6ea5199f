#include <cmath>
#include <fstream>
#include <sstream>

#include "rover/errors.hpp"
#include "rover/telemetry_io.hpp"
#include "text_util.hpp"

namespace rover
{

namespace
{

using detail::exact;
using detail::require_double;
using detail::split;
using detail::trim;

struct PowerField
{
  std::string_view name;
  double PowerModelParams::* member;
};

constexpr std::array<PowerField, 8> kPowerFields{{
  {"idle_power_per_drive", &PowerModelParams::idle_power_per_drive},
  {"rolling_resistance_coeff", &PowerModelParams::rolling_resistance_coeff},
  {"drivetrain_efficiency", &PowerModelParams::drivetrain_efficiency},
  {"steering_hold_power", &PowerModelParams::steering_hold_power},
  {"steering_move_power", &PowerModelParams::steering_move_power},
  {"speed_quadratic_coeff", &PowerModelParams::speed_quadratic_coeff},
  {"lateral_scrub_coeff", &PowerModelParams::lateral_scrub_coeff},
  {"drawbar_force", &PowerModelParams::drawbar_force},
}};

struct TerrainField
{
  std::string_view name;
  double TerrainParams::* member;
};

constexpr std::array<TerrainField, 5> kTerrainFields{{
  {"slope_deg", &TerrainParams::slope_deg},
  {"skid_rotation_efficiency", &TerrainParams::skid_rotation_efficiency},
  {"point_turn_efficiency", &TerrainParams::point_turn_efficiency},
  {"longitudinal_slip_ratio", &TerrainParams::longitudinal_slip_ratio},
  {"noise_std", &TerrainParams::noise_std},
}};

bool set_power_field(PowerModelParams & p, std::string_view key, double value)
{
  for (const auto & f : kPowerFields) {
    if (f.name == key) {
      p.*(f.member) = value;
      return true;
    }
  }
  return false;
}

bool set_terrain_field(TerrainParams & t, std::string_view key, std::string_view raw, int line)
{
  if (key == "rng_seed") {
    const auto v = detail::to_int(raw);
    if (!v || *v < 0) {
      throw DataError("rng_seed must be a non-negative integer", line);
    }
    t.rng_seed = static_cast<std::uint64_t>(*v);
    return true;
  }
  for (const auto & f : kTerrainFields) {
    if (f.name == key) {
      t.*(f.member) = require_double(raw, line, std::string(key));
      return true;
    }
  }
  return false;
}

std::string format_mode_row(const TwistSegment & s)
{
  return exact(s.duration) + "," + exact(s.twist.vx) + "," + exact(s.twist.vy) + "," + exact(s.twist.wz) + "," +
         std::string(to_string(s.mode));
}

// Rethrows configuration errors as data errors at `line`.
template<typename Fn>
auto at_line(int line, Fn && fn)
{
  try {
    return fn();
  } catch (const ConfigError & e) {
    throw DataError(e.what(), line);
  }
}

}  // namespace

std::vector<TwistSegment> parse_twist_profile(std::istream & in, int line_offset)
{
  int line_no = line_offset;
  std::string raw;
  bool header = false;
  std::vector<TwistSegment> out;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto cols = split(line, ',');
    if (!header) {
      if (cols.size() != 5 || cols[0] != "duration_s" || cols[1] != "vx" || cols[2] != "vy" || cols[3] != "wz" ||
        cols[4] != "mode")
      {
        throw DataError("expected header 'duration_s,vx,vy,wz,mode'", line_no);
      }
      header = true;
      continue;
    }
    if (cols.size() != 5) {
      throw DataError("expected 5 fields", line_no);
    }
    TwistSegment seg;
    seg.duration = require_double(cols[0], line_no, "duration");
    seg.twist = {require_double(cols[1], line_no, "vx"), require_double(cols[2], line_no, "vy"),
      require_double(cols[3], line_no, "wz")};
    seg.mode = at_line(line_no, [&] {return parse_mode(cols[4]);});
    if (seg.duration < 0.0) {
      throw DataError("negative duration", line_no);
    }
    out.push_back(seg);
  }
  if (!header) {
    throw DataError("missing twist profile header");
  }
  return out;
}

ScenarioFile parse_scenario(std::istream & in)
{
  ScenarioFile file;
  int line_no = 0;
  const auto entries = detail::read_key_values(in, line_no, "[profile]");
  for (const auto & kv : entries) {
    const std::string_view key = kv.key;
    if (key == "name") {
      file.name = kv.value;
    } else if (key == "label") {
      file.label = kv.value;
    } else if (key.starts_with("rover.")) {
      const double v = require_double(kv.value, kv.line, kv.key);
      if (!set_config_field(file.scenario.config, key.substr(6), v)) {
        throw DataError("unknown key '" + kv.key + "'", kv.line);
      }
    } else if (key.starts_with("terrain.")) {
      if (!set_terrain_field(file.scenario.terrain, key.substr(8), kv.value, kv.line)) {
        throw DataError("unknown key '" + kv.key + "'", kv.line);
      }
    } else if (key.starts_with("power.")) {
      const double v = require_double(kv.value, kv.line, kv.key);
      if (!set_power_field(file.scenario.power, key.substr(6), v)) {
        throw DataError("unknown key '" + kv.key + "'", kv.line);
      }
    } else if (key == "marker.x") {
      file.scenario.marker_offset.x = require_double(kv.value, kv.line, kv.key);
    } else if (key == "marker.y") {
      file.scenario.marker_offset.y = require_double(kv.value, kv.line, kv.key);
    } else if (key == "sim.step") {
      file.scenario.step = require_double(kv.value, kv.line, kv.key);
    } else {
      throw DataError("unknown key '" + kv.key + "'", kv.line);
    }
  }
  file.scenario.profile = parse_twist_profile(in, line_no);
  try {
    validate_config(file.scenario.config);
    validate_terrain(file.scenario.terrain);
    validate_power(file.scenario.power);
  } catch (const ConfigError & e) {
    throw DataError(std::string("invalid scenario: ") + e.what());
  }
  if (!(file.scenario.step > 0.0)) {
    throw DataError("invalid scenario: non-positive sim.step");
  }
  return file;
}

ScenarioFile load_scenario(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open scenario '" + path + "'");
  }
  return parse_scenario(in);
}

void write_scenario(std::ostream & out, const ScenarioFile & file)
{
  const Scenario & s = file.scenario;
  if (!file.name.empty()) {
    out << "name = " << file.name << '\n';
  }
  if (!file.label.empty()) {
    out << "label = " << file.label << '\n';
  }
  std::ostringstream cfg;
  write_config(cfg, s.config);
  std::istringstream lines(cfg.str());
  for (std::string line; std::getline(lines, line);) {
    out << "rover." << line << '\n';
  }
  for (const auto & f : kTerrainFields) {
    out << "terrain." << f.name << " = " << exact(s.terrain.*(f.member)) << '\n';
  }
  out << "terrain.rng_seed = " << s.terrain.rng_seed << '\n';
  for (const auto & f : kPowerFields) {
    out << "power." << f.name << " = " << exact(s.power.*(f.member)) << '\n';
  }
  out << "marker.x = " << exact(s.marker_offset.x) << '\n';
  out << "marker.y = " << exact(s.marker_offset.y) << '\n';
  out << "sim.step = " << exact(s.step) << '\n';
  out << "[profile]\nduration_s,vx,vy,wz,mode\n";
  for (const auto & seg : s.profile) {
    out << format_mode_row(seg) << '\n';
  }
}

PowerModelParams parse_power_params(std::istream & in)
{
  PowerModelParams p;
  int line_no = 0;
  for (const auto & kv : detail::read_key_values(in, line_no)) {
    if (!set_power_field(p, kv.key, require_double(kv.value, kv.line, kv.key))) {
      throw DataError("unknown power key '" + kv.key + "'", kv.line);
    }
  }
  return at_line(line_no, [&] {return validate_power(p);});
}

void write_power_params(std::ostream & out, const PowerModelParams & power)
{
  for (const auto & f : kPowerFields) {
    out << f.name << " = " << exact(power.*(f.member)) << '\n';
  }
}

WheelModelFile parse_wheel_model(std::istream & in)
{
  WheelModelFile file;
  Eigen::Vector3d rv = file.initial_guess.rotation_vector();
  Eigen::Vector3d t = file.initial_guess.translation;
  int line_no = 0;
  for (const auto & kv : detail::read_key_values(in, line_no)) {
    const double v = require_double(kv.value, kv.line, kv.key);
    if (kv.key == "radius") {
      file.model.radius = v;
    } else if (kv.key == "width") {
      file.model.width = v;
    } else if (kv.key == "hub_radius") {
      file.model.hub_radius = v;
    } else if (kv.key == "guess_rx") {
      rv.x() = v;
    } else if (kv.key == "guess_ry") {
      rv.y() = v;
    } else if (kv.key == "guess_rz") {
      rv.z() = v;
    } else if (kv.key == "guess_tx") {
      t.x() = v;
    } else if (kv.key == "guess_ty") {
      t.y() = v;
    } else if (kv.key == "guess_tz") {
      t.z() = v;
    } else {
      throw DataError("unknown wheel model key '" + kv.key + "'", kv.line);
    }
  }
  file.model = at_line(line_no, [&] {return validate_wheel_model(file.model);});
  file.initial_guess = WheelPose::from_rotation_vector(rv, t);
  return file;
}

void write_wheel_model(std::ostream & out, const WheelModelFile & file)
{
  const Eigen::Vector3d rv = file.initial_guess.rotation_vector();
  const Eigen::Vector3d & t = file.initial_guess.translation;
  out << "radius = " << exact(file.model.radius) << '\n'
      << "width = " << exact(file.model.width) << '\n'
      << "hub_radius = " << exact(file.model.hub_radius) << '\n'
      << "guess_rx = " << exact(rv.x()) << '\n'
      << "guess_ry = " << exact(rv.y()) << '\n'
      << "guess_rz = " << exact(rv.z()) << '\n'
      << "guess_tx = " << exact(t.x()) << '\n'
      << "guess_ty = " << exact(t.y()) << '\n'
      << "guess_tz = " << exact(t.z()) << '\n';
}

CameraIntrinsics parse_camera(std::istream & in)
{
  CameraIntrinsics cam;
  int line_no = 0;
  for (const auto & kv : detail::read_key_values(in, line_no)) {
    const double v = require_double(kv.value, kv.line, kv.key);
    if (kv.key == "fx") {
      cam.fx = v;
    } else if (kv.key == "fy") {
      cam.fy = v;
    } else if (kv.key == "cx") {
      cam.cx = v;
    } else if (kv.key == "cy") {
      cam.cy = v;
    } else if (kv.key == "width") {
      cam.width = static_cast<int>(v);
    } else if (kv.key == "height") {
      cam.height = static_cast<int>(v);
    } else {
      throw DataError("unknown camera key '" + kv.key + "'", kv.line);
    }
  }
  return at_line(line_no, [&] {return validate_camera(cam);});
}

void write_camera(std::ostream & out, const CameraIntrinsics & cam)
{
  out << "fx = " << exact(cam.fx) << '\n'
      << "fy = " << exact(cam.fy) << '\n'
      << "cx = " << exact(cam.cx) << '\n'
      << "cy = " << exact(cam.cy) << '\n'
      << "width = " << cam.width << '\n'
      << "height = " << cam.height << '\n';
}

}  // namespace rover
