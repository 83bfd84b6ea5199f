#include "rover/rover_model.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <ostream>
#include <string>

#include "rover/errors.hpp"
#include "text_util.hpp"

namespace rover
{

namespace
{

struct FieldRef
{
  std::string_view name;
  double RoverConfig::* member;
};

constexpr std::array<FieldRef, 11> kFields{{
  {"mass", &RoverConfig::mass},
  {"gravity", &RoverConfig::gravity},
  {"wheel_longitudinal_separation", &RoverConfig::wheel_longitudinal_separation},
  {"wheel_lateral_separation", &RoverConfig::wheel_lateral_separation},
  {"wheel_radius", &RoverConfig::wheel_radius},
  {"wheel_width", &RoverConfig::wheel_width},
  {"ground_clearance", &RoverConfig::ground_clearance},
  {"drive_motor_rated_power", &RoverConfig::drive_motor_rated_power},
  {"steering_motor_rated_power", &RoverConfig::steering_motor_rated_power},
  {"steering_rate", &RoverConfig::steering_rate},
  {"steering_limit", &RoverConfig::steering_limit},
}};

bool iequals(std::string_view a, std::string_view b)
{
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
           std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view to_string(LocomotionMode mode)
{
  switch (mode) {
    case LocomotionMode::Ackermann: return "Ackermann";
    case LocomotionMode::SkidSteer: return "SkidSteer";
    case LocomotionMode::Crab: return "Crab";
    case LocomotionMode::PointTurn: return "PointTurn";
  }
  return "?";
}

LocomotionMode parse_mode(std::string_view text)
{
  text = detail::trim(text);
  for (auto m : {LocomotionMode::Ackermann, LocomotionMode::SkidSteer, LocomotionMode::Crab,
      LocomotionMode::PointTurn})
  {
    if (iequals(text, to_string(m))) {
      return m;
    }
  }
  throw ConfigError("unknown locomotion mode '" + std::string(text) + "'");
}

std::string_view to_string(WheelId id)
{
  switch (id) {
    case WheelId::FL: return "FL";
    case WheelId::FR: return "FR";
    case WheelId::RL: return "RL";
    case WheelId::RR: return "RR";
  }
  return "?";
}

RoverConfig validate_config(const RoverConfig & raw)
{
  for (const auto & f : kFields) {
    if (!std::isfinite(raw.*(f.member))) {
      throw ConfigError("non-finite " + std::string(f.name));
    }
  }
  if (raw.mass <= 0.0) {
    throw ConfigError("non-positive mass");
  }
  if (raw.gravity <= 0.0) {
    throw ConfigError("non-positive gravity");
  }
  if (raw.wheel_longitudinal_separation <= 0.0 || raw.wheel_lateral_separation <= 0.0) {
    throw ConfigError("non-positive wheel separation");
  }
  if (raw.wheel_radius <= 0.0) {
    throw ConfigError("non-positive wheel radius");
  }
  if (raw.wheel_width <= 0.0) {
    throw ConfigError("non-positive wheel width");
  }
  if (raw.ground_clearance <= 0.0) {
    throw ConfigError("non-positive ground clearance");
  }
  if (raw.drive_motor_rated_power <= 0.0 || raw.steering_motor_rated_power <= 0.0) {
    throw ConfigError("non-positive motor rating");
  }
  if (raw.steering_limit <= 0.0) {
    throw ConfigError("empty steering range");
  }
  if (raw.steering_limit > kPi) {
    throw ConfigError("steering limit above pi");
  }
  if (raw.steering_rate <= 0.0) {
    throw ConfigError("non-positive steering rate");
  }
  return raw;
}

std::array<Point2, 4> wheel_positions(const RoverConfig & config)
{
  const double hl = 0.5 * config.wheel_longitudinal_separation;
  const double hw = 0.5 * config.wheel_lateral_separation;
  return {Point2{hl, hw}, Point2{hl, -hw}, Point2{-hl, hw}, Point2{-hl, -hw}};
}

bool set_config_field(RoverConfig & config, std::string_view key, double value)
{
  for (const auto & f : kFields) {
    if (f.name == key) {
      config.*(f.member) = value;
      return true;
    }
  }
  return false;
}

RoverConfig parse_config(std::istream & in)
{
  RoverConfig config;
  int line_no = 0;
  for (const auto & kv : detail::read_key_values(in, line_no)) {
    const double value = detail::require_double(kv.value, kv.line, "value for '" + kv.key + "'");
    if (!set_config_field(config, kv.key, value)) {
      throw DataError("unknown config key '" + kv.key + "'", kv.line);
    }
  }
  return validate_config(config);
}

RoverConfig load_config(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open config file '" + path + "'");
  }
  return parse_config(in);
}

void write_config(std::ostream & out, const RoverConfig & config)
{
  for (const auto & f : kFields) {
    out << f.name << " = " << detail::exact(config.*(f.member)) << '\n';
  }
}

}  // namespace rover
