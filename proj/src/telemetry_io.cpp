#include "rover/telemetry_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "rover/errors.hpp"
#include "text_util.hpp"

namespace rover
{

namespace
{

using detail::fixed;
using detail::require_double;
using detail::split;
using detail::trim;

std::string strip_spaces(std::string_view s)
{
  std::string out;
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\r') {
      out.push_back(c);
    }
  }
  return out;
}

// Reads the header line, skipping blank lines; throws unless it matches.
void expect_header(std::istream & in, int & line_no, std::string_view header)
{
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    if (trim(raw).empty()) {
      continue;
    }
    if (strip_spaces(raw) != header) {
      throw DataError("unexpected header, expected '" + std::string(header) + "'", line_no);
    }
    return;
  }
  throw DataError("missing header '" + std::string(header) + "'");
}

template<typename Fn>
void for_each_row(std::istream & in, int & line_no, std::size_t fields, Fn && fn)
{
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    if (trim(raw).empty()) {
      continue;
    }
    const auto cols = split(raw, ',');
    if (cols.size() != fields) {
      throw DataError("expected " + std::to_string(fields) + " fields, got " + std::to_string(cols.size()),
              line_no);
    }
    fn(cols);
  }
}

template<typename T, typename Fn>
std::vector<T> load_with(const std::string & path, Fn && fn)
{
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open '" + path + "'");
  }
  return fn(in);
}

std::size_t actuator_index(std::string_view name, int line)
{
  for (std::size_t i = 0; i < kActuatorNames.size(); ++i) {
    if (name == kActuatorNames[i]) {
      return i;
    }
  }
  throw DataError("unknown actuator '" + std::string(name) + "'", line);
}

}  // namespace

double MocapRecord::yaw() const
{
  return std::atan2(2.0 * (qw * qz + qx * qy), 1.0 - 2.0 * (qy * qy + qz * qz));
}

std::vector<MocapRecord> parse_mocap_csv(std::istream & in)
{
  int line_no = 0;
  expect_header(in, line_no, "t,x,y,z,qw,qx,qy,qz,marker");
  std::vector<MocapRecord> out;
  for_each_row(in, line_no, 9, [&](const std::vector<std::string_view> & c) {
      MocapRecord r;
      r.t = require_double(c[0], line_no, "time");
      r.x = require_double(c[1], line_no, "x");
      r.y = require_double(c[2], line_no, "y");
      r.z = require_double(c[3], line_no, "z");
      r.qw = require_double(c[4], line_no, "qw");
      r.qx = require_double(c[5], line_no, "qx");
      r.qy = require_double(c[6], line_no, "qy");
      r.qz = require_double(c[7], line_no, "qz");
      r.marker_id = std::string(c[8]);
      const double norm = std::sqrt(r.qw * r.qw + r.qx * r.qx + r.qy * r.qy + r.qz * r.qz);
      if (std::abs(norm - 1.0) > 1e-6) {
        throw DataError("non-unit quaternion", line_no);
      }
      if (!out.empty() && r.t < out.back().t) {
        throw DataError("non-monotone time", line_no);
      }
      out.push_back(std::move(r));
    });
  return out;
}

std::vector<MocapRecord> load_mocap_csv(const std::string & path)
{
  return load_with<MocapRecord>(path, [](std::istream & in) {return parse_mocap_csv(in);});
}

std::vector<ActuatorRecord> parse_actuator_csv(std::istream & in)
{
  int line_no = 0;
  expect_header(in, line_no, "t,actuator,voltage,current,measurement");
  std::vector<ActuatorRecord> out;
  std::array<double, kActuatorCount> last_t;
  last_t.fill(-std::numeric_limits<double>::infinity());
  for_each_row(in, line_no, 5, [&](const std::vector<std::string_view> & c) {
      ActuatorRecord r;
      r.t = require_double(c[0], line_no, "time");
      r.actuator = actuator_index(c[1], line_no);
      r.voltage = require_double(c[2], line_no, "voltage");
      r.current = require_double(c[3], line_no, "current");
      r.measurement = require_double(c[4], line_no, "measurement");
      if (r.t < last_t[r.actuator]) {
        throw DataError("non-monotone time", line_no);
      }
      last_t[r.actuator] = r.t;
      out.push_back(r);
    });
  return out;
}

std::vector<ActuatorRecord> load_actuator_csv(const std::string & path)
{
  return load_with<ActuatorRecord>(path, [](std::istream & in) {return parse_actuator_csv(in);});
}

std::vector<TelemetryRecord> align_series(
  const std::vector<MocapRecord> & mocap, const std::vector<ActuatorRecord> & actuators,
  double max_gap, LocomotionMode mode, const RoverConfig & config)
{
  if (mocap.empty() || actuators.empty()) {
    throw DataError("no temporal overlap");
  }
  std::vector<ActuatorRecord> acts = actuators;
  std::stable_sort(acts.begin(), acts.end(), [](const auto & a, const auto & b) {return a.t < b.t;});
  const double act_lo = acts.front().t;
  const double act_hi = acts.back().t;
  if (act_hi < mocap.front().t || act_lo > mocap.back().t) {
    throw DataError("no temporal overlap");
  }

  // Unwrapped mocap yaw for interpolation.
  std::vector<double> yaw(mocap.size());
  for (std::size_t i = 0; i < mocap.size(); ++i) {
    yaw[i] = i == 0 ? mocap[0].yaw() : yaw[i - 1] + wrap_angle(mocap[i].yaw() - mocap[i - 1].yaw());
  }

  std::vector<TelemetryRecord> out;
  std::array<ActuatorRecord, kActuatorCount> held{};
  std::size_t a = 0;
  std::size_t m = 0;
  while (a < acts.size()) {
    const double t = acts[a].t;
    while (a < acts.size() && acts[a].t == t) {
      held[acts[a].actuator] = acts[a];
      ++a;
    }

    TelemetryRecord rec;
    rec.t = t;
    rec.mode = mode;
    WheelCommands commands{};
    for (std::size_t i = 0; i < kActuatorCount; ++i) {
      rec.actuators[i] = {held[i].voltage, held[i].current};
    }
    for (auto id : kWheels) {
      const auto i = static_cast<std::size_t>(id);
      rec.drive_speed[i] = held[i].measurement;
      rec.steering_angle[i] = held[4 + i].measurement;
      commands[i] = {id, rec.drive_speed[i], rec.steering_angle[i]};
    }
    rec.odo_twist = forward_odometry(commands, mode, config);
    rec.commanded_twist = rec.odo_twist;

    while (m + 1 < mocap.size() && mocap[m + 1].t <= t) {
      ++m;
    }
    rec.pose_valid = false;
    if (t >= mocap.front().t && t <= mocap.back().t) {
      if (mocap[m].t == t) {
        rec.pose = {mocap[m].x, mocap[m].y, wrap_angle(yaw[m])};
        rec.pose_valid = true;
      } else if (m + 1 < mocap.size() && mocap[m + 1].t - mocap[m].t <= max_gap) {
        const double w = (t - mocap[m].t) / (mocap[m + 1].t - mocap[m].t);
        rec.pose = {mocap[m].x + w * (mocap[m + 1].x - mocap[m].x),
          mocap[m].y + w * (mocap[m + 1].y - mocap[m].y),
          wrap_angle(yaw[m] + w * (yaw[m + 1] - yaw[m]))};
        rec.pose_valid = true;
      }
    }
    out.push_back(rec);
  }
  return out;
}

std::string telemetry_header()
{
  std::string h = "t,x,y,heading,pose_valid,mode,odo_vx,odo_vy,odo_wz,cmd_vx,cmd_vy,cmd_wz";
  for (const char * name : kActuatorNames) {
    h += std::string(",") + name + "_V," + name + "_I";
  }
  for (auto id : kWheels) {
    h += ",speed_" + std::string(to_string(id));
  }
  for (auto id : kWheels) {
    h += ",steer_angle_" + std::string(to_string(id));
  }
  return h;
}

void write_telemetry_csv(std::ostream & out, const std::vector<TelemetryRecord> & records)
{
  out << telemetry_header() << '\n';
  for (const auto & r : records) {
    out << fixed(r.t) << ',' << fixed(r.pose.x) << ',' << fixed(r.pose.y) << ',' << fixed(r.pose.heading) << ','
        << (r.pose_valid ? 1 : 0) << ',' << to_string(r.mode) << ','
        << fixed(r.odo_twist.vx) << ',' << fixed(r.odo_twist.vy) << ',' << fixed(r.odo_twist.wz) << ','
        << fixed(r.commanded_twist.vx) << ',' << fixed(r.commanded_twist.vy) << ','
        << fixed(r.commanded_twist.wz);
    for (const auto & a : r.actuators) {
      out << ',' << fixed(a.voltage) << ',' << fixed(a.current);
    }
    for (double s : r.drive_speed) {
      out << ',' << fixed(s);
    }
    for (double s : r.steering_angle) {
      out << ',' << fixed(s);
    }
    out << '\n';
  }
}

std::vector<TelemetryRecord> parse_telemetry_csv(std::istream & in)
{
  int line_no = 0;
  const std::string header = telemetry_header();
  expect_header(in, line_no, header);
  const std::size_t fields = split(header, ',').size();
  std::vector<TelemetryRecord> out;
  for_each_row(in, line_no, fields, [&](const std::vector<std::string_view> & c) {
      std::size_t k = 0;
      auto num = [&](std::string_view what) {return require_double(c[k++], line_no, what);};
      TelemetryRecord r;
      r.t = num("time");
      r.pose.x = num("x");
      r.pose.y = num("y");
      r.pose.heading = num("heading");
      const auto valid = c[k++];
      if (valid != "0" && valid != "1") {
        throw DataError("pose_valid must be 0 or 1", line_no);
      }
      r.pose_valid = valid == "1";
      try {
        r.mode = parse_mode(c[k++]);
      } catch (const ConfigError & e) {
        throw DataError(e.what(), line_no);
      }
      r.odo_twist = {num("odo_vx"), num("odo_vy"), num("odo_wz")};
      r.commanded_twist = {num("cmd_vx"), num("cmd_vy"), num("cmd_wz")};
      for (auto & a : r.actuators) {
        a.voltage = num("voltage");
        a.current = num("current");
      }
      for (auto & s : r.drive_speed) {
        s = num("drive speed");
      }
      for (auto & s : r.steering_angle) {
        s = num("steering angle");
      }
      if (!out.empty() && !(r.t > out.back().t)) {
        throw DataError("time not strictly increasing", line_no);
      }
      out.push_back(r);
    });
  return out;
}

std::vector<TelemetryRecord> load_telemetry_csv(const std::string & path)
{
  return load_with<TelemetryRecord>(path, [](std::istream & in) {return parse_telemetry_csv(in);});
}

std::vector<CotRow> parse_cot_table(std::istream & in)
{
  int line_no = 0;
  expect_header(in, line_no, "mode,slope_deg,velocity_m_s,cot");
  std::vector<CotRow> out;
  for_each_row(in, line_no, 4, [&](const std::vector<std::string_view> & c) {
      out.push_back({std::string(c[0]), require_double(c[1], line_no, "slope"),
        require_double(c[2], line_no, "velocity"), require_double(c[3], line_no, "cot")});
    });
  return out;
}

std::vector<CotRow> load_cot_table(const std::string & path)
{
  return load_with<CotRow>(path, [](std::istream & in) {return parse_cot_table(in);});
}

void write_cot_table(std::ostream & out, const std::vector<CotRow> & rows)
{
  out << "mode,slope_deg,velocity_m_s,cot\n";
  for (const auto & r : rows) {
    out << r.label << ',' << detail::exact(r.slope_deg) << ',' << detail::exact(r.velocity) << ','
        << detail::exact(r.cot) << '\n';
  }
}

std::vector<AnnotationFrame> parse_annotations(std::istream & in)
{
  int line_no = 0;
  expect_header(in, line_no, "frame,cam_id,loops,chord_x1,chord_y1,chord_x2,chord_y2");
  std::vector<AnnotationFrame> out;
  for_each_row(in, line_no, 7, [&](const std::vector<std::string_view> & c) {
      AnnotationFrame f;
      const auto frame = detail::to_int(c[0]);
      if (!frame) {
        throw DataError("malformed frame index", line_no);
      }
      f.frame = static_cast<int>(*frame);
      f.cam_id = std::string(c[1]);
      const auto loops = split(c[2], '|');
      if (loops.size() != 3) {
        throw DataError("expected 3 loops (inboard|outboard|hub)", line_no);
      }
      for (std::size_t i = 0; i < 3; ++i) {
        for (auto pt : split(loops[i], ';')) {
          if (pt.empty()) {
            continue;
          }
          const auto uv = split(pt, ' ');
          if (uv.size() != 2) {
            throw DataError("loop point must be 'u v'", line_no);
          }
          f.loops[i].emplace_back(require_double(uv[0], line_no, "u"), require_double(uv[1], line_no, "v"));
        }
      }
      const bool any = !c[3].empty() || !c[4].empty() || !c[5].empty() || !c[6].empty();
      if (any) {
        f.chord = ChordAnnotation{
          {require_double(c[3], line_no, "chord_x1"), require_double(c[4], line_no, "chord_y1")},
          {require_double(c[5], line_no, "chord_x2"), require_double(c[6], line_no, "chord_y2")}};
      }
      out.push_back(std::move(f));
    });
  return out;
}

std::vector<AnnotationFrame> load_annotations(const std::string & path)
{
  return load_with<AnnotationFrame>(path, [](std::istream & in) {return parse_annotations(in);});
}

void write_annotations(std::ostream & out, const std::vector<AnnotationFrame> & frames)
{
  out << "frame,cam_id,loops,chord_x1,chord_y1,chord_x2,chord_y2\n";
  for (const auto & f : frames) {
    out << f.frame << ',' << f.cam_id << ',';
    for (std::size_t i = 0; i < 3; ++i) {
      if (i > 0) {
        out << '|';
      }
      for (std::size_t k = 0; k < f.loops[i].size(); ++k) {
        if (k > 0) {
          out << ';';
        }
        out << fixed(f.loops[i][k].x()) << ' ' << fixed(f.loops[i][k].y());
      }
    }
    if (f.chord) {
      out << ',' << fixed(f.chord->p1.x()) << ',' << fixed(f.chord->p1.y()) << ',' << fixed(f.chord->p2.x())
          << ',' << fixed(f.chord->p2.y()) << '\n';
    } else {
      out << ",,,,\n";
    }
  }
}

void write_deflection_csv(std::ostream & out, const std::vector<DeflectionEstimate> & series)
{
  out << "frame,volume_m3,fraction\n";
  for (const auto & e : series) {
    out << e.frame << ',' << fixed(e.volume, 9) << ',' << fixed(e.fraction) << '\n';
  }
}

}  // namespace rover
