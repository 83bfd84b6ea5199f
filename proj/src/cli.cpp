#include "rover/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "rover/deflection_synth.hpp"
#include "rover/errors.hpp"
#include "rover/metrics.hpp"
#include "rover/telemetry_io.hpp"
#include "text_util.hpp"

namespace rover
{

namespace
{

namespace fs = std::filesystem;
using detail::fixed;

class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Runs fn(0..n-1) on up to `jobs` threads. Errors are rethrown in index order.
template<typename Fn>
void parallel_for(std::size_t n, int jobs, Fn && fn)
{
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto & t : pool) {
    t.join();
  }
  for (auto & e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

void write_file(const fs::path & path, const std::function<void(std::ostream &)> & fn)
{
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw DataError("cannot write '" + path.string() + "'");
  }
  fn(f);
  if (!f) {
    throw DataError("write failed for '" + path.string() + "'");
  }
}

void ensure_dir(const fs::path & dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DataError("cannot create directory '" + dir.string() + "'");
  }
}

template<typename T>
T load_stream(const std::string & path, T (*parse)(std::istream &))
{
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open '" + path + "'");
  }
  return parse(in);
}

std::string stem_of(const std::string & path)
{
  return fs::path(path).stem().string();
}

double zoh_energy(const std::vector<TelemetryRecord> & tel)
{
  double e = 0.0;
  for (std::size_t k = 0; k + 1 < tel.size(); ++k) {
    e += tel[k].power() * (tel[k + 1].t - tel[k].t);
  }
  return e;
}

struct RunInput
{
  std::string name;
  std::string label;
  double slope_deg{0.0};
  RoverConfig config;
  std::vector<TelemetryRecord> telemetry;
};

RunInput simulate_file(const std::string & path)
{
  const ScenarioFile file = load_scenario(path);
  RunInput in;
  in.name = file.name.empty() ? stem_of(path) : file.name;
  in.label = file.label.empty() ? in.name : file.label;
  in.slope_deg = file.scenario.terrain.slope_deg;
  in.config = file.scenario.config;
  in.telemetry = simulate_traverse(file.scenario);
  return in;
}

std::vector<RunInput> gather_inputs(
  const std::vector<std::string> & telemetry_paths, const std::vector<std::string> & scenario_paths,
  const std::string & config_path, int jobs)
{
  if (telemetry_paths.empty() && scenario_paths.empty()) {
    throw UsageError("one of --telemetry or --scenario is required");
  }
  const RoverConfig config = config_path.empty() ? RoverConfig{} : load_config(config_path);
  std::vector<RunInput> inputs(telemetry_paths.size() + scenario_paths.size());
  parallel_for(inputs.size(), jobs, [&](std::size_t i) {
      if (i < telemetry_paths.size()) {
        const auto & path = telemetry_paths[i];
        inputs[i].name = stem_of(path);
        inputs[i].label = inputs[i].name;
        inputs[i].config = config;
        inputs[i].telemetry = load_telemetry_csv(path);
      } else {
        inputs[i] = simulate_file(scenario_paths[i - telemetry_paths.size()]);
      }
    });
  return inputs;
}

std::string key_for(const RunInput & in, std::string_view key, bool prefixed)
{
  return prefixed ? in.name + "." + std::string(key) : std::string(key);
}

// ---- metric pipelines -------------------------------------------------------

std::vector<double> yaw_crossings(const YawEnergyCurve & a, const YawEnergyCurve & b, double step_deg = 0.5)
{
  std::vector<double> out;
  const double end = std::min(a.points.empty() ? 0.0 : a.points.back().yaw_deg,
      b.points.empty() ? 0.0 : b.points.back().yaw_deg);
  double prev_yaw = 0.0;
  double prev_diff = 0.0;
  bool have_prev = false;
  for (double yaw = step_deg; yaw <= end + 1e-9; yaw += step_deg) {
    const auto ea = a.energy_at(yaw);
    const auto eb = b.energy_at(yaw);
    if (!ea || !eb) {
      break;
    }
    const double diff = *ea - *eb;
    if (have_prev && ((prev_diff < 0.0 && diff >= 0.0) || (prev_diff > 0.0 && diff <= 0.0))) {
      out.push_back(prev_yaw + step_deg * prev_diff / (prev_diff - diff));
    }
    prev_yaw = yaw;
    prev_diff = diff;
    have_prev = true;
  }
  return out;
}

void write_yaw_energy_csv(std::ostream & out, const YawEnergyCurve & curve)
{
  out << "yaw_deg,energy_J\n";
  for (const auto & p : curve.points) {
    out << fixed(p.yaw_deg) << ',' << fixed(p.energy) << '\n';
  }
}

std::vector<RatioSample> efficiency_of(const RunInput & in)
{
  const auto heading = heading_series(in.telemetry);
  const auto odo = odometry_series(in.telemetry);
  return angular_speed_efficiency(heading, odo);
}

void write_efficiency_csv(std::ostream & out, const std::vector<RatioSample> & ratios)
{
  out << "t_s,efficiency\n";
  for (const auto & r : ratios) {
    out << fixed(r.t) << ',' << (r.clamped ? fixed(*r.clamped) : std::string()) << '\n';
  }
}

std::optional<double> median_of(std::vector<double> v)
{
  if (v.empty()) {
    return std::nullopt;
  }
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<DeflectionEstimate> run_deflection(
  const std::vector<AnnotationFrame> & frames, const WheelModelFile & model, const CameraIntrinsics & cam)
{
  std::vector<DeflectionEstimate> out;
  out.reserve(frames.size());
  WheelPose guess = model.initial_guess;
  for (const auto & f : frames) {
    const PoseFit fit = fit_wheel_pose(f.loops, model.model, cam, guess);
    guess = fit.pose;
    out.push_back(deflected_volume_fraction(model.model, fit.pose, cam, f.chord, f.frame));
  }
  return out;
}

struct CalibrationReport
{
  CalibrationResult fit;
  std::vector<CotRow> rows;
  std::vector<bool> used;
  std::vector<double> model;
};

CalibrationReport run_calibration(
  const std::vector<CotRow> & rows, const RoverConfig & config, const std::string & fit_label, double max_slope)
{
  CalibrationReport rep;
  rep.rows = rows;
  std::vector<CotRow> fit_rows;
  for (const auto & r : rows) {
    const bool use = (fit_label.empty() || r.label == fit_label) && std::abs(r.slope_deg) <= max_slope;
    rep.used.push_back(use);
    if (use) {
      fit_rows.push_back(r);
    }
  }
  rep.fit = calibrate_power(fit_rows, config);
  for (const auto & r : rows) {
    rep.model.push_back(model_cot(r.slope_deg, r.velocity, config, rep.fit.params));
  }
  return rep;
}

void print_calibration(std::ostream & out, const CalibrationReport & rep)
{
  out << "fitted_rows=" << std::count(rep.used.begin(), rep.used.end(), true) << '\n';
  write_power_params(out, rep.fit.params);
  out << "mode,slope_deg,velocity_m_s,cot,model_cot,residual,fitted\n";
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto & r = rep.rows[i];
    out << r.label << ',' << fixed(r.slope_deg, 1) << ',' << fixed(r.velocity, 3) << ',' << fixed(r.cot, 3) << ','
        << fixed(rep.model[i], 3) << ',' << fixed(rep.model[i] - r.cot, 3) << ',' << (rep.used[i] ? 1 : 0) << '\n';
  }
  out << "max_abs_residual=" << fixed(rep.fit.max_abs_residual, 4) << '\n';
}

std::string cot_table_text(const std::vector<RunInput> & inputs, const std::vector<CotReport> & reports)
{
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-14s %10s %14s %8s\n", "mode", "slope_deg", "velocity_m_s", "cot");
  os << line;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::snprintf(line, sizeof(line), "%-14s %10.1f %14.3f %8.3f\n", inputs[i].label.c_str(), inputs[i].slope_deg,
      reports[i].mean_velocity, reports[i].cost_of_transport);
    os << line;
  }
  return os.str();
}

std::string run_summary(const RunInput & in)
{
  std::ostringstream os;
  const auto & tel = in.telemetry;
  os << "name=" << in.name << '\n' << "label=" << in.label << '\n' << "records=" << tel.size() << '\n';
  if (tel.empty()) {
    return os.str();
  }
  const double duration = tel.back().t - tel.front().t;
  const double energy = zoh_energy(tel);
  os << "duration_s=" << fixed(duration, 3) << '\n' << "energy_J=" << fixed(energy, 3) << '\n';
  if (duration > 0.0) {
    os << "mean_power_W=" << fixed(energy / duration, 3) << '\n';
  }
  const auto curve = energy_vs_yaw(tel);
  if (!curve.points.empty()) {
    os << "yaw_deg=" << fixed(curve.points.back().yaw_deg, 3) << '\n';
  }
  os << "final_x_m=" << fixed(tel.back().pose.x) << '\n'
     << "final_y_m=" << fixed(tel.back().pose.y) << '\n'
     << "final_heading_deg=" << fixed(rad2deg(tel.back().pose.heading), 3) << '\n';
  double distance = 0.0;
  for (std::size_t k = 0; k + 1 < tel.size(); ++k) {
    distance += std::hypot(tel[k].odo_twist.vx, tel[k].odo_twist.vy) * (tel[k + 1].t - tel[k].t);
  }
  os << "odometry_distance_m=" << fixed(distance) << '\n';
  if (distance > 0.0) {
    os << "cot=" << fixed(mean_cot(tel, in.config).cost_of_transport, 3) << '\n';
  }
  return os.str();
}

// ---- subcommands ------------------------------------------------------------

struct AnalyzeArgs
{
  std::vector<std::string> telemetry;
  std::vector<std::string> scenarios;
  std::string config;
  std::string out_dir;
};

void add_analyze_options(CLI::App * sub, AnalyzeArgs & a)
{
  sub->add_option("--telemetry", a.telemetry, "Telemetry CSV (repeatable)");
  sub->add_option("--scenario", a.scenarios, "Scenario file to simulate first (repeatable)");
  sub->add_option("--config", a.config, "Rover configuration file (mass, gravity)");
  sub->add_option("--out", a.out_dir, "Directory for metric CSVs");
}

int cmd_simulate(const std::vector<std::string> & scenarios, const std::string & out_dir, int jobs, std::ostream & out)
{
  ensure_dir(out_dir);
  std::vector<RunInput> runs(scenarios.size());
  std::vector<std::string> summaries(scenarios.size());
  parallel_for(scenarios.size(), jobs, [&](std::size_t i) {
      runs[i] = simulate_file(scenarios[i]);
      summaries[i] = run_summary(runs[i]);
      const fs::path base = fs::path(out_dir) / stem_of(scenarios[i]);
      write_file(base.string() + "_telemetry.csv", [&](std::ostream & f) {write_telemetry_csv(f, runs[i].telemetry);});
      write_file(base.string() + "_summary.txt", [&](std::ostream & f) {f << summaries[i];});
    });
  for (const auto & s : summaries) {
    out << s;
  }
  return kExitOk;
}

int cmd_cot(const AnalyzeArgs & a, int jobs, std::ostream & out)
{
  const auto inputs = gather_inputs(a.telemetry, a.scenarios, a.config, jobs);
  std::vector<CotReport> reports;
  for (const auto & in : inputs) {
    reports.push_back(mean_cot(in.telemetry, in.config));
  }
  if (!a.out_dir.empty()) {
    ensure_dir(a.out_dir);
    write_file(fs::path(a.out_dir) / "cot.csv", [&](std::ostream & f) {
        f << "mode,slope_deg,velocity_m_s,mean_power_W,cot\n";
        for (std::size_t i = 0; i < inputs.size(); ++i) {
          f << inputs[i].label << ',' << fixed(inputs[i].slope_deg) << ',' << fixed(reports[i].mean_velocity) << ','
            << fixed(reports[i].mean_power) << ',' << fixed(reports[i].cost_of_transport) << '\n';
        }
      });
  }
  if (inputs.size() == 1) {
    out << "input=" << inputs[0].name << '\n'
        << "mean_power_W=" << fixed(reports[0].mean_power, 3) << '\n'
        << "mean_velocity_m_s=" << fixed(reports[0].mean_velocity, 4) << '\n'
        << "cot=" << fixed(reports[0].cost_of_transport, 3) << '\n';
  } else {
    out << cot_table_text(inputs, reports);
  }
  return kExitOk;
}

int cmd_yaw_energy(const AnalyzeArgs & a, int jobs, std::ostream & out)
{
  const auto inputs = gather_inputs(a.telemetry, a.scenarios, a.config, jobs);
  const bool multi = inputs.size() > 1;
  std::vector<YawEnergyCurve> curves;
  for (const auto & in : inputs) {
    curves.push_back(energy_vs_yaw(in.telemetry));
    const auto & pts = curves.back().points;
    if (!a.out_dir.empty()) {
      ensure_dir(a.out_dir);
      write_file(fs::path(a.out_dir) / (in.name + "_yaw_energy.csv"),
        [&](std::ostream & f) {write_yaw_energy_csv(f, curves.back());});
    }
    out << key_for(in, "yaw_deg", multi) << '=' << fixed(pts.empty() ? 0.0 : pts.back().yaw_deg, 3) << '\n'
        << key_for(in, "energy_J", multi) << '=' << fixed(pts.empty() ? 0.0 : pts.back().energy, 3) << '\n';
  }
  if (curves.size() == 2) {
    const auto cross = yaw_crossings(curves[0], curves[1]);
    out << "crossings=" << cross.size() << '\n';
    for (double c : cross) {
      out << "crossover_deg=" << fixed(c, 1) << '\n';
    }
  }
  return kExitOk;
}

int cmd_efficiency(const AnalyzeArgs & a, int jobs, std::ostream & out)
{
  const auto inputs = gather_inputs(a.telemetry, a.scenarios, a.config, jobs);
  const bool multi = inputs.size() > 1;
  for (const auto & in : inputs) {
    const auto ratios = efficiency_of(in);
    if (!a.out_dir.empty()) {
      ensure_dir(a.out_dir);
      write_file(fs::path(a.out_dir) / (in.name + "_efficiency.csv"),
        [&](std::ostream & f) {write_efficiency_csv(f, ratios);});
    }
    const auto med = median_ratio(ratios);
    out << key_for(in, "efficiency", multi) << '=' << (med ? fixed(*med, 3) : std::string("nan")) << '\n';
  }
  return kExitOk;
}

int cmd_slip(const AnalyzeArgs & a, int jobs, std::ostream & out)
{
  const auto inputs = gather_inputs(a.telemetry, a.scenarios, a.config, jobs);
  const bool multi = inputs.size() > 1;
  for (const auto & in : inputs) {
    const auto enc = encoder_speed_series(in.telemetry);
    const auto moc = mocap_speed_series(in.telemetry);
    const auto slip = longitudinal_slip(enc, moc);
    std::vector<double> valid;
    for (const auto & s : slip) {
      if (s) {
        valid.push_back(*s);
      }
    }
    if (!a.out_dir.empty()) {
      ensure_dir(a.out_dir);
      write_file(fs::path(a.out_dir) / (in.name + "_slip.csv"), [&](std::ostream & f) {
          f << "t_s,slip\n";
          for (std::size_t k = 0; k < slip.size(); ++k) {
            f << fixed(in.telemetry[k].t) << ',' << (slip[k] ? fixed(*slip[k]) : std::string()) << '\n';
          }
        });
    }
    const auto med = median_of(valid);
    out << key_for(in, "slip", multi) << '=' << (med ? fixed(*med, 3) : std::string("nan")) << '\n';
  }
  return kExitOk;
}

int cmd_deflect(
  const std::string & annotations, const std::string & model_path, const std::string & camera_path,
  const std::string & out_path, int smooth, std::ostream & out)
{
  const auto frames = load_annotations(annotations);
  const auto model = load_stream(model_path, &parse_wheel_model);
  const auto cam = load_stream(camera_path, &parse_camera);
  auto series = run_deflection(frames, model, cam);
  if (smooth > 1) {
    series = smooth_deflection_series(series, smooth);
  }
  if (out_path.empty()) {
    write_deflection_csv(out, series);
    return kExitOk;
  }
  write_file(out_path, [&](std::ostream & f) {write_deflection_csv(f, series);});
  double peak = 0.0;
  int implausible = 0;
  for (const auto & e : series) {
    peak = std::max(peak, e.fraction);
    implausible += e.implausible ? 1 : 0;
  }
  out << "frames=" << series.size() << '\n'
      << "max_fraction_pct=" << fixed(100.0 * peak, 3) << '\n'
      << "implausible_frames=" << implausible << '\n';
  return kExitOk;
}

int cmd_calibrate(
  const std::string & table, const std::string & config_path, const std::string & fit_label, double max_slope,
  const std::string & out_path, std::ostream & out)
{
  const RoverConfig config = config_path.empty() ? RoverConfig{} : load_config(config_path);
  const auto rep = run_calibration(load_cot_table(table), config, fit_label, max_slope);
  if (!out_path.empty()) {
    write_file(out_path, [&](std::ostream & f) {write_power_params(f, rep.fit.params);});
  }
  print_calibration(out, rep);
  return kExitOk;
}

int cmd_synth_fixture(const std::string & out_dir, double noise, std::uint64_t seed, std::ostream & out)
{
  ensure_dir(out_dir);
  const auto model = fixture_wheel();
  const auto cam = fixture_camera();
  const auto fractions = obstacle_run_fractions();
  SynthOptions opt;
  opt.noise_px = noise;
  opt.seed = seed;
  const auto synth = synthesize_frames(model, cam, fractions, opt);
  std::vector<AnnotationFrame> frames;
  for (const auto & s : synth) {
    frames.push_back({s.frame, "cam0", s.loops, s.chord});
  }
  const fs::path dir(out_dir);
  write_file(dir / "obstacle_annotations.csv", [&](std::ostream & f) {write_annotations(f, frames);});
  write_file(dir / "obstacle_wheel.model", [&](std::ostream & f) {
      write_wheel_model(f, {model, fixture_pose(1)});
    });
  write_file(dir / "obstacle_camera.cfg", [&](std::ostream & f) {write_camera(f, cam);});
  write_file(dir / "obstacle_oracle.csv", [&](std::ostream & f) {
      f << "frame,fraction\n";
      for (const auto & s : synth) {
        f << s.frame << ',' << fixed(s.target_fraction, 9) << '\n';
      }
    });
  out << "frames=" << frames.size() << '\n';
  return kExitOk;
}

std::map<int, double> load_oracle(const fs::path & path)
{
  std::map<int, double> out;
  std::ifstream in(path);
  if (!in) {
    return out;
  }
  std::string line;
  int line_no = 1;
  std::getline(in, line);
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) {
      continue;
    }
    const auto cols = detail::split(line, ',');
    const auto frame = cols.size() == 2 ? detail::to_int(cols[0]) : std::nullopt;
    if (!frame) {
      throw DataError("malformed oracle row", line_no);
    }
    out[static_cast<int>(*frame)] = detail::require_double(cols[1], line_no, "fraction");
  }
  return out;
}

int cmd_report(const std::string & presets, const std::string & fixtures, const std::string & out_dir, int jobs,
  std::ostream & out)
{
  ensure_dir(out_dir);
  const fs::path dir(out_dir);

  std::vector<std::string> table_paths;
  if (!fs::is_directory(presets)) {
    throw DataError("preset directory '" + presets + "' not found");
  }
  for (const auto & entry : fs::directory_iterator(presets)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("cot_") && entry.path().extension() == ".scn") {
      table_paths.push_back(entry.path().string());
    }
  }
  std::sort(table_paths.begin(), table_paths.end());
  if (table_paths.empty()) {
    throw DataError("no cot_*.scn presets in '" + presets + "'");
  }
  std::vector<std::string> all = table_paths;
  const std::array<std::string, 2> rotation_names{"rotation_skid", "rotation_point_turn"};
  for (const auto & r : rotation_names) {
    all.push_back((fs::path(presets) / (r + ".scn")).string());
  }

  std::vector<RunInput> runs(all.size());
  parallel_for(all.size(), jobs, [&](std::size_t i) {runs[i] = simulate_file(all[i]);});

  std::ostringstream summary;

  // Cost-of-transport rows.
  const auto reference = reference_cot_table();
  std::vector<RunInput> table_runs(runs.begin(), runs.begin() + static_cast<std::ptrdiff_t>(table_paths.size()));
  std::vector<CotReport> reports;
  for (const auto & r : table_runs) {
    reports.push_back(mean_cot(r.telemetry, r.config));
  }
  write_file(dir / "cot_table.csv", [&](std::ostream & f) {
      f << "mode,slope_deg,velocity_m_s,cot,reference_cot\n";
      for (std::size_t i = 0; i < table_runs.size(); ++i) {
        std::string ref;
        for (const auto & row : reference) {
          if (row.label == table_runs[i].label && std::abs(row.slope_deg - table_runs[i].slope_deg) < 1e-9 &&
            std::abs(row.velocity - reports[i].mean_velocity) < 1e-3)
          {
            ref = fixed(row.cot, 3);
          }
        }
        f << table_runs[i].label << ',' << fixed(table_runs[i].slope_deg, 1) << ','
          << fixed(reports[i].mean_velocity, 3) << ',' << fixed(reports[i].cost_of_transport, 3) << ',' << ref
          << '\n';
      }
    });
  summary << cot_table_text(table_runs, reports);

  // Yaw-energy and efficiency for the rotation tests.
  std::array<YawEnergyCurve, 2> curves;
  for (std::size_t k = 0; k < 2; ++k) {
    const auto & run = runs[table_paths.size() + k];
    curves[k] = energy_vs_yaw(run.telemetry);
    write_file(dir / ("yaw_energy_" + run.name + ".csv"), [&](std::ostream & f) {write_yaw_energy_csv(f, curves[k]);});
    const auto ratios = efficiency_of(run);
    write_file(dir / ("efficiency_" + run.name + ".csv"), [&](std::ostream & f) {write_efficiency_csv(f, ratios);});
    const auto med = median_ratio(ratios);
    summary << run.name << ".efficiency=" << (med ? fixed(*med, 3) : std::string("nan")) << '\n';
  }
  for (double c : yaw_crossings(curves[0], curves[1])) {
    summary << "yaw_energy.crossover_deg=" << fixed(c, 1) << '\n';
  }

  // Deflection series.
  const fs::path fx(fixtures);
  const auto frames = load_annotations((fx / "obstacle_annotations.csv").string());
  const auto model = load_stream((fx / "obstacle_wheel.model").string(), &parse_wheel_model);
  const auto cam = load_stream((fx / "obstacle_camera.cfg").string(), &parse_camera);
  const auto series = run_deflection(frames, model, cam);
  const auto oracle = load_oracle(fx / "obstacle_oracle.csv");
  double peak = 0.0;
  write_file(dir / "obstacle_deflection.csv", [&](std::ostream & f) {
      f << "frame,fraction_pct" << (oracle.empty() ? "" : ",oracle_pct") << '\n';
      for (const auto & e : series) {
        peak = std::max(peak, e.fraction);
        f << e.frame << ',' << fixed(100.0 * e.fraction, 4);
        if (!oracle.empty()) {
          const auto it = oracle.find(e.frame);
          f << ',' << (it == oracle.end() ? std::string() : fixed(100.0 * it->second, 4));
        }
        f << '\n';
      }
    });
  summary << "deflection.max_fraction_pct=" << fixed(100.0 * peak, 3) << '\n';

  // Calibration against the reference table.
  const auto cal = run_calibration(reference, RoverConfig{}, "Nominal", 0.0);
  write_file(dir / "calibration.txt", [&](std::ostream & f) {print_calibration(f, cal);});
  summary << "calibration.max_abs_residual=" << fixed(cal.fit.max_abs_residual, 4) << '\n';

  write_file(dir / "summary.txt", [&](std::ostream & f) {f << summary.str();});
  out << summary.str();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char * const * argv, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Breadboard rover simulation and analysis", "rover"};
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("--jobs,-j", jobs, "Parallel scenario jobs")->check(CLI::PositiveNumber);

  std::vector<std::string> sim_scenarios;
  std::string sim_out;
  auto * simulate = app.add_subcommand("simulate", "Simulate scenario files into telemetry CSVs");
  simulate->add_option("--scenario", sim_scenarios, "Scenario file (repeatable)")->required();
  simulate->add_option("--out", sim_out, "Output directory")->required();
  simulate->add_option("--jobs,-j", jobs, "Parallel scenario jobs")->check(CLI::PositiveNumber);

  auto * analyze = app.add_subcommand("analyze", "Compute metrics from telemetry");
  analyze->require_subcommand(1);
  AnalyzeArgs cot_args;
  AnalyzeArgs yaw_args;
  AnalyzeArgs eff_args;
  AnalyzeArgs slip_args;
  auto * cot = analyze->add_subcommand("cot", "Cost of transport");
  auto * yaw = analyze->add_subcommand("yaw-energy", "Energy against cumulative yaw");
  auto * eff = analyze->add_subcommand("efficiency", "Angular speed efficiency");
  auto * slip = analyze->add_subcommand("slip", "Longitudinal slip ratio");
  add_analyze_options(cot, cot_args);
  add_analyze_options(yaw, yaw_args);
  add_analyze_options(eff, eff_args);
  add_analyze_options(slip, slip_args);
  for (auto * sub : {cot, yaw, eff, slip}) {
    sub->add_option("--jobs,-j", jobs, "Parallel scenario jobs")->check(CLI::PositiveNumber);
  }

  std::string ann_path;
  std::string model_path;
  std::string camera_path;
  std::string deflect_out;
  int smooth = 1;
  auto * deflect = app.add_subcommand("deflect", "Per-frame wheel deflection from annotations");
  deflect->add_option("--annotations", ann_path, "Annotation CSV")->required();
  deflect->add_option("--model", model_path, "Wheel model file")->required();
  deflect->add_option("--camera", camera_path, "Camera intrinsics file")->required();
  deflect->add_option("--out", deflect_out, "Output CSV (default: standard output)");
  deflect->add_option("--smooth", smooth, "Centred moving-average window (odd)")->check(CLI::PositiveNumber);

  std::string table_path;
  std::string cal_config;
  std::string fit_label = "Nominal";
  double max_slope = 0.0;
  std::string cal_out;
  auto * calibrate = app.add_subcommand("calibrate", "Fit power model parameters to a CoT table");
  calibrate->add_option("--table", table_path, "CoT table CSV")->required();
  calibrate->add_option("--config", cal_config, "Rover configuration file");
  calibrate->add_option("--fit-label", fit_label, "Only fit rows with this mode label (empty: all)");
  calibrate->add_option("--fit-max-slope", max_slope, "Only fit rows at or below this slope [deg]");
  calibrate->add_option("--out", cal_out, "Write fitted parameters to this file");

  std::string presets;
  std::string fixtures;
  std::string report_out;
  auto * report = app.add_subcommand("report", "Regenerate tables and plot series into one directory");
  report->add_option("--presets", presets, "Preset scenario directory")->required();
  report->add_option("--fixtures", fixtures, "Fixture directory")->required();
  report->add_option("--out", report_out, "Output directory")->required();
  report->add_option("--jobs,-j", jobs, "Parallel scenario jobs")->check(CLI::PositiveNumber);

  std::string synth_out;
  double synth_noise = SynthOptions{}.noise_px;
  std::uint64_t synth_seed = SynthOptions{}.seed;
  auto * synth = app.add_subcommand("synth-fixture", "Write the synthetic obstacle-run deflection fixture");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--noise", synth_noise, "Annotation noise [px]")->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_seed, "Noise seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp & e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError & e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*simulate) {
      return cmd_simulate(sim_scenarios, sim_out, jobs, out);
    }
    if (*cot) {
      return cmd_cot(cot_args, jobs, out);
    }
    if (*yaw) {
      return cmd_yaw_energy(yaw_args, jobs, out);
    }
    if (*eff) {
      return cmd_efficiency(eff_args, jobs, out);
    }
    if (*slip) {
      return cmd_slip(slip_args, jobs, out);
    }
    if (*deflect) {
      if (smooth % 2 == 0) {
        throw UsageError("--smooth must be odd");
      }
      return cmd_deflect(ann_path, model_path, camera_path, deflect_out, smooth, out);
    }
    if (*calibrate) {
      return cmd_calibrate(table_path, cal_config, fit_label, max_slope, cal_out, out);
    }
    if (*report) {
      return cmd_report(presets, fixtures, report_out, jobs, out);
    }
    if (*synth) {
      return cmd_synth_fixture(synth_out, synth_noise, synth_seed, out);
    }
  } catch (const UsageError & e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError & e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception & e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace rover
