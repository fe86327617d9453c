#include "voyopt/weather.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>

#include <json.hpp>

#include "voyopt/io.hpp"

namespace voyopt {

void Grid3D::validate() const {
  auto strictly_increasing = [](const std::vector<double>& a) {
    for (std::size_t i = 1; i < a.size(); ++i) {
      if (!(a[i] > a[i - 1])) return false;
    }
    return !a.empty();
  };
  if (!strictly_increasing(times) || !strictly_increasing(lats) || !strictly_increasing(lons)) {
    throw DataError("Grid3D: axes must be non-empty and strictly increasing");
  }
  if (values.size() != times.size() * lats.size() * lons.size()) {
    throw DataError("Grid3D: value count does not match axis extents");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("Grid3D: non-finite value");
  }
}

namespace {

/// Cell index i such that axis[i] <= x <= axis[i+1]; throws when outside.
std::size_t locate(const std::vector<double>& axis, double x, const char* name) {
  if (axis.size() == 1) {
    if (x == axis[0]) return 0;
    throw DataError(std::string("query outside grid domain on axis ") + name);
  }
  if (x < axis.front() || x > axis.back()) {
    throw DataError(std::string("query outside grid domain on axis ") + name);
  }
  auto it = std::upper_bound(axis.begin(), axis.end(), x);
  std::size_t idx = static_cast<std::size_t>(it - axis.begin());
  if (idx > 0) --idx;
  if (idx + 1 >= axis.size()) idx = axis.size() - 2;
  return idx;
}

double axis_weight(const std::vector<double>& axis, std::size_t i, double x) {
  if (axis.size() == 1) return 0.0;
  return (x - axis[i]) / (axis[i + 1] - axis[i]);
}

/// Blend keeping endpoints exact: w=0 gives a, w=1 gives b.
double lerp(double a, double b, double w) { return a * (1.0 - w) + b * w; }

std::size_t next_index(const std::vector<double>& axis, std::size_t i) {
  return axis.size() == 1 ? i : i + 1;
}

}  // namespace

double trilinear_interpolate(const Grid3D& g, double t, double lat, double lon) {
  const std::size_t it = locate(g.times, t, "time");
  const std::size_t ila = locate(g.lats, lat, "lat");
  const std::size_t ilo = locate(g.lons, lon, "lon");
  const double wt = axis_weight(g.times, it, t);
  const double wla = axis_weight(g.lats, ila, lat);
  const double wlo = axis_weight(g.lons, ilo, lon);
  const std::size_t it1 = next_index(g.times, it);
  const std::size_t ila1 = next_index(g.lats, ila);
  const std::size_t ilo1 = next_index(g.lons, ilo);

  const double c00 = lerp(g.at(it, ila, ilo), g.at(it1, ila, ilo), wt);
  const double c01 = lerp(g.at(it, ila, ilo1), g.at(it1, ila, ilo1), wt);
  const double c10 = lerp(g.at(it, ila1, ilo), g.at(it1, ila1, ilo), wt);
  const double c11 = lerp(g.at(it, ila1, ilo1), g.at(it1, ila1, ilo1), wt);
  const double c0 = lerp(c00, c10, wla);
  const double c1 = lerp(c01, c11, wla);
  return lerp(c0, c1, wlo);
}

void attach_weather(Voyage& v, const WeatherGrids& grids) {
  for (std::size_t i = 0; i < v.records.size(); ++i) {
    Record& r = v.records[i];
    try {
      r.wave_height = trilinear_interpolate(grids.wave_height, r.timestamp, r.lat, r.lon);
      const double wu = trilinear_interpolate(grids.wind_u, r.timestamp, r.lat, r.lon);
      const double wv = trilinear_interpolate(grids.wind_v, r.timestamp, r.lat, r.lon);
      const double cu = trilinear_interpolate(grids.current_u, r.timestamp, r.lat, r.lon);
      const double cv = trilinear_interpolate(grids.current_v, r.timestamp, r.lat, r.lon);
      r.wind_speed = flow_speed(wu, wv);
      r.wind_dir = flow_direction_deg(wu, wv);
      r.current_speed = flow_speed(cu, cv);
      r.current_dir = flow_direction_deg(cu, cv);
      // Waves propagate with the wind in this data model.
      r.wave_dir = r.wind_dir;
    } catch (const DataError& e) {
      throw DataError("voyage " + v.id + " record " + std::to_string(i) + ": " + e.what());
    }
  }
}

WeatherState label_weather_state(double wave_height, const WeatherThresholds& th) {
  if (wave_height < th.calm_max_wave) return WeatherState::Calm;
  if (wave_height >= th.rough_min_wave) return WeatherState::Rough;
  return WeatherState::Moderate;
}

double flow_direction_deg(double u_east, double v_north) {
  if (u_east == 0.0 && v_north == 0.0) return 0.0;
  return norm_deg(rad2deg(std::atan2(u_east, v_north)));
}

double flow_speed(double u_east, double v_north) { return std::hypot(u_east, v_north); }

Grid3D grid_from_csv(const std::string& csv_text) {
  const CsvTable t = parse_csv(csv_text);
  const int ct = t.column("time");
  const int cla = t.column("lat");
  const int clo = t.column("lon");
  const int cv = t.column("value");
  if (ct < 0 || cla < 0 || clo < 0 || cv < 0) {
    throw DataError("grid CSV needs columns time, lat, lon, value");
  }

  std::set<double> times, lats, lons;
  std::vector<std::array<double, 4>> cells;
  cells.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    const double tt = std::strtod(row[ct].c_str(), nullptr);
    const double la = std::strtod(row[cla].c_str(), nullptr);
    const double lo = std::strtod(row[clo].c_str(), nullptr);
    const double v = std::strtod(row[cv].c_str(), nullptr);
    times.insert(tt);
    lats.insert(la);
    lons.insert(lo);
    cells.push_back({tt, la, lo, v});
  }

  Grid3D g;
  g.times.assign(times.begin(), times.end());
  g.lats.assign(lats.begin(), lats.end());
  g.lons.assign(lons.begin(), lons.end());
  g.values.assign(g.times.size() * g.lats.size() * g.lons.size(),
                  std::numeric_limits<double>::quiet_NaN());

  auto index_of = [](const std::vector<double>& axis, double x) {
    return static_cast<std::size_t>(std::lower_bound(axis.begin(), axis.end(), x) - axis.begin());
  };
  for (const auto& c : cells) {
    g.at(index_of(g.times, c[0]), index_of(g.lats, c[1]), index_of(g.lons, c[2])) = c[3];
  }
  g.validate();  // catches missing cells via the NaN fill
  return g;
}

std::string grid_to_csv(const Grid3D& g) {
  CsvTable t;
  t.header = {"time", "lat", "lon", "value"};
  t.rows.reserve(g.values.size());
  for (std::size_t it = 0; it < g.times.size(); ++it) {
    for (std::size_t ila = 0; ila < g.lats.size(); ++ila) {
      for (std::size_t ilo = 0; ilo < g.lons.size(); ++ilo) {
        t.rows.push_back({fmt_double(g.times[it]), fmt_double(g.lats[ila]),
                          fmt_double(g.lons[ilo]), fmt_double(g.at(it, ila, ilo))});
      }
    }
  }
  return format_csv(t);
}

WeatherGrids load_weather_grids(const std::filesystem::path& manifest_path) {
  const nlohmann::json manifest = nlohmann::json::parse(read_file(manifest_path));
  const auto dir = manifest_path.parent_path();
  auto load = [&](const char* var) {
    if (!manifest.contains(var)) {
      throw DataError("weather manifest missing variable: " + std::string(var));
    }
    return grid_from_csv(read_file(dir / manifest.at(var).get<std::string>()));
  };
  WeatherGrids grids;
  grids.wave_height = load("wave_height");
  grids.wind_u = load("wind_u");
  grids.wind_v = load("wind_v");
  grids.current_u = load("current_u");
  grids.current_v = load("current_v");
  return grids;
}

}  // namespace voyopt
