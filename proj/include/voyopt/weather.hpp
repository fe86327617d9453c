/**
 * @file weather.hpp
 * @brief Gridded hindcast weather: trilinear interpolation, record fusion and
 *        threshold weather-state labeling.
 */
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "voyopt/core.hpp"

namespace voyopt {

/**
 * @brief Dense scalar field on a (time, lat, lon) grid.
 *
 * Axes are strictly increasing; values are indexed [time][lat][lon]. Wind and
 * current directions are stored as u/v vector components (u east, v north),
 * never as raw angles, which would break at the 0/360 seam.
 */
struct Grid3D {
  std::vector<double> times;  ///< seconds since epoch
  std::vector<double> lats;   ///< degrees
  std::vector<double> lons;   ///< degrees
  std::vector<double> values; ///< size times*lats*lons

  double& at(std::size_t it, std::size_t ila, std::size_t ilo) {
    return values[(it * lats.size() + ila) * lons.size() + ilo];
  }
  double at(std::size_t it, std::size_t ila, std::size_t ilo) const {
    return values[(it * lats.size() + ila) * lons.size() + ilo];
  }

  /// Throws DataError unless axes are strictly increasing, extents match and
  /// every value is finite.
  void validate() const;
};

/// The five fields the pipeline fuses onto records.
struct WeatherGrids {
  Grid3D wave_height;
  Grid3D wind_u;
  Grid3D wind_v;
  Grid3D current_u;
  Grid3D current_v;
};

/// Wave-height boundaries between Calm/Moderate/Rough, following the Douglas
/// smooth/slight/moderate sea-state boundaries.
struct WeatherThresholds {
  double calm_max_wave = 0.5;   ///< meters; below is Calm
  double rough_min_wave = 1.25; ///< meters; at or above is Rough
};

/**
 * @brief Trilinear blend of the 8 grid corners enclosing (t, lat, lon).
 *
 * Exact at grid nodes. Queries outside the grid's bounding box throw
 * DataError — no extrapolation.
 */
double trilinear_interpolate(const Grid3D& g, double t, double lat, double lon);

/**
 * @brief Overwrites each record's weather fields with interpolated grid values.
 *
 * Wind/current speed and direction are reconstructed from interpolated u/v
 * components. Any record outside a grid domain raises DataError naming the
 * record index.
 */
void attach_weather(Voyage& v, const WeatherGrids& grids);

/// Calm if wave < calm_max_wave, Rough if wave >= rough_min_wave, else Moderate.
WeatherState label_weather_state(double wave_height, const WeatherThresholds& th);

/// Compass direction (degrees, [0,360)) a (u,v) flow vector points towards.
double flow_direction_deg(double u_east, double v_north);

/// Flow speed of a (u,v) vector, m/s.
double flow_speed(double u_east, double v_north);

/**
 * @brief Loads grids from a JSON manifest mapping variable names to CSV files.
 *
 * Each CSV has columns (time, lat, lon, value); axes are inferred from the
 * distinct sorted coordinates and the table is densified. Missing cells throw.
 */
WeatherGrids load_weather_grids(const std::filesystem::path& manifest_path);

/// Parses one (time, lat, lon, value) CSV into a dense grid.
Grid3D grid_from_csv(const std::string& csv_text);

std::string grid_to_csv(const Grid3D& g);

}  // namespace voyopt
