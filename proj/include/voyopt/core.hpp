/**
 * @file core.hpp
 * @brief Shared domain vocabulary: records, voyages, route geometry and the
 *        enumerations used by every other module.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace voyopt {

/// Raised for malformed or unusable input data. The CLI maps it to exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised for broken configuration (missing files, contradictory settings).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RouteSegment : std::uint8_t { North, Middle, South, Direct };
enum class SpeedMode : std::uint8_t { Cruising, Maneuvering };
enum class WeatherState : std::uint8_t { Calm, Moderate, Rough };
enum class Direction : std::uint8_t { Southbound, Northbound };

const char* to_string(RouteSegment s);
const char* to_string(SpeedMode m);
const char* to_string(WeatherState w);
const char* to_string(Direction d);

RouteSegment route_segment_from_string(const std::string& s);
SpeedMode speed_mode_from_string(const std::string& s);
WeatherState weather_state_from_string(const std::string& s);
Direction direction_from_string(const std::string& s);

/**
 * @brief One resampled sensor observation.
 *
 * Angles are stored in degrees in [0,360) and converted to radians only
 * inside trigonometric kernels. Weather fields may be NaN until the weather
 * module has fused them from gridded hindcasts.
 */
struct Record {
  double timestamp = 0.0;  ///< seconds since epoch
  double lat = 0.0;        ///< degrees [-90,90]
  double lon = 0.0;        ///< degrees [-180,180]
  double sog = 0.0;        ///< speed over ground, m/s
  double heading = 0.0;    ///< degrees [0,360)
  double fuel_rate = 0.0;  ///< liters/hour
  double wind_speed = 0.0;
  double wind_dir = 0.0;
  double wave_height = 0.0;
  double wave_dir = 0.0;
  double current_speed = 0.0;
  double current_dir = 0.0;
  std::string voyage_id;  ///< empty until voyage tagging assigns one
  std::optional<RouteSegment> segment;
  std::optional<SpeedMode> speed_mode;
};

/// Per-voyage totals: fuel in liters, elapsed time in hours, distance in km.
struct VoyageTotals {
  double fuel_l = 0.0;
  double time_h = 0.0;
  double distance_km = 0.0;
};

/**
 * @brief Ordered records between a port departure and the opposite arrival.
 */
struct Voyage {
  std::string id;
  Direction direction = Direction::Northbound;
  std::vector<Record> records;
  std::optional<VoyageTotals> totals;
  std::optional<double> eff_score;
};

/// Throws DataError unless timestamps are strictly increasing, the voyage has
/// at least two records and every record carries voyage_id == id.
void validate_voyage(const Voyage& v);

/// Circular geofence around a port.
struct Geofence {
  double lat = 0.0;
  double lon = 0.0;
  double radius_m = 0.0;
};

/**
 * @brief Fixed-route geometry and classification rules.
 *
 * Latitude breakpoints partition the route into South / Middle / North bands;
 * within the Middle band a longitude split separates the canal passage
 * (Middle) from the bypass (Direct). The paper names the segments but never
 * gives their coordinates, so all of this is configuration.
 */
struct RouteConfig {
  Geofence port_a;  ///< southern port
  Geofence port_b;  ///< northern port
  double segment_lat_low = 0.0;   ///< below: South
  double segment_lat_high = 0.0;  ///< at/above: North
  double direct_lon_split = 0.0;  ///< Middle-band records beyond this are Direct
  bool direct_is_west = true;     ///< Direct side of the split
  double cruising_sog_threshold = 0.0;  ///< m/s; sog >= threshold is Cruising
  double min_port_dwell_s = 0.0;        ///< dwell required before a departure counts
};

/// Per-step SOG sequence aligned to along-track positions in [0,1].
struct SpeedProfile {
  static constexpr const char* kMeasured = "Measured";

  std::string voyage_id;
  std::vector<double> positions;  ///< along-track fractions, strictly increasing
  std::vector<double> sog;        ///< m/s, one per position
  std::string provenance = kMeasured;  ///< kMeasured or the predicting model's name

  bool is_predicted() const { return provenance != kMeasured; }
};

inline constexpr double kEarthRadiusM = 6'371'000.0;

double deg2rad(double deg);
double rad2deg(double rad);

/// Normalizes an angle in degrees to [0,360).
double norm_deg(double deg);

/// Great-circle distance in meters on a spherical Earth.
double haversine_distance(double lat1, double lon1, double lat2, double lon2);

/// Initial great-circle bearing from (lat1,lon1) towards (lat2,lon2), degrees [0,360).
double initial_bearing(double lat1, double lon1, double lat2, double lon2);

/// True if the point lies inside (or on) the geofence circle.
bool inside_geofence(const Geofence& g, double lat, double lon);

/// Circular mean of angles in degrees, result in [0,360).
double circular_mean_deg(const std::vector<double>& angles_deg);

/// Angle whose cosine scales wind speed into a headwind component.
/// wind_dir is the compass direction the wind blows towards; 0 deg relative
/// angle means wind dead against the vessel's heading.
double relative_wind_angle(double wind_dir_deg, double heading_deg);

/// Along-heading component of the current, m/s; positive when following.
double current_along_component(double current_speed, double current_dir_deg, double heading_deg);

/**
 * @brief Cumulative along-track distance normalized to [0,1].
 *
 * First element is 0, last is 1, the sequence is non-decreasing. Throws
 * DataError for voyages with zero total distance.
 */
std::vector<double> along_track_fraction(const Voyage& v);

/// Measured speed profile of a voyage (positions from along_track_fraction).
SpeedProfile measured_profile(const Voyage& v);

}  // namespace voyopt
