#include "voyopt/core.hpp"

#include <algorithm>
#include <cmath>

namespace voyopt {

const char* to_string(RouteSegment s) {
  switch (s) {
    case RouteSegment::North: return "North";
    case RouteSegment::Middle: return "Middle";
    case RouteSegment::South: return "South";
    case RouteSegment::Direct: return "Direct";
  }
  return "?";
}

const char* to_string(SpeedMode m) {
  return m == SpeedMode::Cruising ? "Cruising" : "Maneuvering";
}

const char* to_string(WeatherState w) {
  switch (w) {
    case WeatherState::Calm: return "Calm";
    case WeatherState::Moderate: return "Moderate";
    case WeatherState::Rough: return "Rough";
  }
  return "?";
}

const char* to_string(Direction d) {
  return d == Direction::Southbound ? "Southbound" : "Northbound";
}

RouteSegment route_segment_from_string(const std::string& s) {
  if (s == "North") return RouteSegment::North;
  if (s == "Middle") return RouteSegment::Middle;
  if (s == "South") return RouteSegment::South;
  if (s == "Direct") return RouteSegment::Direct;
  throw DataError("unknown route segment: " + s);
}

SpeedMode speed_mode_from_string(const std::string& s) {
  if (s == "Cruising") return SpeedMode::Cruising;
  if (s == "Maneuvering") return SpeedMode::Maneuvering;
  throw DataError("unknown speed mode: " + s);
}

WeatherState weather_state_from_string(const std::string& s) {
  if (s == "Calm") return WeatherState::Calm;
  if (s == "Moderate") return WeatherState::Moderate;
  if (s == "Rough") return WeatherState::Rough;
  throw DataError("unknown weather state: " + s);
}

Direction direction_from_string(const std::string& s) {
  if (s == "Southbound") return Direction::Southbound;
  if (s == "Northbound") return Direction::Northbound;
  throw DataError("unknown direction: " + s);
}

void validate_voyage(const Voyage& v) {
  if (v.records.size() < 2) {
    throw DataError("voyage " + v.id + ": fewer than 2 records");
  }
  for (std::size_t i = 0; i < v.records.size(); ++i) {
    const Record& r = v.records[i];
    if (r.voyage_id != v.id) {
      throw DataError("voyage " + v.id + ": record " + std::to_string(i) +
                      " tagged with foreign voyage_id '" + r.voyage_id + "'");
    }
    if (i > 0 && !(r.timestamp > v.records[i - 1].timestamp)) {
      throw DataError("voyage " + v.id + ": timestamps not strictly increasing at record " +
                      std::to_string(i));
    }
  }
}

double deg2rad(double deg) { return deg * (M_PI / 180.0); }
double rad2deg(double rad) { return rad * (180.0 / M_PI); }

double norm_deg(double deg) {
  double d = std::fmod(deg, 360.0);
  if (d < 0.0) d += 360.0;
  if (d == 360.0) d = 0.0;
  return d;
}

double haversine_distance(double lat1, double lon1, double lat2, double lon2) {
  const double phi1 = deg2rad(lat1);
  const double phi2 = deg2rad(lat2);
  const double dphi = deg2rad(lat2 - lat1);
  const double dlam = deg2rad(lon2 - lon1);
  const double sp = std::sin(dphi / 2.0);
  const double sl = std::sin(dlam / 2.0);
  const double a = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  const double c = 2.0 * std::atan2(std::sqrt(a), std::sqrt(std::max(0.0, 1.0 - a)));
  return kEarthRadiusM * c;
}

double initial_bearing(double lat1, double lon1, double lat2, double lon2) {
  const double phi1 = deg2rad(lat1);
  const double phi2 = deg2rad(lat2);
  const double dlam = deg2rad(lon2 - lon1);
  const double y = std::sin(dlam) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlam);
  return norm_deg(rad2deg(std::atan2(y, x)));
}

bool inside_geofence(const Geofence& g, double lat, double lon) {
  return haversine_distance(g.lat, g.lon, lat, lon) <= g.radius_m;
}

double circular_mean_deg(const std::vector<double>& angles_deg) {
  double s = 0.0, c = 0.0;
  for (double a : angles_deg) {
    s += std::sin(deg2rad(a));
    c += std::cos(deg2rad(a));
  }
  if (s == 0.0 && c == 0.0) return 0.0;
  return norm_deg(rad2deg(std::atan2(s, c)));
}

double relative_wind_angle(double wind_dir_deg, double heading_deg) {
  return norm_deg(wind_dir_deg - heading_deg - 180.0);
}

double current_along_component(double current_speed, double current_dir_deg, double heading_deg) {
  return current_speed * std::cos(deg2rad(current_dir_deg - heading_deg));
}

std::vector<double> along_track_fraction(const Voyage& v) {
  validate_voyage(v);
  std::vector<double> cum(v.records.size(), 0.0);
  for (std::size_t i = 1; i < v.records.size(); ++i) {
    const Record& a = v.records[i - 1];
    const Record& b = v.records[i];
    cum[i] = cum[i - 1] + haversine_distance(a.lat, a.lon, b.lat, b.lon);
  }
  const double total = cum.back();
  if (total <= 0.0) {
    throw DataError("voyage " + v.id + ": zero total distance, cannot build along-track axis");
  }
  for (double& x : cum) x /= total;
  cum.front() = 0.0;
  cum.back() = 1.0;
  return cum;
}

SpeedProfile measured_profile(const Voyage& v) {
  SpeedProfile p;
  p.voyage_id = v.id;
  p.positions = along_track_fraction(v);
  p.sog.reserve(v.records.size());
  for (const Record& r : v.records) p.sog.push_back(r.sog);
  return p;
}

}  // namespace voyopt
