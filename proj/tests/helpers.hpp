// Small fixtures shared across the test files. Voyages built here run due
// north along a meridian so distances and bearings stay easy to reason about.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "voyopt/core.hpp"

namespace testutil {

// Straight northbound track, one record per minute. sog in m/s drives both
// the recorded speed and the latitude increments, so along-track fractions
// line up with the cumulative speed sum.
inline voyopt::Voyage straight_voyage(const std::string& id,
                                      const std::vector<double>& sogs,
                                      double fuel_rate = 50.0,
                                      double wave = 1.0, double wind = 5.0,
                                      double wind_dir = 180.0) {
  voyopt::Voyage v;
  v.id = id;
  v.direction = voyopt::Direction::Northbound;
  double lat = 57.0;
  double t = 1'600'000'000.0;
  for (double s : sogs) {
    voyopt::Record r;
    r.timestamp = t;
    r.lat = lat;
    r.lon = 11.9;
    r.sog = s;
    r.heading = 0.0;
    r.fuel_rate = fuel_rate;
    r.wave_height = wave;
    r.wind_speed = wind;
    r.wind_dir = wind_dir;
    r.wave_dir = wind_dir;
    r.current_speed = 0.0;
    r.current_dir = 0.0;
    r.voyage_id = id;
    r.speed_mode = s >= 3.0 ? voyopt::SpeedMode::Cruising
                            : voyopt::SpeedMode::Maneuvering;
    v.records.push_back(r);
    // 1 degree latitude ~ 111.2 km on the spherical Earth used throughout.
    lat += s * 60.0 / 111'194.9266;
    t += 60.0;
  }
  return v;
}

inline voyopt::Voyage scored_voyage(const std::string& id, double score,
                                    std::size_t n_records = 4) {
  voyopt::Voyage v =
      straight_voyage(id, std::vector<double>(n_records, 4.0));
  v.eff_score = score;
  return v;
}

}  // namespace testutil
