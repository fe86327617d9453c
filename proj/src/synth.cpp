#include "voyopt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "json.hpp"
#include "voyopt/ingest.hpp"
#include "voyopt/io.hpp"
#include "voyopt/rng.hpp"

namespace voyopt {
namespace {

constexpr double kTau = 2.0 * std::numbers::pi;
// Generous per-leg budget used to size the weather grids up front; actual
// legs run well under it.
constexpr int kLegBudgetMin = 200;

struct LatLon {
  double lat, lon;
};

std::vector<LatLon> route_polyline(const SynthConfig& cfg, bool via_direct,
                                   Direction dir) {
  std::vector<LatLon> wp;
  wp.push_back({cfg.port_a_lat, cfg.port_a_lon});
  if (via_direct) {
    wp.push_back({57.60, 11.915});
    wp.push_back({57.68, 11.915});
  } else {
    wp.push_back({57.58, 11.93});
    wp.push_back({57.62, 11.95});
    wp.push_back({57.66, 11.95});
    wp.push_back({57.70, 11.93});
  }
  wp.push_back({cfg.port_b_lat, cfg.port_b_lon});
  if (dir == Direction::Southbound) std::reverse(wp.begin(), wp.end());
  return wp;
}

// Walks the polyline; keeps a segment index plus the distance already
// covered on that segment.
struct PathWalker {
  std::vector<LatLon> wp;
  std::size_t seg = 0;
  double into_seg_m = 0.0;

  double seg_len() const {
    return haversine_distance(wp[seg].lat, wp[seg].lon, wp[seg + 1].lat,
                              wp[seg + 1].lon);
  }
  LatLon pos() const {
    const double len = seg_len();
    const double w = len > 0.0 ? into_seg_m / len : 0.0;
    return {wp[seg].lat + (wp[seg + 1].lat - wp[seg].lat) * w,
            wp[seg].lon + (wp[seg + 1].lon - wp[seg].lon) * w};
  }
  double heading() const {
    const LatLon p = pos();
    return initial_bearing(p.lat, p.lon, wp[seg + 1].lat, wp[seg + 1].lon);
  }
  bool done() const { return seg + 1 >= wp.size(); }
  void advance(double meters) {
    while (meters > 0.0 && !done()) {
      const double remain = seg_len() - into_seg_m;
      if (meters < remain) {
        into_seg_m += meters;
        return;
      }
      meters -= remain;
      ++seg;
      into_seg_m = 0.0;
    }
  }
};

struct WeatherSample {
  double wave, wind_speed, wind_dir, current_speed, current_dir;
};

WeatherSample sample_weather(const WeatherGrids& g, double t, double lat,
                             double lon) {
  WeatherSample w;
  w.wave = trilinear_interpolate(g.wave_height, t, lat, lon);
  const double wu = trilinear_interpolate(g.wind_u, t, lat, lon);
  const double wv = trilinear_interpolate(g.wind_v, t, lat, lon);
  const double cu = trilinear_interpolate(g.current_u, t, lat, lon);
  const double cv = trilinear_interpolate(g.current_v, t, lat, lon);
  w.wind_speed = flow_speed(wu, wv);
  w.wind_dir = flow_direction_deg(wu, wv);
  w.current_speed = flow_speed(cu, cv);
  w.current_dir = flow_direction_deg(cu, cv);
  return w;
}

double true_fuel_rate(const SynthConfig& cfg, double sog, double wave,
                      double wind_speed, double rel_angle_deg) {
  double rate = fuel_rate_model(sog, wave, wind_speed, rel_angle_deg,
                                cfg.true_coeffs);
  rate += cfg.mismatch_c4 * sog * sog * sog * sog;
  return std::max(0.0, rate);
}

Record make_record(double t, double lat, double lon, double sog,
                   double heading, double fuel_rate,
                   const WeatherSample& w) {
  Record r;
  r.timestamp = t;
  r.lat = lat;
  r.lon = lon;
  r.sog = sog;
  r.heading = heading;
  r.fuel_rate = fuel_rate;
  r.wind_speed = w.wind_speed;
  r.wind_dir = w.wind_dir;
  r.wave_height = w.wave;
  r.wave_dir = w.wind_dir;
  r.current_speed = w.current_speed;
  r.current_dir = w.current_dir;
  return r;
}

char segment_char(RouteSegment s) {
  switch (s) {
    case RouteSegment::South: return 'S';
    case RouteSegment::Middle: return 'M';
    case RouteSegment::Direct: return 'D';
    default: return 'N';
  }
}

char state_char(WeatherState s) {
  switch (s) {
    case WeatherState::Calm: return 'C';
    case WeatherState::Moderate: return 'M';
    default: return 'R';
  }
}

}  // namespace

RouteConfig synth_route_config(const SynthConfig& cfg) {
  RouteConfig rc;
  rc.port_a = {cfg.port_a_lat, cfg.port_a_lon, cfg.port_radius_m};
  rc.port_b = {cfg.port_b_lat, cfg.port_b_lon, cfg.port_radius_m};
  rc.segment_lat_low = 57.62;
  rc.segment_lat_high = 57.66;
  rc.direct_lon_split = 11.935;
  rc.direct_is_west = true;
  rc.cruising_sog_threshold = 3.0;
  rc.min_port_dwell_s = 300.0;
  return rc;
}

WeatherGrids generate_weather_fields(const SynthConfig& cfg) {
  if (cfg.n_voyages < 2) throw ConfigError("synth: n_voyages must be >= 2");
  if (cfg.sog_noise < 0 || cfg.fuel_noise < 0) {
    throw ConfigError("synth: noise sigmas must be >= 0");
  }
  if (cfg.p_ineff < 0 || cfg.p_ineff > 1) {
    throw ConfigError("synth: p_ineff must lie in [0,1]");
  }

  WeatherGrids g;
  std::vector<double> lats, lons, times;
  for (int i = 0; i <= 5; ++i) lats.push_back(57.0 + 0.25 * i);
  for (int i = 0; i <= 5; ++i) lons.push_back(11.25 + 0.25 * i);
  const std::int64_t span_s =
      static_cast<std::int64_t>(cfg.n_voyages) * kLegBudgetMin * 60 + 7200;
  const std::int64_t t_start = cfg.t0 - 3600;
  for (std::int64_t t = t_start; t <= cfg.t0 + span_s; t += 3600) {
    times.push_back(static_cast<double>(t));
  }
  const std::size_t nt = times.size();

  Rng phases = derive_rng(cfg.seed, "synth-phases");
  double ph[10];
  for (double& p : ph) p = phases.uniform(0.0, kTau);

  // One Ornstein-Uhlenbeck series per driver; relaxation set by the
  // temporal correlation length.
  const double rho = std::exp(-1.0 / std::max(1e-6, cfg.temporal_corr_h));
  const double kick = std::sqrt(1.0 - rho * rho);
  const auto ou_series = [&](const char* label) {
    Rng rng = derive_rng(cfg.seed, label);
    std::vector<double> z(nt);
    z[0] = rng.normal();
    for (std::size_t i = 1; i < nt; ++i) z[i] = rho * z[i - 1] + kick * rng.normal();
    return z;
  };
  const auto z_wave = ou_series("synth-ou-wave");
  const auto z_wind = ou_series("synth-ou-wind");
  const auto z_wdir = ou_series("synth-ou-winddir");
  const auto z_cur = ou_series("synth-ou-current");
  const auto z_cdir = ou_series("synth-ou-currentdir");

  const double A = cfg.storm_amplitude;
  const double rel = cfg.storm_amplitude > 0.0 ? A / 0.55 : 0.0;
  const double Lc = std::max(1e-6, cfg.spatial_corr_deg);

  const auto fill = [&](Grid3D& grid, auto value_at) {
    grid.times = times;
    grid.lats = lats;
    grid.lons = lons;
    grid.values.resize(nt * lats.size() * lons.size());
    for (std::size_t it = 0; it < nt; ++it) {
      const double th = (times[it] - static_cast<double>(cfg.t0)) / 3600.0;
      for (std::size_t la = 0; la < lats.size(); ++la) {
        for (std::size_t lo = 0; lo < lons.size(); ++lo) {
          grid.at(it, la, lo) = value_at(it, th, lats[la], lons[lo]);
        }
      }
    }
    grid.validate();
  };

  Grid3D wind_speed_g, wind_dir_g, cur_speed_g, cur_dir_g;
  fill(g.wave_height, [&](std::size_t it, double th, double la, double lo) {
    const double s1 = std::sin(kTau * th / 37.0 + ph[0]) *
                      std::cos(kTau * (la - 57.6) / (4.0 * Lc) +
                               kTau * (lo - 11.9) / (5.0 * Lc) + ph[1]);
    const double s2 = std::sin(kTau * th / 61.0 + ph[2]) *
                      std::sin(kTau * (la - 57.6) / (3.0 * Lc) -
                               kTau * (lo - 11.9) / (7.0 * Lc) + ph[3]);
    return std::max(0.0, cfg.wave_mean +
                             A * (0.9 * z_wave[it] + 0.55 * s1 + 0.35 * s2));
  });
  fill(wind_speed_g, [&](std::size_t it, double th, double la, double lo) {
    const double s3 = std::sin(kTau * th / 47.0 + ph[4]) *
                      std::cos(kTau * (la - 57.6) / (5.0 * Lc) -
                               kTau * (lo - 11.9) / (4.0 * Lc) + ph[5]);
    return std::max(0.0, 4.0 + rel * (1.6 * z_wave[it] + 1.6 * z_wind[it] +
                                      1.3 * s3));
  });
  fill(wind_dir_g, [&](std::size_t it, double th, double, double) {
    return 225.0 +
           rel * (50.0 * std::sin(kTau * th / 53.0 + ph[6]) + 25.0 * z_wdir[it]);
  });
  fill(cur_speed_g, [&](std::size_t it, double th, double la, double) {
    const double s4 = std::sin(kTau * th / 29.0 + ph[7]) *
                      std::cos(kTau * (la - 57.6) / (3.0 * Lc) + ph[8]);
    return std::max(0.0, 0.3 + rel * (0.15 * s4 + 0.1 * z_cur[it]));
  });
  fill(cur_dir_g, [&](std::size_t it, double th, double, double) {
    return 10.0 +
           rel * (25.0 * std::sin(kTau * th / 41.0 + ph[9]) + 15.0 * z_cdir[it]);
  });

  // Directions become u/v components on the grid so interpolation cannot
  // tear at the 0/360 seam.
  const auto to_uv = [&](const Grid3D& speed, const Grid3D& dir, Grid3D& u,
                         Grid3D& v) {
    u = speed;
    v = speed;
    for (std::size_t i = 0; i < speed.values.size(); ++i) {
      const double rad = deg2rad(dir.values[i]);
      u.values[i] = speed.values[i] * std::sin(rad);
      v.values[i] = speed.values[i] * std::cos(rad);
    }
  };
  to_uv(wind_speed_g, wind_dir_g, g.wind_u, g.wind_v);
  to_uv(cur_speed_g, cur_dir_g, g.current_u, g.current_v);
  return g;
}

SynthOutput generate_voyages(const SynthConfig& cfg) {
  SynthOutput out;
  out.grids = generate_weather_fields(cfg);
  const RouteConfig rc = synth_route_config(cfg);
  const double grid_t_end = out.grids.wave_height.times.back();

  double t = static_cast<double>(cfg.t0);
  LatLon here{cfg.port_a_lat, cfg.port_a_lon};

  const auto emit_dwell = [&](const LatLon& p, double heading) {
    for (int i = 0; i < cfg.dwell_min; ++i) {
      const auto w = sample_weather(out.grids, t, p.lat, p.lon);
      const double sog = 0.05;
      const double rate = true_fuel_rate(
          cfg, sog, w.wave, w.wind_speed,
          relative_wind_angle(w.wind_dir, heading));
      out.log.push_back(make_record(t, p.lat, p.lon, sog, heading, rate, w));
      t += 60.0;
    }
  };

  double last_heading = 0.0;
  for (int leg = 0; leg < cfg.n_voyages; ++leg) {
    const Direction dir =
        leg % 2 == 0 ? Direction::Northbound : Direction::Southbound;
    Rng rng = derive_rng(cfg.seed, "voyage", static_cast<std::uint64_t>(leg));
    const bool ineff = rng.uniform01() < cfg.p_ineff;
    const bool via_direct = rng.uniform01() < cfg.p_direct;

    const Geofence& origin = dir == Direction::Northbound ? rc.port_a : rc.port_b;
    const Geofence& dest = dir == Direction::Northbound ? rc.port_b : rc.port_a;

    PathWalker walk;
    walk.wp = route_polyline(cfg, via_direct, dir);
    emit_dwell(here, last_heading);

    VoyageTruth truth;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "V%04d", leg + 1);
    truth.id = idbuf;
    truth.direction = dir;
    truth.via_direct = via_direct;
    truth.inefficient = ineff;

    bool outside_yet = false;
    std::size_t prev_outside_idx = 0;

    for (int step = 0;; ++step) {
      if (step > kLegBudgetMin * 3 || t + 3600.0 > grid_t_end) {
        throw std::logic_error("synth: leg overran its time budget");
      }
      const LatLon p = walk.pos();
      const double heading = walk.done() ? last_heading : walk.heading();
      const auto w = sample_weather(out.grids, t, p.lat, p.lon);
      const WeatherState state = label_weather_state(w.wave, cfg.thresholds);
      Record probe;
      probe.lat = p.lat;
      probe.lon = p.lon;
      const RouteSegment seg = classify_segment(probe, rc);

      double base =
          seg == RouteSegment::Middle ? cfg.maneuver_sog : cfg.cruise_sog;
      double mult = 1.0;
      if (state == WeatherState::Rough) {
        mult = ineff ? 1.30 : 0.85;
      } else if (state == WeatherState::Moderate) {
        mult = ineff ? 1.10 : 0.95;
      }
      double sog = base * mult * (1.0 + cfg.sog_noise * rng.normal());
      sog = std::max(0.3, sog);
      const double rel_angle = relative_wind_angle(w.wind_dir, heading);
      const double clean_rate =
          true_fuel_rate(cfg, sog, w.wave, w.wind_speed, rel_angle);
      const double rate =
          std::max(0.0, clean_rate * (1.0 + cfg.fuel_noise * rng.normal()));

      out.log.push_back(make_record(t, p.lat, p.lon, sog, heading, rate, w));
      last_heading = heading;

      const bool in_origin = inside_geofence(origin, p.lat, p.lon);
      const bool in_dest = inside_geofence(dest, p.lat, p.lon);
      if (!in_origin && !in_dest) {
        const Record& r = out.log.back();
        if (!outside_yet) {
          truth.t_depart = static_cast<std::int64_t>(t);
          outside_yet = true;
        } else {
          // Left-Riemann legs, matching the totals the pipeline computes.
          const Record& pr = out.log[prev_outside_idx];
          const double dt_h = (r.timestamp - pr.timestamp) / 3600.0;
          truth.fuel_l += pr.fuel_rate * dt_h;
          const double prev_clean = true_fuel_rate(
              cfg, pr.sog, pr.wave_height, pr.wind_speed,
              relative_wind_angle(pr.wind_dir, pr.heading));
          truth.fuel_l_noiseless += prev_clean * dt_h;
          truth.distance_km +=
              haversine_distance(pr.lat, pr.lon, r.lat, r.lon) / 1000.0;
        }
        truth.t_arrive = static_cast<std::int64_t>(t);
        truth.segments.push_back(segment_char(seg));
        truth.weather_states.push_back(state_char(state));
        prev_outside_idx = out.log.size() - 1;
      }

      t += 60.0;
      walk.advance(sog * 60.0);
      const LatLon np = walk.pos();
      if (inside_geofence(dest, np.lat, np.lon) || walk.done()) {
        here = {dest.lat, dest.lon};
        break;
      }
    }

    truth.time_h =
        static_cast<double>(truth.t_arrive - truth.t_depart) / 3600.0;
    out.truth.push_back(std::move(truth));
  }
  // Trailing dwell so the final arrival also registers as a port call.
  emit_dwell(here, last_heading);
  return out;
}

void write_synth_corpus(const std::filesystem::path& out_dir,
                        const SynthConfig& cfg) {
  const SynthOutput out = generate_voyages(cfg);

  CsvTable t;
  t.header = {"timestamp", "lat",       "lon",   "sog",
              "heading",   "fuel_rate", "pitch", "roll"};
  std::size_t i = 0;
  for (const Record& r : out.log) {
    // Pitch/roll are plausible-looking extra telemetry the pipeline must
    // ignore, keyed off wave height so they are deterministic.
    const double pitch = 0.8 * r.wave_height * std::sin(0.37 * static_cast<double>(i));
    const double roll = 1.2 * r.wave_height * std::sin(0.53 * static_cast<double>(i) + 1.0);
    t.rows.push_back({fmt_double(r.timestamp), fmt_double(r.lat),
                      fmt_double(r.lon), fmt_double(r.sog),
                      fmt_double(r.heading), fmt_double(r.fuel_rate),
                      fmt_double(pitch), fmt_double(roll)});
    ++i;
  }
  atomic_write_file(out_dir / "raw" / "voyages.csv", format_csv(t));

  const struct {
    const char* name;
    const Grid3D* grid;
  } grids[] = {{"wave_height", &out.grids.wave_height},
               {"wind_u", &out.grids.wind_u},
               {"wind_v", &out.grids.wind_v},
               {"current_u", &out.grids.current_u},
               {"current_v", &out.grids.current_v}};
  nlohmann::json manifest_grids;
  for (const auto& g : grids) {
    const std::string fname = std::string(g.name) + ".csv";
    atomic_write_file(out_dir / "grids" / fname, grid_to_csv(*g.grid));
    manifest_grids[g.name] = fname;
  }
  atomic_write_file(out_dir / "grids" / "manifest.json",
                    manifest_grids.dump(2) + "\n");

  nlohmann::json truth;
  truth["schema_version"] = 1;
  auto& voyages = truth["voyages"] = nlohmann::json::array();
  for (const auto& v : out.truth) {
    voyages.push_back({{"id", v.id},
                       {"direction", to_string(v.direction)},
                       {"via_direct", v.via_direct},
                       {"inefficient", v.inefficient},
                       {"t_depart", v.t_depart},
                       {"t_arrive", v.t_arrive},
                       {"fuel_l", v.fuel_l},
                       {"fuel_l_noiseless", v.fuel_l_noiseless},
                       {"time_h", v.time_h},
                       {"distance_km", v.distance_km},
                       {"segments", v.segments},
                       {"weather_states", v.weather_states}});
  }
  atomic_write_file(out_dir / "truth" / "truth.json", truth.dump(2) + "\n");

  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["seed"] = cfg.seed;
  manifest["n_voyages"] = cfg.n_voyages;
  manifest["files"] = {{"raw", "raw/voyages.csv"},
                       {"grids_manifest", "grids/manifest.json"},
                       {"truth", "truth/truth.json"}};
  atomic_write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace voyopt
