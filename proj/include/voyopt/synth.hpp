/**
 * @file synth.hpp
 * @brief Seeded generator of weather grids and a shuttle-vessel voyage log
 *        with injected inefficiency headroom. Stands in for real recordings.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "voyopt/core.hpp"
#include "voyopt/efficiency.hpp"
#include "voyopt/weather.hpp"

namespace voyopt {

struct SynthConfig {
  int n_voyages = 200;
  std::uint64_t seed = 42;

  // Route: two ports joined either through the narrow canal polyline
  // (maneuvering speed) or a direct western bypass.
  double port_a_lat = 57.55, port_a_lon = 11.90;  ///< southern port
  double port_b_lat = 57.73, port_b_lon = 11.90;  ///< northern port
  double port_radius_m = 700.0;
  double p_direct = 0.2;  ///< chance a voyage takes the bypass

  std::int64_t t0 = 1577836800;  ///< schedule start (2020-01-01T00:00Z)
  int dwell_min = 12;            ///< port turnaround, minutes

  // Captain policy. Efficient captains slow down in heavy weather;
  // inefficient ones (probability p_ineff) push through it.
  double cruise_sog = 4.5;    ///< m/s outside the canal
  double maneuver_sog = 1.5;  ///< m/s inside the canal
  double p_ineff = 0.3;
  double sog_noise = 0.03;   ///< multiplicative, per step
  double fuel_noise = 0.02;  ///< multiplicative, per step

  // Weather field shape.
  double wave_mean = 0.9;          ///< m
  double storm_amplitude = 0.55;   ///< scales every field's fluctuations
  double temporal_corr_h = 12.0;   ///< OU relaxation time
  double spatial_corr_deg = 1.0;   ///< sinusoid wavelength scale

  FuelModelCoeffs true_coeffs{2.0, 0.12, 0.25, 0.02, 0.0};
  double mismatch_c4 = 0.0;  ///< optional sog^4 term the fitted family lacks

  WeatherThresholds thresholds{};  ///< drives the captain's state response
};

/// Per-voyage ground truth for test oracles, index-aligned with the ids the
/// ingest tagger will assign (departure order).
struct VoyageTruth {
  std::string id;
  Direction direction = Direction::Northbound;
  bool via_direct = false;
  bool inefficient = false;
  std::int64_t t_depart = 0;  ///< first record outside the origin fence
  std::int64_t t_arrive = 0;  ///< last record outside the destination fence
  double fuel_l = 0.0;        ///< integral of the emitted fuel rates
  double fuel_l_noiseless = 0.0;  ///< true-model integral at emitted speeds
  double time_h = 0.0;
  double distance_km = 0.0;
  std::string segments;       ///< per record: S/M/D/N
  std::string weather_states; ///< per record: C/M/R from threshold labels
};

struct SynthOutput {
  WeatherGrids grids;
  std::vector<Record> log;  ///< continuous vessel log incl. port dwell
  std::vector<VoyageTruth> truth;
};

/// The route/segment geometry the generated corpus conforms to; feeds the
/// pipeline defaults so ingest tagging matches generation.
RouteConfig synth_route_config(const SynthConfig& cfg);

/// Weather grids covering the whole schedule plus an hour of margin on each
/// side, hourly by 0.25 degrees. Deterministic in (cfg).
WeatherGrids generate_weather_fields(const SynthConfig& cfg);

/// Full corpus: grids plus the 1-minute vessel log and ground truth.
/// Captains sample weather from the grids through the same interpolator the
/// pipeline uses, so downstream fusion reproduces generation exactly.
SynthOutput generate_voyages(const SynthConfig& cfg);

/**
 * @brief Writes raw/voyages.csv, grids/<var>.csv + grids/manifest.json,
 *        truth/truth.json and manifest.json under out_dir. Byte-identical
 *        for identical configs.
 */
void write_synth_corpus(const std::filesystem::path& out_dir,
                        const SynthConfig& cfg);

}  // namespace voyopt
