/**
 * @file ingest.hpp
 * @brief Raw record parsing, 1-minute resampling, voyage tagging, segment and
 *        speed-mode classification, and corpus statistics.
 */
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "voyopt/core.hpp"

namespace voyopt {

/// Maps canonical record field names to CSV column names. Fields absent from
/// the map fall back to their canonical name.
using ColumnSchema = std::map<std::string, std::string>;

struct ParseResult {
  std::vector<Record> records;
  std::size_t dropped = 0;  ///< rows with unparseable required fields
};

/**
 * @brief Parses CSV text into records.
 *
 * Required fields: timestamp, lat, lon, sog, heading, fuel_rate. Rows where a
 * required field fails to parse are dropped and counted. Weather fields are
 * optional; missing ones are left NaN for the weather module to fill. Extra
 * columns (Pitch, Roll, torque, ...) are ignored.
 *
 * Throws DataError when the input is empty or a required column is missing.
 */
ParseResult parse_records(const std::string& csv_text, const ColumnSchema& schema = {});

/**
 * @brief Resamples time-ordered records onto 60-second windows.
 *
 * Windows are anchored at the first record's timestamp, so data already on a
 * 1-minute grid maps to itself. Numeric fields take the window mean, angular
 * fields the circular mean, and the output timestamp is the window start.
 */
std::vector<Record> resample_1min(const std::vector<Record>& records);

/**
 * @brief Splits a time-ordered record stream into port-to-port voyages.
 *
 * A voyage starts when the vessel exits a port geofence after dwelling at
 * least route.min_port_dwell_s inside it, and ends on entering the opposite
 * geofence. Records inside geofences or on aborted crossings are discarded.
 * Ids are assigned "V0001", "V0002", ... in departure order; direction comes
 * from the origin port (port_a is southern, so departures from it run
 * Northbound).
 */
std::vector<Voyage> tag_voyages(const std::vector<Record>& records, const RouteConfig& route);

/// Route segment from the latitude bands and the Direct longitude rule.
RouteSegment classify_segment(const Record& r, const RouteConfig& route);

/// Cruising iff sog >= route.cruising_sog_threshold (boundary inclusive).
SpeedMode classify_speed_mode(const Record& r, const RouteConfig& route);

/// Fills segment and speed_mode on every record of the voyage.
void annotate_voyage(Voyage& v, const RouteConfig& route);

/**
 * @brief Corpus-level midpoint between the two modes of the SOG histogram,
 *        used when the cruising threshold is configured as "auto".
 *
 * Implemented as a deterministic 1-D 2-means split of all record SOG values;
 * the returned threshold is the midpoint of the two cluster centers.
 */
double auto_cruising_threshold(const std::vector<Voyage>& voyages);

/// One row of the speed-mode statistics table.
struct StatsRow {
  std::string variable;
  double all = 0.0;
  double cruising = 0.0;
  double difference_pct = 0.0;  ///< (all - cruising) / all * 100
};

/// Fuel/time/distance/speed totals for all records vs. Cruising records only.
struct StatsTable {
  StatsRow fuel_total_l;
  StatsRow time_total_h;
  StatsRow distance_total_km;
  StatsRow speed_avg_mps;

  std::vector<const StatsRow*> rows() const {
    return {&fuel_total_l, &time_total_h, &distance_total_km, &speed_avg_mps};
  }
};

/// Aggregates the StatsTable over annotated voyages. Throws DataError on an
/// empty corpus.
StatsTable dataset_stats(const std::vector<Voyage>& voyages, const RouteConfig& route);

std::string format_stats_csv(const StatsTable& t);

/// Writes one CSV per voyage plus a JSON corpus index into dir.
void save_voyages(const std::vector<Voyage>& voyages, const std::filesystem::path& dir);

/// Reads a corpus previously written by save_voyages.
std::vector<Voyage> load_voyages(const std::filesystem::path& dir);

}  // namespace voyopt
