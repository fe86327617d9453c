#include "voyopt/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "voyopt/io.hpp"

namespace voyopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* kRequiredFields[] = {"timestamp", "lat", "lon", "sog", "heading", "fuel_rate"};
const char* kWeatherFields[] = {"wind_speed", "wind_dir",      "wave_height",
                                "wave_dir",   "current_speed", "current_dir"};

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + s.size() && std::isfinite(out);
}

double& field_ref(Record& r, const std::string& name) {
  if (name == "timestamp") return r.timestamp;
  if (name == "lat") return r.lat;
  if (name == "lon") return r.lon;
  if (name == "sog") return r.sog;
  if (name == "heading") return r.heading;
  if (name == "fuel_rate") return r.fuel_rate;
  if (name == "wind_speed") return r.wind_speed;
  if (name == "wind_dir") return r.wind_dir;
  if (name == "wave_height") return r.wave_height;
  if (name == "wave_dir") return r.wave_dir;
  if (name == "current_speed") return r.current_speed;
  if (name == "current_dir") return r.current_dir;
  throw std::logic_error("no such record field: " + name);
}

bool required_in_range(const Record& r) {
  return r.lat >= -90.0 && r.lat <= 90.0 && r.lon >= -180.0 && r.lon <= 180.0 && r.sog >= 0.0 &&
         r.fuel_rate >= 0.0;
}

}  // namespace

ParseResult parse_records(const std::string& csv_text, const ColumnSchema& schema) {
  const CsvTable table = parse_csv(csv_text);

  auto column_for = [&](const std::string& field) {
    auto it = schema.find(field);
    const std::string& name = it != schema.end() ? it->second : field;
    return table.column(name);
  };

  std::map<std::string, int> required_cols;
  for (const char* f : kRequiredFields) {
    int c = column_for(f);
    if (c < 0) throw DataError(std::string("required column missing: ") + f);
    required_cols[f] = c;
  }
  std::map<std::string, int> weather_cols;
  for (const char* f : kWeatherFields) weather_cols[f] = column_for(f);

  ParseResult result;
  result.records.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Record r;
    bool ok = true;
    for (const auto& [field, col] : required_cols) {
      double v;
      if (static_cast<std::size_t>(col) >= row.size() || !parse_double(row[col], v)) {
        ok = false;
        break;
      }
      field_ref(r, field) = v;
    }
    if (ok) {
      r.heading = norm_deg(r.heading);
      ok = required_in_range(r);
    }
    if (!ok) {
      ++result.dropped;
      continue;
    }
    for (const auto& [field, col] : weather_cols) {
      double v;
      if (col >= 0 && static_cast<std::size_t>(col) < row.size() && parse_double(row[col], v)) {
        field_ref(r, field) = field.ends_with("_dir") ? norm_deg(v) : v;
      } else {
        field_ref(r, field) = kNaN;
      }
    }
    result.records.push_back(std::move(r));
  }
  return result;
}

std::vector<Record> resample_1min(const std::vector<Record>& records) {
  std::vector<Record> out;
  if (records.empty()) return out;

  const double t0 = records.front().timestamp;
  std::size_t i = 0;
  while (i < records.size()) {
    const double win_start = t0 + std::floor((records[i].timestamp - t0) / 60.0) * 60.0;
    std::size_t j = i;
    while (j < records.size() && records[j].timestamp < win_start + 60.0) ++j;

    if (j - i == 1) {
      Record r = records[i];
      r.timestamp = win_start;
      out.push_back(std::move(r));
    } else {
      Record avg;
      avg.timestamp = win_start;
      const std::size_t n = j - i;
      std::vector<double> heading, wind_dir, wave_dir, current_dir;
      heading.reserve(n);
      for (std::size_t k = i; k < j; ++k) {
        const Record& r = records[k];
        avg.lat += r.lat;
        avg.lon += r.lon;
        avg.sog += r.sog;
        avg.fuel_rate += r.fuel_rate;
        avg.wind_speed += r.wind_speed;
        avg.wave_height += r.wave_height;
        avg.current_speed += r.current_speed;
        heading.push_back(r.heading);
        wind_dir.push_back(r.wind_dir);
        wave_dir.push_back(r.wave_dir);
        current_dir.push_back(r.current_dir);
      }
      const double inv = 1.0 / static_cast<double>(n);
      avg.lat *= inv;
      avg.lon *= inv;
      avg.sog *= inv;
      avg.fuel_rate *= inv;
      avg.wind_speed *= inv;
      avg.wave_height *= inv;
      avg.current_speed *= inv;
      avg.heading = circular_mean_deg(heading);
      avg.wind_dir = circular_mean_deg(wind_dir);
      avg.wave_dir = circular_mean_deg(wave_dir);
      avg.current_dir = circular_mean_deg(current_dir);
      out.push_back(std::move(avg));
    }
    i = j;
  }
  return out;
}

std::vector<Voyage> tag_voyages(const std::vector<Record>& records, const RouteConfig& route) {
  enum class Loc { Outside, InA, InB };
  auto loc_of = [&](const Record& r) {
    if (inside_geofence(route.port_a, r.lat, r.lon)) return Loc::InA;
    if (inside_geofence(route.port_b, r.lat, r.lon)) return Loc::InB;
    return Loc::Outside;
  };

  for (std::size_t i = 1; i < records.size(); ++i) {
    if (!(records[i].timestamp > records[i - 1].timestamp)) {
      throw DataError("tag_voyages: records not strictly time-ordered at index " +
                      std::to_string(i));
    }
  }

  std::vector<Voyage> voyages;
  Loc prev = Loc::Outside;
  double fence_enter_ts = 0.0;
  double last_inside_ts = 0.0;
  bool open = false;
  Loc origin = Loc::Outside;
  std::vector<Record> buf;

  auto finalize = [&]() {
    if (buf.size() < 2) return;
    Voyage v;
    char id[16];
    std::snprintf(id, sizeof(id), "V%04zu", voyages.size() + 1);
    v.id = id;
    v.direction = origin == Loc::InA ? Direction::Northbound : Direction::Southbound;
    v.records = std::move(buf);
    for (Record& r : v.records) r.voyage_id = v.id;
    double dist = 0.0;
    for (std::size_t i = 1; i < v.records.size(); ++i) {
      dist += haversine_distance(v.records[i - 1].lat, v.records[i - 1].lon, v.records[i].lat,
                                 v.records[i].lon);
    }
    if (dist > 0.0) voyages.push_back(std::move(v));
  };

  for (const Record& r : records) {
    const Loc cur = loc_of(r);
    if (cur == Loc::Outside) {
      if (prev != Loc::Outside) {
        // Departure: only counts after sufficient dwell inside the fence.
        const bool dwelled = (last_inside_ts - fence_enter_ts) >= route.min_port_dwell_s;
        open = dwelled;
        origin = prev;
        buf.clear();
        if (open) buf.push_back(r);
      } else if (open) {
        buf.push_back(r);
      }
    } else {
      if (prev != cur) fence_enter_ts = r.timestamp;
      last_inside_ts = r.timestamp;
      if (open) {
        if (cur != origin) finalize();
        open = false;
        buf.clear();
      }
    }
    prev = cur;
  }
  return voyages;
}

RouteSegment classify_segment(const Record& r, const RouteConfig& route) {
  if (r.lat >= route.segment_lat_high) return RouteSegment::North;
  if (r.lat < route.segment_lat_low) return RouteSegment::South;
  const bool direct =
      route.direct_is_west ? r.lon < route.direct_lon_split : r.lon > route.direct_lon_split;
  return direct ? RouteSegment::Direct : RouteSegment::Middle;
}

SpeedMode classify_speed_mode(const Record& r, const RouteConfig& route) {
  return r.sog >= route.cruising_sog_threshold ? SpeedMode::Cruising : SpeedMode::Maneuvering;
}

void annotate_voyage(Voyage& v, const RouteConfig& route) {
  for (Record& r : v.records) {
    r.segment = classify_segment(r, route);
    r.speed_mode = classify_speed_mode(r, route);
  }
}

double auto_cruising_threshold(const std::vector<Voyage>& voyages) {
  std::vector<double> sogs;
  for (const Voyage& v : voyages) {
    for (const Record& r : v.records) sogs.push_back(r.sog);
  }
  if (sogs.empty()) throw DataError("auto_cruising_threshold: empty corpus");
  std::sort(sogs.begin(), sogs.end());

  // 1-D 2-means initialized at the quartiles; the midpoint of the converged
  // centers is the histogram-mode midpoint for bimodal SOG distributions.
  double c_low = sogs[sogs.size() / 4];
  double c_high = sogs[(3 * sogs.size()) / 4];
  if (c_low == c_high) return c_low;
  for (int iter = 0; iter < 100; ++iter) {
    double sum_low = 0.0, sum_high = 0.0;
    std::size_t n_low = 0, n_high = 0;
    const double split = (c_low + c_high) / 2.0;
    for (double s : sogs) {
      if (s <= split) {
        sum_low += s;
        ++n_low;
      } else {
        sum_high += s;
        ++n_high;
      }
    }
    if (n_low == 0 || n_high == 0) break;
    const double nl = sum_low / static_cast<double>(n_low);
    const double nh = sum_high / static_cast<double>(n_high);
    if (nl == c_low && nh == c_high) break;
    c_low = nl;
    c_high = nh;
  }
  return (c_low + c_high) / 2.0;
}

StatsTable dataset_stats(const std::vector<Voyage>& voyages, const RouteConfig& route) {
  if (voyages.empty()) throw DataError("dataset_stats: empty corpus");

  double fuel_all = 0.0, fuel_cr = 0.0;
  double time_all = 0.0, time_cr = 0.0;
  double dist_all = 0.0, dist_cr = 0.0;
  double sog_sum_all = 0.0, sog_sum_cr = 0.0;
  std::size_t n_all = 0, n_cr = 0;

  for (const Voyage& v : voyages) {
    for (std::size_t i = 0; i + 1 < v.records.size(); ++i) {
      const Record& a = v.records[i];
      const Record& b = v.records[i + 1];
      const double dt_h = (b.timestamp - a.timestamp) / 3600.0;
      const double leg_km =
          haversine_distance(a.lat, a.lon, b.lat, b.lon) / 1000.0;
      const double fuel = a.fuel_rate * dt_h;
      fuel_all += fuel;
      time_all += dt_h;
      dist_all += leg_km;
      if (classify_speed_mode(a, route) == SpeedMode::Cruising) {
        fuel_cr += fuel;
        time_cr += dt_h;
        dist_cr += leg_km;
      }
    }
    for (const Record& r : v.records) {
      sog_sum_all += r.sog;
      ++n_all;
      if (classify_speed_mode(r, route) == SpeedMode::Cruising) {
        sog_sum_cr += r.sog;
        ++n_cr;
      }
    }
  }

  auto make_row = [](const std::string& name, double all, double cruising) {
    StatsRow row;
    row.variable = name;
    row.all = all;
    row.cruising = cruising;
    row.difference_pct = all != 0.0 ? (all - cruising) / all * 100.0 : 0.0;
    return row;
  };

  StatsTable t;
  t.fuel_total_l = make_row("fuel_total_l", fuel_all, fuel_cr);
  t.time_total_h = make_row("time_total_h", time_all, time_cr);
  t.distance_total_km = make_row("distance_total_km", dist_all, dist_cr);
  t.speed_avg_mps = make_row("speed_avg_mps", n_all ? sog_sum_all / n_all : 0.0,
                             n_cr ? sog_sum_cr / n_cr : 0.0);
  return t;
}

std::string format_stats_csv(const StatsTable& t) {
  CsvTable out;
  out.header = {"variable", "all", "cruising", "difference_pct"};
  for (const StatsRow* row : t.rows()) {
    out.rows.push_back(
        {row->variable, fmt_double(row->all), fmt_double(row->cruising), fmt_double(row->difference_pct)});
  }
  return format_csv(out);
}

namespace {

const std::vector<std::string> kVoyageCsvHeader = {
    "voyage_id", "timestamp",   "lat",      "lon",          "sog",
    "heading",   "fuel_rate",   "wind_speed", "wind_dir",   "wave_height",
    "wave_dir",  "current_speed", "current_dir", "segment",  "speed_mode"};

}  // namespace

void save_voyages(const std::vector<Voyage>& voyages, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  nlohmann::json index;
  index["schema_version"] = 1;
  index["voyages"] = nlohmann::json::array();

  for (const Voyage& v : voyages) {
    CsvTable t;
    t.header = kVoyageCsvHeader;
    for (const Record& r : v.records) {
      t.rows.push_back({r.voyage_id, fmt_double(r.timestamp), fmt_double(r.lat), fmt_double(r.lon),
                        fmt_double(r.sog), fmt_double(r.heading), fmt_double(r.fuel_rate),
                        fmt_double(r.wind_speed), fmt_double(r.wind_dir), fmt_double(r.wave_height),
                        fmt_double(r.wave_dir), fmt_double(r.current_speed),
                        fmt_double(r.current_dir), r.segment ? to_string(*r.segment) : "",
                        r.speed_mode ? to_string(*r.speed_mode) : ""});
    }
    atomic_write_file(dir / (v.id + ".csv"), format_csv(t));

    nlohmann::json entry;
    entry["id"] = v.id;
    entry["direction"] = to_string(v.direction);
    entry["n_records"] = v.records.size();
    entry["t_start"] = v.records.front().timestamp;
    entry["t_end"] = v.records.back().timestamp;
    index["voyages"].push_back(std::move(entry));
  }
  atomic_write_file(dir / "index.json", index.dump(2) + "\n");
}

std::vector<Voyage> load_voyages(const std::filesystem::path& dir) {
  const nlohmann::json index = nlohmann::json::parse(read_file(dir / "index.json"));
  std::vector<Voyage> voyages;
  for (const auto& entry : index.at("voyages")) {
    Voyage v;
    v.id = entry.at("id").get<std::string>();
    v.direction = direction_from_string(entry.at("direction").get<std::string>());

    const CsvTable t = read_csv_file(dir / (v.id + ".csv"));
    const int seg_col = t.column("segment");
    const int mode_col = t.column("speed_mode");
    for (const auto& row : t.rows) {
      Record r;
      r.voyage_id = row[0];
      r.timestamp = std::strtod(row[1].c_str(), nullptr);
      r.lat = std::strtod(row[2].c_str(), nullptr);
      r.lon = std::strtod(row[3].c_str(), nullptr);
      r.sog = std::strtod(row[4].c_str(), nullptr);
      r.heading = std::strtod(row[5].c_str(), nullptr);
      r.fuel_rate = std::strtod(row[6].c_str(), nullptr);
      r.wind_speed = std::strtod(row[7].c_str(), nullptr);
      r.wind_dir = std::strtod(row[8].c_str(), nullptr);
      r.wave_height = std::strtod(row[9].c_str(), nullptr);
      r.wave_dir = std::strtod(row[10].c_str(), nullptr);
      r.current_speed = std::strtod(row[11].c_str(), nullptr);
      r.current_dir = std::strtod(row[12].c_str(), nullptr);
      if (seg_col >= 0 && !row[seg_col].empty()) r.segment = route_segment_from_string(row[seg_col]);
      if (mode_col >= 0 && !row[mode_col].empty()) r.speed_mode = speed_mode_from_string(row[mode_col]);
      v.records.push_back(std::move(r));
    }
    validate_voyage(v);
    voyages.push_back(std::move(v));
  }
  return voyages;
}

}  // namespace voyopt
