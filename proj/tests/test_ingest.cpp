#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "voyopt/ingest.hpp"
#include "voyopt/io.hpp"

using namespace voyopt;

namespace {

RouteConfig test_route() {
  RouteConfig rc;
  rc.port_a = {57.55, 11.90, 700.0};
  rc.port_b = {57.73, 11.90, 700.0};
  rc.segment_lat_low = 57.62;
  rc.segment_lat_high = 57.66;
  rc.direct_lon_split = 11.935;
  rc.direct_is_west = true;
  rc.cruising_sog_threshold = 3.0;
  rc.min_port_dwell_s = 300.0;
  return rc;
}

Record at(double t, double lat, double lon, double sog = 4.0) {
  Record r;
  r.timestamp = t;
  r.lat = lat;
  r.lon = lon;
  r.sog = sog;
  r.heading = 0.0;
  r.fuel_rate = 50.0;
  return r;
}

}  // namespace

TEST_CASE("parse_records reads required and optional fields") {
  const std::string csv =
      "timestamp,lat,lon,sog,heading,fuel_rate,wind_speed,pitch\n"
      "100,57.5,11.9,4.2,365,50,6.5,0.3\n"
      "160,57.6,11.9,4.0,10,48,7.0,0.4\n";
  const ParseResult pr = parse_records(csv);
  REQUIRE(pr.records.size() == 2);
  CHECK(pr.dropped == 0);
  CHECK(pr.records[0].sog == 4.2);
  CHECK(pr.records[0].heading == doctest::Approx(5.0));  // normalized
  CHECK(pr.records[0].wind_speed == 6.5);
  CHECK(std::isnan(pr.records[0].wave_height));  // absent column stays NaN
}

TEST_CASE("parse_records drops malformed rows and counts them") {
  const std::string csv =
      "timestamp,lat,lon,sog,heading,fuel_rate\n"
      "100,57.5,11.9,4.2,0,50\n"
      "160,not_a_number,11.9,4.0,0,48\n"
      "220,95.0,11.9,4.0,0,48\n"    // lat out of range
      "280,57.5,11.9,-1.0,0,48\n"   // negative speed
      "340,57.5,11.9,4.0,0,-5\n"    // negative fuel rate
      "400,57.5,11.9,4.1,0,49\n";
  const ParseResult pr = parse_records(csv);
  CHECK(pr.records.size() == 2);
  CHECK(pr.dropped == 4);
}

TEST_CASE("parse_records honors a column schema") {
  const std::string csv =
      "Time,Latitude,Longitude,Speed,HDG,FuelFlow\n"
      "100,57.5,11.9,4.2,0,50\n";
  const ColumnSchema schema = {{"timestamp", "Time"},   {"lat", "Latitude"},
                               {"lon", "Longitude"},    {"sog", "Speed"},
                               {"heading", "HDG"},      {"fuel_rate", "FuelFlow"}};
  const ParseResult pr = parse_records(csv, schema);
  REQUIRE(pr.records.size() == 1);
  CHECK(pr.records[0].fuel_rate == 50.0);
}

TEST_CASE("parse_records rejects a missing required column") {
  CHECK_THROWS_AS(parse_records("timestamp,lat,lon,sog,heading\n1,2,3,4,5\n"),
                  DataError);
  CHECK_THROWS_AS(parse_records(""), DataError);
}

TEST_CASE("resample is the identity on 1-minute data") {
  std::vector<Record> recs;
  for (int i = 0; i < 5; ++i) recs.push_back(at(1000.0 + 60.0 * i, 57.5 + 0.001 * i, 11.9));
  const auto out = resample_1min(recs);
  REQUIRE(out.size() == recs.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].timestamp == recs[i].timestamp);
    CHECK(out[i].lat == recs[i].lat);
  }
}

TEST_CASE("resample averages within a window and snaps timestamps") {
  std::vector<Record> recs;
  recs.push_back(at(1000.0, 57.50, 11.90, 4.0));
  recs.push_back(at(1030.0, 57.52, 11.92, 6.0));
  recs.push_back(at(1090.0, 57.54, 11.94, 5.0));
  const auto out = resample_1min(recs);
  REQUIRE(out.size() == 2);
  CHECK(out[0].timestamp == 1000.0);
  CHECK(out[0].sog == doctest::Approx(5.0));
  CHECK(out[0].lat == doctest::Approx(57.51));
  CHECK(out[1].timestamp == 1060.0);  // lone record snapped to window start
  CHECK(out[1].sog == 5.0);
}

TEST_CASE("resample takes the circular mean of headings") {
  std::vector<Record> recs;
  Record a = at(0.0, 57.5, 11.9);
  a.heading = 350.0;
  Record b = at(30.0, 57.5, 11.9);
  b.heading = 10.0;
  recs = {a, b};
  const auto out = resample_1min(recs);
  REQUIRE(out.size() == 1);
  CHECK(std::abs(std::remainder(out[0].heading, 360.0)) < 1e-9);
}

TEST_CASE("voyage tagging cuts port-to-port passages") {
  const RouteConfig rc = test_route();
  std::vector<Record> stream;
  double t = 0.0;
  // Dwell at port A long enough to qualify as a departure.
  for (int i = 0; i <= 5; ++i, t += 60.0) stream.push_back(at(t, 57.55, 11.90, 0.1));
  // Transit north, outside both fences.
  for (double lat = 57.58; lat < 57.705; lat += 0.02, t += 60.0) {
    stream.push_back(at(t, lat, 11.90));
  }
  // Arrive at port B and dwell there.
  for (int i = 0; i <= 5; ++i, t += 60.0) stream.push_back(at(t, 57.73, 11.90, 0.1));
  // Return leg.
  for (double lat = 57.70; lat > 57.575; lat -= 0.02, t += 60.0) {
    stream.push_back(at(t, lat, 11.90));
  }
  stream.push_back(at(t, 57.55, 11.90, 0.1));

  const auto voyages = tag_voyages(stream, rc);
  REQUIRE(voyages.size() == 2);
  CHECK(voyages[0].id == "V0001");
  CHECK(voyages[0].direction == Direction::Northbound);
  CHECK(voyages[1].id == "V0002");
  CHECK(voyages[1].direction == Direction::Southbound);
  // Only the outside-fence transit records belong to the voyage.
  CHECK(voyages[0].records.size() == 7);
  for (const auto& r : voyages[0].records) {
    CHECK_FALSE(inside_geofence(rc.port_a, r.lat, r.lon));
    CHECK_FALSE(inside_geofence(rc.port_b, r.lat, r.lon));
    CHECK(r.voyage_id == "V0001");
  }
}

TEST_CASE("too short a port dwell does not open a voyage") {
  const RouteConfig rc = test_route();
  std::vector<Record> stream;
  stream.push_back(at(0.0, 57.55, 11.90, 0.1));
  stream.push_back(at(60.0, 57.55, 11.90, 0.1));  // 60 s < 300 s dwell
  double t = 120.0;
  for (double lat = 57.58; lat < 57.705; lat += 0.02, t += 60.0) {
    stream.push_back(at(t, lat, 11.90));
  }
  stream.push_back(at(t, 57.73, 11.90, 0.1));
  CHECK(tag_voyages(stream, rc).empty());
}

TEST_CASE("returning to the origin fence aborts the crossing") {
  const RouteConfig rc = test_route();
  std::vector<Record> stream;
  double t = 0.0;
  for (int i = 0; i <= 5; ++i, t += 60.0) stream.push_back(at(t, 57.55, 11.90, 0.1));
  stream.push_back(at(t, 57.60, 11.90));
  t += 60.0;
  stream.push_back(at(t, 57.62, 11.90));
  t += 60.0;
  stream.push_back(at(t, 57.55, 11.90, 0.1));  // back into port A
  CHECK(tag_voyages(stream, rc).empty());
}

TEST_CASE("voyage tagging demands time order") {
  const RouteConfig rc = test_route();
  std::vector<Record> stream = {at(100.0, 57.55, 11.90), at(50.0, 57.56, 11.90)};
  CHECK_THROWS_AS(tag_voyages(stream, rc), DataError);
}

TEST_CASE("segment classification bands") {
  const RouteConfig rc = test_route();
  CHECK(classify_segment(at(0, 57.70, 11.90), rc) == RouteSegment::North);
  CHECK(classify_segment(at(0, 57.66, 11.90), rc) == RouteSegment::North);  // boundary
  CHECK(classify_segment(at(0, 57.61, 11.90), rc) == RouteSegment::South);
  CHECK(classify_segment(at(0, 57.64, 11.95), rc) == RouteSegment::Middle);
  CHECK(classify_segment(at(0, 57.64, 11.92), rc) == RouteSegment::Direct);  // west of split
  CHECK(classify_segment(at(0, 57.62, 11.95), rc) == RouteSegment::Middle);  // low boundary
}

TEST_CASE("speed mode boundary is cruising") {
  const RouteConfig rc = test_route();
  CHECK(classify_speed_mode(at(0, 57.6, 11.9, 3.0), rc) == SpeedMode::Cruising);
  CHECK(classify_speed_mode(at(0, 57.6, 11.9, 2.999), rc) == SpeedMode::Maneuvering);
  CHECK(classify_speed_mode(at(0, 57.6, 11.9, 8.0), rc) == SpeedMode::Cruising);
}

TEST_CASE("annotate fills both labels on every record") {
  const RouteConfig rc = test_route();
  Voyage v = testutil::straight_voyage("V0001", {4.0, 1.0, 4.0});
  for (auto& r : v.records) r.speed_mode.reset();
  annotate_voyage(v, rc);
  for (const auto& r : v.records) {
    CHECK(r.segment.has_value());
    CHECK(r.speed_mode.has_value());
  }
  CHECK(*v.records[0].speed_mode == SpeedMode::Cruising);
  CHECK(*v.records[1].speed_mode == SpeedMode::Maneuvering);
}

TEST_CASE("auto threshold splits a bimodal speed histogram") {
  std::vector<Voyage> vs;
  std::vector<double> sogs;
  for (int i = 0; i < 30; ++i) sogs.push_back(1.4 + 0.01 * (i % 5));
  for (int i = 0; i < 30; ++i) sogs.push_back(4.4 + 0.01 * (i % 5));
  vs.push_back(testutil::straight_voyage("V0001", sogs));
  const double th = auto_cruising_threshold(vs);
  CHECK(th > 2.5);
  CHECK(th < 3.5);
}

TEST_CASE("dataset stats match a hand-computed corpus") {
  const RouteConfig rc = test_route();
  // One voyage, four records a minute apart: cruise, cruise, maneuver, cruise.
  Voyage v = testutil::straight_voyage("V0001", {4.0, 4.0, 1.0, 4.0});
  v.records[0].fuel_rate = 60.0;
  v.records[1].fuel_rate = 60.0;
  v.records[2].fuel_rate = 30.0;
  v.records[3].fuel_rate = 60.0;
  annotate_voyage(v, rc);
  const StatsTable t = dataset_stats({v}, rc);

  // Left-Riemann legs: 1 + 1 + 0.5 liters in total, the maneuver leg excluded
  // from the cruising column.
  CHECK(t.fuel_total_l.all == doctest::Approx(2.5));
  CHECK(t.fuel_total_l.cruising == doctest::Approx(2.0));
  CHECK(t.fuel_total_l.difference_pct == doctest::Approx(20.0));
  CHECK(t.time_total_h.all == doctest::Approx(3.0 / 60.0));
  CHECK(t.time_total_h.cruising == doctest::Approx(2.0 / 60.0));
  CHECK(t.speed_avg_mps.all == doctest::Approx(3.25));
  CHECK(t.speed_avg_mps.cruising == doctest::Approx(4.0));
  const double dist_all = t.distance_total_km.all;
  CHECK(dist_all == doctest::Approx((240.0 + 240.0 + 60.0) / 1000.0).epsilon(1e-3));

  const std::string csv = format_stats_csv(t);
  CHECK(csv.find("variable,all,cruising,difference_pct") == 0);
  CHECK(csv.find("fuel_total_l") != std::string::npos);
  CHECK(csv.find("speed_avg_mps") != std::string::npos);
}

TEST_CASE("dataset stats reject an empty corpus") {
  CHECK_THROWS_AS(dataset_stats({}, test_route()), DataError);
}

TEST_CASE("voyage save/load round-trip preserves annotations") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "voyopt_ingest_roundtrip";
  fs::remove_all(dir);

  const RouteConfig rc = test_route();
  Voyage a = testutil::straight_voyage("V0001", {4.0, 4.5, 1.0, 4.0});
  Voyage b = testutil::straight_voyage("V0002", {3.5, 3.5, 3.5});
  b.direction = Direction::Southbound;
  annotate_voyage(a, rc);
  annotate_voyage(b, rc);
  // One voyage carries NaN weather to prove NaN survives the trip.
  for (auto& r : b.records) r.wave_height = std::nan("");

  save_voyages({a, b}, dir);
  const auto back = load_voyages(dir);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "V0001");
  CHECK(back[1].direction == Direction::Southbound);
  REQUIRE(back[0].records.size() == 4);
  CHECK(back[0].records[1].sog == 4.5);
  CHECK(back[0].records[1].timestamp == a.records[1].timestamp);
  CHECK(back[0].records[1].lat == a.records[1].lat);
  CHECK(*back[0].records[2].speed_mode == SpeedMode::Maneuvering);
  CHECK(back[0].records[0].segment.has_value());
  CHECK(std::isnan(back[1].records[0].wave_height));
  fs::remove_all(dir);
}
