#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "voyopt/core.hpp"

using namespace voyopt;

TEST_CASE("enum names round-trip") {
  CHECK(route_segment_from_string(to_string(RouteSegment::North)) == RouteSegment::North);
  CHECK(route_segment_from_string(to_string(RouteSegment::Middle)) == RouteSegment::Middle);
  CHECK(route_segment_from_string(to_string(RouteSegment::South)) == RouteSegment::South);
  CHECK(route_segment_from_string(to_string(RouteSegment::Direct)) == RouteSegment::Direct);
  CHECK(speed_mode_from_string(to_string(SpeedMode::Cruising)) == SpeedMode::Cruising);
  CHECK(speed_mode_from_string(to_string(SpeedMode::Maneuvering)) == SpeedMode::Maneuvering);
  CHECK(weather_state_from_string(to_string(WeatherState::Calm)) == WeatherState::Calm);
  CHECK(weather_state_from_string(to_string(WeatherState::Moderate)) == WeatherState::Moderate);
  CHECK(weather_state_from_string(to_string(WeatherState::Rough)) == WeatherState::Rough);
  CHECK(direction_from_string(to_string(Direction::Northbound)) == Direction::Northbound);
  CHECK(direction_from_string(to_string(Direction::Southbound)) == Direction::Southbound);
  CHECK_THROWS_AS(route_segment_from_string("Sideways"), DataError);
  CHECK_THROWS_AS(weather_state_from_string(""), DataError);
}

TEST_CASE("norm_deg wraps into [0,360)") {
  CHECK(norm_deg(0.0) == 0.0);
  CHECK(norm_deg(360.0) == 0.0);
  CHECK(norm_deg(-90.0) == doctest::Approx(270.0));
  CHECK(norm_deg(725.0) == doctest::Approx(5.0));
  for (double d = -1000.0; d <= 1000.0; d += 37.3) {
    const double n = norm_deg(d);
    CHECK(n >= 0.0);
    CHECK(n < 360.0);
    CHECK(std::abs(std::remainder(n - d, 360.0)) < 1e-9);
  }
}

TEST_CASE("haversine distance basics") {
  CHECK(haversine_distance(57.7, 11.97, 57.7, 11.97) == 0.0);
  const double d1 = haversine_distance(10.0, 20.0, 12.5, 23.0);
  const double d2 = haversine_distance(12.5, 23.0, 10.0, 20.0);
  CHECK(d1 == doctest::Approx(d2));
  // One degree of latitude on the sphere is 2*pi*R/360.
  const double lat_deg = 2.0 * M_PI * kEarthRadiusM / 360.0;
  CHECK(haversine_distance(0.0, 0.0, 1.0, 0.0) == doctest::Approx(lat_deg).epsilon(1e-9));
  // Quarter circumference between equator and pole.
  CHECK(haversine_distance(0.0, 0.0, 90.0, 0.0) ==
        doctest::Approx(M_PI * kEarthRadiusM / 2.0).epsilon(1e-9));
}

TEST_CASE("initial bearing of cardinal moves") {
  CHECK(initial_bearing(57.0, 11.9, 58.0, 11.9) == doctest::Approx(0.0));
  CHECK(initial_bearing(0.0, 0.0, 0.0, 1.0) == doctest::Approx(90.0));
  CHECK(initial_bearing(58.0, 11.9, 57.0, 11.9) == doctest::Approx(180.0));
  CHECK(initial_bearing(0.0, 1.0, 0.0, 0.0) == doctest::Approx(270.0));
}

TEST_CASE("geofence boundary is inside") {
  Geofence g{57.7, 11.97, 500.0};
  CHECK(inside_geofence(g, 57.7, 11.97));
  // Walk north until just past the radius.
  const double deg_per_m = 360.0 / (2.0 * M_PI * kEarthRadiusM);
  CHECK(inside_geofence(g, 57.7 + 499.0 * deg_per_m, 11.97));
  CHECK_FALSE(inside_geofence(g, 57.7 + 502.0 * deg_per_m, 11.97));
}

TEST_CASE("circular mean handles the wrap") {
  // The wrap case may land at 0+eps or 360-eps; compare on the circle.
  CHECK(std::abs(std::remainder(circular_mean_deg({350.0, 10.0}), 360.0)) < 1e-9);
  CHECK(circular_mean_deg({90.0}) == doctest::Approx(90.0));
  CHECK(circular_mean_deg({80.0, 100.0}) == doctest::Approx(90.0));
  // Opposed pair: the resultant cancels, any answer in range is acceptable.
  const double opposed = circular_mean_deg({0.0, 180.0});
  CHECK(opposed >= 0.0);
  CHECK(opposed < 360.0);
}

TEST_CASE("relative wind angle convention") {
  // Wind blowing towards 180 against a northbound vessel is a dead headwind.
  CHECK(relative_wind_angle(180.0, 0.0) == doctest::Approx(0.0));
  // Wind from behind.
  CHECK(relative_wind_angle(0.0, 0.0) == doctest::Approx(180.0));
  CHECK(relative_wind_angle(270.0, 0.0) == doctest::Approx(90.0));
  for (double w = 0.0; w < 360.0; w += 45.0) {
    const double a = relative_wind_angle(w, 123.0);
    CHECK(a >= 0.0);
    CHECK(a < 360.0);
  }
}

TEST_CASE("current along component") {
  CHECK(current_along_component(1.0, 0.0, 0.0) == doctest::Approx(1.0));
  CHECK(current_along_component(1.0, 180.0, 0.0) == doctest::Approx(-1.0));
  CHECK(current_along_component(2.0, 90.0, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(current_along_component(2.0, 45.0, 45.0) == doctest::Approx(2.0));
}

TEST_CASE("along-track fraction spans [0,1]") {
  const Voyage v = testutil::straight_voyage("V0001", {4.0, 4.0, 4.0, 4.0});
  const auto f = along_track_fraction(v);
  REQUIRE(f.size() == 4);
  CHECK(f.front() == 0.0);
  CHECK(f.back() == 1.0);
  CHECK(f[1] == doctest::Approx(1.0 / 3.0));
  CHECK(f[2] == doctest::Approx(2.0 / 3.0));
  for (std::size_t i = 1; i < f.size(); ++i) CHECK(f[i] >= f[i - 1]);
}

TEST_CASE("along-track fraction rejects a zero-length track") {
  Voyage v = testutil::straight_voyage("V0001", {4.0, 4.0});
  v.records[1].lat = v.records[0].lat;
  v.records[1].lon = v.records[0].lon;
  CHECK_THROWS_AS(along_track_fraction(v), DataError);
}

TEST_CASE("voyage validation") {
  Voyage v = testutil::straight_voyage("V0001", {4.0, 4.0, 4.0});
  CHECK_NOTHROW(validate_voyage(v));

  Voyage one = v;
  one.records.resize(1);
  CHECK_THROWS_AS(validate_voyage(one), DataError);

  Voyage bad_id = v;
  bad_id.records[1].voyage_id = "V0999";
  CHECK_THROWS_AS(validate_voyage(bad_id), DataError);

  Voyage bad_time = v;
  bad_time.records[2].timestamp = bad_time.records[1].timestamp;
  CHECK_THROWS_AS(validate_voyage(bad_time), DataError);
}

TEST_CASE("measured profile copies SOG verbatim") {
  const Voyage v = testutil::straight_voyage("V0007", {4.0, 5.0, 3.5, 4.2});
  const SpeedProfile p = measured_profile(v);
  CHECK(p.voyage_id == "V0007");
  CHECK(p.provenance == SpeedProfile::kMeasured);
  CHECK_FALSE(p.is_predicted());
  REQUIRE(p.sog.size() == 4);
  CHECK(p.sog[1] == 5.0);
  CHECK(p.sog[2] == 3.5);
  CHECK(p.positions.size() == p.sog.size());
}
