#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "helpers.hpp"
#include "voyopt/efficiency.hpp"
#include "voyopt/rng.hpp"

using namespace voyopt;

TEST_CASE("efficiency score pinned values") {
  CHECK(eff_score(1.0, 1.0) == 0.0);
  CHECK(eff_score(0.5, 0.5) == 0.5);
  // 0.2 and 0.8 are not binary-representable, so allow one ulp around 0.68.
  CHECK(std::abs(eff_score(0.2, 0.8) - 0.68) < 1.2e-16);
}

TEST_CASE("efficiency score symmetry and strict monotonicity") {
  for (int i = 1; i <= 50; ++i) {
    for (int j = 1; j <= 50; ++j) {
      const double f = i / 50.0;
      const double t = j / 50.0;
      CHECK(eff_score(f, t) == eff_score(t, f));
      if (i > 1) CHECK(eff_score(f, t) < eff_score((i - 1) / 50.0, t));
      if (j > 1) CHECK(eff_score(f, t) < eff_score(f, (j - 1) / 50.0));
    }
  }
}

TEST_CASE("efficiency score domain") {
  CHECK_THROWS_AS(eff_score(0.0, 0.5), DataError);
  CHECK_THROWS_AS(eff_score(0.5, 0.0), DataError);
  CHECK_THROWS_AS(eff_score(-0.1, 0.5), DataError);
  CHECK_THROWS_AS(eff_score(std::nan(""), 0.5), DataError);
  // Above-max inputs are legal and push the score negative.
  CHECK(eff_score(1.3, 0.9) < 0.0);
  CHECK(eff_score(1.3, 0.9) == doctest::Approx(1.0 - 2.0 * 1.3 * 0.9 / 2.2));
}

TEST_CASE("efficiency gain percent") {
  CHECK(eff_gain(0.5, 0.53) == doctest::Approx(6.0));
  CHECK(eff_gain(0.5, 0.5) == 0.0);
  CHECK(eff_gain(0.4, 0.3) == doctest::Approx(-25.0));
  CHECK_THROWS_AS(eff_gain(0.0, 0.5), DataError);
  CHECK_THROWS_AS(eff_gain(-0.2, 0.5), DataError);
}

TEST_CASE("fuel rate surrogate shape") {
  FuelModelCoeffs c{2.0, 0.12, 0.25, 0.02, 0.0};
  // 4 m/s in calm water with no wind: 2 + 0.12*64 = 9.68 L/h.
  CHECK(fuel_rate_model(4.0, 0.0, 0.0, 0.0, c) == doctest::Approx(9.68));
  // A dead headwind adds c3*wind*sog^2.
  CHECK(fuel_rate_model(4.0, 0.0, 5.0, 0.0, c) ==
        doctest::Approx(9.68 + 0.02 * 5.0 * 16.0));
  // Pure tailwind contributes nothing (headwind component clamps at 0).
  CHECK(fuel_rate_model(4.0, 0.0, 5.0, 180.0, c) == doctest::Approx(9.68));
  // Never negative even with absurd coefficients.
  FuelModelCoeffs neg{-100.0, 0.0, 0.0, 0.0, 0.0};
  CHECK(fuel_rate_model(4.0, 0.0, 0.0, 0.0, neg) == 0.0);
}

TEST_CASE("calibration recovers known coefficients from clean data") {
  const FuelModelCoeffs truth{2.0, 0.12, 0.25, 0.02, 0.0};
  std::vector<Voyage> corpus;
  Rng rng(4242);
  for (int vi = 0; vi < 4; ++vi) {
    std::vector<double> sogs;
    for (int i = 0; i < 40; ++i) sogs.push_back(rng.uniform(1.0, 6.0));
    Voyage v = testutil::straight_voyage("V000" + std::to_string(vi + 1), sogs);
    for (auto& r : v.records) {
      r.wave_height = rng.uniform(0.0, 2.0);
      r.wind_speed = rng.uniform(0.0, 8.0);
      r.wind_dir = rng.uniform(0.0, 360.0);
      const double rel = relative_wind_angle(r.wind_dir, r.heading);
      r.fuel_rate = fuel_rate_model(r.sog, r.wave_height, r.wind_speed, rel, truth);
    }
    corpus.push_back(std::move(v));
  }
  const FuelModelCoeffs fit = calibrate_fuel_model(corpus);
  CHECK(fit.c0 == doctest::Approx(truth.c0).epsilon(1e-8));
  CHECK(fit.c1 == doctest::Approx(truth.c1).epsilon(1e-8));
  CHECK(fit.c2 == doctest::Approx(truth.c2).epsilon(1e-8));
  CHECK(fit.c3 == doctest::Approx(truth.c3).epsilon(1e-8));
  CHECK(fit.rmse == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("calibration demands weather and enough records") {
  Voyage v = testutil::straight_voyage("V0001", std::vector<double>(150, 4.0));
  for (auto& r : v.records) r.wave_height = std::nan("");
  CHECK_THROWS_AS(calibrate_fuel_model({v}), DataError);

  Voyage small = testutil::straight_voyage("V0001", std::vector<double>(20, 4.0));
  CHECK_THROWS_AS(calibrate_fuel_model({small}), DataError);

  // Constant speed and weather leaves the design rank-deficient.
  Voyage flat = testutil::straight_voyage("V0001", std::vector<double>(150, 4.0));
  CHECK_THROWS_AS(calibrate_fuel_model({flat}), DataError);
}

TEST_CASE("voyage totals use left-Riemann fuel") {
  Voyage v = testutil::straight_voyage("V0001", {4.0, 4.0, 4.0});
  v.records[0].fuel_rate = 60.0;
  v.records[1].fuel_rate = 30.0;
  v.records[2].fuel_rate = 9999.0;  // last record's rate never integrates
  const VoyageTotals t = voyage_totals(v);
  CHECK(t.fuel_l == doctest::Approx(1.0 + 0.5));
  CHECK(t.time_h == doctest::Approx(120.0 / 3600.0));
  CHECK(t.distance_km == doctest::Approx(0.48).epsilon(1e-3));
}

TEST_CASE("corpus scoring pins the worst voyage at zero") {
  // One voyage attains both maxima, so its normalized totals are (1,1).
  Voyage heavy = testutil::straight_voyage("V0001", {3.0, 3.0, 3.0, 3.0, 3.0}, 80.0);
  Voyage light = testutil::straight_voyage("V0002", {5.0, 5.0, 5.0}, 40.0);
  std::vector<Voyage> corpus = {heavy, light};
  const NormalizationConstants n = score_corpus(corpus);
  REQUIRE(corpus[0].eff_score.has_value());
  REQUIRE(corpus[0].totals.has_value());
  CHECK(n.fuel_max_l == doctest::Approx(corpus[0].totals->fuel_l));
  CHECK(n.time_max_h == doctest::Approx(corpus[0].totals->time_h));
  CHECK(*corpus[0].eff_score == 0.0);
  CHECK(*corpus[1].eff_score > 0.0);
  CHECK(*corpus[1].eff_score ==
        doctest::Approx(eff_score(corpus[1].totals->fuel_l / n.fuel_max_l,
                                  corpus[1].totals->time_h / n.time_max_h)));
}

TEST_CASE("corpus scoring rejects empty and degenerate input") {
  std::vector<Voyage> empty;
  CHECK_THROWS_AS(score_corpus(empty), DataError);
  std::vector<Voyage> zero_fuel = {
      testutil::straight_voyage("V0001", {4.0, 4.0}, 0.0),
      testutil::straight_voyage("V0002", {4.0, 4.0}, 0.0)};
  CHECK_THROWS_AS(score_corpus(zero_fuel), DataError);
}

TEST_CASE("profile estimate matches hand-computed legs") {
  const FuelModelCoeffs c{2.0, 0.12, 0.0, 0.0, 0.0};
  const NormalizationConstants n{10.0, 1.0};
  std::vector<ProfileStep> steps(2);
  steps[0] = {3600.0, 0.0, 0.0, 0.0};  // 3.6 km
  steps[1] = {7200.0, 0.0, 0.0, 0.0};
  const std::vector<double> sog = {2.0, 4.0};
  const ProfileEstimate e = estimate_profile_efficiency(sog, steps, c, n);
  // Times: 1800 s and 1800 s -> 1 h total. Rates: 2.96 and 9.68 L/h.
  CHECK(e.time_h == doctest::Approx(1.0));
  CHECK(e.fuel_l == doctest::Approx(0.5 * 2.96 + 0.5 * 9.68));
  CHECK(e.eff == doctest::Approx(eff_score(e.fuel_l / 10.0, 1.0)));
}

TEST_CASE("profile estimate rejects malformed input") {
  const FuelModelCoeffs c{2.0, 0.12, 0.0, 0.0, 0.0};
  const NormalizationConstants n{10.0, 1.0};
  std::vector<ProfileStep> steps(2);
  steps[0] = {1000.0, 0.0, 0.0, 0.0};
  steps[1] = {1000.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(estimate_profile_efficiency(std::vector<double>{4.0}, steps, c, n),
                  DataError);
  CHECK_THROWS_AS(
      estimate_profile_efficiency(std::vector<double>{4.0, 0.0}, steps, c, n),
      DataError);
  CHECK_THROWS_AS(
      estimate_profile_efficiency(std::vector<double>{}, {}, c, n), DataError);
  std::vector<ProfileStep> flat = steps;
  flat[1].distance_m = 0.0;
  CHECK_THROWS_AS(
      estimate_profile_efficiency(std::vector<double>{4.0, 4.0}, flat, c, n),
      DataError);
}

TEST_CASE("profile steps floor stationary legs at one meter") {
  Voyage v = testutil::straight_voyage("V0001", {4.0, 4.0, 4.0});
  v.records[1].lat = v.records[0].lat;  // no movement on leg 0
  const auto steps = profile_steps(v);
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].distance_m == 1.0);
  CHECK(steps[1].distance_m > 1.0);
  CHECK(steps[0].wave_height == v.records[0].wave_height);
  CHECK(steps[0].wind_rel_angle_deg ==
        doctest::Approx(relative_wind_angle(v.records[0].wind_dir, v.records[0].heading)));
}

TEST_CASE("measured profile re-estimated through the same legs is consistent") {
  // The estimator applied to the measured speeds over measured legs must give
  // totals close to the record-level integration (same left-Riemann rule,
  // modeled rates instead of measured ones).
  const FuelModelCoeffs c{2.0, 0.12, 0.25, 0.02, 0.0};
  Voyage v = testutil::straight_voyage("V0001", {4.0, 4.5, 5.0, 4.0});
  for (auto& r : v.records) {
    const double rel = relative_wind_angle(r.wind_dir, r.heading);
    r.fuel_rate = fuel_rate_model(r.sog, r.wave_height, r.wind_speed, rel, c);
  }
  const VoyageTotals t = voyage_totals(v);
  const auto steps = profile_steps(v);
  std::vector<double> sog(v.records.size() - 1);
  for (std::size_t i = 0; i + 1 < v.records.size(); ++i) sog[i] = v.records[i].sog;
  const NormalizationConstants n{t.fuel_l, t.time_h};
  const ProfileEstimate e = estimate_profile_efficiency(sog, steps, c, n);
  CHECK(e.time_h == doctest::Approx(t.time_h).epsilon(1e-6));
  CHECK(e.fuel_l == doctest::Approx(t.fuel_l).epsilon(1e-6));
}

TEST_CASE("fuel model file round-trip") {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / "voyopt_fuel_model.json";
  const FuelModelCoeffs c{2.5, 0.11, 0.3, 0.025, 0.7};
  save_fuel_model(p, c, NormalizationConstants{123.0, 4.5});
  const FuelModelFile f = load_fuel_model(p);
  CHECK(f.coeffs.c0 == 2.5);
  CHECK(f.coeffs.c3 == 0.025);
  CHECK(f.coeffs.rmse == 0.7);
  REQUIRE(f.norm.has_value());
  CHECK(f.norm->fuel_max_l == 123.0);
  CHECK(f.norm->time_max_h == 4.5);

  save_fuel_model(p, c, std::nullopt);
  CHECK_FALSE(load_fuel_model(p).norm.has_value());
  fs::remove(p);
}
