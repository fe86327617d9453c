#include "voyopt/efficiency.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "voyopt/io.hpp"

namespace voyopt {
namespace {

// Solves the 4x4 system A x = b in place by Gaussian elimination with
// partial pivoting. Returns false when the pivot collapses (singular design).
bool solve4(std::array<std::array<double, 4>, 4>& A, std::array<double, 4>& b,
            std::array<double, 4>& x) {
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::fabs(A[r][col]) > std::fabs(A[pivot][col])) pivot = r;
    }
    if (std::fabs(A[pivot][col]) < 1e-12) return false;
    std::swap(A[col], A[pivot]);
    std::swap(b[col], b[pivot]);
    for (int r = col + 1; r < 4; ++r) {
      const double f = A[r][col] / A[col][col];
      for (int c = col; c < 4; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int row = 3; row >= 0; --row) {
    double acc = b[row];
    for (int c = row + 1; c < 4; ++c) acc -= A[row][c] * x[c];
    x[row] = acc / A[row][row];
  }
  return true;
}

std::array<double, 4> regressors(double sog, double wave, double wind_speed,
                                 double wind_rel_angle_deg) {
  const double headwind =
      std::max(0.0, wind_speed * std::cos(deg2rad(wind_rel_angle_deg)));
  return {1.0, sog * sog * sog, wave * sog * sog, headwind * sog * sog};
}

}  // namespace

double fuel_rate_model(double sog, double wave_height, double wind_speed,
                       double wind_rel_angle_deg, const FuelModelCoeffs& c) {
  const auto r = regressors(sog, wave_height, wind_speed, wind_rel_angle_deg);
  const double rate = c.c0 * r[0] + c.c1 * r[1] + c.c2 * r[2] + c.c3 * r[3];
  return std::max(0.0, rate);
}

FuelModelCoeffs calibrate_fuel_model(const std::vector<Voyage>& voyages) {
  std::array<std::array<double, 4>, 4> ata{};
  std::array<double, 4> atb{};
  std::size_t n = 0;
  for (const auto& v : voyages) {
    for (const auto& rec : v.records) {
      if (!std::isfinite(rec.wave_height) || !std::isfinite(rec.wind_speed) ||
          !std::isfinite(rec.wind_dir)) {
        throw DataError("calibrate_fuel_model: record lacks weather (voyage " +
                        v.id + ")");
      }
      const double rel = relative_wind_angle(rec.wind_dir, rec.heading);
      const auto r = regressors(rec.sog, rec.wave_height, rec.wind_speed, rel);
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) ata[i][j] += r[i] * r[j];
        atb[i] += r[i] * rec.fuel_rate;
      }
      ++n;
    }
  }
  if (n < 100) {
    throw DataError("calibrate_fuel_model: need at least 100 records, got " +
                    std::to_string(n));
  }
  std::array<double, 4> x{};
  if (!solve4(ata, atb, x)) {
    throw DataError("calibrate_fuel_model: rank-deficient design matrix; "
                    "corpus lacks speed or weather variation");
  }
  FuelModelCoeffs c;
  c.c0 = std::max(0.0, x[0]);
  c.c1 = std::max(0.0, x[1]);
  c.c2 = x[2];
  c.c3 = x[3];

  double sse = 0.0;
  for (const auto& v : voyages) {
    for (const auto& rec : v.records) {
      const double rel = relative_wind_angle(rec.wind_dir, rec.heading);
      const double pred =
          fuel_rate_model(rec.sog, rec.wave_height, rec.wind_speed, rel, c);
      const double e = pred - rec.fuel_rate;
      sse += e * e;
    }
  }
  c.rmse = std::sqrt(sse / static_cast<double>(n));
  return c;
}

VoyageTotals voyage_totals(const Voyage& v) {
  validate_voyage(v);
  VoyageTotals t;
  const auto& rs = v.records;
  for (std::size_t i = 0; i + 1 < rs.size(); ++i) {
    const double dt_h =
        static_cast<double>(rs[i + 1].timestamp - rs[i].timestamp) / 3600.0;
    t.fuel_l += rs[i].fuel_rate * dt_h;
    t.distance_km += haversine_distance(rs[i].lat, rs[i].lon, rs[i + 1].lat,
                                        rs[i + 1].lon) /
                     1000.0;
  }
  t.time_h = static_cast<double>(rs.back().timestamp - rs.front().timestamp) /
             3600.0;
  return t;
}

double eff_score(double fuel_nm, double time_nm) {
  if (!(fuel_nm > 0.0) || !(time_nm > 0.0)) {
    throw DataError("eff_score: normalized inputs must be positive");
  }
  return 1.0 - 2.0 * (fuel_nm * time_nm) / (fuel_nm + time_nm);
}

NormalizationConstants score_corpus(std::vector<Voyage>& voyages) {
  if (voyages.empty()) throw DataError("score_corpus: empty corpus");
  NormalizationConstants n;
  for (auto& v : voyages) {
    v.totals = voyage_totals(v);
    n.fuel_max_l = std::max(n.fuel_max_l, v.totals->fuel_l);
    n.time_max_h = std::max(n.time_max_h, v.totals->time_h);
  }
  if (!(n.fuel_max_l > 0.0) || !(n.time_max_h > 0.0)) {
    throw DataError("score_corpus: corpus maxima must be positive");
  }
  for (auto& v : voyages) {
    v.eff_score = eff_score(v.totals->fuel_l / n.fuel_max_l,
                            v.totals->time_h / n.time_max_h);
  }
  return n;
}

ProfileEstimate estimate_profile_efficiency(std::span<const double> sog,
                                            std::span<const ProfileStep> steps,
                                            const FuelModelCoeffs& c,
                                            const NormalizationConstants& n) {
  if (sog.size() != steps.size()) {
    throw DataError("estimate_profile_efficiency: length mismatch");
  }
  if (steps.empty()) {
    throw DataError("estimate_profile_efficiency: empty profile");
  }
  ProfileEstimate out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(sog[i] > 0.0)) {
      throw DataError("estimate_profile_efficiency: non-positive speed");
    }
    if (!(steps[i].distance_m > 0.0)) {
      throw DataError("estimate_profile_efficiency: non-positive leg distance");
    }
    const double dt_h = steps[i].distance_m / sog[i] / 3600.0;
    out.time_h += dt_h;
    out.fuel_l += dt_h * fuel_rate_model(sog[i], steps[i].wave_height,
                                         steps[i].wind_speed,
                                         steps[i].wind_rel_angle_deg, c);
  }
  out.eff = eff_score(out.fuel_l / n.fuel_max_l, out.time_h / n.time_max_h);
  return out;
}

std::vector<ProfileStep> profile_steps(const Voyage& v) {
  validate_voyage(v);
  std::vector<ProfileStep> steps;
  steps.reserve(v.records.size() - 1);
  for (std::size_t i = 0; i + 1 < v.records.size(); ++i) {
    const auto& r = v.records[i];
    ProfileStep s;
    s.distance_m = haversine_distance(r.lat, r.lon, v.records[i + 1].lat,
                                      v.records[i + 1].lon);
    // Degenerate stationary legs would zero out the time model; keep a
    // floor of one meter so dwell points inside a voyage stay feasible.
    s.distance_m = std::max(s.distance_m, 1.0);
    s.wave_height = r.wave_height;
    s.wind_speed = r.wind_speed;
    s.wind_rel_angle_deg = relative_wind_angle(r.wind_dir, r.heading);
    steps.push_back(s);
  }
  return steps;
}

double eff_gain(double meas, double pred) {
  if (!(meas > 0.0)) {
    throw DataError("eff_gain: measured score must be positive");
  }
  return (pred - meas) / meas * 100.0;
}

void save_fuel_model(const std::filesystem::path& path, const FuelModelCoeffs& c,
                     const std::optional<NormalizationConstants>& n) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["coeffs"] = {{"c0", c.c0}, {"c1", c.c1}, {"c2", c.c2}, {"c3", c.c3}};
  j["rmse_l_per_h"] = c.rmse;
  if (n) {
    j["normalization"] = {{"fuel_max_l", n->fuel_max_l},
                          {"time_max_h", n->time_max_h}};
  }
  atomic_write_file(path, j.dump(2) + "\n");
}

FuelModelFile load_fuel_model(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_fuel_model: " + std::string(e.what()));
  }
  FuelModelFile f;
  try {
    const auto& c = j.at("coeffs");
    f.coeffs.c0 = c.at("c0").get<double>();
    f.coeffs.c1 = c.at("c1").get<double>();
    f.coeffs.c2 = c.at("c2").get<double>();
    f.coeffs.c3 = c.at("c3").get<double>();
    f.coeffs.rmse = j.value("rmse_l_per_h", 0.0);
    if (j.contains("normalization")) {
      NormalizationConstants n;
      n.fuel_max_l = j["normalization"].at("fuel_max_l").get<double>();
      n.time_max_h = j["normalization"].at("time_max_h").get<double>();
      f.norm = n;
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_fuel_model: malformed model file: " +
                    std::string(e.what()));
  }
  return f;
}

}  // namespace voyopt
