/**
 * @file efficiency.hpp
 * @brief Voyage efficiency scoring: surrogate fuel-rate model, voyage totals,
 *        max-normalized Eff-Score, profile efficiency estimation and gains.
 */
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voyopt/core.hpp"

namespace voyopt {

/**
 * @brief Coefficients of the four-term fuel-rate surrogate, liters/hour:
 *        c0 + c1*sog^3 + c2*wave*sog^2 + c3*headwind*sog^2.
 */
struct FuelModelCoeffs {
  double c0 = 0.0;  ///< baseline L/h
  double c1 = 0.0;  ///< L/h per (m/s)^3
  double c2 = 0.0;  ///< L/h per m*(m/s)^2 wave term
  double c3 = 0.0;  ///< L/h per (m/s)*(m/s)^2 headwind term
  double rmse = 0.0;  ///< fit residual, L/h; 0 when coefficients are fixed
};

/// Corpus maxima used to normalize voyage totals; frozen on the training split.
struct NormalizationConstants {
  double fuel_max_l = 0.0;
  double time_max_h = 0.0;
};

/// One (test voyage, cluster, model) evaluation outcome.
struct EvaluationRecord {
  std::string voyage_id;
  std::string cluster;
  std::string model;
  double eff_meas = 0.0;
  double eff_pred = 0.0;
  double gain_pct = 0.0;
  WeatherState weather_state = WeatherState::Calm;
  bool constrained = false;  ///< arrival-time constraint was enforced
  bool gain_defined = true;  ///< false when eff_meas <= 0
};

/// Surrogate fuel rate, clamped at 0. wind_rel_angle of 0 degrees means a
/// dead headwind (see relative_wind_angle).
double fuel_rate_model(double sog, double wave_height, double wind_speed,
                       double wind_rel_angle_deg, const FuelModelCoeffs& c);

/**
 * @brief Least-squares fit of the four surrogate coefficients against
 *        measured per-record fuel rates.
 *
 * Uses all records of the given voyages. Throws DataError for rank-deficient
 * designs (e.g. constant-speed corpora) or fewer than 100 records.
 */
FuelModelCoeffs calibrate_fuel_model(const std::vector<Voyage>& voyages);

/// Totals from measured records: left-Riemann fuel integral, elapsed time,
/// summed haversine legs.
VoyageTotals voyage_totals(const Voyage& v);

/**
 * @brief Eq.-style efficiency score: 1 minus the harmonic mean of the
 *        normalized totals.
 *
 * Inputs must be positive; values above 1 are allowed (profiles worse than
 * the worst training voyage score negative).
 */
double eff_score(double fuel_nm, double time_nm);

/**
 * @brief Computes totals and Eff-Scores for a corpus.
 *
 * Normalization constants are the corpus maxima; every voyage gets totals and
 * eff_score filled in. Throws DataError on an empty corpus.
 */
NormalizationConstants score_corpus(std::vector<Voyage>& voyages);

/// Weather and geometry for one leg of a profile, fixed across speed what-ifs.
struct ProfileStep {
  double distance_m = 0.0;
  double wave_height = 0.0;
  double wind_speed = 0.0;
  double wind_rel_angle_deg = 0.0;
};

struct ProfileEstimate {
  double fuel_l = 0.0;
  double time_h = 0.0;
  double eff = 0.0;
};

/**
 * @brief Estimates fuel, time and Eff-Score for a speed assignment over fixed
 *        legs. Measured and predicted profiles both pass through this same
 *        estimator.
 *
 * sog[i] applies to steps[i]; per-step time is distance/sog. Throws DataError
 * if any sog or distance is non-positive or the lengths differ.
 */
ProfileEstimate estimate_profile_efficiency(std::span<const double> sog,
                                            std::span<const ProfileStep> steps,
                                            const FuelModelCoeffs& c,
                                            const NormalizationConstants& n);

/// Legs of a measured voyage (records 0..n-2) for estimate_profile_efficiency.
std::vector<ProfileStep> profile_steps(const Voyage& v);

/// Relative Eff-Score gain in percent. Throws DataError when meas <= 0.
double eff_gain(double meas, double pred);

/// Serializes coefficients plus optional normalization constants.
void save_fuel_model(const std::filesystem::path& path, const FuelModelCoeffs& c,
                     const std::optional<NormalizationConstants>& n);

struct FuelModelFile {
  FuelModelCoeffs coeffs;
  std::optional<NormalizationConstants> norm;
};

FuelModelFile load_fuel_model(const std::filesystem::path& path);

}  // namespace voyopt
