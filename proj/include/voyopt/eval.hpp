/**
 * @file eval.hpp
 * @brief Experiment orchestration: split, per-cluster model training, test
 *        voyage optimization, gain tables and report files.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voyopt/clustering.hpp"
#include "voyopt/dtw.hpp"
#include "voyopt/efficiency.hpp"
#include "voyopt/knn.hpp"
#include "voyopt/lstm.hpp"
#include "voyopt/weather.hpp"

namespace voyopt {

/// Model names in report column order. Identity is the fairness baseline:
/// it returns the measured profile and must gain exactly 0.
inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"Identity", "LSTM", "KNN",
                                                 "1NN-DTW", "HMM"};
  return names;
}

struct ExperimentConfig {
  double train_fraction = 0.7;  ///< split by voyage, seeded
  double arrival_slack = 0.05;  ///< max relative voyage-time increase
  double sog_min = 0.5;
  double sog_max = 12.0;
  std::uint64_t seed = 42;
  int jobs = 1;  ///< worker threads across (cluster, model) cells
  int profile_plots = 3;  ///< how many test voyages get profile SVGs

  LstmConfig lstm;
  DtwConfig dtw;
  std::vector<int> knn_grid = {1, 3, 5, 9, 15, 25};
  int hmm_bins = 20;
  int hmm_max_iter = 100;
  double hmm_tol = 1e-6;
};

struct GainCell {
  bool ok = true;
  std::string error;  ///< set when the cell's model failed; cell is flagged
  double mean_gain_pct = 0.0;
  std::size_t improved = 0;
  std::size_t tested = 0;
  std::size_t defined = 0;  ///< gains with a positive measured score
};

struct GainAverage {
  double mean_gain_pct = 0.0;
  double improved_avg = 0.0;
  double tested_avg = 0.0;
};

struct GainTable {
  std::vector<std::string> clusters;
  std::vector<std::string> models;
  std::vector<std::vector<GainCell>> cells;  ///< [cluster][model]
  std::vector<GainAverage> averages;         ///< per model over clusters
};

struct BreakdownCell {
  double mean_gain_pct = 0.0;
  double std_gain_pct = 0.0;  ///< population standard deviation
  std::size_t n_voyages = 0;
};

/// Per (model, threshold weather state), pooled over the four clusters.
/// Absent cells (no voyages in that state) hold nullopt.
struct WeatherBreakdownTable {
  std::vector<std::string> models;
  std::vector<std::optional<BreakdownCell>> cells;  ///< [model*3 + state]
};

struct ProfilePlot {
  std::string voyage_id;
  SpeedProfile measured;
  std::vector<SpeedProfile> predicted;  ///< one per non-identity model
};

struct ExperimentResult {
  GainTable gains;
  WeatherBreakdownTable breakdown;
  std::vector<EvaluationRecord> records;  ///< ordered (cluster, model, voyage)
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  ClusterSet clusters;
  FuelModelCoeffs coeffs;
  NormalizationConstants norm;
  std::vector<ProfilePlot> plots;
};

/// Deterministic seeded split of voyage ids; train gets
/// round(train_fraction * N), at least 1 on each side.
void split_voyages(const std::vector<std::string>& ids, double train_fraction,
                   std::uint64_t seed, std::vector<std::string>& train,
                   std::vector<std::string>& test);

struct ConstraintOutcome {
  std::vector<double> sog;
  bool constrained = false;  ///< speeds were scaled to meet the deadline
  bool feasible = true;      ///< false: even top speed misses the deadline
};

/**
 * @brief Enforces predicted voyage time <= measured time * (1 + slack) by
 *        uniformly scaling the cruising-leg speeds (clamped to the sog
 *        bounds). Maneuvering legs are never touched.
 */
ConstraintOutcome enforce_arrival_constraint(
    std::span<const double> pred_sog, std::span<const ProfileStep> steps,
    const std::vector<bool>& cruising_leg, double measured_time_h,
    double slack, double sog_min, double sog_max);

/// Modal per-record threshold label of a voyage; ties pick the rougher state.
WeatherState dominant_weather_state(const Voyage& v,
                                    const WeatherThresholds& th);

/**
 * @brief Runs the full experiment on a fused, annotated corpus.
 *
 * Splits by voyage first, calibrates (unless fixed coefficients are given)
 * and normalizes on the training split only, clusters the training voyages,
 * then trains every model per cluster and optimizes every test voyage.
 * Per-cell failures are recorded in the gain table and the run continues.
 */
ExperimentResult run_experiment(const std::vector<Voyage>& corpus,
                                const ExperimentConfig& cfg,
                                const WeatherThresholds& thresholds,
                                const FuelModelCoeffs* fixed_coeffs = nullptr);

/// Mean/std of defined gains per (model, state), pooled over clusters.
WeatherBreakdownTable weather_breakdown(
    const std::vector<EvaluationRecord>& records);

/// Rebuilds the gain table (cells and averages) from evaluation records,
/// e.g. when regenerating reports from a saved records file.
GainTable gain_table_from_records(const std::vector<EvaluationRecord>& records);

/// Builds the cluster's regression store, choosing k on a seeded holdout of
/// the cluster voyages (k = 1 when the cluster is too small to hold out).
KnnModel build_cluster_knn(const std::vector<Voyage>& cluster,
                           const std::vector<int>& k_grid, std::uint64_t seed,
                           std::size_t cluster_idx);

/// Writes gain_table.csv, weather_breakdown.csv, records.csv, profile SVGs
/// and per-model sorted-gain SVGs into outdir.
void emit_reports(const ExperimentResult& result,
                  const std::filesystem::path& outdir);

}  // namespace voyopt
