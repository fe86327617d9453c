/**
 * @file knn.hpp
 * @brief Exhaustive k-nearest-neighbor regression of per-step SOG.
 */
#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "voyopt/core.hpp"
#include "voyopt/features.hpp"

namespace voyopt {

struct KnnModel {
  std::vector<FeatureVec> rows;  ///< standardized; dropped features hold 0
  std::vector<double> targets;   ///< measured sog per row, m/s
  FeatureVec mean{};
  FeatureVec stddev{};
  std::array<bool, kFeatureDim> used{};  ///< zero-variance features dropped
  int k = 1;
};

/**
 * @brief Builds the training store from the Cruising-mode records of a
 *        cluster.
 *
 * Features are standardized per column; zero-variance columns are dropped and
 * recorded in `used`. Throws DataError on an empty cluster, records without a
 * speed-mode annotation, or fewer than k usable records.
 */
KnnModel build_knn(const std::vector<Voyage>& cluster, int k = 1);

/// Mean sog of the k nearest rows by Euclidean distance in standardized
/// space; distance ties break by training-row index.
double knn_predict(const KnnModel& m, const FeatureVec& query);

/**
 * @brief Picks the candidate k with minimal RMSE of predicted vs. measured
 *        sog over the validation voyages' Cruising records; ties take the
 *        smallest k.
 */
int select_k(const KnnModel& m, const std::vector<int>& candidates,
             const std::vector<Voyage>& validation);

/// Full profile prediction for a voyage: per-record regression, clipped.
SpeedProfile knn_predict_profile(const KnnModel& m, const Voyage& v,
                                 double sog_min, double sog_max);

void save_knn(const std::filesystem::path& path, const KnnModel& m);
KnnModel load_knn(const std::filesystem::path& path);

/// Default candidate grid for select_k.
inline const std::vector<int>& default_k_grid() {
  static const std::vector<int> g = {1, 3, 5, 9, 15, 25};
  return g;
}

}  // namespace voyopt
