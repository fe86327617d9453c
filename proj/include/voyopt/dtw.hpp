/**
 * @file dtw.hpp
 * @brief Dynamic-time-warping distance and nearest-neighbor profile retrieval.
 */
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "voyopt/core.hpp"

namespace voyopt {

struct DtwConfig {
  /// Sakoe-Chiba band half-width in steps; unset means unbanded.
  std::optional<int> band_radius;
  /// z-score each sequence before matching (off: absolute speed level is
  /// the efficiency-relevant signal on a shared route).
  bool normalize_inputs = false;
  /// Retrieval only: add |delta wave_height| to the local cost, weight 1.
  bool wave_channel = false;
};

/**
 * @brief Cumulative warping cost with absolute-difference local cost.
 *
 * D(i,j) = |a_i - b_j| + min(D(i-1,j), D(i,j-1), D(i-1,j-1)),
 * D(1,1) = |a_1 - b_1|; returns D(n,m). Throws DataError for empty input or a
 * band too narrow for the length difference.
 */
double dtw_distance(std::span<const double> a, std::span<const double> b,
                    const DtwConfig& cfg = {});

/**
 * @brief Retrieves the cluster profile most similar to the query voyage's
 *        measured speed profile, warped onto the query's position grid.
 *
 * Distance ties prefer the higher-scoring voyage, then the smaller id. The
 * caller must keep the query out of the cluster. Throws DataError on an
 * empty cluster or unscored cluster voyages.
 */
SpeedProfile nn1_dtw_predict(const std::vector<Voyage>& cluster,
                             const Voyage& query, const DtwConfig& cfg = {});

/// Piecewise-linear resample of (xs, ys) onto grid; clamps outside [xs front,
/// xs back]. xs must be non-decreasing. Shared by profile alignment code.
std::vector<double> resample_linear(std::span<const double> xs,
                                    std::span<const double> ys,
                                    std::span<const double> grid);

}  // namespace voyopt
