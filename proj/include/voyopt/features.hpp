/**
 * @file features.hpp
 * @brief Per-record feature vectors shared by the regression models.
 */
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "voyopt/core.hpp"

namespace voyopt {

inline constexpr int kFeatureDim = 6;
using FeatureVec = std::array<double, kFeatureDim>;

/// Per-feature affine scaling fit on the training corpus.
struct FeatureScaler {
  FeatureVec mean{};
  FeatureVec stddev{};  ///< floored at 1e-9 so constant features stay finite
};

/**
 * @brief Features for record i of a voyage:
 *        [route fraction, wave height, wind speed,
 *         cos/sin of relative wind angle, along-track current].
 *
 * frac is the cumulative-distance fraction from along_track_fraction.
 */
inline FeatureVec record_features(const Record& r, double frac) {
  const double rel = deg2rad(relative_wind_angle(r.wind_dir, r.heading));
  return {frac,
          r.wave_height,
          r.wind_speed,
          std::cos(rel),
          std::sin(rel),
          current_along_component(r.current_speed, r.current_dir, r.heading)};
}

/// Feature rows for every record of a voyage, in record order.
std::vector<FeatureVec> voyage_features(const Voyage& v);

/// Mean/stddev over a set of rows; stddev floored at 1e-9.
FeatureScaler fit_scaler(const std::vector<std::vector<FeatureVec>>& rows);

inline FeatureVec apply_scaler(const FeatureVec& x, const FeatureScaler& s) {
  FeatureVec out;
  for (int i = 0; i < kFeatureDim; ++i) {
    out[i] = (x[i] - s.mean[i]) / s.stddev[i];
  }
  return out;
}

}  // namespace voyopt
