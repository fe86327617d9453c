#include "voyopt/features.hpp"

#include <algorithm>

namespace voyopt {

std::vector<FeatureVec> voyage_features(const Voyage& v) {
  const auto frac = along_track_fraction(v);
  std::vector<FeatureVec> rows;
  rows.reserve(v.records.size());
  for (std::size_t i = 0; i < v.records.size(); ++i) {
    rows.push_back(record_features(v.records[i], frac[i]));
  }
  return rows;
}

FeatureScaler fit_scaler(const std::vector<std::vector<FeatureVec>>& rows) {
  FeatureScaler s;
  std::size_t n = 0;
  for (const auto& voyage : rows) {
    for (const auto& x : voyage) {
      for (int i = 0; i < kFeatureDim; ++i) s.mean[i] += x[i];
      ++n;
    }
  }
  if (n == 0) return s;
  for (int i = 0; i < kFeatureDim; ++i) s.mean[i] /= static_cast<double>(n);
  FeatureVec var{};
  for (const auto& voyage : rows) {
    for (const auto& x : voyage) {
      for (int i = 0; i < kFeatureDim; ++i) {
        const double d = x[i] - s.mean[i];
        var[i] += d * d;
      }
    }
  }
  for (int i = 0; i < kFeatureDim; ++i) {
    s.stddev[i] = std::max(1e-9, std::sqrt(var[i] / static_cast<double>(n)));
  }
  return s;
}

}  // namespace voyopt
