#include "voyopt/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace voyopt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> zscore(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::max(1e-12, std::sqrt(var / static_cast<double>(x.size())));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / sd;
  return out;
}

// Shared DP over an arbitrary local cost. a/b sizes are passed explicitly so
// multivariate retrieval can reuse the same path structure.
template <typename Cost>
double dtw_core(std::size_t n, std::size_t m, std::optional<int> band,
                Cost cost) {
  if (n == 0 || m == 0) throw DataError("dtw_distance: empty sequence");
  if (band) {
    if (*band < 0) throw ConfigError("dtw_distance: negative band radius");
    const auto diff = n > m ? n - m : m - n;
    if (static_cast<std::size_t>(*band) < diff) {
      throw DataError("dtw_distance: band radius " + std::to_string(*band) +
                      " cannot bridge length difference " +
                      std::to_string(diff));
    }
  }
  const auto in_band = [&](std::size_t i, std::size_t j) {
    if (!band) return true;
    const auto d = i > j ? i - j : j - i;
    return d <= static_cast<std::size_t>(*band);
  };

  std::vector<double> prev(m, kInf), cur(m, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(cur.begin(), cur.end(), kInf);
    for (std::size_t j = 0; j < m; ++j) {
      if (!in_band(i, j)) continue;
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else if (i == 0) {
        best = cur[j - 1];
      } else if (j == 0) {
        best = prev[j];
      } else {
        best = std::min({prev[j], cur[j - 1], prev[j - 1]});
      }
      if (best == kInf) continue;
      cur[j] = cost(i, j) + best;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

}  // namespace

double dtw_distance(std::span<const double> a, std::span<const double> b,
                    const DtwConfig& cfg) {
  std::vector<double> an, bn;
  if (cfg.normalize_inputs) {
    if (a.empty() || b.empty()) throw DataError("dtw_distance: empty sequence");
    an = zscore(a);
    bn = zscore(b);
    a = an;
    b = bn;
  }
  return dtw_core(a.size(), b.size(), cfg.band_radius,
                  [&](std::size_t i, std::size_t j) {
                    return std::fabs(a[i] - b[j]);
                  });
}

std::vector<double> resample_linear(std::span<const double> xs,
                                    std::span<const double> ys,
                                    std::span<const double> grid) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw DataError("resample_linear: bad source lengths");
  }
  std::vector<double> out;
  out.reserve(grid.size());
  for (double g : grid) {
    if (g <= xs.front()) {
      out.push_back(ys.front());
      continue;
    }
    if (g >= xs.back()) {
      out.push_back(ys.back());
      continue;
    }
    const auto it = std::upper_bound(xs.begin(), xs.end(), g);
    const auto hi = static_cast<std::size_t>(it - xs.begin());
    const auto lo = hi - 1;
    const double span = xs[hi] - xs[lo];
    // Repeated positions (stationary dwell inside a voyage) make span 0;
    // take the left value.
    if (span <= 0.0) {
      out.push_back(ys[lo]);
      continue;
    }
    const double w = (g - xs[lo]) / span;
    out.push_back(ys[lo] * (1.0 - w) + ys[hi] * w);
  }
  return out;
}

SpeedProfile nn1_dtw_predict(const std::vector<Voyage>& cluster,
                             const Voyage& query, const DtwConfig& cfg) {
  if (cluster.empty()) throw DataError("nn1_dtw_predict: empty cluster");
  const SpeedProfile q = measured_profile(query);

  std::vector<double> q_wave;
  if (cfg.wave_channel) {
    q_wave.reserve(query.records.size());
    for (const auto& r : query.records) q_wave.push_back(r.wave_height);
  }

  const auto candidate_cost = [&](const Voyage& v,
                                  const SpeedProfile& p) -> double {
    std::vector<double> a_sog = q.sog, b_sog = p.sog;
    if (cfg.normalize_inputs) {
      a_sog = zscore(a_sog);
      b_sog = zscore(b_sog);
    }
    if (!cfg.wave_channel) {
      DtwConfig plain = cfg;
      plain.normalize_inputs = false;  // already applied above
      return dtw_distance(a_sog, b_sog, plain);
    }
    std::vector<double> b_wave;
    b_wave.reserve(v.records.size());
    for (const auto& r : v.records) b_wave.push_back(r.wave_height);
    return dtw_core(a_sog.size(), b_sog.size(), cfg.band_radius,
                    [&](std::size_t i, std::size_t j) {
                      return std::fabs(a_sog[i] - b_sog[j]) +
                             std::fabs(q_wave[i] - b_wave[j]);
                    });
  };

  const Voyage* best = nullptr;
  SpeedProfile best_profile;
  double best_cost = kInf;
  for (const auto& v : cluster) {
    if (!v.eff_score) {
      throw DataError("nn1_dtw_predict: cluster voyage " + v.id +
                      " is unscored");
    }
    SpeedProfile p = measured_profile(v);
    const double c = candidate_cost(v, p);
    bool take = false;
    if (c < best_cost) {
      take = true;
    } else if (c == best_cost && best != nullptr) {
      if (*v.eff_score > *best->eff_score) {
        take = true;
      } else if (*v.eff_score == *best->eff_score && v.id < best->id) {
        take = true;
      }
    }
    if (take) {
      best = &v;
      best_profile = std::move(p);
      best_cost = c;
    }
  }

  SpeedProfile out;
  out.voyage_id = query.id;
  out.positions = q.positions;
  out.sog = resample_linear(best_profile.positions, best_profile.sog,
                            q.positions);
  out.provenance = "1NN-DTW";
  return out;
}

}  // namespace voyopt
