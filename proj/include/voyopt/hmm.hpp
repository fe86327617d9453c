/**
 * @file hmm.hpp
 * @brief Three-state Gaussian hidden Markov model over weather observations,
 *        with the state-conditional speed policy built on top of it.
 */
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "voyopt/core.hpp"

namespace voyopt {

inline constexpr int kHmmStates = 3;

/// One observation: (wave_height m, wind_speed m/s).
using HmmObs = std::array<double, 2>;

struct HmmModel {
  std::array<double, kHmmStates> pi{};
  std::array<std::array<double, kHmmStates>, kHmmStates> trans{};
  /// Diagonal Gaussian emissions; states ordered by ascending wave mean, so
  /// index 0 reads as Calm, 1 Moderate, 2 Rough.
  std::array<HmmObs, kHmmStates> mean{};
  std::array<HmmObs, kHmmStates> var{};
  bool degenerate = false;  ///< all-identical training data hit the variance floor
};

inline constexpr double kVarianceFloor = 1e-6;

/// (wave_height, wind_speed) series of one voyage, record order preserved.
std::vector<HmmObs> voyage_observations(const Voyage& v);

/// Observation sequences for a set of voyages.
std::vector<std::vector<HmmObs>> weather_observations(
    const std::vector<Voyage>& voyages);

/**
 * @brief Baum-Welch fit with scaled forward-backward.
 *
 * Initialization is by wave-height terciles; `seed` drives the jitter of the
 * four extra starts (best of 5 final log-likelihoods wins, first on ties).
 * Stops when the log-likelihood improves by less than tol or at max_iter.
 * States are relabeled by ascending wave mean before returning. Requires at
 * least 3 sequences of length >= 3. `trace`, when given, receives the
 * per-iteration training log-likelihood of each start.
 */
HmmModel fit_hmm(const std::vector<std::vector<HmmObs>>& seqs,
                 std::uint64_t seed, int max_iter = 100, double tol = 1e-6,
                 std::vector<std::vector<double>>* trace = nullptr);

/// Scaled forward algorithm; exact in log space. Returns -inf if the model
/// assigns the sequence zero density.
double forward_loglik(const HmmModel& m, std::span<const HmmObs> obs);

/// Most probable state path; ties break toward the lower state index.
std::vector<int> viterbi(const HmmModel& m, std::span<const HmmObs> obs);

struct PolicyCell {
  double min_sog = 0.0;
  double mean_sog = 0.0;
  double max_sog = 0.0;
  std::size_t count = 0;
};

/**
 * @brief Per (along-track bin, state) speed statistics of a training cluster.
 *
 * The prediction rule reads the max in Calm, the mean in Moderate and the
 * min in Rough. Empty cells fall back to the state-wide statistic, then to
 * the cluster-wide one.
 */
struct SpeedPolicy {
  int n_bins = 20;
  std::vector<std::array<PolicyCell, kHmmStates>> cells;  ///< [bin][state]
  std::array<PolicyCell, kHmmStates> state_fallback{};
  PolicyCell global_fallback{};
};

/**
 * @brief Decodes every cluster voyage and accumulates Cruising-mode sog
 *        statistics per (bin, decoded state).
 *
 * Throws DataError on an empty cluster or one without cruising records.
 */
SpeedPolicy build_speed_policy(const std::vector<Voyage>& cluster,
                               const HmmModel& m, int n_bins = 20);

/// Along-track fraction to bin index; frac 1.0 lands in the last bin.
int policy_bin(double frac, int n_bins);

/// Policy speed for one (bin, state) under the min/mean/max rule.
double policy_speed(const SpeedPolicy& p, int bin, int state);

/// Decode the test voyage's weather, then emit the per-step policy speed,
/// clipped to [sog_min, sog_max].
SpeedProfile hmm_predict(const HmmModel& m, const SpeedPolicy& p,
                         const Voyage& v, double sog_min, double sog_max);

void save_hmm(const std::filesystem::path& path, const HmmModel& m,
              const SpeedPolicy& p);
struct HmmFile {
  HmmModel model;
  SpeedPolicy policy;
};
HmmFile load_hmm(const std::filesystem::path& path);

}  // namespace voyopt
