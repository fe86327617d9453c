/**
 * @file lstm.hpp
 * @brief Single-layer LSTM with a linear head, trained by full BPTT over
 *        fixed windows with adaptive-moment updates. No external math libs;
 *        the analytic gradient is exposed so tests can difference it.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "voyopt/core.hpp"
#include "voyopt/features.hpp"

namespace voyopt {

struct LstmConfig {
  int input_dim = kFeatureDim;
  int hidden_dim = 16;
  int window = 32;  ///< BPTT window length in steps
  double learning_rate = 1e-3;
  int epochs = 50;
  double clip_norm = 1.0;  ///< global gradient-norm cap
  std::uint64_t seed = 0;
  bool train_head_only = false;  ///< freeze recurrent weights (diagnostics)
};

/// Flat parameter layout: W[4H x D], U[4H x H], b[4H], head_w[H], head_b.
/// Gate row blocks in order: input, forget, cell candidate, output.
std::size_t lstm_param_count(const LstmConfig& cfg);

/// Uniform init in [-1/sqrt(H), 1/sqrt(H)] from the seeded stream; forget
/// biases then set to exactly 1.0.
std::vector<double> init_lstm(const LstmConfig& cfg);

/**
 * @brief Forward pass over a row-major feature sequence (stride input_dim),
 *        zero initial state. Returns one output per step.
 *
 * Throws ConfigError when x is not a whole number of input rows or the
 * parameter vector has the wrong length.
 */
std::vector<double> lstm_forward(const LstmConfig& cfg,
                                 std::span<const double> params,
                                 std::span<const double> x);

/// One training window: row-major inputs plus one target per step.
struct LstmSample {
  std::vector<double> x;
  std::vector<double> y;
};

/**
 * @brief Mean-squared-error loss and its full analytic gradient for one
 *        window (full BPTT, no truncation inside the window).
 */
double lstm_loss_grad(const LstmConfig& cfg, std::span<const double> params,
                      const LstmSample& sample, std::vector<double>& grad);

/**
 * @brief Trains in place: per-window updates in fixed order, global-norm
 *        clipping, adaptive moments (0.9, 0.999, 1e-8). Returns the
 *        per-epoch mean window loss. Throws DataError on non-finite loss.
 */
std::vector<double> train_lstm(const LstmConfig& cfg,
                               std::vector<double>& params,
                               const std::vector<LstmSample>& windows);

/// Trained parameters plus the standardization frozen at training time.
struct LstmBundle {
  LstmConfig cfg;
  std::vector<double> params;
  FeatureScaler scaler;
  double sog_mean = 0.0;
  double sog_std = 1.0;
  std::vector<double> loss_curve;
};

/// Non-overlapping contiguous windows (tails of >= 2 steps kept) from the
/// standardized full sequences of the cluster voyages.
std::vector<LstmSample> make_windows(const std::vector<Voyage>& cluster,
                                     const LstmConfig& cfg,
                                     const FeatureScaler& scaler,
                                     double sog_mean, double sog_std);

/// Fits scaler and target standardization on the cluster, then trains.
LstmBundle train_lstm_bundle(const std::vector<Voyage>& cluster,
                             LstmConfig cfg);

/// Forward over the whole voyage, de-standardized and clipped.
SpeedProfile lstm_predict(const LstmBundle& b, const Voyage& v, double sog_min,
                          double sog_max);

/// Writes <path> as little-endian 64-bit floats and a .json sidecar with
/// shapes, config and standardization next to it.
void save_lstm(const std::filesystem::path& bin_path, const LstmBundle& b);
LstmBundle load_lstm(const std::filesystem::path& bin_path);

}  // namespace voyopt
