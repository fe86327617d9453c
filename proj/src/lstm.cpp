#include "voyopt/lstm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "voyopt/io.hpp"
#include "voyopt/rng.hpp"

namespace voyopt {
namespace {

enum Gate { kIn = 0, kForget = 1, kCell = 2, kOut = 3 };

struct Layout {
  int D, H;
  std::size_t w_off = 0, u_off, b_off, hw_off, hb_off, total;
  explicit Layout(const LstmConfig& cfg) : D(cfg.input_dim), H(cfg.hidden_dim) {
    const std::size_t h = static_cast<std::size_t>(H);
    const std::size_t d = static_cast<std::size_t>(D);
    u_off = 4 * h * d;
    b_off = u_off + 4 * h * h;
    hw_off = b_off + 4 * h;
    hb_off = hw_off + h;
    total = hb_off + 1;
  }
  std::size_t w(int gate, int unit, int in) const {
    return w_off + (static_cast<std::size_t>(gate) * H + unit) * D + in;
  }
  std::size_t u(int gate, int unit, int from) const {
    return u_off + (static_cast<std::size_t>(gate) * H + unit) * H + from;
  }
  std::size_t b(int gate, int unit) const {
    return b_off + static_cast<std::size_t>(gate) * H + unit;
  }
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct Cache {
  // Per step: gate activations, cell state, tanh(cell), hidden, output.
  std::vector<std::vector<double>> i, f, g, o, c, tc, h;
  std::vector<double> y;
};

void check_dims(const LstmConfig& cfg, std::span<const double> params,
                std::span<const double> x) {
  if (cfg.input_dim < 1 || cfg.hidden_dim < 1) {
    throw ConfigError("lstm: dims must be >= 1");
  }
  const Layout L(cfg);
  if (params.size() != L.total) {
    throw ConfigError("lstm: parameter vector has " +
                      std::to_string(params.size()) + " entries, expected " +
                      std::to_string(L.total));
  }
  if (x.size() % static_cast<std::size_t>(cfg.input_dim) != 0 || x.empty()) {
    throw ConfigError("lstm: input is not a whole number of rows");
  }
}

Cache forward_cached(const LstmConfig& cfg, std::span<const double> params,
                     std::span<const double> x) {
  const Layout L(cfg);
  const std::size_t T = x.size() / static_cast<std::size_t>(L.D);
  const int H = L.H;
  Cache cc;
  const auto alloc = [&](std::vector<std::vector<double>>& v) {
    v.assign(T, std::vector<double>(H, 0.0));
  };
  alloc(cc.i);
  alloc(cc.f);
  alloc(cc.g);
  alloc(cc.o);
  alloc(cc.c);
  alloc(cc.tc);
  alloc(cc.h);
  cc.y.assign(T, 0.0);

  std::vector<double> h_prev(H, 0.0), c_prev(H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double* xt = x.data() + t * L.D;
    for (int u = 0; u < H; ++u) {
      double z[4];
      for (int gate = 0; gate < 4; ++gate) {
        double acc = params[L.b(gate, u)];
        for (int d = 0; d < L.D; ++d) acc += params[L.w(gate, u, d)] * xt[d];
        for (int r = 0; r < H; ++r) acc += params[L.u(gate, u, r)] * h_prev[r];
        z[gate] = acc;
      }
      cc.i[t][u] = sigmoid(z[kIn]);
      cc.f[t][u] = sigmoid(z[kForget]);
      cc.g[t][u] = std::tanh(z[kCell]);
      cc.o[t][u] = sigmoid(z[kOut]);
      cc.c[t][u] = cc.f[t][u] * c_prev[u] + cc.i[t][u] * cc.g[t][u];
      cc.tc[t][u] = std::tanh(cc.c[t][u]);
      cc.h[t][u] = cc.o[t][u] * cc.tc[t][u];
    }
    double y = params[L.hb_off];
    for (int u = 0; u < H; ++u) y += params[L.hw_off + u] * cc.h[t][u];
    cc.y[t] = y;
    h_prev = cc.h[t];
    c_prev = cc.c[t];
  }
  return cc;
}

}  // namespace

std::size_t lstm_param_count(const LstmConfig& cfg) {
  return Layout(cfg).total;
}

std::vector<double> init_lstm(const LstmConfig& cfg) {
  const Layout L(cfg);
  Rng rng = derive_rng(cfg.seed, "lstm-init");
  const double bound = 1.0 / std::sqrt(static_cast<double>(L.H));
  std::vector<double> p(L.total);
  for (auto& w : p) w = rng.uniform(-bound, bound);
  for (int u = 0; u < L.H; ++u) p[L.b(kForget, u)] = 1.0;
  return p;
}

std::vector<double> lstm_forward(const LstmConfig& cfg,
                                 std::span<const double> params,
                                 std::span<const double> x) {
  check_dims(cfg, params, x);
  return forward_cached(cfg, params, x).y;
}

double lstm_loss_grad(const LstmConfig& cfg, std::span<const double> params,
                      const LstmSample& sample, std::vector<double>& grad) {
  check_dims(cfg, params, sample.x);
  const Layout L(cfg);
  const std::size_t T = sample.x.size() / static_cast<std::size_t>(L.D);
  if (sample.y.size() != T) {
    throw ConfigError("lstm: target count does not match input rows");
  }
  const Cache cc = forward_cached(cfg, params, sample.x);
  const int H = L.H;

  grad.assign(L.total, 0.0);
  double loss = 0.0;
  std::vector<double> dy(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double e = cc.y[t] - sample.y[t];
    loss += e * e;
    dy[t] = 2.0 * e / static_cast<double>(T);
  }
  loss /= static_cast<double>(T);

  // dh_carry/dc_carry hold the gradients flowing in from step t+1.
  const std::vector<double> zeros(H, 0.0);
  std::vector<double> dh(H, 0.0), dc(H, 0.0);
  std::vector<double> dh_carry(H, 0.0), dc_carry(H, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    const double* xt = sample.x.data() + t * L.D;
    const std::vector<double>& h_prev = t > 0 ? cc.h[t - 1] : zeros;
    const std::vector<double>& c_prev = t > 0 ? cc.c[t - 1] : zeros;

    grad[L.hb_off] += dy[t];
    for (int u = 0; u < H; ++u) {
      grad[L.hw_off + u] += dy[t] * cc.h[t][u];
      dh[u] = dy[t] * params[L.hw_off + u] + dh_carry[u];
    }
    std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
    for (int u = 0; u < H; ++u) {
      const double i_ = cc.i[t][u], f_ = cc.f[t][u], g_ = cc.g[t][u],
                   o_ = cc.o[t][u], tc_ = cc.tc[t][u];
      dc[u] = dh[u] * o_ * (1.0 - tc_ * tc_) + dc_carry[u];

      double dz[4];
      dz[kIn] = dc[u] * g_ * i_ * (1.0 - i_);
      dz[kForget] = dc[u] * c_prev[u] * f_ * (1.0 - f_);
      dz[kCell] = dc[u] * i_ * (1.0 - g_ * g_);
      dz[kOut] = dh[u] * tc_ * o_ * (1.0 - o_);

      for (int gate = 0; gate < 4; ++gate) {
        grad[L.b(gate, u)] += dz[gate];
        for (int d = 0; d < L.D; ++d) {
          grad[L.w(gate, u, d)] += dz[gate] * xt[d];
        }
        for (int r = 0; r < H; ++r) {
          grad[L.u(gate, u, r)] += dz[gate] * h_prev[r];
          dh_carry[r] += dz[gate] * params[L.u(gate, u, r)];
        }
      }
      dc_carry[u] = dc[u] * f_;
    }
  }
  return loss;
}

std::vector<double> train_lstm(const LstmConfig& cfg,
                               std::vector<double>& params,
                               const std::vector<LstmSample>& windows) {
  if (windows.empty()) throw DataError("train_lstm: no training windows");
  const Layout L(cfg);
  if (params.size() != L.total) {
    throw ConfigError("train_lstm: bad parameter vector length");
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::vector<double> m(L.total, 0.0), v(L.total, 0.0), grad;
  std::vector<double> curve;
  curve.reserve(cfg.epochs);
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (const auto& w : windows) {
      const double loss = lstm_loss_grad(cfg, params, w, grad);
      if (!std::isfinite(loss)) {
        throw DataError("train_lstm: non-finite loss at epoch " +
                        std::to_string(epoch));
      }
      epoch_loss += loss;
      if (cfg.train_head_only) {
        std::fill(grad.begin(), grad.begin() + static_cast<long>(L.hw_off),
                  0.0);
      }
      double norm2 = 0.0;
      for (double g : grad) norm2 += g * g;
      const double norm = std::sqrt(norm2);
      if (norm > cfg.clip_norm) {
        const double s = cfg.clip_norm / norm;
        for (double& g : grad) g *= s;
      }
      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t j = 0; j < L.total; ++j) {
        m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * grad[j];
        v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * grad[j] * grad[j];
        const double mh = m[j] / bc1;
        const double vh = v[j] / bc2;
        params[j] -= cfg.learning_rate * mh / (std::sqrt(vh) + kEps);
      }
    }
    curve.push_back(epoch_loss / static_cast<double>(windows.size()));
  }
  return curve;
}

std::vector<LstmSample> make_windows(const std::vector<Voyage>& cluster,
                                     const LstmConfig& cfg,
                                     const FeatureScaler& scaler,
                                     double sog_mean, double sog_std) {
  if (cfg.window < 2) throw ConfigError("make_windows: window must be >= 2");
  std::vector<LstmSample> out;
  for (const auto& v : cluster) {
    const auto feats = voyage_features(v);
    const std::size_t n = feats.size();
    for (std::size_t start = 0; start < n; start += cfg.window) {
      const std::size_t len = std::min<std::size_t>(cfg.window, n - start);
      if (len < 2) break;  // drop 1-step tails
      LstmSample s;
      s.x.reserve(len * kFeatureDim);
      s.y.reserve(len);
      for (std::size_t t = start; t < start + len; ++t) {
        const FeatureVec z = apply_scaler(feats[t], scaler);
        s.x.insert(s.x.end(), z.begin(), z.end());
        s.y.push_back((v.records[t].sog - sog_mean) / sog_std);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

LstmBundle train_lstm_bundle(const std::vector<Voyage>& cluster,
                             LstmConfig cfg) {
  if (cluster.empty()) throw DataError("train_lstm_bundle: empty cluster");
  cfg.input_dim = kFeatureDim;
  LstmBundle b;
  b.cfg = cfg;

  std::vector<std::vector<FeatureVec>> rows;
  rows.reserve(cluster.size());
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : cluster) {
    rows.push_back(voyage_features(v));
    for (const auto& r : v.records) {
      sum += r.sog;
      ++n;
    }
  }
  b.scaler = fit_scaler(rows);
  b.sog_mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (const auto& v : cluster) {
    for (const auto& r : v.records) {
      var += (r.sog - b.sog_mean) * (r.sog - b.sog_mean);
    }
  }
  b.sog_std = std::max(1e-9, std::sqrt(var / static_cast<double>(n)));

  const auto windows = make_windows(cluster, cfg, b.scaler, b.sog_mean,
                                    b.sog_std);
  b.params = init_lstm(cfg);
  b.loss_curve = train_lstm(cfg, b.params, windows);
  return b;
}

SpeedProfile lstm_predict(const LstmBundle& b, const Voyage& v, double sog_min,
                          double sog_max) {
  const auto feats = voyage_features(v);
  std::vector<double> x;
  x.reserve(feats.size() * kFeatureDim);
  for (const auto& f : feats) {
    const FeatureVec z = apply_scaler(f, b.scaler);
    x.insert(x.end(), z.begin(), z.end());
  }
  const auto y = lstm_forward(b.cfg, b.params, x);
  SpeedProfile p;
  p.voyage_id = v.id;
  p.positions = along_track_fraction(v);
  p.provenance = "LSTM";
  p.sog.reserve(y.size());
  for (double z : y) {
    p.sog.push_back(std::clamp(z * b.sog_std + b.sog_mean, sog_min, sog_max));
  }
  return p;
}

void save_lstm(const std::filesystem::path& bin_path, const LstmBundle& b) {
  std::string bytes;
  bytes.reserve(b.params.size() * 8);
  for (double d : b.params) {
    const auto u = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) {
      bytes.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
    }
  }
  atomic_write_file(bin_path, bytes);

  nlohmann::json j;
  j["schema_version"] = 1;
  j["param_count"] = b.params.size();
  j["config"] = {{"input_dim", b.cfg.input_dim},
                 {"hidden_dim", b.cfg.hidden_dim},
                 {"window", b.cfg.window},
                 {"learning_rate", b.cfg.learning_rate},
                 {"epochs", b.cfg.epochs},
                 {"clip_norm", b.cfg.clip_norm},
                 {"seed", b.cfg.seed}};
  j["feature_scaler"] = {{"mean", b.scaler.mean}, {"stddev", b.scaler.stddev}};
  j["target"] = {{"mean", b.sog_mean}, {"stddev", b.sog_std}};
  j["loss_curve"] = b.loss_curve;
  auto sidecar = bin_path;
  sidecar.replace_extension(".json");
  atomic_write_file(sidecar, j.dump(2) + "\n");
}

LstmBundle load_lstm(const std::filesystem::path& bin_path) {
  auto sidecar = bin_path;
  sidecar.replace_extension(".json");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(sidecar));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_lstm: " + std::string(e.what()));
  }
  LstmBundle b;
  try {
    const auto& c = j.at("config");
    b.cfg.input_dim = c.at("input_dim").get<int>();
    b.cfg.hidden_dim = c.at("hidden_dim").get<int>();
    b.cfg.window = c.at("window").get<int>();
    b.cfg.learning_rate = c.at("learning_rate").get<double>();
    b.cfg.epochs = c.at("epochs").get<int>();
    b.cfg.clip_norm = c.at("clip_norm").get<double>();
    b.cfg.seed = c.at("seed").get<std::uint64_t>();
    b.scaler.mean = j.at("feature_scaler").at("mean").get<FeatureVec>();
    b.scaler.stddev = j.at("feature_scaler").at("stddev").get<FeatureVec>();
    b.sog_mean = j.at("target").at("mean").get<double>();
    b.sog_std = j.at("target").at("stddev").get<double>();
    if (j.contains("loss_curve")) {
      b.loss_curve = j["loss_curve"].get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_lstm: malformed sidecar: " + std::string(e.what()));
  }

  const std::string bytes = read_file(bin_path);
  const std::size_t expect = lstm_param_count(b.cfg);
  if (bytes.size() != expect * 8 ||
      bytes.size() != j.at("param_count").get<std::size_t>() * 8) {
    throw DataError("load_lstm: parameter file size mismatch");
  }
  b.params.resize(expect);
  for (std::size_t k = 0; k < expect; ++k) {
    std::uint64_t u = 0;
    for (int i = 7; i >= 0; --i) {
      u = (u << 8) |
          static_cast<std::uint8_t>(bytes[k * 8 + static_cast<std::size_t>(i)]);
    }
    b.params[k] = std::bit_cast<double>(u);
  }
  return b;
}

}  // namespace voyopt
