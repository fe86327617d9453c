#include "voyopt/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "voyopt/io.hpp"

namespace voyopt {
namespace {

FeatureVec standardize(const KnnModel& m, const FeatureVec& x) {
  FeatureVec out{};
  for (int i = 0; i < kFeatureDim; ++i) {
    out[i] = m.used[i] ? (x[i] - m.mean[i]) / m.stddev[i] : 0.0;
  }
  return out;
}

bool is_cruising(const Record& r) {
  if (!r.speed_mode) {
    throw DataError("knn: record lacks a speed-mode annotation");
  }
  return *r.speed_mode == SpeedMode::Cruising;
}

}  // namespace

KnnModel build_knn(const std::vector<Voyage>& cluster, int k) {
  if (cluster.empty()) throw DataError("build_knn: empty cluster");
  if (k < 1) throw ConfigError("build_knn: k must be >= 1");

  std::vector<FeatureVec> raw;
  std::vector<double> targets;
  for (const auto& v : cluster) {
    const auto feats = voyage_features(v);
    for (std::size_t i = 0; i < v.records.size(); ++i) {
      if (!is_cruising(v.records[i])) continue;
      raw.push_back(feats[i]);
      targets.push_back(v.records[i].sog);
    }
  }
  if (raw.size() < static_cast<std::size_t>(k)) {
    throw DataError("build_knn: " + std::to_string(raw.size()) +
                    " cruising records < k=" + std::to_string(k));
  }

  KnnModel m;
  m.k = k;
  m.targets = std::move(targets);
  const double n = static_cast<double>(raw.size());
  for (int f = 0; f < kFeatureDim; ++f) {
    double mean = 0.0;
    for (const auto& x : raw) mean += x[f];
    mean /= n;
    double var = 0.0;
    for (const auto& x : raw) var += (x[f] - mean) * (x[f] - mean);
    const double sd = std::sqrt(var / n);
    m.mean[f] = mean;
    m.used[f] = sd > 1e-12;
    m.stddev[f] = m.used[f] ? sd : 1.0;
  }
  m.rows.reserve(raw.size());
  for (const auto& x : raw) m.rows.push_back(standardize(m, x));
  return m;
}

double knn_predict(const KnnModel& m, const FeatureVec& query) {
  const FeatureVec q = standardize(m, query);
  struct Cand {
    double d2;
    std::size_t idx;
  };
  std::vector<Cand> cands;
  cands.reserve(m.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    double d2 = 0.0;
    for (int f = 0; f < kFeatureDim; ++f) {
      if (!m.used[f]) continue;
      const double d = m.rows[i][f] - q[f];
      d2 += d * d;
    }
    cands.push_back({d2, i});
  }
  const auto k = std::min<std::size_t>(m.k, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<long>(k),
                    cands.end(), [](const Cand& a, const Cand& b) {
                      if (a.d2 != b.d2) return a.d2 < b.d2;
                      return a.idx < b.idx;
                    });
  // Sum in training-row order so the result is bit-stable under reordering
  // of equidistant neighbors.
  std::vector<std::size_t> picked;
  picked.reserve(k);
  for (std::size_t i = 0; i < k; ++i) picked.push_back(cands[i].idx);
  std::sort(picked.begin(), picked.end());
  double acc = 0.0;
  for (std::size_t idx : picked) acc += m.targets[idx];
  return acc / static_cast<double>(k);
}

int select_k(const KnnModel& m, const std::vector<int>& candidates,
             const std::vector<Voyage>& validation) {
  if (candidates.empty()) throw ConfigError("select_k: no candidates");
  double best_rmse = 0.0;
  int best_k = 0;
  for (int k : candidates) {
    if (k < 1 || static_cast<std::size_t>(k) > m.rows.size()) continue;
    KnnModel probe = m;
    probe.k = k;
    double sse = 0.0;
    std::size_t n = 0;
    for (const auto& v : validation) {
      const auto feats = voyage_features(v);
      for (std::size_t i = 0; i < v.records.size(); ++i) {
        if (!is_cruising(v.records[i])) continue;
        const double pred = knn_predict(probe, feats[i]);
        const double e = pred - v.records[i].sog;
        sse += e * e;
        ++n;
      }
    }
    if (n == 0) throw DataError("select_k: validation set has no cruising records");
    const double rmse = std::sqrt(sse / static_cast<double>(n));
    if (best_k == 0 || rmse < best_rmse) {
      best_rmse = rmse;
      best_k = k;
    }
  }
  if (best_k == 0) throw ConfigError("select_k: no feasible candidate k");
  return best_k;
}

SpeedProfile knn_predict_profile(const KnnModel& m, const Voyage& v,
                                 double sog_min, double sog_max) {
  SpeedProfile p;
  p.voyage_id = v.id;
  p.positions = along_track_fraction(v);
  p.provenance = "KNN";
  const auto feats = voyage_features(v);
  p.sog.reserve(feats.size());
  for (const auto& f : feats) {
    p.sog.push_back(std::clamp(knn_predict(m, f), sog_min, sog_max));
  }
  return p;
}

void save_knn(const std::filesystem::path& path, const KnnModel& m) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["k"] = m.k;
  j["mean"] = m.mean;
  j["stddev"] = m.stddev;
  j["used"] = m.used;
  j["targets"] = m.targets;
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& r : m.rows) rows.push_back(r);
  atomic_write_file(path, j.dump() + "\n");
}

KnnModel load_knn(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_knn: " + std::string(e.what()));
  }
  KnnModel m;
  try {
    m.k = j.at("k").get<int>();
    m.mean = j.at("mean").get<FeatureVec>();
    m.stddev = j.at("stddev").get<FeatureVec>();
    m.used = j.at("used").get<std::array<bool, kFeatureDim>>();
    m.targets = j.at("targets").get<std::vector<double>>();
    for (const auto& r : j.at("rows")) m.rows.push_back(r.get<FeatureVec>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_knn: malformed model file: " + std::string(e.what()));
  }
  if (m.rows.size() != m.targets.size()) {
    throw DataError("load_knn: row/target count mismatch");
  }
  return m;
}

}  // namespace voyopt
