#include "voyopt/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "json.hpp"
#include "voyopt/io.hpp"
#include "voyopt/rng.hpp"

namespace voyopt {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Emission floor used only inside EM so a stray observation cannot zero out
// an entire E-step; the public forward_loglik stays exact.
constexpr double kEmissionFloor = 1e-300;

double gauss_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(kTwoPi * var);
}

double log_gauss_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(kTwoPi * var) + d * d / var);
}

double emission(const HmmModel& m, int s, const HmmObs& o) {
  return gauss_pdf(o[0], m.mean[s][0], m.var[s][0]) *
         gauss_pdf(o[1], m.mean[s][1], m.var[s][1]);
}

double log_emission(const HmmModel& m, int s, const HmmObs& o) {
  return log_gauss_pdf(o[0], m.mean[s][0], m.var[s][0]) +
         log_gauss_pdf(o[1], m.mean[s][1], m.var[s][1]);
}

struct ForwardBackward {
  // alpha/beta are scaled per Rabiner; scale[t] is the forward normalizer.
  std::vector<std::array<double, kHmmStates>> alpha, beta;
  std::vector<double> scale;
  double loglik = 0.0;
};

// floor_emissions guards EM accumulation; exact evaluation passes false.
ForwardBackward forward_backward(const HmmModel& m,
                                 std::span<const HmmObs> obs,
                                 bool floor_emissions) {
  const std::size_t T = obs.size();
  ForwardBackward fb;
  fb.alpha.resize(T);
  fb.beta.resize(T);
  fb.scale.resize(T);

  std::vector<std::array<double, kHmmStates>> b(T);
  for (std::size_t t = 0; t < T; ++t) {
    for (int s = 0; s < kHmmStates; ++s) {
      double e = emission(m, s, obs[t]);
      if (floor_emissions && e < kEmissionFloor) e = kEmissionFloor;
      b[t][s] = e;
    }
  }

  for (int s = 0; s < kHmmStates; ++s) fb.alpha[0][s] = m.pi[s] * b[0][s];
  for (std::size_t t = 1; t <= T; ++t) {
    auto& cur = fb.alpha[t - 1];
    double sum = 0.0;
    for (int s = 0; s < kHmmStates; ++s) sum += cur[s];
    fb.scale[t - 1] = sum;
    if (sum <= 0.0) {
      fb.loglik = kNegInf;
      return fb;
    }
    for (int s = 0; s < kHmmStates; ++s) cur[s] /= sum;
    fb.loglik += std::log(sum);
    if (t == T) break;
    for (int s = 0; s < kHmmStates; ++s) {
      double acc = 0.0;
      for (int r = 0; r < kHmmStates; ++r) acc += cur[r] * m.trans[r][s];
      fb.alpha[t][s] = acc * b[t][s];
    }
  }

  for (int s = 0; s < kHmmStates; ++s) fb.beta[T - 1][s] = 1.0;
  for (std::size_t t = T - 1; t-- > 0;) {
    for (int s = 0; s < kHmmStates; ++s) {
      double acc = 0.0;
      for (int r = 0; r < kHmmStates; ++r) {
        acc += m.trans[s][r] * b[t + 1][r] * fb.beta[t + 1][r];
      }
      fb.beta[t][s] = acc / fb.scale[t + 1];
    }
  }
  return fb;
}

double total_loglik(const HmmModel& m,
                    const std::vector<std::vector<HmmObs>>& seqs) {
  double ll = 0.0;
  for (const auto& s : seqs) {
    ll += forward_backward(m, s, /*floor_emissions=*/true).loglik;
  }
  return ll;
}

void relabel_by_wave_mean(HmmModel& m) {
  std::array<int, kHmmStates> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return m.mean[a][0] < m.mean[b][0];
  });
  HmmModel out = m;
  for (int i = 0; i < kHmmStates; ++i) {
    out.pi[i] = m.pi[order[i]];
    out.mean[i] = m.mean[order[i]];
    out.var[i] = m.var[order[i]];
    for (int j = 0; j < kHmmStates; ++j) {
      out.trans[i][j] = m.trans[order[i]][order[j]];
    }
  }
  m = out;
}

// Tercile split of pooled wave heights gives a deterministic starting model;
// jitter_scale > 0 perturbs the means for the extra EM starts.
HmmModel tercile_init(const std::vector<std::vector<HmmObs>>& seqs, Rng* jitter,
                      double jitter_scale) {
  std::vector<double> waves;
  for (const auto& s : seqs) {
    for (const auto& o : s) waves.push_back(o[0]);
  }
  std::vector<double> sorted = waves;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double t1 = sorted[n / 3];
  const double t2 = sorted[(2 * n) / 3];
  const auto label = [&](double w) { return w < t1 ? 0 : (w < t2 ? 1 : 2); };

  HmmModel m;
  std::array<double, kHmmStates> count{};
  std::array<HmmObs, kHmmStates> sum{};
  for (const auto& s : seqs) {
    for (const auto& o : s) {
      const int l = label(o[0]);
      count[l] += 1.0;
      sum[l][0] += o[0];
      sum[l][1] += o[1];
    }
  }
  for (int s = 0; s < kHmmStates; ++s) {
    const double c = std::max(1.0, count[s]);
    m.mean[s] = {sum[s][0] / c, sum[s][1] / c};
  }
  std::array<HmmObs, kHmmStates> ss{};
  for (const auto& s : seqs) {
    for (const auto& o : s) {
      const int l = label(o[0]);
      ss[l][0] += (o[0] - m.mean[l][0]) * (o[0] - m.mean[l][0]);
      ss[l][1] += (o[1] - m.mean[l][1]) * (o[1] - m.mean[l][1]);
    }
  }
  for (int s = 0; s < kHmmStates; ++s) {
    const double c = std::max(1.0, count[s]);
    m.var[s] = {std::max(kVarianceFloor, ss[s][0] / c),
                std::max(kVarianceFloor, ss[s][1] / c)};
  }

  std::array<std::array<double, kHmmStates>, kHmmStates> tc{};
  std::array<double, kHmmStates> pc{};
  for (const auto& s : seqs) {
    pc[label(s.front()[0])] += 1.0;
    for (std::size_t t = 0; t + 1 < s.size(); ++t) {
      tc[label(s[t][0])][label(s[t + 1][0])] += 1.0;
    }
  }
  const double nseq = static_cast<double>(seqs.size());
  for (int s = 0; s < kHmmStates; ++s) {
    m.pi[s] = (pc[s] + 1.0) / (nseq + kHmmStates);  // add-one smoothing
    double row = 0.0;
    for (int r = 0; r < kHmmStates; ++r) row += tc[s][r] + 1.0;
    for (int r = 0; r < kHmmStates; ++r) m.trans[s][r] = (tc[s][r] + 1.0) / row;
  }

  if (jitter != nullptr && jitter_scale > 0.0) {
    for (int s = 0; s < kHmmStates; ++s) {
      for (int d = 0; d < 2; ++d) {
        m.mean[s][d] += jitter->normal() * jitter_scale * std::sqrt(m.var[s][d]);
      }
    }
  }
  return m;
}

HmmModel em_run(HmmModel m, const std::vector<std::vector<HmmObs>>& seqs,
                int max_iter, double tol, double* final_ll,
                std::vector<double>* trace) {
  double prev_ll = kNegInf;
  for (int iter = 0; iter < max_iter; ++iter) {
    std::array<double, kHmmStates> pi_acc{};
    std::array<std::array<double, kHmmStates>, kHmmStates> xi_acc{};
    std::array<double, kHmmStates> gamma_trans_acc{};  // Σ_t<T γ_t(s)
    std::array<double, kHmmStates> gamma_acc{};
    std::array<HmmObs, kHmmStates> obs_sum{};
    std::array<HmmObs, kHmmStates> obs_ss{};
    double ll = 0.0;

    for (const auto& seq : seqs) {
      const auto fb = forward_backward(m, seq, /*floor_emissions=*/true);
      ll += fb.loglik;
      const std::size_t T = seq.size();
      for (std::size_t t = 0; t < T; ++t) {
        std::array<double, kHmmStates> gamma;
        double gsum = 0.0;
        for (int s = 0; s < kHmmStates; ++s) {
          gamma[s] = fb.alpha[t][s] * fb.beta[t][s];
          gsum += gamma[s];
        }
        for (int s = 0; s < kHmmStates; ++s) gamma[s] /= gsum;
        if (t == 0) {
          for (int s = 0; s < kHmmStates; ++s) pi_acc[s] += gamma[s];
        }
        for (int s = 0; s < kHmmStates; ++s) {
          gamma_acc[s] += gamma[s];
          obs_sum[s][0] += gamma[s] * seq[t][0];
          obs_sum[s][1] += gamma[s] * seq[t][1];
          if (t + 1 < T) gamma_trans_acc[s] += gamma[s];
        }
      }
      for (std::size_t t = 0; t + 1 < T; ++t) {
        std::array<std::array<double, kHmmStates>, kHmmStates> xi;
        double xsum = 0.0;
        for (int s = 0; s < kHmmStates; ++s) {
          for (int r = 0; r < kHmmStates; ++r) {
            double e = emission(m, r, seq[t + 1]);
            if (e < kEmissionFloor) e = kEmissionFloor;
            xi[s][r] = fb.alpha[t][s] * m.trans[s][r] * e * fb.beta[t + 1][r];
            xsum += xi[s][r];
          }
        }
        for (int s = 0; s < kHmmStates; ++s) {
          for (int r = 0; r < kHmmStates; ++r) xi_acc[s][r] += xi[s][r] / xsum;
        }
      }
    }

    HmmModel next = m;
    const double nseq = static_cast<double>(seqs.size());
    for (int s = 0; s < kHmmStates; ++s) next.pi[s] = pi_acc[s] / nseq;
    for (int s = 0; s < kHmmStates; ++s) {
      const double denom = gamma_trans_acc[s];
      if (denom > 0.0) {
        for (int r = 0; r < kHmmStates; ++r) {
          next.trans[s][r] = xi_acc[s][r] / denom;
        }
        double row = std::accumulate(next.trans[s].begin(),
                                     next.trans[s].end(), 0.0);
        for (int r = 0; r < kHmmStates; ++r) next.trans[s][r] /= row;
      }
      if (gamma_acc[s] > 0.0) {
        next.mean[s][0] = obs_sum[s][0] / gamma_acc[s];
        next.mean[s][1] = obs_sum[s][1] / gamma_acc[s];
      }
    }
    // Second pass for variances with the updated means.
    for (int s = 0; s < kHmmStates; ++s) {
      obs_ss[s] = {0.0, 0.0};
    }
    for (const auto& seq : seqs) {
      const auto fb = forward_backward(m, seq, /*floor_emissions=*/true);
      for (std::size_t t = 0; t < seq.size(); ++t) {
        std::array<double, kHmmStates> gamma;
        double gsum = 0.0;
        for (int s = 0; s < kHmmStates; ++s) {
          gamma[s] = fb.alpha[t][s] * fb.beta[t][s];
          gsum += gamma[s];
        }
        for (int s = 0; s < kHmmStates; ++s) {
          const double g = gamma[s] / gsum;
          const double d0 = seq[t][0] - next.mean[s][0];
          const double d1 = seq[t][1] - next.mean[s][1];
          obs_ss[s][0] += g * d0 * d0;
          obs_ss[s][1] += g * d1 * d1;
        }
      }
    }
    for (int s = 0; s < kHmmStates; ++s) {
      if (gamma_acc[s] > 0.0) {
        next.var[s][0] = std::max(kVarianceFloor, obs_ss[s][0] / gamma_acc[s]);
        next.var[s][1] = std::max(kVarianceFloor, obs_ss[s][1] / gamma_acc[s]);
      }
    }

    m = next;
    if (trace != nullptr) trace->push_back(ll);
    if (ll - prev_ll < tol && iter > 0) {
      prev_ll = ll;
      break;
    }
    prev_ll = ll;
  }
  *final_ll = total_loglik(m, seqs);
  return m;
}

}  // namespace

std::vector<HmmObs> voyage_observations(const Voyage& v) {
  std::vector<HmmObs> s;
  s.reserve(v.records.size());
  for (const auto& r : v.records) {
    if (!std::isfinite(r.wave_height) || !std::isfinite(r.wind_speed)) {
      throw DataError("weather_observations: voyage " + v.id +
                      " lacks fused weather");
    }
    s.push_back({r.wave_height, r.wind_speed});
  }
  return s;
}

std::vector<std::vector<HmmObs>> weather_observations(
    const std::vector<Voyage>& voyages) {
  std::vector<std::vector<HmmObs>> seqs;
  seqs.reserve(voyages.size());
  for (const auto& v : voyages) seqs.push_back(voyage_observations(v));
  return seqs;
}

HmmModel fit_hmm(const std::vector<std::vector<HmmObs>>& seqs,
                 std::uint64_t seed, int max_iter, double tol,
                 std::vector<std::vector<double>>* trace) {
  if (seqs.size() < 3) throw DataError("fit_hmm: need at least 3 sequences");
  for (const auto& s : seqs) {
    if (s.size() < 3) throw DataError("fit_hmm: sequence shorter than 3");
  }

  // All-identical observations cannot separate states; return the floored
  // single-point model instead of spinning EM.
  bool all_same = true;
  const HmmObs& first = seqs.front().front();
  for (const auto& s : seqs) {
    for (const auto& o : s) {
      if (o[0] != first[0] || o[1] != first[1]) {
        all_same = false;
        break;
      }
    }
    if (!all_same) break;
  }
  if (all_same) {
    HmmModel m;
    for (int s = 0; s < kHmmStates; ++s) {
      m.pi[s] = 1.0 / kHmmStates;
      m.mean[s] = first;
      m.var[s] = {kVarianceFloor, kVarianceFloor};
      for (int r = 0; r < kHmmStates; ++r) m.trans[s][r] = 1.0 / kHmmStates;
    }
    m.degenerate = true;
    return m;
  }

  HmmModel best;
  double best_ll = kNegInf;
  for (int start = 0; start < 5; ++start) {
    HmmModel init;
    if (start == 0) {
      init = tercile_init(seqs, nullptr, 0.0);
    } else {
      Rng rng = derive_rng(seed, "hmm-start", static_cast<std::uint64_t>(start));
      init = tercile_init(seqs, &rng, 0.25);
    }
    double ll = kNegInf;
    std::vector<double> curve;
    HmmModel fitted = em_run(init, seqs, max_iter, tol, &ll,
                             trace != nullptr ? &curve : nullptr);
    if (trace != nullptr) trace->push_back(std::move(curve));
    if (ll > best_ll) {
      best_ll = ll;
      best = fitted;
    }
  }
  relabel_by_wave_mean(best);
  return best;
}

double forward_loglik(const HmmModel& m, std::span<const HmmObs> obs) {
  if (obs.empty()) throw DataError("forward_loglik: empty sequence");
  return forward_backward(m, obs, /*floor_emissions=*/false).loglik;
}

std::vector<int> viterbi(const HmmModel& m, std::span<const HmmObs> obs) {
  if (obs.empty()) throw DataError("viterbi: empty sequence");
  const std::size_t T = obs.size();
  std::vector<std::array<double, kHmmStates>> delta(T);
  std::vector<std::array<int, kHmmStates>> back(T);

  std::array<std::array<double, kHmmStates>, kHmmStates> logA;
  std::array<double, kHmmStates> logpi;
  for (int s = 0; s < kHmmStates; ++s) {
    logpi[s] = m.pi[s] > 0.0 ? std::log(m.pi[s]) : kNegInf;
    for (int r = 0; r < kHmmStates; ++r) {
      logA[s][r] = m.trans[s][r] > 0.0 ? std::log(m.trans[s][r]) : kNegInf;
    }
  }

  for (int s = 0; s < kHmmStates; ++s) {
    delta[0][s] = logpi[s] + log_emission(m, s, obs[0]);
  }
  for (std::size_t t = 1; t < T; ++t) {
    for (int s = 0; s < kHmmStates; ++s) {
      double best = kNegInf;
      int arg = 0;
      for (int r = 0; r < kHmmStates; ++r) {
        const double cand = delta[t - 1][r] + logA[r][s];
        if (cand > best) {  // strict: ties keep the lower prior state
          best = cand;
          arg = r;
        }
      }
      delta[t][s] = best + log_emission(m, s, obs[t]);
      back[t][s] = arg;
    }
  }

  int state = 0;
  double best = delta[T - 1][0];
  for (int s = 1; s < kHmmStates; ++s) {
    if (delta[T - 1][s] > best) {
      best = delta[T - 1][s];
      state = s;
    }
  }
  std::vector<int> path(T);
  path[T - 1] = state;
  for (std::size_t t = T - 1; t-- > 0;) {
    state = back[t + 1][state];
    path[t] = state;
  }
  return path;
}

int policy_bin(double frac, int n_bins) {
  const int b = static_cast<int>(frac * n_bins);
  return std::clamp(b, 0, n_bins - 1);
}

SpeedPolicy build_speed_policy(const std::vector<Voyage>& cluster,
                               const HmmModel& m, int n_bins) {
  if (cluster.empty()) throw DataError("build_speed_policy: empty cluster");
  if (n_bins < 1) throw ConfigError("build_speed_policy: n_bins must be >= 1");

  struct Acc {
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t count = 0;
    void add(double v) {
      min = std::min(min, v);
      max = std::max(max, v);
      sum += v;
      ++count;
    }
    PolicyCell cell() const {
      PolicyCell c;
      c.count = count;
      if (count > 0) {
        c.min_sog = min;
        c.max_sog = max;
        c.mean_sog = sum / static_cast<double>(count);
      }
      return c;
    }
  };

  std::vector<std::array<Acc, kHmmStates>> acc(n_bins);
  std::array<Acc, kHmmStates> state_acc;
  Acc global_acc;

  for (const auto& v : cluster) {
    const auto obs = voyage_observations(v);
    const auto path = viterbi(m, obs);
    const auto frac = along_track_fraction(v);
    for (std::size_t i = 0; i < v.records.size(); ++i) {
      const auto& r = v.records[i];
      if (!r.speed_mode) {
        throw DataError("build_speed_policy: record lacks speed-mode annotation");
      }
      if (*r.speed_mode != SpeedMode::Cruising) continue;
      const int bin = policy_bin(frac[i], n_bins);
      acc[bin][path[i]].add(r.sog);
      state_acc[path[i]].add(r.sog);
      global_acc.add(r.sog);
    }
  }
  if (global_acc.count == 0) {
    throw DataError("build_speed_policy: cluster has no cruising records");
  }

  SpeedPolicy p;
  p.n_bins = n_bins;
  p.cells.resize(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    for (int s = 0; s < kHmmStates; ++s) p.cells[b][s] = acc[b][s].cell();
  }
  for (int s = 0; s < kHmmStates; ++s) {
    p.state_fallback[s] = state_acc[s].cell();
  }
  p.global_fallback = global_acc.cell();
  return p;
}

double policy_speed(const SpeedPolicy& p, int bin, int state) {
  const PolicyCell* c = &p.cells[bin][state];
  if (c->count == 0) c = &p.state_fallback[state];
  if (c->count == 0) c = &p.global_fallback;
  switch (state) {
    case 0:
      return c->max_sog;  // calm: fastest observed
    case 1:
      return c->mean_sog;  // moderate: typical
    default:
      return c->min_sog;  // rough: slowest observed
  }
}

SpeedProfile hmm_predict(const HmmModel& m, const SpeedPolicy& p,
                         const Voyage& v, double sog_min, double sog_max) {
  const auto obs = voyage_observations(v);
  const auto path = viterbi(m, obs);
  SpeedProfile out;
  out.voyage_id = v.id;
  out.positions = along_track_fraction(v);
  out.provenance = "HMM";
  out.sog.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    const int bin = policy_bin(out.positions[i], p.n_bins);
    out.sog.push_back(std::clamp(policy_speed(p, bin, path[i]), sog_min, sog_max));
  }
  return out;
}

void save_hmm(const std::filesystem::path& path, const HmmModel& m,
              const SpeedPolicy& p) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["pi"] = m.pi;
  j["trans"] = m.trans;
  j["mean"] = m.mean;
  j["var"] = m.var;
  j["degenerate"] = m.degenerate;
  j["policy"]["n_bins"] = p.n_bins;
  const auto cell_json = [](const PolicyCell& c) {
    return nlohmann::json{{"min", c.min_sog},
                          {"mean", c.mean_sog},
                          {"max", c.max_sog},
                          {"count", c.count}};
  };
  auto& cells = j["policy"]["cells"] = nlohmann::json::array();
  for (const auto& bin : p.cells) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& c : bin) row.push_back(cell_json(c));
    cells.push_back(row);
  }
  auto& sf = j["policy"]["state_fallback"] = nlohmann::json::array();
  for (const auto& c : p.state_fallback) sf.push_back(cell_json(c));
  j["policy"]["global_fallback"] = cell_json(p.global_fallback);
  atomic_write_file(path, j.dump(2) + "\n");
}

HmmFile load_hmm(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_hmm: " + std::string(e.what()));
  }
  HmmFile f;
  const auto cell_from = [](const nlohmann::json& c) {
    PolicyCell out;
    out.min_sog = c.at("min").get<double>();
    out.mean_sog = c.at("mean").get<double>();
    out.max_sog = c.at("max").get<double>();
    out.count = c.at("count").get<std::size_t>();
    return out;
  };
  try {
    f.model.pi = j.at("pi").get<std::array<double, kHmmStates>>();
    f.model.trans =
        j.at("trans")
            .get<std::array<std::array<double, kHmmStates>, kHmmStates>>();
    f.model.mean = j.at("mean").get<std::array<HmmObs, kHmmStates>>();
    f.model.var = j.at("var").get<std::array<HmmObs, kHmmStates>>();
    f.model.degenerate = j.value("degenerate", false);
    const auto& jp = j.at("policy");
    f.policy.n_bins = jp.at("n_bins").get<int>();
    for (const auto& row : jp.at("cells")) {
      std::array<PolicyCell, kHmmStates> bin;
      for (int s = 0; s < kHmmStates; ++s) bin[s] = cell_from(row.at(s));
      f.policy.cells.push_back(bin);
    }
    for (int s = 0; s < kHmmStates; ++s) {
      f.policy.state_fallback[s] = cell_from(jp.at("state_fallback").at(s));
    }
    f.policy.global_fallback = cell_from(jp.at("global_fallback"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_hmm: malformed model file: " + std::string(e.what()));
  }
  return f;
}

}  // namespace voyopt
