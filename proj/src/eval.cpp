#include "voyopt/eval.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "voyopt/hmm.hpp"
#include "voyopt/io.hpp"
#include "voyopt/knn.hpp"
#include "voyopt/rng.hpp"
#include "voyopt/weather.hpp"

namespace voyopt {
namespace {

double profile_time_h(std::span<const double> sog,
                      std::span<const ProfileStep> steps) {
  double t = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    t += steps[i].distance_m / sog[i] / 3600.0;
  }
  return t;
}

}  // namespace

void split_voyages(const std::vector<std::string>& ids, double train_fraction,
                   std::uint64_t seed, std::vector<std::string>& train,
                   std::vector<std::string>& test) {
  if (ids.size() < 2) throw DataError("split needs at least 2 voyages");
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  std::vector<std::string> pool = ids;
  std::sort(pool.begin(), pool.end());
  Rng rng = derive_rng(seed, "split");
  for (std::size_t i = pool.size() - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
    std::swap(pool[i], pool[j]);
  }
  auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(pool.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, pool.size() - 1);
  train.assign(pool.begin(), pool.begin() + static_cast<long>(n_train));
  test.assign(pool.begin() + static_cast<long>(n_train), pool.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
}

ConstraintOutcome enforce_arrival_constraint(
    std::span<const double> pred_sog, std::span<const ProfileStep> steps,
    const std::vector<bool>& cruising_leg, double measured_time_h,
    double slack, double sog_min, double sog_max) {
  if (pred_sog.size() != steps.size() || cruising_leg.size() != steps.size()) {
    throw DataError("constraint: length mismatch");
  }
  if (!(measured_time_h > 0.0)) throw DataError("constraint: non-positive time");
  if (slack < 0.0) throw ConfigError("arrival slack must be >= 0");
  if (!(sog_min > 0.0) || !(sog_max >= sog_min)) {
    throw ConfigError("bad sog bounds");
  }

  const double target = measured_time_h * (1.0 + slack);
  auto speeds_at = [&](double mult) {
    std::vector<double> s(pred_sog.size());
    for (std::size_t i = 0; i < pred_sog.size(); ++i) {
      s[i] = cruising_leg[i]
                 ? std::clamp(pred_sog[i] * mult, sog_min, sog_max)
                 : pred_sog[i];
    }
    return s;
  };

  ConstraintOutcome out;
  out.sog = speeds_at(1.0);
  if (profile_time_h(out.sog, steps) <= target) return out;

  // Speed everything cruising up to the cap; if that still misses the
  // deadline there is no feasible uniform scaling.
  constexpr double kTopMult = 64.0;
  std::vector<double> top = speeds_at(kTopMult);
  if (profile_time_h(top, steps) > target) {
    out.sog = std::move(top);
    out.constrained = true;
    out.feasible = false;
    return out;
  }

  // Smallest multiplier meeting the deadline: time is non-increasing in the
  // multiplier, so plain bisection keeping hi feasible.
  double lo = 1.0, hi = kTopMult;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    if (profile_time_h(speeds_at(mid), steps) <= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  out.sog = speeds_at(hi);
  out.constrained = true;
  return out;
}

WeatherState dominant_weather_state(const Voyage& v,
                                    const WeatherThresholds& th) {
  if (v.records.empty()) throw DataError("dominant state of empty voyage");
  std::array<std::size_t, 3> counts{};
  for (const Record& r : v.records) {
    counts[static_cast<int>(label_weather_state(r.wave_height, th))]++;
  }
  // Ascending severity scan with >= lets the rougher state win ties.
  WeatherState best = WeatherState::Calm;
  std::size_t best_n = 0;
  for (int s = 0; s < 3; ++s) {
    if (counts[s] >= best_n) {
      best_n = counts[s];
      best = static_cast<WeatherState>(s);
    }
  }
  return best;
}

namespace {

struct TestCtx {
  const Voyage* v = nullptr;
  std::vector<ProfileStep> steps;
  SpeedProfile meas;
  std::vector<bool> cruising;   // per leg
  std::vector<double> meas_legs;
  double meas_time_h = 0.0;
  double eff_meas = 0.0;
  WeatherState state = WeatherState::Calm;
};

struct CellOut {
  GainCell cell;
  std::vector<EvaluationRecord> recs;
  // final leg speeds per plot voyage, empty when the cell failed
  std::vector<std::vector<double>> plot_legs;
};

std::vector<double> predicted_legs(const SpeedProfile& pred,
                                   const TestCtx& ctx) {
  if (pred.sog.size() != ctx.meas.sog.size()) {
    throw DataError("prediction length mismatch for " + ctx.v->id);
  }
  std::vector<double> legs(ctx.steps.size());
  for (std::size_t i = 0; i < legs.size(); ++i) {
    legs[i] = ctx.cruising[i] ? pred.sog[i] : ctx.meas_legs[i];
  }
  return legs;
}

}  // namespace

ExperimentResult run_experiment(const std::vector<Voyage>& corpus,
                                const ExperimentConfig& cfg,
                                const WeatherThresholds& thresholds,
                                const FuelModelCoeffs* fixed_coeffs) {
  if (corpus.size() < 4) throw DataError("experiment needs >= 4 voyages");
  std::unordered_map<std::string, std::size_t> by_id;
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Voyage& v = corpus[i];
    if (v.records.size() < 2) throw DataError("voyage too short: " + v.id);
    for (const Record& r : v.records) {
      if (!r.speed_mode.has_value()) {
        throw DataError("corpus not annotated: " + v.id);
      }
    }
    if (!by_id.emplace(v.id, i).second) {
      throw DataError("duplicate voyage id " + v.id);
    }
    ids.push_back(v.id);
  }

  ExperimentResult res;
  split_voyages(ids, cfg.train_fraction, cfg.seed, res.train_ids, res.test_ids);

  std::vector<Voyage> train;
  train.reserve(res.train_ids.size());
  for (const std::string& id : res.train_ids) train.push_back(corpus[by_id[id]]);

  res.coeffs = fixed_coeffs ? *fixed_coeffs : calibrate_fuel_model(train);
  res.norm = score_corpus(train);
  res.clusters = percentile_clusters(train);

  {  // no test voyage may appear in any training cluster
    std::unordered_set<std::string> test_set(res.test_ids.begin(),
                                             res.test_ids.end());
    for (const auto& members : res.clusters.members) {
      for (const std::string& m : members) {
        if (test_set.count(m)) {
          throw std::logic_error("test voyage leaked into cluster: " + m);
        }
      }
    }
  }

  std::vector<TestCtx> tests(res.test_ids.size());
  for (std::size_t i = 0; i < res.test_ids.size(); ++i) {
    TestCtx& ctx = tests[i];
    ctx.v = &corpus[by_id[res.test_ids[i]]];
    ctx.steps = profile_steps(*ctx.v);
    ctx.meas = measured_profile(*ctx.v);
    ctx.meas_legs.assign(ctx.meas.sog.begin(), ctx.meas.sog.end() - 1);
    ctx.cruising.resize(ctx.steps.size());
    for (std::size_t j = 0; j < ctx.steps.size(); ++j) {
      ctx.cruising[j] =
          ctx.v->records[j].speed_mode == SpeedMode::Cruising;
    }
    ProfileEstimate est = estimate_profile_efficiency(ctx.meas_legs, ctx.steps,
                                                      res.coeffs, res.norm);
    ctx.meas_time_h = est.time_h;
    ctx.eff_meas = est.eff;
    ctx.state = dominant_weather_state(*ctx.v, thresholds);
  }

  std::size_t n_plots = std::min<std::size_t>(
      cfg.profile_plots < 0 ? 0 : static_cast<std::size_t>(cfg.profile_plots),
      tests.size());

  const std::vector<std::string>& models = model_names();
  const std::size_t n_models = models.size();
  const std::size_t n_clusters = std::size(res.clusters.members);
  std::vector<CellOut> outs(n_clusters * n_models);

  auto run_cell = [&](std::size_t ci, std::size_t mi) {
    CellOut& out = outs[ci * n_models + mi];
    const std::string& model = models[mi];
    const std::string cluster_name = kClusterNames[ci];
    try {
      std::vector<Voyage> cluster;
      {
        std::unordered_set<std::string> members(
            res.clusters.members[ci].begin(), res.clusters.members[ci].end());
        for (const Voyage& v : train) {
          if (members.count(v.id)) cluster.push_back(v);
        }
      }
      if (cluster.empty()) throw DataError("empty cluster " + cluster_name);

      // one-off model builds
      std::optional<LstmBundle> lstm;
      std::optional<KnnModel> knn;
      std::optional<HmmModel> hmm;
      std::optional<SpeedPolicy> policy;
      if (model == "LSTM") {
        LstmConfig lc = cfg.lstm;
        lc.seed = cfg.seed ^ hash_label(cluster_name);
        lstm = train_lstm_bundle(cluster, lc);
      } else if (model == "KNN") {
        knn = build_cluster_knn(cluster, cfg.knn_grid, cfg.seed, ci);
      } else if (model == "HMM") {
        hmm = fit_hmm(weather_observations(cluster),
                      cfg.seed ^ hash_label(cluster_name), cfg.hmm_max_iter,
                      cfg.hmm_tol);
        policy = build_speed_policy(cluster, *hmm, cfg.hmm_bins);
      }

      double gain_sum = 0.0;
      for (std::size_t ti = 0; ti < tests.size(); ++ti) {
        const TestCtx& ctx = tests[ti];
        SpeedProfile pred;
        if (model == "Identity") {
          pred = ctx.meas;
          pred.provenance = "Identity";
        } else if (model == "LSTM") {
          pred = lstm_predict(*lstm, *ctx.v, cfg.sog_min, cfg.sog_max);
        } else if (model == "KNN") {
          pred = knn_predict_profile(*knn, *ctx.v, cfg.sog_min, cfg.sog_max);
        } else if (model == "1NN-DTW") {
          pred = nn1_dtw_predict(cluster, *ctx.v, cfg.dtw);
          for (double& s : pred.sog) s = std::clamp(s, cfg.sog_min, cfg.sog_max);
        } else if (model == "HMM") {
          pred = hmm_predict(*hmm, *policy, *ctx.v, cfg.sog_min, cfg.sog_max);
        } else {
          throw ConfigError("unknown model " + model);
        }

        // cruising legs take the prediction, maneuvering legs stay measured
        std::vector<double> legs = predicted_legs(pred, ctx);
        ConstraintOutcome con = enforce_arrival_constraint(
            legs, ctx.steps, ctx.cruising, ctx.meas_time_h, cfg.arrival_slack,
            cfg.sog_min, cfg.sog_max);
        bool constrained = con.constrained;
        std::vector<double> final_legs =
            con.feasible ? std::move(con.sog) : ctx.meas_legs;

        ProfileEstimate est = estimate_profile_efficiency(
            final_legs, ctx.steps, res.coeffs, res.norm);

        EvaluationRecord rec;
        rec.voyage_id = ctx.v->id;
        rec.cluster = cluster_name;
        rec.model = model;
        rec.eff_meas = ctx.eff_meas;
        rec.eff_pred = est.eff;
        rec.weather_state = ctx.state;
        rec.constrained = constrained;
        if (ctx.eff_meas > 0.0) {
          rec.gain_pct = eff_gain(ctx.eff_meas, est.eff);
          rec.gain_defined = true;
          gain_sum += rec.gain_pct;
          out.cell.defined++;
          if (rec.gain_pct > 0.0) out.cell.improved++;
        } else {
          rec.gain_pct = 0.0;
          rec.gain_defined = false;
        }
        out.recs.push_back(std::move(rec));
        if (ti < n_plots && model != "Identity") {
          if (out.plot_legs.size() <= ti) out.plot_legs.resize(n_plots);
          out.plot_legs[ti] = final_legs;
        }
      }
      out.cell.tested = tests.size();
      out.cell.mean_gain_pct =
          out.cell.defined ? gain_sum / static_cast<double>(out.cell.defined)
                           : 0.0;
    } catch (const std::logic_error&) {
      throw;  // leakage and programming errors must abort the experiment
    } catch (const std::exception& e) {
      out = CellOut{};
      out.cell.ok = false;
      out.cell.error = e.what();
    }
  };

  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t ci = 0; ci < n_clusters; ++ci) {
    for (std::size_t mi = 0; mi < n_models; ++mi) tasks.emplace_back(ci, mi);
  }
  int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    for (auto [ci, mi] : tasks) run_cell(ci, mi);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        std::size_t t = next.fetch_add(1);
        if (t >= tasks.size()) return;
        run_cell(tasks[t].first, tasks[t].second);
      }
    };
    std::vector<std::thread> pool;
    std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(jobs), tasks.size());
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  res.gains.models = models;
  res.gains.clusters.assign(kClusterNames, kClusterNames + 4);
  res.gains.cells.resize(n_clusters);
  for (std::size_t ci = 0; ci < n_clusters; ++ci) {
    res.gains.cells[ci].resize(n_models);
    for (std::size_t mi = 0; mi < n_models; ++mi) {
      CellOut& out = outs[ci * n_models + mi];
      res.gains.cells[ci][mi] = out.cell;
      for (EvaluationRecord& r : out.recs) res.records.push_back(std::move(r));
    }
  }
  res.gains.averages.resize(n_models);
  for (std::size_t mi = 0; mi < n_models; ++mi) {
    GainAverage& avg = res.gains.averages[mi];
    std::size_t n_ok = 0;
    for (std::size_t ci = 0; ci < n_clusters; ++ci) {
      const GainCell& c = res.gains.cells[ci][mi];
      if (!c.ok) continue;
      n_ok++;
      avg.mean_gain_pct += c.mean_gain_pct;
      avg.improved_avg += static_cast<double>(c.improved);
      avg.tested_avg += static_cast<double>(c.tested);
    }
    if (n_ok) {
      avg.mean_gain_pct /= static_cast<double>(n_ok);
      avg.improved_avg /= static_cast<double>(n_ok);
      avg.tested_avg /= static_cast<double>(n_ok);
    }
  }

  for (std::size_t ti = 0; ti < n_plots; ++ti) {
    const TestCtx& ctx = tests[ti];
    ProfilePlot plot;
    plot.voyage_id = ctx.v->id;
    plot.measured = ctx.meas;
    for (std::size_t mi = 0; mi < n_models; ++mi) {
      if (models[mi] == "Identity") continue;
      bool have = false;
      SpeedProfile p;
      p.voyage_id = ctx.v->id;
      p.provenance = models[mi];
      p.positions = ctx.meas.positions;
      // aggregate over clusters is not meaningful for one voyage; plot the
      // Top75Pr cell (widest training pool), falling back to any ok cell
      for (std::size_t ci = n_clusters; ci-- > 0;) {
        const CellOut& out = outs[ci * n_models + mi];
        if (out.cell.ok && ti < out.plot_legs.size() &&
            !out.plot_legs[ti].empty()) {
          p.sog = out.plot_legs[ti];
          p.sog.push_back(p.sog.back());  // extend last leg to the endpoint
          have = true;
          break;
        }
      }
      if (have) plot.predicted.push_back(std::move(p));
    }
    res.plots.push_back(std::move(plot));
  }

  res.breakdown = weather_breakdown(res.records);
  return res;
}

KnnModel build_cluster_knn(const std::vector<Voyage>& cluster,
                           const std::vector<int>& k_grid, std::uint64_t seed,
                           std::size_t cluster_idx) {
  int k = 1;
  if (cluster.size() >= 5) {
    // seeded holdout inside the cluster picks k
    std::vector<std::size_t> order(cluster.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = derive_rng(seed, "knn-holdout", cluster_idx);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
      std::swap(order[i], order[j]);
    }
    std::size_t n_val = std::max<std::size_t>(1, cluster.size() / 5);
    std::vector<Voyage> sub, val;
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i + n_val < order.size() ? sub : val).push_back(cluster[order[i]]);
    }
    KnnModel probe = build_knn(sub);
    k = select_k(probe, k_grid, val);
  }
  return build_knn(cluster, k);
}

GainTable gain_table_from_records(
    const std::vector<EvaluationRecord>& records) {
  GainTable table;
  table.models = model_names();
  table.clusters.assign(kClusterNames, kClusterNames + 4);
  table.cells.assign(table.clusters.size(),
                     std::vector<GainCell>(table.models.size()));
  for (std::size_t ci = 0; ci < table.clusters.size(); ++ci) {
    for (std::size_t mi = 0; mi < table.models.size(); ++mi) {
      GainCell& cell = table.cells[ci][mi];
      double sum = 0.0;
      for (const EvaluationRecord& r : records) {
        if (r.cluster != table.clusters[ci] || r.model != table.models[mi]) {
          continue;
        }
        cell.tested++;
        if (!r.gain_defined) continue;
        cell.defined++;
        sum += r.gain_pct;
        if (r.gain_pct > 0.0) cell.improved++;
      }
      if (cell.defined) {
        cell.mean_gain_pct = sum / static_cast<double>(cell.defined);
      }
    }
  }
  table.averages.resize(table.models.size());
  for (std::size_t mi = 0; mi < table.models.size(); ++mi) {
    GainAverage& avg = table.averages[mi];
    for (std::size_t ci = 0; ci < table.clusters.size(); ++ci) {
      const GainCell& c = table.cells[ci][mi];
      avg.mean_gain_pct += c.mean_gain_pct;
      avg.improved_avg += static_cast<double>(c.improved);
      avg.tested_avg += static_cast<double>(c.tested);
    }
    double n = static_cast<double>(table.clusters.size());
    avg.mean_gain_pct /= n;
    avg.improved_avg /= n;
    avg.tested_avg /= n;
  }
  return table;
}

WeatherBreakdownTable weather_breakdown(
    const std::vector<EvaluationRecord>& records) {
  WeatherBreakdownTable table;
  for (const std::string& m : model_names()) {
    if (m != "Identity") table.models.push_back(m);
  }
  table.cells.assign(table.models.size() * 3, std::nullopt);
  for (std::size_t mi = 0; mi < table.models.size(); ++mi) {
    for (int s = 0; s < 3; ++s) {
      std::vector<double> gains;
      for (const EvaluationRecord& r : records) {
        if (r.model == table.models[mi] && r.gain_defined &&
            static_cast<int>(r.weather_state) == s) {
          gains.push_back(r.gain_pct);
        }
      }
      if (gains.empty()) continue;
      double mean = 0.0;
      for (double g : gains) mean += g;
      mean /= static_cast<double>(gains.size());
      double var = 0.0;
      for (double g : gains) var += (g - mean) * (g - mean);
      var /= static_cast<double>(gains.size());
      BreakdownCell cell;
      cell.mean_gain_pct = mean;
      cell.std_gain_pct = std::sqrt(var);
      cell.n_voyages = gains.size();
      table.cells[mi * 3 + s] = cell;
    }
  }
  return table;
}

namespace {

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

const char* model_color(const std::string& m) {
  if (m == "LSTM") return "#d62728";
  if (m == "KNN") return "#1f77b4";
  if (m == "1NN-DTW") return "#2ca02c";
  if (m == "HMM") return "#9467bd";
  return "#222222";
}

struct SvgCanvas {
  static constexpr double kW = 900.0, kH = 420.0;
  static constexpr double kL = 60.0, kR = 20.0, kT = 20.0, kB = 40.0;
  double x0, x1, y0, y1;  // data ranges
  std::ostringstream os;

  SvgCanvas(double dx0, double dx1, double dy0, double dy1)
      : x0(dx0), x1(dx1), y0(dy0), y1(dy1) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
       << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH
       << "\">\n<rect width=\"" << kW << "\" height=\"" << kH
       << "\" fill=\"white\"/>\n";
  }
  double px(double x) const {
    return kL + (x - x0) / (x1 - x0) * (kW - kL - kR);
  }
  double py(double y) const {
    return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB);
  }
  void axes(const std::string& xlabel, const std::string& ylabel) {
    os << "<line x1=\"" << svg_num(kL) << "\" y1=\"" << svg_num(kH - kB)
       << "\" x2=\"" << svg_num(kW - kR) << "\" y2=\"" << svg_num(kH - kB)
       << "\" stroke=\"#444\"/>\n";
    os << "<line x1=\"" << svg_num(kL) << "\" y1=\"" << svg_num(kT)
       << "\" x2=\"" << svg_num(kL) << "\" y2=\"" << svg_num(kH - kB)
       << "\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << svg_num(0.5 * kW) << "\" y=\"" << svg_num(kH - 8)
       << "\" font-size=\"13\" text-anchor=\"middle\">" << xlabel
       << "</text>\n";
    os << "<text x=\"14\" y=\"" << svg_num(0.5 * kH)
       << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 "
          "14 "
       << svg_num(0.5 * kH) << ")\">" << ylabel << "</text>\n";
  }
  void polyline(std::span<const double> xs, std::span<const double> ys,
                const char* color) {
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) os << ' ';
      os << svg_num(px(xs[i])) << ',' << svg_num(py(ys[i]));
    }
    os << "\"/>\n";
  }
  void legend_entry(std::size_t slot, const std::string& name,
                    const char* color) {
    double y = kT + 16.0 * static_cast<double>(slot) + 10.0;
    os << "<line x1=\"" << svg_num(kW - 180) << "\" y1=\"" << svg_num(y)
       << "\" x2=\"" << svg_num(kW - 150) << "\" y2=\"" << svg_num(y)
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << svg_num(kW - 144) << "\" y=\"" << svg_num(y + 4)
       << "\" font-size=\"12\">" << name << "</text>\n";
  }
  std::string finish() {
    os << "</svg>\n";
    return os.str();
  }
};

std::string state_name(WeatherState s) { return to_string(s); }

}  // namespace

void emit_reports(const ExperimentResult& result,
                  const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);

  {
    CsvTable t;
    t.header = {"cluster", "model", "mean_gain_pct", "improved_count",
                "test_count"};
    for (std::size_t ci = 0; ci < result.gains.clusters.size(); ++ci) {
      for (std::size_t mi = 0; mi < result.gains.models.size(); ++mi) {
        const GainCell& c = result.gains.cells[ci][mi];
        t.rows.push_back({result.gains.clusters[ci], result.gains.models[mi],
                          (c.ok && c.defined) ? fmt_double(c.mean_gain_pct)
                                              : "NA",
                          std::to_string(c.improved),
                          std::to_string(c.tested)});
      }
    }
    for (std::size_t mi = 0; mi < result.gains.models.size(); ++mi) {
      const GainAverage& a = result.gains.averages[mi];
      t.rows.push_back({"Average", result.gains.models[mi],
                        fmt_double(a.mean_gain_pct),
                        fmt_double(a.improved_avg), fmt_double(a.tested_avg)});
    }
    atomic_write_file(outdir / "gain_table.csv", format_csv(t));
  }

  {
    CsvTable t;
    t.header = {"model", "state", "mean_gain_pct", "std_gain_pct",
                "n_voyages"};
    for (std::size_t mi = 0; mi < result.breakdown.models.size(); ++mi) {
      for (int s = 0; s < 3; ++s) {
        const auto& cell = result.breakdown.cells[mi * 3 + s];
        if (!cell) continue;
        t.rows.push_back({result.breakdown.models[mi],
                          state_name(static_cast<WeatherState>(s)),
                          fmt_double(cell->mean_gain_pct),
                          fmt_double(cell->std_gain_pct),
                          std::to_string(cell->n_voyages)});
      }
    }
    atomic_write_file(outdir / "weather_breakdown.csv", format_csv(t));
  }

  {
    CsvTable t;
    t.header = {"voyage_id", "cluster",       "model",
                "eff_meas",  "eff_pred",      "gain_pct",
                "weather_state", "constrained_flag"};
    for (const EvaluationRecord& r : result.records) {
      t.rows.push_back({r.voyage_id, r.cluster, r.model, fmt_double(r.eff_meas),
                        fmt_double(r.eff_pred),
                        r.gain_defined ? fmt_double(r.gain_pct) : "NA",
                        state_name(r.weather_state),
                        r.constrained ? "1" : "0"});
    }
    atomic_write_file(outdir / "records.csv", format_csv(t));
  }

  for (const ProfilePlot& plot : result.plots) {
    double smax = 1.0;
    for (double s : plot.measured.sog) smax = std::max(smax, s);
    for (const SpeedProfile& p : plot.predicted) {
      for (double s : p.sog) smax = std::max(smax, s);
    }
    SvgCanvas c(0.0, 1.0, 0.0, 1.05 * smax);
    c.axes("along-track fraction", "sog (m/s)");
    c.polyline(plot.measured.positions, plot.measured.sog, model_color(""));
    c.legend_entry(0, "Measured", model_color(""));
    std::size_t slot = 1;
    for (const SpeedProfile& p : plot.predicted) {
      const char* color = model_color(p.provenance);
      c.polyline(p.positions, p.sog, color);
      c.legend_entry(slot++, p.provenance, color);
    }
    atomic_write_file(outdir / ("profile_" + plot.voyage_id + ".svg"),
                      c.finish());
  }

  for (const std::string& model : result.breakdown.models) {
    std::vector<double> gains;
    for (const EvaluationRecord& r : result.records) {
      if (r.model == model && r.gain_defined) gains.push_back(r.gain_pct);
    }
    std::sort(gains.begin(), gains.end());
    double lo = gains.empty() ? -1.0 : std::min(gains.front(), 0.0);
    double hi = gains.empty() ? 1.0 : std::max(gains.back(), 0.0);
    if (hi <= lo) hi = lo + 1.0;
    SvgCanvas c(0.0, std::max<double>(1.0, gains.size() ? gains.size() - 1 : 1),
                lo, hi);
    c.axes("rank", "gain (%)");
    // zero line: voyages above it improved
    std::array<double, 2> zx = {0.0, c.x1};
    std::array<double, 2> zy = {0.0, 0.0};
    c.polyline(zx, zy, "#bbbbbb");
    if (!gains.empty()) {
      std::vector<double> xs(gains.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = static_cast<double>(i);
      }
      c.polyline(xs, gains, model_color(model));
      c.legend_entry(0, model, model_color(model));
    }
    atomic_write_file(outdir / ("gains_" + model + ".svg"), c.finish());
  }
}

}  // namespace voyopt
