// voyopt: fixed-route voyage efficiency toolkit.
//
// Pipeline subcommands, in order:
//   synth -> ingest -> fuse -> calibrate -> score -> cluster
//   -> train/optimize (single model+cluster) or evaluate (everything)
//   -> report (rebuild aggregate tables from a saved records file)
//
// Configuration is a JSON file (see --print-default-config); --seed, --out
// and --jobs override it. Logs go to stderr, data to files/stdout.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "voyopt/clustering.hpp"
#include "voyopt/dtw.hpp"
#include "voyopt/efficiency.hpp"
#include "voyopt/eval.hpp"
#include "voyopt/hmm.hpp"
#include "voyopt/ingest.hpp"
#include "voyopt/io.hpp"
#include "voyopt/knn.hpp"
#include "voyopt/lstm.hpp"
#include "voyopt/rng.hpp"
#include "voyopt/synth.hpp"
#include "voyopt/weather.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace voyopt;

namespace {

void log_line(const std::string& msg) {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);
  std::cerr << "[" << stamp << "] " << msg << "\n";
}

struct PipelineConfig {
  std::uint64_t seed = 42;
  fs::path out_dir = "out";
  int jobs = 1;

  RouteConfig route;
  bool threshold_auto = false;  // route threshold recomputed at ingest

  WeatherThresholds thresholds;

  bool calibrate_fuel = true;  // otherwise fixed_coeffs is authoritative
  FuelModelCoeffs fixed_coeffs;

  ExperimentConfig experiment;
  SynthConfig synth;

  std::optional<fs::path> raw_csv;        // default: out/raw/voyages.csv
  std::optional<fs::path> grids_manifest; // default: out/grids/manifest.json

  fs::path raw_path() const { return raw_csv ? *raw_csv : out_dir / "raw" / "voyages.csv"; }
  fs::path grids_path() const {
    return grids_manifest ? *grids_manifest : out_dir / "grids" / "manifest.json";
  }
};

json default_config_json() {
  PipelineConfig d;
  d.route = synth_route_config(d.synth);
  json j;
  j["schema_version"] = 1;
  j["seed"] = d.seed;
  j["out_dir"] = d.out_dir.string();
  j["jobs"] = d.jobs;
  j["inputs"] = {{"raw_csv", nullptr}, {"grids_manifest", nullptr}};
  j["route"] = {
      {"port_a", {{"lat", d.route.port_a.lat}, {"lon", d.route.port_a.lon}, {"radius_m", d.route.port_a.radius_m}}},
      {"port_b", {{"lat", d.route.port_b.lat}, {"lon", d.route.port_b.lon}, {"radius_m", d.route.port_b.radius_m}}},
      {"segment_lat_low", d.route.segment_lat_low},
      {"segment_lat_high", d.route.segment_lat_high},
      {"direct_lon_split", d.route.direct_lon_split},
      {"direct_is_west", d.route.direct_is_west},
      {"cruising_sog_threshold", d.route.cruising_sog_threshold},
      {"min_port_dwell_s", d.route.min_port_dwell_s},
  };
  j["weather_thresholds"] = {{"calm_max_wave", d.thresholds.calm_max_wave},
                             {"rough_min_wave", d.thresholds.rough_min_wave}};
  j["fuel_model"] = {{"mode", "calibrate"}};
  j["models"] = {
      {"lstm",
       {{"hidden_dim", d.experiment.lstm.hidden_dim},
        {"window", d.experiment.lstm.window},
        {"learning_rate", d.experiment.lstm.learning_rate},
        {"epochs", d.experiment.lstm.epochs},
        {"clip_norm", d.experiment.lstm.clip_norm}}},
      {"knn", {{"grid", d.experiment.knn_grid}}},
      {"dtw",
       {{"band_radius", nullptr},
        {"normalize_inputs", d.experiment.dtw.normalize_inputs},
        {"wave_channel", d.experiment.dtw.wave_channel}}},
      {"hmm",
       {{"bins", d.experiment.hmm_bins},
        {"max_iter", d.experiment.hmm_max_iter},
        {"tol", d.experiment.hmm_tol}}},
  };
  j["experiment"] = {{"train_fraction", d.experiment.train_fraction},
                     {"arrival_slack", d.experiment.arrival_slack},
                     {"sog_min", d.experiment.sog_min},
                     {"sog_max", d.experiment.sog_max},
                     {"profile_plots", d.experiment.profile_plots}};
  j["synth"] = {{"n_voyages", d.synth.n_voyages},
                {"p_direct", d.synth.p_direct},
                {"p_ineff", d.synth.p_ineff},
                {"cruise_sog", d.synth.cruise_sog},
                {"maneuver_sog", d.synth.maneuver_sog},
                {"sog_noise", d.synth.sog_noise},
                {"fuel_noise", d.synth.fuel_noise},
                {"wave_mean", d.synth.wave_mean},
                {"storm_amplitude", d.synth.storm_amplitude},
                {"temporal_corr_h", d.synth.temporal_corr_h},
                {"spatial_corr_deg", d.synth.spatial_corr_deg},
                {"mismatch_c4", d.synth.mismatch_c4}};
  return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

PipelineConfig parse_config(const json& j) {
  PipelineConfig c;
  c.route = synth_route_config(c.synth);
  maybe(j, "seed", c.seed);
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  maybe(j, "jobs", c.jobs);

  if (j.contains("inputs")) {
    const json& in = j.at("inputs");
    if (in.contains("raw_csv") && !in.at("raw_csv").is_null()) {
      c.raw_csv = fs::path(in.at("raw_csv").get<std::string>());
    }
    if (in.contains("grids_manifest") && !in.at("grids_manifest").is_null()) {
      c.grids_manifest = fs::path(in.at("grids_manifest").get<std::string>());
    }
  }

  if (j.contains("route")) {
    const json& r = j.at("route");
    auto fence = [](const json& f, Geofence& g) {
      if (f.contains("lat")) g.lat = f.at("lat").get<double>();
      if (f.contains("lon")) g.lon = f.at("lon").get<double>();
      if (f.contains("radius_m")) g.radius_m = f.at("radius_m").get<double>();
    };
    if (r.contains("port_a")) fence(r.at("port_a"), c.route.port_a);
    if (r.contains("port_b")) fence(r.at("port_b"), c.route.port_b);
    maybe(r, "segment_lat_low", c.route.segment_lat_low);
    maybe(r, "segment_lat_high", c.route.segment_lat_high);
    maybe(r, "direct_lon_split", c.route.direct_lon_split);
    maybe(r, "direct_is_west", c.route.direct_is_west);
    maybe(r, "min_port_dwell_s", c.route.min_port_dwell_s);
    if (r.contains("cruising_sog_threshold")) {
      const json& th = r.at("cruising_sog_threshold");
      if (th.is_string()) {
        if (th.get<std::string>() != "auto") {
          throw ConfigError("cruising_sog_threshold must be a number or \"auto\"");
        }
        c.threshold_auto = true;
      } else {
        c.route.cruising_sog_threshold = th.get<double>();
      }
    }
  }

  if (j.contains("weather_thresholds")) {
    const json& w = j.at("weather_thresholds");
    maybe(w, "calm_max_wave", c.thresholds.calm_max_wave);
    maybe(w, "rough_min_wave", c.thresholds.rough_min_wave);
  }

  if (j.contains("fuel_model")) {
    const json& f = j.at("fuel_model");
    std::string mode = f.value("mode", "calibrate");
    if (mode == "calibrate") {
      c.calibrate_fuel = true;
      if (f.contains("c0") || f.contains("c1") || f.contains("c2") || f.contains("c3")) {
        throw ConfigError("fuel_model: coefficients given but mode is \"calibrate\"");
      }
    } else if (mode == "fixed") {
      c.calibrate_fuel = false;
      c.fixed_coeffs.c0 = f.at("c0").get<double>();
      c.fixed_coeffs.c1 = f.at("c1").get<double>();
      c.fixed_coeffs.c2 = f.at("c2").get<double>();
      c.fixed_coeffs.c3 = f.at("c3").get<double>();
    } else {
      throw ConfigError("fuel_model.mode must be \"calibrate\" or \"fixed\"");
    }
  }

  if (j.contains("models")) {
    const json& m = j.at("models");
    if (m.contains("lstm")) {
      const json& l = m.at("lstm");
      maybe(l, "hidden_dim", c.experiment.lstm.hidden_dim);
      maybe(l, "window", c.experiment.lstm.window);
      maybe(l, "learning_rate", c.experiment.lstm.learning_rate);
      maybe(l, "epochs", c.experiment.lstm.epochs);
      maybe(l, "clip_norm", c.experiment.lstm.clip_norm);
    }
    if (m.contains("knn")) maybe(m.at("knn"), "grid", c.experiment.knn_grid);
    if (m.contains("dtw")) {
      const json& dt = m.at("dtw");
      if (dt.contains("band_radius") && !dt.at("band_radius").is_null()) {
        c.experiment.dtw.band_radius = dt.at("band_radius").get<int>();
      }
      maybe(dt, "normalize_inputs", c.experiment.dtw.normalize_inputs);
      maybe(dt, "wave_channel", c.experiment.dtw.wave_channel);
    }
    if (m.contains("hmm")) {
      const json& h = m.at("hmm");
      maybe(h, "bins", c.experiment.hmm_bins);
      maybe(h, "max_iter", c.experiment.hmm_max_iter);
      maybe(h, "tol", c.experiment.hmm_tol);
    }
  }

  if (j.contains("experiment")) {
    const json& e = j.at("experiment");
    maybe(e, "train_fraction", c.experiment.train_fraction);
    maybe(e, "arrival_slack", c.experiment.arrival_slack);
    maybe(e, "sog_min", c.experiment.sog_min);
    maybe(e, "sog_max", c.experiment.sog_max);
    maybe(e, "profile_plots", c.experiment.profile_plots);
  }

  if (j.contains("synth")) {
    const json& s = j.at("synth");
    maybe(s, "n_voyages", c.synth.n_voyages);
    maybe(s, "p_direct", c.synth.p_direct);
    maybe(s, "p_ineff", c.synth.p_ineff);
    maybe(s, "cruise_sog", c.synth.cruise_sog);
    maybe(s, "maneuver_sog", c.synth.maneuver_sog);
    maybe(s, "sog_noise", c.synth.sog_noise);
    maybe(s, "fuel_noise", c.synth.fuel_noise);
    maybe(s, "wave_mean", c.synth.wave_mean);
    maybe(s, "storm_amplitude", c.synth.storm_amplitude);
    maybe(s, "temporal_corr_h", c.synth.temporal_corr_h);
    maybe(s, "spatial_corr_deg", c.synth.spatial_corr_deg);
    maybe(s, "mismatch_c4", c.synth.mismatch_c4);
  }
  return c;
}

std::vector<Voyage> load_stage(const PipelineConfig& c, const char* stage) {
  fs::path dir = c.out_dir / stage;
  if (!fs::exists(dir / "index.json")) {
    throw DataError("no corpus at " + dir.string() +
                    " (run the earlier pipeline stages first)");
  }
  return load_voyages(dir);
}

std::string canonical_model(std::string name) {
  for (char& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (name == "LSTM") return "LSTM";
  if (name == "KNN") return "KNN";
  if (name == "DTW" || name == "1NN-DTW") return "1NN-DTW";
  if (name == "HMM") return "HMM";
  if (name == "IDENTITY") return "Identity";
  throw ConfigError("unknown model \"" + name +
                    "\" (expected lstm, knn, dtw, hmm or identity)");
}

// Training-split cluster voyages, scored, plus the test split. Mirrors the
// leakage rules of run_experiment so single-model commands agree with it.
struct SplitCorpus {
  std::vector<Voyage> train;
  std::vector<Voyage> test;
  NormalizationConstants norm;
  FuelModelCoeffs coeffs;
  ClusterSet clusters;
};

SplitCorpus split_and_score(const PipelineConfig& c, const std::vector<Voyage>& corpus) {
  SplitCorpus s;
  std::vector<std::string> ids, train_ids, test_ids;
  for (const Voyage& v : corpus) ids.push_back(v.id);
  split_voyages(ids, c.experiment.train_fraction, c.seed, train_ids, test_ids);
  std::unordered_set<std::string> train_set(train_ids.begin(), train_ids.end());
  for (const Voyage& v : corpus) {
    (train_set.count(v.id) ? s.train : s.test).push_back(v);
  }
  s.coeffs = c.calibrate_fuel ? calibrate_fuel_model(s.train) : c.fixed_coeffs;
  s.norm = score_corpus(s.train);
  s.clusters = percentile_clusters(s.train);
  return s;
}

std::vector<Voyage> cluster_members_of(const SplitCorpus& s, const std::string& cluster_name) {
  int ci = cluster_index(cluster_name);
  std::unordered_set<std::string> members(s.clusters.members[ci].begin(),
                                          s.clusters.members[ci].end());
  std::vector<Voyage> out;
  for (const Voyage& v : s.train) {
    if (members.count(v.id)) out.push_back(v);
  }
  if (out.empty()) throw DataError("cluster " + cluster_name + " is empty");
  return out;
}

int cmd_synth(const PipelineConfig& c) {
  SynthConfig sc = c.synth;
  sc.seed = c.seed;
  log_line("generating corpus: " + std::to_string(sc.n_voyages) + " voyages, seed " +
           std::to_string(sc.seed));
  write_synth_corpus(c.out_dir, sc);
  log_line("corpus written to " + c.out_dir.string());
  return 0;
}

int cmd_ingest(PipelineConfig& c) {
  fs::path raw = c.raw_path();
  if (!fs::exists(raw)) throw DataError("raw record file not found: " + raw.string());
  log_line("parsing " + raw.string());
  ParseResult pr = parse_records(read_file(raw));
  log_line(std::to_string(pr.records.size()) + " records parsed, " +
           std::to_string(pr.dropped) + " dropped");
  std::vector<Record> rs = resample_1min(pr.records);
  std::vector<Voyage> voyages = tag_voyages(rs, c.route);
  if (c.threshold_auto) {
    c.route.cruising_sog_threshold = auto_cruising_threshold(voyages);
    log_line("auto cruising threshold: " + fmt_double(c.route.cruising_sog_threshold) + " m/s");
  }
  for (Voyage& v : voyages) annotate_voyage(v, c.route);
  save_voyages(voyages, c.out_dir / "voyages");
  log_line(std::to_string(voyages.size()) + " voyages tagged");
  return 0;
}

int cmd_fuse(const PipelineConfig& c) {
  std::vector<Voyage> voyages = load_stage(c, "voyages");
  fs::path manifest = c.grids_path();
  if (!fs::exists(manifest)) throw DataError("weather grid manifest not found: " + manifest.string());
  WeatherGrids grids = load_weather_grids(manifest);
  for (Voyage& v : voyages) attach_weather(v, grids);
  save_voyages(voyages, c.out_dir / "fused");
  log_line("weather attached to " + std::to_string(voyages.size()) + " voyages");
  return 0;
}

int cmd_calibrate(const PipelineConfig& c) {
  if (!c.calibrate_fuel) {
    throw ConfigError("fuel_model.mode is \"fixed\"; nothing to calibrate");
  }
  std::vector<Voyage> voyages = load_stage(c, "fused");
  FuelModelCoeffs coeffs = calibrate_fuel_model(voyages);
  save_fuel_model(c.out_dir / "fuel_model.json", coeffs, std::nullopt);
  log_line("fuel model: c0=" + fmt_double(coeffs.c0) + " c1=" + fmt_double(coeffs.c1) +
           " c2=" + fmt_double(coeffs.c2) + " c3=" + fmt_double(coeffs.c3) +
           " rmse=" + fmt_double(coeffs.rmse));
  return 0;
}

int cmd_score(const PipelineConfig& c) {
  std::vector<Voyage> voyages = load_stage(c, "fused");
  score_corpus(voyages);
  CsvTable t;
  t.header = {"voyage_id", "direction", "fuel_l", "time_h", "distance_km", "eff_score"};
  for (const Voyage& v : voyages) {
    t.rows.push_back({v.id, to_string(v.direction), fmt_double(v.totals->fuel_l),
                      fmt_double(v.totals->time_h), fmt_double(v.totals->distance_km),
                      fmt_double(*v.eff_score)});
  }
  fs::create_directories(c.out_dir / "scores");
  atomic_write_file(c.out_dir / "scores" / "scores.csv", format_csv(t));
  StatsTable stats = dataset_stats(voyages, c.route);
  std::string stats_csv = format_stats_csv(stats);
  atomic_write_file(c.out_dir / "scores" / "stats.csv", stats_csv);
  std::cout << stats_csv;
  log_line(std::to_string(voyages.size()) + " voyages scored");
  return 0;
}

int cmd_cluster(const PipelineConfig& c) {
  std::vector<Voyage> voyages = load_stage(c, "fused");
  score_corpus(voyages);
  ClusterSet cs = percentile_clusters(voyages);
  save_clusters(c.out_dir / "clusters.json", cs);
  std::string sizes;
  for (int i = 0; i < 4; ++i) {
    if (i) sizes += ", ";
    sizes += std::string(kClusterNames[i]) + "=" + std::to_string(cs.members[i].size());
  }
  log_line("clusters: " + sizes);
  return 0;
}

int cmd_train(const PipelineConfig& c, const std::string& model_arg,
              const std::string& cluster_name) {
  std::string model = canonical_model(model_arg);
  std::vector<Voyage> corpus = load_stage(c, "fused");
  SplitCorpus s = split_and_score(c, corpus);
  std::vector<Voyage> cluster = cluster_members_of(s, cluster_name);
  std::size_t ci = static_cast<std::size_t>(cluster_index(cluster_name));
  fs::create_directories(c.out_dir / "models");
  fs::path base = c.out_dir / "models" / (model + "_" + cluster_name);

  if (model == "LSTM") {
    LstmConfig lc = c.experiment.lstm;
    lc.seed = c.seed ^ hash_label(cluster_name);
    LstmBundle b = train_lstm_bundle(cluster, lc);
    save_lstm(base.string() + ".bin", b);
    log_line("LSTM trained on " + cluster_name + ", final loss " +
             fmt_double(b.loss_curve.empty() ? 0.0 : b.loss_curve.back()));
  } else if (model == "KNN") {
    KnnModel m = build_cluster_knn(cluster, c.experiment.knn_grid, c.seed, ci);
    save_knn(base.string() + ".json", m);
    log_line("KNN trained on " + cluster_name + ", k=" + std::to_string(m.k));
  } else if (model == "HMM") {
    HmmModel m = fit_hmm(weather_observations(cluster), c.seed ^ hash_label(cluster_name),
                         c.experiment.hmm_max_iter, c.experiment.hmm_tol);
    SpeedPolicy p = build_speed_policy(cluster, m, c.experiment.hmm_bins);
    save_hmm(base.string() + ".json", m, p);
    log_line("HMM trained on " + cluster_name);
  } else if (model == "1NN-DTW") {
    // instance-based: persist the retrieval pool reference
    json j;
    j["schema_version"] = 1;
    j["model"] = model;
    j["cluster"] = cluster_name;
    j["members"] = json::array();
    for (const Voyage& v : cluster) j["members"].push_back(v.id);
    atomic_write_file(base.string() + ".json", j.dump(2) + "\n");
    log_line("1NN-DTW pool for " + cluster_name + ": " +
             std::to_string(cluster.size()) + " voyages");
  } else {
    throw ConfigError("the identity baseline has nothing to train");
  }
  return 0;
}

int cmd_optimize(const PipelineConfig& c, const std::string& model_arg,
                 const std::string& cluster_name) {
  std::string model = canonical_model(model_arg);
  std::vector<Voyage> corpus = load_stage(c, "fused");
  SplitCorpus s = split_and_score(c, corpus);
  std::vector<Voyage> cluster = cluster_members_of(s, cluster_name);
  std::size_t ci = static_cast<std::size_t>(cluster_index(cluster_name));

  std::optional<LstmBundle> lstm;
  std::optional<KnnModel> knn;
  std::optional<HmmModel> hmm;
  std::optional<SpeedPolicy> policy;
  if (model == "LSTM") {
    LstmConfig lc = c.experiment.lstm;
    lc.seed = c.seed ^ hash_label(cluster_name);
    lstm = train_lstm_bundle(cluster, lc);
  } else if (model == "KNN") {
    knn = build_cluster_knn(cluster, c.experiment.knn_grid, c.seed, ci);
  } else if (model == "HMM") {
    hmm = fit_hmm(weather_observations(cluster), c.seed ^ hash_label(cluster_name),
                  c.experiment.hmm_max_iter, c.experiment.hmm_tol);
    policy = build_speed_policy(cluster, *hmm, c.experiment.hmm_bins);
  }

  CsvTable t;
  t.header = {"voyage_id", "position", "sog_measured", "sog_optimized", "constrained"};
  std::size_t n_constrained = 0;
  for (const Voyage& v : s.test) {
    std::vector<ProfileStep> steps = profile_steps(v);
    SpeedProfile meas = measured_profile(v);
    std::vector<double> meas_legs(meas.sog.begin(), meas.sog.end() - 1);
    std::vector<bool> cruising(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) {
      cruising[i] = v.records[i].speed_mode == SpeedMode::Cruising;
    }

    SpeedProfile pred;
    if (model == "Identity") {
      pred = meas;
    } else if (model == "LSTM") {
      pred = lstm_predict(*lstm, v, c.experiment.sog_min, c.experiment.sog_max);
    } else if (model == "KNN") {
      pred = knn_predict_profile(*knn, v, c.experiment.sog_min, c.experiment.sog_max);
    } else if (model == "1NN-DTW") {
      pred = nn1_dtw_predict(cluster, v, c.experiment.dtw);
      for (double& x : pred.sog) x = std::clamp(x, c.experiment.sog_min, c.experiment.sog_max);
    } else {
      pred = hmm_predict(*hmm, *policy, v, c.experiment.sog_min, c.experiment.sog_max);
    }

    std::vector<double> legs(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) {
      legs[i] = cruising[i] ? pred.sog[i] : meas_legs[i];
    }
    double meas_time =
        estimate_profile_efficiency(meas_legs, steps, s.coeffs, s.norm).time_h;
    ConstraintOutcome con = enforce_arrival_constraint(
        legs, steps, cruising, meas_time, c.experiment.arrival_slack,
        c.experiment.sog_min, c.experiment.sog_max);
    std::vector<double> final_legs = con.feasible ? std::move(con.sog) : meas_legs;
    if (con.constrained) n_constrained++;

    for (std::size_t i = 0; i < meas.positions.size(); ++i) {
      double opt = i < final_legs.size() ? final_legs[i] : final_legs.back();
      t.rows.push_back({v.id, fmt_double(meas.positions[i]), fmt_double(meas.sog[i]),
                        fmt_double(opt), con.constrained ? "1" : "0"});
    }
  }
  fs::create_directories(c.out_dir / "profiles");
  fs::path out = c.out_dir / "profiles" / (model + "_" + cluster_name + ".csv");
  atomic_write_file(out, format_csv(t));
  log_line(model + " on " + cluster_name + ": " + std::to_string(s.test.size()) +
           " test voyages optimized, " + std::to_string(n_constrained) + " constrained");
  return 0;
}

int cmd_evaluate(const PipelineConfig& c) {
  std::vector<Voyage> corpus = load_stage(c, "fused");
  ExperimentConfig ec = c.experiment;
  ec.seed = c.seed;
  ec.jobs = c.jobs;
  FuelModelCoeffs fixed = c.fixed_coeffs;
  log_line("experiment: " + std::to_string(corpus.size()) + " voyages, seed " +
           std::to_string(ec.seed) + ", jobs " + std::to_string(ec.jobs));
  ExperimentResult res =
      run_experiment(corpus, ec, c.thresholds, c.calibrate_fuel ? nullptr : &fixed);
  emit_reports(res, c.out_dir / "reports");
  for (std::size_t mi = 0; mi < res.gains.models.size(); ++mi) {
    log_line("avg gain " + res.gains.models[mi] + ": " +
             fmt_double(res.gains.averages[mi].mean_gain_pct) + "%");
  }
  for (std::size_t ci = 0; ci < res.gains.clusters.size(); ++ci) {
    for (std::size_t mi = 0; mi < res.gains.models.size(); ++mi) {
      const GainCell& cell = res.gains.cells[ci][mi];
      if (!cell.ok) {
        log_line("cell " + res.gains.clusters[ci] + "/" + res.gains.models[mi] +
                 " failed: " + cell.error);
      }
    }
  }
  log_line("reports written to " + (c.out_dir / "reports").string());
  return 0;
}

int cmd_report(const PipelineConfig& c) {
  fs::path path = c.out_dir / "reports" / "records.csv";
  if (!fs::exists(path)) throw DataError("no records file at " + path.string());
  CsvTable t = read_csv_file(path);
  std::vector<EvaluationRecord> records;
  for (const auto& row : t.rows) {
    EvaluationRecord r;
    r.voyage_id = row[0];
    r.cluster = row[1];
    r.model = row[2];
    r.eff_meas = std::strtod(row[3].c_str(), nullptr);
    r.eff_pred = std::strtod(row[4].c_str(), nullptr);
    r.gain_defined = row[5] != "NA";
    r.gain_pct = r.gain_defined ? std::strtod(row[5].c_str(), nullptr) : 0.0;
    r.weather_state = weather_state_from_string(row[6]);
    r.constrained = row[7] == "1";
    records.push_back(std::move(r));
  }
  ExperimentResult res;
  res.records = std::move(records);
  res.gains = gain_table_from_records(res.records);
  res.breakdown = weather_breakdown(res.records);
  emit_reports(res, c.out_dir / "reports");
  log_line("aggregate tables rebuilt from " + std::to_string(res.records.size()) +
           " records");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voyopt: fixed-route voyage efficiency toolkit"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::string> out_flag;
  std::optional<int> jobs_flag;
  bool print_default = false;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed_flag, "override the config seed");
  app.add_option("--out", out_flag, "override the output directory");
  app.add_option("--jobs", jobs_flag, "worker threads for evaluate (default 1)");
  app.add_flag("--print-default-config", print_default,
               "print the default JSON config and exit");

  CLI::App* sub_synth = app.add_subcommand("synth", "generate a synthetic corpus");
  CLI::App* sub_ingest =
      app.add_subcommand("ingest", "parse, resample and tag raw records into voyages");
  CLI::App* sub_fuse = app.add_subcommand("fuse", "attach weather grids to voyages");
  CLI::App* sub_calibrate =
      app.add_subcommand("calibrate", "fit the surrogate fuel-rate model");
  CLI::App* sub_score =
      app.add_subcommand("score", "voyage totals, efficiency scores and corpus stats");
  CLI::App* sub_cluster =
      app.add_subcommand("cluster", "nested percentile clusters of scored voyages");
  std::string train_model, train_cluster;
  CLI::App* sub_train = app.add_subcommand("train", "train one model on one cluster");
  sub_train->add_option("model", train_model, "lstm | knn | dtw | hmm")->required();
  sub_train->add_option("cluster", train_cluster, "Top10Pr | Top25Pr | Top50Pr | Top75Pr")
      ->required();
  std::string opt_model, opt_cluster;
  CLI::App* sub_optimize =
      app.add_subcommand("optimize", "optimized test-voyage profiles for one model+cluster");
  sub_optimize->add_option("model", opt_model, "identity | lstm | knn | dtw | hmm")->required();
  sub_optimize->add_option("cluster", opt_cluster, "Top10Pr | Top25Pr | Top50Pr | Top75Pr")
      ->required();
  CLI::App* sub_evaluate =
      app.add_subcommand("evaluate", "full experiment: every model on every cluster");
  CLI::App* sub_report =
      app.add_subcommand("report", "rebuild aggregate tables from reports/records.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (print_default) {
      std::cout << default_config_json().dump(2) << "\n";
      return 0;
    }

    json cfg_json = default_config_json();
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) {
        throw DataError("config file not found: " + config_path);
      }
      cfg_json = json::parse(read_file(config_path));
    }
    PipelineConfig cfg = parse_config(cfg_json);
    if (seed_flag) cfg.seed = *seed_flag;
    if (out_flag) cfg.out_dir = *out_flag;
    if (jobs_flag) cfg.jobs = *jobs_flag;

    if (sub_synth->parsed()) return cmd_synth(cfg);
    if (sub_ingest->parsed()) return cmd_ingest(cfg);
    if (sub_fuse->parsed()) return cmd_fuse(cfg);
    if (sub_calibrate->parsed()) return cmd_calibrate(cfg);
    if (sub_score->parsed()) return cmd_score(cfg);
    if (sub_cluster->parsed()) return cmd_cluster(cfg);
    if (sub_train->parsed()) return cmd_train(cfg, train_model, train_cluster);
    if (sub_optimize->parsed()) return cmd_optimize(cfg, opt_model, opt_cluster);
    if (sub_evaluate->parsed()) return cmd_evaluate(cfg);
    if (sub_report->parsed()) return cmd_report(cfg);

    std::cerr << app.help();
    return 1;
  } catch (const json::exception& e) {
    log_line(std::string("config error: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    log_line(std::string("error: ") + e.what());
    return 2;
  }
}
