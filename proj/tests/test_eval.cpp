// Experiment orchestration: seeded splits, arrival constraint, gain tables,
// report files. The heavy fixtures are built once and shared.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "voyopt/eval.hpp"
#include "voyopt/ingest.hpp"
#include "voyopt/io.hpp"
#include "voyopt/synth.hpp"

using namespace voyopt;
namespace fs = std::filesystem;

namespace {

const std::vector<Voyage>& eval_corpus() {
  static const std::vector<Voyage> corpus = [] {
    SynthConfig s;
    s.n_voyages = 40;
    s.seed = 21;
    const SynthOutput out = generate_voyages(s);
    const RouteConfig route = synth_route_config(s);
    std::vector<Voyage> v = tag_voyages(out.log, route);
    for (Voyage& voy : v) annotate_voyage(voy, route);
    return v;
  }();
  return corpus;
}

ExperimentConfig fast_config() {
  ExperimentConfig cfg;
  cfg.lstm.hidden_dim = 4;
  cfg.lstm.window = 8;
  cfg.lstm.epochs = 3;
  cfg.profile_plots = 2;
  return cfg;
}

const ExperimentResult& shared_result() {
  static const ExperimentResult r =
      run_experiment(eval_corpus(), fast_config(), WeatherThresholds{});
  return r;
}

ProfileStep leg(double distance_m) {
  ProfileStep s;
  s.distance_m = distance_m;
  return s;
}

}  // namespace

TEST_CASE("voyage split is seeded, sorted, and covers every id once") {
  std::vector<std::string> ids;
  for (int i = 10; i >= 1; --i) {
    ids.push_back("V" + std::to_string(1000 + i).substr(1));
  }

  std::vector<std::string> train, test;
  split_voyages(ids, 0.7, 7, train, test);
  CHECK(train.size() == 7);
  CHECK(test.size() == 3);
  CHECK(std::is_sorted(train.begin(), train.end()));
  CHECK(std::is_sorted(test.begin(), test.end()));

  std::set<std::string> all(train.begin(), train.end());
  all.insert(test.begin(), test.end());
  CHECK(all.size() == 10);

  std::vector<std::string> train2, test2;
  split_voyages(ids, 0.7, 7, train2, test2);
  CHECK(train2 == train);
  CHECK(test2 == test);

  // Both sides keep at least one voyage however extreme the fraction.
  split_voyages(ids, 0.01, 7, train2, test2);
  CHECK(train2.size() == 1);
  split_voyages(ids, 0.99, 7, train2, test2);
  CHECK(test2.size() == 1);

  CHECK_THROWS_AS(split_voyages({"V0001"}, 0.7, 7, train2, test2), DataError);
  CHECK_THROWS_AS(split_voyages(ids, 0.0, 7, train2, test2), ConfigError);
  CHECK_THROWS_AS(split_voyages(ids, 1.0, 7, train2, test2), ConfigError);
}

TEST_CASE("arrival constraint scales only cruising legs") {
  const std::vector<ProfileStep> steps = {leg(3600.0), leg(3600.0),
                                          leg(3600.0)};
  const std::vector<bool> all_cruising = {true, true, true};

  // 2 m/s over 3 x 3600 m is 1.5 h, already inside the 5% slack window.
  const std::vector<double> pred = {2.0, 2.0, 2.0};
  ConstraintOutcome out = enforce_arrival_constraint(pred, steps, all_cruising,
                                                     1.5, 0.05, 0.5, 12.0);
  CHECK(out.sog == pred);
  CHECK_FALSE(out.constrained);
  CHECK(out.feasible);

  // Deadline 1.0 h needs exactly a 1.5x speed-up.
  out = enforce_arrival_constraint(pred, steps, all_cruising, 1.0, 0.0, 0.5,
                                   12.0);
  CHECK(out.constrained);
  CHECK(out.feasible);
  for (double s : out.sog) CHECK(s == doctest::Approx(3.0).epsilon(1e-9));
  double t = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    t += steps[i].distance_m / out.sog[i] / 3600.0;
  }
  CHECK(t <= 1.0 + 1e-9);

  // The maneuvering middle leg keeps its speed; the cruisers double.
  const std::vector<double> mixed = {2.0, 1.0, 2.0};
  const std::vector<bool> mask = {true, false, true};
  out = enforce_arrival_constraint(mixed, steps, mask, 1.5, 0.0, 0.5, 12.0);
  CHECK(out.feasible);
  CHECK(out.sog[1] == 1.0);
  CHECK(out.sog[0] == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(out.sog[2] == doctest::Approx(4.0).epsilon(1e-9));

  // Capping the cruisers at 3 m/s cannot reach the deadline.
  out = enforce_arrival_constraint(mixed, steps, mask, 1.5, 0.0, 0.5, 3.0);
  CHECK(out.constrained);
  CHECK_FALSE(out.feasible);
  CHECK(out.sog[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(out.sog[1] == 1.0);
  CHECK(out.sog[2] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("dominant weather state is the modal label, rougher on ties") {
  const WeatherThresholds th{};
  Voyage v = testutil::straight_voyage("V0001", {4.0, 4.0, 4.0, 4.0});

  auto set_waves = [&](std::vector<double> w) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      v.records[i].wave_height = w[i];
    }
  };

  set_waves({0.3, 0.3, 0.3, 1.5});
  CHECK(dominant_weather_state(v, th) == WeatherState::Calm);
  set_waves({0.3, 0.3, 0.8, 0.8});
  CHECK(dominant_weather_state(v, th) == WeatherState::Moderate);
  set_waves({1.5, 1.5, 0.8, 0.3});
  CHECK(dominant_weather_state(v, th) == WeatherState::Rough);
  set_waves({0.3, 1.5, 0.3, 1.5});
  CHECK(dominant_weather_state(v, th) == WeatherState::Rough);
}

TEST_CASE("cluster store picks k on a holdout, or 1 when too small") {
  const auto& corpus = eval_corpus();
  const std::vector<Voyage> tiny(corpus.begin(), corpus.begin() + 3);
  const KnnModel small = build_cluster_knn(tiny, {1, 3, 5}, 11, 0);
  CHECK(small.k == 1);

  const std::vector<Voyage> mid(corpus.begin(), corpus.begin() + 12);
  const KnnModel a = build_cluster_knn(mid, {1, 3, 5, 9}, 11, 2);
  const KnnModel b = build_cluster_knn(mid, {1, 3, 5, 9}, 11, 2);
  CHECK(a.k >= 1);
  CHECK(a.k == b.k);
}

TEST_CASE("experiment runs every model over every cluster deterministically") {
  const ExperimentResult& r = shared_result();
  const auto& corpus = eval_corpus();

  CHECK(r.gains.models == model_names());
  REQUIRE(r.gains.clusters.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(r.gains.clusters[i] == kClusterNames[i]);

  CHECK(r.train_ids.size() == 28);
  CHECK(r.test_ids.size() == 12);
  CHECK(std::is_sorted(r.train_ids.begin(), r.train_ids.end()));
  CHECK(std::is_sorted(r.test_ids.begin(), r.test_ids.end()));
  std::set<std::string> seen(r.train_ids.begin(), r.train_ids.end());
  seen.insert(r.test_ids.begin(), r.test_ids.end());
  CHECK(seen.size() == corpus.size());

  // Every (cluster, model) cell trained and evaluated the full test set.
  for (std::size_t ci = 0; ci < 4; ++ci) {
    for (std::size_t mi = 0; mi < r.gains.models.size(); ++mi) {
      const GainCell& c = r.gains.cells[ci][mi];
      REQUIRE_MESSAGE(c.ok, r.gains.clusters[ci], "/", r.gains.models[mi],
                      ": ", c.error);
      CHECK(c.tested == 12);
      CHECK(c.defined <= c.tested);
    }
  }
  CHECK(r.records.size() == 4 * 5 * 12);

  // The baseline never moves: its gain is zero to the last bit.
  for (const EvaluationRecord& rec : r.records) {
    if (rec.model == "Identity" && rec.gain_defined) {
      CHECK(rec.gain_pct == 0.0);
      CHECK(rec.eff_pred == rec.eff_meas);
    }
  }
  for (std::size_t ci = 0; ci < 4; ++ci) {
    CHECK(r.gains.cells[ci][0].mean_gain_pct == 0.0);
    CHECK(r.gains.cells[ci][0].improved == 0);
  }

  // The averages row is the plain column mean over ok cells.
  for (std::size_t mi = 0; mi < r.gains.models.size(); ++mi) {
    double mean = 0.0, improved = 0.0, tested = 0.0;
    for (std::size_t ci = 0; ci < 4; ++ci) {
      mean += r.gains.cells[ci][mi].mean_gain_pct;
      improved += static_cast<double>(r.gains.cells[ci][mi].improved);
      tested += static_cast<double>(r.gains.cells[ci][mi].tested);
    }
    CHECK(r.gains.averages[mi].mean_gain_pct ==
          doctest::Approx(mean / 4.0).epsilon(1e-12));
    CHECK(r.gains.averages[mi].improved_avg ==
          doctest::Approx(improved / 4.0).epsilon(1e-12));
    CHECK(r.gains.averages[mi].tested_avg ==
          doctest::Approx(tested / 4.0).epsilon(1e-12));
  }

  // Profile plots come from the test set, one measured plus four predictions.
  REQUIRE(r.plots.size() == 2);
  for (const ProfilePlot& p : r.plots) {
    CHECK(std::find(r.test_ids.begin(), r.test_ids.end(), p.voyage_id) !=
          r.test_ids.end());
    CHECK(p.predicted.size() == 4);
    CHECK(!p.measured.sog.empty());
  }

  // A rerun reproduces every record bit for bit.
  const ExperimentResult again =
      run_experiment(corpus, fast_config(), WeatherThresholds{});
  REQUIRE(again.records.size() == r.records.size());
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    CHECK(again.records[i].voyage_id == r.records[i].voyage_id);
    CHECK(again.records[i].cluster == r.records[i].cluster);
    CHECK(again.records[i].model == r.records[i].model);
    CHECK(again.records[i].eff_meas == r.records[i].eff_meas);
    CHECK(again.records[i].eff_pred == r.records[i].eff_pred);
    CHECK(again.records[i].gain_pct == r.records[i].gain_pct);
    CHECK(again.records[i].gain_defined == r.records[i].gain_defined);
  }
}

TEST_CASE("experiment rejects unusable corpora") {
  const auto& corpus = eval_corpus();
  const ExperimentConfig cfg = fast_config();
  const WeatherThresholds th{};

  const std::vector<Voyage> three(corpus.begin(), corpus.begin() + 3);
  CHECK_THROWS_AS(run_experiment(three, cfg, th), DataError);

  std::vector<Voyage> dup(corpus.begin(), corpus.begin() + 6);
  dup[1].id = dup[0].id;
  CHECK_THROWS_AS(run_experiment(dup, cfg, th), DataError);

  std::vector<Voyage> unlabeled(corpus.begin(), corpus.begin() + 6);
  unlabeled[2].records[0].speed_mode.reset();
  CHECK_THROWS_AS(run_experiment(unlabeled, cfg, th), DataError);

  ExperimentConfig bad = cfg;
  bad.train_fraction = 1.5;
  CHECK_THROWS_AS(run_experiment(corpus, bad, th), ConfigError);
}

TEST_CASE("tables rebuilt from records match the experiment's tables") {
  const ExperimentResult& r = shared_result();

  const GainTable rebuilt = gain_table_from_records(r.records);
  REQUIRE(rebuilt.clusters == r.gains.clusters);
  REQUIRE(rebuilt.models == r.gains.models);
  for (std::size_t ci = 0; ci < 4; ++ci) {
    for (std::size_t mi = 0; mi < rebuilt.models.size(); ++mi) {
      const GainCell& a = rebuilt.cells[ci][mi];
      const GainCell& b = r.gains.cells[ci][mi];
      CHECK(a.mean_gain_pct == b.mean_gain_pct);
      CHECK(a.improved == b.improved);
      CHECK(a.tested == b.tested);
      CHECK(a.defined == b.defined);
    }
  }

  const WeatherBreakdownTable wb = weather_breakdown(r.records);
  REQUIRE(wb.models == r.breakdown.models);
  REQUIRE(wb.cells.size() == r.breakdown.cells.size());
  for (std::size_t i = 0; i < wb.cells.size(); ++i) {
    CHECK(wb.cells[i].has_value() == r.breakdown.cells[i].has_value());
    if (wb.cells[i] && r.breakdown.cells[i]) {
      CHECK(wb.cells[i]->mean_gain_pct == r.breakdown.cells[i]->mean_gain_pct);
      CHECK(wb.cells[i]->std_gain_pct == r.breakdown.cells[i]->std_gain_pct);
      CHECK(wb.cells[i]->n_voyages == r.breakdown.cells[i]->n_voyages);
    }
  }
}

TEST_CASE("aggregation skips undefined gains and excludes the baseline") {
  auto rec = [](const std::string& model, double gain, bool defined,
                WeatherState st) {
    EvaluationRecord r;
    r.voyage_id = "V0001";
    r.cluster = "Top75Pr";
    r.model = model;
    r.eff_meas = defined ? 0.4 : -0.1;
    r.eff_pred = 0.5;
    r.gain_pct = defined ? gain : 0.0;
    r.gain_defined = defined;
    r.weather_state = st;
    return r;
  };

  const std::vector<EvaluationRecord> records = {
      rec("Identity", 0.0, true, WeatherState::Calm),
      rec("Identity", 0.0, true, WeatherState::Rough),
      rec("Identity", 0.0, false, WeatherState::Moderate),
      rec("HMM", 10.0, true, WeatherState::Calm),
      rec("HMM", -5.0, true, WeatherState::Rough),
      rec("HMM", 0.0, false, WeatherState::Moderate),
  };

  // The rebuilt grid always spans the full 4x5 canonical layout; clusters the
  // records never touched stay at tested == 0.
  const GainTable t = gain_table_from_records(records);
  REQUIRE(t.clusters.size() == 4);
  const auto ci = static_cast<std::size_t>(
      std::find(t.clusters.begin(), t.clusters.end(), "Top75Pr") -
      t.clusters.begin());
  REQUIRE(ci < t.clusters.size());
  const auto mi_id = static_cast<std::size_t>(
      std::find(t.models.begin(), t.models.end(), "Identity") -
      t.models.begin());
  const auto mi_hmm = static_cast<std::size_t>(
      std::find(t.models.begin(), t.models.end(), "HMM") - t.models.begin());
  REQUIRE(mi_id < t.models.size());
  REQUIRE(mi_hmm < t.models.size());
  for (std::size_t other = 0; other < t.clusters.size(); ++other) {
    if (other == ci) continue;
    for (std::size_t mi = 0; mi < t.models.size(); ++mi) {
      CHECK(t.cells[other][mi].tested == 0);
    }
  }

  const GainCell& id_cell = t.cells[ci][mi_id];
  CHECK(id_cell.tested == 3);
  CHECK(id_cell.defined == 2);
  CHECK(id_cell.mean_gain_pct == 0.0);
  CHECK(id_cell.improved == 0);

  const GainCell& hmm_cell = t.cells[ci][mi_hmm];
  CHECK(hmm_cell.tested == 3);
  CHECK(hmm_cell.defined == 2);
  CHECK(hmm_cell.mean_gain_pct == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(hmm_cell.improved == 1);

  const WeatherBreakdownTable wb = weather_breakdown(records);
  CHECK(std::find(wb.models.begin(), wb.models.end(), "Identity") ==
        wb.models.end());
  const auto wi = static_cast<std::size_t>(
      std::find(wb.models.begin(), wb.models.end(), "HMM") - wb.models.begin());
  REQUIRE(wi < wb.models.size());
  const auto& calm = wb.cells[wi * 3 + 0];
  REQUIRE(calm.has_value());
  CHECK(calm->mean_gain_pct == 10.0);
  CHECK(calm->std_gain_pct == 0.0);
  CHECK(calm->n_voyages == 1);
  // The only Moderate record is undefined, so that cell stays empty.
  CHECK_FALSE(wb.cells[wi * 3 + 1].has_value());
  const auto& rough = wb.cells[wi * 3 + 2];
  REQUIRE(rough.has_value());
  CHECK(rough->mean_gain_pct == -5.0);
  CHECK(rough->n_voyages == 1);
}

TEST_CASE("report files land on disk with the agreed schemas") {
  const ExperimentResult& r = shared_result();
  const fs::path dir = fs::temp_directory_path() / "voyopt_eval_reports";
  fs::remove_all(dir);
  emit_reports(r, dir);

  const CsvTable gains = parse_csv(read_file(dir / "gain_table.csv"));
  REQUIRE(gains.header == std::vector<std::string>{"cluster", "model",
                                                   "mean_gain_pct",
                                                   "improved_count",
                                                   "test_count"});
  // 4 clusters x 5 models plus one averages row per model.
  CHECK(gains.rows.size() == 25);
  std::size_t identity_rows = 0;
  for (const auto& row : gains.rows) {
    REQUIRE(row.size() == 5);
    if (row[1] == "Identity" && row[0] != "Average") {
      ++identity_rows;
      CHECK(row[2] == "0");
    }
  }
  CHECK(identity_rows == 4);

  const CsvTable wb = parse_csv(read_file(dir / "weather_breakdown.csv"));
  REQUIRE(wb.header == std::vector<std::string>{"model", "state",
                                                "mean_gain_pct",
                                                "std_gain_pct", "n_voyages"});
  for (const auto& row : wb.rows) {
    REQUIRE(row.size() == 5);
    CHECK(row[0] != "Identity");
    CHECK((row[1] == "Calm" || row[1] == "Moderate" || row[1] == "Rough"));
  }

  const CsvTable recs = parse_csv(read_file(dir / "records.csv"));
  REQUIRE(recs.header ==
          std::vector<std::string>{"voyage_id", "cluster", "model", "eff_meas",
                                   "eff_pred", "gain_pct", "weather_state",
                                   "constrained_flag"});
  CHECK(recs.rows.size() == r.records.size());
  for (const auto& row : recs.rows) {
    REQUIRE(row.size() == 8);
    CHECK((row[7] == "0" || row[7] == "1"));
  }

  for (const ProfilePlot& p : r.plots) {
    const fs::path svg = dir / ("profile_" + p.voyage_id + ".svg");
    REQUIRE(fs::exists(svg));
    CHECK(read_file(svg).find("<svg") != std::string::npos);
  }
  for (const std::string& model : model_names()) {
    if (model == "Identity") continue;
    const fs::path svg = dir / ("gains_" + model + ".svg");
    REQUIRE(fs::exists(svg));
    CHECK(read_file(svg).find("<svg") != std::string::npos);
  }

  fs::remove_all(dir);
}
