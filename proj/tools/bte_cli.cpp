// SPDX-License-Identifier: Apache-2.0
//
// bte — bus travel-time pipeline driver.
//
// Subcommands: ingest, train, calibrate, predict, replay.
// Exit codes: 0 success, 1 anomalies but output written, 2 fatal input error.

#include <stdexcept>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "bte/avl_ingest.hpp"
#include "bte/boosted_trees.hpp"
#include "bte/calibration.hpp"
#include "bte/csvutil.hpp"
#include "bte/hybrid.hpp"
#include "bte/replay.hpp"
#include "bte/route_model.hpp"

namespace {

using namespace bte;

constexpr int kOk = 0;
constexpr int kAnomalies = 1;
constexpr int kFatal = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

std::vector<SectionTraversal> load_traversals(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open traversal CSV: " + path);
  return read_traversal_csv(in);
}

struct SplitRatios {
  double train = 0.70;
  double calibration = 0.15;  // remainder is the test split
};

struct Splits {
  std::vector<SectionTraversal> train, calibration, test;
};

// Chronological split by trip start time; a trip never straddles splits.
Splits split_by_trip(const std::vector<SectionTraversal>& traversals,
                     const SplitRatios& ratios) {
  std::map<std::string, Timestamp> trip_start;
  for (const auto& t : traversals) {
    auto it = trip_start.find(t.trip_id);
    if (it == trip_start.end() || t.section_start_time < it->second)
      trip_start[t.trip_id] = t.section_start_time;
  }
  std::vector<std::pair<Timestamp, std::string>> trips;
  for (const auto& [id, start] : trip_start) trips.emplace_back(start, id);
  std::sort(trips.begin(), trips.end());

  size_t n = trips.size();
  size_t n_train = static_cast<size_t>(n * ratios.train);
  size_t n_calib = static_cast<size_t>(n * ratios.calibration);
  std::map<std::string, int> bucket;
  for (size_t i = 0; i < n; ++i)
    bucket[trips[i].second] =
        i < n_train ? 0 : (i < n_train + n_calib ? 1 : 2);

  Splits out;
  for (const auto& t : traversals) {
    switch (bucket[t.trip_id]) {
      case 0: out.train.push_back(t); break;
      case 1: out.calibration.push_back(t); break;
      default: out.test.push_back(t); break;
    }
  }
  return out;
}

std::vector<Sample> to_samples(const std::vector<SectionTraversal>& rows) {
  std::vector<Sample> dataset;
  dataset.reserve(rows.size());
  for (const auto& t : rows) {
    FeatureVector fv{t.day_of_week,
                     seconds_since_midnight(t.section_start_time),
                     t.section_id, lup_code(t.lup)};
    dataset.push_back({fv, t.travel_time_s});
  }
  return dataset;
}

int cmd_ingest(const std::vector<std::string>& inputs,
               const std::string& route_path, const std::string& out_path,
               const std::string& diag_path, const IngestConfig& config) {
  Route route = load_route_file(route_path);

  std::vector<AvlPoint> all_points;
  std::vector<RowDiagnostic> rejected;
  for (const auto& path : inputs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open AVL CSV: " + path);
    AvlParseResult parsed = parse_avl_csv(in);
    all_points.insert(all_points.end(), parsed.points.begin(),
                      parsed.points.end());
    rejected.insert(rejected.end(), parsed.rejected.begin(),
                    parsed.rejected.end());
  }

  CleanStats stats;
  auto cleaned = clean(std::move(all_points), route, config, &stats);
  std::vector<RowDiagnostic> trip_diags;
  auto trips = segment_trips(cleaned, route, config, &trip_diags);

  std::vector<SectionTraversal> traversals;
  std::vector<std::string> match_diags;
  for (const auto& trip : trips) {
    auto tr = match_stop_passages(trip, route, config, &match_diags);
    traversals.insert(traversals.end(), tr.begin(), tr.end());
  }

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output: " + out_path);
  write_traversal_csv(out, traversals);

  std::sort(rejected.begin(), rejected.end(),
            [](const RowDiagnostic& a, const RowDiagnostic& b) {
              if (a.vehicle_id != b.vehicle_id)
                return a.vehicle_id < b.vehicle_id;
              return a.row < b.row;
            });
  std::ostringstream diag;
  diag << "input_points=" << stats.input << " kept=" << stats.kept
       << " dropped_speed=" << stats.dropped_speed
       << " dropped_out_of_bbox=" << stats.dropped_out_of_bbox
       << " dropped_duplicate_time=" << stats.dropped_duplicate_time
       << " dropped_non_monotonic=" << stats.dropped_non_monotonic << "\n"
       << "trips=" << trips.size() << " traversals=" << traversals.size()
       << "\n";
  for (const auto& r : rejected)
    diag << "rejected_row vehicle=" << r.vehicle_id << " row=" << r.row
         << " reason=" << r.reason << "\n";
  for (const auto& d : trip_diags)
    diag << "segmentation vehicle=" << d.vehicle_id << " " << d.reason
         << "\n";
  for (const auto& d : match_diags) diag << "matching " << d << "\n";
  if (!diag_path.empty()) write_file(diag_path, diag.str());
  std::cerr << diag.str();

  bool anomalies =
      !rejected.empty() || !trip_diags.empty() || !match_diags.empty();
  return anomalies ? kAnomalies : kOk;
}

int cmd_train(const std::string& traversals_path, const std::string& out_path,
              const std::string& log_path, const TrainConfig& config,
              const SplitRatios& ratios) {
  auto traversals = load_traversals(traversals_path);
  Splits splits = split_by_trip(traversals, ratios);
  if (splits.train.empty()) throw std::runtime_error("empty training split");

  std::vector<Sample> dataset = to_samples(splits.train);
  std::vector<double> round_mse;
  BoostedForest forest = fit(dataset, config, &round_mse);
  write_file(out_path, save_model(forest));

  if (!log_path.empty()) {
    std::ostringstream log;
    log << "round,train_mse\n";
    for (size_t i = 0; i < round_mse.size(); ++i)
      log << (i + 1) << ',' << format_double(round_mse[i]) << '\n';
    write_file(log_path, log.str());
  }
  std::cerr << "trained " << forest.trees.size() << " trees on "
            << dataset.size() << " rows\n";
  return kOk;
}

int cmd_calibrate(const std::string& traversals_path,
                  const std::string& model_path,
                  const std::string& route_path, const std::string& out_path,
                  const SplitRatios& ratios, double window_s) {
  auto traversals = load_traversals(traversals_path);
  Splits splits = split_by_trip(traversals, ratios);
  if (splits.calibration.empty())
    throw std::runtime_error("empty calibration split");
  BoostedForest forest = load_model(read_file(model_path));
  Route route = load_route_file(route_path);

  // Probes may reach back into the training period.
  std::vector<SectionTraversal> probe_pool = splits.train;
  probe_pool.insert(probe_pool.end(), splits.calibration.begin(),
                    splits.calibration.end());

  CalibrationReport report =
      calibrate(splits.calibration, forest, route, probe_pool, window_s);
  report.split_note = "chronological " + format_double(ratios.train) + "/" +
                      format_double(ratios.calibration) + "/" +
                      format_double(1.0 - ratios.train - ratios.calibration) +
                      " by trip start";
  write_file(out_path, serialize_report(report));
  bool partial = !report.ns.present || !report.sis.present;
  if (partial) std::cerr << "warning: partial calibration report\n";
  return partial ? kAnomalies : kOk;
}

int cmd_predict(const std::string& model_path, const std::string& report_path,
                const std::string& store_path, const std::string& route_path,
                const std::string& at, int from_section,
                const std::string& out_path, double window_s) {
  BoostedForest forest = load_model(read_file(model_path));
  CalibrationReport report = parse_report(read_file(report_path));
  HybridWeights weights = HybridWeights::from_report(report);
  Route route = load_route_file(route_path);

  Timestamp c_time;
  try {
    c_time = parse_iso_datetime(at);
  } catch (const std::invalid_argument&) {
    c_time = parse_avl_datetime(at);
  }

  PrecedingTripStore store;
  store.insert_all(load_traversals(store_path));

  auto records = predict_downstream(route, from_section, c_time, forest,
                                    weights, store, window_s);

  std::ostringstream out;
  out << "section_id,c_time,ftt_s,probe_s,att_s,bat,used_fallback,"
         "preceding_trip_id\n";
  for (const auto& r : records) {
    out << r.section_id << ',' << format_iso_datetime(r.c_time) << ','
        << format_double(r.ftt_s) << ','
        << (r.probe_s ? format_double(*r.probe_s) : std::string()) << ','
        << format_double(r.att_s) << ',' << format_iso_datetime(r.bat) << ','
        << (r.used_fallback ? "1" : "0") << ','
        << (r.preceding_trip_id ? *r.preceding_trip_id : std::string())
        << '\n';
  }
  write_file(out_path, out.str());
  return kOk;
}

int cmd_replay(const std::string& model_path, const std::string& report_path,
               const std::string& traversals_path,
               const std::string& route_path, const std::string& out_dir,
               const SplitRatios& ratios, double window_s) {
  BoostedForest forest = load_model(read_file(model_path));
  CalibrationReport report = parse_report(read_file(report_path));
  HybridWeights weights = HybridWeights::from_report(report);
  Route route = load_route_file(route_path);

  auto traversals = load_traversals(traversals_path);
  Splits splits = split_by_trip(traversals, ratios);
  std::vector<SectionTraversal> warmup = splits.train;
  warmup.insert(warmup.end(), splits.calibration.begin(),
                splits.calibration.end());

  ReplayResult result =
      replay(splits.test, forest, weights, route, window_s, warmup);
  emit_report(result, out_dir);
  for (const auto& d : result.diagnostics) std::cerr << d << "\n";
  return result.diagnostics.empty() ? kOk : kAnomalies;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bus arrival-time pipeline: ingest, train, calibrate, "
               "predict, replay"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file (INI/TOML); flags override");

  SplitRatios ratios;
  IngestConfig ingest_cfg;
  TrainConfig train_cfg;
  double window_min = 30.0;

  app.add_option("--train-ratio", ratios.train, "Training split fraction")
      ->capture_default_str();
  app.add_option("--calibration-ratio", ratios.calibration,
                 "Calibration split fraction")
      ->capture_default_str();
  app.add_option("--window-minutes", window_min,
                 "Preceding-trip lookup window")
      ->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "AVL CSV -> traversal CSV");
  std::vector<std::string> ingest_inputs;
  std::string route_path, out_path, diag_path;
  ingest->add_option("inputs", ingest_inputs, "Raw AVL CSV files")
      ->required();
  ingest->add_option("--route", route_path, "Route config JSON")->required();
  ingest->add_option("--out", out_path, "Output traversal CSV")->required();
  ingest->add_option("--diagnostics", diag_path, "Diagnostics text file");
  ingest->add_option("--max-speed-kmh", ingest_cfg.max_speed_kmh)
      ->capture_default_str();
  ingest->add_option("--bbox-pad-m", ingest_cfg.bbox_pad_m)
      ->capture_default_str();
  ingest->add_option("--geofence-radius-m", ingest_cfg.geofence_radius_m)
      ->capture_default_str();
  ingest->add_option("--dwell-speed-kmh", ingest_cfg.dwell_speed_kmh)
      ->capture_default_str();
  ingest->add_option("--max-gap-s", ingest_cfg.max_gap_s)
      ->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Traversal CSV -> model artifact");
  std::string traversals_path, model_path, log_path;
  train->add_option("--traversals", traversals_path, "Traversal CSV")
      ->required();
  train->add_option("--out", model_path, "Model artifact path")->required();
  train->add_option("--log", log_path, "Per-round training MSE CSV");
  train->add_option("--alpha", train_cfg.alpha)->capture_default_str();
  train->add_option("--lambda", train_cfg.lambda)->capture_default_str();
  train->add_option("--learning-rate", train_cfg.learning_rate)
      ->capture_default_str();
  train->add_option("--n-estimators", train_cfg.n_estimators)
      ->capture_default_str();
  train->add_option("--colsample-bytree", train_cfg.colsample_bytree)
      ->capture_default_str();
  train->add_option("--max-depth", train_cfg.max_depth)
      ->capture_default_str();
  train->add_option("--min-child-weight", train_cfg.min_child_weight)
      ->capture_default_str();
  train->add_option("--seed", train_cfg.rng_seed)->capture_default_str();
  train->add_flag("--serial", [&train_cfg](int64_t) {
    train_cfg.parallel_split_search = false;
  }, "Use the serial reference split search");

  // calibrate
  auto* calib = app.add_subcommand(
      "calibrate", "Traversal CSV + model -> calibration report");
  std::string calib_model, calib_out;
  calib->add_option("--traversals", traversals_path, "Traversal CSV")
      ->required();
  calib->add_option("--model", calib_model, "Model artifact")->required();
  calib->add_option("--route", route_path, "Route config JSON")->required();
  calib->add_option("--out", calib_out, "Calibration report path")
      ->required();

  // predict
  auto* predict = app.add_subcommand(
      "predict", "Downstream arrival-time predictions at a given instant");
  std::string pr_model, pr_report, pr_store, pr_out, pr_at;
  int pr_from = 1;
  predict->add_option("--model", pr_model)->required();
  predict->add_option("--calibration", pr_report)->required();
  predict->add_option("--store", pr_store, "Traversal CSV of probe history")
      ->required();
  predict->add_option("--route", route_path)->required();
  predict->add_option("--at", pr_at, "Current time (ISO or AVL format)")
      ->required();
  predict->add_option("--from-section", pr_from)->required();
  predict->add_option("--out", pr_out, "Prediction CSV")->required();

  // replay
  auto* rp = app.add_subcommand(
      "replay", "Historical replay of the test split; emits report CSVs");
  std::string rp_model, rp_report, rp_outdir;
  rp->add_option("--model", rp_model)->required();
  rp->add_option("--calibration", rp_report)->required();
  rp->add_option("--traversals", traversals_path)->required();
  rp->add_option("--route", route_path)->required();
  rp->add_option("--outdir", rp_outdir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    double window_s = window_min * 60.0;
    if (ingest->parsed())
      return cmd_ingest(ingest_inputs, route_path, out_path, diag_path,
                        ingest_cfg);
    if (train->parsed())
      return cmd_train(traversals_path, model_path, log_path, train_cfg,
                       ratios);
    if (calib->parsed())
      return cmd_calibrate(traversals_path, calib_model, route_path,
                           calib_out, ratios, window_s);
    if (predict->parsed())
      return cmd_predict(pr_model, pr_report, pr_store, route_path, pr_at,
                         pr_from, pr_out, window_s);
    if (rp->parsed())
      return cmd_replay(rp_model, rp_report, traversals_path, route_path,
                        rp_outdir, ratios, window_s);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFatal;
  }
  return kFatal;
}
