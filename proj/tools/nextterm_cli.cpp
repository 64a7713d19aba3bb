// nextterm: synth | ingest | train | eval | predict | serve
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <csignal>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nextterm/nextterm.hpp"
#include "nextterm/service.hpp"

namespace {

using nlohmann::json;
using namespace nextterm;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

void print_config(const std::string& command, const json& cfg) {
  std::cerr << "# " << command << " " << cfg.dump() << '\n';
}

struct SynthArgs {
  SynthConfig cfg;
  std::string out;
  std::string truth;
  bool uniform_grades = false;
};

int run_synth(SynthArgs a, std::uint64_t seed) {
  a.cfg.seed = seed;
  a.cfg.ability_linked_grades = !a.uniform_grades;
  print_config("synth", {{"seed", seed},
                         {"out", a.out},
                         {"truth", a.truth},
                         {"students", a.cfg.num_students},
                         {"catalog_size", a.cfg.catalog_size},
                         {"terms", {a.cfg.min_terms, a.cfg.max_terms}},
                         {"courses_per_term", {a.cfg.min_courses, a.cfg.max_courses}},
                         {"ability_mean", a.cfg.ability_mean},
                         {"load_penalty", a.cfg.load_penalty},
                         {"withdraw_prob", a.cfg.withdraw_prob},
                         {"ability_linked_grades", a.cfg.ability_linked_grades}});
  const auto corpus = generate(a.cfg);
  write_file(a.out, serialize_transcript(corpus.records));
  if (!a.truth.empty()) write_file(a.truth, truth_to_json(corpus.truth).dump(2) + "\n");
  std::cerr << "wrote " << corpus.records.size() << " records\n";
  return kExitOk;
}

struct DataArgs {
  std::string data;
  double validation_fraction = kDefaultValidationFraction;
};

int run_ingest(const DataArgs& d, const std::string& out, std::uint64_t seed) {
  print_config("ingest", {{"seed", seed}, {"data", d.data}, {"out", out}, {"validation_fraction", d.validation_fraction}});
  auto records = load_transcript(d.data);
  const auto n_records = records.size();
  const auto prepared = prepare_data(std::move(records), d.validation_fraction, seed);
  std::size_t steps = 0;
  std::vector<TrainExample> all = prepared.split.train;
  all.insert(all.end(), prepared.split.validation.begin(), prepared.split.validation.end());
  for (const auto& ex : all) steps += ex.history.size();
  if (!out.empty()) write_file(out, dataset_to_json(prepared.catalog, build_examples(prepared.records, prepared.catalog).examples).dump() + "\n");
  std::cout << "records=" << n_records << "\n"
            << "courses=" << prepared.catalog.size() << "\n"
            << "history_steps=" << steps << "\n"
            << "examples=" << all.size() << "\n"
            << "skipped_students=" << prepared.skipped_students.size() << "\n"
            << "train=" << prepared.split.train.size() << "\n"
            << "validation=" << prepared.split.validation.size() << "\n";
  return kExitOk;
}

struct TrainArgs {
  DataArgs data;
  TrainConfig cfg;
  std::string out;
  std::string report;
  bool quiet = false;
};

int run_train(TrainArgs a, std::uint64_t seed) {
  a.cfg.seed = seed;
  print_config("train", {{"seed", seed},
                         {"data", a.data.data},
                         {"out", a.out},
                         {"report", a.report},
                         {"validation_fraction", a.data.validation_fraction},
                         {"learning_rate", a.cfg.adam.learning_rate},
                         {"beta1", a.cfg.adam.beta1},
                         {"beta2", a.cfg.adam.beta2},
                         {"adam_eps", a.cfg.adam.eps},
                         {"batch_size", a.cfg.batch_size},
                         {"max_epochs", a.cfg.max_epochs},
                         {"patience", a.cfg.early_stop_patience},
                         {"grad_clip", a.cfg.grad_clip_norm},
                         {"hidden", a.cfg.dims.hidden},
                         {"combo", a.cfg.dims.combo},
                         {"merge", a.cfg.dims.merge}});
  auto prepared = prepare_data(load_transcript(a.data.data), a.data.validation_fraction, seed);
  auto result = train(prepared.split, a.cfg, [&](const EpochRecord& e) {
    if (!a.quiet) {
      std::cerr << "epoch " << e.epoch << " loss=" << e.train_loss << " train_auc=" << e.train_auc
                << " validation_auc=" << e.validation_auc << '\n';
    }
  });
  Checkpoint ck{std::move(result.params), prepared.catalog, prepared.failure_rates};
  save_checkpoint(a.out, ck);
  if (!a.report.empty()) {
    std::ostringstream lines;
    result.report.write_jsonl(lines);
    write_file(a.report, lines.str());
  }
  std::cout << std::fixed << std::setprecision(4) << "best_epoch=" << result.report.best_epoch << "\n"
            << "validation_auc=" << result.report.best_validation_auc << "\n"
            << "checkpoint=" << checkpoint_id(ck) << "\n";
  return kExitOk;
}

struct EvalArgs {
  DataArgs data;
  std::string model;
  std::string grid_json;
  std::string grid_csv;
  std::size_t tier_size = 4;
};

int run_eval(const EvalArgs& a, std::uint64_t seed) {
  print_config("eval", {{"seed", seed},
                        {"model", a.model},
                        {"data", a.data.data},
                        {"validation_fraction", a.data.validation_fraction},
                        {"tier_size", a.tier_size},
                        {"grid_json", a.grid_json},
                        {"grid_csv", a.grid_csv}});
  const auto ck = load_checkpoint(a.model);
  const auto prepared = prepare_data(load_transcript(a.data.data), a.data.validation_fraction, seed);
  if (!(prepared.catalog == ck.catalog)) throw ValidationError("data catalog does not match the checkpoint catalog");
  const auto& split = prepared.split;

  std::vector<double> gpa_train, gpa_val;
  std::vector<int> y_train, y_val;
  for (const auto& ex : split.train) {
    gpa_train.push_back(prepared.history_gpa.at(ex.student_id));
    y_train.push_back(ex.label);
  }
  for (const auto& ex : split.validation) {
    gpa_val.push_back(prepared.history_gpa.at(ex.student_id));
    y_val.push_back(ex.label);
  }
  const auto baseline = GpaLogistic::fit(gpa_train, y_train);
  std::vector<double> base_scores;
  for (double g : gpa_val) base_scores.push_back(baseline.predict(g));

  std::cout << std::fixed << std::setprecision(4) << "train_auc=" << dataset_auc(ck.params, split.train) << "\n"
            << "validation_auc=" << dataset_auc(ck.params, split.validation) << "\n"
            << "gpa_baseline_validation_auc=" << auc(base_scores, y_val) << "\n";

  const auto& rates = ck.failure_rates.empty() ? prepared.failure_rates : ck.failure_rates;
  const auto tiers = make_tier_combos(rates, a.tier_size);
  const auto grid = fig4_experiment(ck.params, ck.catalog, split.validation, prepared.history_gpa, tiers, rates);
  std::cout << fig4_to_csv(grid);
  if (!a.grid_json.empty()) write_file(a.grid_json, fig4_to_json(grid).dump(2) + "\n");
  if (!a.grid_csv.empty()) write_file(a.grid_csv, fig4_to_csv(grid));
  return kExitOk;
}

json read_json_file(const std::string& path) {
  const auto text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + " is not valid JSON: " + e.what());
  }
}

int run_predict(const std::string& model, const std::string& history, const std::string& candidates) {
  print_config("predict", {{"model", model}, {"history", history}, {"candidates", candidates}});
  const auto ck = load_checkpoint(model);
  auto h = read_json_file(history);
  auto c = read_json_file(candidates);
  if (h.is_object() && h.contains("history")) h = h["history"];
  if (c.is_object() && c.contains("candidates")) c = c["candidates"];
  const PlanQuery query{parse_history(h), parse_candidates(c)};
  const auto response = score_plans(ck.params, ck.catalog, query, checkpoint_id(ck));
  std::cout << plan_response_to_json(response).dump() << '\n';
  return kExitOk;
}

PlannerService* g_service = nullptr;

int run_serve(const std::string& model, const std::string& host, int port, const std::string& cors) {
  print_config("serve", {{"model", model}, {"host", host}, {"port", port}, {"cors_origin", cors}});
  PlannerService service(load_checkpoint(model), ServiceOptions{cors});
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service) g_service->stop();
  });
  std::cerr << "serving checkpoint " << service.checkpoint_id() << " on " << host << ":" << port << '\n';
  if (!service.listen(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  g_service = nullptr;
  return kExitOk;
}

void add_data_options(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--data", d.data, "transcript CSV (student_id,course_id,period,grade)")->required();
  cmd->add_option("--validation-fraction", d.validation_fraction, "share of students held out for validation")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Next-term course combination success model"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "seed for generation, splitting and training")->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic transcript corpus");
  synth_cmd->add_option("--out", synth.out, "output CSV")->required();
  synth_cmd->add_option("--truth", synth.truth, "optional ground-truth JSON sidecar");
  synth_cmd->add_option("--students", synth.cfg.num_students)->capture_default_str();
  synth_cmd->add_option("--catalog-size", synth.cfg.catalog_size)->capture_default_str();
  synth_cmd->add_option("--min-terms", synth.cfg.min_terms)->capture_default_str();
  synth_cmd->add_option("--max-terms", synth.cfg.max_terms)->capture_default_str();
  synth_cmd->add_option("--min-courses", synth.cfg.min_courses)->capture_default_str();
  synth_cmd->add_option("--max-courses", synth.cfg.max_courses)->capture_default_str();
  synth_cmd->add_option("--ability-mean", synth.cfg.ability_mean)->capture_default_str();
  synth_cmd->add_option("--load-penalty", synth.cfg.load_penalty)->capture_default_str();
  synth_cmd->add_option("--withdraw-prob", synth.cfg.withdraw_prob)->capture_default_str();
  synth_cmd->add_flag("--uniform-grades", synth.uniform_grades, "draw grades uniformly within the pass/fail band");

  DataArgs ingest_data;
  std::string ingest_out;
  auto* ingest_cmd = app.add_subcommand("ingest", "parse, validate and encode a transcript");
  add_data_options(ingest_cmd, ingest_data);
  ingest_cmd->add_option("--out", ingest_out, "optional encoded dataset JSON");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  add_data_options(train_cmd, tr.data);
  train_cmd->add_option("--out", tr.out, "checkpoint JSON")->required();
  train_cmd->add_option("--report", tr.report, "per-epoch JSON lines");
  train_cmd->add_option("--learning-rate", tr.cfg.adam.learning_rate)->capture_default_str();
  train_cmd->add_option("--beta1", tr.cfg.adam.beta1)->capture_default_str();
  train_cmd->add_option("--beta2", tr.cfg.adam.beta2)->capture_default_str();
  train_cmd->add_option("--adam-eps", tr.cfg.adam.eps)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.cfg.batch_size)->capture_default_str();
  train_cmd->add_option("--max-epochs", tr.cfg.max_epochs)->capture_default_str();
  train_cmd->add_option("--patience", tr.cfg.early_stop_patience)->capture_default_str();
  train_cmd->add_option("--grad-clip", tr.cfg.grad_clip_norm)->capture_default_str();
  train_cmd->add_option("--hidden", tr.cfg.dims.hidden)->capture_default_str();
  train_cmd->add_option("--combo", tr.cfg.dims.combo)->capture_default_str();
  train_cmd->add_option("--merge", tr.cfg.dims.merge)->capture_default_str();
  train_cmd->add_flag("--quiet", tr.quiet, "suppress per-epoch progress");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "report AUC and the GPA x difficulty grid");
  add_data_options(eval_cmd, ev.data);
  eval_cmd->add_option("--model", ev.model, "checkpoint JSON")->required();
  eval_cmd->add_option("--grid-json", ev.grid_json);
  eval_cmd->add_option("--grid-csv", ev.grid_csv);
  eval_cmd->add_option("--tier-size", ev.tier_size, "courses per tier combination")->capture_default_str();

  std::string pred_model, pred_history, pred_candidates;
  auto* predict_cmd = app.add_subcommand("predict", "score candidate combinations for one history");
  predict_cmd->add_option("--model", pred_model)->required();
  predict_cmd->add_option("--history", pred_history, "JSON history array")->required();
  predict_cmd->add_option("--candidates", pred_candidates, "JSON array of course lists")->required();

  std::string serve_model, host = "127.0.0.1", cors = "*";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP planner service");
  serve_cmd->add_option("--model", serve_model)->required();
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();
  serve_cmd->add_option("--cors-origin", cors)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*synth_cmd) return run_synth(synth, seed);
    if (*ingest_cmd) return run_ingest(ingest_data, ingest_out, seed);
    if (*train_cmd) return run_train(tr, seed);
    if (*eval_cmd) return run_eval(ev, seed);
    if (*predict_cmd) return run_predict(pred_model, pred_history, pred_candidates);
    if (*serve_cmd) return run_serve(serve_model, host, port, cors);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
