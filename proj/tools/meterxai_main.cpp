// meterxai command-line front-end. Talks to the engine exclusively through
// the C API in meterxai.h; every subcommand assembles a params JSON object
// and maps mx_status onto the process exit code (0 ok, 1 usage, 2 data,
// 3 numeric).
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "meterxai.h"

namespace {

using json = nlohmann::json;

constexpr uint64_t kDefaultSeed = 7919;

int report(mx_status status) {
  if (status != MX_OK) std::cerr << "meterxai: error: " << mx_last_error() << "\n";
  return static_cast<int>(status);
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  mx_string_free(s);
  return out;
}

std::string read_file_or_die(const std::string& path, int& rc) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "meterxai: error: cannot open " << path << "\n";
    rc = 2;
    return "";
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << content;
  return static_cast<bool>(out);
}

struct DatasetArgs {
  std::string readings;
  std::string labels;
  std::string format = "canonical";
  std::string cer_epoch;

  void attach(CLI::App* cmd, bool labels_required = false) {
    cmd->add_option("--readings", readings, "readings CSV path")->required();
    auto* lab = cmd->add_option("--labels", labels, "label CSV path");
    if (labels_required) lab->required();
    cmd->add_option("--format", format, "readings format: canonical|cer-code")
        ->check(CLI::IsMember({"canonical", "cer-code"}));
    cmd->add_option("--cer-epoch", cer_epoch,
                    "epoch date for cer-code day counters (YYYY-MM-DD)");
  }

  int open(mx_dataset** out) const {
    const int rc = report(mx_dataset_open(readings.c_str(), format.c_str(),
                                          cer_epoch.empty() ? nullptr : cer_epoch.c_str(), out));
    if (rc != 0) return rc;
    if (!labels.empty()) {
      const int lrc = report(mx_dataset_load_labels(*out, labels.c_str()));
      if (lrc != 0) {
        mx_dataset_close(*out);
        *out = nullptr;
        return lrc;
      }
    }
    return 0;
  }
};

struct Handles {
  mx_dataset* data = nullptr;
  mx_features* features = nullptr;
  mx_model* model = nullptr;
  mx_attribution* attribution = nullptr;
  ~Handles() {
    mx_attribution_close(attribution);
    mx_forest_close(model);
    mx_features_close(features);
    mx_dataset_close(data);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meterxai: household characteristics from smart-meter data, explained"};
  app.require_subcommand(1);

  // ---- ingest ----
  auto* ingest = app.add_subcommand("ingest", "parse readings, report per-meter statistics");
  DatasetArgs ingest_args;
  ingest_args.attach(ingest);
  std::string ingest_out;
  ingest->add_option("--out", ingest_out, "write normalized canonical CSV here");

  // ---- features ----
  auto* features_cmd = app.add_subcommand("features", "extract the predictor matrix");
  DatasetArgs feat_args;
  feat_args.attach(features_cmd);
  std::string feat_characteristic = "cooking";
  double feat_threshold = 0.9;
  std::string feat_out = "features.csv";
  features_cmd->add_option("--characteristic", feat_characteristic,
                           "cooking|presence|water_heating");
  features_cmd->add_option("--completeness-threshold", feat_threshold,
                           "minimum observed fraction per week");
  features_cmd->add_option("--out", feat_out, "output CSV path");

  // ---- train ----
  auto* train = app.add_subcommand("train", "train the forest classifier");
  DatasetArgs train_args;
  train_args.attach(train, /*labels_required=*/true);
  std::string train_characteristic = "cooking";
  double train_threshold = 0.9;
  int n_trees = 100, max_depth = 0, min_leaf = 1, mtry = 0, threads = 0;
  uint64_t seed = kDefaultSeed;
  std::string model_out = "model.json";
  train->add_option("--characteristic", train_characteristic, "target characteristic");
  train->add_option("--completeness-threshold", train_threshold, "minimum observed fraction");
  train->add_option("--n-trees", n_trees, "number of trees (default 100)");
  train->add_option("--max-depth", max_depth, "tree depth cap, 0 = unlimited");
  train->add_option("--min-leaf", min_leaf, "minimum samples per leaf");
  train->add_option("--mtry", mtry, "features per split, 0 = floor(sqrt(p))");
  train->add_option("--seed", seed, "RNG seed (default 7919)");
  train->add_option("--threads", threads, "worker threads, 0 = hardware");
  train->add_option("--out", model_out, "model artifact path");

  // ---- cv ----
  auto* cv = app.add_subcommand("cv", "k-fold cross-validation with ACC and AUC");
  DatasetArgs cv_args;
  cv_args.attach(cv, /*labels_required=*/true);
  std::string cv_characteristic = "cooking";
  double cv_threshold = 0.9;
  int cv_k = 10, cv_trees = 100, cv_threads = 0;
  uint64_t cv_seed = kDefaultSeed;
  bool cv_stratified = false, cv_group = false;
  std::string cv_out;
  cv->add_option("--characteristic", cv_characteristic, "target characteristic");
  cv->add_option("--completeness-threshold", cv_threshold, "minimum observed fraction");
  cv->add_option("--k", cv_k, "number of folds (default 10)");
  cv->add_option("--n-trees", cv_trees, "trees per fold model");
  cv->add_option("--seed", cv_seed, "RNG seed");
  cv->add_option("--threads", cv_threads, "worker threads");
  cv->add_flag("--stratified", cv_stratified, "stratify folds by label");
  cv->add_flag("--group-by-household", cv_group, "keep each household in one fold");
  cv->add_option("--out", cv_out, "write the report JSON here (default stdout)");

  // ---- explain ----
  auto* explain = app.add_subcommand("explain", "attribute one prediction over time segments");
  DatasetArgs ex_args;
  ex_args.attach(explain);
  std::string ex_model, ex_method = "kernel-shap", ex_background = "household";
  std::string ex_meter, ex_week, ex_csv = "attribution.csv", ex_json = "attribution.json";
  int ex_segments = 24, ex_coalitions = 2000, ex_perturbations = 0, ex_threads = 0;
  uint64_t ex_seed = kDefaultSeed;
  bool ex_latest = false;
  explain->add_option("--model", ex_model, "trained model artifact")->required();
  explain->add_option("--method", ex_method, "kernel-shap|lime")
      ->check(CLI::IsMember({"kernel-shap", "lime"}));
  explain->add_option("--segments", ex_segments, "time-of-day segments (divides 48)");
  explain->add_option("--n-coalitions", ex_coalitions, "kernel shap sampling budget");
  explain->add_option("--n-perturbations", ex_perturbations, "lime samples, 0 = 4*segments");
  explain->add_option("--background", ex_background, "household|global");
  explain->add_option("--meter", ex_meter, "household to explain (default: first)");
  explain->add_option("--week", ex_week, "week start (Monday, YYYY-MM-DD)");
  explain->add_flag("--latest", ex_latest, "explain the household's latest week (default)");
  explain->add_option("--seed", ex_seed, "RNG seed");
  explain->add_option("--threads", ex_threads, "worker threads");
  explain->add_option("--out-csv", ex_csv, "attribution CSV path");
  explain->add_option("--out-json", ex_json, "attribution metadata path");

  // ---- xai-eval ----
  auto* xai = app.add_subcommand("xai-eval", "score explainers: faithfulness, stability, localization");
  DatasetArgs xai_args;
  xai_args.attach(xai);
  std::string xai_model, xai_explainer = "kernel-shap", xai_background = "household";
  std::string xai_manifest, xai_out;
  int xai_households = 50, xai_segments = 24, xai_coalitions = 2000, xai_topk_day = 3,
      xai_threads = 0;
  double xai_topk_fraction = 0.10, xai_threshold = 0.9;
  uint64_t xai_seed = kDefaultSeed;
  xai->add_option("--model", xai_model, "trained model artifact")->required();
  xai->add_option("--explainer", xai_explainer, "kernel-shap|lime|random")
      ->check(CLI::IsMember({"kernel-shap", "lime", "random"}));
  xai->add_option("--n-households", xai_households, "sample size (default 50)");
  xai->add_option("--segments", xai_segments, "time-of-day segments for faithfulness");
  xai->add_option("--n-coalitions", xai_coalitions, "kernel shap sampling budget");
  xai->add_option("--top-k-fraction", xai_topk_fraction, "blurred share of segments");
  xai->add_option("--top-k-per-day", xai_topk_day, "stability stamps per day");
  xai->add_option("--background", xai_background, "household|global");
  xai->add_option("--completeness-threshold", xai_threshold, "minimum observed fraction");
  xai->add_option("--manifest", xai_manifest, "synth manifest for localization scoring");
  xai->add_option("--seed", xai_seed, "RNG seed");
  xai->add_option("--threads", xai_threads, "worker threads");
  xai->add_option("--out", xai_out, "write the score CSV here (default stdout)");

  // ---- render ----
  auto* render = app.add_subcommand("render", "produce a feedback document");
  std::string r_viz = "line", r_tip = "none", r_out = "feedback.svg", r_spec;
  DatasetArgs r_args;
  std::string r_model, r_meter, r_week, r_background = "household", r_method = "kernel-shap";
  int r_segments = 24, r_coalitions = 2000, r_threads = 0;
  uint64_t r_seed = kDefaultSeed;
  bool r_caption = true;
  render->add_option("--viz", r_viz, "line|bar|polar|shap|text")
      ->check(CLI::IsMember({"line", "bar", "polar", "shap", "text"}));
  render->add_option("--tip", r_tip, "none|cmt|et")->check(CLI::IsMember({"none", "cmt", "et"}));
  render->add_flag("--caption,!--no-caption", r_caption, "explanatory caption (default on)");
  render->add_option("--out", r_out, "output path")->required();
  render->add_option("--spec", r_spec, "render a prepared feedback spec JSON");
  render->add_option("--readings", r_args.readings, "readings CSV (with --model)");
  render->add_option("--format", r_args.format, "readings format");
  render->add_option("--cer-epoch", r_args.cer_epoch, "epoch for cer-code");
  render->add_option("--model", r_model, "trained model artifact (with --readings)");
  render->add_option("--meter", r_meter, "household to render (default: first)");
  render->add_option("--week", r_week, "week start (Monday)");
  render->add_option("--method", r_method, "kernel-shap|lime");
  render->add_option("--segments", r_segments, "time-of-day segments");
  render->add_option("--n-coalitions", r_coalitions, "kernel shap budget");
  render->add_option("--background", r_background, "household|global");
  render->add_option("--seed", r_seed, "RNG seed");
  render->add_option("--threads", r_threads, "worker threads");

  // ---- analyze ----
  auto* analyze = app.add_subcommand("analyze", "experiment statistics (tasks or conjoint)");
  analyze->require_subcommand(1);
  auto* an_tasks = analyze->add_subcommand("tasks", "OLS with robust SEs per task metric");
  std::string t_csv, t_metric = "mem_right", t_reference = "shap", t_robust = "hc0", t_out;
  an_tasks->add_option("--records", t_csv, "task-record CSV")->required();
  an_tasks->add_option("--metric", t_metric,
                       "reading_time_log|answer_time_log|mem_right|mem_dontknow|"
                       "mental_effort|school_grade");
  an_tasks->add_option("--reference", t_reference, "reference visual level");
  an_tasks->add_option("--robust", t_robust, "hc0|hc1|hc3")
      ->check(CLI::IsMember({"hc0", "hc1", "hc3"}));
  an_tasks->add_option("--out-csv", t_out, "write the coefficient CSV here");

  auto* an_conjoint = analyze->add_subcommand("conjoint", "effect-coded ML logit of choices");
  std::string c_csv, c_reference = "shap", c_out;
  an_conjoint->add_option("--records", c_csv, "choice-record CSV")->required();
  an_conjoint->add_option("--reference", c_reference, "reference visual level");
  an_conjoint->add_option("--out-csv", c_out, "write the coefficient CSV here");

  auto* an_generate = analyze->add_subcommand("generate", "skeleton choice sets for a study");
  int g_participants = 152;
  uint64_t g_seed = kDefaultSeed;
  std::string g_out = "choices.csv";
  an_generate->add_option("--participants", g_participants, "number of participants");
  an_generate->add_option("--seed", g_seed, "RNG seed");
  an_generate->add_option("--out", g_out, "output CSV path");

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a planted-pattern corpus");
  std::string s_config, s_out = "synth";
  uint64_t s_seed = 0;
  bool s_seed_set = false;
  synth->add_option("--config", s_config, "synth config JSON (defaults when omitted)");
  synth->add_option("--out", s_out, "output directory")->required();
  synth->add_option("--seed", s_seed, "override the config seed")
      ->each([&](const std::string&) { s_seed_set = true; });

  // ---- pipeline ----
  auto* pipeline = app.add_subcommand("pipeline", "run the full engine end to end");
  std::string p_config;
  std::vector<std::string> p_set;
  pipeline->add_option("--config", p_config, "run config JSON file")->required();
  pipeline->add_option("--set", p_set,
                       "override config values, e.g. --set seed=1 --set out_dir=run2");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  // ---------- dispatch ----------
  if (*ingest) {
    Handles h;
    if (int rc = ingest_args.open(&h.data)) return rc;
    size_t n = 0;
    mx_dataset_count(h.data, &n);
    std::cout << "parsed " << n << " household(s) from " << ingest_args.readings << "\n";
    if (!ingest_out.empty()) {
      if (int rc = report(mx_dataset_export_csv(h.data, ingest_out.c_str()))) return rc;
      std::cout << "normalized canonical CSV written to " << ingest_out << "\n";
    }
    return 0;
  }

  if (*features_cmd) {
    Handles h;
    if (int rc = feat_args.open(&h.data)) return rc;
    if (int rc = report(mx_features_build(h.data, feat_characteristic.c_str(), feat_threshold,
                                          &h.features))) {
      return rc;
    }
    size_t rows = 0, cols = 0;
    mx_features_shape(h.features, &rows, &cols);
    if (int rc = report(mx_features_export_csv(h.features, feat_out.c_str()))) return rc;
    std::cout << "wrote " << rows << " week rows x " << cols << " features to " << feat_out
              << "\n";
    return 0;
  }

  if (*train) {
    Handles h;
    if (int rc = train_args.open(&h.data)) return rc;
    if (int rc = report(mx_features_build(h.data, train_characteristic.c_str(), train_threshold,
                                          &h.features))) {
      return rc;
    }
    json params = {{"n_trees", n_trees}, {"max_depth", max_depth}, {"min_leaf", min_leaf},
                   {"mtry", mtry},       {"seed", seed},           {"threads", threads}};
    if (int rc = report(mx_forest_train(h.features, params.dump().c_str(), &h.model))) return rc;
    if (int rc = report(mx_forest_save(h.model, model_out.c_str()))) return rc;
    std::cout << "model written to " << model_out << "\n";
    return 0;
  }

  if (*cv) {
    Handles h;
    if (int rc = cv_args.open(&h.data)) return rc;
    if (int rc = report(mx_features_build(h.data, cv_characteristic.c_str(), cv_threshold,
                                          &h.features))) {
      return rc;
    }
    json params = {{"n_trees", cv_trees}, {"k", cv_k},
                   {"seed", cv_seed},     {"threads", cv_threads},
                   {"stratified", cv_stratified}, {"group_by_household", cv_group}};
    char* report_json = nullptr;
    if (int rc = report(mx_forest_cross_validate(h.features, params.dump().c_str(), &report_json))) {
      return rc;
    }
    const std::string text = take_string(report_json);
    if (cv_out.empty()) {
      std::cout << text << "\n";
    } else if (!write_file(cv_out, text)) {
      std::cerr << "meterxai: error: cannot write " << cv_out << "\n";
      return 2;
    }
    return 0;
  }

  if (*explain) {
    Handles h;
    if (int rc = ex_args.open(&h.data)) return rc;
    if (int rc = report(mx_forest_load(ex_model.c_str(), &h.model))) return rc;
    json params = {{"method", ex_method},           {"segments", ex_segments},
                   {"n_coalitions", ex_coalitions}, {"lime_perturbations", ex_perturbations},
                   {"background", ex_background},   {"seed", ex_seed},
                   {"threads", ex_threads}};
    if (!ex_meter.empty()) params["meter"] = ex_meter;
    if (!ex_week.empty() && !ex_latest) params["week"] = ex_week;
    if (int rc = report(mx_explain(h.model, h.data, params.dump().c_str(), &h.attribution))) {
      return rc;
    }
    if (int rc = report(mx_attribution_export(h.attribution, ex_csv.c_str(), ex_json.c_str()))) {
      return rc;
    }
    std::cout << "attribution written to " << ex_csv << " and " << ex_json << "\n";
    return 0;
  }

  if (*xai) {
    Handles h;
    if (int rc = xai_args.open(&h.data)) return rc;
    if (int rc = report(mx_forest_load(xai_model.c_str(), &h.model))) return rc;
    json params = {{"explainer", xai_explainer},
                   {"n_households", xai_households},
                   {"segments", xai_segments},
                   {"n_coalitions", xai_coalitions},
                   {"top_k_fraction", xai_topk_fraction},
                   {"top_k_per_day", xai_topk_day},
                   {"background", xai_background},
                   {"completeness_threshold", xai_threshold},
                   {"seed", xai_seed},
                   {"threads", xai_threads}};
    if (!xai_manifest.empty()) params["manifest"] = xai_manifest;
    char* csv = nullptr;
    if (int rc = report(mx_xai_evaluate(h.model, h.data, params.dump().c_str(), &csv))) return rc;
    const std::string text = take_string(csv);
    if (xai_out.empty()) {
      std::cout << text;
    } else if (!write_file(xai_out, text)) {
      std::cerr << "meterxai: error: cannot write " << xai_out << "\n";
      return 2;
    }
    return 0;
  }

  if (*render) {
    std::string spec_text;
    if (!r_spec.empty()) {
      int rc = 0;
      spec_text = read_file_or_die(r_spec, rc);
      if (rc) return rc;
      json spec = json::parse(spec_text, nullptr, false);
      if (spec.is_discarded()) {
        std::cerr << "meterxai: error: " << r_spec << " is not valid JSON\n";
        return 2;
      }
      spec["viz"] = r_viz;
      if (r_tip != "none") spec["tip"] = r_tip;
      spec_text = spec.dump();
    } else {
      if (r_args.readings.empty() || r_model.empty()) {
        std::cerr << "meterxai: error: render needs either --spec or --readings with --model\n";
        return 1;
      }
      Handles h;
      if (int rc = r_args.open(&h.data)) return rc;
      if (int rc = report(mx_forest_load(r_model.c_str(), &h.model))) return rc;
      json params = {{"method", r_method},   {"segments", r_segments},
                     {"n_coalitions", r_coalitions}, {"background", r_background},
                     {"seed", r_seed},       {"threads", r_threads},
                     {"tip", r_tip},         {"caption", r_caption}};
      if (!r_meter.empty()) params["meter"] = r_meter;
      if (!r_week.empty()) params["week"] = r_week;
      char* spec_json = nullptr;
      if (int rc = report(mx_feedback_build(h.model, h.data, params.dump().c_str(), &spec_json))) {
        return rc;
      }
      json spec = json::parse(take_string(spec_json));
      spec["viz"] = r_viz;
      spec_text = spec.dump();
    }
    if (int rc = report(mx_render_spec(spec_text.c_str(), r_out.c_str()))) return rc;
    std::cout << "feedback written to " << r_out << "\n";
    return 0;
  }

  if (*an_tasks) {
    json params = {{"metric", t_metric}, {"reference", t_reference}, {"robust", t_robust}};
    char* table = nullptr;
    char* csv = nullptr;
    if (int rc = report(mx_analyze_tasks(t_csv.c_str(), params.dump().c_str(), &table, &csv))) {
      return rc;
    }
    std::cout << take_string(table);
    const std::string csv_text = take_string(csv);
    if (!t_out.empty() && !write_file(t_out, csv_text)) {
      std::cerr << "meterxai: error: cannot write " << t_out << "\n";
      return 2;
    }
    return 0;
  }

  if (*an_conjoint) {
    json params = {{"reference", c_reference}};
    char* table = nullptr;
    char* csv = nullptr;
    if (int rc = report(mx_analyze_conjoint(c_csv.c_str(), params.dump().c_str(), &table, &csv))) {
      return rc;
    }
    std::cout << take_string(table);
    const std::string csv_text = take_string(csv);
    if (!c_out.empty() && !write_file(c_out, csv_text)) {
      std::cerr << "meterxai: error: cannot write " << c_out << "\n";
      return 2;
    }
    return 0;
  }

  if (*an_generate) {
    if (int rc = report(mx_conjoint_generate(g_participants, g_seed, g_out.c_str()))) return rc;
    std::cout << "choice sets written to " << g_out << "\n";
    return 0;
  }

  if (*synth) {
    std::string config_text = "{}";
    if (!s_config.empty()) {
      int rc = 0;
      config_text = read_file_or_die(s_config, rc);
      if (rc) return rc;
    }
    if (s_seed_set) {
      json j = json::parse(config_text, nullptr, false);
      if (j.is_discarded()) {
        std::cerr << "meterxai: error: synth config is not valid JSON\n";
        return 2;
      }
      j["seed"] = s_seed;
      config_text = j.dump();
    }
    if (int rc = report(mx_synth_generate(config_text.c_str(), s_out.c_str()))) return rc;
    std::cout << "corpus written to " << s_out << "/\n";
    return 0;
  }

  if (*pipeline) {
    int rc = 0;
    std::string config_text = read_file_or_die(p_config, rc);
    if (rc) return rc;
    if (!p_set.empty()) {
      json j = json::parse(config_text, nullptr, false);
      if (j.is_discarded()) {
        std::cerr << "meterxai: error: run config is not valid JSON\n";
        return 2;
      }
      for (const auto& kv : p_set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
          std::cerr << "meterxai: error: --set expects key=value, got '" << kv << "'\n";
          return 1;
        }
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        const json parsed = json::parse(value, nullptr, false);
        j[key] = parsed.is_discarded() ? json(value) : parsed;
      }
      config_text = j.dump();
    }
    char* manifest = nullptr;
    if (int prc = report(mx_pipeline_run(config_text.c_str(), &manifest))) return prc;
    std::cout << take_string(manifest) << "\n";
    return 0;
  }

  return 0;
}
