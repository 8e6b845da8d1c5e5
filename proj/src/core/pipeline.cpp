#include "core/pipeline.hpp"

#include <algorithm>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/features.hpp"
#include "core/rng.hpp"
#include "core/textio.hpp"

namespace mxai {

using json = nlohmann::json;

namespace {

Characteristic characteristic_or_throw(const std::string& s) {
  const auto c = characteristic_from_string(s);
  if (!c) {
    throw usage_error("unknown characteristic '" + s +
                      "' (expected cooking|presence|water_heating)");
  }
  return *c;
}

void apply_json(RunConfig& c, const json& j) {
  c.readings_path = j.value("readings", c.readings_path);
  c.labels_path = j.value("labels", c.labels_path);
  c.format = j.value("format", c.format);
  if (j.contains("cer_epoch") && !j.at("cer_epoch").is_null()) {
    c.cer_epoch = j.at("cer_epoch").get<std::string>();
  }
  c.characteristic = j.value("characteristic", c.characteristic);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.completeness_threshold = j.value("completeness_threshold", c.completeness_threshold);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  if (j.contains("forest")) {
    const auto& f = j.at("forest");
    c.n_trees = f.value("n_trees", c.n_trees);
    c.max_depth = f.value("max_depth", c.max_depth);
    c.min_leaf = f.value("min_leaf", c.min_leaf);
    c.mtry = f.value("mtry", c.mtry);
  }
  if (j.contains("cv")) {
    const auto& f = j.at("cv");
    c.cv_k = f.value("k", c.cv_k);
    c.cv_stratified = f.value("stratified", c.cv_stratified);
    c.cv_group_by_household = f.value("group_by_household", c.cv_group_by_household);
  }
  if (j.contains("explain")) {
    const auto& f = j.at("explain");
    c.explain_method = f.value("method", c.explain_method);
    c.explain_segments = f.value("segments", c.explain_segments);
    c.n_coalitions = f.value("n_coalitions", c.n_coalitions);
    c.lime_perturbations = f.value("lime_perturbations", c.lime_perturbations);
    c.background = f.value("background", c.background);
    if (f.contains("meter") && !f.at("meter").is_null()) {
      c.explain_meter = f.at("meter").get<std::string>();
    }
    if (f.contains("week") && !f.at("week").is_null()) {
      c.explain_week = f.at("week").get<std::string>();
    }
  }
  if (j.contains("xai")) {
    const auto& f = j.at("xai");
    c.xai_samples = f.value("n_households", c.xai_samples);
    c.top_k_fraction = f.value("top_k_fraction", c.top_k_fraction);
    c.top_k_per_day = f.value("top_k_per_day", c.top_k_per_day);
    if (f.contains("manifest") && !f.at("manifest").is_null()) {
      c.manifest_path = f.at("manifest").get<std::string>();
    }
  }
  if (j.contains("render")) {
    const auto& f = j.at("render");
    if (f.contains("viz")) c.render_viz = f.at("viz").get<std::vector<std::string>>();
    c.tip = f.value("tip", c.tip);
    c.caption = f.value("caption", c.caption);
  }
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  RunConfig c;
  return merge_run_config(c, text);
}

RunConfig merge_run_config(const RunConfig& base, const std::string& overrides_json) {
  RunConfig c = base;
  json j;
  try {
    j = json::parse(overrides_json);
  } catch (const json::exception& e) {
    throw data_error(std::string("run config is not valid JSON: ") + e.what());
  }
  try {
    apply_json(c, j);
  } catch (const json::exception& e) {
    throw data_error(std::string("malformed run config: ") + e.what());
  }
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["readings"] = c.readings_path;
  j["labels"] = c.labels_path;
  j["format"] = c.format;
  j["cer_epoch"] = c.cer_epoch ? json(*c.cer_epoch) : json(nullptr);
  j["characteristic"] = c.characteristic;
  j["out_dir"] = c.out_dir;
  j["completeness_threshold"] = c.completeness_threshold;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["forest"] = {{"n_trees", c.n_trees},
                 {"max_depth", c.max_depth},
                 {"min_leaf", c.min_leaf},
                 {"mtry", c.mtry}};
  j["cv"] = {{"k", c.cv_k},
             {"stratified", c.cv_stratified},
             {"group_by_household", c.cv_group_by_household}};
  j["explain"] = {{"method", c.explain_method},
                  {"segments", c.explain_segments},
                  {"n_coalitions", c.n_coalitions},
                  {"lime_perturbations", c.lime_perturbations},
                  {"background", c.background},
                  {"meter", c.explain_meter ? json(*c.explain_meter) : json(nullptr)},
                  {"week", c.explain_week ? json(*c.explain_week) : json(nullptr)}};
  j["xai"] = {{"n_households", c.xai_samples},
              {"top_k_fraction", c.top_k_fraction},
              {"top_k_per_day", c.top_k_per_day},
              {"manifest", c.manifest_path ? json(*c.manifest_path) : json(nullptr)}};
  j["render"] = {{"viz", c.render_viz}, {"tip", c.tip}, {"caption", c.caption}};
  return j.dump(2);
}

ParseOptions parse_options_from(const RunConfig& config) {
  ParseOptions opt;
  if (config.format == "canonical") {
    opt.format = ReadingsFormat::kCanonical;
  } else if (config.format == "cer-code") {
    opt.format = ReadingsFormat::kCerCode;
    if (!config.cer_epoch) throw usage_error("format cer-code requires --cer-epoch");
    opt.cer_epoch = parse_iso_date(*config.cer_epoch);
  } else {
    throw usage_error("unknown readings format '" + config.format + "'");
  }
  return opt;
}

ExplainOutput explain_household(const ForestModel& model,
                                const std::vector<LoadProfile>& profiles,
                                const RunConfig& config) {
  if (profiles.empty()) throw data_error("explain: no households in dataset");

  const LoadProfile* profile = nullptr;
  if (config.explain_meter) {
    for (const auto& p : profiles) {
      if (p.meter_id == *config.explain_meter) {
        profile = &p;
        break;
      }
    }
    if (!profile) throw data_error("explain: meter '" + *config.explain_meter + "' not found");
  } else {
    profile = &profiles.front();
  }

  const auto weeks = segment_weeks(*profile, config.completeness_threshold);
  if (weeks.empty()) {
    throw data_error("explain: household " + profile->meter_id + " has no valid weeks");
  }
  const WeekSlice* week = &weeks.back();  // --latest default
  if (config.explain_week) {
    const Date want = parse_iso_date(*config.explain_week);
    week = nullptr;
    for (const auto& w : weeks) {
      if (w.week_start == want) {
        week = &w;
        break;
      }
    }
    if (!week) {
      throw data_error("explain: no week starting " + *config.explain_week + " for household " +
                       profile->meter_id);
    }
  }

  WeekSlice background;
  if (config.background == "global") {
    std::vector<WeekSlice> all;
    for (const auto& p : profiles) {
      for (auto& w : segment_weeks(p, config.completeness_threshold)) all.push_back(std::move(w));
    }
    background = corpus_mean_background(all);
  } else if (config.background == "household") {
    background = household_mean_background(*week);
  } else {
    throw usage_error("unknown background mode '" + config.background + "'");
  }

  const SegmentScheme scheme = SegmentScheme::time_of_day(config.explain_segments);
  const ModelFn fn = forest_week_model(model);

  ExplainOutput out;
  out.week = *week;
  out.background = background;
  out.meter_id = profile->meter_id;
  if (config.explain_method == "kernel-shap") {
    KernelShapConfig kc;
    kc.n_coalitions = config.n_coalitions;
    kc.seed = config.seed;
    kc.threads = config.threads;
    out.attribution = explain_kernel_shap(fn, *week, scheme, background, kc);
  } else if (config.explain_method == "lime") {
    LimeConfig lc;
    lc.n_perturbations = config.lime_perturbations;
    lc.seed = config.seed;
    lc.threads = config.threads;
    out.attribution = explain_lime(fn, *week, scheme, background, lc);
  } else {
    throw usage_error("unknown explain method '" + config.explain_method +
                      "' (expected kernel-shap|lime)");
  }
  out.prediction = out.attribution.prediction;
  return out;
}

FeedbackSpec feedback_spec_from_explanation(const ExplainOutput& ex, const RunConfig& config,
                                            VizType viz) {
  FeedbackSpec spec;
  spec.viz = viz;
  spec.characteristic = characteristic_or_throw(config.characteristic);
  spec.predicted_class = ex.prediction >= 0.5;
  spec.day_profile = time_of_day_mean(ex.week);
  const auto slot_phi = pool_phi_to_slots(ex.attribution);
  spec.phi.assign(slot_phi.begin(), slot_phi.end());
  spec.highlight = select_highlight(slot_phi);
  if (config.tip == "cmt") {
    spec.tip = TipKind::kCurtailment;
  } else if (config.tip == "et") {
    spec.tip = TipKind::kEfficiency;
  } else if (config.tip != "none") {
    throw usage_error("tip must be none|cmt|et");
  }
  if (config.caption) {
    spec.explanation_text = "A prediction model examined this household's half-hourly "
                            "electricity use; shaded hours influenced its assessment most.";
  }
  return spec;
}

std::vector<LocalizationWindow> read_manifest_windows(const std::string& path,
                                                      Characteristic characteristic) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw data_error(std::string("manifest is not valid JSON: ") + e.what());
  }
  std::vector<LocalizationWindow> out;
  try {
    for (const auto& h : j.at("households")) {
      const auto& windows = h.at("windows");
      const char* key = to_string(characteristic);
      if (!windows.contains(key)) continue;
      LocalizationWindow w;
      w.meter_id = h.at("meter_id").get<std::string>();
      w.start_slot = windows.at(key).at(0).get<int>();
      w.end_slot = windows.at(key).at(1).get<int>();
      out.push_back(std::move(w));
    }
  } catch (const json::exception& e) {
    throw data_error(std::string("malformed manifest: ") + e.what());
  }
  return out;
}

std::string xai_scores_csv(const std::string& characteristic,
                           const std::vector<std::pair<std::string, XaiScore>>& scores) {
  // wide layout: one row per characteristic, metric_method columns
  std::string header = "characteristic";
  std::string row = characteristic;
  for (const auto& [name, score] : scores) {
    header += ',';
    header += name;
    row += ',';
    row += format_double(score.value);
  }
  return header + "\n" + row + "\n";
}

std::string run_pipeline(const RunConfig& config) {
  if (config.readings_path.empty()) throw usage_error("pipeline: readings path is required");
  if (config.labels_path.empty()) throw usage_error("pipeline: labels path is required");
  const Characteristic characteristic = characteristic_or_throw(config.characteristic);

  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  const std::string out = config.out_dir;

  // ingest
  auto profiles = parse_readings_file(config.readings_path, parse_options_from(config));
  load_labels_csv(profiles, config.labels_path);

  // features
  const FeatureMatrix features =
      build_feature_matrix(profiles, characteristic, config.completeness_threshold);
  if (features.n_labeled() == 0) {
    throw data_error("pipeline: no labeled weeks for " + config.characteristic);
  }
  write_text_file(out + "/features.csv", write_feature_csv(features));

  ForestParams params;
  params.n_trees = config.n_trees;
  params.max_depth = config.max_depth;
  params.min_leaf = config.min_leaf;
  params.mtry = config.mtry;
  params.seed = config.seed;
  params.threads = config.threads;

  // train + persist
  const ForestModel model = train_forest(features, params);
  save_forest(model, out + "/model.json");

  // cross-validate
  CvOptions cv;
  cv.k = config.cv_k;
  cv.seed = config.seed;
  cv.stratified = config.cv_stratified;
  cv.group_by_household = config.cv_group_by_household;
  const EvalReport report = cross_validate(features, params, cv);
  write_text_file(out + "/cv_report.json", eval_report_to_json(report));
  write_text_file(out + "/cv_report.csv", eval_report_to_csv(report));

  // explain one household-week
  const ExplainOutput ex = explain_household(model, profiles, config);
  write_text_file(out + "/attribution.csv", attribution_to_csv(ex.attribution));
  write_text_file(out + "/attribution.json", attribution_metadata_json(ex.attribution));

  // xai evaluation
  XaiEvalConfig xc;
  xc.background =
      config.background == "global" ? BackgroundMode::kGlobal : BackgroundMode::kHousehold;
  xc.n_segments = config.explain_segments;
  xc.top_k_fraction = config.top_k_fraction;
  xc.top_k_per_day = config.top_k_per_day;
  xc.n_samples = config.xai_samples;
  xc.n_coalitions = config.n_coalitions;
  xc.lime_perturbations = config.lime_perturbations;
  xc.completeness_threshold = config.completeness_threshold;
  xc.seed = config.seed;
  xc.threads = config.threads;

  std::vector<std::pair<std::string, XaiScore>> scores;
  for (ExplainerKind kind : {ExplainerKind::kKernelShap, ExplainerKind::kLime}) {
    xc.explainer = kind;
    scores.emplace_back(std::string("faithfulness_") + to_string(kind),
                        faithfulness(model, profiles, xc));
    scores.emplace_back(std::string("stability_") + to_string(kind), stability(model, profiles, xc));
    if (config.manifest_path) {
      const auto windows = read_manifest_windows(*config.manifest_path, characteristic);
      scores.emplace_back(std::string("localization_") + to_string(kind),
                          localization(model, profiles, windows, xc));
    }
  }
  write_text_file(out + "/xai_scores.csv", xai_scores_csv(config.characteristic, scores));

  // feedback renderings
  for (const auto& viz_name : config.render_viz) {
    const auto viz = viz_type_from_string(viz_name);
    if (!viz) throw usage_error("unknown viz type '" + viz_name + "'");
    const FeedbackSpec spec = feedback_spec_from_explanation(ex, config, *viz);
    const std::string ext = *viz == VizType::kText ? ".txt" : ".svg";
    write_text_file(out + "/feedback_" + viz_name + ext, render(spec));
  }

  // machine-readable run manifest
  json manifest;
  manifest["engine"] = "meterxai";
  manifest["version"] = "1.0.0";
  manifest["config"] = json::parse(run_config_to_json(config));
  manifest["inputs"] = {{"readings", {{"path", config.readings_path},
                                      {"digest", fnv1a_hex_digest(config.readings_path)}}},
                        {"labels", {{"path", config.labels_path},
                                    {"digest", fnv1a_hex_digest(config.labels_path)}}}};
  json artifacts = json::object();
  for (const auto& name :
       {"features.csv", "model.json", "cv_report.json", "cv_report.csv", "attribution.csv",
        "attribution.json", "xai_scores.csv"}) {
    artifacts[name] = fnv1a_hex_digest(out + "/" + name);
  }
  for (const auto& viz_name : config.render_viz) {
    const std::string ext = viz_name == "text" ? ".txt" : ".svg";
    const std::string name = "feedback_" + viz_name + ext;
    artifacts[name] = fnv1a_hex_digest(out + "/" + name);
  }
  manifest["artifacts"] = std::move(artifacts);
  manifest["summary"] = {{"n_weeks", features.rows.size()},
                         {"n_labeled", features.n_labeled()},
                         {"cv_acc", report.acc},
                         {"cv_auc", report.auc_defined ? json(report.auc) : json(nullptr)},
                         {"explained_meter", ex.meter_id},
                         {"explained_week", format_iso_date(ex.week.week_start)},
                         {"prediction", ex.prediction}};
  const std::string manifest_text = manifest.dump(2);
  write_text_file(out + "/run_manifest.json", manifest_text);
  return manifest_text;
}

}  // namespace mxai
