#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/attribution.hpp"
#include "core/feedback.hpp"
#include "core/forest.hpp"
#include "core/meter_data.hpp"
#include "core/xai_eval.hpp"

namespace mxai {

// Effective configuration of a pipeline run; every field has a documented
// default and can come from a JSON config file with CLI overrides on top.
struct RunConfig {
  std::string readings_path;
  std::string labels_path;
  std::string format = "canonical";  // or "cer-code"
  std::optional<std::string> cer_epoch;
  std::string characteristic = "cooking";
  std::string out_dir = "out";
  double completeness_threshold = 0.9;
  uint64_t seed = 7919;
  int threads = 0;

  // forest
  int n_trees = 100;
  int max_depth = 0;
  int min_leaf = 1;
  int mtry = 0;

  // cross-validation
  int cv_k = 10;
  bool cv_stratified = false;
  bool cv_group_by_household = false;

  // explanation
  std::string explain_method = "kernel-shap";  // kernel-shap | lime
  int explain_segments = 24;
  int n_coalitions = 2000;
  int lime_perturbations = 0;
  std::string background = "household";  // household | global
  std::optional<std::string> explain_meter;  // default: first household
  std::optional<std::string> explain_week;   // ISO Monday; default: latest

  // xai evaluation
  int xai_samples = 50;
  double top_k_fraction = 0.10;
  int top_k_per_day = 3;
  std::optional<std::string> manifest_path;  // planted windows for localization

  // rendering
  std::vector<std::string> render_viz = {"line", "bar", "polar", "shap", "text"};
  std::string tip = "none";  // none | cmt | et
  bool caption = true;
};

RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& config);
// Later values win field-by-field; used for config file + flag overrides.
RunConfig merge_run_config(const RunConfig& base, const std::string& overrides_json);

ParseOptions parse_options_from(const RunConfig& config);

struct ExplainOutput {
  Attribution attribution;
  WeekSlice week;
  WeekSlice background;
  std::string meter_id;
  double prediction = 0.0;
};

// Explains one household-week (explicit or latest) with the configured
// explainer and background.
ExplainOutput explain_household(const ForestModel& model,
                                const std::vector<LoadProfile>& profiles,
                                const RunConfig& config);

FeedbackSpec feedback_spec_from_explanation(const ExplainOutput& ex, const RunConfig& config,
                                            VizType viz);

// Planted-window manifest reader (synth output) for localization scoring.
std::vector<LocalizationWindow> read_manifest_windows(const std::string& path,
                                                      Characteristic characteristic);

// Table-2-style wide CSV of xai-eval scores.
std::string xai_scores_csv(const std::string& characteristic,
                           const std::vector<std::pair<std::string, XaiScore>>& scores);

// Runs ingest -> features -> train -> cv -> explain -> xai-eval -> render,
// writing every artifact plus a machine-readable run manifest into out_dir.
// Returns the manifest JSON.
std::string run_pipeline(const RunConfig& config);

}  // namespace mxai
