#include "meterxai.h"

#include <cstring>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "core/conjoint.hpp"
#include "core/errors.hpp"
#include "core/features.hpp"
#include "core/forest.hpp"
#include "core/pipeline.hpp"
#include "core/synth.hpp"
#include "core/textio.hpp"
#include "core/xai_eval.hpp"

using json = nlohmann::json;

struct mx_dataset {
  std::vector<mxai::LoadProfile> profiles;
};

struct mx_features {
  mxai::FeatureMatrix matrix;
};

struct mx_model {
  mxai::ForestModel model;
};

struct mx_attribution {
  mxai::Attribution attribution;
};

namespace {

thread_local std::string g_last_error;

mx_status fail(mx_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Maps core exceptions onto status codes; catches everything so no exception
// ever crosses the C boundary.
template <typename Fn>
mx_status guarded(Fn&& fn) {
  try {
    fn();
    return MX_OK;
  } catch (const mxai::usage_error& e) {
    return fail(MX_ERR_USAGE, e.what());
  } catch (const mxai::data_error& e) {
    return fail(MX_ERR_DATA, e.what());
  } catch (const mxai::numeric_error& e) {
    return fail(MX_ERR_NUMERIC, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MX_ERR_NUMERIC, "out of memory");
  } catch (const std::exception& e) {
    return fail(MX_ERR_DATA, e.what());
  } catch (...) {
    return fail(MX_ERR_DATA, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

mx_status require(bool ok, const char* what) {
  if (!ok) return fail(MX_ERR_USAGE, std::string("null argument: ") + what);
  return MX_OK;
}

json parse_params(const char* params_json) {
  if (params_json == nullptr || params_json[0] == '\0') return json::object();
  try {
    json j = json::parse(params_json);
    if (!j.is_object()) throw mxai::usage_error("params must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw mxai::usage_error(std::string("params are not valid JSON: ") + e.what());
  }
}

mxai::ForestParams forest_params_from(const json& j) {
  mxai::ForestParams p;
  p.n_trees = j.value("n_trees", p.n_trees);
  p.max_depth = j.value("max_depth", p.max_depth);
  p.min_leaf = j.value("min_leaf", p.min_leaf);
  p.mtry = j.value("mtry", p.mtry);
  p.seed = j.value("seed", p.seed);
  p.threads = j.value("threads", p.threads);
  return p;
}

mxai::RunConfig explain_config_from(const json& j) {
  mxai::RunConfig c;
  c.explain_method = j.value("method", c.explain_method);
  c.explain_segments = j.value("segments", c.explain_segments);
  c.n_coalitions = j.value("n_coalitions", c.n_coalitions);
  c.lime_perturbations = j.value("lime_perturbations", c.lime_perturbations);
  c.background = j.value("background", c.background);
  c.completeness_threshold = j.value("completeness_threshold", c.completeness_threshold);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  if (j.contains("meter") && !j.at("meter").is_null()) {
    c.explain_meter = j.at("meter").get<std::string>();
  }
  if (j.contains("week") && !j.at("week").is_null()) {
    c.explain_week = j.at("week").get<std::string>();
  }
  c.tip = j.value("tip", c.tip);
  c.caption = j.value("caption", c.caption);
  return c;
}

}  // namespace

extern "C" {

const char* mx_version(void) { return "1.0.0"; }

const char* mx_last_error(void) { return g_last_error.c_str(); }

void mx_string_free(char* s) { delete[] s; }

mx_status mx_dataset_open(const char* readings_path, const char* format, const char* cer_epoch,
                          mx_dataset** out) {
  if (auto s = require(readings_path && format && out, "mx_dataset_open")) return s;
  return guarded([&] {
    mxai::ParseOptions opt;
    const std::string fmt = format;
    if (fmt == "canonical") {
      opt.format = mxai::ReadingsFormat::kCanonical;
    } else if (fmt == "cer-code") {
      opt.format = mxai::ReadingsFormat::kCerCode;
      if (!cer_epoch) throw mxai::usage_error("cer-code format requires cer_epoch");
      opt.cer_epoch = mxai::parse_iso_date(cer_epoch);
    } else {
      throw mxai::usage_error("format must be canonical or cer-code");
    }
    auto handle = std::make_unique<mx_dataset>();
    handle->profiles = mxai::parse_readings_file(readings_path, opt);
    *out = handle.release();
  });
}

mx_status mx_dataset_load_labels(mx_dataset* data, const char* labels_path) {
  if (auto s = require(data && labels_path, "mx_dataset_load_labels")) return s;
  return guarded([&] { mxai::load_labels_csv(data->profiles, labels_path); });
}

mx_status mx_dataset_count(const mx_dataset* data, size_t* out_count) {
  if (auto s = require(data && out_count, "mx_dataset_count")) return s;
  *out_count = data->profiles.size();
  return MX_OK;
}

mx_status mx_dataset_export_csv(const mx_dataset* data, const char* path) {
  if (auto s = require(data && path, "mx_dataset_export_csv")) return s;
  return guarded([&] { mxai::write_text_file(path, mxai::write_readings_csv(data->profiles)); });
}

void mx_dataset_close(mx_dataset* data) { delete data; }

mx_status mx_features_build(const mx_dataset* data, const char* characteristic,
                            double completeness_threshold, mx_features** out) {
  if (auto s = require(data && characteristic && out, "mx_features_build")) return s;
  return guarded([&] {
    const auto c = mxai::characteristic_from_string(characteristic);
    if (!c) throw mxai::usage_error(std::string("unknown characteristic '") + characteristic + "'");
    auto handle = std::make_unique<mx_features>();
    handle->matrix = mxai::build_feature_matrix(data->profiles, *c, completeness_threshold);
    *out = handle.release();
  });
}

mx_status mx_features_shape(const mx_features* features, size_t* out_rows, size_t* out_cols) {
  if (auto s = require(features && out_rows && out_cols, "mx_features_shape")) return s;
  *out_rows = features->matrix.rows.size();
  *out_cols = mxai::kNumFeatures;
  return MX_OK;
}

mx_status mx_features_export_csv(const mx_features* features, const char* path) {
  if (auto s = require(features && path, "mx_features_export_csv")) return s;
  return guarded([&] { mxai::write_text_file(path, mxai::write_feature_csv(features->matrix)); });
}

void mx_features_close(mx_features* features) { delete features; }

mx_status mx_forest_train(const mx_features* features, const char* params_json, mx_model** out) {
  if (auto s = require(features && out, "mx_forest_train")) return s;
  return guarded([&] {
    const json j = parse_params(params_json);
    auto handle = std::make_unique<mx_model>();
    handle->model = mxai::train_forest(features->matrix, forest_params_from(j));
    *out = handle.release();
  });
}

mx_status mx_forest_cross_validate(const mx_features* features, const char* params_json,
                                   char** out_report_json) {
  if (auto s = require(features && out_report_json, "mx_forest_cross_validate")) return s;
  return guarded([&] {
    const json j = parse_params(params_json);
    mxai::CvOptions cv;
    cv.k = j.value("k", cv.k);
    cv.seed = j.value("seed", cv.seed);
    cv.stratified = j.value("stratified", cv.stratified);
    cv.group_by_household = j.value("group_by_household", cv.group_by_household);
    const auto report = mxai::cross_validate(features->matrix, forest_params_from(j), cv);
    *out_report_json = dup_string(mxai::eval_report_to_json(report));
  });
}

mx_status mx_forest_save(const mx_model* model, const char* path) {
  if (auto s = require(model && path, "mx_forest_save")) return s;
  return guarded([&] { mxai::save_forest(model->model, path); });
}

mx_status mx_forest_load(const char* path, mx_model** out) {
  if (auto s = require(path && out, "mx_forest_load")) return s;
  return guarded([&] {
    auto handle = std::make_unique<mx_model>();
    handle->model = mxai::load_forest(path);
    *out = handle.release();
  });
}

mx_status mx_forest_predict(const mx_model* model, const double* features, size_t n_features,
                            double* out_proba) {
  if (auto s = require(model && features && out_proba, "mx_forest_predict")) return s;
  return guarded([&] { *out_proba = mxai::predict_proba(model->model, features, n_features); });
}

void mx_forest_close(mx_model* model) { delete model; }

mx_status mx_explain(const mx_model* model, const mx_dataset* data, const char* params_json,
                     mx_attribution** out) {
  if (auto s = require(model && data && out, "mx_explain")) return s;
  return guarded([&] {
    const mxai::RunConfig config = explain_config_from(parse_params(params_json));
    auto handle = std::make_unique<mx_attribution>();
    handle->attribution =
        mxai::explain_household(model->model, data->profiles, config).attribution;
    *out = handle.release();
  });
}

mx_status mx_attribution_size(const mx_attribution* attribution, size_t* out_n) {
  if (auto s = require(attribution && out_n, "mx_attribution_size")) return s;
  *out_n = attribution->attribution.phi.size();
  return MX_OK;
}

mx_status mx_attribution_values(const mx_attribution* attribution, double* out_phi,
                                size_t capacity) {
  if (auto s = require(attribution && out_phi, "mx_attribution_values")) return s;
  const auto& phi = attribution->attribution.phi;
  if (capacity < phi.size()) {
    return fail(MX_ERR_USAGE, "mx_attribution_values: buffer holds " + std::to_string(capacity) +
                                  ", need " + std::to_string(phi.size()));
  }
  std::memcpy(out_phi, phi.data(), phi.size() * sizeof(double));
  return MX_OK;
}

mx_status mx_attribution_export(const mx_attribution* attribution, const char* csv_path,
                                const char* metadata_json_path) {
  if (auto s = require(attribution != nullptr, "mx_attribution_export")) return s;
  return guarded([&] {
    if (csv_path) {
      mxai::write_text_file(csv_path, mxai::attribution_to_csv(attribution->attribution));
    }
    if (metadata_json_path) {
      mxai::write_text_file(metadata_json_path,
                            mxai::attribution_metadata_json(attribution->attribution));
    }
  });
}

void mx_attribution_close(mx_attribution* attribution) { delete attribution; }

mx_status mx_xai_evaluate(const mx_model* model, const mx_dataset* data, const char* params_json,
                          char** out_csv) {
  if (auto s = require(model && data && out_csv, "mx_xai_evaluate")) return s;
  return guarded([&] {
    const json j = parse_params(params_json);
    mxai::XaiEvalConfig xc;
    const std::string explainer = j.value("explainer", "kernel-shap");
    if (explainer == "kernel-shap") {
      xc.explainer = mxai::ExplainerKind::kKernelShap;
    } else if (explainer == "lime") {
      xc.explainer = mxai::ExplainerKind::kLime;
    } else if (explainer == "random") {
      xc.explainer = mxai::ExplainerKind::kRandom;
    } else {
      throw mxai::usage_error("explainer must be kernel-shap|lime|random");
    }
    const std::string background = j.value("background", "household");
    if (background == "global") {
      xc.background = mxai::BackgroundMode::kGlobal;
    } else if (background != "household") {
      throw mxai::usage_error("background must be household|global");
    }
    xc.n_segments = j.value("segments", xc.n_segments);
    xc.top_k_fraction = j.value("top_k_fraction", xc.top_k_fraction);
    xc.top_k_per_day = j.value("top_k_per_day", xc.top_k_per_day);
    xc.n_samples = j.value("n_households", xc.n_samples);
    xc.n_coalitions = j.value("n_coalitions", xc.n_coalitions);
    xc.lime_perturbations = j.value("lime_perturbations", xc.lime_perturbations);
    xc.completeness_threshold = j.value("completeness_threshold", xc.completeness_threshold);
    xc.seed = j.value("seed", xc.seed);
    xc.threads = j.value("threads", xc.threads);

    std::vector<std::pair<std::string, mxai::XaiScore>> scores;
    scores.emplace_back(std::string("faithfulness_") + mxai::to_string(xc.explainer),
                        mxai::faithfulness(model->model, data->profiles, xc));
    scores.emplace_back(std::string("stability_") + mxai::to_string(xc.explainer),
                        mxai::stability(model->model, data->profiles, xc));
    if (j.contains("manifest") && !j.at("manifest").is_null()) {
      const auto target = mxai::characteristic_from_string(model->model.target);
      if (!target) {
        throw mxai::data_error("model target '" + model->model.target +
                               "' is not a known characteristic");
      }
      const auto windows =
          mxai::read_manifest_windows(j.at("manifest").get<std::string>(), *target);
      scores.emplace_back(std::string("localization_") + mxai::to_string(xc.explainer),
                          mxai::localization(model->model, data->profiles, windows, xc));
    }
    *out_csv = dup_string(mxai::xai_scores_csv(model->model.target, scores));
  });
}

mx_status mx_feedback_build(const mx_model* model, const mx_dataset* data, const char* params_json,
                            char** out_spec_json) {
  if (auto s = require(model && data && out_spec_json, "mx_feedback_build")) return s;
  return guarded([&] {
    mxai::RunConfig config = explain_config_from(parse_params(params_json));
    config.characteristic = model->model.target.empty() ? "cooking" : model->model.target;
    const auto ex = mxai::explain_household(model->model, data->profiles, config);
    const auto spec = mxai::feedback_spec_from_explanation(ex, config, mxai::VizType::kLine);
    *out_spec_json = dup_string(mxai::feedback_spec_to_json(spec));
  });
}

mx_status mx_render_spec(const char* spec_json, const char* out_path) {
  if (auto s = require(spec_json && out_path, "mx_render_spec")) return s;
  return guarded([&] {
    const auto spec = mxai::feedback_spec_from_json(spec_json);
    mxai::write_text_file(out_path, mxai::render(spec));
  });
}

mx_status mx_conjoint_generate(int n_participants, uint64_t seed, const char* out_csv_path) {
  if (auto s = require(out_csv_path != nullptr, "mx_conjoint_generate")) return s;
  return guarded([&] {
    const auto records = mxai::generate_choice_sets(n_participants, seed);
    mxai::write_text_file(out_csv_path, mxai::choice_records_to_csv(records));
  });
}

mx_status mx_analyze_conjoint(const char* choices_csv_path, const char* params_json,
                              char** out_table, char** out_csv) {
  if (auto s = require(choices_csv_path != nullptr, "mx_analyze_conjoint")) return s;
  return guarded([&] {
    const json j = parse_params(params_json);
    const auto records = mxai::read_choice_records(choices_csv_path);
    const auto analysis = mxai::analyze_conjoint(records, j.value("reference", "shap"));
    if (out_table) *out_table = dup_string(mxai::conjoint_table(analysis));
    if (out_csv) *out_csv = dup_string(mxai::fit_result_csv(analysis.fit));
  });
}

mx_status mx_analyze_tasks(const char* tasks_csv_path, const char* params_json, char** out_table,
                           char** out_csv) {
  if (auto s = require(tasks_csv_path != nullptr, "mx_analyze_tasks")) return s;
  return guarded([&] {
    const json j = parse_params(params_json);
    const std::string robust = j.value("robust", "hc0");
    mxai::RobustKind kind = mxai::RobustKind::kHC0;
    if (robust == "hc1") {
      kind = mxai::RobustKind::kHC1;
    } else if (robust == "hc3") {
      kind = mxai::RobustKind::kHC3;
    } else if (robust != "hc0") {
      throw mxai::usage_error("robust must be hc0|hc1|hc3");
    }
    const auto records = mxai::read_task_records(tasks_csv_path);
    const auto fit = mxai::analyze_tasks(records, j.value("metric", "mem_right"),
                                         j.value("reference", "shap"), kind);
    if (out_table) *out_table = dup_string(mxai::fit_result_table(fit));
    if (out_csv) *out_csv = dup_string(mxai::fit_result_csv(fit));
  });
}

mx_status mx_synth_generate(const char* config_json, const char* out_dir) {
  if (auto s = require(out_dir != nullptr, "mx_synth_generate")) return s;
  return guarded([&] {
    const mxai::SynthConfig config =
        config_json && config_json[0] ? mxai::synth_config_from_json(config_json)
                                      : mxai::SynthConfig{};
    mxai::write_corpus(mxai::generate_households(config), out_dir);
  });
}

mx_status mx_pipeline_run(const char* config_json, char** out_manifest_json) {
  if (auto s = require(config_json != nullptr, "mx_pipeline_run")) return s;
  return guarded([&] {
    const std::string manifest = mxai::run_pipeline(mxai::run_config_from_json(config_json));
    if (out_manifest_json) *out_manifest_json = dup_string(manifest);
  });
}

}  // extern "C"
