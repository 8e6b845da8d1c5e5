/* meterxai — household characteristics from smart-meter data, with
 * model-agnostic explanations, explainer scoring, feedback rendering and the
 * statistical machinery for choice experiments.
 *
 * C API over the C++ core: opaque handles, integer status codes, UTF-8
 * strings. Every function returns MX_OK (0) on success; on failure the
 * return value is a status code and mx_last_error() describes the problem
 * for the calling thread. Strings returned through `char**` out-parameters
 * are owned by the caller and must be released with mx_string_free().
 */
#ifndef METERXAI_H
#define METERXAI_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MX_API __declspec(dllexport)
#else
#define MX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mx_status {
  MX_OK = 0,
  MX_ERR_USAGE = 1,   /* bad arguments or configuration */
  MX_ERR_DATA = 2,    /* unreadable/invalid input data */
  MX_ERR_NUMERIC = 3  /* numerical failure (singularity, divergence) */
} mx_status;

typedef struct mx_dataset mx_dataset;   /* parsed load profiles (+labels) */
typedef struct mx_features mx_features; /* feature matrix for one target */
typedef struct mx_model mx_model;       /* trained forest */
typedef struct mx_attribution mx_attribution;

MX_API const char* mx_version(void);

/* Thread-local message for the most recent failing call. */
MX_API const char* mx_last_error(void);

MX_API void mx_string_free(char* s);

/* ---- data ---------------------------------------------------------- */

/* format: "canonical" or "cer-code"; cer_epoch: ISO date required for
 * cer-code, may be NULL otherwise. */
MX_API mx_status mx_dataset_open(const char* readings_path, const char* format,
                                 const char* cer_epoch, mx_dataset** out);
MX_API mx_status mx_dataset_load_labels(mx_dataset* data, const char* labels_path);
MX_API mx_status mx_dataset_count(const mx_dataset* data, size_t* out_count);
/* Writes the dataset back out in the canonical readings format; parsing the
 * result yields an identical dataset. */
MX_API mx_status mx_dataset_export_csv(const mx_dataset* data, const char* path);
MX_API void mx_dataset_close(mx_dataset* data);

/* ---- features ------------------------------------------------------ */

/* characteristic: "cooking" | "presence" | "water_heating". */
MX_API mx_status mx_features_build(const mx_dataset* data, const char* characteristic,
                                   double completeness_threshold, mx_features** out);
MX_API mx_status mx_features_shape(const mx_features* features, size_t* out_rows,
                                   size_t* out_cols);
MX_API mx_status mx_features_export_csv(const mx_features* features, const char* path);
MX_API void mx_features_close(mx_features* features);

/* ---- forest -------------------------------------------------------- */

/* params_json keys (all optional): n_trees, max_depth, min_leaf, mtry,
 * seed, threads. */
MX_API mx_status mx_forest_train(const mx_features* features, const char* params_json,
                                 mx_model** out);
/* additional cv keys: k, stratified, group_by_household. Returns the
 * evaluation report as JSON. */
MX_API mx_status mx_forest_cross_validate(const mx_features* features, const char* params_json,
                                          char** out_report_json);
MX_API mx_status mx_forest_save(const mx_model* model, const char* path);
MX_API mx_status mx_forest_load(const char* path, mx_model** out);
MX_API mx_status mx_forest_predict(const mx_model* model, const double* features,
                                   size_t n_features, double* out_proba);
MX_API void mx_forest_close(mx_model* model);

/* ---- explanation --------------------------------------------------- */

/* params_json keys (all optional): method ("kernel-shap"|"lime"), segments,
 * n_coalitions, lime_perturbations, background ("household"|"global"),
 * meter, week (ISO Monday; omitted = latest), seed, threads,
 * completeness_threshold. */
MX_API mx_status mx_explain(const mx_model* model, const mx_dataset* data,
                            const char* params_json, mx_attribution** out);
MX_API mx_status mx_attribution_size(const mx_attribution* attribution, size_t* out_n);
MX_API mx_status mx_attribution_values(const mx_attribution* attribution, double* out_phi,
                                       size_t capacity);
MX_API mx_status mx_attribution_export(const mx_attribution* attribution, const char* csv_path,
                                       const char* metadata_json_path);
MX_API void mx_attribution_close(mx_attribution* attribution);

/* ---- explainer scoring --------------------------------------------- */

/* params_json keys: explainer ("kernel-shap"|"lime"|"random"), metricset is
 * implicit (faithfulness + stability, localization when manifest given),
 * n_households, top_k_fraction, top_k_per_day, segments, n_coalitions,
 * background, manifest, seed, threads, completeness_threshold.
 * Returns a Table-style CSV (characteristic row, metric_method columns). */
MX_API mx_status mx_xai_evaluate(const mx_model* model, const mx_dataset* data,
                                 const char* params_json, char** out_csv);

/* ---- feedback ------------------------------------------------------ */

/* Builds a feedback spec JSON (day profile, highlight, pooled attribution)
 * for one household-week; params as for mx_explain plus "tip"
 * ("none"|"cmt"|"et") and "caption" (bool). */
MX_API mx_status mx_feedback_build(const mx_model* model, const mx_dataset* data,
                                   const char* params_json, char** out_spec_json);
/* Renders a spec JSON (its "viz" field selects the form) to out_path:
 * SVG 1.1 for line|bar|polar|shap, UTF-8 text for text. */
MX_API mx_status mx_render_spec(const char* spec_json, const char* out_path);

/* ---- choice experiment analytics ------------------------------------ */

/* Writes the skeleton choice-record CSV (chosen = 0 everywhere). */
MX_API mx_status mx_conjoint_generate(int n_participants, uint64_t seed, const char* out_csv_path);
/* Effect-coded ML logit over choice records; returns an aligned text table
 * and a CSV through the out-parameters (either may be NULL). params_json:
 * {"reference": "shap"}. */
MX_API mx_status mx_analyze_conjoint(const char* choices_csv_path, const char* params_json,
                                     char** out_table, char** out_csv);
/* OLS with robust SEs for one task metric; params_json:
 * {"metric": "mem_right", "reference": "shap", "robust": "hc0"}. */
MX_API mx_status mx_analyze_tasks(const char* tasks_csv_path, const char* params_json,
                                  char** out_table, char** out_csv);

/* ---- synthetic corpora ---------------------------------------------- */

/* config_json: see docs/file_formats.md; "{}" uses the documented defaults.
 * Writes readings.csv, labels.csv, manifest.json into out_dir. */
MX_API mx_status mx_synth_generate(const char* config_json, const char* out_dir);

/* ---- pipeline -------------------------------------------------------- */

/* Full run: ingest -> features -> train -> cv -> explain -> xai-eval ->
 * render. config_json schema in docs/file_formats.md. Returns the run
 * manifest JSON. */
MX_API mx_status mx_pipeline_run(const char* config_json, char** out_manifest_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* METERXAI_H */
