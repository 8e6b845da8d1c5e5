#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/regression.hpp"

namespace mxai {

// Stimulus attributes of one feedback variant; the full factorial design has
// 5 * 2 * 2 * 2 = 40 distinct variants.
struct ChoiceVariant {
  std::string visual;  // level set taken from data; generator uses the five viz forms
  bool has_text = false;
  bool has_chatbot = false;
  std::string tip;  // "cmt" or "et"

  bool operator==(const ChoiceVariant&) const = default;
};

inline constexpr int kVariantCount = 40;

const std::vector<std::string>& default_visual_levels();
ChoiceVariant variant_from_index(int index);  // 0..39
int variant_to_index(const ChoiceVariant& v);

struct ChoiceRecord {
  std::string participant_id;
  int set_index = 1;  // 1..5
  bool is_none = false;
  ChoiceVariant option;  // meaningful when !is_none
  bool chosen = false;
};

// Five choice sets per participant, each with two distinct uniformly drawn
// variants plus the none-option; `chosen` left false.
std::vector<ChoiceRecord> generate_choice_sets(int n_participants, uint64_t seed);

std::string choice_records_to_csv(const std::vector<ChoiceRecord>& records);
std::vector<ChoiceRecord> choice_records_from_csv_text(const std::string& text);
std::vector<ChoiceRecord> read_choice_records(const std::string& path);

struct TaskRecord {
  std::string participant_id;
  std::string visual;
  double age = 0.0;
  bool edu_high = false;
  double reading_time_log = 0.0;
  double answer_time_log = 0.0;
  int mem_right = 0;     // 0..3
  int mem_dontknow = 0;  // 0..3
  int mental_effort = 1;  // 1..7
  int school_grade = 1;   // 1..6
};

std::vector<TaskRecord> read_task_records(const std::string& path);
std::string task_records_to_csv(const std::vector<TaskRecord>& records);

struct ConjointAnalysis {
  FitResult fit;
  double reference_estimate = 0.0;    // derived effect of the reference visual
  double reference_odds_ratio = 1.0;
  std::string reference_level;
};

// Pooled binary logit over option rows: visuals effect-coded against the
// reference, the two-level factors as single +/-1 columns (+1 on "no text",
// "no chatbot", "cmt"), NONE as a plain dummy; stimulus columns are zero on
// NONE rows and no intercept is fitted.
ConjointAnalysis analyze_conjoint(const std::vector<ChoiceRecord>& records,
                                  const std::string& reference_visual = "shap");

// OLS of one task metric on visual dummies (reference level), age and
// education, with robust standard errors.
FitResult analyze_tasks(const std::vector<TaskRecord>& records, const std::string& metric,
                        const std::string& reference_visual = "shap",
                        RobustKind robust = RobustKind::kHC0);

const std::vector<std::string>& task_metric_names();

std::string conjoint_table(const ConjointAnalysis& a);

}  // namespace mxai
