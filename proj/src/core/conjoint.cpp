#include "core/conjoint.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/textio.hpp"

namespace mxai {

const std::vector<std::string>& default_visual_levels() {
  static const std::vector<std::string> levels = {"line", "bar", "polar", "shap", "text"};
  return levels;
}

ChoiceVariant variant_from_index(int index) {
  if (index < 0 || index >= kVariantCount) throw usage_error("variant index outside 0..39");
  ChoiceVariant v;
  v.visual = default_visual_levels()[static_cast<std::size_t>(index % 5)];
  v.has_text = (index / 5) % 2 == 1;
  v.has_chatbot = (index / 10) % 2 == 1;
  v.tip = (index / 20) % 2 == 1 ? "et" : "cmt";
  return v;
}

int variant_to_index(const ChoiceVariant& v) {
  const auto& levels = default_visual_levels();
  const auto it = std::find(levels.begin(), levels.end(), v.visual);
  if (it == levels.end()) throw data_error("unknown visual level '" + v.visual + "'");
  int idx = static_cast<int>(it - levels.begin());
  idx += v.has_text ? 5 : 0;
  idx += v.has_chatbot ? 10 : 0;
  idx += v.tip == "et" ? 20 : 0;
  return idx;
}

std::vector<ChoiceRecord> generate_choice_sets(int n_participants, uint64_t seed) {
  if (n_participants < 1) throw usage_error("generate_choice_sets: need n_participants >= 1");
  std::vector<ChoiceRecord> out;
  out.reserve(static_cast<std::size_t>(n_participants) * 15);
  for (int p = 0; p < n_participants; ++p) {
    Rng rng = Rng::stream(seed, /*a=*/31, /*b=*/static_cast<uint64_t>(p));
    char pid[16];
    std::snprintf(pid, sizeof(pid), "p%03d", p + 1);
    for (int set = 1; set <= 5; ++set) {
      const int first = static_cast<int>(rng.uniform_below(kVariantCount));
      int second = static_cast<int>(rng.uniform_below(kVariantCount - 1));
      if (second >= first) ++second;  // uniform without replacement
      for (int option : {first, second}) {
        ChoiceRecord r;
        r.participant_id = pid;
        r.set_index = set;
        r.option = variant_from_index(option);
        out.push_back(std::move(r));
      }
      ChoiceRecord none;
      none.participant_id = pid;
      none.set_index = set;
      none.is_none = true;
      out.push_back(std::move(none));
    }
  }
  return out;
}

std::string choice_records_to_csv(const std::vector<ChoiceRecord>& records) {
  std::string out = "participant_id,set_index,option,visual,has_text,has_chatbot,tip,chosen\n";
  for (const auto& r : records) {
    out += r.participant_id;
    out += ',';
    out += std::to_string(r.set_index);
    out += ',';
    if (r.is_none) {
      out += "none,,,,";
    } else {
      out += "variant,";
      out += r.option.visual;
      out += ',';
      out += r.option.has_text ? '1' : '0';
      out += ',';
      out += r.option.has_chatbot ? '1' : '0';
      out += ',';
      out += r.option.tip;
    }
    out += ',';
    out += r.chosen ? '1' : '0';
    out += '\n';
  }
  return out;
}

namespace {

bool parse_bool_field(const std::string& s, std::size_t line_no, const char* what) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw data_error("line " + std::to_string(line_no) + ": " + what + " must be 0 or 1");
}

}  // namespace

std::vector<ChoiceRecord> choice_records_from_csv_text(const std::string& text) {
  std::vector<ChoiceRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("participant_id,", 0) == 0) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) {
      throw data_error("line " + std::to_string(line_no) + ": expected 8 choice-record fields");
    }
    ChoiceRecord r;
    r.participant_id = f[0];
    const auto set = parse_int(f[1]);
    if (!set || *set < 1) throw data_error("line " + std::to_string(line_no) + ": bad set_index");
    r.set_index = static_cast<int>(*set);
    if (f[2] == "none") {
      r.is_none = true;
    } else if (f[2] == "variant") {
      r.option.visual = f[3];
      r.option.has_text = parse_bool_field(f[4], line_no, "has_text");
      r.option.has_chatbot = parse_bool_field(f[5], line_no, "has_chatbot");
      r.option.tip = f[6];
      if (r.option.tip != "cmt" && r.option.tip != "et") {
        throw data_error("line " + std::to_string(line_no) + ": tip must be cmt or et");
      }
    } else {
      throw data_error("line " + std::to_string(line_no) + ": option must be variant or none");
    }
    r.chosen = parse_bool_field(f[7], line_no, "chosen");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ChoiceRecord> read_choice_records(const std::string& path) {
  return choice_records_from_csv_text(read_text_file(path));
}

std::vector<TaskRecord> read_task_records(const std::string& path) {
  const std::string text = read_text_file(path);
  std::vector<TaskRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("participant_id,", 0) == 0) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) {
      throw data_error(path + " line " + std::to_string(line_no) +
                       ": expected 10 task-record fields");
    }
    TaskRecord r;
    r.participant_id = f[0];
    r.visual = f[1];
    const auto age = parse_double(f[2]);
    const auto rt = parse_double(f[4]);
    const auto at = parse_double(f[5]);
    const auto mr = parse_int(f[6]);
    const auto md = parse_int(f[7]);
    const auto me = parse_int(f[8]);
    const auto sg = parse_int(f[9]);
    if (!age || !rt || !at || !mr || !md || !me || !sg) {
      throw data_error(path + " line " + std::to_string(line_no) + ": unparseable numeric field");
    }
    r.age = *age;
    r.edu_high = parse_bool_field(f[3], line_no, "edu_high");
    r.reading_time_log = *rt;
    r.answer_time_log = *at;
    if (*mr < 0 || *mr > 3 || *md < 0 || *md > 3) {
      throw data_error(path + " line " + std::to_string(line_no) +
                       ": memorization counts must lie in 0..3");
    }
    if (*me < 1 || *me > 7 || *sg < 1 || *sg > 6) {
      throw data_error(path + " line " + std::to_string(line_no) +
                       ": mental_effort in 1..7 and school_grade in 1..6 required");
    }
    r.mem_right = static_cast<int>(*mr);
    r.mem_dontknow = static_cast<int>(*md);
    r.mental_effort = static_cast<int>(*me);
    r.school_grade = static_cast<int>(*sg);
    out.push_back(std::move(r));
  }
  return out;
}

std::string task_records_to_csv(const std::vector<TaskRecord>& records) {
  std::string out =
      "participant_id,visual,age,edu_high,reading_time_log,answer_time_log,"
      "mem_right,mem_dontknow,mental_effort,school_grade\n";
  for (const auto& r : records) {
    out += r.participant_id;
    out += ',';
    out += r.visual;
    out += ',';
    out += format_double(r.age);
    out += ',';
    out += r.edu_high ? '1' : '0';
    out += ',';
    out += format_double(r.reading_time_log);
    out += ',';
    out += format_double(r.answer_time_log);
    out += ',';
    out += std::to_string(r.mem_right);
    out += ',';
    out += std::to_string(r.mem_dontknow);
    out += ',';
    out += std::to_string(r.mental_effort);
    out += ',';
    out += std::to_string(r.school_grade);
    out += '\n';
  }
  return out;
}

ConjointAnalysis analyze_conjoint(const std::vector<ChoiceRecord>& records,
                                  const std::string& reference_visual) {
  if (records.empty()) throw data_error("analyze_conjoint: no records");

  // Levels come from the data; the reference must be present.
  std::set<std::string> level_set;
  for (const auto& r : records) {
    if (!r.is_none) level_set.insert(r.option.visual);
  }
  std::vector<std::string> levels(level_set.begin(), level_set.end());
  if (std::find(levels.begin(), levels.end(), reference_visual) == levels.end()) {
    throw data_error("analyze_conjoint: reference visual '" + reference_visual +
                     "' does not occur in the data");
  }

  std::vector<std::string> visual_values;
  visual_values.reserve(records.size());
  for (const auto& r : records) {
    visual_values.push_back(r.is_none ? reference_visual : r.option.visual);  // placeholder on NONE
  }
  EncodedFactor visual = encode_categorical("Visual", visual_values, levels, reference_visual,
                                             EncodingScheme::kEffect);

  const Eigen::Index n = static_cast<Eigen::Index>(records.size());
  const Eigen::Index k = visual.columns.cols() + 4;  // + Text_No, Chatbot_No, Tip_CM, None
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, k);
  std::vector<std::string> names = visual.column_names;
  names.push_back("Text_No");
  names.push_back("Chatbot_No");
  names.push_back("Tip_CM");
  names.push_back("None");

  std::vector<bool> chosen(records.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    chosen[static_cast<std::size_t>(i)] = r.chosen;
    if (r.is_none) {
      x(i, k - 1) = 1.0;  // all stimulus columns stay zero
      continue;
    }
    for (Eigen::Index j = 0; j < visual.columns.cols(); ++j) x(i, j) = visual.columns(i, j);
    x(i, k - 4) = r.option.has_text ? -1.0 : 1.0;
    x(i, k - 3) = r.option.has_chatbot ? -1.0 : 1.0;
    x(i, k - 2) = r.option.tip == "cmt" ? 1.0 : -1.0;
  }

  ConjointAnalysis out;
  out.fit = fit_logit(x, chosen, names);
  out.reference_level = reference_visual;
  std::vector<double> visual_estimates;
  for (Eigen::Index j = 0; j < visual.columns.cols(); ++j) visual_estimates.push_back(out.fit.beta(j));
  std::tie(out.reference_estimate, out.reference_odds_ratio) =
      derive_reference_effect(visual_estimates);
  return out;
}

const std::vector<std::string>& task_metric_names() {
  static const std::vector<std::string> names = {"reading_time_log", "answer_time_log",
                                                 "mem_right",        "mem_dontknow",
                                                 "mental_effort",    "school_grade"};
  return names;
}

FitResult analyze_tasks(const std::vector<TaskRecord>& records, const std::string& metric,
                        const std::string& reference_visual, RobustKind robust) {
  if (records.empty()) throw data_error("analyze_tasks: no records");

  std::set<std::string> level_set;
  for (const auto& r : records) level_set.insert(r.visual);
  std::vector<std::string> levels(level_set.begin(), level_set.end());
  if (std::find(levels.begin(), levels.end(), reference_visual) == levels.end()) {
    throw data_error("analyze_tasks: reference visual '" + reference_visual +
                     "' does not occur in the data");
  }

  auto metric_of = [&](const TaskRecord& r) -> double {
    if (metric == "reading_time_log") return r.reading_time_log;
    if (metric == "answer_time_log") return r.answer_time_log;
    if (metric == "mem_right") return r.mem_right;
    if (metric == "mem_dontknow") return r.mem_dontknow;
    if (metric == "mental_effort") return r.mental_effort;
    if (metric == "school_grade") return r.school_grade;
    throw usage_error("analyze_tasks: unknown metric '" + metric + "'");
  };

  std::vector<std::string> visual_values;
  for (const auto& r : records) visual_values.push_back(r.visual);
  EncodedFactor visual = encode_categorical("Visual", visual_values, levels, reference_visual,
                                             EncodingScheme::kDummy);

  const Eigen::Index n = static_cast<Eigen::Index>(records.size());
  const Eigen::Index k = 1 + visual.columns.cols() + 2;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, k);
  Eigen::VectorXd y(n);
  std::vector<std::string> names;
  names.push_back("(Intercept)");
  for (const auto& c : visual.column_names) names.push_back(c);
  names.push_back("Age");
  names.push_back("EduHIGH");

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < visual.columns.cols(); ++j) x(i, 1 + j) = visual.columns(i, j);
    x(i, k - 2) = r.age;
    x(i, k - 1) = r.edu_high ? 1.0 : 0.0;
    y(i) = metric_of(r);
  }
  return fit_ols_robust(x, y, names, robust);
}

std::string conjoint_table(const ConjointAnalysis& a) {
  std::string out = fit_result_table(a.fit);
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "Visual%s (reference, derived): estimate %.2f, odds ratio %.2f\n",
                a.reference_level.c_str(), a.reference_estimate, a.reference_odds_ratio);
  out += buf;
  return out;
}

}  // namespace mxai
