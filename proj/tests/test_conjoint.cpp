#include <doctest.h>

#include <map>
#include <set>

#include "core/conjoint.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/textio.hpp"

using namespace mxai;

TEST_CASE("variant indexing is a bijection over the 40-cell design") {
  std::set<std::string> seen;
  for (int i = 0; i < kVariantCount; ++i) {
    const ChoiceVariant v = variant_from_index(i);
    CHECK(variant_to_index(v) == i);
    seen.insert(v.visual + (v.has_text ? "T" : "t") + (v.has_chatbot ? "C" : "c") + v.tip);
  }
  CHECK(seen.size() == kVariantCount);
  CHECK_THROWS_AS(variant_from_index(40), usage_error);
}

TEST_CASE("one participant receives 5 sets x 3 options") {
  const auto records = generate_choice_sets(1, 7);
  CHECK(records.size() == 15);
  std::map<int, int> per_set;
  for (const auto& r : records) per_set[r.set_index] += 1;
  CHECK(per_set.size() == 5);
  for (const auto& [set, count] : per_set) CHECK(count == 3);
}

TEST_CASE("choice sets hold two distinct variants plus the none option") {
  const auto records = generate_choice_sets(152, 7919);
  CHECK(records.size() == 2280);  // 152 * 5 * 3

  std::map<std::pair<std::string, int>, std::vector<const ChoiceRecord*>> sets;
  for (const auto& r : records) sets[{r.participant_id, r.set_index}].push_back(&r);
  CHECK(sets.size() == 152 * 5);

  std::set<int> reachable;
  for (const auto& [key, options] : sets) {
    REQUIRE(options.size() == 3);
    int n_none = 0;
    std::vector<int> variants;
    for (const ChoiceRecord* r : options) {
      if (r->is_none) {
        ++n_none;
      } else {
        variants.push_back(variant_to_index(r->option));
      }
      CHECK_FALSE(r->chosen);  // skeletons leave the choice unset
    }
    CHECK(n_none == 1);
    REQUIRE(variants.size() == 2);
    CHECK(variants[0] != variants[1]);
    reachable.insert(variants.begin(), variants.end());
  }
  CHECK(reachable.size() == kVariantCount);  // all 40 variants occur at this n
}

TEST_CASE("generation is deterministic under the seed") {
  const auto a = generate_choice_sets(10, 5);
  const auto b = generate_choice_sets(10, 5);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].participant_id == b[i].participant_id);
    CHECK(a[i].is_none == b[i].is_none);
    if (!a[i].is_none) CHECK(variant_to_index(a[i].option) == variant_to_index(b[i].option));
  }
}

TEST_CASE("choice records round-trip through CSV") {
  auto records = generate_choice_sets(3, 11);
  records[0].chosen = true;
  records[5].chosen = true;
  const auto back = choice_records_from_csv_text(choice_records_to_csv(records));
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].participant_id == records[i].participant_id);
    CHECK(back[i].set_index == records[i].set_index);
    CHECK(back[i].is_none == records[i].is_none);
    CHECK(back[i].chosen == records[i].chosen);
    if (!records[i].is_none) {
      CHECK(variant_to_index(back[i].option) == variant_to_index(records[i].option));
    }
  }
  CHECK_THROWS_AS(choice_records_from_csv_text("p1,1,martian,,,,,0\n"), data_error);
}

namespace {

// Simulated choices from a known preference vector, for end-to-end recovery.
std::vector<ChoiceRecord> simulated_choices(int n_participants, uint64_t seed) {
  auto records = generate_choice_sets(n_participants, seed);
  Rng rng(seed + 1);
  auto utility = [](const ChoiceRecord& r) {
    if (r.is_none) return -1.5;
    double u = 0.0;
    if (r.option.visual == "line") u += 1.0;
    if (r.option.visual == "bar") u += 0.9;
    if (r.option.visual == "polar") u -= 0.3;
    if (r.option.visual == "shap") u -= 1.1;
    u += r.option.has_text ? 0.1 : -0.1;
    u += r.option.tip == "cmt" ? 0.15 : -0.15;
    return u;
  };
  // mark exactly one chosen per (participant, set): sample by softmax utility
  for (std::size_t i = 0; i + 2 < records.size(); i += 3) {
    double w[3];
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
      w[k] = std::exp(utility(records[i + static_cast<std::size_t>(k)]));
      total += w[k];
    }
    double draw = rng.uniform01() * total;
    int pick = 0;
    while (pick < 2 && draw > w[pick]) {
      draw -= w[pick];
      ++pick;
    }
    records[i + static_cast<std::size_t>(pick)].chosen = true;
  }
  return records;
}

}  // namespace

TEST_CASE("conjoint analysis: k=8 columns, exact identities, sane preferences") {
  const auto records = simulated_choices(400, 77);
  const ConjointAnalysis a = analyze_conjoint(records, "shap");

  CHECK(a.fit.k == 8);  // 4 visual effect columns + Text_No + Chatbot_No + Tip_CM + None
  CHECK(a.fit.n == records.size());

  // exact identities on the fitted object
  CHECK(a.fit.aic == doctest::Approx(2.0 * 8 - 2.0 * a.fit.log_likelihood));
  CHECK(a.fit.bic == doctest::Approx(8 * std::log(static_cast<double>(a.fit.n)) -
                                     2.0 * a.fit.log_likelihood));
  CHECK(a.fit.deviance == doctest::Approx(-2.0 * a.fit.log_likelihood));
  for (std::size_t j = 0; j < a.fit.names.size(); ++j) {
    CHECK(a.fit.odds_ratio[j] ==
          doctest::Approx(std::exp(a.fit.beta(static_cast<Eigen::Index>(j)))));
  }

  // effect estimates plus the derived reference sum to zero
  double visual_sum = a.reference_estimate;
  for (int j = 0; j < 4; ++j) visual_sum += a.fit.beta(j);
  CHECK(visual_sum == doctest::Approx(0.0).epsilon(1e-10));

  // preference recovery: line and bar beat the shap reference, none is shunned
  std::map<std::string, double> beta;
  for (std::size_t j = 0; j < a.fit.names.size(); ++j) {
    beta[a.fit.names[j]] = a.fit.beta(static_cast<Eigen::Index>(j));
  }
  CHECK(beta.at("Visualline") > 0.5);
  CHECK(beta.at("Visualbar") > 0.4);
  CHECK(beta.at("None") < -0.5);
  CHECK(a.reference_estimate < -0.5);
  CHECK(a.reference_odds_ratio < 0.6);

  const std::string table = conjoint_table(a);
  CHECK(table.find("Odds ratio") != std::string::npos);
  CHECK(table.find("Visualshap (reference, derived)") != std::string::npos);
}

TEST_CASE("conjoint analysis rejects a reference level missing from the data") {
  const auto records = simulated_choices(20, 3);
  CHECK_THROWS_AS(analyze_conjoint(records, "hologram"), data_error);
}

TEST_CASE("task analysis fits the dummy-coded OLS with robust errors") {
  Rng rng(13);
  std::vector<TaskRecord> records;
  const std::vector<std::string> visuals = {"line", "bar", "polar", "shap", "text"};
  for (int i = 0; i < 600; ++i) {
    TaskRecord r;
    r.participant_id = "p" + std::to_string(i / 4);
    r.visual = visuals[static_cast<std::size_t>(rng.uniform_below(5))];
    r.age = 20.0 + rng.uniform01() * 40.0;
    r.edu_high = rng.bernoulli(0.8);
    const double boost = r.visual == "line" ? 0.6 : r.visual == "shap" ? -0.4 : 0.0;
    const double latent = 1.8 + boost + 0.01 * (r.age - 30.0) + rng.normal() * 0.6;
    r.mem_right = std::clamp(static_cast<int>(std::lround(latent)), 0, 3);
    r.mem_dontknow = 3 - r.mem_right;
    r.mental_effort = std::clamp(static_cast<int>(std::lround(3.5 + rng.normal())), 1, 7);
    r.school_grade = std::clamp(static_cast<int>(std::lround(4.0 - boost + rng.normal())), 1, 6);
    r.reading_time_log = 3.5 + 0.01 * (r.age - 30.0) + rng.normal() * 0.5;
    r.answer_time_log = 3.1 + rng.normal() * 0.4;
    records.push_back(std::move(r));
  }

  const FitResult fit = analyze_tasks(records, "mem_right", "shap");
  REQUIRE(fit.names.size() == 7);  // intercept + 4 visuals + age + edu
  CHECK(fit.names[0] == "(Intercept)");
  std::map<std::string, double> beta;
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    beta[fit.names[j]] = fit.beta(static_cast<Eigen::Index>(j));
  }
  CHECK(beta.at("Visualline") > 0.5);  // planted line advantage over shap
  CHECK(beta.count("Age") == 1);
  CHECK(beta.count("EduHIGH") == 1);

  CHECK_THROWS_AS(analyze_tasks(records, "nonexistent_metric", "shap"), usage_error);
}

TEST_CASE("task records round-trip through CSV with range validation") {
  std::vector<TaskRecord> records(2);
  records[0] = TaskRecord{"p1", "line", 31.0, true, 3.4, 3.0, 2, 1, 4, 3};
  records[1] = TaskRecord{"p2", "shap", 55.0, false, 3.9, 3.2, 0, 3, 7, 6};
  const std::string path = "test_task_records.csv";
  write_text_file(path, task_records_to_csv(records));
  const auto back = read_task_records(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].visual == "line");
  CHECK(back[0].mem_right == 2);
  CHECK(back[1].edu_high == false);
  CHECK(back[1].school_grade == 6);
  std::remove(path.c_str());

  write_text_file(path, "p1,line,31,1,3.4,3.0,9,1,4,3\n");  // mem_right out of range
  CHECK_THROWS_AS(read_task_records(path), data_error);
  std::remove(path.c_str());
}
