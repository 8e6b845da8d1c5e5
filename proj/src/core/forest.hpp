#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/features.hpp"

namespace mxai {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double pos_fraction = 0.0;  // leaf payload
  int n_samples = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict(const double* x) const;
};

struct ForestParams {
  int n_trees = 100;
  int max_depth = 0;  // 0 = unlimited
  int min_leaf = 1;
  int mtry = 0;  // 0 = floor(sqrt(p))
  uint64_t seed = kDefaultSeedForest;
  int threads = 0;  // 0 = hardware

  static constexpr uint64_t kDefaultSeedForest = 7919;
};

struct ForestModel {
  std::vector<Tree> trees;
  int n_trees = 0;
  uint64_t seed = 0;
  std::vector<std::string> feature_names;
  std::string target;
  double class_prior = 0.0;

  std::size_t n_features() const { return feature_names.size(); }
};

struct FoldMetrics {
  double acc = 0.0;
  double auc = 0.0;
  bool auc_defined = true;
};

struct EvalReport {
  double acc = 0.0;
  double auc = 0.0;
  bool auc_defined = true;
  std::vector<FoldMetrics> per_fold;
  std::size_t n = 0;
  double positive_fraction = 0.0;
};

struct CvOptions {
  int k = 10;
  uint64_t seed = ForestParams::kDefaultSeedForest;
  bool stratified = false;
  bool group_by_household = false;
  double threshold = 0.5;
};

// Grows `n_trees` CART trees on bootstrap resamples; Gini criterion, `mtry`
// features per split, ties broken by lowest feature index then lowest
// threshold. Deterministic for fixed (data order, params, seed) and any
// thread count (per-tree RNG streams).
ForestModel train_forest(const std::vector<std::vector<double>>& x, const std::vector<bool>& y,
                         const ForestParams& params,
                         const std::vector<std::string>& feature_names = {},
                         const std::string& target = "");

ForestModel train_forest(const FeatureMatrix& m, const ForestParams& params);

double predict_proba(const ForestModel& model, const double* x, std::size_t n);
double predict_proba(const ForestModel& model, const std::vector<double>& x);
std::vector<double> predict_proba_batch(const ForestModel& model,
                                        const std::vector<std::vector<double>>& x, int threads = 0);

// ACC at the given threshold (score >= threshold counts positive) and
// Mann-Whitney AUC with ties counted 1/2. One-class labels leave the AUC
// flagged undefined.
FoldMetrics evaluate(const std::vector<double>& scores, const std::vector<bool>& labels,
                     double threshold = 0.5);

EvalReport cross_validate(const std::vector<std::vector<double>>& x, const std::vector<bool>& y,
                          const std::vector<std::string>& households, const ForestParams& params,
                          const CvOptions& cv);

EvalReport cross_validate(const FeatureMatrix& m, const ForestParams& params, const CvOptions& cv);

// Versioned JSON persistence.
std::string forest_to_json(const ForestModel& model);
ForestModel forest_from_json(const std::string& json_text);
void save_forest(const ForestModel& model, const std::string& path);
ForestModel load_forest(const std::string& path);

std::string eval_report_to_json(const EvalReport& r);
std::string eval_report_to_csv(const EvalReport& r);

}  // namespace mxai
