#include "core/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "core/textio.hpp"

namespace mxai {

using json = nlohmann::json;

double Tree::predict(const double* x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].pos_fraction;
}

namespace {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // weighted child Gini; lower is better
};

// Returns true when `cand` is preferred over `best`: smaller impurity wins,
// near-ties resolved by lowest feature index then lowest threshold.
bool better_split(const SplitChoice& cand, const SplitChoice& best) {
  if (!best.found) return true;
  const double eps = 1e-12 * (1.0 + std::abs(best.score));
  if (cand.score < best.score - eps) return true;
  if (cand.score > best.score + eps) return false;
  if (cand.feature != best.feature) return cand.feature < best.feature;
  return cand.threshold < best.threshold;
}

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, const std::vector<bool>& y, int n_features,
              const ForestParams& params, Rng rng)
      : x_(x), y_(y), n_features_(n_features), params_(params), rng_(rng) {}

  Tree build() {
    const std::size_t n = x_.size();
    std::vector<int> indices(n);
    for (std::size_t i = 0; i < n; ++i) {
      indices[i] = static_cast<int>(rng_.uniform_below(n));  // bootstrap resample
    }
    Tree tree;
    grow(tree, indices, 0);
    return tree;
  }

 private:
  int grow(Tree& tree, std::vector<int>& indices, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    int n_pos = 0;
    for (int i : indices) n_pos += y_[static_cast<std::size_t>(i)] ? 1 : 0;
    const int n = static_cast<int>(indices.size());
    tree.nodes[static_cast<std::size_t>(node_id)].n_samples = n;
    tree.nodes[static_cast<std::size_t>(node_id)].pos_fraction =
        static_cast<double>(n_pos) / static_cast<double>(n);

    const bool pure = n_pos == 0 || n_pos == n;
    const bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
    if (pure || depth_capped || n < 2 * params_.min_leaf) return node_id;

    const SplitChoice split = best_split(indices);
    if (!split.found) return node_id;

    std::vector<int> left, right;
    left.reserve(indices.size());
    right.reserve(indices.size());
    for (int i : indices) {
      if (x_[static_cast<std::size_t>(i)][static_cast<std::size_t>(split.feature)] <=
          split.threshold) {
        left.push_back(i);
      } else {
        right.push_back(i);
      }
    }
    indices.clear();
    indices.shrink_to_fit();

    tree.nodes[static_cast<std::size_t>(node_id)].feature = split.feature;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = split.threshold;
    const int left_id = grow(tree, left, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left_id;
    const int right_id = grow(tree, right, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].right = right_id;
    return node_id;
  }

  SplitChoice best_split(const std::vector<int>& indices) {
    const int mtry = params_.mtry > 0
                         ? std::min(params_.mtry, n_features_)
                         : std::max(1, static_cast<int>(std::floor(std::sqrt(n_features_))));

    // partial Fisher-Yates draw of mtry distinct features
    std::vector<int> feats(static_cast<std::size_t>(n_features_));
    std::iota(feats.begin(), feats.end(), 0);
    for (int j = 0; j < mtry; ++j) {
      const std::size_t pick =
          static_cast<std::size_t>(j) +
          rng_.uniform_below(static_cast<uint64_t>(n_features_ - j));
      std::swap(feats[static_cast<std::size_t>(j)], feats[pick]);
    }

    SplitChoice best;
    std::vector<std::pair<double, bool>> vals;
    for (int j = 0; j < mtry; ++j) {
      const int f = feats[static_cast<std::size_t>(j)];
      vals.clear();
      vals.reserve(indices.size());
      for (int i : indices) {
        vals.emplace_back(x_[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)],
                          y_[static_cast<std::size_t>(i)]);
      }
      std::sort(vals.begin(), vals.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      const int n = static_cast<int>(vals.size());
      int total_pos = 0;
      for (const auto& [v, label] : vals) total_pos += label ? 1 : 0;

      int left_n = 0, left_pos = 0;
      for (int i = 0; i + 1 < n; ++i) {
        ++left_n;
        left_pos += vals[static_cast<std::size_t>(i)].second ? 1 : 0;
        if (vals[static_cast<std::size_t>(i)].first ==
            vals[static_cast<std::size_t>(i + 1)].first) {
          continue;  // no boundary between equal values
        }
        const int right_n = n - left_n;
        if (left_n < params_.min_leaf || right_n < params_.min_leaf) continue;
        const int right_pos = total_pos - left_pos;
        const double pl = static_cast<double>(left_pos) / left_n;
        const double pr = static_cast<double>(right_pos) / right_n;
        const double gini_l = 2.0 * pl * (1.0 - pl);
        const double gini_r = 2.0 * pr * (1.0 - pr);
        SplitChoice cand;
        cand.found = true;
        cand.feature = f;
        cand.threshold = 0.5 * (vals[static_cast<std::size_t>(i)].first +
                                vals[static_cast<std::size_t>(i + 1)].first);
        cand.score = (left_n * gini_l + right_n * gini_r) / n;
        if (better_split(cand, best)) best = cand;
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<bool>& y_;
  int n_features_;
  const ForestParams& params_;
  Rng rng_;
};

void validate_training_data(const std::vector<std::vector<double>>& x, const std::vector<bool>& y) {
  if (x.empty()) throw data_error("train_forest: empty training set");
  if (x.size() != y.size()) {
    throw data_error("train_forest: " + std::to_string(x.size()) + " rows vs " +
                     std::to_string(y.size()) + " labels");
  }
  if (x.size() < 2) throw data_error("train_forest: need at least 2 samples");
  const std::size_t p = x[0].size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != p) throw data_error("train_forest: ragged feature matrix");
    for (double v : x[i]) {
      if (!std::isfinite(v)) {
        throw data_error("train_forest: non-finite feature value in row " + std::to_string(i));
      }
    }
  }
}

}  // namespace

ForestModel train_forest(const std::vector<std::vector<double>>& x, const std::vector<bool>& y,
                         const ForestParams& params, const std::vector<std::string>& feature_names,
                         const std::string& target) {
  validate_training_data(x, y);
  if (params.n_trees < 1) throw usage_error("train_forest: n_trees must be >= 1");

  ForestModel model;
  model.n_trees = params.n_trees;
  model.seed = params.seed;
  model.target = target;
  if (!feature_names.empty()) {
    if (feature_names.size() != x[0].size()) {
      throw usage_error("train_forest: feature_names size mismatch");
    }
    model.feature_names = feature_names;
  } else {
    for (std::size_t j = 0; j < x[0].size(); ++j) model.feature_names.push_back("f" + std::to_string(j));
  }
  model.class_prior =
      static_cast<double>(std::count(y.begin(), y.end(), true)) / static_cast<double>(y.size());

  model.trees.resize(static_cast<std::size_t>(params.n_trees));
  parallel_for(static_cast<std::size_t>(params.n_trees), params.threads, [&](std::size_t t) {
    TreeBuilder builder(x, y, static_cast<int>(x[0].size()), params,
                        Rng::stream(params.seed, /*a=*/1, /*b=*/t));
    model.trees[t] = builder.build();
  });
  return model;
}

ForestModel train_forest(const FeatureMatrix& m, const ForestParams& params) {
  std::vector<std::vector<double>> x;
  std::vector<bool> y;
  for (const auto& r : m.rows) {
    if (!r.label) continue;
    x.emplace_back(r.values.begin(), r.values.end());
    y.push_back(*r.label);
  }
  if (x.empty()) throw data_error("train_forest: no labeled rows for target");
  std::vector<std::string> names(feature_names().begin(), feature_names().end());
  return train_forest(x, y, params, names, to_string(m.characteristic));
}

double predict_proba(const ForestModel& model, const double* x, std::size_t n) {
  if (n != model.n_features()) {
    throw usage_error("predict_proba: expected " + std::to_string(model.n_features()) +
                      " features, got " + std::to_string(n));
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(x[j])) throw data_error("predict_proba: non-finite feature value");
  }
  double acc = 0.0;
  for (const auto& tree : model.trees) acc += tree.predict(x);
  return acc / static_cast<double>(model.trees.size());
}

double predict_proba(const ForestModel& model, const std::vector<double>& x) {
  return predict_proba(model, x.data(), x.size());
}

std::vector<double> predict_proba_batch(const ForestModel& model,
                                        const std::vector<std::vector<double>>& x, int threads) {
  std::vector<double> out(x.size());
  parallel_for(x.size(), threads, [&](std::size_t i) { out[i] = predict_proba(model, x[i]); });
  return out;
}

FoldMetrics evaluate(const std::vector<double>& scores, const std::vector<bool>& labels,
                     double threshold) {
  if (scores.empty() || scores.size() != labels.size()) {
    throw usage_error("evaluate: scores/labels size mismatch or empty");
  }
  FoldMetrics m;
  std::size_t correct = 0, n_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (pred == labels[i]) ++correct;
    if (labels[i]) ++n_pos;
  }
  m.acc = static_cast<double>(correct) / static_cast<double>(scores.size());

  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    m.auc_defined = false;
    m.auc = std::numeric_limits<double>::quiet_NaN();
    return m;
  }

  // Mann-Whitney with average ranks for ties.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]]) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  m.auc = u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return m;
}

EvalReport cross_validate(const std::vector<std::vector<double>>& x, const std::vector<bool>& y,
                          const std::vector<std::string>& households, const ForestParams& params,
                          const CvOptions& cv) {
  const std::size_t n = x.size();
  if (cv.k < 2) throw usage_error("cross_validate: k must be >= 2");
  if (static_cast<std::size_t>(cv.k) > n) {
    throw usage_error("cross_validate: k=" + std::to_string(cv.k) + " exceeds n=" +
                      std::to_string(n));
  }
  if (!households.empty() && households.size() != n) {
    throw usage_error("cross_validate: households size mismatch");
  }

  // Random allocation to folds from the seed; fold sizes differ by <= 1.
  std::vector<int> fold(n, -1);
  Rng rng = Rng::stream(cv.seed, /*a=*/2);
  auto deal = [&](std::vector<std::size_t>& idx) {
    for (std::size_t i = idx.size(); i > 1; --i) {
      const std::size_t j = rng.uniform_below(i);
      std::swap(idx[i - 1], idx[j]);
    }
  };

  if (cv.group_by_household) {
    if (households.empty()) throw usage_error("cross_validate: grouping requires household ids");
    std::vector<std::string> uniq = households;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < static_cast<std::size_t>(cv.k)) {
      throw usage_error("cross_validate: fewer households than folds");
    }
    std::vector<std::size_t> hidx(uniq.size());
    std::iota(hidx.begin(), hidx.end(), 0);
    deal(hidx);
    std::unordered_map<std::string, int> hfold;
    for (std::size_t i = 0; i < hidx.size(); ++i) {
      hfold[uniq[hidx[i]]] = static_cast<int>(i % static_cast<std::size_t>(cv.k));
    }
    for (std::size_t i = 0; i < n; ++i) fold[i] = hfold[households[i]];
  } else if (cv.stratified) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i) (y[i] ? pos : neg).push_back(i);
    deal(pos);
    deal(neg);
    for (std::size_t i = 0; i < pos.size(); ++i) fold[pos[i]] = static_cast<int>(i % static_cast<std::size_t>(cv.k));
    for (std::size_t i = 0; i < neg.size(); ++i) fold[neg[i]] = static_cast<int>(i % static_cast<std::size_t>(cv.k));
  } else {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    deal(idx);
    for (std::size_t i = 0; i < n; ++i) fold[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(cv.k));
  }

  EvalReport report;
  report.n = n;
  report.positive_fraction =
      static_cast<double>(std::count(y.begin(), y.end(), true)) / static_cast<double>(n);
  report.per_fold.resize(static_cast<std::size_t>(cv.k));

  for (int f = 0; f < cv.k; ++f) {
    std::vector<std::vector<double>> xtr, xte;
    std::vector<bool> ytr, yte;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold[i] == f) {
        xte.push_back(x[i]);
        yte.push_back(y[i]);
      } else {
        xtr.push_back(x[i]);
        ytr.push_back(y[i]);
      }
    }
    ForestParams fold_params = params;
    fold_params.seed = Rng::stream(cv.seed, /*a=*/3, /*b=*/static_cast<uint64_t>(f)).next_u64();
    const ForestModel model = train_forest(xtr, ytr, fold_params);
    const std::vector<double> scores = predict_proba_batch(model, xte, params.threads);
    report.per_fold[static_cast<std::size_t>(f)] = evaluate(scores, yte, cv.threshold);
  }

  double acc = 0.0, auc = 0.0;
  int auc_folds = 0;
  for (const auto& fm : report.per_fold) {
    acc += fm.acc;
    if (fm.auc_defined) {
      auc += fm.auc;
      ++auc_folds;
    }
  }
  report.acc = acc / static_cast<double>(cv.k);
  if (auc_folds > 0) {
    report.auc = auc / auc_folds;
  } else {
    report.auc = std::numeric_limits<double>::quiet_NaN();
    report.auc_defined = false;
  }
  return report;
}

EvalReport cross_validate(const FeatureMatrix& m, const ForestParams& params, const CvOptions& cv) {
  std::vector<std::vector<double>> x;
  std::vector<bool> y;
  std::vector<std::string> households;
  for (const auto& r : m.rows) {
    if (!r.label) continue;
    x.emplace_back(r.values.begin(), r.values.end());
    y.push_back(*r.label);
    households.push_back(r.meter_id);
  }
  if (x.empty()) throw data_error("cross_validate: no labeled rows for target");
  return cross_validate(x, y, households, params, cv);
}

std::string forest_to_json(const ForestModel& model) {
  json j;
  j["format"] = "meterxai-forest";
  j["version"] = 1;
  j["n_trees"] = model.n_trees;
  j["seed"] = model.seed;
  j["target"] = model.target;
  j["class_prior"] = model.class_prior;
  j["feature_names"] = model.feature_names;
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.pos_fraction,
                                   n.n_samples}));
    }
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j.dump();
}

ForestModel forest_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw data_error(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "meterxai-forest") {
    throw data_error("model file is not a meterxai forest artifact");
  }
  if (j.value("version", 0) != 1) {
    throw data_error("unsupported model format version");
  }
  ForestModel m;
  try {
    m.n_trees = j.at("n_trees").get<int>();
    m.seed = j.at("seed").get<uint64_t>();
    m.target = j.at("target").get<std::string>();
    m.class_prior = j.at("class_prior").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& tnodes : j.at("trees")) {
      Tree tree;
      for (const auto& n : tnodes) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<int>();
        node.right = n.at(3).get<int>();
        node.pos_fraction = n.at(4).get<double>();
        node.n_samples = n.at(5).get<int>();
        tree.nodes.push_back(node);
      }
      m.trees.push_back(std::move(tree));
    }
  } catch (const json::exception& e) {
    throw data_error(std::string("malformed model file: ") + e.what());
  }
  if (static_cast<int>(m.trees.size()) != m.n_trees) {
    throw data_error("model file: tree count does not match n_trees");
  }
  return m;
}

void save_forest(const ForestModel& model, const std::string& path) {
  write_text_file(path, forest_to_json(model));
}

ForestModel load_forest(const std::string& path) {
  return forest_from_json(read_text_file(path));
}

std::string eval_report_to_json(const EvalReport& r) {
  json j;
  j["n"] = r.n;
  j["positive_fraction"] = r.positive_fraction;
  j["acc"] = r.acc;
  if (r.auc_defined) {
    j["auc"] = r.auc;
  } else {
    j["auc"] = nullptr;
  }
  json folds = json::array();
  for (const auto& f : r.per_fold) {
    json jf;
    jf["acc"] = f.acc;
    if (f.auc_defined) {
      jf["auc"] = f.auc;
    } else {
      jf["auc"] = nullptr;
    }
    folds.push_back(std::move(jf));
  }
  j["per_fold"] = std::move(folds);
  return j.dump(2);
}

std::string eval_report_to_csv(const EvalReport& r) {
  std::string out = "fold,acc,auc\n";
  for (std::size_t i = 0; i < r.per_fold.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += format_double(r.per_fold[i].acc);
    out += ',';
    out += r.per_fold[i].auc_defined ? format_double(r.per_fold[i].auc) : std::string("NA");
    out += '\n';
  }
  out += "mean,";
  out += format_double(r.acc);
  out += ',';
  out += r.auc_defined ? format_double(r.auc) : std::string("NA");
  out += '\n';
  return out;
}

}  // namespace mxai
