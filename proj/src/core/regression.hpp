#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mxai {

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::VectorXd stat;     // z (logit) or t (OLS)
  Eigen::VectorXd p_value;  // two-sided
  std::vector<double> odds_ratio;  // logit only, empty otherwise
  bool is_logit = false;
  double log_likelihood = 0.0;  // logit only
  double aic = 0.0;
  double bic = 0.0;
  double deviance = 0.0;  // -2 * LL
  double r2 = 0.0;        // OLS only
  double adj_r2 = 0.0;
  std::size_t n = 0;
  int k = 0;
};

enum class RobustKind { kHC0, kHC1, kHC3 };

struct LogitOptions {
  double gradient_tol = 1e-8;
  double ll_rel_tol = 1e-10;
  int max_iterations = 100;
  double separation_bound = 30.0;  // |beta| beyond this flags separation
};

// Maximum-likelihood binary logit via Newton iterations. Standard errors from
// the inverse observed information; odds ratios exp(beta); AIC = 2k - 2LL,
// BIC = k ln n - 2LL, deviance = -2LL. Throws numeric_error naming the
// offending column on separation, or on a singular information matrix.
FitResult fit_logit(const Eigen::MatrixXd& design, const std::vector<bool>& chosen,
                    const std::vector<std::string>& names, const LogitOptions& options = {});

// OLS with heteroskedasticity-robust (sandwich) standard errors, HC0 by
// default. Throws on rank-deficient designs, naming the collinear columns.
FitResult fit_ols_robust(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                         const std::vector<std::string>& names,
                         RobustKind robust = RobustKind::kHC0);

// Effect-coded reference level: beta_ref = -sum(others), OR = exp(beta_ref).
std::pair<double, double> derive_reference_effect(const std::vector<double>& other_estimates);

// Categorical encodings over string levels. Dummy: L-1 indicators, reference
// row all zero. Effect: L-1 columns, reference row all -1. Unseen level in
// `values` throws.
enum class EncodingScheme { kDummy, kEffect };

struct EncodedFactor {
  std::vector<std::string> column_names;  // prefixed level names, reference omitted
  Eigen::MatrixXd columns;
};

EncodedFactor encode_categorical(const std::string& factor_name,
                                 const std::vector<std::string>& values,
                                 const std::vector<std::string>& levels,
                                 const std::string& reference, EncodingScheme scheme);

// Text table in the layout of a regression summary (estimate, SE, statistic,
// p, significance stars, odds ratio for logits) plus fit statistics.
std::string fit_result_table(const FitResult& r,
                             const std::vector<std::pair<std::string, double>>& extra_rows = {});
std::string fit_result_csv(const FitResult& r);

// Distribution helpers shared with tests.
double normal_cdf(double z);
double student_t_cdf(double t, double dof);

}  // namespace mxai
