#include "core/regression.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <boost/math/distributions/students_t.hpp>

#include "core/errors.hpp"
#include "core/textio.hpp"

namespace mxai {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double log_likelihood_at(const Eigen::MatrixXd& x, const std::vector<bool>& y,
                         const Eigen::VectorXd& beta) {
  double ll = 0.0;
  const Eigen::VectorXd eta = x * beta;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(sigma(eta)) and log(1 - sigma(eta)) in a stable form
    const double e = eta(i);
    const double log_denom = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += (y[static_cast<std::size_t>(i)] ? e : 0.0) - log_denom;
  }
  return ll;
}

std::string stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double student_t_cdf(double t, double dof) {
  boost::math::students_t_distribution<double> dist(dof);
  return boost::math::cdf(dist, t);
}

FitResult fit_logit(const Eigen::MatrixXd& x, const std::vector<bool>& chosen,
                    const std::vector<std::string>& names, const LogitOptions& options) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  if (static_cast<std::size_t>(n) != chosen.size()) {
    throw usage_error("fit_logit: design rows do not match outcomes");
  }
  if (n <= k) throw data_error("fit_logit: need more observations than coefficients");
  if (names.size() != static_cast<std::size_t>(k)) {
    throw usage_error("fit_logit: column name count mismatch");
  }

  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = chosen[static_cast<std::size_t>(i)] ? 1.0 : 0.0;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  double ll = log_likelihood_at(x, chosen, beta);
  Eigen::MatrixXd info(k, k);
  bool converged = false;

  for (int iter = 0; iter < options.max_iterations && !converged; ++iter) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = sigmoid(eta(i));
      w(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::VectorXd grad = x.transpose() * (yv - p);
    info = x.transpose() * w.asDiagonal() * x;

    if (grad.lpNorm<Eigen::Infinity>() < options.gradient_tol) {
      converged = true;
      break;
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) {
      throw numeric_error("fit_logit: singular information matrix");
    }
    Eigen::VectorXd step = ldlt.solve(grad);
    if (!step.allFinite()) throw numeric_error("fit_logit: singular information matrix");

    // step halving keeps the likelihood non-decreasing
    double new_ll = 0.0;
    double scale = 1.0;
    Eigen::VectorXd candidate;
    for (int h = 0; h < 30; ++h) {
      candidate = beta + scale * step;
      new_ll = log_likelihood_at(x, chosen, candidate);
      if (new_ll >= ll - 1e-12) break;
      scale *= 0.5;
    }
    const double rel_change = std::abs(new_ll - ll) / (std::abs(ll) + 1.0);
    beta = candidate;
    ll = new_ll;
    if (rel_change < options.ll_rel_tol) converged = true;

    for (Eigen::Index j = 0; j < k; ++j) {
      if (std::abs(beta(j)) > options.separation_bound) converged = false;
    }
    if (!converged) continue;
    break;
  }

  // Separation: the MLE does not exist when every observation is fitted to
  // its label essentially exactly, or a coefficient runs off to infinity.
  // Name the dominant column in either case.
  {
    bool all_saturated = true;
    const Eigen::VectorXd eta = x * beta;
    for (Eigen::Index i = 0; i < n && all_saturated; ++i) {
      const double p = sigmoid(eta(i));
      const bool label = chosen[static_cast<std::size_t>(i)];
      if (label ? p <= 1.0 - 1e-6 : p >= 1e-6) all_saturated = false;
    }
    double max_abs = 0.0;
    Eigen::Index max_j = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (std::abs(beta(j)) > max_abs) {
        max_abs = std::abs(beta(j));
        max_j = j;
      }
    }
    if (all_saturated || max_abs > options.separation_bound) {
      throw numeric_error("fit_logit: separation detected on column '" +
                          names[static_cast<std::size_t>(max_j)] + "' (estimate diverges)");
    }
  }

  if (!converged) throw numeric_error("fit_logit: no convergence in 100 iterations");

  // refresh the information matrix at the optimum
  {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(eta(i));
      w(i) = p * (1.0 - p);
    }
    info = x.transpose() * w.asDiagonal() * x;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success) {
    throw numeric_error("fit_logit: singular information matrix at optimum");
  }
  const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
  if (!cov.allFinite()) throw numeric_error("fit_logit: singular information matrix at optimum");

  FitResult r;
  r.is_logit = true;
  r.names = names;
  r.beta = beta;
  r.n = static_cast<std::size_t>(n);
  r.k = static_cast<int>(k);
  r.se.resize(k);
  r.stat.resize(k);
  r.p_value.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    r.se(j) = std::sqrt(cov(j, j));
    r.stat(j) = beta(j) / r.se(j);
    r.p_value(j) = 2.0 * (1.0 - normal_cdf(std::abs(r.stat(j))));
    r.odds_ratio.push_back(std::exp(beta(j)));
  }
  r.log_likelihood = ll;
  r.aic = 2.0 * static_cast<double>(k) - 2.0 * ll;
  r.bic = static_cast<double>(k) * std::log(static_cast<double>(n)) - 2.0 * ll;
  r.deviance = -2.0 * ll;
  return r;
}

FitResult fit_ols_robust(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const std::vector<std::string>& names, RobustKind robust) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  if (n != y.size()) throw usage_error("fit_ols_robust: design rows do not match outcomes");
  if (n <= k) throw data_error("fit_ols_robust: need more observations than coefficients");
  if (names.size() != static_cast<std::size_t>(k)) {
    throw usage_error("fit_ols_robust: column name count mismatch");
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    // name the columns pivoted past the numerical rank
    const auto perm = qr.colsPermutation().indices();
    std::string collinear;
    for (Eigen::Index j = qr.rank(); j < k; ++j) {
      if (!collinear.empty()) collinear += ", ";
      collinear += names[static_cast<std::size_t>(perm(j))];
    }
    throw data_error("fit_ols_robust: design is rank deficient (collinear: " + collinear + ")");
  }

  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - x * beta;

  const Eigen::MatrixXd xtx_inv =
      (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(k, k));

  Eigen::VectorXd omega(n);  // squared residual weights of the meat matrix
  switch (robust) {
    case RobustKind::kHC0:
      for (Eigen::Index i = 0; i < n; ++i) omega(i) = resid(i) * resid(i);
      break;
    case RobustKind::kHC1: {
      const double c = static_cast<double>(n) / static_cast<double>(n - k);
      for (Eigen::Index i = 0; i < n; ++i) omega(i) = c * resid(i) * resid(i);
      break;
    }
    case RobustKind::kHC3:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double h = x.row(i) * xtx_inv * x.row(i).transpose();
        const double d = 1.0 - h;
        omega(i) = resid(i) * resid(i) / (d * d);
      }
      break;
  }
  const Eigen::MatrixXd meat = x.transpose() * omega.asDiagonal() * x;
  const Eigen::MatrixXd cov = xtx_inv * meat * xtx_inv;

  const double y_mean = y.mean();
  double ss_tot = 0.0, ss_res = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    ss_tot += (y(i) - y_mean) * (y(i) - y_mean);
    ss_res += resid(i) * resid(i);
  }

  FitResult r;
  r.names = names;
  r.beta = beta;
  r.n = static_cast<std::size_t>(n);
  r.k = static_cast<int>(k);
  r.se.resize(k);
  r.stat.resize(k);
  r.p_value.resize(k);
  const double dof = static_cast<double>(n - k);
  for (Eigen::Index j = 0; j < k; ++j) {
    r.se(j) = std::sqrt(cov(j, j));
    r.stat(j) = r.se(j) > 0 ? beta(j) / r.se(j) : 0.0;
    r.p_value(j) = r.se(j) > 0 ? 2.0 * (1.0 - student_t_cdf(std::abs(r.stat(j)), dof)) : 0.0;
  }
  r.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
  r.adj_r2 = ss_tot > 0
                 ? 1.0 - (1.0 - r.r2) * static_cast<double>(n - 1) / static_cast<double>(n - k)
                 : 0.0;
  return r;
}

std::pair<double, double> derive_reference_effect(const std::vector<double>& other_estimates) {
  double sum = 0.0;
  for (double e : other_estimates) sum += e;
  return {-sum, std::exp(-sum)};
}

EncodedFactor encode_categorical(const std::string& factor_name,
                                 const std::vector<std::string>& values,
                                 const std::vector<std::string>& levels,
                                 const std::string& reference, EncodingScheme scheme) {
  const auto ref_it = std::find(levels.begin(), levels.end(), reference);
  if (ref_it == levels.end()) {
    throw usage_error("encode_categorical: reference level '" + reference + "' not in level set");
  }

  std::vector<std::string> non_ref;
  for (const auto& l : levels) {
    if (l != reference) non_ref.push_back(l);
  }

  EncodedFactor out;
  for (const auto& l : non_ref) out.column_names.push_back(factor_name + l);
  out.columns = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(values.size()),
                                      static_cast<Eigen::Index>(non_ref.size()));

  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& v = values[i];
    if (std::find(levels.begin(), levels.end(), v) == levels.end()) {
      throw data_error("encode_categorical: unseen level '" + v + "' for factor " + factor_name);
    }
    if (v == reference) {
      if (scheme == EncodingScheme::kEffect) {
        for (Eigen::Index j = 0; j < out.columns.cols(); ++j) {
          out.columns(static_cast<Eigen::Index>(i), j) = -1.0;
        }
      }
      continue;
    }
    const auto j = std::find(non_ref.begin(), non_ref.end(), v) - non_ref.begin();
    out.columns(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  }
  return out;
}

std::string fit_result_table(const FitResult& r,
                             const std::vector<std::pair<std::string, double>>& extra_rows) {
  std::string out;
  char buf[160];
  std::size_t name_w = 12;
  for (const auto& n : r.names) name_w = std::max(name_w, n.size());
  for (const auto& [n, v] : extra_rows) name_w = std::max(name_w, n.size());

  std::snprintf(buf, sizeof(buf), "%-*s %10s %12s %9s %9s %s\n", static_cast<int>(name_w), "",
                "Estimate", "Std. Error", r.is_logit ? "z-value" : "t-value", "p-value",
                r.is_logit ? "Odds ratio" : "");
  out += buf;
  for (std::size_t j = 0; j < r.names.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    char se_buf[32];
    std::snprintf(se_buf, sizeof(se_buf), "(%.2f)", r.se(jj));
    if (r.is_logit) {
      std::snprintf(buf, sizeof(buf), "%-*s %10.2f %12s %9.3f %9.3f %10.2f %s\n",
                    static_cast<int>(name_w), r.names[j].c_str(), r.beta(jj), se_buf, r.stat(jj),
                    r.p_value(jj), r.odds_ratio[j], stars(r.p_value(jj)).c_str());
    } else {
      std::snprintf(buf, sizeof(buf), "%-*s %10.2f %12s %9.3f %9.3f %s\n",
                    static_cast<int>(name_w), r.names[j].c_str(), r.beta(jj), se_buf, r.stat(jj),
                    r.p_value(jj), stars(r.p_value(jj)).c_str());
    }
    out += buf;
  }
  for (const auto& [n, v] : extra_rows) {
    std::snprintf(buf, sizeof(buf), "%-*s %10.2f\n", static_cast<int>(name_w), n.c_str(), v);
    out += buf;
  }
  out += "---\n";
  if (r.is_logit) {
    std::snprintf(buf, sizeof(buf),
                  "AIC %.2f   BIC %.2f   Log Likelihood %.2f   Deviance %.2f   Num. obs. %zu\n",
                  r.aic, r.bic, r.log_likelihood, r.deviance, r.n);
  } else {
    std::snprintf(buf, sizeof(buf), "R^2 %.3f   Adj. R^2 %.3f   Num. obs. %zu\n", r.r2, r.adj_r2,
                  r.n);
  }
  out += buf;
  out += "Signif.: *** p<0.001, ** p<0.01, * p<0.05\n";
  return out;
}

std::string fit_result_csv(const FitResult& r) {
  std::string out = r.is_logit ? "name,estimate,std_error,z_value,p_value,odds_ratio\n"
                               : "name,estimate,std_error,t_value,p_value\n";
  for (std::size_t j = 0; j < r.names.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    out += r.names[j];
    out += ',';
    out += format_double(r.beta(jj));
    out += ',';
    out += format_double(r.se(jj));
    out += ',';
    out += format_double(r.stat(jj));
    out += ',';
    out += format_double(r.p_value(jj));
    if (r.is_logit) {
      out += ',';
      out += format_double(r.odds_ratio[j]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace mxai
