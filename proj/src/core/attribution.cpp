#include "core/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "core/textio.hpp"

namespace mxai {

namespace {

constexpr int kExactEnumLimit = 12;

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - i + 1) / static_cast<double>(i);
  return r;
}

// Shapley kernel weight for a coalition of size s out of m players
// (empty/full coalitions are handled analytically, never weighted here).
double shapley_kernel_weight(int m, int s) {
  return static_cast<double>(m - 1) / (binomial(m, s) * s * (m - s));
}

struct CoalitionSample {
  std::vector<bool> mask;
  double weight = 0.0;
};

// Enumerates or samples coalitions with their regression weights.
// Sizes are filled from the outside in (1, m-1, 2, m-2, ...); a size whose
// full enumeration fits the remaining budget contributes every subset with
// its exact kernel weight, the first size that does not fit is sampled and
// the size's total weight is spread over the sampled subsets.
std::vector<CoalitionSample> draw_coalitions(int m, int budget, Rng& rng) {
  std::vector<CoalitionSample> out;
  const double full_count = std::pow(2.0, m) - 2.0;
  const bool enumerate_all = m <= kExactEnumLimit || static_cast<double>(budget) >= full_count;

  if (enumerate_all) {
    const uint64_t limit = (1ULL << m) - 1;
    out.reserve(static_cast<std::size_t>(limit - 1));
    for (uint64_t bits = 1; bits < limit; ++bits) {
      CoalitionSample c;
      c.mask.resize(static_cast<std::size_t>(m));
      int s = 0;
      for (int j = 0; j < m; ++j) {
        const bool on = (bits >> j) & 1ULL;
        c.mask[static_cast<std::size_t>(j)] = on;
        s += on ? 1 : 0;
      }
      c.weight = shapley_kernel_weight(m, s);
      out.push_back(std::move(c));
    }
    return out;
  }

  // size order: 1, m-1, 2, m-2, ...
  std::vector<int> size_order;
  for (int lo = 1, hi = m - 1; lo <= hi; ++lo, --hi) {
    size_order.push_back(lo);
    if (hi != lo) size_order.push_back(hi);
  }

  int remaining = budget;
  for (int s : size_order) {
    if (remaining <= 0) break;
    const double count = binomial(m, s);
    const double size_total_weight = count * shapley_kernel_weight(m, s);
    const bool fits = count <= static_cast<double>(remaining);
    const int n_draw = fits ? static_cast<int>(count) : remaining;

    if (fits) {
      // full enumeration of this size via combinations
      std::vector<int> comb(static_cast<std::size_t>(s));
      std::iota(comb.begin(), comb.end(), 0);
      while (true) {
        CoalitionSample c;
        c.mask.assign(static_cast<std::size_t>(m), false);
        for (int j : comb) c.mask[static_cast<std::size_t>(j)] = true;
        c.weight = shapley_kernel_weight(m, s);
        out.push_back(std::move(c));
        int i = s - 1;
        while (i >= 0 && comb[static_cast<std::size_t>(i)] == m - s + i) --i;
        if (i < 0) break;
        ++comb[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < s; ++j) {
          comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
        }
      }
    } else {
      const double per_sample_weight = size_total_weight / n_draw;
      for (int d = 0; d < n_draw; ++d) {
        CoalitionSample c;
        c.mask.assign(static_cast<std::size_t>(m), false);
        // partial Fisher-Yates draw of s distinct players
        std::vector<int> pool(static_cast<std::size_t>(m));
        std::iota(pool.begin(), pool.end(), 0);
        for (int j = 0; j < s; ++j) {
          const std::size_t pick =
              static_cast<std::size_t>(j) + rng.uniform_below(static_cast<uint64_t>(m - j));
          std::swap(pool[static_cast<std::size_t>(j)], pool[pick]);
          c.mask[static_cast<std::size_t>(pool[static_cast<std::size_t>(j)])] = true;
        }
        c.weight = per_sample_weight;
        out.push_back(std::move(c));
      }
    }
    remaining -= n_draw;
  }
  return out;
}

// Constrained Shapley-kernel regression. Eliminates the last coefficient via
// the efficiency constraint sum(phi) = delta and solves the reduced weighted
// least squares.
std::vector<double> solve_kernel_weights(const std::vector<CoalitionSample>& coalitions,
                                         const std::vector<double>& values, double base,
                                         double delta, int m) {
  const int q = m - 1;
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(q, q);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd row(q);
  for (std::size_t i = 0; i < coalitions.size(); ++i) {
    const auto& mask = coalitions[i].mask;
    const double zl = mask[static_cast<std::size_t>(m - 1)] ? 1.0 : 0.0;
    for (int j = 0; j < q; ++j) {
      row(j) = (mask[static_cast<std::size_t>(j)] ? 1.0 : 0.0) - zl;
    }
    const double target = values[i] - base - zl * delta;
    const double w = coalitions[i].weight;
    xtx.selfadjointView<Eigen::Lower>().rankUpdate(row, w);
    xty += w * target * row;
  }
  xtx = xtx.selfadjointView<Eigen::Lower>();

  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  Eigen::VectorXd phi_head;
  if (ldlt.info() == Eigen::Success) {
    phi_head = ldlt.solve(xty);
  }
  if (ldlt.info() != Eigen::Success || !phi_head.allFinite()) {
    // singular system: fall back to a minimum-norm solution
    phi_head = xtx.completeOrthogonalDecomposition().solve(xty);
    if (!phi_head.allFinite()) throw numeric_error("kernel shap: weighted design is degenerate");
  }

  std::vector<double> phi(static_cast<std::size_t>(m));
  double head_sum = 0.0;
  for (int j = 0; j < q; ++j) {
    phi[static_cast<std::size_t>(j)] = phi_head(j);
    head_sum += phi_head(j);
  }
  phi[static_cast<std::size_t>(m - 1)] = delta - head_sum;
  return phi;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw numeric_error(std::string(what) + " returned a non-finite value");
}

}  // namespace

SegmentScheme SegmentScheme::hourly_week() {
  SegmentScheme s;
  s.n_segments = 168;
  s.granularity = Granularity::kHour;
  s.per_day = true;
  for (int i = 0; i < kSlotsPerWeek; ++i) s.slot_to_segment[static_cast<std::size_t>(i)] = i / 2;
  return s;
}

SegmentScheme SegmentScheme::per_slot() {
  SegmentScheme s;
  s.n_segments = kSlotsPerWeek;
  s.granularity = Granularity::kSlot;
  s.per_day = true;
  for (int i = 0; i < kSlotsPerWeek; ++i) s.slot_to_segment[static_cast<std::size_t>(i)] = i;
  return s;
}

SegmentScheme SegmentScheme::time_of_day_24() { return time_of_day(24); }

SegmentScheme SegmentScheme::time_of_day(int n) {
  if (n < 1 || kSlotsPerDay % n != 0) {
    throw usage_error("time_of_day scheme requires n dividing 48");
  }
  SegmentScheme s;
  s.n_segments = n;
  s.granularity = n == kSlotsPerDay ? Granularity::kSlot : Granularity::kHour;
  s.per_day = false;
  const int span = kSlotsPerDay / n;
  for (int i = 0; i < kSlotsPerWeek; ++i) {
    s.slot_to_segment[static_cast<std::size_t>(i)] = (i % kSlotsPerDay) / span;
  }
  return s;
}

std::vector<int> SegmentScheme::segment_slots(int segment) const {
  std::vector<int> out;
  for (int i = 0; i < kSlotsPerWeek; ++i) {
    if (slot_to_segment[static_cast<std::size_t>(i)] == segment) out.push_back(i);
  }
  return out;
}

int SegmentScheme::slots_per_segment(int segment) const {
  int n = 0;
  for (int i = 0; i < kSlotsPerWeek; ++i) {
    n += slot_to_segment[static_cast<std::size_t>(i)] == segment ? 1 : 0;
  }
  return n;
}

int SegmentScheme::segment_day(int segment) const {
  if (!per_day) return -1;
  for (int i = 0; i < kSlotsPerWeek; ++i) {
    if (slot_to_segment[static_cast<std::size_t>(i)] == segment) return i / kSlotsPerDay;
  }
  return -1;
}

int SegmentScheme::segment_tod_start(int segment) const {
  for (int i = 0; i < kSlotsPerWeek; ++i) {
    if (slot_to_segment[static_cast<std::size_t>(i)] == segment) return i % kSlotsPerDay;
  }
  return -1;
}

const char* to_string(AttributionMethod m) {
  switch (m) {
    case AttributionMethod::kKernelShap: return "kernel-shap";
    case AttributionMethod::kLime: return "lime";
    case AttributionMethod::kExact: return "exact";
  }
  return "?";
}

WeekSlice mask_week(const WeekSlice& week, const WeekSlice& background,
                    const SegmentScheme& scheme, const std::vector<bool>& coalition) {
  WeekSlice out = week;
  for (int i = 0; i < kSlotsPerWeek; ++i) {
    const int seg = scheme.slot_to_segment[static_cast<std::size_t>(i)];
    if (!coalition[static_cast<std::size_t>(seg)]) {
      out.values[static_cast<std::size_t>(i)] = background.values[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

WeekSlice household_mean_background(const WeekSlice& week) {
  WeekSlice bg = week;
  const auto tod = time_of_day_mean(week);
  for (int i = 0; i < kSlotsPerWeek; ++i) {
    bg.values[static_cast<std::size_t>(i)] = tod[static_cast<std::size_t>(i % kSlotsPerDay)];
  }
  return bg;
}

WeekSlice corpus_mean_background(const std::vector<WeekSlice>& weeks) {
  if (weeks.empty()) throw usage_error("corpus_mean_background: empty corpus");
  WeekSlice bg = weeks.front();
  bg.meter_id = "corpus-mean";
  std::array<double, kSlotsPerDay> tod{};
  for (const auto& w : weeks) {
    const auto m = time_of_day_mean(w);
    for (int s = 0; s < kSlotsPerDay; ++s) tod[static_cast<std::size_t>(s)] += m[static_cast<std::size_t>(s)];
  }
  for (auto& v : tod) v /= static_cast<double>(weeks.size());
  for (int i = 0; i < kSlotsPerWeek; ++i) {
    bg.values[static_cast<std::size_t>(i)] = tod[static_cast<std::size_t>(i % kSlotsPerDay)];
  }
  return bg;
}

Attribution explain_kernel_shap(const ModelFn& model_fn, const WeekSlice& week,
                                const SegmentScheme& scheme, const WeekSlice& background,
                                const KernelShapConfig& config) {
  const int m = scheme.n_segments;
  if (m < 1) throw usage_error("kernel shap: scheme has no segments");
  if (m > kExactEnumLimit && config.n_coalitions < m + 2) {
    throw usage_error("kernel shap: n_coalitions must be at least n_segments + 2");
  }

  Attribution a;
  a.scheme = scheme;
  a.method = AttributionMethod::kKernelShap;
  a.seed = config.seed;
  a.prediction = model_fn(week);
  a.base_value = model_fn(background);
  check_finite(a.prediction, "model_fn(instance)");
  check_finite(a.base_value, "model_fn(background)");

  if (m == 1) {
    a.phi = {a.prediction - a.base_value};
    return a;
  }

  Rng rng = Rng::stream(config.seed, /*a=*/11);
  const std::vector<CoalitionSample> coalitions = draw_coalitions(m, config.n_coalitions, rng);

  std::vector<double> values(coalitions.size());
  parallel_for(coalitions.size(), config.threads, [&](std::size_t i) {
    values[i] = model_fn(mask_week(week, background, scheme, coalitions[i].mask));
  });
  for (double v : values) check_finite(v, "model_fn(masked instance)");

  // Degenerate game: nothing to attribute.
  double vmin = a.prediction, vmax = a.prediction;
  for (double v : values) {
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  vmin = std::min(vmin, a.base_value);
  vmax = std::max(vmax, a.base_value);
  if (vmax - vmin < 1e-12) {
    a.phi.assign(static_cast<std::size_t>(m), 0.0);
    return a;
  }

  a.phi = solve_kernel_weights(coalitions, values, a.base_value,
                               a.prediction - a.base_value, m);
  return a;
}

Attribution explain_lime(const ModelFn& model_fn, const WeekSlice& week,
                         const SegmentScheme& scheme, const WeekSlice& background,
                         const LimeConfig& config) {
  const int m = scheme.n_segments;
  if (m < 1) throw usage_error("lime: scheme has no segments");
  const int n_perturbations = config.n_perturbations > 0 ? config.n_perturbations : 4 * m;
  if (n_perturbations < 2 * m) {
    throw usage_error("lime: n_perturbations must be at least 2 * n_segments");
  }
  const double width = config.kernel_width > 0.0 ? config.kernel_width
                                                 : 0.25 * std::sqrt(static_cast<double>(m));

  Attribution a;
  a.scheme = scheme;
  a.method = AttributionMethod::kLime;
  a.seed = config.seed;
  a.prediction = model_fn(week);
  a.base_value = model_fn(background);
  check_finite(a.prediction, "model_fn(instance)");
  check_finite(a.base_value, "model_fn(background)");

  // Sample 0 is the unperturbed instance; the rest flip segments i.i.d.
  Rng rng = Rng::stream(config.seed, /*a=*/12);
  std::vector<std::vector<bool>> masks;
  masks.reserve(static_cast<std::size_t>(n_perturbations));
  masks.emplace_back(static_cast<std::size_t>(m), true);
  for (int i = 1; i < n_perturbations; ++i) {
    std::vector<bool> mask(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) mask[static_cast<std::size_t>(j)] = rng.bernoulli(0.5);
    masks.push_back(std::move(mask));
  }

  std::vector<double> values(masks.size());
  parallel_for(masks.size(), config.threads, [&](std::size_t i) {
    values[i] = model_fn(mask_week(week, background, scheme, masks[i]));
  });
  for (double v : values) check_finite(v, "model_fn(masked instance)");

  // Proximity over Hamming distance to the all-on mask.
  const double sigma2 = width * width;
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(m + 1, m + 1);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(m + 1);
  Eigen::VectorXd row(m + 1);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    int hamming = 0;
    row(0) = 1.0;
    for (int j = 0; j < m; ++j) {
      const bool on = masks[i][static_cast<std::size_t>(j)];
      row(j + 1) = on ? 1.0 : 0.0;
      hamming += on ? 0 : 1;
    }
    const double w = std::exp(-static_cast<double>(hamming) / sigma2);
    xtx.selfadjointView<Eigen::Lower>().rankUpdate(row, w);
    xty += w * values[i] * row;
  }
  xtx = xtx.selfadjointView<Eigen::Lower>();
  for (int j = 1; j <= m; ++j) xtx(j, j) += config.ridge;  // intercept unpenalized

  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  Eigen::VectorXd beta;
  if (ldlt.info() == Eigen::Success) beta = ldlt.solve(xty);
  if (ldlt.info() != Eigen::Success || !beta.allFinite()) {
    const double bump = std::max(1.0, xtx.trace()) * 1e-3;
    for (int j = 1; j <= m; ++j) xtx(j, j) += bump;
    beta = Eigen::LDLT<Eigen::MatrixXd>(xtx).solve(xty);
    if (!beta.allFinite()) throw numeric_error("lime: surrogate system is unsolvable");
    a.ridge_fallback = true;
  }

  a.phi.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) a.phi[static_cast<std::size_t>(j)] = beta(j + 1);
  return a;
}

std::vector<double> exact_shapley(const std::function<double(uint32_t)>& value_fn, int n_players) {
  if (n_players < 1 || n_players > kExactEnumLimit) {
    throw usage_error("exact_shapley supports 1.." + std::to_string(kExactEnumLimit) + " players");
  }
  const uint32_t n_subsets = 1u << n_players;
  std::vector<double> v(n_subsets);
  for (uint32_t s = 0; s < n_subsets; ++s) {
    v[s] = value_fn(s);
    check_finite(v[s], "value_fn");
  }

  std::vector<double> fact(static_cast<std::size_t>(n_players) + 1, 1.0);
  for (std::size_t i = 1; i < fact.size(); ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

  std::vector<double> phi(static_cast<std::size_t>(n_players), 0.0);
  for (uint32_t s = 0; s < n_subsets; ++s) {
    const int size = __builtin_popcount(s);
    for (int i = 0; i < n_players; ++i) {
      if (s & (1u << i)) continue;
      const double w = fact[static_cast<std::size_t>(size)] *
                       fact[static_cast<std::size_t>(n_players - size - 1)] /
                       fact[static_cast<std::size_t>(n_players)];
      phi[static_cast<std::size_t>(i)] += w * (v[s | (1u << i)] - v[s]);
    }
  }
  return phi;
}

std::string attribution_to_csv(const Attribution& a) {
  std::string out = "segment_index,start,end,phi\n";
  for (int j = 0; j < a.scheme.n_segments; ++j) {
    const auto slots = a.scheme.segment_slots(j);
    int start = slots.empty() ? 0 : slots.front();
    int end = slots.empty() ? 0 : slots.back() + 1;
    if (!a.scheme.per_day) {
      start = a.scheme.segment_tod_start(j);
      end = start + (slots.empty() ? 0 : static_cast<int>(slots.size()) / kDaysPerWeek);
    }
    out += std::to_string(j);
    out += ',';
    out += std::to_string(start);
    out += ',';
    out += std::to_string(end);
    out += ',';
    out += format_double(a.phi[static_cast<std::size_t>(j)]);
    out += '\n';
  }
  return out;
}

std::string attribution_metadata_json(const Attribution& a) {
  nlohmann::json j;
  j["method"] = to_string(a.method);
  j["seed"] = a.seed;
  j["base_value"] = a.base_value;
  j["prediction"] = a.prediction;
  j["n_segments"] = a.scheme.n_segments;
  j["per_day"] = a.scheme.per_day;
  if (a.method == AttributionMethod::kLime) j["ridge_fallback"] = a.ridge_fallback;
  return j.dump(2);
}

}  // namespace mxai
