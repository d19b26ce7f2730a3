#include "coha/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coha/error.hpp"

namespace coha::stats {

namespace {

constexpr Measure kDefaultMeasures[] = {Measure::incorrect_of_all, Measure::useful_of_correct};

}  // namespace

MeanSd mean_sd(std::span<const double> values) {
  MeanSd r;
  if (values.empty()) {
    r.degenerate = true;
    return r;
  }
  const double n = static_cast<double>(values.size());
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) {
    r.degenerate = true;
    return r;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.sd = std::sqrt(ss / (n - 1.0));
  return r;
}

std::vector<GroupSummary> group_summary(std::span<const ResponseWords> responses,
                                        const Grouping& grouping) {
  std::vector<std::vector<double>> per_group(grouping.labels.size());
  std::vector<double> all;
  for (const auto& r : responses) {
    const std::string& label = grouping.label_for(r.query_id);
    auto it = std::find(grouping.labels.begin(), grouping.labels.end(), label);
    if (it == grouping.labels.end()) {
      throw Error(ErrorCode::not_found, "group '" + label + "' is not a declared label", {label});
    }
    per_group[static_cast<std::size_t>(it - grouping.labels.begin())].push_back(
        static_cast<double>(r.words));
    all.push_back(static_cast<double>(r.words));
  }

  auto row = [](const std::string& label, const std::vector<double>& words) {
    GroupSummary s;
    s.label = label;
    s.n_queries = words.size();
    for (double w : words) s.total_words += static_cast<std::size_t>(w);
    const MeanSd m = mean_sd(words);
    s.mean_words = m.mean;
    s.sd_words = m.sd;
    s.degenerate_sd = m.degenerate;
    return s;
  };

  std::vector<GroupSummary> out;
  for (std::size_t i = 0; i < grouping.labels.size(); ++i) {
    if (per_group[i].empty()) {
      throw Error(ErrorCode::invalid_argument, "group '" + grouping.labels[i] + "' has no responses",
                  {grouping.labels[i]});
    }
    out.push_back(row(grouping.labels[i], per_group[i]));
  }
  out.push_back(row("Overall", all));
  return out;
}

Proportion wald_proportion(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) throw Error(ErrorCode::invalid_argument, "proportion with zero denominator");
  if (successes > trials) throw Error(ErrorCode::invalid_argument, "successes exceed trials");
  Proportion p;
  p.successes = successes;
  p.trials = trials;
  p.value = static_cast<double>(successes) / static_cast<double>(trials);
  const double half = z * std::sqrt(p.value * (1.0 - p.value) / static_cast<double>(trials));
  p.ci_low = std::clamp(p.value - half, 0.0, 1.0);
  p.ci_high = std::clamp(p.value + half, 0.0, 1.0);
  return p;
}

GroupProportions proportions(const std::string& label, const CategoryCounts& counts) {
  const std::size_t coded = counts.coded();
  const std::size_t correct = counts.correct_useful + counts.correct_not_useful;
  if (coded == 0) {
    throw Error(ErrorCode::invalid_argument, "group '" + label + "' has no coded words", {label});
  }
  GroupProportions g;
  g.label = label;
  g.incorrect = wald_proportion(counts.incorrect, coded);
  // No correct words: the useful share is undefined and stays at trials = 0.
  if (correct > 0) g.useful_of_correct = wald_proportion(counts.correct_useful, correct);
  const double n = static_cast<double>(coded);
  g.share_useful = static_cast<double>(counts.correct_useful) / n;
  g.share_not_useful = static_cast<double>(counts.correct_not_useful) / n;
  g.share_incorrect = static_cast<double>(counts.incorrect) / n;
  return g;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::invalid_argument, "quantile needs p in (0, 1)");
  // Bisection to bracket, then Newton polish on the CDF.
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200 && hi - lo > 1e-10; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (pdf <= 0.0) break;
    x -= (normal_cdf(x) - p) / pdf;
  }
  return x;
}

ZTest two_proportion_z(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2) {
  if (n1 == 0 || n2 == 0 || x1 > n1 || x2 > n2) {
    throw Error(ErrorCode::invalid_argument, "two-proportion test needs 0 <= x <= n and n >= 1");
  }
  const double p1 = static_cast<double>(x1) / static_cast<double>(n1);
  const double p2 = static_cast<double>(x2) / static_cast<double>(n2);
  const double pooled = static_cast<double>(x1 + x2) / static_cast<double>(n1 + n2);
  const double se = std::sqrt(pooled * (1.0 - pooled) *
                              (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
  ZTest t;
  // Both samples all-success or all-failure: no variance, no evidence.
  if (se == 0.0) return t;
  t.z = (p2 - p1) / se;
  t.p_value = std::erfc(std::fabs(t.z) / std::sqrt(2.0));
  return t;
}

double bonferroni_alpha(double alpha, std::size_t m) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::invalid_argument, "alpha must be in (0, 1)");
  if (m == 0) throw Error(ErrorCode::invalid_argument, "Bonferroni m must be >= 1");
  return alpha / static_cast<double>(m);
}

std::string_view to_string(Measure m) {
  return m == Measure::incorrect_of_all ? "incorrect-of-all" : "useful-of-correct";
}

Measure measure_from_string(std::string_view s) {
  if (s == "incorrect-of-all") return Measure::incorrect_of_all;
  if (s == "useful-of-correct") return Measure::useful_of_correct;
  throw Error(ErrorCode::invalid_argument, "unknown measure '" + std::string(s) + "'");
}

std::string_view to_string(Outcome o) { return o == Outcome::reject ? "reject" : "do-not-reject"; }

std::vector<std::pair<std::size_t, std::size_t>> battery_pairs(std::size_t groups) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t gap = 1; gap < groups; ++gap) {
    for (std::size_t i = 0; i + gap < groups; ++i) out.emplace_back(i, i + gap);
  }
  return out;
}

std::vector<ProportionTest> run_test_battery(std::span<const LabeledCounts> groups, double alpha,
                                             std::span<const Measure> measures) {
  if (measures.empty()) measures = kDefaultMeasures;
  if (groups.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "test battery needs at least two groups");
  }
  const auto pairs = battery_pairs(groups.size());
  const std::size_t m = pairs.size() * measures.size();
  const double corrected = bonferroni_alpha(alpha, m);
  const double z_critical = normal_quantile(1.0 - corrected / 2.0);

  auto sample = [](Measure measure, const CategoryCounts& c) -> std::pair<std::size_t, std::size_t> {
    if (measure == Measure::incorrect_of_all) return {c.incorrect, c.coded()};
    return {c.correct_useful, c.correct_useful + c.correct_not_useful};
  };

  std::vector<ProportionTest> out;
  for (Measure measure : measures) {
    for (auto [ix, iy] : pairs) {
      const auto [x1, n1] = sample(measure, groups[ix].counts);
      const auto [x2, n2] = sample(measure, groups[iy].counts);
      if (n1 == 0 || n2 == 0) {
        throw Error(ErrorCode::invalid_argument,
                    "group '" + groups[n1 == 0 ? ix : iy].label + "' has a zero denominator for " +
                        std::string(to_string(measure)));
      }
      const ZTest zt = two_proportion_z(x1, n1, x2, n2);
      ProportionTest t;
      t.measure = measure;
      t.group_x = groups[ix].label;
      t.group_y = groups[iy].label;
      t.p_hat_x = static_cast<double>(x1) / static_cast<double>(n1);
      t.p_hat_y = static_cast<double>(x2) / static_cast<double>(n2);
      t.z = zt.z;
      t.p_value = zt.p_value;
      t.alpha = alpha;
      t.alpha_corrected = corrected;
      t.z_critical = z_critical;
      t.outcome = zt.p_value < corrected ? Outcome::reject : Outcome::do_not_reject;
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<ProportionTest> run_test_battery(const std::map<std::string, CategoryCounts>& counts,
                                             const std::vector<std::string>& order, double alpha,
                                             std::span<const Measure> measures) {
  std::vector<LabeledCounts> groups;
  std::vector<std::string> missing;
  for (const auto& label : order) {
    auto it = counts.find(label);
    if (it == counts.end()) {
      missing.push_back(label);
    } else {
      groups.push_back({label, it->second});
    }
  }
  if (!missing.empty()) {
    std::string message = "test battery is missing group(s):";
    for (const auto& m : missing) message += " " + m;
    throw Error(ErrorCode::not_found, message, std::move(missing));
  }
  return run_test_battery(groups, alpha, measures);
}

}  // namespace coha::stats
