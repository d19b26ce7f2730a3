#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coha/annotation.hpp"

namespace coha::stats {

struct ResponseWords {
  std::string query_id;
  std::size_t words = 0;
};

struct GroupSummary {
  std::string label;
  std::size_t n_queries = 0;
  double mean_words = 0.0;
  double sd_words = 0.0;  // sample (n-1) SD
  std::size_t total_words = 0;
  // n == 1: SD is undefined and reported as 0.
  bool degenerate_sd = false;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  bool degenerate = false;
};

// Mean and sample SD; degenerate (sd 0) below two values.
MeanSd mean_sd(std::span<const double> values);

// One row per Grouping label plus a trailing "Overall" row. Throws
// coha::Error(invalid_argument) when a declared group has no responses.
std::vector<GroupSummary> group_summary(std::span<const ResponseWords> responses,
                                        const Grouping& grouping);

struct Proportion {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double value = 0.0;
  double ci_low = 0.0;   // Wald 95%, clamped to [0, 1]
  double ci_high = 0.0;
};

Proportion wald_proportion(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct GroupProportions {
  std::string label;
  Proportion incorrect;          // incorrect / (useful + not-useful + incorrect)
  Proportion useful_of_correct;  // useful / (useful + not-useful)
  // Three-way split of coded words; sums to 1.
  double share_useful = 0.0;
  double share_not_useful = 0.0;
  double share_incorrect = 0.0;
};

// Indeterminate tokens are excluded from every denominator. Throws
// coha::Error(invalid_argument) when no word is coded; with no correct words
// useful_of_correct is left undefined (trials 0).
GroupProportions proportions(const std::string& label, const CategoryCounts& counts);

double normal_cdf(double x);
// Inverse of normal_cdf for p in (0, 1).
double normal_quantile(double p);

struct ZTest {
  double z = 0.0;
  double p_value = 1.0;
};

// Pooled two-proportion z-test, z = (p2 - p1) / se, two-tailed p-value.
ZTest two_proportion_z(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2);

double bonferroni_alpha(double alpha, std::size_t m);

enum class Measure { incorrect_of_all, useful_of_correct };
std::string_view to_string(Measure m);
Measure measure_from_string(std::string_view s);

enum class Outcome { reject, do_not_reject };
std::string_view to_string(Outcome o);

struct ProportionTest {
  Measure measure = Measure::incorrect_of_all;
  std::string group_x;
  std::string group_y;
  double p_hat_x = 0.0;
  double p_hat_y = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  double alpha = 0.0;
  double alpha_corrected = 0.0;
  double z_critical = 0.0;
  Outcome outcome = Outcome::do_not_reject;
};

struct LabeledCounts {
  std::string label;
  CategoryCounts counts;
};

// Pairs in order (0,1), (1,2), ..., then wider gaps: for three groups
// low-mod, mod-high, low-high. Measures outermost. Bonferroni m is the
// total number of tests.
std::vector<std::pair<std::size_t, std::size_t>> battery_pairs(std::size_t groups);
std::vector<ProportionTest> run_test_battery(
    std::span<const LabeledCounts> groups, double alpha,
    std::span<const Measure> measures = std::span<const Measure>());

// Looks the battery's groups up by label, in `order`. Throws
// coha::Error(not_found) listing every label missing from `counts`.
std::vector<ProportionTest> run_test_battery(const std::map<std::string, CategoryCounts>& counts,
                                             const std::vector<std::string>& order, double alpha,
                                             std::span<const Measure> measures = std::span<const Measure>());

}  // namespace coha::stats
