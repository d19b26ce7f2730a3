#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "coha/annotation.hpp"
#include "coha/stats.hpp"

namespace coha {

inline constexpr const char* kToolVersion = "0.1.0";

// Everything the analysis needs, already grouped. Word counts cover every
// answered planned query; finals and reviewer pairs cover the coded ones.
struct AnalysisInput {
  Grouping grouping;
  std::vector<stats::ResponseWords> words;
  std::vector<FinalCoding> finals;
  std::vector<std::pair<ReviewerCoding, ReviewerCoding>> reviewer_pairs;
  std::vector<std::string> model_fingerprints;
};

struct CategoryMoments {
  stats::MeanSd useful;
  stats::MeanSd not_useful;
  stats::MeanSd incorrect;
};

struct StatsReport {
  double alpha = 0.01;
  double alpha_corrected = 0.0;
  double z_critical = 0.0;
  std::vector<stats::GroupSummary> summary;           // groups then Overall
  std::vector<std::optional<AgreementResult>> agreement;  // parallel to summary
  PresenceTable presence;
  CountsTable counts;
  std::vector<CategoryMoments> moments;  // parallel to counts.groups, then overall
  std::vector<stats::GroupProportions> proportions;
  std::vector<stats::ProportionTest> tests;
  std::vector<std::string> model_fingerprints;
};

// Throws coha::Error(conflict, "no coded responses") when there are no finals.
StatsReport compute_stats(const AnalysisInput& input, double alpha = 0.01);

// Stable serialization (no timestamps): the stats/report.json payload.
nlohmann::json to_json(const StatsReport& report);
std::string stats_report_text(const StatsReport& report);

enum class CellFormat { text, integer, one_decimal, two_decimals, percent, p_value };

struct Cell {
  std::string text;
  double number = 0.0;
  CellFormat format = CellFormat::text;

  static Cell str(std::string s) { return {std::move(s), 0.0, CellFormat::text}; }
  static Cell num(double v, CellFormat f) { return {{}, v, f}; }
  bool numeric() const { return format != CellFormat::text; }
};

struct Table {
  std::string name;   // summary | presence | word-codes | tests | figure
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct ReportBundle {
  StatsReport stats;
  std::vector<Table> tables;
  nlohmann::json metadata;

  const Table& table(std::string_view name) const;
};

ReportBundle build_bundle(const StatsReport& report);

// Markdown with proportions at 2 d.p. and percentages as integers.
std::string render_markdown(const ReportBundle& bundle);

// RFC 4180 CSV with full-precision numbers. Throws coha::Error(not_found) for
// an unknown table.
std::string export_csv(const ReportBundle& bundle, std::string_view table);

// Minimal RFC 4180 reader, used to check exports.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace coha
