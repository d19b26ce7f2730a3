#include "coha/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "coha/error.hpp"

namespace coha {

using nlohmann::json;

namespace {

stats::MeanSd moments_of(const std::vector<CategoryCounts>& rows, std::size_t CategoryCounts::*field) {
  std::vector<double> values;
  values.reserve(rows.size());
  for (const auto& r : rows) values.push_back(static_cast<double>(r.*field));
  return stats::mean_sd(values);
}

CategoryMoments category_moments(const GroupCounts& g) {
  return {moments_of(g.per_response, &CategoryCounts::correct_useful),
          moments_of(g.per_response, &CategoryCounts::correct_not_useful),
          moments_of(g.per_response, &CategoryCounts::incorrect)};
}

json mean_sd_json(const stats::MeanSd& m) {
  return {{"mean", m.mean}, {"sd", m.sd}, {"degenerate", m.degenerate}};
}

json counts_json(const CategoryCounts& c) {
  return {{"correct_useful", c.correct_useful},
          {"correct_not_useful", c.correct_not_useful},
          {"incorrect", c.incorrect},
          {"indeterminate", c.indeterminate},
          {"total_tokens", c.total_tokens}};
}

json proportion_json(const stats::Proportion& p) {
  return {{"successes", p.successes},
          {"trials", p.trials},
          {"value", p.value},
          {"ci_low", p.ci_low},
          {"ci_high", p.ci_high}};
}

std::string format_number(double v, CellFormat f) {
  char buf[64];
  switch (f) {
    case CellFormat::integer: std::snprintf(buf, sizeof buf, "%.0f", v); break;
    case CellFormat::one_decimal: std::snprintf(buf, sizeof buf, "%.1f", v); break;
    case CellFormat::two_decimals: std::snprintf(buf, sizeof buf, "%.2f", v); break;
    case CellFormat::percent: std::snprintf(buf, sizeof buf, "%.0f%%", v * 100.0); break;
    case CellFormat::p_value: std::snprintf(buf, sizeof buf, "%.3g", v); break;
    case CellFormat::text: return {};
  }
  std::string s = buf;
  if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
  return s;
}

std::string exact_number(double v, CellFormat f) {
  if (f == CellFormat::integer) return std::to_string(static_cast<long long>(std::llround(v)));
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

Cell count(std::size_t v) { return Cell::num(static_cast<double>(v), CellFormat::integer); }

Table summary_table(const StatsReport& r) {
  Table t{"summary", "Results by system version",
          {"Complexity", "Queries", "Words per Response", "Words per Response SD", "Total Words",
           "Agreement"},
          {}};
  for (std::size_t i = 0; i < r.summary.size(); ++i) {
    const auto& s = r.summary[i];
    const auto& k = r.agreement[i];
    t.rows.push_back({Cell::str(s.label), count(s.n_queries),
                      Cell::num(s.mean_words, CellFormat::one_decimal),
                      Cell::num(s.sd_words, CellFormat::one_decimal), count(s.total_words),
                      k ? Cell::num(k->kappa, CellFormat::two_decimals) : Cell::str("n/a")});
  }
  return t;
}

Table presence_table(const StatsReport& r) {
  Table t{"presence", "Number of responses with at least one word coded in each category",
          {"Complexity", "Responses", "Correct and Useful", "Correct and Useful %",
           "Correct but Not Useful", "Correct but Not Useful %", "Incorrect", "Incorrect %"},
          {}};
  auto add = [&](const PresenceRow& p) {
    auto share = [&](std::size_t k) {
      return p.responses == 0 ? Cell::str("n/a")
                              : Cell::num(static_cast<double>(k) / static_cast<double>(p.responses),
                                          CellFormat::percent);
    };
    t.rows.push_back({Cell::str(p.label), count(p.responses), count(p.with_useful),
                      share(p.with_useful), count(p.with_not_useful), share(p.with_not_useful),
                      count(p.with_incorrect), share(p.with_incorrect)});
  };
  for (const auto& p : r.presence.groups) add(p);
  add(r.presence.overall);
  return t;
}

Table word_codes_table(const StatsReport& r) {
  Table t{"word-codes", "Word-level codes applied to each system",
          {"Complexity", "Correct and Useful", "Correct but Not Useful", "Incorrect",
           "Indeterminate", "Useful Avg", "Useful SD", "Not Useful Avg", "Not Useful SD",
           "Incorrect Avg", "Incorrect SD"},
          {}};
  auto add = [&](const GroupCounts& g, const CategoryMoments& m) {
    const auto& c = g.counts;
    t.rows.push_back({Cell::str(g.label), count(c.correct_useful), count(c.correct_not_useful),
                      count(c.incorrect), count(c.indeterminate),
                      Cell::num(m.useful.mean, CellFormat::one_decimal),
                      Cell::num(m.useful.sd, CellFormat::one_decimal),
                      Cell::num(m.not_useful.mean, CellFormat::one_decimal),
                      Cell::num(m.not_useful.sd, CellFormat::one_decimal),
                      Cell::num(m.incorrect.mean, CellFormat::one_decimal),
                      Cell::num(m.incorrect.sd, CellFormat::one_decimal)});
  };
  for (std::size_t i = 0; i < r.counts.groups.size(); ++i) add(r.counts.groups[i], r.moments[i]);
  add(r.counts.overall, r.moments.back());
  return t;
}

Table tests_table(const StatsReport& r) {
  Table t{"tests", "Tests for significance between different system complexities",
          {"Measure", "H0", "p_x", "p_y", "p_y - p_x", "Z", "p-value", "Outcome"},
          {}};
  for (const auto& test : r.tests) {
    const std::string measure = test.measure == stats::Measure::incorrect_of_all
                                    ? "Proportion of Incorrect Words in Responses"
                                    : "Proportion of Useful Words in Responses";
    t.rows.push_back({Cell::str(measure),
                      Cell::str("p_" + test.group_x + " = p_" + test.group_y),
                      Cell::num(test.p_hat_x, CellFormat::two_decimals),
                      Cell::num(test.p_hat_y, CellFormat::two_decimals),
                      Cell::num(test.p_hat_y - test.p_hat_x, CellFormat::two_decimals),
                      Cell::num(test.z, CellFormat::two_decimals),
                      Cell::num(test.p_value, CellFormat::p_value),
                      Cell::str(test.outcome == stats::Outcome::reject ? "Reject H0"
                                                                       : "Do Not Reject H0")});
  }
  return t;
}

Table figure_table(const StatsReport& r) {
  Table t{"figure", "Proportion of codes assigned by system complexity (95% CI)",
          {"Complexity", "Correct and Useful", "Correct but Not Useful", "Incorrect",
           "Incorrect Proportion", "Incorrect CI Low", "Incorrect CI High",
           "Useful of Correct Proportion", "Useful of Correct CI Low", "Useful of Correct CI High"},
          {}};
  for (const auto& p : r.proportions) {
    t.rows.push_back({Cell::str(p.label), Cell::num(p.share_useful, CellFormat::two_decimals),
                      Cell::num(p.share_not_useful, CellFormat::two_decimals),
                      Cell::num(p.share_incorrect, CellFormat::two_decimals),
                      Cell::num(p.incorrect.value, CellFormat::two_decimals),
                      Cell::num(p.incorrect.ci_low, CellFormat::two_decimals),
                      Cell::num(p.incorrect.ci_high, CellFormat::two_decimals),
                      Cell::num(p.useful_of_correct.value, CellFormat::two_decimals),
                      Cell::num(p.useful_of_correct.ci_low, CellFormat::two_decimals),
                      Cell::num(p.useful_of_correct.ci_high, CellFormat::two_decimals)});
  }
  return t;
}

void render_table(std::string& out, const Table& t) {
  out += "| ";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? " | " : "") + md_escape(t.columns[i]);
  out += " |\n|";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += i == 0 ? "---|" : "---:|";
  out += "\n";
  for (const auto& row : t.rows) {
    out += "| ";
    for (std::size_t i = 0; i < row.size(); ++i) {
      const Cell& c = row[i];
      out += (i ? " | " : "") + md_escape(c.numeric() ? format_number(c.number, c.format) : c.text);
    }
    out += " |\n";
  }
}

}  // namespace

StatsReport compute_stats(const AnalysisInput& input, double alpha) {
  if (input.finals.empty()) throw Error(ErrorCode::conflict, "no coded responses");

  StatsReport r;
  r.alpha = alpha;
  r.model_fingerprints = input.model_fingerprints;
  r.summary = stats::group_summary(input.words, input.grouping);

  std::vector<AgreementTable> tables(input.grouping.labels.size() + 1);
  std::vector<bool> any(tables.size(), false);
  for (const auto& [a, b] : input.reviewer_pairs) {
    const std::string& label = input.grouping.label_for(a.query_id);
    std::size_t gi = 0;
    while (gi < input.grouping.labels.size() && input.grouping.labels[gi] != label) ++gi;
    if (gi == input.grouping.labels.size()) {
      throw Error(ErrorCode::not_found, "group '" + label + "' is not a declared label", {label});
    }
    if (a.query_id != b.query_id || a.assignments.size() != b.assignments.size()) {
      throw Error(ErrorCode::token_mismatch, "reviewer codings of '" + a.query_id + "' do not align",
                  {a.query_id});
    }
    AgreementTable t;
    for (std::size_t i = 0; i < a.assignments.size(); ++i) t.add(a.assignments[i], b.assignments[i]);
    tables[gi].merge(t);
    tables.back().merge(t);
    any[gi] = any.back() = true;
  }
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const std::string& label = r.summary[i].label;
    if (any[i] && tables[i].total() > 0) {
      r.agreement.push_back(tables[i].result(i + 1 == tables.size() ? "overall" : label));
    } else {
      r.agreement.push_back(std::nullopt);
    }
  }

  r.presence = response_presence(input.finals, input.grouping);
  r.counts = category_counts(input.finals, input.grouping);
  for (const auto& g : r.counts.groups) r.moments.push_back(category_moments(g));
  r.moments.push_back(category_moments(r.counts.overall));

  std::vector<stats::LabeledCounts> battery;
  for (const auto& g : r.counts.groups) {
    if (g.per_response.empty()) continue;
    r.proportions.push_back(stats::proportions(g.label, g.counts));
    battery.push_back({g.label, g.counts});
  }
  if (battery.size() >= 2) {
    r.tests = stats::run_test_battery(battery, alpha);
    r.alpha_corrected = r.tests.front().alpha_corrected;
    r.z_critical = r.tests.front().z_critical;
  } else {
    r.alpha_corrected = alpha;
    r.z_critical = stats::normal_quantile(1.0 - alpha / 2.0);
  }
  return r;
}

json to_json(const StatsReport& r) {
  json j;
  j["alpha"] = r.alpha;
  j["alpha_corrected"] = r.alpha_corrected;
  j["z_critical"] = r.z_critical;
  j["bonferroni_m"] = r.tests.size();
  j["metadata"] = {{"tool_version", kToolVersion},
                   {"ci_method", "wald-95"},
                   {"sd", "sample"},
                   {"tokenization", "whitespace"},
                   {"indeterminate", "excluded-from-proportions"},
                   {"z_test", "pooled-two-tailed"},
                   {"model_fingerprints", r.model_fingerprints}};

  j["summary"] = json::array();
  for (std::size_t i = 0; i < r.summary.size(); ++i) {
    const auto& s = r.summary[i];
    json row = {{"label", s.label},
                {"n_queries", s.n_queries},
                {"words_per_response_mean", s.mean_words},
                {"words_per_response_sd", s.sd_words},
                {"total_words", s.total_words},
                {"degenerate_sd", s.degenerate_sd}};
    if (const auto& k = r.agreement[i]) {
      row["agreement"] = {{"kappa", k->kappa},
                          {"p_o", k->observed},
                          {"p_e", k->expected},
                          {"tokens", k->tokens},
                          {"degenerate", k->degenerate}};
    } else {
      row["agreement"] = nullptr;
    }
    j["summary"].push_back(std::move(row));
  }

  j["presence"] = json::array();
  auto presence_row = [](const PresenceRow& p) {
    return json{{"label", p.label},
                {"responses", p.responses},
                {"with_correct_useful", p.with_useful},
                {"with_correct_not_useful", p.with_not_useful},
                {"with_incorrect", p.with_incorrect}};
  };
  for (const auto& p : r.presence.groups) j["presence"].push_back(presence_row(p));
  j["presence"].push_back(presence_row(r.presence.overall));

  j["word_codes"] = json::array();
  auto codes_row = [](const GroupCounts& g, const CategoryMoments& m) {
    return json{{"label", g.label},
                {"responses", g.per_response.size()},
                {"counts", counts_json(g.counts)},
                {"per_response",
                 {{"correct_useful", mean_sd_json(m.useful)},
                  {"correct_not_useful", mean_sd_json(m.not_useful)},
                  {"incorrect", mean_sd_json(m.incorrect)}}}};
  };
  for (std::size_t i = 0; i < r.counts.groups.size(); ++i) {
    j["word_codes"].push_back(codes_row(r.counts.groups[i], r.moments[i]));
  }
  j["word_codes"].push_back(codes_row(r.counts.overall, r.moments.back()));

  j["proportions"] = json::array();
  for (const auto& p : r.proportions) {
    j["proportions"].push_back({{"label", p.label},
                                {"incorrect", proportion_json(p.incorrect)},
                                {"useful_of_correct", proportion_json(p.useful_of_correct)},
                                {"share_correct_useful", p.share_useful},
                                {"share_correct_not_useful", p.share_not_useful},
                                {"share_incorrect", p.share_incorrect}});
  }

  j["tests"] = json::array();
  for (const auto& t : r.tests) {
    j["tests"].push_back({{"measure", stats::to_string(t.measure)},
                          {"group_x", t.group_x},
                          {"group_y", t.group_y},
                          {"p_hat_x", t.p_hat_x},
                          {"p_hat_y", t.p_hat_y},
                          {"z", t.z},
                          {"p_value", t.p_value},
                          {"alpha_corrected", t.alpha_corrected},
                          {"outcome", stats::to_string(t.outcome)}});
  }
  return j;
}

std::string stats_report_text(const StatsReport& report) { return to_json(report).dump(2) + "\n"; }

const Table& ReportBundle::table(std::string_view name) const {
  for (const auto& t : tables) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::not_found, "unknown table '" + std::string(name) + "'",
              {"summary", "presence", "word-codes", "tests", "figure"});
}

ReportBundle build_bundle(const StatsReport& report) {
  ReportBundle b;
  b.stats = report;
  b.tables = {summary_table(report), presence_table(report), word_codes_table(report),
              tests_table(report), figure_table(report)};
  b.metadata = to_json(report)["metadata"];
  b.metadata["alpha"] = report.alpha;
  b.metadata["alpha_corrected"] = report.alpha_corrected;
  b.metadata["z_critical"] = report.z_critical;
  return b;
}

std::string render_markdown(const ReportBundle& bundle) {
  if (bundle.stats.counts.overall.per_response.empty()) {
    throw Error(ErrorCode::conflict, "no coded responses");
  }
  const auto& m = bundle.metadata;
  std::string out = "# Co-hazard analysis report\n\n";
  char line[256];
  std::snprintf(line, sizeof line,
                "- Tool version: %s\n- Significance level: %.2f, Bonferroni-corrected: %.5f "
                "(m = %zu, critical |Z| = %.2f)\n",
                m.value("tool_version", "").c_str(), bundle.stats.alpha,
                bundle.stats.alpha_corrected, bundle.stats.tests.size(), bundle.stats.z_critical);
  out += line;
  out += "- Confidence intervals: " + m.value("ci_method", "") + "; SD: " + m.value("sd", "") +
         "; tokenization: " + m.value("tokenization", "") + "\n";
  for (const auto& fp : bundle.stats.model_fingerprints) out += "- Model: " + fp + "\n";

  for (const char* name : {"summary", "presence", "word-codes", "tests"}) {
    const Table& t = bundle.table(name);
    out += "\n## " + t.title + "\n\n";
    render_table(out, t);
  }
  const Table& fig = bundle.table("figure");
  out += "\n## " + fig.title + "\n\n```csv\n" + export_csv(bundle, "figure") + "```\n";
  return out;
}

std::string export_csv(const ReportBundle& bundle, std::string_view name) {
  const Table& t = bundle.table(name);
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + csv_escape(t.columns[i]);
  out += "\r\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const Cell& c = row[i];
      out += (i ? "," : "") + csv_escape(c.numeric() ? exact_number(c.number, c.format) : c.text);
    }
    out += "\r\n";
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace coha
