#include "coha/annotation.hpp"

#include <algorithm>
#include <optional>

#include "coha/error.hpp"

namespace coha {

using nlohmann::json;

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::string range_text(const TokenRange& r) {
  return std::to_string(r.start) + "-" + std::to_string(r.end_exclusive);
}

}  // namespace

std::string_view to_string(Code c) {
  switch (c) {
    case Code::correct_useful: return "correct-useful";
    case Code::correct_not_useful: return "correct-not-useful";
    case Code::incorrect: return "incorrect";
  }
  return "incorrect";
}

std::string_view to_string(FinalCode c) {
  switch (c) {
    case FinalCode::correct_useful: return "correct-useful";
    case FinalCode::correct_not_useful: return "correct-not-useful";
    case FinalCode::incorrect: return "incorrect";
    case FinalCode::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

std::string_view to_string(Phase p) {
  return p == Phase::independent ? "independent" : "post-discussion";
}

Code code_from_string(std::string_view s) {
  for (auto c : {Code::correct_useful, Code::correct_not_useful, Code::incorrect}) {
    if (to_string(c) == s) return c;
  }
  throw Error(ErrorCode::invalid_argument, "unknown code '" + std::string(s) + "'");
}

FinalCode final_code_from_string(std::string_view s) {
  for (auto c : {FinalCode::correct_useful, FinalCode::correct_not_useful, FinalCode::incorrect,
                 FinalCode::indeterminate}) {
    if (to_string(c) == s) return c;
  }
  throw Error(ErrorCode::invalid_argument, "unknown final code '" + std::string(s) + "'");
}

Phase phase_from_string(std::string_view s) {
  if (s == "independent") return Phase::independent;
  if (s == "post-discussion") return Phase::post_discussion;
  throw Error(ErrorCode::invalid_argument, "unknown phase '" + std::string(s) + "'");
}

TokenizedResponse tokenize(std::string_view text, std::string query_id) {
  TokenizedResponse out{std::move(query_id), {}};
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > begin) out.tokens.push_back({out.tokens.size(), std::string(text.substr(begin, i - begin))});
  }
  return out;
}

std::size_t word_count(std::string_view text) { return tokenize(text).tokens.size(); }

std::vector<TokenRange> uncovered_ranges(std::size_t token_count, std::span<const Span> spans) {
  std::vector<bool> covered(token_count, false);
  for (const auto& s : spans) {
    for (std::size_t i = s.start; i < std::min(s.end_exclusive, token_count); ++i) covered[i] = true;
  }
  std::vector<TokenRange> gaps;
  for (std::size_t i = 0; i < token_count; ++i) {
    if (covered[i]) continue;
    if (!gaps.empty() && gaps.back().end_exclusive == i) {
      gaps.back().end_exclusive = i + 1;
    } else {
      gaps.push_back({i, i + 1});
    }
  }
  return gaps;
}

ReviewerCoding coding_from_spans(std::string reviewer_id, std::string query_id,
                                 std::size_t token_count, std::span<const Span> spans, Phase phase,
                                 std::string notes) {
  std::vector<std::optional<Code>> slots(token_count);
  for (const auto& s : spans) {
    if (s.start >= s.end_exclusive) {
      throw Error(ErrorCode::invalid_argument, "empty span " + range_text({s.start, s.end_exclusive}));
    }
    if (s.end_exclusive > token_count) {
      throw Error(ErrorCode::invalid_argument,
                  "span " + range_text({s.start, s.end_exclusive}) + " exceeds " +
                      std::to_string(token_count) + " tokens");
    }
    for (std::size_t i = s.start; i < s.end_exclusive; ++i) {
      if (slots[i]) {
        throw Error(ErrorCode::invalid_argument, "overlapping spans at token " + std::to_string(i));
      }
      slots[i] = s.code;
    }
  }
  if (auto gaps = uncovered_ranges(token_count, spans); !gaps.empty()) {
    std::vector<std::string> details;
    for (const auto& g : gaps) details.push_back(range_text(g));
    throw Error(ErrorCode::coverage_gap, "coding leaves tokens uncovered", std::move(details));
  }

  ReviewerCoding c{std::move(reviewer_id), std::move(query_id), {}, phase, std::move(notes)};
  c.assignments.reserve(token_count);
  for (const auto& slot : slots) c.assignments.push_back(*slot);
  return c;
}

FinalCode reconcile_code(Code a, Code b) {
  if (a == b) return static_cast<FinalCode>(a);
  auto has = [&](Code c) { return a == c || b == c; };
  if (has(Code::correct_useful) && has(Code::correct_not_useful)) return FinalCode::correct_useful;
  if (has(Code::correct_not_useful) && has(Code::incorrect)) return FinalCode::incorrect;
  return FinalCode::indeterminate;
}

FinalCoding reconcile(const ReviewerCoding& a, const ReviewerCoding& b) {
  if (a.query_id != b.query_id) {
    throw Error(ErrorCode::invalid_argument,
                "cannot reconcile codings of different queries ('" + a.query_id + "', '" +
                    b.query_id + "')");
  }
  if (a.assignments.size() != b.assignments.size()) {
    throw Error(ErrorCode::token_mismatch,
                "codings of '" + a.query_id + "' cover different token sets (" +
                    std::to_string(a.assignments.size()) + " vs " +
                    std::to_string(b.assignments.size()) + ")");
  }
  FinalCoding f{a.query_id, {}};
  f.assignments.reserve(a.assignments.size());
  for (std::size_t i = 0; i < a.assignments.size(); ++i) {
    f.assignments.push_back(reconcile_code(a.assignments[i], b.assignments[i]));
  }
  return f;
}

void AgreementTable::merge(const AgreementTable& other) {
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) cells_[i][j] += other.cells_[i][j];
  }
  total_ += other.total_;
}

AgreementResult AgreementTable::result(std::string scope) const {
  if (total_ == 0) throw Error(ErrorCode::invalid_argument, "kappa needs at least one token");
  AgreementResult r;
  r.scope = std::move(scope);
  r.tokens = total_;

  const double n = static_cast<double>(total_);
  std::size_t agree = 0;
  std::array<std::size_t, 3> row{}, col{};
  for (std::size_t i = 0; i < 3; ++i) {
    agree += cells_[i][i];
    for (std::size_t j = 0; j < 3; ++j) {
      row[i] += cells_[i][j];
      col[j] += cells_[i][j];
    }
  }
  r.observed = static_cast<double>(agree) / n;
  for (std::size_t k = 0; k < 3; ++k) {
    r.expected += (static_cast<double>(row[k]) / n) * (static_cast<double>(col[k]) / n);
    if (row[k] == total_ && col[k] == total_) r.degenerate = true;
  }
  if (r.degenerate) {
    r.expected = 1.0;
    r.kappa = agree == total_ ? 1.0 : 0.0;
  } else {
    r.kappa = (r.observed - r.expected) / (1.0 - r.expected);
  }
  return r;
}

namespace {

AgreementTable table_for(const ReviewerCoding& a, const ReviewerCoding& b) {
  if (a.query_id != b.query_id) {
    throw Error(ErrorCode::invalid_argument, "kappa pairs must code the same query");
  }
  if (a.assignments.size() != b.assignments.size()) {
    throw Error(ErrorCode::token_mismatch, "kappa pairs must cover the same tokens",
                {a.query_id});
  }
  AgreementTable t;
  for (std::size_t i = 0; i < a.assignments.size(); ++i) t.add(a.assignments[i], b.assignments[i]);
  return t;
}

}  // namespace

AgreementResult kappa(const ReviewerCoding& a, const ReviewerCoding& b) {
  return table_for(a, b).result(a.query_id);
}

AgreementResult kappa_overall(std::span<const CodingPair> pairs) {
  AgreementTable pooled;
  for (const auto& p : pairs) pooled.merge(table_for(*p.a, *p.b));
  return pooled.result("overall");
}

const std::string& Grouping::label_for(const std::string& query_id) const {
  auto it = group_of.find(query_id);
  if (it == group_of.end()) {
    throw Error(ErrorCode::not_found, "query '" + query_id + "' has no group label", {query_id});
  }
  return it->second;
}

CategoryCounts& CategoryCounts::operator+=(const CategoryCounts& o) {
  correct_useful += o.correct_useful;
  correct_not_useful += o.correct_not_useful;
  incorrect += o.incorrect;
  indeterminate += o.indeterminate;
  total_tokens += o.total_tokens;
  return *this;
}

CategoryCounts count_codes(const FinalCoding& f) {
  CategoryCounts c;
  for (auto code : f.assignments) {
    switch (code) {
      case FinalCode::correct_useful: ++c.correct_useful; break;
      case FinalCode::correct_not_useful: ++c.correct_not_useful; break;
      case FinalCode::incorrect: ++c.incorrect; break;
      case FinalCode::indeterminate: ++c.indeterminate; break;
    }
  }
  c.total_tokens = f.assignments.size();
  return c;
}

namespace {

std::size_t group_index(const Grouping& grouping, const std::string& query_id) {
  const std::string& label = grouping.label_for(query_id);
  auto it = std::find(grouping.labels.begin(), grouping.labels.end(), label);
  if (it == grouping.labels.end()) {
    throw Error(ErrorCode::not_found, "group '" + label + "' is not a declared label", {label});
  }
  return static_cast<std::size_t>(it - grouping.labels.begin());
}

}  // namespace

CountsTable category_counts(std::span<const FinalCoding> finals, const Grouping& grouping) {
  CountsTable t;
  for (const auto& label : grouping.labels) t.groups.push_back({label, {}, {}});
  t.overall.label = "Overall";
  for (const auto& f : finals) {
    GroupCounts& g = t.groups[group_index(grouping, f.query_id)];
    const CategoryCounts c = count_codes(f);
    g.counts += c;
    g.per_response.push_back(c);
    t.overall.counts += c;
    t.overall.per_response.push_back(c);
  }
  return t;
}

PresenceTable response_presence(std::span<const FinalCoding> finals, const Grouping& grouping) {
  PresenceTable t;
  for (const auto& label : grouping.labels) t.groups.push_back({label});
  t.overall.label = "Overall";
  for (const auto& f : finals) {
    PresenceRow& row = t.groups[group_index(grouping, f.query_id)];
    const CategoryCounts c = count_codes(f);
    for (PresenceRow* r : {&row, &t.overall}) {
      ++r->responses;
      r->with_useful += c.correct_useful > 0;
      r->with_not_useful += c.correct_not_useful > 0;
      r->with_incorrect += c.incorrect > 0;
    }
  }
  return t;
}

namespace {

template <typename C>
json spans_json(std::span<const C> assignments) {
  json out = json::array();
  for (const auto& s : to_spans(assignments)) {
    out.push_back({{"start", s.start}, {"end_exclusive", s.end_exclusive}, {"code", to_string(s.code)}});
  }
  return out;
}

}  // namespace

json to_json(const ReviewerCoding& c) {
  return {{"query_id", c.query_id},
          {"reviewer_id", c.reviewer_id},
          {"phase", to_string(c.phase)},
          {"spans", spans_json<Code>(c.assignments)},
          {"notes", c.notes}};
}

std::vector<Span> spans_from_json(const json& spans) {
  if (!spans.is_array()) throw Error(ErrorCode::invalid_argument, "'spans' must be an array");
  std::vector<Span> out;
  try {
    for (const auto& s : spans) {
      out.push_back({s.at("start").get<std::size_t>(), s.at("end_exclusive").get<std::size_t>(),
                     code_from_string(s.at("code").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("malformed span: ") + e.what());
  }
  return out;
}

ReviewerCoding coding_from_json(const json& j, std::size_t token_count) {
  try {
    auto spans = spans_from_json(j.at("spans"));
    return coding_from_spans(j.at("reviewer_id").get<std::string>(),
                             j.at("query_id").get<std::string>(), token_count, spans,
                             phase_from_string(j.at("phase").get<std::string>()),
                             j.value("notes", ""));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_document, std::string("malformed coding: ") + e.what());
  }
}

json to_json(const FinalCoding& f) {
  return {{"query_id", f.query_id},
          {"token_count", f.assignments.size()},
          {"spans", spans_json<FinalCode>(f.assignments)}};
}

FinalCoding final_from_json(const json& j) {
  try {
    FinalCoding f;
    f.query_id = j.at("query_id").get<std::string>();
    const auto n = j.at("token_count").get<std::size_t>();
    std::vector<std::optional<FinalCode>> slots(n);
    for (const auto& s : j.at("spans")) {
      const auto start = s.at("start").get<std::size_t>();
      const auto end = s.at("end_exclusive").get<std::size_t>();
      if (start >= end || end > n) throw Error(ErrorCode::malformed_document, "bad final span");
      const auto code = final_code_from_string(s.at("code").get<std::string>());
      for (std::size_t i = start; i < end; ++i) {
        if (slots[i]) throw Error(ErrorCode::malformed_document, "overlapping final spans");
        slots[i] = code;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!slots[i]) {
        throw Error(ErrorCode::malformed_document,
                    "final coding of '" + f.query_id + "' leaves token " + std::to_string(i) + " uncoded");
      }
      f.assignments.push_back(*slots[i]);
    }
    return f;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_document, std::string("malformed final coding: ") + e.what());
  }
}

}  // namespace coha
