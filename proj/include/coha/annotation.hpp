#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace coha {

enum class Code { correct_useful, correct_not_useful, incorrect };

// Reconciled code; indeterminate only comes from a useful/incorrect conflict.
enum class FinalCode { correct_useful, correct_not_useful, incorrect, indeterminate };

enum class Phase { independent, post_discussion };

std::string_view to_string(Code c);
std::string_view to_string(FinalCode c);
std::string_view to_string(Phase p);
Code code_from_string(std::string_view s);
FinalCode final_code_from_string(std::string_view s);
Phase phase_from_string(std::string_view s);

struct Token {
  std::size_t index = 0;
  std::string text;
};

struct TokenizedResponse {
  std::string query_id;
  std::vector<Token> tokens;
};

// Maximal runs of non-whitespace; punctuation stays attached.
TokenizedResponse tokenize(std::string_view text, std::string query_id = {});
std::size_t word_count(std::string_view text);

struct TokenRange {
  std::size_t start = 0;
  std::size_t end_exclusive = 0;

  bool operator==(const TokenRange&) const = default;
};

template <typename C>
struct BasicSpan {
  std::size_t start = 0;
  std::size_t end_exclusive = 0;
  C code{};

  bool operator==(const BasicSpan&) const = default;
};

using Span = BasicSpan<Code>;
using FinalSpan = BasicSpan<FinalCode>;

// Token ranges of [0, token_count) not covered by any span.
std::vector<TokenRange> uncovered_ranges(std::size_t token_count, std::span<const Span> spans);

struct ReviewerCoding {
  std::string reviewer_id;
  std::string query_id;
  std::vector<Code> assignments;  // one per token
  Phase phase = Phase::independent;
  std::string notes;

  bool operator==(const ReviewerCoding&) const = default;
};

// Expands spans to per-token assignments. Throws coha::Error:
// invalid_argument for empty, out-of-range or overlapping spans; coverage_gap
// (details = uncovered "start-end" ranges) when a token is left uncoded.
ReviewerCoding coding_from_spans(std::string reviewer_id, std::string query_id,
                                 std::size_t token_count, std::span<const Span> spans,
                                 Phase phase = Phase::independent, std::string notes = {});

// Runs of equal codes, in token order.
template <typename C>
std::vector<BasicSpan<C>> to_spans(std::span<const C> assignments) {
  std::vector<BasicSpan<C>> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (!out.empty() && out.back().code == assignments[i]) {
      out.back().end_exclusive = i + 1;
    } else {
      out.push_back({i, i + 1, assignments[i]});
    }
  }
  return out;
}

struct FinalCoding {
  std::string query_id;
  std::vector<FinalCode> assignments;

  bool operator==(const FinalCoding&) const = default;
};

FinalCode reconcile_code(Code a, Code b);
FinalCoding reconcile(const ReviewerCoding& a, const ReviewerCoding& b);

// Cohen's kappa over word-level code pairs.
struct AgreementResult {
  std::string scope;  // query id, or "overall"
  double kappa = 0.0;
  double observed = 0.0;  // p_o
  double expected = 0.0;  // p_e
  std::size_t tokens = 0;
  // p_e == 1: kappa is 1 if p_o == 1, else 0.
  bool degenerate = false;
};

// 3x3 contingency table of (reviewer A code, reviewer B code) pairs.
class AgreementTable {
 public:
  void add(Code a, Code b) { ++cells_[index(a)][index(b)]; ++total_; }
  void merge(const AgreementTable& other);
  std::size_t total() const { return total_; }
  // Throws coha::Error(invalid_argument) when empty.
  AgreementResult result(std::string scope) const;

 private:
  static std::size_t index(Code c) { return static_cast<std::size_t>(c); }
  std::array<std::array<std::size_t, 3>, 3> cells_{};
  std::size_t total_ = 0;
};

AgreementResult kappa(const ReviewerCoding& a, const ReviewerCoding& b);

struct CodingPair {
  const ReviewerCoding* a = nullptr;
  const ReviewerCoding* b = nullptr;
};

// One contingency table over every token of every pair.
AgreementResult kappa_overall(std::span<const CodingPair> pairs);

// query id -> group label, with the label order used for reporting.
struct Grouping {
  std::vector<std::string> labels;
  std::map<std::string, std::string> group_of;

  const std::string& label_for(const std::string& query_id) const;
};

struct CategoryCounts {
  std::size_t correct_useful = 0;
  std::size_t correct_not_useful = 0;
  std::size_t incorrect = 0;
  std::size_t indeterminate = 0;
  std::size_t total_tokens = 0;

  std::size_t coded() const { return correct_useful + correct_not_useful + incorrect; }
  CategoryCounts& operator+=(const CategoryCounts& o);
  bool operator==(const CategoryCounts&) const = default;
};

CategoryCounts count_codes(const FinalCoding& f);

struct GroupCounts {
  std::string label;
  CategoryCounts counts;
  std::vector<CategoryCounts> per_response;
};

struct CountsTable {
  std::vector<GroupCounts> groups;  // in Grouping::labels order
  GroupCounts overall;
};

// Throws coha::Error(not_found) for a query id with no group label.
CountsTable category_counts(std::span<const FinalCoding> finals, const Grouping& grouping);

struct PresenceRow {
  std::string label;
  std::size_t responses = 0;
  std::size_t with_useful = 0;
  std::size_t with_not_useful = 0;
  std::size_t with_incorrect = 0;

  bool operator==(const PresenceRow&) const = default;
};

struct PresenceTable {
  std::vector<PresenceRow> groups;
  PresenceRow overall;
};

PresenceTable response_presence(std::span<const FinalCoding> finals, const Grouping& grouping);

// Coding and final files: {query_id, reviewer_id, phase, spans[], notes}
// and {query_id, token_count, spans[]}.
nlohmann::json to_json(const ReviewerCoding& c);
ReviewerCoding coding_from_json(const nlohmann::json& j, std::size_t token_count);
nlohmann::json to_json(const FinalCoding& f);
FinalCoding final_from_json(const nlohmann::json& j);
std::vector<Span> spans_from_json(const nlohmann::json& spans);

}  // namespace coha
