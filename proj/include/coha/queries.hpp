#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coha/model.hpp"

namespace coha {

// Canonical order; generation iterates guidewords in this order.
enum class Guideword {
  provided,
  not_provided,
  too_early,
  too_late,
  stopped_too_soon,
  applied_too_long,
  out_of_sequence,
  wrong_order,
};

inline constexpr std::array<Guideword, 8> kAllGuidewords = {
    Guideword::provided,         Guideword::not_provided,     Guideword::too_early,
    Guideword::too_late,         Guideword::stopped_too_soon, Guideword::applied_too_long,
    Guideword::out_of_sequence,  Guideword::wrong_order,
};

std::string_view to_string(Guideword g);
Guideword guideword_from_string(std::string_view text);
std::set<Guideword> default_guidewords();
// Comma-separated ids, e.g. "provided,too-early".
std::set<Guideword> parse_guideword_list(std::string_view list);

bool is_duration_guideword(Guideword g);

// Phrase frames with {signal} and {receiver} slots.
std::string default_frame(Guideword g);

struct QueryOptions {
  std::set<Guideword> enabled = default_guidewords();
  // Drops stopped-too-soon / applied-too-long for actions with continuous=false.
  bool exclude_duration_for_discrete = false;
  std::map<Guideword, std::string> frame_overrides;
  // Query ids are "<prefix>-q<ordinal>"; empty means derive from the model.
  std::string id_prefix;

  std::string frame(Guideword g) const;
};

struct Query {
  std::string id;
  std::string action;
  Guideword guideword = Guideword::provided;
  std::string event;
  std::size_t ordinal = 0;
  std::string text;

  bool operator==(const Query&) const = default;
};

// Slug of the complexity label (or model name) used as the default id prefix.
std::string query_id_prefix(const SystemModel& model);

std::string render_query(const SystemModel& model, std::string_view action_id, Guideword g,
                         std::string_view event_id, const QueryOptions& options = {});

// Actions (model order) outermost, guidewords (canonical order) middle,
// events (model order) innermost.
std::vector<Query> generate_queries(const SystemModel& model, const QueryOptions& options = {});

nlohmann::json to_json(const Query& q);
Query query_from_json(const nlohmann::json& j);
nlohmann::json options_to_json(const QueryOptions& options);
QueryOptions options_from_json(const nlohmann::json& j);

}  // namespace coha
