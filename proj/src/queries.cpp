#include "coha/queries.hpp"

#include <cctype>
#include <cstdio>

#include "coha/error.hpp"

namespace coha {

using nlohmann::json;

namespace {

void replace_all(std::string& text, std::string_view slot, std::string_view value) {
  for (auto pos = text.find(slot); pos != std::string::npos;
       pos = text.find(slot, pos + value.size())) {
    text.replace(pos, slot.size(), value);
  }
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string_view to_string(Guideword g) {
  switch (g) {
    case Guideword::provided: return "provided";
    case Guideword::not_provided: return "not-provided";
    case Guideword::too_early: return "too-early";
    case Guideword::too_late: return "too-late";
    case Guideword::stopped_too_soon: return "stopped-too-soon";
    case Guideword::applied_too_long: return "applied-too-long";
    case Guideword::out_of_sequence: return "out-of-sequence";
    case Guideword::wrong_order: return "wrong-order";
  }
  return "provided";
}

Guideword guideword_from_string(std::string_view text) {
  for (auto g : kAllGuidewords) {
    if (to_string(g) == text) return g;
  }
  throw Error(ErrorCode::invalid_argument, "unknown guideword '" + std::string(text) + "'");
}

std::set<Guideword> default_guidewords() {
  return {Guideword::provided,  Guideword::not_provided,     Guideword::too_early,
          Guideword::too_late,  Guideword::stopped_too_soon, Guideword::applied_too_long};
}

std::set<Guideword> parse_guideword_list(std::string_view list) {
  std::set<Guideword> out;
  while (!list.empty()) {
    auto comma = list.find(',');
    auto item = trim(list.substr(0, comma));
    if (!item.empty()) out.insert(guideword_from_string(item));
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  return out;
}

bool is_duration_guideword(Guideword g) {
  return g == Guideword::stopped_too_soon || g == Guideword::applied_too_long;
}

std::string default_frame(Guideword g) {
  switch (g) {
    case Guideword::provided: return "providing {signal} to the {receiver}";
    case Guideword::not_provided: return "not providing {signal} to the {receiver}";
    case Guideword::too_early: return "providing {signal} too early to the {receiver}";
    case Guideword::too_late: return "providing {signal} too late to the {receiver}";
    case Guideword::stopped_too_soon: return "stopping {signal} to the {receiver} too soon";
    case Guideword::applied_too_long:
      return "continuing to provide {signal} to the {receiver} too long";
    case Guideword::out_of_sequence: return "providing {signal} to the {receiver} out of sequence";
    case Guideword::wrong_order: return "providing {signal} to the {receiver} in the wrong order";
  }
  return {};
}

std::string QueryOptions::frame(Guideword g) const {
  auto it = frame_overrides.find(g);
  return it != frame_overrides.end() ? it->second : default_frame(g);
}

std::string query_id_prefix(const SystemModel& model) {
  const std::string& source = model.complexity_label.empty() ? model.name : model.complexity_label;
  std::string slug;
  for (unsigned char c : source) {
    if (std::isalnum(c)) {
      slug += static_cast<char>(std::tolower(c));
    } else if (!slug.empty() && slug.back() != '-') {
      slug += '-';
    }
  }
  while (!slug.empty() && slug.back() == '-') slug.pop_back();
  return slug.empty() ? "q" : slug;
}

std::string render_query(const SystemModel& model, std::string_view action_id, Guideword g,
                         std::string_view event_id, const QueryOptions& options) {
  const ControlAction* action = model.find_action(action_id);
  if (action == nullptr) {
    throw Error(ErrorCode::unknown_id, "unknown control action '" + std::string(action_id) + "'",
                {std::string(action_id)});
  }
  const DangerousEvent* event = model.find_event(event_id);
  if (event == nullptr) {
    throw Error(ErrorCode::unknown_id, "unknown dangerous event '" + std::string(event_id) + "'",
                {std::string(event_id)});
  }
  const Element* issuer = model.find_element(action->issuer);
  const Element* receiver = model.find_element(action->receiver);
  if (issuer == nullptr || receiver == nullptr) {
    const std::string& missing = issuer == nullptr ? action->issuer : action->receiver;
    throw Error(ErrorCode::unknown_id, "unknown element '" + missing + "'", {missing});
  }

  std::string phrase = options.frame(g);
  replace_all(phrase, "{signal}", action->signal_noun_phrase);
  replace_all(phrase, "{receiver}", receiver->name);
  return "Could the " + issuer->name + " " + phrase + " result in " + event->outcome_clause + "?";
}

std::vector<Query> generate_queries(const SystemModel& model, const QueryOptions& options) {
  if (auto violations = validate(model); !violations.empty()) {
    throw Error(ErrorCode::invalid_model, "cannot generate queries: " + violations[0].message);
  }
  if (options.enabled.empty()) {
    throw Error(ErrorCode::invalid_argument, "at least one guideword must be enabled");
  }
  const std::string prefix = options.id_prefix.empty() ? query_id_prefix(model) : options.id_prefix;

  std::vector<Query> out;
  for (const auto& action : model.control_actions) {
    for (auto g : kAllGuidewords) {
      if (!options.enabled.contains(g)) continue;
      if (options.exclude_duration_for_discrete && !action.continuous && is_duration_guideword(g))
        continue;
      for (const auto& event : model.dangerous_events) {
        Query q;
        q.ordinal = out.size();
        char id[32];
        std::snprintf(id, sizeof id, "-q%03zu", q.ordinal);
        q.id = prefix + id;
        q.action = action.id;
        q.guideword = g;
        q.event = event.id;
        q.text = render_query(model, action.id, g, event.id, options);
        out.push_back(std::move(q));
      }
    }
  }
  return out;
}

json to_json(const Query& q) {
  return {{"id", q.id},         {"action", q.action},   {"guideword", to_string(q.guideword)},
          {"event", q.event},   {"ordinal", q.ordinal}, {"text", q.text}};
}

Query query_from_json(const json& j) {
  Query q;
  q.id = j.at("id").get<std::string>();
  q.action = j.at("action").get<std::string>();
  q.guideword = guideword_from_string(j.at("guideword").get<std::string>());
  q.event = j.at("event").get<std::string>();
  q.ordinal = j.at("ordinal").get<std::size_t>();
  q.text = j.at("text").get<std::string>();
  return q;
}

json options_to_json(const QueryOptions& options) {
  json j;
  j["guidewords"] = json::array();
  for (auto g : kAllGuidewords) {
    if (options.enabled.contains(g)) j["guidewords"].push_back(to_string(g));
  }
  j["exclude_duration_for_discrete"] = options.exclude_duration_for_discrete;
  j["frames"] = json::object();
  for (const auto& [g, frame] : options.frame_overrides) j["frames"][std::string(to_string(g))] = frame;
  return j;
}

QueryOptions options_from_json(const json& j) {
  QueryOptions o;
  if (auto it = j.find("guidewords"); it != j.end()) {
    o.enabled.clear();
    for (const auto& g : *it) o.enabled.insert(guideword_from_string(g.get<std::string>()));
  }
  o.exclude_duration_for_discrete = j.value("exclude_duration_for_discrete", false);
  if (auto it = j.find("frames"); it != j.end()) {
    for (const auto& [key, frame] : it->items()) {
      o.frame_overrides[guideword_from_string(key)] = frame.get<std::string>();
    }
  }
  return o;
}

}  // namespace coha
