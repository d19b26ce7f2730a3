#include "coha/workflow.hpp"

#include <algorithm>
#include <set>

#include "coha/error.hpp"

namespace coha {

using nlohmann::json;

namespace {

std::string group_label(const SystemModel& m) {
  return m.complexity_label.empty() ? m.name : m.complexity_label;
}

struct CodingName {
  std::string query_id;
  std::string reviewer_id;
  Phase phase;
};

std::optional<CodingName> split_coding_name(const std::string& name) {
  const auto first = name.find('.');
  const auto last = name.rfind('.');
  if (first == std::string::npos || first == last) return std::nullopt;
  try {
    return CodingName{name.substr(0, first), name.substr(first + 1, last - first - 1),
                      phase_from_string(name.substr(last + 1))};
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::string coding_name(const std::string& query_id, const std::string& reviewer, Phase phase) {
  return query_id + "." + reviewer + "." + std::string(to_string(phase));
}

// Reviewers with any coding of the query, in manifest order then by name.
std::vector<std::string> reviewers_of(const Project& project, const std::string& query_id) {
  std::set<std::string> found;
  for (const auto& name : project.list_artifacts(ArtifactKind::coding)) {
    if (auto c = split_coding_name(name); c && c->query_id == query_id) found.insert(c->reviewer_id);
  }
  std::vector<std::string> out;
  for (const auto& r : project.manifest().reviewers) {
    if (found.erase(r)) out.push_back(r);
  }
  out.insert(out.end(), found.begin(), found.end());
  return out;
}

}  // namespace

void ProjectTranscriptSink::commit(const Transcript& t) {
  project_->save_artifact(ArtifactKind::transcript, t.session_id, to_jsonl(t), model_file_);
}

std::vector<std::pair<std::string, SystemModel>> project_models(const Project& project) {
  std::vector<std::pair<std::string, SystemModel>> out;
  for (const auto& file : project.manifest().models) {
    out.emplace_back(file, parse_model(project.read_artifact(ArtifactKind::model, file)));
  }
  return out;
}

std::vector<Transcript> project_transcripts(const Project& project) {
  std::vector<Transcript> out;
  for (const auto& s : project.manifest().sessions) {
    out.push_back(parse_jsonl(project.read_artifact(ArtifactKind::transcript, s.id)));
  }
  return out;
}

std::vector<StoredResponse> project_responses(const Project& project) {
  const Manifest manifest = project.manifest();
  std::map<std::string, std::string> labels;
  for (const auto& [file, model] : project_models(project)) labels[file] = group_label(model);

  std::vector<StoredResponse> out;
  std::set<std::string> seen;
  for (const auto& s : manifest.sessions) {
    const Transcript t = parse_jsonl(project.read_artifact(ArtifactKind::transcript, s.id));
    for (const auto& m : t.messages) {
      if (m.kind != MessageKind::response || !m.query_id || seen.count(*m.query_id)) continue;
      const Message* q = t.query_for(*m.query_id);
      StoredResponse r;
      r.query_id = *m.query_id;
      r.session_id = s.id;
      r.model_file = s.model;
      r.group_label = labels.count(s.model) ? labels[s.model] : s.model;
      r.guideword = q ? q->guideword : std::nullopt;
      r.query_text = q ? q->text : std::string();
      r.text = m.text;
      r.refusal = m.refusal;
      seen.insert(r.query_id);
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::optional<StoredResponse> find_response(const Project& project, const std::string& query_id) {
  for (auto& r : project_responses(project)) {
    if (r.query_id == query_id) return std::move(r);
  }
  return std::nullopt;
}

std::optional<ReviewerCoding> load_coding(const Project& project, const std::string& query_id,
                                          const std::string& reviewer_id, Phase phase) {
  const std::string name = coding_name(query_id, reviewer_id, phase);
  if (!project.has_artifact(ArtifactKind::coding, name)) return std::nullopt;
  const auto response = find_response(project, query_id);
  if (!response) throw Error(ErrorCode::not_found, "no response for query '" + query_id + "'", {query_id});
  return coding_from_json(json::parse(project.read_artifact(ArtifactKind::coding, name)),
                          word_count(response->text));
}

void save_coding(Project& project, const ReviewerCoding& coding) {
  project.save_artifact(ArtifactKind::coding,
                        coding_name(coding.query_id, coding.reviewer_id, coding.phase),
                        to_json(coding).dump(2) + "\n");
}

std::optional<ReviewerCoding> effective_coding(const Project& project, const std::string& query_id,
                                               const std::string& reviewer_id) {
  if (auto c = load_coding(project, query_id, reviewer_id, Phase::post_discussion)) return c;
  return load_coding(project, query_id, reviewer_id, Phase::independent);
}

std::optional<std::pair<ReviewerCoding, ReviewerCoding>> coding_pair(const Project& project,
                                                                     const std::string& query_id,
                                                                     std::optional<Phase> phase) {
  std::vector<ReviewerCoding> found;
  for (const auto& reviewer : reviewers_of(project, query_id)) {
    auto c = phase ? load_coding(project, query_id, reviewer, *phase)
                   : effective_coding(project, query_id, reviewer);
    if (c) found.push_back(std::move(*c));
    if (found.size() == 2) return std::make_pair(std::move(found[0]), std::move(found[1]));
  }
  return std::nullopt;
}

FinalCoding reconcile_query(Project& project, const std::string& query_id) {
  const auto pair = coding_pair(project, query_id);
  if (!pair) {
    throw Error(ErrorCode::conflict, "query '" + query_id + "' needs codings from two reviewers",
                {query_id});
  }
  const FinalCoding final = reconcile(pair->first, pair->second);
  project.save_artifact(ArtifactKind::final_coding, query_id, to_json(final).dump(2) + "\n");
  return final;
}

std::vector<std::string> reconcile_all(Project& project) {
  std::vector<std::string> done;
  for (const auto& r : project_responses(project)) {
    if (!r.guideword) continue;
    if (!coding_pair(project, r.query_id)) continue;
    reconcile_query(project, r.query_id);
    done.push_back(r.query_id);
  }
  return done;
}

KappaListing kappa_listing(const Project& project, std::optional<Phase> phase) {
  KappaListing out;
  std::vector<std::pair<ReviewerCoding, ReviewerCoding>> pairs;
  for (const auto& r : project_responses(project)) {
    if (!r.guideword) continue;
    if (auto p = coding_pair(project, r.query_id, phase)) {
      if (p->first.assignments.empty()) continue;
      out.per_response.push_back(kappa(p->first, p->second));
      pairs.push_back(std::move(*p));
    }
  }
  if (!pairs.empty()) {
    std::vector<CodingPair> refs;
    for (const auto& [a, b] : pairs) refs.push_back({&a, &b});
    out.overall = kappa_overall(refs);
  }
  return out;
}

AnalysisInput analysis_input(const Project& project) {
  AnalysisInput in;
  std::map<std::string, std::string> fingerprints;  // session id -> fingerprint
  for (const auto& t : project_transcripts(project)) fingerprints[t.session_id] = t.model_fingerprint;

  std::set<std::string> used_sessions;
  std::map<std::string, std::size_t> token_counts;
  for (const auto& r : project_responses(project)) {
    // Ad-hoc follow-ups are conversation, not part of the query plan.
    if (!r.guideword) continue;
    if (std::find(in.grouping.labels.begin(), in.grouping.labels.end(), r.group_label) ==
        in.grouping.labels.end()) {
      in.grouping.labels.push_back(r.group_label);
    }
    in.grouping.group_of[r.query_id] = r.group_label;
    const std::size_t words = word_count(r.text);
    token_counts[r.query_id] = words;
    in.words.push_back({r.query_id, words});
    if (used_sessions.insert(r.session_id).second) {
      const std::string& fp = fingerprints[r.session_id];
      if (std::find(in.model_fingerprints.begin(), in.model_fingerprints.end(), fp) ==
          in.model_fingerprints.end()) {
        in.model_fingerprints.push_back(fp);
      }
    }
  }

  for (const auto& name : project.list_artifacts(ArtifactKind::final_coding)) {
    FinalCoding f = final_from_json(json::parse(project.read_artifact(ArtifactKind::final_coding, name)));
    const auto it = token_counts.find(f.query_id);
    if (it == token_counts.end()) {
      throw Error(ErrorCode::not_found, "final coding for unknown query '" + f.query_id + "'",
                  {f.query_id});
    }
    if (it->second != f.assignments.size()) {
      throw Error(ErrorCode::token_mismatch,
                  "final coding of '" + f.query_id + "' does not cover the response's tokens",
                  {f.query_id});
    }
    if (auto p = coding_pair(project, f.query_id)) in.reviewer_pairs.push_back(std::move(*p));
    in.finals.push_back(std::move(f));
  }
  return in;
}

std::string stats_text(const Project& project, double alpha) {
  const AnalysisInput in = analysis_input(project);
  if (in.finals.empty()) throw Error(ErrorCode::conflict, "no reconciled codings");
  return stats_report_text(compute_stats(in, alpha));
}

ReportBundle report_bundle(const Project& project, double alpha) {
  return build_bundle(compute_stats(analysis_input(project), alpha));
}

std::string report_markdown(const Project& project, double alpha) {
  return render_markdown(report_bundle(project, alpha));
}

}  // namespace coha
