#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coha/annotation.hpp"
#include "coha/model.hpp"
#include "coha/report.hpp"
#include "coha/store.hpp"
#include "coha/transcript.hpp"

// Project-level operations shared by the CLI and the review service.
namespace coha {

// Commits each transcript update through Project::save_artifact.
class ProjectTranscriptSink final : public TranscriptSink {
 public:
  ProjectTranscriptSink(Project& project, std::string model_file)
      : project_(&project), model_file_(std::move(model_file)) {}
  void commit(const Transcript& t) override;

 private:
  Project* project_;
  std::string model_file_;
};

struct StoredResponse {
  std::string query_id;
  std::string session_id;
  std::string model_file;
  std::string group_label;
  std::optional<std::string> guideword;  // nullopt for ad-hoc follow-ups
  std::string query_text;
  std::string text;
  bool refusal = false;
};

// Models in manifest order, keyed by file name.
std::vector<std::pair<std::string, SystemModel>> project_models(const Project& project);
std::vector<Transcript> project_transcripts(const Project& project);

// Every answered query in the project. When two sessions answer the same
// query id the one listed first in the manifest wins.
std::vector<StoredResponse> project_responses(const Project& project);
std::optional<StoredResponse> find_response(const Project& project, const std::string& query_id);

// Stored coding of one reviewer and phase, if any.
std::optional<ReviewerCoding> load_coding(const Project& project, const std::string& query_id,
                                          const std::string& reviewer_id, Phase phase);
void save_coding(Project& project, const ReviewerCoding& coding);

// The post-discussion coding when present, else the independent one.
std::optional<ReviewerCoding> effective_coding(const Project& project, const std::string& query_id,
                                               const std::string& reviewer_id);

// Codings of the first two reviewers who coded the query; `phase` nullopt
// selects each reviewer's effective coding.
std::optional<std::pair<ReviewerCoding, ReviewerCoding>> coding_pair(
    const Project& project, const std::string& query_id, std::optional<Phase> phase = std::nullopt);

// Throws coha::Error(conflict) when two codings are not available.
FinalCoding reconcile_query(Project& project, const std::string& query_id);
// Reconciles every query with two codings; returns the reconciled ids.
std::vector<std::string> reconcile_all(Project& project);

struct KappaListing {
  std::vector<AgreementResult> per_response;
  std::optional<AgreementResult> overall;
};
KappaListing kappa_listing(const Project& project, std::optional<Phase> phase = std::nullopt);

AnalysisInput analysis_input(const Project& project);

// stats/report.json payload for the current project state. Throws
// coha::Error(conflict, "no reconciled codings") when nothing is final.
std::string stats_text(const Project& project, double alpha = 0.01);
std::string report_markdown(const Project& project, double alpha = 0.01);
ReportBundle report_bundle(const Project& project, double alpha = 0.01);

}  // namespace coha
