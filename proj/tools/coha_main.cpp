#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "coha/description.hpp"
#include "coha/error.hpp"
#include "coha/model.hpp"
#include "coha/providers.hpp"
#include "coha/queries.hpp"
#include "coha/report.hpp"
#include "coha/service.hpp"
#include "coha/session.hpp"
#include "coha/store.hpp"
#include "coha/transcript.hpp"
#include "coha/workflow.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

coha::ReviewService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

struct ProviderArgs {
  coha::ProviderConfig config;
  std::string fixture;

  void add(CLI::App* cmd) {
    cmd->add_option("--provider", config.provider_name, "live, replay or echo")
        ->check(CLI::IsMember({"live", "replay", "echo"}));
    cmd->add_option("--fixture", fixture, "recorded transcript for the replay provider");
    cmd->add_option("--endpoint", config.endpoint, "chat-completions URL (live)");
    cmd->add_option("--model-id", config.model_identifier, "model identifier (live)");
    cmd->add_option("--auth-env", config.auth_env_var, "environment variable holding the API token");
    cmd->add_option("--timeout", config.timeout_seconds, "request timeout in seconds");
    cmd->add_option("--retries", config.max_retries, "retries on network errors");
  }

  coha::ProviderConfig resolved() const {
    coha::ProviderConfig c = config;
    c.fixture = fixture;
    c.check();
    return c;
  }
};

struct QueryArgs {
  std::string guidewords;
  bool exclude_duration = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--guidewords", guidewords, "comma-separated guideword list");
    cmd->add_flag("--exclude-duration-for-discrete", exclude_duration,
                  "skip stopped-too-soon and applied-too-long for discrete actions");
  }

  coha::QueryOptions options(coha::QueryOptions base = {}) const {
    if (!guidewords.empty()) base.enabled = coha::parse_guideword_list(guidewords);
    if (exclude_duration) base.exclude_duration_for_discrete = true;
    return base;
  }
};

void write_stdout(const std::string& text) {
  std::fwrite(text.data(), 1, text.size(), stdout);
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  }
  return coha::read_file(path);
}

json agreement_json(const coha::AgreementResult& r) {
  return {{"scope", r.scope},  {"kappa", r.kappa},   {"p_o", r.observed},
          {"p_e", r.expected}, {"tokens", r.tokens}, {"degenerate", r.degenerate}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coha: hazard analysis workbench"};
  app.require_subcommand(1);

  // init
  std::string init_path, init_name;
  std::vector<std::string> init_reviewers;
  auto* init = app.add_subcommand("init", "create an empty project directory");
  init->add_option("project", init_path)->required();
  init->add_option("--name", init_name, "project name");
  init->add_option("--reviewer", init_reviewers, "reviewer id (repeatable)");

  // describe
  std::string model_path;
  int part = 0;
  auto* describe = app.add_subcommand("describe", "print the system description");
  describe->add_option("model", model_path)->required();
  describe->add_option("--part", part, "print one part only")->check(CLI::Range(1, 4));

  // queries
  QueryArgs query_args;
  bool text_only = false;
  auto* queries = app.add_subcommand("queries", "list the generated queries");
  queries->add_option("model", model_path)->required();
  query_args.add(queries);
  queries->add_flag("--text-only", text_only, "one query per line");

  // run
  ProviderArgs provider_args;
  QueryArgs run_query_args;
  std::string run_project, run_session, run_out;
  auto* run = app.add_subcommand("run", "ask every query and record the transcript");
  run->add_option("model", model_path)->required();
  provider_args.add(run);
  run_query_args.add(run);
  run->add_option("--project", run_project, "store the model and transcript in this project");
  run->add_option("--session", run_session, "session id; an existing one is resumed");
  run->add_option("--out", run_out, "transcript path (default transcripts/<session-id>.jsonl)");

  // code
  std::string project_path, code_reviewer, code_query, code_phase = "independent", code_spans;
  auto* code = app.add_subcommand("code", "store one reviewer's coding of a response");
  code->add_option("project", project_path)->required();
  code->add_option("--reviewer", code_reviewer)->required();
  code->add_option("--query", code_query)->required();
  code->add_option("--phase", code_phase)->check(CLI::IsMember({"independent", "post-discussion"}));
  code->add_option("--spans", code_spans, "JSON file ({spans, notes} or a span array); - for stdin")
      ->required();

  // reconcile
  std::string reconcile_query_id;
  auto* reconcile = app.add_subcommand("reconcile", "merge reviewer codings into final codings");
  reconcile->add_option("project", project_path)->required();
  reconcile->add_option("--query", reconcile_query_id, "one query only");

  // kappa
  bool per_response = false, overall = false;
  std::string kappa_phase;
  auto* kappa = app.add_subcommand("kappa", "inter-rater agreement");
  kappa->add_option("project", project_path)->required();
  auto* per_flag = kappa->add_flag("--per-response", per_response);
  kappa->add_flag("--overall", overall)->excludes(per_flag);
  kappa->add_option("--phase", kappa_phase, "independent or post-discussion (default: latest)")
      ->check(CLI::IsMember({"independent", "post-discussion"}));

  // stats
  double alpha = 0.01;
  auto* stats = app.add_subcommand("stats", "write stats/report.json");
  stats->add_option("project", project_path)->required();
  stats->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0));

  // report
  std::string report_out, report_csv;
  auto* report = app.add_subcommand("report", "render the markdown report or one table as CSV");
  report->add_option("project", project_path)->required();
  report->add_option("--out", report_out, "markdown output path");
  report->add_option("--csv", report_csv, "table to print as CSV");
  report->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0));

  // serve
  std::string bind_address = "127.0.0.1:8714";
  ProviderArgs serve_provider;
  auto* serve = app.add_subcommand("serve", "run the review API");
  serve->add_option("project", project_path)->required();
  serve->add_option("--bind", bind_address, "host:port");
  serve->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0));
  serve_provider.add(serve);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*init) {
      const std::string name = init_name.empty() ? fs::path(init_path).filename().string() : init_name;
      coha::Project::init(init_path, name, init_reviewers);
      std::cout << "initialized " << init_path << "\n";
    } else if (*describe) {
      const coha::DescriptionText d = coha::render_description(coha::load_model_file(model_path));
      write_stdout((part == 0 ? d.full_text : d.part(part)) + "\n");
    } else if (*queries) {
      const auto qs = coha::generate_queries(coha::load_model_file(model_path), query_args.options());
      if (text_only) {
        for (const auto& q : qs) write_stdout(q.text + "\n");
      } else {
        json out = json::array();
        for (const auto& q : qs) out.push_back(coha::to_json(q));
        write_stdout(out.dump(2) + "\n");
      }
    } else if (*run) {
      const coha::SystemModel model = coha::load_model_file(model_path);
      auto provider = coha::make_provider(provider_args.resolved());
      coha::SessionOptions options;
      options.session_id = run_session.empty() ? coha::new_session_id() : run_session;
      options.max_retries = provider_args.config.max_retries;

      if (!run_project.empty()) {
        coha::Project project = coha::Project::load(run_project, coha::Access::writer);
        const std::string model_file = fs::path(model_path).filename().string();
        const auto models = project.manifest().models;
        if (std::find(models.begin(), models.end(), model_file) == models.end()) {
          project.save_artifact(coha::ArtifactKind::model, model_file, coha::serialize_model(model));
        }
        const auto qs = coha::generate_queries(model, run_query_args.options(project.query_options()));
        std::optional<coha::Transcript> existing;
        if (project.has_artifact(coha::ArtifactKind::transcript, options.session_id)) {
          existing = coha::parse_jsonl(
              project.read_artifact(coha::ArtifactKind::transcript, options.session_id));
        }
        coha::ProjectTranscriptSink sink(project, model_file);
        coha::run_plan(*provider, model, qs, &sink, options, existing);
        std::cout << options.session_id << "\n";
      } else {
        const fs::path out =
            run_out.empty() ? fs::path("transcripts") / (options.session_id + ".jsonl") : fs::path(run_out);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        std::optional<coha::Transcript> existing;
        if (fs::exists(out)) existing = coha::load_transcript(out);
        coha::FileTranscriptSink sink(out);
        const auto qs = coha::generate_queries(model, run_query_args.options());
        coha::run_plan(*provider, model, qs, &sink, options, existing);
        std::cout << out.string() << "\n";
      }
    } else if (*code) {
      coha::Project project = coha::Project::load(project_path, coha::Access::writer);
      const auto response = coha::find_response(project, code_query);
      if (!response) {
        throw coha::Error(coha::ErrorCode::not_found, "unknown query '" + code_query + "'", {code_query});
      }
      json input;
      try {
        input = json::parse(read_input(code_spans));
      } catch (const json::exception& e) {
        throw coha::Error(coha::ErrorCode::malformed_document, std::string("malformed spans: ") + e.what());
      }
      const json spans_json = input.is_array() ? input : input.at("spans");
      const std::string notes = input.is_object() ? input.value("notes", "") : "";
      const auto spans = coha::spans_from_json(spans_json);
      const auto coding =
          coha::coding_from_spans(code_reviewer, code_query, coha::word_count(response->text), spans,
                                  coha::phase_from_string(code_phase), notes);
      const auto reviewers = project.manifest().reviewers;
      if (std::find(reviewers.begin(), reviewers.end(), code_reviewer) == reviewers.end()) {
        throw coha::Error(coha::ErrorCode::unauthorized,
                          "'" + code_reviewer + "' is not a registered reviewer", {code_reviewer});
      }
      coha::save_coding(project, coding);
    } else if (*reconcile) {
      coha::Project project = coha::Project::load(project_path, coha::Access::writer);
      if (!reconcile_query_id.empty()) {
        coha::reconcile_query(project, reconcile_query_id);
        std::cout << reconcile_query_id << "\n";
      } else {
        for (const auto& id : coha::reconcile_all(project)) std::cout << id << "\n";
      }
    } else if (*kappa) {
      const coha::Project project = coha::Project::load(project_path);
      std::optional<coha::Phase> phase;
      if (!kappa_phase.empty()) phase = coha::phase_from_string(kappa_phase);
      const auto listing = coha::kappa_listing(project, phase);
      json out = json::object();
      if (!overall) {
        out["per_response"] = json::array();
        for (const auto& r : listing.per_response) out["per_response"].push_back(agreement_json(r));
      }
      if (!per_response) out["overall"] = listing.overall ? agreement_json(*listing.overall) : json(nullptr);
      write_stdout(out.dump(2) + "\n");
    } else if (*stats) {
      coha::Project project = coha::Project::load(project_path, coha::Access::writer);
      const std::string text = coha::stats_text(project, alpha);
      project.save_artifact(coha::ArtifactKind::stats, "report", text);
      std::cout << project.artifact_path(coha::ArtifactKind::stats, "report").string() << "\n";
    } else if (*report) {
      const coha::Project project = coha::Project::load(project_path);
      const coha::ReportBundle bundle = coha::report_bundle(project, alpha);
      if (!report_csv.empty()) {
        write_stdout(coha::export_csv(bundle, report_csv));
      } else if (!report_out.empty()) {
        coha::atomic_write_file(report_out, coha::render_markdown(bundle));
      } else {
        write_stdout(coha::render_markdown(bundle));
      }
    } else if (*serve) {
      const auto colon = bind_address.rfind(':');
      if (colon == std::string::npos) {
        throw coha::Error(coha::ErrorCode::invalid_argument, "--bind expects host:port");
      }
      const std::string host = bind_address.substr(0, colon);
      const int port = std::stoi(bind_address.substr(colon + 1));
      coha::ServiceOptions options;
      options.provider = serve_provider.resolved();
      options.alpha = alpha;
      coha::ReviewService service(coha::Project::load(project_path, coha::Access::writer), options);
      const int bound = service.bind(host, port);
      std::cout << "listening on http://" << host << ":" << bound << "\n";
      const coha::Project view = coha::Project::load(project_path);
      for (const auto& r : view.manifest().reviewers) {
        std::cout << "token " << r << " " << service.issue_token(r) << "\n";
      }
      std::cout.flush();
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.run();
      g_service = nullptr;
    }
  } catch (const coha::Error& e) {
    std::cerr << "error: " << coha::to_string(e.code()) << ": " << e.what() << "\n";
    for (const auto& d : e.details()) std::cerr << "  " << d << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
