// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "coha/description.hpp"
#include "coha/queries.hpp"
#include "coha/session.hpp"
#include "coha/stats.hpp"
#include "project_fixture.hpp"

using namespace coha;

namespace {

struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::fabs(got - want) <= tol)) {
      failures.push_back(what + ": got " + std::to_string(got) + ", want " + std::to_string(want));
    }
  }
};

double round_to(double v, int places) {
  const double f = std::pow(10.0, places);
  return std::round(v * f) / f;
}

// Independent pooled z for the worked example.
double oracle_z(double x1, double n1, double x2, double n2) {
  const double p = (x1 + x2) / (n1 + n2);
  return (x2 / n2 - x1 / n1) / std::sqrt(p * (1 - p) * (1 / n1 + 1 / n2));
}

void statistics_oracle(Check& c) {
  using namespace coha::stats;
  const std::vector<LabeledCounts> groups = {
      {"Lowest", {420, 343, 93, 0, 856}},
      {"Moderate", {1461, 1296, 553, 0, 3310}},
      {"Highest", {1430, 1832, 1828, 0, 5090}},
  };
  const double incorrect[] = {0.11, 0.17, 0.36};
  const double useful[] = {0.55, 0.53, 0.44};
  for (int i = 0; i < 3; ++i) {
    const GroupProportions p = proportions(groups[i].label, groups[i].counts);
    c.near(p.incorrect.value, incorrect[i], 0.005, groups[i].label + " p-incorrect");
    c.near(p.useful_of_correct.value, useful[i], 0.005, groups[i].label + " p-useful");
  }
  const ZTest z = two_proportion_z(93, 856, 553, 3310);
  c.near(z.z, 4.21, 0.01, "worked z");
  c.near(z.z, oracle_z(93, 856, 553, 3310), 1e-9, "worked z vs oracle");
  c.near(z.p_value / 2.56e-5, 1.0, 0.02, "worked p relative");
  c.near(round_to(bonferroni_alpha(0.01, 6), 5), 0.00167, 1e-12, "alpha0");

  const auto tests = run_test_battery(groups, 0.01);
  const Outcome R = Outcome::reject, D = Outcome::do_not_reject;
  const std::vector<Outcome> want = {R, R, R, D, R, R};
  c.expect(tests.size() == 6, "six tests");
  for (std::size_t i = 0; i < tests.size() && i < want.size(); ++i) {
    c.expect(tests[i].outcome == want[i], "outcome " + std::to_string(i));
  }
}

void table_shape_oracle(Check& c) {
  coha_test::TempDir dir;
  Project p = coha_test::lowest_project(dir / "p");
  coha_test::code_lowest(p);
  reconcile_all(p);
  const StatsReport r = compute_stats(analysis_input(p));
  c.expect(r.summary[0].total_words == 862, "total words 862");
  c.near(r.summary[0].mean_words, 143.7, 0.05, "lowest mean");
  c.expect(r.summary[0].n_queries == 6, "six responses");
  const PresenceRow& row = r.presence.groups.at(0);
  c.expect(row.responses == 6 && row.with_useful == 5 && row.with_not_useful == 5 && row.with_incorrect == 3,
           "presence 5/5/3 of 6");
  const CategoryCounts& counts = r.counts.groups.at(0).counts;
  c.expect(counts.correct_useful == 420 && counts.correct_not_useful == 343 && counts.incorrect == 93,
           "word codes 420/343/93");
}

void goldens(Check& c) {
  const SystemModel low = coha_test::load_fixture_model("low");
  c.expect(generate_queries(low).size() == 6, "six queries");
  c.expect(render_query(low, "enable", Guideword::too_early, "hot-outflow") ==
               "Could the Controller providing the enable signal too early to the Heater result in the "
               "temperature of the water flowing out of the tank exceeding 90 degrees C?",
           "too-early query");
  c.expect(render_description(low).part1_elements ==
               "Consider a system consisting of a Controller, Heater, Water Tank, and Thermometer.",
           "description part 1");
}

double oracle_kappa(const std::vector<Code>& a, const std::vector<Code>& b) {
  const double n = static_cast<double>(a.size());
  double agree = 0, ma[3] = {0, 0, 0}, mb[3] = {0, 0, 0};
  for (std::size_t k = 0; k < a.size(); ++k) {
    agree += a[k] == b[k];
    ma[static_cast<int>(a[k])] += 1;
    mb[static_cast<int>(b[k])] += 1;
  }
  double pe = 0;
  for (int i = 0; i < 3; ++i) pe += ma[i] * mb[i] / (n * n);
  const double po = agree / n;
  return pe >= 1.0 ? (po == 1.0 ? 1.0 : 0.0) : (po - pe) / (1 - pe);
}

void annotation_properties(Check& c) {
  constexpr Code U = Code::correct_useful, N = Code::correct_not_useful, I = Code::incorrect;
  const ReviewerCoding a10{"a", "q", {U, U, U, U, N, N, N, I, I, I}, Phase::independent, ""};
  const ReviewerCoding b10{"b", "q", {U, U, U, N, N, N, I, I, I, I}, Phase::independent, ""};
  c.near(kappa(a10, b10).kappa, 0.7015, 1e-3, "ten-token kappa");

  std::mt19937 rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t responses = 1 + rng() % 3;
    std::vector<ReviewerCoding> as, bs;
    std::vector<Code> all_a, all_b;
    for (std::size_t r = 0; r < responses; ++r) {
      const std::size_t n = 1 + rng() % 30;
      ReviewerCoding a{"a", "q" + std::to_string(r), {}, Phase::independent, ""};
      ReviewerCoding b{"b", a.query_id, {}, Phase::independent, ""};
      for (std::size_t k = 0; k < n; ++k) {
        a.assignments.push_back(static_cast<Code>(rng() % 3));
        b.assignments.push_back(rng() % 2 ? a.assignments.back() : static_cast<Code>(rng() % 3));
      }
      const FinalCoding f = reconcile(a, b);
      const CategoryCounts counts = count_codes(f);
      c.expect(counts.correct_useful + counts.correct_not_useful + counts.incorrect + counts.indeterminate == n,
               "conservation");
      c.expect(reconcile(b, a) == f, "reconcile symmetry");
      const double k = kappa(a, b).kappa;
      c.near(k, kappa(b, a).kappa, 1e-12, "kappa symmetry");
      c.expect(kappa(a, a).kappa == 1.0, "kappa(a,a)");
      c.expect(k >= -1.0 && k <= 1.0, "kappa range");
      all_a.insert(all_a.end(), a.assignments.begin(), a.assignments.end());
      all_b.insert(all_b.end(), b.assignments.begin(), b.assignments.end());
      as.push_back(std::move(a));
      bs.push_back(std::move(b));
    }
    std::vector<CodingPair> pairs;
    for (std::size_t r = 0; r < responses; ++r) pairs.push_back({&as[r], &bs[r]});
    c.near(kappa_overall(pairs).kappa, oracle_kappa(all_a, all_b), 1e-9, "pooled kappa");
    if (c.failures.size() > 20) return;
  }
}

struct Crash {};

class CrashingSink : public TranscriptSink {
 public:
  CrashingSink(std::filesystem::path path, int crash_commit, WriteStage stage)
      : path_(std::move(path)), crash_commit_(crash_commit), stage_(stage) {}
  void commit(const Transcript& t) override {
    const bool crash_now = commits_++ == crash_commit_;
    FileTranscriptSink inner(path_, [&](WriteStage s, const std::filesystem::path&) {
      if (crash_now && s == stage_) throw Crash{};
    });
    inner.commit(t);
  }

 private:
  std::filesystem::path path_;
  int crash_commit_;
  WriteStage stage_;
  int commits_ = 0;
};

void session_protocol(Check& c) {
  const SystemModel model = coha_test::load_fixture_model("low");
  const auto queries = generate_queries(model);
  SessionOptions o;
  o.session_id = "acceptance";
  auto run = [&](std::optional<Transcript> existing, const std::vector<Query>& qs) {
    ReplayProvider replay(coha_test::lowest_recording());
    return run_plan(replay, model, qs, nullptr, o, std::move(existing));
  };
  const std::string straight = to_jsonl(without_timestamps(run({}, queries)));
  c.expect(straight == to_jsonl(without_timestamps(run({}, queries))), "deterministic");

  const std::vector<Query> first(queries.begin(), queries.begin() + 3);
  const Transcript partial = run({}, first);
  c.expect(to_jsonl(without_timestamps(run(partial, queries))) == straight, "interrupt and resume");

  for (int k = 0; k < 14; ++k) {
    for (WriteStage stage : {WriteStage::temp_created, WriteStage::temp_partial, WriteStage::temp_written,
                             WriteStage::temp_synced, WriteStage::renamed}) {
      coha_test::TempDir dir;
      const auto path = dir / "s.jsonl";
      try {
        ReplayProvider replay(coha_test::lowest_recording());
        CrashingSink sink(path, k, stage);
        run_plan(replay, model, queries, &sink, o);
        c.expect(false, "crash not triggered at commit " + std::to_string(k));
      } catch (const Crash&) {
      }
      std::optional<Transcript> existing;
      if (std::filesystem::exists(path)) {
        existing = load_transcript(path);
        c.expect(check_transcript(*existing, true).empty(), "invariants after crash " + std::to_string(k));
      }
      ReplayProvider replay(coha_test::lowest_recording());
      FileTranscriptSink sink(path);
      const Transcript resumed = run_plan(replay, model, queries, &sink, o, existing);
      c.expect(check_transcript(resumed, false).empty(), "invariants after resume");
      c.expect(to_jsonl(without_timestamps(load_transcript(path))) == straight,
               "resume after crash " + std::to_string(k));
    }
  }
}

void store_durability(Check& c) {
  const std::string model = read_file(coha_test::source_path("models/water_heater_low.json"));
  const Transcript rec = coha_test::lowest_recording();
  std::vector<std::string> transcript_versions;
  for (std::size_t n = 2; n <= rec.messages.size(); n += 2) {
    Transcript t = rec;
    t.messages.resize(n);
    transcript_versions.push_back(to_jsonl(t));
  }

  int points = 0;
  for (int k = 0; points < 100; ++k) {
    coha_test::TempDir dir;
    bool crashed = false;
    {
      Project p = Project::init(dir / "p", "durability", {"alice", "bob"});
      int calls = 0;
      p.set_fault_hook([&](WriteStage, const std::filesystem::path&) {
        if (calls++ == k) throw Crash{};
      });
      try {
        p.save_artifact(ArtifactKind::model, coha_test::kLowModel, model);
        for (const auto& v : transcript_versions) {
          p.save_artifact(ArtifactKind::transcript, rec.session_id, v, coha_test::kLowModel);
        }
        coha_test::code_lowest(p);
      } catch (const Crash&) {
        crashed = true;
      }
    }
    if (!crashed) {
      c.expect(false, "ran out of crash points at " + std::to_string(points));
      return;
    }
    ++points;
    try {
      const Project loaded = Project::load(dir / "p");
      if (loaded.has_artifact(ArtifactKind::transcript, rec.session_id)) {
        const std::string on_disk = loaded.read_artifact(ArtifactKind::transcript, rec.session_id);
        bool known = false;
        for (const auto& v : transcript_versions) known = known || v == on_disk;
        c.expect(known, "torn transcript at point " + std::to_string(k));
      }
      for (const auto& name : loaded.list_artifacts(ArtifactKind::coding)) {
        c.expect(nlohmann::json::accept(loaded.read_artifact(ArtifactKind::coding, name)),
                 "unreadable coding " + name);
      }
      (void)project_responses(loaded);
    } catch (const std::exception& e) {
      c.expect(false, "unreadable project at point " + std::to_string(k) + ": " + e.what());
    }
  }
}

struct Criterion {
  const char* name;
  std::function<void(Check&)> run;
  double time_limit_seconds;  // 0: none
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"statistics oracle", statistics_oracle, 1.0},
      {"table-shape oracle", table_shape_oracle, 1.0},
      {"query/description goldens", goldens, 0},
      {"annotation properties", annotation_properties, 0},
      {"session protocol", session_protocol, 0},
      {"store durability", store_durability, 0},
  };
  int failed = 0;
  for (const auto& criterion : criteria) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criterion.time_limit_seconds > 0 && seconds >= criterion.time_limit_seconds) {
      c.failures.push_back("took " + std::to_string(seconds) + " s");
    }
    const bool ok = c.failures.empty();
    failed += !ok;
    std::printf("%s  %s (%.3f s)\n", ok ? "PASS" : "FAIL", criterion.name, seconds);
    for (std::size_t i = 0; i < c.failures.size() && i < 10; ++i) std::printf("      %s\n", c.failures[i].c_str());
  }
  return failed == 0 ? 0 : 1;
}
