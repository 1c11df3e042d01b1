#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hayeval/gateway.hpp"
#include "hayeval/meta_eval.hpp"
#include "hayeval/retrieval.hpp"
#include "hayeval/scoring.hpp"

namespace hayeval {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitPartial = 1, kExitConfig = 2 };

/// Retriever label that skips retrieval and passes every document in the
/// configured ordering.
inline constexpr std::string_view kFullContext = "full";

struct RunConfig {
    std::string haystack_path;
    std::vector<SubtopicId> subtopics;    // empty: all
    std::vector<std::string> retrievers;  // retriever kinds or "full"
    std::vector<std::string> summarizers;
    std::string judge = "sentinel";
    std::size_t context_budget = 15000;  // kUnlimitedBudget for no limit
    Placement ordering = Placement::random;
    std::uint64_t rng_seed = 0;
    std::string output_dir = "runs";
    std::string endpoints_path;  // endpoint registry; empty for offline runs
    std::string embed_endpoint;
    std::string long_embed_endpoint;
    std::string rerank_endpoint;
    std::string cache_dir;
    std::size_t workers = 4;

    /// Throws ConfigError on an invalid configuration.
    void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const fs::path& path);

/// Hash of the fields that determine results, plus the haystack hash.
std::string compute_run_id(const RunConfig& c, const std::string& haystack_sha256);

/// Gateway over the config's endpoint registry, or an empty registry.
std::unique_ptr<Gateway> make_gateway(const std::string& endpoints_path, const std::string& cache_dir = {});

// ---------------------------------------------------------------------------

struct SynthesizeResult {
    fs::path haystack_path;
    fs::path log_path;
    std::size_t n_documents = 0;
    std::size_t n_insights = 0;
};

/// Scenario file: {"topic": {...}, "config": {...}, "generator": "sentinel" | endpoint,
/// "verifier": "sentinel" | endpoint, "stage_endpoints": {stage: endpoint},
/// "endpoints": registry path, "workers": n}. On a synthesis failure the
/// partial state is written to "<out>.partial/" and the error rethrown.
SynthesizeResult cmd_synthesize(const fs::path& scenario_path, const fs::path& out_path,
                                std::optional<std::uint64_t> seed_override = std::nullopt);

struct TaskRecord {
    std::string id;
    SubtopicId subtopic;
    std::string retriever;
    std::string summarizer;
    std::string status;  // "ok", "failed", "pending"
    std::string error;
};

struct RunOutcome {
    fs::path run_dir;
    std::string run_id;
    std::vector<TaskRecord> tasks;
    std::size_t executed = 0;  // tasks run in this invocation
    int exit_code = kExitOk;
};

struct RunOptions {
    /// Stop after this many newly executed tasks, leaving the rest pending.
    std::optional<std::size_t> max_new_tasks;
};

/// Generates (and persists) one summary per subtopic x retriever x
/// summarizer. Completed tasks found in the run directory are skipped.
RunOutcome cmd_run(const RunConfig& config, const RunOptions& options = {});

struct EvaluateOutcome {
    std::size_t n_reports = 0;
    std::size_t n_incomplete = 0;
    std::vector<AggregateRow> rows;
    std::string table_tsv;
    std::string table_text;
    int exit_code = kExitOk;
};

/// Judges every completed task of a run and writes judgments/, reports/
/// and tables/. `judge_override` replaces the configured judge.
EvaluateOutcome cmd_evaluate(const fs::path& run_dir, const std::string& judge_override = {});

/// Re-renders the aggregate tables from the persisted per-summary reports.
EvaluateOutcome report(const fs::path& run_dir);

struct PositionBiasRow {
    std::string summarizer;
    double top = 0.0, bottom = 0.0, random = 0.0;
    double sensitivity = 0.0;
    bool complete = true;
};

struct PositionBiasOutcome {
    std::vector<PositionBiasRow> rows;
    std::vector<fs::path> run_dirs;  // one per ordering: top, bottom, random
    std::string table_tsv;
    std::string table_text;
    int exit_code = kExitOk;
};

/// Runs the config once per ordering with full context and reports joint
/// scores per ordering plus the sensitivity column.
PositionBiasOutcome cmd_position_bias(const RunConfig& config);

struct HumanScoreOutcome {
    std::vector<SnapshotRow> rows;
    std::vector<std::string> warnings;  // skipped lines
    std::string table_tsv;
};

/// Scores every snapshot in the file (all sessions, in file order). Malformed
/// lines are skipped with a warning; an empty result is an InputError.
HumanScoreOutcome cmd_human_score(const fs::path& snapshot_path, const fs::path& haystack_path,
                                  const SubtopicId& subtopic, const std::string& judge,
                                  const std::string& endpoints_path = {});

}  // namespace hayeval
