#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hayeval/haystack.hpp"
#include "hayeval/judge.hpp"
#include "hayeval/scoring.hpp"

namespace hayeval {

/// A coverage label from a human annotator or an automatic judge, keyed by
/// (summary_id, insight_id).
struct CoverageLabel {
    std::string summary_id;
    InsightId insight_id;
    CoverageLevel level = CoverageLevel::none;
    std::optional<int> linked_bullet_index;
    std::string annotator_id;
};

/// One label per line: {"summary_id", "insight_id", "coverage", "bullet", "annotator"}.
std::vector<CoverageLabel> load_labels_jsonl(const std::string& path);
std::vector<CoverageLabel> parse_labels_jsonl(std::string_view text);

/// Pearson correlation; nullopt when either side has zero variance.
/// Throws InsufficientDataError for fewer than two pairs or mismatched lengths.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

struct CorrelationResult {
    std::optional<double> value;  // nullopt: undefined (zero variance)
    std::size_t n_pairs = 0;
    std::string method = "pearson";
};

/// Correlation of point-mapped coverage over aligned (summary, insight)
/// pairs. Throws InsufficientDataError with fewer than two aligned pairs.
CorrelationResult coverage_correlation(const std::vector<CoverageLabel>& human,
                                       const std::vector<CoverageLabel>& automatic);

struct LinkingResult {
    std::optional<double> accuracy;  // percent; nullopt when no pair is covered on both sides
    std::size_t n_pairs = 0;
};

LinkingResult linking_accuracy(const std::vector<CoverageLabel>& human, const std::vector<CoverageLabel>& automatic);

struct SummaryCoverage {
    std::string summary_id;
    std::string summarizer;
    double coverage = 0.0;
    double words_per_bullet = 0.0;
};

struct BiasDelta {
    std::string summarizer;
    double delta = 0.0;  // mean(auto - human)
    std::size_t n_pairs = 0;
};

struct BiasResult {
    std::vector<BiasDelta> per_summarizer;  // sorted by summarizer
    std::vector<std::string> warnings;      // unpaired summaries
};

BiasResult model_bias_delta(const std::vector<SummaryCoverage>& automatic, const std::vector<SummaryCoverage>& human);

struct LengthBiasPoint {
    double words_per_bullet = 0.0;
    double score = 0.0;
    std::optional<double> delta;  // auto - human when a human score exists
};

struct LengthBiasResult {
    std::optional<double> length_to_score;
    std::optional<double> length_to_delta;
};

LengthBiasResult length_bias(const std::vector<LengthBiasPoint>& points);

/// max(|top - random|, |bottom - random|)
double position_sensitivity(double joint_random, double joint_top, double joint_bottom);

struct SnapshotSeries {
    std::string session_id;
    std::vector<std::pair<int, std::string>> snapshots;  // (minutes elapsed, raw summary)
};

/// One record per line: {"session", "minutes", "payload"}. A malformed
/// line, or minutes that do not increase within a session, throws
/// InputError; with `warnings` such lines are skipped and noted instead.
std::vector<SnapshotSeries> parse_snapshots_jsonl(std::string_view text, std::vector<std::string>* warnings = nullptr);
std::vector<SnapshotSeries> load_snapshots_jsonl(const std::string& path, std::vector<std::string>* warnings = nullptr);

struct SnapshotRow {
    int minutes = 0;
    ScoreReport report;
    bool unparseable = false;
};

/// Scores every snapshot against the subtopic. Unparseable snapshots
/// become all-zero rows with the flag set.
std::vector<SnapshotRow> score_snapshots(const SnapshotSeries& series, const Haystack& h, const Subtopic& subtopic,
                                         CoverageJudge& judge, std::size_t workers = 1);

/// minutes, coverage, citation_p, citation_r, f1, joint, flag
std::string render_snapshot_tsv(const std::vector<SnapshotRow>& rows);

}  // namespace hayeval
