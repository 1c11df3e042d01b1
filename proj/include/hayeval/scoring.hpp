#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "hayeval/haystack.hpp"
#include "hayeval/judge.hpp"
#include "hayeval/summarizer.hpp"

namespace hayeval {

using Rational = boost::multiprecision::cpp_rational;

double to_double(const Rational& r);
/// "n/d" (or "n" when the denominator is 1).
std::string to_fraction_string(const Rational& r);
Rational parse_fraction(std::string_view s);
/// Round half away from zero to `decimals` places.
std::string render_fixed(const Rational& r, int decimals = 1);
std::string render_fixed(double v, int decimals = 1);

struct CitationPRF {
    Rational precision, recall, f1;
    double p() const { return to_double(precision); }
    double r() const { return to_double(recall); }
    double f() const { return to_double(f1); }
};

/// Precision against `cited`, recall against `gold`, harmonic-mean F1.
/// Empty `cited` scores (0,0,0). Throws InputError when `gold` is empty.
CitationPRF citation_prf(const std::set<int>& cited, const std::set<int>& gold);

/// Mean coverage points. Throws InputError on an empty list or a repeated insight id.
double coverage_score(const std::vector<CoverageJudgment>& judgments);
Rational coverage_score_exact(const std::vector<CoverageJudgment>& judgments);

struct InsightScore {
    InsightId insight_id;
    CoverageLevel level = CoverageLevel::none;
    int coverage_points = 0;
    std::optional<int> linked_bullet_index;
    std::optional<CitationPRF> citation;  // absent when NONE
    Rational joint_points = 0;
};

struct ScoreReport {
    Rational coverage = 0, citation = 0, precision = 0, recall = 0, joint = 0;  // all in [0,100]
    double words_per_bullet = 0.0;
    std::vector<InsightScore> per_insight;
    std::size_t covered_count = 0;
    bool citation_undefined = false;  // no covered insight; citation reported as 0
    bool incomplete = false;          // some insights could not be judged
    std::vector<std::string> errors;

    double coverage_score() const { return to_double(coverage); }
    double citation_score() const { return to_double(citation); }
    double citation_precision() const { return to_double(precision); }
    double citation_recall() const { return to_double(recall); }
    double joint_score() const { return to_double(joint); }
};

/// Per-insight input for the score arithmetic when citations are already reduced to P/R/F1.
struct InsightOutcome {
    InsightId insight_id;
    CoverageLevel level = CoverageLevel::none;
    std::optional<CitationPRF> citation;  // required unless NONE
    std::optional<int> linked_bullet_index;
};

/// Coverage over all insights, citation P/R/F1 over covered ones, joint
/// over all. Throws InputError on an empty list, a repeated id, or a
/// covered insight without citation figures.
ScoreReport aggregate_insights(const std::vector<InsightOutcome>& outcomes, double words_per_bullet = 0.0);

/// Citations of each covered insight come from its linked bullet only.
/// Throws InputError when a link is out of range, a judgment is repeated,
/// or an insight has no gold entry.
ScoreReport score_summary(const std::vector<CoverageJudgment>& judgments, const std::vector<Bullet>& bullets,
                          const std::map<InsightId, std::set<DocId>>& gold, double words_per_bullet = 0.0);

/// Report for a summary that could not be scored (unparseable, or judging failed).
ScoreReport incomplete_report(const std::vector<InsightId>& insight_ids, std::string error);

struct JudgedSummary {
    std::vector<CoverageJudgment> judgments;  // in subtopic insight order
    ScoreReport report;
};

/// Judges every subtopic insight against the summary (up to `workers`
/// concurrent judge calls) and scores the result. A judging failure marks
/// the report incomplete instead of throwing.
JudgedSummary evaluate_summary(const Haystack& h, const Subtopic& subtopic, const CandidateSummary& summary,
                               CoverageJudge& judge, std::size_t workers = 1);

nlohmann::json to_json(const ScoreReport& r);
ScoreReport score_report_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Run-level aggregation

struct LabeledReport {
    std::string summarizer;
    std::string retriever;
    ScoreReport report;
};

struct AggregateRow {
    std::string summarizer;
    std::string retriever;
    std::size_t n_reports = 0;  // 0 marks an empty cell
    std::size_t n_incomplete = 0;
    Rational coverage = 0, citation = 0, joint = 0;
    double words_per_bullet = 0.0;
};

/// Unweighted mean per summarizer x retriever cell over the full grid of
/// labels seen in `reports`, in order of first appearance.
std::vector<AggregateRow> aggregate_run(const std::vector<LabeledReport>& reports);

/// Tab-separated, one row per cell; empty cells print "-".
std::string render_aggregate_tsv(const std::vector<AggregateRow>& rows);
/// Column-aligned table for terminals and report files.
std::string render_aggregate_table(const std::vector<AggregateRow>& rows);

}  // namespace hayeval
