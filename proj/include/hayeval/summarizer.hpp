#pragma once

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hayeval/gateway.hpp"
#include "hayeval/haystack.hpp"
#include "hayeval/templates.hpp"

namespace hayeval {

struct SummaryRequest {
    std::string haystack_id;
    SubtopicId subtopic_id;
    std::string query;
    std::vector<DocId> context_document_ids;  // in prompt order
    int n_bullets_required = 0;               // = insights in the subtopic
    std::string summarizer;
};

SummaryRequest make_summary_request(const Haystack& h, const Subtopic& subtopic, std::vector<DocId> context,
                                    std::string summarizer);

struct Bullet {
    int index = 0;  // 1-based, as shown to the judge
    std::string text;
    std::set<int> cited_document_ids;
    bool operator==(const Bullet&) const = default;
};

struct CandidateSummary {
    std::string raw_text;
    std::vector<Bullet> bullets;
    double words_per_bullet = 0.0;
    int ignored_bracket_groups = 0;  // bracketed text that was not an integer list, e.g. "[sic]"
};

/// Task prompt: documents in the given order with numbered headers, the
/// query, the bullet count and the bracketed citation format.
/// Throws InputError when the context is empty.
std::string build_summary_prompt(const SummaryRequest& request, const Haystack& h,
                                 const TemplateSet& templates = TemplateSet::builtin());

/// Split on line breaks, drop blank lines, strip list markers, and collect
/// citations from every bracketed integer list. Throws ParseError when no
/// bullet remains.
CandidateSummary parse_summary(std::string_view raw_text);

/// One "- <text>" line per bullet; parse_summary(render_summary(s)) keeps
/// the bullets of s.
std::string render_summary(const CandidateSummary& s);

/// Cited ids outside 1..n_documents. They stay in the citation sets and
/// count as precision misses.
std::set<int> out_of_range_citations(const CandidateSummary& s, std::size_t n_documents);

struct SummarizerOutput {
    std::string text;
    UsageRecord usage;
};

/// A system under test. Offline implementations may read the haystack's
/// ground truth; model-backed ones only see the prompt.
class Summarizer {
public:
    virtual ~Summarizer() = default;
    virtual SummarizerOutput summarize(const SummaryRequest& request, const std::string& prompt, const Haystack& h) = 0;
};

class GatewaySummarizer : public Summarizer {
public:
    GatewaySummarizer(Gateway& gateway, std::string endpoint, GenerateParams params = {});
    SummarizerOutput summarize(const SummaryRequest& request, const std::string& prompt, const Haystack& h) override;

private:
    Gateway& gateway_;
    std::string endpoint_;
    GenerateParams params_;
};

/// Emits every subtopic insight verbatim that has a gold document in
/// context, citing exactly those documents. Independent of document order.
class PerfectSummarizer : public Summarizer {
public:
    SummarizerOutput summarize(const SummaryRequest& request, const std::string& prompt, const Haystack& h) override;
};

/// Like PerfectSummarizer but only reads the first `k` context documents.
class FirstKSummarizer : public Summarizer {
public:
    explicit FirstKSummarizer(std::size_t k) : k_(k) {}
    SummarizerOutput summarize(const SummaryRequest& request, const std::string& prompt, const Haystack& h) override;

private:
    std::size_t k_;
};

/// Deterministically imperfect: skips every third insight, paraphrases
/// another third partially, and cites imprecisely.
class NoisySummarizer : public Summarizer {
public:
    SummarizerOutput summarize(const SummaryRequest& request, const std::string& prompt, const Haystack& h) override;
};

/// "mock:perfect", "mock:noisy", "mock:first<k>", otherwise a gateway endpoint name.
std::unique_ptr<Summarizer> make_summarizer(const std::string& name, Gateway* gateway);

struct SummarizationResult {
    std::string raw_text;
    CandidateSummary summary;
    UsageRecord usage;
};

/// Builds the prompt, calls the summarizer, hands the raw text to `persist_raw`
/// (before parsing), then parses. Summarizer failures surface as RunError;
/// parse failures as ParseError carrying the raw text.
SummarizationResult run_summarization(const SummaryRequest& request, const Haystack& h, Summarizer& summarizer,
                                      const TemplateSet& templates = TemplateSet::builtin(),
                                      const std::function<void(const std::string&)>& persist_raw = {});

nlohmann::json to_json(const CandidateSummary& s);

}  // namespace hayeval
