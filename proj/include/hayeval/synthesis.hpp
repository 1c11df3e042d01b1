#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hayeval/errors.hpp"
#include "hayeval/gateway.hpp"
#include "hayeval/haystack.hpp"
#include "hayeval/rng.hpp"
#include "hayeval/templates.hpp"

namespace hayeval {

enum class SynthesisStage {
    subtopics,
    subtopic_overlap,
    insights,
    insight_classify,
    document,
    document_edit,
    chapter,
    query,
};

std::string_view to_string(SynthesisStage s);

/// One call to a text generator. `prompt` is the rendered template; `vars`
/// are the values it was rendered from, so offline generators can act on
/// structure instead of re-parsing prose.
struct GenerationRequest {
    SynthesisStage stage = SynthesisStage::subtopics;
    std::string prompt;
    TemplateVars vars;
    std::string target;  // what the call is for, e.g. "st03" or "doc 12"
    int attempt = 1;
    std::uint64_t seed = 0;
};

/// Must be safe for concurrent calls: document slots are generated in parallel.
class TextGenerator {
public:
    virtual ~TextGenerator() = default;
    virtual std::string generate(const GenerationRequest& request) = 0;
};

class FunctionGenerator : public TextGenerator {
public:
    using Fn = std::function<std::string(const GenerationRequest&)>;
    explicit FunctionGenerator(Fn fn) : fn_(std::move(fn)) {}
    std::string generate(const GenerationRequest& request) override { return fn_(request); }

private:
    Fn fn_;
};

/// Sends prompts through the gateway. Each stage may use its own endpoint.
class GatewayGenerator : public TextGenerator {
public:
    GatewayGenerator(Gateway& gateway, std::string default_endpoint,
                     std::map<SynthesisStage, std::string> stage_endpoints = {});
    std::string generate(const GenerationRequest& request) override;

private:
    Gateway& gateway_;
    std::string default_endpoint_;
    std::map<SynthesisStage, std::string> stage_endpoints_;
};

/// Deterministic offline generator. Insights carry unique reference codes and
/// documents embed the assigned insight sentences verbatim, so a
/// SentinelVerifier can check placements exactly.
class SentinelGenerator : public TextGenerator {
public:
    std::string generate(const GenerationRequest& request) override;
};

/// Reports which candidate insights a text expresses.
class InsightVerifier {
public:
    virtual ~InsightVerifier() = default;
    virtual std::set<InsightId> present(const std::string& text, const std::vector<const Insight*>& candidates) = 0;
};

/// Exact match on normalized insight text.
class SentinelVerifier : public InsightVerifier {
public:
    std::set<InsightId> present(const std::string& text, const std::vector<const Insight*>& candidates) override;
};

/// LLM judge over the insight_presence template; expects a JSON list of
/// candidate numbers. Malformed replies are retried.
class LlmVerifier : public InsightVerifier {
public:
    LlmVerifier(Gateway& gateway, std::string endpoint, TemplateSet templates = TemplateSet::builtin(),
                int max_malformed_retries = 3);
    std::set<InsightId> present(const std::string& text, const std::vector<const Insight*>& candidates) override;

private:
    Gateway& gateway_;
    std::string endpoint_;
    TemplateSet templates_;
    int max_malformed_retries_;
};

/// Assigns each insight text to one of the named subtopics (index into
/// `subtopic_names`), or nullopt when it cannot.
class InsightClassifier {
public:
    virtual ~InsightClassifier() = default;
    virtual std::vector<std::optional<std::size_t>> classify(const std::vector<std::string>& subtopic_names,
                                                             const std::vector<std::string>& insight_texts) = 0;
};

/// Classification through the generator's insight_classify stage.
class GeneratorClassifier : public InsightClassifier {
public:
    GeneratorClassifier(TextGenerator& generator, TemplateSet templates = TemplateSet::builtin())
        : generator_(generator), templates_(std::move(templates)) {}
    std::vector<std::optional<std::size_t>> classify(const std::vector<std::string>& subtopic_names,
                                                     const std::vector<std::string>& insight_texts) override;

private:
    TextGenerator& generator_;
    TemplateSet templates_;
};

struct SynthesisLogRecord {
    std::string stage;
    std::string target;
    int attempt = 1;
    bool accepted = false;
    std::string note;
};

/// One structured record per generator call. Thread-safe.
class SynthesisLog {
public:
    void add(SynthesisLogRecord r);
    void append(const SynthesisLog& other);
    std::vector<SynthesisLogRecord> records() const;
    /// One JSON object per line.
    std::string to_jsonl() const;

private:
    mutable std::mutex mu_;
    std::vector<SynthesisLogRecord> records_;
};

class SynthesisError : public Error {
public:
    SynthesisError(std::string stage, const std::string& what, nlohmann::json partial = nlohmann::json::object())
        : Error("[" + stage + "] " + what), stage(std::move(stage)), partial_state(std::move(partial)) {}
    std::string stage;
    nlohmann::json partial_state;
};

class DocumentVerificationError : public SynthesisError {
public:
    DocumentVerificationError(DocId doc, std::set<InsightId> missing_ids, std::set<InsightId> leaked_ids, int attempts);
    DocId document_id;
    std::set<InsightId> missing;
    std::set<InsightId> leaked;
    int attempts;
};

struct InsightAssignment {
    std::vector<std::set<InsightId>> per_document;  // index i is document i + 1
    std::map<InsightId, int> placement_counts;
};

/// Throws ConfigError when the configuration cannot place every insight
/// min_repeats times. `total_insights` is the planned insight count.
void check_feasibility(const SynthesisConfig& config, std::size_t total_insights);

std::vector<Subtopic> generate_subtopics(const Topic& topic, TextGenerator& generator, const SynthesisConfig& config,
                                         const TemplateSet& templates, SynthesisLog* log = nullptr);

/// Insight drafts for one subtopic, ids "<subtopic>.iNN". `siblings` holds
/// every other subtopic with the insights generated for it so far.
std::vector<Insight> generate_insights(const Topic& topic, const Subtopic& subtopic,
                                       const std::vector<std::pair<Subtopic, std::vector<Insight>>>& siblings,
                                       TextGenerator& generator, InsightClassifier& classifier,
                                       const SynthesisConfig& config, const TemplateSet& templates, Rng& rng,
                                       SynthesisLog* log = nullptr);

InsightAssignment assign_insights(const std::vector<InsightId>& insights, const SynthesisConfig& config, Rng& rng);

struct DocumentSlot {
    DocId id = 0;
    std::uint64_t seed = 0;
};

struct GeneratedDocument {
    Document document;
    int generator_calls = 0;
};

/// Generate one document holding exactly `assigned`. `all_insights` is the
/// leak-detection universe (every insight of the haystack).
GeneratedDocument generate_document(const DocumentSlot& slot, const Topic& topic,
                                    const std::vector<const Insight*>& assigned,
                                    const std::vector<const Insight*>& all_insights,
                                    const std::map<SubtopicId, std::string>& subtopic_names, TextGenerator& generator,
                                    InsightVerifier& verifier, const SynthesisConfig& config,
                                    const TemplateSet& templates, const TokenCounter& counter,
                                    SynthesisLog* log = nullptr);

/// Query text for a subtopic. Falls back to "What is discussed regarding
/// <name>?" when the generator does not return a single question.
std::string subtopic_to_query(const Topic& topic, const Subtopic& subtopic, TextGenerator& generator,
                              const TemplateSet& templates, std::uint64_t seed = 0, SynthesisLog* log = nullptr);

struct BuildOptions {
    TemplateSet templates = TemplateSet::builtin();
    TokenCounter counter = TokenCounter::words_four_thirds();
    std::size_t workers = 1;
    SynthesisLog* log = nullptr;
    InsightClassifier* classifier = nullptr;  // defaults to a GeneratorClassifier
};

Haystack build_haystack(const Topic& topic, const SynthesisConfig& config, TextGenerator& generator,
                        InsightVerifier& verifier, const BuildOptions& options = {});

}  // namespace hayeval
