#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hayeval/text.hpp"

namespace hayeval {

using DocId = int;  // 1-based, matches the "[1,2]" citation format
using InsightId = std::string;
using SubtopicId = std::string;

enum class Domain { conversation, news };

std::string_view to_string(Domain d);
Domain parse_domain(std::string_view s);

struct IntRange {
    int min = 0;
    int max = 0;
    double mean() const { return (min + max) / 2.0; }
    bool operator==(const IntRange&) const = default;
};

struct SynthesisConfig {
    int n_subtopics_target = 10;
    IntRange insights_per_subtopic{5, 10};
    IntRange insights_per_document{3, 6};
    int n_documents = 100;
    int words_per_document = 750;
    int min_repeats = 5;
    int max_doc_regenerations = 5;
    int max_chapter_retries = 10;
    int max_subtopic_rounds = 3;
    std::uint64_t rng_seed = 0;
    std::string token_counter = "words_x4/3";

    bool operator==(const SynthesisConfig&) const = default;
};

struct Topic {
    std::string id;
    std::string title;
    Domain domain = Domain::news;
    std::vector<std::string> seed_documents;

    bool operator==(const Topic&) const = default;
};

struct Subtopic {
    SubtopicId id;
    std::string topic_id;
    std::string name;
    std::string query;
    std::vector<InsightId> insight_ids;

    bool operator==(const Subtopic&) const = default;
};

struct Insight {
    InsightId id;
    SubtopicId subtopic_id;
    std::string text;
    std::set<DocId> gold_document_ids;

    bool operator==(const Insight&) const = default;
};

struct Document {
    DocId id = 0;
    std::string text;
    std::set<InsightId> assigned_insight_ids;
    std::size_t token_count = 0;

    bool operator==(const Document&) const = default;
};

/// A topic corpus with its ground-truth insight -> document placement map.
/// Immutable once built; safe to share between concurrent readers.
struct Haystack {
    Topic topic;
    std::vector<Subtopic> subtopics;
    std::map<InsightId, Insight> insights;
    std::vector<Document> documents;  // documents[i].id == i + 1
    SynthesisConfig config;

    bool operator==(const Haystack&) const = default;

    const Subtopic& subtopic(std::string_view id) const;
    const Insight& insight(std::string_view id) const;
    const Document& document(DocId id) const;
    std::vector<const Insight*> insights_of(const Subtopic& s) const;
    std::size_t total_tokens() const;
};

inline constexpr int kHaystackFormatVersion = 1;

struct Violation {
    std::string kind;  // e.g. "bidirectional", "min_repeats", "doc_ids"
    std::string message;
    std::vector<std::string> ids;
};

using ValidationReport = std::vector<Violation>;

/// Every violated invariant, with offending ids. Empty means valid.
ValidationReport validate_haystack(const Haystack& h,
                                   const TokenCounter& counter = TokenCounter::words_four_thirds());

/// Gold citation set of an insight. Throws NotFoundError for unknown ids.
const std::set<DocId>& gold_citations(const Haystack& h, std::string_view insight_id);

nlohmann::json to_json(const Topic& t);
Topic topic_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SynthesisConfig& c);
SynthesisConfig synthesis_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Haystack& h);
Haystack haystack_from_json(const nlohmann::json& j);

/// Canonical text form; the file format and the input to haystack hashing.
std::string serialize_haystack(const Haystack& h);
Haystack parse_haystack(std::string_view text);

void save_haystack(const Haystack& h, const std::filesystem::path& path);
Haystack load_haystack(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Write via a temp file and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace hayeval
