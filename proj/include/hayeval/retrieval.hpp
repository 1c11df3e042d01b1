#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hayeval/gateway.hpp"
#include "hayeval/haystack.hpp"
#include "hayeval/rng.hpp"

namespace hayeval {

enum class RetrieverKind { random, keywords, embed, long_embed, rerank, oracle };

std::string_view to_string(RetrieverKind k);
RetrieverKind parse_retriever_kind(std::string_view s);

/// Provider endpoints for the model-backed retrievers.
struct RetrievalProviders {
    Gateway* gateway = nullptr;
    std::string embed_endpoint;
    std::string long_embed_endpoint;
    std::string rerank_endpoint;
    std::size_t batch_size = 16;
};

struct ScoredDocument {
    DocId id = 0;
    double score = 0.0;
    bool operator==(const ScoredDocument&) const = default;
};

inline constexpr std::size_t kUnlimitedBudget = std::numeric_limits<std::size_t>::max();

struct ContextSelection {
    std::string query;
    std::vector<ScoredDocument> scored;  // descending score, ties by ascending id
    std::vector<DocId> selected_ids;     // prefix of `scored`
    std::size_t budget_tokens = 15000;
    std::size_t used_tokens = 0;
    bool budget_below_smallest = false;  // warning: nothing could be selected
};

/// One relevance score per document, in document order.
std::vector<ScoredDocument> score_documents(const Haystack& h, const Subtopic& subtopic, RetrieverKind kind,
                                            const RetrievalProviders& providers, Rng& rng);

/// Number of shared content tokens (lowercased, stopwords and non-alphabetic
/// tokens removed), counted as a set intersection.
std::size_t keyword_overlap(std::string_view query, std::string_view text);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Greedy whole-document prefix of the descending-score order that fits
/// `budget_tokens`. Selection stops at the first document that does not fit.
ContextSelection assemble_context(std::string query, std::vector<ScoredDocument> scored,
                                  const std::vector<Document>& documents,
                                  std::size_t budget_tokens = 15000);

enum class Placement { random, top, bottom };

std::string_view to_string(Placement p);
Placement parse_placement(std::string_view s);

/// Full-haystack ordering for position-bias runs: relevant documents (those
/// holding at least one of the subtopic's insights) all at the top or the
/// bottom, seeded-random within each block; `random` shuffles everything.
std::vector<DocId> order_for_position_bias(const Haystack& h, const Subtopic& subtopic, Placement placement, Rng& rng);

/// Best achievable mean citation F1 over the subtopic's insights when only
/// `context` is visible: each insight cites exactly its gold documents that
/// are in context.
double oracle_citation_upper_bound(const Haystack& h, const Subtopic& subtopic, std::span<const DocId> context);

nlohmann::json to_json(const ContextSelection& s);

}  // namespace hayeval
