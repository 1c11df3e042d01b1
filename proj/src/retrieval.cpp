#include "hayeval/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hayeval/errors.hpp"
#include "hayeval/parallel.hpp"

namespace hayeval {

std::string_view to_string(RetrieverKind k) {
    switch (k) {
        case RetrieverKind::random: return "random";
        case RetrieverKind::keywords: return "keywords";
        case RetrieverKind::embed: return "embed";
        case RetrieverKind::long_embed: return "long_embed";
        case RetrieverKind::rerank: return "rerank";
        case RetrieverKind::oracle: return "oracle";
    }
    return "random";
}

RetrieverKind parse_retriever_kind(std::string_view s) {
    for (auto k : {RetrieverKind::random, RetrieverKind::keywords, RetrieverKind::embed, RetrieverKind::long_embed,
                   RetrieverKind::rerank, RetrieverKind::oracle})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown retriever kind '" + std::string(s) + "'");
}

std::string_view to_string(Placement p) {
    switch (p) {
        case Placement::random: return "random";
        case Placement::top: return "top";
        case Placement::bottom: return "bottom";
    }
    return "random";
}

Placement parse_placement(std::string_view s) {
    if (s == "random") return Placement::random;
    if (s == "top") return Placement::top;
    if (s == "bottom") return Placement::bottom;
    throw ConfigError("unknown document ordering '" + std::string(s) + "'");
}

std::size_t keyword_overlap(std::string_view query, std::string_view text) {
    const auto q = content_tokens(query);
    const auto d = content_tokens(text);
    std::size_t n = 0;
    for (const auto& w : q) n += d.contains(w) ? 1 : 0;
    return n;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw RetrievalError("cosine of vectors with different dimensions");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

std::vector<double> embed_scores(const Haystack& h, const std::string& query, const std::string& endpoint,
                                 const RetrievalProviders& p) {
    if (!p.gateway || endpoint.empty()) throw ConfigError("embedding retriever needs a configured embed endpoint");
    const auto query_vec = p.gateway->embed(endpoint, {query}).vectors.at(0);
    const std::size_t batch = std::max<std::size_t>(1, p.batch_size);
    const std::size_t n_batches = (h.documents.size() + batch - 1) / batch;
    std::vector<double> scores(h.documents.size());
    const auto cap = static_cast<std::size_t>(p.gateway->registry().get(endpoint).max_in_flight);
    parallel_for(n_batches, cap, [&](std::size_t b) {
        std::vector<std::string> texts;
        const std::size_t lo = b * batch, hi = std::min(h.documents.size(), lo + batch);
        for (std::size_t i = lo; i < hi; ++i) texts.push_back(h.documents[i].text);
        const auto vecs = p.gateway->embed(endpoint, texts).vectors;
        for (std::size_t i = lo; i < hi; ++i) scores[i] = cosine_similarity(query_vec, vecs[i - lo]);
    });
    return scores;
}

}  // namespace

std::vector<ScoredDocument> score_documents(const Haystack& h, const Subtopic& subtopic, RetrieverKind kind,
                                            const RetrievalProviders& providers, Rng& rng) {
    std::vector<double> scores(h.documents.size(), 0.0);
    try {
        switch (kind) {
            case RetrieverKind::random:
                for (auto& s : scores) s = uniform_real(rng);
                break;
            case RetrieverKind::keywords:
                for (std::size_t i = 0; i < h.documents.size(); ++i)
                    scores[i] = static_cast<double>(keyword_overlap(subtopic.query, h.documents[i].text));
                break;
            case RetrieverKind::embed:
                scores = embed_scores(h, subtopic.query, providers.embed_endpoint, providers);
                break;
            case RetrieverKind::long_embed:
                scores = embed_scores(h, subtopic.query, providers.long_embed_endpoint, providers);
                break;
            case RetrieverKind::rerank: {
                if (!providers.gateway || providers.rerank_endpoint.empty())
                    throw ConfigError("rerank retriever needs a configured rerank endpoint");
                std::vector<std::string> texts;
                for (const auto& d : h.documents) texts.push_back(d.text);
                scores = providers.gateway->rerank(providers.rerank_endpoint, subtopic.query, texts).scores;
                break;
            }
            case RetrieverKind::oracle: {
                const std::set<InsightId> mine(subtopic.insight_ids.begin(), subtopic.insight_ids.end());
                for (std::size_t i = 0; i < h.documents.size(); ++i) {
                    std::size_t n = 0;
                    for (const auto& id : h.documents[i].assigned_insight_ids) n += mine.contains(id) ? 1 : 0;
                    scores[i] = static_cast<double>(n);
                }
                break;
            }
        }
    } catch (const GatewayError& e) {
        throw RetrievalError(std::string("retriever ") + std::string(to_string(kind)) + " failed: " + e.what());
    }
    std::vector<ScoredDocument> out;
    out.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) throw RetrievalError("non-finite relevance score");
        out.push_back({h.documents[i].id, scores[i]});
    }
    return out;
}

ContextSelection assemble_context(std::string query, std::vector<ScoredDocument> scored,
                                  const std::vector<Document>& documents, std::size_t budget_tokens) {
    for (const auto& s : scored)
        if (!std::isfinite(s.score)) throw RetrievalError("non-finite relevance score");
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredDocument& a, const ScoredDocument& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    auto tokens_of = [&](DocId id) -> std::size_t {
        if (id < 1 || static_cast<std::size_t>(id) > documents.size())
            throw RetrievalError("scored document id " + std::to_string(id) + " not in corpus");
        return documents[static_cast<std::size_t>(id - 1)].token_count;
    };

    ContextSelection sel;
    sel.query = std::move(query);
    sel.budget_tokens = budget_tokens;
    for (const auto& s : scored) {
        const auto t = tokens_of(s.id);
        if (t > budget_tokens - sel.used_tokens) break;
        sel.selected_ids.push_back(s.id);
        sel.used_tokens += t;
    }
    if (sel.selected_ids.empty() && !scored.empty()) {
        std::size_t smallest = kUnlimitedBudget;
        for (const auto& s : scored) smallest = std::min(smallest, tokens_of(s.id));
        sel.budget_below_smallest = budget_tokens < smallest;
    }
    sel.scored = std::move(scored);
    return sel;
}

std::vector<DocId> order_for_position_bias(const Haystack& h, const Subtopic& subtopic, Placement placement, Rng& rng) {
    std::vector<DocId> relevant, other, all;
    const std::set<InsightId> mine(subtopic.insight_ids.begin(), subtopic.insight_ids.end());
    for (const auto& d : h.documents) {
        all.push_back(d.id);
        const bool hit = std::any_of(d.assigned_insight_ids.begin(), d.assigned_insight_ids.end(),
                                     [&](const InsightId& id) { return mine.contains(id); });
        (hit ? relevant : other).push_back(d.id);
    }
    if (placement == Placement::random) {
        shuffle(std::span(all), rng);
        return all;
    }
    shuffle(std::span(relevant), rng);
    shuffle(std::span(other), rng);
    std::vector<DocId> out;
    if (placement == Placement::top) {
        out = relevant;
        out.insert(out.end(), other.begin(), other.end());
    } else {
        out = other;
        out.insert(out.end(), relevant.begin(), relevant.end());
    }
    return out;
}

double oracle_citation_upper_bound(const Haystack& h, const Subtopic& subtopic, std::span<const DocId> context) {
    const std::set<DocId> visible(context.begin(), context.end());
    if (subtopic.insight_ids.empty()) return 0.0;
    double total = 0.0;
    for (const auto* insight : h.insights_of(subtopic)) {
        const auto& gold = insight->gold_document_ids;
        std::size_t in_context = 0;
        for (DocId d : gold) in_context += visible.contains(d) ? 1 : 0;
        // precision 1 (cite only visible gold), recall in_context / |gold|
        if (in_context > 0 && !gold.empty())
            total += 2.0 * static_cast<double>(in_context) / static_cast<double>(in_context + gold.size());
    }
    return total / static_cast<double>(subtopic.insight_ids.size());
}

nlohmann::json to_json(const ContextSelection& s) {
    nlohmann::json scored = nlohmann::json::array();
    for (const auto& d : s.scored) scored.push_back({{"id", d.id}, {"score", d.score}});
    return {{"query", s.query},
            {"scored", std::move(scored)},
            {"selected_ids", s.selected_ids},
            {"budget_tokens", s.budget_tokens == kUnlimitedBudget ? nlohmann::json("unlimited") : nlohmann::json(s.budget_tokens)},
            {"used_tokens", s.used_tokens},
            {"budget_below_smallest", s.budget_below_smallest},
            {"tie_break", "ascending document id"}};
}

}  // namespace hayeval
