#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "fixtures.hpp"
#include "hayeval/errors.hpp"
#include "hayeval/retrieval.hpp"

using namespace hayeval;

namespace {

std::vector<Document> docs_with_tokens(std::vector<std::pair<DocId, std::size_t>> spec) {
    std::vector<Document> out;
    for (auto [id, tokens] : spec) out.push_back({id, "d" + std::to_string(id), {}, tokens});
    return out;
}

// Every prefix of `order` that fits, longest first: the expected greedy selection.
std::vector<DocId> longest_fitting_prefix(const std::vector<DocId>& order, const std::vector<Document>& docs,
                                          std::size_t budget) {
    for (std::size_t len = order.size() + 1; len-- > 0;) {
        std::size_t used = 0;
        for (std::size_t i = 0; i < len; ++i)
            for (const auto& d : docs)
                if (d.id == order[i]) used += d.token_count;
        if (used <= budget) return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(len)};
    }
    return {};
}

Endpoint mock_endpoint(std::string name, Capability cap, std::string url) {
    Endpoint e;
    e.name = std::move(name);
    e.capability = cap;
    e.base_url = std::move(url);
    e.model = "m";
    return e;
}

}  // namespace

TEST_CASE("oracle score is the count of the subtopic's insights placed in the document") {
    auto h = fixtures::tiny_haystack();
    Rng rng(0);
    const auto s = score_documents(h, h.subtopics[0], RetrieverKind::oracle, {}, rng);
    REQUIRE(s.size() == 3);
    CHECK(s[0] == ScoredDocument{1, 1.0});
    CHECK(s[1] == ScoredDocument{2, 2.0});
    CHECK(s[2] == ScoredDocument{3, 1.0});

    // placement map only: text is irrelevant
    h.documents[0].text = "unrelated";
    Rng rng2(0);
    CHECK(score_documents(h, h.subtopics[0], RetrieverKind::oracle, {}, rng2)[0].score == 1.0);

    h.subtopics[0].insight_ids.push_back("st01.i03");
    h.insights["st01.i03"] = {"st01.i03", "st01", "x", {2}};
    h.documents[1].assigned_insight_ids.insert("st01.i03");
    h.documents.push_back({4, "none", {}, 1});
    Rng rng3(0);
    const auto s3 = score_documents(h, h.subtopics[0], RetrieverKind::oracle, {}, rng3);
    CHECK(s3[1].score == 3.0);
    CHECK(s3[3].score == 0.0);
}

TEST_CASE("keyword overlap counts shared content-token types") {
    CHECK(keyword_overlap("students discuss stress management", "Stress and management were on the agenda.") == 2);
    CHECK(keyword_overlap("stress management", "management stress management STRESS") == 2);
    CHECK(keyword_overlap("the and of", "the and of") == 0);
    CHECK(keyword_overlap("budget 2021", "the 2021 budget") == 1);
    // symmetric
    CHECK(keyword_overlap("harbor dredging costs", "costs of harbor work") ==
          keyword_overlap("costs of harbor work", "harbor dredging costs"));
}

TEST_CASE("random scores are reproducible for a seed") {
    const auto h = fixtures::sentinel_haystack(fixtures::desk_config(1));
    Rng a(5), b(5), c(6);
    const auto sa = score_documents(h, h.subtopics[0], RetrieverKind::random, {}, a);
    CHECK(sa == score_documents(h, h.subtopics[0], RetrieverKind::random, {}, b));
    CHECK(sa != score_documents(h, h.subtopics[0], RetrieverKind::random, {}, c));
    for (const auto& d : sa) CHECK(std::isfinite(d.score));
}

TEST_CASE("model-backed retrievers need providers") {
    const auto h = fixtures::tiny_haystack();
    Rng rng(0);
    CHECK_THROWS_AS(score_documents(h, h.subtopics[0], RetrieverKind::embed, {}, rng), ConfigError);
    CHECK_THROWS_AS(score_documents(h, h.subtopics[0], RetrieverKind::rerank, {}, rng), ConfigError);
    CHECK_THROWS_AS(parse_retriever_kind("bm25"), ConfigError);
}

TEST_CASE("embedding and rerank retrievers go through the gateway") {
    const auto h = fixtures::tiny_haystack();
    Gateway gw(EndpointRegistry({mock_endpoint("emb", Capability::embed, "mock://hash-embed"),
                                 mock_endpoint("rr", Capability::rerank, "mock://overlap-rerank")}),
               make_default_backend());
    RetrievalProviders p;
    p.gateway = &gw;
    p.embed_endpoint = "emb";
    p.long_embed_endpoint = "emb";
    p.rerank_endpoint = "rr";
    Rng rng(0);
    for (auto kind : {RetrieverKind::embed, RetrieverKind::long_embed, RetrieverKind::rerank}) {
        const auto s = score_documents(h, h.subtopics[0], kind, p, rng);
        REQUIRE(s.size() == 3);
        for (const auto& d : s) CHECK(std::isfinite(d.score));
    }
    CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == doctest::Approx(0.0));
    CHECK(cosine_similarity(std::vector<double>{1, 1}, std::vector<double>{2, 2}) == doctest::Approx(1.0));
}

TEST_CASE("greedy prefix stops at the first document that does not fit") {
    const auto docs = docs_with_tokens({{1, 8000}, {2, 8000}, {3, 4000}});
    const auto sel = assemble_context("q", {{1, 0.9}, {2, 0.8}, {3, 0.7}}, docs, 15000);
    CHECK(sel.selected_ids == std::vector<DocId>{1});
    CHECK(sel.used_tokens == 8000);
    CHECK(sel.selected_ids == longest_fitting_prefix({1, 2, 3}, docs, 15000));
    CHECK_FALSE(sel.budget_below_smallest);
}

TEST_CASE("budget above the total selects everything in score order") {
    const auto docs = docs_with_tokens({{1, 10}, {2, 20}, {3, 30}});
    const auto sel = assemble_context("q", {{1, 0.1}, {2, 0.9}, {3, 0.5}}, docs, 1000);
    CHECK(sel.selected_ids == std::vector<DocId>{2, 3, 1});
    CHECK(sel.used_tokens == 60);
    const auto unl = assemble_context("q", {{1, 0.1}, {2, 0.9}, {3, 0.5}}, docs, kUnlimitedBudget);
    CHECK(unl.selected_ids.size() == 3);
}

TEST_CASE("equal scores are ordered by ascending id") {
    const auto docs = docs_with_tokens({{1, 1}, {2, 1}, {3, 1}, {4, 1}});
    const auto sel = assemble_context("q", {{4, 1.0}, {2, 1.0}, {3, 2.0}, {1, 1.0}}, docs, 100);
    CHECK(sel.selected_ids == std::vector<DocId>{3, 1, 2, 4});
    REQUIRE(sel.scored.size() == 4);
    CHECK(sel.scored[1].id == 1);
}

TEST_CASE("budget below the smallest document yields an empty flagged selection") {
    const auto docs = docs_with_tokens({{1, 50}, {2, 40}});
    const auto sel = assemble_context("q", {{1, 1.0}, {2, 0.5}}, docs, 30);
    CHECK(sel.selected_ids.empty());
    CHECK(sel.budget_below_smallest);
}

TEST_CASE("prefix property over random instances") {
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = uniform_int(rng, 1, 12);
        std::vector<std::pair<DocId, std::size_t>> spec;
        std::vector<ScoredDocument> scored;
        for (int i = 1; i <= n; ++i) {
            spec.emplace_back(i, static_cast<std::size_t>(uniform_int(rng, 1, 50)));
            scored.push_back({i, static_cast<double>(uniform_int(rng, 0, 5))});
        }
        const auto docs = docs_with_tokens(spec);
        const auto budget = static_cast<std::size_t>(uniform_int(rng, 0, 300));
        const auto sel = assemble_context("q", scored, docs, budget);
        std::vector<DocId> order;
        for (const auto& s : sel.scored) order.push_back(s.id);
        CHECK(sel.selected_ids == longest_fitting_prefix(order, docs, budget));
        CHECK(sel.used_tokens <= budget);
        for (std::size_t i = 1; i < sel.scored.size(); ++i) {
            const auto& a = sel.scored[i - 1];
            const auto& b = sel.scored[i];
            CHECK((a.score > b.score || (a.score == b.score && a.id < b.id)));
        }
    }
}

TEST_CASE("position orderings place the relevant block at an extremity") {
    const auto h = fixtures::sentinel_haystack(fixtures::desk_config(3));
    const auto& sub = h.subtopics[0];
    std::set<DocId> relevant;
    for (const auto& d : h.documents)
        for (const auto& id : sub.insight_ids)
            if (d.assigned_insight_ids.contains(id)) relevant.insert(d.id);
    REQUIRE(!relevant.empty());
    REQUIRE(relevant.size() < h.documents.size());
    const auto k = static_cast<std::ptrdiff_t>(relevant.size());

    Rng r1(1);
    const auto top = order_for_position_bias(h, sub, Placement::top, r1);
    CHECK(std::set<DocId>(top.begin(), top.begin() + k) == relevant);
    Rng r2(1);
    const auto bottom = order_for_position_bias(h, sub, Placement::bottom, r2);
    CHECK(std::set<DocId>(bottom.end() - k, bottom.end()) == relevant);
    CHECK(bottom.size() == h.documents.size());

    Rng a(9), b(9);
    const auto ra = order_for_position_bias(h, sub, Placement::random, a);
    CHECK(ra == order_for_position_bias(h, sub, Placement::random, b));
    CHECK(std::set<DocId>(ra.begin(), ra.end()).size() == h.documents.size());
}

TEST_CASE("citation upper bound clips gold sets to the visible context") {
    const auto h = fixtures::tiny_haystack();
    const auto& sub = h.subtopics[0];
    // i01 gold {1,2} sees {1}: p=1, r=1/2, f1=2/3. i02 gold {2,3} sees nothing: 0.
    CHECK(oracle_citation_upper_bound(h, sub, std::vector<DocId>{1}) == doctest::Approx(1.0 / 3.0));
    CHECK(oracle_citation_upper_bound(h, sub, std::vector<DocId>{2}) == doctest::Approx(2.0 / 3.0));
    CHECK(oracle_citation_upper_bound(h, sub, std::vector<DocId>{1, 2, 3}) == 1.0);
    CHECK(oracle_citation_upper_bound(h, sub, std::vector<DocId>{}) == 0.0);
}

TEST_CASE("oracle selection at a large budget holds every gold document") {
    const auto h = fixtures::sentinel_haystack(fixtures::desk_config(5));
    for (const auto& sub : h.subtopics) {
        Rng rng(0);
        const auto sel = assemble_context(sub.query, score_documents(h, sub, RetrieverKind::oracle, {}, rng),
                                          h.documents, kUnlimitedBudget);
        const std::set<DocId> chosen(sel.selected_ids.begin(), sel.selected_ids.end());
        for (const auto& id : sub.insight_ids)
            for (auto g : h.insights.at(id).gold_document_ids) CHECK(chosen.contains(g));
    }
}

TEST_CASE("selection record serializes") {
    const auto docs = docs_with_tokens({{1, 5}});
    const auto j = to_json(assemble_context("what?", {{1, 1.0}}, docs, 10));
    CHECK(j.at("query") == "what?");
    CHECK(j.at("selected_ids") == nlohmann::json::array({1}));
    CHECK(j.at("used_tokens") == 5);
}
