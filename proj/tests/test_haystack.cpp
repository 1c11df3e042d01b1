#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "hayeval/errors.hpp"

using namespace hayeval;

namespace {

std::size_t count_kind(const ValidationReport& r, std::string_view kind) {
    return static_cast<std::size_t>(std::count_if(r.begin(), r.end(), [&](const Violation& v) { return v.kind == kind; }));
}

}  // namespace

TEST_CASE("well-formed fixture validates") {
    CHECK(validate_haystack(fixtures::tiny_haystack()).empty());
}

TEST_CASE("one-sided placement is a bidirectional violation") {
    auto h = fixtures::tiny_haystack();
    h.insights["st01.i01"].gold_document_ids.insert(3);
    h.insights["st01.i02"].gold_document_ids.insert(1);  // keep min_repeats satisfied either way
    h.documents[0].assigned_insight_ids.insert("st01.i02");
    const auto r = validate_haystack(h);
    REQUIRE(r.size() == 1);
    CHECK(r[0].kind == "bidirectional");
    CHECK(std::find(r[0].ids.begin(), r[0].ids.end(), "st01.i01") != r[0].ids.end());
}

TEST_CASE("under-placed insight is a min_repeats violation") {
    auto h = fixtures::tiny_haystack();
    h.config.min_repeats = 5;
    // placements counted directly from the documents
    std::map<InsightId, int> placed;
    for (const auto& d : h.documents)
        for (const auto& id : d.assigned_insight_ids) ++placed[id];
    const auto expected = std::count_if(placed.begin(), placed.end(), [](auto& kv) { return kv.second < 5; });
    CHECK(count_kind(validate_haystack(h), "min_repeats") == static_cast<std::size_t>(expected));
}

TEST_CASE("structural violations") {
    SUBCASE("non-contiguous ids") {
        auto h = fixtures::tiny_haystack();
        h.documents[2].id = 7;
        CHECK(count_kind(validate_haystack(h), "doc_ids") >= 1);
    }
    SUBCASE("stale token count") {
        auto h = fixtures::tiny_haystack();
        h.documents[1].token_count += 1;
        CHECK(count_kind(validate_haystack(h), "token_count") == 1);
    }
    SUBCASE("unknown insight on a document") {
        auto h = fixtures::tiny_haystack();
        h.documents[0].assigned_insight_ids.insert("ghost");
        CHECK(count_kind(validate_haystack(h), "unknown_insight") == 1);
    }
    SUBCASE("insight in two subtopics") {
        auto h = fixtures::tiny_haystack();
        h.subtopics.push_back({"st02", "t1", "Other", "Other?", {"st01.i01"}});
        CHECK_FALSE(validate_haystack(h).empty());
    }
    SUBCASE("empty query") {
        auto h = fixtures::tiny_haystack();
        h.subtopics[0].query.clear();
        CHECK(count_kind(validate_haystack(h), "empty_query") == 1);
    }
}

TEST_CASE("gold citations") {
    const auto h = fixtures::tiny_haystack();
    CHECK(gold_citations(h, "st01.i02") == std::set<DocId>{2, 3});
    CHECK_THROWS_AS(gold_citations(h, "nope"), NotFoundError);

    auto big = fixtures::tiny_haystack();
    big.insights["st01.i01"].gold_document_ids = {2, 5, 9, 11, 14};
    CHECK(gold_citations(big, "st01.i01") == std::set<DocId>{2, 5, 9, 11, 14});
}

TEST_CASE("placement totals agree from both sides") {
    const auto h = fixtures::sentinel_haystack(fixtures::desk_config(3));
    REQUIRE(validate_haystack(h).empty());
    std::size_t from_docs = 0, from_insights = 0;
    for (const auto& d : h.documents) from_docs += d.assigned_insight_ids.size();
    for (const auto& [id, i] : h.insights) from_insights += i.gold_document_ids.size();
    CHECK(from_docs == from_insights);
    for (const auto& [id, i] : h.insights) CHECK(gold_citations(h, id).size() >= 3);
}

TEST_CASE("serialization round-trips bit-exactly") {
    const auto h = fixtures::sentinel_haystack(fixtures::desk_config(11));
    const auto text = serialize_haystack(h);
    const auto back = parse_haystack(text);
    CHECK(back == h);
    CHECK(serialize_haystack(back) == text);

    const auto j = nlohmann::json::parse(text);
    for (const char* k : {"topic", "subtopics", "insights", "documents", "config", "format_version"})
        CHECK(j.contains(k));

    const auto dir = fixtures::scratch("haystack_io");
    save_haystack(h, dir / "h.json");
    CHECK(read_file(dir / "h.json") == text);
    CHECK(load_haystack(dir / "h.json") == h);
}

TEST_CASE("malformed files are parse errors") {
    CHECK_THROWS_AS(parse_haystack("{}"), ParseError);
    CHECK_THROWS_AS(parse_haystack("not json"), ParseError);
    auto j = nlohmann::json::parse(serialize_haystack(fixtures::tiny_haystack()));
    j["format_version"] = 99;
    CHECK_THROWS_AS(parse_haystack(j.dump()), ParseError);
    CHECK_THROWS_AS(read_file("/nonexistent/file.json"), NotFoundError);
}
