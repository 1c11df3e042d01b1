#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>

#include "fixtures.hpp"
#include "hayeval/errors.hpp"
#include "hayeval/scoring.hpp"

using namespace hayeval;

namespace {

CoverageJudgment jd(std::string id, CoverageLevel level, std::optional<int> link = std::nullopt) {
    CoverageJudgment j;
    j.insight_id = std::move(id);
    j.level = level;
    j.linked_bullet_index = link;
    return j;
}

CitationPRF prf_with_f1(Rational f1) { return {f1, f1, f1}; }

// Independent citation oracle: walks every id in 0..20 instead of using set algorithms.
std::tuple<double, double, double> brute_prf(const std::set<int>& cited, const std::set<int>& gold) {
    int hit = 0, c = 0, g = 0;
    for (int id = 0; id <= 20; ++id) {
        const bool in_c = cited.count(id) > 0, in_g = gold.count(id) > 0;
        c += in_c;
        g += in_g;
        hit += in_c && in_g;
    }
    const double p = c ? static_cast<double>(hit) / c : 0.0;
    const double r = g ? static_cast<double>(hit) / g : 0.0;
    return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
}

std::set<int> random_set(Rng& rng, int lo, int hi) {
    const int n = uniform_int(rng, lo, hi);
    std::set<int> s;
    while (static_cast<int>(s.size()) < n) s.insert(uniform_int(rng, 1, 20));
    return s;
}

}  // namespace

TEST_CASE("coverage levels map to points") {
    CHECK(coverage_points(CoverageLevel::full) == 100);
    CHECK(coverage_points(CoverageLevel::partial) == 50);
    CHECK(coverage_points(CoverageLevel::none) == 0);
    CHECK(parse_coverage_level("PARTIAL_COVERAGE") == CoverageLevel::partial);
}

TEST_CASE("coverage score examples") {
    CHECK(coverage_score({jd("a", CoverageLevel::full, 1), jd("b", CoverageLevel::partial, 1),
                          jd("c", CoverageLevel::none)}) == doctest::Approx(50.0));
    CHECK(coverage_score({jd("a", CoverageLevel::full, 1), jd("b", CoverageLevel::full, 2)}) == 100.0);
    CHECK_THROWS_AS(coverage_score({}), InputError);
    CHECK_THROWS_AS(coverage_score({jd("a", CoverageLevel::full, 1), jd("a", CoverageLevel::none)}), InputError);
}

TEST_CASE("coverage score equals the mean of mapped points on random judgments") {
    Rng rng(21);
    for (int t = 0; t < 50; ++t) {
        std::vector<CoverageJudgment> js;
        double sum = 0;
        for (int i = 0; i < 7; ++i) {
            const int pick = uniform_int(rng, 0, 2);
            const auto level = pick == 0 ? CoverageLevel::none : pick == 1 ? CoverageLevel::partial : CoverageLevel::full;
            sum += pick * 50.0;
            js.push_back(jd("i" + std::to_string(i), level, pick ? std::optional<int>(1) : std::nullopt));
        }
        CHECK(coverage_score(js) == doctest::Approx(sum / 7.0).epsilon(1e-12));
    }
}

TEST_CASE("citation precision, recall and F1") {
    auto a = citation_prf({2, 5, 9}, {2, 5, 9});
    CHECK(a.f1 == 1);
    auto b = citation_prf({1, 2, 3}, {2, 3, 4, 5});
    CHECK(b.precision == Rational(2, 3));
    CHECK(b.recall == Rational(1, 2));
    CHECK(b.f1 == Rational(4, 7));
    CHECK(b.f() == doctest::Approx(0.5714).epsilon(1e-4));
    auto c = citation_prf({}, {1});
    CHECK(c.precision == 0);
    CHECK(c.recall == 0);
    CHECK(c.f1 == 0);
    CHECK_THROWS_AS(citation_prf({1}, {}), InputError);
}

TEST_CASE("citation arithmetic agrees with a brute-force oracle") {
    Rng rng(1234);
    for (int t = 0; t < 1000; ++t) {
        const auto gold = random_set(rng, 1, 10);
        const auto cited = random_set(rng, 0, 10);
        const auto got = citation_prf(cited, gold);
        const auto [p, r, f] = brute_prf(cited, gold);
        CHECK(std::abs(got.p() - p) <= 1e-12);
        CHECK(std::abs(got.r() - r) <= 1e-12);
        CHECK(std::abs(got.f() - f) <= 1e-12);
    }
}

TEST_CASE("worked example: one full, one partial, one missing") {
    const auto r = aggregate_insights({{"A", CoverageLevel::full, prf_with_f1(Rational(29, 100)), 1},
                                       {"B", CoverageLevel::partial, prf_with_f1(Rational(73, 100)), 2},
                                       {"C", CoverageLevel::none, std::nullopt, std::nullopt}});
    CHECK(render_fixed(r.coverage) == "50.0");
    CHECK(render_fixed(r.citation) == "51.0");
    CHECK(render_fixed(r.joint) == "21.8");
    CHECK(r.covered_count == 2);
    // joint = (100 * 0.29 + 50 * 0.73 + 0) / 3
    CHECK(r.joint == Rational(655, 30));
}

TEST_CASE("perfect summary scores 100 everywhere") {
    const auto h = fixtures::tiny_haystack();
    const std::vector<Bullet> bullets{{1, "x", {1, 2}}, {2, "y", {2, 3}}};
    const auto r = score_summary({jd("st01.i01", CoverageLevel::full, 1), jd("st01.i02", CoverageLevel::full, 2)},
                                 bullets, {{"st01.i01", gold_citations(h, "st01.i01")}, {"st01.i02", gold_citations(h, "st01.i02")}});
    CHECK(r.coverage == 100);
    CHECK(r.citation == 100);
    CHECK(r.joint == 100);
}

TEST_CASE("citations come only from the linked bullet") {
    const std::map<InsightId, std::set<DocId>> gold{{"a", {1, 2}}};
    const std::vector<Bullet> bullets{{1, "x", {1, 2}}, {2, "y", {7}}};
    const auto r = score_summary({jd("a", CoverageLevel::full, 2)}, bullets, gold);
    CHECK(r.citation == 0);
    CHECK(r.joint == 0);
    CHECK(r.coverage == 100);
}

TEST_CASE("joint score matches an insight-by-insight recomputation") {
    Rng rng(77);
    for (int t = 0; t < 200; ++t) {
        const int n_insights = uniform_int(rng, 1, 6);
        const int n_bullets = uniform_int(rng, 1, 5);
        std::vector<Bullet> bullets;
        for (int b = 1; b <= n_bullets; ++b) bullets.push_back({b, "b", random_set(rng, 0, 4)});
        std::map<InsightId, std::set<DocId>> gold;
        std::vector<CoverageJudgment> js;
        double joint = 0, cov = 0, cit = 0;
        int covered = 0;
        for (int i = 0; i < n_insights; ++i) {
            const auto id = "i" + std::to_string(i);
            gold[id] = random_set(rng, 1, 4);
            const int pick = uniform_int(rng, 0, 2);
            if (pick == 0) {
                js.push_back(jd(id, CoverageLevel::none));
                continue;
            }
            const int link = uniform_int(rng, 1, n_bullets);
            js.push_back(jd(id, pick == 1 ? CoverageLevel::partial : CoverageLevel::full, link));
            const auto f = std::get<2>(brute_prf(bullets[static_cast<std::size_t>(link - 1)].cited_document_ids, gold[id]));
            cov += pick * 50.0;
            joint += pick * 50.0 * f;
            cit += 100.0 * f;
            ++covered;
        }
        const auto r = score_summary(js, bullets, gold);
        CHECK(r.joint_score() == doctest::Approx(joint / n_insights).epsilon(1e-12));
        CHECK(r.coverage_score() == doctest::Approx(cov / n_insights).epsilon(1e-12));
        CHECK(r.citation_score() == doctest::Approx(covered ? cit / covered : 0.0).epsilon(1e-12));
        CHECK(r.covered_count == static_cast<std::size_t>(covered));
    }
}

TEST_CASE("all-NONE judgments leave citation undefined and report zero") {
    const std::map<InsightId, std::set<DocId>> gold{{"a", {1}}, {"b", {2}}};
    const auto r = score_summary({jd("a", CoverageLevel::none), jd("b", CoverageLevel::none)}, {{1, "x", {1}}}, gold);
    CHECK(r.coverage == 0);
    CHECK(r.joint == 0);
    CHECK(r.citation == 0);
    CHECK(r.covered_count == 0);
    CHECK(r.citation_undefined);
}

TEST_CASE("malformed judgment sets are rejected") {
    const std::map<InsightId, std::set<DocId>> gold{{"a", {1}}, {"b", {2}}};
    const std::vector<Bullet> bullets{{1, "x", {1}}};
    CHECK_THROWS_AS(score_summary({jd("a", CoverageLevel::full, 1), jd("a", CoverageLevel::full, 1)}, bullets, gold),
                    InputError);
    CHECK_THROWS_AS(score_summary({jd("a", CoverageLevel::full, 2)}, bullets, gold), InputError);
    CHECK_THROWS_AS(score_summary({jd("zzz", CoverageLevel::full, 1)}, bullets, gold), InputError);
    CHECK_THROWS_AS(check_judgment_shape(jd("a", CoverageLevel::none, 1), 1), InputError);
    CHECK_THROWS_AS(check_judgment_shape(jd("a", CoverageLevel::full), 1), InputError);
}

TEST_CASE("rendering rounds half away from zero") {
    CHECK(render_fixed(Rational(2185, 100)) == "21.9");
    CHECK(render_fixed(Rational(2184, 100)) == "21.8");
    CHECK(render_fixed(Rational(-5, 100)) == "-0.1");
    CHECK(render_fixed(Rational(100)) == "100.0");
    CHECK(to_fraction_string(Rational(4, 7)) == "4/7");
    CHECK(parse_fraction("4/7") == Rational(4, 7));
    CHECK(parse_fraction("12") == 12);
}

TEST_CASE("reports round-trip through json exactly") {
    const auto r = aggregate_insights({{"A", CoverageLevel::full, citation_prf({1, 2, 3}, {2, 3, 4, 5}), 1},
                                       {"B", CoverageLevel::none, std::nullopt, std::nullopt}},
                                      13.5);
    const auto back = score_report_from_json(nlohmann::json::parse(to_json(r).dump()));
    CHECK(back.joint == r.joint);
    CHECK(back.citation == r.citation);
    CHECK(back.words_per_bullet == 13.5);
    CHECK(to_json(back) == to_json(r));
}

TEST_CASE("sentinel judge levels and links") {
    const Insight ins{"i", "s", "The harbor reopened on May 4, 2020.", {1}};
    SentinelJudge judge;
    const std::vector<Bullet> bullets{{1, "Nothing here", {}}, {2, "News: the harbor reopened on May 4, 2020. [1]", {1}}};
    auto full = judge_coverage(ins, bullets, judge);
    CHECK(full.level == CoverageLevel::full);
    CHECK(full.linked_bullet_index == 2);
    auto partial = judge_coverage(ins, {{1, "The harbor reopened on time", {}}}, judge);
    CHECK(partial.level == CoverageLevel::partial);
    auto none = judge_coverage(ins, {{1, "Unrelated", {}}}, judge);
    CHECK(none.level == CoverageLevel::none);
    CHECK_FALSE(none.linked_bullet_index);
    CHECK_THROWS_AS(judge_coverage(ins, {}, judge), InputError);
}

TEST_CASE("judge replies are parsed strictly") {
    CHECK(parse_judge_reply(R"({"coverage": "FULL_COVERAGE", "bullet": 2})", 3)->linked_bullet_index == 2);
    CHECK(parse_judge_reply(R"(Sure: {"coverage": "NO_COVERAGE"})", 3)->level == CoverageLevel::none);
    CHECK_FALSE(parse_judge_reply(R"({"coverage": "FULL_COVERAGE", "bullet": 4})", 3));
    CHECK_FALSE(parse_judge_reply(R"({"coverage": "FULL_COVERAGE"})", 3));
    CHECK_FALSE(parse_judge_reply(R"({"coverage": "MOSTLY"})", 3));
    CHECK_FALSE(parse_judge_reply("not json", 3));
}

TEST_CASE("LLM judge retries malformed replies and then succeeds") {
    std::atomic<int> calls = 0;
    std::vector<GenerateParams> params;
    std::mutex mu;
    Endpoint e;
    e.name = "judge";
    e.capability = Capability::judge;
    e.base_url = "mock://judge";
    auto backend = std::make_shared<FunctionBackend>([&](const Endpoint&, const BackendRequest& r) {
        std::lock_guard lock(mu);
        params.push_back(r.params);
        BackendResponse out;
        out.text = ++calls <= 2 ? "{\"coverage\": \"FULL_COVERAGE\", \"bullet\": 9}"
                                : "{\"coverage\": \"PARTIAL_COVERAGE\", \"bullet\": 1}";
        return out;
    });
    Gateway gw(EndpointRegistry({e}), backend);
    LlmJudge judge(gw, "judge");
    const Insight ins{"i", "s", "text", {1}};
    const auto j = judge_coverage(ins, {{1, "bullet", {1}}}, judge);
    CHECK(calls == 3);
    CHECK(j.attempts == 3);
    CHECK(j.level == CoverageLevel::partial);
    REQUIRE(params.size() == 3);
    CHECK(params[0].temperature == 0.0);
    CHECK(params[1].temperature == 1.0);

    calls = -100;  // always malformed
    LlmJudge stubborn(gw, "judge", {}, TemplateSet::builtin(), 2);
    const Insight other{"k", "s", "other text", {1}};
    CHECK_THROWS_AS(judge_coverage(other, {{1, "bullet", {1}}}, stubborn), JudgingError);
}

TEST_CASE("judge prompt carries the insight and numbered bullets") {
    Gateway gw(EndpointRegistry{}, make_default_backend());
    LlmJudge judge(gw, "none", "EXAMPLES HERE");
    const auto p = judge.prompt_for({"i", "s", "The insight sentence.", {}}, {{1, "alpha", {}}, {2, "beta", {}}});
    CHECK(p.find("The insight sentence.") != std::string::npos);
    CHECK(p.find("1. alpha") != std::string::npos);
    CHECK(p.find("2. beta") != std::string::npos);
    CHECK(p.find("EXAMPLES HERE") != std::string::npos);
}

TEST_CASE("evaluate_summary marks judging failures incomplete") {
    const auto h = fixtures::tiny_haystack();
    struct Broken : CoverageJudge {
        CoverageJudgment judge(const Insight& i, const std::vector<Bullet>&) override {
            if (i.id == "st01.i02") throw JudgingError("down");
            CoverageJudgment j;
            j.level = CoverageLevel::full;
            j.linked_bullet_index = 1;
            return j;
        }
    } broken;
    const auto s = parse_summary("- one [1]");
    const auto r = evaluate_summary(h, h.subtopics[0], s, broken).report;
    CHECK(r.incomplete);
    CHECK_FALSE(r.errors.empty());
}

TEST_CASE("aggregation averages cells and fills the grid") {
    auto rep = [](Rational joint) {
        ScoreReport r;
        r.coverage = joint;
        r.citation = joint;
        r.joint = joint;
        r.words_per_bullet = 10;
        return r;
    };
    const auto rows = aggregate_run({{"m1", "oracle", rep(40)}, {"m1", "oracle", rep(60)}, {"m2", "random", rep(10)}});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].summarizer == "m1");
    CHECK(rows[0].retriever == "oracle");
    CHECK(rows[0].joint == 50);
    CHECK(rows[0].n_reports == 2);
    CHECK(rows[1].retriever == "random");
    CHECK(rows[1].n_reports == 0);
    const auto tsv = render_aggregate_tsv(rows);
    CHECK(tsv.rfind("Summarizer\tRetriever\tCoverage\tCitation\tJoint", 0) == 0);
    CHECK(tsv.find("m1\toracle\t50.0\t50.0\t50.0") != std::string::npos);
    CHECK(tsv.find("m1\trandom\t-") != std::string::npos);
    CHECK(!render_aggregate_table(rows).empty());
}
