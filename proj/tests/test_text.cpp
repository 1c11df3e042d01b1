#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hayeval/errors.hpp"
#include "hayeval/json_extract.hpp"
#include "hayeval/rng.hpp"
#include "hayeval/templates.hpp"
#include "hayeval/text.hpp"

using namespace hayeval;

TEST_CASE("word splitting and the 4/3 token counter") {
    CHECK(word_count("  one two\tthree\nfour ") == 4);
    CHECK(word_count("") == 0);
    const auto c = TokenCounter::words_four_thirds();
    CHECK(c.name() == "words_x4/3");
    CHECK(c("a b c") == 4);
    CHECK(c("a b c d e f") == 8);
    CHECK(c("a") == 2);
    CHECK(c("") == 0);
    std::string doc;
    for (int i = 0; i < 750; ++i) doc += "word ";
    CHECK(c(doc) == 1000);
}

TEST_CASE("content tokens drop stopwords, case and digits") {
    const auto t = content_tokens("What did The Mayor say about 2021 budgets, and the mayor's plan?");
    CHECK(t == std::set<std::string>{"mayor", "say", "budgets", "plan"});
    CHECK(is_stopword("the"));
    CHECK_FALSE(is_stopword("harbor"));
    CHECK(stopword_count() > 100);
}

TEST_CASE("normalization and helpers") {
    CHECK(normalize_text("  Hello,   World!  ") == normalize_text("hello, world!"));
    CHECK(trim("\t x \n") == "x");
    CHECK(to_lower("AbC") == "abc");
    CHECK(split_lines("a\r\nb\n\nc") == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("template placeholders") {
    TemplateVars vars{{"NAME", "harbor"}};
    auto lookup = [&](std::string_view k) -> const std::string* {
        auto it = vars.find(k);
        return it == vars.end() ? nullptr : &it->second;
    };
    CHECK(render_template("about [[NAME]]!", lookup) == "about harbor!");
    CHECK_THROWS_AS(render_template("[[MISSING]]", lookup), ConfigError);
    CHECK(render_template("[ [1, 2] ]", lookup) == "[ [1, 2] ]");
}

TEST_CASE("builtin templates carry their slots") {
    const auto t = TemplateSet::builtin();
    CHECK(t.get("judge_coverage").find("[[INSIGHT]]") != std::string::npos);
    CHECK(t.get("judge_coverage").find("[[BULLETS]]") != std::string::npos);
    CHECK(t.get("judge_coverage").find("[[FEW_SHOT_EXAMPLES]]") != std::string::npos);
    CHECK(t.get("summarize").find("[[N_BULLETS]]") != std::string::npos);
    CHECK_THROWS_AS(t.get("no_such_template"), ConfigError);
}

TEST_CASE("json extraction from chatty replies") {
    auto j = extract_json("Sure! Here it is: {\"coverage\": \"FULL_COVERAGE\", \"bullet\": 2} hope that helps");
    REQUIRE(j);
    CHECK((*j)["bullet"] == 2);
    auto a = extract_json("pairs: [[1, 4], [2, 7]]");
    REQUIRE(a);
    CHECK(a->size() == 2);
    CHECK_FALSE(extract_json("no json here"));
    CHECK_FALSE(extract_json("{broken"));
}

TEST_CASE("rng helpers are deterministic and in range") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        const auto x = uniform_index(a, 7);
        CHECK(x == uniform_index(b, 7));
        CHECK(x < 7);
        const auto y = uniform_int(a, -3, 3);
        uniform_int(b, -3, 3);
        CHECK(y >= -3);
        CHECK(y <= 3);
        const auto r = uniform_real(a);
        uniform_real(b);
        CHECK(r >= 0.0);
        CHECK(r < 1.0);
    }
    std::vector<int> v{1, 2, 3, 4, 5, 6};
    auto w = v;
    Rng c(9), d(9);
    shuffle(std::span(v), c);
    shuffle(std::span(w), d);
    CHECK(v == w);
    std::sort(v.begin(), v.end());
    CHECK(v == std::vector<int>{1, 2, 3, 4, 5, 6});
    CHECK(derive_rng(1, 2)() == derive_rng(1, 2)());
    CHECK(derive_rng(1, 2)() != derive_rng(1, 3)());
}
