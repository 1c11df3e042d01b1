#pragma once

#include <filesystem>
#include <string>

#include "hayeval/haystack.hpp"
#include "hayeval/synthesis.hpp"

namespace fixtures {

using namespace hayeval;

/// Three documents, one subtopic, two insights; valid with min_repeats = 2.
inline Haystack tiny_haystack() {
    Haystack h;
    h.topic = {"t1", "Harbor expansion", Domain::news, {}};
    h.config.min_repeats = 2;
    h.config.n_documents = 3;
    h.subtopics.push_back({"st01", "t1", "Dredging costs", "What was reported about dredging costs?",
                           {"st01.i01", "st01.i02"}});
    h.insights["st01.i01"] = {"st01.i01", "st01", "The port authority paid 4 million dollars for dredging in 2019.",
                              {1, 2}};
    h.insights["st01.i02"] = {"st01.i02", "st01", "Dredging finished on March 3, 2021.", {2, 3}};
    const auto counter = TokenCounter::words_four_thirds();
    const char* texts[] = {
        "Local news. The port authority paid 4 million dollars for dredging in 2019.",
        "Budget review. The port authority paid 4 million dollars for dredging in 2019. Dredging finished on March 3, 2021.",
        "Dredging finished on March 3, 2021. Residents welcomed the news.",
    };
    const std::set<InsightId> assigned[] = {{"st01.i01"}, {"st01.i01", "st01.i02"}, {"st01.i02"}};
    for (int i = 0; i < 3; ++i) h.documents.push_back({i + 1, texts[i], assigned[i], counter(texts[i])});
    return h;
}

inline SynthesisConfig desk_config(std::uint64_t seed) {
    SynthesisConfig c;
    c.n_subtopics_target = 2;
    c.insights_per_subtopic = {3, 4};
    c.insights_per_document = {1, 3};
    c.n_documents = 20;
    c.words_per_document = 200;
    c.min_repeats = 3;
    c.rng_seed = seed;
    return c;
}

inline Haystack sentinel_haystack(const SynthesisConfig& c, Domain domain = Domain::news, std::size_t workers = 1) {
    SentinelGenerator gen;
    SentinelVerifier ver;
    BuildOptions opt;
    opt.workers = workers;
    return build_haystack({"desk", "Municipal infrastructure planning", domain, {}}, c, gen, ver, opt);
}

/// Fresh scratch directory under the test's working directory.
inline std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::current_path() / ("scratch_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace fixtures
