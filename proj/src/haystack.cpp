#include "hayeval/haystack.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hayeval/errors.hpp"

namespace hayeval {

using nlohmann::json;

std::string_view to_string(Domain d) { return d == Domain::conversation ? "conversation" : "news"; }

Domain parse_domain(std::string_view s) {
    if (s == "conversation") return Domain::conversation;
    if (s == "news") return Domain::news;
    throw ConfigError("unknown topic domain '" + std::string(s) + "'");
}

const Subtopic& Haystack::subtopic(std::string_view id) const {
    for (const auto& s : subtopics)
        if (s.id == id) return s;
    throw NotFoundError("unknown subtopic '" + std::string(id) + "'");
}

const Insight& Haystack::insight(std::string_view id) const {
    auto it = insights.find(std::string(id));
    if (it == insights.end()) throw NotFoundError("unknown insight '" + std::string(id) + "'");
    return it->second;
}

const Document& Haystack::document(DocId id) const {
    if (id < 1 || static_cast<std::size_t>(id) > documents.size())
        throw NotFoundError("document id " + std::to_string(id) + " outside 1.." +
                            std::to_string(documents.size()));
    return documents[static_cast<std::size_t>(id - 1)];
}

std::vector<const Insight*> Haystack::insights_of(const Subtopic& s) const {
    std::vector<const Insight*> out;
    out.reserve(s.insight_ids.size());
    for (const auto& id : s.insight_ids) out.push_back(&insight(id));
    return out;
}

std::size_t Haystack::total_tokens() const {
    std::size_t total = 0;
    for (const auto& d : documents) total += d.token_count;
    return total;
}

const std::set<DocId>& gold_citations(const Haystack& h, std::string_view insight_id) {
    return h.insight(insight_id).gold_document_ids;
}

ValidationReport validate_haystack(const Haystack& h, const TokenCounter& counter) {
    ValidationReport report;
    auto add = [&](std::string kind, std::string msg, std::vector<std::string> ids) {
        report.push_back({std::move(kind), std::move(msg), std::move(ids)});
    };

    if (h.topic.title.empty()) add("topic", "topic title is empty", {h.topic.id});

    // document ids are 1..N contiguous
    for (std::size_t i = 0; i < h.documents.size(); ++i) {
        const auto& d = h.documents[i];
        if (d.id != static_cast<DocId>(i + 1))
            add("doc_ids", "document at position " + std::to_string(i + 1) + " has id " + std::to_string(d.id),
                {std::to_string(d.id)});
        if (h.config.token_counter == counter.name() && d.token_count != counter(d.text))
            add("token_count", "token_count disagrees with " + counter.name(), {std::to_string(d.id)});
        for (const auto& iid : d.assigned_insight_ids)
            if (!h.insights.contains(iid))
                add("unknown_insight", "document references unknown insight", {std::to_string(d.id), iid});
    }

    // every insight reachable from exactly one subtopic, and that subtopic is its owner
    std::map<InsightId, std::vector<SubtopicId>> owners;
    std::set<SubtopicId> subtopic_ids;
    for (const auto& s : h.subtopics) {
        if (!subtopic_ids.insert(s.id).second) add("duplicate_subtopic", "duplicate subtopic id", {s.id});
        if (s.insight_ids.empty()) add("empty_subtopic", "subtopic has no insights", {s.id});
        if (trim(s.query).empty()) add("empty_query", "subtopic query is empty", {s.id});
        std::set<InsightId> seen;
        for (const auto& iid : s.insight_ids) {
            if (!seen.insert(iid).second) add("duplicate_insight", "insight listed twice in subtopic", {s.id, iid});
            owners[iid].push_back(s.id);
            if (!h.insights.contains(iid))
                add("unknown_insight", "subtopic references unknown insight", {s.id, iid});
        }
    }

    const auto n_docs = static_cast<DocId>(h.documents.size());
    for (const auto& [iid, ins] : h.insights) {
        if (ins.id != iid) add("insight_key", "insight map key differs from insight id", {iid, ins.id});
        if (trim(ins.text).empty()) add("empty_text", "insight text is empty", {iid});
        auto it = owners.find(iid);
        const std::size_t n_owners = it == owners.end() ? 0 : std::set<SubtopicId>(it->second.begin(), it->second.end()).size();
        if (n_owners != 1)
            add("subtopic_membership",
                "insight reachable from " + std::to_string(n_owners) + " subtopics", {iid});
        else if (it->second.front() != ins.subtopic_id)
            add("subtopic_membership", "insight listed under a subtopic other than its own",
                {iid, it->second.front()});

        if (static_cast<int>(ins.gold_document_ids.size()) < h.config.min_repeats)
            add("min_repeats",
                "insight placed in " + std::to_string(ins.gold_document_ids.size()) + " documents, minimum " +
                    std::to_string(h.config.min_repeats),
                {iid});

        for (DocId d : ins.gold_document_ids) {
            if (d < 1 || d > n_docs) {
                add("doc_ids", "gold citation outside 1.." + std::to_string(n_docs), {iid, std::to_string(d)});
                continue;
            }
            if (!h.documents[static_cast<std::size_t>(d - 1)].assigned_insight_ids.contains(iid))
                add("bidirectional", "insight lists document but document omits insight",
                    {iid, std::to_string(d)});
        }
    }
    for (const auto& d : h.documents) {
        for (const auto& iid : d.assigned_insight_ids) {
            auto it = h.insights.find(iid);
            if (it != h.insights.end() && !it->second.gold_document_ids.contains(d.id))
                add("bidirectional", "document lists insight but insight omits document",
                    {iid, std::to_string(d.id)});
        }
    }
    return report;
}

json to_json(const SynthesisConfig& c) {
    return json{{"n_subtopics_target", c.n_subtopics_target},
                {"insights_per_subtopic", {c.insights_per_subtopic.min, c.insights_per_subtopic.max}},
                {"insights_per_document", {c.insights_per_document.min, c.insights_per_document.max}},
                {"n_documents", c.n_documents},
                {"words_per_document", c.words_per_document},
                {"min_repeats", c.min_repeats},
                {"max_doc_regenerations", c.max_doc_regenerations},
                {"max_chapter_retries", c.max_chapter_retries},
                {"max_subtopic_rounds", c.max_subtopic_rounds},
                {"rng_seed", c.rng_seed},
                {"token_counter", c.token_counter}};
}

namespace {

IntRange range_from_json(const json& j, IntRange fallback) {
    if (j.is_array() && j.size() == 2) return {j[0].get<int>(), j[1].get<int>()};
    if (j.is_object()) return {j.value("min", fallback.min), j.value("max", fallback.max)};
    if (j.is_number_integer()) return {j.get<int>(), j.get<int>()};
    throw ConfigError("range must be [min, max], {min, max} or an integer");
}

}  // namespace

SynthesisConfig synthesis_config_from_json(const json& j) {
    SynthesisConfig c;
    c.n_subtopics_target = j.value("n_subtopics_target", c.n_subtopics_target);
    if (j.contains("insights_per_subtopic"))
        c.insights_per_subtopic = range_from_json(j.at("insights_per_subtopic"), c.insights_per_subtopic);
    if (j.contains("insights_per_document"))
        c.insights_per_document = range_from_json(j.at("insights_per_document"), c.insights_per_document);
    c.n_documents = j.value("n_documents", c.n_documents);
    c.words_per_document = j.value("words_per_document", c.words_per_document);
    c.min_repeats = j.value("min_repeats", c.min_repeats);
    c.max_doc_regenerations = j.value("max_doc_regenerations", c.max_doc_regenerations);
    c.max_chapter_retries = j.value("max_chapter_retries", c.max_chapter_retries);
    c.max_subtopic_rounds = j.value("max_subtopic_rounds", c.max_subtopic_rounds);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.token_counter = j.value("token_counter", c.token_counter);
    return c;
}

json to_json(const Topic& t) {
    return json{{"id", t.id}, {"title", t.title}, {"domain", to_string(t.domain)}, {"seed_documents", t.seed_documents}};
}

Topic topic_from_json(const json& t) {
    Topic topic;
    topic.id = t.at("id").get<std::string>();
    topic.title = t.at("title").get<std::string>();
    topic.domain = parse_domain(t.value("domain", "news"));
    topic.seed_documents = t.value("seed_documents", std::vector<std::string>{});
    return topic;
}

json to_json(const Haystack& h) {
    json topic = to_json(h.topic);
    json subtopics = json::array();
    for (const auto& s : h.subtopics)
        subtopics.push_back({{"id", s.id},
                             {"topic_id", s.topic_id},
                             {"name", s.name},
                             {"query", s.query},
                             {"insight_ids", s.insight_ids}});
    json insights = json::object();
    for (const auto& [id, i] : h.insights)
        insights[id] = {{"id", i.id},
                        {"subtopic_id", i.subtopic_id},
                        {"text", i.text},
                        {"gold_document_ids", i.gold_document_ids}};
    json documents = json::array();
    for (const auto& d : h.documents)
        documents.push_back({{"id", d.id},
                             {"text", d.text},
                             {"assigned_insight_ids", d.assigned_insight_ids},
                             {"token_count", d.token_count}});
    return json{{"format_version", kHaystackFormatVersion},
                {"topic", std::move(topic)},
                {"subtopics", std::move(subtopics)},
                {"insights", std::move(insights)},
                {"documents", std::move(documents)},
                {"config", to_json(h.config)}};
}

Haystack haystack_from_json(const json& j) {
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kHaystackFormatVersion)
            throw ParseError("unsupported haystack format_version " + std::to_string(version));
        Haystack h;
        h.topic = topic_from_json(j.at("topic"));
        for (const auto& s : j.at("subtopics")) {
            h.subtopics.push_back({s.at("id").get<std::string>(), s.at("topic_id").get<std::string>(),
                                   s.at("name").get<std::string>(), s.at("query").get<std::string>(),
                                   s.at("insight_ids").get<std::vector<InsightId>>()});
        }
        for (const auto& [key, i] : j.at("insights").items()) {
            h.insights.emplace(key, Insight{i.at("id").get<std::string>(), i.at("subtopic_id").get<std::string>(),
                                            i.at("text").get<std::string>(),
                                            i.at("gold_document_ids").get<std::set<DocId>>()});
        }
        for (const auto& d : j.at("documents")) {
            h.documents.push_back({d.at("id").get<DocId>(), d.at("text").get<std::string>(),
                                   d.at("assigned_insight_ids").get<std::set<InsightId>>(),
                                   d.at("token_count").get<std::size_t>()});
        }
        h.config = synthesis_config_from_json(j.at("config"));
        return h;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed haystack: ") + e.what());
    }
}

std::string serialize_haystack(const Haystack& h) { return to_json(h).dump(2) + "\n"; }

Haystack parse_haystack(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("haystack is not valid JSON: ") + e.what());
    }
    return haystack_from_json(j);
}

void save_haystack(const Haystack& h, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_haystack(h));
}

Haystack load_haystack(const std::filesystem::path& path) { return parse_haystack(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace hayeval
