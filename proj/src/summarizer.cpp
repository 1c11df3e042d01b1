#include "hayeval/summarizer.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "hayeval/errors.hpp"

namespace hayeval {

SummaryRequest make_summary_request(const Haystack& h, const Subtopic& subtopic, std::vector<DocId> context,
                                    std::string summarizer) {
    SummaryRequest r;
    r.haystack_id = h.topic.id;
    r.subtopic_id = subtopic.id;
    r.query = subtopic.query;
    r.context_document_ids = std::move(context);
    r.n_bullets_required = static_cast<int>(subtopic.insight_ids.size());
    r.summarizer = std::move(summarizer);
    return r;
}

std::string build_summary_prompt(const SummaryRequest& request, const Haystack& h, const TemplateSet& templates) {
    if (request.context_document_ids.empty()) throw InputError("empty-context: no documents to summarize");
    std::string docs;
    for (DocId id : request.context_document_ids) {
        const auto& d = h.document(id);
        docs += "Document [" + std::to_string(d.id) + "]:\n" + d.text + "\n\n";
    }
    docs.resize(docs.size() - 2);
    return templates.render("summarize", {{"DOCUMENTS", docs},
                                          {"QUERY", request.query},
                                          {"N_BULLETS", std::to_string(request.n_bullets_required)}});
}

namespace {

/// Integers of a comma/space separated list, or nothing if the group is not one.
std::optional<std::vector<int>> citation_list(std::string_view body) {
    std::vector<int> ids;
    std::size_t i = 0;
    auto skip_sep = [&] {
        while (i < body.size() && (body[i] == ',' || std::isspace(static_cast<unsigned char>(body[i])))) ++i;
    };
    skip_sep();
    while (i < body.size()) {
        const auto start = i;
        while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) ++i;
        if (i == start) return std::nullopt;
        int value = 0;
        auto [ptr, ec] = std::from_chars(body.data() + start, body.data() + i, value);
        if (ec != std::errc{}) return std::nullopt;
        ids.push_back(value);
        if (i < body.size() && body[i] != ',' && !std::isspace(static_cast<unsigned char>(body[i]))) return std::nullopt;
        skip_sep();
    }
    if (ids.empty()) return std::nullopt;
    return ids;
}

std::string strip_marker(std::string line) {
    std::string_view v(line);
    if (v.starts_with("- ") || v.starts_with("* ") || v == "-" || v == "*") return trim(v.substr(1));
    if (v.starts_with("•")) return trim(v.substr(3));
    std::size_t i = 0;
    while (i < v.size() && std::isdigit(static_cast<unsigned char>(v[i]))) ++i;
    if (i > 0 && i < v.size() && (v[i] == '.' || v[i] == ')')) return trim(v.substr(i + 1));
    return line;
}

}  // namespace

CandidateSummary parse_summary(std::string_view raw_text) {
    CandidateSummary s;
    s.raw_text = std::string(raw_text);
    std::size_t total_words = 0;
    for (const auto& line : split_lines(raw_text)) {
        auto text = strip_marker(trim(line));
        if (text.empty()) continue;
        Bullet b;
        b.index = static_cast<int>(s.bullets.size()) + 1;
        std::string prose;  // bullet text without citation groups, for word counts
        std::size_t pos = 0;
        while (pos < text.size()) {
            const auto open = text.find('[', pos);
            const auto close = open == std::string::npos ? std::string::npos : text.find(']', open + 1);
            if (close == std::string::npos) {
                prose += text.substr(pos);
                break;
            }
            const auto inner_open = text.find('[', open + 1);
            if (inner_open != std::string::npos && inner_open < close) {
                prose += text.substr(pos, inner_open - pos);
                pos = inner_open;
                continue;
            }
            prose += text.substr(pos, open - pos);
            if (auto ids = citation_list(std::string_view(text).substr(open + 1, close - open - 1))) {
                b.cited_document_ids.insert(ids->begin(), ids->end());
                prose += ' ';
            } else {
                ++s.ignored_bracket_groups;
                prose += text.substr(open, close - open + 1);
            }
            pos = close + 1;
        }
        total_words += word_count(prose);
        b.text = std::move(text);
        s.bullets.push_back(std::move(b));
    }
    if (s.bullets.empty()) throw ParseError("summary has no bullet points", std::string(raw_text));
    s.words_per_bullet = static_cast<double>(total_words) / static_cast<double>(s.bullets.size());
    return s;
}

std::string render_summary(const CandidateSummary& s) {
    std::string out;
    for (const auto& b : s.bullets) out += "- " + b.text + "\n";
    return out;
}

std::set<int> out_of_range_citations(const CandidateSummary& s, std::size_t n_documents) {
    std::set<int> out;
    for (const auto& b : s.bullets)
        for (int id : b.cited_document_ids)
            if (id < 1 || static_cast<std::size_t>(id) > n_documents) out.insert(id);
    return out;
}

nlohmann::json to_json(const CandidateSummary& s) {
    nlohmann::json bullets = nlohmann::json::array();
    for (const auto& b : s.bullets)
        bullets.push_back({{"index", b.index}, {"text", b.text}, {"cited_document_ids", b.cited_document_ids}});
    return {{"bullets", std::move(bullets)},
            {"words_per_bullet", s.words_per_bullet},
            {"ignored_bracket_groups", s.ignored_bracket_groups}};
}

// ---------------------------------------------------------------------------
// Summarizers

GatewaySummarizer::GatewaySummarizer(Gateway& gateway, std::string endpoint, GenerateParams params)
    : gateway_(gateway), endpoint_(std::move(endpoint)), params_(params) {}

SummarizerOutput GatewaySummarizer::summarize(const SummaryRequest&, const std::string& prompt, const Haystack&) {
    auto r = gateway_.generate(endpoint_, prompt, params_);
    return {std::move(r.text), std::move(r.usage)};
}

namespace {

std::string cite(const std::vector<DocId>& ids) {
    std::string out = "[";
    for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? "," : "") + std::to_string(ids[i]);
    return out + "]";
}

std::string perfect_within(const SummaryRequest& request, const Haystack& h, std::size_t k) {
    const std::size_t n = std::min(k, request.context_document_ids.size());
    const std::set<DocId> visible(request.context_document_ids.begin(),
                                  request.context_document_ids.begin() + static_cast<std::ptrdiff_t>(n));
    std::string out;
    for (const auto* insight : h.insights_of(h.subtopic(request.subtopic_id))) {
        std::vector<DocId> cited;
        for (DocId d : insight->gold_document_ids)
            if (visible.contains(d)) cited.push_back(d);
        if (cited.empty()) continue;
        out += "- " + insight->text + " " + cite(cited) + "\n";
    }
    return out;
}

SummarizerOutput offline_output(const std::string& name, std::string text, const std::string& prompt) {
    UsageRecord u;
    u.endpoint = name;
    u.input_tokens = TokenCounter::words_four_thirds()(prompt);
    u.output_tokens = TokenCounter::words_four_thirds()(text);
    return {std::move(text), u};
}

}  // namespace

SummarizerOutput PerfectSummarizer::summarize(const SummaryRequest& request, const std::string& prompt,
                                              const Haystack& h) {
    return offline_output("mock:perfect", perfect_within(request, h, request.context_document_ids.size()), prompt);
}

SummarizerOutput FirstKSummarizer::summarize(const SummaryRequest& request, const std::string& prompt,
                                             const Haystack& h) {
    return offline_output("mock:first" + std::to_string(k_), perfect_within(request, h, k_), prompt);
}

SummarizerOutput NoisySummarizer::summarize(const SummaryRequest& request, const std::string& prompt,
                                            const Haystack& h) {
    const std::set<DocId> visible(request.context_document_ids.begin(), request.context_document_ids.end());
    std::string out;
    std::size_t i = 0;
    for (const auto* insight : h.insights_of(h.subtopic(request.subtopic_id))) {
        const auto slot = i++ % 3;
        std::vector<DocId> gold_visible;
        for (DocId d : insight->gold_document_ids)
            if (visible.contains(d)) gold_visible.push_back(d);
        if (gold_visible.empty() || slot == 2) continue;
        if (slot == 0) {
            // full text, drops the last supporting document
            if (gold_visible.size() > 1) gold_visible.pop_back();
            out += "- " + insight->text + " " + cite(gold_visible) + "\n";
        } else {
            // first 60% of the words, half the citations plus one wrong document
            const auto words = split_words(insight->text);
            const std::size_t keep = std::max<std::size_t>(1, (words.size() * 3 + 4) / 5);
            std::string partial;
            for (std::size_t w = 0; w < keep; ++w) partial += (w ? " " : "") + std::string(words[w]);
            std::vector<DocId> cited(gold_visible.begin(),
                                     gold_visible.begin() + static_cast<std::ptrdiff_t>((gold_visible.size() + 1) / 2));
            for (DocId d : request.context_document_ids) {
                if (!insight->gold_document_ids.contains(d)) {
                    cited.push_back(d);
                    break;
                }
            }
            std::sort(cited.begin(), cited.end());
            out += "- Reportedly, " + partial + " " + cite(cited) + "\n";
        }
    }
    if (out.empty()) out = "- No relevant information was found in the documents.\n";
    return offline_output("mock:noisy", std::move(out), prompt);
}

std::unique_ptr<Summarizer> make_summarizer(const std::string& name, Gateway* gateway) {
    if (name == "mock:perfect") return std::make_unique<PerfectSummarizer>();
    if (name == "mock:noisy") return std::make_unique<NoisySummarizer>();
    if (name.starts_with("mock:first")) {
        const auto digits = name.substr(10);
        std::size_t k = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
        if (ec != std::errc{} || ptr != digits.data() + digits.size() || k == 0)
            throw ConfigError("bad mock summarizer '" + name + "'");
        return std::make_unique<FirstKSummarizer>(k);
    }
    if (name.starts_with("mock:")) throw ConfigError("unknown mock summarizer '" + name + "'");
    if (!gateway) throw ConfigError("summarizer '" + name + "' needs an endpoint registry");
    gateway->registry().get(name);
    return std::make_unique<GatewaySummarizer>(*gateway, name);
}

SummarizationResult run_summarization(const SummaryRequest& request, const Haystack& h, Summarizer& summarizer,
                                      const TemplateSet& templates,
                                      const std::function<void(const std::string&)>& persist_raw) {
    const auto prompt = build_summary_prompt(request, h, templates);
    SummarizerOutput out;
    try {
        out = summarizer.summarize(request, prompt, h);
    } catch (const GatewayError& e) {
        throw RunError("summarizer '" + request.summarizer + "' failed: " + e.what());
    }
    if (persist_raw) persist_raw(out.text);
    SummarizationResult r;
    r.raw_text = out.text;
    r.usage = out.usage;
    r.summary = parse_summary(out.text);
    return r;
}

}  // namespace hayeval
