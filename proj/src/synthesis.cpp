#include "hayeval/synthesis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "hayeval/json_extract.hpp"
#include "hayeval/parallel.hpp"

namespace hayeval {

using nlohmann::json;

std::string_view to_string(SynthesisStage s) {
    switch (s) {
        case SynthesisStage::subtopics: return "subtopics";
        case SynthesisStage::subtopic_overlap: return "subtopic_overlap";
        case SynthesisStage::insights: return "insights";
        case SynthesisStage::insight_classify: return "insight_classify";
        case SynthesisStage::document: return "document";
        case SynthesisStage::document_edit: return "document_edit";
        case SynthesisStage::chapter: return "chapter";
        case SynthesisStage::query: return "query";
    }
    return "unknown";
}

namespace {

std::uint64_t call_seed(std::uint64_t base, std::string_view stage, std::string_view target, int attempt) {
    const auto h = sha256_hex(std::to_string(base) + "|" + std::string(stage) + "|" + std::string(target) + "|" +
                              std::to_string(attempt));
    return std::stoull(h.substr(0, 16), nullptr, 16);
}

std::string bullet_list(const std::vector<std::string>& items) {
    if (items.empty()) return "(none)";
    std::string out;
    for (const auto& i : items) out += "- " + i + "\n";
    out.pop_back();
    return out;
}

std::string numbered_list(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += std::to_string(i + 1) + ". " + items[i] + "\n";
    if (!out.empty()) out.pop_back();
    return out;
}

/// Items of a "- item" list; "(none)" yields nothing.
std::vector<std::string> parse_bullet_list(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& line : split_lines(text)) {
        const auto t = trim(line);
        if (t.starts_with("- ")) out.push_back(trim(t.substr(2)));
    }
    return out;
}

/// JSON list of strings, or one item per non-empty line as a fallback.
std::vector<std::string> parse_string_list(std::string_view text) {
    std::vector<std::string> out;
    if (auto j = extract_json(text); j && j->is_array()) {
        for (const auto& item : *j)
            if (item.is_string() && !trim(item.get<std::string>()).empty()) out.push_back(trim(item.get<std::string>()));
        return out;
    }
    for (const auto& line : split_lines(text)) {
        auto t = trim(line);
        while (!t.empty() && (t.front() == '-' || t.front() == '*' || std::isdigit(static_cast<unsigned char>(t.front())) ||
                              t.front() == '.' || t.front() == ')'))
            t = trim(std::string_view(t).substr(1));
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

json partial_json(const std::vector<Subtopic>& subtopics, const std::vector<Insight>& insights = {},
                  const std::vector<Document>& documents = {}) {
    json j{{"subtopics", json::array()}, {"insights", json::array()}, {"documents", json::array()}};
    for (const auto& s : subtopics)
        j["subtopics"].push_back({{"id", s.id}, {"name", s.name}, {"query", s.query}, {"insight_ids", s.insight_ids}});
    for (const auto& i : insights) j["insights"].push_back({{"id", i.id}, {"subtopic_id", i.subtopic_id}, {"text", i.text}});
    for (const auto& d : documents)
        j["documents"].push_back({{"id", d.id}, {"text", d.text}, {"assigned_insight_ids", d.assigned_insight_ids}});
    return j;
}

void log_call(SynthesisLog* log, SynthesisStage stage, const std::string& target, int attempt, bool accepted,
              std::string note = {}) {
    if (log) log->add({std::string(to_string(stage)), target, attempt, accepted, std::move(note)});
}

std::string call_generator(TextGenerator& generator, const GenerationRequest& request, const std::string& stage_label,
                           const json& partial) {
    try {
        return generator.generate(request);
    } catch (const SynthesisError&) {
        throw;
    } catch (const std::exception& e) {
        throw SynthesisError(stage_label, "generator failed for " + request.target + ": " + e.what(), partial);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Log

void SynthesisLog::add(SynthesisLogRecord r) {
    std::lock_guard lock(mu_);
    records_.push_back(std::move(r));
}

void SynthesisLog::append(const SynthesisLog& other) {
    auto recs = other.records();
    std::lock_guard lock(mu_);
    records_.insert(records_.end(), recs.begin(), recs.end());
}

std::vector<SynthesisLogRecord> SynthesisLog::records() const {
    std::lock_guard lock(mu_);
    return records_;
}

std::string SynthesisLog::to_jsonl() const {
    std::string out;
    for (const auto& r : records()) {
        json j{{"stage", r.stage}, {"target", r.target}, {"attempt", r.attempt}, {"accepted", r.accepted}};
        if (!r.note.empty()) j["note"] = r.note;
        out += j.dump() + "\n";
    }
    return out;
}

DocumentVerificationError::DocumentVerificationError(DocId doc, std::set<InsightId> missing_ids,
                                                     std::set<InsightId> leaked_ids, int attempts_made)
    : SynthesisError("document", [&] {
          std::string msg = "document " + std::to_string(doc) + " failed verification after " +
                            std::to_string(attempts_made) + " attempts; missing:";
          for (const auto& m : missing_ids) msg += " " + m;
          msg += "; leaked:";
          for (const auto& l : leaked_ids) msg += " " + l;
          return msg;
      }()),
      document_id(doc),
      missing(std::move(missing_ids)),
      leaked(std::move(leaked_ids)),
      attempts(attempts_made) {}

// ---------------------------------------------------------------------------
// Generators, verifiers, classifier

GatewayGenerator::GatewayGenerator(Gateway& gateway, std::string default_endpoint,
                                   std::map<SynthesisStage, std::string> stage_endpoints)
    : gateway_(gateway), default_endpoint_(std::move(default_endpoint)), stage_endpoints_(std::move(stage_endpoints)) {}

std::string GatewayGenerator::generate(const GenerationRequest& request) {
    auto it = stage_endpoints_.find(request.stage);
    const std::string& endpoint = it == stage_endpoints_.end() ? default_endpoint_ : it->second;
    GenerateParams params;
    // Regenerations must sample; a greedy repeat would return the rejected text again.
    const bool sample = request.attempt > 1 || request.stage == SynthesisStage::subtopics;
    params.temperature = sample ? 1.0 : 0.0;
    params.seed = request.seed;
    params.max_output_tokens = 4096;
    return gateway_.generate(endpoint, request.prompt, params).text;
}

namespace {

constexpr std::array<std::string_view, 40> kThemes = {
    "Budget planning",      "Staff turnover",       "Exam preparation",    "Housing costs",
    "Transport delays",     "Sleep habits",         "Study groups",        "Internship search",
    "Counseling services",  "Library hours",        "Campus dining",       "Sports facilities",
    "Scholarship deadlines", "Research funding",    "Lab safety",          "Online courses",
    "Career fairs",         "Student clubs",        "Tuition fees",        "Exchange programs",
    "Graduation ceremony",  "Parking rules",        "Energy usage",        "Recycling program",
    "Course registration",  "Faculty hiring",       "Alumni donations",    "Campus security",
    "Health insurance",     "Textbook prices",      "Water quality",       "Noise complaints",
    "Wifi coverage",        "Printing quotas",      "Language classes",    "Volunteer work",
    "Weather disruptions",  "Museum visits",        "Music festival",      "Robotics contest",
};

constexpr std::array<std::string_view, 12> kEntities = {
    "the Orwell committee", "Dr. Haldane",         "the Northgate office", "Mayor Quinlan",
    "the Pell foundation",  "Professor Okafor",    "the Riverside board",  "Captain Moreau",
    "the Tessaro group",    "Councillor Achebe",   "the Linwood trust",    "Ms. Vasquez",
};

constexpr std::array<std::string_view, 8> kUnits = {"participants", "dollars", "hours",   "sessions",
                                                    "complaints",   "units",   "tickets", "applications"};

constexpr std::array<std::string_view, 12> kMonths = {"January", "February", "March",     "April",   "May",      "June",
                                                      "July",    "August",   "September", "October", "November", "December"};

constexpr std::array<std::string_view, 48> kFiller = {
    "people",   "said",     "the",      "week",     "was",      "busy",     "and",      "several",
    "groups",   "met",      "again",    "to",       "compare",  "notes",    "about",    "plans",
    "while",    "others",   "waited",   "for",      "updates",  "from",     "local",    "sources",
    "everyone", "agreed",   "that",     "more",     "time",     "would",    "help",     "with",
    "progress", "although", "some",     "remained", "unsure",   "how",      "things",   "might",
    "change",   "later",    "this",     "season",   "as",       "usual",    "around",   "town",
};

std::string filler_sentence(Rng& rng, int words) {
    std::string s;
    for (int i = 0; i < words; ++i) {
        if (!s.empty()) s.push_back(' ');
        s += kFiller[uniform_index(rng, kFiller.size())];
    }
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s + ".";
}

/// Filler prose of about `words` words with `sentences` placed at seeded positions.
std::string compose_with(Rng& rng, int words, const std::vector<std::string>& sentences, std::string_view lead = {}) {
    int used = 0;
    for (const auto& s : sentences) used += static_cast<int>(word_count(s));
    std::vector<std::string> parts;
    int remaining = std::max(0, words - used - static_cast<int>(word_count(lead)));
    while (remaining > 0) {
        const int n = std::min(remaining, 8 + static_cast<int>(uniform_index(rng, 8)));
        parts.push_back(filler_sentence(rng, n));
        remaining -= n;
    }
    for (const auto& s : sentences) {
        const auto pos = uniform_index(rng, parts.size() + 1);
        parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(pos), s);
    }
    std::string out(lead);
    for (const auto& p : parts) {
        if (!out.empty()) out.push_back(' ');
        out += p;
    }
    return out;
}

std::string var(const GenerationRequest& r, std::string_view name) {
    auto it = r.vars.find(name);
    return it == r.vars.end() ? std::string{} : it->second;
}

std::vector<std::string> numbered_items(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& line : split_lines(text)) {
        const auto dot = line.find(". ");
        if (dot != std::string::npos && dot > 0) out.push_back(line.substr(dot + 2));
    }
    return out;
}

}  // namespace

std::string SentinelGenerator::generate(const GenerationRequest& request) {
    Rng rng(request.seed);
    switch (request.stage) {
        case SynthesisStage::subtopics: {
            const int count = std::stoi(var(request, "COUNT"));
            std::set<std::string> avoid;
            for (const auto& a : parse_bullet_list(var(request, "AVOID"))) avoid.insert(to_lower(a));
            std::vector<std::string> pool;
            for (auto t : kThemes)
                if (!avoid.contains(to_lower(t))) pool.emplace_back(t);
            shuffle(std::span(pool), rng);
            pool.resize(std::min<std::size_t>(pool.size(), static_cast<std::size_t>(count)));
            return json(pool).dump();
        }
        case SynthesisStage::subtopic_overlap:
            return "[]";
        case SynthesisStage::insights: {
            const int count = std::stoi(var(request, "COUNT"));
            const std::string name = var(request, "SUBTOPIC");
            json out = json::array();
            for (int k = 1; k <= count; ++k) {
                const auto code = sha256_hex(name + "|" + std::to_string(request.seed) + "|" + std::to_string(k));
                std::string ref = to_lower(code.substr(0, 8));
                std::transform(ref.begin(), ref.end(), ref.begin(),
                               [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
                const auto& entity = kEntities[uniform_index(rng, kEntities.size())];
                const auto& unit = kUnits[uniform_index(rng, kUnits.size())];
                const auto& month = kMonths[uniform_index(rng, kMonths.size())];
                out.push_back(name + ": " + std::string(entity) + " reported " +
                              std::to_string(uniform_int(rng, 12, 9800)) + " " + std::string(unit) + " on " +
                              std::string(month) + " " + std::to_string(uniform_int(rng, 1, 28)) + ", " +
                              std::to_string(uniform_int(rng, 2015, 2024)) + " (ref " + ref + ").");
            }
            return out.dump();
        }
        case SynthesisStage::insight_classify: {
            const auto subtopics = numbered_items(var(request, "SUBTOPICS"));
            const auto insights = numbered_items(var(request, "INSIGHTS"));
            json out = json::object();
            for (std::size_t i = 0; i < insights.size(); ++i)
                for (std::size_t s = 0; s < subtopics.size(); ++s)
                    if (insights[i].starts_with(subtopics[s] + ":")) out[std::to_string(i + 1)] = s + 1;
            return out.dump();
        }
        case SynthesisStage::document:
            return compose_with(rng, std::stoi(var(request, "WORDS")), parse_bullet_list(var(request, "INSIGHTS")));
        case SynthesisStage::document_edit: {
            std::string doc = var(request, "DOCUMENT");
            for (const auto& extra : parse_bullet_list(var(request, "EXTRANEOUS"))) {
                for (auto pos = doc.find(extra); pos != std::string::npos; pos = doc.find(extra)) doc.erase(pos, extra.size());
            }
            for (const auto& missing : parse_bullet_list(var(request, "MISSING"))) doc += " " + missing;
            return trim(doc);
        }
        case SynthesisStage::chapter: {
            const std::string lead = "Speaker " + std::string(1, static_cast<char>('A' + uniform_index(rng, 4))) + ":";
            return compose_with(rng, std::stoi(var(request, "WORDS")), {var(request, "INSIGHT")}, lead);
        }
        case SynthesisStage::query:
            return "What do the documents say about " + to_lower(var(request, "SUBTOPIC")) + "?";
    }
    return {};
}

std::set<InsightId> SentinelVerifier::present(const std::string& text, const std::vector<const Insight*>& candidates) {
    const auto haystack = normalize_text(text);
    std::set<InsightId> out;
    for (const auto* i : candidates)
        if (haystack.find(normalize_text(i->text)) != std::string::npos) out.insert(i->id);
    return out;
}

LlmVerifier::LlmVerifier(Gateway& gateway, std::string endpoint, TemplateSet templates, int max_malformed_retries)
    : gateway_(gateway),
      endpoint_(std::move(endpoint)),
      templates_(std::move(templates)),
      max_malformed_retries_(max_malformed_retries) {}

std::set<InsightId> LlmVerifier::present(const std::string& text, const std::vector<const Insight*>& candidates) {
    std::vector<std::string> texts;
    for (const auto* c : candidates) texts.push_back(c->text);
    const auto prompt = templates_.render("insight_presence", {{"DOCUMENT", text}, {"INSIGHTS", numbered_list(texts)}});
    std::string last;
    for (int attempt = 0; attempt <= max_malformed_retries_; ++attempt) {
        GenerateParams params;
        params.temperature = attempt == 0 ? 0.0 : 1.0;
        params.seed = static_cast<std::uint64_t>(attempt);
        last = gateway_.generate(endpoint_, prompt, params).text;
        auto j = extract_json(last);
        if (!j || !j->is_array()) continue;
        std::set<InsightId> out;
        bool ok = true;
        for (const auto& item : *j) {
            if (!item.is_number_integer()) {
                ok = false;
                break;
            }
            const auto n = item.get<long long>();
            if (n < 1 || n > static_cast<long long>(candidates.size())) {
                ok = false;
                break;
            }
            out.insert(candidates[static_cast<std::size_t>(n - 1)]->id);
        }
        if (ok) return out;
    }
    throw SynthesisError("verify", "verifier reply malformed after retries: " + last.substr(0, 200));
}

std::vector<std::optional<std::size_t>> GeneratorClassifier::classify(const std::vector<std::string>& subtopic_names,
                                                                      const std::vector<std::string>& insight_texts) {
    GenerationRequest req;
    req.stage = SynthesisStage::insight_classify;
    req.vars = {{"SUBTOPICS", numbered_list(subtopic_names)}, {"INSIGHTS", numbered_list(insight_texts)}};
    req.prompt = templates_.render("insight_classify", req.vars);
    req.target = "classification";
    const auto reply = generator_.generate(req);
    std::vector<std::optional<std::size_t>> out(insight_texts.size());
    auto j = extract_json(reply);
    if (!j || !j->is_object()) return out;
    for (const auto& [key, value] : j->items()) {
        std::size_t idx = 0;
        try {
            idx = std::stoul(key);
        } catch (const std::exception&) {
            continue;
        }
        if (idx < 1 || idx > out.size() || !value.is_number_integer()) continue;
        const auto s = value.get<long long>();
        if (s >= 1 && s <= static_cast<long long>(subtopic_names.size())) out[idx - 1] = static_cast<std::size_t>(s - 1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline stages

void check_feasibility(const SynthesisConfig& c, std::size_t total_insights) {
    auto positive = [](int v, const char* name) {
        if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(c.n_subtopics_target, "n_subtopics_target");
    positive(c.n_documents, "n_documents");
    positive(c.words_per_document, "words_per_document");
    positive(c.insights_per_subtopic.min, "insights_per_subtopic.min");
    positive(c.insights_per_document.min, "insights_per_document.min");
    if (c.min_repeats < 0) throw ConfigError("min_repeats must be non-negative");
    if (c.max_doc_regenerations < 0 || c.max_chapter_retries < 0 || c.max_subtopic_rounds < 0)
        throw ConfigError("retry bounds must be non-negative");
    if (c.insights_per_subtopic.max < c.insights_per_subtopic.min)
        throw ConfigError("insights_per_subtopic range is empty");
    if (c.insights_per_document.max < c.insights_per_document.min)
        throw ConfigError("insights_per_document range is empty");
    if (c.min_repeats > c.n_documents)
        throw ConfigError("min_repeats " + std::to_string(c.min_repeats) + " exceeds n_documents " +
                          std::to_string(c.n_documents));
    const double capacity = c.n_documents * std::min(c.insights_per_document.mean(), static_cast<double>(total_insights));
    const double needed = static_cast<double>(total_insights) * c.min_repeats;
    if (capacity < needed) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "infeasible placement: %d documents x %.2f insights per document = %.1f slots < %zu insights x "
                      "%d repeats = %.0f",
                      c.n_documents, c.insights_per_document.mean(), capacity, total_insights, c.min_repeats, needed);
        throw ConfigError(buf);
    }
}

std::vector<Subtopic> generate_subtopics(const Topic& topic, TextGenerator& generator, const SynthesisConfig& config,
                                         const TemplateSet& templates, SynthesisLog* log) {
    const auto target = static_cast<std::size_t>(config.n_subtopics_target);
    std::vector<std::string> names;
    std::vector<std::string> rejected;
    for (int round = 1; round <= config.max_subtopic_rounds + 1; ++round) {
        const auto need = target - names.size();
        std::vector<std::string> avoid = names;
        avoid.insert(avoid.end(), rejected.begin(), rejected.end());
        GenerationRequest req;
        req.stage = SynthesisStage::subtopics;
        req.vars = {{"TOPIC", topic.title}, {"COUNT", std::to_string(need)}, {"AVOID", bullet_list(avoid)}};
        req.prompt = templates.render("subtopics", req.vars);
        req.target = topic.id;
        req.attempt = round;
        req.seed = call_seed(config.rng_seed, "subtopics", topic.id, round);
        auto drafts = parse_string_list(call_generator(generator, req, "subtopics", partial_json({})));
        log_call(log, req.stage, req.target, round, !drafts.empty(), std::to_string(drafts.size()) + " drafts");
        for (auto& d : drafts)
            if (names.size() < target) names.push_back(std::move(d));

        // Exact duplicates are dropped locally; the judge handles semantic overlap.
        std::set<std::size_t> drop;
        for (std::size_t i = 0; i < names.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (normalize_text(names[i]) == normalize_text(names[j])) drop.insert(i);

        if (names.size() >= 2) {
            GenerationRequest judge;
            judge.stage = SynthesisStage::subtopic_overlap;
            judge.vars = {{"TOPIC", topic.title}, {"SUBTOPICS", numbered_list(names)}};
            judge.prompt = templates.render("subtopic_overlap", judge.vars);
            judge.target = topic.id;
            judge.attempt = round;
            judge.seed = call_seed(config.rng_seed, "subtopic_overlap", topic.id, round);
            const auto reply = call_generator(generator, judge, "subtopics", partial_json({}));
            if (auto j = extract_json(reply); j && j->is_array()) {
                for (const auto& pair : *j) {
                    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
                        !pair[1].is_number_integer())
                        continue;
                    const auto a = pair[0].get<long long>(), b = pair[1].get<long long>();
                    const auto later = std::max(a, b);
                    if (a != b && std::min(a, b) >= 1 && later <= static_cast<long long>(names.size()))
                        drop.insert(static_cast<std::size_t>(later - 1));
                }
            }
            log_call(log, judge.stage, judge.target, round, drop.empty(),
                     std::to_string(drop.size()) + " overlapping drafts");
        }
        for (auto it = drop.rbegin(); it != drop.rend(); ++it) {
            rejected.push_back(names[*it]);
            names.erase(names.begin() + static_cast<std::ptrdiff_t>(*it));
        }
        if (names.size() == target) {
            std::vector<Subtopic> out;
            for (std::size_t i = 0; i < names.size(); ++i) {
                char id[16];
                std::snprintf(id, sizeof id, "st%02zu", i + 1);
                out.push_back({id, topic.id, names[i], "", {}});
            }
            return out;
        }
    }
    std::vector<Subtopic> partial;
    for (const auto& n : names) partial.push_back({"", topic.id, n, "", {}});
    throw SynthesisError("subtopics",
                         "only " + std::to_string(names.size()) + " distinct subtopics of " + std::to_string(target) +
                             " after " + std::to_string(config.max_subtopic_rounds) + " regeneration rounds",
                         partial_json(partial));
}

std::vector<Insight> generate_insights(const Topic& topic, const Subtopic& subtopic,
                                       const std::vector<std::pair<Subtopic, std::vector<Insight>>>& siblings,
                                       TextGenerator& generator, InsightClassifier& classifier,
                                       const SynthesisConfig& config, const TemplateSet& templates, Rng& rng,
                                       SynthesisLog* log) {
    const int count = uniform_int(rng, config.insights_per_subtopic.min, config.insights_per_subtopic.max);
    std::vector<std::string> avoid;
    if (topic.domain == Domain::conversation) {
        for (const auto& [s, ins] : siblings) {
            avoid.push_back("Subtopic: " + s.name);
            for (const auto& i : ins) avoid.push_back("Insight: " + i.text);
        }
    }
    GenerationRequest req;
    req.stage = SynthesisStage::insights;
    req.vars = {{"TOPIC", topic.title},
                {"SUBTOPIC", subtopic.name},
                {"COUNT", std::to_string(count)},
                {"AVOID", bullet_list(avoid)}};
    req.prompt = templates.render("insights", req.vars);
    req.target = subtopic.id;
    req.seed = call_seed(config.rng_seed, "insights", subtopic.id, 1);
    auto drafts = parse_string_list(call_generator(generator, req, "insights", partial_json({subtopic})));
    if (drafts.size() > static_cast<std::size_t>(config.insights_per_subtopic.max))
        drafts.resize(static_cast<std::size_t>(config.insights_per_subtopic.max));
    log_call(log, req.stage, req.target, 1, true, std::to_string(drafts.size()) + " drafts");

    // local duplicate removal
    std::vector<std::string> unique;
    std::set<std::string> seen;
    for (auto& d : drafts)
        if (seen.insert(normalize_text(d)).second) unique.push_back(std::move(d));

    std::vector<bool> keep(unique.size(), true);
    if (topic.domain == Domain::news && !unique.empty()) {
        std::vector<std::string> names{subtopic.name};
        for (const auto& [s, _] : siblings) names.push_back(s.name);
        const auto classes = classifier.classify(names, unique);
        for (std::size_t i = 0; i < unique.size(); ++i) {
            const auto c = i < classes.size() ? classes[i] : std::nullopt;
            if (c && *c == 0) continue;
            keep[i] = false;
            const std::string reason = c ? "classified under " + names[*c] : std::string("unclassified");
            log_call(log, SynthesisStage::insight_classify, subtopic.id, 1, false,
                     "dropped insight " + std::to_string(i + 1) + ": " + reason);
        }
    }

    std::vector<Insight> out;
    for (std::size_t i = 0; i < unique.size(); ++i) {
        if (!keep[i]) continue;
        char id[32];
        std::snprintf(id, sizeof id, "%s.i%02zu", subtopic.id.c_str(), out.size() + 1);
        out.push_back({id, subtopic.id, unique[i], {}});
    }
    if (static_cast<int>(out.size()) < config.insights_per_subtopic.min)
        throw SynthesisError("insights",
                             subtopic.id + " kept " + std::to_string(out.size()) + " insights after verification, minimum " +
                                 std::to_string(config.insights_per_subtopic.min),
                             partial_json({subtopic}, out));
    return out;
}

InsightAssignment assign_insights(const std::vector<InsightId>& insights, const SynthesisConfig& config, Rng& rng) {
    check_feasibility(config, insights.size());
    InsightAssignment a;
    a.per_document.resize(static_cast<std::size_t>(config.n_documents));
    for (const auto& id : insights) a.placement_counts[id] = 0;
    if (insights.empty()) return a;

    // Each document draws a seeded-random set, preferring the least-placed
    // insights so the floor is usually met without repair.
    std::vector<InsightId> pool = insights;
    for (auto& doc : a.per_document) {
        const int k = std::min<int>(uniform_int(rng, config.insights_per_document.min, config.insights_per_document.max),
                                    static_cast<int>(insights.size()));
        shuffle(std::span(pool), rng);
        std::stable_sort(pool.begin(), pool.end(), [&](const InsightId& x, const InsightId& y) {
            return a.placement_counts[x] < a.placement_counts[y];
        });
        for (int i = 0; i < k; ++i) {
            doc.insert(pool[static_cast<std::size_t>(i)]);
            ++a.placement_counts[pool[static_cast<std::size_t>(i)]];
        }
    }

    // Repair: top up under-placed insights in the least-loaded documents.
    for (const auto& id : insights) {
        while (a.placement_counts[id] < config.min_repeats) {
            std::size_t best = a.per_document.size();
            for (std::size_t d = 0; d < a.per_document.size(); ++d) {
                if (a.per_document[d].contains(id)) continue;
                if (best == a.per_document.size() || a.per_document[d].size() < a.per_document[best].size()) best = d;
            }
            if (best == a.per_document.size())
                throw ConfigError("cannot place insight " + id + " in " + std::to_string(config.min_repeats) + " documents");
            a.per_document[best].insert(id);
            ++a.placement_counts[id];
        }
    }
    return a;
}

GeneratedDocument generate_document(const DocumentSlot& slot, const Topic& topic,
                                    const std::vector<const Insight*>& assigned,
                                    const std::vector<const Insight*>& all_insights,
                                    const std::map<SubtopicId, std::string>& subtopic_names, TextGenerator& generator,
                                    InsightVerifier& verifier, const SynthesisConfig& config,
                                    const TemplateSet& templates, const TokenCounter& counter, SynthesisLog* log) {
    if (assigned.empty()) throw SynthesisError("document", "document " + std::to_string(slot.id) + " has no insights");
    const std::string target = "doc " + std::to_string(slot.id);
    std::set<InsightId> wanted;
    std::vector<std::string> wanted_texts;
    for (const auto* i : assigned) {
        wanted.insert(i->id);
        wanted_texts.push_back(i->text);
    }
    auto text_of = [&](const std::set<InsightId>& ids) {
        std::vector<std::string> out;
        for (const auto* i : all_insights)
            if (ids.contains(i->id)) out.push_back(i->text);
        return out;
    };
    auto diff = [&](const std::set<InsightId>& found) {
        std::set<InsightId> missing, leaked;
        std::set_difference(wanted.begin(), wanted.end(), found.begin(), found.end(),
                            std::inserter(missing, missing.end()));
        std::set_difference(found.begin(), found.end(), wanted.begin(), wanted.end(), std::inserter(leaked, leaked.end()));
        return std::pair{missing, leaked};
    };

    GeneratedDocument out;
    std::string text;

    if (topic.domain == Domain::news) {
        GenerationRequest req;
        req.stage = SynthesisStage::document;
        req.vars = {{"TOPIC", topic.title},
                    {"INSIGHTS", bullet_list(wanted_texts)},
                    {"WORDS", std::to_string(config.words_per_document)}};
        req.prompt = templates.render("document", req.vars);
        req.target = target;
        req.seed = call_seed(slot.seed, "document", target, 1);
        text = call_generator(generator, req, "document", json::object());
        ++out.generator_calls;
        for (int edit = 0;; ++edit) {
            auto [missing, leaked] = diff(verifier.present(text, all_insights));
            const bool ok = missing.empty() && leaked.empty();
            log_call(log, edit == 0 ? SynthesisStage::document : SynthesisStage::document_edit, target, edit + 1, ok,
                     ok ? std::string{} : std::to_string(missing.size()) + " missing, " +
                                              std::to_string(leaked.size()) + " leaked");
            if (ok) break;
            if (edit == config.max_doc_regenerations)
                throw DocumentVerificationError(slot.id, std::move(missing), std::move(leaked), out.generator_calls);
            GenerationRequest fix;
            fix.stage = SynthesisStage::document_edit;
            fix.vars = {{"DOCUMENT", text}, {"MISSING", bullet_list(text_of(missing))},
                        {"EXTRANEOUS", bullet_list(text_of(leaked))}};
            fix.prompt = templates.render("document_edit", fix.vars);
            fix.target = target;
            fix.attempt = edit + 2;
            fix.seed = call_seed(slot.seed, "document_edit", target, edit + 2);
            text = call_generator(generator, fix, "document", json::object());
            ++out.generator_calls;
        }
    } else {
        // one chapter per insight; each chapter must express its insight and nothing else
        const int chapter_words = std::max(1, config.words_per_document / static_cast<int>(assigned.size()));
        for (const auto* insight : assigned) {
            bool accepted = false;
            for (int attempt = 1; attempt <= config.max_chapter_retries + 1; ++attempt) {
                GenerationRequest req;
                req.stage = SynthesisStage::chapter;
                auto name_it = subtopic_names.find(insight->subtopic_id);
                req.vars = {{"TOPIC", topic.title},
                            {"SUBTOPIC", name_it == subtopic_names.end() ? insight->subtopic_id : name_it->second},
                            {"INSIGHT", insight->text},
                            {"PREVIOUS", text.empty() ? std::string("(start of conversation)") : text},
                            {"WORDS", std::to_string(chapter_words)}};
                req.prompt = templates.render("chapter", req.vars);
                req.target = target + " " + insight->id;
                req.attempt = attempt;
                req.seed = call_seed(slot.seed, "chapter", req.target, attempt);
                auto chapter = call_generator(generator, req, "document", json::object());
                ++out.generator_calls;
                const auto found = verifier.present(chapter, all_insights);
                accepted = found == std::set<InsightId>{insight->id};
                log_call(log, req.stage, req.target, attempt, accepted);
                if (accepted) {
                    text += (text.empty() ? "" : "\n\n") + trim(chapter);
                    break;
                }
            }
            if (!accepted)
                throw DocumentVerificationError(slot.id, {insight->id}, {}, out.generator_calls);
        }
        auto [missing, leaked] = diff(verifier.present(text, all_insights));
        if (!missing.empty() || !leaked.empty())
            throw DocumentVerificationError(slot.id, std::move(missing), std::move(leaked), out.generator_calls);
    }

    out.document.id = slot.id;
    out.document.text = std::move(text);
    out.document.assigned_insight_ids = std::move(wanted);
    out.document.token_count = counter(out.document.text);
    return out;
}

std::string subtopic_to_query(const Topic& topic, const Subtopic& subtopic, TextGenerator& generator,
                              const TemplateSet& templates, std::uint64_t seed, SynthesisLog* log) {
    GenerationRequest req;
    req.stage = SynthesisStage::query;
    req.vars = {{"TOPIC", topic.title}, {"SUBTOPIC", subtopic.name}};
    req.prompt = templates.render("query", req.vars);
    req.target = subtopic.id;
    req.seed = call_seed(seed, "query", subtopic.id, 1);
    auto reply = trim(call_generator(generator, req, "query", json::object()));
    if (reply.size() >= 2 && reply.front() == '"' && reply.back() == '"') reply = trim(reply.substr(1, reply.size() - 2));
    const bool question = !reply.empty() && reply.back() == '?' && reply.find('\n') == std::string::npos;
    log_call(log, req.stage, req.target, 1, true, question ? std::string{} : "template fallback");
    if (question) return reply;
    return "What is discussed regarding " + subtopic.name + "?";
}

Haystack build_haystack(const Topic& topic, const SynthesisConfig& config, TextGenerator& generator,
                        InsightVerifier& verifier, const BuildOptions& options) {
    if (trim(topic.title).empty()) throw ConfigError("topic title is empty");
    if (options.counter.name() != config.token_counter)
        throw ConfigError("token counter '" + options.counter.name() + "' differs from config '" +
                          config.token_counter + "'");
    // planned insight count; re-checked against the real count before assignment
    check_feasibility(config, static_cast<std::size_t>(
                                  std::ceil(config.n_subtopics_target * config.insights_per_subtopic.mean())));

    const TemplateSet& templates = options.templates;
    SynthesisLog* log = options.log;
    GeneratorClassifier default_classifier(generator, templates);
    InsightClassifier& classifier = options.classifier ? *options.classifier : default_classifier;

    Haystack h;
    h.topic = topic;
    h.config = config;
    h.subtopics = generate_subtopics(topic, generator, config, templates, log);

    Rng insight_rng = derive_rng(config.rng_seed, 0);
    std::vector<std::vector<Insight>> per_subtopic(h.subtopics.size());
    for (std::size_t s = 0; s < h.subtopics.size(); ++s) {
        std::vector<std::pair<Subtopic, std::vector<Insight>>> siblings;
        for (std::size_t o = 0; o < h.subtopics.size(); ++o)
            if (o != s) siblings.emplace_back(h.subtopics[o], per_subtopic[o]);
        per_subtopic[s] = generate_insights(topic, h.subtopics[s], siblings, generator, classifier, config, templates,
                                            insight_rng, log);
        for (const auto& i : per_subtopic[s]) h.subtopics[s].insight_ids.push_back(i.id);
    }
    std::vector<Insight> all_insights;
    for (auto& v : per_subtopic)
        for (auto& i : v) all_insights.push_back(i);
    for (auto& s : h.subtopics) s.query = subtopic_to_query(topic, s, generator, templates, config.rng_seed, log);
    for (const auto& i : all_insights) h.insights.emplace(i.id, i);

    std::vector<InsightId> ids;
    for (const auto& i : all_insights) ids.push_back(i.id);
    Rng assign_rng = derive_rng(config.rng_seed, 1);
    InsightAssignment assignment;
    try {
        assignment = assign_insights(ids, config, assign_rng);
    } catch (const ConfigError& e) {
        throw SynthesisError("assign", e.what(), partial_json(h.subtopics, all_insights));
    }

    std::vector<const Insight*> universe;
    for (const auto& [_, i] : h.insights) universe.push_back(&i);
    std::map<SubtopicId, std::string> names;
    for (const auto& s : h.subtopics) names[s.id] = s.name;

    // Slots are independent; per-slot logs are merged in slot order so the
    // log is identical for any worker count.
    const auto n_docs = static_cast<std::size_t>(config.n_documents);
    std::vector<std::optional<Document>> docs(n_docs);
    std::vector<SynthesisLog> slot_logs(n_docs);
    std::vector<std::exception_ptr> slot_errors(n_docs);
    parallel_for(n_docs, options.workers, [&](std::size_t d) {
        std::vector<const Insight*> assigned;
        for (const auto& id : assignment.per_document[d]) assigned.push_back(&h.insights.at(id));
        try {
            docs[d] = generate_document({static_cast<DocId>(d + 1), derive_rng(config.rng_seed, 1000 + d)()}, topic,
                                        assigned, universe, names, generator, verifier, config, templates,
                                        options.counter, &slot_logs[d])
                          .document;
        } catch (...) {
            slot_errors[d] = std::current_exception();
        }
    });
    if (log)
        for (const auto& l : slot_logs) log->append(l);

    std::vector<Document> done;
    std::exception_ptr first_error;
    for (std::size_t d = 0; d < n_docs; ++d) {
        if (docs[d]) done.push_back(*docs[d]);
        else if (!first_error) first_error = slot_errors[d];
    }
    if (first_error) {
        auto partial = partial_json(h.subtopics, all_insights, done);
        try {
            std::rethrow_exception(first_error);
        } catch (SynthesisError& e) {
            e.partial_state = std::move(partial);
            throw;
        } catch (const std::exception& e) {
            throw SynthesisError("document", e.what(), std::move(partial));
        }
    }

    h.documents = std::move(done);
    for (const auto& d : h.documents)
        for (const auto& id : d.assigned_insight_ids) h.insights.at(id).gold_document_ids.insert(d.id);

    if (auto report = validate_haystack(h, options.counter); !report.empty()) {
        std::string msg = std::to_string(report.size()) + " invariant violations, first: " + report.front().message;
        throw SynthesisError("validate", msg, to_json(h));
    }
    return h;
}

}  // namespace hayeval
