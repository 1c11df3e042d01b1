#include "hayeval/judge.hpp"

#include "hayeval/errors.hpp"
#include "hayeval/json_extract.hpp"

namespace hayeval {

std::string_view to_string(CoverageLevel l) {
    switch (l) {
        case CoverageLevel::none: return "NO_COVERAGE";
        case CoverageLevel::partial: return "PARTIAL_COVERAGE";
        case CoverageLevel::full: return "FULL_COVERAGE";
    }
    return "NO_COVERAGE";
}

CoverageLevel parse_coverage_level(std::string_view s) {
    if (s == "NO_COVERAGE" || s == "NONE") return CoverageLevel::none;
    if (s == "PARTIAL_COVERAGE" || s == "PARTIAL") return CoverageLevel::partial;
    if (s == "FULL_COVERAGE" || s == "FULL") return CoverageLevel::full;
    throw ParseError("unknown coverage level '" + std::string(s) + "'");
}

int coverage_points(CoverageLevel l) {
    switch (l) {
        case CoverageLevel::none: return 0;
        case CoverageLevel::partial: return 50;
        case CoverageLevel::full: return 100;
    }
    return 0;
}

nlohmann::json to_json(const CoverageJudgment& j) {
    return {{"insight_id", j.insight_id},
            {"coverage", to_string(j.level)},
            {"bullet", j.linked_bullet_index ? nlohmann::json(*j.linked_bullet_index) : nlohmann::json(nullptr)},
            {"attempts", j.attempts},
            {"raw_output", j.raw_output}};
}

CoverageJudgment coverage_judgment_from_json(const nlohmann::json& j) {
    CoverageJudgment out;
    out.insight_id = j.at("insight_id").get<std::string>();
    out.level = parse_coverage_level(j.at("coverage").get<std::string>());
    if (j.contains("bullet") && !j["bullet"].is_null()) out.linked_bullet_index = j["bullet"].get<int>();
    out.attempts = j.value("attempts", 1);
    out.raw_output = j.value("raw_output", "");
    return out;
}

void check_judgment_shape(const CoverageJudgment& j, std::size_t bullet_count) {
    if (j.level == CoverageLevel::none) {
        if (j.linked_bullet_index) throw InputError("judgment for " + j.insight_id + " is NONE but links a bullet");
        return;
    }
    if (!j.linked_bullet_index) throw InputError("judgment for " + j.insight_id + " is covered but links no bullet");
    if (*j.linked_bullet_index < 1 || static_cast<std::size_t>(*j.linked_bullet_index) > bullet_count)
        throw InputError("judgment for " + j.insight_id + " links bullet " + std::to_string(*j.linked_bullet_index) +
                         " outside 1.." + std::to_string(bullet_count));
}

CoverageJudgment SentinelJudge::judge(const Insight& insight, const std::vector<Bullet>& bullets) {
    const auto full = normalize_text(insight.text);
    const auto words = split_words(full);
    std::string head;
    for (std::size_t i = 0; i < (words.size() + 1) / 2; ++i) head += (i ? " " : "") + std::string(words[i]);

    CoverageJudgment out;
    out.insight_id = insight.id;
    for (const auto& b : bullets) {
        const auto text = normalize_text(b.text);
        if (text.find(full) != std::string::npos) {
            out.level = CoverageLevel::full;
            out.linked_bullet_index = b.index;
            break;
        }
        if (out.level == CoverageLevel::none && !head.empty() && text.find(head) != std::string::npos) {
            out.level = CoverageLevel::partial;
            out.linked_bullet_index = b.index;
        }
    }
    nlohmann::json raw{{"coverage", to_string(out.level)}};
    if (out.linked_bullet_index) raw["bullet"] = *out.linked_bullet_index;
    out.raw_output = raw.dump();
    return out;
}

LlmJudge::LlmJudge(Gateway& gateway, std::string endpoint, std::string few_shot_examples, TemplateSet templates,
                   int max_retries)
    : gateway_(gateway),
      endpoint_(std::move(endpoint)),
      few_shot_(std::move(few_shot_examples)),
      templates_(std::move(templates)),
      max_retries_(max_retries) {
    if (few_shot_.empty()) few_shot_ = trim(templates_.get("judge_format_examples"));
}

std::string LlmJudge::prompt_for(const Insight& insight, const std::vector<Bullet>& bullets) const {
    std::string rendered;
    for (const auto& b : bullets) rendered += std::to_string(b.index) + ". " + b.text + "\n";
    if (!rendered.empty()) rendered.pop_back();
    return templates_.render("judge_coverage",
                             {{"FEW_SHOT_EXAMPLES", few_shot_}, {"INSIGHT", insight.text}, {"BULLETS", rendered}});
}

std::optional<CoverageJudgment> parse_judge_reply(std::string_view reply, std::size_t bullet_count) {
    auto j = extract_json(reply);
    if (!j || !j->is_object() || !j->contains("coverage") || !(*j)["coverage"].is_string()) return std::nullopt;
    CoverageJudgment out;
    try {
        out.level = parse_coverage_level((*j)["coverage"].get<std::string>());
    } catch (const ParseError&) {
        return std::nullopt;
    }
    if (out.level != CoverageLevel::none) {
        const auto& b = j->contains("bullet") ? (*j)["bullet"] : nlohmann::json();
        if (b.is_number_integer()) {
            out.linked_bullet_index = b.get<int>();
        } else if (b.is_string()) {
            try {
                out.linked_bullet_index = std::stoi(b.get<std::string>());
            } catch (const std::exception&) {
                return std::nullopt;
            }
        } else {
            return std::nullopt;
        }
        if (*out.linked_bullet_index < 1 || static_cast<std::size_t>(*out.linked_bullet_index) > bullet_count)
            return std::nullopt;
    }
    out.raw_output = std::string(reply);
    return out;
}

CoverageJudgment LlmJudge::judge(const Insight& insight, const std::vector<Bullet>& bullets) {
    const auto prompt = prompt_for(insight, bullets);
    std::string last;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        GenerateParams params;
        params.temperature = attempt == 0 ? 0.0 : 1.0;
        params.seed = static_cast<std::uint64_t>(attempt);
        params.max_output_tokens = 64;
        try {
            last = gateway_.generate(endpoint_, prompt, params).text;
        } catch (const GatewayError& e) {
            throw JudgingError("judge '" + endpoint_ + "' unavailable for " + insight.id + ": " + e.what());
        }
        if (auto parsed = parse_judge_reply(last, bullets.size())) {
            parsed->insight_id = insight.id;
            parsed->attempts = attempt + 1;
            return *parsed;
        }
    }
    throw JudgingError("judge '" + endpoint_ + "' returned malformed output for " + insight.id + " after " +
                       std::to_string(max_retries_) + " retries: " + last.substr(0, 200));
}

CoverageJudgment judge_coverage(const Insight& insight, const std::vector<Bullet>& bullets, CoverageJudge& judge) {
    if (bullets.empty()) throw InputError("cannot judge coverage against an empty bullet list");
    auto j = judge.judge(insight, bullets);
    j.insight_id = insight.id;
    try {
        check_judgment_shape(j, bullets.size());
    } catch (const InputError& e) {
        throw JudgingError(e.what());
    }
    return j;
}

std::unique_ptr<CoverageJudge> make_judge(const std::string& name, Gateway* gateway,
                                          const std::string& few_shot_examples) {
    if (name == "sentinel") return std::make_unique<SentinelJudge>();
    if (!gateway) throw ConfigError("judge '" + name + "' needs an endpoint registry");
    gateway->registry().get(name);
    return std::make_unique<LlmJudge>(*gateway, name, few_shot_examples);
}

}  // namespace hayeval
