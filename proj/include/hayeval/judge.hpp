#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hayeval/gateway.hpp"
#include "hayeval/haystack.hpp"
#include "hayeval/summarizer.hpp"
#include "hayeval/templates.hpp"

namespace hayeval {

enum class CoverageLevel { none, partial, full };

std::string_view to_string(CoverageLevel l);  // NO_COVERAGE / PARTIAL_COVERAGE / FULL_COVERAGE
CoverageLevel parse_coverage_level(std::string_view s);
int coverage_points(CoverageLevel l);

struct CoverageJudgment {
    InsightId insight_id;
    CoverageLevel level = CoverageLevel::none;
    std::optional<int> linked_bullet_index;  // 1-based; required unless NONE
    std::string raw_output;
    int attempts = 1;
};

nlohmann::json to_json(const CoverageJudgment& j);
CoverageJudgment coverage_judgment_from_json(const nlohmann::json& j);

/// Throws InputError if the judgment's link is missing, present for NONE, or
/// outside 1..bullet_count.
void check_judgment_shape(const CoverageJudgment& j, std::size_t bullet_count);

class CoverageJudge {
public:
    virtual ~CoverageJudge() = default;
    virtual CoverageJudgment judge(const Insight& insight, const std::vector<Bullet>& bullets) = 0;
};

/// Offline judge for sentinel haystacks. FULL when a bullet contains the
/// insight text; PARTIAL when it contains the first half of the insight's
/// words; the first bullet at the best level is linked.
class SentinelJudge : public CoverageJudge {
public:
    CoverageJudgment judge(const Insight& insight, const std::vector<Bullet>& bullets) override;
};

/// Judge prompted through the gateway. The reply must be a JSON object
/// {"coverage": NO_COVERAGE|PARTIAL_COVERAGE|FULL_COVERAGE, "bullet": n};
/// malformed replies are retried up to `max_retries` times.
class LlmJudge : public CoverageJudge {
public:
    LlmJudge(Gateway& gateway, std::string endpoint, std::string few_shot_examples = {},
             TemplateSet templates = TemplateSet::builtin(), int max_retries = 3);
    CoverageJudgment judge(const Insight& insight, const std::vector<Bullet>& bullets) override;
    std::string prompt_for(const Insight& insight, const std::vector<Bullet>& bullets) const;

private:
    Gateway& gateway_;
    std::string endpoint_;
    std::string few_shot_;
    TemplateSet templates_;
    int max_retries_;
};

/// Parses one judge reply. nullopt when it is not a well-formed verdict for
/// `bullet_count` bullets.
std::optional<CoverageJudgment> parse_judge_reply(std::string_view reply, std::size_t bullet_count);

/// Runs the judge and enforces the judgment shape. Throws InputError for
/// an empty bullet list and JudgingError when the judge cannot produce a verdict.
CoverageJudgment judge_coverage(const Insight& insight, const std::vector<Bullet>& bullets, CoverageJudge& judge);

/// "sentinel" or a gateway endpoint name.
std::unique_ptr<CoverageJudge> make_judge(const std::string& name, Gateway* gateway,
                                          const std::string& few_shot_examples = {});

}  // namespace hayeval
