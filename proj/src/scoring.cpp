#include "hayeval/scoring.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "hayeval/errors.hpp"
#include "hayeval/parallel.hpp"

namespace hayeval {

using boost::multiprecision::cpp_int;

double to_double(const Rational& r) { return r.convert_to<double>(); }

std::string to_fraction_string(const Rational& r) {
    const cpp_int n = numerator(r), d = denominator(r);
    return d == 1 ? n.str() : n.str() + "/" + d.str();
}

Rational parse_fraction(std::string_view s) {
    try {
        const auto slash = s.find('/');
        if (slash == std::string_view::npos) return Rational(cpp_int(std::string(s)));
        const cpp_int n(std::string(s.substr(0, slash)));
        const cpp_int d(std::string(s.substr(slash + 1)));
        if (d == 0) throw ParseError("zero denominator in '" + std::string(s) + "'");
        return Rational(n, d);
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError("not a fraction: '" + std::string(s) + "'");
    }
}

std::string render_fixed(const Rational& r, int decimals) {
    cpp_int scale = 1;
    for (int i = 0; i < decimals; ++i) scale *= 10;
    const bool negative = r < 0;
    const Rational scaled = (negative ? Rational(-r) : r) * scale + Rational(1, 2);
    const cpp_int units = numerator(scaled) / denominator(scaled);
    std::string digits = units.str();
    if (decimals > 0) {
        if (digits.size() <= static_cast<std::size_t>(decimals))
            digits.insert(0, static_cast<std::size_t>(decimals) + 1 - digits.size(), '0');
        digits.insert(digits.size() - static_cast<std::size_t>(decimals), ".");
    }
    return (negative && units != 0 ? "-" : "") + digits;
}

std::string render_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

CitationPRF citation_prf(const std::set<int>& cited, const std::set<int>& gold) {
    if (gold.empty()) throw InputError("citation_prf: gold set is empty");
    std::size_t hit = 0;
    for (int id : cited) hit += gold.contains(id) ? 1 : 0;
    CitationPRF out;
    if (cited.empty() || hit == 0) return {0, 0, 0};
    out.precision = Rational(static_cast<long long>(hit), static_cast<long long>(cited.size()));
    out.recall = Rational(static_cast<long long>(hit), static_cast<long long>(gold.size()));
    out.f1 = 2 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

namespace {

void check_unique(const std::vector<InsightId>& ids) {
    std::set<InsightId> seen;
    for (const auto& id : ids)
        if (!seen.insert(id).second) throw InputError("duplicate judgment for insight " + id);
}

}  // namespace

Rational coverage_score_exact(const std::vector<CoverageJudgment>& judgments) {
    if (judgments.empty()) throw InputError("coverage_score: no judgments");
    std::vector<InsightId> ids;
    Rational total = 0;
    for (const auto& j : judgments) {
        ids.push_back(j.insight_id);
        total += coverage_points(j.level);
    }
    check_unique(ids);
    return total / static_cast<long long>(judgments.size());
}

double coverage_score(const std::vector<CoverageJudgment>& judgments) {
    return to_double(coverage_score_exact(judgments));
}

ScoreReport aggregate_insights(const std::vector<InsightOutcome>& outcomes, double words_per_bullet) {
    if (outcomes.empty()) throw InputError("cannot score a summary against zero insights");
    std::vector<InsightId> ids;
    for (const auto& o : outcomes) ids.push_back(o.insight_id);
    check_unique(ids);

    ScoreReport r;
    r.words_per_bullet = words_per_bullet;
    Rational cov = 0, p = 0, rec = 0, f = 0, joint = 0;
    for (const auto& o : outcomes) {
        InsightScore s;
        s.insight_id = o.insight_id;
        s.level = o.level;
        s.coverage_points = coverage_points(o.level);
        if (o.level != CoverageLevel::none) {
            if (!o.citation) throw InputError("covered insight " + o.insight_id + " has no citation figures");
            s.citation = o.citation;
            s.linked_bullet_index = o.linked_bullet_index;
            s.joint_points = s.coverage_points * o.citation->f1;
            p += o.citation->precision;
            rec += o.citation->recall;
            f += o.citation->f1;
            ++r.covered_count;
        }
        cov += s.coverage_points;
        joint += s.joint_points;
        r.per_insight.push_back(std::move(s));
    }
    const auto n = static_cast<long long>(outcomes.size());
    r.coverage = cov / n;
    r.joint = joint / n;
    if (r.covered_count == 0) {
        r.citation_undefined = true;
    } else {
        const auto c = static_cast<long long>(r.covered_count);
        r.citation = 100 * f / c;
        r.precision = 100 * p / c;
        r.recall = 100 * rec / c;
    }
    return r;
}

ScoreReport score_summary(const std::vector<CoverageJudgment>& judgments, const std::vector<Bullet>& bullets,
                          const std::map<InsightId, std::set<DocId>>& gold, double words_per_bullet) {
    std::vector<InsightOutcome> outcomes;
    for (const auto& j : judgments) {
        check_judgment_shape(j, bullets.size());
        InsightOutcome o{j.insight_id, j.level, std::nullopt, j.linked_bullet_index};
        if (j.level != CoverageLevel::none) {
            const auto g = gold.find(j.insight_id);
            if (g == gold.end()) throw InputError("no gold citations for insight " + j.insight_id);
            o.citation = citation_prf(bullets[static_cast<std::size_t>(*j.linked_bullet_index - 1)].cited_document_ids,
                                      g->second);
        }
        outcomes.push_back(std::move(o));
    }
    return aggregate_insights(outcomes, words_per_bullet);
}

ScoreReport incomplete_report(const std::vector<InsightId>& insight_ids, std::string error) {
    std::vector<InsightOutcome> outcomes;
    for (const auto& id : insight_ids) outcomes.push_back({id, CoverageLevel::none, std::nullopt, std::nullopt});
    auto r = aggregate_insights(outcomes);
    r.incomplete = true;
    r.errors.push_back(std::move(error));
    return r;
}

JudgedSummary evaluate_summary(const Haystack& h, const Subtopic& subtopic, const CandidateSummary& summary,
                               CoverageJudge& judge, std::size_t workers) {
    const auto insights = h.insights_of(subtopic);
    JudgedSummary out;
    out.judgments.resize(insights.size());
    std::vector<std::string> errors(insights.size());
    parallel_for(insights.size(), workers, [&](std::size_t i) {
        try {
            out.judgments[i] = judge_coverage(*insights[i], summary.bullets, judge);
        } catch (const Error& e) {
            errors[i] = insights[i]->id + ": " + e.what();
        }
    });
    std::vector<std::string> failed;
    for (const auto& e : errors)
        if (!e.empty()) failed.push_back(e);
    if (!failed.empty()) {
        out.report = incomplete_report(subtopic.insight_ids, failed.front());
        out.report.errors = failed;
        out.report.words_per_bullet = summary.words_per_bullet;
        return out;
    }
    std::map<InsightId, std::set<DocId>> gold;
    for (const auto* i : insights) gold[i->id] = i->gold_document_ids;
    out.report = score_summary(out.judgments, summary.bullets, gold, summary.words_per_bullet);
    return out;
}

namespace {

nlohmann::json exact(const Rational& r) { return {{"value", to_double(r)}, {"exact", to_fraction_string(r)}}; }

Rational read_exact(const nlohmann::json& j) { return parse_fraction(j.at("exact").get<std::string>()); }

}  // namespace

nlohmann::json to_json(const ScoreReport& r) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& s : r.per_insight) {
        nlohmann::json e{{"insight_id", s.insight_id},
                         {"coverage", to_string(s.level)},
                         {"coverage_points", s.coverage_points},
                         {"bullet", s.linked_bullet_index ? nlohmann::json(*s.linked_bullet_index) : nlohmann::json()},
                         {"joint_points", exact(s.joint_points)}};
        if (s.citation) {
            e["citation_precision"] = exact(s.citation->precision);
            e["citation_recall"] = exact(s.citation->recall);
            e["citation_f1"] = exact(s.citation->f1);
        }
        per.push_back(std::move(e));
    }
    return {{"coverage_score", exact(r.coverage)},
            {"citation_score", exact(r.citation)},
            {"citation_precision", exact(r.precision)},
            {"citation_recall", exact(r.recall)},
            {"joint_score", exact(r.joint)},
            {"words_per_bullet", r.words_per_bullet},
            {"covered_count", r.covered_count},
            {"citation_undefined", r.citation_undefined},
            {"incomplete", r.incomplete},
            {"errors", r.errors},
            {"per_insight", std::move(per)}};
}

ScoreReport score_report_from_json(const nlohmann::json& j) {
    ScoreReport r;
    r.coverage = read_exact(j.at("coverage_score"));
    r.citation = read_exact(j.at("citation_score"));
    r.precision = read_exact(j.at("citation_precision"));
    r.recall = read_exact(j.at("citation_recall"));
    r.joint = read_exact(j.at("joint_score"));
    r.words_per_bullet = j.at("words_per_bullet").get<double>();
    r.covered_count = j.at("covered_count").get<std::size_t>();
    r.citation_undefined = j.at("citation_undefined").get<bool>();
    r.incomplete = j.at("incomplete").get<bool>();
    r.errors = j.value("errors", std::vector<std::string>{});
    for (const auto& e : j.at("per_insight")) {
        InsightScore s;
        s.insight_id = e.at("insight_id").get<std::string>();
        s.level = parse_coverage_level(e.at("coverage").get<std::string>());
        s.coverage_points = e.at("coverage_points").get<int>();
        if (!e.at("bullet").is_null()) s.linked_bullet_index = e["bullet"].get<int>();
        s.joint_points = read_exact(e.at("joint_points"));
        if (e.contains("citation_f1"))
            s.citation = CitationPRF{read_exact(e["citation_precision"]), read_exact(e["citation_recall"]),
                                     read_exact(e["citation_f1"])};
        r.per_insight.push_back(std::move(s));
    }
    return r;
}

std::vector<AggregateRow> aggregate_run(const std::vector<LabeledReport>& reports) {
    std::vector<std::string> summarizers, retrievers;
    auto note = [](std::vector<std::string>& v, const std::string& s) {
        if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    };
    for (const auto& r : reports) {
        note(summarizers, r.summarizer);
        note(retrievers, r.retriever);
    }
    std::vector<AggregateRow> rows;
    for (const auto& s : summarizers) {
        for (const auto& ret : retrievers) {
            AggregateRow row{s, ret};
            double wpb = 0.0;
            for (const auto& r : reports) {
                if (r.summarizer != s || r.retriever != ret) continue;
                ++row.n_reports;
                row.n_incomplete += r.report.incomplete ? 1 : 0;
                row.coverage += r.report.coverage;
                row.citation += r.report.citation;
                row.joint += r.report.joint;
                wpb += r.report.words_per_bullet;
            }
            if (row.n_reports > 0) {
                const auto n = static_cast<long long>(row.n_reports);
                row.coverage /= n;
                row.citation /= n;
                row.joint /= n;
                row.words_per_bullet = wpb / static_cast<double>(n);
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

namespace {

std::vector<std::string> cells(const AggregateRow& r) {
    if (r.n_reports == 0) return {r.summarizer, r.retriever, "-", "-", "-", "-", "0"};
    return {r.summarizer,
            r.retriever,
            render_fixed(r.coverage),
            render_fixed(r.citation),
            render_fixed(r.joint),
            render_fixed(r.words_per_bullet),
            std::to_string(r.n_reports) + (r.n_incomplete ? " (" + std::to_string(r.n_incomplete) + " incomplete)" : "")};
}

const std::vector<std::string> kHeader{"Summarizer", "Retriever", "Coverage", "Citation", "Joint", "#W_b", "N"};

}  // namespace

std::string render_aggregate_tsv(const std::vector<AggregateRow>& rows) {
    std::string out;
    auto line = [&](const std::vector<std::string>& c) {
        for (std::size_t i = 0; i < c.size(); ++i) out += (i ? "\t" : "") + c[i];
        out += "\n";
    };
    line(kHeader);
    for (const auto& r : rows) line(cells(r));
    return out;
}

std::string render_aggregate_table(const std::vector<AggregateRow>& rows) {
    std::vector<std::vector<std::string>> all{kHeader};
    for (const auto& r : rows) all.push_back(cells(r));
    std::vector<std::size_t> width(kHeader.size(), 0);
    for (const auto& c : all)
        for (std::size_t i = 0; i < c.size(); ++i) width[i] = std::max(width[i], c[i].size());
    std::ostringstream os;
    for (const auto& c : all) {
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (i) os << "  ";
            // text columns left-aligned, numbers right-aligned
            if (i < 2) os << std::left; else os << std::right;
            os << std::setw(static_cast<int>(i + 1 == c.size() ? 0 : width[i])) << c[i];
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace hayeval
