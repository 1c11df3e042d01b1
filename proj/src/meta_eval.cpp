#include "hayeval/meta_eval.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "hayeval/errors.hpp"
#include "hayeval/parallel.hpp"
#include "hayeval/summarizer.hpp"

namespace hayeval {

namespace {

template <typename F>
void for_each_jsonl(std::string_view text, F&& f) {
    std::size_t line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), std::string(line));
        }
        try {
            f(j);
        } catch (const nlohmann::json::exception& e) {
            throw InputError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

using Key = std::pair<std::string, InsightId>;

std::map<Key, const CoverageLabel*> index_labels(const std::vector<CoverageLabel>& labels, const char* side) {
    std::map<Key, const CoverageLabel*> out;
    for (const auto& l : labels)
        if (!out.emplace(Key{l.summary_id, l.insight_id}, &l).second)
            throw InputError(std::string("duplicate ") + side + " label for " + l.summary_id + "/" + l.insight_id);
    return out;
}

}  // namespace

std::vector<CoverageLabel> parse_labels_jsonl(std::string_view text) {
    std::vector<CoverageLabel> out;
    for_each_jsonl(text, [&](const nlohmann::json& j) {
        CoverageLabel l;
        l.summary_id = j.at("summary_id").get<std::string>();
        l.insight_id = j.at("insight_id").get<std::string>();
        l.level = parse_coverage_level(j.at("coverage").get<std::string>());
        if (j.contains("bullet") && !j["bullet"].is_null()) l.linked_bullet_index = j["bullet"].get<int>();
        l.annotator_id = j.value("annotator", "");
        if ((l.level == CoverageLevel::none) == l.linked_bullet_index.has_value())
            throw InputError("label " + l.summary_id + "/" + l.insight_id + ": link must be present iff covered");
        out.push_back(std::move(l));
    });
    return out;
}

std::vector<CoverageLabel> load_labels_jsonl(const std::string& path) { return parse_labels_jsonl(read_file(path)); }

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw InsufficientDataError("correlation over vectors of different length");
    if (x.size() < 2) throw InsufficientDataError("correlation needs at least two pairs");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationResult coverage_correlation(const std::vector<CoverageLabel>& human,
                                       const std::vector<CoverageLabel>& automatic) {
    const auto h = index_labels(human, "human");
    const auto a = index_labels(automatic, "automatic");
    std::vector<double> x, y;
    for (const auto& [key, label] : h) {
        auto it = a.find(key);
        if (it == a.end()) continue;
        x.push_back(coverage_points(label->level));
        y.push_back(coverage_points(it->second->level));
    }
    if (x.size() < 2) throw InsufficientDataError("coverage correlation needs at least two aligned labels");
    CorrelationResult r;
    r.n_pairs = x.size();
    r.value = pearson(x, y);
    return r;
}

LinkingResult linking_accuracy(const std::vector<CoverageLabel>& human, const std::vector<CoverageLabel>& automatic) {
    const auto h = index_labels(human, "human");
    const auto a = index_labels(automatic, "automatic");
    LinkingResult r;
    std::size_t agree = 0;
    for (const auto& [key, label] : h) {
        auto it = a.find(key);
        if (it == a.end() || label->level == CoverageLevel::none || it->second->level == CoverageLevel::none) continue;
        ++r.n_pairs;
        agree += label->linked_bullet_index == it->second->linked_bullet_index ? 1 : 0;
    }
    if (r.n_pairs > 0) r.accuracy = 100.0 * static_cast<double>(agree) / static_cast<double>(r.n_pairs);
    return r;
}

BiasResult model_bias_delta(const std::vector<SummaryCoverage>& automatic, const std::vector<SummaryCoverage>& human) {
    std::map<std::string, const SummaryCoverage*> by_id;
    for (const auto& h : human) by_id[h.summary_id] = &h;
    std::map<std::string, std::pair<double, std::size_t>> sums;
    BiasResult r;
    std::set<std::string> paired;
    for (const auto& a : automatic) {
        auto it = by_id.find(a.summary_id);
        if (it == by_id.end()) {
            r.warnings.push_back("no human score for summary " + a.summary_id);
            continue;
        }
        paired.insert(a.summary_id);
        auto& s = sums[a.summarizer];
        s.first += a.coverage - it->second->coverage;
        ++s.second;
    }
    for (const auto& h : human)
        if (!paired.contains(h.summary_id)) r.warnings.push_back("no automatic score for summary " + h.summary_id);
    for (const auto& [name, s] : sums) r.per_summarizer.push_back({name, s.first / static_cast<double>(s.second), s.second});
    return r;
}

LengthBiasResult length_bias(const std::vector<LengthBiasPoint>& points) {
    std::vector<double> len, score, dlen, delta;
    for (const auto& p : points) {
        len.push_back(p.words_per_bullet);
        score.push_back(p.score);
        if (p.delta) {
            dlen.push_back(p.words_per_bullet);
            delta.push_back(*p.delta);
        }
    }
    LengthBiasResult r;
    r.length_to_score = pearson(len, score);
    if (dlen.size() >= 2) r.length_to_delta = pearson(dlen, delta);
    return r;
}

double position_sensitivity(double joint_random, double joint_top, double joint_bottom) {
    return std::max(std::abs(joint_top - joint_random), std::abs(joint_bottom - joint_random));
}

std::vector<SnapshotSeries> parse_snapshots_jsonl(std::string_view text, std::vector<std::string>* warnings) {
    std::vector<SnapshotSeries> out;
    std::map<std::string, std::size_t> index;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const auto session = j.at("session").get<std::string>();
            const int minutes = j.at("minutes").get<int>();
            auto payload = j.at("payload").get<std::string>();
            auto [it, fresh] = index.emplace(session, out.size());
            if (fresh) out.push_back({session, {}});
            auto& series = out[it->second];
            if (!series.snapshots.empty() && series.snapshots.back().first >= minutes)
                throw InputError("session " + session + ": minutes must be strictly increasing");
            series.snapshots.emplace_back(minutes, std::move(payload));
        } catch (const std::exception& e) {
            const auto msg = "snapshot line " + std::to_string(line_no) + ": " + e.what();
            if (!warnings) throw InputError(msg);
            warnings->push_back(msg);
        }
    }
    return out;
}

std::vector<SnapshotSeries> load_snapshots_jsonl(const std::string& path, std::vector<std::string>* warnings) {
    return parse_snapshots_jsonl(read_file(path), warnings);
}

std::vector<SnapshotRow> score_snapshots(const SnapshotSeries& series, const Haystack& h, const Subtopic& subtopic,
                                         CoverageJudge& judge, std::size_t workers) {
    std::vector<SnapshotRow> rows(series.snapshots.size());
    parallel_for(series.snapshots.size(), workers, [&](std::size_t i) {
        const auto& [minutes, raw] = series.snapshots[i];
        rows[i].minutes = minutes;
        CandidateSummary summary;
        try {
            summary = parse_summary(raw);
        } catch (const ParseError& e) {
            rows[i].report = incomplete_report(subtopic.insight_ids, std::string("unparseable snapshot: ") + e.what());
            rows[i].unparseable = true;
            return;
        }
        rows[i].report = evaluate_summary(h, subtopic, summary, judge).report;
    });
    return rows;
}

std::string render_snapshot_tsv(const std::vector<SnapshotRow>& rows) {
    std::string out = "minutes\tcoverage\tcitation_p\tcitation_r\tf1\tjoint\tflag\n";
    for (const auto& r : rows) {
        out += std::to_string(r.minutes) + "\t" + render_fixed(r.report.coverage) + "\t" +
               render_fixed(r.report.precision) + "\t" + render_fixed(r.report.recall) + "\t" +
               render_fixed(r.report.citation) + "\t" + render_fixed(r.report.joint) + "\t" +
               (r.unparseable ? "unparseable" : r.report.incomplete ? "incomplete" : "") + "\n";
    }
    return out;
}

}  // namespace hayeval
