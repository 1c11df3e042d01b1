// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>

#include "fixtures.hpp"
#include "hayeval/errors.hpp"
#include "hayeval/harness.hpp"

using namespace hayeval;
using nlohmann::json;

namespace {

// Pinned tolerances.
constexpr double kCitationTol = 1e-12;
constexpr double kPlantedTol = 0.05;
constexpr double kSensitivityTol = 0.0;
constexpr double kWorkedExampleSeconds = 1.0;
constexpr double kPipelineSeconds = 60.0;
constexpr int kSynthesisTrials = 100;
constexpr int kCitationPairs = 1000;

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Outcome worked_example() {
    Outcome o;
    const auto t0 = Clock::now();
    auto f1 = [](Rational v) { return CitationPRF{v, v, v}; };
    const auto r = aggregate_insights({{"A", CoverageLevel::full, f1(Rational(29, 100)), 1},
                                       {"B", CoverageLevel::partial, f1(Rational(73, 100)), 2},
                                       {"C", CoverageLevel::none, std::nullopt, std::nullopt}});
    const auto cov = render_fixed(r.coverage), cit = render_fixed(r.citation), joint = render_fixed(r.joint);
    const double t = seconds_since(t0);
    o.require(cov == "50.0" && cit == "51.0" && joint == "21.8", "got " + cov + "/" + cit + "/" + joint);
    o.require(t < kWorkedExampleSeconds, "took " + std::to_string(t) + " s");
    if (o.pass) o.detail = "coverage " + cov + ", citation " + cit + ", joint " + joint;
    return o;
}

Outcome perfect_pipeline() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto dir = fixtures::scratch("acceptance_perfect");
    const auto hay = dir / "haystack.json";
    const auto h = fixtures::sentinel_haystack(fixtures::desk_config(7));
    write_file_atomic(hay, serialize_haystack(h));
    RunConfig c;
    c.haystack_path = hay.string();
    c.retrievers = {"oracle"};
    c.summarizers = {"mock:perfect"};
    c.judge = "sentinel";
    c.context_budget = kUnlimitedBudget;
    c.output_dir = (dir / "runs").string();
    const auto run = cmd_run(c);
    o.require(run.exit_code == kExitOk, "run exit " + std::to_string(run.exit_code));
    cmd_evaluate(run.run_dir);
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(run.run_dir / "reports")) {
        const auto r = score_report_from_json(json::parse(read_file(e.path())).at("report"));
        ++n;
        o.require(r.coverage == 100 && r.citation == 100 && r.joint == 100,
                  e.path().filename().string() + " scored " + render_fixed(r.coverage) + "/" +
                      render_fixed(r.citation) + "/" + render_fixed(r.joint));
    }
    o.require(n == h.subtopics.size(), std::to_string(n) + " reports for " + std::to_string(h.subtopics.size()) +
                                           " subtopics");
    const double t = seconds_since(t0);
    o.require(t < kPipelineSeconds, "took " + std::to_string(t) + " s");
    if (o.pass)
        o.detail = std::to_string(n) + " subtopics at 100.0/100.0/100.0, " + std::to_string(h.documents.size()) +
                   " docs, " + std::to_string(t).substr(0, 4) + " s";
    return o;
}

Outcome synthesis_invariants() {
    Outcome o;
    for (int trial = 0; trial < kSynthesisTrials && o.pass; ++trial) {
        auto c = fixtures::desk_config(1000 + static_cast<std::uint64_t>(trial));
        c.min_repeats = 2 + trial % 3;
        const auto domain = trial % 10 == 9 ? Domain::conversation : Domain::news;
        const auto a = fixtures::sentinel_haystack(c, domain);
        const auto tag = "trial " + std::to_string(trial) + ": ";
        const auto v = validate_haystack(a);
        o.require(v.empty(), tag + (v.empty() ? "" : v.front().message));
        for (const auto& [id, ins] : a.insights) {
            o.require(static_cast<int>(ins.gold_document_ids.size()) >= c.min_repeats, tag + id + " under-placed");
            for (auto d : ins.gold_document_ids)
                o.require(a.document(d).assigned_insight_ids.contains(id), tag + id + " one-sided link");
        }
        for (const auto& d : a.documents)
            for (const auto& id : d.assigned_insight_ids)
                o.require(a.insights.at(id).gold_document_ids.contains(d.id), tag + "document side one-sided");
        const auto b = fixtures::sentinel_haystack(c, domain, 4);
        o.require(serialize_haystack(a) == serialize_haystack(b), tag + "same seed, different bytes");
    }
    if (o.pass) o.detail = std::to_string(kSynthesisTrials) + " seeded builds valid and byte-stable";
    return o;
}

// Set-enumeration oracle, independent of the library's set code.
std::tuple<double, double, double> brute_prf(const std::set<int>& cited, const std::set<int>& gold) {
    int hit = 0, nc = 0, ng = 0;
    for (int id = 1; id <= 20; ++id) {
        const bool c = cited.count(id) > 0, g = gold.count(id) > 0;
        nc += c;
        ng += g;
        hit += c && g;
    }
    const double p = nc ? double(hit) / nc : 0.0, r = ng ? double(hit) / ng : 0.0;
    return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
}

Outcome citation_arithmetic() {
    Outcome o;
    std::mt19937_64 gen(2024);
    std::uniform_int_distribution<int> id(1, 20), size_gold(1, 10), size_cited(0, 10);
    double worst = 0.0;
    for (int i = 0; i < kCitationPairs; ++i) {
        std::set<int> gold, cited;
        for (int k = size_gold(gen); static_cast<int>(gold.size()) < k;) gold.insert(id(gen));
        for (int k = size_cited(gen); static_cast<int>(cited.size()) < k;) cited.insert(id(gen));
        const auto got = citation_prf(cited, gold);
        const auto [p, r, f] = brute_prf(cited, gold);
        worst = std::max({worst, std::abs(got.p() - p), std::abs(got.r() - r), std::abs(got.f() - f)});
    }
    o.require(worst <= kCitationTol, "max deviation " + std::to_string(worst));
    if (o.pass) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%d pairs, max deviation %.1e", kCitationPairs, worst);
        o.detail = buf;
    }
    return o;
}

Outcome budget_monotonicity() {
    Outcome o;
    const std::vector<std::size_t> budgets{0, 200, 400, 800, 1200, 1600, 2400, 3200, 4800, 6400, kUnlimitedBudget};
    std::size_t checked = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto h = fixtures::sentinel_haystack(fixtures::desk_config(seed));
        for (const auto& sub : h.subtopics) {
            Rng rng(seed);
            const auto scored = score_documents(h, sub, RetrieverKind::oracle, {}, rng);
            double prev = -1.0;
            for (auto b : budgets) {
                const auto sel = assemble_context(sub.query, scored, h.documents, b);
                const double ub = oracle_citation_upper_bound(h, sub, sel.selected_ids);
                o.require(ub >= prev, "seed " + std::to_string(seed) + " " + sub.id + ": bound fell at budget " +
                                          std::to_string(b));
                prev = ub;
            }
            o.require(prev == 1.0, "seed " + std::to_string(seed) + " " + sub.id + ": unlimited bound " +
                                       std::to_string(prev));
            ++checked;
        }
    }
    if (o.pass) o.detail = std::to_string(checked) + " subtopic sweeps nondecreasing, 1.0 when unlimited";
    return o;
}

Outcome position_sensitivity_check() {
    Outcome o;
    const auto opus = render_fixed(position_sensitivity(18.0, 20.4, 28.0));
    const auto gemini = render_fixed(position_sensitivity(37.9, 47.1, 38.9));
    o.require(opus == "10.0", "Opus row gave " + opus);
    o.require(gemini == "9.2", "Gemini row gave " + gemini);

    const auto dir = fixtures::scratch("acceptance_bias");
    const auto hay = dir / "haystack.json";
    write_file_atomic(hay, serialize_haystack(fixtures::sentinel_haystack(fixtures::desk_config(11))));
    RunConfig c;
    c.haystack_path = hay.string();
    c.summarizers = {"mock:perfect"};
    c.output_dir = (dir / "runs").string();
    const auto r = cmd_position_bias(c);
    o.require(r.rows.size() == 1 && r.rows[0].complete, "sweep incomplete");
    if (!r.rows.empty())
        o.require(std::abs(r.rows[0].sensitivity) <= kSensitivityTol,
                  "order-insensitive mock sensitivity " + std::to_string(r.rows[0].sensitivity));
    if (o.pass) o.detail = "Opus " + opus + ", Gemini " + gemini + ", order-insensitive mock 0.0";
    return o;
}

Outcome meta_eval_correctness() {
    Outcome o;
    std::vector<CoverageLabel> labels;
    const CoverageLevel levels[] = {CoverageLevel::none, CoverageLevel::partial, CoverageLevel::full};
    for (int s = 0; s < 10; ++s)
        for (int i = 0; i < 6; ++i) {
            const auto level = levels[(s * 7 + i * 3) % 3];
            labels.push_back({"s" + std::to_string(s), "i" + std::to_string(i), level,
                              level == CoverageLevel::none ? std::nullopt : std::optional<int>(1 + (s + i) % 4), "a"});
        }
    const auto corr = coverage_correlation(labels, labels);
    o.require(corr.value && std::abs(*corr.value - 1.0) < 1e-12, "self correlation not 1.0");
    const auto link = linking_accuracy(labels, labels);
    o.require(link.accuracy && *link.accuracy == 100.0, "self linking accuracy not 100");

    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 gen(seed);
        std::normal_distribution<double> normal;
        const double rho = 0.9, noise = std::sqrt(1.0 / (rho * rho) - 1.0);
        std::vector<LengthBiasPoint> pts;
        for (int i = 0; i < 200; ++i) {
            const double x = normal(gen);
            pts.push_back({x, 2.0 * x + 2.0 * noise * normal(gen), std::nullopt});
        }
        const auto r = length_bias(pts);
        o.require(r.length_to_score.has_value(), "undefined correlation");
        if (r.length_to_score) worst = std::max(worst, std::abs(*r.length_to_score - rho));
    }
    o.require(worst <= kPlantedTol, "planted 0.9 recovered within " + std::to_string(worst));
    if (o.pass) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "identity 1.0 / 100, planted 0.9 max error %.3f over 10 seeds", worst);
        o.detail = buf;
    }
    return o;
}

Outcome table_shape() {
    Outcome o;
    const auto dir = fixtures::scratch("acceptance_table");
    const auto hay = dir / "haystack.json";
    const auto h = fixtures::sentinel_haystack(fixtures::desk_config(7));
    write_file_atomic(hay, serialize_haystack(h));
    RunConfig c;
    c.haystack_path = hay.string();
    c.retrievers = {"random", "keywords", "oracle"};
    c.summarizers = {"mock:perfect", "mock:noisy"};
    c.context_budget = 1500;
    c.rng_seed = 1;
    c.output_dir = (dir / "runs").string();
    const auto run = cmd_run(c);
    o.require(run.exit_code == kExitOk, "run exit " + std::to_string(run.exit_code));
    const auto e = cmd_evaluate(run.run_dir);
    o.require(h.subtopics.size() == 2, "haystack has " + std::to_string(h.subtopics.size()) + " subtopics");
    o.require(e.rows.size() == 6, std::to_string(e.rows.size()) + " rows");
    for (const auto& row : e.rows)
        o.require(row.n_reports == 2 && row.n_incomplete == 0, row.summarizer + "/" + row.retriever + " incomplete");
    for (const auto* col : {"Coverage", "Citation", "Joint", "#W_b"})
        o.require(e.table_tsv.find(col) != std::string::npos, std::string("missing column ") + col);

    // Independent recomputation of every cell from reports/*.json.
    std::map<std::pair<std::string, std::string>, std::vector<json>> cells;
    for (const auto& f : fs::directory_iterator(run.run_dir / "reports")) {
        const auto j = json::parse(read_file(f.path()));
        cells[{j.at("summarizer"), j.at("retriever")}].push_back(j.at("report"));
    }
    for (const auto& row : e.rows) {
        const auto& reps = cells[{row.summarizer, row.retriever}];
        Rational cov = 0, cit = 0, joint = 0;
        for (const auto& r : reps) {
            cov += parse_fraction(r.at("coverage_score").at("exact").get<std::string>());
            cit += parse_fraction(r.at("citation_score").at("exact").get<std::string>());
            joint += parse_fraction(r.at("joint_score").at("exact").get<std::string>());
        }
        const Rational n = static_cast<long>(reps.size());
        const auto line = row.summarizer + "\t" + row.retriever + "\t" + render_fixed(Rational(cov / n)) + "\t" +
                          render_fixed(Rational(cit / n)) + "\t" + render_fixed(Rational(joint / n));
        o.require(e.table_tsv.find(line) != std::string::npos, "cell does not recompute: " + line);
    }
    const auto again = report(run.run_dir);
    o.require(again.table_tsv == e.table_tsv && again.table_text == e.table_text, "re-render differs");
    o.require(read_file(run.run_dir / "tables" / "aggregate.tsv") == e.table_tsv, "persisted table differs");
    if (o.pass) o.detail = "3 retrievers x 2 summarizers, 6 complete cells, byte-identical re-render";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"worked-example scores", worked_example},
        {"perfect-pipeline identity", perfect_pipeline},
        {"synthesis invariants", synthesis_invariants},
        {"citation arithmetic vs oracle", citation_arithmetic},
        {"budget monotonicity", budget_monotonicity},
        {"position sensitivity", position_sensitivity_check},
        {"meta-eval correctness", meta_eval_correctness},
        {"aggregate table shape", table_shape},
    };
    int failed = 0;
    int n = 0;
    for (const auto& [name, fn] : criteria) {
        ++n;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << n << "] " << name << ": " << o.detail << "\n";
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
    return failed;
}
