#include "hayeval/harness.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "hayeval/errors.hpp"
#include "hayeval/http_backend.hpp"
#include "hayeval/parallel.hpp"
#include "hayeval/summarizer.hpp"
#include "hayeval/synthesis.hpp"

namespace hayeval {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void RunConfig::validate() const {
    if (haystack_path.empty()) throw ConfigError("haystack path is required");
    if (context_budget == 0) throw ConfigError("context budget must be positive");
    if (retrievers.empty()) throw ConfigError("at least one retriever is required");
    if (summarizers.empty()) throw ConfigError("at least one summarizer is required");
    if (workers == 0) throw ConfigError("workers must be positive");
    for (const auto& r : retrievers) {
        if (r == kFullContext) continue;
        const auto kind = parse_retriever_kind(r);
        if ((kind == RetrieverKind::embed && embed_endpoint.empty()) ||
            (kind == RetrieverKind::long_embed && long_embed_endpoint.empty()) ||
            (kind == RetrieverKind::rerank && rerank_endpoint.empty()))
            throw ConfigError("retriever '" + r + "' needs its endpoint configured");
    }
}

json to_json(const RunConfig& c) {
    return {{"haystack_path", c.haystack_path},
            {"subtopics", c.subtopics},
            {"retrievers", c.retrievers},
            {"summarizers", c.summarizers},
            {"judge", c.judge},
            {"context_budget", c.context_budget == kUnlimitedBudget ? json("unlimited") : json(c.context_budget)},
            {"ordering", to_string(c.ordering)},
            {"rng_seed", c.rng_seed},
            {"output_dir", c.output_dir},
            {"endpoints_path", c.endpoints_path},
            {"embed_endpoint", c.embed_endpoint},
            {"long_embed_endpoint", c.long_embed_endpoint},
            {"rerank_endpoint", c.rerank_endpoint},
            {"cache_dir", c.cache_dir},
            {"workers", c.workers}};
}

RunConfig run_config_from_json(const json& j) {
    try {
        RunConfig c;
        c.haystack_path = j.value("haystack_path", "");
        c.subtopics = j.value("subtopics", std::vector<std::string>{});
        c.retrievers = j.value("retrievers", std::vector<std::string>{});
        c.summarizers = j.value("summarizers", std::vector<std::string>{});
        c.judge = j.value("judge", c.judge);
        if (j.contains("context_budget")) {
            const auto& b = j["context_budget"];
            if (b.is_string() && b.get<std::string>() == "unlimited") {
                c.context_budget = kUnlimitedBudget;
            } else if (b.is_number_integer() && b.get<long long>() > 0) {
                c.context_budget = b.get<std::size_t>();
            } else {
                throw ConfigError("context_budget must be a positive integer or \"unlimited\"");
            }
        }
        c.ordering = parse_placement(j.value("ordering", "random"));
        c.rng_seed = j.value("rng_seed", c.rng_seed);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.endpoints_path = j.value("endpoints_path", "");
        c.embed_endpoint = j.value("embed_endpoint", "");
        c.long_embed_endpoint = j.value("long_embed_endpoint", "");
        c.rerank_endpoint = j.value("rerank_endpoint", "");
        c.cache_dir = j.value("cache_dir", "");
        c.workers = j.value("workers", c.workers);
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed run config: ") + e.what());
    }
}

RunConfig load_run_config(const fs::path& path) {
    try {
        return run_config_from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse run config " + path.string() + ": " + e.what());
    }
}

std::string compute_run_id(const RunConfig& c, const std::string& haystack_sha256) {
    auto j = to_json(c);
    // Where and how fast a run executes does not change its results.
    for (const char* k : {"output_dir", "workers", "cache_dir", "haystack_path", "endpoints_path"}) j.erase(k);
    j["haystack_sha256"] = haystack_sha256;
    return sha256_hex(j.dump()).substr(0, 16);
}

std::unique_ptr<Gateway> make_gateway(const std::string& endpoints_path, const std::string& cache_dir) {
    EndpointRegistry registry;
    if (!endpoints_path.empty()) registry = EndpointRegistry::load(endpoints_path);
    GatewayOptions options;
    if (!cache_dir.empty()) options.cache_dir = fs::path(cache_dir);
    return std::make_unique<Gateway>(std::move(registry), make_default_backend(), options);
}

namespace {

std::string sanitize(std::string_view s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-') ? c : '-';
    return out;
}

std::uint64_t hash64(std::string_view s) { return std::stoull(sha256_hex(s).substr(0, 16), nullptr, 16); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Synthesis

struct SynthesisParts {
    std::unique_ptr<Gateway> gateway;
    std::unique_ptr<TextGenerator> generator;
    std::unique_ptr<InsightVerifier> verifier;
};

SynthesisStage parse_stage(std::string_view s) {
    for (auto st : {SynthesisStage::subtopics, SynthesisStage::subtopic_overlap, SynthesisStage::insights,
                    SynthesisStage::insight_classify, SynthesisStage::document, SynthesisStage::document_edit,
                    SynthesisStage::chapter, SynthesisStage::query})
        if (to_string(st) == s) return st;
    throw ConfigError("unknown synthesis stage '" + std::string(s) + "'");
}

SynthesisParts synthesis_parts(const json& scenario, const fs::path& base) {
    SynthesisParts p;
    std::string endpoints = scenario.value("endpoints", "");
    if (!endpoints.empty() && fs::path(endpoints).is_relative()) endpoints = (base / endpoints).string();
    p.gateway = make_gateway(endpoints, scenario.value("cache_dir", ""));

    const auto generator = scenario.value("generator", "sentinel");
    if (generator == "sentinel") {
        p.generator = std::make_unique<SentinelGenerator>();
    } else {
        p.gateway->registry().get(generator);
        std::map<SynthesisStage, std::string> stages;
        for (const auto& [k, v] : scenario.value("stage_endpoints", json::object()).items()) {
            p.gateway->registry().get(v.get<std::string>());
            stages[parse_stage(k)] = v.get<std::string>();
        }
        p.generator = std::make_unique<GatewayGenerator>(*p.gateway, generator, std::move(stages));
    }
    const auto verifier = scenario.value("verifier", "sentinel");
    if (verifier == "sentinel") {
        p.verifier = std::make_unique<SentinelVerifier>();
    } else {
        p.gateway->registry().get(verifier);
        p.verifier = std::make_unique<LlmVerifier>(*p.gateway, verifier);
    }
    return p;
}

}  // namespace

SynthesizeResult cmd_synthesize(const fs::path& scenario_path, const fs::path& out_path,
                                std::optional<std::uint64_t> seed_override) {
    json scenario;
    try {
        scenario = json::parse(read_file(scenario_path));
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse scenario " + scenario_path.string() + ": " + e.what());
    } catch (const NotFoundError& e) {
        throw ConfigError(e.what());
    }
    Topic topic;
    SynthesisConfig config;
    try {
        topic = topic_from_json(scenario.at("topic"));
        config = synthesis_config_from_json(scenario.value("config", json::object()));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed scenario: ") + e.what());
    }
    if (seed_override) config.rng_seed = *seed_override;
    auto parts = synthesis_parts(scenario, scenario_path.parent_path());

    SynthesisLog log;
    BuildOptions options;
    options.workers = scenario.value("workers", std::size_t{1});
    options.log = &log;
    SynthesizeResult r;
    r.haystack_path = out_path;
    r.log_path = fs::path(out_path.string() + ".log.jsonl");
    try {
        const auto h = build_haystack(topic, config, *parts.generator, *parts.verifier, options);
        const auto violations = validate_haystack(h);
        if (!violations.empty())
            throw SynthesisError("validate", violations.front().kind + ": " + violations.front().message, to_json(h));
        if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
        save_haystack(h, out_path);
        write_file_atomic(r.log_path, log.to_jsonl());
        r.n_documents = h.documents.size();
        r.n_insights = h.insights.size();
        return r;
    } catch (const SynthesisError& e) {
        const fs::path partial = out_path.string() + ".partial";
        fs::create_directories(partial);
        write_file_atomic(partial / "partial_state.json",
                          dump({{"stage", e.stage}, {"error", e.what()}, {"state", e.partial_state}}));
        write_file_atomic(partial / "synthesis.log.jsonl", log.to_jsonl());
        throw;
    }
}

// ---------------------------------------------------------------------------
// Runs

namespace {

struct Layout {
    fs::path root;
    fs::path manifest() const { return root / "manifest.json"; }
    fs::path raw() const { return root / "raw"; }
    fs::path judgments() const { return root / "judgments"; }
    fs::path reports() const { return root / "reports"; }
    fs::path tables() const { return root / "tables"; }
    void create() const {
        for (const auto& d : {raw(), judgments(), reports(), tables()}) fs::create_directories(d);
    }
};

struct PlannedTask {
    TaskRecord record;
    const Subtopic* subtopic = nullptr;
};

std::vector<PlannedTask> plan_tasks(const RunConfig& c, const Haystack& h) {
    std::vector<const Subtopic*> subtopics;
    if (c.subtopics.empty()) {
        for (const auto& s : h.subtopics) subtopics.push_back(&s);
    } else {
        for (const auto& id : c.subtopics) {
            try {
                subtopics.push_back(&h.subtopic(id));
            } catch (const NotFoundError&) {
                throw ConfigError("subtopic '" + id + "' is not in the haystack");
            }
        }
    }
    std::vector<PlannedTask> out;
    for (const auto* s : subtopics)
        for (const auto& r : c.retrievers)
            for (const auto& m : c.summarizers) {
                PlannedTask t;
                t.record = {s->id + "__" + sanitize(r) + "__" + sanitize(m), s->id, r, m, "pending", ""};
                t.subtopic = s;
                out.push_back(std::move(t));
            }
    return out;
}

std::optional<json> read_json_if(const fs::path& p) {
    if (!fs::exists(p)) return std::nullopt;
    try {
        return json::parse(read_file(p));
    } catch (const json::exception&) {
        return std::nullopt;  // torn or foreign file: treat as absent
    }
}

json manifest_json(const RunConfig& c, const std::string& run_id, const std::string& haystack_sha,
                   const std::vector<TaskRecord>& tasks, const Layout& layout) {
    json jt = json::array();
    std::size_t in = 0, out = 0;
    double cost = 0.0;
    std::map<std::string, std::size_t> status_counts;
    for (const auto& t : tasks) {
        json e{{"id", t.id},
               {"subtopic", t.subtopic},
               {"retriever", t.retriever},
               {"summarizer", t.summarizer},
               {"status", t.status}};
        if (!t.error.empty()) e["error"] = t.error;
        if (t.status == "ok") {
            e["raw"] = "raw/" + t.id + ".txt";
            e["record"] = "raw/" + t.id + ".json";
            if (auto rec = read_json_if(layout.raw() / (t.id + ".json")); rec && rec->contains("usage")) {
                in += (*rec)["usage"].value("input_tokens", std::size_t{0});
                out += (*rec)["usage"].value("output_tokens", std::size_t{0});
                cost += (*rec)["usage"].value("cost", 0.0);
            }
        }
        ++status_counts[t.status];
        jt.push_back(std::move(e));
    }
    return {{"run_id", run_id},
            {"haystack_sha256", haystack_sha},
            {"config", to_json(c)},
            {"tasks", std::move(jt)},
            {"status_counts", status_counts},
            {"usage", {{"input_tokens", in}, {"output_tokens", out}, {"cost", cost}}},
            {"artifacts",
             {{"raw", "raw/"}, {"judgments", "judgments/"}, {"reports", "reports/"}, {"tables", "tables/"}}}};
}

void execute_task(const PlannedTask& task, const RunConfig& c, const Haystack& h, Gateway& gateway,
                  const Layout& layout) {
    const auto& t = task.record;
    const auto& s = *task.subtopic;
    auto rng = derive_rng(c.rng_seed, hash64(t.id));
    json context;
    std::vector<DocId> ids;
    if (t.retriever == kFullContext) {
        ids = order_for_position_bias(h, s, c.ordering, rng);
        context = {{"kind", "full"}, {"ordering", to_string(c.ordering)}, {"selected_ids", ids}};
    } else {
        RetrievalProviders providers{&gateway, c.embed_endpoint, c.long_embed_endpoint, c.rerank_endpoint};
        auto scored = score_documents(h, s, parse_retriever_kind(t.retriever), providers, rng);
        auto sel = assemble_context(s.query, std::move(scored), h.documents, c.context_budget);
        if (sel.selected_ids.empty())
            throw RetrievalError("empty-context: budget " + std::to_string(c.context_budget) +
                                 " is below the smallest document");
        ids = sel.selected_ids;
        context = to_json(sel);
        context["kind"] = t.retriever;
    }
    auto summarizer = make_summarizer(t.summarizer, &gateway);
    const auto request = make_summary_request(h, s, ids, t.summarizer);
    const auto raw_path = layout.raw() / (t.id + ".txt");
    json rec{{"id", t.id}, {"subtopic", t.subtopic}, {"retriever", t.retriever}, {"summarizer", t.summarizer},
             {"query", s.query}, {"n_bullets_required", request.n_bullets_required}, {"context", context}};
    try {
        auto result = run_summarization(request, h, *summarizer, TemplateSet::builtin(),
                                        [&](const std::string& raw) { write_file_atomic(raw_path, raw); });
        rec["usage"] = {{"endpoint", result.usage.endpoint},
                        {"input_tokens", result.usage.input_tokens},
                        {"output_tokens", result.usage.output_tokens},
                        {"cost", result.usage.cost}};
    } catch (const ParseError& e) {
        // the raw output is on disk; evaluation scores it as incomplete
        rec["parse_error"] = e.what();
    }
    write_file_atomic(layout.raw() / (t.id + ".json"), dump(rec));
}

}  // namespace

RunOutcome cmd_run(const RunConfig& config, const RunOptions& options) {
    config.validate();
    const auto haystack_text = read_file(config.haystack_path);
    const auto h = parse_haystack(haystack_text);
    if (const auto v = validate_haystack(h); !v.empty())
        throw ConfigError("haystack " + config.haystack_path + " is invalid: " + v.front().message);
    const auto haystack_sha = sha256_hex(haystack_text);
    auto gateway = make_gateway(config.endpoints_path, config.cache_dir);
    for (const auto& m : config.summarizers) make_summarizer(m, gateway.get());

    RunOutcome out;
    out.run_id = compute_run_id(config, haystack_sha);
    out.run_dir = fs::path(config.output_dir) / out.run_id;
    const Layout layout{out.run_dir};
    layout.create();

    auto tasks = plan_tasks(config, h);
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto& t = tasks[i].record;
        const auto rec = read_json_if(layout.raw() / (t.id + ".json"));
        if (rec && fs::exists(layout.raw() / (t.id + ".txt"))) {
            t.status = "ok";
        } else if (!options.max_new_tasks || todo.size() < *options.max_new_tasks) {
            todo.push_back(i);
        }
    }
    std::mutex mu;
    parallel_for(todo.size(), config.workers, [&](std::size_t k) {
        auto& task = tasks[todo[k]];
        std::string status = "ok", error;
        try {
            execute_task(task, config, h, *gateway, layout);
        } catch (const std::exception& e) {
            status = "failed";
            error = e.what();
        }
        std::lock_guard lock(mu);
        task.record.status = status;
        task.record.error = error;
    });
    out.executed = todo.size();
    for (const auto& t : tasks) {
        out.tasks.push_back(t.record);
        if (t.record.status != "ok") out.exit_code = kExitPartial;
    }
    write_file_atomic(layout.manifest(), dump(manifest_json(config, out.run_id, haystack_sha, out.tasks, layout)));
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation and reports

namespace {

struct LoadedRun {
    json manifest;
    RunConfig config;
};

LoadedRun load_run(const fs::path& run_dir) {
    const Layout layout{run_dir};
    if (!fs::exists(layout.manifest())) throw ConfigError("no manifest in " + run_dir.string());
    LoadedRun r;
    r.manifest = json::parse(read_file(layout.manifest()));
    r.config = run_config_from_json(r.manifest.at("config"));
    return r;
}

EvaluateOutcome render_tables(const std::vector<LabeledReport>& reports, const Layout& layout) {
    EvaluateOutcome out;
    out.n_reports = reports.size();
    for (const auto& r : reports) out.n_incomplete += r.report.incomplete ? 1 : 0;
    out.rows = aggregate_run(reports);
    out.table_tsv = render_aggregate_tsv(out.rows);
    out.table_text = render_aggregate_table(out.rows);
    write_file_atomic(layout.tables() / "aggregate.tsv", out.table_tsv);
    write_file_atomic(layout.tables() / "aggregate.txt", out.table_text);
    out.exit_code = out.n_incomplete ? kExitPartial : kExitOk;
    return out;
}

}  // namespace

EvaluateOutcome cmd_evaluate(const fs::path& run_dir, const std::string& judge_override) {
    const Layout layout{run_dir};
    auto run = load_run(run_dir);
    const auto judge_name = judge_override.empty() ? run.config.judge : judge_override;
    const auto haystack_text = read_file(run.config.haystack_path);
    const auto h = parse_haystack(haystack_text);
    if (sha256_hex(haystack_text) != run.manifest.at("haystack_sha256").get<std::string>())
        throw ConfigError("haystack " + run.config.haystack_path + " changed since the run");
    auto gateway = make_gateway(run.config.endpoints_path, run.config.cache_dir);
    auto judge = make_judge(judge_name, gateway.get());
    layout.create();

    std::vector<json> done;
    for (const auto& t : run.manifest.at("tasks"))
        if (t.at("status") == "ok") done.push_back(t);
    if (done.empty()) throw RunError("nothing-to-evaluate: the run has no completed summaries");

    std::vector<LabeledReport> reports(done.size());
    parallel_for(done.size(), std::max<std::size_t>(1, run.config.workers / 2), [&](std::size_t i) {
        const auto& t = done[i];
        const auto id = t.at("id").get<std::string>();
        const auto& s = h.subtopic(t.at("subtopic").get<std::string>());
        reports[i].summarizer = t.at("summarizer").get<std::string>();
        reports[i].retriever = t.at("retriever").get<std::string>();
        json judgments = json::array();
        try {
            const auto summary = parse_summary(read_file(layout.raw() / (id + ".txt")));
            auto judged = evaluate_summary(h, s, summary, *judge, 2);
            for (const auto& j : judged.judgments)
                if (!j.insight_id.empty()) judgments.push_back(to_json(j));
            reports[i].report = std::move(judged.report);
        } catch (const ParseError& e) {
            reports[i].report = incomplete_report(s.insight_ids, std::string("unparseable summary: ") + e.what());
        }
        write_file_atomic(layout.judgments() / (id + ".json"), dump({{"judge", judge_name}, {"judgments", judgments}}));
        write_file_atomic(layout.reports() / (id + ".json"),
                          dump({{"task", id},
                                {"subtopic", s.id},
                                {"summarizer", reports[i].summarizer},
                                {"retriever", reports[i].retriever},
                                {"judge", judge_name},
                                {"report", to_json(reports[i].report)}}));
    });
    return render_tables(reports, layout);
}

EvaluateOutcome report(const fs::path& run_dir) {
    const Layout layout{run_dir};
    const auto run = load_run(run_dir);
    std::vector<LabeledReport> reports;
    for (const auto& t : run.manifest.at("tasks")) {
        if (t.at("status") != "ok") continue;
        const auto path = layout.reports() / (t.at("id").get<std::string>() + ".json");
        if (!fs::exists(path)) throw RunError("missing report " + path.string() + "; run evaluate first");
        const auto j = json::parse(read_file(path));
        reports.push_back({j.at("summarizer").get<std::string>(), j.at("retriever").get<std::string>(),
                           score_report_from_json(j.at("report"))});
    }
    if (reports.empty()) throw RunError("nothing-to-evaluate: the run has no reports");
    return render_tables(reports, layout);
}

// ---------------------------------------------------------------------------
// Position bias

PositionBiasOutcome cmd_position_bias(const RunConfig& config) {
    PositionBiasOutcome out;
    std::map<std::string, std::map<Placement, std::pair<Rational, bool>>> joint;
    const std::vector<Placement> orderings{Placement::top, Placement::bottom, Placement::random};
    for (auto placement : orderings) {
        RunConfig c = config;
        c.retrievers = {std::string(kFullContext)};
        c.ordering = placement;
        const auto run = cmd_run(c);
        out.run_dirs.push_back(run.run_dir);
        if (run.exit_code != kExitOk) out.exit_code = kExitPartial;
        const auto eval = cmd_evaluate(run.run_dir);
        if (eval.exit_code != kExitOk) out.exit_code = kExitPartial;
        for (const auto& row : eval.rows)
            joint[row.summarizer][placement] = {row.joint, row.n_reports > 0 && row.n_incomplete == 0};
    }
    std::string tsv = "Summarizer\tTop\tBottom\tRandom\tSensitivity\n";
    for (const auto& m : config.summarizers) {
        PositionBiasRow row;
        row.summarizer = m;
        auto& cells = joint[m];
        row.complete = cells.size() == 3 && std::all_of(cells.begin(), cells.end(), [](auto& kv) { return kv.second.second; });
        const Rational top = cells[Placement::top].first, bottom = cells[Placement::bottom].first,
                       random = cells[Placement::random].first;
        const Rational dt = top > random ? Rational(top - random) : Rational(random - top);
        const Rational db = bottom > random ? Rational(bottom - random) : Rational(random - bottom);
        row.top = to_double(top);
        row.bottom = to_double(bottom);
        row.random = to_double(random);
        row.sensitivity = to_double(std::max(dt, db));
        tsv += m + "\t" + render_fixed(top) + "\t" + render_fixed(bottom) + "\t" + render_fixed(random) + "\t" +
               render_fixed(std::max(dt, db)) + (row.complete ? "" : "\tincomplete") + "\n";
        out.rows.push_back(row);
    }
    out.table_tsv = tsv;
    std::size_t w = std::string_view("Summarizer").size();
    for (const auto& r : out.rows) w = std::max(w, r.summarizer.size());
    for (const auto& line : split_lines(tsv)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            const auto tab = line.find('\t', pos);
            cells.emplace_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
            if (tab == std::string::npos) break;
            pos = tab + 1;
        }
        std::string text = cells[0] + std::string(w - cells[0].size(), ' ');
        for (std::size_t i = 1; i < cells.size(); ++i) {
            const auto width = std::max<std::size_t>(11, cells[i].size());
            text += "  " + std::string(width - cells[i].size(), ' ') + cells[i];
        }
        out.table_text += text + "\n";
    }
    const auto name = "position-bias-" + sha256_hex(out.run_dirs.front().string() + out.run_dirs.back().string()).substr(0, 12);
    fs::create_directories(config.output_dir);
    write_file_atomic(fs::path(config.output_dir) / (name + ".tsv"), out.table_tsv);
    write_file_atomic(fs::path(config.output_dir) / (name + ".txt"), out.table_text);
    return out;
}

// ---------------------------------------------------------------------------
// Human snapshots

HumanScoreOutcome cmd_human_score(const fs::path& snapshot_path, const fs::path& haystack_path,
                                  const SubtopicId& subtopic, const std::string& judge_name,
                                  const std::string& endpoints_path) {
    const auto h = load_haystack(haystack_path);
    const Subtopic* s = nullptr;
    try {
        s = &h.subtopic(subtopic);
    } catch (const NotFoundError&) {
        throw ConfigError("subtopic '" + subtopic + "' is not in the haystack");
    }
    auto gateway = make_gateway(endpoints_path);
    auto judge = make_judge(judge_name, gateway.get());
    HumanScoreOutcome out;
    const auto series = load_snapshots_jsonl(snapshot_path.string(), &out.warnings);
    for (const auto& ser : series) {
        auto rows = score_snapshots(ser, h, *s, *judge, 4);
        out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    }
    if (out.rows.empty()) throw InputError("no snapshots to score in " + snapshot_path.string());
    out.table_tsv = render_snapshot_tsv(out.rows);
    return out;
}

}  // namespace hayeval
