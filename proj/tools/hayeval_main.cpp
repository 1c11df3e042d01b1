// Command-line front end: synthesize, run, evaluate, position-bias,
// human-score, report.

#include <iostream>

#include <CLI11.hpp>

#include "hayeval/errors.hpp"
#include "hayeval/harness.hpp"

using namespace hayeval;

namespace {

struct RunFlags {
    std::string config_path;
    std::string haystack;
    std::vector<std::string> subtopics, retrievers, summarizers;
    std::string judge, budget, ordering, output_dir, endpoints, embed, long_embed, rerank, cache_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers, max_tasks;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run config JSON; flags override its fields");
        cmd->add_option("--haystack", haystack, "haystack file");
        cmd->add_option("--subtopic", subtopics, "restrict to these subtopic ids");
        cmd->add_option("--retriever", retrievers, "random|keywords|embed|long_embed|rerank|oracle|full");
        cmd->add_option("--summarizer", summarizers, "endpoint name or mock:perfect|mock:noisy|mock:first<k>");
        cmd->add_option("--judge", judge, "judge endpoint or 'sentinel'");
        cmd->add_option("--budget", budget, "context budget in tokens, or 'unlimited' (default 15000)");
        cmd->add_option("--ordering", ordering, "random|top|bottom (full-context runs)");
        cmd->add_option("--seed", seed, "rng seed");
        cmd->add_option("--output-dir", output_dir, "root for run directories (default runs)");
        cmd->add_option("--endpoints", endpoints, "endpoint registry JSON");
        cmd->add_option("--embed-endpoint", embed);
        cmd->add_option("--long-embed-endpoint", long_embed);
        cmd->add_option("--rerank-endpoint", rerank);
        cmd->add_option("--cache-dir", cache_dir, "on-disk response cache");
        cmd->add_option("--workers", workers, "concurrent tasks (default 4)");
    }

    RunConfig resolve() const {
        RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        if (!haystack.empty()) c.haystack_path = haystack;
        if (!subtopics.empty()) c.subtopics = subtopics;
        if (!retrievers.empty()) c.retrievers = retrievers;
        if (!summarizers.empty()) c.summarizers = summarizers;
        if (!judge.empty()) c.judge = judge;
        if (budget == "unlimited") {
            c.context_budget = kUnlimitedBudget;
        } else if (!budget.empty()) {
            try {
                const long long b = std::stoll(budget);
                if (b <= 0) throw ConfigError("");
                c.context_budget = static_cast<std::size_t>(b);
            } catch (const std::exception&) {
                throw ConfigError("--budget must be a positive integer or 'unlimited'");
            }
        }
        if (!ordering.empty()) c.ordering = parse_placement(ordering);
        if (seed) c.rng_seed = *seed;
        if (!output_dir.empty()) c.output_dir = output_dir;
        if (!endpoints.empty()) c.endpoints_path = endpoints;
        if (!embed.empty()) c.embed_endpoint = embed;
        if (!long_embed.empty()) c.long_embed_endpoint = long_embed;
        if (!rerank.empty()) c.rerank_endpoint = rerank;
        if (!cache_dir.empty()) c.cache_dir = cache_dir;
        if (workers) c.workers = *workers;
        c.validate();
        return c;
    }
};

void print_tasks(const RunOutcome& r) {
    std::size_t ok = 0, failed = 0, pending = 0;
    for (const auto& t : r.tasks) {
        if (t.status == "ok") ++ok;
        else if (t.status == "failed") ++failed;
        else ++pending;
        if (t.status == "failed") std::cerr << "task " << t.id << " failed: " << t.error << "\n";
    }
    std::cout << "run " << r.run_id << " -> " << r.run_dir.string() << "\n"
              << "tasks: " << ok << " ok, " << failed << " failed, " << pending << " pending (" << r.executed
              << " executed now)\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Summary-of-a-haystack evaluation harness"};
    app.require_subcommand(1);

    auto* syn = app.add_subcommand("synthesize", "build a haystack from a scenario file");
    std::string scenario, out;
    std::optional<std::uint64_t> syn_seed;
    syn->add_option("--scenario", scenario, "scenario JSON")->required();
    syn->add_option("--out", out, "haystack output path")->required();
    syn->add_option("--seed", syn_seed, "override the scenario's rng seed");

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "generate summaries for every subtopic x retriever x summarizer");
    run_flags.attach(run);
    run->add_option("--max-tasks", run_flags.max_tasks, "execute at most this many new tasks");

    auto* eval = app.add_subcommand("evaluate", "judge and score a run");
    std::string run_dir, judge_override;
    eval->add_option("--run-dir", run_dir, "runs/<run-id>")->required();
    eval->add_option("--judge", judge_override, "override the run's judge");

    auto* rep = app.add_subcommand("report", "re-render aggregate tables from persisted reports");
    rep->add_option("--run-dir", run_dir, "runs/<run-id>")->required();
    bool tsv = false;
    rep->add_flag("--tsv", tsv, "print the tab-separated table");

    RunFlags bias_flags;
    auto* bias = app.add_subcommand("position-bias", "full-context runs with relevant documents top/bottom/random");
    bias_flags.attach(bias);

    auto* human = app.add_subcommand("human-score", "score timed summary snapshots");
    std::string snapshots, haystack, subtopic, judge = "sentinel", endpoints, table_out;
    human->add_option("--snapshots", snapshots, "JSONL with session, minutes, payload")->required();
    human->add_option("--haystack", haystack)->required();
    human->add_option("--subtopic", subtopic)->required();
    human->add_option("--judge", judge);
    human->add_option("--endpoints", endpoints);
    human->add_option("--out", table_out, "write the table here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*syn) {
            const auto r = cmd_synthesize(scenario, out, syn_seed);
            std::cout << "wrote " << r.haystack_path.string() << " (" << r.n_documents << " documents, "
                      << r.n_insights << " insights); log " << r.log_path.string() << "\n";
            return kExitOk;
        }
        if (*run) {
            RunOptions options;
            options.max_new_tasks = run_flags.max_tasks;
            const auto r = cmd_run(run_flags.resolve(), options);
            print_tasks(r);
            return r.exit_code;
        }
        if (*eval) {
            const auto r = cmd_evaluate(run_dir, judge_override);
            std::cout << r.table_text;
            if (r.n_incomplete) std::cerr << r.n_incomplete << " of " << r.n_reports << " summaries incomplete\n";
            return r.exit_code;
        }
        if (*rep) {
            const auto r = report(run_dir);
            std::cout << (tsv ? r.table_tsv : r.table_text);
            return r.exit_code;
        }
        if (*bias) {
            const auto r = cmd_position_bias(bias_flags.resolve());
            std::cout << r.table_text;
            return r.exit_code;
        }
        if (*human) {
            const auto r = cmd_human_score(snapshots, haystack, subtopic, judge, endpoints);
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
            if (table_out.empty()) std::cout << r.table_tsv;
            else write_file_atomic(table_out, r.table_tsv);
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NotFoundError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPartial;
    }
    return kExitOk;
}
