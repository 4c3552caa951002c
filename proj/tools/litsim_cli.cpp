// litsim command line: ingest, index, run, report.
#include "litsim/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using nlohmann::json;
using namespace litsim;

constexpr int exit_config_error = 1;
constexpr int exit_run_failed = 2;

struct RunFlags {
    std::string config;
    std::optional<std::string> corpus, index, benchmark, backend, mode, policy, script, endpoint, model, output;
    std::optional<std::size_t> max_iterations, cutoff, max_results, direct_k, jobs;
    std::optional<double> temperature, top_p;
    std::optional<std::string> fulltext_store;
    bool resume = false;
    bool baseline = false;
};

void add_run_flags(CLI::App& app, RunFlags& f, bool with_execution_flags)
{
    app.add_option("-c,--config", f.config, "run configuration (JSON)");
    app.add_option("--corpus", f.corpus, "corpus snapshot file");
    app.add_option("--index", f.index, "index file");
    app.add_option("--benchmark", f.benchmark, "benchmark queries (JSONL)");
    app.add_option("--cutoff", f.cutoff, "Avg.Distance rank cutoff");
    app.add_option("-o,--output", f.output, "output directory");
    app.add_option("--backend", f.backend, "sparse or dense");
    app.add_option("--mode", f.mode, "abstract_only or adaptive");
    app.add_option("--policy", f.policy, "mock or http");
    app.add_option("--script", f.script, "mock policy script");
    app.add_option("--endpoint", f.endpoint, "chat-completions URL");
    app.add_option("--model", f.model, "model name sent to the endpoint");
    app.add_option("-T,--max-iterations", f.max_iterations, "iteration budget");
    app.add_option("--max-results", f.max_results, "per-request result cap");
    app.add_option("--direct-k", f.direct_k, "results for the direct-query baseline");
    app.add_option("--temperature", f.temperature);
    app.add_option("--top-p", f.top_p);
    app.add_option("--fulltext-store", f.fulltext_store, "local full-text store for adaptive browsing");
    app.add_flag("--baseline", f.baseline, "direct-query baseline");
    if (with_execution_flags) {
        app.add_option("-j,--jobs", f.jobs, "parallel queries (0 = all cores)");
        app.add_flag("--resume", f.resume, "skip queries whose trajectory already matches the config");
    }
}

harness::RunConfig resolve_config(const RunFlags& f)
{
    json j = json::object();
    std::filesystem::path base;
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) {
            throw Error("cannot open config " + f.config);
        }
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw Error("config " + f.config + ": " + e.what());
        }
        base = std::filesystem::path(f.config).parent_path();
    }
    // Command-line paths are relative to the working directory, not the
    // config file, so they are made absolute here.
    auto path_flag = [&](const char* key, const std::optional<std::string>& v) {
        if (v) {
            j[key] = std::filesystem::absolute(*v).lexically_normal().string();
        }
    };
    path_flag("corpus", f.corpus);
    path_flag("index", f.index);
    path_flag("benchmark", f.benchmark);
    path_flag("output_dir", f.output);
    path_flag("fulltext_store", f.fulltext_store);
    if (f.backend) j["backend"] = *f.backend;
    if (f.mode) j["mode"] = *f.mode;
    if (f.policy) j["policy"]["kind"] = *f.policy;
    if (f.script) j["policy"]["script"] = std::filesystem::absolute(*f.script).lexically_normal().string();
    if (f.endpoint) j["policy"]["endpoint"] = *f.endpoint;
    if (f.model) j["policy"]["model"] = *f.model;
    if (f.max_iterations) j["max_iterations"] = *f.max_iterations;
    if (f.cutoff) j["cutoff"] = *f.cutoff;
    if (f.max_results) j["max_results_per_request"] = *f.max_results;
    if (f.direct_k) j["direct_k"] = *f.direct_k;
    if (f.temperature) j["decoding"]["temperature"] = *f.temperature;
    if (f.top_p) j["decoding"]["top_p"] = *f.top_p;
    if (f.jobs) j["jobs"] = *f.jobs;
    if (f.resume) j["resume"] = true;
    if (f.baseline) j["baseline"] = true;
    return harness::RunConfig::from_json(j, base);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Deterministic literature-search simulation and deep-research workflow"};
    app.require_subcommand(1);

    std::string ingest_in, ingest_out, ingest_report, window_first, window_last;
    auto* ingest = app.add_subcommand("ingest", "clean raw paper records into a corpus snapshot");
    ingest->add_option("input", ingest_in, "raw records (JSONL)")->required();
    ingest->add_option("-o,--output", ingest_out, "snapshot file")->required();
    ingest->add_option("--report", ingest_report, "also write the ingest report here");
    ingest->add_option("--window-start", window_first, "first admissible date (YYYY-MM-DD)");
    ingest->add_option("--window-end", window_last, "last admissible date (YYYY-MM-DD)");

    std::string index_corpus, index_out;
    harness::IndexOptions index_opts;
    auto* index = app.add_subcommand("index", "build a sparse or dense index over a snapshot");
    index->add_option("corpus", index_corpus, "snapshot file")->required();
    index->add_option("-o,--output", index_out, "index file")->required();
    index->add_option("--kind", index_opts.kind, "sparse or dense")->check(CLI::IsMember({"sparse", "dense"}));
    index->add_option("--k1", index_opts.bm25.k1);
    index->add_option("--b", index_opts.bm25.b);
    index->add_option("--dim", index_opts.dimension, "embedding dimension");
    index->add_option("--seed", index_opts.seed, "embedding hash seed");

    std::string search_index, search_corpus, search_query, search_date = "2024-12-31";
    std::size_t search_k = 10, search_page = 0;
    auto* search = app.add_subcommand("search", "run one tool call against an index");
    search->add_option("index", search_index, "index file")->required();
    search->add_option("--corpus", search_corpus, "snapshot the index was built from")->required();
    search->add_option("-q,--query", search_query, "query text")->required();
    search->add_option("-k", search_k, "results per page");
    search->add_option("--page", search_page, "0-based page");
    search->add_option("--date", search_date, "latest admissible publication date");

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "run the benchmark and write trajectories plus a report");
    add_run_flags(*run, run_flags, true);

    RunFlags report_flags;
    std::string report_trajectories;
    auto* report = app.add_subcommand("report", "recompute metrics from trajectory files");
    add_run_flags(*report, report_flags, false);
    report->add_option("--trajectories", report_trajectories, "trajectory directory (default <output>/trajectories)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            DateWindow window;
            if (!window_first.empty()) window.first = Date::parse(window_first);
            if (!window_last.empty()) window.last = Date::parse(window_last);
            const auto outcome = harness::ingest_file(ingest_in, ingest_out, window);
            const auto text = outcome.report.to_json().dump(2);
            if (!ingest_report.empty()) {
                std::ofstream(ingest_report) << text << "\n";
            }
            std::cout << text << "\n";
            return 0;
        }
        if (*index) {
            const auto digest = harness::build_index_file(index_corpus, index_out, index_opts);
            std::cout << index_opts.kind << " index " << index_out << " digest " << digest << "\n";
            return 0;
        }
        if (*search) {
            const auto snapshot = corpus::CorpusSnapshot::load(search_corpus);
            const retrieval::ToolCall call{search_query, search_k, Date::parse(search_date), search_page};
            retrieval::CandidateSet result;
            if (retrieval::index_kind(search_index) == "bm25") {
                result = retrieval::SparseIndex::load(search_index, snapshot).search(call);
            } else {
                const auto dense = retrieval::DenseIndex::load(search_index, snapshot);
                result = dense.search(call, *retrieval::make_embedder(dense.embedder_descriptor()));
            }
            for (const auto& h : result.hits) {
                std::cout << h.rank << "\t" << h.paper_id << "\t" << h.score << "\t" << snapshot.find(h.paper_id)->title
                          << "\n";
            }
            std::cout << (result.exhausted ? "(exhausted)" : "(more)") << "\n";
            return 0;
        }
        if (*run) {
            const auto config = resolve_config(run_flags);
            const auto outcome = harness::run_benchmark(config, std::cerr);
            if (!outcome.queries.empty() && outcome.failed() == outcome.queries.size()) {
                std::cerr << "every query failed\n";
                return exit_run_failed;
            }
            std::cout << metrics::render_table(outcome.report);
            return 0;
        }
        if (*report) {
            const auto config = resolve_config(report_flags);
            const auto out_dir = config.resolve(config.output_dir);
            const auto traj_dir = report_trajectories.empty() ? out_dir / "trajectories"
                                                              : std::filesystem::path(report_trajectories);
            const auto result = harness::build_report(config, traj_dir);
            harness::write_report(out_dir, result, config.digest());
            std::cout << metrics::render_table(result);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config_error;
    }
    return 0;
}
