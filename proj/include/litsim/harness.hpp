#pragma once

#include "litsim/metrics.hpp"
#include "litsim/workflow.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace litsim::harness {

struct PolicySettings {
    /// "mock" or "http".
    std::string kind = "mock";
    /// Mock script; empty runs the built-in heuristic.
    std::string script;
    std::string endpoint;
    std::string model;
    /// Environment variable holding the bearer token.
    std::string token_env = "LITSIM_API_KEY";
    /// Directory overriding the compiled-in prompt templates.
    std::string prompts_dir;
};

struct RetrySettings {
    std::size_t transport = 3;
    std::size_t parse = 2;
    std::size_t initial_backoff_ms = 500;
    std::size_t max_backoff_ms = 8000;
};

/// Declarative run description. Relative paths resolve against base_dir.
struct RunConfig {
    std::string corpus;
    std::string index;
    std::string benchmark;
    std::string backend = "sparse";
    AssessMode mode = AssessMode::AbstractOnly;
    std::size_t max_iterations = 5;
    std::size_t cutoff = 100;
    std::size_t max_results_per_request = 10;
    std::size_t direct_k = 50;
    std::size_t buffer_cap = 4000;
    PolicySettings policy;
    policy::Decoding decoding;
    RetrySettings retries;
    std::string fulltext_store;
    bool enable_fetcher = false;
    std::string fetch_url_template = "https://ar5iv.labs.arxiv.org/html/{id}";
    bool strict_subquery_count = false;
    bool baseline = false;

    // Execution settings; not part of the digest.
    std::string output_dir = "out";
    std::size_t jobs = 0;
    bool resume = false;
    std::filesystem::path base_dir;

    /// Unknown keys and out-of-range values throw Error.
    static RunConfig from_json(const nlohmann::json& j, std::filesystem::path base_dir = {});
    static RunConfig load(const std::filesystem::path& path);

    nlohmann::ordered_json to_json() const;
    /// Result-affecting fields only, in fixed order.
    nlohmann::ordered_json digest_fields() const;
    std::string digest() const;

    std::filesystem::path resolve(const std::string& path) const;
    std::size_t worker_count() const;
};

/// Filesystem-safe trajectory file name for a query id.
std::string trajectory_file_name(std::string_view qid);

struct IngestOutcome {
    corpus::IngestReport report;
    std::filesystem::path corpus_file;
};

IngestOutcome ingest_file(const std::filesystem::path& input, const std::filesystem::path& output,
                          const DateWindow& window = {});

struct IndexOptions {
    /// "sparse" or "dense".
    std::string kind = "sparse";
    retrieval::Bm25Params bm25;
    std::size_t dimension = 64;
    std::uint64_t seed = 0;
};

/// Builds and saves an index; returns its digest.
std::string build_index_file(const std::filesystem::path& corpus_file, const std::filesystem::path& output,
                             const IndexOptions& options);

struct QueryOutcome {
    std::string qid;
    /// Skipped under --resume.
    bool reused = false;
    bool failed = false;
    std::string error;
};

struct RunOutcome {
    std::vector<QueryOutcome> queries;
    metrics::Report report;

    std::size_t failed() const;
};

/// Runs every usable benchmark query, writes trajectories and the report
/// files into output_dir. Progress lines go to `log`.
RunOutcome run_benchmark(const RunConfig& config, std::ostream& log);

/// Recomputes metrics from the trajectory files under `trajectory_dir`,
/// using the config's corpus and benchmark for ground truth. Trajectories
/// with a different config digest are excluded.
metrics::Report build_report(const RunConfig& config, const std::filesystem::path& trajectory_dir);

/// report.json, report.txt and curves.csv, each stamped with the digest.
void write_report(const std::filesystem::path& dir, const metrics::Report& report, const std::string& config_digest);

}  // namespace litsim::harness
