#include "litsim/harness.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

namespace litsim::harness {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void reject_unknown(const json& j, std::string_view where, std::initializer_list<std::string_view> known)
{
    if (!j.is_object()) {
        throw Error(std::string(where) + " must be a JSON object");
    }
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw Error("unknown " + std::string(where) + " key '" + key + "'");
        }
    }
}

template <class T>
void read(const json& j, const char* key, T& into)
{
    if (!j.contains(key)) {
        return;
    }
    try {
        into = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error("config key '" + std::string(key) + "' has the wrong type: " + j.at(key).dump());
    }
}

void require_at_least(std::size_t value, std::size_t min, const char* name)
{
    if (value < min) {
        throw Error(std::string(name) + " must be at least " + std::to_string(min));
    }
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) {
        throw Error("cannot write " + path.string());
    }
}

/// Policy plus whatever it borrows, owned per query.
struct PolicyHandle {
    std::unique_ptr<policy::ChatTransport> transport;
    std::unique_ptr<policy::Policy> policy;
};

class PolicyFactory {
  public:
    explicit PolicyFactory(const RunConfig& config) : config_(config)
    {
        if (config.policy.kind == "mock") {
            if (!config.policy.script.empty()) {
                script_ = policy::MockScript::load(config.resolve(config.policy.script));
            }
        } else {
            const char* token = std::getenv(config.policy.token_env.c_str());
            endpoint_ = {config.policy.endpoint, config.policy.model, token != nullptr ? token : "",
                         std::chrono::seconds(120)};
            llm_.decoding = config.decoding;
            llm_.retry = {config.retries.transport, std::chrono::milliseconds(config.retries.initial_backoff_ms),
                          std::chrono::milliseconds(config.retries.max_backoff_ms)};
            llm_.max_parse_retries = config.retries.parse;
            llm_.max_results_per_request = config.max_results_per_request;
            llm_.plan_options.strict_subquery_count = config.strict_subquery_count;
            if (!config.policy.prompts_dir.empty()) {
                llm_.templates = policy::PromptTemplates::load(config.resolve(config.policy.prompts_dir));
            }
        }
    }

    PolicyHandle make(const std::string& qid) const
    {
        PolicyHandle h;
        if (config_.policy.kind == "mock") {
            std::optional<policy::MockQueryScript> script;
            auto it = script_.queries.find(qid);
            if (it != script_.queries.end()) {
                script = it->second;
            } else if (!script_.heuristic_fallback) {
                script = policy::MockQueryScript{};
            }
            h.policy = policy::mock_policy(std::move(script), script_.default_assessor,
                                           config_.max_results_per_request);
            return h;
        }
        h.transport = std::make_unique<policy::HttpChatTransport>(endpoint_);
        h.policy = std::make_unique<policy::LlmPolicy>(*h.transport, llm_);
        return h;
    }

  private:
    const RunConfig& config_;
    policy::MockScript script_;
    policy::HttpEndpoint endpoint_;
    policy::LlmPolicyConfig llm_;
};

struct LoadedBackend {
    std::unique_ptr<retrieval::Backend> backend;
};

LoadedBackend load_backend(const RunConfig& config, const corpus::CorpusSnapshot& snapshot)
{
    const auto path = config.resolve(config.index);
    const auto kind = retrieval::index_kind(path);
    const auto expected = config.backend == "dense" ? "dense" : "bm25";
    if (kind != expected) {
        throw Error("index " + path.string() + " is a " + kind + " index but backend is " + config.backend);
    }
    LoadedBackend out;
    if (kind == "bm25") {
        auto index = std::make_shared<const retrieval::SparseIndex>(retrieval::SparseIndex::load(path, snapshot));
        out.backend = std::make_unique<retrieval::SparseBackend>(std::move(index));
    } else {
        auto index = std::make_shared<const retrieval::DenseIndex>(retrieval::DenseIndex::load(path, snapshot));
        std::shared_ptr<const retrieval::Embedder> embedder = retrieval::make_embedder(index->embedder_descriptor());
        out.backend = std::make_unique<retrieval::DenseBackend>(std::move(index), std::move(embedder));
    }
    return out;
}

metrics::IdSet truth_of(const corpus::BenchmarkQuery& q)
{
    return {q.resolved_ground_truth.begin(), q.resolved_ground_truth.end()};
}

}  // namespace

RunConfig RunConfig::from_json(const json& j, std::filesystem::path base_dir)
{
    reject_unknown(j, "config",
                   {"corpus", "index", "benchmark", "backend", "mode", "max_iterations", "cutoff",
                    "max_results_per_request", "direct_k", "buffer_cap", "policy", "decoding", "retries",
                    "fulltext_store", "enable_fetcher", "fetch_url_template", "strict_subquery_count", "baseline",
                    "output_dir", "jobs", "resume"});
    RunConfig c;
    c.base_dir = std::move(base_dir);
    read(j, "corpus", c.corpus);
    read(j, "index", c.index);
    read(j, "benchmark", c.benchmark);
    read(j, "backend", c.backend);
    if (j.contains("mode")) {
        c.mode = parse_assess_mode(j.at("mode").get<std::string>());
    }
    read(j, "max_iterations", c.max_iterations);
    read(j, "cutoff", c.cutoff);
    read(j, "max_results_per_request", c.max_results_per_request);
    read(j, "direct_k", c.direct_k);
    read(j, "buffer_cap", c.buffer_cap);
    if (j.contains("policy")) {
        const auto& p = j.at("policy");
        reject_unknown(p, "policy", {"kind", "script", "endpoint", "model", "token_env", "prompts_dir"});
        read(p, "kind", c.policy.kind);
        read(p, "script", c.policy.script);
        read(p, "endpoint", c.policy.endpoint);
        read(p, "model", c.policy.model);
        read(p, "token_env", c.policy.token_env);
        read(p, "prompts_dir", c.policy.prompts_dir);
    }
    if (j.contains("decoding")) {
        const auto& d = j.at("decoding");
        reject_unknown(d, "decoding", {"temperature", "top_p"});
        read(d, "temperature", c.decoding.temperature);
        read(d, "top_p", c.decoding.top_p);
    }
    if (j.contains("retries")) {
        const auto& r = j.at("retries");
        reject_unknown(r, "retries", {"transport", "parse", "initial_backoff_ms", "max_backoff_ms"});
        read(r, "transport", c.retries.transport);
        read(r, "parse", c.retries.parse);
        read(r, "initial_backoff_ms", c.retries.initial_backoff_ms);
        read(r, "max_backoff_ms", c.retries.max_backoff_ms);
    }
    read(j, "fulltext_store", c.fulltext_store);
    read(j, "enable_fetcher", c.enable_fetcher);
    read(j, "fetch_url_template", c.fetch_url_template);
    read(j, "strict_subquery_count", c.strict_subquery_count);
    read(j, "baseline", c.baseline);
    read(j, "output_dir", c.output_dir);
    read(j, "jobs", c.jobs);
    read(j, "resume", c.resume);

    if (c.corpus.empty() || c.index.empty() || c.benchmark.empty()) {
        throw Error("config needs corpus, index and benchmark paths");
    }
    if (c.backend != "sparse" && c.backend != "dense") {
        throw Error("backend must be sparse or dense, got '" + c.backend + "'");
    }
    if (c.policy.kind != "mock" && c.policy.kind != "http") {
        throw Error("policy.kind must be mock or http, got '" + c.policy.kind + "'");
    }
    if (c.policy.kind == "http" && (c.policy.endpoint.empty() || c.policy.model.empty())) {
        throw Error("http policy needs endpoint and model");
    }
    require_at_least(c.max_iterations, 1, "max_iterations");
    require_at_least(c.cutoff, 1, "cutoff");
    require_at_least(c.max_results_per_request, 1, "max_results_per_request");
    require_at_least(c.direct_k, 1, "direct_k");
    require_at_least(c.buffer_cap, 1, "buffer_cap");
    if (c.decoding.temperature < 0.0 || c.decoding.top_p <= 0.0 || c.decoding.top_p > 1.0) {
        throw Error("decoding needs temperature >= 0 and 0 < top_p <= 1");
    }
    if (c.retries.max_backoff_ms < c.retries.initial_backoff_ms) {
        throw Error("retries.max_backoff_ms is below initial_backoff_ms");
    }
    if (c.mode == AssessMode::Adaptive && c.fulltext_store.empty() && !c.enable_fetcher) {
        throw Error("adaptive mode needs fulltext_store or enable_fetcher");
    }
    if (c.fetch_url_template.find("{id}") == std::string::npos) {
        throw Error("fetch_url_template must contain {id}");
    }
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open config " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error("config " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

ordered_json RunConfig::digest_fields() const
{
    ordered_json j;
    j["corpus"] = corpus;
    j["index"] = index;
    j["benchmark"] = benchmark;
    j["backend"] = backend;
    j["mode"] = litsim::to_string(mode);
    j["max_iterations"] = max_iterations;
    j["cutoff"] = cutoff;
    j["max_results_per_request"] = max_results_per_request;
    j["direct_k"] = direct_k;
    j["buffer_cap"] = buffer_cap;
    j["policy"] = {{"kind", policy.kind},     {"script", policy.script},       {"endpoint", policy.endpoint},
                   {"model", policy.model},   {"token_env", policy.token_env}, {"prompts_dir", policy.prompts_dir}};
    j["decoding"] = {{"temperature", decoding.temperature}, {"top_p", decoding.top_p}};
    j["retries"] = {{"transport", retries.transport},
                    {"parse", retries.parse},
                    {"initial_backoff_ms", retries.initial_backoff_ms},
                    {"max_backoff_ms", retries.max_backoff_ms}};
    j["fulltext_store"] = fulltext_store;
    j["enable_fetcher"] = enable_fetcher;
    j["fetch_url_template"] = fetch_url_template;
    j["strict_subquery_count"] = strict_subquery_count;
    j["baseline"] = baseline;
    return j;
}

ordered_json RunConfig::to_json() const
{
    auto j = digest_fields();
    j["output_dir"] = output_dir;
    j["jobs"] = jobs;
    j["resume"] = resume;
    return j;
}

std::string RunConfig::digest() const
{
    return sha256_hex(digest_fields().dump());
}

std::filesystem::path RunConfig::resolve(const std::string& path) const
{
    std::filesystem::path p(path);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

std::size_t RunConfig::worker_count() const
{
    if (jobs > 0) {
        return jobs;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string trajectory_file_name(std::string_view qid)
{
    std::string name;
    for (char c : qid) {
        const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
        name.push_back(safe ? c : '_');
    }
    if (name.empty() || name == "." || name == "..") {
        name = "_" + name;
    }
    return name + ".jsonl";
}

IngestOutcome ingest_file(const std::filesystem::path& input, const std::filesystem::path& output,
                          const DateWindow& window)
{
    std::ifstream in(input, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + input.string());
    }
    auto result = corpus::ingest(in, window);
    if (output.has_parent_path()) {
        std::filesystem::create_directories(output.parent_path());
    }
    result.snapshot.save(output);
    return {std::move(result.report), output};
}

std::string build_index_file(const std::filesystem::path& corpus_file, const std::filesystem::path& output,
                             const IndexOptions& options)
{
    const auto snapshot = corpus::CorpusSnapshot::load(corpus_file);
    if (output.has_parent_path()) {
        std::filesystem::create_directories(output.parent_path());
    }
    if (options.kind == "sparse") {
        const auto index = retrieval::build_sparse_index(snapshot, options.bm25);
        index.save(output);
        return index.digest();
    }
    if (options.kind == "dense") {
        const retrieval::HashEmbedder embedder(options.dimension, options.seed);
        const auto index = retrieval::build_dense_index(snapshot, embedder);
        index.save(output);
        return index.digest();
    }
    throw Error("index kind must be sparse or dense, got '" + options.kind + "'");
}

std::size_t RunOutcome::failed() const
{
    return static_cast<std::size_t>(
        std::count_if(queries.begin(), queries.end(), [](const QueryOutcome& q) { return q.failed; }));
}

RunOutcome run_benchmark(const RunConfig& config, std::ostream& log)
{
    const auto snapshot = corpus::CorpusSnapshot::load(config.resolve(config.corpus));
    const auto bench = corpus::load_benchmark(config.resolve(config.benchmark), snapshot);
    const auto loaded = load_backend(config, snapshot);
    const PolicyFactory factory(config);

    std::optional<assess::Browser> browser;
    if (config.mode == AssessMode::Adaptive) {
        std::shared_ptr<assess::FullTextFetcher> fetcher;
        if (config.enable_fetcher) {
            fetcher = std::make_shared<assess::HttpFullTextFetcher>(config.fetch_url_template);
        }
        browser.emplace(config.fulltext_store.empty() ? std::filesystem::path{} : config.resolve(config.fulltext_store),
                        std::move(fetcher));
    }
    const workflow::Environment env{snapshot, *loaded.backend, browser ? &*browser : nullptr};

    const std::string digest = config.digest();
    workflow::WorkflowConfig wf;
    wf.max_iterations = config.max_iterations;
    wf.mode = config.mode;
    wf.max_results_per_request = config.max_results_per_request;
    wf.direct_k = config.direct_k;
    wf.buffer_cap = config.buffer_cap;
    wf.config_digest = digest;
    wf.config = config.digest_fields();

    const auto out_dir = config.resolve(config.output_dir);
    const auto traj_dir = out_dir / "trajectories";
    std::filesystem::create_directories(traj_dir);

    std::vector<const corpus::BenchmarkQuery*> todo;
    for (const auto& q : bench.queries) {
        if (q.usable()) {
            todo.push_back(&q);
        }
    }

    RunOutcome outcome;
    outcome.queries.resize(todo.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < todo.size(); i = next++) {
            const auto& q = *todo[i];
            auto& result = outcome.queries[i];
            result.qid = q.qid;
            const auto path = traj_dir / trajectory_file_name(q.qid);
            if (config.resume) {
                const auto header = workflow::complete_trajectory_header(path);
                if (header && header->qid == q.qid && header->config_digest == digest) {
                    result.reused = true;
                    std::lock_guard lock(log_mutex);
                    log << "[" << q.qid << "] reused existing trajectory\n";
                    continue;
                }
            }
            try {
                auto handle = factory.make(q.qid);
                const auto traj = config.baseline ? workflow::run_direct_query(q, env, *handle.policy, wf)
                                                  : workflow::run_workflow(q, env, *handle.policy, wf);
                workflow::save_trajectory(path, traj);
                std::lock_guard lock(log_mutex);
                log << "[" << q.qid << "] " << traj.iterations.size() << " iteration(s), "
                    << workflow::to_string(traj.terminated_reason) << ", " << traj.final_selected.size()
                    << " selected\n";
            } catch (const std::exception& e) {
                result.failed = true;
                result.error = e.what();
                std::lock_guard lock(log_mutex);
                log << "[" << q.qid << "] failed: " << e.what() << "\n";
            }
        }
    };
    const auto workers = std::min(config.worker_count(), std::max<std::size_t>(todo.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }

    if (!todo.empty() && outcome.failed() == todo.size()) {
        return outcome;
    }
    outcome.report = build_report(config, traj_dir);
    write_report(out_dir, outcome.report, digest);
    return outcome;
}

metrics::Report build_report(const RunConfig& config, const std::filesystem::path& trajectory_dir)
{
    if (!std::filesystem::is_directory(trajectory_dir)) {
        throw Error("trajectory directory " + trajectory_dir.string() + " does not exist");
    }
    const auto snapshot = corpus::CorpusSnapshot::load(config.resolve(config.corpus));
    const auto bench = corpus::load_benchmark(config.resolve(config.benchmark), snapshot);
    const auto digest = config.digest();

    std::vector<metrics::MetricsRow> rows;
    std::vector<metrics::Exclusion> excluded;
    for (const auto& q : bench.queries) {
        if (!q.usable()) {
            excluded.push_back({q.qid, "no ground-truth paper in the corpus"});
            continue;
        }
        const auto path = trajectory_dir / trajectory_file_name(q.qid);
        if (!std::filesystem::exists(path)) {
            excluded.push_back({q.qid, "no trajectory"});
            continue;
        }
        workflow::Trajectory traj;
        try {
            traj = workflow::load_trajectory(path);
        } catch (const Error& e) {
            excluded.push_back({q.qid, std::string("unreadable trajectory: ") + e.what()});
            continue;
        }
        if (traj.qid != q.qid) {
            excluded.push_back({q.qid, "trajectory belongs to " + traj.qid});
            continue;
        }
        if (traj.config_digest != digest) {
            excluded.push_back({q.qid, "trajectory was produced under another config"});
            continue;
        }
        rows.push_back(metrics::evaluate(traj, truth_of(q), config.cutoff));
    }
    return metrics::aggregate(std::move(rows), std::move(excluded));
}

void write_report(const std::filesystem::path& dir, const metrics::Report& report, const std::string& config_digest)
{
    std::filesystem::create_directories(dir);
    ordered_json j;
    j["config_digest"] = config_digest;
    const auto body = metrics::to_json(report);
    for (const auto& [k, v] : body.items()) {
        j[k] = v;
    }
    write_text(dir / "report.json", j.dump(2) + "\n");
    write_text(dir / "report.txt", "config " + config_digest + "\n" + metrics::render_table(report));
    write_text(dir / "curves.csv", "# config " + config_digest + "\n" + metrics::render_curves_csv(report));
}

}  // namespace litsim::harness
