#include "litsim/harness.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <sstream>

using namespace litsim;
using namespace litsim::harness;
using nlohmann::json;

namespace {

json base_config()
{
    return json::parse(testing::read_file(testing::fixture_dir() / "run_config.json"));
}

const metrics::MetricsRow& row(const metrics::Report& r, std::string_view qid)
{
    for (const auto& x : r.rows) {
        if (x.qid == qid) {
            return x;
        }
    }
    throw Error("no row " + std::string(qid));
}

}  // namespace

TEST_CASE("config validation")
{
    CHECK_NOTHROW(RunConfig::from_json(base_config()));
    auto j = base_config();
    j["typo_field"] = 1;
    CHECK_THROWS_AS(RunConfig::from_json(j), Error);
    j = base_config();
    j["policy"]["scirpt"] = "x";
    CHECK_THROWS_AS(RunConfig::from_json(j), Error);
    j = base_config();
    j["backend"] = "hybrid";
    CHECK_THROWS_AS(RunConfig::from_json(j), Error);
    j = base_config();
    j.erase("corpus");
    CHECK_THROWS_AS(RunConfig::from_json(j), Error);
    j = base_config();
    j["mode"] = "skim";
    CHECK_THROWS_AS(RunConfig::from_json(j), Error);
}

TEST_CASE("digest covers result-affecting fields only")
{
    const auto a = RunConfig::from_json(base_config(), "/tmp/a");
    auto j = base_config();
    j["output_dir"] = "elsewhere";
    j["jobs"] = 7;
    j["resume"] = true;
    CHECK(RunConfig::from_json(j, "/tmp/a").digest() == a.digest());
    j["max_iterations"] = 4;
    CHECK(RunConfig::from_json(j, "/tmp/a").digest() != a.digest());
    CHECK(a.digest().size() == 64);
    CHECK(a.resolve("corpus.jsonl") == std::filesystem::path("/tmp/a/corpus.jsonl"));
    CHECK(a.resolve("/abs/x") == std::filesystem::path("/abs/x"));
}

TEST_CASE("trajectory file names are filesystem safe")
{
    CHECK(trajectory_file_name("q1") == "q1.jsonl");
    const auto odd = trajectory_file_name("a/b c");
    CHECK(odd.find('/') == std::string::npos);
    CHECK(odd.find(' ') == std::string::npos);
}

TEST_CASE("benchmark run, resume and report agree")
{
    testing::TempDir dir("run");
    testing::stage_fixture_run(dir.path());
    auto config = RunConfig::load(dir / "run_config.json");
    std::ostringstream log;
    const auto first = run_benchmark(config, log);
    CHECK(first.failed() == 0);
    CHECK(first.report.queries == 3);
    const auto& q1 = row(first.report, "q1");
    CHECK(q1.final.selection.recall == doctest::Approx(1.0));
    CHECK(q1.per_iteration.size() == 2);
    CHECK(q1.per_iteration[0].selection.recall == doctest::Approx(0.5));
    CHECK(q1.terminated_reason == workflow::TerminationReason::IsComplete);

    const auto out = dir / "out";
    for (const char* f : {"report.json", "report.txt", "curves.csv", "trajectories/q1.jsonl"}) {
        CHECK(std::filesystem::exists(out / f));
    }
    const auto report_before = testing::read_file(out / "report.json");
    const auto traj_before = testing::read_file(out / "trajectories" / "q1.jsonl");
    CHECK(testing::read_file(out / "report.txt").rfind("config " + config.digest(), 0) == 0);

    config.resume = true;
    const auto resumed = run_benchmark(config, log);
    for (const auto& q : resumed.queries) {
        CHECK(q.reused);
    }
    CHECK(testing::read_file(out / "report.json") == report_before);
    CHECK(testing::read_file(out / "trajectories" / "q1.jsonl") == traj_before);

    const auto rebuilt = build_report(config, out / "trajectories");
    CHECK(metrics::to_json(rebuilt) == metrics::to_json(first.report));

    auto other = config;
    other.max_iterations = 3;
    // Every trajectory is excluded, which leaves nothing to aggregate.
    CHECK_THROWS_AS(build_report(other, out / "trajectories"), Error);
}

TEST_CASE("direct baseline trails the iterative run on q1")
{
    testing::TempDir dir("baseline");
    testing::stage_fixture_run(dir.path());
    auto config = RunConfig::load(dir / "run_config.json");
    config.baseline = true;
    config.output_dir = "direct";
    std::ostringstream log;
    const auto direct = run_benchmark(config, log);
    CHECK(row(direct.report, "q1").final.retrieval.recall == doctest::Approx(0.5));
    CHECK(std::filesystem::exists(dir / "direct" / "trajectories" / "q1.jsonl"));
}
