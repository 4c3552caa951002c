#include "litsim/corpus.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace litsim;
using namespace litsim::corpus;

namespace {

IngestResult ingest_text(const std::string& text, const DateWindow& window = {})
{
    std::istringstream in(text);
    return ingest(in, window);
}

std::string record(const std::string& id, const std::string& abstract, const std::string& date,
                   const std::string& title = "t")
{
    nlohmann::json j{{"id", id}, {"title", title}, {"abstract", abstract}, {"date", date}};
    return j.dump() + "\n";
}

}  // namespace

TEST_CASE("canonical ids strip prefixes and versions")
{
    CHECK(canonical_id("2101.00001") == "2101.00001");
    CHECK(canonical_id("arXiv:2101.00001v3") == "2101.00001");
    CHECK(canonical_id(" 0704.0001 ") == "0704.0001");
    CHECK(canonical_id("hep-th/9901001v2") == "hep-th/9901001");
    CHECK(canonical_id("math.AG/0501001") == "math.AG/0501001");
    CHECK(canonical_id("cs/0501010") == "cs/0501010");
    CHECK(canonical_id("") == std::nullopt);
    CHECK(canonical_id("21.0001") == std::nullopt);
    CHECK(canonical_id("2101.001") == std::nullopt);
    CHECK(canonical_id("not an id") == std::nullopt);
}

TEST_CASE("ingest of the fixture keeps all ten papers in id order")
{
    const auto snap = testing::fixture_snapshot();
    REQUIRE(snap.size() == 10);
    CHECK(snap.papers().front().id == "2101.00001");
    CHECK(snap.papers().back().id == "cs/0501010");
    CHECK(snap.find("2101.00002") != nullptr);
    CHECK(snap.find("2101.00002v2") == nullptr);
    CHECK(snap.ordinal("2102.00004") == 3);
}

TEST_CASE("ingest is deterministic regardless of record order")
{
    const std::string a = record("2101.00001", "alpha", "2021-01-01") + record("2101.00002", "beta", "2021-01-02");
    const std::string b = record("2101.00002", "beta", "2021-01-02") + record("2101.00001", "alpha", "2021-01-01");
    CHECK(ingest_text(a).report.digest == ingest_text(b).report.digest);
    CHECK(ingest_text(a).snapshot.serialize() == ingest_text(b).snapshot.serialize());
}

TEST_CASE("exclusion rules are counted per reason")
{
    const std::string text = record("2101.00001", "kept", "2021-01-01") + record("garbage id", "x", "2021-01-01") +
                             record("2101.00002", "   ", "2021-01-01") + record("2101.00003", "x", "2021-02-30") +
                             record("2101.00004", "x", "1989-12-31") + record("2101.00005", "x", "2025-01-01") +
                             "{not json\n" + "[1,2]\n" + "\n";
    const auto r = ingest_text(text);
    CHECK(r.snapshot.size() == 1);
    CHECK(r.report.excluded_count(Exclusion::InvalidId) == 1);
    CHECK(r.report.excluded_count(Exclusion::EmptyAbstract) == 1);
    CHECK(r.report.excluded_count(Exclusion::InvalidDate) == 1);
    CHECK(r.report.excluded_count(Exclusion::DateOutOfWindow) == 2);
    REQUIRE(r.report.malformed.size() == 2);
    CHECK(r.report.malformed[0].line == 7);
    CHECK(r.report.to_json()["excluded"]["malformed"] == 2);
}

TEST_CASE("duplicates merge to the longest abstract, counted in code points")
{
    // 4 two-byte code points (8 bytes) lose to 5 ASCII characters.
    const std::string text = record("2101.00001v1", "\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9", "2021-01-01") +
                             record("arXiv:2101.00001v2", "abcde", "2021-01-01");
    const auto r = ingest_text(text);
    REQUIRE(r.snapshot.size() == 1);
    CHECK(r.snapshot.papers()[0].abstract == "abcde");
    CHECK(r.report.duplicates_merged == 1);
}

TEST_CASE("equal-length duplicates resolve by raw-line hash, independent of order")
{
    const auto l1 = record("2101.00001", "aaaa", "2021-01-01", "first");
    const auto l2 = record("2101.00001", "bbbb", "2021-01-01", "second");
    const auto x = ingest_text(l1 + l2).snapshot.papers()[0];
    const auto y = ingest_text(l2 + l1).snapshot.papers()[0];
    CHECK(x == y);
    const auto trimmed = [](std::string s) { return s.substr(0, s.size() - 1); };
    const auto expected = sha256_hex(trimmed(l1)) < sha256_hex(trimmed(l2)) ? "first" : "second";
    CHECK(x.title == expected);
}

TEST_CASE("ingest with nothing valid is a hard error")
{
    CHECK_THROWS_AS(ingest_text("{bad\n" + record("bad", "x", "2021-01-01")), Error);
    CHECK_THROWS_AS(ingest_text(""), Error);
}

TEST_CASE("custom windows apply to ingest and are recorded in the manifest")
{
    const DateWindow w{Date(2021, 1, 1), Date(2021, 1, 31)};
    const auto r = ingest_text(record("2101.00001", "a", "2021-01-15") + record("2102.00001", "b", "2021-02-01"), w);
    CHECK(r.snapshot.size() == 1);
    CHECK(r.snapshot.manifest().window.last == Date(2021, 1, 31));
    CHECK(r.snapshot.digest() != ingest_text(record("2101.00001", "a", "2021-01-15")).snapshot.digest());
}

TEST_CASE("snapshots round-trip through save and load, and tampering is detected")
{
    testing::TempDir dir("corpus");
    const auto snap = testing::fixture_snapshot();
    const auto file = dir / "corpus.jsonl";
    snap.save(file);
    const auto back = CorpusSnapshot::load(file);
    CHECK(back.digest() == snap.digest());
    CHECK(back.serialize() == snap.serialize());

    auto text = testing::read_file(file);
    text.replace(text.find("Contrastive"), 11, "Contrasting");
    std::ofstream(file, std::ios::binary | std::ios::trunc) << text;
    CHECK_THROWS_AS(CorpusSnapshot::load(file), Error);

    std::filesystem::remove(manifest_path(file));
    CHECK_NOTHROW(CorpusSnapshot::load(file));
}

TEST_CASE("paper JSON is strict on missing fields")
{
    const auto p = testing::fixture_snapshot().papers()[0];
    CHECK(paper_from_json(nlohmann::json::parse(to_json(p).dump())) == p);
    CHECK_THROWS(paper_from_json(nlohmann::json{{"id", "2101.00001"}}));
}

TEST_CASE("benchmark loading resolves ids, assigns dates and reports unresolved")
{
    const auto snap = testing::fixture_snapshot();
    const auto bench = load_benchmark(testing::fixture_dir() / "benchmark.jsonl", snap);
    REQUIRE(bench.queries.size() == 3);
    const auto& q2 = bench.queries[1];
    CHECK(q2.resolved_ground_truth == std::vector<std::string>{"2102.00004", "2102.00005"});
    CHECK(q2.source == QuerySource::RealScholar);
    const auto& q3 = bench.queries[2];
    CHECK(q3.ground_truth.size() == 3);
    CHECK(q3.resolved_ground_truth.size() == 2);
    CHECK(q3.date_assigned);
    CHECK(q3.date_constraint == Date(2021, 3, 15));
    REQUIRE(bench.unresolved.size() == 1);
    CHECK(bench.unresolved[0].id == "1901.99999");

    const auto stats = benchmark_stats(bench.queries);
    CHECK(stats.queries == 3);
    CHECK(stats.usable == 3);
    CHECK(stats.per_source.at(QuerySource::LitSearch) == 1);
}

TEST_CASE("benchmark queries with no resolvable truth are unusable, duplicates are errors")
{
    const auto snap = testing::fixture_snapshot();
    std::istringstream in(R"({"qid": "x", "text": "t", "ground_truth": ["1901.99999"]})"
                          "\n");
    const auto bench = load_benchmark(in, snap);
    CHECK_FALSE(bench.queries[0].usable());
    CHECK(bench.queries[0].date_constraint == snap.manifest().window.last);

    std::istringstream dup(R"({"qid": "x", "text": "t", "ground_truth": []})"
                           "\n"
                           R"({"qid": "x", "text": "u", "ground_truth": []})"
                           "\n");
    CHECK_THROWS_AS(load_benchmark(dup, snap), Error);
}
