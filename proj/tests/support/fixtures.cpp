#include "fixtures.hpp"

#include <fmt/format.h>

#include <fstream>
#include <random>
#include <sstream>

namespace litsim::testing {

std::filesystem::path fixture_dir()
{
    return LITSIM_FIXTURE_DIR;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TempDir::TempDir(std::string_view tag)
{
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / fmt::format("litsim-{}-{:016x}", tag, rng());
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir()
{
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

corpus::CorpusSnapshot fixture_snapshot()
{
    std::ifstream in(fixture_dir() / "papers.jsonl");
    return corpus::ingest(in).snapshot;
}

void stage_fixture_run(const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    const auto snapshot = fixture_snapshot();
    snapshot.save(dir / "corpus.jsonl");
    retrieval::build_sparse_index(snapshot).save(dir / "bm25.json");
    for (const char* name : {"benchmark.jsonl", "mock_script.json", "run_config.json"}) {
        std::filesystem::copy_file(fixture_dir() / name, dir / name,
                                   std::filesystem::copy_options::overwrite_existing);
    }
}

SyntheticCorpus synthetic_corpus(std::size_t papers, std::size_t queries, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const std::size_t vocab = 400;
    std::vector<std::string> words;
    for (std::size_t i = 0; i < vocab; ++i) {
        words.push_back(fmt::format("w{}{}", static_cast<char>('a' + i % 26), i));
    }
    std::vector<double> weights;
    for (std::size_t i = 0; i < vocab; ++i) {
        weights.push_back(1.0 / static_cast<double>(i + 1));
    }
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::uniform_int_distribution<int> year(1995, 2024);
    std::uniform_int_distribution<unsigned> month(1, 12);
    std::uniform_int_distribution<unsigned> day(1, 28);
    auto phrase = [&](std::size_t lo, std::size_t hi) {
        std::uniform_int_distribution<std::size_t> len(lo, hi);
        std::string out;
        for (std::size_t n = len(rng); n > 0; --n) {
            out += words[pick(rng)];
            out += n > 1 ? " " : "";
        }
        return out;
    };

    SyntheticCorpus c;
    for (std::size_t i = 0; i < papers; ++i) {
        corpus::Paper p;
        p.id = fmt::format("{:04d}.{:05d}", 2001 + i / 90000, i % 90000 + 1);
        p.title = phrase(3, 10);
        p.abstract = phrase(20, 80);
        p.date = Date(year(rng), month(rng), day(rng));
        c.papers.push_back(std::move(p));
    }
    for (std::size_t i = 0; i < queries; ++i) {
        retrieval::ToolCall q;
        q.query_text = phrase(1, 5);
        q.k = 10;
        q.date_constraint = Date(year(rng), month(rng), day(rng));
        c.queries.push_back(std::move(q));
    }
    return c;
}

corpus::Paper make_paper(std::string id, std::string text, std::string date)
{
    corpus::Paper p;
    p.id = std::move(id);
    p.title = text;
    p.abstract = std::move(text);
    p.date = Date::parse(date);
    return p;
}

}  // namespace litsim::testing
