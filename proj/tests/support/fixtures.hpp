#pragma once

#include "litsim/corpus.hpp"
#include "litsim/retrieval.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace litsim::testing {

std::filesystem::path fixture_dir();
std::string read_file(const std::filesystem::path& path);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(std::string_view tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

/// The ten-paper corpus under tests/fixtures, ingested in memory.
corpus::CorpusSnapshot fixture_snapshot();

/// Copies the fixture corpus, benchmark, mock script and run config into
/// `dir` and builds the BM25 index there.
void stage_fixture_run(const std::filesystem::path& dir);

struct SyntheticCorpus {
    std::vector<corpus::Paper> papers;
    std::vector<retrieval::ToolCall> queries;
};

/// Seeded random corpus over a Zipf-like vocabulary, with random queries
/// and date constraints.
SyntheticCorpus synthetic_corpus(std::size_t papers, std::size_t queries, std::uint64_t seed);

/// Paper with the given id, title words and date; abstract is the title.
corpus::Paper make_paper(std::string id, std::string text, std::string date);

}  // namespace litsim::testing
