#pragma once

#include "litsim/common.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace litsim::corpus {

struct Paper {
    std::string id;
    std::string title;
    std::string abstract;
    Date date;
    std::vector<std::string> authors;
    std::vector<std::string> categories;

    friend bool operator==(const Paper&, const Paper&) = default;
};

/// Field order is fixed so serialized lines are canonical.
nlohmann::ordered_json to_json(const Paper& paper);

/// Strict inverse of to_json; throws Error on missing or mistyped fields.
Paper paper_from_json(const nlohmann::json& j);

/// Canonical identifier: trims, drops an "arXiv:" prefix and a trailing
/// version suffix (`v<digits>`). Returns nullopt for anything that is not a
/// new-style (`YYMM.NNNNN`) or old-style (`archive/NNNNNNN`) identifier.
std::optional<std::string> canonical_id(std::string_view raw);

struct Manifest {
    static constexpr int format_version = 1;

    std::string digest;
    std::size_t paper_count = 0;
    DateWindow window;

    nlohmann::ordered_json to_json() const;
};

/// Immutable, id-ordered set of papers. Shared read-only across workers.
class CorpusSnapshot {
  public:
    /// Papers must already be unique by id and satisfy the window.
    static CorpusSnapshot build(std::vector<Paper> papers, DateWindow window);

    /// Reads a corpus file and its optional `.manifest.json` sidecar.
    /// Throws when the recomputed digest disagrees with the sidecar.
    static CorpusSnapshot load(const std::filesystem::path& corpus_file);

    /// Writes the corpus JSONL and the manifest sidecar.
    void save(const std::filesystem::path& corpus_file) const;

    std::span<const Paper> papers() const noexcept { return papers_; }
    std::size_t size() const noexcept { return papers_.size(); }

    const Paper* find(std::string_view id) const;
    /// Position in papers(); ordinal order equals ascending id order.
    std::optional<std::size_t> ordinal(std::string_view id) const;

    const Manifest& manifest() const noexcept { return manifest_; }
    const std::string& digest() const noexcept { return manifest_.digest; }

    /// Canonical JSONL body, one paper per line in id order.
    std::string serialize() const;

  private:
    std::vector<Paper> papers_;
    std::unordered_map<std::string, std::size_t> by_id_;
    Manifest manifest_;
};

std::filesystem::path manifest_path(const std::filesystem::path& corpus_file);

enum class Exclusion { InvalidId, EmptyAbstract, InvalidDate, DateOutOfWindow };

std::string_view to_string(Exclusion reason);

struct MalformedLine {
    std::size_t line = 0;
    std::string message;
};

struct IngestReport {
    std::size_t lines_read = 0;
    std::size_t records_accepted = 0;
    std::size_t duplicates_merged = 0;
    std::map<Exclusion, std::size_t> excluded;
    std::vector<MalformedLine> malformed;
    std::size_t paper_count = 0;
    std::string digest;

    std::size_t excluded_count(Exclusion reason) const;
    nlohmann::ordered_json to_json() const;
};

struct IngestResult {
    CorpusSnapshot snapshot;
    IngestReport report;
};

/// Parses raw line-delimited paper records, applies the exclusion rules and
/// merges duplicates (longest abstract wins; ties go to the lexicographically
/// smaller SHA-256 of the raw line). Malformed lines are reported and
/// skipped. Throws Error when no valid paper remains.
IngestResult ingest(std::istream& records, const DateWindow& window = {});

enum class QuerySource { AutoScholar, RealScholar, LitSearch, Other };

std::string_view to_string(QuerySource source);
QuerySource parse_source(std::string_view text);

struct BenchmarkQuery {
    std::string qid;
    std::string text;
    Date date_constraint;
    /// True when date_constraint was derived from the ground truth.
    bool date_assigned = false;
    /// Canonicalized ids as listed in the file (deduplicated, input order).
    std::vector<std::string> ground_truth;
    /// Subset of ground_truth present in the snapshot; metrics use this.
    std::vector<std::string> resolved_ground_truth;
    QuerySource source = QuerySource::Other;

    bool usable() const noexcept { return !resolved_ground_truth.empty(); }
};

struct UnresolvedId {
    std::string qid;
    std::string id;
};

struct Benchmark {
    std::vector<BenchmarkQuery> queries;
    std::vector<UnresolvedId> unresolved;
};

Benchmark load_benchmark(std::istream& in, const CorpusSnapshot& snapshot);
Benchmark load_benchmark(const std::filesystem::path& path, const CorpusSnapshot& snapshot);

struct BenchmarkStats {
    std::size_t queries = 0;
    std::size_t usable = 0;
    double avg_ground_truth = 0.0;
    /// Mean query length in characters (code points).
    double avg_query_length = 0.0;
    std::map<QuerySource, std::size_t> per_source;

    nlohmann::ordered_json to_json() const;
};

BenchmarkStats benchmark_stats(std::span<const BenchmarkQuery> queries);

}  // namespace litsim::corpus
