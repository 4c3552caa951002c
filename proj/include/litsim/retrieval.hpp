#pragma once

#include "litsim/common.hpp"
#include "litsim/corpus.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace litsim::retrieval {

struct ToolCall {
    std::string query_text;
    std::size_t k = 10;
    Date date_constraint;
    std::size_t page = 0;

    friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

/// Throws Error unless 1 <= k <= max_k.
void validate(const ToolCall& call, std::size_t max_k);

struct ScoredHit {
    std::string paper_id;
    double score = 0.0;
    /// 1-based rank in the full (unpaginated) filtered ranking.
    std::size_t rank = 0;

    friend bool operator==(const ScoredHit&, const ScoredHit&) = default;
};

struct CandidateSet {
    ToolCall call;
    std::vector<ScoredHit> hits;
    bool exhausted = true;

    friend bool operator==(const CandidateSet&, const CandidateSet&) = default;
};

nlohmann::ordered_json to_json(const ToolCall& call);
ToolCall tool_call_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const CandidateSet& set);
CandidateSet candidate_set_from_json(const nlohmann::json& j);

class PaginationError : public Error {
  public:
    using Error::Error;
};

/// Next page of the same request. Throws PaginationError on an exhausted set.
ToolCall continue_page(const CandidateSet& prior);

/// Okapi BM25 with idf = ln((N - df + 0.5) / (df + 0.5) + 1).
struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

/// Text fed to both indexes for one paper.
std::string index_text(const corpus::Paper& paper);

class IndexFormatError : public Error {
  public:
    using Error::Error;
};

class SparseIndex {
  public:
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
    };

    static SparseIndex build(const corpus::CorpusSnapshot& snapshot, Bm25Params params = {});
    static SparseIndex load(const std::filesystem::path& path, const corpus::CorpusSnapshot& snapshot);
    void save(const std::filesystem::path& path) const;

    /// Date filter first, then rank the positively scored documents by
    /// (score desc, paper id asc) and cut the requested page.
    CandidateSet search(const ToolCall& call) const;

    std::size_t document_count() const noexcept { return doc_lengths_.size(); }
    std::size_t document_frequency(std::string_view term) const;
    std::size_t vocabulary_size() const noexcept { return postings_.size(); }
    double average_length() const noexcept { return avg_length_; }
    const Bm25Params& params() const noexcept { return params_; }
    const std::string& digest() const noexcept { return digest_; }
    const std::string& snapshot_digest() const noexcept { return snapshot_digest_; }

  private:
    nlohmann::json body_json() const;
    void finalize(const corpus::CorpusSnapshot& snapshot);

    Bm25Params params_;
    std::string snapshot_digest_;
    std::vector<std::string> doc_ids_;
    std::vector<Date> doc_dates_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_length_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::string digest_;
};

/// Pure function text -> fixed-length vector.
class Embedder {
  public:
    virtual ~Embedder() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> embed(std::string_view text) const = 0;
    /// Identity of the embedder, stored with a dense index and checked on use.
    virtual nlohmann::json descriptor() const = 0;
};

/// Deterministic toy embedder: every token hashes to a pseudo-random
/// direction in [-1, 1)^dim; the document vector is their sum.
class HashEmbedder final : public Embedder {
  public:
    explicit HashEmbedder(std::size_t dimension = 64, std::uint64_t seed = 0);

    std::size_t dimension() const override { return dimension_; }
    std::vector<double> embed(std::string_view text) const override;
    nlohmann::json descriptor() const override;

  private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

std::unique_ptr<Embedder> make_embedder(const nlohmann::json& descriptor);

class DenseIndex {
  public:
    static DenseIndex build(const corpus::CorpusSnapshot& snapshot, const Embedder& embedder);
    static DenseIndex load(const std::filesystem::path& path, const corpus::CorpusSnapshot& snapshot);
    void save(const std::filesystem::path& path) const;

    /// Exhaustive cosine scan over date-eligible documents; same ordering
    /// and pagination rules as SparseIndex::search.
    CandidateSet search(const ToolCall& call, const Embedder& embedder) const;

    std::size_t document_count() const noexcept { return doc_ids_.size(); }
    std::size_t dimension() const noexcept { return dimension_; }
    /// Unit-normalized stored vector (all zeros for empty text).
    std::span<const double> vector(std::size_t ordinal) const;
    const nlohmann::json& embedder_descriptor() const noexcept { return embedder_; }
    const std::string& digest() const noexcept { return digest_; }
    const std::string& snapshot_digest() const noexcept { return snapshot_digest_; }

  private:
    nlohmann::json body_json() const;

    std::string snapshot_digest_;
    nlohmann::json embedder_;
    std::size_t dimension_ = 0;
    std::vector<std::string> doc_ids_;
    std::vector<Date> doc_dates_;
    std::vector<double> vectors_;
    std::string digest_;
};

SparseIndex build_sparse_index(const corpus::CorpusSnapshot& snapshot, Bm25Params params = {});
CandidateSet search_sparse(const SparseIndex& index, const ToolCall& call);
DenseIndex build_dense_index(const corpus::CorpusSnapshot& snapshot, const Embedder& embedder);
CandidateSet search_dense(const DenseIndex& index, const ToolCall& call, const Embedder& embedder);

/// Reads only the header of an index file: "bm25" or "dense".
std::string index_kind(const std::filesystem::path& path);

/// Stateless executor the workflow talks to.
class Backend {
  public:
    virtual ~Backend() = default;
    virtual CandidateSet execute(const ToolCall& call) const = 0;
    virtual std::string name() const = 0;
};

class SparseBackend final : public Backend {
  public:
    explicit SparseBackend(std::shared_ptr<const SparseIndex> index) : index_(std::move(index)) {}
    CandidateSet execute(const ToolCall& call) const override { return index_->search(call); }
    std::string name() const override { return "sparse"; }

  private:
    std::shared_ptr<const SparseIndex> index_;
};

class DenseBackend final : public Backend {
  public:
    DenseBackend(std::shared_ptr<const DenseIndex> index, std::shared_ptr<const Embedder> embedder)
        : index_(std::move(index)), embedder_(std::move(embedder))
    {}
    CandidateSet execute(const ToolCall& call) const override { return index_->search(call, *embedder_); }
    std::string name() const override { return "dense"; }

  private:
    std::shared_ptr<const DenseIndex> index_;
    std::shared_ptr<const Embedder> embedder_;
};

}  // namespace litsim::retrieval
