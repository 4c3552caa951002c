#include "litsim/retrieval.hpp"

#include "litsim/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace litsim::retrieval {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int index_format_version = 1;

struct Scored {
    double score;
    std::uint32_t ordinal;
};

/// Sorts by (score desc, ordinal asc) far enough to cut the requested page.
/// Ordinal order equals paper id order, which gives the id tie-break.
CandidateSet cut_page(std::vector<Scored> scored, const ToolCall& call, const std::vector<std::string>& ids)
{
    auto before = [](const Scored& a, const Scored& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.ordinal < b.ordinal;
    };
    CandidateSet out;
    out.call = call;
    const std::size_t begin = call.page * call.k;
    const std::size_t end = begin + call.k;
    const std::size_t needed = std::min(end, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(needed), scored.end(), before);
    for (std::size_t i = begin; i < needed; ++i) {
        out.hits.push_back({ids[scored[i].ordinal], scored[i].score, i + 1});
    }
    out.exhausted = end >= scored.size();
    return out;
}

CandidateSet empty_result(const ToolCall& call)
{
    CandidateSet out;
    out.call = call;
    out.exhausted = true;
    return out;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

json read_index_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IndexFormatError("cannot open index file " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw IndexFormatError("index file " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "litsim-index") {
        throw IndexFormatError(path.string() + " is not a litsim index file");
    }
    if (j.value("version", 0) != index_format_version) {
        throw IndexFormatError(path.string() + ": unsupported index version");
    }
    return j;
}

void check_envelope(const json& j, const std::filesystem::path& path, std::string_view kind,
                    const corpus::CorpusSnapshot& snapshot)
{
    if (j.value("kind", "") != kind) {
        throw IndexFormatError(path.string() + ": expected a " + std::string(kind) + " index");
    }
    const auto& body = j.at("body");
    if (body.at("snapshot_digest").get<std::string>() != snapshot.digest()) {
        throw IndexFormatError(path.string() + ": index was built for snapshot " +
                               body.at("snapshot_digest").get<std::string>() + ", loaded corpus is " +
                               snapshot.digest());
    }
    if (sha256_hex(body.dump()) != j.at("digest").get<std::string>()) {
        throw IndexFormatError(path.string() + ": index content does not match its digest");
    }
}

void write_index_file(const std::filesystem::path& path, std::string_view kind, const std::string& digest,
                      json body)
{
    ordered_json j;
    j["format"] = "litsim-index";
    j["version"] = index_format_version;
    j["kind"] = kind;
    j["digest"] = digest;
    j["body"] = std::move(body);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write index file " + path.string());
    }
    out << j.dump() << "\n";
}

}  // namespace

void validate(const ToolCall& call, std::size_t max_k)
{
    if (call.k == 0) {
        throw Error("tool call requests zero results");
    }
    if (call.k > max_k) {
        throw Error("tool call requests " + std::to_string(call.k) + " results, limit is " + std::to_string(max_k));
    }
}

ordered_json to_json(const ToolCall& call)
{
    ordered_json j;
    j["query_text"] = call.query_text;
    j["k"] = call.k;
    j["date_constraint"] = call.date_constraint.to_string();
    j["page"] = call.page;
    return j;
}

ToolCall tool_call_from_json(const json& j)
{
    ToolCall c;
    c.query_text = j.at("query_text").get<std::string>();
    c.k = j.at("k").get<std::size_t>();
    c.date_constraint = Date::parse(j.at("date_constraint").get<std::string>());
    c.page = j.at("page").get<std::size_t>();
    return c;
}

ordered_json to_json(const CandidateSet& set)
{
    ordered_json j;
    j["call"] = to_json(set.call);
    ordered_json hits = ordered_json::array();
    for (const auto& h : set.hits) {
        hits.push_back({{"paper_id", h.paper_id}, {"score", h.score}, {"rank", h.rank}});
    }
    j["hits"] = hits;
    j["exhausted"] = set.exhausted;
    return j;
}

CandidateSet candidate_set_from_json(const json& j)
{
    CandidateSet s;
    s.call = tool_call_from_json(j.at("call"));
    for (const auto& h : j.at("hits")) {
        s.hits.push_back({h.at("paper_id").get<std::string>(), h.at("score").get<double>(),
                          h.at("rank").get<std::size_t>()});
    }
    s.exhausted = j.at("exhausted").get<bool>();
    return s;
}

ToolCall continue_page(const CandidateSet& prior)
{
    if (prior.exhausted) {
        throw PaginationError("cannot continue '" + prior.call.query_text + "': ranking exhausted at page " +
                              std::to_string(prior.call.page));
    }
    ToolCall next = prior.call;
    ++next.page;
    return next;
}

std::string index_text(const corpus::Paper& paper)
{
    return paper.title + "\n" + paper.abstract;
}

// ---------------------------------------------------------------- sparse

SparseIndex SparseIndex::build(const corpus::CorpusSnapshot& snapshot, Bm25Params params)
{
    if (snapshot.size() == 0) {
        throw Error("cannot index an empty snapshot");
    }
    SparseIndex index;
    index.params_ = params;
    index.snapshot_digest_ = snapshot.digest();
    const auto papers = snapshot.papers();
    index.doc_lengths_.reserve(papers.size());
    for (std::uint32_t doc = 0; doc < papers.size(); ++doc) {
        const auto tokens = text::tokenize(index_text(papers[doc]));
        std::map<std::string_view, std::uint32_t> tf;
        for (const auto& t : tokens) {
            ++tf[t];
        }
        for (const auto& [term, count] : tf) {
            index.postings_[std::string(term)].push_back({doc, count});
        }
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    }
    index.finalize(snapshot);
    index.digest_ = sha256_hex(index.body_json().dump());
    return index;
}

void SparseIndex::finalize(const corpus::CorpusSnapshot& snapshot)
{
    doc_ids_.clear();
    doc_dates_.clear();
    for (const auto& p : snapshot.papers()) {
        doc_ids_.push_back(p.id);
        doc_dates_.push_back(p.date);
    }
    double total = 0.0;
    for (auto len : doc_lengths_) {
        total += len;
    }
    avg_length_ = doc_lengths_.empty() ? 0.0 : total / static_cast<double>(doc_lengths_.size());
}

json SparseIndex::body_json() const
{
    json body;
    body["snapshot_digest"] = snapshot_digest_;
    body["params"] = {{"k1", params_.k1}, {"b", params_.b}};
    body["doc_lengths"] = doc_lengths_;
    json postings = json::object();
    for (const auto& [term, list] : postings_) {
        json arr = json::array();
        for (const auto& p : list) {
            arr.push_back({p.doc, p.tf});
        }
        postings[term] = std::move(arr);
    }
    body["postings"] = std::move(postings);
    return body;
}

void SparseIndex::save(const std::filesystem::path& path) const
{
    write_index_file(path, "bm25", digest_, body_json());
}

SparseIndex SparseIndex::load(const std::filesystem::path& path, const corpus::CorpusSnapshot& snapshot)
{
    const json j = read_index_file(path);
    check_envelope(j, path, "bm25", snapshot);
    const auto& body = j.at("body");
    SparseIndex index;
    index.snapshot_digest_ = body.at("snapshot_digest").get<std::string>();
    index.params_.k1 = body.at("params").at("k1").get<double>();
    index.params_.b = body.at("params").at("b").get<double>();
    index.doc_lengths_ = body.at("doc_lengths").get<std::vector<std::uint32_t>>();
    if (index.doc_lengths_.size() != snapshot.size()) {
        throw IndexFormatError(path.string() + ": document count does not match snapshot");
    }
    for (const auto& [term, arr] : body.at("postings").items()) {
        auto& list = index.postings_[term];
        list.reserve(arr.size());
        for (const auto& p : arr) {
            list.push_back({p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()});
        }
    }
    index.finalize(snapshot);
    index.digest_ = j.at("digest").get<std::string>();
    return index;
}

std::size_t SparseIndex::document_frequency(std::string_view term) const
{
    auto it = postings_.find(std::string(term));
    return it == postings_.end() ? 0 : it->second.size();
}

CandidateSet SparseIndex::search(const ToolCall& call) const
{
    const auto tokens = text::tokenize(call.query_text);
    if (tokens.empty() || call.k == 0) {
        return empty_result(call);
    }
    const std::set<std::string> terms(tokens.begin(), tokens.end());
    const double n = static_cast<double>(doc_lengths_.size());
    const double avgdl = avg_length_ > 0.0 ? avg_length_ : 1.0;
    const double k1 = params_.k1;
    const double b = params_.b;

    std::vector<double> acc(doc_lengths_.size(), 0.0);
    std::vector<std::uint32_t> touched;
    for (const auto& term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) {
            continue;
        }
        const double df = static_cast<double>(it->second.size());
        const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        for (const auto& p : it->second) {
            if (doc_dates_[p.doc] > call.date_constraint) {
                continue;
            }
            const double tf = p.tf;
            const double dl = doc_lengths_[p.doc];
            if (acc[p.doc] == 0.0) {
                touched.push_back(p.doc);
            }
            acc[p.doc] += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
    }
    std::vector<Scored> scored;
    scored.reserve(touched.size());
    for (auto doc : touched) {
        scored.push_back({acc[doc], doc});
    }
    return cut_page(std::move(scored), call, doc_ids_);
}

// ---------------------------------------------------------------- dense

HashEmbedder::HashEmbedder(std::size_t dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed)
{
    if (dimension_ == 0) {
        throw Error("embedder dimension must be positive");
    }
}

std::vector<double> HashEmbedder::embed(std::string_view text) const
{
    std::vector<double> v(dimension_, 0.0);
    for (const auto& token : text::tokenize(text)) {
        const std::uint64_t h = fnv1a(token) ^ seed_;
        for (std::size_t j = 0; j < dimension_; ++j) {
            const std::uint64_t x = splitmix64(h + 0x632BE59BD9B4E019ULL * (j + 1));
            v[j] += static_cast<double>(x >> 11) * 0x1.0p-52 - 1.0;
        }
    }
    return v;
}

json HashEmbedder::descriptor() const
{
    return {{"kind", "hash"}, {"dimension", dimension_}, {"seed", seed_}};
}

std::unique_ptr<Embedder> make_embedder(const json& descriptor)
{
    if (descriptor.value("kind", "") == "hash") {
        return std::make_unique<HashEmbedder>(descriptor.at("dimension").get<std::size_t>(),
                                              descriptor.value("seed", std::uint64_t{0}));
    }
    throw Error("unknown embedder descriptor " + descriptor.dump());
}

namespace {

void normalize(std::span<double> v)
{
    double norm2 = 0.0;
    for (double x : v) {
        norm2 += x * x;
    }
    if (norm2 == 0.0) {
        return;
    }
    const double norm = std::sqrt(norm2);
    for (double& x : v) {
        x /= norm;
    }
}

}  // namespace

DenseIndex DenseIndex::build(const corpus::CorpusSnapshot& snapshot, const Embedder& embedder)
{
    if (snapshot.size() == 0) {
        throw Error("cannot index an empty snapshot");
    }
    DenseIndex index;
    index.snapshot_digest_ = snapshot.digest();
    index.embedder_ = embedder.descriptor();
    index.dimension_ = embedder.dimension();
    index.vectors_.reserve(snapshot.size() * index.dimension_);
    for (const auto& p : snapshot.papers()) {
        auto v = embedder.embed(index_text(p));
        if (v.size() != index.dimension_) {
            throw Error("embedder returned " + std::to_string(v.size()) + " components for " + p.id +
                        ", declared dimension is " + std::to_string(index.dimension_));
        }
        normalize(v);
        index.vectors_.insert(index.vectors_.end(), v.begin(), v.end());
        index.doc_ids_.push_back(p.id);
        index.doc_dates_.push_back(p.date);
    }
    index.digest_ = sha256_hex(index.body_json().dump());
    return index;
}

json DenseIndex::body_json() const
{
    json body;
    body["snapshot_digest"] = snapshot_digest_;
    body["embedder"] = embedder_;
    body["dimension"] = dimension_;
    body["vectors"] = vectors_;
    return body;
}

void DenseIndex::save(const std::filesystem::path& path) const
{
    write_index_file(path, "dense", digest_, body_json());
}

DenseIndex DenseIndex::load(const std::filesystem::path& path, const corpus::CorpusSnapshot& snapshot)
{
    const json j = read_index_file(path);
    check_envelope(j, path, "dense", snapshot);
    const auto& body = j.at("body");
    DenseIndex index;
    index.snapshot_digest_ = body.at("snapshot_digest").get<std::string>();
    index.embedder_ = body.at("embedder");
    index.dimension_ = body.at("dimension").get<std::size_t>();
    index.vectors_ = body.at("vectors").get<std::vector<double>>();
    if (index.vectors_.size() != snapshot.size() * index.dimension_) {
        throw IndexFormatError(path.string() + ": vector block does not match snapshot size");
    }
    for (const auto& p : snapshot.papers()) {
        index.doc_ids_.push_back(p.id);
        index.doc_dates_.push_back(p.date);
    }
    index.digest_ = j.at("digest").get<std::string>();
    return index;
}

std::span<const double> DenseIndex::vector(std::size_t ordinal) const
{
    return std::span<const double>(vectors_).subspan(ordinal * dimension_, dimension_);
}

CandidateSet DenseIndex::search(const ToolCall& call, const Embedder& embedder) const
{
    if (embedder.dimension() != dimension_) {
        throw Error("query embedder dimension " + std::to_string(embedder.dimension()) +
                    " does not match index dimension " + std::to_string(dimension_));
    }
    if (embedder.descriptor() != embedder_) {
        throw Error("query embedder " + embedder.descriptor().dump() + " differs from index embedder " +
                    embedder_.dump());
    }
    if (text::tokenize(call.query_text).empty() || call.k == 0) {
        return empty_result(call);
    }
    auto q = embedder.embed(call.query_text);
    if (q.size() != dimension_) {
        throw Error("embedder returned a vector of the wrong dimension");
    }
    normalize(q);
    std::vector<Scored> scored;
    scored.reserve(doc_ids_.size());
    for (std::uint32_t doc = 0; doc < doc_ids_.size(); ++doc) {
        if (doc_dates_[doc] > call.date_constraint) {
            continue;
        }
        const auto v = vector(doc);
        double dot = 0.0;
        for (std::size_t j = 0; j < dimension_; ++j) {
            dot += q[j] * v[j];
        }
        scored.push_back({dot, doc});
    }
    return cut_page(std::move(scored), call, doc_ids_);
}

// ---------------------------------------------------------------- free functions

SparseIndex build_sparse_index(const corpus::CorpusSnapshot& snapshot, Bm25Params params)
{
    return SparseIndex::build(snapshot, params);
}

CandidateSet search_sparse(const SparseIndex& index, const ToolCall& call)
{
    return index.search(call);
}

DenseIndex build_dense_index(const corpus::CorpusSnapshot& snapshot, const Embedder& embedder)
{
    return DenseIndex::build(snapshot, embedder);
}

CandidateSet search_dense(const DenseIndex& index, const ToolCall& call, const Embedder& embedder)
{
    return index.search(call, embedder);
}

std::string index_kind(const std::filesystem::path& path)
{
    return read_index_file(path).value("kind", "");
}

}  // namespace litsim::retrieval
