#include "litsim/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <regex>
#include <set>
#include <sstream>

namespace litsim::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::regex& new_style_id()
{
    static const std::regex re{R"(^\d{4}\.\d{4,5}$)"};
    return re;
}

const std::regex& old_style_id()
{
    static const std::regex re{R"(^[a-z]+(-[a-z]+)*(\.[A-Za-z]{2})?/\d{7}$)"};
    return re;
}

std::vector<std::string> string_list(const json& j, const char* field)
{
    std::vector<std::string> out;
    if (!j.contains(field) || j.at(field).is_null()) {
        return out;
    }
    const auto& arr = j.at(field);
    if (!arr.is_array()) {
        throw Error(std::string("field '") + field + "' must be an array of strings");
    }
    for (const auto& v : arr) {
        if (!v.is_string()) {
            throw Error(std::string("field '") + field + "' must be an array of strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::string optional_string(const json& j, const char* field)
{
    if (!j.contains(field) || j.at(field).is_null()) {
        return {};
    }
    if (!j.at(field).is_string()) {
        throw Error(std::string("field '") + field + "' must be a string");
    }
    return j.at(field).get<std::string>();
}

struct Candidate {
    Paper paper;
    std::size_t abstract_chars = 0;
    std::string raw_digest;
};

bool better(const Candidate& a, const Candidate& b)
{
    if (a.abstract_chars != b.abstract_chars) {
        return a.abstract_chars > b.abstract_chars;
    }
    return a.raw_digest < b.raw_digest;
}

}  // namespace

ordered_json to_json(const Paper& paper)
{
    ordered_json j;
    j["id"] = paper.id;
    j["title"] = paper.title;
    j["abstract"] = paper.abstract;
    j["date"] = paper.date.to_string();
    j["authors"] = paper.authors;
    j["categories"] = paper.categories;
    return j;
}

Paper paper_from_json(const json& j)
{
    if (!j.is_object()) {
        throw Error("paper record must be a JSON object");
    }
    for (const char* field : {"id", "title", "abstract", "date"}) {
        if (!j.contains(field) || !j.at(field).is_string()) {
            throw Error(std::string("paper record missing string field '") + field + "'");
        }
    }
    Paper p;
    p.id = j.at("id").get<std::string>();
    p.title = j.at("title").get<std::string>();
    p.abstract = j.at("abstract").get<std::string>();
    p.date = Date::parse(j.at("date").get<std::string>());
    p.authors = string_list(j, "authors");
    p.categories = string_list(j, "categories");
    return p;
}

std::optional<std::string> canonical_id(std::string_view raw)
{
    std::string id = trim(raw);
    if (id.size() > 6) {
        std::string prefix = id.substr(0, 6);
        std::transform(prefix.begin(), prefix.end(), prefix.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (prefix == "arxiv:") {
            id.erase(0, 6);
        }
    }
    static const std::regex version{R"(^(.*\d)v\d+$)"};
    std::smatch m;
    if (std::regex_match(id, m, version)) {
        id = m[1].str();
    }
    if (std::regex_match(id, new_style_id()) || std::regex_match(id, old_style_id())) {
        return id;
    }
    return std::nullopt;
}

ordered_json Manifest::to_json() const
{
    ordered_json j;
    j["format_version"] = format_version;
    j["digest"] = digest;
    j["paper_count"] = paper_count;
    j["window"] = {{"first", window.first.to_string()}, {"last", window.last.to_string()}};
    return j;
}

CorpusSnapshot CorpusSnapshot::build(std::vector<Paper> papers, DateWindow window)
{
    if (papers.empty()) {
        throw Error("corpus snapshot must contain at least one paper");
    }
    std::sort(papers.begin(), papers.end(), [](const Paper& a, const Paper& b) { return a.id < b.id; });
    CorpusSnapshot snap;
    snap.papers_ = std::move(papers);
    for (std::size_t i = 0; i < snap.papers_.size(); ++i) {
        const Paper& p = snap.papers_[i];
        if (p.id.empty()) {
            throw Error("paper with empty id");
        }
        if (trim(p.abstract).empty()) {
            throw Error("paper " + p.id + " has an empty abstract");
        }
        if (!window.contains(p.date)) {
            throw Error("paper " + p.id + " dated " + p.date.to_string() + " outside the corpus window");
        }
        if (!snap.by_id_.emplace(p.id, i).second) {
            throw Error("duplicate paper id " + p.id);
        }
    }
    snap.manifest_.window = window;
    snap.manifest_.paper_count = snap.papers_.size();
    std::string params = "format=" + std::to_string(Manifest::format_version) +
                         ";window=" + window.first.to_string() + ".." + window.last.to_string() + "\n";
    snap.manifest_.digest = sha256_hex(params + snap.serialize());
    return snap;
}

std::filesystem::path manifest_path(const std::filesystem::path& corpus_file)
{
    auto p = corpus_file;
    p += ".manifest.json";
    return p;
}

CorpusSnapshot CorpusSnapshot::load(const std::filesystem::path& corpus_file)
{
    std::ifstream in(corpus_file);
    if (!in) {
        throw Error("cannot open corpus file " + corpus_file.string());
    }
    DateWindow window;
    std::optional<std::string> expected_digest;
    const auto mpath = manifest_path(corpus_file);
    if (std::filesystem::exists(mpath)) {
        std::ifstream min(mpath);
        json m = json::parse(min);
        window.first = Date::parse(m.at("window").at("first").get<std::string>());
        window.last = Date::parse(m.at("window").at("last").get<std::string>());
        expected_digest = m.at("digest").get<std::string>();
    }
    std::vector<Paper> papers;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            papers.push_back(paper_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw Error(corpus_file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    auto snap = build(std::move(papers), window);
    if (expected_digest && *expected_digest != snap.digest()) {
        throw Error("corpus digest mismatch for " + corpus_file.string() + ": manifest says " + *expected_digest +
                    ", content hashes to " + snap.digest());
    }
    return snap;
}

void CorpusSnapshot::save(const std::filesystem::path& corpus_file) const
{
    {
        std::ofstream out(corpus_file, std::ios::binary);
        if (!out) {
            throw Error("cannot write corpus file " + corpus_file.string());
        }
        out << serialize();
    }
    std::ofstream mout(manifest_path(corpus_file), std::ios::binary);
    if (!mout) {
        throw Error("cannot write manifest for " + corpus_file.string());
    }
    mout << manifest_.to_json().dump(2) << "\n";
}

const Paper* CorpusSnapshot::find(std::string_view id) const
{
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &papers_[it->second];
}

std::optional<std::size_t> CorpusSnapshot::ordinal(std::string_view id) const
{
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string CorpusSnapshot::serialize() const
{
    std::string out;
    for (const auto& p : papers_) {
        out += to_json(p).dump();
        out += '\n';
    }
    return out;
}

std::string_view to_string(Exclusion reason)
{
    switch (reason) {
    case Exclusion::InvalidId: return "invalid_id";
    case Exclusion::EmptyAbstract: return "empty_abstract";
    case Exclusion::InvalidDate: return "invalid_date";
    case Exclusion::DateOutOfWindow: return "date_out_of_window";
    }
    return "unknown";
}

std::size_t IngestReport::excluded_count(Exclusion reason) const
{
    auto it = excluded.find(reason);
    return it == excluded.end() ? 0 : it->second;
}

ordered_json IngestReport::to_json() const
{
    ordered_json j;
    j["lines_read"] = lines_read;
    j["records_accepted"] = records_accepted;
    j["duplicates_merged"] = duplicates_merged;
    ordered_json ex = ordered_json::object();
    for (auto reason : {Exclusion::EmptyAbstract, Exclusion::InvalidId, Exclusion::InvalidDate,
                        Exclusion::DateOutOfWindow}) {
        ex[std::string(to_string(reason))] = excluded_count(reason);
    }
    ex["malformed"] = malformed.size();
    j["excluded"] = ex;
    ordered_json bad = ordered_json::array();
    for (const auto& m : malformed) {
        bad.push_back({{"line", m.line}, {"message", m.message}});
    }
    j["malformed_lines"] = bad;
    j["paper_count"] = paper_count;
    j["digest"] = digest;
    return j;
}

IngestResult ingest(std::istream& records, const DateWindow& window)
{
    IngestReport report;
    std::map<std::string, Candidate> best;
    std::string line;
    while (std::getline(records, line)) {
        ++report.lines_read;
        if (trim(line).empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
            if (!j.is_object()) {
                throw Error("record is not a JSON object");
            }
            if (!j.contains("id") || !j.at("id").is_string()) {
                throw Error("missing string field 'id'");
            }
        } catch (const std::exception& e) {
            report.malformed.push_back({report.lines_read, e.what()});
            continue;
        }

        Candidate cand;
        try {
            auto id = canonical_id(j.at("id").get<std::string>());
            if (!id) {
                ++report.excluded[Exclusion::InvalidId];
                continue;
            }
            cand.paper.id = *id;
            cand.paper.title = trim(optional_string(j, "title"));
            cand.paper.abstract = trim(optional_string(j, "abstract"));
            if (cand.paper.abstract.empty()) {
                ++report.excluded[Exclusion::EmptyAbstract];
                continue;
            }
            auto date = Date::try_parse(optional_string(j, "date"));
            if (!date) {
                ++report.excluded[Exclusion::InvalidDate];
                continue;
            }
            if (!window.contains(*date)) {
                ++report.excluded[Exclusion::DateOutOfWindow];
                continue;
            }
            cand.paper.date = *date;
            cand.paper.authors = string_list(j, "authors");
            cand.paper.categories = string_list(j, "categories");
        } catch (const std::exception& e) {
            report.malformed.push_back({report.lines_read, e.what()});
            continue;
        }
        cand.abstract_chars = utf8_length(cand.paper.abstract);
        cand.raw_digest = sha256_hex(line);
        ++report.records_accepted;

        auto [it, inserted] = best.try_emplace(cand.paper.id);
        if (inserted) {
            it->second = std::move(cand);
        } else {
            ++report.duplicates_merged;
            if (better(cand, it->second)) {
                it->second = std::move(cand);
            }
        }
    }
    if (best.empty()) {
        throw Error("ingest produced zero valid papers (" + std::to_string(report.lines_read) + " lines read)");
    }
    std::vector<Paper> papers;
    papers.reserve(best.size());
    for (auto& [id, cand] : best) {
        papers.push_back(std::move(cand.paper));
    }
    auto snapshot = CorpusSnapshot::build(std::move(papers), window);
    report.paper_count = snapshot.size();
    report.digest = snapshot.digest();
    return {std::move(snapshot), std::move(report)};
}

std::string_view to_string(QuerySource source)
{
    switch (source) {
    case QuerySource::AutoScholar: return "AutoScholar";
    case QuerySource::RealScholar: return "RealScholar";
    case QuerySource::LitSearch: return "LitSearch";
    case QuerySource::Other: return "Other";
    }
    return "Other";
}

QuerySource parse_source(std::string_view text)
{
    std::string lower;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (lower == "autoscholar" || lower == "pasaautoscholar") return QuerySource::AutoScholar;
    if (lower == "realscholar" || lower == "pasarealscholar") return QuerySource::RealScholar;
    if (lower == "litsearch") return QuerySource::LitSearch;
    return QuerySource::Other;
}

Benchmark load_benchmark(std::istream& in, const CorpusSnapshot& snapshot)
{
    Benchmark out;
    std::set<std::string> seen_qids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto where = [&] { return "benchmark line " + std::to_string(line_no) + ": "; };
        json j;
        try {
            j = json::parse(line);
        } catch (const std::exception& e) {
            throw Error(where() + e.what());
        }
        if (!j.is_object() || !j.contains("qid") || !j.contains("text") || !j.contains("ground_truth") ||
            !j.at("text").is_string() || !j.at("ground_truth").is_array()) {
            throw Error(where() + "expected {qid, text, ground_truth: [id], date_constraint?, source}");
        }
        BenchmarkQuery q;
        const auto& qid = j.at("qid");
        q.qid = qid.is_string() ? qid.get<std::string>() : qid.dump();
        if (!seen_qids.insert(q.qid).second) {
            throw Error(where() + "duplicate qid " + q.qid);
        }
        q.text = j.at("text").get<std::string>();
        q.source = parse_source(j.value("source", std::string{}));
        std::set<std::string> seen_ids;
        for (const auto& g : j.at("ground_truth")) {
            if (!g.is_string()) {
                throw Error(where() + "ground_truth entries must be strings");
            }
            std::string id = canonical_id(g.get<std::string>()).value_or(trim(g.get<std::string>()));
            if (!seen_ids.insert(id).second) {
                continue;
            }
            q.ground_truth.push_back(id);
            if (snapshot.find(id) != nullptr) {
                q.resolved_ground_truth.push_back(id);
            } else {
                out.unresolved.push_back({q.qid, id});
            }
        }
        if (j.contains("date_constraint") && !j.at("date_constraint").is_null()) {
            q.date_constraint = Date::parse(j.at("date_constraint").get<std::string>());
        } else if (!q.resolved_ground_truth.empty()) {
            q.date_constraint = snapshot.find(q.resolved_ground_truth.front())->date;
            for (const auto& id : q.resolved_ground_truth) {
                q.date_constraint = std::max(q.date_constraint, snapshot.find(id)->date);
            }
            q.date_assigned = true;
        } else {
            // unusable query; keep the whole window open
            q.date_constraint = snapshot.manifest().window.last;
            q.date_assigned = true;
        }
        out.queries.push_back(std::move(q));
    }
    return out;
}

Benchmark load_benchmark(const std::filesystem::path& path, const CorpusSnapshot& snapshot)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open benchmark file " + path.string());
    }
    return load_benchmark(in, snapshot);
}

ordered_json BenchmarkStats::to_json() const
{
    ordered_json j;
    j["queries"] = queries;
    j["usable"] = usable;
    j["avg_ground_truth"] = avg_ground_truth;
    j["avg_query_length"] = avg_query_length;
    ordered_json src = ordered_json::object();
    for (const auto& [s, n] : per_source) {
        src[std::string(to_string(s))] = n;
    }
    j["per_source"] = src;
    return j;
}

BenchmarkStats benchmark_stats(std::span<const BenchmarkQuery> queries)
{
    BenchmarkStats stats;
    stats.queries = queries.size();
    double gt_total = 0.0;
    double len_total = 0.0;
    for (const auto& q : queries) {
        if (q.usable()) {
            ++stats.usable;
        }
        gt_total += static_cast<double>(q.ground_truth.size());
        len_total += static_cast<double>(utf8_length(q.text));
        ++stats.per_source[q.source];
    }
    if (!queries.empty()) {
        stats.avg_ground_truth = gt_total / static_cast<double>(queries.size());
        stats.avg_query_length = len_total / static_cast<double>(queries.size());
    }
    return stats;
}

}  // namespace litsim::corpus
