#pragma once

#include "litsim/corpus.hpp"
#include "litsim/memory.hpp"
#include "litsim/plan.hpp"
#include "litsim/policy.hpp"
#include "litsim/retrieval.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace litsim::assess {

struct Section {
    std::string name;
    std::string text;

    friend bool operator==(const Section&, const Section&) = default;
};

enum class FullTextSource { LocalStore, Fetched };

struct FullTextDoc {
    std::string paper_id;
    std::vector<Section> sections;
    FullTextSource source = FullTextSource::LocalStore;

    /// Plain text handed to the extractor: one "## name" block per section.
    std::string render() const;
};

/// References, bibliography and acknowledgment sections.
bool is_stop_section(std::string_view name);
std::vector<Section> filter_sections(std::vector<Section> sections);

/// Heading-delimited sections of an HTML article page. Math elements are
/// replaced by their `alttext`; tags, scripts and styles are dropped.
std::vector<Section> parse_html_sections(std::string_view html);

/// Remote source of article HTML. Returns nullopt when the page is absent.
class FullTextFetcher {
  public:
    virtual ~FullTextFetcher() = default;
    virtual std::optional<std::string> fetch_html(std::string_view paper_id) = 0;
};

/// HTTP GET of `url_template` with `{id}` replaced by the paper id.
class HttpFullTextFetcher final : public FullTextFetcher {
  public:
    explicit HttpFullTextFetcher(std::string url_template = "https://ar5iv.labs.arxiv.org/html/{id}");
    std::optional<std::string> fetch_html(std::string_view paper_id) override;

  private:
    std::string url_template_;
};

class NotFound : public Error {
  public:
    using Error::Error;
};

/// File used for `paper_id` inside a local store ('/' becomes '_').
std::filesystem::path store_path(const std::filesystem::path& store, std::string_view paper_id);

void write_store_entry(const std::filesystem::path& store, const FullTextDoc& doc);

/// Local store first, then the fetcher when one is given. Throws NotFound.
FullTextDoc fetch_fulltext(std::string_view paper_id, const std::filesystem::path& store,
                           FullTextFetcher* fetcher = nullptr);

/// Full-text access used by adaptive browsing.
class Browser {
  public:
    explicit Browser(std::filesystem::path store, std::shared_ptr<FullTextFetcher> fetcher = nullptr)
        : store_(std::move(store)), fetcher_(std::move(fetcher))
    {}

    FullTextDoc fetch(std::string_view paper_id) const { return fetch_fulltext(paper_id, store_, fetcher_.get()); }

  private:
    std::filesystem::path store_;
    std::shared_ptr<FullTextFetcher> fetcher_;
};

/// Policy bookkeeping accumulated across one assessment.
struct StageLog {
    std::size_t policy_calls = 0;
    std::size_t transport_retries = 0;
    std::size_t parse_retries = 0;
    std::vector<std::string> failures;

    template <class T>
    void absorb(const policy::StageOutcome<T>& outcome, std::string_view stage)
    {
        ++policy_calls;
        transport_retries += outcome.transport_retries;
        parse_retries += outcome.parse_retries;
        for (const auto& f : outcome.failures) {
            failures.push_back(std::string(stage) + ": " + f);
        }
    }
};

/// Runs the extractor on `doc`. Throws Error on an empty goal or document;
/// a failed policy yields a degraded Extraction whose summary is
/// "extraction failed".
Extraction extract(policy::Policy& policy, const FullTextDoc& doc, std::string_view goal, StageLog& log);

struct AssessInput {
    std::string_view user_query;
    std::string_view checklist;
    const memory::SubqueryNode& node;
    std::size_t iteration = 1;
    const retrieval::CandidateSet& candidates;
    const corpus::CorpusSnapshot& snapshot;
};

std::vector<policy::CandidateView> candidate_views(const retrieval::CandidateSet& candidates,
                                                   const corpus::CorpusSnapshot& snapshot);

/// One policy round over titles and abstracts. No candidates: no call.
Assessment assess_abstract_only(policy::Policy& policy, const AssessInput& input, StageLog& log);

/// Abstract round, then at most one browse round for the candidates the
/// policy marked uncertain. Unfetchable candidates are discarded with
/// reason "fulltext_unavailable".
Assessment assess_adaptive(policy::Policy& policy, const Browser& browser, const AssessInput& input,
                           StageLog& log);

}  // namespace litsim::assess
