#pragma once

#include "litsim/common.hpp"
#include "litsim/memory.hpp"
#include "litsim/plan.hpp"

#include <json.hpp>

#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace litsim::policy {

// ------------------------------------------------------------------ prompts

struct ChatMessage {
    std::string role;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

using PromptMessages = std::vector<ChatMessage>;

/// Template texts with `{placeholder}` slots. Defaults are compiled in from
/// resources/prompts; a directory with same-named files overrides them.
struct PromptTemplates {
    std::string planner_system;
    std::string planner_user;
    std::string planner_strategies;
    std::string planner_linking_guidance;
    std::string planner_field_reference;
    std::string assessor_abstract_system;
    std::string assessor_abstract_user;
    std::string assessor_adaptive_system;
    std::string assessor_adaptive_user;
    std::string extractor_system;
    std::string extractor_user;
    std::string selector_recipe;

    static const PromptTemplates& defaults();
    static PromptTemplates load(const std::filesystem::path& dir);
};

class TemplateError : public Error {
  public:
    using Error::Error;
};

/// Single-pass substitution of `{name}` slots (name = [a-z_]+). Values are
/// inserted verbatim and never rescanned. Any slot without a value throws.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

PromptMessages render_planner_prompt(std::string_view user_query, const memory::PlannerContext& context,
                                     std::size_t max_results_per_request,
                                     const PromptTemplates& templates = PromptTemplates::defaults());

/// What the assessor sees about one candidate.
struct CandidateView {
    std::string paper_id;
    std::string title;
    std::string abstract;
    std::string date;
    double score = 0.0;
    std::optional<Extraction> browser_summary;
};

std::string render_candidates(std::span<const CandidateView> candidates);

PromptMessages render_assessor_prompt(AssessMode mode, std::string_view user_query, std::string_view sub_query,
                                      std::string_view checklist, std::string_view recipe,
                                      std::span<const CandidateView> candidates,
                                      const PromptTemplates& templates = PromptTemplates::defaults());

PromptMessages render_extractor_prompt(std::string_view full_text, std::string_view goal,
                                       const PromptTemplates& templates = PromptTemplates::defaults());

// ------------------------------------------------------------------ parsing

enum class Defect {
    MissingTags,
    InvalidJson,
    SchemaViolation,
    BadLinkType,
    BadSourceId,
    BadTargetK,
    SubqueryCount,
    ConflictingDecision,
    RebrowseRequested,
    EmptyField,
};

std::string_view to_string(Defect defect);

struct ParseFailure {
    Defect defect = Defect::SchemaViolation;
    std::string detail;

    std::string describe() const;
};

template <class T>
using Parsed = std::variant<T, ParseFailure>;

/// Body of the last well-formed `<tag>...</tag>` span (code fences stripped).
std::optional<std::string> extract_tagged(std::string_view raw, std::string_view tag);

struct PlanParseOptions {
    /// Reject plans outside 3..6 subqueries (unless complete or empty).
    bool strict_subquery_count = false;
};

Parsed<Plan> parse_plan(std::string_view raw, const PlanParseOptions& options = {});

/// Applies the assessment contract to a decoded assessment: drops ids not
/// in `presented` (counted in dropped_ids), forces to_browse empty in
/// Abstract-only mode, rejects overlapping decisions and re-browse requests
/// for ids in `browsed`, and files every unmentioned presented id under
/// discarded.
Parsed<Assessment> normalize_assessment(Assessment a, AssessMode mode, std::span<const std::string> presented,
                                        const std::set<std::string>& browsed = {});

Parsed<Assessment> parse_assessment(std::string_view raw, AssessMode mode, std::span<const std::string> presented,
                                    const std::set<std::string>& browsed = {});

/// Keeps at most `max_sentences` sentences, splitting after . ! or ?
/// followed by whitespace.
std::string cap_sentences(std::string_view text, std::size_t max_sentences = 3);

Parsed<Extraction> parse_extraction(std::string_view raw);

// ------------------------------------------------------------------ chat transport

struct Decoding {
    double temperature = 0.0;
    double top_p = 1.0;
};

class TransportError : public Error {
  public:
    TransportError(const std::string& what, bool retryable) : Error(what), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

  private:
    bool retryable_;
};

/// One request/response exchange with a chat model. Throws TransportError.
class ChatTransport {
  public:
    virtual ~ChatTransport() = default;
    virtual std::string send(const PromptMessages& messages, const Decoding& decoding) = 0;
};

struct HttpEndpoint {
    /// Full URL of the chat-completions route.
    std::string url;
    std::string model;
    std::string api_key;
    std::chrono::seconds timeout{120};
};

/// JSON-over-HTTP chat completion: POSTs {model, messages, temperature,
/// top_p} and returns choices[0].message.content.
class HttpChatTransport final : public ChatTransport {
  public:
    explicit HttpChatTransport(HttpEndpoint endpoint);
    std::string send(const PromptMessages& messages, const Decoding& decoding) override;

    static nlohmann::json build_request(const std::string& model, const PromptMessages& messages,
                                        const Decoding& decoding);
    /// Throws TransportError(non-retryable) when no assistant text is present.
    static std::string parse_response(std::string_view body);

  private:
    HttpEndpoint endpoint_;
};

/// Replays queued responses; an entry may instead be a failure to throw.
class ScriptedTransport final : public ChatTransport {
  public:
    struct Step {
        std::string text;
        bool fail = false;
        bool retryable = true;
    };

    void push_reply(std::string text) { steps_.push_back({std::move(text), false, true}); }
    void push_failure(bool retryable = true) { steps_.push_back({"scripted failure", true, retryable}); }

    std::string send(const PromptMessages& messages, const Decoding& decoding) override;

    const std::vector<PromptMessages>& requests() const noexcept { return requests_; }

  private:
    std::deque<Step> steps_;
    std::vector<PromptMessages> requests_;
};

struct RetryPolicy {
    std::size_t max_transport_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::milliseconds max_backoff{8000};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

Sleeper real_sleeper();

struct ChatResult {
    std::optional<std::string> text;
    std::size_t transport_retries = 0;
    std::vector<std::string> errors;
    std::vector<std::chrono::milliseconds> backoffs;
};

/// Sends with bounded exponential backoff on retryable transport errors.
ChatResult chat_complete(ChatTransport& transport, const PromptMessages& messages, const Decoding& decoding = {},
                         const RetryPolicy& retry = {}, const Sleeper& sleep = real_sleeper());

// ------------------------------------------------------------------ policies

struct PlanRequest {
    std::string_view user_query;
    const memory::PlannerContext& context;
    std::size_t iteration = 1;
    /// Valid source ids are 0 .. node_count-1.
    std::size_t node_count = 1;
};

struct AssessRequest {
    AssessMode mode = AssessMode::AbstractOnly;
    std::string_view user_query;
    std::string_view sub_query;
    std::string_view checklist;
    std::size_t node_id = 0;
    std::size_t iteration = 1;
    /// 1 = first look, 2 = finalizing browsed candidates.
    int round = 1;
    std::span<const CandidateView> candidates;
};

struct ExtractRequest {
    std::string_view paper_id;
    std::string_view full_text;
    std::string_view goal;
};

/// Stage result: an empty value means the stage degraded.
template <class T>
struct StageOutcome {
    std::optional<T> value;
    std::size_t transport_retries = 0;
    std::size_t parse_retries = 0;
    std::vector<std::string> failures;
};

/// Decision maker behind planning, assessment and extraction.
class Policy {
  public:
    virtual ~Policy() = default;
    virtual StageOutcome<Plan> plan(const PlanRequest& request) = 0;
    virtual StageOutcome<Assessment> assess(const AssessRequest& request) = 0;
    virtual StageOutcome<Extraction> extract(const ExtractRequest& request) = 0;
};

struct LlmPolicyConfig {
    Decoding decoding;
    RetryPolicy retry;
    std::size_t max_parse_retries = 2;
    std::size_t max_results_per_request = 10;
    PlanParseOptions plan_options;
    PromptTemplates templates = PromptTemplates::defaults();
};

/// Renders prompts, calls the model, parses, and re-asks on parse failure.
class LlmPolicy final : public Policy {
  public:
    LlmPolicy(ChatTransport& transport, LlmPolicyConfig config, Sleeper sleep = real_sleeper());

    StageOutcome<Plan> plan(const PlanRequest& request) override;
    StageOutcome<Assessment> assess(const AssessRequest& request) override;
    StageOutcome<Extraction> extract(const ExtractRequest& request) override;

  private:
    template <class T, class ParseFn>
    StageOutcome<T> run_stage(PromptMessages messages, std::string_view tag, ParseFn parse);

    ChatTransport& transport_;
    LlmPolicyConfig config_;
    Sleeper sleep_;
};

/// Rule used by the mock when no scripted assessment matches.
struct MockAssessorRule {
    enum class Kind { SelectAll, SelectNone, Overlap };
    Kind kind = Kind::SelectAll;
    /// Overlap: minimum shared content tokens with the original query.
    std::size_t min_overlap = 1;
};

struct MockIteration {
    /// Either a decoded plan or raw model text run through parse_plan.
    std::variant<Plan, std::string> plan;
    /// Keyed by node id ("3"), or "3#2" for the second adaptive round.
    std::map<std::string, nlohmann::json> assessments;
};

struct MockQueryScript {
    std::vector<MockIteration> iterations;
    /// paper id -> extraction payload.
    std::map<std::string, Extraction> extractions;
};

/// Whole-benchmark script: per-qid scripts plus fallbacks.
struct MockScript {
    std::map<std::string, MockQueryScript> queries;
    MockAssessorRule default_assessor;
    /// Unscripted queries get the greedy heuristic plan (else: complete at once).
    bool heuristic_fallback = true;

    static MockScript from_json(const nlohmann::json& j);
    static MockScript load(const std::filesystem::path& path);
};

MockQueryScript mock_query_script_from_json(const nlohmann::json& j);

/// Deterministic, network-free policy. With a script it replays plans by
/// iteration (exhausted => complete plan); without one it runs the greedy
/// heuristic: the verbatim query once, then complete.
class MockPolicy final : public Policy {
  public:
    MockPolicy(std::optional<MockQueryScript> script, MockAssessorRule rule, std::size_t max_results_per_request);

    StageOutcome<Plan> plan(const PlanRequest& request) override;
    StageOutcome<Assessment> assess(const AssessRequest& request) override;
    StageOutcome<Extraction> extract(const ExtractRequest& request) override;

  private:
    std::optional<MockQueryScript> script_;
    MockAssessorRule rule_;
    std::size_t max_results_;
};

std::unique_ptr<Policy> mock_policy(std::optional<MockQueryScript> script, MockAssessorRule rule = {},
                                    std::size_t max_results_per_request = 10);

/// Content tokens (stop words removed) used by the overlap heuristic.
std::set<std::string> content_tokens(std::string_view text);

}  // namespace litsim::policy
