#include "litsim/policy.hpp"

#include "litsim/text.hpp"

#include <fstream>

namespace litsim::policy {

using nlohmann::json;

// ------------------------------------------------------------------ LLM-backed

LlmPolicy::LlmPolicy(ChatTransport& transport, LlmPolicyConfig config, Sleeper sleep)
    : transport_(transport), config_(std::move(config)), sleep_(std::move(sleep))
{}

template <class T, class ParseFn>
StageOutcome<T> LlmPolicy::run_stage(PromptMessages messages, std::string_view tag, ParseFn parse)
{
    StageOutcome<T> out;
    for (std::size_t attempt = 0;; ++attempt) {
        auto chat = chat_complete(transport_, messages, config_.decoding, config_.retry, sleep_);
        out.transport_retries += chat.transport_retries;
        if (!chat.text) {
            for (auto& e : chat.errors) {
                out.failures.push_back("transport: " + e);
            }
            return out;
        }
        Parsed<T> parsed = parse(*chat.text);
        if (auto* value = std::get_if<T>(&parsed)) {
            out.value = std::move(*value);
            return out;
        }
        const auto& failure = std::get<ParseFailure>(parsed);
        out.failures.push_back("parse: " + failure.describe());
        if (attempt >= config_.max_parse_retries) {
            return out;
        }
        ++out.parse_retries;
        messages.push_back({"assistant", *chat.text});
        messages.push_back({"user", "Your previous output could not be used (" + failure.describe() +
                                        "). Reply again with valid JSON only inside <" + std::string(tag) +
                                        "> tags, following the output format exactly."});
    }
}

StageOutcome<Plan> LlmPolicy::plan(const PlanRequest& request)
{
    auto messages = render_planner_prompt(request.user_query, request.context, config_.max_results_per_request,
                                          config_.templates);
    const auto node_count = request.node_count;
    const auto options = config_.plan_options;
    return run_stage<Plan>(std::move(messages), "planner_output", [&](const std::string& raw) -> Parsed<Plan> {
        auto parsed = parse_plan(raw, options);
        if (auto* p = std::get_if<Plan>(&parsed)) {
            for (const auto& a : p->subqueries) {
                if (a.source_id >= node_count) {
                    return ParseFailure{Defect::BadSourceId, "source_id " + std::to_string(a.source_id) +
                                                                 " is not in <all_subqueries>"};
                }
                if (a.link_type == LinkType::Continue && a.source_id == 0) {
                    return ParseFailure{Defect::BadSourceId, "the root query (id=0) cannot be continued"};
                }
            }
        }
        return parsed;
    });
}

StageOutcome<Assessment> LlmPolicy::assess(const AssessRequest& request)
{
    auto messages = render_assessor_prompt(request.mode, request.user_query, request.sub_query, request.checklist,
                                           config_.templates.selector_recipe, request.candidates, config_.templates);
    std::vector<std::string> presented;
    std::set<std::string> browsed;
    for (const auto& c : request.candidates) {
        presented.push_back(c.paper_id);
        if (c.browser_summary) {
            browsed.insert(c.paper_id);
        }
    }
    return run_stage<Assessment>(std::move(messages), "selector_output", [&](const std::string& raw) {
        return parse_assessment(raw, request.mode, presented, browsed);
    });
}

StageOutcome<Extraction> LlmPolicy::extract(const ExtractRequest& request)
{
    auto messages = render_extractor_prompt(request.full_text, request.goal, config_.templates);
    return run_stage<Extraction>(std::move(messages), "extractor_output",
                                 [](const std::string& raw) { return parse_extraction(raw); });
}

// ------------------------------------------------------------------ mock

std::set<std::string> content_tokens(std::string_view text)
{
    static const std::set<std::string> stop_words{
        "a",    "an",   "and",  "are",   "as",   "at",    "be",   "by",   "can",  "do",  "for",
        "from", "how",  "i",    "in",    "is",   "it",    "its",  "of",   "on",   "or",  "papers",
        "that", "the",  "their", "there", "these", "this", "to",   "use",  "using", "via", "was",
        "we",   "what", "which", "with",  "work", "works", "any",  "some", "find", "paper"};
    std::set<std::string> out;
    for (auto& t : text::tokenize(text)) {
        if (!stop_words.contains(t)) {
            out.insert(std::move(t));
        }
    }
    return out;
}

MockQueryScript mock_query_script_from_json(const json& j)
{
    MockQueryScript script;
    for (const auto& it : j.value("iterations", json::array())) {
        MockIteration m;
        if (it.contains("raw")) {
            m.plan = it.at("raw").get<std::string>();
        } else {
            m.plan = plan_from_json(it.at("plan"));
        }
        const auto assessments = it.value("assessments", json::object());
        for (const auto& [key, value] : assessments.items()) {
            m.assessments[key] = value;
        }
        script.iterations.push_back(std::move(m));
    }
    const auto extractions = j.value("extractions", json::object());
    for (const auto& [id, value] : extractions.items()) {
        script.extractions[id] = extraction_from_json(value);
    }
    return script;
}

MockScript MockScript::from_json(const json& j)
{
    MockScript s;
    if (j.contains("default_assessor")) {
        const auto& a = j.at("default_assessor");
        const auto kind = a.value("kind", std::string{"select_all"});
        if (kind == "select_all") {
            s.default_assessor.kind = MockAssessorRule::Kind::SelectAll;
        } else if (kind == "select_none") {
            s.default_assessor.kind = MockAssessorRule::Kind::SelectNone;
        } else if (kind == "overlap") {
            s.default_assessor.kind = MockAssessorRule::Kind::Overlap;
            s.default_assessor.min_overlap = a.value("min_overlap", std::size_t{1});
        } else {
            throw Error("unknown mock assessor kind '" + kind + "'");
        }
    }
    s.heuristic_fallback = j.value("fallback", std::string{"heuristic"}) == "heuristic";
    const auto queries = j.value("queries", json::object());
    for (const auto& [qid, q] : queries.items()) {
        s.queries[qid] = mock_query_script_from_json(q);
    }
    return s;
}

MockScript MockScript::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open mock script " + path.string());
    }
    try {
        return from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw Error("mock script " + path.string() + ": " + e.what());
    }
}

MockPolicy::MockPolicy(std::optional<MockQueryScript> script, MockAssessorRule rule,
                       std::size_t max_results_per_request)
    : script_(std::move(script)), rule_(rule), max_results_(max_results_per_request)
{}

StageOutcome<Plan> MockPolicy::plan(const PlanRequest& request)
{
    StageOutcome<Plan> out;
    if (!script_) {
        Plan p;
        if (request.iteration == 1) {
            p.subqueries.push_back({LinkType::Derive, 0, std::string(request.user_query), max_results_});
            p.checklist = "verbatim query";
        } else {
            p.is_complete = true;
        }
        out.value = std::move(p);
        return out;
    }
    if (request.iteration == 0 || request.iteration > script_->iterations.size()) {
        Plan done;
        done.is_complete = true;
        out.value = std::move(done);
        return out;
    }
    const auto& scripted = script_->iterations[request.iteration - 1].plan;
    if (const auto* plan = std::get_if<Plan>(&scripted)) {
        out.value = *plan;
        return out;
    }
    auto parsed = parse_plan(std::get<std::string>(scripted));
    if (auto* plan = std::get_if<Plan>(&parsed)) {
        out.value = std::move(*plan);
    } else {
        out.failures.push_back("parse: " + std::get<ParseFailure>(parsed).describe());
    }
    return out;
}

StageOutcome<Assessment> MockPolicy::assess(const AssessRequest& request)
{
    StageOutcome<Assessment> out;
    std::vector<std::string> presented;
    std::set<std::string> browsed;
    for (const auto& c : request.candidates) {
        presented.push_back(c.paper_id);
        if (c.browser_summary) {
            browsed.insert(c.paper_id);
        }
    }
    if (script_ && request.iteration >= 1 && request.iteration <= script_->iterations.size()) {
        const auto& table = script_->iterations[request.iteration - 1].assessments;
        std::string key = std::to_string(request.node_id);
        if (request.round == 2) {
            key += "#2";
        }
        if (auto it = table.find(key); it != table.end()) {
            Parsed<Assessment> parsed = it->second.is_string()
                                            ? parse_assessment(it->second.get<std::string>(), request.mode,
                                                               presented, browsed)
                                            : normalize_assessment(assessment_from_json(it->second), request.mode,
                                                                   presented, browsed);
            if (auto* a = std::get_if<Assessment>(&parsed)) {
                out.value = std::move(*a);
            } else {
                out.failures.push_back("parse: " + std::get<ParseFailure>(parsed).describe());
            }
            return out;
        }
    }

    Assessment a;
    const auto query_tokens = content_tokens(request.user_query);
    for (const auto& c : request.candidates) {
        bool keep = false;
        switch (rule_.kind) {
        case MockAssessorRule::Kind::SelectAll: keep = true; break;
        case MockAssessorRule::Kind::SelectNone: keep = false; break;
        case MockAssessorRule::Kind::Overlap: {
            const auto doc = content_tokens(c.title + "\n" + c.abstract);
            std::size_t shared = 0;
            for (const auto& t : query_tokens) {
                shared += doc.contains(t) ? 1 : 0;
            }
            keep = shared >= rule_.min_overlap;
            break;
        }
        }
        (keep ? a.selected : a.discarded).push_back(c.paper_id);
    }
    a.overview = "mock: kept " + std::to_string(a.selected.size()) + " of " +
                 std::to_string(request.candidates.size());
    auto parsed = normalize_assessment(std::move(a), request.mode, presented, browsed);
    out.value = std::get<Assessment>(std::move(parsed));
    return out;
}

StageOutcome<Extraction> MockPolicy::extract(const ExtractRequest& request)
{
    StageOutcome<Extraction> out;
    if (script_) {
        if (auto it = script_->extractions.find(std::string(request.paper_id)); it != script_->extractions.end()) {
            out.value = it->second;
            out.value->summary = cap_sentences(out.value->summary, 3);
            return out;
        }
    }
    Extraction e;
    e.rational = "full text";
    e.evidence = std::string(utf8_truncate(request.full_text, 200));
    e.summary = "Mock extraction for goal: " + std::string(request.goal) + ".";
    out.value = std::move(e);
    return out;
}

std::unique_ptr<Policy> mock_policy(std::optional<MockQueryScript> script, MockAssessorRule rule,
                                    std::size_t max_results_per_request)
{
    return std::make_unique<MockPolicy>(std::move(script), rule, max_results_per_request);
}

}  // namespace litsim::policy
