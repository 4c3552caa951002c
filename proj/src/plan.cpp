#include "litsim/plan.hpp"

#include "litsim/common.hpp"

#include <algorithm>
#include <cctype>

namespace litsim {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(LinkType type)
{
    switch (type) {
    case LinkType::Root: return "root";
    case LinkType::Derive: return "derive";
    case LinkType::Expand: return "expand";
    case LinkType::Continue: return "continue";
    }
    return "root";
}

std::optional<LinkType> parse_link_type(std::string_view text)
{
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "derive") return LinkType::Derive;
    if (lower == "expand") return LinkType::Expand;
    if (lower == "continue") return LinkType::Continue;
    if (lower == "root") return LinkType::Root;
    return std::nullopt;
}

ordered_json to_json(const Plan& plan)
{
    ordered_json subs = ordered_json::array();
    for (const auto& s : plan.subqueries) {
        ordered_json item;
        item["link_type"] = to_string(s.link_type);
        item["source_id"] = s.source_id;
        if (s.link_type != LinkType::Continue) {
            item["text"] = s.text;
        }
        item["target_k"] = s.target_k;
        subs.push_back(std::move(item));
    }
    ordered_json j;
    j["subqueries"] = std::move(subs);
    j["checklist"] = plan.checklist;
    j["experience_replay"] = plan.experience_replay;
    j["is_complete"] = plan.is_complete;
    if (!plan.warnings.empty()) {
        j["warnings"] = plan.warnings;
    }
    return j;
}

Plan plan_from_json(const json& j)
{
    Plan plan;
    for (const auto& item : j.value("subqueries", json::array())) {
        SubqueryAction a;
        auto lt = parse_link_type(item.at("link_type").get<std::string>());
        if (!lt || *lt == LinkType::Root) {
            throw Error("bad link_type in plan: " + item.at("link_type").dump());
        }
        a.link_type = *lt;
        a.source_id = item.at("source_id").get<std::size_t>();
        if (a.link_type != LinkType::Continue) {
            a.text = item.value("text", std::string{});
        }
        a.target_k = item.value("target_k", std::size_t{10});
        plan.subqueries.push_back(std::move(a));
    }
    plan.checklist = j.value("checklist", std::string{});
    plan.experience_replay = j.value("experience_replay", std::string{});
    plan.is_complete = j.value("is_complete", false);
    plan.warnings = j.value("warnings", std::vector<std::string>{});
    return plan;
}

std::string_view to_string(AssessMode mode)
{
    return mode == AssessMode::Adaptive ? "adaptive" : "abstract_only";
}

AssessMode parse_assess_mode(std::string_view text)
{
    if (text == "adaptive") return AssessMode::Adaptive;
    if (text == "abstract_only" || text == "abstract-only") return AssessMode::AbstractOnly;
    throw Error("unknown assessment mode '" + std::string(text) + "'");
}

ordered_json to_json(const Assessment& a)
{
    ordered_json j;
    j["selected"] = a.selected;
    j["discarded"] = a.discarded;
    j["to_browse"] = a.to_browse;
    j["reasons"] = a.reasons;
    j["overview"] = a.overview;
    if (!a.browsed.empty()) {
        j["browsed"] = a.browsed;
    }
    j["dropped_ids"] = a.dropped_ids;
    j["degraded"] = a.degraded;
    return j;
}

Assessment assessment_from_json(const json& j)
{
    Assessment a;
    a.selected = j.value("selected", std::vector<std::string>{});
    a.discarded = j.value("discarded", std::vector<std::string>{});
    a.to_browse = j.value("to_browse", std::map<std::string, std::string>{});
    a.reasons = j.value("reasons", std::map<std::string, std::string>{});
    a.overview = j.value("overview", std::string{});
    a.browsed = j.value("browsed", std::map<std::string, std::string>{});
    a.dropped_ids = j.value("dropped_ids", std::size_t{0});
    a.degraded = j.value("degraded", false);
    return a;
}

ordered_json to_json(const Extraction& e)
{
    ordered_json j;
    j["rational"] = e.rational;
    j["evidence"] = e.evidence;
    j["summary"] = e.summary;
    if (e.degraded) {
        j["degraded"] = true;
    }
    return j;
}

Extraction extraction_from_json(const json& j)
{
    Extraction e;
    e.rational = j.value("rational", std::string{});
    e.evidence = j.value("evidence", std::string{});
    e.summary = j.value("summary", std::string{});
    e.degraded = j.value("degraded", false);
    return e;
}

}  // namespace litsim
