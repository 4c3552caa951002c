#pragma once

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace litsim {

enum class LinkType { Root, Derive, Expand, Continue };

std::string_view to_string(LinkType type);
std::optional<LinkType> parse_link_type(std::string_view text);

struct SubqueryAction {
    LinkType link_type = LinkType::Derive;
    std::size_t source_id = 0;
    /// Empty for Continue.
    std::string text;
    std::size_t target_k = 10;

    friend bool operator==(const SubqueryAction&, const SubqueryAction&) = default;
};

/// Planner output for one iteration.
struct Plan {
    std::vector<SubqueryAction> subqueries;
    std::string checklist;
    std::string experience_replay;
    bool is_complete = false;
    /// Soft validation findings (odd subquery counts, ignored Continue text).
    std::vector<std::string> warnings;

    friend bool operator==(const Plan&, const Plan&) = default;
};

nlohmann::ordered_json to_json(const Plan& plan);
/// Lenient structural decode used for persisted plans and mock scripts.
/// Strict validation of model output lives in policy::parse_plan.
Plan plan_from_json(const nlohmann::json& j);

enum class AssessMode { AbstractOnly, Adaptive };

std::string_view to_string(AssessMode mode);
AssessMode parse_assess_mode(std::string_view text);

struct Assessment {
    std::vector<std::string> selected;
    std::vector<std::string> discarded;
    /// paper id -> extraction goal (Adaptive mode only).
    std::map<std::string, std::string> to_browse;
    std::map<std::string, std::string> reasons;
    std::string overview;
    /// Goals that were sent to the browser before the final decision.
    std::map<std::string, std::string> browsed;
    /// Ids that referenced papers outside the presented candidates.
    std::size_t dropped_ids = 0;
    /// True when the policy failed and the stage fell back to "no decision".
    bool degraded = false;

    friend bool operator==(const Assessment&, const Assessment&) = default;
};

nlohmann::ordered_json to_json(const Assessment& a);
Assessment assessment_from_json(const nlohmann::json& j);

struct Extraction {
    /// Section names; the field is spelled "rational" on the wire.
    std::string rational;
    std::string evidence;
    std::string summary;
    bool degraded = false;

    friend bool operator==(const Extraction&, const Extraction&) = default;
};

nlohmann::ordered_json to_json(const Extraction& e);
Extraction extraction_from_json(const nlohmann::json& j);

}  // namespace litsim
