#include "litsim/policy.hpp"

#include <algorithm>
#include <cctype>

namespace litsim::policy {

using nlohmann::json;

namespace {

ParseFailure fail(Defect d, std::string detail)
{
    return {d, std::move(detail)};
}

std::string strip_fences(std::string body)
{
    body = trim(body);
    if (body.rfind("```", 0) == 0) {
        const auto nl = body.find('\n');
        body = nl == std::string::npos ? std::string{} : body.substr(nl + 1);
        const auto close = body.rfind("```");
        if (close != std::string::npos) {
            body.erase(close);
        }
    }
    return trim(body);
}

std::optional<json> decode(std::string_view body)
{
    try {
        return json::parse(body);
    } catch (const json::parse_error&) {
        return std::nullopt;
    }
}

/// Free-text fields sometimes arrive as objects or arrays; keep their JSON.
std::string text_field(const json& j, const char* field, std::vector<std::string>* warnings)
{
    if (!j.contains(field) || j.at(field).is_null()) {
        return {};
    }
    const auto& v = j.at(field);
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (warnings) {
        warnings->push_back(std::string(field) + " was not a string; kept its JSON text");
    }
    return v.dump();
}

std::optional<std::size_t> non_negative_integer(const json& v)
{
    if (v.is_number_unsigned()) {
        return v.get<std::size_t>();
    }
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::size_t>(v.get<std::int64_t>());
    }
    return std::nullopt;
}

std::optional<std::vector<std::string>> id_list(const json& j, const char* field)
{
    std::vector<std::string> out;
    if (!j.contains(field) || j.at(field).is_null()) {
        return out;
    }
    if (!j.at(field).is_array()) {
        return std::nullopt;
    }
    for (const auto& v : j.at(field)) {
        if (!v.is_string()) {
            return std::nullopt;
        }
        out.push_back(trim(v.get<std::string>()));
    }
    return out;
}

std::optional<std::map<std::string, std::string>> string_map(const json& j, const char* field)
{
    std::map<std::string, std::string> out;
    if (!j.contains(field) || j.at(field).is_null()) {
        return out;
    }
    if (!j.at(field).is_object()) {
        return std::nullopt;
    }
    for (const auto& [k, v] : j.at(field).items()) {
        out[trim(k)] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    return out;
}

void dedup_in_place(std::vector<std::string>& ids)
{
    std::set<std::string> seen;
    std::erase_if(ids, [&](const std::string& id) { return !seen.insert(id).second; });
}

}  // namespace

std::string_view to_string(Defect defect)
{
    switch (defect) {
    case Defect::MissingTags: return "missing_tags";
    case Defect::InvalidJson: return "invalid_json";
    case Defect::SchemaViolation: return "schema_violation";
    case Defect::BadLinkType: return "bad_link_type";
    case Defect::BadSourceId: return "bad_source_id";
    case Defect::BadTargetK: return "bad_target_k";
    case Defect::SubqueryCount: return "subquery_count";
    case Defect::ConflictingDecision: return "conflicting_decision";
    case Defect::RebrowseRequested: return "rebrowse_requested";
    case Defect::EmptyField: return "empty_field";
    }
    return "unknown";
}

std::string ParseFailure::describe() const
{
    return std::string(to_string(defect)) + (detail.empty() ? "" : ": " + detail);
}

std::optional<std::string> extract_tagged(std::string_view raw, std::string_view tag)
{
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    const auto end = raw.rfind(close);
    if (end == std::string_view::npos) {
        return std::nullopt;
    }
    const auto begin = raw.substr(0, end).rfind(open);
    if (begin == std::string_view::npos) {
        return std::nullopt;
    }
    return strip_fences(std::string(raw.substr(begin + open.size(), end - begin - open.size())));
}

Parsed<Plan> parse_plan(std::string_view raw, const PlanParseOptions& options)
{
    auto body = extract_tagged(raw, "planner_output");
    if (!body) {
        return fail(Defect::MissingTags, "no <planner_output>...</planner_output> span");
    }
    auto j = decode(*body);
    if (!j) {
        return fail(Defect::InvalidJson, "planner_output is not valid JSON");
    }
    if (!j->is_object()) {
        return fail(Defect::SchemaViolation, "planner_output must be a JSON object");
    }
    if (!j->contains("subqueries") || !j->at("subqueries").is_array()) {
        return fail(Defect::SchemaViolation, "subqueries must be an array");
    }
    Plan plan;
    std::set<std::string> texts;
    std::size_t index = 0;
    for (const auto& item : j->at("subqueries")) {
        const std::string where = "subqueries[" + std::to_string(index++) + "]";
        if (!item.is_object()) {
            return fail(Defect::SchemaViolation, where + " is not an object");
        }
        if (!item.contains("link_type") || !item.at("link_type").is_string()) {
            return fail(Defect::BadLinkType, where + " has no link_type string");
        }
        auto lt = parse_link_type(item.at("link_type").get<std::string>());
        if (!lt || *lt == LinkType::Root) {
            return fail(Defect::BadLinkType, where + " link_type " + item.at("link_type").dump());
        }
        SubqueryAction a;
        a.link_type = *lt;
        if (!item.contains("source_id")) {
            return fail(Defect::BadSourceId, where + " has no source_id");
        }
        auto src = non_negative_integer(item.at("source_id"));
        if (!src) {
            return fail(Defect::BadSourceId, where + " source_id " + item.at("source_id").dump());
        }
        a.source_id = *src;
        if (!item.contains("target_k")) {
            return fail(Defect::BadTargetK, where + " has no target_k");
        }
        auto k = non_negative_integer(item.at("target_k"));
        if (!k || *k == 0) {
            return fail(Defect::BadTargetK, where + " target_k " + item.at("target_k").dump());
        }
        a.target_k = *k;
        if (a.link_type == LinkType::Continue) {
            if (item.contains("text")) {
                plan.warnings.push_back(where + ": text ignored for continue");
            }
        } else {
            if (!item.contains("text") || !item.at("text").is_string() ||
                trim(item.at("text").get<std::string>()).empty()) {
                return fail(Defect::SchemaViolation, where + " needs a non-empty text");
            }
            a.text = trim(item.at("text").get<std::string>());
            if (!texts.insert(a.text).second) {
                plan.warnings.push_back(where + ": duplicate subquery text");
            }
        }
        plan.subqueries.push_back(std::move(a));
    }
    plan.checklist = text_field(*j, "checklist", &plan.warnings);
    plan.experience_replay = text_field(*j, "experience_replay", &plan.warnings);
    if (j->contains("is_complete") && !j->at("is_complete").is_null()) {
        if (!j->at("is_complete").is_boolean()) {
            return fail(Defect::SchemaViolation, "is_complete must be a boolean");
        }
        plan.is_complete = j->at("is_complete").get<bool>();
    }
    const auto n = plan.subqueries.size();
    if (!plan.is_complete && n > 0) {
        if (options.strict_subquery_count && (n < 3 || n > 6)) {
            return fail(Defect::SubqueryCount, std::to_string(n) + " subqueries, expected 3-6");
        }
        if (n > 8) {
            plan.warnings.push_back(std::to_string(n) + " subqueries proposed");
        }
    }
    return plan;
}

Parsed<Assessment> normalize_assessment(Assessment a, AssessMode mode, std::span<const std::string> presented,
                                        const std::set<std::string>& browsed)
{
    const std::set<std::string> shown(presented.begin(), presented.end());
    auto drop_unknown = [&](std::vector<std::string>& ids) {
        const auto before = ids.size();
        std::erase_if(ids, [&](const std::string& id) { return !shown.contains(id); });
        a.dropped_ids += before - ids.size();
    };
    dedup_in_place(a.selected);
    dedup_in_place(a.discarded);
    drop_unknown(a.selected);
    drop_unknown(a.discarded);
    for (auto it = a.to_browse.begin(); it != a.to_browse.end();) {
        if (!shown.contains(it->first)) {
            ++a.dropped_ids;
            it = a.to_browse.erase(it);
        } else {
            ++it;
        }
    }
    std::erase_if(a.reasons, [&](const auto& kv) { return !shown.contains(kv.first); });

    const std::set<std::string> selected(a.selected.begin(), a.selected.end());
    if (mode == AssessMode::AbstractOnly) {
        a.to_browse.clear();
        a.discarded.clear();
    } else {
        for (const auto& d : a.discarded) {
            if (selected.contains(d)) {
                return fail(Defect::ConflictingDecision, d + " is both selected and discarded");
            }
        }
        for (const auto& [id, goal] : a.to_browse) {
            if (browsed.contains(id)) {
                return fail(Defect::RebrowseRequested, id + " already carries browser evidence");
            }
            if (selected.contains(id) || std::find(a.discarded.begin(), a.discarded.end(), id) != a.discarded.end()) {
                return fail(Defect::ConflictingDecision, id + " is in to_browse and also decided");
            }
            if (trim(goal).empty()) {
                return fail(Defect::EmptyField, "to_browse goal for " + id + " is empty");
            }
        }
    }
    const std::set<std::string> discarded(a.discarded.begin(), a.discarded.end());
    for (const auto& id : presented) {
        if (!selected.contains(id) && !discarded.contains(id) && !a.to_browse.contains(id)) {
            a.discarded.push_back(id);
        }
    }
    return a;
}

Parsed<Assessment> parse_assessment(std::string_view raw, AssessMode mode, std::span<const std::string> presented,
                                    const std::set<std::string>& browsed)
{
    auto body = extract_tagged(raw, "selector_output");
    if (!body) {
        return fail(Defect::MissingTags, "no <selector_output>...</selector_output> span");
    }
    auto j = decode(*body);
    if (!j) {
        return fail(Defect::InvalidJson, "selector_output is not valid JSON");
    }
    if (!j->is_object()) {
        return fail(Defect::SchemaViolation, "selector_output must be a JSON object");
    }
    Assessment a;
    auto selected = id_list(*j, "selected");
    auto discarded = id_list(*j, "discarded");
    auto to_browse = string_map(*j, "to_browse");
    auto reasons = string_map(*j, "reasons");
    if (!selected || !discarded) {
        return fail(Defect::SchemaViolation, "selected/discarded must be arrays of paper ids");
    }
    if (!to_browse || !reasons) {
        return fail(Defect::SchemaViolation, "to_browse/reasons must be objects");
    }
    a.selected = std::move(*selected);
    a.discarded = std::move(*discarded);
    a.to_browse = std::move(*to_browse);
    a.reasons = std::move(*reasons);
    a.overview = text_field(*j, "overview", nullptr);
    return normalize_assessment(std::move(a), mode, presented, browsed);
}

std::string cap_sentences(std::string_view text, std::size_t max_sentences)
{
    std::size_t count = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') {
            continue;
        }
        const bool at_end = i + 1 == text.size();
        if (at_end || std::isspace(static_cast<unsigned char>(text[i + 1]))) {
            if (++count == max_sentences) {
                return trim(text.substr(0, i + 1));
            }
        }
    }
    return trim(text);
}

Parsed<Extraction> parse_extraction(std::string_view raw)
{
    auto body = extract_tagged(raw, "extractor_output");
    if (!body) {
        return fail(Defect::MissingTags, "no <extractor_output>...</extractor_output> span");
    }
    auto j = decode(*body);
    if (!j) {
        return fail(Defect::InvalidJson, "extractor_output is not valid JSON");
    }
    if (!j->is_object()) {
        return fail(Defect::SchemaViolation, "extractor_output must be a JSON object");
    }
    Extraction e;
    for (auto [field, target] : {std::pair{"rational", &e.rational}, std::pair{"evidence", &e.evidence},
                                 std::pair{"summary", &e.summary}}) {
        if (!j->contains(field) || !j->at(field).is_string()) {
            return fail(Defect::SchemaViolation, std::string(field) + " must be a string");
        }
        *target = trim(j->at(field).get<std::string>());
        if (target->empty()) {
            return fail(Defect::EmptyField, std::string(field) + " is empty");
        }
    }
    e.summary = cap_sentences(e.summary, 3);
    return e;
}

}  // namespace litsim::policy
