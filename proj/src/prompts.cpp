#include "litsim/policy.hpp"

#include <fstream>
#include <sstream>

namespace litsim::policy {

// Defined in the build-generated prompt_resources.cpp.
std::string_view embedded_prompt(std::string_view name);

namespace {

std::string normalize_resource(std::string text)
{
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
        text.pop_back();
    }
    return text;
}

template <class Fn>
PromptTemplates make_templates(Fn&& fetch)
{
    PromptTemplates t;
    t.planner_system = fetch("planner_system");
    t.planner_user = fetch("planner_user");
    t.planner_strategies = fetch("planner_strategies");
    t.planner_linking_guidance = fetch("planner_linking_guidance");
    t.planner_field_reference = fetch("planner_field_reference");
    t.assessor_abstract_system = fetch("assessor_abstract_system");
    t.assessor_abstract_user = fetch("assessor_abstract_user");
    t.assessor_adaptive_system = fetch("assessor_adaptive_system");
    t.assessor_adaptive_user = fetch("assessor_adaptive_user");
    t.extractor_system = fetch("extractor_system");
    t.extractor_user = fetch("extractor_user");
    t.selector_recipe = fetch("selector_recipe");
    return t;
}

bool is_slot_char(char c)
{
    return (c >= 'a' && c <= 'z') || c == '_';
}

}  // namespace

const PromptTemplates& PromptTemplates::defaults()
{
    static const PromptTemplates templates =
        make_templates([](const char* name) { return normalize_resource(std::string(embedded_prompt(name))); });
    return templates;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir)
{
    return make_templates([&](const char* name) {
        const auto path = dir / (std::string(name) + ".txt");
        if (!std::filesystem::exists(path)) {
            return normalize_resource(std::string(embedded_prompt(name)));
        }
        std::ifstream in(path, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return normalize_resource(os.str());
    });
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values)
{
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t j = i + 1;
            while (j < tmpl.size() && is_slot_char(tmpl[j])) {
                ++j;
            }
            if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
                const std::string name(tmpl.substr(i + 1, j - i - 1));
                auto it = values.find(name);
                if (it == values.end()) {
                    throw TemplateError("template placeholder {" + name + "} has no value");
                }
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out.push_back(tmpl[i]);
        ++i;
    }
    return out;
}

PromptMessages render_planner_prompt(std::string_view user_query, const memory::PlannerContext& context,
                                     std::size_t max_results_per_request, const PromptTemplates& templates)
{
    const std::map<std::string, std::string> values{
        {"max_results_per_request", std::to_string(max_results_per_request)},
        {"user_query", std::string(user_query)},
        {"current_iteration", std::to_string(context.current_iteration)},
        {"last_iteration_state", context.last_iteration_state},
        {"previous_iteration_state", context.previous_iteration_state},
        {"last_checklist", context.last_checklist},
        {"last_experience_replay", context.last_experience_replay},
        {"all_subqueries", context.all_subqueries},
        {"strategies", templates.planner_strategies},
        {"linking_guidance", templates.planner_linking_guidance},
        {"field_reference", templates.planner_field_reference},
    };
    return {{"system", render_template(templates.planner_system, values)},
            {"user", render_template(templates.planner_user, values)}};
}

std::string render_candidates(std::span<const CandidateView> candidates)
{
    std::string out;
    for (const auto& c : candidates) {
        nlohmann::ordered_json j;
        j["paper_id"] = c.paper_id;
        j["title"] = c.title;
        j["abstract"] = c.abstract;
        j["date"] = c.date;
        j["score"] = c.score;
        if (c.browser_summary) {
            j["browser_summary"] = {{"sections", c.browser_summary->rational},
                                    {"evidence", c.browser_summary->evidence},
                                    {"summary", c.browser_summary->summary}};
        }
        out += "\n";
        out += j.dump();
    }
    if (!out.empty()) {
        out += "\n";
    }
    return out;
}

PromptMessages render_assessor_prompt(AssessMode mode, std::string_view user_query, std::string_view sub_query,
                                      std::string_view checklist, std::string_view recipe,
                                      std::span<const CandidateView> candidates, const PromptTemplates& templates)
{
    const std::map<std::string, std::string> values{
        {"user_query", std::string(user_query)},
        {"sub_query", std::string(sub_query)},
        {"planner_checklist", checklist.empty() ? std::string(memory::empty_marker) : std::string(checklist)},
        {"selector_recipe", std::string(recipe)},
        {"candidates", render_candidates(candidates)},
    };
    const bool adaptive = mode == AssessMode::Adaptive;
    return {{"system", render_template(adaptive ? templates.assessor_adaptive_system
                                                : templates.assessor_abstract_system,
                                       values)},
            {"user", render_template(adaptive ? templates.assessor_adaptive_user : templates.assessor_abstract_user,
                                     values)}};
}

PromptMessages render_extractor_prompt(std::string_view full_text, std::string_view goal,
                                       const PromptTemplates& templates)
{
    const std::map<std::string, std::string> values{{"full_text", std::string(full_text)},
                                                    {"task", std::string(goal)}};
    return {{"system", render_template(templates.extractor_system, values)},
            {"user", render_template(templates.extractor_user, values)}};
}

}  // namespace litsim::policy
