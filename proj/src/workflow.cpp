#include "litsim/workflow.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace litsim::workflow {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::vector<FailureNote> notes_from(std::string_view stage, const std::vector<std::string>& failures)
{
    std::vector<FailureNote> out;
    for (const auto& f : failures) {
        out.push_back({std::string(stage), f});
    }
    return out;
}

template <class T>
void append(std::vector<T>& to, const std::vector<T>& from)
{
    to.insert(to.end(), from.begin(), from.end());
}

struct RunState {
    memory::ResearchMemory memory;
    std::set<std::string> selected;
};

/// Executes the planned calls in plan order and merges every result into
/// the tree. Fills the retrieval/assessment half of `record`.
void execute_calls(const corpus::BenchmarkQuery& query, const Environment& env, policy::Policy& policy,
                   const WorkflowConfig& config, const std::string& checklist, RunState& state,
                   IterationRecord& record)
{
    std::set<std::string> fresh;
    for (const auto& planned : record.tool_calls) {
        auto candidates = env.backend.execute(planned.call);
        const auto& node = state.memory.tree.node(planned.node_id);
        assess::AssessInput input{query.text, checklist, node, record.iteration, candidates, env.snapshot};
        assess::StageLog log;
        Assessment assessment = config.mode == AssessMode::Adaptive
                                    ? assess::assess_adaptive(policy, *env.browser, input, log)
                                    : assess::assess_abstract_only(policy, input, log);
        append(record.failures, notes_from("assess", log.failures));
        if (assessment.degraded) {
            record.failures.push_back(
                {"assess", "node " + std::to_string(planned.node_id) + " degraded: no candidates selected"});
        }
        memory::record_results(state.memory.tree, planned.node_id, record.iteration, candidates, assessment);
        for (const auto& id : assessment.selected) {
            if (!state.selected.contains(id)) {
                fresh.insert(id);
            }
        }
        record.candidate_sets.push_back(std::move(candidates));
        record.assessments.emplace_back(planned.node_id, std::move(assessment));
    }
    record.selected_new.assign(fresh.begin(), fresh.end());
    state.selected.insert(fresh.begin(), fresh.end());
}

Trajectory start_trajectory(const corpus::BenchmarkQuery& query, const WorkflowConfig& config, bool direct)
{
    Trajectory t;
    t.qid = query.qid;
    t.query = query.text;
    t.date_constraint = query.date_constraint;
    t.direct = direct;
    t.config_digest = config.config_digest;
    t.config = config.config;
    return t;
}

void check_environment(const Environment& env, const WorkflowConfig& config)
{
    if (config.mode == AssessMode::Adaptive && env.browser == nullptr) {
        throw Error("adaptive assessment needs a full-text browser");
    }
    if (config.max_iterations == 0) {
        throw Error("max_iterations must be at least 1");
    }
    if (config.max_results_per_request == 0 || config.direct_k == 0) {
        throw Error("result counts must be positive");
    }
}

}  // namespace

std::string_view to_string(TerminationReason reason)
{
    switch (reason) {
    case TerminationReason::EmptyPlan: return "empty_plan";
    case TerminationReason::IsComplete: return "is_complete";
    case TerminationReason::MaxIterations: return "max_iterations";
    case TerminationReason::PolicyFailure: return "policy_failure";
    }
    return "unknown";
}

TerminationReason parse_termination_reason(std::string_view text)
{
    for (auto r : {TerminationReason::EmptyPlan, TerminationReason::IsComplete, TerminationReason::MaxIterations,
                   TerminationReason::PolicyFailure}) {
        if (to_string(r) == text) {
            return r;
        }
    }
    throw Error("unknown termination reason '" + std::string(text) + "'");
}

Trajectory run_workflow(const corpus::BenchmarkQuery& query, const Environment& env, policy::Policy& policy,
                        const WorkflowConfig& config)
{
    check_environment(env, config);
    Trajectory traj = start_trajectory(query, config, false);
    RunState state{memory::ResearchMemory(query.text, config.max_results_per_request, config.buffer_cap), {}};
    traj.terminated_reason = TerminationReason::MaxIterations;

    for (std::size_t t = 1; t <= config.max_iterations; ++t) {
        const auto ctx = memory::render_state(state.memory, t);
        auto outcome = policy.plan({query.text, ctx, t, state.memory.tree.size()});
        append(traj.failures, notes_from("plan", outcome.failures));
        if (!outcome.value) {
            traj.failures.push_back({"plan", "iteration " + std::to_string(t) + ": planner gave no usable plan"});
            traj.terminated_reason = TerminationReason::PolicyFailure;
            break;
        }
        Plan plan = std::move(*outcome.value);
        if (plan.is_complete) {
            traj.final_plan = std::move(plan);
            traj.terminated_reason = TerminationReason::IsComplete;
            break;
        }
        if (plan.subqueries.empty()) {
            traj.final_plan = std::move(plan);
            traj.terminated_reason = TerminationReason::EmptyPlan;
            break;
        }

        IterationRecord record;
        record.iteration = t;
        try {
            auto applied =
                memory::apply_plan(state.memory.tree, plan, t, query.date_constraint, config.max_results_per_request);
            record.tool_calls = std::move(applied.calls);
            record.notes = std::move(applied.notes);
        } catch (const memory::PlanRejected& e) {
            traj.failures.push_back({"plan", "iteration " + std::to_string(t) + ": " + e.what()});
            traj.final_plan = std::move(plan);
            traj.terminated_reason = TerminationReason::PolicyFailure;
            break;
        }
        execute_calls(query, env, policy, config, plan.checklist, state, record);

        if (!plan.experience_replay.empty()) {
            state.memory.buffer = memory::update_buffer(state.memory.buffer, plan.experience_replay);
        }
        state.memory.last_checklist = plan.checklist;
        record.plan = std::move(plan);
        traj.iterations.push_back(std::move(record));
    }
    traj.final_selected.assign(state.selected.begin(), state.selected.end());
    return traj;
}

Trajectory run_direct_query(const corpus::BenchmarkQuery& query, const Environment& env, policy::Policy& policy,
                            const WorkflowConfig& config)
{
    check_environment(env, config);
    Trajectory traj = start_trajectory(query, config, true);
    RunState state{memory::ResearchMemory(query.text, config.direct_k, config.buffer_cap), {}};

    IterationRecord record;
    record.iteration = 1;
    record.plan.is_complete = true;
    record.tool_calls.push_back({0, {query.text, config.direct_k, query.date_constraint, 0}});
    execute_calls(query, env, policy, config, {}, state, record);
    traj.iterations.push_back(std::move(record));
    traj.final_selected.assign(state.selected.begin(), state.selected.end());
    traj.terminated_reason = TerminationReason::IsComplete;
    return traj;
}

// ------------------------------------------------------------------ persistence

namespace {

ordered_json to_json(const FailureNote& f)
{
    return ordered_json{{"stage", f.stage}, {"message", f.message}};
}

ordered_json failures_json(const std::vector<FailureNote>& failures)
{
    ordered_json out = ordered_json::array();
    for (const auto& f : failures) {
        out.push_back(to_json(f));
    }
    return out;
}

std::vector<FailureNote> failures_from_json(const json& j)
{
    std::vector<FailureNote> out;
    for (const auto& f : j) {
        out.push_back({f.at("stage").get<std::string>(), f.at("message").get<std::string>()});
    }
    return out;
}

}  // namespace

ordered_json to_json(const IterationRecord& record)
{
    ordered_json j;
    j["type"] = "iteration";
    j["iteration"] = record.iteration;
    j["plan"] = to_json(record.plan);
    j["notes"] = record.notes;
    ordered_json calls = ordered_json::array();
    for (const auto& c : record.tool_calls) {
        calls.push_back({{"node_id", c.node_id}, {"call", retrieval::to_json(c.call)}});
    }
    j["tool_calls"] = std::move(calls);
    ordered_json sets = ordered_json::array();
    for (const auto& s : record.candidate_sets) {
        sets.push_back(retrieval::to_json(s));
    }
    j["candidate_sets"] = std::move(sets);
    ordered_json assessments = ordered_json::array();
    for (const auto& [node, a] : record.assessments) {
        assessments.push_back({{"node_id", node}, {"assessment", litsim::to_json(a)}});
    }
    j["assessments"] = std::move(assessments);
    j["selected_new"] = record.selected_new;
    j["failures"] = failures_json(record.failures);
    return j;
}

IterationRecord iteration_from_json(const json& j)
{
    IterationRecord r;
    r.iteration = j.at("iteration").get<std::size_t>();
    r.plan = plan_from_json(j.at("plan"));
    r.notes = j.value("notes", std::vector<std::string>{});
    for (const auto& c : j.at("tool_calls")) {
        r.tool_calls.push_back({c.at("node_id").get<std::size_t>(), retrieval::tool_call_from_json(c.at("call"))});
    }
    for (const auto& s : j.at("candidate_sets")) {
        r.candidate_sets.push_back(retrieval::candidate_set_from_json(s));
    }
    for (const auto& a : j.at("assessments")) {
        r.assessments.emplace_back(a.at("node_id").get<std::size_t>(), assessment_from_json(a.at("assessment")));
    }
    r.selected_new = j.at("selected_new").get<std::vector<std::string>>();
    r.failures = failures_from_json(j.value("failures", json::array()));
    if (r.candidate_sets.size() != r.tool_calls.size() || r.assessments.size() != r.tool_calls.size()) {
        throw Error("iteration " + std::to_string(r.iteration) + " has mismatched call/result counts");
    }
    return r;
}

void write_trajectory(std::ostream& out, const Trajectory& t)
{
    ordered_json header;
    header["type"] = "header";
    header["qid"] = t.qid;
    header["query"] = t.query;
    header["date_constraint"] = t.date_constraint.to_string();
    header["run"] = t.direct ? "direct" : "iterative";
    header["config_digest"] = t.config_digest;
    header["config"] = t.config;
    out << header.dump() << "\n";
    for (const auto& r : t.iterations) {
        out << to_json(r).dump() << "\n";
    }
    ordered_json summary;
    summary["type"] = "summary";
    summary["terminated_reason"] = to_string(t.terminated_reason);
    summary["iterations"] = t.iterations.size();
    summary["final_selected"] = t.final_selected;
    summary["final_plan"] = t.final_plan ? to_json(*t.final_plan) : ordered_json(nullptr);
    summary["failures"] = failures_json(t.failures);
    out << summary.dump() << "\n";
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    // Written beside the target and renamed so a crash never leaves a
    // half-written file that --resume could mistake for a finished one.
    auto tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
        write_trajectory(out, trajectory);
        if (!out) {
            throw Error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

Trajectory read_trajectory(std::istream& in)
{
    Trajectory t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    bool have_summary = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        if (have_summary) {
            throw Error("trajectory line " + std::to_string(lineno) + " follows the summary");
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error("trajectory line " + std::to_string(lineno) + ": " + e.what());
        }
        const auto type = j.value("type", std::string{});
        try {
            if (!have_header) {
                if (type != "header") {
                    throw Error("first line is not a header");
                }
                t.qid = j.at("qid").get<std::string>();
                t.query = j.value("query", std::string{});
                t.date_constraint = Date::parse(j.at("date_constraint").get<std::string>());
                t.direct = j.value("run", std::string{}) == "direct";
                t.config_digest = j.at("config_digest").get<std::string>();
                t.config = ordered_json::parse(j.at("config").dump());
                have_header = true;
            } else if (type == "iteration") {
                t.iterations.push_back(iteration_from_json(j));
            } else if (type == "summary") {
                t.terminated_reason = parse_termination_reason(j.at("terminated_reason").get<std::string>());
                t.final_selected = j.at("final_selected").get<std::vector<std::string>>();
                if (!j.at("final_plan").is_null()) {
                    t.final_plan = plan_from_json(j.at("final_plan"));
                }
                t.failures = failures_from_json(j.value("failures", json::array()));
                have_summary = true;
            } else {
                throw Error("unexpected record type '" + type + "'");
            }
        } catch (const json::exception& e) {
            throw Error("trajectory line " + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw Error("trajectory line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!have_header) {
        throw Error("trajectory is empty");
    }
    if (!have_summary) {
        throw Error("trajectory for " + t.qid + " is incomplete (no summary line)");
    }
    return t;
}

Trajectory load_trajectory(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open trajectory " + path.string());
    }
    try {
        return read_trajectory(in);
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

std::optional<TrajectoryHeader> complete_trajectory_header(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) {
        return std::nullopt;
    }
    try {
        const auto t = load_trajectory(path);
        return TrajectoryHeader{t.qid, t.config_digest};
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::optional<std::string> check_replay(const Trajectory& trajectory, std::size_t max_results_per_request)
{
    if (trajectory.direct) {
        if (trajectory.iterations.size() != 1 || trajectory.iterations[0].tool_calls.size() != 1) {
            return "direct trajectory must hold exactly one tool call";
        }
        const auto& pc = trajectory.iterations[0].tool_calls[0];
        if (pc.node_id != 0 || pc.call.query_text != trajectory.query || pc.call.page != 0 ||
            pc.call.date_constraint != trajectory.date_constraint) {
            return "direct tool call is not the verbatim query";
        }
        return std::nullopt;
    }
    memory::SubqueryTree tree(trajectory.query, max_results_per_request);
    for (const auto& r : trajectory.iterations) {
        memory::PlanApplication applied;
        try {
            applied = memory::apply_plan(tree, r.plan, r.iteration, trajectory.date_constraint,
                                         max_results_per_request);
        } catch (const memory::PlanRejected& e) {
            return "iteration " + std::to_string(r.iteration) + ": recorded plan rejected on replay: " + e.what();
        }
        if (applied.calls != r.tool_calls) {
            return "iteration " + std::to_string(r.iteration) + ": replayed tool calls differ from the record";
        }
        for (std::size_t i = 0; i < r.tool_calls.size(); ++i) {
            if (r.candidate_sets[i].call != r.tool_calls[i].call) {
                return "iteration " + std::to_string(r.iteration) + ": candidate set " + std::to_string(i) +
                       " answers a different call";
            }
            memory::record_results(tree, r.tool_calls[i].node_id, r.iteration, r.candidate_sets[i],
                                   r.assessments[i].second);
        }
    }
    return std::nullopt;
}

}  // namespace litsim::workflow
