#pragma once

#include "litsim/assess.hpp"
#include "litsim/corpus.hpp"
#include "litsim/memory.hpp"
#include "litsim/plan.hpp"
#include "litsim/policy.hpp"
#include "litsim/retrieval.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace litsim::workflow {

enum class TerminationReason { EmptyPlan, IsComplete, MaxIterations, PolicyFailure };

std::string_view to_string(TerminationReason reason);
TerminationReason parse_termination_reason(std::string_view text);

struct FailureNote {
    std::string stage;
    std::string message;

    friend bool operator==(const FailureNote&, const FailureNote&) = default;
};

struct IterationRecord {
    std::size_t iteration = 0;
    Plan plan;
    /// apply_plan remarks (clamped k, skipped Continue).
    std::vector<std::string> notes;
    std::vector<memory::PlannedCall> tool_calls;
    /// Parallel to tool_calls.
    std::vector<retrieval::CandidateSet> candidate_sets;
    std::vector<std::pair<std::size_t, Assessment>> assessments;
    /// Ids first selected in this iteration, sorted.
    std::vector<std::string> selected_new;
    std::vector<FailureNote> failures;

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct Trajectory {
    std::string qid;
    std::string query;
    Date date_constraint;
    /// Direct Query baseline rather than the iterative loop.
    bool direct = false;
    std::string config_digest;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::vector<IterationRecord> iterations;
    /// Sorted union of every iteration's selected_new.
    std::vector<std::string> final_selected;
    TerminationReason terminated_reason = TerminationReason::MaxIterations;
    /// The plan that ended the run, when the policy ended it.
    std::optional<Plan> final_plan;
    std::vector<FailureNote> failures;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Environment {
    const corpus::CorpusSnapshot& snapshot;
    const retrieval::Backend& backend;
    /// Required in adaptive mode.
    const assess::Browser* browser = nullptr;
};

struct WorkflowConfig {
    std::size_t max_iterations = 5;
    AssessMode mode = AssessMode::AbstractOnly;
    std::size_t max_results_per_request = 10;
    std::size_t direct_k = 50;
    std::size_t buffer_cap = 4000;
    /// Copied verbatim into the trajectory header.
    std::string config_digest;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

Trajectory run_workflow(const corpus::BenchmarkQuery& query, const Environment& env, policy::Policy& policy,
                        const WorkflowConfig& config);

/// One verbatim retrieval of direct_k results followed by the usual
/// assessment pass.
Trajectory run_direct_query(const corpus::BenchmarkQuery& query, const Environment& env, policy::Policy& policy,
                            const WorkflowConfig& config);

nlohmann::ordered_json to_json(const IterationRecord& record);
IterationRecord iteration_from_json(const nlohmann::json& j);

/// Header line, one line per iteration, then a summary line.
void write_trajectory(std::ostream& out, const Trajectory& trajectory);
void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);

/// Throws Error on malformed input or a missing summary line.
Trajectory read_trajectory(std::istream& in);
Trajectory load_trajectory(const std::filesystem::path& path);

/// Header fields only; nullopt when the file is absent, unreadable or
/// lacks its summary line (an interrupted run).
struct TrajectoryHeader {
    std::string qid;
    std::string config_digest;
};
std::optional<TrajectoryHeader> complete_trajectory_header(const std::filesystem::path& path);

/// Re-applies the recorded plans to a fresh tree, feeding back the recorded
/// candidate sets, and compares the resulting tool calls to the recorded
/// ones. Returns a description of the first mismatch.
std::optional<std::string> check_replay(const Trajectory& trajectory, std::size_t max_results_per_request);

}  // namespace litsim::workflow
