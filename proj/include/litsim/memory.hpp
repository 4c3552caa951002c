#pragma once

#include "litsim/common.hpp"
#include "litsim/plan.hpp"
#include "litsim/retrieval.hpp"

#include <span>
#include <string>
#include <vector>

namespace litsim::memory {

/// One visit of a node by a tool call: what came back and what was kept.
struct NodeTouch {
    std::size_t iteration = 0;
    std::size_t page = 0;
    std::size_t retrieved = 0;
    std::size_t selected = 0;
    std::string overview;

    friend bool operator==(const NodeTouch&, const NodeTouch&) = default;
};

struct SubqueryNode {
    std::size_t node_id = 0;
    std::size_t parent_id = 0;
    LinkType link_type = LinkType::Root;
    std::size_t iteration_created = 0;
    std::string text;
    std::size_t target_k = 10;
    std::vector<std::string> retrieved_ids;
    std::vector<std::string> selected_ids;
    std::size_t next_page = 0;
    std::string overview;
    /// The most recent page came back exhausted.
    bool exhausted = false;
    std::vector<NodeTouch> touches;

    friend bool operator==(const SubqueryNode&, const SubqueryNode&) = default;
};

/// Hierarchical subquery memory rooted at the original query (node 0).
/// Nodes are only ever appended; parent ids always precede child ids.
class SubqueryTree {
  public:
    SubqueryTree(std::string root_query, std::size_t root_k);

    std::span<const SubqueryNode> nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    bool contains(std::size_t node_id) const noexcept { return node_id < nodes_.size(); }
    const SubqueryNode& node(std::size_t node_id) const;

    std::size_t add_node(std::size_t parent_id, LinkType link, std::size_t iteration, std::string text,
                         std::size_t target_k);
    SubqueryNode& mutable_node(std::size_t node_id);

    /// Throws Error if any structural invariant is broken.
    void check_invariants() const;

    friend bool operator==(const SubqueryTree&, const SubqueryTree&) = default;

  private:
    std::vector<SubqueryNode> nodes_;
};

struct ExperienceBuffer {
    std::string text;
    std::size_t max_chars = 4000;

    friend bool operator==(const ExperienceBuffer&, const ExperienceBuffer&) = default;
};

/// Replaces the buffer text, hard-truncated to max_chars code points.
ExperienceBuffer update_buffer(ExperienceBuffer buffer, std::string_view new_summary);

/// Everything the planner sees between iterations.
struct ResearchMemory {
    SubqueryTree tree;
    ExperienceBuffer buffer;
    std::string last_checklist;

    ResearchMemory(std::string query, std::size_t root_k, std::size_t buffer_cap)
        : tree(std::move(query), root_k), buffer{{}, buffer_cap}
    {}
};

struct PlannedCall {
    std::size_t node_id = 0;
    retrieval::ToolCall call;

    friend bool operator==(const PlannedCall&, const PlannedCall&) = default;
};

struct PlanApplication {
    std::vector<PlannedCall> calls;
    std::vector<std::string> notes;
};

class PlanRejected : public Error {
  public:
    using Error::Error;
};

/// Validates the plan against the current tree, then grows it.
/// Derive and Expand append a child of source_id (ids in plan order);
/// Continue pages the existing node forward. Target counts are clamped
/// to max_k. Throws PlanRejected, leaving the tree untouched, when a
/// source id is unknown or a Continue targets the root.
PlanApplication apply_plan(SubqueryTree& tree, const Plan& plan, std::size_t iteration,
                           const Date& date_constraint, std::size_t max_k);

class AssessmentContractError : public Error {
  public:
    using Error::Error;
};

/// Merges one tool call's results into its node.
const SubqueryNode& record_results(SubqueryTree& tree, std::size_t node_id, std::size_t iteration,
                                   const retrieval::CandidateSet& candidates, const Assessment& assessment);

/// Text blocks consumed by the planner prompt.
struct PlannerContext {
    std::size_t current_iteration = 1;
    std::string all_subqueries;
    std::string last_iteration_state;
    std::string previous_iteration_state;
    std::string last_checklist;
    std::string last_experience_replay;

    friend bool operator==(const PlannerContext&, const PlannerContext&) = default;
};

/// Marker rendered for blocks with nothing to show.
inline constexpr std::string_view empty_marker = "None";

PlannerContext render_state(const ResearchMemory& memory, std::size_t iteration);

}  // namespace litsim::memory
