#include "litsim/memory.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace litsim::memory {

namespace {

std::string json_quoted(std::string_view text)
{
    return nlohmann::json(std::string(text)).dump();
}

std::string or_empty(std::string text)
{
    return text.empty() ? std::string(empty_marker) : text;
}

struct IterationSummary {
    std::size_t retrieved = 0;
    std::size_t selected = 0;
    std::string overview;
};

/// Per-node totals of every touch made during `iteration`.
std::map<std::size_t, IterationSummary> summarize(const SubqueryTree& tree, std::size_t iteration)
{
    std::map<std::size_t, IterationSummary> out;
    for (const auto& n : tree.nodes()) {
        for (const auto& t : n.touches) {
            if (t.iteration != iteration) {
                continue;
            }
            auto& s = out[n.node_id];
            s.retrieved += t.retrieved;
            s.selected += t.selected;
            s.overview = t.overview;
        }
    }
    return out;
}

std::string render_iteration(const SubqueryTree& tree, std::size_t iteration)
{
    std::ostringstream os;
    for (const auto& [id, s] : summarize(tree, iteration)) {
        const auto& n = tree.node(id);
        os << "id=" << id << " text=" << json_quoted(n.text) << " target_k=" << n.target_k
           << " retrieved=" << s.retrieved << " selected=" << s.selected << " overview=" << json_quoted(s.overview)
           << "\n";
    }
    return os.str();
}

}  // namespace

SubqueryTree::SubqueryTree(std::string root_query, std::size_t root_k)
{
    SubqueryNode root;
    root.node_id = 0;
    root.parent_id = 0;
    root.link_type = LinkType::Root;
    root.iteration_created = 0;
    root.text = std::move(root_query);
    root.target_k = std::max<std::size_t>(root_k, 1);
    nodes_.push_back(std::move(root));
}

const SubqueryNode& SubqueryTree::node(std::size_t node_id) const
{
    if (!contains(node_id)) {
        throw Error("no subquery node " + std::to_string(node_id));
    }
    return nodes_[node_id];
}

SubqueryNode& SubqueryTree::mutable_node(std::size_t node_id)
{
    if (!contains(node_id)) {
        throw Error("no subquery node " + std::to_string(node_id));
    }
    return nodes_[node_id];
}

std::size_t SubqueryTree::add_node(std::size_t parent_id, LinkType link, std::size_t iteration, std::string text,
                                   std::size_t target_k)
{
    if (!contains(parent_id)) {
        throw Error("parent node " + std::to_string(parent_id) + " does not exist");
    }
    if (link != LinkType::Derive && link != LinkType::Expand) {
        throw Error("only derive/expand create nodes");
    }
    SubqueryNode n;
    n.node_id = nodes_.size();
    n.parent_id = parent_id;
    n.link_type = link;
    n.iteration_created = iteration;
    n.text = std::move(text);
    n.target_k = target_k;
    nodes_.push_back(std::move(n));
    check_invariants();
    return nodes_.back().node_id;
}

void SubqueryTree::check_invariants() const
{
    if (nodes_.empty() || nodes_[0].link_type != LinkType::Root || nodes_[0].parent_id != 0) {
        throw Error("subquery tree lost its root");
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.node_id != i) {
            throw Error("node id out of sequence at " + std::to_string(i));
        }
        if (i > 0 && (n.link_type == LinkType::Root || n.parent_id >= i)) {
            throw Error("node " + std::to_string(i) + " has an invalid parent link");
        }
        const std::set<std::string> retrieved(n.retrieved_ids.begin(), n.retrieved_ids.end());
        if (retrieved.size() != n.retrieved_ids.size()) {
            throw Error("node " + std::to_string(i) + " stores duplicate retrieved ids");
        }
        for (const auto& s : n.selected_ids) {
            if (!retrieved.contains(s)) {
                throw Error("node " + std::to_string(i) + " selected " + s + " without retrieving it");
            }
        }
    }
}

ExperienceBuffer update_buffer(ExperienceBuffer buffer, std::string_view new_summary)
{
    buffer.text = std::string(utf8_truncate(new_summary, buffer.max_chars));
    return buffer;
}

PlanApplication apply_plan(SubqueryTree& tree, const Plan& plan, std::size_t iteration,
                           const Date& date_constraint, std::size_t max_k)
{
    for (std::size_t i = 0; i < plan.subqueries.size(); ++i) {
        const auto& a = plan.subqueries[i];
        const std::string where = "subquery " + std::to_string(i) + ": ";
        if (!tree.contains(a.source_id)) {
            throw PlanRejected(where + "source_id " + std::to_string(a.source_id) + " not in a tree of " +
                               std::to_string(tree.size()) + " nodes");
        }
        if (a.link_type == LinkType::Continue && a.source_id == 0) {
            throw PlanRejected(where + "the root query (id=0) cannot be continued");
        }
        if (a.link_type == LinkType::Root) {
            throw PlanRejected(where + "link_type root cannot be planned");
        }
        if (a.link_type != LinkType::Continue && trim(a.text).empty()) {
            throw PlanRejected(where + to_string(a.link_type).data() + " without text");
        }
        if (a.target_k == 0) {
            throw PlanRejected(where + "target_k must be positive");
        }
    }

    PlanApplication out;
    for (const auto& a : plan.subqueries) {
        if (a.link_type == LinkType::Continue) {
            auto& node = tree.mutable_node(a.source_id);
            if (node.exhausted) {
                out.notes.push_back("continue on node " + std::to_string(node.node_id) +
                                    " skipped: ranking already exhausted");
                continue;
            }
            out.calls.push_back({node.node_id, {node.text, node.target_k, date_constraint, node.next_page}});
            ++node.next_page;
            continue;
        }
        const std::size_t k = std::min(a.target_k, max_k);
        if (k != a.target_k) {
            out.notes.push_back("target_k " + std::to_string(a.target_k) + " clamped to " + std::to_string(k));
        }
        const auto id = tree.add_node(a.source_id, a.link_type, iteration, trim(a.text), k);
        auto& node = tree.mutable_node(id);
        out.calls.push_back({id, {node.text, k, date_constraint, 0}});
        node.next_page = 1;
    }
    return out;
}

const SubqueryNode& record_results(SubqueryTree& tree, std::size_t node_id, std::size_t iteration,
                                   const retrieval::CandidateSet& candidates, const Assessment& assessment)
{
    auto& node = tree.mutable_node(node_id);
    std::set<std::string_view> presented;
    for (const auto& h : candidates.hits) {
        presented.insert(h.paper_id);
    }
    for (const auto& s : assessment.selected) {
        if (!presented.contains(s)) {
            throw AssessmentContractError("assessment for node " + std::to_string(node_id) + " selected " + s +
                                          ", which was not among its candidates");
        }
    }
    std::set<std::string> have(node.retrieved_ids.begin(), node.retrieved_ids.end());
    for (const auto& h : candidates.hits) {
        if (have.insert(h.paper_id).second) {
            node.retrieved_ids.push_back(h.paper_id);
        }
    }
    std::set<std::string> kept(node.selected_ids.begin(), node.selected_ids.end());
    for (const auto& s : assessment.selected) {
        if (kept.insert(s).second) {
            node.selected_ids.push_back(s);
        }
    }
    node.overview = assessment.overview;
    node.exhausted = candidates.exhausted;
    node.touches.push_back(
        {iteration, candidates.call.page, candidates.hits.size(), assessment.selected.size(), assessment.overview});
    tree.check_invariants();
    return node;
}

PlannerContext render_state(const ResearchMemory& memory, std::size_t iteration)
{
    PlannerContext ctx;
    ctx.current_iteration = iteration;
    std::ostringstream all;
    for (const auto& n : memory.tree.nodes()) {
        all << "id=" << n.node_id << " source=" << n.parent_id << " link=" << to_string(n.link_type)
            << " iteration=" << n.iteration_created << " text=" << json_quoted(n.text) << "\n";
    }
    ctx.all_subqueries = all.str();
    if (iteration > 1) {
        ctx.last_iteration_state = render_iteration(memory.tree, iteration - 1);
    }
    std::string previous;
    for (std::size_t t = 1; t + 1 < iteration; ++t) {
        auto block = render_iteration(memory.tree, t);
        if (!block.empty()) {
            previous += "iteration " + std::to_string(t) + ":\n" + block;
        }
    }
    ctx.last_iteration_state = or_empty(std::move(ctx.last_iteration_state));
    ctx.previous_iteration_state = or_empty(std::move(previous));
    ctx.last_checklist = or_empty(memory.last_checklist);
    ctx.last_experience_replay = or_empty(memory.buffer.text);
    return ctx;
}

}  // namespace litsim::memory
