#include "litsim/memory.hpp"

#include <doctest.h>

using namespace litsim;
using namespace litsim::memory;

namespace {

const Date kDate(2021, 12, 31);

SubqueryAction derive(std::size_t src, std::string text, std::size_t k = 10)
{
    return {LinkType::Derive, src, std::move(text), k};
}

SubqueryAction expand(std::size_t src, std::string text, std::size_t k = 10)
{
    return {LinkType::Expand, src, std::move(text), k};
}

SubqueryAction cont(std::size_t src, std::size_t k = 10)
{
    return {LinkType::Continue, src, "", k};
}

Plan plan_of(std::vector<SubqueryAction> subs)
{
    Plan p;
    p.subqueries = std::move(subs);
    return p;
}

retrieval::CandidateSet result_for(const PlannedCall& pc, std::vector<std::string> ids, bool exhausted)
{
    retrieval::CandidateSet set;
    set.call = pc.call;
    std::size_t rank = pc.call.page * pc.call.k;
    for (auto& id : ids) {
        set.hits.push_back({std::move(id), 1.0, ++rank});
    }
    set.exhausted = exhausted;
    return set;
}

Assessment selecting(std::vector<std::string> ids, std::string overview = "ov")
{
    Assessment a;
    a.selected = std::move(ids);
    a.overview = std::move(overview);
    return a;
}

}  // namespace

TEST_CASE("a new tree holds only the root")
{
    const SubqueryTree tree("original query", 10);
    REQUIRE(tree.size() == 1);
    CHECK(tree.node(0).link_type == LinkType::Root);
    CHECK(tree.node(0).iteration_created == 0);
    CHECK(tree.node(0).text == "original query");
    CHECK_THROWS_AS(tree.node(1), Error);
}

TEST_CASE("derive and expand append children in plan order")
{
    SubqueryTree tree("q", 10);
    const auto app = apply_plan(tree, plan_of({derive(0, "a"), expand(0, "b", 5)}), 1, kDate, 10);
    REQUIRE(app.calls.size() == 2);
    CHECK(app.calls[0].node_id == 1);
    CHECK(app.calls[1].node_id == 2);
    CHECK(app.calls[1].call == retrieval::ToolCall{"b", 5, kDate, 0});
    CHECK(tree.node(2).link_type == LinkType::Expand);
    CHECK(tree.node(2).iteration_created == 1);
    CHECK(tree.node(1).next_page == 1);
}

TEST_CASE("continue pages an existing node forward with its stored k")
{
    SubqueryTree tree("q", 10);
    apply_plan(tree, plan_of({derive(0, "a", 3)}), 1, kDate, 10);
    const auto first = apply_plan(tree, plan_of({cont(1, 7)}), 2, kDate, 10);
    REQUIRE(first.calls.size() == 1);
    CHECK(first.calls[0].call == retrieval::ToolCall{"a", 3, kDate, 1});
    const auto second = apply_plan(tree, plan_of({cont(1)}), 3, kDate, 10);
    CHECK(second.calls[0].call.page == 2);
    CHECK(tree.size() == 2);
}

TEST_CASE("continue on the root and unknown sources are rejected without touching the tree")
{
    SubqueryTree tree("q", 10);
    apply_plan(tree, plan_of({derive(0, "a")}), 1, kDate, 10);
    const auto before = tree;
    CHECK_THROWS_AS(apply_plan(tree, plan_of({derive(1, "b"), cont(0)}), 2, kDate, 10), PlanRejected);
    CHECK(tree == before);
    CHECK_THROWS_AS(apply_plan(tree, plan_of({derive(0, "b"), derive(2, "c")}), 2, kDate, 10), PlanRejected);
    CHECK(tree == before);
    CHECK_THROWS_AS(apply_plan(tree, plan_of({derive(0, "  ")}), 2, kDate, 10), PlanRejected);
    CHECK_THROWS_AS(apply_plan(tree, plan_of({derive(0, "x", 0)}), 2, kDate, 10), PlanRejected);
    CHECK(tree == before);
}

TEST_CASE("target k above the cap is clamped and noted")
{
    SubqueryTree tree("q", 10);
    const auto app = apply_plan(tree, plan_of({derive(0, "a", 25)}), 1, kDate, 10);
    CHECK(app.calls[0].call.k == 10);
    CHECK(tree.node(1).target_k == 10);
    REQUIRE(app.notes.size() == 1);
}

TEST_CASE("record_results merges ids without duplicates and tracks exhaustion")
{
    SubqueryTree tree("q", 10);
    const auto app = apply_plan(tree, plan_of({derive(0, "a", 2)}), 1, kDate, 10);
    record_results(tree, 1, 1, result_for(app.calls[0], {"p1", "p2"}, false), selecting({"p2"}));
    CHECK_FALSE(tree.node(1).exhausted);

    const auto next = apply_plan(tree, plan_of({cont(1)}), 2, kDate, 10);
    record_results(tree, 1, 2, result_for(next.calls[0], {"p3", "p1"}, true), selecting({"p3"}, "second"));
    const auto& n = tree.node(1);
    CHECK(n.retrieved_ids == std::vector<std::string>{"p1", "p2", "p3"});
    CHECK(n.selected_ids == std::vector<std::string>{"p2", "p3"});
    CHECK(n.overview == "second");
    CHECK(n.exhausted);
    CHECK(n.touches.size() == 2);

    const auto skipped = apply_plan(tree, plan_of({cont(1)}), 3, kDate, 10);
    CHECK(skipped.calls.empty());
    CHECK(skipped.notes.size() == 1);
}

TEST_CASE("selecting an id outside the candidates violates the contract")
{
    SubqueryTree tree("q", 10);
    const auto app = apply_plan(tree, plan_of({derive(0, "a")}), 1, kDate, 10);
    CHECK_THROWS_AS(record_results(tree, 1, 1, result_for(app.calls[0], {"p1"}, true), selecting({"zz"})),
                    AssessmentContractError);
}

TEST_CASE("experience buffer truncates by code points")
{
    ExperienceBuffer b{"old", 4};
    b = update_buffer(b, "\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9");
    CHECK(b.text == "\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9");
    CHECK(update_buffer(b, "new").text == "new");
}

TEST_CASE("render_state shows None before any history")
{
    const ResearchMemory mem("find graph papers", 10, 100);
    const auto ctx = render_state(mem, 1);
    CHECK(ctx.current_iteration == 1);
    CHECK(ctx.last_iteration_state == "None");
    CHECK(ctx.previous_iteration_state == "None");
    CHECK(ctx.last_checklist == "None");
    CHECK(ctx.last_experience_replay == "None");
    CHECK(ctx.all_subqueries == "id=0 source=0 link=root iteration=0 text=\"find graph papers\"\n");
}

TEST_CASE("render_state splits the latest iteration from earlier ones")
{
    ResearchMemory mem("q", 10, 100);
    auto a1 = apply_plan(mem.tree, plan_of({derive(0, "alpha", 2)}), 1, kDate, 10);
    record_results(mem.tree, 1, 1, result_for(a1.calls[0], {"p1", "p2"}, false), selecting({"p1"}, "o1"));
    auto a2 = apply_plan(mem.tree, plan_of({cont(1), expand(0, "beta")}), 2, kDate, 10);
    record_results(mem.tree, 1, 2, result_for(a2.calls[0], {"p3"}, true), selecting({}, "o2"));
    record_results(mem.tree, 2, 2, result_for(a2.calls[1], {"p4"}, true), selecting({"p4"}, "o3"));
    mem.last_checklist = "check";
    mem.buffer = update_buffer(mem.buffer, "memory");

    const auto ctx = render_state(mem, 3);
    CHECK(ctx.last_iteration_state ==
          "id=1 text=\"alpha\" target_k=2 retrieved=1 selected=0 overview=\"o2\"\n"
          "id=2 text=\"beta\" target_k=10 retrieved=1 selected=1 overview=\"o3\"\n");
    CHECK(ctx.previous_iteration_state ==
          "iteration 1:\nid=1 text=\"alpha\" target_k=2 retrieved=2 selected=1 overview=\"o1\"\n");
    CHECK(ctx.last_checklist == "check");
    CHECK(ctx.last_experience_replay == "memory");
    CHECK(ctx.all_subqueries.find("id=2 source=0 link=expand iteration=2 text=\"beta\"") != std::string::npos);
    CHECK(render_state(mem, 3) == ctx);
}
