#include "litsim/metrics.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace litsim;
using namespace litsim::metrics;

using Ranks = std::map<std::string, std::size_t>;

namespace {

workflow::IterationRecord iteration(std::size_t t, std::vector<std::pair<std::string, std::size_t>> hits,
                                    std::vector<std::string> selected_new)
{
    workflow::IterationRecord r;
    r.iteration = t;
    retrieval::CandidateSet set;
    for (auto& [id, rank] : hits) {
        set.hits.push_back({id, 1.0, rank});
    }
    r.tool_calls.push_back({1, set.call});
    r.candidate_sets.push_back(set);
    r.assessments.push_back({1, Assessment{}});
    r.selected_new = std::move(selected_new);
    return r;
}

}  // namespace

TEST_CASE("f1 is the harmonic mean with 0/0 defined as 0")
{
    CHECK(f1(0.0, 0.0) == 0.0);
    CHECK(f1(1.0, 1.0) == 1.0);
    CHECK(f1(0.5, 0.25) == doctest::Approx(1.0 / 3.0));
    CHECK(f1(0.3, 0.7) == f1(0.7, 0.3));
}

TEST_CASE("selection metrics on identical, empty and partial sets")
{
    const IdSet g{"a", "b"};
    CHECK(selection_metrics(g, g) == Prf{1.0, 1.0, 1.0});
    CHECK(selection_metrics({}, g) == Prf{0.0, 0.0, 0.0});
    const auto m = selection_metrics({"a", "x", "y", "z"}, g);
    CHECK(m.recall == 0.5);
    CHECK(m.precision == 0.25);
    CHECK_THROWS_AS(selection_metrics({"a"}, {}), Error);
}

TEST_CASE("retrieval metrics: twenty retrieved, two relevant, one found")
{
    IdSet r;
    for (int i = 0; i < 19; ++i) {
        r.insert("n" + std::to_string(i));
    }
    r.insert("g1");
    const auto m = retrieval_metrics(r, {"g1", "g2"});
    CHECK(m.recall == 0.5);
    CHECK(m.precision == 0.05);
    CHECK(m.f1 == doctest::Approx(0.0909).epsilon(0.001));
    CHECK(retrieval_metrics({"x"}, {"g"}) == Prf{});
    CHECK(retrieval_metrics({"g", "h"}, {"g"}).recall == 1.0);
}

TEST_CASE("average distance boundary cases")
{
    CHECK(avg_distance(Ranks{{"g", 1}}, IdSet{"g"}, 100) == doctest::Approx(0.99));
    CHECK(avg_distance(Ranks{{"g", 100}}, IdSet{"g"}, 100) == 0.0);
    CHECK(avg_distance(Ranks{{"g", 250}}, IdSet{"g"}, 100) == 0.0);
    CHECK(avg_distance(Ranks{}, IdSet{"g"}, 100) == 0.0);
    CHECK(avg_distance(Ranks{{"g1", 10}, {"g2", 60}}, IdSet{"g1", "g2"}, 100) == doctest::Approx(0.65));
}

TEST_CASE("gt discard variants")
{
    CHECK(gt_discard({"a", "b", "c"}, {}, {"a"}, DiscardVariant::Main) == doctest::Approx(1.0 / 3.0));
    CHECK(gt_discard({"a", "b", "c"}, {}, {"a"}, DiscardVariant::Retention) == 1.0);
    CHECK(gt_discard({"a", "b", "c"}, {"a"}, {"a"}, DiscardVariant::Main) == 0.0);
    CHECK(gt_discard({"a", "b", "c"}, {"a"}, {"a"}, DiscardVariant::Retention) == 0.0);
    CHECK(gt_discard({"b", "c"}, {}, {"a"}, DiscardVariant::Main) == 0.0);
    CHECK(gt_discard({"b", "c"}, {}, {"a"}, DiscardVariant::Retention) == 0.0);
    CHECK(gt_discard({"a"}, {"a"}, {"a"}, DiscardVariant::Main) == 0.0);
}

TEST_CASE("per-iteration rows use cumulative sets and best ranks")
{
    workflow::Trajectory t;
    t.qid = "q";
    t.iterations.push_back(iteration(1, {{"a", 40}, {"x", 1}}, {"x"}));
    t.iterations.push_back(iteration(2, {{"a", 10}, {"b", 60}}, {"a"}));
    const IdSet g{"a", "b"};
    const auto rows = per_iteration(t, g);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].retrieval.recall == 0.5);
    CHECK(rows[0].selection.recall == 0.0);
    CHECK(rows[0].avg_distance == doctest::Approx(0.30));
    CHECK(rows[0].gt_discard_main == 1.0);
    CHECK(rows[1].retrieval.recall == 1.0);
    CHECK(rows[1].selection.recall == 0.5);
    CHECK(rows[1].selection.precision == 0.5);
    CHECK(rows[1].avg_distance == doctest::Approx(0.65));
    CHECK(rows[1].gt_discard_main == 1.0);
    CHECK(rows[1].gt_discard_retention == 0.5);
    CHECK(evaluate(t, g).final == rows[1]);
    CHECK(avg_distance(t, g) == doctest::Approx(0.65));
}

TEST_CASE("a single-iteration trajectory has one row equal to the final row")
{
    workflow::Trajectory t;
    t.iterations.push_back(iteration(1, {{"a", 3}}, {"a"}));
    const auto row = evaluate(t, {"a", "b"});
    REQUIRE(row.per_iteration.size() == 1);
    CHECK(row.per_iteration[0] == row.final);
}

TEST_CASE("aggregate is a macro mean that carries short runs forward")
{
    MetricsRow r1;
    r1.qid = "q1";
    Snapshot s;
    s.iteration = 1;
    s.selection.recall = 0.4;
    r1.per_iteration = {s};
    r1.final = s;
    MetricsRow r2;
    r2.qid = "q2";
    Snapshot a = s;
    a.selection.recall = 0.2;
    Snapshot b = s;
    b.iteration = 2;
    b.selection.recall = 0.6;
    r2.per_iteration = {a, b};
    r2.final = b;

    const auto rep = aggregate({r1, r2}, {{"q3", "no ground-truth paper in the corpus"}});
    CHECK(rep.queries == 2);
    CHECK(rep.excluded.size() == 1);
    CHECK(rep.final.selection.recall == doctest::Approx(0.5));
    REQUIRE(rep.per_iteration.size() == 2);
    CHECK(rep.per_iteration[0].selection.recall == doctest::Approx(0.3));
    CHECK(rep.per_iteration[1].selection.recall == doctest::Approx(0.5));
    CHECK(to_json(rep)["excluded_count"] == 1);
    CHECK(render_table(rep).find("excluded: 1") != std::string::npos);

    const auto one = aggregate({r1});
    CHECK(one.final == r1.final);
    CHECK_THROWS_AS(aggregate({}), Error);
}

TEST_CASE("metrics agree with the set-comprehension oracle on random trajectories")
{
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> paper(0, 49);
    std::uniform_int_distribution<std::size_t> rank(1, 150);
    std::bernoulli_distribution coin(0.3);
    for (int trial = 0; trial < 200; ++trial) {
        workflow::Trajectory t;
        IdSet g;
        for (int i = 0; i < 1 + trial % 6; ++i) {
            g.insert("p" + std::to_string(paper(rng)));
        }
        oracle::Ids retrieved, selected;
        std::map<std::string, std::size_t> best;
        const int iterations = 1 + trial % 4;
        for (int it = 1; it <= iterations; ++it) {
            std::vector<std::pair<std::string, std::size_t>> hits;
            std::vector<std::string> fresh;
            for (int h = 0; h < 8; ++h) {
                const auto id = "p" + std::to_string(paper(rng));
                const auto r = rank(rng);
                hits.push_back({id, r});
                retrieved.insert(id);
                best[id] = best.contains(id) ? std::min(best[id], r) : r;
                if (coin(rng) && !selected.contains(id) &&
                    std::find(fresh.begin(), fresh.end(), id) == fresh.end()) {
                    fresh.push_back(id);
                }
            }
            std::sort(fresh.begin(), fresh.end());
            selected.insert(fresh.begin(), fresh.end());
            t.iterations.push_back(iteration(static_cast<std::size_t>(it), hits, fresh));
        }
        const auto row = evaluate(t, g);
        const double r = oracle::recall(selected, g);
        const double p = oracle::precision(selected, g);
        CHECK(row.final.selection.recall == doctest::Approx(r));
        CHECK(row.final.selection.precision == doctest::Approx(p));
        CHECK(row.final.selection.f1 == doctest::Approx(oracle::f1(r, p)));
        CHECK(row.final.retrieval.recall == doctest::Approx(oracle::recall(retrieved, g)));
        CHECK(row.final.retrieval.precision == doctest::Approx(oracle::precision(retrieved, g)));
        CHECK(row.final.avg_distance == doctest::Approx(oracle::avg_distance(best, g, 100)));
        CHECK(row.final.gt_discard_main == doctest::Approx(oracle::discard_main(retrieved, selected, g)));
        CHECK(row.final.gt_discard_retention == doctest::Approx(oracle::discard_retention(retrieved, selected, g)));
        for (std::size_t i = 1; i < row.per_iteration.size(); ++i) {
            CHECK(row.per_iteration[i].selection.recall >= row.per_iteration[i - 1].selection.recall);
            CHECK(row.per_iteration[i].retrieval.recall >= row.per_iteration[i - 1].retrieval.recall);
        }
        const auto& s = row.final.selection;
        CHECK(s.f1 <= std::sqrt(s.recall * s.precision) + 1e-12);
        CHECK(std::sqrt(s.recall * s.precision) <= (s.recall + s.precision) / 2 + 1e-12);
    }
}
