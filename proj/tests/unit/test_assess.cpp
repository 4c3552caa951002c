#include "litsim/assess.hpp"

#include "fixtures.hpp"

#include <doctest.h>

using namespace litsim;
using namespace litsim::assess;

namespace {

/// Hands back queued assessments by round and records what it was shown.
class FakePolicy final : public policy::Policy {
  public:
    std::optional<Assessment> round1;
    std::optional<Assessment> round2;
    std::vector<policy::AssessRequest> seen;
    std::vector<std::vector<policy::CandidateView>> shown;
    std::vector<std::string> extracted;

    policy::StageOutcome<Plan> plan(const policy::PlanRequest&) override { return {}; }

    policy::StageOutcome<Assessment> assess(const policy::AssessRequest& r) override
    {
        seen.push_back(r);
        shown.emplace_back(r.candidates.begin(), r.candidates.end());
        policy::StageOutcome<Assessment> out;
        out.value = r.round == 1 ? round1 : round2;
        if (!out.value) {
            out.failures.push_back("scripted failure");
        }
        return out;
    }

    policy::StageOutcome<Extraction> extract(const policy::ExtractRequest& r) override
    {
        extracted.emplace_back(r.paper_id);
        policy::StageOutcome<Extraction> out;
        out.value = Extraction{"Method", "evidence", "First. Second. Third. Fourth.", false};
        return out;
    }
};

retrieval::CandidateSet candidates(std::vector<std::string> ids)
{
    retrieval::CandidateSet s;
    s.call = {"neural retrieval", 10, Date(2024, 12, 31), 0};
    std::size_t rank = 0;
    for (auto& id : ids) {
        s.hits.push_back({std::move(id), 1.0 / static_cast<double>(++rank), rank});
    }
    return s;
}

struct Setup {
    corpus::CorpusSnapshot snapshot = testing::fixture_snapshot();
    memory::SubqueryTree tree{"neural passage retrieval", 10};
    retrieval::CandidateSet set = candidates({"2103.00007", "2103.00008", "2103.00009"});

    AssessInput input() const { return {"neural passage retrieval", "dense encoders", tree.node(0), 1, set, snapshot}; }
};

Assessment decided(std::vector<std::string> sel, std::vector<std::string> dis,
                   std::map<std::string, std::string> browse = {}, std::string overview = "o")
{
    Assessment a;
    a.selected = std::move(sel);
    a.discarded = std::move(dis);
    a.to_browse = std::move(browse);
    a.overview = std::move(overview);
    return a;
}

}  // namespace

TEST_CASE("html sections: headings split, math keeps alttext, references dropped")
{
    const std::string html = R"(<html><head><title>x</title><style>p{}</style></head><body>
        <h1>Paper</h1>
        <h2>1 Introduction</h2><p>We study <math alttext="x^2"><mi>x</mi></math> &amp; more.</p>
        <script>var a = "<h2>fake</h2>";</script>
        <h2 class="s">2 Method</h2><p>Loss&nbsp;is <b>contrastive</b>.</p>
        <h2>References</h2><p>[1] Someone.</p>
        <h3>Acknowledgments</h3><p>Thanks.</p>
        </body></html>)";
    const auto sections = parse_html_sections(html);
    REQUIRE(sections.size() == 2);
    CHECK(sections[0] == Section{"1 Introduction", "We study x^2 & more."});
    CHECK(sections[1] == Section{"2 Method", "Loss is contrastive ."});
}

TEST_CASE("stop sections")
{
    CHECK(is_stop_section("References"));
    CHECK(is_stop_section("BIBLIOGRAPHY"));
    CHECK(is_stop_section("Acknowledgements"));
    CHECK_FALSE(is_stop_section("Results"));
}

TEST_CASE("local store round trip and lookup order")
{
    testing::TempDir dir("store");
    FullTextDoc doc{"cs/0501010", {{"Intro", "text"}, {"References", "refs"}}, FullTextSource::LocalStore};
    write_store_entry(dir.path(), doc);
    CHECK(store_path(dir.path(), "cs/0501010").filename() == "cs_0501010.json");
    const auto back = fetch_fulltext("cs/0501010", dir.path());
    CHECK(back.sections == std::vector<Section>{{"Intro", "text"}});
    CHECK(back.render() == "## Intro\ntext");
    CHECK_THROWS_AS(fetch_fulltext("2101.00001", dir.path()), NotFound);
}

TEST_CASE("extraction needs a goal and caps the summary")
{
    FakePolicy p;
    StageLog log;
    const FullTextDoc doc{"x", {{"Intro", "body"}}, FullTextSource::LocalStore};
    CHECK_THROWS_AS(extract(p, doc, " ", log), Error);
    CHECK_THROWS_AS(extract(p, FullTextDoc{"x", {}, FullTextSource::LocalStore}, "goal", log), Error);
    const auto e = extract(p, doc, "goal", log);
    CHECK(e.summary == "First. Second. Third.");
    CHECK(log.policy_calls == 1);
}

TEST_CASE("abstract-only assessment")
{
    Setup s;
    FakePolicy p;
    StageLog log;
    SUBCASE("no candidates means no call")
    {
        const retrieval::CandidateSet empty = candidates({});
        const AssessInput in{"q", "", s.tree.node(0), 1, empty, s.snapshot};
        CHECK(assess_abstract_only(p, in, log) == Assessment{});
        CHECK(p.seen.empty());
    }
    SUBCASE("decision is passed through with titles shown")
    {
        p.round1 = decided({"2103.00007"}, {"2103.00008", "2103.00009"});
        const auto a = assess_abstract_only(p, s.input(), log);
        CHECK(a.selected == std::vector<std::string>{"2103.00007"});
        REQUIRE(p.shown.size() == 1);
        CHECK(p.shown[0].size() == 3);
        CHECK_FALSE(p.shown[0][0].title.empty());
    }
    SUBCASE("failure degrades")
    {
        const auto a = assess_abstract_only(p, s.input(), log);
        CHECK(a.degraded);
        CHECK(a.selected.empty());
        CHECK(log.failures.size() == 1);
    }
}

TEST_CASE("adaptive assessment browses once")
{
    Setup s;
    testing::TempDir store("browse");
    write_store_entry(store.path(), {"2103.00008", {{"Method", "dense dual encoder"}}, FullTextSource::LocalStore});
    const Browser browser(store.path());
    FakePolicy p;
    StageLog log;
    p.round1 = decided({"2103.00007"}, {}, {{"2103.00008", "which encoder?"}, {"2103.00009", "what data?"}}, "first");

    SUBCASE("browsed candidate is finalized and the unavailable one discarded")
    {
        p.round2 = decided({"2103.00008"}, {}, {}, "second");
        const auto a = assess_adaptive(p, browser, s.input(), log);
        CHECK(a.selected == std::vector<std::string>{"2103.00007", "2103.00008"});
        CHECK(a.discarded == std::vector<std::string>{"2103.00009"});
        CHECK(a.reasons.at("2103.00009") == "fulltext_unavailable");
        CHECK(a.browsed.size() == 2);
        CHECK(a.to_browse.empty());
        CHECK(a.overview == "first\nsecond");
        REQUIRE(p.seen.size() == 2);
        CHECK(p.seen[1].round == 2);
        REQUIRE(p.shown[1].size() == 1);
        CHECK(p.shown[1][0].browser_summary->rational == "Method");
        CHECK(p.extracted == std::vector<std::string>{"2103.00008"});
    }
    SUBCASE("a failed second round discards the browsed candidates")
    {
        const auto a = assess_adaptive(p, browser, s.input(), log);
        CHECK(a.selected == std::vector<std::string>{"2103.00007"});
        CHECK(a.reasons.at("2103.00008") == "assessment_failed");
        CHECK(std::find(a.discarded.begin(), a.discarded.end(), "2103.00008") != a.discarded.end());
    }
    SUBCASE("nothing to browse ends after one round")
    {
        p.round1 = decided({"2103.00007"}, {"2103.00008", "2103.00009"});
        assess_adaptive(p, browser, s.input(), log);
        CHECK(p.seen.size() == 1);
    }
}
