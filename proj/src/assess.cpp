#include "litsim/assess.hpp"

#include "litsim/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

namespace litsim::assess {

using nlohmann::json;

namespace {

std::string lower_ascii(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool iequals_at(std::string_view hay, std::size_t pos, std::string_view needle)
{
    if (pos + needle.size() > hay.size()) {
        return false;
    }
    for (std::size_t i = 0; i < needle.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(hay[pos + i])) != needle[i]) {
            return false;
        }
    }
    return true;
}

std::string decode_entities(std::string_view s)
{
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out.push_back(s[i]);
            continue;
        }
        const auto semi = s.find(';', i);
        if (semi == std::string_view::npos || semi - i > 10) {
            out.push_back('&');
            continue;
        }
        const auto name = s.substr(i + 1, semi - i - 1);
        char32_t cp = 0;
        if (name == "amp") cp = '&';
        else if (name == "lt") cp = '<';
        else if (name == "gt") cp = '>';
        else if (name == "quot") cp = '"';
        else if (name == "apos") cp = '\'';
        else if (name == "nbsp") cp = ' ';
        else if (!name.empty() && name[0] == '#') {
            try {
                cp = (name.size() > 1 && (name[1] == 'x' || name[1] == 'X'))
                         ? static_cast<char32_t>(std::stoul(std::string(name.substr(2)), nullptr, 16))
                         : static_cast<char32_t>(std::stoul(std::string(name.substr(1))));
            } catch (const std::exception&) {
                cp = 0;
            }
        }
        if (cp == 0) {
            out.push_back('&');
            continue;
        }
        text::append_utf8(out, cp);
        i = semi;
    }
    return out;
}

std::string collapse_whitespace(std::string_view s)
{
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = true;
            continue;
        }
        if (space && !out.empty()) {
            out.push_back(' ');
        }
        space = false;
        out.push_back(c);
    }
    return out;
}

std::string attribute(std::string_view tag, std::string_view name)
{
    const std::string key = std::string(name) + "=\"";
    for (std::size_t p = 0; p + key.size() <= tag.size(); ++p) {
        if (iequals_at(tag, p, key) && (p == 0 || std::isspace(static_cast<unsigned char>(tag[p - 1])))) {
            const auto begin = p + key.size();
            const auto end = tag.find('"', begin);
            if (end != std::string_view::npos) {
                return std::string(tag.substr(begin, end - begin));
            }
        }
    }
    return {};
}

/// Replaces every <tag ...>...</tag> element by `replace(opening_tag)`.
template <class Fn>
std::string replace_elements(std::string_view html, std::string_view tag, Fn replace)
{
    std::string out;
    const std::string open = "<" + std::string(tag);
    const std::string close = "</" + std::string(tag) + ">";
    std::size_t i = 0;
    while (i < html.size()) {
        std::size_t p = i;
        while (p < html.size() && !(iequals_at(html, p, open) && p + open.size() < html.size() &&
                                    (html[p + open.size()] == '>' || html[p + open.size()] == ' ' ||
                                     html[p + open.size()] == '\n' || html[p + open.size()] == '\t'))) {
            ++p;
        }
        out.append(html.substr(i, p - i));
        if (p >= html.size()) {
            break;
        }
        const auto tag_end = html.find('>', p);
        if (tag_end == std::string_view::npos) {
            break;
        }
        const auto opening = html.substr(p, tag_end - p + 1);
        std::size_t q = tag_end + 1;
        while (q < html.size() && !iequals_at(html, q, close)) {
            ++q;
        }
        out += replace(opening);
        i = q >= html.size() ? html.size() : q + close.size();
    }
    return out;
}

std::string strip_tags(std::string_view html)
{
    std::string out;
    bool in_tag = false;
    for (char c : html) {
        if (c == '<') {
            in_tag = true;
            out.push_back(' ');
        } else if (c == '>' && in_tag) {
            in_tag = false;
        } else if (!in_tag) {
            out.push_back(c);
        }
    }
    return collapse_whitespace(decode_entities(out));
}

Assessment degraded_assessment()
{
    Assessment a;
    a.degraded = true;
    a.overview = "assessment failed";
    return a;
}

}  // namespace

std::string FullTextDoc::render() const
{
    std::string out;
    for (const auto& s : sections) {
        out += "## " + s.name + "\n" + s.text + "\n\n";
    }
    while (!out.empty() && out.back() == '\n') {
        out.pop_back();
    }
    return out;
}

bool is_stop_section(std::string_view name)
{
    const auto n = lower_ascii(name);
    for (const char* stop : {"reference", "bibliograph", "acknowledg"}) {
        if (n.find(stop) != std::string::npos) {
            return true;
        }
    }
    return false;
}

std::vector<Section> filter_sections(std::vector<Section> sections)
{
    std::erase_if(sections, [](const Section& s) { return is_stop_section(s.name); });
    return sections;
}

std::vector<Section> parse_html_sections(std::string_view html)
{
    std::string doc(html);
    for (const char* drop : {"script", "style", "head"}) {
        doc = replace_elements(doc, drop, [](std::string_view) { return std::string(" "); });
    }
    doc = replace_elements(doc, "math", [](std::string_view opening) {
        const auto alt = decode_entities(attribute(opening, "alttext"));
        return alt.empty() ? std::string(" ") : " " + alt + " ";
    });

    std::vector<Section> sections;
    std::string current_name;
    std::size_t body_start = 0;
    bool have_heading = false;
    auto flush = [&](std::size_t body_end) {
        auto body = strip_tags(std::string_view(doc).substr(body_start, body_end - body_start));
        if (have_heading && !current_name.empty() && !body.empty()) {
            sections.push_back({current_name, std::move(body)});
        }
    };
    std::size_t i = 0;
    while (i < doc.size()) {
        const auto lt = doc.find('<', i);
        if (lt == std::string::npos) {
            break;
        }
        if (lt + 2 < doc.size() && (doc[lt + 1] == 'h' || doc[lt + 1] == 'H') && doc[lt + 2] >= '1' &&
            doc[lt + 2] <= '6' && lt + 3 < doc.size() && (doc[lt + 3] == '>' || doc[lt + 3] == ' ')) {
            const std::string close = std::string("</h") + doc[lt + 2] + ">";
            const auto open_end = doc.find('>', lt);
            auto close_pos = doc.find(close, open_end);
            if (close_pos == std::string::npos) {
                close_pos = doc.find(std::string("</H") + doc[lt + 2] + ">", open_end);
            }
            if (open_end == std::string::npos || close_pos == std::string::npos) {
                break;
            }
            flush(lt);
            current_name = strip_tags(std::string_view(doc).substr(open_end + 1, close_pos - open_end - 1));
            have_heading = true;
            body_start = close_pos + close.size();
            i = body_start;
            continue;
        }
        i = lt + 1;
    }
    flush(doc.size());
    return filter_sections(std::move(sections));
}

std::filesystem::path store_path(const std::filesystem::path& store, std::string_view paper_id)
{
    std::string name(paper_id);
    std::replace(name.begin(), name.end(), '/', '_');
    return store / (name + ".json");
}

void write_store_entry(const std::filesystem::path& store, const FullTextDoc& doc)
{
    std::filesystem::create_directories(store);
    json j;
    j["paper_id"] = doc.paper_id;
    j["sections"] = json::array();
    for (const auto& s : doc.sections) {
        j["sections"].push_back({{"name", s.name}, {"text", s.text}});
    }
    std::ofstream out(store_path(store, doc.paper_id), std::ios::binary);
    out << j.dump(2) << "\n";
}

FullTextDoc fetch_fulltext(std::string_view paper_id, const std::filesystem::path& store, FullTextFetcher* fetcher)
{
    if (!store.empty()) {
        const auto path = store_path(store, paper_id);
        if (std::filesystem::exists(path)) {
            std::ifstream in(path);
            json j;
            try {
                j = json::parse(in);
            } catch (const json::exception& e) {
                throw NotFound("full text for " + std::string(paper_id) + " is unreadable: " + e.what());
            }
            FullTextDoc doc;
            doc.paper_id = j.value("paper_id", std::string(paper_id));
            doc.source = FullTextSource::LocalStore;
            for (const auto& s : j.value("sections", json::array())) {
                doc.sections.push_back({s.value("name", std::string{}), s.value("text", std::string{})});
            }
            doc.sections = filter_sections(std::move(doc.sections));
            return doc;
        }
    }
    if (fetcher != nullptr) {
        if (auto html = fetcher->fetch_html(paper_id)) {
            FullTextDoc doc;
            doc.paper_id = std::string(paper_id);
            doc.source = FullTextSource::Fetched;
            doc.sections = parse_html_sections(*html);
            if (!doc.sections.empty()) {
                return doc;
            }
        }
    }
    throw NotFound("no full text available for " + std::string(paper_id));
}

Extraction extract(policy::Policy& policy, const FullTextDoc& doc, std::string_view goal, StageLog& log)
{
    if (trim(goal).empty()) {
        throw Error("extraction goal for " + doc.paper_id + " is empty");
    }
    const auto full_text = doc.render();
    if (trim(full_text).empty()) {
        throw Error("full text for " + doc.paper_id + " is empty");
    }
    auto outcome = policy.extract({doc.paper_id, full_text, goal});
    log.absorb(outcome, "extract " + doc.paper_id);
    if (outcome.value) {
        outcome.value->summary = policy::cap_sentences(outcome.value->summary, 3);
        return *outcome.value;
    }
    Extraction failed;
    failed.summary = "extraction failed";
    failed.degraded = true;
    return failed;
}

std::vector<policy::CandidateView> candidate_views(const retrieval::CandidateSet& candidates,
                                                   const corpus::CorpusSnapshot& snapshot)
{
    std::vector<policy::CandidateView> views;
    views.reserve(candidates.hits.size());
    for (const auto& h : candidates.hits) {
        const auto* paper = snapshot.find(h.paper_id);
        if (paper == nullptr) {
            throw Error("candidate " + h.paper_id + " is not in the corpus snapshot");
        }
        views.push_back({paper->id, paper->title, paper->abstract, paper->date.to_string(), h.score, std::nullopt});
    }
    return views;
}

Assessment assess_abstract_only(policy::Policy& policy, const AssessInput& input, StageLog& log)
{
    if (input.candidates.hits.empty()) {
        return {};
    }
    const auto views = candidate_views(input.candidates, input.snapshot);
    auto outcome = policy.assess({AssessMode::AbstractOnly, input.user_query, input.node.text, input.checklist,
                                  input.node.node_id, input.iteration, 1, views});
    log.absorb(outcome, "assess node " + std::to_string(input.node.node_id));
    if (!outcome.value) {
        return degraded_assessment();
    }
    outcome.value->to_browse.clear();
    return *outcome.value;
}

Assessment assess_adaptive(policy::Policy& policy, const Browser& browser, const AssessInput& input, StageLog& log)
{
    if (input.candidates.hits.empty()) {
        return {};
    }
    const auto stage = "assess node " + std::to_string(input.node.node_id);
    const auto views = candidate_views(input.candidates, input.snapshot);
    auto first = policy.assess({AssessMode::Adaptive, input.user_query, input.node.text, input.checklist,
                                input.node.node_id, input.iteration, 1, views});
    log.absorb(first, stage);
    if (!first.value) {
        return degraded_assessment();
    }
    Assessment result = std::move(*first.value);
    if (result.to_browse.empty()) {
        return result;
    }

    std::vector<policy::CandidateView> browsed_views;
    for (const auto& [id, goal] : result.to_browse) {
        result.browsed[id] = goal;
        try {
            const auto doc = browser.fetch(id);
            auto view = std::find_if(views.begin(), views.end(), [&](const auto& v) { return v.paper_id == id; });
            policy::CandidateView v = *view;
            v.browser_summary = extract(policy, doc, goal, log);
            browsed_views.push_back(std::move(v));
        } catch (const NotFound& e) {
            log.failures.push_back(stage + ": " + e.what());
            result.discarded.push_back(id);
            result.reasons[id] = "fulltext_unavailable";
        }
    }
    result.to_browse.clear();
    if (browsed_views.empty()) {
        return result;
    }

    auto second = policy.assess({AssessMode::Adaptive, input.user_query, input.node.text, input.checklist,
                                 input.node.node_id, input.iteration, 2, browsed_views});
    log.absorb(second, stage + " (browse round)");
    if (!second.value) {
        for (const auto& v : browsed_views) {
            result.discarded.push_back(v.paper_id);
            result.reasons[v.paper_id] = "assessment_failed";
        }
        return result;
    }
    const auto& final_round = *second.value;
    result.selected.insert(result.selected.end(), final_round.selected.begin(), final_round.selected.end());
    result.discarded.insert(result.discarded.end(), final_round.discarded.begin(), final_round.discarded.end());
    for (const auto& [id, reason] : final_round.reasons) {
        result.reasons[id] = reason;
    }
    result.dropped_ids += final_round.dropped_ids;
    if (!final_round.overview.empty()) {
        result.overview += (result.overview.empty() ? "" : "\n") + final_round.overview;
    }
    return result;
}

}  // namespace litsim::assess
