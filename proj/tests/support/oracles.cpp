#include "oracles.hpp"

#include "litsim/text.hpp"

#include <algorithm>
#include <cmath>

namespace litsim::oracle {

namespace {

std::vector<std::string> doc_tokens(const corpus::Paper& p)
{
    return text::tokenize(p.title + "\n" + p.abstract);
}

void order(std::vector<Ranked>& r)
{
    std::sort(r.begin(), r.end(), [](const Ranked& a, const Ranked& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
}

template <class Pred>
std::size_t count_if_in(const Ids& s, Pred pred)
{
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), pred));
}

}  // namespace

std::vector<Ranked> bm25_ranking(std::span<const corpus::Paper> papers, const retrieval::ToolCall& call, double k1,
                                 double b)
{
    std::vector<std::vector<std::string>> docs;
    double total = 0.0;
    for (const auto& p : papers) {
        docs.push_back(doc_tokens(p));
        total += static_cast<double>(docs.back().size());
    }
    const double n = static_cast<double>(docs.size());
    const double avgdl = total / n;
    const auto q = text::tokenize(call.query_text);
    const std::set<std::string> terms(q.begin(), q.end());
    std::map<std::string, double> df;
    for (const auto& t : terms) {
        for (const auto& doc : docs) {
            df[t] += std::find(doc.begin(), doc.end(), t) != doc.end() ? 1.0 : 0.0;
        }
    }

    std::vector<Ranked> out;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        if (papers[d].date > call.date_constraint) {
            continue;
        }
        double score = 0.0;
        for (const auto& t : terms) {
            const double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), t));
            if (tf == 0.0) {
                continue;
            }
            const double idf = std::log((n - df.at(t) + 0.5) / (df.at(t) + 0.5) + 1.0);
            const double dl = static_cast<double>(docs[d].size());
            score += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        if (score > 0.0) {
            out.push_back({papers[d].id, score});
        }
    }
    order(out);
    return out;
}

std::vector<Ranked> cosine_ranking(std::span<const corpus::Paper> papers, const retrieval::ToolCall& call,
                                   const retrieval::Embedder& embedder)
{
    const auto q = embedder.embed(call.query_text);
    double qn = 0.0;
    for (double x : q) {
        qn += x * x;
    }
    std::vector<Ranked> out;
    for (const auto& p : papers) {
        if (p.date > call.date_constraint) {
            continue;
        }
        const auto v = embedder.embed(p.title + "\n" + p.abstract);
        double dot = 0.0;
        double vn = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            dot += q[i] * v[i];
            vn += v[i] * v[i];
        }
        const double denom = std::sqrt(qn) * std::sqrt(vn);
        out.push_back({p.id, denom == 0.0 ? 0.0 : dot / denom});
    }
    order(out);
    return out;
}

double recall(const Ids& found, const Ids& truth)
{
    return static_cast<double>(count_if_in(truth, [&](const auto& g) { return found.contains(g); })) /
           static_cast<double>(truth.size());
}

double precision(const Ids& found, const Ids& truth)
{
    if (found.empty()) {
        return 0.0;
    }
    return static_cast<double>(count_if_in(found, [&](const auto& s) { return truth.contains(s); })) /
           static_cast<double>(found.size());
}

double f1(double r, double p)
{
    return r + p == 0.0 ? 0.0 : 2.0 * r * p / (r + p);
}

double avg_distance(const std::map<std::string, std::size_t>& best_rank, const Ids& truth, std::size_t c)
{
    double sum = 0.0;
    for (const auto& g : truth) {
        if (best_rank.contains(g)) {
            sum += std::max(0.0, 1.0 - static_cast<double>(best_rank.at(g)) / static_cast<double>(c));
        }
    }
    return sum / static_cast<double>(truth.size());
}

double discard_main(const Ids& retrieved, const Ids& selected, const Ids& truth)
{
    const auto den = count_if_in(retrieved, [&](const auto& r) { return !selected.contains(r); });
    const auto num =
        count_if_in(retrieved, [&](const auto& r) { return truth.contains(r) && !selected.contains(r); });
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double discard_retention(const Ids& retrieved, const Ids& selected, const Ids& truth)
{
    const auto den = count_if_in(retrieved, [&](const auto& r) { return truth.contains(r); });
    const auto num =
        count_if_in(retrieved, [&](const auto& r) { return truth.contains(r) && !selected.contains(r); });
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace litsim::oracle
