#include "litsim/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace litsim::metrics {

using nlohmann::ordered_json;

namespace {

std::size_t intersection_size(const IdSet& a, const IdSet& b)
{
    std::size_t n = 0;
    for (const auto& x : a) {
        n += b.contains(x) ? 1 : 0;
    }
    return n;
}

double ratio(std::size_t num, std::size_t den)
{
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

Snapshot mean_of(std::span<const Snapshot> items, std::size_t iteration)
{
    Snapshot m;
    m.iteration = iteration;
    for (const auto& s : items) {
        m.selection.recall += s.selection.recall;
        m.selection.precision += s.selection.precision;
        m.selection.f1 += s.selection.f1;
        m.retrieval.recall += s.retrieval.recall;
        m.retrieval.precision += s.retrieval.precision;
        m.retrieval.f1 += s.retrieval.f1;
        m.avg_distance += s.avg_distance;
        m.gt_discard_main += s.gt_discard_main;
        m.gt_discard_retention += s.gt_discard_retention;
    }
    const auto n = static_cast<double>(items.size());
    for (double* v : {&m.selection.recall, &m.selection.precision, &m.selection.f1, &m.retrieval.recall,
                      &m.retrieval.precision, &m.retrieval.f1, &m.avg_distance, &m.gt_discard_main,
                      &m.gt_discard_retention}) {
        *v /= n;
    }
    return m;
}

}  // namespace

double f1(double recall, double precision)
{
    const double sum = recall + precision;
    return sum == 0.0 ? 0.0 : 2.0 * recall * precision / sum;
}

Prf set_metrics(const IdSet& found, const IdSet& truth)
{
    if (truth.empty()) {
        throw Error("metrics need a non-empty ground truth");
    }
    const auto hit = intersection_size(found, truth);
    Prf m;
    m.recall = ratio(hit, truth.size());
    m.precision = ratio(hit, found.size());
    m.f1 = f1(m.recall, m.precision);
    return m;
}

double avg_distance(const std::map<std::string, std::size_t>& best_rank, const IdSet& truth, std::size_t cutoff)
{
    if (truth.empty() || cutoff == 0) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& g : truth) {
        auto it = best_rank.find(g);
        if (it == best_rank.end()) {
            continue;
        }
        total += std::max(1.0 - static_cast<double>(it->second) / static_cast<double>(cutoff), 0.0);
    }
    return total / static_cast<double>(truth.size());
}

double gt_discard(const IdSet& retrieved, const IdSet& selected, const IdSet& truth, DiscardVariant variant)
{
    std::size_t lost = 0;
    std::size_t relevant_retrieved = 0;
    std::size_t unselected = 0;
    for (const auto& id : retrieved) {
        const bool kept = selected.contains(id);
        const bool relevant = truth.contains(id);
        relevant_retrieved += relevant ? 1 : 0;
        unselected += kept ? 0 : 1;
        lost += (relevant && !kept) ? 1 : 0;
    }
    return variant == DiscardVariant::Main ? ratio(lost, unselected) : ratio(lost, relevant_retrieved);
}

CumulativeSets cumulative_sets(const workflow::Trajectory& trajectory, std::size_t through)
{
    CumulativeSets out;
    const auto n = std::min(through, trajectory.iterations.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = trajectory.iterations[i];
        for (const auto& set : r.candidate_sets) {
            for (const auto& h : set.hits) {
                out.retrieved.insert(h.paper_id);
                auto [it, inserted] = out.best_rank.emplace(h.paper_id, h.rank);
                if (!inserted) {
                    it->second = std::min(it->second, h.rank);
                }
            }
        }
        out.selected.insert(r.selected_new.begin(), r.selected_new.end());
    }
    return out;
}

Snapshot compute(const CumulativeSets& sets, const IdSet& truth, std::size_t cutoff, std::size_t iteration)
{
    Snapshot s;
    s.iteration = iteration;
    s.selection = selection_metrics(sets.selected, truth);
    s.retrieval = retrieval_metrics(sets.retrieved, truth);
    s.avg_distance = avg_distance(sets.best_rank, truth, cutoff);
    s.gt_discard_main = gt_discard(sets.retrieved, sets.selected, truth, DiscardVariant::Main);
    s.gt_discard_retention = gt_discard(sets.retrieved, sets.selected, truth, DiscardVariant::Retention);
    return s;
}

double avg_distance(const workflow::Trajectory& trajectory, const IdSet& truth, std::size_t cutoff)
{
    return avg_distance(cumulative_sets(trajectory, trajectory.iterations.size()).best_rank, truth, cutoff);
}

double gt_discard(const workflow::Trajectory& trajectory, const IdSet& truth, DiscardVariant variant)
{
    const auto sets = cumulative_sets(trajectory, trajectory.iterations.size());
    return gt_discard(sets.retrieved, sets.selected, truth, variant);
}

std::vector<Snapshot> per_iteration(const workflow::Trajectory& trajectory, const IdSet& truth, std::size_t cutoff)
{
    std::vector<Snapshot> out;
    for (std::size_t t = 1; t <= trajectory.iterations.size(); ++t) {
        out.push_back(compute(cumulative_sets(trajectory, t), truth, cutoff, trajectory.iterations[t - 1].iteration));
    }
    return out;
}

MetricsRow evaluate(const workflow::Trajectory& trajectory, const IdSet& truth, std::size_t cutoff)
{
    MetricsRow row;
    row.qid = trajectory.qid;
    row.terminated_reason = trajectory.terminated_reason;
    row.per_iteration = per_iteration(trajectory, truth, cutoff);
    row.final = compute(cumulative_sets(trajectory, trajectory.iterations.size()), truth, cutoff,
                        trajectory.iterations.size());
    return row;
}

Report aggregate(std::vector<MetricsRow> rows, std::vector<Exclusion> excluded)
{
    if (rows.empty()) {
        throw Error("no usable queries to aggregate");
    }
    Report report;
    report.queries = rows.size();
    report.excluded = std::move(excluded);

    std::vector<Snapshot> finals;
    std::size_t longest = 0;
    for (const auto& r : rows) {
        finals.push_back(r.final);
        longest = std::max(longest, r.per_iteration.size());
    }
    report.final = mean_of(finals, longest);
    for (std::size_t t = 1; t <= longest; ++t) {
        std::vector<Snapshot> at;
        for (const auto& r : rows) {
            at.push_back(r.per_iteration.empty() ? Snapshot{} : r.per_iteration[std::min(t, r.per_iteration.size()) - 1]);
        }
        report.per_iteration.push_back(mean_of(at, t));
    }
    report.rows = std::move(rows);
    return report;
}

ordered_json to_json(const Snapshot& s)
{
    ordered_json j;
    j["iteration"] = s.iteration;
    j["R"] = s.selection.recall;
    j["P"] = s.selection.precision;
    j["F1"] = s.selection.f1;
    j["Ret.R"] = s.retrieval.recall;
    j["Ret.P"] = s.retrieval.precision;
    j["Ret.F1"] = s.retrieval.f1;
    j["Avg.Dist"] = s.avg_distance;
    j["GT.Discard"] = s.gt_discard_main;
    j["GT.Discard.Retention"] = s.gt_discard_retention;
    return j;
}

ordered_json to_json(const Report& report)
{
    ordered_json j;
    j["queries"] = report.queries;
    ordered_json excluded = ordered_json::array();
    for (const auto& e : report.excluded) {
        excluded.push_back({{"qid", e.qid}, {"reason", e.reason}});
    }
    j["excluded_count"] = report.excluded.size();
    j["excluded"] = std::move(excluded);
    j["final"] = to_json(report.final);
    ordered_json curve = ordered_json::array();
    for (const auto& s : report.per_iteration) {
        curve.push_back(to_json(s));
    }
    j["per_iteration"] = std::move(curve);
    ordered_json rows = ordered_json::array();
    for (const auto& r : report.rows) {
        ordered_json row;
        row["qid"] = r.qid;
        row["terminated_reason"] = workflow::to_string(r.terminated_reason);
        row["final"] = to_json(r.final);
        ordered_json its = ordered_json::array();
        for (const auto& s : r.per_iteration) {
            its.push_back(to_json(s));
        }
        row["per_iteration"] = std::move(its);
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j;
}

std::string render_table(const Report& report)
{
    std::size_t width = 4;
    for (const auto& r : report.rows) {
        width = std::max(width, r.qid.size());
    }
    std::string out = fmt::format("{:<{}}  {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>8} {:>8}\n", "qid", width, "R",
                                  "P", "F1", "Ret.R", "Ret.P", "Ret.F1", "Avg.Dist", "GT.Disc");
    auto line = [&](std::string_view label, const Snapshot& s) {
        out += fmt::format("{:<{}}  {:>6.3f} {:>6.3f} {:>6.3f} {:>6.3f} {:>6.3f} {:>6.3f} {:>8.3f} {:>7.2f}%\n", label,
                           width, s.selection.recall, s.selection.precision, s.selection.f1, s.retrieval.recall,
                           s.retrieval.precision, s.retrieval.f1, s.avg_distance, 100.0 * s.gt_discard_main);
    };
    for (const auto& r : report.rows) {
        line(r.qid, r.final);
    }
    line("mean", report.final);
    out += fmt::format("queries: {}  excluded: {}\n", report.queries, report.excluded.size());
    for (const auto& e : report.excluded) {
        out += fmt::format("  excluded {}: {}\n", e.qid, e.reason);
    }
    return out;
}

std::string render_curves_csv(const Report& report)
{
    std::string out = "iteration,R,P,F1,Ret.R,Ret.P,Ret.F1,Avg.Dist,GT.Discard,GT.Discard.Retention\n";
    for (const auto& s : report.per_iteration) {
        out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", s.iteration,
                           s.selection.recall, s.selection.precision, s.selection.f1, s.retrieval.recall,
                           s.retrieval.precision, s.retrieval.f1, s.avg_distance, s.gt_discard_main,
                           s.gt_discard_retention);
    }
    return out;
}

}  // namespace litsim::metrics
