#pragma once

#include "litsim/workflow.hpp"

#include <json.hpp>

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace litsim::metrics {

using IdSet = std::set<std::string>;

struct Prf {
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;

    friend bool operator==(const Prf&, const Prf&) = default;
};

/// Harmonic mean, 0 when both are 0.
double f1(double recall, double precision);

/// Recall and precision of `found` against `truth`. Throws Error when
/// `truth` is empty; precision is 0 when `found` is empty.
Prf set_metrics(const IdSet& found, const IdSet& truth);
inline Prf selection_metrics(const IdSet& selected, const IdSet& truth) { return set_metrics(selected, truth); }
inline Prf retrieval_metrics(const IdSet& retrieved, const IdSet& truth) { return set_metrics(retrieved, truth); }

inline constexpr std::size_t default_cutoff = 100;

/// Mean over truth of max(1 - r_g / c, 0); ids missing from best_rank
/// contribute 0.
double avg_distance(const std::map<std::string, std::size_t>& best_rank, const IdSet& truth,
                    std::size_t cutoff = default_cutoff);

enum class DiscardVariant {
    /// |(R∩G)∖S| / |R∖S|
    Main,
    /// |(R∩G)∖(S∩G)| / |R∩G|
    Retention,
};

double gt_discard(const IdSet& retrieved, const IdSet& selected, const IdSet& truth, DiscardVariant variant);

/// Cumulative sets and best ranks of a trajectory through `through`
/// iterations (all iterations when larger than the trajectory).
struct CumulativeSets {
    IdSet retrieved;
    IdSet selected;
    std::map<std::string, std::size_t> best_rank;
};

CumulativeSets cumulative_sets(const workflow::Trajectory& trajectory, std::size_t through);

/// Every metric at one point of a run.
struct Snapshot {
    std::size_t iteration = 0;
    Prf selection;
    Prf retrieval;
    double avg_distance = 0.0;
    double gt_discard_main = 0.0;
    double gt_discard_retention = 0.0;

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

Snapshot compute(const CumulativeSets& sets, const IdSet& truth, std::size_t cutoff, std::size_t iteration);

double avg_distance(const workflow::Trajectory& trajectory, const IdSet& truth, std::size_t cutoff = default_cutoff);
double gt_discard(const workflow::Trajectory& trajectory, const IdSet& truth, DiscardVariant variant);

struct MetricsRow {
    std::string qid;
    workflow::TerminationReason terminated_reason = workflow::TerminationReason::MaxIterations;
    /// One entry per recorded iteration, cumulative through it.
    std::vector<Snapshot> per_iteration;
    /// Over the whole trajectory (equals per_iteration.back() when non-empty).
    Snapshot final;
};

std::vector<Snapshot> per_iteration(const workflow::Trajectory& trajectory, const IdSet& truth,
                                    std::size_t cutoff = default_cutoff);

MetricsRow evaluate(const workflow::Trajectory& trajectory, const IdSet& truth, std::size_t cutoff = default_cutoff);

struct Exclusion {
    std::string qid;
    std::string reason;
};

struct Report {
    std::size_t queries = 0;
    std::vector<Exclusion> excluded;
    Snapshot final;
    /// Macro means per iteration; runs that stopped early carry their last
    /// values forward.
    std::vector<Snapshot> per_iteration;
    std::vector<MetricsRow> rows;
};

/// Unweighted mean over rows. Throws Error when rows is empty.
Report aggregate(std::vector<MetricsRow> rows, std::vector<Exclusion> excluded = {});

nlohmann::ordered_json to_json(const Snapshot& s);
nlohmann::ordered_json to_json(const Report& report);
/// Aligned plain-text table of the final iteration, one line per query plus
/// the mean.
std::string render_table(const Report& report);
/// iteration,R,P,F1,Ret.R,Ret.P,Ret.F1,Avg.Dist,GT.Discard,GT.Discard.Retention
std::string render_curves_csv(const Report& report);

}  // namespace litsim::metrics
