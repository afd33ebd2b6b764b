#pragma once

#include <functional>
#include <set>

#include "seqbench/metrics.hpp"

namespace seqbench {

SEQBENCH_DEFINE_ERROR(MissingBaselineError);

/// One competitor in the leaderboard analyses: an optimizer under one
/// prompt condition.
struct Entrant {
    std::string optimizer;
    std::string condition;

    bool operator<(const Entrant& o) const {
        return std::tie(optimizer, condition) < std::tie(o.optimizer, o.condition);
    }
    bool operator==(const Entrant& o) const {
        return optimizer == o.optimizer && condition == o.condition;
    }
    std::string label() const {
        return condition == "none" ? optimizer : optimizer + "@" + condition;
    }
};

/// Median-of-runs value per (metric, horizon) for one (task, entrant) cell.
struct CellSummary {
    std::string task;
    Entrant entrant;
    std::map<std::pair<std::string, int>, double> medians;
    int runs = 0;

    std::optional<double> median_of(const std::string& metric, int horizon) const {
        auto it = medians.find({metric, horizon});
        if (it == medians.end()) return std::nullopt;
        return it->second;
    }
};

inline std::vector<CellSummary> summarize_cells(const std::vector<MetricRow>& rows) {
    std::map<std::pair<std::string, Entrant>, std::map<std::pair<std::string, int>,
                                                       std::vector<double>>> acc;
    std::map<std::pair<std::string, Entrant>, std::set<int>> run_ids;
    for (const MetricRow& r : rows) {
        std::pair<std::string, Entrant> key{r.task, {r.optimizer, r.condition}};
        acc[key][{r.metric, r.horizon}].push_back(r.value);
        run_ids[key].insert(r.run_index);
    }
    std::vector<CellSummary> out;
    for (auto& [key, metrics] : acc) {
        CellSummary cell;
        cell.task = key.first;
        cell.entrant = key.second;
        cell.runs = static_cast<int>(run_ids[key].size());
        for (auto& [mk, values] : metrics) cell.medians[mk] = median(values);
        out.push_back(std::move(cell));
    }
    return out;
}

namespace detail {

inline double rel_diff(double a, double b) {
    double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

/// bsf_outcome medians are stored in original units; orient so larger is
/// better. bsf_auc is already oriented at metric time.
inline double orient_metric(const std::string& metric, double value, Objective direction) {
    if (metric == "bsf_outcome" && direction == Objective::minimize) return -value;
    return value;
}

}  // namespace detail

struct TieSetResult {
    Entrant argmax;
    std::vector<Entrant> tie_set;
};

/// Argmax of oriented median values plus every entrant within relative
/// tolerance of the max. Exact ties on the argmax resolve to the first
/// entrant in (optimizer, condition) order.
inline TieSetResult best_model_tie_set(const std::map<Entrant, double>& oriented_values,
                                       double tol = 1e-9) {
    if (oriented_values.size() < 2)
        throw Error("best_model_tie_set needs >= 2 entrants");
    TieSetResult res;
    bool first = true;
    double best = 0;
    for (const auto& [entrant, value] : oriented_values) {
        if (first || value > best) {
            best = value;
            res.argmax = entrant;
            first = false;
        }
    }
    for (const auto& [entrant, value] : oriented_values)
        if (detail::rel_diff(best, value) <= tol) res.tie_set.push_back(entrant);
    return res;
}

struct DisagreementRecord {
    std::string task;
    Entrant winner_auc;
    Entrant winner_outcome;  // argmax under the outcome metric
    std::vector<Entrant> outcome_tie_set;
    bool agree = false;
    int rank_of_auc_winner_under_outcome = 0;  // 1-based competition rank
};

struct DisagreementResult {
    double rate = 0.0;
    int tasks = 0;
    int disagreements = 0;
    std::vector<DisagreementRecord> records;
    std::map<std::pair<Entrant, Entrant>, int> confusion;  // (auc winner, outcome winner)
};

/// Metric disagreement at horizon k. Canonical rule (tie-aware-strict):
/// a task agrees iff the bsf_auc argmax winner belongs to the bsf_outcome
/// tie set. The permissive variant compares bare argmax winners instead;
/// it counts deterministic tie-breaks as disagreements, so treat its
/// output as non-canonical.
inline DisagreementResult metric_disagreement(
    const std::vector<CellSummary>& cells, int k,
    const std::map<std::string, Objective>& directions, double tol = 1e-9,
    bool permissive = false) {
    std::map<std::string, std::map<Entrant, std::pair<double, double>>> per_task;
    for (const CellSummary& c : cells) {
        auto auc = c.median_of("bsf_auc", k);
        auto outcome = c.median_of("bsf_outcome", k);
        if (!auc || !outcome) continue;
        Objective dir = directions.count(c.task) ? directions.at(c.task) : Objective::maximize;
        per_task[c.task][c.entrant] = {*auc,
                                       detail::orient_metric("bsf_outcome", *outcome, dir)};
    }
    DisagreementResult res;
    for (const auto& [task, entrants] : per_task) {
        if (entrants.size() < 2) continue;
        std::map<Entrant, double> auc_values, outcome_values;
        for (const auto& [entrant, values] : entrants) {
            auc_values[entrant] = values.first;
            outcome_values[entrant] = values.second;
        }
        TieSetResult auc_best = best_model_tie_set(auc_values, tol);
        TieSetResult outcome_best = best_model_tie_set(outcome_values, tol);

        DisagreementRecord rec;
        rec.task = task;
        rec.winner_auc = auc_best.argmax;
        rec.winner_outcome = outcome_best.argmax;
        rec.outcome_tie_set = outcome_best.tie_set;
        rec.agree = permissive
                        ? auc_best.argmax == outcome_best.argmax
                        : std::find(outcome_best.tie_set.begin(), outcome_best.tie_set.end(),
                                    auc_best.argmax) != outcome_best.tie_set.end();
        double winner_outcome_value = outcome_values.at(auc_best.argmax);
        int rank = 1;
        for (const auto& [entrant, value] : outcome_values)
            if (value > winner_outcome_value) ++rank;
        rec.rank_of_auc_winner_under_outcome = rank;

        ++res.tasks;
        if (!rec.agree) ++res.disagreements;
        ++res.confusion[{auc_best.argmax, outcome_best.argmax}];
        res.records.push_back(std::move(rec));
    }
    res.rate = res.tasks ? static_cast<double>(res.disagreements) / res.tasks : 0.0;
    return res;
}

struct PassRateResult {
    double rate = 0.0;
    int tasks = 0;
    int wins = 0;
    std::map<std::string, bool> per_task;
};

/// Fraction of tasks where the entrant's oriented median strictly exceeds
/// the baseline's; ties are not wins.
inline PassRateResult pass_rate_vs_baseline(const std::vector<CellSummary>& cells,
                                            const Entrant& entrant, const Entrant& baseline,
                                            const std::string& metric, int k,
                                            const std::map<std::string, Objective>& directions) {
    std::map<std::string, double> entrant_by_task, baseline_by_task;
    for (const CellSummary& c : cells) {
        auto v = c.median_of(metric, k);
        if (!v) continue;
        Objective dir = directions.count(c.task) ? directions.at(c.task) : Objective::maximize;
        double oriented = detail::orient_metric(metric, *v, dir);
        if (c.entrant == entrant) entrant_by_task[c.task] = oriented;
        if (c.entrant == baseline) baseline_by_task[c.task] = oriented;
    }
    PassRateResult res;
    for (const auto& [task, value] : entrant_by_task) {
        auto b = baseline_by_task.find(task);
        if (b == baseline_by_task.end())
            throw MissingBaselineError("no baseline cell for task '" + task + "'");
        bool win = value > b->second;
        res.per_task[task] = win;
        ++res.tasks;
        if (win) ++res.wins;
    }
    res.rate = res.tasks ? static_cast<double>(res.wins) / res.tasks : 0.0;
    return res;
}

struct WinRateResult {
    double rate = 0.0;
    int pairs = 0;
    int wins = 0;
    int excluded = 0;  // (task, optimizer) pairs missing one condition
    std::map<std::pair<std::string, std::string>, bool> per_pair;
};

/// Fraction of (task, optimizer) pairs where the domain_aware median
/// bsf_auc at horizon k strictly exceeds the matched domain_agnostic one.
inline WinRateResult paired_condition_win_rate(const std::vector<CellSummary>& cells,
                                               int k = 30) {
    std::map<std::pair<std::string, std::string>, std::map<std::string, double>> grid;
    for (const CellSummary& c : cells) {
        if (c.entrant.condition != "domain_aware" && c.entrant.condition != "domain_agnostic")
            continue;
        auto v = c.median_of("bsf_auc", k);
        if (!v) continue;
        grid[{c.task, c.entrant.optimizer}][c.entrant.condition] = *v;
    }
    WinRateResult res;
    for (const auto& [key, conditions] : grid) {
        auto aware = conditions.find("domain_aware");
        auto agnostic = conditions.find("domain_agnostic");
        if (aware == conditions.end() || agnostic == conditions.end()) {
            ++res.excluded;
            continue;
        }
        bool win = aware->second > agnostic->second;
        res.per_pair[key] = win;
        ++res.pairs;
        if (win) ++res.wins;
    }
    res.rate = res.pairs ? static_cast<double>(res.wins) / res.pairs : 0.0;
    return res;
}

struct ConvergentGapRow {
    std::string task;
    Entrant winner_auc;
    Entrant winner_outcome;
    std::optional<int> iter_auc_winner;
    std::optional<int> iter_outcome_winner;
};

struct ConvergentGapTable {
    std::vector<ConvergentGapRow> rows;
    std::optional<double> median_iter_auc;
    std::optional<double> median_iter_outcome;
};

/// For disagreement tasks whose two winners end within `tolerance`
/// (relative) of each other at horizon k: the iteration each winner's
/// median curve first reaches `fraction` of the shared optimum (the better
/// of the two endpoint medians). Minimize tasks route through the
/// fraction-of-optimum transform with the curves' own worst value as the
/// reference.
inline ConvergentGapTable convergent_gap_table(
    const DisagreementResult& disagreement,
    const std::map<std::pair<std::string, Entrant>, BsfCurve>& median_curves, int k,
    const std::map<std::string, Objective>& directions, double tolerance = 0.01,
    double fraction = 0.99) {
    ConvergentGapTable table;
    std::vector<double> iters_auc, iters_outcome;
    for (const DisagreementRecord& rec : disagreement.records) {
        if (rec.agree) continue;
        auto auc_curve = median_curves.find({rec.task, rec.winner_auc});
        auto out_curve = median_curves.find({rec.task, rec.winner_outcome});
        if (auc_curve == median_curves.end() || out_curve == median_curves.end()) continue;
        const BsfCurve& ca = auc_curve->second;
        const BsfCurve& co = out_curve->second;
        if (k > ca.length() || k > co.length()) continue;
        double end_a = bsf_outcome_at(ca, k), end_o = bsf_outcome_at(co, k);
        if (detail::rel_diff(end_a, end_o) > tolerance) continue;

        Objective dir =
            directions.count(rec.task) ? directions.at(rec.task) : Objective::maximize;
        double shared = dir == Objective::maximize ? std::max(end_a, end_o)
                                                   : std::min(end_a, end_o);
        ConvergentGapRow row;
        row.task = rec.task;
        row.winner_auc = rec.winner_auc;
        row.winner_outcome = rec.winner_outcome;
        if (dir == Objective::maximize) {
            row.iter_auc_winner = iter_to_fraction(ca, shared, fraction);
            row.iter_outcome_winner = iter_to_fraction(co, shared, fraction);
        } else {
            double worst = std::max(*std::max_element(ca.values.begin(), ca.values.end()),
                                    *std::max_element(co.values.begin(), co.values.end()));
            row.iter_auc_winner = iter_to_fraction(ca, shared, fraction, worst);
            row.iter_outcome_winner = iter_to_fraction(co, shared, fraction, worst);
        }
        if (row.iter_auc_winner) iters_auc.push_back(*row.iter_auc_winner);
        if (row.iter_outcome_winner) iters_outcome.push_back(*row.iter_outcome_winner);
        table.rows.push_back(std::move(row));
    }
    if (!iters_auc.empty()) table.median_iter_auc = median(iters_auc);
    if (!iters_outcome.empty()) table.median_iter_outcome = median(iters_outcome);
    return table;
}

/// Pointwise median of per-run best-so-far curves for every (task, entrant)
/// cell; the curve input for convergent_gap_table.
inline std::map<std::pair<std::string, Entrant>, BsfCurve> median_bsf_curves(
    const std::vector<Trajectory>& trajs, const std::map<std::string, Objective>& directions) {
    std::map<std::pair<std::string, Entrant>, std::vector<BsfCurve>> grouped;
    for (const Trajectory& t : trajs) {
        Objective dir = directions.count(t.task) ? directions.at(t.task) : Objective::maximize;
        grouped[{t.task, {t.optimizer, t.condition}}].push_back(best_so_far(t, dir));
    }
    std::map<std::pair<std::string, Entrant>, BsfCurve> out;
    for (const auto& [key, curves] : grouped) {
        std::size_t len = curves.front().values.size();
        for (const BsfCurve& c : curves) len = std::min(len, c.values.size());
        BsfCurve med;
        med.direction = curves.front().direction;
        for (std::size_t i = 0; i < len; ++i) {
            std::vector<double> vals;
            vals.reserve(curves.size());
            for (const BsfCurve& c : curves) vals.push_back(c.values[i]);
            med.values.push_back(median(vals));
        }
        out[key] = std::move(med);
    }
    return out;
}

enum class ExclusionUnit { optimizer, task };

/// Recomputes a rate once per excluded unit (leave-one-out robustness).
inline std::vector<std::pair<std::string, double>> leave_one_out_rate(
    const std::vector<CellSummary>& cells, ExclusionUnit unit,
    const std::function<double(const std::vector<CellSummary>&)>& rate_fn) {
    std::set<std::string> units;
    for (const CellSummary& c : cells)
        units.insert(unit == ExclusionUnit::optimizer ? c.entrant.optimizer : c.task);
    if (units.size() < 2) throw Error("leave_one_out_rate needs >= 2 units");
    std::vector<std::pair<std::string, double>> out;
    for (const std::string& excluded : units) {
        std::vector<CellSummary> kept;
        for (const CellSummary& c : cells) {
            const std::string& key =
                unit == ExclusionUnit::optimizer ? c.entrant.optimizer : c.task;
            if (key != excluded) kept.push_back(c);
        }
        out.emplace_back(excluded, rate_fn(kept));
    }
    return out;
}

}  // namespace seqbench
