#pragma once

#include "seqbench/metrics.hpp"
#include "seqbench/oracle.hpp"
#include "seqbench/trajectory.hpp"

namespace seqbench {

SEQBENCH_DEFINE_ERROR(NoObservedValuesError);
SEQBENCH_DEFINE_ERROR(NoCategoricalColumnsError);
SEQBENCH_DEFINE_ERROR(NoUsableColumnError);
SEQBENCH_DEFINE_ERROR(DegenerateScoresError);
SEQBENCH_DEFINE_ERROR(SingleValueColumnError);

struct AuditThresholds {
    double alignment_min = 0.95;  // feedback-actionable cutoff
    double range_gap_min = 0.10;  // criterion R: top-1 vs runner-up / target range
    double sigma_gap_min = 0.5;   // criterion S: gap to best literature-typical row / sigma

    void check() const {
        if (!(alignment_min > 0.0 && alignment_min <= 1.0) || range_gap_min <= 0.0 ||
            sigma_gap_min <= 0.0)
            throw Error("invalid audit thresholds");
    }
};

/// Index of the dataset row with the best measured target (highest for
/// maximize, lowest for minimize); ties keep the lowest row index.
inline std::size_t published_best_row(const Dataset& data) {
    if (data.rows.empty()) throw Error("published_best_row of empty dataset");
    std::size_t best = 0;
    for (std::size_t i = 1; i < data.rows.size(); ++i) {
        double y = data.rows[i].second, b = data.rows[best].second;
        if (data.objective == Objective::maximize ? y > b : y < b) best = i;
    }
    return best;
}

/// Most frequent value of a categorical column in the source dataset;
/// frequency ties resolve to the lexicographically smallest value.
inline std::string literature_typical_value(const Dataset& data, const std::string& column) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : data.rows) {
        if (!r.first.has(column)) continue;
        const Value& v = r.first.values.at(column);
        if (!std::holds_alternative<std::string>(v))
            throw Error("literature_typical_value: column '" + column + "' is not categorical");
        ++counts[std::get<std::string>(v)];
    }
    if (counts.empty())
        throw NoObservedValuesError("column '" + column + "' has no observed values");
    std::string best;
    std::size_t best_n = 0;
    for (const auto& [value, n] : counts)  // map order makes ties lexicographic
        if (n > best_n) {
            best = value;
            best_n = n;
        }
    return best;
}

namespace detail {

/// Baseline design for per-value oracle probes: numerics at the dataset
/// per-column median, categoricals at the modal value.
inline Design profile_baseline(const Dataset& data, const ParameterSpace& space) {
    Design base;
    for (const ParameterSpec& p : space.params()) {
        if (p.is_numeric()) {
            std::vector<double> xs;
            for (const auto& r : data.rows)
                if (r.first.has(p.name)) xs.push_back(r.first.numeric(p.name));
            if (!xs.empty()) base.set(p.name, median(xs));
        } else {
            std::map<std::string, std::size_t> counts;
            for (const auto& r : data.rows)
                if (r.first.has(p.name)) ++counts[r.first.option(p.name)];
            if (counts.empty()) continue;
            std::string mode;
            std::size_t best_n = 0;
            for (const auto& [value, n] : counts)
                if (n > best_n) {
                    mode = value;
                    best_n = n;
                }
            base.set(p.name, mode);
        }
    }
    return base;
}

/// Observed values of a column ordered by dataset frequency rank
/// (descending count, lexicographic within ties).
inline std::vector<std::pair<std::string, std::size_t>> observed_by_frequency(
    const Dataset& data, const std::string& column) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : data.rows)
        if (r.first.has(column)) ++counts[std::get<std::string>(r.first.values.at(column))];
    std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

}  // namespace detail

/// Oracle prediction per observed value of `column`, other parameters held
/// at the dataset baseline (per-column median / modal value), ordered by
/// dataset frequency rank.
inline std::vector<std::pair<std::string, double>> oracle_reward_profile(
    const OracleModel& model, const Dataset& data, const ParameterSpace& space,
    const std::string& column) {
    if (!space.at(column).is_categorical())
        throw Error("oracle_reward_profile: '" + column + "' is not categorical");
    auto observed = detail::observed_by_frequency(data, column);
    if (observed.empty())
        throw NoObservedValuesError("column '" + column + "' has no observed values");
    Design base = detail::profile_baseline(data, space);
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [value, count] : observed) {
        Design probe = base;
        probe.set(column, value);
        out.emplace_back(value, predict(model, space, probe));
    }
    return out;
}

/// The categorical column whose oracle-score spread across observed values
/// is largest; if the published-best row is missing that column, descend
/// the spread ranking until one has a value there.
inline std::string key_categorical(const OracleModel& model, const Dataset& data,
                                   const ParameterSpace& space) {
    std::vector<std::pair<double, std::string>> spreads;  // (-spread for sort, name)
    for (const ParameterSpec& p : space.params()) {
        if (!p.is_categorical()) continue;
        auto observed = detail::observed_by_frequency(data, p.name);
        if (observed.empty()) continue;
        auto profile = oracle_reward_profile(model, data, space, p.name);
        double lo = profile.front().second, hi = profile.front().second;
        for (const auto& [value, reward] : profile) {
            lo = std::min(lo, reward);
            hi = std::max(hi, reward);
        }
        spreads.emplace_back(hi - lo, p.name);
    }
    if (spreads.empty())
        throw NoCategoricalColumnsError("space has no categorical column with observations");
    std::stable_sort(spreads.begin(), spreads.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    const Design& best = data.rows[published_best_row(data)].first;
    for (const auto& [spread, name] : spreads)
        if (best.has(name)) return name;
    throw NoUsableColumnError("published-best row has no value in any categorical column");
}

/// Where the published-best row's oracle score falls within the range of
/// oracle scores over all dataset rows; 1.0 means the oracle's argmax row
/// is the published-best row.
inline double alignment_ratio(const OracleModel& model, const Dataset& data,
                              const ParameterSpace& space) {
    if (data.rows.size() < 2) throw Error("alignment_ratio needs >= 2 rows");
    std::vector<double> scores;
    scores.reserve(data.rows.size());
    for (const auto& r : data.rows) scores.push_back(predict(model, space, r.first));
    double lo = *std::min_element(scores.begin(), scores.end());
    double hi = *std::max_element(scores.begin(), scores.end());
    if (lo == hi) throw DegenerateScoresError("all row predictions equal");
    double wlb = scores[published_best_row(data)];
    return data.objective == Objective::maximize ? (wlb - lo) / (hi - lo)
                                                 : (hi - wlb) / (hi - lo);
}

/// Fraction of counted proposals whose validated value in `column` equals
/// `best_value`. `at_iteration` (1-based) counts exactly one proposal per
/// trajectory; nullopt counts every iteration. Missing values are
/// non-matches.
inline double best_match_rate(const std::vector<Trajectory>& trajs, const std::string& column,
                              const std::string& best_value,
                              std::optional<int> at_iteration = std::nullopt) {
    if (trajs.empty()) throw Error("best_match_rate over no trajectories");
    std::size_t counted = 0, matched = 0;
    auto matches = [&](const TrajectoryStep& s) {
        return s.design.has(column) &&
               std::holds_alternative<std::string>(s.design.values.at(column)) &&
               s.design.option(column) == best_value;
    };
    for (const Trajectory& t : trajs) {
        if (at_iteration) {
            int k = *at_iteration;
            if (k < 1 || k > static_cast<int>(t.steps.size()))
                throw Error("best_match_rate: iteration out of range");
            ++counted;
            if (matches(t.steps[k - 1])) ++matched;
        } else {
            for (const TrajectoryStep& s : t.steps) {
                ++counted;
                if (matches(s)) ++matched;
            }
        }
    }
    return static_cast<double>(matched) / static_cast<double>(counted);
}

struct DivergenceResult {
    bool divergent = false;
    bool criterion_range = false;  // R
    bool criterion_sigma = false;  // S
    std::string best_value;
    std::string literature_typical;
};

/// A task is literature-divergent when the literature-typical value differs
/// from the published-best's value by a thresholded margin: criterion R
/// (top-1 per-value best vs runner-up, relative to the target range) OR
/// criterion S (top-1 vs the best literature-typical row, in target sigmas).
inline DivergenceResult classify_divergence(const OracleModel& /*model*/, const Dataset& data,
                                            const std::string& column,
                                            const AuditThresholds& thresholds) {
    thresholds.check();
    DivergenceResult res;
    res.literature_typical = literature_typical_value(data, column);
    const Design& best_design = data.rows[published_best_row(data)].first;
    if (!best_design.has(column))
        throw Error("classify_divergence: published-best row missing '" + column + "'");
    res.best_value = best_design.option(column);
    if (res.best_value == res.literature_typical) return res;  // not divergent

    // per-value best observed target over rows grouped by column value
    std::map<std::string, double> group_best;
    const bool maximize = data.objective == Objective::maximize;
    for (const auto& [design, target] : data.rows) {
        if (!design.has(column)) continue;
        const std::string& v = design.option(column);
        auto it = group_best.find(v);
        if (it == group_best.end())
            group_best[v] = target;
        else
            it->second = maximize ? std::max(it->second, target) : std::min(it->second, target);
    }
    if (group_best.size() < 2)
        throw SingleValueColumnError("column '" + column + "' has a single observed value");

    double best_target = group_best.at(res.best_value);
    double runner_up = 0.0;
    bool have_runner = false;
    for (const auto& [value, target] : group_best) {
        if (value == res.best_value) continue;
        if (!have_runner || (maximize ? target > runner_up : target < runner_up)) {
            runner_up = target;
            have_runner = true;
        }
    }
    std::vector<double> targets = data.targets();
    double range = *std::max_element(targets.begin(), targets.end()) -
                   *std::min_element(targets.begin(), targets.end());
    double sigma = pop_std(targets);
    double gap_r = maximize ? best_target - runner_up : runner_up - best_target;
    res.criterion_range = range > 0.0 && gap_r >= thresholds.range_gap_min * range;

    auto typical_it = group_best.find(res.literature_typical);
    if (typical_it != group_best.end()) {
        double gap_s = maximize ? best_target - typical_it->second
                                : typical_it->second - best_target;
        res.criterion_sigma = sigma > 0.0 && gap_s >= thresholds.sigma_gap_min * sigma;
    }
    res.divergent = res.criterion_range || res.criterion_sigma;
    return res;
}

/// A trajectory's most-proposed value in `column` (ties keep the value
/// proposed earliest) and that value's frequency rank in the dataset:
/// rank 1 = literature-typical, frequency ties share the smaller rank,
/// values unseen in the dataset get #distinct + 1.
inline std::pair<std::string, int> trajectory_modal_rank(const Trajectory& traj,
                                                         const Dataset& data,
                                                         const std::string& column) {
    std::map<std::string, std::size_t> counts;
    std::vector<std::string> first_seen;
    for (const TrajectoryStep& s : traj.steps) {
        if (!s.design.has(column)) continue;
        const std::string& v = s.design.option(column);
        if (counts[v]++ == 0) first_seen.push_back(v);
    }
    if (counts.empty())
        throw NoObservedValuesError("trajectory never proposes a value for '" + column + "'");
    std::string modal;
    std::size_t modal_n = 0;
    for (const std::string& v : first_seen)  // earliest-proposed wins ties
        if (counts[v] > modal_n) {
            modal = v;
            modal_n = counts[v];
        }

    auto observed = detail::observed_by_frequency(data, column);
    std::map<std::string, std::size_t> data_counts(observed.begin(), observed.end());
    auto it = data_counts.find(modal);
    if (it == data_counts.end())
        return {modal, static_cast<int>(observed.size()) + 1};
    int rank = 1;
    for (const auto& [value, n] : data_counts)
        if (n > it->second) ++rank;
    return {modal, rank};
}

// ---------------------------------------------------------------------------
// Per-task audit report and the cross-task summary.
// ---------------------------------------------------------------------------

struct MatchRates {
    double iter_first = 0.0;   // at iteration 1
    double iter_last = 0.0;    // at the final iteration
    double all_pooled = 0.0;   // every iteration pooled across runs
    double all_cell_mean = 0.0;  // mean over runs of per-run all-iteration rates
    int trajectories = 0;
};

struct AuditReport {
    std::string task;
    Objective objective = Objective::maximize;
    std::size_t best_row_index = 0;
    double best_row_target = 0.0;
    std::string key_column;
    std::string best_value;
    std::string literature_typical;
    double typical_frequency = 0.0;  // share of observed values in the key column
    bool typical_top10_majority = false;  // modal among the 10 best rows
    double alignment = 0.0;
    bool feedback_actionable = false;
    DivergenceResult divergence;
    std::map<std::string, MatchRates> per_condition;
    std::map<std::string, std::map<int, int>> modal_rank_tally;  // condition -> rank -> n
    std::vector<std::pair<std::string, double>> reward_profile;
};

/// Runs the full audit for one task over its trajectory corpus.
/// `key_override` forces the audited column (the manifest knob).
inline AuditReport audit_task(const OracleModel& model, const Dataset& data,
                              const ParameterSpace& space,
                              const std::vector<Trajectory>& trajs,
                              const AuditThresholds& thresholds,
                              const std::string& task_name,
                              const std::string& key_override = "") {
    thresholds.check();
    AuditReport rep;
    rep.task = task_name;
    rep.objective = data.objective;
    rep.best_row_index = published_best_row(data);
    rep.best_row_target = data.rows[rep.best_row_index].second;
    rep.key_column = key_override.empty() ? key_categorical(model, data, space) : key_override;
    const Design& best_design = data.rows[rep.best_row_index].first;
    if (!best_design.has(rep.key_column))
        throw NoUsableColumnError("published-best row missing '" + rep.key_column + "'");
    rep.best_value = best_design.option(rep.key_column);
    rep.literature_typical = literature_typical_value(data, rep.key_column);
    rep.alignment = alignment_ratio(model, data, space);
    rep.feedback_actionable = rep.alignment >= thresholds.alignment_min;
    rep.divergence = classify_divergence(model, data, rep.key_column, thresholds);
    rep.reward_profile = oracle_reward_profile(model, data, space, rep.key_column);

    auto observed = detail::observed_by_frequency(data, rep.key_column);
    std::size_t total = 0, typical_n = 0;
    for (const auto& [value, n] : observed) {
        total += n;
        if (value == rep.literature_typical) typical_n = n;
    }
    rep.typical_frequency = total ? static_cast<double>(typical_n) / total : 0.0;

    // modal value among the 10 best rows by target
    {
        std::vector<std::size_t> order(data.rows.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return data.objective == Objective::maximize
                       ? data.rows[a].second > data.rows[b].second
                       : data.rows[a].second < data.rows[b].second;
        });
        std::map<std::string, std::size_t> top_counts;
        for (std::size_t i = 0; i < order.size() && i < 10; ++i) {
            const Design& d = data.rows[order[i]].first;
            if (d.has(rep.key_column)) ++top_counts[d.option(rep.key_column)];
        }
        std::string top_mode;
        std::size_t top_n = 0;
        for (const auto& [value, n] : top_counts)
            if (n > top_n) {
                top_mode = value;
                top_n = n;
            }
        rep.typical_top10_majority = top_mode == rep.literature_typical;
    }

    std::map<std::string, std::vector<Trajectory>> by_condition;
    for (const Trajectory& t : trajs) by_condition[t.condition].push_back(t);
    for (const auto& [condition, group] : by_condition) {
        MatchRates rates;
        rates.trajectories = static_cast<int>(group.size());
        rates.iter_first = best_match_rate(group, rep.key_column, rep.best_value, 1);
        int last = static_cast<int>(group.front().steps.size());
        rates.iter_last = best_match_rate(group, rep.key_column, rep.best_value, last);
        rates.all_pooled = best_match_rate(group, rep.key_column, rep.best_value);
        double cell_sum = 0.0;
        for (const Trajectory& t : group)
            cell_sum += best_match_rate({t}, rep.key_column, rep.best_value);
        rates.all_cell_mean = cell_sum / static_cast<double>(group.size());
        rep.per_condition[condition] = rates;
        for (const Trajectory& t : group) {
            try {
                auto [modal, rank] = trajectory_modal_rank(t, data, rep.key_column);
                ++rep.modal_rank_tally[condition][rank];
            } catch (const NoObservedValuesError&) {
                // trajectory never proposed the column; nothing to tally
            }
        }
    }
    return rep;
}

inline nlohmann::json audit_report_to_json(const AuditReport& r) {
    nlohmann::json j;
    j["task"] = r.task;
    j["objective"] = to_string(r.objective);
    j["published_best"] = {{"row_index", r.best_row_index},
                           {"target", r.best_row_target},
                           {"key_value", r.best_value}};
    j["key_categorical"] = r.key_column;
    j["literature_typical"] = r.literature_typical;
    j["typical_frequency"] = r.typical_frequency;
    j["typical_top10_majority"] = r.typical_top10_majority;
    j["alignment_ratio"] = r.alignment;
    j["feedback_actionable"] = r.feedback_actionable;
    j["divergent"] = r.divergence.divergent;
    j["divergence_criteria"] = {{"range", r.divergence.criterion_range},
                                {"sigma", r.divergence.criterion_sigma}};
    nlohmann::json conditions = nlohmann::json::object();
    for (const auto& [condition, rates] : r.per_condition)
        conditions[condition] = {{"iter1", rates.iter_first},
                                 {"iter_last", rates.iter_last},
                                 {"all_pooled", rates.all_pooled},
                                 {"all_cell_mean", rates.all_cell_mean},
                                 {"trajectories", rates.trajectories}};
    j["match_rates"] = std::move(conditions);
    nlohmann::json tallies = nlohmann::json::object();
    for (const auto& [condition, ranks] : r.modal_rank_tally) {
        nlohmann::json t = nlohmann::json::object();
        for (const auto& [rank, n] : ranks) t[std::to_string(rank)] = n;
        tallies[condition] = std::move(t);
    }
    j["modal_rank_tally"] = std::move(tallies);
    nlohmann::json profile = nlohmann::json::array();
    for (const auto& [value, reward] : r.reward_profile)
        profile.push_back({{"value", value}, {"reward", reward}});
    j["reward_profile"] = std::move(profile);
    return j;
}

struct AuditSummaryRow {
    std::string subset;
    int n_tasks = 0;
    double aware_all = 0.0;     // mean all-iteration match rate, domain_aware
    double agnostic_all = 0.0;  // mean all-iteration match rate, domain_agnostic
    double gap_all = 0.0;       // aware - agnostic
    double gap_last = 0.0;      // same gap at the final iteration
};

/// The four nested literature-alignment subsets, each with the mean
/// domain-aware vs domain-agnostic match-rate gap. Tasks missing either
/// condition are skipped for the gap columns.
inline std::vector<AuditSummaryRow> audit_summary(const std::vector<AuditReport>& reports) {
    struct Acc {
        int n = 0;
        double aware = 0, agnostic = 0, gap_all = 0, gap_last = 0;
    };
    auto in_subset = [](const AuditReport& r, int idx) {
        switch (idx) {
            case 0: return r.typical_frequency >= 0.5;
            case 1: return r.typical_top10_majority;
            case 2: return r.literature_typical == r.best_value;
            case 3: return r.divergence.divergent;
        }
        return false;
    };
    static const char* names[4] = {"literature_majority", "literature_top10_majority",
                                   "literature_equals_best", "literature_divergent"};
    std::vector<AuditSummaryRow> rows;
    for (int s = 0; s < 4; ++s) {
        Acc acc;
        for (const AuditReport& r : reports) {
            if (!in_subset(r, s)) continue;
            auto aware = r.per_condition.find("domain_aware");
            auto agnostic = r.per_condition.find("domain_agnostic");
            if (aware == r.per_condition.end() || agnostic == r.per_condition.end()) continue;
            ++acc.n;
            acc.aware += aware->second.all_pooled;
            acc.agnostic += agnostic->second.all_pooled;
            acc.gap_all += aware->second.all_pooled - agnostic->second.all_pooled;
            acc.gap_last += aware->second.iter_last - agnostic->second.iter_last;
        }
        AuditSummaryRow row;
        row.subset = names[s];
        row.n_tasks = acc.n;
        if (acc.n > 0) {
            row.aware_all = acc.aware / acc.n;
            row.agnostic_all = acc.agnostic / acc.n;
            row.gap_all = acc.gap_all / acc.n;
            row.gap_last = acc.gap_last / acc.n;
        }
        rows.push_back(row);
    }
    return rows;
}

inline void write_audit_summary_csv(std::ostream& out,
                                    const std::vector<AuditSummaryRow>& rows) {
    out << "subset,n_tasks,aware_all,agnostic_all,gap_all,gap_last\n";
    for (const AuditSummaryRow& r : rows)
        out << r.subset << "," << r.n_tasks << "," << format_sig6(r.aware_all) << ","
            << format_sig6(r.agnostic_all) << "," << format_sig6(r.gap_all) << ","
            << format_sig6(r.gap_last) << "\n";
}

}  // namespace seqbench
