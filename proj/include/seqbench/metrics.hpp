#pragma once

#include <iostream>
#include <optional>
#include <sstream>

#include "seqbench/dataset.hpp"
#include "seqbench/trajectory.hpp"

namespace seqbench {

SEQBENCH_DEFINE_ERROR(EmptyTrajectoryError);
SEQBENCH_DEFINE_ERROR(DegenerateRangeError);
SEQBENCH_DEFINE_ERROR(GroupSizeMismatchError);
SEQBENCH_DEFINE_ERROR(NoNumericParametersError);

/// Running best of a trajectory's scores: non-decreasing for maximize
/// tasks, non-increasing for minimize.
struct BsfCurve {
    std::vector<double> values;  // original target units
    Objective direction = Objective::maximize;

    int length() const { return static_cast<int>(values.size()); }
};

inline BsfCurve best_so_far(const std::vector<double>& scores, Objective direction) {
    if (scores.empty()) throw EmptyTrajectoryError("best_so_far of empty trajectory");
    BsfCurve curve;
    curve.direction = direction;
    curve.values.reserve(scores.size());
    double best = scores.front();
    for (double s : scores) {
        best = direction == Objective::maximize ? std::max(best, s) : std::min(best, s);
        curve.values.push_back(best);
    }
    return curve;
}

inline BsfCurve best_so_far(const Trajectory& traj, Objective direction) {
    return best_so_far(traj.scores(), direction);
}

/// Learning-efficiency metric: mean of the best-so-far values through
/// iteration k. Minimize curves are negated first so larger is always
/// better.
inline double bsf_auc_at(const BsfCurve& curve, int k) {
    if (k < 1 || k > curve.length()) throw Error("bsf_auc_at: k out of range");
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += curve.values[i];
    double auc = s / static_cast<double>(k);
    return curve.direction == Objective::maximize ? auc : -auc;
}

/// Outcome metric: best-so-far value at iteration k, original units.
/// Direction-aware comparisons are the caller's job.
inline double bsf_outcome_at(const BsfCurve& curve, int k) {
    if (k < 1 || k > curve.length()) throw Error("bsf_outcome_at: k out of range");
    return curve.values[k - 1];
}

/// Number of improving steps: iterations (after the first) where the
/// best-so-far value strictly improves.
inline int nis(const BsfCurve& curve) {
    if (curve.length() < 1) throw EmptyTrajectoryError("nis of empty curve");
    int count = 0;
    for (int i = 1; i < curve.length(); ++i)
        if (curve.values[i] != curve.values[i - 1]) ++count;
    return count;
}

/// (auc_llm - auc_gp) / max(|auc_gp|, epsilon): 0 means parity with the
/// classical baseline.
inline double gp_normalize(double auc_llm, double auc_gp, double epsilon) {
    if (epsilon <= 0) throw Error("gp_normalize: epsilon must be positive");
    return (auc_llm - auc_gp) / std::max(std::abs(auc_gp), epsilon);
}

/// First iteration (1-based) whose best-so-far value reaches
/// fraction * target. Without `worst` this is the plain maximize-direction
/// threshold; with `worst` the curve is first mapped through the
/// fraction-of-optimum transform, which handles the minimize direction
/// without sign ambiguity.
inline std::optional<int> iter_to_fraction(const BsfCurve& curve, double target,
                                           double fraction,
                                           std::optional<double> worst = std::nullopt) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw Error("iter_to_fraction: fraction must be in (0, 1]");
    for (int k = 1; k <= curve.length(); ++k) {
        double v = curve.values[k - 1];
        bool reached;
        if (worst) {
            if (target == *worst) throw DegenerateRangeError("target equals worst");
            reached = (v - *worst) / (target - *worst) >= fraction;
        } else {
            if (curve.direction == Objective::minimize)
                throw Error("iter_to_fraction: minimize curves need the worst reference");
            reached = v >= fraction * target;
        }
        if (reached) return k;
    }
    return std::nullopt;
}

/// Mean pairwise Euclidean distance between encoded designs
/// ([0,1] numerics + one-hot categoricals). A single design scores 0.
inline double diversity(const std::vector<Design>& designs, const ParameterSpace& space) {
    if (designs.empty()) throw Error("diversity of empty design list");
    if (designs.size() == 1) return 0.0;
    std::vector<std::vector<double>> enc;
    enc.reserve(designs.size());
    for (const Design& d : designs) enc.push_back(encode_design(space, d).vec);
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < enc.size(); ++i)
        for (std::size_t j = i + 1; j < enc.size(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < enc[i].size(); ++k) {
                double d = enc[i][k] - enc[j][k];
                s += d * d;
            }
            total += std::sqrt(s);
            ++pairs;
        }
    return total / static_cast<double>(pairs);
}

/// Distance from a proposal to its nearest dataset row, z-scored per
/// numeric parameter on the dataset distribution. Categorical parameters
/// are dropped; missing numerics sit at the training mean (zero in
/// z-space) on both sides.
inline double proximity_d1(const Design& d, const Dataset& data, const ParameterSpace& space) {
    std::vector<const ParameterSpec*> numerics;
    for (const ParameterSpec& p : space.params())
        if (p.is_numeric()) numerics.push_back(&p);
    if (numerics.empty())
        throw NoNumericParametersError("proximity_d1 requires a numeric parameter");
    if (data.rows.empty()) throw Error("proximity_d1 of empty dataset");

    std::map<std::string, std::pair<double, double>> moments;  // mean, std
    for (const ParameterSpec* p : numerics) {
        std::vector<double> xs;
        for (const auto& r : data.rows)
            if (r.first.has(p->name)) xs.push_back(r.first.numeric(p->name));
        if (xs.empty()) {
            moments[p->name] = {0.0, 1.0};
            continue;
        }
        double m = mean(xs);
        double sd = pop_std(xs);
        moments[p->name] = {m, sd > 0.0 ? sd : 1.0};
    }

    auto zvec = [&](const Design& design) {
        std::vector<double> z;
        z.reserve(numerics.size());
        for (const ParameterSpec* p : numerics) {
            const auto& [m, sd] = moments.at(p->name);
            z.push_back(design.has(p->name) ? (design.numeric(p->name) - m) / sd : 0.0);
        }
        return z;
    };

    std::vector<double> zd = zvec(d);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : data.rows) {
        std::vector<double> zr = zvec(r.first);
        double s = 0.0;
        for (std::size_t i = 0; i < zd.size(); ++i) {
            double diff = zd[i] - zr[i];
            s += diff * diff;
        }
        best = std::min(best, std::sqrt(s));
    }
    return best;
}

/// Per-iteration (bsf - worst) / (optimum - worst); 1.0 is always best
/// regardless of direction.
inline std::vector<double> fraction_of_optimum_curve(const BsfCurve& curve,
                                                     double task_optimum, double task_worst) {
    if (task_optimum == task_worst)
        throw DegenerateRangeError("fraction_of_optimum: optimum equals worst");
    std::vector<double> out;
    out.reserve(curve.values.size());
    for (double v : curve.values) out.push_back((v - task_worst) / (task_optimum - task_worst));
    return out;
}

/// Offline RL group reward: per-trajectory mean of the best-so-far curve,
/// normalized within the group (population std). Zero-variance groups get
/// all-zero rewards. Group size is pinned to 8 unless explicitly overridden.
inline std::vector<double> grpo_group_rewards(const std::vector<Trajectory>& group,
                                              Objective direction,
                                              bool allow_any_size = false) {
    if (!allow_any_size && group.size() != 8)
        throw GroupSizeMismatchError("GRPO group must have 8 trajectories, got " +
                                     std::to_string(group.size()));
    if (group.empty()) throw GroupSizeMismatchError("GRPO group is empty");
    const std::string& task = group.front().task;
    const std::size_t len = group.front().steps.size();
    for (const Trajectory& t : group)
        if (t.task != task || t.steps.size() != len)
            throw GroupSizeMismatchError("GRPO group mixes tasks or lengths");

    std::vector<double> raw;
    raw.reserve(group.size());
    for (const Trajectory& t : group) {
        BsfCurve curve = best_so_far(t, direction);
        raw.push_back(bsf_auc_at(curve, curve.length()));
    }
    double m = mean(raw);
    double sd = pop_std(raw);
    std::vector<double> out(raw.size(), 0.0);
    if (sd > 0.0)
        for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - m) / sd;
    return out;
}

// ---------------------------------------------------------------------------
// Long-form metric table.
// ---------------------------------------------------------------------------

struct MetricConfig {
    std::vector<int> horizons{5, 10, 15, 20, 25, 30};
    double epsilon = 0.01;             // GP-normalization floor
    double optimum_fraction = 0.99;    // iterations-to-threshold level
    double convergence_tolerance = 0.01;  // convergent-gap endpoint window
};

struct MetricRow {
    std::string task;
    std::string optimizer;
    std::string condition;
    int run_index = 0;
    std::string metric;
    int horizon = 0;  // 0 = horizon-free metric
    double value = 0.0;
};

/// One trajectory's rows: bsf_auc@k and bsf_outcome@k for every configured
/// horizon within the run length, plus nis, design diversity, and (when the
/// task dataset is supplied and the space has numerics) the per-run median
/// 1-NN proximity. Diversity uses validated designs so encodings stay in
/// vocabulary; proximity uses the raw proposals, where out-of-bounds
/// numerics are part of the diagnostic.
inline std::vector<MetricRow> metric_rows_for(const Trajectory& traj, Objective direction,
                                              const ParameterSpace& space,
                                              const MetricConfig& cfg,
                                              const Dataset* data = nullptr) {
    std::vector<MetricRow> rows;
    BsfCurve curve = best_so_far(traj, direction);
    auto push = [&](const std::string& metric, int horizon, double value) {
        rows.push_back({traj.task, traj.optimizer, traj.condition, traj.run_index, metric,
                        horizon, value});
    };
    for (int k : cfg.horizons) {
        if (k < 1 || k > curve.length()) continue;
        push("bsf_auc", k, bsf_auc_at(curve, k));
        push("bsf_outcome", k, bsf_outcome_at(curve, k));
    }
    push("nis", 0, static_cast<double>(nis(curve)));
    std::vector<Design> designs;
    for (const TrajectoryStep& s : traj.steps)
        if (!s.fallback) designs.push_back(s.design);
    if (!designs.empty()) push("diversity", 0, diversity(designs, space));

    bool has_numeric = false;
    for (const ParameterSpec& p : space.params())
        if (p.is_numeric()) has_numeric = true;
    if (data && has_numeric && !data->rows.empty()) {
        std::vector<double> d1s;
        for (const TrajectoryStep& s : traj.steps)
            if (!s.fallback) d1s.push_back(proximity_d1(s.raw, *data, space));
        if (!d1s.empty()) push("proximity_d1_median", 0, median(d1s));
    }
    return rows;
}

inline void write_metric_table_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
    out << "task,optimizer,condition,run_index,metric,horizon,value\n";
    for (const MetricRow& r : rows) {
        out << r.task << "," << r.optimizer << "," << r.condition << "," << r.run_index << ","
            << r.metric << ",";
        if (r.horizon > 0) out << r.horizon;
        out << "," << format_sig6(r.value) << "\n";
    }
}

inline std::vector<MetricRow> read_metric_table_csv(std::istream& in) {
    std::vector<MetricRow> rows;
    std::string line;
    if (!std::getline(in, line)) return rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f = detail::split_csv_line(line);
        if (f.size() != 7)
            throw Error("metric table line " + std::to_string(lineno) + ": bad field count");
        MetricRow r;
        r.task = f[0];
        r.optimizer = f[1];
        r.condition = f[2];
        r.run_index = std::stoi(f[3]);
        r.metric = f[4];
        r.horizon = f[5].empty() ? 0 : std::stoi(f[5]);
        r.value = std::stod(f[6]);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace seqbench
