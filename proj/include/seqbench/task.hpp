#pragma once

#include <functional>
#include <optional>

#include "seqbench/dataset.hpp"
#include "seqbench/space.hpp"

namespace seqbench {

/// Worst possible score for a task: the dataset-worst target
/// (min for maximize tasks, max for minimize). Used as the fallback score
/// when an agent exhausts its retry budget.
inline double worst_score(const Dataset& data) {
    if (data.rows.empty()) throw Error("worst_score of empty dataset");
    double w = data.rows.front().second;
    for (const auto& r : data.rows)
        w = data.objective == Objective::maximize ? std::min(w, r.second)
                                                  : std::max(w, r.second);
    return w;
}

/// Everything an optimizer needs to run one task. The oracle callable is
/// deterministic and scores validated designs in original target units.
struct TaskSpec {
    std::string name;
    Objective objective = Objective::maximize;
    ParameterSpace space;
    std::function<double(const Design&)> oracle;
    double fallback_score = 0.0;  // dataset-worst target

    // cached references for fraction-of-optimum normalization
    std::optional<double> optimum_cache;
    std::optional<double> worst_cache;

    /// Larger-is-better view of a score, used inside optimizers.
    double orient(double score) const {
        return objective == Objective::maximize ? score : -score;
    }
};

}  // namespace seqbench
