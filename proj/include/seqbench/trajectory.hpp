#pragma once

#include <json.hpp>

#include "seqbench/space.hpp"

namespace seqbench {

struct TrajectoryStep {
    Design raw;      // as proposed, before validation (kept for diagnostics)
    Design design;   // validated
    double score = 0.0;  // original target units
    bool fallback = false;
    int retries_used = 0;

    bool operator==(const TrajectoryStep& o) const {
        return raw == o.raw && design == o.design && score == o.score &&
               fallback == o.fallback && retries_used == o.retries_used;
    }
};

/// One run of one optimizer on one task: the ordered (design, score)
/// sequence plus full identity metadata.
struct Trajectory {
    std::string task;
    std::string optimizer;
    std::string condition;  // domain_aware | domain_agnostic | none
    int run_index = 0;
    std::uint64_t seed = 0;
    std::vector<TrajectoryStep> steps;

    std::vector<double> scores() const {
        std::vector<double> out;
        out.reserve(steps.size());
        for (const TrajectoryStep& s : steps) out.push_back(s.score);
        return out;
    }

    bool operator==(const Trajectory& o) const {
        return task == o.task && optimizer == o.optimizer && condition == o.condition &&
               run_index == o.run_index && seed == o.seed && steps == o.steps;
    }
};

inline nlohmann::json design_to_json(const Design& d) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, value] : d.values) {
        if (std::holds_alternative<double>(value))
            j[name] = std::get<double>(value);
        else
            j[name] = std::get<std::string>(value);
    }
    return j;
}

inline Design design_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("design document must be a JSON object");
    Design d;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.value().is_number())
            d.set(it.key(), it.value().get<double>());
        else if (it.value().is_string())
            d.set(it.key(), it.value().get<std::string>());
        else
            throw Error("design value for '" + it.key() + "' must be a number or string");
    }
    return d;
}

inline nlohmann::json trajectory_to_json(const Trajectory& t) {
    nlohmann::json steps = nlohmann::json::array();
    for (const TrajectoryStep& s : t.steps)
        steps.push_back({{"raw", design_to_json(s.raw)},
                         {"design", design_to_json(s.design)},
                         {"score", s.score},
                         {"fallback", s.fallback},
                         {"retries", s.retries_used}});
    return {{"task", t.task},
            {"optimizer", t.optimizer},
            {"condition", t.condition},
            {"run_index", t.run_index},
            {"seed", t.seed},
            {"steps", std::move(steps)}};
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
    Trajectory t;
    t.task = j.at("task").get<std::string>();
    t.optimizer = j.at("optimizer").get<std::string>();
    t.condition = j.at("condition").get<std::string>();
    t.run_index = j.at("run_index").get<int>();
    t.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& s : j.at("steps")) {
        TrajectoryStep step;
        step.raw = design_from_json(s.at("raw"));
        step.design = design_from_json(s.at("design"));
        step.score = s.at("score").get<double>();
        step.fallback = s.at("fallback").get<bool>();
        step.retries_used = s.at("retries").get<int>();
        t.steps.push_back(std::move(step));
    }
    return t;
}

}  // namespace seqbench
