#pragma once

#include "seqbench/agent.hpp"
#include "seqbench/gp.hpp"
#include "seqbench/task.hpp"
#include "seqbench/trajectory.hpp"

namespace seqbench {

SEQBENCH_DEFINE_ERROR(ReplayExhaustedError);

enum class OptimizerKind { gp_ucb, random, replay, agent };

inline std::string to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::gp_ucb: return "gp_ucb";
        case OptimizerKind::random: return "random";
        case OptimizerKind::replay: return "replay";
        case OptimizerKind::agent: return "agent";
    }
    return "?";
}

struct GpUcbConfig {
    double beta = 2.0;  // direct multiplier on the posterior std
    GpConfig gp;        // Matern-5/2 kernel, fixed hyperparameters
    int candidates_per_step = 100;
    int seed_points = 1;

    void check() const {
        if (beta <= 0 || gp.lengthscale <= 0 || candidates_per_step < 1 || seed_points < 1)
            throw Error("invalid GP-UCB configuration");
    }
};

/// History entry as optimizers see it: encoded design plus the score
/// oriented so larger is always better.
struct Observation {
    EncodedDesign x;
    double oriented_score = 0.0;
};

/// Draws candidates_per_step uniform designs and returns the one maximizing
/// mu + beta * sigma under the GP fit to the history. Ties keep the earliest
/// drawn candidate.
inline Design gp_ucb_propose(const std::vector<Observation>& history,
                             const ParameterSpace& space, const GpUcbConfig& cfg, Rng& rng) {
    if (history.empty()) throw Error("gp_ucb_propose requires a non-empty history");
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    X.reserve(history.size());
    for (const Observation& o : history) {
        X.push_back(o.x.vec);
        y.push_back(o.oriented_score);
    }
    GpPosterior posterior(std::move(X), y, cfg.gp);

    Design best;
    double best_ucb = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cfg.candidates_per_step; ++c) {
        Design cand = random_design(space, rng);
        auto [mu, sigma] = posterior.predict(encode_design(space, cand).vec);
        double ucb = mu + cfg.beta * sigma;
        if (ucb > best_ucb) {
            best_ucb = ucb;
            best = std::move(cand);
        }
    }
    return best;
}

/// Identity of one run; the seed is derived upstream so any cell can be
/// reproduced in isolation.
struct RunIdentity {
    std::string optimizer;
    std::string condition = "none";
    int run_index = 0;
    std::uint64_t seed = 0;
};

namespace detail {

struct StepRecorder {
    const TaskSpec& task;
    Trajectory traj;
    std::vector<Observation> history;                       // for gp_ucb
    std::vector<std::pair<Design, double>> agent_history;   // for agents

    explicit StepRecorder(const TaskSpec& t, const RunIdentity& id) : task(t) {
        traj.task = t.name;
        traj.optimizer = id.optimizer;
        traj.condition = id.condition;
        traj.run_index = id.run_index;
        traj.seed = id.seed;
    }

    void score_and_record(Design raw, int retries_used) {
        ValidatedDesign v = validate_design(task.space, raw);
        double score = task.oracle(v.design);
        history.push_back({encode_design(task.space, v.design), task.orient(score)});
        agent_history.emplace_back(v.design, score);
        TrajectoryStep step;
        step.raw = std::move(raw);
        step.design = std::move(v.design);
        step.score = score;
        step.retries_used = retries_used;
        traj.steps.push_back(std::move(step));
    }

    void record_fallback(int retries_used) {
        TrajectoryStep step;
        step.score = task.fallback_score;
        step.fallback = true;
        step.retries_used = retries_used;
        traj.steps.push_back(std::move(step));
    }
};

}  // namespace detail

inline Trajectory run_random(const TaskSpec& task, int iters, const RunIdentity& id) {
    Rng rng(id.seed);
    detail::StepRecorder rec(task, id);
    for (int i = 0; i < iters; ++i) rec.score_and_record(random_design(task.space, rng), 0);
    return std::move(rec.traj);
}

inline Trajectory run_gp_ucb(const TaskSpec& task, int iters, const GpUcbConfig& cfg,
                             const RunIdentity& id) {
    cfg.check();
    Rng rng(id.seed);
    detail::StepRecorder rec(task, id);
    for (int i = 0; i < iters; ++i) {
        Design proposal = i < cfg.seed_points
                              ? random_design(task.space, rng)
                              : gp_ucb_propose(rec.history, task.space, cfg, rng);
        rec.score_and_record(std::move(proposal), 0);
    }
    return std::move(rec.traj);
}

/// Re-emits a stored design sequence; scores are recomputed by the oracle.
inline Trajectory run_replay(const TaskSpec& task, int iters,
                             const std::vector<Design>& sequence, const RunIdentity& id) {
    if (static_cast<int>(sequence.size()) < iters)
        throw ReplayExhaustedError("replay sequence has " +
                                   std::to_string(sequence.size()) + " designs, need " +
                                   std::to_string(iters));
    detail::StepRecorder rec(task, id);
    for (int i = 0; i < iters; ++i) rec.score_and_record(sequence[i], 0);
    return std::move(rec.traj);
}

struct AgentRunConfig {
    AgentTransport* transport = nullptr;
    bool masked = false;  // domain_agnostic condition
    int max_retries = 2;
};

/// Delegates proposals to an external agent. A step whose reply stays
/// unusable after the retry budget (or whose transport fails) becomes a
/// fallback step carrying the task's worst score; fallback steps are not
/// echoed back in later request histories since they carry no design.
inline Trajectory run_agent(const TaskSpec& task, int iters, const AgentRunConfig& cfg,
                            const RunIdentity& id) {
    if (!cfg.transport) throw Error("run_agent: no transport configured");
    std::optional<NameMap> mask;
    if (cfg.masked) mask = mask_space(task.space).second;

    detail::StepRecorder rec(task, id);
    for (int i = 0; i < iters; ++i) {
        AgentRequest req;
        req.task = task.name;
        req.condition = cfg.masked ? "domain_agnostic" : "domain_aware";
        req.objective = task.objective;
        req.iteration = i;
        req.space = &task.space;
        req.history = rec.agent_history;
        try {
            AgentReply reply =
                agent_exchange(req, *cfg.transport, mask ? &*mask : nullptr, cfg.max_retries);
            rec.score_and_record(std::move(reply.raw), reply.retries_used);
        } catch (const ParseFailureError&) {
            rec.record_fallback(cfg.max_retries);
        } catch (const TransportFailureError&) {
            rec.record_fallback(cfg.max_retries);
        }
    }
    return std::move(rec.traj);
}

/// Union of per-kind knobs consumed by the run_optimizer dispatcher.
struct OptimizerSetup {
    OptimizerKind kind = OptimizerKind::random;
    GpUcbConfig gp;
    const std::vector<Design>* replay_sequence = nullptr;
    AgentRunConfig agent;
};

inline Trajectory run_optimizer(const OptimizerSetup& setup, const TaskSpec& task, int iters,
                                const RunIdentity& id) {
    if (iters < 1) throw Error("run_optimizer: iters must be >= 1");
    switch (setup.kind) {
        case OptimizerKind::gp_ucb: return run_gp_ucb(task, iters, setup.gp, id);
        case OptimizerKind::random: return run_random(task, iters, id);
        case OptimizerKind::replay:
            if (!setup.replay_sequence) throw Error("run_optimizer: no replay sequence");
            return run_replay(task, iters, *setup.replay_sequence, id);
        case OptimizerKind::agent: return run_agent(task, iters, setup.agent, id);
    }
    throw Error("run_optimizer: unknown kind");
}

}  // namespace seqbench
