#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "seqbench/optim.hpp"

namespace seqbench {

SEQBENCH_DEFINE_ERROR(TaskLoadError);
SEQBENCH_DEFINE_ERROR(CorruptRecordError);

namespace detail {
inline void check_store_name(const std::string& s, const char* what) {
    if (s.empty()) throw Error(std::string(what) + " name is empty");
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
            throw Error(std::string(what) + " name '" + s +
                        "' must be [A-Za-z0-9_-] to be store-safe");
}
}  // namespace detail

struct CorpusFilter {
    std::optional<std::string> task;
    std::optional<std::string> optimizer;
    std::optional<std::string> condition;

    bool matches(const Trajectory& t) const {
        return (!task || *task == t.task) && (!optimizer || *optimizer == t.optimizer) &&
               (!condition || *condition == t.condition);
    }
};

/// Line-delimited trajectory store: one file per (task, optimizer,
/// condition) cell, one JSON record per run. Appends are whole lines, so a
/// single writer per cell keeps files consistent.
class TrajectoryStore {
public:
    explicit TrajectoryStore(std::filesystem::path root) : root_(std::move(root)) {
        std::filesystem::create_directories(root_);
    }

    const std::filesystem::path& root() const { return root_; }

    std::filesystem::path cell_path(const std::string& task, const std::string& optimizer,
                                    const std::string& condition) const {
        return root_ / task / (optimizer + "__" + condition + ".jsonl");
    }

    std::set<int> existing_run_indexes(const std::string& task, const std::string& optimizer,
                                       const std::string& condition) const {
        std::set<int> out;
        std::ifstream in(cell_path(task, optimizer, condition));
        if (!in) return out;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                out.insert(nlohmann::json::parse(line).at("run_index").get<int>());
            } catch (const nlohmann::json::exception&) {
                // surfaced with position info by load(); resume just skips it
            }
        }
        return out;
    }

    void append(const Trajectory& t) {
        std::filesystem::path p = cell_path(t.task, t.optimizer, t.condition);
        std::filesystem::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::app);
        if (!out) throw Error("cannot append to trajectory file '" + p.string() + "'");
        out << trajectory_to_json(t).dump() << "\n";
    }

    /// Loads trajectories matching the filter, stable-ordered by
    /// (task, optimizer, condition, run_index). A malformed line is fatal
    /// with its location unless `lenient`, which skips it and records a
    /// warning.
    std::vector<Trajectory> load(const CorpusFilter& filter = {}, bool lenient = false,
                                 std::vector<std::string>* warnings = nullptr) const {
        std::vector<Trajectory> out;
        if (!std::filesystem::exists(root_)) return out;
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::recursive_directory_iterator(root_))
            if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            std::ifstream in(file);
            std::string line;
            std::size_t lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                if (line.empty()) continue;
                Trajectory t;
                try {
                    t = trajectory_from_json(nlohmann::json::parse(line));
                } catch (const std::exception& e) {
                    std::string msg = file.string() + ":" + std::to_string(lineno) + ": " +
                                      e.what();
                    if (!lenient) throw CorruptRecordError(msg);
                    if (warnings) warnings->push_back(msg);
                    continue;
                }
                if (filter.matches(t)) out.push_back(std::move(t));
            }
        }
        std::stable_sort(out.begin(), out.end(), [](const Trajectory& a, const Trajectory& b) {
            return std::tie(a.task, a.optimizer, a.condition, a.run_index) <
                   std::tie(b.task, b.optimizer, b.condition, b.run_index);
        });
        return out;
    }

private:
    std::filesystem::path root_;
};

inline std::vector<Trajectory> load_corpus(const TrajectoryStore& store,
                                           const CorpusFilter& filter = {},
                                           bool lenient = false,
                                           std::vector<std::string>* warnings = nullptr) {
    return store.load(filter, lenient, warnings);
}

struct PlanTask {
    TaskSpec spec;
    std::optional<int> baseline_runs_override;  // the high-variance escalation knob
};

struct PlanOptimizer {
    std::string name;  // identity in trajectory records and file names
    OptimizerKind kind = OptimizerKind::random;
    GpUcbConfig gp;
    std::vector<std::string> conditions{"none"};  // agent runs use the two prompt conditions
    bool agent_masked_by_condition = true;
    int agent_max_retries = 2;
    // fresh transport per cell so parallel cells never share a channel
    std::function<std::unique_ptr<AgentTransport>()> make_transport;
    // stored designs for replay, resolved per (task, run_index)
    std::function<std::vector<Design>(const std::string& task, int run_index)> replay_lookup;
};

struct RunPlan {
    std::vector<PlanTask> tasks;
    std::vector<PlanOptimizer> optimizers;
    int runs_per_cell = 4;
    int iters = 30;
    int baseline_runs = 200;  // GP-UCB baseline cells
    std::uint64_t global_seed = 0;
    int workers = 1;
};

struct CorpusSummary {
    std::size_t cells = 0;
    std::size_t runs_written = 0;
    std::size_t runs_skipped = 0;
    std::size_t fallback_steps = 0;
};

/// Runs every missing (task, optimizer, condition, run) cell entry and
/// persists trajectories. Completed runs are skipped, so re-execution is
/// idempotent. Individual agent failures never propagate; they surface as
/// fallback steps inside complete trajectories.
inline CorpusSummary execute_plan(const RunPlan& plan, TrajectoryStore& store) {
    if (plan.runs_per_cell < 1 || plan.iters < 1)
        throw Error("run plan requires runs_per_cell >= 1 and iters >= 1");
    for (const PlanTask& t : plan.tasks) detail::check_store_name(t.spec.name, "task");
    for (const PlanOptimizer& o : plan.optimizers) {
        detail::check_store_name(o.name, "optimizer");
        for (const std::string& c : o.conditions) detail::check_store_name(c, "condition");
    }

    struct CellJob {
        const PlanTask* task;
        const PlanOptimizer* optimizer;
        std::string condition;
        std::vector<int> missing_runs;
    };
    std::vector<CellJob> jobs;
    CorpusSummary summary;
    for (const PlanTask& task : plan.tasks) {
        for (const PlanOptimizer& opt : plan.optimizers) {
            int target_runs = plan.runs_per_cell;
            if (opt.kind == OptimizerKind::gp_ucb)
                target_runs = task.baseline_runs_override.value_or(plan.baseline_runs);
            for (const std::string& condition : opt.conditions) {
                ++summary.cells;
                std::set<int> existing =
                    store.existing_run_indexes(task.spec.name, opt.name, condition);
                CellJob job{&task, &opt, condition, {}};
                for (int r = 0; r < target_runs; ++r) {
                    if (existing.count(r))
                        ++summary.runs_skipped;
                    else
                        job.missing_runs.push_back(r);
                }
                if (!job.missing_runs.empty()) jobs.push_back(std::move(job));
            }
        }
    }

    std::mutex mu;
    std::size_t next_job = 0;
    std::exception_ptr first_error;

    auto worker = [&] {
        for (;;) {
            std::size_t ji;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (first_error || next_job >= jobs.size()) return;
                ji = next_job++;
            }
            const CellJob& job = jobs[ji];
            try {
                OptimizerSetup setup;
                setup.kind = job.optimizer->kind;
                setup.gp = job.optimizer->gp;
                std::unique_ptr<AgentTransport> transport;
                if (job.optimizer->kind == OptimizerKind::agent) {
                    if (!job.optimizer->make_transport)
                        throw Error("agent optimizer '" + job.optimizer->name +
                                    "' has no transport factory");
                    transport = job.optimizer->make_transport();
                    setup.agent.transport = transport.get();
                    setup.agent.masked = job.optimizer->agent_masked_by_condition &&
                                         job.condition == "domain_agnostic";
                    setup.agent.max_retries = job.optimizer->agent_max_retries;
                }
                std::size_t written = 0, fallbacks = 0;
                for (int run : job.missing_runs) {
                    std::vector<Design> replay_seq;
                    if (job.optimizer->kind == OptimizerKind::replay) {
                        if (!job.optimizer->replay_lookup)
                            throw Error("replay optimizer '" + job.optimizer->name +
                                        "' has no sequence source");
                        replay_seq = job.optimizer->replay_lookup(job.task->spec.name, run);
                        setup.replay_sequence = &replay_seq;
                    }
                    RunIdentity id;
                    id.optimizer = job.optimizer->name;
                    id.condition = job.condition;
                    id.run_index = run;
                    id.seed = derive_seed(job.task->spec.name, job.optimizer->name,
                                          job.condition, static_cast<std::uint64_t>(run),
                                          plan.global_seed);
                    Trajectory t = run_optimizer(setup, job.task->spec, plan.iters, id);
                    for (const TrajectoryStep& s : t.steps)
                        if (s.fallback) ++fallbacks;
                    store.append(t);
                    ++written;
                }
                std::lock_guard<std::mutex> lock(mu);
                summary.runs_written += written;
                summary.fallback_steps += fallbacks;
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    int n_workers = std::max(1, plan.workers);
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return summary;
}

}  // namespace seqbench
