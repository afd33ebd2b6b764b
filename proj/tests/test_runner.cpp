#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "seqbench/runner.hpp"

using namespace seqbench;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("seqbench_runner_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

PlanTask make_task(const std::string& name, Objective obj = Objective::maximize) {
    ParameterSpec x{"x", ParamKind::numeric, 0.0, 1.0, {}, ""};
    ParameterSpec c{"c", ParamKind::categorical, 0, 0, {"A", "B"}, ""};
    PlanTask t;
    t.spec.name = name;
    t.spec.objective = obj;
    t.spec.space = ParameterSpace(name, {x, c});
    t.spec.oracle = [](const Design& d) {
        double base = d.has("x") ? d.numeric("x") : 0.5;
        return base + (d.has("c") && d.option("c") == "B" ? 0.25 : 0.0);
    };
    t.spec.fallback_score = 0.0;
    return t;
}

}  // namespace

TEST_CASE("worst_score picks the dataset-worst target", "[runner]") {
    Dataset max_data;
    max_data.objective = Objective::maximize;
    Design d;
    for (double y : {1.0, 5.0, 9.0}) max_data.rows.emplace_back(d, y);
    CHECK(worst_score(max_data) == 1.0);

    Dataset min_data = max_data;
    min_data.objective = Objective::minimize;
    CHECK(worst_score(min_data) == 9.0);

    Dataset single;
    single.objective = Objective::maximize;
    single.rows.emplace_back(d, 4.5);
    CHECK(worst_score(single) == 4.5);
}

TEST_CASE("execute_plan fills the matrix and resumes idempotently", "[runner]") {
    TempDir tmp;
    TrajectoryStore store(tmp.path / "store");

    RunPlan plan;
    plan.tasks.push_back(make_task("t1"));
    plan.optimizers.push_back({"random", OptimizerKind::random});
    plan.runs_per_cell = 4;
    plan.iters = 30;
    plan.global_seed = 11;

    CorpusSummary s1 = execute_plan(plan, store);
    CHECK(s1.cells == 1);
    CHECK(s1.runs_written == 4);
    CHECK(s1.runs_skipped == 0);

    std::vector<Trajectory> trajs = load_corpus(store);
    REQUIRE(trajs.size() == 4);
    std::size_t steps = 0;
    for (const auto& t : trajs) steps += t.steps.size();
    CHECK(steps == 120);

    // resume: nothing new
    CorpusSummary s2 = execute_plan(plan, store);
    CHECK(s2.runs_written == 0);
    CHECK(s2.runs_skipped == 4);
    CHECK(load_corpus(store).size() == 4);
}

TEST_CASE("gp_ucb cells honor baseline_runs and the per-task override", "[runner]") {
    TempDir tmp;
    TrajectoryStore store(tmp.path / "store");

    RunPlan plan;
    plan.tasks.push_back(make_task("plain"));
    plan.tasks.push_back(make_task("escalated"));
    plan.tasks[1].baseline_runs_override = 9;
    PlanOptimizer gp{"gp_ucb", OptimizerKind::gp_ucb};
    gp.gp.candidates_per_step = 10;  // keep the test quick
    plan.optimizers.push_back(gp);
    plan.runs_per_cell = 4;
    plan.baseline_runs = 6;
    plan.iters = 5;

    execute_plan(plan, store);
    CHECK(load_corpus(store, {.task = "plain"}).size() == 6);
    CHECK(load_corpus(store, {.task = "escalated"}).size() == 9);
}

TEST_CASE("agent transport failures become complete fallback trajectories", "[runner]") {
    TempDir tmp;
    TrajectoryStore store(tmp.path / "store");

    RunPlan plan;
    plan.tasks.push_back(make_task("t1"));
    PlanOptimizer agent{"agent-x", OptimizerKind::agent};
    agent.conditions = {"domain_aware", "domain_agnostic"};
    agent.make_transport = [] {
        return std::make_unique<CallbackTransport>([](const std::string&) -> std::string {
            throw TransportFailureError("down");
        });
    };
    plan.optimizers.push_back(agent);
    plan.runs_per_cell = 2;
    plan.iters = 6;

    CorpusSummary s = execute_plan(plan, store);
    CHECK(s.cells == 2);
    CHECK(s.runs_written == 4);
    CHECK(s.fallback_steps == 24);
    for (const Trajectory& t : load_corpus(store)) {
        REQUIRE(t.steps.size() == 6);
        for (const auto& step : t.steps) {
            CHECK(step.fallback);
            CHECK(step.score == 0.0);
        }
    }
}

TEST_CASE("plans are deterministic across executions and worker counts", "[runner]") {
    TempDir tmp;
    RunPlan plan;
    plan.tasks.push_back(make_task("t1"));
    plan.tasks.push_back(make_task("t2", Objective::minimize));
    PlanOptimizer gp{"gp_ucb", OptimizerKind::gp_ucb};
    gp.gp.candidates_per_step = 10;
    plan.optimizers.push_back({"random", OptimizerKind::random});
    plan.optimizers.push_back(gp);
    plan.runs_per_cell = 2;
    plan.baseline_runs = 2;
    plan.iters = 6;
    plan.global_seed = 77;

    TrajectoryStore s1(tmp.path / "a");
    plan.workers = 1;
    execute_plan(plan, s1);
    TrajectoryStore s2(tmp.path / "b");
    plan.workers = 4;
    execute_plan(plan, s2);

    std::vector<Trajectory> t1 = load_corpus(s1), t2 = load_corpus(s2);
    REQUIRE(t1.size() == t2.size());
    for (std::size_t i = 0; i < t1.size(); ++i) CHECK(t1[i] == t2[i]);
}

TEST_CASE("persisted trajectories round-trip field by field", "[runner]") {
    TempDir tmp;
    TrajectoryStore store(tmp.path / "store");
    PlanTask task = make_task("rt");
    Trajectory t = run_random(task.spec, 7, {"random", "none", 3, 999});
    store.append(t);
    std::vector<Trajectory> loaded = load_corpus(store);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0] == t);
}

TEST_CASE("load_corpus filters and orders stably", "[runner]") {
    TempDir tmp;
    TrajectoryStore store(tmp.path / "store");
    PlanTask task = make_task("t1");
    for (int run : {2, 0, 1}) {
        Trajectory t = run_random(task.spec, 3, {"random", "none", run, 5u + run});
        store.append(t);
    }
    CHECK(load_corpus(store, {.task = "nonexistent"}).empty());
    std::vector<Trajectory> all = load_corpus(store);
    REQUIRE(all.size() == 3);
    CHECK(all[0].run_index == 0);
    CHECK(all[1].run_index == 1);
    CHECK(all[2].run_index == 2);

    TrajectoryStore empty(tmp.path / "none");
    CHECK(load_corpus(empty).empty());
}

TEST_CASE("corrupt records are fatal unless lenient", "[runner]") {
    TempDir tmp;
    TrajectoryStore store(tmp.path / "store");
    PlanTask task = make_task("t1");
    store.append(run_random(task.spec, 3, {"random", "none", 0, 5}));

    auto file = store.cell_path("t1", "random", "none");
    std::ofstream(file, std::ios::app) << "{not json}\n";
    store.append(run_random(task.spec, 3, {"random", "none", 1, 6}));

    CHECK_THROWS_AS(load_corpus(store), CorruptRecordError);
    std::vector<std::string> warnings;
    std::vector<Trajectory> loaded = load_corpus(store, {}, true, &warnings);
    CHECK(loaded.size() == 2);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find(":2:") != std::string::npos);  // line number reported
}

TEST_CASE("store-unsafe names are rejected up front", "[runner]") {
    TempDir tmp;
    TrajectoryStore store(tmp.path / "store");
    RunPlan plan;
    plan.tasks.push_back(make_task("t1"));
    plan.tasks[0].spec.name = "bad/name";
    plan.optimizers.push_back({"random", OptimizerKind::random});
    CHECK_THROWS_AS(execute_plan(plan, store), Error);
}
