#include <catch2/catch_amalgamated.hpp>

#include "seqbench/analysis.hpp"

using namespace seqbench;

namespace {

ParameterSpace dummy_space() {
    ParameterSpec x{"x", ParamKind::numeric, 0, 1, {}, ""};
    return ParameterSpace("d", {x});
}

Trajectory traj(const std::string& task, const std::string& optimizer,
                const std::string& condition, int run, const std::vector<double>& scores) {
    Trajectory t;
    t.task = task;
    t.optimizer = optimizer;
    t.condition = condition;
    t.run_index = run;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        TrajectoryStep s;
        s.design.set("x", 0.5);
        s.score = scores[i];
        t.steps.push_back(s);
    }
    return t;
}

std::vector<double> step_scores(int n, int riser, double lo, double hi) {
    std::vector<double> out;
    for (int i = 1; i <= n; ++i) out.push_back(i >= riser ? hi : lo);
    return out;
}

// 3 optimizers x 4 tasks, exactly 2 tasks disagree, the fast riser drives
// both disagreements.
struct DisagreementFixture {
    std::vector<Trajectory> trajs;
    std::vector<MetricRow> rows;
    std::vector<CellSummary> cells;
    std::map<std::string, Objective> directions;

    DisagreementFixture() {
        ParameterSpace space = dummy_space();
        MetricConfig cfg;
        for (const std::string& task : {"t1", "t2", "t3", "t4"}) {
            bool disagree_task = task == "t1" || task == "t2";
            directions[task] = Objective::maximize;
            // fast riser: immediate but capped; drives AUC on disagree tasks
            std::vector<double> fast = disagree_task ? step_scores(30, 2, 0, 100)
                                                     : std::vector<double>(30, 40.0);
            // late peaker: highest endpoint everywhere
            std::vector<double> late = step_scores(30, 28, 50, 110);
            std::vector<double> mid(30, 30.0);
            trajs.push_back(traj(task, "fast", "none", 0, fast));
            trajs.push_back(traj(task, "late", "none", 0, late));
            trajs.push_back(traj(task, "mid", "none", 0, mid));
        }
        for (const Trajectory& t : trajs) {
            auto r = metric_rows_for(t, Objective::maximize, space, cfg);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        cells = summarize_cells(rows);
    }
};

}  // namespace

TEST_CASE("cell summaries take the median of runs", "[analysis]") {
    ParameterSpace space = dummy_space();
    MetricConfig cfg;
    std::vector<MetricRow> rows;
    // 4 runs with bsf_outcome@1 values 1,2,3,10: median = 2.5
    for (int run = 0; run < 4; ++run) {
        double v = run == 3 ? 10.0 : run + 1.0;
        auto r = metric_rows_for(traj("t", "o", "none", run, {v}), Objective::maximize,
                                 space, MetricConfig{{1}, 0.01, 0.99, 0.01});
        rows.insert(rows.end(), r.begin(), r.end());
    }
    std::vector<CellSummary> cells = summarize_cells(rows);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].runs == 4);
    CHECK(cells[0].median_of("bsf_outcome", 1) == 2.5);  // mean of the middle two
}

TEST_CASE("best_model_tie_set argmax and tolerance", "[analysis]") {
    std::map<Entrant, double> values{{{"a", "none"}, 1.0},
                                     {{"b", "none"}, 0.5},
                                     {{"c", "none"}, 0.9}};
    TieSetResult r = best_model_tie_set(values);
    CHECK(r.argmax.optimizer == "a");
    REQUIRE(r.tie_set.size() == 1);

    values[{"b", "none"}] = 1.0;  // exact tie
    TieSetResult tie = best_model_tie_set(values);
    CHECK(tie.tie_set.size() == 2);

    values[{"c", "none"}] = 1.0 - 1e-12;  // inside the 1e-9 tolerance
    TieSetResult close = best_model_tie_set(values);
    CHECK(close.tie_set.size() == 3);
}

TEST_CASE("metric disagreement on the constructed corpus", "[analysis]") {
    DisagreementFixture fx;
    DisagreementResult res = metric_disagreement(fx.cells, 30, fx.directions);
    CHECK(res.tasks == 4);
    CHECK(res.disagreements == 2);
    CHECK(res.rate == 0.5);

    // confusion matrix: (fast, late) twice, (late, late) twice
    Entrant fast{"fast", "none"}, late{"late", "none"};
    CHECK(res.confusion.at({fast, late}) == 2);
    CHECK(res.confusion.at({late, late}) == 2);
    int total = 0;
    for (const auto& [key, n] : res.confusion) total += n;
    CHECK(total == res.tasks);

    for (const DisagreementRecord& rec : res.records) {
        if (rec.task == "t1" || rec.task == "t2") {
            CHECK_FALSE(rec.agree);
            CHECK(rec.winner_auc == fast);
            CHECK(rec.rank_of_auc_winner_under_outcome == 2);
        } else {
            CHECK(rec.agree);
        }
    }
}

TEST_CASE("same-endpoint risers disagree once a third curve wins outcome", "[analysis]") {
    // two curves share the 210.4 endpoint (risers at 7 and 27); a third ends
    // higher, so outcome picks it while bsf-AUC keeps the early riser
    ParameterSpace space = dummy_space();
    MetricConfig cfg;
    std::map<std::string, Objective> dirs{{"t", Objective::maximize}};
    std::vector<MetricRow> rows;
    for (const auto& [name, scores] :
         std::vector<std::pair<std::string, std::vector<double>>>{
             {"riser7", step_scores(30, 7, 100, 210.4)},
             {"riser27", step_scores(30, 27, 100, 210.4)},
             {"peaker", step_scores(30, 29, 100, 211.5)}}) {
        auto r = metric_rows_for(traj("t", name, "none", 0, scores), Objective::maximize,
                                 space, cfg);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    DisagreementResult res = metric_disagreement(summarize_cells(rows), 30, dirs);
    REQUIRE(res.records.size() == 1);
    CHECK_FALSE(res.records[0].agree);
    CHECK(res.records[0].winner_auc.optimizer == "riser7");
    CHECK(res.records[0].winner_outcome.optimizer == "peaker");
}

TEST_CASE("permissive variant counts tie-breaks the strict rule forgives", "[analysis]") {
    // two entrants tie exactly on outcome; the AUC winner differs from the
    // outcome argmax only through deterministic tie-breaking
    std::vector<MetricRow> rows;
    auto add = [&](const std::string& opt, double auc, double outcome) {
        rows.push_back({"t", opt, "none", 0, "bsf_auc", 30, auc});
        rows.push_back({"t", opt, "none", 0, "bsf_outcome", 30, outcome});
    };
    add("alpha", 1.0, 5.0);
    add("beta", 2.0, 5.0);  // AUC winner; outcome argmax is alpha (map order)
    std::map<std::string, Objective> dirs{{"t", Objective::maximize}};
    std::vector<CellSummary> cells = summarize_cells(rows);

    DisagreementResult strict = metric_disagreement(cells, 30, dirs);
    CHECK(strict.disagreements == 0);  // beta is inside the outcome tie set
    DisagreementResult permissive = metric_disagreement(cells, 30, dirs, 1e-9, true);
    CHECK(permissive.disagreements == 1);
    CHECK(permissive.rate >= strict.rate);
}

TEST_CASE("disagreement rate is invariant under monotone transforms", "[analysis]") {
    DisagreementFixture fx;
    // apply exp(x/200) to every bsf_auc value: strictly increasing
    std::vector<MetricRow> warped = fx.rows;
    for (MetricRow& r : warped)
        if (r.metric == "bsf_auc") r.value = std::exp(r.value / 200.0);
    DisagreementResult a = metric_disagreement(fx.cells, 30, fx.directions);
    DisagreementResult b = metric_disagreement(summarize_cells(warped), 30, fx.directions);
    CHECK(a.rate == b.rate);
    CHECK(a.disagreements == b.disagreements);
}

TEST_CASE("leave-one-out exclusion of the fast riser zeroes the rate", "[analysis]") {
    DisagreementFixture fx;
    auto rate_fn = [&](const std::vector<CellSummary>& kept) {
        return metric_disagreement(kept, 30, fx.directions).rate;
    };
    std::vector<std::pair<std::string, double>> loo =
        leave_one_out_rate(fx.cells, ExclusionUnit::optimizer, rate_fn);
    REQUIRE(loo.size() == 3);
    for (const auto& [excluded, rate] : loo) {
        if (excluded == "fast") CHECK(rate == 0.0);
        if (excluded == "mid") CHECK(rate == 0.5);  // mid never wins anything
    }
}

TEST_CASE("pass rate vs baseline respects strictness and direction", "[analysis]") {
    std::vector<MetricRow> rows;
    auto add = [&](const std::string& task, const std::string& opt, double auc) {
        rows.push_back({task, opt, "none", 0, "bsf_auc", 30, auc});
    };
    // opt beats baseline on 2 tasks, ties 1, loses 1
    add("t1", "opt", 2.0);
    add("t1", "base", 1.0);
    add("t2", "opt", 3.0);
    add("t2", "base", 1.0);
    add("t3", "opt", 1.0);
    add("t3", "base", 1.0);
    add("t4", "opt", 0.5);
    add("t4", "base", 1.0);
    std::vector<CellSummary> cells = summarize_cells(rows);
    std::map<std::string, Objective> dirs;
    PassRateResult r = pass_rate_vs_baseline(cells, {"opt", "none"}, {"base", "none"},
                                             "bsf_auc", 30, dirs);
    CHECK(r.tasks == 4);
    CHECK(r.wins == 2);
    CHECK(r.rate == 0.5);
    CHECK_FALSE(r.per_task.at("t3"));  // tie is not a win

    // the baseline against itself scores zero
    PassRateResult self = pass_rate_vs_baseline(cells, {"base", "none"}, {"base", "none"},
                                                "bsf_auc", 30, dirs);
    CHECK(self.rate == 0.0);

    // a missing baseline cell is an error
    rows.push_back({"t5", "opt", "none", 0, "bsf_auc", 30, 9.0});
    CHECK_THROWS_AS(pass_rate_vs_baseline(summarize_cells(rows), {"opt", "none"},
                                          {"base", "none"}, "bsf_auc", 30, dirs),
                    MissingBaselineError);
}

TEST_CASE("paired condition win rate", "[analysis]") {
    std::vector<MetricRow> rows;
    auto add = [&](const std::string& task, const std::string& opt,
                   const std::string& cond, double auc) {
        rows.push_back({task, opt, cond, 0, "bsf_auc", 30, auc});
    };
    // 8 pairs, aware wins 5
    for (int i = 0; i < 8; ++i) {
        std::string task = "t" + std::to_string(i);
        add(task, "m", "domain_aware", i < 5 ? 2.0 : 1.0);
        add(task, "m", "domain_agnostic", 1.5);
    }
    // a pair missing one condition is excluded but counted
    add("t9", "m", "domain_aware", 5.0);
    WinRateResult r = paired_condition_win_rate(summarize_cells(rows), 30);
    CHECK(r.pairs == 8);
    CHECK(r.wins == 5);
    CHECK(r.rate == 0.625);
    CHECK(r.excluded == 1);

    // identical conditions: zero wins
    std::vector<MetricRow> same;
    for (int i = 0; i < 3; ++i) {
        std::string task = "s" + std::to_string(i);
        same.push_back({task, "m", "domain_aware", 0, "bsf_auc", 30, 1.0});
        same.push_back({task, "m", "domain_agnostic", 0, "bsf_auc", 30, 1.0});
    }
    CHECK(paired_condition_win_rate(summarize_cells(same), 30).rate == 0.0);
}

TEST_CASE("convergent gap table recovers riser iterations", "[analysis]") {
    ParameterSpace space = dummy_space();
    MetricConfig cfg;
    std::map<std::string, Objective> dirs{{"conv", Objective::maximize},
                                          {"far", Objective::maximize}};
    std::vector<Trajectory> trajs;
    // convergent disagreement: riser-at-7 to 209 vs riser-at-15 to 210.4
    trajs.push_back(traj("conv", "fast", "none", 0, step_scores(30, 7, 100, 209.0)));
    trajs.push_back(traj("conv", "late", "none", 0, step_scores(30, 15, 100, 210.4)));
    // non-convergent disagreement: endpoints 5% apart -> excluded
    trajs.push_back(traj("far", "fast", "none", 0, step_scores(30, 2, 0, 100)));
    trajs.push_back(traj("far", "late", "none", 0, step_scores(30, 28, 50, 110)));

    std::vector<MetricRow> rows;
    for (const Trajectory& t : trajs) {
        auto r = metric_rows_for(t, Objective::maximize, space, cfg);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    std::vector<CellSummary> cells = summarize_cells(rows);
    DisagreementResult dis = metric_disagreement(cells, 30, dirs);
    CHECK(dis.disagreements == 2);

    auto curves = median_bsf_curves(trajs, dirs);
    ConvergentGapTable table = convergent_gap_table(dis, curves, 30, dirs, 0.01, 0.99);
    REQUIRE(table.rows.size() == 1);  // the far task is filtered out
    CHECK(table.rows[0].task == "conv");
    CHECK(table.rows[0].iter_auc_winner == 7);
    CHECK(table.rows[0].iter_outcome_winner == 15);
    CHECK(table.median_iter_auc == 7.0);
    CHECK(table.median_iter_outcome == 15.0);

    // winners with identical curves report identical iterations
    std::vector<Trajectory> twins;
    twins.push_back(traj("conv", "fast", "none", 0, step_scores(30, 7, 100, 209.0)));
    twins.push_back(traj("conv", "late", "none", 0, step_scores(30, 7, 100, 209.0)));
    auto twin_curves = median_bsf_curves(twins, dirs);
    DisagreementResult twin_dis;
    DisagreementRecord rec;
    rec.task = "conv";
    rec.winner_auc = {"fast", "none"};
    rec.winner_outcome = {"late", "none"};
    rec.agree = false;
    twin_dis.records.push_back(rec);
    ConvergentGapTable twin_table =
        convergent_gap_table(twin_dis, twin_curves, 30, dirs, 0.01, 0.99);
    REQUIRE(twin_table.rows.size() == 1);
    CHECK(twin_table.rows[0].iter_auc_winner == twin_table.rows[0].iter_outcome_winner);
}

TEST_CASE("median curves are permutation-invariant in run order", "[analysis]") {
    std::map<std::string, Objective> dirs{{"t", Objective::maximize}};
    std::vector<Trajectory> a{traj("t", "o", "none", 0, {1, 2, 3}),
                              traj("t", "o", "none", 1, {2, 3, 4}),
                              traj("t", "o", "none", 2, {3, 4, 5})};
    std::vector<Trajectory> b{a[2], a[0], a[1]};
    auto ca = median_bsf_curves(a, dirs);
    auto cb = median_bsf_curves(b, dirs);
    CHECK(ca.at({"t", {"o", "none"}}).values == cb.at({"t", {"o", "none"}}).values);
}
