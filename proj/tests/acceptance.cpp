// Acceptance suite: runs every release criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code = number of
// failures.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "seqbench/analysis.hpp"
#include "seqbench/audit.hpp"
#include "seqbench/manifest.hpp"
#include "seqbench/optim.hpp"
#include "seqbench/runner.hpp"
#include "seqbench/stats.hpp"

namespace fs = std::filesystem;
using namespace seqbench;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& msg) {
    if (!ok) throw Failure(msg);
}

std::vector<double> step_scores(int n, int riser, double lo, double hi) {
    std::vector<double> out;
    for (int i = 1; i <= n; ++i) out.push_back(i >= riser ? hi : lo);
    return out;
}

// ---------------------------------------------------------------------------
// 1. Wilcoxon anchors
// ---------------------------------------------------------------------------
void criterion_wilcoxon() {
    StatResult r6 = wilcoxon_signed_rank({1, 2, 3, 4, 5, 6}, Sidedness::two);
    require(r6.p_value == 0.03125, "n=6 same-sign two-sided p != 0.03125, got " +
                                       std::to_string(r6.p_value));
    StatResult r5 = wilcoxon_signed_rank({1, 2, 3, 4, 5}, Sidedness::two);
    require(r5.p_value == 0.0625,
            "n=5 same-sign two-sided p != 0.0625, got " + std::to_string(r5.p_value));
}

// ---------------------------------------------------------------------------
// 2. Binomial anchor
// ---------------------------------------------------------------------------
void criterion_binomial() {
    StatResult r = binomial_sign_test(13, 18, 0.5, Sidedness::one);
    require(std::abs(r.p_value - 0.048) <= 0.001,
            "binomial 13/18 one-sided p outside 0.048 +- 0.001, got " +
                std::to_string(r.p_value));
}

// ---------------------------------------------------------------------------
// 3. Two step curves sharing an endpoint
// ---------------------------------------------------------------------------
void criterion_step_curves() {
    BsfCurve early = best_so_far(step_scores(30, 7, 100.0, 210.4), Objective::maximize);
    BsfCurve late = best_so_far(step_scores(30, 27, 100.0, 210.4), Objective::maximize);
    require(std::abs(bsf_outcome_at(early, 30) - bsf_outcome_at(late, 30)) <= 1e-12,
            "outcome@30 does not tie");
    require(bsf_auc_at(early, 30) > bsf_auc_at(late, 30),
            "bsf-AUC@30 does not rank the earlier riser first");
    require(iter_to_fraction(early, 210.4, 0.99) == 7, "iter_to_fraction(early) != 7");
    require(iter_to_fraction(late, 210.4, 0.99) == 27, "iter_to_fraction(late) != 27");
}

// ---------------------------------------------------------------------------
// 4. GP-normalization contract
// ---------------------------------------------------------------------------
void criterion_gp_normalize() {
    Rng rng(91);
    for (int i = 0; i < 100; ++i) {
        double x = rng.uniform(-100, 100);
        require(gp_normalize(x, x, 0.01) == 0.0, "gp_normalize(x,x) != 0");
    }
    for (double g : {-0.02, -0.0100001, -0.005, -0.0001, 0.0, 0.0001, 0.005, 0.0099,
                     0.0100001, 0.02, 1.0}) {
        double l = g + 1.0;
        double expected = (l - g) / (std::abs(g) < 0.01 ? 0.01 : std::abs(g));
        require(gp_normalize(l, g, 0.01) == expected,
                "floor engagement wrong at auc_gp=" + std::to_string(g));
    }
}

// ---------------------------------------------------------------------------
// 5. GP-UCB sanity on synthetic smooth tasks
// ---------------------------------------------------------------------------
void criterion_gp_ucb_sanity() {
    const int n_tasks = 20, n_runs = 50, iters = 30;
    int auc_wins = 0, outcome_close = 0;
    for (int ti = 0; ti < n_tasks; ++ti) {
        Rng task_rng(derive_seed(5000, ti));
        int n_num = 2 + ti % 3;  // 2..4 numerics
        std::vector<ParameterSpec> params;
        for (int j = 0; j < n_num; ++j)
            params.push_back({"x" + std::to_string(j + 1), ParamKind::numeric, 0, 1, {}, ""});
        params.push_back({"c", ParamKind::categorical, 0, 0, {"A", "B", "C"}, ""});
        TaskSpec task;
        task.name = "synthetic" + std::to_string(ti);
        task.space = ParameterSpace(task.name, params);

        // mixture of two concave quadratic humps plus categorical offsets
        std::vector<double> m1(n_num), m2(n_num);
        for (int j = 0; j < n_num; ++j) {
            m1[j] = task_rng.uniform(0.2, 0.8);
            m2[j] = task_rng.uniform(0.1, 0.9);
        }
        double s1 = task_rng.uniform(5.0, 10.0), s2 = task_rng.uniform(5.0, 10.0);
        std::array<double, 3> offsets{0.0, task_rng.uniform(-1.0, 1.0),
                                      task_rng.uniform(-1.0, 1.0)};
        task.oracle = [=](const Design& d) {
            double q1 = 0, q2 = 0;
            for (int j = 0; j < n_num; ++j) {
                double x = d.numeric("x" + std::to_string(j + 1));
                q1 += (x - m1[j]) * (x - m1[j]);
                q2 += (x - m2[j]) * (x - m2[j]);
            }
            double bowl = std::max(10.0 - s1 * q1, 7.0 - s2 * q2);
            std::size_t ci = d.option("c") == "A" ? 0 : d.option("c") == "B" ? 1 : 2;
            return bowl + offsets[ci];
        };
        task.fallback_score = 0.0;

        // grid-search optimum over 10^4 seeded uniform designs
        Rng grid_rng(derive_seed(6000, ti));
        double grid_best = -1e300;
        for (int g = 0; g < 10000; ++g)
            grid_best = std::max(grid_best, task.oracle(random_design(task.space, grid_rng)));

        std::vector<double> gp_aucs, rnd_aucs, gp_outcomes;
        for (int run = 0; run < n_runs; ++run) {
            RunIdentity gid{"gp_ucb", "none", run,
                            derive_seed(task.name, "gp_ucb", "none", run, 0)};
            Trajectory gt = run_gp_ucb(task, iters, GpUcbConfig{}, gid);
            BsfCurve gc = best_so_far(gt, Objective::maximize);
            gp_aucs.push_back(bsf_auc_at(gc, iters));
            gp_outcomes.push_back(bsf_outcome_at(gc, iters));

            RunIdentity rid{"random", "none", run,
                            derive_seed(task.name, "random", "none", run, 0)};
            Trajectory rt = run_random(task, iters, rid);
            rnd_aucs.push_back(bsf_auc_at(best_so_far(rt, Objective::maximize), iters));
        }
        if (median(gp_aucs) >= median(rnd_aucs)) ++auc_wins;
        if (std::abs(median(gp_outcomes) - grid_best) <= 0.05 * std::abs(grid_best))
            ++outcome_close;
    }
    require(auc_wins >= 14, "GP-UCB median bsf-AUC@30 beat random on only " +
                                std::to_string(auc_wins) + "/20 tasks (need >= 14)");
    require(outcome_close >= 16,
            "GP-UCB median bsf-Outcome@30 within 5% of the grid optimum on only " +
                std::to_string(outcome_close) + "/20 tasks (need >= 16)");
}

// ---------------------------------------------------------------------------
// 6. Statistical oracle equivalence
// ---------------------------------------------------------------------------
void criterion_stat_oracles() {
    // Wilcoxon vs recursive sign enumeration
    Rng rng(811);
    for (int trial = 0; trial < 25; ++trial) {
        int n = 3 + static_cast<int>(rng.index(10));
        std::vector<double> diffs;
        for (int i = 0; i < n; ++i) {
            double mag = (1.0 + static_cast<double>(rng.index(6))) / 4.0;
            diffs.push_back(rng.uniform() < 0.55 ? mag : -mag);
        }
        std::vector<double> nz, ranks;
        for (double d : diffs)
            if (d != 0) nz.push_back(d);
        {
            std::vector<std::pair<double, std::size_t>> tagged;
            for (std::size_t i = 0; i < nz.size(); ++i) tagged.push_back({std::abs(nz[i]), i});
            std::sort(tagged.begin(), tagged.end());
            ranks.assign(nz.size(), 0);
            std::size_t i = 0;
            while (i < tagged.size()) {
                std::size_t j = i;
                while (j + 1 < tagged.size() && tagged[j + 1].first == tagged[i].first) ++j;
                double avg = 0;
                for (std::size_t k2 = i; k2 <= j; ++k2) avg += static_cast<double>(k2 + 1);
                avg /= static_cast<double>(j - i + 1);
                for (std::size_t k2 = i; k2 <= j; ++k2) ranks[tagged[k2].second] = avg;
                i = j + 1;
            }
        }
        double w_obs = 0;
        for (std::size_t i = 0; i < nz.size(); ++i)
            if (nz[i] > 0) w_obs += ranks[i];
        std::uint64_t ge = 0, le = 0, total = 1ull << nz.size();
        for (std::uint64_t pat = 0; pat < total; ++pat) {
            double w = 0;
            for (std::size_t i = 0; i < nz.size(); ++i)
                if (pat & (1ull << i)) w += ranks[i];
            if (w >= w_obs - 1e-9) ++ge;
            if (w <= w_obs + 1e-9) ++le;
        }
        double tail = static_cast<double>(std::min(ge, le)) / static_cast<double>(total);
        StatResult one = wilcoxon_signed_rank(diffs, Sidedness::one);
        require(one.p_value == tail, "wilcoxon exact mismatch vs enumeration");
    }

    // Mann-Whitney vs mask enumeration
    for (int trial = 0; trial < 12; ++trial) {
        int na = 3 + static_cast<int>(rng.index(4)), nb = 3 + static_cast<int>(rng.index(4));
        std::vector<double> a, b;
        for (int i = 0; i < na; ++i) a.push_back(static_cast<double>(rng.index(5)));
        for (int i = 0; i < nb; ++i) b.push_back(static_cast<double>(rng.index(5)) + 0.5);
        auto u_b = [](const std::vector<double>& xa, const std::vector<double>& xb) {
            double u = 0;
            for (double bv : xb)
                for (double av : xa) u += bv > av ? 1.0 : (bv == av ? 0.5 : 0.0);
            return u;
        };
        double obs = u_b(a, b);
        std::vector<double> pooled(a);
        pooled.insert(pooled.end(), b.begin(), b.end());
        std::vector<int> mask(pooled.size(), 0);
        for (int i = 0; i < nb; ++i) mask[i] = 1;
        std::sort(mask.begin(), mask.end());
        std::uint64_t total = 0, ge = 0, le = 0;
        do {
            std::vector<double> ga, gb;
            for (std::size_t i = 0; i < pooled.size(); ++i)
                (mask[i] ? gb : ga).push_back(pooled[i]);
            double u = u_b(ga, gb);
            ++total;
            if (u >= obs - 1e-9) ++ge;
            if (u <= obs + 1e-9) ++le;
        } while (std::next_permutation(mask.begin(), mask.end()));
        double tail = static_cast<double>(std::min(ge, le)) / static_cast<double>(total);
        StatResult r = mann_whitney_u(a, b, Sidedness::one);
        require(r.p_value == tail, "mann-whitney exact mismatch vs enumeration");
    }

    // sign permutation vs exhaustive 2^12
    Rng drng(99);
    std::vector<double> diffs;
    for (int i = 0; i < 12; ++i) diffs.push_back(drng.normal() + 0.35);
    double m_obs = mean(diffs);
    std::uint64_t ge = 0;
    for (std::uint64_t pat = 0; pat < (1ull << 12); ++pat) {
        double s = 0;
        for (int i = 0; i < 12; ++i) s += (pat >> i) & 1 ? diffs[i] : -diffs[i];
        if (s / 12.0 >= m_obs - 1e-12) ++ge;
    }
    double exact = static_cast<double>(ge) / static_cast<double>(1ull << 12);
    StatResult mc = paired_sign_permutation(diffs, 5000, 4242, Sidedness::one);
    require(std::abs(mc.p_value - exact) <= 0.01,
            "sign permutation off exhaustive by " + std::to_string(mc.p_value - exact));
}

// ---------------------------------------------------------------------------
// 7. Bootstrap coverage
// ---------------------------------------------------------------------------
void criterion_bootstrap_coverage() {
    const int reps = 500, G = 25, m = 4;
    auto stat = [](const GroupedSamples& g) {
        std::vector<double> means;
        for (const auto& grp : g) means.push_back(mean(grp));
        return mean(means);
    };
    int covered = 0;
    for (int rep = 0; rep < reps; ++rep) {
        Rng rng(derive_seed(31337, rep));
        GroupedSamples groups(G);
        for (int g = 0; g < G; ++g) {
            double effect = rng.normal();
            for (int i = 0; i < m; ++i) groups[g].push_back(effect + rng.normal());
        }
        BootstrapSpec spec;
        spec.mode = BootstrapMode::two_level;
        spec.B = 1000;
        spec.seed = derive_seed(555, rep);
        StatResult r = bootstrap_ci(groups, stat, spec);
        if (*r.ci_low <= 0.0 && 0.0 <= *r.ci_high) ++covered;
    }
    double coverage = static_cast<double>(covered) / reps;
    require(coverage >= 0.92 && coverage <= 0.98,
            "two-level bootstrap coverage " + std::to_string(coverage) +
                " outside 0.95 +- 0.03");
}

// ---------------------------------------------------------------------------
// 8. Oracle pipeline
// ---------------------------------------------------------------------------
void criterion_oracle_pipeline() {
    // noiseless linear fixture: ridge wins with LOO R^2 >= 0.99
    ParameterSpec x{"x", ParamKind::numeric, 0, 10, {}, ""};
    ParameterSpace lin_space("lin", {x});
    Dataset lin;
    lin.target_name = "y";
    for (int i = 0; i < 20; ++i) {
        Design d;
        double xv = 10.0 * i / 19.0;
        d.set("x", xv);
        lin.rows.emplace_back(d, 2.0 * xv + 1.0);
    }
    OracleModel mlin = fit_oracle(lin, lin_space, 7);
    require(mlin.family == OracleFamily::ridge, "linear fixture did not select ridge");
    require(mlin.loo_r2 >= 0.99, "linear fixture LOO R^2 below 0.99");

    // categorical step fixture: a tree family wins with LOO R^2 >= 0.9
    ParameterSpec c{"c", ParamKind::categorical, 0, 0, {"A", "B"}, ""};
    ParameterSpace step_space("step", {c});
    Dataset step;
    step.target_name = "y";
    for (int i = 0; i < 12; ++i) {
        Design d;
        d.set("c", i % 2 ? std::string("B") : std::string("A"));
        step.rows.emplace_back(d, i % 2 ? 10.0 : 0.0);
    }
    OracleModel mstep = fit_oracle(step, step_space, 7);
    require(mstep.family != OracleFamily::ridge, "step fixture selected ridge over trees");
    require(mstep.loo_r2 >= 0.9, "step fixture LOO R^2 below 0.9");

    // loo_r2 equals an independent brute-force loop, exactly
    ParameterSpace mixed("mixed", {x, c});
    Dataset data;
    data.target_name = "y";
    Rng rng(13);
    for (int i = 0; i < 16; ++i) {
        Design d;
        d.set("x", rng.uniform(0, 10));
        d.set("c", i % 2 ? std::string("B") : std::string("A"));
        data.rows.emplace_back(d, 0.4 * d.numeric("x") + (i % 2 ? 2.0 : 0.0) +
                                      0.2 * rng.normal());
    }
    for (OracleFamily fam : {OracleFamily::ridge, OracleFamily::random_forest,
                             OracleFamily::gradient_boosting}) {
        double hyper = fam == OracleFamily::ridge ? 0.1 : 0.0;
        double ybar = 0;
        for (const auto& r : data.rows) ybar += r.second;
        ybar /= static_cast<double>(data.rows.size());
        double ss_res = 0, ss_tot = 0;
        for (std::size_t i = 0; i < data.rows.size(); ++i) {
            Dataset fold;
            fold.target_name = "y";
            for (std::size_t j = 0; j < data.rows.size(); ++j)
                if (j != i) fold.rows.push_back(data.rows[j]);
            OracleModel fm = fit_family(fold, mixed, fam, hyper, 21);
            double pred = predict(fm, mixed, data.rows[i].first);
            ss_res += (data.rows[i].second - pred) * (data.rows[i].second - pred);
            ss_tot += (data.rows[i].second - ybar) * (data.rows[i].second - ybar);
        }
        require(loo_r2(data, mixed, fam, hyper, 21) == 1.0 - ss_res / ss_tot,
                "loo_r2 mismatch vs brute force for " + to_string(fam));
    }

    // deterministic predictions across repeats and serialization round-trips
    OracleModel m1 = fit_oracle(data, mixed, 99);
    OracleModel m2 = fit_oracle(data, mixed, 99);
    OracleModel m3 = oracle_from_json(nlohmann::json::parse(oracle_to_json(m1).dump()));
    Rng probe(5);
    for (int i = 0; i < 100; ++i) {
        Design d = random_design(mixed, probe);
        double p1 = predict(m1, mixed, d);
        require(p1 == predict(m1, mixed, d), "repeated predict differs");
        require(p1 == predict(m2, mixed, d), "refit predict differs");
        require(p1 == predict(m3, mixed, d), "round-tripped predict differs");
    }
}

// ---------------------------------------------------------------------------
// 9. Audit end-to-end
// ---------------------------------------------------------------------------
void criterion_audit() {
    ParameterSpec x{"x", ParamKind::numeric, 0, 100, {}, ""};
    ParameterSpec p{"p", ParamKind::categorical, 0, 0, {"p1", "p2", "p3"}, ""};
    ParameterSpace space("audit", {x, p});
    auto row = [](double xv, const std::string& pv) {
        Design d;
        d.set("x", xv);
        d.set("p", pv);
        return d;
    };
    Dataset data;
    data.target_name = "y";
    data.rows.emplace_back(row(10, "p1"), 10.0);
    data.rows.emplace_back(row(20, "p1"), 9.0);
    data.rows.emplace_back(row(30, "p1"), 8.0);
    data.rows.emplace_back(row(40, "p2"), 5.0);
    data.rows.emplace_back(row(50, "p2"), -70.0);
    data.rows.emplace_back(row(60, "p3"), 30.0);
    data.rows.emplace_back(row(70, "p3"), 25.0);
    OracleModel model = fit_family(data, space, OracleFamily::gradient_boosting, 0, 3);

    AuditThresholds th;
    DivergenceResult div = classify_divergence(model, data, "p", th);
    require(div.divergent, "fixture not classified divergent");
    require(div.criterion_range && div.criterion_sigma, "expected both criteria R and S");

    // alignment anchors: published-best row is the oracle argmax -> exactly 1
    require(alignment_ratio(model, data, space) == 1.0, "alignment != 1.0 at the argmax");
    Dataset worst_best = data;
    worst_best.rows[4].second = 1000.0;  // published best becomes the lowest-predicted row
    require(alignment_ratio(model, worst_best, space) == 0.0, "alignment != 0.0 at argmin");
    Dataset mirrored = data;
    mirrored.objective = Objective::minimize;  // best row = -70, the oracle's argmin
    require(alignment_ratio(model, mirrored, space) == 1.0, "minimize mirror != 1.0");

    // replayed trajectory matching 18 of 60 iterations -> exactly 0.300
    std::vector<Trajectory> trajs;
    for (int t = 0; t < 2; ++t) {
        Trajectory traj;
        traj.task = "audit";
        traj.optimizer = "replay";
        traj.condition = "none";
        traj.run_index = t;
        for (int i = 0; i < 30; ++i) {
            TrajectoryStep s;
            s.design.set("p", (t == 0 ? i < 10 : i < 8) ? std::string("p3")
                                                        : std::string("p1"));
            traj.steps.push_back(s);
        }
        trajs.push_back(std::move(traj));
    }
    require(best_match_rate(trajs, "p", "p3") == 0.3, "match rate != 0.300 exactly");
}

// ---------------------------------------------------------------------------
// 10. Disagreement machinery
// ---------------------------------------------------------------------------
void criterion_disagreement() {
    ParameterSpec x{"x", ParamKind::numeric, 0, 1, {}, ""};
    ParameterSpace space("d", {x});
    MetricConfig cfg;
    std::vector<MetricRow> rows;
    std::map<std::string, Objective> dirs;
    auto add_traj = [&](const std::string& task, const std::string& opt,
                        const std::vector<double>& scores) {
        Trajectory t;
        t.task = task;
        t.optimizer = opt;
        t.condition = "none";
        for (double s : scores) {
            TrajectoryStep step;
            step.design.set("x", 0.5);
            step.score = s;
            t.steps.push_back(step);
        }
        auto r = metric_rows_for(t, Objective::maximize, space, cfg);
        rows.insert(rows.end(), r.begin(), r.end());
    };
    for (const std::string& task : {"t1", "t2", "t3", "t4"}) {
        bool disagree_task = task == "t1" || task == "t2";
        dirs[task] = Objective::maximize;
        add_traj(task, "fast",
                 disagree_task ? step_scores(30, 2, 0, 100) : std::vector<double>(30, 40.0));
        add_traj(task, "late", step_scores(30, 28, 50, 110));
        add_traj(task, "mid", std::vector<double>(30, 30.0));
    }
    std::vector<CellSummary> cells = summarize_cells(rows);
    DisagreementResult res = metric_disagreement(cells, 30, dirs);
    require(res.tasks == 4, "expected 4 tasks");
    require(res.rate == 0.5, "disagreement rate != 0.5");
    Entrant fast{"fast", "none"}, late{"late", "none"};
    require(res.confusion.at({fast, late}) == 2, "confusion (fast, late) != 2");
    require(res.confusion.at({late, late}) == 2, "confusion (late, late) != 2");

    auto rate_fn = [&](const std::vector<CellSummary>& kept) {
        return metric_disagreement(kept, 30, dirs).rate;
    };
    for (const auto& [unit, rate] :
         leave_one_out_rate(cells, ExclusionUnit::optimizer, rate_fn))
        if (unit == "fast")
            require(rate == 0.0, "excluding the fast riser left rate " + std::to_string(rate));
}

// ---------------------------------------------------------------------------
// 11. GRPO reward
// ---------------------------------------------------------------------------
void criterion_grpo() {
    auto traj = [](const std::vector<double>& scores) {
        Trajectory t;
        t.task = "g";
        for (double s : scores) {
            TrajectoryStep step;
            step.score = s;
            t.steps.push_back(step);
        }
        return t;
    };
    std::vector<Trajectory> constant;
    for (int i = 0; i < 8; ++i) constant.push_back(traj({2, 2, 2}));
    for (double r : grpo_group_rewards(constant, Objective::maximize))
        require(r == 0.0, "constant group reward != 0");

    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Trajectory> group;
        for (int i = 0; i < 8; ++i) {
            std::vector<double> scores;
            for (int k = 0; k < 6; ++k) scores.push_back(rng.uniform(0, 5));
            group.push_back(traj(scores));
        }
        double sum = 0;
        for (double r : grpo_group_rewards(group, Objective::maximize)) sum += r;
        require(std::abs(sum) <= 1e-9, "group rewards do not sum to 0");
    }
}

// ---------------------------------------------------------------------------
// 12. Full pipeline determinism through the CLI
// ---------------------------------------------------------------------------
void criterion_pipeline_determinism() {
    fs::path work = fs::temp_directory_path() /
                    ("seqbench_accept_" + std::to_string(::getpid()));
    fs::remove_all(work);
    fs::create_directories(work);
    fs::copy(fs::path(SEQBENCH_FIXTURES_DIR) / "tasks", work / "tasks",
             fs::copy_options::recursive);
    std::string tasks = (work / "tasks" / "photo_yield").string() + " " +
                        (work / "tasks" / "elution_time").string();
    auto cli = [&](const std::string& args) {
        std::string cmd = std::string(SEQBENCH_CLI_PATH) + " " + args + " > " +
                          (work / "log").string() + " 2>&1";
        int status = std::system(cmd.c_str());
        require(WIFEXITED(status) && WEXITSTATUS(status) == 0,
                "CLI failed: " + args);
    };
    auto slurp_dir = [](const fs::path& dir) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(dir))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        std::string blob;
        for (const fs::path& f : files) {
            std::ifstream in(f);
            std::stringstream ss;
            ss << in.rdbuf();
            blob += f.filename().string() + "\n" + ss.str();
        }
        return blob;
    };

    cli("train-oracle --task " + tasks + " --seed 11 --refresh-cache");
    std::string store = (work / "store").string();
    std::string blobs[2];
    for (int pass = 0; pass < 2; ++pass) {
        std::string suffix = pass == 0 ? "a" : "b";
        fs::path adir = work / ("analysis_" + suffix);
        fs::path mfile = work / ("metrics_" + suffix + ".csv");
        cli("baseline --tasks " + tasks + " --store " + store +
            " --runs 4 --baseline-runs 20 --iters 30 --seed 11");
        cli("metrics --tasks " + tasks + " --store " + store + " --out " + mfile.string());
        cli("analyze --tasks " + tasks + " --store " + store + " --metrics " +
            mfile.string() + " --out-dir " + adir.string() + " --k 30");
        std::ifstream min(mfile);
        std::stringstream ss;
        ss << min.rdbuf();
        blobs[pass] = ss.str() + slurp_dir(adir);
    }
    require(blobs[0] == blobs[1], "pipeline reports are not byte-identical across runs");
    fs::remove_all(work);
}

struct Criterion {
    int number;
    std::string name;
    std::function<void()> fn;
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> criteria{
        {1, "Wilcoxon anchor (n=6 p=0.03125, n=5 p=0.0625)", criterion_wilcoxon},
        {2, "Binomial anchor (13/18 one-sided p=0.048 +- 0.001)", criterion_binomial},
        {3, "Step-curve scenario (outcome ties, AUC ranks, risers 7/27)",
         criterion_step_curves},
        {4, "GP-normalization contract (parity zero, floor at 0.01)", criterion_gp_normalize},
        {5, "GP-UCB sanity on 20 synthetic smooth tasks", criterion_gp_ucb_sanity},
        {6, "Statistical oracle equivalence (exact + permutation)", criterion_stat_oracles},
        {7, "Two-level bootstrap coverage 95% +- 3 over 500 replications",
         criterion_bootstrap_coverage},
        {8, "Oracle pipeline (selection, brute-force LOO, determinism)",
         criterion_oracle_pipeline},
        {9, "Audit end-to-end (R and S, alignment anchors, match rate 0.300)",
         criterion_audit},
        {10, "Disagreement machinery (rate 0.5, confusion, leave-one-out)",
         criterion_disagreement},
        {11, "GRPO rewards (zero-variance group, zero-sum)", criterion_grpo},
        {12, "Full pipeline determinism (baseline+metrics+analyze twice)",
         criterion_pipeline_determinism},
    };

    int only = argc > 1 ? std::atoi(argv[1]) : 0;
    int failures = 0;
    for (const Criterion& c : criteria) {
        if (only > 0 && c.number != only) continue;
        auto start = std::chrono::steady_clock::now();
        std::string status = "PASS", detail;
        try {
            c.fn();
        } catch (const std::exception& e) {
            status = "FAIL";
            detail = e.what();
            ++failures;
        }
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
        std::cout << status << " " << (c.number < 10 ? " " : "") << c.number << ": " << c.name
                  << " [" << ms << " ms]";
        if (!detail.empty()) std::cout << " -- " << detail;
        std::cout << "\n";
    }
    if (failures == 0)
        std::cout << "acceptance: all criteria passed\n";
    else
        std::cout << "acceptance: " << failures << " criteria FAILED\n";
    return failures;
}
