// seqbench: a benchmark harness for sequential experiment design over
// mixed parameter spaces. Subcommands cover oracle training, classical
// baselines, external-agent and replay runs, trajectory metrics, the
// leaderboard analyses, the published-best audit, and figure-data export.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "seqbench/stats.hpp"

#include "seqbench/agent_http.hpp"
#include "seqbench/analysis.hpp"
#include "seqbench/audit.hpp"
#include "seqbench/manifest.hpp"
#include "seqbench/runner.hpp"

namespace fs = std::filesystem;
using namespace seqbench;

namespace {

struct GlobalConfig {
    std::uint64_t seed = 0;
    int workers = 1;
    int iters = 30;
    int runs_per_cell = 4;
    int baseline_runs = 200;
    std::vector<int> horizons{5, 10, 15, 20, 25, 30};
    double epsilon = 0.01;
    double optimum_fraction = 0.99;
    double convergence_tolerance = 0.01;
    double tie_tol = 1e-9;
    AuditThresholds audit;
};

GlobalConfig load_config(const std::string& path) {
    GlobalConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("config '" + path + "': " + e.what());
    }
    cfg.seed = j.value("global_seed", cfg.seed);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.iters = j.value("iters", cfg.iters);
    cfg.runs_per_cell = j.value("runs_per_cell", cfg.runs_per_cell);
    cfg.baseline_runs = j.value("baseline_runs", cfg.baseline_runs);
    if (j.contains("horizons")) cfg.horizons = j.at("horizons").get<std::vector<int>>();
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    cfg.optimum_fraction = j.value("optimum_fraction", cfg.optimum_fraction);
    cfg.convergence_tolerance = j.value("convergence_tolerance", cfg.convergence_tolerance);
    cfg.tie_tol = j.value("tie_tol", cfg.tie_tol);
    cfg.audit.alignment_min = j.value("alignment_min", cfg.audit.alignment_min);
    cfg.audit.range_gap_min = j.value("range_gap_min", cfg.audit.range_gap_min);
    cfg.audit.sigma_gap_min = j.value("sigma_gap_min", cfg.audit.sigma_gap_min);
    return cfg;
}

std::vector<LoadedTask> load_tasks(const std::vector<std::string>& dirs, bool need_oracle) {
    if (dirs.empty()) throw Error("no task directories given");
    std::vector<LoadedTask> tasks;
    for (const std::string& dir : dirs) tasks.push_back(load_task(dir, need_oracle));
    return tasks;
}

std::map<std::string, Objective> directions_of(const std::vector<LoadedTask>& tasks) {
    std::map<std::string, Objective> dirs;
    for (const LoadedTask& t : tasks) dirs[t.manifest.name] = t.manifest.objective;
    return dirs;
}

Entrant parse_entrant(const std::string& label) {
    auto at = label.find('@');
    if (at == std::string::npos) return {label, "none"};
    return {label.substr(0, at), label.substr(at + 1)};
}

std::ofstream open_out(const fs::path& path) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    return out;
}

std::set<OracleFamily> parse_families(const std::vector<std::string>& names) {
    std::set<OracleFamily> out;
    for (const std::string& n : names) out.insert(oracle_family_from_string(n));
    return out;
}

// ---------------------------------------------------------------------------

int cmd_train_oracle(const std::vector<std::string>& task_dirs,
                     const std::vector<std::string>& family_names, std::uint64_t seed,
                     bool refresh_cache, std::size_t cache_samples) {
    std::set<OracleFamily> families = family_names.empty()
                                          ? std::set<OracleFamily>{OracleFamily::ridge,
                                                                   OracleFamily::random_forest,
                                                                   OracleFamily::gradient_boosting}
                                          : parse_families(family_names);
    for (const std::string& dir : task_dirs) {
        LoadedTask task = load_task(dir, false);
        OracleModel model = fit_oracle(task.dataset, task.manifest.space, seed, families);
        save_oracle(task.manifest.oracle_file().string(), model);
        task.oracle = std::make_shared<OracleModel>(std::move(model));

        if (refresh_cache || !task.manifest.cached_optimum || !task.manifest.cached_worst) {
            auto [optimum, worst] = compute_task_cache(task, cache_samples, seed);
            task.manifest.cached_optimum = optimum;
            task.manifest.cached_worst = worst;
            save_manifest(task.manifest);
        }
        std::cout << task.manifest.name << ": family=" << to_string(task.oracle->family)
                  << " loo_r2=" << format_sig6(task.oracle->loo_r2)
                  << " optimum=" << format_sig6(*task.manifest.cached_optimum)
                  << " worst=" << format_sig6(*task.manifest.cached_worst) << "\n";
    }
    return 0;
}

RunPlan base_plan(const std::vector<LoadedTask>& tasks, const GlobalConfig& cfg) {
    RunPlan plan;
    for (const LoadedTask& t : tasks) {
        PlanTask pt;
        pt.spec = t.spec();
        pt.baseline_runs_override = t.manifest.baseline_runs_override;
        plan.tasks.push_back(std::move(pt));
    }
    plan.runs_per_cell = cfg.runs_per_cell;
    plan.iters = cfg.iters;
    plan.baseline_runs = cfg.baseline_runs;
    plan.global_seed = cfg.seed;
    plan.workers = cfg.workers;
    return plan;
}

int cmd_baseline(const std::vector<std::string>& task_dirs, const std::string& store_dir,
                 const std::vector<std::string>& optimizers, const GlobalConfig& cfg) {
    std::vector<LoadedTask> tasks = load_tasks(task_dirs, true);
    RunPlan plan = base_plan(tasks, cfg);
    for (const std::string& name : optimizers) {
        if (name == "gp_ucb") {
            plan.optimizers.push_back({"gp_ucb", OptimizerKind::gp_ucb});
        } else if (name == "random") {
            plan.optimizers.push_back({"random", OptimizerKind::random});
        } else {
            throw Error("unknown baseline optimizer '" + name + "' (gp_ucb|random)");
        }
    }
    TrajectoryStore store(store_dir);
    CorpusSummary s = execute_plan(plan, store);
    std::cout << "baseline: cells=" << s.cells << " written=" << s.runs_written
              << " skipped=" << s.runs_skipped << " fallback_steps=" << s.fallback_steps
              << "\n";
    return 0;
}

int cmd_run(const std::vector<std::string>& task_dirs, const std::string& store_dir,
            const std::string& name, const std::string& agent_cmd,
            const std::string& agent_url, const std::string& replay_from,
            const std::string& replay_optimizer, const std::string& replay_condition,
            std::vector<std::string> conditions, const GlobalConfig& cfg) {
    std::vector<LoadedTask> tasks = load_tasks(task_dirs, true);
    RunPlan plan = base_plan(tasks, cfg);

    PlanOptimizer opt;
    opt.name = name;
    int sources = (agent_cmd.empty() ? 0 : 1) + (agent_url.empty() ? 0 : 1) +
                  (replay_from.empty() ? 0 : 1);
    if (sources != 1)
        throw Error("exactly one of --agent-cmd, --agent-url, --replay-from is required");
    if (!replay_from.empty()) {
        opt.kind = OptimizerKind::replay;
        if (conditions.empty()) conditions = {"none"};
        auto source = std::make_shared<TrajectoryStore>(replay_from);
        std::string src_opt = replay_optimizer, src_cond = replay_condition;
        opt.replay_lookup = [source, src_opt, src_cond](const std::string& task,
                                                        int run) -> std::vector<Design> {
            CorpusFilter filter;
            filter.task = task;
            if (!src_opt.empty()) filter.optimizer = src_opt;
            if (!src_cond.empty()) filter.condition = src_cond;
            for (const Trajectory& t : source->load(filter))
                if (t.run_index == run) {
                    std::vector<Design> seq;
                    for (const TrajectoryStep& s : t.steps) seq.push_back(s.design);
                    return seq;
                }
            throw TaskLoadError("replay source has no run " + std::to_string(run) +
                                " for task '" + task + "'");
        };
    } else {
        opt.kind = OptimizerKind::agent;
        if (conditions.empty()) conditions = {"domain_aware", "domain_agnostic"};
        if (!agent_cmd.empty())
            opt.make_transport = [agent_cmd] {
                return std::unique_ptr<AgentTransport>(new PipeTransport(agent_cmd));
            };
        else
            opt.make_transport = [agent_url] {
                return std::unique_ptr<AgentTransport>(new HttpTransport(agent_url));
            };
    }
    opt.conditions = conditions;
    plan.optimizers.push_back(std::move(opt));

    TrajectoryStore store(store_dir);
    CorpusSummary s = execute_plan(plan, store);
    std::cout << "run: cells=" << s.cells << " written=" << s.runs_written
              << " skipped=" << s.runs_skipped << " fallback_steps=" << s.fallback_steps
              << "\n";
    return 0;
}

int cmd_metrics(const std::vector<std::string>& task_dirs, const std::string& store_dir,
                const std::string& out_file, const GlobalConfig& cfg, bool lenient) {
    std::vector<LoadedTask> tasks = load_tasks(task_dirs, false);
    std::map<std::string, const LoadedTask*> by_name;
    for (const LoadedTask& t : tasks) by_name[t.manifest.name] = &t;

    TrajectoryStore store(store_dir);
    std::vector<std::string> warnings;
    std::vector<Trajectory> trajs = load_corpus(store, {}, lenient, &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    if (trajs.empty()) std::cerr << "warning: trajectory store is empty\n";

    MetricConfig mcfg;
    mcfg.horizons = cfg.horizons;
    mcfg.epsilon = cfg.epsilon;
    mcfg.optimum_fraction = cfg.optimum_fraction;
    mcfg.convergence_tolerance = cfg.convergence_tolerance;

    std::vector<MetricRow> rows;
    for (const Trajectory& t : trajs) {
        auto it = by_name.find(t.task);
        if (it == by_name.end())
            throw TaskLoadError("store references unknown task '" + t.task + "'");
        auto r = metric_rows_for(t, it->second->manifest.objective,
                                 it->second->manifest.space, mcfg, &it->second->dataset);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    std::ofstream out = open_out(out_file);
    write_metric_table_csv(out, rows);
    std::cout << "metrics: " << rows.size() << " rows over " << trajs.size()
              << " trajectories -> " << out_file << "\n";
    return 0;
}

int cmd_analyze(const std::vector<std::string>& task_dirs, const std::string& store_dir,
                const std::string& metrics_file, const std::string& out_dir,
                const std::string& baseline_label, int k, const GlobalConfig& cfg) {
    std::vector<LoadedTask> tasks = load_tasks(task_dirs, false);
    std::map<std::string, Objective> dirs = directions_of(tasks);

    std::ifstream in(metrics_file);
    if (!in) throw Error("cannot open metric table '" + metrics_file + "'");
    std::vector<MetricRow> rows = read_metric_table_csv(in);
    std::vector<CellSummary> cells = summarize_cells(rows);
    Entrant baseline = parse_entrant(baseline_label);

    // disagreement across horizons: the canonical tie-aware-strict rule plus
    // the permissive argmax variant (non-canonical, for robustness reads)
    {
        std::ofstream out = open_out(fs::path(out_dir) / "disagreement_by_horizon.csv");
        out << "horizon,tasks,disagreements,rate\n";
        std::ofstream perm =
            open_out(fs::path(out_dir) / "disagreement_by_horizon_permissive.csv");
        perm << "horizon,tasks,disagreements,rate,variant\n";
        for (int h : cfg.horizons) {
            DisagreementResult d = metric_disagreement(cells, h, dirs, cfg.tie_tol);
            out << h << "," << d.tasks << "," << d.disagreements << ","
                << format_sig6(d.rate) << "\n";
            DisagreementResult p = metric_disagreement(cells, h, dirs, cfg.tie_tol, true);
            perm << h << "," << p.tasks << "," << p.disagreements << ","
                 << format_sig6(p.rate) << ",permissive_noncanonical\n";
        }
    }

    DisagreementResult dis = metric_disagreement(cells, k, dirs, cfg.tie_tol);
    {
        std::ofstream out = open_out(fs::path(out_dir) / "disagreement_records.csv");
        out << "task,winner_auc,winner_outcome,agree,rank_of_auc_winner_under_outcome\n";
        for (const DisagreementRecord& r : dis.records)
            out << r.task << "," << r.winner_auc.label() << "," << r.winner_outcome.label()
                << "," << (r.agree ? 1 : 0) << "," << r.rank_of_auc_winner_under_outcome
                << "\n";
    }
    {
        std::ofstream out = open_out(fs::path(out_dir) / "confusion_matrix.csv");
        out << "winner_auc,winner_outcome,count\n";
        for (const auto& [key, n] : dis.confusion)
            out << key.first.label() << "," << key.second.label() << "," << n << "\n";
    }

    // pass rates vs the baseline for every other entrant
    {
        std::set<Entrant> entrants;
        for (const CellSummary& c : cells) entrants.insert(c.entrant);
        std::ofstream out = open_out(fs::path(out_dir) / "pass_rates.csv");
        out << "optimizer,condition,horizon,tasks,wins,rate\n";
        for (const Entrant& e : entrants) {
            if (e == baseline) continue;
            for (int h : cfg.horizons) {
                PassRateResult p =
                    pass_rate_vs_baseline(cells, e, baseline, "bsf_auc", h, dirs);
                if (p.tasks == 0) continue;
                out << e.optimizer << "," << e.condition << "," << h << "," << p.tasks << ","
                    << p.wins << "," << format_sig6(p.rate) << "\n";
            }
        }
    }

    // GP-normalized bsf-AUC per cell against the baseline's median
    {
        std::map<std::pair<std::string, int>, double> baseline_auc;
        for (const CellSummary& c : cells) {
            if (!(c.entrant == baseline)) continue;
            for (int h : cfg.horizons)
                if (auto v = c.median_of("bsf_auc", h)) baseline_auc[{c.task, h}] = *v;
        }
        std::ofstream out = open_out(fs::path(out_dir) / "gp_normalized.csv");
        out << "task,optimizer,condition,horizon,gp_normalized_bsf_auc\n";
        for (const CellSummary& c : cells) {
            if (c.entrant == baseline) continue;
            for (int h : cfg.horizons) {
                auto v = c.median_of("bsf_auc", h);
                auto b = baseline_auc.find({c.task, h});
                if (!v || b == baseline_auc.end()) continue;
                out << c.task << "," << c.entrant.optimizer << "," << c.entrant.condition
                    << "," << h << ","
                    << format_sig6(gp_normalize(*v, b->second, cfg.epsilon)) << "\n";
            }
        }
    }

    // paired condition win rates, per optimizer and pooled
    {
        std::set<std::string> optimizers;
        for (const CellSummary& c : cells)
            if (c.entrant.condition == "domain_aware" ||
                c.entrant.condition == "domain_agnostic")
                optimizers.insert(c.entrant.optimizer);
        std::ofstream out = open_out(fs::path(out_dir) / "win_rate.csv");
        out << "optimizer,pairs,wins,excluded,rate\n";
        for (const std::string& opt : optimizers) {
            std::vector<CellSummary> subset;
            for (const CellSummary& c : cells)
                if (c.entrant.optimizer == opt) subset.push_back(c);
            WinRateResult w = paired_condition_win_rate(subset, k);
            out << opt << "," << w.pairs << "," << w.wins << "," << w.excluded << ","
                << format_sig6(w.rate) << "\n";
        }
        WinRateResult pooled = paired_condition_win_rate(cells, k);
        out << "ALL," << pooled.pairs << "," << pooled.wins << "," << pooled.excluded << ","
            << format_sig6(pooled.rate) << "\n";
    }

    // convergent-gap table needs median curves from the store
    {
        TrajectoryStore store(store_dir);
        std::vector<Trajectory> trajs = load_corpus(store);
        auto curves = median_bsf_curves(trajs, dirs);
        ConvergentGapTable table = convergent_gap_table(dis, curves, k, dirs,
                                                        cfg.convergence_tolerance,
                                                        cfg.optimum_fraction);
        std::ofstream out = open_out(fs::path(out_dir) / "convergent_gap.csv");
        out << "task,winner_auc,winner_outcome,iter_auc_winner,iter_outcome_winner\n";
        for (const ConvergentGapRow& r : table.rows) {
            out << r.task << "," << r.winner_auc.label() << "," << r.winner_outcome.label()
                << ",";
            if (r.iter_auc_winner) out << *r.iter_auc_winner;
            out << ",";
            if (r.iter_outcome_winner) out << *r.iter_outcome_winner;
            out << "\n";
        }
        out << "MEDIAN,,,";
        if (table.median_iter_auc) out << format_sig6(*table.median_iter_auc);
        out << ",";
        if (table.median_iter_outcome) out << format_sig6(*table.median_iter_outcome);
        out << "\n";
    }

    // leave-one-optimizer-out robustness of the disagreement rate
    {
        std::set<std::string> optimizers;
        for (const CellSummary& c : cells) optimizers.insert(c.entrant.optimizer);
        std::ofstream out = open_out(fs::path(out_dir) / "loo_disagreement.csv");
        out << "excluded_optimizer,rate\n";
        if (optimizers.size() >= 2) {
            auto rate_fn = [&](const std::vector<CellSummary>& kept) {
                return metric_disagreement(kept, k, dirs, cfg.tie_tol).rate;
            };
            for (const auto& [unit, rate] :
                 leave_one_out_rate(cells, ExclusionUnit::optimizer, rate_fn))
                out << unit << "," << format_sig6(rate) << "\n";
        }
    }

    std::cout << "analyze: " << dis.tasks << " tasks, disagreement rate "
              << format_sig6(dis.rate) << " at k=" << k << " -> " << out_dir << "\n";
    return 0;
}

int cmd_audit(const std::vector<std::string>& task_dirs, const std::string& store_dir,
              const std::string& out_dir, const GlobalConfig& cfg) {
    std::vector<LoadedTask> tasks = load_tasks(task_dirs, true);
    TrajectoryStore store(store_dir);
    std::vector<AuditReport> reports;
    for (const LoadedTask& task : tasks) {
        CorpusFilter filter;
        filter.task = task.manifest.name;
        std::vector<Trajectory> trajs = load_corpus(store, filter);
        try {
            AuditReport rep =
                audit_task(*task.oracle, task.dataset, task.manifest.space, trajs, cfg.audit,
                           task.manifest.name, task.manifest.audit.key_column);
            std::ofstream out =
                open_out(fs::path(out_dir) / ("audit_" + task.manifest.name + ".json"));
            out << audit_report_to_json(rep).dump(2) << "\n";
            reports.push_back(std::move(rep));
        } catch (const Error& e) {
            std::cerr << "warning: audit skipped for '" << task.manifest.name
                      << "': " << e.what() << "\n";
        }
    }
    std::ofstream out = open_out(fs::path(out_dir) / "audit_summary.csv");
    write_audit_summary_csv(out, audit_summary(reports));
    std::cout << "audit: " << reports.size() << " task reports -> " << out_dir << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& task_dirs, const std::string& store_dir,
               const std::string& out_dir, const std::string& baseline_label,
               const GlobalConfig& cfg) {
    std::vector<LoadedTask> tasks = load_tasks(task_dirs, false);
    std::map<std::string, Objective> dirs = directions_of(tasks);
    std::map<std::string, const LoadedTask*> by_name;
    for (const LoadedTask& t : tasks) by_name[t.manifest.name] = &t;
    Entrant baseline = parse_entrant(baseline_label);

    TrajectoryStore store(store_dir);
    std::vector<Trajectory> trajs = load_corpus(store);
    if (trajs.empty()) std::cerr << "warning: trajectory store is empty\n";

    // per-run bsf curves grouped by cell
    std::map<std::pair<std::string, Entrant>, std::vector<BsfCurve>> curves;
    int iters = 0;
    for (const Trajectory& t : trajs) {
        Objective dir = dirs.count(t.task) ? dirs.at(t.task) : Objective::maximize;
        curves[{t.task, {t.optimizer, t.condition}}].push_back(best_so_far(t, dir));
        iters = std::max(iters, static_cast<int>(t.steps.size()));
    }

    // median per-cell bsf_auc@k for every k
    std::map<std::pair<std::string, Entrant>, std::vector<double>> cell_auc;
    for (const auto& [key, cell_curves] : curves) {
        int len = iters;
        for (const BsfCurve& c : cell_curves) len = std::min(len, c.length());
        std::vector<double> medians;
        for (int k = 1; k <= len; ++k) {
            std::vector<double> per_run;
            for (const BsfCurve& c : cell_curves) per_run.push_back(bsf_auc_at(c, k));
            medians.push_back(median(per_run));
        }
        cell_auc[key] = std::move(medians);
    }

    // per-iteration pass-rate series against the baseline
    {
        std::set<Entrant> entrants;
        for (const auto& [key, values] : cell_auc) entrants.insert(key.second);
        std::ofstream out = open_out(fs::path(out_dir) / "passrate_by_iter.csv");
        out << "optimizer,condition,iteration,tasks,wins,rate,wilson_low,wilson_high\n";
        for (const Entrant& e : entrants) {
            if (e == baseline) continue;
            for (int k = 1; k <= iters; ++k) {
                int wins = 0, total = 0;
                for (const auto& [key, values] : cell_auc) {
                    if (!(key.second == e)) continue;
                    auto b = cell_auc.find({key.first, baseline});
                    if (b == cell_auc.end()) continue;
                    if (k > static_cast<int>(values.size()) ||
                        k > static_cast<int>(b->second.size()))
                        continue;
                    ++total;
                    if (values[k - 1] > b->second[k - 1]) ++wins;
                }
                if (total == 0) continue;
                auto [wlo, whi] = wilson_interval(wins, total, 0.95);
                out << e.optimizer << "," << e.condition << "," << k << "," << total << ","
                    << wins << "," << format_sig6(static_cast<double>(wins) / total) << ","
                    << format_sig6(wlo) << "," << format_sig6(whi) << "\n";
            }
        }
    }

    // mean fraction-of-optimum curves (tasks with a cached optimum/worst)
    {
        auto med_curves = median_bsf_curves(trajs, dirs);
        std::ofstream out = open_out(fs::path(out_dir) / "fraction_of_optimum_by_iter.csv");
        out << "optimizer,condition,iteration,tasks,mean_fraction\n";
        std::map<Entrant, std::map<int, std::pair<double, int>>> acc;
        for (const auto& [key, curve] : med_curves) {
            auto it = by_name.find(key.first);
            if (it == by_name.end()) continue;
            const TaskManifest& m = it->second->manifest;
            if (!m.cached_optimum || !m.cached_worst || *m.cached_optimum == *m.cached_worst)
                continue;
            std::vector<double> frac =
                fraction_of_optimum_curve(curve, *m.cached_optimum, *m.cached_worst);
            for (std::size_t i = 0; i < frac.size(); ++i) {
                auto& slot = acc[key.second][static_cast<int>(i) + 1];
                slot.first += frac[i];
                slot.second += 1;
            }
        }
        for (const auto& [entrant, series] : acc)
            for (const auto& [k, sum_n] : series)
                out << entrant.optimizer << "," << entrant.condition << "," << k << ","
                    << sum_n.second << "," << format_sig6(sum_n.first / sum_n.second) << "\n";
    }

    // disagreement-by-horizon and convergent-gap figure data from raw curves
    {
        MetricConfig mcfg;
        mcfg.horizons = cfg.horizons;
        std::vector<MetricRow> rows;
        for (const Trajectory& t : trajs) {
            auto it = by_name.find(t.task);
            if (it == by_name.end()) continue;
            auto r = metric_rows_for(t, it->second->manifest.objective,
                                     it->second->manifest.space, mcfg);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        std::vector<CellSummary> cells = summarize_cells(rows);
        std::ofstream out = open_out(fs::path(out_dir) / "disagreement_by_horizon.csv");
        out << "horizon,tasks,disagreements,rate\n";
        for (int h : cfg.horizons) {
            DisagreementResult d = metric_disagreement(cells, h, dirs, cfg.tie_tol);
            out << h << "," << d.tasks << "," << d.disagreements << ","
                << format_sig6(d.rate) << "\n";
        }

        int k = cfg.horizons.empty() ? 30 : cfg.horizons.back();
        DisagreementResult dis = metric_disagreement(cells, k, dirs, cfg.tie_tol);
        std::ofstream grid = open_out(fs::path(out_dir) / "confusion_matrix.csv");
        grid << "winner_auc,winner_outcome,count\n";
        for (const auto& [key, n] : dis.confusion)
            grid << key.first.label() << "," << key.second.label() << "," << n << "\n";
        auto med_curves = median_bsf_curves(trajs, dirs);
        ConvergentGapTable table = convergent_gap_table(
            dis, med_curves, k, dirs, cfg.convergence_tolerance, cfg.optimum_fraction);
        std::ofstream gap = open_out(fs::path(out_dir) / "convergent_gap_pairs.csv");
        gap << "task,winner_auc,winner_outcome,iter_auc_winner,iter_outcome_winner\n";
        for (const ConvergentGapRow& r : table.rows) {
            gap << r.task << "," << r.winner_auc.label() << "," << r.winner_outcome.label()
                << ",";
            if (r.iter_auc_winner) gap << *r.iter_auc_winner;
            gap << ",";
            if (r.iter_outcome_winner) gap << *r.iter_outcome_winner;
            gap << "\n";
        }
    }

    std::cout << "report: figure data -> " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGPIPE, SIG_IGN);  // broken agent pipes surface as write errors
    CLI::App app{"seqbench: sequential-design evaluation harness"};
    app.require_subcommand(1);
    // global flags (--config, --seed, --workers) may follow the subcommand
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)");

    // shared knobs; every value falls back to config file then default
    std::uint64_t seed = 0;
    int workers = 0, iters = 0, runs = 0, baseline_runs = 0, k = 0;
    std::vector<int> horizons;
    double epsilon = 0, optimum_fraction = 0, convergence_tolerance = 0, tie_tol = 0;
    auto* seed_opt = app.add_option("--seed", seed, "global seed");
    auto* workers_opt = app.add_option("--workers", workers, "parallel cell workers");
    auto* horizons_opt = app.add_option("--horizons", horizons, "metric horizons k");
    auto* epsilon_opt =
        app.add_option("--epsilon", epsilon, "baseline-normalization denominator floor");
    auto* fraction_opt = app.add_option("--optimum-fraction", optimum_fraction,
                                        "iterations-to-threshold level");
    auto* tolerance_opt = app.add_option("--convergence-tolerance", convergence_tolerance,
                                         "convergent-gap endpoint window");
    auto* tie_tol_opt = app.add_option("--tie-tol", tie_tol, "relative tie tolerance");

    std::vector<std::string> task_dirs;
    std::string store_dir, out_file, out_dir, baseline_label = "gp_ucb";
    std::vector<std::string> families, optimizers{"gp_ucb", "random"}, conditions;
    bool refresh_cache = false, lenient = false;
    std::size_t cache_samples = 100000;
    std::string run_name, agent_cmd, agent_url, replay_from, replay_optimizer,
        replay_condition;
    double alignment_min = 0, range_gap_min = 0, sigma_gap_min = 0;

    CLI::App* train = app.add_subcommand("train-oracle", "fit the surrogate oracle per task");
    train->add_option("--task,--tasks", task_dirs, "task directories")->required();
    train->add_option("--families", families, "subset of ridge,random_forest,gradient_boosting");
    train->add_flag("--refresh-cache", refresh_cache, "recompute the cached optimum/worst");
    train->add_option("--cache-samples", cache_samples, "oracle samples for the cache");

    CLI::App* baseline = app.add_subcommand("baseline", "run the classical optimizer matrix");
    baseline->add_option("--tasks", task_dirs, "task directories")->required();
    baseline->add_option("--store", store_dir, "trajectory store directory")->required();
    baseline->add_option("--optimizers", optimizers, "gp_ucb,random subset");
    auto* bl_runs = baseline->add_option("--runs", runs, "runs per non-baseline cell");
    auto* bl_baseline_runs =
        baseline->add_option("--baseline-runs", baseline_runs, "runs per GP-UCB cell");
    auto* bl_iters = baseline->add_option("--iters", iters, "iterations per run");

    CLI::App* run = app.add_subcommand("run", "run an agent or replay matrix");
    run->add_option("--tasks", task_dirs, "task directories")->required();
    run->add_option("--store", store_dir, "trajectory store directory")->required();
    run->add_option("--name", run_name, "optimizer name recorded in the store")->required();
    run->add_option("--agent-cmd", agent_cmd, "agent child process (line-delimited JSON)");
    run->add_option("--agent-url", agent_url, "agent HTTP endpoint (POST JSON)");
    run->add_option("--replay-from", replay_from, "source store for replay");
    run->add_option("--replay-optimizer", replay_optimizer, "source optimizer filter");
    run->add_option("--replay-condition", replay_condition, "source condition filter");
    run->add_option("--conditions", conditions,
                    "conditions to run (default domain_aware,domain_agnostic for agents)");
    auto* run_runs = run->add_option("--runs", runs, "runs per cell");
    auto* run_iters = run->add_option("--iters", iters, "iterations per run");

    CLI::App* metrics = app.add_subcommand("metrics", "emit the long-form metric table");
    metrics->add_option("--tasks", task_dirs, "task directories")->required();
    metrics->add_option("--store", store_dir, "trajectory store directory")->required();
    metrics->add_option("--out", out_file, "output CSV path")->required();
    metrics->add_flag("--lenient", lenient, "skip corrupt store records with a warning");

    CLI::App* analyze = app.add_subcommand(
        "analyze", "disagreement, pass rates, win rates, convergent gaps");
    analyze->add_option("--tasks", task_dirs, "task directories")->required();
    analyze->add_option("--store", store_dir, "trajectory store directory")->required();
    analyze->add_option("--metrics", out_file, "metric table from the metrics command")
        ->required();
    analyze->add_option("--out-dir", out_dir, "analysis output directory")->required();
    analyze->add_option("--baseline", baseline_label, "baseline entrant (name or name@cond)");
    auto* an_k = analyze->add_option("--k", k, "headline horizon (default: last configured)");

    CLI::App* audit = app.add_subcommand("audit", "published-best audit per task");
    audit->add_option("--tasks", task_dirs, "task directories")->required();
    audit->add_option("--store", store_dir, "trajectory store directory")->required();
    audit->add_option("--out-dir", out_dir, "audit output directory")->required();
    auto* au_align = audit->add_option("--alignment-min", alignment_min,
                                       "feedback-actionable alignment threshold");
    auto* au_range = audit->add_option("--range-gap-min", range_gap_min,
                                       "criterion R threshold (fraction of target range)");
    auto* au_sigma = audit->add_option("--sigma-gap-min", sigma_gap_min,
                                       "criterion S threshold (target sigmas)");

    CLI::App* report = app.add_subcommand("report", "emit figure-data tables");
    report->add_option("--tasks", task_dirs, "task directories")->required();
    report->add_option("--store", store_dir, "trajectory store directory")->required();
    report->add_option("--out-dir", out_dir, "report output directory")->required();
    report->add_option("--baseline", baseline_label, "baseline entrant");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        GlobalConfig cfg = load_config(config_path);
        if (seed_opt->count()) cfg.seed = seed;
        if (workers_opt->count()) cfg.workers = workers;
        if (horizons_opt->count()) cfg.horizons = horizons;
        if (epsilon_opt->count()) cfg.epsilon = epsilon;
        if (fraction_opt->count()) cfg.optimum_fraction = optimum_fraction;
        if (tolerance_opt->count()) cfg.convergence_tolerance = convergence_tolerance;
        if (tie_tol_opt->count()) cfg.tie_tol = tie_tol;
        if (bl_runs->count() || run_runs->count()) cfg.runs_per_cell = runs;
        if (bl_baseline_runs->count()) cfg.baseline_runs = baseline_runs;
        if (bl_iters->count() || run_iters->count()) cfg.iters = iters;
        if (au_align->count()) cfg.audit.alignment_min = alignment_min;
        if (au_range->count()) cfg.audit.range_gap_min = range_gap_min;
        if (au_sigma->count()) cfg.audit.sigma_gap_min = sigma_gap_min;
        int headline_k = an_k->count() ? k : (cfg.horizons.empty() ? 30 : cfg.horizons.back());

        if (train->parsed())
            return cmd_train_oracle(task_dirs, families, cfg.seed, refresh_cache,
                                    cache_samples);
        if (baseline->parsed()) return cmd_baseline(task_dirs, store_dir, optimizers, cfg);
        if (run->parsed())
            return cmd_run(task_dirs, store_dir, run_name, agent_cmd, agent_url, replay_from,
                           replay_optimizer, replay_condition, conditions, cfg);
        if (metrics->parsed())
            return cmd_metrics(task_dirs, store_dir, out_file, cfg, lenient);
        if (analyze->parsed())
            return cmd_analyze(task_dirs, store_dir, out_file, out_dir, baseline_label,
                               headline_k, cfg);
        if (audit->parsed()) return cmd_audit(task_dirs, store_dir, out_dir, cfg);
        if (report->parsed())
            return cmd_report(task_dirs, store_dir, out_dir, baseline_label, cfg);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
