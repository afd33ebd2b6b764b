#pragma once

#include <filesystem>
#include <memory>

#include "seqbench/oracle.hpp"
#include "seqbench/task.hpp"

namespace seqbench {

SEQBENCH_DEFINE_ERROR(ManifestInvalidError);

struct AuditConfig {
    std::string key_column;  // empty = pick by oracle-score spread
};

/// Everything one task directory declares: the search space, the dataset
/// and oracle file references, audit configuration, and the cached
/// optimum/worst used for fraction-of-optimum normalization.
struct TaskManifest {
    std::string name;
    Objective objective = Objective::maximize;
    ParameterSpace space;
    std::string dataset_path;  // relative to the manifest directory
    std::string target;
    std::string oracle_path;  // relative
    AuditConfig audit;
    std::optional<int> baseline_runs_override;
    std::optional<double> cached_optimum;
    std::optional<double> cached_worst;
    std::string cache_source = "oracle";  // oracle | dataset
    std::filesystem::path dir;

    std::filesystem::path dataset_file() const { return dir / dataset_path; }
    std::filesystem::path oracle_file() const { return dir / oracle_path; }
};

namespace detail {

inline ParameterSpace space_from_manifest_json(const nlohmann::json& j,
                                               const std::string& name) {
    if (!j.is_object() || !j.contains("params") || !j.at("params").is_array())
        throw ManifestInvalidError("space: expected an object with a params array");
    std::vector<ParameterSpec> params;
    for (const auto& pj : j.at("params")) {
        ParameterSpec p;
        p.name = pj.at("name").get<std::string>();
        std::string kind = pj.at("kind").get<std::string>();
        if (kind == "numeric") {
            p.kind = ParamKind::numeric;
            p.lower = pj.at("lower").get<double>();
            p.upper = pj.at("upper").get<double>();
            if (pj.contains("unit") && !pj.at("unit").is_null())
                p.unit = pj.at("unit").get<std::string>();
        } else if (kind == "categorical") {
            p.kind = ParamKind::categorical;
            p.options = pj.at("options").get<std::vector<std::string>>();
        } else {
            throw ManifestInvalidError("space.params['" + p.name + "'].kind: '" + kind +
                                       "' is not numeric|categorical");
        }
        params.push_back(std::move(p));
    }
    try {
        return ParameterSpace(name, std::move(params));
    } catch (const Error& e) {
        throw ManifestInvalidError(std::string("space: ") + e.what());
    }
}

inline nlohmann::json space_to_manifest_json(const ParameterSpace& space) {
    nlohmann::json params = nlohmann::json::array();
    for (const ParameterSpec& p : space.params()) {
        nlohmann::json pj;
        pj["name"] = p.name;
        if (p.is_numeric()) {
            pj["kind"] = "numeric";
            pj["lower"] = p.lower;
            pj["upper"] = p.upper;
            if (!p.unit.empty()) pj["unit"] = p.unit;
        } else {
            pj["kind"] = "categorical";
            pj["options"] = p.options;
        }
        params.push_back(std::move(pj));
    }
    return {{"params", std::move(params)}};
}

}  // namespace detail

/// Parses and validates a task manifest. `path` may be the manifest file or
/// the task directory containing manifest.json. Field-level problems raise
/// ManifestInvalid with the offending field named.
inline TaskManifest load_manifest(std::filesystem::path path) {
    if (std::filesystem::is_directory(path)) path /= "manifest.json";
    std::ifstream in(path);
    if (!in) throw ManifestInvalidError("cannot open manifest '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestInvalidError(path.string() + ": " + e.what());
    }
    TaskManifest m;
    m.dir = path.parent_path();
    auto required = [&](const char* field) -> const nlohmann::json& {
        if (!j.contains(field))
            throw ManifestInvalidError(path.string() + ": missing field '" + field + "'");
        return j.at(field);
    };
    m.name = required("name").get<std::string>();
    std::string obj = required("objective").get<std::string>();
    if (obj != "maximize" && obj != "minimize")
        throw ManifestInvalidError(path.string() + ": objective '" + obj +
                                   "' is not maximize|minimize");
    m.objective = objective_from_string(obj);
    m.space = detail::space_from_manifest_json(required("space"), m.name);
    m.target = required("target").get<std::string>();
    m.dataset_path = required("dataset").get<std::string>();
    m.oracle_path = j.value("oracle", std::string("oracle.json"));
    if (j.contains("audit") && j.at("audit").is_object()) {
        const auto& a = j.at("audit");
        if (a.contains("key_column") && !a.at("key_column").is_null())
            m.audit.key_column = a.at("key_column").get<std::string>();
    }
    if (j.contains("baseline_runs_override") && !j.at("baseline_runs_override").is_null())
        m.baseline_runs_override = j.at("baseline_runs_override").get<int>();
    if (j.contains("cache") && j.at("cache").is_object()) {
        const auto& c = j.at("cache");
        if (c.contains("optimum") && !c.at("optimum").is_null())
            m.cached_optimum = c.at("optimum").get<double>();
        if (c.contains("worst") && !c.at("worst").is_null())
            m.cached_worst = c.at("worst").get<double>();
        if (c.contains("source") && !c.at("source").is_null()) {
            m.cache_source = c.at("source").get<std::string>();
            if (m.cache_source != "oracle" && m.cache_source != "dataset")
                throw ManifestInvalidError(path.string() +
                                           ": cache.source must be oracle|dataset");
        }
    }
    if (!m.audit.key_column.empty()) m.space.at(m.audit.key_column);
    if (!std::filesystem::exists(m.dataset_file()))
        throw ManifestInvalidError(path.string() + ": dataset file '" +
                                   m.dataset_file().string() + "' does not exist");
    return m;
}

inline void save_manifest(const TaskManifest& m) {
    nlohmann::json j;
    j["name"] = m.name;
    j["objective"] = to_string(m.objective);
    j["space"] = detail::space_to_manifest_json(m.space);
    j["target"] = m.target;
    j["dataset"] = m.dataset_path;
    j["oracle"] = m.oracle_path;
    j["audit"] = {{"key_column", m.audit.key_column.empty()
                                     ? nlohmann::json(nullptr)
                                     : nlohmann::json(m.audit.key_column)}};
    j["baseline_runs_override"] = m.baseline_runs_override
                                      ? nlohmann::json(*m.baseline_runs_override)
                                      : nlohmann::json(nullptr);
    j["cache"] = {{"optimum", m.cached_optimum ? nlohmann::json(*m.cached_optimum)
                                               : nlohmann::json(nullptr)},
                  {"worst", m.cached_worst ? nlohmann::json(*m.cached_worst)
                                           : nlohmann::json(nullptr)},
                  {"source", m.cache_source}};
    std::ofstream out(m.dir / "manifest.json");
    if (!out)
        throw ManifestInvalidError("cannot write manifest in '" + m.dir.string() + "'");
    out << j.dump(2) << "\n";
}

/// A manifest with its dataset (always) and oracle (when the file exists)
/// loaded and ready to run.
struct LoadedTask {
    TaskManifest manifest;
    Dataset dataset;
    std::shared_ptr<OracleModel> oracle;  // may be null before train-oracle

    TaskSpec spec() const {
        if (!oracle)
            throw Error("task '" + manifest.name + "' has no trained oracle; run train-oracle");
        TaskSpec t;
        t.name = manifest.name;
        t.objective = manifest.objective;
        t.space = manifest.space;
        std::shared_ptr<OracleModel> model = oracle;
        ParameterSpace space = manifest.space;
        t.oracle = [model, space](const Design& d) { return predict(*model, space, d); };
        t.fallback_score = worst_score(dataset);
        t.optimum_cache = manifest.cached_optimum;
        t.worst_cache = manifest.cached_worst;
        return t;
    }
};

inline LoadedTask load_task(const std::filesystem::path& path, bool need_oracle = true) {
    LoadedTask t;
    t.manifest = load_manifest(path);
    try {
        t.dataset = load_dataset_csv(t.manifest.dataset_file().string(), t.manifest.space,
                                     t.manifest.target, t.manifest.objective);
    } catch (const Error& e) {
        throw ManifestInvalidError("task '" + t.manifest.name + "': " + e.what());
    }
    if (std::filesystem::exists(t.manifest.oracle_file()))
        t.oracle = std::make_shared<OracleModel>(load_oracle(t.manifest.oracle_file().string()));
    else if (need_oracle)
        throw ManifestInvalidError("task '" + t.manifest.name + "': oracle file '" +
                                   t.manifest.oracle_file().string() +
                                   "' does not exist (run train-oracle)");
    return t;
}

/// Empirical optimum/worst of the oracle over a seeded uniform sample,
/// or the dataset's best/worst target when cache_source is "dataset".
inline std::pair<double, double> compute_task_cache(const LoadedTask& task,
                                                    std::size_t samples = 100000,
                                                    std::uint64_t seed = 0) {
    const bool maximize = task.manifest.objective == Objective::maximize;
    if (task.manifest.cache_source == "dataset") {
        double best = task.dataset.rows.front().second;
        double worst = best;
        for (const auto& r : task.dataset.rows) {
            best = maximize ? std::max(best, r.second) : std::min(best, r.second);
            worst = maximize ? std::min(worst, r.second) : std::max(worst, r.second);
        }
        return {best, worst};
    }
    if (!task.oracle) throw Error("compute_task_cache: oracle not loaded");
    Rng rng(derive_seed(task.manifest.name, "cache", "none", 0, seed));
    double best = 0, worst = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        Design d = random_design(task.manifest.space, rng);
        double y = predict(*task.oracle, task.manifest.space, d);
        if (i == 0) {
            best = worst = y;
        } else {
            best = maximize ? std::max(best, y) : std::min(best, y);
            worst = maximize ? std::min(worst, y) : std::max(worst, y);
        }
    }
    return {best, worst};
}

}  // namespace seqbench
