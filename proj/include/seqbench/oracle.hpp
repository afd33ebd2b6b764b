#pragma once

#include <array>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

#include "seqbench/dataset.hpp"
#include "seqbench/space.hpp"

namespace seqbench {

SEQBENCH_DEFINE_ERROR(DegenerateTargetError);
SEQBENCH_DEFINE_ERROR(OracleFormatError);

enum class OracleFamily { ridge, random_forest, gradient_boosting };

inline std::string to_string(OracleFamily f) {
    switch (f) {
        case OracleFamily::ridge: return "ridge";
        case OracleFamily::random_forest: return "random_forest";
        case OracleFamily::gradient_boosting: return "gradient_boosting";
    }
    return "?";
}

inline OracleFamily oracle_family_from_string(const std::string& s) {
    if (s == "ridge") return OracleFamily::ridge;
    if (s == "random_forest") return OracleFamily::random_forest;
    if (s == "gradient_boosting") return OracleFamily::gradient_boosting;
    throw OracleFormatError("unknown oracle family '" + s + "'");
}

/// Training statistics used for imputation at train and predict time.
struct FeatureStats {
    std::map<std::string, double> numeric_mean;  // original units
    std::map<std::string, double> numeric_min;
    std::map<std::string, double> numeric_max;
    std::map<std::string, std::string> categorical_mode;

    /// Scaled [0,1] imputation values for encode_design.
    EncodeFill encode_fill(const ParameterSpace& space) const {
        EncodeFill fill;
        for (const ParameterSpec& p : space.params()) {
            if (!p.is_numeric()) continue;
            auto it = numeric_mean.find(p.name);
            if (it != numeric_mean.end())
                fill.scaled_by_param[p.name] = (it->second - p.lower) / (p.upper - p.lower);
        }
        return fill;
    }
};

inline FeatureStats compute_feature_stats(const Dataset& data, const ParameterSpace& space) {
    FeatureStats st;
    for (const ParameterSpec& p : space.params()) {
        if (p.is_numeric()) {
            double sum = 0.0, lo = std::numeric_limits<double>::infinity(),
                   hi = -std::numeric_limits<double>::infinity();
            std::size_t n = 0;
            for (const auto& r : data.rows) {
                if (!r.first.has(p.name)) continue;
                double x = r.first.numeric(p.name);
                sum += x;
                lo = std::min(lo, x);
                hi = std::max(hi, x);
                ++n;
            }
            if (n == 0) {  // can happen inside LOO folds; fall back to range midpoint
                st.numeric_mean[p.name] = 0.5 * (p.lower + p.upper);
                st.numeric_min[p.name] = p.lower;
                st.numeric_max[p.name] = p.upper;
            } else {
                st.numeric_mean[p.name] = sum / static_cast<double>(n);
                st.numeric_min[p.name] = lo;
                st.numeric_max[p.name] = hi;
            }
        } else {
            std::map<std::string, std::size_t> counts;
            for (const auto& r : data.rows)
                if (r.first.has(p.name)) ++counts[r.first.option(p.name)];
            if (counts.empty()) {
                st.categorical_mode[p.name] = p.options.front();
            } else {
                // most frequent; ties resolved to the lexicographically smallest
                std::string best;
                std::size_t best_n = 0;
                for (const auto& [opt, n] : counts)
                    if (n > best_n) { best = opt; best_n = n; }
                st.categorical_mode[p.name] = best;
            }
        }
    }
    return st;
}

/// Train-time row encoding: missing numerics take the training mean,
/// missing categoricals take the modal value's one-hot block.
inline EncodedDesign encode_for_training(const ParameterSpace& space, const Design& d,
                                         const FeatureStats& stats) {
    Design filled = d;
    for (const ParameterSpec& p : space.params())
        if (p.is_categorical() && !d.has(p.name))
            filled.set(p.name, stats.categorical_mode.at(p.name));
    return encode_design(space, filled, stats.encode_fill(space));
}

/// Predict-time encoding: missing numerics take the training mean,
/// missing categoricals become the all-zero block.
inline EncodedDesign encode_for_prediction(const ParameterSpace& space, const Design& d,
                                           const FeatureStats& stats) {
    return encode_design(space, d, stats.encode_fill(space));
}

// ---------------------------------------------------------------------------
// Ridge regression on standardized features.
// ---------------------------------------------------------------------------

struct RidgeModel {
    double lambda = 0.0;
    std::vector<double> coef;       // per standardized feature
    double intercept = 0.0;         // mean of training targets
    std::vector<double> feat_mean;  // per encoded feature
    std::vector<double> feat_std;   // per encoded feature (0 replaced by 1)

    double predict(const std::vector<double>& x) const {
        double y = intercept;
        for (std::size_t j = 0; j < coef.size(); ++j)
            y += coef[j] * (x[j] - feat_mean[j]) / feat_std[j];
        return y;
    }
};

namespace detail {

/// In-place Cholesky solve of A x = b for symmetric positive definite A.
/// Returns false if the factorization hits a non-positive pivot.
inline bool cholesky_solve(std::vector<std::vector<double>>& a, std::vector<double>& b) {
    const std::size_t n = a.size();
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j][j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
        if (d <= 0.0) return false;
        a[j][j] = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
            a[i][j] = s / a[j][j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {  // L z = b
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i][k] * b[k];
        b[i] = s / a[i][i];
    }
    for (std::size_t ii = n; ii > 0; --ii) {  // L^T x = z
        std::size_t i = ii - 1;
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[k][i] * b[k];
        b[i] = s / a[i][i];
    }
    return true;
}

}  // namespace detail

inline RidgeModel fit_ridge(const std::vector<std::vector<double>>& X,
                            const std::vector<double>& y, double lambda) {
    const std::size_t n = X.size();
    const std::size_t p = n ? X[0].size() : 0;
    RidgeModel m;
    m.lambda = lambda;
    m.feat_mean.assign(p, 0.0);
    m.feat_std.assign(p, 1.0);
    for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += X[i][j];
        m.feat_mean[j] = s / static_cast<double>(n);
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = X[i][j] - m.feat_mean[j];
            v += d * d;
        }
        double sd = std::sqrt(v / static_cast<double>(n));
        m.feat_std[j] = sd > 0.0 ? sd : 1.0;
    }
    m.intercept = 0.0;
    for (double v : y) m.intercept += v;
    m.intercept /= static_cast<double>(n);

    // normal equations on standardized features, centered target
    std::vector<std::vector<double>> a(p, std::vector<double>(p, 0.0));
    std::vector<double> b(p, 0.0);
    std::vector<double> z(p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j)
            z[j] = (X[i][j] - m.feat_mean[j]) / m.feat_std[j];
        double yc = y[i] - m.intercept;
        for (std::size_t j = 0; j < p; ++j) {
            b[j] += z[j] * yc;
            for (std::size_t k = 0; k <= j; ++k) a[j][k] += z[j] * z[k];
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = j + 1; k < p; ++k) a[j][k] = a[k][j];
        a[j][j] += lambda;
    }
    if (!detail::cholesky_solve(a, b))
        throw Error("ridge normal equations not positive definite");
    m.coef = std::move(b);
    return m;
}

// ---------------------------------------------------------------------------
// Regression trees (shared by random forest and gradient boosting).
// ---------------------------------------------------------------------------

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(const std::vector<double>& x) const {
        int i = 0;
        while (nodes[i].feature >= 0)
            i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
        return nodes[i].value;
    }
};

namespace detail {

struct SplitResult {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double sse = std::numeric_limits<double>::infinity();
};

/// Best SSE split over the given candidate features. Deterministic: features
/// scanned in the order given, earlier strictly-better splits win.
inline SplitResult best_split(const std::vector<std::vector<double>>& X,
                              const std::vector<double>& y,
                              const std::vector<std::size_t>& rows,
                              const std::vector<int>& features) {
    SplitResult best;
    std::vector<std::size_t> order(rows);
    for (int f : features) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return X[a][f] < X[b][f];
        });
        double total_sum = 0.0;
        for (std::size_t r : order) total_sum += y[r];
        double left_sum = 0.0, left_sq = 0.0;
        double total_sq = 0.0;
        for (std::size_t r : order) total_sq += y[r] * y[r];
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            double yi = y[order[i]];
            left_sum += yi;
            left_sq += yi * yi;
            double xl = X[order[i]][f], xr = X[order[i + 1]][f];
            if (xl == xr) continue;
            double nl = static_cast<double>(i + 1);
            double nr = static_cast<double>(order.size() - i - 1);
            double right_sum = total_sum - left_sum;
            double right_sq = total_sq - left_sq;
            double sse = (left_sq - left_sum * left_sum / nl) +
                         (right_sq - right_sum * right_sum / nr);
            if (sse < best.sse) {
                best.found = true;
                best.feature = f;
                best.threshold = 0.5 * (xl + xr);
                best.sse = sse;
            }
        }
    }
    return best;
}

struct TreeBuilder {
    const std::vector<std::vector<double>>& X;
    const std::vector<double>& y;
    int max_depth;      // < 0 means unlimited
    int features_per_split;  // <= 0 means all
    Rng* rng;           // used only when subsampling features
    Tree tree;

    int build(const std::vector<std::size_t>& rows, int depth) {
        TreeNode node;
        double sum = 0.0;
        for (std::size_t r : rows) sum += y[r];
        node.value = sum / static_cast<double>(rows.size());
        bool pure = true;
        for (std::size_t r : rows)
            if (y[r] != y[rows[0]]) { pure = false; break; }
        int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(node);
        if (rows.size() < 2 || pure || (max_depth >= 0 && depth >= max_depth)) return idx;

        const int p = static_cast<int>(X[0].size());
        std::vector<int> feats(p);
        std::iota(feats.begin(), feats.end(), 0);
        if (features_per_split > 0 && features_per_split < p) {
            // partial Fisher-Yates, then restore order for deterministic scans
            for (int i = 0; i < features_per_split; ++i) {
                std::size_t j = i + rng->index(static_cast<std::size_t>(p - i));
                std::swap(feats[i], feats[j]);
            }
            feats.resize(features_per_split);
            std::sort(feats.begin(), feats.end());
        }
        SplitResult s = best_split(X, y, rows, feats);
        if (!s.found) return idx;

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows)
            (X[r][s.feature] <= s.threshold ? left_rows : right_rows).push_back(r);
        if (left_rows.empty() || right_rows.empty()) return idx;
        tree.nodes[idx].feature = s.feature;
        tree.nodes[idx].threshold = s.threshold;
        tree.nodes[idx].left = build(left_rows, depth + 1);
        tree.nodes[idx].right = build(right_rows, depth + 1);
        return idx;
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Forest / boosting ensembles.
// ---------------------------------------------------------------------------

struct ForestModel {
    std::vector<Tree> trees;

    double predict(const std::vector<double>& x) const {
        double s = 0.0;
        for (const Tree& t : trees) s += t.predict(x);
        return s / static_cast<double>(trees.size());
    }
};

struct BoostModel {
    double init = 0.0;
    double learning_rate = 0.1;
    std::vector<Tree> trees;

    double predict(const std::vector<double>& x) const {
        double s = init;
        for (const Tree& t : trees) s += learning_rate * t.predict(x);
        return s;
    }
};

/// 200 bagged trees, ceil(p/3) features per split, min leaf 1.
/// Tree randomness derives from (seed, tree index) against the given row
/// order, so refits on the same rows are identical.
inline ForestModel fit_forest(const std::vector<std::vector<double>>& X,
                              const std::vector<double>& y, std::uint64_t seed,
                              int n_trees = 200) {
    const std::size_t n = X.size();
    const int p = static_cast<int>(X[0].size());
    const int feats = (p + 2) / 3;
    ForestModel m;
    m.trees.reserve(n_trees);
    for (int t = 0; t < n_trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = rng.index(n);
        detail::TreeBuilder builder{X, y, -1, feats, &rng, Tree{}};
        builder.build(rows, 0);
        m.trees.push_back(std::move(builder.tree));
    }
    return m;
}

/// 200 depth-3 trees, learning rate 0.1, squared loss. Fully deterministic.
inline BoostModel fit_boost(const std::vector<std::vector<double>>& X,
                            const std::vector<double>& y, int n_trees = 200,
                            double learning_rate = 0.1, int max_depth = 3) {
    const std::size_t n = X.size();
    BoostModel m;
    m.learning_rate = learning_rate;
    m.init = 0.0;
    for (double v : y) m.init += v;
    m.init /= static_cast<double>(n);
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - m.init;
    std::vector<std::size_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    m.trees.reserve(n_trees);
    for (int t = 0; t < n_trees; ++t) {
        detail::TreeBuilder builder{X, residual, max_depth, 0, nullptr, Tree{}};
        builder.build(all_rows, 0);
        Tree tree = std::move(builder.tree);
        for (std::size_t i = 0; i < n; ++i) residual[i] -= learning_rate * tree.predict(X[i]);
        m.trees.push_back(std::move(tree));
    }
    return m;
}

// ---------------------------------------------------------------------------
// OracleModel: the selected family plus everything predict needs.
// ---------------------------------------------------------------------------

struct OracleModel {
    OracleFamily family = OracleFamily::ridge;
    int hyper_index = 0;
    double loo_r2 = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t train_seed = 0;
    FeatureStats stats;
    RidgeModel ridge;
    ForestModel forest;
    BoostModel boost;

    double predict_encoded(const std::vector<double>& x) const {
        switch (family) {
            case OracleFamily::ridge: return ridge.predict(x);
            case OracleFamily::random_forest: return forest.predict(x);
            case OracleFamily::gradient_boosting: return boost.predict(x);
        }
        return 0.0;
    }
};

inline const std::vector<double>& ridge_lambda_grid() {
    static const std::vector<double> grid{0.01, 0.1, 1.0, 10.0};
    return grid;
}

inline int family_hyper_count(OracleFamily f) {
    return f == OracleFamily::ridge ? static_cast<int>(ridge_lambda_grid().size()) : 1;
}

namespace detail {

struct TrainingMatrix {
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    FeatureStats stats;
};

inline TrainingMatrix build_training_matrix(const Dataset& data, const ParameterSpace& space) {
    TrainingMatrix tm;
    tm.stats = compute_feature_stats(data, space);
    tm.X.reserve(data.rows.size());
    tm.y.reserve(data.rows.size());
    for (const auto& [design, target] : data.rows) {
        tm.X.push_back(encode_for_training(space, design, tm.stats).vec);
        tm.y.push_back(target);
    }
    return tm;
}

}  // namespace detail

/// Fits one (family, hyperparameter) candidate on the full dataset.
/// `hyper` is the ridge regularization strength; tree families ignore it.
inline OracleModel fit_family(const Dataset& data, const ParameterSpace& space,
                              OracleFamily family, double hyper, std::uint64_t seed) {
    detail::TrainingMatrix tm = detail::build_training_matrix(data, space);
    OracleModel m;
    m.family = family;
    m.train_seed = seed;
    m.stats = std::move(tm.stats);
    switch (family) {
        case OracleFamily::ridge:
            m.ridge = fit_ridge(tm.X, tm.y, hyper);
            break;
        case OracleFamily::random_forest:
            m.forest = fit_forest(tm.X, tm.y, seed);
            break;
        case OracleFamily::gradient_boosting:
            m.boost = fit_boost(tm.X, tm.y);
            break;
    }
    return m;
}

/// Deterministic prediction in original target units. The design must
/// already be validated against the space.
inline double predict(const OracleModel& model, const ParameterSpace& space, const Design& d) {
    return model.predict_encoded(encode_for_prediction(space, d, model.stats).vec);
}

/// Leave-one-out R^2 for one (family, hyperparameter) candidate:
/// R^2 = 1 - SS_res/SS_tot, each row predicted by a model fit on the
/// remaining rows with the same seed-derived determinism.
inline double loo_r2(const Dataset& data, const ParameterSpace& space, OracleFamily family,
                     double hyper, std::uint64_t seed) {
    validate_dataset(data, space);
    const std::size_t n = data.rows.size();
    double ybar = 0.0;
    for (const auto& r : data.rows) ybar += r.second;
    ybar /= static_cast<double>(n);
    double ss_tot = 0.0;
    for (const auto& r : data.rows) ss_tot += (r.second - ybar) * (r.second - ybar);
    if (ss_tot == 0.0)
        throw DegenerateTargetError("all targets equal; R^2 undefined");

    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Dataset fold;
        fold.target_name = data.target_name;
        fold.objective = data.objective;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) fold.rows.push_back(data.rows[j]);
        OracleModel m = fit_family(fold, space, family, hyper, seed);
        double pred = predict(m, space, data.rows[i].first);
        double err = data.rows[i].second - pred;
        ss_res += err * err;
    }
    return 1.0 - ss_res / ss_tot;
}

/// Fits every requested family over its hyperparameter grid, scores each by
/// LOO R^2 and returns the winner refit on all rows. Ties resolve to the
/// earlier family (ridge < random_forest < gradient_boosting) and the
/// smaller hyperparameter index.
inline OracleModel fit_oracle(const Dataset& data, const ParameterSpace& space,
                              std::uint64_t seed,
                              const std::set<OracleFamily>& families = {
                                  OracleFamily::ridge, OracleFamily::random_forest,
                                  OracleFamily::gradient_boosting}) {
    validate_dataset(data, space);
    if (families.empty()) throw Error("fit_oracle: empty family set");
    const std::array<OracleFamily, 3> order{OracleFamily::ridge, OracleFamily::random_forest,
                                            OracleFamily::gradient_boosting};
    bool have_best = false;
    OracleFamily best_family = OracleFamily::ridge;
    int best_hyper = 0;
    double best_r2 = -std::numeric_limits<double>::infinity();
    for (OracleFamily f : order) {
        if (!families.count(f)) continue;
        for (int h = 0; h < family_hyper_count(f); ++h) {
            double hyper = f == OracleFamily::ridge ? ridge_lambda_grid()[h] : 0.0;
            double r2 = loo_r2(data, space, f, hyper, seed);
            if (!have_best || r2 > best_r2) {
                have_best = true;
                best_family = f;
                best_hyper = h;
                best_r2 = r2;
            }
        }
    }
    double hyper = best_family == OracleFamily::ridge ? ridge_lambda_grid()[best_hyper] : 0.0;
    OracleModel m = fit_family(data, space, best_family, hyper, seed);
    m.hyper_index = best_hyper;
    m.loo_r2 = best_r2;
    return m;
}

// ---------------------------------------------------------------------------
// Serialization: self-describing JSON document, bit-exact round-trip.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json tree_to_json(const Tree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : t.nodes)
        nodes.push_back({{"f", n.feature},
                         {"t", n.threshold},
                         {"v", n.value},
                         {"l", n.left},
                         {"r", n.right}});
    return nodes;
}

inline Tree tree_from_json(const nlohmann::json& j) {
    Tree t;
    for (const auto& n : j) {
        TreeNode node;
        node.feature = n.at("f").get<int>();
        node.threshold = n.at("t").get<double>();
        node.value = n.at("v").get<double>();
        node.left = n.at("l").get<int>();
        node.right = n.at("r").get<int>();
        t.nodes.push_back(node);
    }
    return t;
}

}  // namespace detail

inline nlohmann::json oracle_to_json(const OracleModel& m) {
    nlohmann::json j;
    j["format"] = "seqbench-oracle";
    j["version"] = 1;
    j["family"] = to_string(m.family);
    j["hyper_index"] = m.hyper_index;
    j["loo_r2"] = m.loo_r2;
    j["train_seed"] = m.train_seed;
    j["feature_stats"] = {{"numeric_mean", m.stats.numeric_mean},
                          {"numeric_min", m.stats.numeric_min},
                          {"numeric_max", m.stats.numeric_max},
                          {"categorical_mode", m.stats.categorical_mode}};
    switch (m.family) {
        case OracleFamily::ridge:
            j["ridge"] = {{"lambda", m.ridge.lambda},
                          {"coef", m.ridge.coef},
                          {"intercept", m.ridge.intercept},
                          {"feat_mean", m.ridge.feat_mean},
                          {"feat_std", m.ridge.feat_std}};
            break;
        case OracleFamily::random_forest: {
            nlohmann::json trees = nlohmann::json::array();
            for (const Tree& t : m.forest.trees) trees.push_back(detail::tree_to_json(t));
            j["forest"] = {{"trees", std::move(trees)}};
            break;
        }
        case OracleFamily::gradient_boosting: {
            nlohmann::json trees = nlohmann::json::array();
            for (const Tree& t : m.boost.trees) trees.push_back(detail::tree_to_json(t));
            j["boost"] = {{"init", m.boost.init},
                          {"learning_rate", m.boost.learning_rate},
                          {"trees", std::move(trees)}};
            break;
        }
    }
    return j;
}

inline OracleModel oracle_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "seqbench-oracle")
        throw OracleFormatError("not a seqbench oracle document");
    OracleModel m;
    m.family = oracle_family_from_string(j.at("family").get<std::string>());
    m.hyper_index = j.at("hyper_index").get<int>();
    // a NaN loo_r2 (model not LOO-scored) serializes as JSON null
    m.loo_r2 = j.at("loo_r2").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                        : j.at("loo_r2").get<double>();
    m.train_seed = j.at("train_seed").get<std::uint64_t>();
    const auto& fs = j.at("feature_stats");
    m.stats.numeric_mean = fs.at("numeric_mean").get<std::map<std::string, double>>();
    m.stats.numeric_min = fs.at("numeric_min").get<std::map<std::string, double>>();
    m.stats.numeric_max = fs.at("numeric_max").get<std::map<std::string, double>>();
    m.stats.categorical_mode =
        fs.at("categorical_mode").get<std::map<std::string, std::string>>();
    switch (m.family) {
        case OracleFamily::ridge: {
            const auto& r = j.at("ridge");
            m.ridge.lambda = r.at("lambda").get<double>();
            m.ridge.coef = r.at("coef").get<std::vector<double>>();
            m.ridge.intercept = r.at("intercept").get<double>();
            m.ridge.feat_mean = r.at("feat_mean").get<std::vector<double>>();
            m.ridge.feat_std = r.at("feat_std").get<std::vector<double>>();
            break;
        }
        case OracleFamily::random_forest:
            for (const auto& t : j.at("forest").at("trees"))
                m.forest.trees.push_back(detail::tree_from_json(t));
            break;
        case OracleFamily::gradient_boosting: {
            const auto& b = j.at("boost");
            m.boost.init = b.at("init").get<double>();
            m.boost.learning_rate = b.at("learning_rate").get<double>();
            for (const auto& t : b.at("trees"))
                m.boost.trees.push_back(detail::tree_from_json(t));
            break;
        }
    }
    return m;
}

inline void save_oracle(const std::string& path, const OracleModel& m) {
    std::ofstream out(path);
    if (!out) throw OracleFormatError("cannot write oracle file '" + path + "'");
    out << oracle_to_json(m).dump(2) << "\n";
}

inline OracleModel load_oracle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw OracleFormatError("cannot open oracle file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw OracleFormatError("oracle file '" + path + "': " + e.what());
    }
    return oracle_from_json(j);
}

}  // namespace seqbench
