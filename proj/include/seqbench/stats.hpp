#pragma once

#include <array>
#include <functional>
#include <optional>

#include "seqbench/common.hpp"

namespace seqbench {

SEQBENCH_DEFINE_ERROR(ZeroVarianceError);

enum class Sidedness { one, two };

inline std::string to_string(Sidedness s) { return s == Sidedness::one ? "one" : "two"; }

struct StatResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::string method;
    int n = 0;
    Sidedness sidedness = Sidedness::two;
    std::string note;  // set for flagged degenerate inputs
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Wichura's AS241 inverse normal CDF (double precision).
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error("inverse_normal_cdf: p must be in (0,1)");
    double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        double r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                     67265.770927008700853) * r + 45921.953931549871457) * r +
                   13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                     39307.89580009271061) * r + 21213.794301586595867) * r +
                   5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                    0.24178072517745061177) * r + 1.27045825245236838258) * r +
                  3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                    0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                  0.68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                  0.29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                    1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                  0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

namespace detail {

/// Mid-ranks (average rank for ties), 1-based.
inline std::vector<double> midranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test.
// ---------------------------------------------------------------------------

/// Zero diffs are dropped (Wilcoxon's convention), ties are mid-ranked.
/// One-sided p-values across this kit are effect-directed: the tail on the
/// side the observed statistic falls, so one-sided <= two-sided always
/// holds. Exact sign enumeration for n <= 20, then normal approximation
/// with tie and continuity corrections. All-zero input is flagged, p = 1.
inline StatResult wilcoxon_signed_rank(const std::vector<double>& diffs, Sidedness sidedness) {
    StatResult res;
    res.sidedness = sidedness;
    std::vector<double> nz;
    for (double d : diffs)
        if (d != 0.0) nz.push_back(d);
    res.n = static_cast<int>(nz.size());
    if (nz.empty()) {
        res.method = "wilcoxon-signed-rank/degenerate";
        res.p_value = 1.0;
        res.note = "all diffs zero";
        return res;
    }
    std::vector<double> abs_d;
    abs_d.reserve(nz.size());
    for (double d : nz) abs_d.push_back(std::abs(d));
    std::vector<double> ranks = detail::midranks(abs_d);
    double w_plus = 0.0;
    for (std::size_t i = 0; i < nz.size(); ++i)
        if (nz[i] > 0.0) w_plus += ranks[i];
    res.statistic = w_plus;
    const int n = res.n;

    if (n <= 20) {
        res.method = "wilcoxon-signed-rank/exact";
        const std::uint64_t total = 1ull << n;
        std::uint64_t ge = 0, le = 0;
        const double eps = 1e-9;
        for (std::uint64_t pattern = 0; pattern < total; ++pattern) {
            double w = 0.0;
            for (int i = 0; i < n; ++i)
                if (pattern & (1ull << i)) w += ranks[i];
            if (w >= w_plus - eps) ++ge;
            if (w <= w_plus + eps) ++le;
        }
        double p_ge = static_cast<double>(ge) / static_cast<double>(total);
        double p_le = static_cast<double>(le) / static_cast<double>(total);
        double tail = std::min(p_ge, p_le);
        res.p_value = sidedness == Sidedness::one ? tail : std::min(1.0, 2.0 * tail);
        return res;
    }

    res.method = "wilcoxon-signed-rank/normal";
    double mean_w = n * (n + 1.0) / 4.0;
    double var_w = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    // tie correction: subtract sum(t^3 - t)/48 over tied groups of |diffs|
    std::vector<double> sorted_abs = abs_d;
    std::sort(sorted_abs.begin(), sorted_abs.end());
    std::size_t i = 0;
    while (i < sorted_abs.size()) {
        std::size_t j = i;
        while (j + 1 < sorted_abs.size() && sorted_abs[j + 1] == sorted_abs[i]) ++j;
        double t = static_cast<double>(j - i + 1);
        var_w -= (t * t * t - t) / 48.0;
        i = j + 1;
    }
    double sd = std::sqrt(var_w);
    double z = (std::abs(w_plus - mean_w) - 0.5) / sd;
    double tail = 1.0 - normal_cdf(z);
    res.p_value = sidedness == Sidedness::one ? tail : std::min(1.0, 2.0 * tail);
    return res;
}

// ---------------------------------------------------------------------------
// Mann-Whitney U test.
// ---------------------------------------------------------------------------

/// Statistic: U_b = #{(a_i, b_j): b_j > a_i} (+ 0.5 per tie); a one-sided
/// p is the effect-directed tail. Exact enumeration of group assignments
/// while the split count stays enumerable, otherwise normal approximation
/// with tie correction and continuity correction. `force_normal` exposes
/// the approximation regardless of sample size.
inline StatResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b,
                                 Sidedness sidedness, bool force_normal = false) {
    if (a.empty() || b.empty()) throw Error("mann_whitney_u: empty sample");
    StatResult res;
    res.sidedness = sidedness;
    res.n = static_cast<int>(a.size() + b.size());
    const int na = static_cast<int>(a.size());
    const int nb = static_cast<int>(b.size());

    auto u_of = [](const std::vector<double>& xa, const std::vector<double>& xb) {
        double u = 0.0;
        for (double bv : xb)
            for (double av : xa) {
                if (bv > av) u += 1.0;
                else if (bv == av) u += 0.5;
            }
        return u;
    };
    double u_obs = u_of(a, b);
    res.statistic = u_obs;

    double log_total = detail::log_choose(na + nb, nb);
    bool exact = !force_normal && log_total <= std::log(1e6) &&
                 static_cast<long long>(na) * nb <= 1000000;
    if (exact) {
        res.method = "mann-whitney/exact";
        std::vector<double> pooled(a);
        pooled.insert(pooled.end(), b.begin(), b.end());
        const int N = na + nb;
        std::vector<int> comb(nb);
        for (int i = 0; i < nb; ++i) comb[i] = i;
        std::uint64_t total = 0, ge = 0, le = 0;
        const double eps = 1e-9;
        for (;;) {
            std::vector<double> gb, ga;
            gb.reserve(nb);
            ga.reserve(na);
            std::vector<bool> in_b(N, false);
            for (int idx : comb) in_b[idx] = true;
            for (int i = 0; i < N; ++i) (in_b[i] ? gb : ga).push_back(pooled[i]);
            double u = u_of(ga, gb);
            ++total;
            if (u >= u_obs - eps) ++ge;
            if (u <= u_obs + eps) ++le;
            // next lexicographic combination
            int i = nb - 1;
            while (i >= 0 && comb[i] == N - nb + i) --i;
            if (i < 0) break;
            ++comb[i];
            for (int j = i + 1; j < nb; ++j) comb[j] = comb[j - 1] + 1;
        }
        double p_ge = static_cast<double>(ge) / static_cast<double>(total);
        double p_le = static_cast<double>(le) / static_cast<double>(total);
        double tail = std::min(p_ge, p_le);
        res.p_value = sidedness == Sidedness::one ? tail : std::min(1.0, 2.0 * tail);
        return res;
    }

    res.method = "mann-whitney/normal";
    const double n_all = na + nb;
    double mean_u = 0.5 * na * nb;
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    double tie_sum = 0.0;
    std::size_t i = 0;
    while (i < pooled.size()) {
        std::size_t j = i;
        while (j + 1 < pooled.size() && pooled[j + 1] == pooled[i]) ++j;
        double t = static_cast<double>(j - i + 1);
        tie_sum += t * t * t - t;
        i = j + 1;
    }
    double var_u =
        (static_cast<double>(na) * nb / 12.0) *
        ((n_all + 1.0) - tie_sum / (n_all * (n_all - 1.0)));
    double sd = std::sqrt(var_u);
    double z = (std::abs(u_obs - mean_u) - 0.5) / sd;
    double tail = 1.0 - normal_cdf(z);
    res.p_value = sidedness == Sidedness::one ? tail : std::min(1.0, 2.0 * tail);
    return res;
}

// ---------------------------------------------------------------------------
// Binomial sign test.
// ---------------------------------------------------------------------------

/// Exact binomial tail. One-sided: the effect-directed tail (upper when
/// successes sit above n*p0, lower otherwise; the smaller tail at the
/// boundary). Two-sided: sum of outcomes no more likely than the observed.
inline StatResult binomial_sign_test(int successes, int n, double p0, Sidedness sidedness) {
    if (successes < 0 || successes > n || n < 1) throw Error("binomial_sign_test: bad counts");
    if (!(p0 > 0.0 && p0 < 1.0)) throw Error("binomial_sign_test: p0 must be in (0,1)");
    StatResult res;
    res.sidedness = sidedness;
    res.n = n;
    res.statistic = successes;
    res.method = "binomial/exact";
    auto log_pmf = [&](int k) {
        return detail::log_choose(n, k) + k * std::log(p0) + (n - k) * std::log1p(-p0);
    };
    if (sidedness == Sidedness::one) {
        double up = 0.0, lo = 0.0;
        for (int k = successes; k <= n; ++k) up += std::exp(log_pmf(k));
        for (int k = 0; k <= successes; ++k) lo += std::exp(log_pmf(k));
        res.p_value = std::min(1.0, std::min(up, lo));
    } else {
        double obs = log_pmf(successes);
        double p = 0.0;
        for (int k = 0; k <= n; ++k)
            if (log_pmf(k) <= obs + 1e-12) p += std::exp(log_pmf(k));
        res.p_value = std::min(1.0, p);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Fisher exact test on a 2x2 table.
// ---------------------------------------------------------------------------

/// table = {{a, b}, {c, d}}. One-sided: the effect-directed hypergeometric
/// tail on cell a. Two-sided: sum of tables at most as likely. A zero
/// margin is flagged with p = 1.
inline StatResult fisher_exact_2x2(const std::array<std::array<long long, 2>, 2>& table,
                                   Sidedness sidedness) {
    const long long a = table[0][0], b = table[0][1], c = table[1][0], d = table[1][1];
    if (a < 0 || b < 0 || c < 0 || d < 0) throw Error("fisher_exact_2x2: negative count");
    StatResult res;
    res.sidedness = sidedness;
    res.statistic = static_cast<double>(a);
    res.n = static_cast<int>(a + b + c + d);
    const long long r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d, N = a + b + c + d;
    if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0 || N == 0) {
        res.method = "fisher-exact/degenerate";
        res.p_value = 1.0;
        res.note = "zero margin";
        return res;
    }
    res.method = "fisher-exact";
    auto log_pmf = [&](long long x) {
        return detail::log_choose(static_cast<int>(r1), static_cast<int>(x)) +
               detail::log_choose(static_cast<int>(r2), static_cast<int>(c1 - x)) -
               detail::log_choose(static_cast<int>(N), static_cast<int>(c1));
    };
    long long lo = std::max(0ll, c1 - r2), hi = std::min(r1, c1);
    if (sidedness == Sidedness::one) {
        double up = 0.0, low = 0.0;
        for (long long x = a; x <= hi; ++x) up += std::exp(log_pmf(x));
        for (long long x = lo; x <= a; ++x) low += std::exp(log_pmf(x));
        res.p_value = std::min(1.0, std::min(up, low));
    } else {
        double obs = log_pmf(a);
        double p = 0.0;
        for (long long x = lo; x <= hi; ++x)
            if (log_pmf(x) <= obs + 1e-12) p += std::exp(log_pmf(x));
        res.p_value = std::min(1.0, p);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Rank correlations.
// ---------------------------------------------------------------------------

struct RankCorrelation {
    double spearman = 0.0;
    double kendall = 0.0;  // tau-b
};

inline RankCorrelation rank_correlation(const std::vector<double>& x,
                                        const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw Error("rank_correlation: bad lengths");
    bool x_const = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
    bool y_const = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (x_const || y_const) throw ZeroVarianceError("rank_correlation: constant input");

    const std::size_t n = x.size();
    std::vector<double> rx = detail::midranks(x), ry = detail::midranks(y);
    double mx = mean(rx), my = mean(ry);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    RankCorrelation out;
    out.spearman = sxy / std::sqrt(sxx * syy);

    double concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double dx = x[i] - x[j], dy = y[i] - y[j];
            if (dx == 0 && dy == 0) continue;
            if (dx == 0) ++ties_x;
            else if (dy == 0) ++ties_y;
            else if ((dx > 0) == (dy > 0)) ++concordant;
            else ++discordant;
        }
    double n0 = concordant + discordant;
    out.kendall = (concordant - discordant) /
                  std::sqrt((n0 + ties_x) * (n0 + ties_y));
    return out;
}

// ---------------------------------------------------------------------------
// Paired sign-flip permutation test.
// ---------------------------------------------------------------------------

/// B Rademacher sign flips of the paired diffs; p = (count + 1)/(B + 1)
/// where count is the number of permuted mean diffs at least as extreme as
/// the observed one (one-sided: on the observed side; two-sided: in
/// magnitude). Replicates use derived seeds, so results do not depend on
/// evaluation order.
inline StatResult paired_sign_permutation(const std::vector<double>& diffs, int B,
                                          std::uint64_t seed, Sidedness sidedness) {
    if (diffs.empty()) throw Error("paired_sign_permutation: no diffs");
    if (B < 1) throw Error("paired_sign_permutation: B must be >= 1");
    StatResult res;
    res.sidedness = sidedness;
    res.n = static_cast<int>(diffs.size());
    res.method = "sign-permutation";
    double m_obs = mean(diffs);
    res.statistic = m_obs;
    const double eps = 1e-12 * (1.0 + std::abs(m_obs));
    std::uint64_t count = 0;
    for (int rep = 0; rep < B; ++rep) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
        double s = 0.0;
        for (double d : diffs) s += (rng.next() & 1ull) ? d : -d;
        double m = s / static_cast<double>(diffs.size());
        bool extreme;
        if (sidedness == Sidedness::two)
            extreme = std::abs(m) >= std::abs(m_obs) - eps;
        else
            extreme = m_obs >= 0.0 ? m >= m_obs - eps : m <= m_obs + eps;
        if (extreme) ++count;
    }
    res.p_value = static_cast<double>(count + 1) / static_cast<double>(B + 1);
    return res;
}

// ---------------------------------------------------------------------------
// Wilson score interval.
// ---------------------------------------------------------------------------

inline std::pair<double, double> wilson_interval(int successes, int n, double level) {
    if (n < 1 || successes < 0 || successes > n) throw Error("wilson_interval: bad counts");
    if (!(level > 0.0 && level < 1.0)) throw Error("wilson_interval: bad level");
    double z = inverse_normal_cdf(0.5 * (1.0 + level));
    double phat = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (phat + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// ---------------------------------------------------------------------------
// Bootstrap confidence intervals.
// ---------------------------------------------------------------------------

enum class BootstrapMode { task_level, two_level };

struct BootstrapSpec {
    BootstrapMode mode = BootstrapMode::task_level;
    int B = 1000;
    std::uint64_t seed = 0;
    double ci_low_pct = 2.5;
    double ci_high_pct = 97.5;
};

using GroupedSamples = std::vector<std::vector<double>>;

namespace detail {
inline double percentile(std::vector<double> v, double pct) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    double pos = pct / 100.0 * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= v.size()) return v.back();
    double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}
}  // namespace detail

/// Percentile bootstrap over grouped samples (groups = tasks). task_level
/// resamples groups with replacement; two_level additionally resamples
/// observations within each sampled group. The point estimate is stat_fn on
/// the original data.
inline StatResult bootstrap_ci(const GroupedSamples& groups,
                               const std::function<double(const GroupedSamples&)>& stat_fn,
                               const BootstrapSpec& spec) {
    if (groups.size() < 2) throw Error("bootstrap_ci: need >= 2 groups");
    if (spec.B < 100) throw Error("bootstrap_ci: B must be >= 100");
    for (const auto& g : groups)
        if (g.empty()) throw Error("bootstrap_ci: empty group");

    StatResult res;
    res.method = spec.mode == BootstrapMode::task_level ? "bootstrap/task-level"
                                                        : "bootstrap/two-level";
    res.n = static_cast<int>(groups.size());
    res.statistic = stat_fn(groups);
    std::vector<double> replicates(spec.B);
    const std::size_t G = groups.size();
    for (int rep = 0; rep < spec.B; ++rep) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(rep)));
        GroupedSamples sample;
        sample.reserve(G);
        for (std::size_t g = 0; g < G; ++g) {
            const std::vector<double>& src = groups[rng.index(G)];
            if (spec.mode == BootstrapMode::task_level) {
                sample.push_back(src);
            } else {
                std::vector<double> inner(src.size());
                for (std::size_t i = 0; i < src.size(); ++i) inner[i] = src[rng.index(src.size())];
                sample.push_back(std::move(inner));
            }
        }
        replicates[rep] = stat_fn(sample);
    }
    res.ci_low = detail::percentile(replicates, spec.ci_low_pct);
    res.ci_high = detail::percentile(replicates, spec.ci_high_pct);
    return res;
}

}  // namespace seqbench
