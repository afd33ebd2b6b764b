#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "seqbench/common.hpp"

namespace seqbench {

SEQBENCH_DEFINE_ERROR(SingularGramError);

/// Matern-5/2 correlation: (1 + sqrt5 r/l + 5r^2/(3l^2)) exp(-sqrt5 r/l).
/// Multiplied by the signal variance at the covariance layer.
inline double matern52(double r, double lengthscale) {
    double s = std::sqrt(5.0) * r / lengthscale;
    return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

struct GpConfig {
    double lengthscale = 1.0;      // in encoded [0,1] space
    double signal_variance = 1.0;  // prior variance of the standardized objective
    double noise_jitter = 1e-6;
};

/// Exact GP posterior over a Matern-5/2 kernel with fixed hyperparameters.
/// Targets are standardized internally; that rescaling is affine, so UCB
/// rankings are unchanged while the Cholesky stays well conditioned.
class GpPosterior {
public:
    GpPosterior(std::vector<std::vector<double>> X, const std::vector<double>& y,
                const GpConfig& cfg)
        : X_(std::move(X)), cfg_(cfg) {
        const std::size_t n = X_.size();
        if (n == 0) throw Error("GpPosterior requires at least one observation");
        y_mean_ = 0.0;
        for (double v : y) y_mean_ += v;
        y_mean_ /= static_cast<double>(n);
        double var = 0.0;
        for (double v : y) var += (v - y_mean_) * (v - y_mean_);
        y_scale_ = std::sqrt(var / static_cast<double>(n));
        if (y_scale_ <= 0.0) y_scale_ = 1.0;

        std::vector<std::vector<double>> K(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double k = cfg_.signal_variance *
                           matern52(distance(X_[i], X_[j]), cfg_.lengthscale);
                K[i][j] = K[j][i] = k;
            }

        // jitter escalation: x10 on failure, at most 3 times
        double jitter = cfg_.noise_jitter;
        for (int attempt = 0;; ++attempt) {
            L_ = K;
            for (std::size_t i = 0; i < n; ++i) L_[i][i] = K[i][i] + jitter;
            if (cholesky(L_)) break;
            if (attempt >= 3)
                throw SingularGramError("Gram matrix not positive definite after jitter "
                                        "escalation to " + format_sig6(jitter));
            jitter *= 10.0;
        }

        alpha_.resize(n);
        for (std::size_t i = 0; i < n; ++i) alpha_[i] = (y[i] - y_mean_) / y_scale_;
        solve_lower(L_, alpha_);
        solve_upper(L_, alpha_);
    }

    /// Posterior mean and standard deviation at x, in original target units.
    std::pair<double, double> predict(const std::vector<double>& x) const {
        const std::size_t n = X_.size();
        std::vector<double> k(n);
        for (std::size_t i = 0; i < n; ++i)
            k[i] = cfg_.signal_variance * matern52(distance(X_[i], x), cfg_.lengthscale);
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += k[i] * alpha_[i];
        std::vector<double> v = k;
        solve_lower(L_, v);
        double reduction = 0.0;
        for (double vi : v) reduction += vi * vi;
        // numerical error can push the variance a hair below zero; clamp
        double var = std::max(0.0, cfg_.signal_variance - reduction);
        return {y_mean_ + y_scale_ * mu, y_scale_ * std::sqrt(var)};
    }

private:
    static double distance(const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            double d = a[i] - b[i];
            s += d * d;
        }
        return std::sqrt(s);
    }

    // in-place lower-triangular Cholesky; false on a non-positive pivot
    static bool cholesky(std::vector<std::vector<double>>& a) {
        const std::size_t n = a.size();
        for (std::size_t j = 0; j < n; ++j) {
            double d = a[j][j];
            for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
            if (d <= 0.0 || !std::isfinite(d)) return false;
            a[j][j] = std::sqrt(d);
            for (std::size_t i = j + 1; i < n; ++i) {
                double s = a[i][j];
                for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
                a[i][j] = s / a[j][j];
            }
            for (std::size_t i = 0; i < j; ++i) a[i][j] = 0.0;
        }
        return true;
    }

    static void solve_lower(const std::vector<std::vector<double>>& L, std::vector<double>& b) {
        for (std::size_t i = 0; i < b.size(); ++i) {
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k) s -= L[i][k] * b[k];
            b[i] = s / L[i][i];
        }
    }

    static void solve_upper(const std::vector<std::vector<double>>& L, std::vector<double>& b) {
        for (std::size_t ii = b.size(); ii > 0; --ii) {
            std::size_t i = ii - 1;
            double s = b[i];
            for (std::size_t k = i + 1; k < b.size(); ++k) s -= L[k][i] * b[k];
            b[i] = s / L[i][i];
        }
    }

    std::vector<std::vector<double>> X_;
    std::vector<std::vector<double>> L_;
    std::vector<double> alpha_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    GpConfig cfg_;
};

}  // namespace seqbench
