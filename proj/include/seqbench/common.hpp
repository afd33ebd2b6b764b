#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace seqbench {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define SEQBENCH_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                       \
    public:                                                           \
        explicit Name(const std::string& msg) : Error(msg) {}         \
    }

// 64-bit FNV-1a. Used for stable, platform-independent seed derivation.
inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t h) {
    for (int i = 0; i < 8; ++i) {
        h ^= static_cast<unsigned char>(v >> (8 * i));
        h *= 1099511628211ull;
    }
    return h;
}

/// Deterministic seed for one run cell; every piece of identity goes through
/// the hash so any (task, optimizer, condition, run) is re-runnable alone.
inline std::uint64_t derive_seed(std::string_view task, std::string_view optimizer,
                                 std::string_view condition, std::uint64_t run_index,
                                 std::uint64_t global_seed) {
    std::uint64_t h = fnv1a(task);
    h = fnv1a("|", h);
    h = fnv1a(optimizer, h);
    h = fnv1a("|", h);
    h = fnv1a(condition, h);
    h = fnv1a_u64(run_index, h);
    h = fnv1a_u64(global_seed, h);
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return fnv1a_u64(index, fnv1a_u64(base, 1469598103934665603ull));
}

/// Seeded generator with self-owned distributions so streams are identical
/// across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n). n must be positive.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        has_spare_ = true;
        return mag * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Median with the even-count convention: mean of the two middle values.
inline double median(std::vector<double> v) {
    if (v.empty()) throw Error("median of empty vector");
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw Error("mean of empty vector");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Population standard deviation (divide by n).
inline double pop_std(const std::vector<double>& v) {
    double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

/// Fixed 6-significant-digit formatting used by every emitted table so
/// re-runs diff byte-for-byte.
inline std::string format_sig6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

}  // namespace seqbench
