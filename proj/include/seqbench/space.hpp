#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "seqbench/common.hpp"

namespace seqbench {

enum class ParamKind { numeric, categorical };
enum class Objective { maximize, minimize };

inline std::string to_string(Objective o) {
    return o == Objective::maximize ? "maximize" : "minimize";
}

inline Objective objective_from_string(const std::string& s) {
    if (s == "maximize") return Objective::maximize;
    if (s == "minimize") return Objective::minimize;
    throw Error("unknown objective '" + s + "' (expected maximize|minimize)");
}

SEQBENCH_DEFINE_ERROR(UnknownParameterError);
SEQBENCH_DEFINE_ERROR(UnknownOptionError);
SEQBENCH_DEFINE_ERROR(DesignTypeError);

/// One dimension of the search domain. Numeric specs carry bounds in
/// original units; categorical specs carry the closed option vocabulary.
struct ParameterSpec {
    std::string name;
    ParamKind kind = ParamKind::numeric;
    double lower = 0.0;
    double upper = 0.0;
    std::vector<std::string> options;
    std::string unit;

    bool is_numeric() const { return kind == ParamKind::numeric; }
    bool is_categorical() const { return kind == ParamKind::categorical; }

    std::size_t encoded_width() const {
        return is_numeric() ? 1 : options.size();
    }

    std::optional<std::size_t> option_index(const std::string& value) const {
        for (std::size_t i = 0; i < options.size(); ++i)
            if (options[i] == value) return i;
        return std::nullopt;
    }
};

class ParameterSpace {
public:
    ParameterSpace() = default;

    ParameterSpace(std::string name, std::vector<ParameterSpec> params)
        : name_(std::move(name)), params_(std::move(params)) {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            const ParameterSpec& p = params_[i];
            if (p.name.empty()) throw Error("parameter with empty name in space '" + name_ + "'");
            if (!index_.emplace(p.name, i).second)
                throw Error("duplicate parameter name '" + p.name + "'");
            if (p.is_numeric()) {
                if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !(p.lower < p.upper))
                    throw Error("parameter '" + p.name + "' requires finite lower < upper");
            } else {
                if (p.options.size() < 2)
                    throw Error("categorical '" + p.name + "' requires >= 2 options");
                std::map<std::string, int> seen;
                for (const std::string& o : p.options)
                    if (++seen[o] > 1)
                        throw Error("categorical '" + p.name + "' has duplicate option '" + o + "'");
            }
        }
    }

    const std::string& name() const { return name_; }
    const std::vector<ParameterSpec>& params() const { return params_; }
    bool empty() const { return params_.empty(); }

    const ParameterSpec* find(const std::string& pname) const {
        auto it = index_.find(pname);
        return it == index_.end() ? nullptr : &params_[it->second];
    }

    const ParameterSpec& at(const std::string& pname) const {
        const ParameterSpec* p = find(pname);
        if (!p) throw UnknownParameterError("unknown parameter '" + pname + "'");
        return *p;
    }

    std::size_t encoded_size() const {
        std::size_t n = 0;
        for (const ParameterSpec& p : params_) n += p.encoded_width();
        return n;
    }

    /// Offset of a parameter's block within the encoded vector.
    std::size_t encoded_offset(const std::string& pname) const {
        std::size_t off = 0;
        for (const ParameterSpec& p : params_) {
            if (p.name == pname) return off;
            off += p.encoded_width();
        }
        throw UnknownParameterError("unknown parameter '" + pname + "'");
    }

private:
    std::string name_;
    std::vector<ParameterSpec> params_;
    std::map<std::string, std::size_t> index_;
};

/// A design value is a real (numeric parameter) or an option string.
using Value = std::variant<double, std::string>;

/// Partial assignment of parameter values; absent keys mean missing.
struct Design {
    std::map<std::string, Value> values;

    bool has(const std::string& name) const { return values.count(name) > 0; }

    double numeric(const std::string& name) const {
        return std::get<double>(values.at(name));
    }
    const std::string& option(const std::string& name) const {
        return std::get<std::string>(values.at(name));
    }

    void set(const std::string& name, double v) { values[name] = v; }
    void set(const std::string& name, std::string v) { values[name] = std::move(v); }

    bool operator==(const Design& other) const { return values == other.values; }
};

struct ValidatedDesign {
    Design design;
    std::vector<std::string> corrections;
};

struct EncodedDesign {
    std::vector<double> vec;
    bool operator==(const EncodedDesign& o) const { return vec == o.vec; }
};

namespace detail {
inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}
}  // namespace detail

/// Cleans a proposal against the space. Out-of-range numerics are clipped
/// (the raw proposal stays available upstream for diagnostics), categorical
/// strings must match an option exactly after trimming surrounding
/// whitespace, NaN numerics are dropped as missing.
inline ValidatedDesign validate_design(const ParameterSpace& space, const Design& d) {
    ValidatedDesign out;
    for (const auto& [name, value] : d.values) {
        const ParameterSpec& spec = space.at(name);
        if (spec.is_numeric()) {
            if (!std::holds_alternative<double>(value))
                throw DesignTypeError("parameter '" + name + "' expects a numeric value");
            double x = std::get<double>(value);
            if (std::isnan(x)) {
                out.corrections.push_back(name + ": NaN treated as missing");
                continue;
            }
            double clipped = std::min(std::max(x, spec.lower), spec.upper);
            if (clipped != x)
                out.corrections.push_back(name + ": clipped " + format_sig6(x) + " to " +
                                          format_sig6(clipped));
            out.design.set(name, clipped);
        } else {
            if (!std::holds_alternative<std::string>(value))
                throw DesignTypeError("parameter '" + name + "' expects an option string");
            std::string raw = std::get<std::string>(value);
            std::string trimmed = detail::trim(raw);
            if (!spec.option_index(trimmed))
                throw UnknownOptionError("parameter '" + name + "': option '" + raw +
                                         "' not in vocabulary");
            if (trimmed != raw)
                out.corrections.push_back(name + ": trimmed surrounding whitespace");
            out.design.set(name, trimmed);
        }
    }
    return out;
}

/// Per-numeric-parameter imputation values in scaled [0,1] space for absent
/// entries. The default (0.5) suits exploratory encodings; the oracle
/// supplies training means instead.
struct EncodeFill {
    std::map<std::string, double> scaled_by_param;
    double fallback = 0.5;

    double scaled_fill(const std::string& name) const {
        auto it = scaled_by_param.find(name);
        return it == scaled_by_param.end() ? fallback : it->second;
    }
};

/// Deterministic encoding: numerics min-max scaled to [0,1], categoricals
/// one-hot in declaration option order (absent categorical = all-zero block).
inline EncodedDesign encode_design(const ParameterSpace& space, const Design& d,
                                   const EncodeFill& fill = EncodeFill{}) {
    EncodedDesign out;
    out.vec.reserve(space.encoded_size());
    for (const ParameterSpec& p : space.params()) {
        if (p.is_numeric()) {
            if (d.has(p.name)) {
                double x = d.numeric(p.name);
                out.vec.push_back((x - p.lower) / (p.upper - p.lower));
            } else {
                out.vec.push_back(fill.scaled_fill(p.name));
            }
        } else {
            std::size_t idx = p.options.size();  // sentinel: all-zero block
            if (d.has(p.name)) {
                auto oi = p.option_index(d.option(p.name));
                if (!oi)
                    throw UnknownOptionError("parameter '" + p.name + "': option '" +
                                             d.option(p.name) + "' not in vocabulary");
                idx = *oi;
            }
            for (std::size_t i = 0; i < p.options.size(); ++i)
                out.vec.push_back(i == idx ? 1.0 : 0.0);
        }
    }
    return out;
}

/// Masked option labels: A..Z then AA, AB, ... so any cardinality works.
inline std::string mask_option_label(std::size_t i) {
    std::string label;
    std::size_t n = i + 1;
    while (n > 0) {
        std::size_t rem = (n - 1) % 26;
        label.insert(label.begin(), static_cast<char>('A' + rem));
        n = (n - 1) / 26;
    }
    return label;
}

/// Invertible renaming produced by mask_space. Translates designs between
/// original and masked vocabularies.
struct NameMap {
    std::map<std::string, std::string> param_to_masked;
    std::map<std::string, std::string> param_from_masked;
    // option maps keyed by original / masked parameter name respectively
    std::map<std::string, std::map<std::string, std::string>> option_to_masked;
    std::map<std::string, std::map<std::string, std::string>> option_from_masked;

    Design mask(const Design& d) const {
        Design out;
        for (const auto& [name, value] : d.values) {
            auto pit = param_to_masked.find(name);
            if (pit == param_to_masked.end())
                throw UnknownParameterError("mask: unknown parameter '" + name + "'");
            if (std::holds_alternative<std::string>(value)) {
                const auto& omap = option_to_masked.at(name);
                auto oit = omap.find(std::get<std::string>(value));
                if (oit == omap.end())
                    throw UnknownOptionError("mask: unknown option for '" + name + "'");
                out.set(pit->second, oit->second);
            } else {
                out.set(pit->second, std::get<double>(value));
            }
        }
        return out;
    }

    Design unmask(const Design& d) const {
        Design out;
        for (const auto& [name, value] : d.values) {
            auto pit = param_from_masked.find(name);
            if (pit == param_from_masked.end())
                throw UnknownParameterError("unmask: unknown parameter '" + name + "'");
            if (std::holds_alternative<std::string>(value)) {
                const auto& omap = option_from_masked.at(name);
                auto oit = omap.find(std::get<std::string>(value));
                if (oit == omap.end())
                    throw UnknownOptionError("unmask: unknown option for '" + name + "'");
                out.set(pit->second, oit->second);
            } else {
                out.set(pit->second, std::get<double>(value));
            }
        }
        return out;
    }
};

/// Domain-agnostic masking: numerics become X1, X2, ... and categoricals
/// C1, C2, ... in declaration order, options become A, B, C, ... in original
/// option order, units are stripped. Ranges and cardinalities are preserved,
/// so encodings of consistently masked designs are unchanged.
inline std::pair<ParameterSpace, NameMap> mask_space(const ParameterSpace& space) {
    std::vector<ParameterSpec> masked;
    NameMap nm;
    std::size_t numeric_count = 0;
    std::size_t categorical_count = 0;
    for (const ParameterSpec& p : space.params()) {
        ParameterSpec m;
        m.kind = p.kind;
        if (p.is_numeric()) {
            m.name = "X" + std::to_string(++numeric_count);
            m.lower = p.lower;
            m.upper = p.upper;
        } else {
            m.name = "C" + std::to_string(++categorical_count);
            for (std::size_t i = 0; i < p.options.size(); ++i) {
                std::string label = mask_option_label(i);
                m.options.push_back(label);
                nm.option_to_masked[p.name][p.options[i]] = label;
                nm.option_from_masked[m.name][label] = p.options[i];
            }
        }
        nm.param_to_masked[p.name] = m.name;
        nm.param_from_masked[m.name] = p.name;
        masked.push_back(std::move(m));
    }
    return {ParameterSpace(space.name().empty() ? "" : "masked", std::move(masked)),
            std::move(nm)};
}

/// Uniform random design: numerics uniform in range, categoricals uniform
/// over options. Draw order follows declaration order.
inline Design random_design(const ParameterSpace& space, Rng& rng) {
    Design d;
    for (const ParameterSpec& p : space.params()) {
        if (p.is_numeric())
            d.set(p.name, rng.uniform(p.lower, p.upper));
        else
            d.set(p.name, p.options[rng.index(p.options.size())]);
    }
    return d;
}

}  // namespace seqbench
