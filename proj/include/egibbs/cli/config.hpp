#pragma once

// Experiment configuration: a JSON document whose keys are dotted paths
// ("grid.slices") given either nested or flat. Parsing is strict: unknown
// keys, wrong types and out-of-range values are errors naming the key.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "egibbs/error.hpp"

namespace egibbs::cli {

using nlohmann::json;

inline Error config_error(const std::string& kind, const std::string& what) {
    return Error("cli_runner", kind, what);
}

enum class KeyType { Int, Real, String, IntList, RealList, Object };

struct KeySpec {
    std::string name;
    KeyType type;
    json fallback;  ///< null means "no default" (optional key)
    double min = -std::numeric_limits<double>::infinity();
    double max = std::numeric_limits<double>::infinity();
    std::vector<std::string> choices = {};
};

inline const std::vector<KeySpec>& schema() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    static const std::vector<KeySpec> keys = {
        {"graph.generator", KeyType::String, "chain", -inf, inf,
         {"chain", "cycle", "star", "grid", "complete", "random_bounded"}},
        {"graph.size", KeyType::Int, 3, 1, 100000},
        {"graph.width", KeyType::Int, 3, 1, 10000},
        {"graph.height", KeyType::Int, 3, 1, 10000},
        {"graph.max_degree", KeyType::Int, 3, 1, 10000},
        {"graph.extra_edges", KeyType::Int, 0, 0, 1000000},
        {"graph.file", KeyType::String, nullptr},
        {"manifold.kind", KeyType::String, "discrete_laplacian", -inf, inf, {"discrete_laplacian", "circle_spectral"}},
        {"manifold.points", KeyType::Int, 2, 1, 64},
        {"manifold.mode_cutoff", KeyType::Int, 64, 1, 100000},
        {"manifold.weight_matrix_file", KeyType::String, nullptr},
        {"manifold.builtin_weights", KeyType::String, "complete", -inf, inf, {"complete", "cycle"}},
        {"grid.slices", KeyType::Int, 2, 1, 64},
        {"enumeration.cap", KeyType::Int, 1000000, 1, 1e9},
        {"rng.seed", KeyType::Int, 0, 0, 1.8446744073709552e19},
        {"potentials.file", KeyType::String, nullptr},
        {"potentials.constant", KeyType::Real, nullptr},
        {"potentials.product", KeyType::Real, nullptr},
        {"potentials.random_norm", KeyType::Real, nullptr, 0, inf},
        {"ensemble.family", KeyType::String, nullptr, -inf, inf,
         {"point_mass", "two_point", "uniform", "truncated_exponential"}},
        {"ensemble.lambda", KeyType::Real, 0.003, 0, inf},
        {"ensemble.theta", KeyType::Real, 0.5, 0, 1},
        {"ensemble.params", KeyType::Object, json::object()},
        {"volume.lambda", KeyType::IntList, nullptr},
        {"volume.delta", KeyType::IntList, nullptr},
        {"boundary.kind", KeyType::String, "constant_loop", -inf, inf, {"constant_loop", "sampled"}},
        {"boundary.point", KeyType::Int, 0, 0, 63},
        {"boundary.alt_point", KeyType::Int, nullptr, 0, 63},
        {"sampler.sweeps", KeyType::Int, 0, 0, 1e9},
        {"sampler.burnin", KeyType::Int, 100, 0, 1e9},
        {"cert.lmax", KeyType::Int, 8, 1, 40},
        {"cert.radius_list", KeyType::IntList, json::array({1, 2, 3}), 1, 1000},
        {"cert.threshold", KeyType::Real, 1e-3, 0, inf},
        {"cert.delta_grid", KeyType::RealList, json::array({0.01, 0.1, 1.0}), 0, inf},
        {"thm2.trials", KeyType::Int, 200, 1, 1e7},
        {"thm2.required_fraction", KeyType::Real, 1.0, 0, 1},
        {"phi.exponent", KeyType::Real, 3.0, 0, inf},
        {"phi.coefficient", KeyType::Real, 1.0, 0, inf},
        {"phi.table", KeyType::RealList, json::array(), 1, inf},
        {"phi.series_terms", KeyType::Int, 100, 1, 1e8},
        {"phi.radius", KeyType::Int, nullptr, 0, 1e9},
        {"suite.instances", KeyType::Int, 100, 1, 1e6},
        {"suite.max_vertices", KeyType::Int, 5, 2, 8},
        {"suite.max_norm", KeyType::Real, 0.2, 0, inf},
        {"suite.points", KeyType::IntList, json::array({2, 3}), 1, 8},
        {"suite.slices", KeyType::IntList, json::array({2, 3}), 1, 8},
        {"tolerance.defect", KeyType::Real, 1e-10, 0, inf},
        {"tolerance.semigroup", KeyType::Real, 1e-10, 0, inf},
        {"output.dir", KeyType::String, "out"},
    };
    return keys;
}

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline std::string closest_key(const std::string& key) {
    std::string best;
    std::size_t best_d = std::numeric_limits<std::size_t>::max();
    for (const auto& k : schema()) {
        std::size_t d = edit_distance(key, k.name);
        if (d < best_d) {
            best_d = d;
            best = k.name;
        }
    }
    return best;
}

/// Fully resolved configuration. `resolved` echoes every key with defaults
/// applied (absent optional keys are null); file paths are absolute.
struct ExperimentConfig {
    json resolved = json::object();
    std::vector<std::string> explicit_keys;

    const json& at(const std::string& key) const { return resolved.at(key); }
    bool has(const std::string& key) const { return resolved.contains(key) && !resolved.at(key).is_null(); }
    bool given(const std::string& key) const {
        return std::find(explicit_keys.begin(), explicit_keys.end(), key) != explicit_keys.end();
    }
    std::int64_t integer(const std::string& key) const { return at(key).get<std::int64_t>(); }
    std::uint64_t seed() const { return at("rng.seed").get<std::uint64_t>(); }
    double real(const std::string& key) const { return at(key).get<double>(); }
    std::string text(const std::string& key) const { return at(key).get<std::string>(); }
    template <class T>
    std::vector<T> list(const std::string& key) const {
        return has(key) ? at(key).get<std::vector<T>>() : std::vector<T>{};
    }
};

namespace detail {

inline void flatten(const json& node, const std::string& prefix, std::map<std::string, json>& out) {
    for (auto it = node.begin(); it != node.end(); ++it) {
        std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        bool opaque = std::any_of(schema().begin(), schema().end(),
                                  [&](const KeySpec& k) { return k.name == key && k.type == KeyType::Object; });
        if (it->is_object() && !opaque)
            flatten(*it, key, out);
        else
            out[key] = *it;
    }
}

inline void check_range(const KeySpec& spec, double x) {
    if (x < spec.min || x > spec.max)
        throw config_error("RangeViolation", spec.name + " = " + json(x).dump() + " is outside [" +
                                                 json(spec.min).dump() + ", " + json(spec.max).dump() + "]");
}

inline json validate(const KeySpec& spec, const json& value) {
    auto type_fail = [&](const char* want) {
        return config_error("TypeError", spec.name + " must be " + want);
    };
    switch (spec.type) {
    case KeyType::Int:
        if (!value.is_number_integer()) throw type_fail("an integer");
        if (value.is_number_unsigned())
            check_range(spec, double(value.get<std::uint64_t>()));
        else
            check_range(spec, double(value.get<std::int64_t>()));
        return value;
    case KeyType::Real:
        if (!value.is_number()) throw type_fail("a number");
        check_range(spec, value.get<double>());
        return json(value.get<double>());
    case KeyType::String:
        if (!value.is_string()) throw type_fail("a string");
        if (!spec.choices.empty() &&
            std::find(spec.choices.begin(), spec.choices.end(), value.get<std::string>()) == spec.choices.end()) {
            std::string opts;
            for (const auto& c : spec.choices) opts += (opts.empty() ? "" : ", ") + c;
            throw config_error("RangeViolation", spec.name + " must be one of: " + opts);
        }
        return value;
    case KeyType::IntList:
        if (!value.is_array()) throw type_fail("a list of integers");
        for (const auto& x : value) {
            if (!x.is_number_integer()) throw type_fail("a list of integers");
            check_range(spec, double(x.get<std::int64_t>()));
        }
        return value;
    case KeyType::RealList: {
        if (!value.is_array()) throw type_fail("a list of numbers");
        json out = json::array();
        for (const auto& x : value) {
            if (!x.is_number()) throw type_fail("a list of numbers");
            check_range(spec, x.get<double>());
            out.push_back(x.get<double>());
        }
        return out;
    }
    case KeyType::Object:
        if (!value.is_object()) throw type_fail("an object");
        for (auto it = value.begin(); it != value.end(); ++it)
            if (!it->is_number()) throw config_error("TypeError", spec.name + "." + it.key() + " must be a number");
        return value;
    }
    return value;
}

} // namespace detail

/// Parses and validates a config document. Relative file paths resolve
/// against `base_dir`; referenced files must exist.
inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error("ParseError", e.what());
    }
    if (!doc.is_object()) throw config_error("ParseError", "config must be a JSON object");

    std::map<std::string, json> flat;
    detail::flatten(doc, "", flat);

    ExperimentConfig cfg;
    for (const auto& [key, value] : flat) {
        auto it = std::find_if(schema().begin(), schema().end(), [&](const KeySpec& k) { return k.name == key; });
        if (it == schema().end())
            throw config_error("UnknownKey", "unknown key '" + key + "' (did you mean '" + closest_key(key) + "'?)");
        cfg.resolved[key] = detail::validate(*it, value);
        cfg.explicit_keys.push_back(key);
    }
    for (const auto& spec : schema())
        if (!cfg.resolved.contains(spec.name)) cfg.resolved[spec.name] = spec.fallback;

    int sources = 0;
    for (const char* k : {"potentials.file", "potentials.constant", "potentials.product", "potentials.random_norm",
                          "ensemble.family"})
        sources += cfg.has(k) ? 1 : 0;
    if (sources > 1)
        throw config_error("ConflictingKeys", "give at most one of potentials.file, potentials.constant, "
                                              "potentials.product, potentials.random_norm, ensemble.family");
    if (cfg.has("graph.file") && cfg.given("graph.generator"))
        throw config_error("ConflictingKeys", "give either graph.file or graph.generator");
    if (cfg.real("ensemble.theta") <= 0.0 || cfg.real("ensemble.theta") >= 1.0)
        throw config_error("RangeViolation", "ensemble.theta must lie strictly inside (0, 1)");
    if (cfg.integer("grid.slices") < 1) throw config_error("RangeViolation", "grid.slices must be >= 1");

    for (const char* k : {"graph.file", "manifold.weight_matrix_file", "potentials.file"}) {
        if (!cfg.has(k)) continue;
        std::filesystem::path p = cfg.text(k);
        if (p.is_relative()) p = base_dir / p;
        if (!std::filesystem::exists(p))
            throw config_error("MissingFile", std::string(k) + ": file '" + p.string() + "' does not exist");
        cfg.resolved[k] = std::filesystem::absolute(p).lexically_normal().string();
    }
    std::sort(cfg.explicit_keys.begin(), cfg.explicit_keys.end());
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("MissingFile", "cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

} // namespace egibbs::cli
