#pragma once

/// @file
/// JSON configuration parsing for the CLI pipelines. Every parse error names
/// the offending key as a JSON pointer.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfx/clt.hpp"
#include "rfx/common.hpp"
#include "rfx/functionals.hpp"
#include "rfx/relevance.hpp"
#include "rfx/simulate.hpp"

namespace rfx {

using json = nlohmann::ordered_json;

namespace cfg {

[[noreturn]] inline void fail(const std::string& path, const std::string& message) {
    throw config_error(path + ": " + message);
}

inline const json& require(const json& j, const std::string& path, const char* key) {
    if (!j.is_object()) {
        fail(path, "expected an object");
    }
    const auto it = j.find(key);
    if (it == j.end()) {
        fail(path + "/" + key, "missing required key");
    }
    return *it;
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) {
        fail(path, "expected a number");
    }
    return j.get<double>();
}

inline Index integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) {
        fail(path, "expected an integer");
    }
    return j.get<Index>();
}

inline std::string text(const json& j, const std::string& path) {
    if (!j.is_string()) {
        fail(path, "expected a string");
    }
    return j.get<std::string>();
}

inline std::vector<Index> index_list(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
        fail(path, "expected a nonempty array of integers");
    }
    std::vector<Index> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(integer(j[i], path + "/" + std::to_string(i)));
    }
    return out;
}

inline std::vector<double> number_list(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
        fail(path, "expected a nonempty array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(number(j[i], path + "/" + std::to_string(i)));
    }
    return out;
}

inline Norm parse_norm(const json& j, const std::string& path) {
    const std::string s = text(j, path);
    if (s == "linf") {
        return Norm::linf;
    }
    if (s == "l2") {
        return Norm::l2;
    }
    fail(path, "unknown norm '" + s + "' (expected linf or l2)");
}

} // namespace cfg

/// {"kind": "norm-exceedance"|"box"|"ball-complement", "norm": "linf"|"l2", ...}
inline RelevanceSet relevance_from_json(const json& j, const std::string& path) {
    const std::string kind = cfg::text(cfg::require(j, path, "kind"), path + "/kind");
    const Norm norm = j.contains("norm") ? cfg::parse_norm(j["norm"], path + "/norm")
                                         : Norm::linf;
    try {
        if (kind == "norm-exceedance") {
            return RelevanceSet::norm_exceedance(
                cfg::number(cfg::require(j, path, "threshold"), path + "/threshold"),
                norm);
        }
        if (kind == "ball-complement") {
            return RelevanceSet::ball_complement(
                cfg::number(cfg::require(j, path, "radius"), path + "/radius"), norm);
        }
        if (kind == "box") {
            std::vector<double> lower =
                cfg::number_list(cfg::require(j, path, "lower"), path + "/lower");
            std::vector<double> upper =
                cfg::number_list(cfg::require(j, path, "upper"), path + "/upper");
            std::vector<bool> lo_open, up_open;
            if (j.contains("lower_open")) {
                for (const auto& b : j["lower_open"]) {
                    lo_open.push_back(b.get<bool>());
                }
            }
            if (j.contains("upper_open")) {
                for (const auto& b : j["upper_open"]) {
                    up_open.push_back(b.get<bool>());
                }
            }
            return RelevanceSet::box(std::move(lower), std::move(upper),
                                     std::move(lo_open), std::move(up_open));
        }
    } catch (const param_error& e) {
        cfg::fail(path, e.what());
    }
    cfg::fail(path + "/kind", "unknown relevance set kind '" + kind + "'");
}

inline json relevance_to_json(const RelevanceSet& s) {
    json j;
    switch (s.kind) {
    case RelevanceSet::Kind::norm_exceedance:
        j["kind"] = "norm-exceedance";
        j["norm"] = s.norm == Norm::linf ? "linf" : "l2";
        j["threshold"] = s.threshold;
        break;
    case RelevanceSet::Kind::ball_complement:
        j["kind"] = "ball-complement";
        j["norm"] = s.norm == Norm::linf ? "linf" : "l2";
        j["radius"] = s.threshold;
        break;
    case RelevanceSet::Kind::box:
        j["kind"] = "box";
        j["lower"] = s.lower;
        j["upper"] = s.upper;
        j["lower_open"] = s.lower_open;
        j["upper_open"] = s.upper_open;
        break;
    }
    return j;
}

/// {"kind": ..., "alpha"|"weights": ..., "shape": [n1,n2,n3], "seed": int}
inline GeneratorSpec generator_from_json(const json& j, const std::string& path) {
    GeneratorSpec spec;
    const std::string kind = cfg::text(cfg::require(j, path, "kind"), path + "/kind");
    if (kind == "iid-pareto") {
        spec.kind = GeneratorSpec::Kind::iid_pareto;
    } else if (kind == "gaussian-iid") {
        spec.kind = GeneratorSpec::Kind::gaussian_iid;
    } else if (kind == "max-moving-maxima") {
        spec.kind = GeneratorSpec::Kind::max_moving_maxima;
    } else if (kind == "m-dependent-average") {
        spec.kind = GeneratorSpec::Kind::m_dependent_average;
    } else {
        cfg::fail(path + "/kind", "unknown generator kind '" + kind + "'");
    }
    spec.shape.dims = cfg::index_list(cfg::require(j, path, "shape"), path + "/shape");
    spec.shape.value_dim = 1;
    if (j.contains("alpha")) {
        spec.alpha = cfg::number(j["alpha"], path + "/alpha");
    }
    if (j.contains("seed")) {
        spec.seed = static_cast<std::uint64_t>(cfg::integer(j["seed"], path + "/seed"));
    }
    if (j.contains("weights")) {
        const json& w = j["weights"];
        if (!w.is_array()) {
            cfg::fail(path + "/weights", "expected an array of {offset, weight}");
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            const std::string wp = path + "/weights/" + std::to_string(i);
            WeightEntry e;
            e.offset = cfg::index_list(cfg::require(w[i], wp, "offset"), wp + "/offset");
            e.weight = cfg::number(cfg::require(w[i], wp, "weight"), wp + "/weight");
            spec.weights.push_back(std::move(e));
        }
    }
    try {
        spec.validate();
    } catch (const error& e) {
        cfg::fail(path, e.what());
    }
    return spec;
}

inline json generator_to_json(const GeneratorSpec& s) {
    json j;
    j["kind"] = GeneratorSpec::kind_name(s.kind);
    if (s.kind == GeneratorSpec::Kind::iid_pareto ||
        s.kind == GeneratorSpec::Kind::m_dependent_average) {
        j["alpha"] = s.alpha;
    }
    if (!s.weights.empty()) {
        json w = json::array();
        for (const auto& e : s.weights) {
            w.push_back(json{{"offset", e.offset}, {"weight", e.weight}});
        }
        j["weights"] = std::move(w);
    }
    j["shape"] = s.shape.dims;
    j["seed"] = s.seed;
    return j;
}

/// One cluster-functional fragment {"A":..., "B":..., "h_s":int, "h_t":int}.
struct FunctionalConfig {
    RelevanceSet set_a = RelevanceSet::norm_exceedance(1.0);
    RelevanceSet set_b = RelevanceSet::norm_exceedance(1.0);
    Index h_s = 0;
    Index h_t = 0;
};

inline FunctionalConfig functional_from_json(const json& j, const std::string& path) {
    FunctionalConfig f;
    f.set_a = relevance_from_json(cfg::require(j, path, "A"), path + "/A");
    f.set_b = relevance_from_json(cfg::require(j, path, "B"), path + "/B");
    f.h_s = cfg::integer(cfg::require(j, path, "h_s"), path + "/h_s");
    f.h_t = cfg::integer(cfg::require(j, path, "h_t"), path + "/h_t");
    if (f.h_s < 0 || f.h_t < 0) {
        cfg::fail(path, "lags must be nonnegative");
    }
    return f;
}

/// Fully parsed run configuration; sections are optional until a subcommand
/// requires them.
struct RunConfig {
    std::optional<GeneratorSpec> generator;
    std::optional<std::string> field_path;
    std::vector<Index> r;
    std::optional<RelevanceSet> set_a, set_b;
    Index max_spatial = 0;
    Index max_temporal = 0;
    double k_n = 0.0;
    bool analytic_quantile = true;
    Index replicates = 0;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int threads = 0;
    bool write_csv = false;
    Index oracle_pairs = 200000;

    // diagnostics section
    std::vector<double> t;
    std::vector<FunctionalConfig> functionals;
    double delta = 1.0;
    std::vector<double> eps_list{0.5};
    int block_rank = 3;

    // sweep section
    std::vector<SweepStage> stages;

    json echo; // the raw document, for manifests
};

inline RunConfig parse_run_config(const json& j) {
    if (!j.is_object()) {
        cfg::fail("/", "config must be a JSON object");
    }
    RunConfig c;
    c.echo = j;
    if (j.contains("generator")) {
        c.generator = generator_from_json(j["generator"], "/generator");
    }
    if (j.contains("field")) {
        c.field_path = cfg::text(j["field"], "/field");
    }
    if (j.contains("blocks")) {
        c.r = cfg::index_list(cfg::require(j["blocks"], "/blocks", "r"), "/blocks/r");
        for (std::size_t i = 0; i < c.r.size(); ++i) {
            if (c.r[i] < 1) {
                cfg::fail("/blocks/r/" + std::to_string(i), "block sides must be >= 1");
            }
        }
    }
    if (j.contains("relevance")) {
        const json& rel = j["relevance"];
        c.set_a = relevance_from_json(cfg::require(rel, "/relevance", "A"),
                                      "/relevance/A");
        if (rel.contains("B")) {
            c.set_b = relevance_from_json(rel["B"], "/relevance/B");
        } else {
            c.set_b = c.set_a;
        }
    }
    if (j.contains("lags")) {
        const json& lags = j["lags"];
        c.max_spatial = cfg::integer(cfg::require(lags, "/lags", "L_s"), "/lags/L_s");
        c.max_temporal = cfg::integer(cfg::require(lags, "/lags", "L_t"), "/lags/L_t");
        if (c.max_spatial < 0 || c.max_temporal < 0) {
            cfg::fail("/lags", "lag bounds must be nonnegative");
        }
    }
    if (j.contains("quantile")) {
        const json& q = j["quantile"];
        c.k_n = cfg::number(cfg::require(q, "/quantile", "k_n"), "/quantile/k_n");
        if (!(c.k_n > 1.0)) {
            cfg::fail("/quantile/k_n", "k_n must exceed 1");
        }
        if (q.contains("mode")) {
            const std::string mode = cfg::text(q["mode"], "/quantile/mode");
            if (mode == "analytic") {
                c.analytic_quantile = true;
            } else if (mode == "empirical") {
                c.analytic_quantile = false;
            } else {
                cfg::fail("/quantile/mode", "expected 'analytic' or 'empirical'");
            }
        }
    }
    if (j.contains("replicates")) {
        c.replicates = cfg::integer(j["replicates"], "/replicates");
        if (c.replicates < 1) {
            cfg::fail("/replicates", "must be >= 1");
        }
    }
    if (j.contains("seed")) {
        c.seed = static_cast<std::uint64_t>(cfg::integer(j["seed"], "/seed"));
        c.has_seed = true;
    }
    if (j.contains("threads")) {
        c.threads = static_cast<int>(cfg::integer(j["threads"], "/threads"));
    }
    if (j.contains("csv")) {
        if (!j["csv"].is_boolean()) {
            cfg::fail("/csv", "expected a boolean");
        }
        c.write_csv = j["csv"].get<bool>();
    }
    if (j.contains("oracle")) {
        c.oracle_pairs =
            cfg::integer(cfg::require(j["oracle"], "/oracle", "pairs"), "/oracle/pairs");
        if (c.oracle_pairs < 1) {
            cfg::fail("/oracle/pairs", "must be >= 1");
        }
    }
    if (j.contains("diagnostics")) {
        const json& d = j["diagnostics"];
        c.t = cfg::number_list(cfg::require(d, "/diagnostics", "t"), "/diagnostics/t");
        const json& fns = cfg::require(d, "/diagnostics", "functionals");
        if (!fns.is_array() || fns.empty()) {
            cfg::fail("/diagnostics/functionals", "expected a nonempty array");
        }
        for (std::size_t i = 0; i < fns.size(); ++i) {
            c.functionals.push_back(functional_from_json(
                fns[i], "/diagnostics/functionals/" + std::to_string(i)));
        }
        if (c.t.size() != c.functionals.size()) {
            cfg::fail("/diagnostics/t", "length must match the functional tuple");
        }
        if (d.contains("delta")) {
            c.delta = cfg::number(d["delta"], "/diagnostics/delta");
            if (!(c.delta > 0.0) || c.delta > 1.0) {
                cfg::fail("/diagnostics/delta", "delta must lie in (0,1]");
            }
        }
        if (d.contains("eps")) {
            c.eps_list = cfg::number_list(d["eps"], "/diagnostics/eps");
        }
        if (d.contains("d")) {
            c.block_rank = static_cast<int>(cfg::integer(d["d"], "/diagnostics/d"));
            if (c.block_rank != 2 && c.block_rank != 3) {
                cfg::fail("/diagnostics/d", "block rank must be 2 or 3");
            }
        }
    }
    if (j.contains("sweep")) {
        const json& stages = cfg::require(j["sweep"], "/sweep", "stages");
        if (!stages.is_array() || stages.empty()) {
            cfg::fail("/sweep/stages", "expected a nonempty array");
        }
        for (std::size_t i = 0; i < stages.size(); ++i) {
            const std::string sp = "/sweep/stages/" + std::to_string(i);
            SweepStage st;
            st.dims = cfg::index_list(cfg::require(stages[i], sp, "shape"),
                                      sp + "/shape");
            st.r = cfg::index_list(cfg::require(stages[i], sp, "r"), sp + "/r");
            st.k_n = stages[i].contains("k_n")
                         ? cfg::number(stages[i]["k_n"], sp + "/k_n")
                         : c.k_n;
            if (!(st.k_n > 1.0)) {
                cfg::fail(sp + "/k_n", "k_n must exceed 1");
            }
            c.stages.push_back(std::move(st));
        }
    }
    return c;
}

/// Cross-field checks shared by the estimating subcommands: block sides vs
/// shape, lag caps vs block sides.
inline void validate_estimation_config(const RunConfig& c,
                                       const std::vector<Index>& dims) {
    if (c.r.size() != 3) {
        cfg::fail("/blocks/r", "estimation needs 3-d block sides [r1, r2, r3]");
    }
    if (dims.size() != 3) {
        cfg::fail("/generator/shape", "estimation needs a 3-d field shape");
    }
    for (std::size_t i = 0; i < 3; ++i) {
        if (c.r[i] > dims[i]) {
            cfg::fail("/blocks/r/" + std::to_string(i),
                      "block side exceeds the lattice extent");
        }
    }
    const Index spatial_cap = (std::min(c.r[0], c.r[1]) - 1) / 2;
    if (c.max_spatial > spatial_cap) {
        cfg::fail("/lags/L_s", "violates the lag-cap rule L_s <= ceil(min(r1,r2)/2) - 1 (cap " +
                                   std::to_string(spatial_cap) + ")");
    }
    if (c.max_temporal > c.r[2] - 1) {
        cfg::fail("/lags/L_t", "temporal lag must stay below r3 for the block form");
    }
    if (!(c.k_n > 1.0)) {
        cfg::fail("/quantile/k_n", "estimation requires the quantile section");
    }
    if (!c.set_a) {
        cfg::fail("/relevance/A", "estimation requires a relevance set");
    }
}

} // namespace rfx
