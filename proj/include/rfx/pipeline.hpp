#pragma once

/// @file
/// Config-driven pipelines behind the CLI subcommands. Each pipeline writes
/// its artifacts plus a manifest carrying the config echo, the effective
/// seed and the artifact version, so every output can be reproduced from
/// its own metadata.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rfx/clt.hpp"
#include "rfx/config.hpp"
#include "rfx/diagnostics.hpp"
#include "rfx/extremogram.hpp"
#include "rfx/io.hpp"
#include "rfx/parallel.hpp"
#include "rfx/rng.hpp"

namespace rfx {

struct PipelineOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

namespace detail {

inline std::uint64_t effective_seed(const RunConfig& c, const PipelineOverrides& o) {
    if (o.seed) {
        return *o.seed;
    }
    if (c.has_seed) {
        return c.seed;
    }
    return c.generator ? c.generator->seed : 0;
}

inline json manifest_header(const char* command, const RunConfig& c,
                            std::uint64_t seed) {
    json m;
    m["artifact"] = {{"name", "rfx"}, {"version", kVersion}, {"rng", kRngAlgorithm}};
    m["command"] = command;
    m["seed"] = seed;
    m["config"] = c.echo;
    return m;
}

inline GeneratorSpec seeded_generator(const RunConfig& c, std::uint64_t seed) {
    if (!c.generator) {
        cfg::fail("/generator", "this subcommand needs a generator");
    }
    GeneratorSpec spec = *c.generator;
    spec.seed = seed;
    return spec;
}

struct Normalization {
    NormalizedField nf;
    double u_n = 0.0;
    double v_n = 0.0;
    std::string mode;
};

/// Analytic path: closed-form u_n and v_n from the generator's marginal law.
/// Empirical path: nearest-rank quantile and observed exceedance frequency.
inline Normalization normalize_for_estimation(const RunConfig& c, const Field& field) {
    Normalization out;
    if (c.analytic_quantile) {
        if (!c.generator || !has_analytic_marginal(*c.generator)) {
            cfg::fail("/quantile/mode",
                      "analytic mode needs a generator with a closed-form marginal");
        }
        if (c.set_a->kind == RelevanceSet::Kind::box) {
            cfg::fail("/quantile/mode",
                      "analytic v_n needs an exceedance-type relevance set A");
        }
        out.u_n = analytic_u_n(*c.generator, c.k_n);
        out.v_n = marginal_tail(*c.generator, c.set_a->threshold * out.u_n);
        out.nf = normalize_field_with_scale(field, out.u_n, c.k_n);
        out.mode = "analytic";
    } else {
        out.nf = normalize_field(field, c.k_n);
        out.u_n = out.nf.u_n;
        out.v_n = estimate_v_n(out.nf, *c.set_a);
        out.mode = "empirical";
    }
    return out;
}

} // namespace detail

inline void run_simulate(const RunConfig& c, const std::filesystem::path& out_dir,
                         std::uint64_t seed) {
    const GeneratorSpec spec = detail::seeded_generator(c, seed);
    if (spec.shape.rank() != 3) {
        cfg::fail("/generator/shape", "the field container stores 3-d fields");
    }
    const Field field = generate_field(spec);
    write_field_binary(field, out_dir / "field.f64");
    if (c.write_csv) {
        write_field_csv(field, out_dir / "field.csv");
    }
    json m = detail::manifest_header("simulate", c, seed);
    m["outputs"] = {{"field", "field.f64"}};
    if (c.write_csv) {
        m["outputs"]["field_csv"] = "field.csv";
    }
    write_json(m, out_dir / "manifest.json");
}

inline void run_estimate(const RunConfig& c, const std::filesystem::path& out_dir,
                         std::uint64_t seed) {
    Field field;
    if (c.field_path) {
        field = read_field_binary(*c.field_path);
    } else {
        const GeneratorSpec spec = detail::seeded_generator(c, seed);
        if (spec.shape.rank() != 3) {
            cfg::fail("/generator/shape", "estimation needs a 3-d field shape");
        }
        field = generate_field(spec);
    }
    validate_estimation_config(c, field.shape().dims);
    const detail::Normalization norm = detail::normalize_for_estimation(c, field);

    const BlockGrid grid3 = make_block_grid(field.shape(), c.r);
    const LatticeShape spatial_shape{{field.shape().dims[0], field.shape().dims[1]}, 1};
    const BlockGrid spatial =
        make_block_grid(spatial_shape, std::span<const Index>(c.r.data(), 2));

    const ExtremogramEstimate blocks = estimate_via_blocks(
        norm.nf, grid3, *c.set_a, *c.set_b, c.max_spatial, c.max_temporal);
    const ExtremogramEstimate direct = estimate_direct(
        norm.nf, spatial, *c.set_a, *c.set_b, c.max_spatial, c.max_temporal);
    double identity_gap = std::abs(direct.denominator - blocks.denominator);
    for (std::size_t l = 0; l < direct.numerator.size(); ++l) {
        identity_gap =
            std::max(identity_gap, std::abs(direct.numerator[l] - blocks.numerator[l]));
    }

    write_extremogram_csv(blocks, out_dir / "extremogram.csv");
    json m = detail::manifest_header("estimate", c, seed);
    m["u_n"] = norm.u_n;
    m["v_n"] = norm.v_n;
    m["normalization"] = norm.mode;
    m["denominator_count"] = blocks.denominator_count;
    m["rewrite_identity_gap"] = identity_gap;
    m["outputs"] = {{"extremogram", "extremogram.csv"}};
    write_json(m, out_dir / "manifest.json");
}

inline void run_diagnose(const RunConfig& c, const std::filesystem::path& out_dir,
                         std::uint64_t seed) {
    const GeneratorSpec spec = detail::seeded_generator(c, seed);
    if (c.functionals.empty()) {
        cfg::fail("/diagnostics", "diagnose needs the diagnostics section");
    }
    if (c.r.empty()) {
        cfg::fail("/blocks/r", "diagnose needs block sides");
    }
    if (c.replicates < 2) {
        cfg::fail("/replicates", "dependence diagnostics need >= 2 replicates");
    }
    if (!(c.k_n > 1.0)) {
        cfg::fail("/quantile/k_n", "diagnose requires the quantile section");
    }
    if (c.r.size() != spec.shape.rank()) {
        cfg::fail("/blocks/r", "block side count must match the field rank");
    }
    const BlockGrid grid = make_block_grid(spec.shape, c.r);
    if (static_cast<std::size_t>(c.block_rank) != grid.rank()) {
        cfg::fail("/diagnostics/d", "block rank must match the grid rank");
    }

    const double u_n = oracle_u_n(spec, c.k_n, derive_seed(seed, 0xfeed));
    std::vector<ClusterFunctional> fs;
    for (const auto& f : c.functionals) {
        fs.push_back(extremogram_functional(f.set_a, f.set_b, f.h_s, f.h_t));
    }
    // v_n for the lead functional's conditioning set A
    double v_n = 0.0;
    std::string v_mode;
    const RelevanceSet& lead_a = c.functionals.front().set_a;
    if (has_analytic_marginal(spec) &&
        lead_a.kind != RelevanceSet::Kind::box) {
        v_n = marginal_tail(spec, lead_a.threshold * u_n);
        v_mode = "analytic";
    } else {
        GeneratorSpec probe = spec;
        probe.seed = derive_seed(seed, 0xabcd);
        const NormalizedField nf =
            normalize_field_with_scale(generate_field(probe), u_n, c.k_n);
        v_n = estimate_v_n(nf, lead_a);
        v_mode = "empirical";
    }
    if (!(v_n > 0.0)) {
        throw degenerate_error("diagnose: observed v_n is zero for the given set A");
    }

    const BlockValueSource source =
        make_block_value_source(spec, grid, fs, u_n, c.k_n);
    WPlan plan;
    plan.nn_vn = static_cast<double>(spec.shape.site_count()) * v_n;
    const WDraws draws = collect_w_draws(source, c.replicates, seed, plan);
    const MomentSummary moments = moment_sums(draws, c.delta, c.eps_list);
    const DeltaEstimate delta =
        estimate_delta_n(draws, c.t, derive_seed(seed, 0x5a5a));
    const TEstimate t_hat = estimate_T(draws, c.t, c.block_rank, grid.m);
    const BoundReport bounds = lemma_bounds(moments, c.t, c.eps_list.front(), t_hat);

    json report = detail::manifest_header("diagnose", c, seed);
    report["u_n"] = u_n;
    report["v_n"] = v_n;
    report["v_n_mode"] = v_mode;
    report["r_n_v_n"] = static_cast<double>(grid.block_volume()) * v_n;
    report["A_n"] = moments.sum_abs_2_delta;
    report["A_n_stderr"] = moments.stderr_sum_abs_2_delta;
    report["a_n"] = moments.sum_sq;
    json b_n;
    for (const auto& [eps, value] : moments.truncated_sq) {
        b_n[detail::format_double(eps)] = value;
    }
    report["B_n"] = std::move(b_n);
    report["delta"] = moments.delta;
    report["delta_hat"] = delta.value;
    report["delta_stderr"] = delta.stderr_;
    report["delta_covariance_clipped"] = delta.covariance_clipped;
    report["T_hat"] = t_hat.value;
    report["T_stderr"] = t_hat.stderr_;
    report["bounds"] = {{"lemma1", bounds.independence},
                        {"remark1", bounds.classical},
                        {"lemma2", bounds.dependent}};
    report["bounds_eps"] = bounds.eps;
    report["t_norm"] = bounds.t_norm;
    write_json(report, out_dir / "diagnostics.json");
}

namespace detail {

inline json clt_report_to_json(const CltReport& r) {
    json perlag = json::array();
    for (Index h_s = 0; h_s <= r.lags.max_spatial; ++h_s) {
        for (Index h_t = 0; h_t <= r.lags.max_temporal; ++h_t) {
            const std::size_t l = r.lags.flat(h_s, h_t);
            json row;
            row["h_s"] = h_s;
            row["h_t"] = h_t;
            row["centering"] = r.centering[l];
            row["mean"] = r.normality[l].mean;
            row["variance"] = r.normality[l].variance;
            row["skewness"] = r.normality[l].skewness;
            row["excess_kurtosis"] = r.normality[l].excess_kurtosis;
            row["ks_distance"] = r.normality[l].ks_distance;
            row["degenerate"] = r.normality[l].degenerate;
            if (!r.sigma_diag.empty()) {
                row["sigma_diag"] = r.sigma_diag[l];
                row["sigma_ratio"] = r.sigma_ratio[l];
            }
            perlag.push_back(std::move(row));
        }
    }
    json j;
    j["replicates"] = r.replicates;
    j["dropped"] = r.dropped;
    j["u_n"] = r.u_n;
    j["v_n"] = r.v_n;
    j["normalization"] = r.normalization;
    j["per_lag"] = std::move(perlag);
    j["conditions"] = {{"r_n_v_n", r.r_n_v_n},
                       {"sqrt_n_v_n", r.sqrt_n_v_n},
                       {"r_total", r.r_total},
                       {"n_v_n_r3", r.n_v_n_r3},
                       {"center_pair_sum", r.c_sum},
                       {"lindeberg", r.lindeberg},
                       {"lindeberg_eps", r.lindeberg_eps}};
    return j;
}

inline EstimatorConfig estimator_config_of(const RunConfig& c) {
    EstimatorConfig cfg;
    cfg.r = c.r;
    cfg.set_a = *c.set_a;
    cfg.set_b = *c.set_b;
    cfg.max_spatial = c.max_spatial;
    cfg.max_temporal = c.max_temporal;
    cfg.k_n = c.k_n;
    cfg.analytic_normalization = c.analytic_quantile;
    cfg.oracle_pairs = c.oracle_pairs;
    return cfg;
}

} // namespace detail

inline void run_clt_check(const RunConfig& c, const std::filesystem::path& out_dir,
                          std::uint64_t seed) {
    const GeneratorSpec spec = detail::seeded_generator(c, seed);
    validate_estimation_config(c, spec.shape.dims);
    if (c.replicates < 50) {
        cfg::fail("/replicates", "normality diagnostics need at least 50 replicates");
    }
    const CltReport r =
        run_clt_experiment(spec, detail::estimator_config_of(c), c.replicates, seed);

    json m = detail::manifest_header("clt-check", c, seed);
    m["report"] = detail::clt_report_to_json(r);
    const NormalityReport self = normality_self_test(500, derive_seed(seed, 0x3e1f));
    m["self_test"] = {{"count", self.count},
                      {"skewness", self.skewness},
                      {"excess_kurtosis", self.excess_kurtosis},
                      {"ks_distance", self.ks_distance}};
    m["outputs"] = {{"samples", "samples.csv"}};
    write_json(m, out_dir / "clt_report.json");
    write_samples_csv(r.lags, r.samples, out_dir / "samples.csv");
}

inline void run_sweep_command(const RunConfig& c, const std::filesystem::path& out_dir,
                              std::uint64_t seed) {
    if (c.stages.empty()) {
        cfg::fail("/sweep/stages", "sweep needs at least one stage");
    }
    if (!c.generator) {
        cfg::fail("/generator", "sweep needs a generator");
    }
    if (c.replicates < 50) {
        cfg::fail("/replicates", "normality diagnostics need at least 50 replicates");
    }
    // validate each stage against the lag caps before running anything
    for (std::size_t i = 0; i < c.stages.size(); ++i) {
        RunConfig probe = c;
        probe.r = c.stages[i].r;
        probe.k_n = c.stages[i].k_n;
        validate_estimation_config(probe, c.stages[i].dims);
    }
    const std::vector<CltReport> reports = run_sweep(
        *c.generator, detail::estimator_config_of(c), c.stages, c.replicates, seed);

    json m = detail::manifest_header("sweep", c, seed);
    json stages = json::array();
    std::string csv =
        "stage,n1,n2,n3,r1,r2,r3,h_s,h_t,mean,variance,skewness,excess_kurtosis,"
        "ks_distance,sigma_ratio,lindeberg,center_pair_sum,r_n_v_n,sqrt_n_v_n\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const CltReport& r = reports[i];
        json stage = detail::clt_report_to_json(r);
        stage["shape"] = c.stages[i].dims;
        stage["r"] = c.stages[i].r;
        stages.push_back(std::move(stage));
        for (Index h_s = 0; h_s <= r.lags.max_spatial; ++h_s) {
            for (Index h_t = 0; h_t <= r.lags.max_temporal; ++h_t) {
                const std::size_t l = r.lags.flat(h_s, h_t);
                csv += std::to_string(i) + "," + std::to_string(c.stages[i].dims[0]) +
                       "," + std::to_string(c.stages[i].dims[1]) + "," +
                       std::to_string(c.stages[i].dims[2]) + "," +
                       std::to_string(c.stages[i].r[0]) + "," +
                       std::to_string(c.stages[i].r[1]) + "," +
                       std::to_string(c.stages[i].r[2]) + "," + std::to_string(h_s) +
                       "," + std::to_string(h_t) + "," +
                       detail::format_double(r.normality[l].mean) + "," +
                       detail::format_double(r.normality[l].variance) + "," +
                       detail::format_double(r.normality[l].skewness) + "," +
                       detail::format_double(r.normality[l].excess_kurtosis) + "," +
                       detail::format_double(r.normality[l].ks_distance) + "," +
                       detail::format_double(r.sigma_ratio.empty() ? 0.0
                                                                   : r.sigma_ratio[l]) +
                       "," + detail::format_double(r.lindeberg) + "," +
                       detail::format_double(r.c_sum) + "," +
                       detail::format_double(r.r_n_v_n) + "," +
                       detail::format_double(r.sqrt_n_v_n) + "\n";
            }
        }
    }
    m["stages"] = std::move(stages);
    m["outputs"] = {{"summary", "sweep.csv"}};
    write_json(m, out_dir / "sweep.json");
    detail::write_file(out_dir / "sweep.csv", csv);
}

/// Dispatches a subcommand. Throws config_error for schema problems and
/// rfx::error subclasses for runtime failures; the CLI maps these to exit
/// codes 2 and 1.
inline void run_pipeline(const std::string& subcommand, const json& config_doc,
                         const std::filesystem::path& out_dir,
                         const PipelineOverrides& overrides = {}) {
    const RunConfig c = parse_run_config(config_doc);
    if (overrides.threads) {
        set_max_threads(*overrides.threads);
    } else if (c.threads > 0) {
        set_max_threads(c.threads);
    }
    const std::uint64_t seed = detail::effective_seed(c, overrides);
    std::filesystem::create_directories(out_dir);
    if (subcommand == "simulate") {
        run_simulate(c, out_dir, seed);
    } else if (subcommand == "estimate") {
        run_estimate(c, out_dir, seed);
    } else if (subcommand == "diagnose") {
        run_diagnose(c, out_dir, seed);
    } else if (subcommand == "clt-check") {
        run_clt_check(c, out_dir, seed);
    } else if (subcommand == "sweep") {
        run_sweep_command(c, out_dir, seed);
    } else {
        cfg::fail("/", "unknown subcommand '" + subcommand + "'");
    }
}

} // namespace rfx
